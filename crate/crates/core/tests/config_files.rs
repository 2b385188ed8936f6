use std::fs::File;
use std::path::PathBuf;

use pmline::cube::parse_hierarchy_csv;
use pmline::simulator::LineConfig;

fn config(name: &str) -> File {
    File::open(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config").join(name)).unwrap()
}

#[test]
fn default_line_json_matches_builtin() {
    let shipped: LineConfig = serde_json::from_reader(config("default_line.json")).unwrap();
    assert_eq!(shipped, LineConfig::default_line());
}

#[test]
fn locations_cover_default_cities() {
    let mapping = parse_hierarchy_csv(config("locations.csv")).unwrap();
    for city in LineConfig::default_line().car_attributes.cities {
        assert!(mapping.contains_key(&city.value), "{} unmapped", city.value);
    }
}
