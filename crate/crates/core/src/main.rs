fn main() {
    std::process::exit(pmline::cli::run(std::env::args_os()));
}
