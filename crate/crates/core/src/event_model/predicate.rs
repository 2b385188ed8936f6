//! Attribute-comparison predicates over events.
//!
//! Grammar:
//! ```text
//! expr    := conj (("or" | "||" | "∨") conj)*
//! conj    := unary (("and" | "&&" | "∧") unary)*
//! unary   := "not" unary | "(" expr ")" | "true" | "false" | compare
//! compare := operand op literal
//! operand := name | fn "(" name ")"        fn ∈ year, month, day, hour, weekday
//! op      := "=" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//! Literals are bare words or quoted strings.

use std::cmp::Ordering;
use std::str::FromStr;

use chrono::{Datelike, Timelike};

use super::{field_value, AttrValue, Event, EventLog};
use crate::error::{Error, Result};
use crate::time::{datetime, parse_timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimePart {
    Year,
    Month,
    Day,
    Hour,
    Weekday,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    True,
    False,
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Compare {
        field: String,
        part: Option<TimePart>,
        op: CmpOp,
        literal: String,
    },
}

impl Predicate {
    /// Every field referenced must exist in the log's schema or be built in.
    pub fn check_schema(&self, log: &EventLog) -> Result<()> {
        match self {
            Predicate::True | Predicate::False => Ok(()),
            Predicate::Not(p) => p.check_schema(log),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().try_for_each(|p| p.check_schema(log)),
            Predicate::Compare { field, .. } => {
                if log.has_field(field) {
                    Ok(())
                } else {
                    Err(Error::UnknownAttribute(field.clone()))
                }
            }
        }
    }

    pub fn eval(&self, event: &Event) -> bool {
        match self {
            Predicate::True => true,
            Predicate::False => false,
            Predicate::Not(p) => !p.eval(event),
            Predicate::And(ps) => ps.iter().all(|p| p.eval(event)),
            Predicate::Or(ps) => ps.iter().any(|p| p.eval(event)),
            Predicate::Compare {
                field,
                part,
                op,
                literal,
            } => {
                let Some(value) = field_value(event, field) else {
                    return false;
                };
                let value = match part {
                    Some(part) => match value {
                        AttrValue::Time(t) => AttrValue::Int(time_part(t, *part)),
                        _ => return false,
                    },
                    None => value,
                };
                match compare(&value, literal) {
                    Some(ord) => match op {
                        CmpOp::Eq => ord == Ordering::Equal,
                        CmpOp::Ne => ord != Ordering::Equal,
                        CmpOp::Lt => ord == Ordering::Less,
                        CmpOp::Le => ord != Ordering::Greater,
                        CmpOp::Gt => ord == Ordering::Greater,
                        CmpOp::Ge => ord != Ordering::Less,
                    },
                    None => *op == CmpOp::Ne,
                }
            }
        }
    }
}

fn time_part(t: i64, part: TimePart) -> i64 {
    let dt = datetime(t);
    match part {
        TimePart::Year => dt.year() as i64,
        TimePart::Month => dt.month() as i64,
        TimePart::Day => dt.day() as i64,
        TimePart::Hour => dt.hour() as i64,
        TimePart::Weekday => dt.weekday().num_days_from_monday() as i64 + 1,
    }
}

fn compare(value: &AttrValue, literal: &str) -> Option<Ordering> {
    match value {
        AttrValue::Str(s) => Some(s.as_str().cmp(literal)),
        AttrValue::Int(i) => {
            if let Ok(l) = literal.parse::<i64>() {
                Some(i.cmp(&l))
            } else {
                literal.parse::<f64>().ok().and_then(|l| (*i as f64).partial_cmp(&l))
            }
        }
        AttrValue::Real(r) => literal.parse::<f64>().ok().and_then(|l| r.partial_cmp(&l)),
        AttrValue::Time(t) => parse_timestamp(literal, None).map(|l| t.cmp(&l)),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    LParen,
    RParen,
    Op(CmpOp),
    And,
    Or,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                toks.push(Tok::LParen);
                i += 1
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1
            }
            '∧' => {
                toks.push(Tok::And);
                i += 1
            }
            '∨' => {
                toks.push(Tok::Or);
                i += 1
            }
            '&' | '|' => {
                if chars.get(i + 1) != Some(&c) {
                    return Err(Error::Predicate(format!("expected `{c}{c}`")));
                }
                toks.push(if c == '&' { Tok::And } else { Tok::Or });
                i += 2;
            }
            '=' => {
                toks.push(Tok::Op(CmpOp::Eq));
                i += if chars.get(i + 1) == Some(&'=') { 2 } else { 1 };
            }
            '!' | '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let op = match (c, eq) {
                    ('!', true) => CmpOp::Ne,
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    ('>', true) => CmpOp::Ge,
                    _ => return Err(Error::Predicate("stray `!`".into())),
                };
                toks.push(Tok::Op(op));
                i += if eq { 2 } else { 1 };
            }
            '"' | '\'' => {
                let end = chars[i + 1..]
                    .iter()
                    .position(|&d| d == c)
                    .ok_or_else(|| Error::Predicate("unterminated string".into()))?;
                toks.push(Tok::Quoted(chars[i + 1..i + 1 + end].iter().collect()));
                i += end + 2;
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"()=!<>&|\"'∧∨".contains(chars[i]) {
                    i += 1;
                }
                let w: String = chars[start..i].iter().collect();
                toks.push(match w.to_ascii_lowercase().as_str() {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    _ => Tok::Word(w),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Predicate> {
        let mut parts = vec![self.conj()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::Or(parts) })
    }

    fn conj(&mut self) -> Result<Predicate> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::And(parts) })
    }

    fn unary(&mut self) -> Result<Predicate> {
        match self.next() {
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(Error::Predicate("expected `)`".into())),
                }
            }
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("true") && !matches!(self.peek(), Some(Tok::Op(_))) => {
                Ok(Predicate::True)
            }
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("false") && !matches!(self.peek(), Some(Tok::Op(_))) => {
                Ok(Predicate::False)
            }
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("not") && !matches!(self.peek(), Some(Tok::Op(_))) => {
                Ok(Predicate::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Word(w)) => self.compare(w),
            other => Err(Error::Predicate(format!("unexpected token {other:?}"))),
        }
    }

    fn compare(&mut self, word: String) -> Result<Predicate> {
        let part = match word.to_ascii_lowercase().as_str() {
            "year" => Some(TimePart::Year),
            "month" => Some(TimePart::Month),
            "day" => Some(TimePart::Day),
            "hour" => Some(TimePart::Hour),
            "weekday" => Some(TimePart::Weekday),
            _ => None,
        };
        let (field, part) = if part.is_some() && self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let f = match self.next() {
                Some(Tok::Word(f)) => f,
                other => return Err(Error::Predicate(format!("expected field name, got {other:?}"))),
            };
            if self.next() != Some(Tok::RParen) {
                return Err(Error::Predicate("expected `)`".into()));
            }
            (f, part)
        } else {
            (word, None)
        };
        let op = match self.next() {
            Some(Tok::Op(op)) => op,
            other => return Err(Error::Predicate(format!("expected comparison after `{field}`, got {other:?}"))),
        };
        let literal = match self.next() {
            Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => w,
            other => return Err(Error::Predicate(format!("expected literal, got {other:?}"))),
        };
        Ok(Predicate::Compare {
            field,
            part,
            op,
            literal,
        })
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            toks: tokenize(s)?,
            pos: 0,
        };
        if p.toks.is_empty() {
            return Ok(Predicate::True);
        }
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Predicate(format!("trailing input at token {}", p.pos)));
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_timestamp;

    fn log() -> EventLog {
        let t = |s: &str| parse_timestamp(s, None).unwrap();
        let mk = |id: &str, act: &str, ts: &str, color: &str, city: &str| {
            Event::new(id, act, t(ts))
                .with_case("c")
                .with_attr("color", AttrValue::Str(color.into()))
                .with_attr("city", AttrValue::Str(city.into()))
        };
        EventLog::from_events(vec![
            mk("1", "GA5", "2017-03-01T09:00:00Z", "white", "Brussels"),
            mk("2", "GA4", "2017-03-01T10:00:00Z", "white", "Brussels"),
            mk("3", "GA5", "2018-03-01T09:00:00Z", "white", "Brussels"),
            mk("4", "GA5", "2017-03-01T09:00:00Z", "blue", "Brussels"),
            mk("5", "GA5", "2017-03-01T09:00:00Z", "white", "Aachen"),
        ])
        .unwrap()
    }

    fn ids(log: &EventLog, p: &str) -> Vec<String> {
        let p: Predicate = p.parse().unwrap();
        log.filter(&p).unwrap().events.into_iter().map(|e| e.event_id).collect()
    }

    #[test]
    fn true_is_identity() {
        let l = log();
        assert_eq!(l.filter(&"true".parse().unwrap()).unwrap(), l);
    }

    #[test]
    fn activity_equality() {
        assert_eq!(ids(&log(), "activity = GA5"), ["1", "3", "4", "5"]);
    }

    #[test]
    fn cube_cell_conjunction() {
        assert_eq!(ids(&log(), "year(timestamp)=2017 ∧ color=white ∧ city=Brussels"), ["1", "2"]);
        assert_eq!(ids(&log(), "year(timestamp) = 2017 and color = 'white' && city == Brussels"), ["1", "2"]);
    }

    #[test]
    fn or_not_and_ordering() {
        assert_eq!(ids(&log(), "color = blue or city = Aachen"), ["4", "5"]);
        assert_eq!(ids(&log(), "not (activity = GA5)"), ["2"]);
        assert_eq!(ids(&log(), "timestamp < 2018-01-01"), ["1", "2", "4", "5"]);
        assert_eq!(ids(&log(), "hour(timestamp) >= 10"), ["2"]);
    }

    #[test]
    fn unknown_attribute_is_error() {
        let p: Predicate = "colour = white".parse().unwrap();
        assert!(matches!(log().filter(&p), Err(Error::UnknownAttribute(_))));
    }

    #[test]
    fn syntax_errors() {
        assert!("color =".parse::<Predicate>().is_err());
        assert!("(color = a".parse::<Predicate>().is_err());
        assert!("color = a b".parse::<Predicate>().is_err());
    }
}
