//! JSON instance and solution files.
//!
//! Coordinates are physical: integers or exact `"p/q"` strings. An
//! optional `grid_unit` pins the coordinate unit; without it the unit is
//! one over the least common denominator of all coordinates.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Coord, GeometryError, Instance, Orientation, Segment, Solution};
use crate::Rational;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Field {
        field: field.into(),
        message: message.into(),
    }
}

fn syntax(e: serde_json::Error) -> IoError {
    IoError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// An integer or a rational string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Text(String),
}

impl Number {
    pub fn from_rational(v: Rational) -> Number {
        if v.is_integer() && i64::try_from(*v.numer()).is_ok() {
            Number::Int(*v.numer() as i64)
        } else {
            Number::Text(v.to_string())
        }
    }

    pub fn value(&self, field: &str) -> Result<Rational, IoError> {
        match self {
            Number::Int(v) => Ok(Rational::from_integer(*v as i128)),
            Number::Text(s) => parse_rational(s).map_err(|m| field_err(field, m)),
        }
    }
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let t = s.trim();
    let v = Rational::from_str(t).map_err(|_| format!("{s:?} is not a rational of the form p/q"))?;
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectEntry {
    pub x1: Number,
    pub y1: Number,
    pub x2: Number,
    pub y2: Number,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: String,
    pub epsilon: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_unit: Option<String>,
    pub rects: Vec<RectEntry>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, meta: BTreeMap<String, String>) -> InstanceFile {
        let g = inst.grid_unit;
        let num = |v: Coord| Number::from_rational(Rational::from_integer(v as i128) * g);
        InstanceFile {
            schema_version: SCHEMA_VERSION.into(),
            epsilon: inst.epsilon.to_string(),
            grid_unit: (g != Rational::from_integer(1)).then(|| g.to_string()),
            rects: inst
                .rects
                .iter()
                .map(|r| RectEntry {
                    x1: num(r.x1),
                    y1: num(r.y1),
                    x2: num(r.x2),
                    y2: num(r.y2),
                })
                .collect(),
            meta,
        }
    }

    pub fn to_instance(&self) -> Result<Instance, IoError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION:?}, found {:?}", self.schema_version),
            ));
        }
        let eps = parse_rational(&self.epsilon).map_err(|m| field_err("epsilon", m))?;
        let mut values = Vec::with_capacity(self.rects.len());
        for (i, r) in self.rects.iter().enumerate() {
            let at = |name: &str| format!("rects[{i}].{name}");
            values.push([
                r.x1.value(&at("x1"))?,
                r.y1.value(&at("y1"))?,
                r.x2.value(&at("x2"))?,
                r.y2.value(&at("y2"))?,
            ]);
        }
        let unit = match &self.grid_unit {
            Some(s) => {
                let g = parse_rational(s).map_err(|m| field_err("grid_unit", m))?;
                if g <= Rational::from_integer(0) {
                    return Err(field_err("grid_unit", "must be positive"));
                }
                g
            }
            None => {
                let den = values
                    .iter()
                    .flatten()
                    .fold(1i128, |acc, v| acc.lcm(v.denom()));
                Rational::new(1, den)
            }
        };
        let mut corners = Vec::with_capacity(values.len());
        for (i, vs) in values.iter().enumerate() {
            let mut c = [0; 4];
            for (k, (v, name)) in vs.iter().zip(["x1", "y1", "x2", "y2"]).enumerate() {
                let units = v / unit;
                if !units.is_integer() {
                    return Err(field_err(
                        format!("rects[{i}].{name}"),
                        format!("{v} is not a multiple of the grid unit {unit}"),
                    ));
                }
                c[k] = Coord::try_from(*units.numer())
                    .map_err(|_| field_err(format!("rects[{i}].{name}"), "coordinate out of range"))?;
            }
            corners.push(c);
        }
        Ok(Instance::new(&corners, unit, eps)?)
    }
}

pub fn parse_instance(text: &str) -> Result<(Instance, InstanceFile), IoError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(syntax)?;
    let inst = file.to_instance()?;
    Ok((inst, file))
}

pub fn emit_instance(inst: &Instance, meta: BTreeMap<String, String>) -> String {
    to_json(&InstanceFile::from_instance(inst, meta))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentEntry {
    /// `"h"` or `"v"`.
    pub orientation: String,
    pub anchor: Number,
    pub lo: Number,
    pub hi: Number,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub solver_tag: String,
    /// Physical total length.
    pub cost: Number,
    pub segments: Vec<SegmentEntry>,
}

impl SolutionFile {
    pub fn from_solution(sol: &Solution, grid_unit: Rational) -> SolutionFile {
        let num = |v: Coord| Number::from_rational(Rational::from_integer(v as i128) * grid_unit);
        SolutionFile {
            solver_tag: sol.solver_tag.clone(),
            cost: num(sol.cost),
            segments: sol
                .segments
                .iter()
                .map(|s| SegmentEntry {
                    orientation: if s.is_horizontal() { "h" } else { "v" }.into(),
                    anchor: num(s.anchor),
                    lo: num(s.lo),
                    hi: num(s.hi),
                })
                .collect(),
        }
    }

    /// Segments in the units of an instance with the given grid unit. The
    /// stored cost is checked against the segments.
    pub fn to_solution(&self, grid_unit: Rational) -> Result<Solution, IoError> {
        let mut segs = Vec::with_capacity(self.segments.len());
        for (i, s) in self.segments.iter().enumerate() {
            let orientation = match s.orientation.as_str() {
                "h" => Orientation::Horizontal,
                "v" => Orientation::Vertical,
                other => {
                    return Err(field_err(
                        format!("segments[{i}].orientation"),
                        format!("expected \"h\" or \"v\", found {other:?}"),
                    ))
                }
            };
            let mut c = [0; 3];
            for (k, (n, name)) in [&s.anchor, &s.lo, &s.hi].into_iter().zip(["anchor", "lo", "hi"]).enumerate() {
                let field = format!("segments[{i}].{name}");
                let units = n.value(&field)? / grid_unit;
                if !units.is_integer() {
                    return Err(field_err(field, "not a multiple of the grid unit"));
                }
                c[k] = Coord::try_from(*units.numer()).map_err(|_| field_err(field, "coordinate out of range"))?;
            }
            if c[1] > c[2] {
                return Err(field_err(format!("segments[{i}]"), "lo exceeds hi"));
            }
            segs.push(Segment::new(orientation, c[0], c[1], c[2]));
        }
        let sol = Solution::multiset(segs, self.solver_tag.clone());
        let claimed = self.cost.value("cost")?;
        if claimed != Rational::from_integer(sol.cost as i128) * grid_unit {
            return Err(field_err("cost", format!("{claimed} does not match the segments")));
        }
        Ok(sol)
    }
}

pub fn emit_solution(sol: &Solution, grid_unit: Rational) -> String {
    to_json(&SolutionFile::from_solution(sol, grid_unit))
}

pub fn parse_solution(text: &str, grid_unit: Rational) -> Result<Solution, IoError> {
    let file: SolutionFile = serde_json::from_str(text).map_err(syntax)?;
    file.to_solution(grid_unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen::{generate, Family, GenParams};

    #[test]
    fn integer_and_rational_coordinates() {
        let text = r#"{
            "schema_version": "1",
            "epsilon": "1/4",
            "rects": [{"x1": 0, "y1": 0, "x2": "1/2", "y2": 3}, {"x1": "1/3", "y1": 1, "x2": 1, "y2": 2}]
        }"#;
        let (inst, _) = parse_instance(text).unwrap();
        assert_eq!(inst.grid_unit, Rational::new(1, 6));
        assert_eq!((inst.rects[0].x2, inst.rects[1].x1), (3, 2));
        assert_eq!(inst.epsilon, Rational::new(1, 4));
    }

    #[test]
    fn diagnostics_name_the_place() {
        let bad = "{\n  \"schema_version\": \"1\",\n  \"epsilon\": \"1/4\"\n  \"rects\": []\n}";
        assert!(matches!(parse_instance(bad), Err(IoError::Syntax { line: 4, .. })));

        let field = r#"{"schema_version": "1", "epsilon": "1/4", "rects": [{"x1": 0, "y1": 0, "x2": "one", "y2": 1}]}"#;
        match parse_instance(field) {
            Err(IoError::Field { field, .. }) => assert_eq!(field, "rects[0].x2"),
            other => panic!("{other:?}"),
        }

        let degenerate = r#"{"schema_version": "1", "epsilon": "1/4", "rects": [{"x1": 2, "y1": 0, "x2": 1, "y2": 1}]}"#;
        assert!(matches!(parse_instance(degenerate), Err(IoError::Geometry(_))));

        let version = r#"{"schema_version": "9", "epsilon": "1/4", "rects": []}"#;
        assert!(matches!(parse_instance(version), Err(IoError::Field { .. })));
    }

    #[test]
    fn generated_files_round_trip() {
        let p = GenParams::default();
        for family in Family::ALL {
            for seed in 0..5 {
                let inst = generate(family, 7, seed, &p).unwrap();
                let text = emit_instance(&inst, BTreeMap::new());
                let (back, _) = parse_instance(&text).unwrap();
                assert_eq!(back, inst, "{family} {seed}");
                assert_eq!(emit_instance(&back, BTreeMap::new()), text);
            }
        }
    }

    #[test]
    fn solutions_round_trip() {
        let inst = generate(Family::DeltaLarge, 6, 3, &GenParams::default()).unwrap();
        let sol = crate::baseline::greedy(&inst);
        let text = emit_solution(&sol, inst.grid_unit);
        assert_eq!(parse_solution(&text, inst.grid_unit).unwrap(), sol);

        let lying = text.replacen("\"cost\": ", "\"cost\": 1000, \"was\": ", 1);
        assert!(parse_solution(&lying, inst.grid_unit).is_err());
    }
}
