use std::cmp::Ordering as CmpOrdering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::canonical_zero;

#[derive(Debug, Error)]
pub enum DiagramParseError {
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid diagram JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("interval {index}: {message}")]
    Interval { index: usize, message: String },
}

/// The right end of an interval. Essential classes never die.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Death {
    Finite(f64),
    Infinite,
}

impl Death {
    pub fn finite(self) -> Option<f64> {
        match self {
            Death::Finite(v) => Some(v),
            Death::Infinite => None,
        }
    }

    fn total_cmp(&self, other: &Death) -> CmpOrdering {
        match (self, other) {
            (Death::Finite(a), Death::Finite(b)) => a.total_cmp(b),
            (Death::Finite(_), Death::Infinite) => CmpOrdering::Less,
            (Death::Infinite, Death::Finite(_)) => CmpOrdering::Greater,
            (Death::Infinite, Death::Infinite) => CmpOrdering::Equal,
        }
    }
}

/// A half-open interval `[birth, death)` in homological degree `dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub dim: usize,
    pub birth: f64,
    pub death: Death,
}

impl Interval {
    pub fn finite(dim: usize, birth: f64, death: f64) -> Self {
        Interval {
            dim,
            birth: canonical_zero(birth),
            death: Death::Finite(canonical_zero(death)),
        }
    }

    pub fn essential(dim: usize, birth: f64) -> Self {
        Interval {
            dim,
            birth: canonical_zero(birth),
            death: Death::Infinite,
        }
    }

    pub fn is_essential(&self) -> bool {
        self.death == Death::Infinite
    }

    pub fn is_empty(&self) -> bool {
        self.death == Death::Finite(self.birth)
    }

    fn canonical(self) -> Self {
        match self.death {
            Death::Finite(d) => Interval::finite(self.dim, self.birth, d),
            Death::Infinite => Interval::essential(self.dim, self.birth),
        }
    }

    pub fn total_cmp(&self, other: &Interval) -> CmpOrdering {
        self.dim
            .cmp(&other.dim)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
    }
}

/// A multiset of intervals, kept sorted by `(dim, birth, death)`.
///
/// Empty intervals are never stored. Equality is exact multiset equality.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistenceDiagram {
    intervals: Vec<Interval>,
}

#[derive(Serialize, Deserialize)]
struct JsonInterval {
    dim: usize,
    birth: f64,
    death: Option<f64>,
}

impl PersistenceDiagram {
    pub fn new(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut intervals: Vec<Interval> = intervals
            .into_iter()
            .map(Interval::canonical)
            .filter(|i| !i.is_empty())
            .collect();
        intervals.sort_by(Interval::total_cmp);
        PersistenceDiagram { intervals }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Adds an interval; empty intervals are ignored.
    pub fn insert(&mut self, interval: Interval) {
        let interval = interval.canonical();
        if interval.is_empty() {
            return;
        }
        let at = self
            .intervals
            .partition_point(|i| i.total_cmp(&interval) != CmpOrdering::Greater);
        self.intervals.insert(at, interval);
    }

    /// Removes one copy of `interval`; returns whether it was present.
    pub fn remove_one(&mut self, interval: &Interval) -> bool {
        let interval = interval.canonical();
        match self.intervals.binary_search_by(|i| i.total_cmp(&interval)) {
            Ok(at) => {
                self.intervals.remove(at);
                true
            }
            Err(_) => false,
        }
    }

    pub fn count(&self, interval: &Interval) -> usize {
        let interval = interval.canonical();
        self.intervals.iter().filter(|i| **i == interval).count()
    }

    pub fn essential(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(|i| i.is_essential())
    }

    pub fn finite(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(|i| !i.is_essential())
    }

    /// Number of essential intervals in degree `dim`.
    pub fn essential_count(&self, dim: usize) -> usize {
        self.essential().filter(|i| i.dim == dim).count()
    }

    /// CSV with header `dim,birth,death`; essential deaths are written `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death\n");
        for i in &self.intervals {
            let _ = match i.death {
                Death::Finite(d) => writeln!(out, "{},{},{}", i.dim, i.birth, d),
                Death::Infinite => writeln!(out, "{},{},inf", i.dim, i.birth),
            };
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, DiagramParseError> {
        let err = |line: usize, message: String| DiagramParseError::Csv { line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim().replace(' ', "") == "dim,birth,death" => {}
            Some((n, header)) => return Err(err(n + 1, format!("bad header '{header}'"))),
            None => return Err(err(1, "missing header".into())),
        }
        let mut intervals = Vec::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(n + 1, format!("expected 3 fields, found {}", fields.len())));
            }
            let dim: usize = fields[0]
                .parse()
                .map_err(|_| err(n + 1, format!("bad dimension '{}'", fields[0])))?;
            let birth: f64 = fields[1]
                .parse()
                .ok()
                .filter(|b: &f64| b.is_finite())
                .ok_or_else(|| err(n + 1, format!("bad birth '{}'", fields[1])))?;
            let interval = match fields[2] {
                "inf" | "Inf" | "infinity" => Interval::essential(dim, birth),
                s => {
                    let death: f64 = s
                        .parse()
                        .ok()
                        .filter(|d: &f64| d.is_finite())
                        .ok_or_else(|| err(n + 1, format!("bad death '{s}'")))?;
                    if death < birth {
                        return Err(err(n + 1, format!("death {death} precedes birth {birth}")));
                    }
                    Interval::finite(dim, birth, death)
                }
            };
            intervals.push(interval);
        }
        Ok(PersistenceDiagram::new(intervals))
    }

    /// JSON array of `{"dim", "birth", "death"}` objects, `null` for essential deaths.
    pub fn to_json(&self) -> String {
        let rows: Vec<JsonInterval> = self
            .intervals
            .iter()
            .map(|i| JsonInterval {
                dim: i.dim,
                birth: i.birth,
                death: i.death.finite(),
            })
            .collect();
        serde_json::to_string(&rows).expect("diagram values are finite")
    }

    pub fn from_json(text: &str) -> Result<Self, DiagramParseError> {
        let rows: Vec<JsonInterval> = serde_json::from_str(text)?;
        let mut intervals = Vec::with_capacity(rows.len());
        for (index, row) in rows.into_iter().enumerate() {
            let bad = |message: &str| DiagramParseError::Interval {
                index,
                message: message.into(),
            };
            intervals.push(match row.death {
                None => Interval::essential(row.dim, row.birth),
                Some(d) if d < row.birth => return Err(bad("death precedes birth")),
                Some(d) => Interval::finite(row.dim, row.birth, d),
            });
        }
        Ok(PersistenceDiagram::new(intervals))
    }
}

impl FromIterator<Interval> for PersistenceDiagram {
    fn from_iter<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        PersistenceDiagram::new(iter)
    }
}

/// Exact multiset equality of `(dim, birth, death)` triples.
pub fn diagrams_equal(a: &PersistenceDiagram, b: &PersistenceDiagram) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_is_exact_and_multiplicity_sensitive() {
        let a = PersistenceDiagram::new([Interval::finite(0, 0.0, 1.0)]);
        assert!(diagrams_equal(&a, &a.clone()));
        let b = PersistenceDiagram::new([Interval::finite(1, 0.0, 1.0)]);
        assert!(!diagrams_equal(&a, &b));
        let twice = PersistenceDiagram::new([Interval::finite(0, 0.0, 1.0); 2]);
        assert!(!diagrams_equal(&twice, &a));
        let inf = PersistenceDiagram::new([Interval::essential(0, 0.0)]);
        assert!(diagrams_equal(
            &inf,
            &PersistenceDiagram::new([Interval::essential(0, 0.0)])
        ));
    }

    #[test]
    fn empty_intervals_and_signed_zero() {
        let d = PersistenceDiagram::new([Interval::finite(0, 1.0, 1.0), Interval::finite(0, -0.0, 2.0)]);
        assert_eq!(d.len(), 1);
        assert!(d.intervals()[0].birth.is_sign_positive());
        assert_eq!(d, PersistenceDiagram::new([Interval::finite(0, 0.0, 2.0)]));
    }

    #[test]
    fn insert_remove_keep_order() {
        let mut d = PersistenceDiagram::default();
        d.insert(Interval::essential(0, 0.0));
        d.insert(Interval::finite(0, 0.0, 1.0));
        d.insert(Interval::finite(0, 0.0, 1.0));
        d.insert(Interval::finite(1, -1.0, 3.0));
        assert_eq!(d.count(&Interval::finite(0, 0.0, 1.0)), 2);
        assert_eq!(
            d.intervals()[0..2],
            [Interval::finite(0, 0.0, 1.0), Interval::finite(0, 0.0, 1.0)]
        );
        assert_eq!(d.intervals()[2], Interval::essential(0, 0.0));
        assert!(d.remove_one(&Interval::finite(0, 0.0, 1.0)));
        assert_eq!(d.count(&Interval::finite(0, 0.0, 1.0)), 1);
        assert!(!d.remove_one(&Interval::finite(2, 0.0, 1.0)));
        assert_eq!(d.essential_count(0), 1);
    }

    #[test]
    fn csv_layout() {
        let d = PersistenceDiagram::new([Interval::finite(0, 0.0, 1.0), Interval::essential(0, 0.0)]);
        assert_eq!(d.to_csv(), "dim,birth,death\n0,0,1\n0,0,inf\n");
        assert_eq!(PersistenceDiagram::from_csv(&d.to_csv()).unwrap(), d);
        assert!(PersistenceDiagram::from_csv("garbage\n").is_err());
        assert!(PersistenceDiagram::from_csv("dim,birth,death\n0,1\n").is_err());
        assert!(PersistenceDiagram::from_csv("dim,birth,death\n0,2,1\n").is_err());
        assert!(PersistenceDiagram::from_csv("dim,birth,death\n0,nan,1\n").is_err());
    }

    #[test]
    fn json_layout() {
        let d = PersistenceDiagram::new([Interval::finite(1, -1.5, 0.0), Interval::essential(0, 2.0)]);
        let json = d.to_json();
        assert_eq!(
            json,
            r#"[{"dim":0,"birth":2.0,"death":null},{"dim":1,"birth":-1.5,"death":0.0}]"#
        );
        assert_eq!(PersistenceDiagram::from_json(&json).unwrap(), d);
        assert!(PersistenceDiagram::from_json(r#"[{"dim":0,"birth":2.0,"death":1.0}]"#).is_err());
    }
}
