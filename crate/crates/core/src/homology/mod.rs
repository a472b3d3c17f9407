//! Vietoris-Rips persistent homology in dimensions 0 and 1.

mod distance;
mod oracle;
mod rips;
mod union_find;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_real, parse_real, parse_usize};

pub use distance::{pairwise_distances, DistanceMatrix};
pub use oracle::{brute_force_persistence, ORACLE_MAX_POINTS};
pub use rips::rips_persistence;

/// Filtration parameters. Simplices up to dimension 2 enter while their
/// diameter is at most `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RipsConfig {
    pub epsilon: f64,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    1
}

impl Default for RipsConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            max_dim: 1,
        }
    }
}

impl RipsConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = Self {
            epsilon,
            max_dim: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be a positive finite real, got {}",
                self.epsilon
            )));
        }
        if self.max_dim != 1 {
            return Err(Error::InvalidConfig(format!(
                "max_dim is fixed to 1, got {}",
                self.max_dim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }
}

/// Multiset of (birth, death) pairs in one homology dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub dim: usize,
    pub points: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn new(dim: usize, points: Vec<PersistencePair>) -> Self {
        Self { dim, points }
    }

    pub fn empty(dim: usize) -> Self {
        Self::new(dim, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points sorted by (birth, death); two diagrams are equal as multisets
    /// exactly when their canonical forms are equal.
    pub fn canonical(&self) -> Vec<PersistencePair> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.death.total_cmp(&b.death))
        });
        pts
    }

    pub fn multiset_eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.canonical() == other.canonical()
    }

    /// Number of points whose lifetime exceeds `threshold`.
    pub fn count_persistent(&self, threshold: f64) -> usize {
        self.points
            .iter()
            .filter(|p| p.persistence() > threshold)
            .count()
    }

    /// CSV rows `dim,birth,death` in canonical order, with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death\n");
        for p in self.canonical() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.dim,
                fmt_real(p.birth),
                fmt_real(p.death)
            ));
        }
        out
    }

    /// Parses a single-dimension PD CSV. An empty body needs `dim` to be known,
    /// so the caller supplies it and every row must agree.
    pub fn from_csv(text: &str, dim: usize) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("dim,birth,death") {
            return Err(Error::Parse("expected header `dim,birth,death`".into()));
        }
        let mut points = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("bad PD row {line:?}")));
            }
            if parse_usize(fields[0])? != dim {
                return Err(Error::Parse(format!("row {line:?} is not dimension {dim}")));
            }
            let birth = parse_real(fields[1])?;
            let death = parse_real(fields[2])?;
            if death < birth {
                return Err(Error::Parse(format!("death before birth in {line:?}")));
            }
            points.push(PersistencePair::new(birth, death));
        }
        Ok(Self::new(dim, points))
    }
}
