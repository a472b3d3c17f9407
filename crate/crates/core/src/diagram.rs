//! Birth-persistence diagrams: `(birth, death)` becomes `(birth, death - birth)`,
//! essential classes take the largest finite persistence, and dimension-0
//! diagrams receive one auxiliary point `(tau_x, tau_y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homology::PersistenceDiagram;
use crate::io::{fmt_real, parse_real, parse_usize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BPConfig {
    pub tau_x: f64,
    pub tau_y: f64,
    pub fallback_persistence: f64,
}

impl Default for BPConfig {
    fn default() -> Self {
        Self {
            tau_x: 0.01,
            tau_y: 0.02,
            fallback_persistence: 0.5,
        }
    }
}

impl BPConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_x > 0.0 && self.tau_y > self.tau_x && self.tau_y.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < tau_x < tau_y, got tau_x={} tau_y={}",
                self.tau_x, self.tau_y
            )));
        }
        if !(self.fallback_persistence > 0.0 && self.fallback_persistence.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "fallback_persistence must be positive, got {}",
                self.fallback_persistence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthPersistence {
    pub birth: f64,
    pub persistence: f64,
}

impl BirthPersistence {
    pub fn new(birth: f64, persistence: f64) -> Self {
        Self { birth, persistence }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirthPersistenceDiagram {
    pub dim: usize,
    pub points: Vec<BirthPersistence>,
}

impl BirthPersistenceDiagram {
    pub fn new(dim: usize, points: Vec<BirthPersistence>) -> Result<Self> {
        if let Some(p) = points
            .iter()
            .find(|p| !(p.birth.is_finite() && p.persistence.is_finite() && p.persistence >= 0.0))
        {
            return Err(Error::InvalidConfig(format!(
                "birth-persistence point ({}, {}) must be finite with nonnegative persistence",
                p.birth, p.persistence
            )));
        }
        Ok(Self { dim, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points sorted by (birth, persistence).
    pub fn canonical(&self) -> Vec<BirthPersistence> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.persistence.total_cmp(&b.persistence))
        });
        pts
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,persistence\n");
        for p in self.canonical() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.dim,
                fmt_real(p.birth),
                fmt_real(p.persistence)
            ));
        }
        out
    }

    pub fn from_csv(text: &str, dim: usize) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("dim,birth,persistence") {
            return Err(Error::Parse(
                "expected header `dim,birth,persistence`".into(),
            ));
        }
        let mut points = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 || parse_usize(fields[0])? != dim {
                return Err(Error::Parse(format!("bad BP row {line:?}")));
            }
            points.push(BirthPersistence::new(
                parse_real(fields[1])?,
                parse_real(fields[2])?,
            ));
        }
        Self::new(dim, points).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn to_birth_persistence(pd: &PersistenceDiagram, cfg: &BPConfig) -> BirthPersistenceDiagram {
    let max_finite = pd
        .points
        .iter()
        .filter(|p| !p.is_essential())
        .map(|p| p.persistence())
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let substitute = max_finite.unwrap_or(cfg.fallback_persistence);

    let mut points: Vec<BirthPersistence> = pd
        .points
        .iter()
        .map(|p| {
            let persistence = if p.is_essential() {
                substitute
            } else {
                p.persistence()
            };
            BirthPersistence::new(p.birth, persistence)
        })
        .collect();
    if pd.dim == 0 {
        points.push(BirthPersistence::new(cfg.tau_x, cfg.tau_y));
    }
    BirthPersistenceDiagram {
        dim: pd.dim,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::PersistencePair;
    use proptest::prelude::*;

    fn cfg() -> BPConfig {
        BPConfig::default()
    }

    fn sorted(bp: &BirthPersistenceDiagram) -> Vec<(f64, f64)> {
        bp.canonical()
            .iter()
            .map(|p| (p.birth, p.persistence))
            .collect()
    }

    #[test]
    fn finite_point_becomes_lifetime() {
        let pd =
            PersistenceDiagram::new(1, vec![PersistencePair::new(1.0, std::f64::consts::SQRT_2)]);
        let bp = to_birth_persistence(&pd, &cfg());
        assert_eq!(sorted(&bp), vec![(1.0, 0.41421356237309515)]);
    }

    #[test]
    fn infinite_point_takes_max_persistence_and_aux_is_appended() {
        let pd = PersistenceDiagram::new(
            0,
            vec![
                PersistencePair::new(0.0, 1.0),
                PersistencePair::new(0.0, f64::INFINITY),
            ],
        );
        let bp = to_birth_persistence(&pd, &cfg());
        assert_eq!(sorted(&bp), vec![(0.0, 1.0), (0.0, 1.0), (0.01, 0.02)]);
    }

    #[test]
    fn all_infinite_uses_fallback() {
        let pd = PersistenceDiagram::new(0, vec![PersistencePair::new(0.0, f64::INFINITY)]);
        let bp = to_birth_persistence(&pd, &cfg());
        assert_eq!(sorted(&bp), vec![(0.0, 0.5), (0.01, 0.02)]);
    }

    #[test]
    fn dim_one_gets_no_auxiliary_point() {
        let bp = to_birth_persistence(&PersistenceDiagram::empty(1), &cfg());
        assert!(bp.is_empty());
    }

    #[test]
    fn config_constraints() {
        assert!(BPConfig {
            tau_x: 0.02,
            tau_y: 0.01,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(BPConfig {
            tau_x: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(BPConfig {
            fallback_persistence: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn csv_rejects_negative_persistence() {
        assert!(BirthPersistenceDiagram::from_csv("dim,birth,persistence\n0,0,-1\n", 0).is_err());
    }

    fn arb_pd() -> impl Strategy<Value = PersistenceDiagram> {
        (
            0usize..2,
            proptest::collection::vec(
                (0.0f64..1.0, 0.0f64..1.0, proptest::bool::weighted(0.2)),
                0..12,
            ),
        )
            .prop_map(|(dim, raw)| {
                let points = raw
                    .into_iter()
                    .map(|(b, p, inf)| {
                        PersistencePair::new(b, if inf { f64::INFINITY } else { b + p })
                    })
                    .collect();
                PersistenceDiagram::new(dim, points)
            })
    }

    proptest! {
        #[test]
        fn cardinality_and_max_persistence(pd in arb_pd()) {
            let bp = to_birth_persistence(&pd, &cfg());
            let extra = usize::from(pd.dim == 0);
            prop_assert_eq!(bp.len(), pd.len() + extra);
            prop_assert!(bp.points.iter().all(|p| p.persistence.is_finite() && p.persistence >= 0.0));
            let finite_max = pd.points.iter().filter(|p| !p.is_essential())
                .map(|p| p.persistence()).fold(f64::NEG_INFINITY, f64::max);
            if finite_max.is_finite() {
                let bp_max = bp.points[..pd.len()].iter().map(|p| p.persistence)
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(bp_max, finite_max);
            }
        }

        #[test]
        fn serialization_commutes_with_transform(pd in arb_pd()) {
            let direct = to_birth_persistence(&pd, &cfg()).to_csv();
            let reread = PersistenceDiagram::from_csv(&pd.to_csv(), pd.dim).unwrap();
            let via_file = to_birth_persistence(&reread, &cfg()).to_csv();
            prop_assert_eq!(&direct, &via_file);
            let bp = BirthPersistenceDiagram::from_csv(&direct, pd.dim).unwrap();
            prop_assert_eq!(bp.to_csv(), direct);
        }
    }
}
