//! Reference persistence: every simplex, one dense GF(2) boundary matrix and
//! the textbook left-to-right reduction. Independent of the fast path.

use super::{DistanceMatrix, PersistenceDiagram, PersistencePair, RipsConfig};
use crate::error::{Error, Result};

pub const ORACLE_MAX_POINTS: usize = 14;

struct Simplex {
    value: f64,
    verts: Vec<usize>,
}

pub fn brute_force_persistence(
    dm: &DistanceMatrix,
    cfg: &RipsConfig,
) -> Result<(PersistenceDiagram, PersistenceDiagram)> {
    let n = dm.len();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::TooLarge(n));
    }
    let eps = cfg.epsilon;

    let mut simplices: Vec<Simplex> = (0..n)
        .map(|v| Simplex {
            value: 0.0,
            verts: vec![v],
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if dm.get(i, j) <= eps {
                simplices.push(Simplex {
                    value: dm.get(i, j),
                    verts: vec![i, j],
                });
            }
            for k in (j + 1)..n {
                let diam = dm.get(i, j).max(dm.get(i, k)).max(dm.get(j, k));
                if diam <= eps {
                    simplices.push(Simplex {
                        value: diam,
                        verts: vec![i, j, k],
                    });
                }
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.verts.len().cmp(&b.verts.len()))
            .then(a.verts.cmp(&b.verts))
    });

    let m = simplices.len();
    let index_of = |verts: &[usize]| {
        simplices
            .iter()
            .position(|s| s.verts == verts)
            .expect("faces of a simplex in the complex are in the complex")
    };
    let mut matrix = vec![vec![false; m]; m];
    for (col, s) in simplices.iter().enumerate() {
        if s.verts.len() > 1 {
            for skip in 0..s.verts.len() {
                let face: Vec<usize> = s
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                matrix[col][index_of(&face)] = true;
            }
        }
    }

    let low = |column: &[bool]| column.iter().rposition(|&b| b);
    let mut lows: Vec<Option<usize>> = vec![None; m];
    for j in 0..m {
        while let Some(l) = low(&matrix[j]) {
            let Some(k) = (0..j).find(|&k| lows[k] == Some(l)) else {
                break;
            };
            let other = matrix[k].clone();
            for (a, b) in matrix[j].iter_mut().zip(other) {
                *a ^= b;
            }
        }
        lows[j] = low(&matrix[j]);
    }

    let mut paired = vec![false; m];
    let mut h0 = Vec::new();
    let mut h1 = Vec::new();
    for (j, l) in lows.iter().enumerate() {
        if let Some(i) = *l {
            paired[i] = true;
            paired[j] = true;
            let (birth, death) = (simplices[i].value, simplices[j].value);
            if death > birth {
                match simplices[i].verts.len() {
                    1 => h0.push(PersistencePair::new(birth, death)),
                    2 => h1.push(PersistencePair::new(birth, death)),
                    _ => {}
                }
            }
        }
    }
    for (j, s) in simplices.iter().enumerate() {
        if paired[j] || lows[j].is_some() {
            continue;
        }
        match s.verts.len() {
            1 => h0.push(PersistencePair::new(s.value, f64::INFINITY)),
            2 if eps > s.value => h1.push(PersistencePair::new(s.value, eps)),
            _ => {}
        }
    }
    Ok((
        PersistenceDiagram::new(0, h0),
        PersistenceDiagram::new(1, h1),
    ))
}
