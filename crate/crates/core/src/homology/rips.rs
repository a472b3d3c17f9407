//! Fast path: union-find for H0, then a reduction of edge coboundaries for H1.
//!
//! Persistent cohomology yields the same pairs as the homology boundary-matrix
//! reduction under a fixed total order, but only the edges that create a cycle
//! need reducing: every edge that merged two components is cleared up front.
//! Those cycle-creating edges are processed from the youngest to the oldest, and
//! each coboundary column holds only triangles of diameter at most epsilon.

use std::collections::HashMap;

use super::union_find::UnionFind;
use super::{DistanceMatrix, PersistenceDiagram, PersistencePair, RipsConfig};

/// Filtration key of an edge or triangle: diameter first, then the sorted
/// vertex tuple. Diameters are nonnegative, so their IEEE bit patterns sort
/// like the values themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key<const K: usize> {
    bits: u64,
    verts: [u32; K],
}

type EdgeKey = Key<2>;
type TriKey = Key<3>;

impl<const K: usize> Key<K> {
    fn value(&self) -> f64 {
        f64::from_bits(self.bits)
    }
}

fn sorted3(a: usize, b: usize, c: usize) -> [u32; 3] {
    let mut v = [a as u32, b as u32, c as u32];
    v.sort_unstable();
    v
}

/// Edges within the threshold in filtration order.
fn sorted_edges(dm: &DistanceMatrix, epsilon: f64) -> Vec<EdgeKey> {
    let n = dm.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dm.get(i, j);
            if d <= epsilon {
                edges.push(EdgeKey {
                    bits: d.to_bits(),
                    verts: [i as u32, j as u32],
                });
            }
        }
    }
    edges.sort_unstable();
    edges
}

fn coboundary(dm: &DistanceMatrix, edge: &EdgeKey, epsilon: f64) -> Vec<TriKey> {
    let (i, j) = (edge.verts[0] as usize, edge.verts[1] as usize);
    let dij = edge.value();
    let mut col: Vec<TriKey> = (0..dm.len())
        .filter(|&k| k != i && k != j)
        .filter_map(|k| {
            let diam = dij.max(dm.get(i, k)).max(dm.get(j, k));
            (diam <= epsilon).then(|| TriKey {
                bits: diam.to_bits(),
                verts: sorted3(i, j, k),
            })
        })
        .collect();
    col.sort_unstable();
    col
}

/// GF(2) sum of two sorted columns.
fn add_columns(a: &[TriKey], b: &[TriKey]) -> Vec<TriKey> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Dimension-0 and dimension-1 persistence of the Vietoris-Rips filtration
/// truncated at `cfg.epsilon`.
///
/// Zero-persistence pairs are dropped. Components that never merge die at
/// `+inf`; cycles that are never filled below the threshold die at `epsilon`.
pub fn rips_persistence(
    dm: &DistanceMatrix,
    cfg: &RipsConfig,
) -> (PersistenceDiagram, PersistenceDiagram) {
    let epsilon = cfg.epsilon;
    let n = dm.len();
    let edges = sorted_edges(dm, epsilon);

    let mut uf = UnionFind::new(n);
    let mut h0 = Vec::new();
    let mut cycle_edges = Vec::new();
    let mut components = n;
    for e in &edges {
        if uf.union(e.verts[0] as usize, e.verts[1] as usize) {
            components -= 1;
            if e.value() > 0.0 {
                h0.push(PersistencePair::new(0.0, e.value()));
            }
        } else {
            cycle_edges.push(*e);
        }
    }
    h0.extend((0..components).map(|_| PersistencePair::new(0.0, f64::INFINITY)));

    let mut h1 = Vec::new();
    let mut reduced: Vec<Vec<TriKey>> = Vec::new();
    let mut pivot_owner: HashMap<TriKey, usize> = HashMap::new();
    for edge in cycle_edges.iter().rev() {
        let mut col = coboundary(dm, edge, epsilon);
        while let Some(&pivot) = col.first() {
            match pivot_owner.get(&pivot) {
                Some(&owner) => col = add_columns(&col, &reduced[owner]),
                None => break,
            }
        }
        let birth = edge.value();
        match col.first() {
            Some(&pivot) => {
                let death = pivot.value();
                if death > birth {
                    h1.push(PersistencePair::new(birth, death));
                }
                pivot_owner.insert(pivot, reduced.len());
                reduced.push(col);
            }
            None => {
                if epsilon > birth {
                    h1.push(PersistencePair::new(birth, epsilon));
                }
            }
        }
    }

    (
        PersistenceDiagram::new(0, h0),
        PersistenceDiagram::new(1, h1),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::pairwise_distances;
    use crate::ingest::PointCloud;

    fn run(points: &[(f64, f64)], eps: f64) -> (PersistenceDiagram, PersistenceDiagram) {
        let pc = PointCloud::new(points.to_vec()).unwrap();
        rips_persistence(&pairwise_distances(&pc), &RipsConfig::new(eps).unwrap())
    }

    #[test]
    fn single_point() {
        let (h0, h1) = run(&[(0.5, 0.5)], 1.0);
        assert_eq!(h0.points, vec![PersistencePair::new(0.0, f64::INFINITY)]);
        assert!(h1.is_empty());
    }

    #[test]
    fn disconnected_beyond_threshold() {
        let (h0, h1) = run(&[(0.0, 0.0), (1.0, 1.0)], 0.5);
        assert_eq!(h0.len(), 2);
        assert!(h0.points.iter().all(PersistencePair::is_essential));
        assert!(h1.is_empty());
    }

    #[test]
    fn duplicate_points_drop_zero_length_merge() {
        let (h0, _) = run(&[(0.2, 0.2), (0.2, 0.2), (0.6, 0.2)], 1.0);
        assert_eq!(h0.len(), 2);
    }

    #[test]
    fn square_cycle_capped_by_threshold() {
        // the diagonal (sqrt 2) never enters, so the loop is essential
        let (_, h1) = run(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], 1.2);
        assert_eq!(h1.points, vec![PersistencePair::new(1.0, 1.2)]);
    }

    #[test]
    fn add_columns_is_symmetric_difference() {
        let k = |b: u64| TriKey {
            bits: b,
            verts: [0, 1, 2],
        };
        assert_eq!(
            add_columns(&[k(1), k(2), k(4)], &[k(2), k(3)]),
            vec![k(1), k(3), k(4)]
        );
        assert!(add_columns(&[k(1)], &[k(1)]).is_empty());
    }
}
