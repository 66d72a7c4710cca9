use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One path per ordered pair of distinct states, as vertex sequences.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPathSet {
    paths: BTreeMap<(usize, usize), Vec<usize>>,
}

impl CanonicalPathSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: usize, to: usize, vertices: Vec<usize>) {
        self.paths.insert((from, to), vertices);
    }

    pub fn get(&self, from: usize, to: usize) -> Option<&[usize]> {
        self.paths.get(&(from, to)).map(|v| v.as_slice())
    }

    pub fn get_mut(&mut self, from: usize, to: usize) -> Option<&mut Vec<usize>> {
        self.paths.get_mut(&(from, to))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<usize>)> {
        self.paths.iter()
    }

    /// Shortest paths (fewest edges) in the support graph `T(z,w) > 0`,
    /// ties broken towards lower vertex indices.
    pub fn geodesic(rates: &DMatrix<f64>) -> Result<Self> {
        let n = rates.nrows();
        let mut out = Self::new();
        for from in 0..n {
            let mut parent = vec![usize::MAX; n];
            parent[from] = from;
            let mut queue = VecDeque::from([from]);
            while let Some(z) = queue.pop_front() {
                for w in 0..n {
                    if w != z && parent[w] == usize::MAX && rates[(z, w)] > 0.0 {
                        parent[w] = z;
                        queue.push_back(w);
                    }
                }
            }
            for to in 0..n {
                if to == from {
                    continue;
                }
                if parent[to] == usize::MAX {
                    return Err(Error::BrokenPath { from, to });
                }
                let mut v = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur];
                    v.push(cur);
                }
                v.reverse();
                out.insert(from, to, v);
            }
        }
        Ok(out)
    }

    /// Every ordered pair has a path joining its endpoints along edges of
    /// positive rate.
    pub fn validate(&self, rates: &DMatrix<f64>) -> Result<()> {
        let n = rates.nrows();
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let path = self.get(x, y).ok_or(Error::BrokenPath { from: x, to: y })?;
                if path.len() < 2 || path[0] != x || *path.last().unwrap() != y {
                    return Err(Error::BrokenPath { from: x, to: y });
                }
                for e in path.windows(2) {
                    if e[0] >= n || e[1] >= n {
                        return Err(Error::BrokenPath { from: x, to: y });
                    }
                    if !(rates[(e[0], e[1])] > 0.0) {
                        return Err(Error::ZeroRateEdge {
                            from: x,
                            to: y,
                            edge_from: e[0],
                            edge_to: e[1],
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Congestion {
    pub rho: f64,
    pub edge: (usize, usize),
}

/// `ρ(γ) = max_{(z,w)} Σ_{γ_{x,y} ∋ (z,w)} |γ_{x,y}| p(x) p(y) / (p(z) T(z,w))`.
pub fn congestion_bound(rates: &DMatrix<f64>, p: &[f64], paths: &CanonicalPathSet) -> Result<Congestion> {
    let n = p.len();
    if rates.nrows() != n || rates.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rates.nrows(),
        });
    }
    paths.validate(rates)?;
    let mut load = DMatrix::<f64>::zeros(n, n);
    for (&(x, y), path) in paths.iter() {
        let len = (path.len() - 1) as f64;
        for e in path.windows(2) {
            load[(e[0], e[1])] += len * p[x] * p[y];
        }
    }
    let mut best = Congestion {
        rho: 0.0,
        edge: (0, 0),
    };
    for z in 0..n {
        for w in 0..n {
            if load[(z, w)] > 0.0 {
                let c = load[(z, w)] / (p[z] * rates[(z, w)]);
                if c > best.rho {
                    best = Congestion { rho: c, edge: (z, w) };
                }
            }
        }
    }
    Ok(best)
}
