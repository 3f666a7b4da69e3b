//! Exact tour enumeration for small instances.

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

pub const BRUTE_FORCE_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalTour {
    pub length: f64,
    /// Starts at city 0 with `tour[1] < tour[n-1]`.
    pub tour: Vec<usize>,
}

struct Search<'a> {
    d: &'a DistanceMatrix,
    n: usize,
    path: Vec<usize>,
    used: Vec<bool>,
    best: f64,
    best_tour: Vec<usize>,
}

impl Search<'_> {
    // Depth-first in lexicographic order; a branch is cut once its partial
    // length reaches the incumbent, which keeps the first minimum found.
    fn extend(&mut self, len: f64) {
        if len >= self.best {
            return;
        }
        let depth = self.path.len();
        let last = self.path[depth - 1];
        if depth == self.n {
            if self.path[1] < last {
                let total = len + self.d.get(last, 0);
                if total < self.best {
                    self.best = total;
                    self.best_tour.clone_from(&self.path);
                }
            }
            return;
        }
        for c in 1..self.n {
            if self.used[c] {
                continue;
            }
            self.used[c] = true;
            self.path.push(c);
            self.extend(len + self.d.get(last, c));
            self.path.pop();
            self.used[c] = false;
        }
    }
}

/// Shortest tour with lexicographic tie-breaking among the canonical
/// orientations.
pub fn brute_force_tsp(d: &DistanceMatrix) -> Result<OptimalTour> {
    let n = d.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::Capacity {
            what: "brute-force tour enumeration",
            n,
            limit: BRUTE_FORCE_CAP,
        });
    }
    if n < 3 {
        return Err(Error::invalid(format!("tours need at least 3 cities, got {n}")));
    }
    let mut used = vec![false; n];
    used[0] = true;
    let mut s = Search {
        d,
        n,
        path: vec![0],
        used,
        best: f64::INFINITY,
        best_tour: Vec::new(),
    };
    s.extend(0.0);
    Ok(OptimalTour {
        length: s.best,
        tour: s.best_tour,
    })
}
