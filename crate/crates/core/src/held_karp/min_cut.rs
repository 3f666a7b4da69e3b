//! Deterministic global minimum cut by maximum-adjacency contraction.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A global minimum cut: one shore, sorted, and its weight.
#[derive(Clone, Debug, PartialEq)]
pub struct MinCut {
    pub subset: Vec<usize>,
    pub weight: f64,
}

fn check_weights(w: &DMatrix<f64>) -> Result<()> {
    let n = w.nrows();
    if w.ncols() != n || n < 2 {
        return Err(Error::invalid("minimum cut needs a square matrix of order >= 2"));
    }
    for i in 0..n {
        if w[(i, i)] != 0.0 {
            return Err(Error::invalid(format!("nonzero diagonal entry at {i}")));
        }
        for j in 0..n {
            let v = w[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "entry ({i}, {j}) = {v} is not a finite nonnegative weight"
                )));
            }
            if v != w[(j, i)] {
                return Err(Error::invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
            }
        }
    }
    Ok(())
}

/// `sum_{i in S, j not in S} w_ij`.
pub fn cut_weight(w: &DMatrix<f64>, subset: &[usize]) -> f64 {
    let n = w.nrows();
    let mut inside = vec![false; n];
    subset.iter().for_each(|&i| inside[i] = true);
    let mut total = 0.0;
    for &i in subset {
        for j in (0..n).filter(|&j| !inside[j]) {
            total += w[(i, j)];
        }
    }
    total
}

/// Stoer-Wagner. Each phase grows a maximum-adjacency order from the
/// lowest-numbered surviving vertex, breaking ties by the lower index, so
/// the result is a function of `w` alone.
pub fn global_min_cut(w: &DMatrix<f64>) -> Result<MinCut> {
    check_weights(w)?;
    let n = w.nrows();
    let mut g = w.clone();
    // members[v]: original vertices merged into surviving vertex v.
    let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut best = MinCut {
        subset: Vec::new(),
        weight: f64::INFINITY,
    };
    while alive.len() > 1 {
        let k = alive.len();
        let mut added = vec![false; k];
        let mut key = vec![0.0f64; k];
        let mut order = Vec::with_capacity(k);
        for _ in 0..k {
            let mut pick = usize::MAX;
            for idx in 0..k {
                if !added[idx] && (pick == usize::MAX || key[idx] > key[pick]) {
                    pick = idx;
                }
            }
            added[pick] = true;
            order.push(pick);
            let v = alive[pick];
            for idx in 0..k {
                if !added[idx] {
                    key[idx] += g[(v, alive[idx])];
                }
            }
        }
        let (s_idx, t_idx) = (order[k - 2], order[k - 1]);
        let (s, t) = (alive[s_idx], alive[t_idx]);
        // key[t] is the weight of the cut separating t's members.
        if key[t_idx] < best.weight {
            let mut subset = members[t].clone();
            subset.sort_unstable();
            best = MinCut {
                subset,
                weight: key[t_idx],
            };
        }
        let moved = std::mem::take(&mut members[t]);
        members[s].extend(moved);
        for &u in &alive {
            if u != s && u != t {
                let merged = g[(s, u)] + g[(t, u)];
                g[(s, u)] = merged;
                g[(u, s)] = merged;
            }
        }
        alive.remove(t_idx);
    }
    best.weight = cut_weight(w, &best.subset);
    Ok(best)
}
