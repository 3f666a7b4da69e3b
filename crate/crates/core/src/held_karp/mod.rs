//! Subtour-elimination LP: degree-2 edge weights in `[0, 1]` with every
//! cut of weight at least 2, solved by separating one minimum cut per round.

mod min_cut;
mod search;

pub use min_cut::{cut_weight, global_min_cut, MinCut};
pub use search::{dominance_search, DominanceRecord, DominanceSearch, DOMINANCE_MARGIN};

use std::collections::HashSet;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bound::{BoundResult, Method, SolveSummary};
use crate::conic::{solve, ConicProgram, ProgramBuilder, SolveReport, SolveStatus, SolverConfig};
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::relaxations::{num_pairs, pair_index, pairs, MIN_ORDER};

/// Largest order accepted by [`full_enumeration_lp`].
pub const FULL_ENUMERATION_CAP: usize = 12;
/// A cut is violated when its weight is below `2 - SEPARATION_TOLERANCE`.
pub const SEPARATION_TOLERANCE: f64 = 1e-6;
/// Tolerance on the degree equalities expected by [`separate`].
pub const DEGREE_TOLERANCE: f64 = 1e-6;
/// Accuracy at which a non-optimal LP report is still accepted.
const LP_ACCEPT_TOLERANCE: f64 = 1e-7;

/// Vertex subsets `I` with `0 < |I| < n`, each stored once as the smaller
/// shore of its cut, or for `|I| = n/2` as the shore without vertex 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutPool {
    n: usize,
    cuts: Vec<Vec<usize>>,
    #[serde(skip)]
    index: HashSet<Vec<usize>>,
}

impl CutPool {
    pub fn new(n: usize) -> Self {
        CutPool {
            n,
            cuts: Vec::new(),
            index: HashSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Vec<usize>] {
        &self.cuts
    }

    /// Canonical shore of the cut defined by `subset`.
    pub fn canonical(&self, subset: &[usize]) -> Result<Vec<usize>> {
        let n = self.n;
        let mut inside = vec![false; n];
        for &v in subset {
            if v >= n {
                return Err(Error::invalid(format!("vertex {v} out of range for n = {n}")));
            }
            inside[v] = true;
        }
        let k = inside.iter().filter(|&&b| b).count();
        if k == 0 || k == n {
            return Err(Error::invalid("cut shores must be proper and nonempty"));
        }
        let flip = 2 * k > n || (2 * k == n && inside[0]);
        Ok((0..n).filter(|&v| inside[v] != flip).collect())
    }

    /// Adds the cut of `subset`; `false` if it was already present.
    pub fn insert(&mut self, subset: &[usize]) -> Result<bool> {
        let c = self.canonical(subset)?;
        if self.index.contains(&c) {
            return Ok(false);
        }
        self.index.insert(c.clone());
        self.cuts.push(c);
        Ok(true)
    }

    pub fn contains(&self, subset: &[usize]) -> bool {
        self.canonical(subset).is_ok_and(|c| self.index.contains(&c))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeparationResult {
    /// A shore whose cut weight is below `2 - tolerance`.
    Violated { subset: Vec<usize>, weight: f64 },
    /// The global minimum cut weight, at least `2 - tolerance`.
    Satisfied { min_cut_weight: f64 },
}

impl SeparationResult {
    pub fn is_violated(&self) -> bool {
        matches!(self, SeparationResult::Violated { .. })
    }
}

/// Finds a subtour inequality violated by `x`, choosing the globally
/// minimum cut.
pub fn separate(x: &DMatrix<f64>, tolerance: f64) -> Result<SeparationResult> {
    let n = x.nrows();
    if x.ncols() != n || n < 2 {
        return Err(Error::invalid("separation needs a square matrix of order >= 2"));
    }
    for i in 0..n {
        let deg: f64 = (0..n).filter(|&j| j != i).map(|j| x[(i, j)]).sum();
        if (deg - 2.0).abs() > DEGREE_TOLERANCE {
            return Err(Error::invalid(format!("vertex {i} has degree {deg}, expected 2")));
        }
    }
    // Tiny negative entries from an interior point solve carry no weight.
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (0.5 * (x[(i, j)] + x[(j, i)])).max(0.0)
        }
    });
    let cut = global_min_cut(&w)?;
    let weight = cut_weight(x, &cut.subset);
    Ok(if weight < 2.0 - tolerance {
        SeparationResult::Violated {
            subset: cut.subset,
            weight,
        }
    } else {
        SeparationResult::Satisfied { min_cut_weight: weight }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldKarpConfig {
    pub solver: SolverConfig,
    pub max_rounds: usize,
    pub tolerance: f64,
}

impl Default for HeldKarpConfig {
    fn default() -> Self {
        HeldKarpConfig {
            solver: SolverConfig::default(),
            max_rounds: 1000,
            tolerance: SEPARATION_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HeldKarpSolution {
    /// `solve.status` is `IterationLimit` when the round cap stopped the
    /// loop with a violated cut left; the value is still a valid bound.
    pub bound: BoundResult,
    pub x: DMatrix<f64>,
    pub pool: CutPool,
    /// LP value after each round.
    pub history: Vec<f64>,
    /// No violated cut remains.
    pub converged: bool,
}

/// LP over `x_e, u_e, t_I >= 0`: `x_e + u_e = 1`, degree rows, and
/// `x(delta(I)) - t_I = 2` for each pooled cut.
fn build_lp(d: &DistanceMatrix, pool: &CutPool) -> Result<ConicProgram> {
    let n = d.n();
    let np = num_pairs(n);
    let mut pb = ProgramBuilder::new();
    let x = pb.add_nonnegative(np).start;
    let u = pb.add_nonnegative(np).start;
    let t = pb.add_nonnegative(pool.len()).start;
    for (p, q) in pairs(n) {
        let k = pair_index(n, p, q);
        pb.add_objective(x + k, d.get(p, q));
        pb.add_equality(&[(x + k, 1.0), (u + k, 1.0)], 1.0);
    }
    for a in 0..n {
        let terms: Vec<(usize, f64)> = (0..n)
            .filter(|&b| b != a)
            .map(|b| (x + pair_index(n, a, b), 1.0))
            .collect();
        pb.add_equality(&terms, 2.0);
    }
    let mut inside = vec![false; n];
    for (c, shore) in pool.cuts().iter().enumerate() {
        inside.iter_mut().for_each(|b| *b = false);
        shore.iter().for_each(|&v| inside[v] = true);
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for &a in shore {
            for b in (0..n).filter(|&b| !inside[b]) {
                terms.push((x + pair_index(n, a, b), 1.0));
            }
        }
        terms.push((t + c, -1.0));
        pb.add_equality(&terms, 2.0);
    }
    pb.build()
}

fn solve_lp(d: &DistanceMatrix, pool: &CutPool, config: &SolverConfig) -> Result<(SolveReport, DMatrix<f64>)> {
    let n = d.n();
    let report = solve(&build_lp(d, pool)?, config)?;
    let accurate = report.gap.max(report.primal_residual).max(report.dual_residual) <= LP_ACCEPT_TOLERANCE;
    if !(report.is_optimal() || accurate) {
        return Err(Error::NotConverged {
            status: report.status,
            detail: format!("subtour LP with {} cuts", pool.len()),
        });
    }
    let x = DMatrix::from_fn(n, n, |p, q| if p == q { 0.0 } else { report.x[pair_index(n, p, q)] });
    Ok((report, x))
}

fn check_lp_order(d: &DistanceMatrix) -> Result<()> {
    if d.n() < MIN_ORDER {
        return Err(Error::invalid(format!(
            "the subtour LP needs at least {MIN_ORDER} cities, got {}",
            d.n()
        )));
    }
    Ok(())
}

/// Cutting-plane Held-Karp bound.
pub fn held_karp_bound(d: &DistanceMatrix, config: &HeldKarpConfig) -> Result<HeldKarpSolution> {
    check_lp_order(d)?;
    let start = Instant::now();
    let mut pool = CutPool::new(d.n());
    let mut history = Vec::new();
    let mut rounds = 0;
    loop {
        let (report, x) = solve_lp(d, &pool, &config.solver)?;
        rounds += 1;
        history.push(report.dual_objective);
        let next = match separate(&x, config.tolerance)? {
            SeparationResult::Violated { subset, .. } => Some(subset),
            SeparationResult::Satisfied { .. } => None,
        };
        let next_is_none = next.is_none();
        let mut summary = SolveSummary::from(&report);
        let finished = match next {
            None => true,
            Some(_) if rounds >= config.max_rounds => {
                summary.status = SolveStatus::IterationLimit;
                true
            }
            Some(subset) => {
                if !pool.insert(&subset)? {
                    // The LP already holds this cut; its solution cannot
                    // violate it beyond the solver accuracy.
                    return Err(Error::NotConverged {
                        status: report.status,
                        detail: "separated cut is already in the pool".into(),
                    });
                }
                false
            }
        };
        if finished {
            let bound = BoundResult::new(
                Method::HeldKarp,
                report.dual_objective,
                d.is_integral(),
                summary,
                rounds,
                start.elapsed(),
            );
            return Ok(HeldKarpSolution {
                converged: next_is_none,
                bound,
                x,
                pool,
                history,
            });
        }
    }
}

/// The subtour LP with all `2^(n-1) - n - 1` cuts present.
pub fn full_enumeration_lp(d: &DistanceMatrix, config: &SolverConfig) -> Result<HeldKarpSolution> {
    check_lp_order(d)?;
    let n = d.n();
    if n > FULL_ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "full subtour enumeration",
            n,
            limit: FULL_ENUMERATION_CAP,
        });
    }
    let start = Instant::now();
    let mut pool = CutPool::new(n);
    // Shores avoiding vertex 0 name every cut exactly once.
    for mask in 1u32..(1 << (n - 1)) {
        let k = mask.count_ones() as usize;
        if k == 1 || k == n - 1 {
            continue;
        }
        let shore: Vec<usize> = (0..n - 1).filter(|&b| mask & (1 << b) != 0).map(|b| b + 1).collect();
        pool.insert(&shore)?;
    }
    let (report, x) = solve_lp(d, &pool, config)?;
    let bound = BoundResult::new(
        Method::HeldKarp,
        report.dual_objective,
        d.is_integral(),
        SolveSummary::from(&report),
        1,
        start.elapsed(),
    );
    Ok(HeldKarpSolution {
        history: vec![report.dual_objective],
        converged: true,
        bound,
        x,
        pool,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| f64::from((i + 1) % n == j || (j + 1) % n == i))
    }

    #[test]
    fn pool_is_canonical() {
        let mut pool = CutPool::new(6);
        assert!(pool.insert(&[1, 2]).unwrap());
        assert!(!pool.insert(&[0, 3, 4, 5]).unwrap());
        assert!(pool.insert(&[0, 1, 2]).unwrap());
        assert!(!pool.insert(&[3, 4, 5]).unwrap());
        assert_eq!(pool.cuts(), &[vec![1, 2], vec![3, 4, 5]]);
        assert!(pool.insert(&[]).is_err());
        assert!(pool.insert(&[0, 1, 2, 3, 4, 5]).is_err());
    }

    #[test]
    fn two_squares_are_separated() {
        let mut x = DMatrix::zeros(8, 8);
        let c = cycle(4);
        x.view_mut((0, 0), (4, 4)).copy_from(&c);
        x.view_mut((4, 4), (4, 4)).copy_from(&c);
        match separate(&x, SEPARATION_TOLERANCE).unwrap() {
            SeparationResult::Violated { subset, weight } => {
                assert_eq!(weight, 0.0);
                assert!(subset == vec![0, 1, 2, 3] || subset == vec![4, 5, 6, 7]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cycle_is_not_separated() {
        let r = separate(&cycle(8), SEPARATION_TOLERANCE).unwrap();
        assert_eq!(r, SeparationResult::Satisfied { min_cut_weight: 2.0 });
    }

    #[test]
    fn uniform_lengths() {
        let hk = held_karp_bound(&DistanceMatrix::uniform(6).unwrap(), &HeldKarpConfig::default()).unwrap();
        assert!(hk.converged);
        assert!((hk.bound.raw - 6.0).abs() < 1e-6);
        let full = full_enumeration_lp(&DistanceMatrix::uniform(5).unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(full.pool.len(), 10);
        assert!((full.bound.raw - 5.0).abs() < 1e-6);
    }

    #[test]
    fn capacity_and_order_are_checked() {
        let cfg = SolverConfig::default();
        assert!(matches!(
            full_enumeration_lp(&DistanceMatrix::uniform(13).unwrap(), &cfg),
            Err(Error::Capacity { .. })
        ));
        assert!(held_karp_bound(&DistanceMatrix::uniform(3).unwrap(), &HeldKarpConfig::default()).is_err());
    }
}
