//! Seeded search for instances on which the scheme relaxation is strictly
//! stronger than the subtour LP.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{held_karp_bound, HeldKarpConfig};
use crate::conic::SolverConfig;
use crate::distance::DistanceMatrix;
use crate::error::Result;
use crate::instances::random_integral_instance;
use crate::relaxations::{extendability_check, solve_new_sdp, Extendability, NewSdpOptions};

/// A witness needs the scheme bound above the LP bound by this much,
/// relative to `1 + |LP bound|`.
pub const DOMINANCE_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRecord {
    pub seed: u64,
    pub n: usize,
    pub held_karp: f64,
    pub new_sdp: f64,
    /// `l1` distance from the LP optimum to the first blocks of scheme
    /// points; `None` when the LP point could not be cleaned into a valid
    /// extension query.
    pub extension_distance: Option<f64>,
    pub witness: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceSearch {
    pub records: Vec<DominanceRecord>,
}

impl DominanceSearch {
    pub fn witnesses(&self) -> impl Iterator<Item = &DominanceRecord> {
        self.records.iter().filter(|r| r.witness)
    }
}

/// Symmetric, zero-diagonal, clamped to `[0, 1]`.
fn clean(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (0.5 * (x[(i, j)] + x[(j, i)])).clamp(0.0, 1.0)
        }
    })
}

/// For instance `k` seeded with `seed + k`, lengths in `1..=max_weight`,
/// solves both relaxations and asks whether the LP optimum extends to a
/// scheme point.
pub fn dominance_search(
    seed: u64,
    n: usize,
    count: usize,
    max_weight: u32,
    config: &SolverConfig,
) -> Result<DominanceSearch> {
    let hk_config = HeldKarpConfig {
        solver: *config,
        ..HeldKarpConfig::default()
    };
    let mut records = Vec::with_capacity(count);
    for k in 0..count {
        let s = seed.wrapping_add(k as u64);
        let d: DistanceMatrix = random_integral_instance(n, s, max_weight);
        let hk = held_karp_bound(&d, &hk_config)?;
        let sdp = solve_new_sdp(&d, NewSdpOptions::default(), config)?;
        let extension_distance = match extendability_check(&clean(&hk.x), config) {
            Ok(Extendability::Feasible { report, .. }) | Ok(Extendability::Infeasible { report, .. }) => {
                Some(report.primal_objective.max(0.0))
            }
            Err(_) => None,
        };
        let witness = sdp.bound.raw > hk.bound.raw + DOMINANCE_MARGIN * (1.0 + hk.bound.raw.abs());
        records.push(DominanceRecord {
            seed: s,
            n,
            held_karp: hk.bound.raw,
            new_sdp: sdp.bound.raw,
            extension_distance,
            witness,
        });
    }
    Ok(DominanceSearch { records })
}
