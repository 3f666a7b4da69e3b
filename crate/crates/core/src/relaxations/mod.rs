//! The three relaxations as conic programs, their certificates, and the
//! matrix-tree minor check.

mod certificates;
mod cvetkovic;
mod matrix_tree;
mod new_sdp;
mod point;
mod qap;

pub use certificates::{
    aggregate_lmis, aggregation_weights, extendability_check, project_to_cvetkovic, AggregationWeights,
    CvetkovicReport, Extendability, EXTENSION_TOLERANCE, POINT_TOLERANCE,
};
pub use cvetkovic::{build_cvetkovic_sdp, solve_cvetkovic, CvetkovicSdp, CvetkovicSolution};
pub use matrix_tree::{minor_inequality_check, spanning_tree_minor, MinorCheck, MINOR_SLACK};
pub use new_sdp::{
    build_new_sdp, build_new_sdp_with, canonical_point, solve_new_sdp, NewSdp, NewSdpOptions, NewSdpSolution,
};
pub use point::{lmi_coefficient, MultiBlockPoint, PointViolation};
pub use qap::{
    build_qap_sdp, build_qap_sdp_with_cap, solve_qap_sdp, LiftedPoint, LiftedViolation, QapSdp, QAP_DEFAULT_CAP,
};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

/// Smallest instance the relaxations accept.
pub const MIN_ORDER: usize = 4;

/// Column of the unordered pair `{p, q}`, `p != q`, among the `n(n-1)/2`
/// strict upper-triangle positions in row-major order.
pub fn pair_index(n: usize, p: usize, q: usize) -> usize {
    debug_assert!(p != q && p < n && q < n);
    let (p, q) = if p < q { (p, q) } else { (q, p) };
    p * n - p * (p + 1) / 2 + (q - p - 1)
}

pub fn num_pairs(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Pairs `(p, q)`, `p < q`, in [`pair_index`] order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |p| (p + 1..n).map(move |q| (p, q)))
}

fn check_order(d: &DistanceMatrix) -> Result<()> {
    if d.n() < MIN_ORDER {
        return Err(Error::invalid(format!(
            "relaxations need at least {MIN_ORDER} cities, got {}",
            d.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_enumerates_upper_triangle() {
        for n in 2..9 {
            let idx: Vec<usize> = pairs(n).map(|(p, q)| pair_index(n, p, q)).collect();
            assert_eq!(idx, (0..num_pairs(n)).collect::<Vec<_>>());
            for (p, q) in pairs(n) {
                assert_eq!(pair_index(n, p, q), pair_index(n, q, p));
            }
        }
    }
}
