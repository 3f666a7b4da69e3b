//! Cut-indicator instances whose optimal tour length is the right-hand side
//! of a subtour elimination inequality.

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

pub const FACET_MIN_ORDER: usize = 5;
pub const FACET_MAX_ORDER: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacetInstance {
    pub label: String,
    /// Size of the cut side `{0, .., s-1}`.
    pub subset_size: usize,
    pub distances: DistanceMatrix,
    pub rhs: i64,
}

impl FacetInstance {
    pub fn n(&self) -> usize {
        self.distances.n()
    }
}

/// `D_ij = 1` iff exactly one of `i, j` lies in `{0, .., s-1}`.
pub fn subtour_facet(n: usize, s: usize) -> Result<FacetInstance> {
    if !(FACET_MIN_ORDER..=FACET_MAX_ORDER).contains(&n) {
        return Err(Error::invalid(format!(
            "facet instances need {FACET_MIN_ORDER} <= n <= {FACET_MAX_ORDER}, got {n}"
        )));
    }
    if s < 2 || 2 * s > n {
        return Err(Error::invalid(format!("subset size {s} outside 2..={}", n / 2)));
    }
    let distances = DistanceMatrix::from_fn(n, |i, j| if (i < s) != (j < s) { 1.0 } else { 0.0 })?;
    Ok(FacetInstance {
        label: format!("subtour-{s}"),
        subset_size: s,
        distances,
        rhs: 2,
    })
}

/// One representative per subset size `s = 2..=n/2`.
pub fn subtour_facet_instances(n: usize) -> Result<Vec<FacetInstance>> {
    if !(FACET_MIN_ORDER..=FACET_MAX_ORDER).contains(&n) {
        return Err(Error::invalid(format!(
            "facet instances need {FACET_MIN_ORDER} <= n <= {FACET_MAX_ORDER}, got {n}"
        )));
    }
    (2..=n / 2).map(|s| subtour_facet(n, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_pairs(f: &FacetInstance) -> usize {
        let n = f.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| f.distances.get(i, j) == 1.0)
            .count()
    }

    #[test]
    fn eight_node_representatives() {
        let fs = subtour_facet_instances(8).unwrap();
        assert_eq!(fs.len(), 3);
        assert_eq!(unit_pairs(&fs[0]), 12);
        assert_eq!(unit_pairs(&fs[1]), 15);
        assert_eq!(unit_pairs(&fs[2]), 16);
        assert!(fs.iter().all(|f| f.rhs == 2 && f.distances.is_integral()));
        assert_eq!(fs[2].label, "subtour-4");
    }

    #[test]
    fn order_range_is_enforced() {
        assert!(subtour_facet_instances(4).is_err());
        assert!(subtour_facet_instances(11).is_err());
        assert_eq!(subtour_facet_instances(5).unwrap().len(), 1);
        assert!(subtour_facet(8, 5).is_err());
    }
}
