//! Bounds on the subtour facet representatives; at `n = 8` the triples are
//! compared, as a multiset, with reference values.

use rayon::prelude::*;
use tspsdp::conic::SolverConfig;
use tspsdp::instances::subtour_facet_instances;
use tspsdp::Method;

use crate::compute::{evaluate_instance, Settings};
use crate::report::{ConfigEcho, InstanceRecord, RunReport};
use crate::Failure;

pub const REFERENCE_ORDER: usize = 8;
/// (single-matrix SDP, scheme SDP, subtour LP) for the three cut sizes.
pub const REFERENCE_TRIPLES: [[f64; 3]; 3] = [[2.0, 2.0, 2.0], [1.098, 1.628, 2.0], [1.172, 1.172, 2.0]];
pub const REFERENCE_TOLERANCE: f64 = 5e-3;

const METHODS: [Method; 3] = [Method::Cvetkovic, Method::NewSdp, Method::HeldKarp];

fn triple(rec: &InstanceRecord) -> [f64; 3] {
    METHODS.map(|m| rec.bound(m).map_or(f64::NAN, |b| b.bound.raw))
}

/// Whether some assignment of computed triples to reference triples agrees
/// entrywise within `tol`.
pub fn multiset_matches(computed: &[[f64; 3]], reference: &[[f64; 3]], tol: f64) -> bool {
    fn go(computed: &[[f64; 3]], reference: &[[f64; 3]], used: &mut Vec<bool>, tol: f64) -> bool {
        let Some((first, rest)) = computed.split_first() else {
            return true;
        };
        for k in 0..reference.len() {
            if !used[k] && first.iter().zip(&reference[k]).all(|(a, b)| (a - b).abs() <= tol) {
                used[k] = true;
                if go(rest, reference, used, tol) {
                    return true;
                }
                used[k] = false;
            }
        }
        false
    }
    computed.len() == reference.len() && go(computed, reference, &mut vec![false; reference.len()], tol)
}

pub fn run(n: usize, solver: &SolverConfig, jobs: usize) -> Result<RunReport, Failure> {
    let facets = subtour_facet_instances(n)?;
    let settings = Settings::new(*solver);
    let records: Vec<InstanceRecord> = facets
        .par_iter()
        .map(|f| evaluate_instance(&f.label, &f.distances, &METHODS, &settings))
        .collect::<Result<_, _>>()?;
    let mut report = RunReport::new("facets", ConfigEcho::new(solver, jobs, None));
    for (f, rec) in facets.iter().zip(&records) {
        if let Some(opt) = &rec.optimum {
            report.push_check(
                format!("{} optimum", f.label),
                opt.length == f.rhs as f64,
                format!("brute force {}, right-hand side {}", opt.length, f.rhs),
            );
        }
    }
    if n == REFERENCE_ORDER {
        let computed: Vec<[f64; 3]> = records.iter().map(triple).collect();
        let pass = multiset_matches(&computed, &REFERENCE_TRIPLES, REFERENCE_TOLERANCE);
        let shown: Vec<String> = computed
            .iter()
            .map(|t| format!("({:.3}, {:.3}, {:.3})", t[0], t[1], t[2]))
            .collect();
        report.push_check(
            "reference triples",
            pass,
            format!(
                "{} against the reference multiset within {REFERENCE_TOLERANCE}",
                shown.join(" ")
            ),
        );
    }
    report.instances = records;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_ignores_order() {
        let c = [[1.172, 1.172, 2.0], [2.0, 2.0, 2.0], [1.098, 1.628, 2.0]];
        assert!(multiset_matches(&c, &REFERENCE_TRIPLES, 1e-9));
        let bad = [[2.0, 2.0, 2.0], [2.0, 2.0, 2.0], [1.098, 1.628, 2.0]];
        assert!(!multiset_matches(&bad, &REFERENCE_TRIPLES, 1e-3));
        assert!(!multiset_matches(&c[..2], &REFERENCE_TRIPLES, 1e-3));
    }
}
