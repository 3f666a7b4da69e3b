//! Seeded property suites. Every random instance comes from
//! `tspsdp::instances::seeded_suite`, so a given `--seed` reproduces the run.

use clap::ValueEnum;
use rand::Rng;
use rayon::prelude::*;
use tspsdp::circulant::{scheme_eigenvalue, scheme_matrices, verify_scheme_axioms};
use tspsdp::conic::SolverConfig;
use tspsdp::held_karp::{
    cut_weight, dominance_search, full_enumeration_lp, global_min_cut, held_karp_bound, HeldKarpConfig,
};
use tspsdp::instances::{brute_force_tsp, instance_rng, seeded_suite};
use tspsdp::relaxations::{
    build_new_sdp, canonical_point, extendability_check, minor_inequality_check, project_to_cvetkovic, solve_cvetkovic,
    solve_new_sdp, solve_qap_sdp, spanning_tree_minor, NewSdpOptions,
};
use tspsdp::{ExactMatrix, Matrix, Result};

use crate::report::{ConfigEcho, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Scheme,
    Soundness,
    Dominance,
    Qap,
    HeldKarp,
    MinCut,
    Minor,
    Extension,
}

impl Suite {
    const ALL: [Suite; 8] = [
        Suite::Scheme,
        Suite::Soundness,
        Suite::Dominance,
        Suite::Qap,
        Suite::HeldKarp,
        Suite::MinCut,
        Suite::Minor,
        Suite::Extension,
    ];

    fn name(self) -> &'static str {
        match self {
            Suite::Scheme => "scheme",
            Suite::Soundness => "soundness",
            Suite::Dominance => "dominance",
            Suite::Qap => "qap",
            Suite::HeldKarp => "held-karp",
            Suite::MinCut => "min-cut",
            Suite::Minor => "minor",
            Suite::Extension => "extension",
        }
    }
}

/// Outcome of one suite: the number of cases and the first failure.
struct Outcome {
    cases: usize,
    failure: Option<String>,
}

impl Outcome {
    fn from_cases(results: Vec<Result<Option<String>>>) -> Outcome {
        let cases = results.len();
        let failure = results.into_iter().find_map(|r| match r {
            Ok(None) => None,
            Ok(Some(msg)) => Some(msg),
            Err(e) => Some(e.to_string()),
        });
        Outcome { cases, failure }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

fn scheme() -> Outcome {
    let results = (4..=32usize)
        .into_par_iter()
        .map(|n| -> Result<Option<String>> {
            let family = scheme_matrices::<i64>(n)?;
            let axioms = verify_scheme_axioms(family.matrices())?;
            if !axioms.all_pass() {
                return Ok(Some(format!("n = {n}: axioms {axioms:?}")));
            }
            for k in 0..=family.d() {
                let a: Matrix = family.matrix(k).map(|v| v as f64);
                let mut numeric: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
                let mut analytic: Vec<f64> = (0..n).map(|m| scheme_eigenvalue::<f64>(n, m, k)).collect();
                numeric.sort_by(f64::total_cmp);
                analytic.sort_by(f64::total_cmp);
                let err = numeric
                    .iter()
                    .zip(&analytic)
                    .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
                if err > 1e-9 {
                    return Ok(Some(format!("n = {n}, k = {k}: eigenvalue error {err:.2e}")));
                }
            }
            Ok(None)
        })
        .collect();
    Outcome::from_cases(results)
}

fn soundness(seed: u64, count: usize, cfg: &SolverConfig) -> Outcome {
    let mut results: Vec<Result<Option<String>>> = (4..=32usize)
        .into_par_iter()
        .map(|n| {
            let d = tspsdp::DistanceMatrix::uniform(n)?;
            let sdp = build_new_sdp(&d)?;
            let point = canonical_point(n)?.to_f64();
            let r = sdp.program().residuals(&sdp.embed(&point))?;
            let worst = r.equality_inf_norm().max(r.max_cone_violation());
            Ok((worst > 1e-9).then(|| format!("canonical point n = {n}: residual {worst:.2e}")))
        })
        .collect();
    let suite = seeded_suite(seed, &[5, 6, 7, 8, 9], count);
    results.extend(
        suite
            .par_iter()
            .map(|d| -> Result<Option<String>> {
                let opt = brute_force_tsp(d)?.length;
                let bounds = [
                    solve_cvetkovic(d, cfg)?.bound.rounded,
                    solve_new_sdp(d, NewSdpOptions::default(), cfg)?.bound.rounded,
                    held_karp_bound(
                        d,
                        &HeldKarpConfig {
                            solver: *cfg,
                            ..HeldKarpConfig::default()
                        },
                    )?
                    .bound
                    .rounded,
                ];
                Ok(bounds
                    .iter()
                    .any(|&b| b > opt)
                    .then(|| format!("n = {}: bounds {bounds:?} exceed optimum {opt}", d.n())))
            })
            .collect::<Vec<_>>(),
    );
    Outcome::from_cases(results)
}

fn dominance(seed: u64, count: usize, cfg: &SolverConfig) -> Outcome {
    let suite = seeded_suite(seed, &[5, 6, 7, 8, 9, 10], count);
    let results = suite
        .par_iter()
        .map(|d| -> Result<Option<String>> {
            let c = solve_cvetkovic(d, cfg)?.bound.raw;
            let s = solve_new_sdp(d, NewSdpOptions::default(), cfg)?;
            if s.bound.raw < c - 1e-6 * (1.0 + c.abs()) {
                return Ok(Some(format!(
                    "n = {}: scheme {} below single-matrix {c}",
                    d.n(),
                    s.bound.raw
                )));
            }
            let proj = project_to_cvetkovic(&s.point)?;
            Ok((proj.lmi_min_eigenvalue < -1e-6).then(|| {
                format!(
                    "n = {}: projected LMI eigenvalue {:.2e}",
                    d.n(),
                    proj.lmi_min_eigenvalue
                )
            }))
        })
        .collect();
    Outcome::from_cases(results)
}

fn qap(seed: u64, count: usize, cfg: &SolverConfig) -> Outcome {
    let suite = seeded_suite(seed, &[5, 6], count);
    let results = suite
        .par_iter()
        .map(|d| -> Result<Option<String>> {
            let s = solve_new_sdp(d, NewSdpOptions::default(), cfg)?.bound.raw;
            let (q, _, _) = solve_qap_sdp(d, cfg)?;
            Ok((rel(q.raw, s) > 1e-4).then(|| format!("n = {}: lifted {} vs scheme {s}", d.n(), q.raw)))
        })
        .collect();
    Outcome::from_cases(results)
}

fn held_karp(seed: u64, count: usize, cfg: &SolverConfig) -> Outcome {
    let suite = seeded_suite(seed, &[5, 6, 7, 8, 9, 10], count);
    let hk_cfg = HeldKarpConfig {
        solver: *cfg,
        ..HeldKarpConfig::default()
    };
    let results = suite
        .par_iter()
        .map(|d| -> Result<Option<String>> {
            let cp = held_karp_bound(d, &hk_cfg)?;
            let full = full_enumeration_lp(d, cfg)?;
            let monotone = cp.history.windows(2).all(|w| w[1] >= w[0] - 1e-6 * (1.0 + w[0].abs()));
            if !monotone {
                return Ok(Some(format!("n = {}: LP values decreased {:?}", d.n(), cp.history)));
            }
            Ok((rel(cp.bound.raw, full.bound.raw) > 1e-7).then(|| {
                format!(
                    "n = {}: cutting plane {} vs enumeration {}",
                    d.n(),
                    cp.bound.raw,
                    full.bound.raw
                )
            }))
        })
        .collect();
    Outcome::from_cases(results)
}

/// Seeded nonnegative weights with roughly a third of the pairs absent.
fn random_weights(n: usize, seed: u64) -> Matrix {
    let mut rng = instance_rng(seed, n);
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if rng.gen_bool(1.0 / 3.0) {
                0.0
            } else {
                f64::from(rng.gen_range(1..=9u8))
            };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

fn min_cut(seed: u64, count: usize) -> Outcome {
    let cases: Vec<(usize, u64)> = (2..=12usize)
        .flat_map(|n| (0..count as u64).map(move |k| (n, seed.wrapping_add(k))))
        .collect();
    let results = cases
        .par_iter()
        .map(|&(n, s)| -> Result<Option<String>> {
            let w = random_weights(n, s);
            let cut = global_min_cut(&w)?;
            let best = (1u32..(1 << (n - 1)))
                .map(|mask| {
                    let shore: Vec<usize> = (0..n - 1).filter(|&b| mask & (1 << b) != 0).collect();
                    cut_weight(&w, &shore)
                })
                .fold(f64::INFINITY, f64::min);
            Ok(((cut.weight - best).abs() > 1e-9).then(|| format!("n = {n}: {} vs exhaustive {best}", cut.weight)))
        })
        .collect();
    Outcome::from_cases(results)
}

fn minor(seed: u64, count: usize, cfg: &SolverConfig) -> Outcome {
    let mut results: Vec<Result<Option<String>>> = (3..=20usize)
        .map(|n| {
            let c = ExactMatrix::from_fn(n, n, |i, j| i64::from((i + 1) % n == j || (j + 1) % n == i));
            let t = spanning_tree_minor(&c)?;
            Ok((t != n as i128).then(|| format!("cycle {n}: {t} spanning trees")))
        })
        .collect();
    results.extend((3..=8usize).map(|n| {
        let k = ExactMatrix::from_fn(n, n, |i, j| i64::from(i != j));
        let t = spanning_tree_minor(&k)?;
        let cayley = (n as i128).pow(n as u32 - 2);
        Ok((t != cayley).then(|| format!("complete {n}: {t} spanning trees, Cayley {cayley}")))
    }));
    let suite = seeded_suite(seed, &[6, 7, 8], count);
    results.extend(
        suite
            .par_iter()
            .map(|d| -> Result<Option<String>> {
                let c = solve_cvetkovic(d, cfg)?;
                let s = solve_new_sdp(d, NewSdpOptions::default(), cfg)?;
                let checks = [minor_inequality_check(&c.x), minor_inequality_check(s.point.block(1))];
                Ok(checks
                    .iter()
                    .find(|m| !m.pass)
                    .map(|m| format!("n = {}: minor {} below n", d.n(), m.value)))
            })
            .collect::<Vec<_>>(),
    );
    Outcome::from_cases(results)
}

fn extension(seed: u64, count: usize, cfg: &SolverConfig) -> Outcome {
    let mut results: Vec<Result<Option<String>>> = (5..=8usize)
        .into_par_iter()
        .map(|n| {
            let c = Matrix::from_fn(n, n, |i, j| f64::from((i + 1) % n == j || (j + 1) % n == i));
            let e = extendability_check(&c, cfg)?;
            Ok((!e.is_feasible()).then(|| format!("cycle {n} does not extend")))
        })
        .collect();
    let suite = seeded_suite(seed, &[5, 6, 7], count);
    results.extend(
        suite
            .par_iter()
            .map(|d| -> Result<Option<String>> {
                let s = solve_new_sdp(d, NewSdpOptions::default(), cfg)?;
                let x = s.point.block(1);
                let n = x.nrows();
                let x = Matrix::from_fn(n, n, |i, j| {
                    if i == j {
                        0.0
                    } else {
                        (0.5 * (x[(i, j)] + x[(j, i)])).clamp(0.0, 1.0)
                    }
                });
                let e = extendability_check(&x, cfg)?;
                Ok((!e.is_feasible()).then(|| format!("n = {n}: optimal first block does not extend")))
            })
            .collect::<Vec<_>>(),
    );
    results.push(dominance_search(seed, 8, count, 2, cfg).map(|s| {
        let w = s.witnesses().count();
        (s.records.len() != count).then(|| {
            format!(
                "search finished {} of {count} instances ({w} witnesses)",
                s.records.len()
            )
        })
    }));
    Outcome::from_cases(results)
}

pub fn run(only: &[Suite], seed: u64, count: usize, cfg: &SolverConfig, jobs: usize) -> RunReport {
    let mut report = RunReport::new("verify", ConfigEcho::new(cfg, jobs, Some(seed)));
    let suites: Vec<Suite> = Suite::ALL
        .into_iter()
        .filter(|s| only.is_empty() || only.contains(s))
        .collect();
    for suite in suites {
        let out = match suite {
            Suite::Scheme => scheme(),
            Suite::Soundness => soundness(seed, count, cfg),
            Suite::Dominance => dominance(seed, count, cfg),
            Suite::Qap => qap(seed, count, cfg),
            Suite::HeldKarp => held_karp(seed, count, cfg),
            Suite::MinCut => min_cut(seed, count),
            Suite::Minor => minor(seed, count, cfg),
            Suite::Extension => extension(seed, count, cfg),
        };
        let detail = match &out.failure {
            None => format!("{} cases", out.cases),
            Some(msg) => format!("{} cases; first failure: {msg}", out.cases),
        };
        report.push_check(suite.name(), out.failure.is_none(), detail);
    }
    report
}
