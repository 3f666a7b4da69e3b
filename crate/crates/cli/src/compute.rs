//! Per-instance evaluation shared by the commands.

use tspsdp::conic::{SolveStatus, SolverConfig};
use tspsdp::held_karp::{held_karp_bound, HeldKarpConfig};
use tspsdp::instances::{brute_force_tsp, BRUTE_FORCE_CAP};
use tspsdp::relaxations::{
    minor_inequality_check, solve_cvetkovic, solve_new_sdp, solve_qap_sdp, NewSdpOptions, QAP_DEFAULT_CAP,
};
use tspsdp::{DistanceMatrix, Matrix, Method, Result};

use crate::report::{InstanceRecord, MethodRecord, MinorRecord, OptimumRecord, SkipRecord};

/// Column order of every table: the single-matrix SDP, the scheme SDP, the
/// subtour LP, then the lifted QAP SDP.
pub const METHOD_ORDER: [Method; 4] = [Method::Cvetkovic, Method::NewSdp, Method::HeldKarp, Method::QapSdp];

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub solver: SolverConfig,
    pub row_sums: bool,
    /// Attach a brute-force optimum for `n` up to this order.
    pub brute_force_cap: usize,
    /// Record the lifted QAP SDP as skipped above its size cap instead of
    /// failing with a capacity error.
    pub skip_oversized_qap: bool,
}

impl Settings {
    pub fn new(solver: SolverConfig) -> Self {
        Settings {
            solver,
            row_sums: true,
            brute_force_cap: BRUTE_FORCE_CAP,
            skip_oversized_qap: true,
        }
    }
}

fn record(bound: tspsdp::BoundResult, converged: bool) -> MethodRecord {
    MethodRecord {
        bound,
        converged,
        expected: None,
        pass: None,
    }
}

fn minor(method: Method, x: &Matrix) -> MinorRecord {
    let m = minor_inequality_check(x);
    MinorRecord {
        method,
        value: m.value,
        pass: m.pass,
        exact: m.exact,
    }
}

/// Runs `methods` (in [`METHOD_ORDER`]) on one instance.
pub fn evaluate_instance(
    name: &str,
    d: &DistanceMatrix,
    methods: &[Method],
    settings: &Settings,
) -> Result<InstanceRecord> {
    let n = d.n();
    let mut rec = InstanceRecord {
        name: name.to_string(),
        n,
        bounds: Vec::new(),
        skipped: Vec::new(),
        minor: Vec::new(),
        optimum: None,
    };
    let cfg = &settings.solver;
    for method in METHOD_ORDER.into_iter().filter(|m| methods.contains(m)) {
        match method {
            Method::Cvetkovic => {
                let s = solve_cvetkovic(d, cfg)?;
                rec.minor.push(minor(method, &s.x));
                let ok = s.bound.solve.converged(cfg);
                rec.bounds.push(record(s.bound, ok));
            }
            Method::NewSdp => {
                let s = solve_new_sdp(
                    d,
                    NewSdpOptions {
                        row_sums: settings.row_sums,
                    },
                    cfg,
                )?;
                rec.minor.push(minor(method, s.point.block(1)));
                let ok = s.bound.solve.converged(cfg);
                rec.bounds.push(record(s.bound, ok));
            }
            Method::HeldKarp => {
                let hk_cfg = HeldKarpConfig {
                    solver: *cfg,
                    ..HeldKarpConfig::default()
                };
                let s = held_karp_bound(d, &hk_cfg)?;
                rec.minor.push(minor(method, &s.x));
                let ok = s.converged && s.bound.solve.status != SolveStatus::IterationLimit;
                rec.bounds.push(record(s.bound, ok));
            }
            Method::QapSdp => {
                if n > QAP_DEFAULT_CAP && settings.skip_oversized_qap {
                    rec.skipped.push(SkipRecord {
                        method,
                        reason: format!("lifted program limited to n <= {QAP_DEFAULT_CAP}"),
                    });
                    continue;
                }
                let (bound, _, _) = solve_qap_sdp(d, cfg)?;
                let ok = bound.solve.converged(cfg);
                rec.bounds.push(record(bound, ok));
            }
        }
    }
    if n <= settings.brute_force_cap && n >= 3 {
        let opt = brute_force_tsp(d)?;
        rec.optimum = Some(OptimumRecord {
            length: opt.length,
            source: "brute-force",
            tour: Some(opt.tour),
        });
    }
    Ok(rec)
}
