use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::conic::{SolveReport, SolveStatus, SolverConfig};

/// Slack subtracted before rounding an integral bound up.
pub const ROUNDING_SLACK: f64 = 1e-6;

/// A stalled solve whose gap and residuals are within this multiple of the
/// requested tolerances still counts as converged.
pub const STALL_ACCEPT_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cvetkovic,
    NewSdp,
    HeldKarp,
    QapSdp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cvetkovic, Method::NewSdp, Method::HeldKarp, Method::QapSdp];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Cvetkovic => "cvetkovic",
            Method::NewSdp => "new-sdp",
            Method::HeldKarp => "held-karp",
            Method::QapSdp => "qap-sdp",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Solver diagnostics carried by a [`BoundResult`]; the points are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SolveSummary {
    /// Optimal, or stalled within [`STALL_ACCEPT_FACTOR`] of the tolerances
    /// in `config`.
    pub fn converged(&self, config: &SolverConfig) -> bool {
        match self.status {
            SolveStatus::Optimal => true,
            SolveStatus::SlowProgress => {
                self.gap <= STALL_ACCEPT_FACTOR * config.gap_tolerance
                    && self.primal_residual.max(self.dual_residual)
                        <= STALL_ACCEPT_FACTOR * config.feasibility_tolerance
            }
            _ => false,
        }
    }
}

impl From<&SolveReport> for SolveSummary {
    fn from(r: &SolveReport) -> Self {
        SolveSummary {
            status: r.status,
            primal_objective: r.primal_objective,
            dual_objective: r.dual_objective,
            gap: r.gap,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            iterations: r.iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub method: Method,
    pub raw: f64,
    /// `ceil(raw - ROUNDING_SLACK)` for integral data, otherwise `raw`
    /// rounded to three decimals.
    pub rounded: f64,
    pub integral: bool,
    pub solve: SolveSummary,
    /// Number of LP solves behind the value; 1 for the SDP relaxations.
    pub rounds: usize,
    pub seconds: f64,
}

impl BoundResult {
    pub fn new(
        method: Method,
        raw: f64,
        integral: bool,
        solve: SolveSummary,
        rounds: usize,
        elapsed: Duration,
    ) -> Self {
        BoundResult {
            method,
            raw,
            rounded: round_bound(raw, integral),
            integral,
            solve,
            rounds,
            seconds: elapsed.as_secs_f64(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.solve.status == SolveStatus::Optimal
    }
}

pub fn round_bound(raw: f64, integral: bool) -> f64 {
    if integral {
        (raw - ROUNDING_SLACK).ceil()
    } else {
        (raw * 1000.0).round() / 1000.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stalled_solves_converge_only_near_tolerance() {
        let cfg = SolverConfig::default();
        let mut s = SolveSummary {
            status: SolveStatus::SlowProgress,
            primal_objective: 1.0,
            dual_objective: 1.0,
            gap: 1e-9,
            primal_residual: 5e-8,
            dual_residual: 0.0,
            iterations: 30,
        };
        assert!(s.converged(&cfg));
        s.primal_residual = 2e-7;
        assert!(!s.converged(&cfg));
        s.status = SolveStatus::Optimal;
        assert!(s.converged(&cfg));
        s.status = SolveStatus::IterationLimit;
        s.primal_residual = 0.0;
        assert!(!s.converged(&cfg));
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(round_bound(2006.2, true), 2007.0);
        assert_eq!(round_bound(2007.0000004, true), 2007.0);
        assert_eq!(round_bound(1.62849, false), 1.628);
        assert!(round_bound(5.0, true) >= 5.0 - ROUNDING_SLACK);
    }

    #[test]
    fn tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_tag(m.tag()), Some(m));
        }
    }
}
