//! Machine-readable run reports. The JSON layout is described by
//! `docs/run-report.schema.json`; bump `SCHEMA_VERSION` on any change.

use std::io::Write;

use serde::Serialize;
use tspsdp::bound::BoundResult;
use tspsdp::conic::SolverConfig;
use tspsdp::Method;

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed CSV column order.
pub const CSV_HEADER: [&str; 11] = [
    "instance",
    "n",
    "method",
    "raw",
    "rounded",
    "status",
    "converged",
    "iterations",
    "seconds",
    "expected",
    "pass",
];

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ConfigEcho {
    pub fn new(solver: &SolverConfig, jobs: usize, seed: Option<u64>) -> Self {
        ConfigEcho {
            gap_tolerance: solver.gap_tolerance,
            feasibility_tolerance: solver.feasibility_tolerance,
            max_iterations: solver.max_iterations,
            jobs,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodRecord {
    #[serde(flatten)]
    pub bound: BoundResult,
    /// Solver optimal, and for the cutting-plane LP no violated cut left.
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinorRecord {
    pub method: Method,
    pub value: f64,
    pub pass: bool,
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkipRecord {
    pub method: Method,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimumRecord {
    pub length: f64,
    /// `brute-force` or `reference`.
    pub source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tour: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceRecord {
    pub name: String,
    pub n: usize,
    pub bounds: Vec<MethodRecord>,
    pub skipped: Vec<SkipRecord>,
    pub minor: Vec<MinorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<OptimumRecord>,
}

impl InstanceRecord {
    pub fn bound(&self, method: Method) -> Option<&MethodRecord> {
        self.bounds.iter().find(|b| b.bound.method == method)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: ConfigEcho,
    pub instances: Vec<InstanceRecord>,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(command: &'static str, config: ConfigEcho) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool: "tspsdp",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            instances: Vec::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn push_check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.passed &= pass;
        self.checks.push(CheckRecord {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn all_converged(&self) -> bool {
        self.instances.iter().flat_map(|i| &i.bounds).all(|b| b.converged)
    }

    pub fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for inst in &self.instances {
            for b in &inst.bounds {
                let opt = |v: Option<String>| v.unwrap_or_default();
                w.write_record([
                    inst.name.clone(),
                    inst.n.to_string(),
                    b.bound.method.tag().to_string(),
                    format!("{:.9}", b.bound.raw),
                    b.bound.rounded.to_string(),
                    b.bound.solve.status.to_string(),
                    b.converged.to_string(),
                    b.bound.solve.iterations.to_string(),
                    format!("{:.3}", b.bound.seconds),
                    opt(b.expected.map(|v| v.to_string())),
                    opt(b.pass.map(|v| v.to_string())),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
