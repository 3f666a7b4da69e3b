//! The four TSPLIB rows with their reference rounded bounds.

use std::path::Path;

use rayon::prelude::*;
use tspsdp::conic::SolverConfig;
use tspsdp::instances::read_tsplib;
use tspsdp::{Error, Method};

use crate::compute::{evaluate_instance, Settings};
use crate::report::{ConfigEcho, InstanceRecord, OptimumRecord, RunReport};
use crate::Failure;

pub struct Row {
    pub name: &'static str,
    pub cvetkovic: f64,
    pub new_sdp: f64,
    pub held_karp: f64,
    pub optimum: f64,
}

impl Row {
    pub fn expected(&self, m: Method) -> Option<f64> {
        match m {
            Method::Cvetkovic => Some(self.cvetkovic),
            Method::NewSdp => Some(self.new_sdp),
            Method::HeldKarp => Some(self.held_karp),
            Method::QapSdp => None,
        }
    }
}

pub const ROWS: [Row; 4] = [
    Row {
        name: "gr17",
        cvetkovic: 1810.0,
        new_sdp: 2007.0,
        held_karp: 2085.0,
        optimum: 2085.0,
    },
    Row {
        name: "gr21",
        cvetkovic: 2707.0,
        new_sdp: 2707.0,
        held_karp: 2707.0,
        optimum: 2707.0,
    },
    Row {
        name: "gr24",
        cvetkovic: 1230.0,
        new_sdp: 1271.0,
        held_karp: 1272.0,
        optimum: 1272.0,
    },
    Row {
        name: "bays29",
        cvetkovic: 1948.0,
        new_sdp: 2000.0,
        held_karp: 2014.0,
        optimum: 2020.0,
    },
];

fn evaluate_row(row: &Row, dir: &Path, methods: &[Method], settings: &Settings) -> Result<InstanceRecord, Failure> {
    let path = dir.join(format!("{}.tsp", row.name));
    if !path.is_file() {
        return Err(Failure::Input(format!(
            "missing fixture {} ({})",
            row.name,
            path.display()
        )));
    }
    let inst = read_tsplib(&path).map_err(Error::from)?;
    let mut rec = evaluate_instance(row.name, &inst.distances, methods, settings)?;
    for b in &mut rec.bounds {
        b.expected = row.expected(b.bound.method);
        b.pass = b.expected.map(|e| b.bound.rounded == e);
    }
    rec.optimum = Some(OptimumRecord {
        length: row.optimum,
        source: "reference",
        tour: None,
    });
    Ok(rec)
}

pub fn run(
    dir: &Path,
    skip_bays29: bool,
    skip_held_karp: bool,
    solver: &SolverConfig,
    jobs: usize,
) -> Result<RunReport, Failure> {
    let mut methods = vec![Method::Cvetkovic, Method::NewSdp];
    if !skip_held_karp {
        methods.push(Method::HeldKarp);
    }
    let mut settings = Settings::new(*solver);
    settings.brute_force_cap = 0;
    let rows: Vec<&Row> = ROWS.iter().filter(|r| !(skip_bays29 && r.name == "bays29")).collect();
    // Collecting an indexed parallel iterator keeps the row order.
    let records: Vec<InstanceRecord> = rows
        .par_iter()
        .map(|row| evaluate_row(row, dir, &methods, &settings))
        .collect::<Result<_, _>>()?;
    let mut report = RunReport::new("table1", ConfigEcho::new(solver, jobs, None));
    for rec in records {
        for b in &rec.bounds {
            if let (Some(exp), Some(pass)) = (b.expected, b.pass) {
                report.push_check(
                    format!("{} {}", rec.name, b.bound.method),
                    pass,
                    format!("rounded {} (raw {:.6}), expected {exp}", b.bound.rounded, b.bound.raw),
                );
            }
        }
        report.instances.push(rec);
    }
    Ok(report)
}
