//! Plain aligned text tables. Color only on a terminal with `NO_COLOR`
//! unset or empty.

use std::io::IsTerminal;

use tspsdp::Method;

use crate::compute::METHOD_ORDER;
use crate::report::RunReport;

pub fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

fn paint(text: &str, pass: bool, color: bool) -> String {
    if !color {
        return text.to_string();
    }
    let code = if pass { 32 } else { 31 };
    format!("\x1b[{code}m{text}\x1b[0m")
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn header_name(m: Method) -> &'static str {
    match m {
        Method::Cvetkovic => "Cvetkovic",
        Method::NewSdp => "new SDP",
        Method::HeldKarp => "Held-Karp",
        Method::QapSdp => "QAP SDP",
    }
}

/// One row per instance; columns follow [`METHOD_ORDER`] restricted to the
/// methods present, then the optimum. `raw` shows unrounded values.
pub fn render_table(report: &RunReport, color: bool, raw: bool) -> String {
    let methods: Vec<Method> = METHOD_ORDER
        .into_iter()
        .filter(|m| report.instances.iter().any(|i| i.bound(*m).is_some()))
        .collect();
    let mut header = vec!["instance".to_string(), "n".to_string()];
    header.extend(methods.iter().map(|m| header_name(*m).to_string()));
    header.push("optimum".to_string());

    // (plain text, colored text) per cell so widths ignore escape codes.
    let mut rows: Vec<Vec<(String, String)>> = Vec::new();
    for inst in &report.instances {
        let mut row = vec![
            (inst.name.clone(), inst.name.clone()),
            (inst.n.to_string(), inst.n.to_string()),
        ];
        for &m in &methods {
            let cell = match inst.bound(m) {
                None => ("-".to_string(), "-".to_string()),
                Some(b) => {
                    let mut text = if raw {
                        format!("{:.3}", b.bound.raw)
                    } else {
                        fmt_value(b.bound.rounded)
                    };
                    if !b.converged {
                        text.push('*');
                    }
                    match (b.pass, b.expected) {
                        (Some(pass), Some(exp)) => {
                            let mark = if pass {
                                "ok".to_string()
                            } else {
                                format!("FAIL, want {}", fmt_value(exp))
                            };
                            let plain = format!("{text} ({mark})");
                            let painted = format!("{text} ({})", paint(&mark, pass, color));
                            (plain, painted)
                        }
                        _ => (text.clone(), text),
                    }
                }
            };
            row.push(cell);
        }
        let opt = inst.optimum.as_ref().map_or("-".to_string(), |o| fmt_value(o.length));
        row.push((opt.clone(), opt));
        rows.push(row);
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (k, (plain, _)) in row.iter().enumerate() {
            widths[k] = widths[k].max(plain.chars().count());
        }
    }
    let mut out = String::new();
    let line: Vec<String> = header
        .iter()
        .enumerate()
        .map(|(k, h)| format!("{h:<w$}", w = widths[k]))
        .collect();
    out.push_str(line.join("  ").trim_end());
    out.push('\n');
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(k, (plain, painted))| {
                let pad = widths[k] - plain.chars().count();
                format!("{painted}{}", " ".repeat(pad))
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    if report.instances.iter().flat_map(|i| &i.bounds).any(|b| !b.converged) {
        out.push_str("* solver did not reach the requested accuracy\n");
    }
    for inst in &report.instances {
        for s in &inst.skipped {
            out.push_str(&format!("{}: {} skipped ({})\n", inst.name, s.method, s.reason));
        }
    }
    out
}

pub fn render_checks(report: &RunReport, color: bool) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let mark = if c.pass { "pass" } else { "FAIL" };
        out.push_str(&format!("{} {}: {}\n", paint(mark, c.pass, color), c.name, c.detail));
    }
    out
}

pub fn render_checks_summary(report: &RunReport, color: bool) -> String {
    let total = report.checks.len();
    let passed = report.checks.iter().filter(|c| c.pass).count();
    let text = format!("{passed}/{total} cells match");
    format!("{}\n", paint(&text, passed == total, color))
}
