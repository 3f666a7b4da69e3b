//! TSPLIB reader for the explicit formats `FULL_MATRIX`, `LOWER_DIAG_ROW`
//! and `UPPER_ROW`, and for `EUC_2D` coordinates.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::DistanceMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unsupported {field}: {value}")]
    Unsupported { field: &'static str, value: String },
    #[error("missing header field {0}")]
    MissingField(&'static str),
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("{section} ended after {found} of {expected} values (token {found})")]
    Truncated {
        section: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{section} token {index} is not a number: {token:?}")]
    BadNumber {
        section: &'static str,
        index: usize,
        token: String,
    },
    #[error("{section} has {found} values, more than the {expected} expected")]
    TrailingData {
        section: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid distances: {0}")]
    InvalidDistances(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFormat {
    FullMatrix,
    LowerDiagRow,
    UpperRow,
    Euc2d,
}

impl WeightFormat {
    pub fn tsplib_name(&self) -> &'static str {
        match self {
            WeightFormat::FullMatrix => "FULL_MATRIX",
            WeightFormat::LowerDiagRow => "LOWER_DIAG_ROW",
            WeightFormat::UpperRow => "UPPER_ROW",
            WeightFormat::Euc2d => "EUC_2D",
        }
    }

    /// Number of payload values for `n` cities.
    pub fn payload_len(&self, n: usize) -> usize {
        match self {
            WeightFormat::FullMatrix => n * n,
            WeightFormat::LowerDiagRow => n * (n + 1) / 2,
            WeightFormat::UpperRow => n * (n - 1) / 2,
            WeightFormat::Euc2d => 3 * n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsplibInstance {
    pub name: String,
    pub comment: Option<String>,
    pub dimension: usize,
    pub format: WeightFormat,
    /// Section values in file order; node records are `index x y`.
    pub payload: Vec<f64>,
    pub distances: DistanceMatrix,
}

/// TSPLIB `nint`: round half up.
pub fn nint(x: f64) -> f64 {
    (x + 0.5).floor()
}

pub fn read_tsplib(path: impl AsRef<Path>) -> Result<TsplibInstance, ParseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_tsplib(&text)
}

fn is_section_keyword(tok: &str) -> bool {
    tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
}

pub fn parse_tsplib(text: &str) -> Result<TsplibInstance, ParseError> {
    let mut name = None;
    let mut comment: Option<String> = None;
    let mut dimension = None;
    let mut weight_type = None;
    let mut weight_format = None;
    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    let mut current: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        if let Some(idx) = current {
            if !is_section_keyword(first) {
                sections[idx].1.extend(line.split_whitespace().map(str::to_owned));
                continue;
            }
            current = None;
        }
        let (key, value) = match line.split_once(':') {
            Some((k, v)) => (k.trim().to_ascii_uppercase(), Some(v.trim().to_owned())),
            None => (first.to_ascii_uppercase(), None),
        };
        match (key.as_str(), value) {
            ("EOF", _) => break,
            (k, None) if k.ends_with("_SECTION") => {
                sections.push((
                    k.to_owned(),
                    line.split_whitespace().skip(1).map(str::to_owned).collect(),
                ));
                current = Some(sections.len() - 1);
            }
            ("NAME", Some(v)) => name = Some(v),
            ("COMMENT", Some(v)) => {
                comment = Some(match comment {
                    Some(c) => format!("{c} {v}"),
                    None => v,
                })
            }
            ("TYPE", Some(v)) => {
                if !v.eq_ignore_ascii_case("TSP") {
                    return Err(ParseError::Unsupported {
                        field: "TYPE",
                        value: v,
                    });
                }
            }
            ("DIMENSION", Some(v)) => {
                dimension = Some(v.parse::<usize>().map_err(|_| ParseError::Header {
                    line: lineno + 1,
                    message: format!("bad DIMENSION {v:?}"),
                })?)
            }
            ("EDGE_WEIGHT_TYPE", Some(v)) => weight_type = Some(v.to_ascii_uppercase()),
            ("EDGE_WEIGHT_FORMAT", Some(v)) => weight_format = Some(v.to_ascii_uppercase()),
            ("DISPLAY_DATA_TYPE" | "NODE_COORD_TYPE" | "CAPACITY", Some(_)) => {}
            (k, _) => {
                return Err(ParseError::Header {
                    line: lineno + 1,
                    message: format!("unrecognized keyword {k}"),
                })
            }
        }
    }

    let dimension = dimension.ok_or(ParseError::MissingField("DIMENSION"))?;
    if dimension == 0 {
        return Err(ParseError::InvalidDistances("DIMENSION must be positive".into()));
    }
    let weight_type = weight_type.ok_or(ParseError::MissingField("EDGE_WEIGHT_TYPE"))?;
    let (format, section_name, key) = match weight_type.as_str() {
        "EXPLICIT" => {
            let f = weight_format.ok_or(ParseError::MissingField("EDGE_WEIGHT_FORMAT"))?;
            let format = match f.as_str() {
                "FULL_MATRIX" => WeightFormat::FullMatrix,
                "LOWER_DIAG_ROW" => WeightFormat::LowerDiagRow,
                "UPPER_ROW" => WeightFormat::UpperRow,
                _ => {
                    return Err(ParseError::Unsupported {
                        field: "EDGE_WEIGHT_FORMAT",
                        value: f,
                    })
                }
            };
            (format, "EDGE_WEIGHT_SECTION", "EDGE_WEIGHT_SECTION")
        }
        "EUC_2D" => (WeightFormat::Euc2d, "NODE_COORD_SECTION", "NODE_COORD_SECTION"),
        _ => {
            return Err(ParseError::Unsupported {
                field: "EDGE_WEIGHT_TYPE",
                value: weight_type,
            })
        }
    };
    let tokens = sections
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, t)| t.as_slice())
        .ok_or(ParseError::MissingField(section_name))?;
    let expected = format.payload_len(dimension);
    if tokens.len() < expected {
        return Err(ParseError::Truncated {
            section: section_name,
            expected,
            found: tokens.len(),
        });
    }
    if tokens.len() > expected {
        return Err(ParseError::TrailingData {
            section: section_name,
            expected,
            found: tokens.len(),
        });
    }
    let payload = tokens
        .iter()
        .enumerate()
        .map(|(index, t)| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::BadNumber {
                    section: section_name,
                    index,
                    token: t.clone(),
                })
        })
        .collect::<Result<Vec<f64>, _>>()?;

    let n = dimension;
    let mut m = DMatrix::<f64>::zeros(n, n);
    match format {
        WeightFormat::FullMatrix => {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = payload[i * n + j];
                }
            }
        }
        WeightFormat::LowerDiagRow => {
            let mut k = 0;
            for i in 0..n {
                for j in 0..=i {
                    m[(i, j)] = payload[k];
                    m[(j, i)] = payload[k];
                    k += 1;
                }
            }
        }
        WeightFormat::UpperRow => {
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    m[(i, j)] = payload[k];
                    m[(j, i)] = payload[k];
                    k += 1;
                }
            }
        }
        WeightFormat::Euc2d => {
            let xy: Vec<(f64, f64)> = payload.chunks(3).map(|r| (r[1], r[2])).collect();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (dx, dy) = (xy[i].0 - xy[j].0, xy[i].1 - xy[j].1);
                        m[(i, j)] = nint((dx * dx + dy * dy).sqrt());
                    }
                }
            }
        }
    }
    let distances = DistanceMatrix::new(m).map_err(|e| ParseError::InvalidDistances(e.to_string()))?;
    Ok(TsplibInstance {
        name: name.unwrap_or_default(),
        comment,
        dimension,
        format,
        payload,
        distances,
    })
}

/// Writes `d` as an `EXPLICIT` / `FULL_MATRIX` instance.
pub fn to_tsplib_full_matrix(name: &str, d: &DistanceMatrix) -> String {
    let n = d.n();
    let mut out = String::new();
    writeln!(out, "NAME: {name}").unwrap();
    writeln!(out, "TYPE: TSP").unwrap();
    writeln!(out, "DIMENSION: {n}").unwrap();
    writeln!(out, "EDGE_WEIGHT_TYPE: EXPLICIT").unwrap();
    writeln!(out, "EDGE_WEIGHT_FORMAT: FULL_MATRIX").unwrap();
    writeln!(out, "EDGE_WEIGHT_SECTION").unwrap();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", d.get(i, j))).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    writeln!(out, "EOF").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "NAME: tiny3\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\n\
        EDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 2\n1 0 3\n2 3 0\nEOF\n";

    #[test]
    fn full_matrix_tiny() {
        let inst = parse_tsplib(TINY).unwrap();
        assert_eq!(inst.dimension, 3);
        assert_eq!(inst.name, "tiny3");
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0]);
        assert_eq!(inst.distances.matrix(), &expected);
    }

    #[test]
    fn keywords_are_case_insensitive_and_wrapping_is_ignored() {
        let text = "name : t\ndimension: 4\nedge_weight_type : EXPLICIT\nEdge_Weight_Format: UPPER_ROW\n\
            EDGE_WEIGHT_SECTION\n1 2\n3 4 5\n 6\n";
        let inst = parse_tsplib(text).unwrap();
        assert_eq!(inst.format, WeightFormat::UpperRow);
        assert_eq!(inst.distances.get(0, 3), 3.0);
        assert_eq!(inst.distances.get(2, 3), 6.0);
        assert_eq!(inst.distances.get(3, 1), 5.0);
    }

    #[test]
    fn lower_diag_row_layout() {
        let text = "DIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: LOWER_DIAG_ROW\n\
            EDGE_WEIGHT_SECTION\n0 7 0 8 9 0\nEOF";
        let d = parse_tsplib(text).unwrap().distances;
        assert_eq!(d.get(0, 1), 7.0);
        assert_eq!(d.get(2, 0), 8.0);
        assert_eq!(d.get(1, 2), 9.0);
    }

    #[test]
    fn euc_2d_uses_nearest_integer() {
        let text = "DIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 4\n3 1 1\nEOF\n";
        let d = parse_tsplib(text).unwrap().distances;
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(0, 2), 1.0);
        assert_eq!(d.get(1, 2), 4.0);
        assert_eq!(nint(2.5), 3.0);
    }

    #[test]
    fn geo_is_unsupported() {
        let text = "DIMENSION: 3\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n1 0 0\n2 3 4\n3 1 1\n";
        match parse_tsplib(text) {
            Err(ParseError::Unsupported { value, .. }) => assert_eq!(value, "GEO"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncation_reports_position() {
        let text = "DIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\n\
            EDGE_WEIGHT_SECTION\n0 1 2 1 0\nEOF\n";
        assert_eq!(
            parse_tsplib(text),
            Err(ParseError::Truncated {
                section: "EDGE_WEIGHT_SECTION",
                expected: 9,
                found: 5
            })
        );
    }

    #[test]
    fn bad_token_is_reported() {
        let text = "DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: UPPER_ROW\nEDGE_WEIGHT_SECTION\n1x\n";
        assert!(matches!(
            parse_tsplib(text),
            Err(ParseError::Header { .. }) | Err(ParseError::BadNumber { .. })
        ));
    }

    #[test]
    fn display_data_is_skipped() {
        let text = "DIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: UPPER_ROW\n\
            DISPLAY_DATA_TYPE: TWOD_DISPLAY\nEDGE_WEIGHT_SECTION\n1 2 3\nDISPLAY_DATA_SECTION\n1 0 0\n2 1 1\n3 2 2\nEOF\n";
        assert_eq!(parse_tsplib(text).unwrap().distances.get(1, 2), 3.0);
    }

    #[test]
    fn asymmetric_full_matrix_is_rejected() {
        let text =
            "DIMENSION: 2\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 2 0\n";
        assert!(matches!(parse_tsplib(text), Err(ParseError::InvalidDistances(_))));
    }

    #[test]
    fn full_matrix_round_trip() {
        let inst = parse_tsplib(TINY).unwrap();
        let back = parse_tsplib(&to_tsplib_full_matrix("tiny3", &inst.distances)).unwrap();
        assert_eq!(back.distances, inst.distances);
    }
}
