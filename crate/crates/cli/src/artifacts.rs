//! CSV and JSON writers. Every file starts with the config hash and master
//! seed; CSV files carry them as `#` comment lines above the header.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use seqbin_core::sim::SimReport;

use crate::CliError;

#[derive(Clone, Copy, Debug)]
pub struct Stamp<'a> {
    pub config_sha256: &'a str,
    pub master_seed: u64,
}

impl Stamp<'_> {
    fn csv_preamble(&self) -> String {
        format!(
            "# config_sha256={}\n# master_seed={}\n",
            self.config_sha256, self.master_seed
        )
    }
}

/// Shortest round-trip decimal; `inf`, `-inf` and `nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn pe_csv(report: &SimReport, stamp: Stamp<'_>) -> String {
    let mut out = stamp.csv_preamble();
    out.push_str("d,trials,errors,pe,log2_pe\n");
    for row in report.pe_curve.iter().filter(|r| r.samples > 0) {
        let pe = row.pe.expect("samples > 0");
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.d,
            row.trials_observed,
            row.error_count,
            num(pe),
            num(pe.log2())
        );
    }
    out
}

pub fn comp_csv(report: &SimReport, stamp: Stamp<'_>) -> String {
    let mut out = stamp.csv_preamble();
    out.push_str("n,ccdf,log2_n,log2_ccdf\n");
    for p in &report.comp_ccdf {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.n,
            num(p.ccdf),
            num((p.n as f64).log2()),
            num(p.ccdf.log2())
        );
    }
    out
}

/// A table with a header and rows of optional numbers.
pub fn table_csv(header: &[&str], rows: &[Vec<Option<f64>>], stamp: Stamp<'_>) -> String {
    let mut out = stamp.csv_preamble();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| opt(*c)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(num(1e-20), "0.00000000000000000001");
        let x = 0.123_456_789_012_345_67_f64;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn preamble_and_header() {
        let stamp = Stamp {
            config_sha256: "abc",
            master_seed: 9,
        };
        let csv = table_csv(&["a", "b"], &[vec![Some(1.0), None]], stamp);
        assert_eq!(csv, "# config_sha256=abc\n# master_seed=9\na,b\n1,\n");
    }
}
