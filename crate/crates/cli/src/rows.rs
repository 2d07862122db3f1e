//! Result rows, the versioned CSV format, and summary reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_LINE: &str = "# maxkcut-lab v1";
pub const COLUMNS: [&str; 8] = ["algorithm", "k", "degree", "n", "p", "seed", "cut_fraction", "wall_time_s"];
/// `n` column of instance-independent rows.
pub const INFINITE_N: &str = "∞";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub k: usize,
    pub degree: usize,
    pub n: String,
    pub p: Option<usize>,
    pub seed: Option<u64>,
    pub cut_fraction: f64,
    pub wall_time_s: f64,
}

impl ResultRow {
    fn sort_key(&self) -> (String, usize, usize, String, Option<usize>, Option<u64>) {
        (self.algorithm.clone(), self.k, self.degree, self.n.clone(), self.p, self.seed)
    }
}

/// Serializes rows sorted by (algorithm, k, degree, n, p, seed).
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then(a.cut_fraction.total_cmp(&b.cut_fraction)));
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &sorted {
        w.serialize(row).expect("rows serialize");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    let body = if sorted.is_empty() { format!("{}\n", COLUMNS.join(",")) } else { body };
    format!("{SCHEMA_LINE}\n{body}")
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

pub fn read_rows(mut input: impl Read, source: &str) -> Result<Vec<ResultRow>, ReportError> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| ReportError::Csv(format!("{source}: {e}")))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SCHEMA_LINE) {
        return Err(ReportError::SchemaMismatch(format!("{source}: first line must be `{SCHEMA_LINE}`")));
    }
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(rest.as_bytes());
    let header = reader.headers().map_err(|e| ReportError::Csv(format!("{source}: {e}")))?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(ReportError::SchemaMismatch(format!(
            "{source}: columns {:?}, expected {:?}",
            header.iter().collect::<Vec<_>>(),
            COLUMNS
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| ReportError::Csv(format!("{source}: {e}"))))
        .collect()
}

/// Per-(algorithm, k, degree) mean and sample standard deviation.
pub fn summarize(rows: &[ResultRow]) -> String {
    let mut groups: BTreeMap<(String, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.algorithm.clone(), r.k, r.degree)).or_default().push(r.cut_fraction);
    }
    let mut out = String::from("algorithm,k,degree,count,mean,stdev\n");
    for ((alg, k, degree), xs) in groups {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let stdev = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let _ = writeln!(out, "{alg},{k},{degree},{},{mean:.6},{stdev:.6}", xs.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, x: f64) -> ResultRow {
        ResultRow {
            algorithm: alg.into(),
            k: 3,
            degree: 3,
            n: "10".into(),
            p: None,
            seed: Some(1),
            cut_fraction: x,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn round_trip() {
        let mut q = row("qaoa", 0.8);
        q.n = INFINITE_N.into();
        q.p = Some(2);
        q.seed = None;
        let rows = vec![row("sdp", 0.7), q];
        let text = to_csv(&rows);
        assert!(text.starts_with("# maxkcut-lab v1\nalgorithm,k,degree,n,p,seed,cut_fraction,wall_time_s\n"));
        let back = read_rows(text.as_bytes(), "mem").unwrap();
        assert_eq!(back[0].algorithm, "qaoa");
        assert_eq!(back[0].n, INFINITE_N);
        assert_eq!(back[1], rows[0]);
    }

    #[test]
    fn summary_statistics() {
        assert!(summarize(&[row("h", 0.5)]).contains("h,3,3,1,0.500000,0.000000"));
        assert!(summarize(&[row("h", 0.5), row("h", 0.5)]).contains("h,3,3,2,0.500000,0.000000"));
        let s = summarize(&[row("h", 0.4), row("h", 0.6)]);
        assert!(s.contains("h,3,3,2,0.500000,0.141421"));
    }

    #[test]
    fn schema_checks() {
        assert!(matches!(read_rows("a,b\n".as_bytes(), "x"), Err(ReportError::SchemaMismatch(_))));
        let bad = format!("{SCHEMA_LINE}\nalgorithm,k\nh,3\n");
        assert!(matches!(read_rows(bad.as_bytes(), "x"), Err(ReportError::SchemaMismatch(_))));
    }
}
