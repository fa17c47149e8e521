//! CSV output rows.
//!
//! Columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `method` | `gram`, an operator family, or a solver name |
//! | `d`, `n` | problem shape |
//! | `k` | final embedding dimension; empty when no sketch is involved |
//! | `kappa` | condition number of the generated problem; empty for sketch runs |
//! | `rep` | repetition, `0` is the warm-up |
//! | `seed` | base seed of the run |
//! | `phase` | phase name, or `total` for the whole run |
//! | `elapsed_seconds` | wall time of the phase |
//! | `bytes_moved`, `flops` | analytic counts from the cost model |
//! | `relative_residual` | `‖b − Ax‖/‖b‖`; empty for sketch runs and failed solves |
//! | `status` | `ok`, `cholesky_failed`, `singular_r`, `capacity_exceeded` or `error` |
//!
//! Real numbers are written in scientific notation with 17 significant digits.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize, Serializer};
use sketchla::SolveStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    CholeskyFailed,
    SingularR,
    CapacityExceeded,
    Error,
}

impl From<SolveStatus> for RecordStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Ok => RecordStatus::Ok,
            SolveStatus::CholeskyFailed => RecordStatus::CholeskyFailed,
            SolveStatus::SingularR => RecordStatus::SingularR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub d: usize,
    pub n: usize,
    pub k: Option<usize>,
    #[serde(serialize_with = "sci_opt")]
    pub kappa: Option<f64>,
    pub rep: usize,
    pub seed: u64,
    pub phase: String,
    #[serde(serialize_with = "sci")]
    pub elapsed_seconds: f64,
    pub bytes_moved: u64,
    pub flops: u64,
    #[serde(serialize_with = "sci_opt")]
    pub relative_residual: Option<f64>,
    pub status: RecordStatus,
}

pub const TOTAL_PHASE: &str = "total";

fn sci<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.16e}"))
}

fn sci_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => sci(v, s),
        None => s.serialize_none(),
    }
}

/// Streams records as CSV with a header row.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(w: W) -> Self {
        CsvSink {
            writer: csv::Writer::from_writer(w),
        }
    }

    pub fn write(&mut self, r: &BenchRecord) -> csv::Result<()> {
        self.writer.serialize(r)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.writer.flush()?;
        self.writer.into_inner().map_err(|e| e.into_error())
    }
}

pub fn write_csv<W: Write>(records: &[BenchRecord], w: W) -> csv::Result<W> {
    let mut sink = CsvSink::new(w);
    for r in records {
        sink.write(r)?;
    }
    Ok(sink.finish()?)
}

pub fn read_csv<R: Read>(r: R) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BenchRecord {
        BenchRecord {
            method: "sas-multisketch".into(),
            d: 4096,
            n: 8,
            k: Some(16),
            kappa: Some(1e10),
            rep: 1,
            seed: 42,
            phase: "qr".into(),
            elapsed_seconds: 1.0 / 3.0,
            bytes_moved: 123,
            flops: 456,
            relative_residual: Some(0.1 + 0.2),
            status: RecordStatus::Ok,
        }
    }

    #[test]
    fn roundtrip_is_exact() {
        let mut b = sample();
        b.k = None;
        b.kappa = None;
        b.relative_residual = None;
        b.status = RecordStatus::CholeskyFailed;
        let recs = vec![sample(), b];
        let bytes = write_csv(&recs, Vec::new()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,d,n,k,kappa,rep,seed,phase,elapsed_seconds,bytes_moved,flops,relative_residual,status"
        );
        assert!(lines.next().unwrap().contains("3.3333333333333331e-1"));
        assert!(lines.next().unwrap().ends_with(",,cholesky_failed"));
        assert_eq!(read_csv(text.as_bytes()).unwrap(), recs);
    }
}
