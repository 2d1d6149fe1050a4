//! Benchmark records and their CSV form.
//!
//! ```text
//! experiment,threads,schedule,chunk,construct,rep,fish,steps,seconds_total,seconds_eat,checksum
//! exp3,8,static,50,reduction,0,10000,1000,4.12345678e0,1.03125000e-1,9f0c4e8a1b2c3d4e
//! ```
//!
//! Seconds are written with 9 significant digits, `NaN` marking a failed
//! cell, and checksums as 16 lower-case hex digits.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::runtime::{Construct, ScheduleKind};

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "threads",
    "schedule",
    "chunk",
    "construct",
    "rep",
    "fish",
    "steps",
    "seconds_total",
    "seconds_eat",
    "checksum",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Custom,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp1" => Ok(ExperimentId::Exp1),
            "exp2" => Ok(ExperimentId::Exp2),
            "exp3" => Ok(ExperimentId::Exp3),
            "custom" => Ok(ExperimentId::Custom),
            _ => Err(format!("unknown experiment `{s}`")),
        }
    }
}

/// A duration in seconds, held at the 9-significant-digit precision of the
/// CSV form so that writing and reading back is lossless. NaN marks a failure.
#[derive(Debug, Clone, Copy)]
pub struct Seconds(f64);

impl Seconds {
    pub const FAILED: Seconds = Seconds(f64::NAN);

    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            return Seconds::FAILED;
        }
        // Exact: parsing the shortest 9-digit decimal is the canonical value.
        Seconds(
            format!("{value:.8e}")
                .parse()
                .expect("formatted float parses"),
        )
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_failed(self) -> bool {
        self.0.is_nan()
    }
}

impl PartialEq for Seconds {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits() || (self.is_failed() && other.is_failed())
    }
}

impl fmt::Display for Seconds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_failed() {
            f.write_str("NaN")
        } else {
            write!(f, "{:.8e}", self.0)
        }
    }
}

/// One timed simulation run (or one failed grid cell).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub experiment: ExperimentId,
    pub threads: usize,
    pub schedule: ScheduleKind,
    pub chunk: usize,
    pub construct: Construct,
    pub rep: usize,
    pub fish: usize,
    pub steps: usize,
    pub seconds_total: Seconds,
    pub seconds_eat: Seconds,
    pub checksum: u64,
}

impl BenchRecord {
    pub fn is_failure(&self) -> bool {
        self.seconds_total.is_failed() || self.seconds_eat.is_failed()
    }

    fn to_fields(&self) -> [String; 11] {
        [
            self.experiment.to_string(),
            self.threads.to_string(),
            self.schedule.to_string(),
            self.chunk.to_string(),
            self.construct.to_string(),
            self.rep.to_string(),
            self.fish.to_string(),
            self.steps.to_string(),
            self.seconds_total.to_string(),
            self.seconds_eat.to_string(),
            format!("{:016x}", self.checksum),
        ]
    }
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn malformed(line: u64, message: impl Into<String>) -> CsvError {
    CsvError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<(), CsvError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for record in records {
        writer.write_record(record.to_fields())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv_string(records: &[BenchRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ascii")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = reader.records();
    match rows.next() {
        None => return Err(malformed(1, "missing header")),
        Some(header) => {
            let header = header?;
            if header.iter().ne(CSV_HEADER) {
                let got: Vec<&str> = header.iter().collect();
                return Err(malformed(
                    1,
                    format!(
                        "unexpected header `{}`, expected `{}`",
                        got.join(","),
                        CSV_HEADER.join(",")
                    ),
                ));
            }
        }
    }
    let mut records = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != CSV_HEADER.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            ));
        }
        records.push(parse_row(&row, line)?);
    }
    Ok(records)
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<BenchRecord, CsvError> {
    let field = |i: usize| &row[i];
    let count = |i: usize| -> Result<usize, CsvError> {
        field(i).parse().map_err(|_| {
            malformed(
                line,
                format!("{}: invalid count `{}`", CSV_HEADER[i], field(i)),
            )
        })
    };
    let seconds = |i: usize| -> Result<Seconds, CsvError> {
        let text = field(i);
        let value: f64 = text
            .parse()
            .map_err(|_| malformed(line, format!("{}: invalid number `{text}`", CSV_HEADER[i])))?;
        Ok(Seconds::new(value))
    };
    let experiment = field(0)
        .parse()
        .map_err(|e: String| malformed(line, format!("experiment: {e}")))?;
    let schedule = field(2)
        .parse::<ScheduleKind>()
        .map_err(|e| malformed(line, format!("schedule: {e}")))?;
    let construct = field(4)
        .parse::<Construct>()
        .map_err(|e| malformed(line, format!("construct: {e}")))?;
    let hex = field(10);
    if hex.len() != 16
        || !hex
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
    {
        return Err(malformed(
            line,
            format!("checksum: expected 16 lower-case hex digits, found `{hex}`"),
        ));
    }
    Ok(BenchRecord {
        experiment,
        threads: count(1)?,
        schedule,
        chunk: count(3)?,
        construct,
        rep: count(5)?,
        fish: count(6)?,
        steps: count(7)?,
        seconds_total: seconds(8)?,
        seconds_eat: seconds(9)?,
        checksum: u64::from_str_radix(hex, 16).expect("validated hex"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    EatExceedsTotal { eat: f64, total: f64 },
    NegativeSeconds,
    ChecksumMismatch { expected: u64, found: u64 },
}

/// A record that breaks a harness invariant. `row` is 0-based over the
/// records; in a CSV file that is line `row + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub row: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = self.row + 2;
        match &self.kind {
            ViolationKind::EatExceedsTotal { eat, total } => {
                write!(f, "line {line}: seconds_eat {eat} exceeds seconds_total {total}")
            }
            ViolationKind::NegativeSeconds => write!(f, "line {line}: negative duration"),
            ViolationKind::ChecksumMismatch { expected, found } => write!(
                f,
                "line {line}: checksum {found:016x} differs from {expected:016x} of the same configuration"
            ),
        }
    }
}

/// Check timing nesting and that every successful record of one
/// `(experiment, fish, steps)` group shares a checksum. Failure rows are skipped.
pub fn validate_records(records: &[BenchRecord]) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut checksums: HashMap<(ExperimentId, usize, usize), u64> = HashMap::new();
    for (row, r) in records.iter().enumerate() {
        if r.is_failure() {
            continue;
        }
        let (total, eat) = (r.seconds_total.get(), r.seconds_eat.get());
        if total < 0.0 || eat < 0.0 {
            violations.push(Violation {
                row,
                kind: ViolationKind::NegativeSeconds,
            });
        }
        if eat > total {
            violations.push(Violation {
                row,
                kind: ViolationKind::EatExceedsTotal { eat, total },
            });
        }
        let expected = *checksums
            .entry((r.experiment, r.fish, r.steps))
            .or_insert(r.checksum);
        if expected != r.checksum {
            violations.push(Violation {
                row,
                kind: ViolationKind::ChecksumMismatch {
                    expected,
                    found: r.checksum,
                },
            });
        }
    }
    violations
}
