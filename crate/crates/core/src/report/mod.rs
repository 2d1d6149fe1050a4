//! Summary tables and trend charts from harness records.
//!
//! Rendering is a pure function of the records, so the same CSV always yields
//! the same bytes.

pub mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::harness::{read_csv, summarize, BenchRecord, CsvError, ExperimentId, SummaryStats};
use crate::runtime::{Construct, ScheduleKind};
use svg::{LineChart, Series};

/// Identity of one grid cell; records differing only in `rep` share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub experiment: ExperimentId,
    pub construct: Construct,
    pub schedule: ScheduleKind,
    pub chunk: usize,
    pub threads: usize,
    pub fish: usize,
    pub steps: usize,
}

impl CellKey {
    fn of(r: &BenchRecord) -> Self {
        CellKey {
            experiment: r.experiment,
            construct: r.construct,
            schedule: r.schedule,
            chunk: r.chunk,
            threads: r.threads,
            fish: r.fish,
            steps: r.steps,
        }
    }

    fn schedule_label(&self) -> String {
        if self.schedule == ScheduleKind::Runtime {
            "runtime".to_string()
        } else {
            format!("{}:{}", self.schedule, self.chunk)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub key: CellKey,
    /// `None` when every rep of the cell failed.
    pub total: Option<SummaryStats>,
    pub eat: Option<SummaryStats>,
    pub failures: usize,
}

/// Group records by cell and summarize the successful reps, ordered by key.
pub fn summarize_cells(records: &[BenchRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<CellKey, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(CellKey::of(r)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rs)| {
            let ok: Vec<&&BenchRecord> = rs.iter().filter(|r| !r.is_failure()).collect();
            let totals: Vec<f64> = ok.iter().map(|r| r.seconds_total.get()).collect();
            let eats: Vec<f64> = ok.iter().map(|r| r.seconds_eat.get()).collect();
            CellSummary {
                key,
                total: summarize(&totals).ok(),
                eat: summarize(&eats).ok(),
                failures: rs.len() - ok.len(),
            }
        })
        .collect()
}

/// Everything `fsb report` writes.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Markdown table, one row per cell.
    pub table: String,
    /// `(file name, svg document)`, in a fixed order.
    pub charts: Vec<(String, String)>,
}

fn fmt_secs(stats: Option<SummaryStats>, pick: fn(&SummaryStats) -> f64) -> String {
    stats.map_or_else(|| "-".to_string(), |s| format!("{:.6}", pick(&s)))
}

pub fn render_table(cells: &[CellSummary]) -> String {
    let mut out = String::from(
        "| experiment | construct | schedule | threads | fish | steps | n | median total (s) | mean total (s) | stddev total (s) | median eat (s) | failures |\n\
         |---|---|---|---|---|---|---|---|---|---|---|---|\n",
    );
    for c in cells {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            c.key.experiment,
            c.key.construct,
            c.key.schedule_label(),
            c.key.threads,
            c.key.fish,
            c.key.steps,
            c.total.map_or(0, |s| s.n),
            fmt_secs(c.total, |s| s.median),
            fmt_secs(c.total, |s| s.mean),
            fmt_secs(c.total, |s| s.stddev),
            fmt_secs(c.eat, |s| s.median),
            c.failures,
        );
    }
    out
}

type Metric = fn(&CellSummary) -> Option<f64>;

fn median_total(c: &CellSummary) -> Option<f64> {
    c.total.map(|s| s.median)
}

fn median_eat(c: &CellSummary) -> Option<f64> {
    c.eat.map(|s| s.median)
}

/// Median metric vs thread count, one series per (construct, schedule).
fn threads_chart(cells: &[&CellSummary], title: &str, y_label: &str, metric: Metric) -> LineChart {
    let mut series: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for c in cells {
        if let Some(y) = metric(c) {
            series
                .entry((c.key.construct.to_string(), c.key.schedule_label()))
                .or_default()
                .push((c.key.threads as f64, y));
        }
    }
    LineChart {
        title: title.to_string(),
        x_label: "threads".to_string(),
        y_label: y_label.to_string(),
        series: series
            .into_iter()
            .map(|((construct, schedule), mut points)| {
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series {
                    label: format!("{construct}, {schedule}"),
                    points,
                    dashed: false,
                }
            })
            .collect(),
    }
}

/// Median runtime vs chunk size, one series per (construct, schedule, threads).
/// Runtime-schedule cells, which have no chunk, are drawn as dashed flat lines
/// across the chunk range.
fn chunk_chart(cells: &[&CellSummary]) -> LineChart {
    let chunks: Vec<usize> = cells
        .iter()
        .filter(|c| c.key.schedule != ScheduleKind::Runtime && c.key.chunk > 0)
        .map(|c| c.key.chunk)
        .collect();
    let span = match (chunks.iter().min(), chunks.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo as f64, hi as f64),
        _ => (1.0, 2.0),
    };
    let mut series: BTreeMap<(String, String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for c in cells {
        let Some(y) = median_total(c) else { continue };
        let key = (
            c.key.construct.to_string(),
            c.key.schedule.to_string(),
            c.key.threads,
        );
        if c.key.schedule == ScheduleKind::Runtime {
            series
                .entry(key)
                .or_default()
                .extend([(span.0, y), (span.1, y)]);
        } else if c.key.chunk > 0 {
            series.entry(key).or_default().push((c.key.chunk as f64, y));
        }
    }
    LineChart {
        title: "Runtime vs. chunk by schedule and threads".to_string(),
        x_label: "chunk".to_string(),
        y_label: "median total runtime".to_string(),
        series: series
            .into_iter()
            .map(|((construct, schedule, threads), mut points)| {
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series {
                    dashed: schedule == "runtime",
                    label: format!("{construct}, {schedule}, {threads} threads"),
                    points,
                }
            })
            .collect(),
    }
}

/// Build the summary table and every chart the records support.
pub fn render(records: &[BenchRecord]) -> Report {
    let cells = summarize_cells(records);
    let table = render_table(&cells);
    let of = |id: ExperimentId| -> Vec<&CellSummary> {
        cells.iter().filter(|c| c.key.experiment == id).collect()
    };

    let mut charts = Vec::new();
    let mut push = |name: &str, chart: LineChart| {
        if chart.point_count() > 0 {
            charts.push((name.to_string(), chart.to_svg()));
        }
    };
    let exp1 = of(ExperimentId::Exp1);
    if !exp1.is_empty() {
        push(
            "exp1_runtime_vs_threads.svg",
            threads_chart(
                &exp1,
                "Runtime vs. threads by construct and schedule",
                "median total runtime",
                median_total,
            ),
        );
    }
    let exp2 = of(ExperimentId::Exp2);
    if !exp2.is_empty() {
        push("exp2_runtime_vs_chunk.svg", chunk_chart(&exp2));
    }
    let exp3 = of(ExperimentId::Exp3);
    if !exp3.is_empty() {
        push(
            "exp3_eat_vs_threads.svg",
            threads_chart(
                &exp3,
                "Eat-phase time vs. threads by construct",
                "median eat time",
                median_eat,
            ),
        );
        push(
            "exp3_total_vs_threads.svg",
            threads_chart(
                &exp3,
                "Total runtime vs. threads by construct",
                "median total runtime",
                median_total,
            ),
        );
    }
    Report { table, charts }
}

/// [`render`] straight from CSV bytes.
pub fn render_csv(bytes: &[u8]) -> Result<Report, CsvError> {
    Ok(render(&read_csv(bytes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{write_csv_string, Seconds};

    fn rec(
        exp: ExperimentId,
        construct: Construct,
        schedule: ScheduleKind,
        chunk: usize,
        threads: usize,
        rep: usize,
        t: f64,
    ) -> BenchRecord {
        BenchRecord {
            experiment: exp,
            threads,
            schedule,
            chunk,
            construct,
            rep,
            fish: 100,
            steps: 10,
            seconds_total: Seconds::new(t),
            seconds_eat: Seconds::new(t / 4.0),
            checksum: 7,
        }
    }

    #[test]
    fn header_only_means_no_charts() {
        let report = render(&[]);
        assert!(report.charts.is_empty());
        assert_eq!(report.table.lines().count(), 2);
    }

    #[test]
    fn exp1_has_four_series() {
        let mut records = Vec::new();
        for (i, (s, c)) in crate::harness::EXP1_COMBINATIONS.iter().enumerate() {
            for threads in [1, 2, 4] {
                for rep in 0..3 {
                    records.push(rec(
                        ExperimentId::Exp1,
                        c.to_owned(),
                        s.kind,
                        s.chunk,
                        threads,
                        rep,
                        1.0 + i as f64 + rep as f64,
                    ));
                }
            }
        }
        let report = render(&records);
        assert_eq!(report.charts.len(), 1);
        let (name, svg) = &report.charts[0];
        assert_eq!(name, "exp1_runtime_vs_threads.svg");
        assert_eq!(svg.matches("<polyline").count(), 4);
        // Series are ordered alphabetically by (construct, schedule).
        let first = svg.find("critical-partial, static:50").unwrap();
        let second = svg.find("reduction, dynamic:50").unwrap();
        let third = svg.find("reduction, guided:50").unwrap();
        assert!(first < second && second < third);
        // Medians over reps: 12 cells, 3 reps each.
        let cells = summarize_cells(&records);
        assert_eq!(cells.len(), 12);
        assert!(cells.iter().all(|c| c.total.unwrap().n == 3));
    }

    #[test]
    fn capped_duplicates_merge() {
        let records = vec![
            rec(
                ExperimentId::Exp1,
                Construct::Reduction,
                ScheduleKind::Static,
                50,
                8,
                0,
                1.0,
            ),
            rec(
                ExperimentId::Exp1,
                Construct::Reduction,
                ScheduleKind::Static,
                50,
                8,
                0,
                3.0,
            ),
        ];
        let cells = summarize_cells(&records);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].total.unwrap().median, 2.0);
    }

    #[test]
    fn failures_counted_not_plotted() {
        let mut bad = rec(
            ExperimentId::Exp3,
            Construct::CriticalFull,
            ScheduleKind::Static,
            50,
            2,
            0,
            1.0,
        );
        bad.seconds_total = Seconds::FAILED;
        bad.seconds_eat = Seconds::FAILED;
        let cells = summarize_cells(&[bad.clone()]);
        assert_eq!(cells[0].failures, 1);
        assert!(cells[0].total.is_none());
        assert!(render(&[bad]).charts.is_empty());
    }

    #[test]
    fn exp2_runtime_cells_are_flat_dashed() {
        let records = vec![
            rec(
                ExperimentId::Exp2,
                Construct::Reduction,
                ScheduleKind::Dynamic,
                1,
                2,
                0,
                1.0,
            ),
            rec(
                ExperimentId::Exp2,
                Construct::Reduction,
                ScheduleKind::Dynamic,
                64,
                2,
                0,
                2.0,
            ),
            rec(
                ExperimentId::Exp2,
                Construct::Reduction,
                ScheduleKind::Runtime,
                0,
                2,
                0,
                1.5,
            ),
        ];
        let report = render(&records);
        assert_eq!(report.charts.len(), 1);
        let svg = &report.charts[0].1;
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn exp3_charts_use_eat_and_total() {
        let records: Vec<_> = crate::harness::EXP3_CONSTRUCTS
            .iter()
            .flat_map(|&c| {
                [1, 2, 4].map(|t| {
                    rec(
                        ExperimentId::Exp3,
                        c,
                        ScheduleKind::Static,
                        50,
                        t,
                        0,
                        t as f64,
                    )
                })
            })
            .collect();
        let report = render(&records);
        let names: Vec<_> = report.charts.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(
            names,
            ["exp3_eat_vs_threads.svg", "exp3_total_vs_threads.svg"]
        );
        assert_ne!(report.charts[0].1, report.charts[1].1);
    }

    #[test]
    fn csv_rendering_is_deterministic() {
        let records = vec![rec(
            ExperimentId::Exp3,
            Construct::Reduction,
            ScheduleKind::Static,
            50,
            4,
            0,
            0.5,
        )];
        let text = write_csv_string(&records);
        assert_eq!(
            render_csv(text.as_bytes()).unwrap(),
            render_csv(text.as_bytes()).unwrap()
        );
        assert!(render_csv(b"nope\n").is_err());
    }
}
