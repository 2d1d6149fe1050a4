use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fsb::harness::{read_csv, ExperimentId, CSV_HEADER};
use fsb::runtime::{Construct, ScheduleKind};
use fsb::sim::{init_school, SimConfig};

fn fsb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsb"))
        .args(args)
        .env_remove("FSB_SCHEDULE")
        .output()
        .expect("run fsb")
}

fn fsb_env(args: &[&str], schedule: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsb"))
        .args(args)
        .env("FSB_SCHEDULE", schedule)
        .output()
        .expect("run fsb")
}

fn checksum_of(out: &Output) -> u64 {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(records.len(), 1);
    records[0].checksum
}

#[test]
fn simulate_prints_one_record_and_summary() {
    let out = fsb(&["simulate", "--fish", "500", "--steps", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let records = read_csv(text.as_bytes()).unwrap();
    let r = &records[0];
    assert_eq!(r.experiment, ExperimentId::Custom);
    assert_eq!(
        (r.threads, r.schedule, r.chunk, r.construct),
        (8, ScheduleKind::Static, 50, Construct::Reduction)
    );
    assert_eq!((r.fish, r.steps), (500, 5));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains(&format!("checksum {:016x}", r.checksum)),
        "{stderr}"
    );
}

#[test]
fn zero_steps_checksum_is_initial_state() {
    let out = fsb(&["simulate", "--fish", "300", "--steps", "0", "--seed", "9"]);
    let cfg = SimConfig::builder()
        .num_fish(300)
        .num_steps(0)
        .seed(9)
        .build()
        .unwrap();
    assert_eq!(checksum_of(&out), init_school(&cfg).checksum());
}

#[test]
fn runs_are_reproducible_and_schedule_independent() {
    let base = ["simulate", "--fish", "2000", "--steps", "20", "--seed", "4"];
    let a = checksum_of(&fsb(&base));
    let b = checksum_of(&fsb(&base));
    assert_eq!(a, b);
    let seq = checksum_of(&fsb(&[
        &base[..],
        &["--threads", "1", "--construct", "sequential"],
    ]
    .concat()));
    let par = checksum_of(&fsb(&[
        &base[..],
        &["--threads", "8", "--construct", "reduction"],
    ]
    .concat()));
    assert_eq!(seq, a);
    assert_eq!(par, a);
}

#[test]
fn runtime_schedule_reads_env() {
    let out = fsb_env(
        &[
            "simulate",
            "--fish",
            "100",
            "--steps",
            "2",
            "--schedule",
            "runtime",
        ],
        "dynamic,64",
    );
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("dynamic:64"), "{stderr}");
    let records = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(
        (records[0].schedule, records[0].chunk),
        (ScheduleKind::Runtime, 0)
    );

    let bad = fsb_env(
        &[
            "simulate",
            "--fish",
            "10",
            "--steps",
            "1",
            "--schedule",
            "runtime",
        ],
        "runtime",
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("FSB_SCHEDULE"));
}

#[test]
fn usage_errors_exit_two() {
    let out = fsb(&["simulate", "--construct", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--construct"));
    assert_eq!(
        fsb(&["report", "x.csv", "--threads", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(fsb(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let out = fsb(&[
        "simulate",
        "--fish",
        "50",
        "--steps",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(read_csv(fs::File::open(&path).unwrap()).unwrap().len(), 1);
}

fn svgs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "svg"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn header_only_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, format!("{}\n", CSV_HEADER.join(","))).unwrap();
    let out_dir = dir.path().join("report");
    let out = fsb(&[
        "report",
        csv.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(svgs(&out_dir).is_empty());
    assert_eq!(
        fs::read_to_string(out_dir.join("summary.md"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn bad_csv_report_fails_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, format!("{}\nexp1,1,static\n", CSV_HEADER.join(","))).unwrap();
    let out = fsb(&[
        "report",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn exp3_sweep_then_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("exp3.csv");
    let out = fsb(&[
        "exp3",
        "--fish",
        "200",
        "--steps",
        "3",
        "--reps",
        "2",
        "--warmup",
        "1",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = read_csv(fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(records.len(), 21 * 2);
    assert!(records.iter().all(|r| r.checksum == records[0].checksum));

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for target in [&a, &b] {
        let out = fsb(&[
            "report",
            csv.to_str().unwrap(),
            "--out",
            target.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let charts = svgs(&a);
    assert_eq!(charts.len(), 2);
    assert_eq!(charts, svgs(&b));
    assert_eq!(
        fs::read(a.join("summary.md")).unwrap(),
        fs::read(b.join("summary.md")).unwrap()
    );
}

#[test]
fn exp1_capped_run_yields_four_series() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("exp1.csv");
    let out = fsb(&[
        "exp1",
        "--fish",
        "100",
        "--steps",
        "2",
        "--reps",
        "1",
        "--warmup",
        "0",
        "--cap-threads",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read_csv(fs::File::open(&csv).unwrap()).unwrap().len(), 64);
    let report = dir.path().join("r");
    assert!(fsb(&[
        "report",
        csv.to_str().unwrap(),
        "--out",
        report.to_str().unwrap()
    ])
    .status
    .success());
    let charts = svgs(&report);
    assert_eq!(charts.len(), 1);
    assert_eq!(
        String::from_utf8_lossy(&charts[0].1)
            .matches("<polyline")
            .count(),
        4
    );
}
