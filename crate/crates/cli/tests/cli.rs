use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hfm_core::approx::default_m2;
use hfm_core::theory::magnitude_lambda;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn hfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfm"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .unwrap()
}

/// CSV report as header-keyed rows.
fn rows(out: &Output) -> Vec<Vec<(String, String)>> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("no column {key}"))
        .1
}

fn num(row: &[(String, String)], key: &str) -> f64 {
    field(row, key).parse().unwrap()
}

fn six(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "--input",
        &fixture("six_rows.csv"),
        "--features",
        "x1,x2",
        "--sensitive",
        "sex",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(["--privileged", "M", "--label", "label", "--format", "csv"].map(String::from));
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run(cmd: &str, args: Vec<String>) -> Output {
    let mut all = vec![cmd.to_string()];
    all.extend(args);
    hfm(&all.iter().map(String::as_str).collect::<Vec<_>>())
}

fn write_csv(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn dist_exact_on_six_rows() {
    let r = rows(&run("dist", six(&["--method", "exact"])));
    // Squared distance 29/50 by a hand nested-loop count.
    assert!((num(&r[0], "value") - (29.0f64 / 50.0).sqrt()).abs() < 1e-15);
    assert_eq!(field(&r[0], "method"), "exact");
}

#[test]
fn dist_approx_full_scan_matches_exact() {
    let pred = ["--prediction", "pred", "--label-source", "predictions"];
    let exact = rows(&run("dist", six(&pred)));
    let approx = rows(&run(
        "dist",
        six(&[&pred[..], &["--method", "approx", "--m2", "6", "--m1", "3"]].concat()),
    ));
    assert_eq!(field(&exact[0], "value"), field(&approx[0], "value"));
    assert_eq!(field(&approx[0], "m2"), "6");
}

#[test]
fn missing_column_is_an_input_error() {
    let mut args = six(&[]);
    let i = args.iter().position(|a| a == "label").unwrap();
    args[i] = "no_such_column".into();
    let out = run("dist", args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_column"));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hfm(&["dist"]).status.code(), Some(2));
    assert_eq!(hfm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hfm(&["--help"]).status.code(), Some(0));
    assert_eq!(run("hfm", six(&[])).status.code(), Some(2));
    assert_eq!(
        run("dist", six(&["--label-source", "predictions"]))
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run("hfm", six(&["--prediction", "pred", "--alpha", "1.5"]))
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn empty_group_is_a_computation_error() {
    let out = run(
        "dist",
        six(&[])
            .into_iter()
            .map(|a| if a == "M" { "X".into() } else { a })
            .collect(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn hfm_reports_both_distances_and_combiner() {
    let r = rows(&run(
        "hfm",
        six(&["--prediction", "pred", "--alpha", "0.05"]),
    ));
    let df = (52.0f64 / 29.0).sqrt() - 1.0;
    assert!((num(&r[0], "df") - df).abs() < 1e-14);
    // Two of six predictions are wrong.
    assert!((num(&r[0], "error_rate") - 1.0 / 3.0).abs() < 1e-15);
    assert!((num(&r[0], "combined") - (0.05 / 3.0 + 0.95 * df)).abs() < 1e-14);
    let plain = rows(&run("hfm", six(&["--prediction", "pred"])));
    assert!(plain[0].iter().all(|(k, _)| k != "combined"));
}

#[test]
fn hfm_zero_and_infinite_cases() {
    let dir = tempfile::tempdir().unwrap();
    let same = write_csv(
        dir.path(),
        "same.csv",
        "x,g,y,p\n0.1,a,1,1\n0.9,b,2,2\n0.4,a,2,2\n",
    );
    let base = |p: &Path| -> Vec<String> {
        [
            "--input",
            &p.display().to_string(),
            "--features",
            "x",
            "--sensitive",
            "g",
            "--privileged",
            "a",
        ]
        .iter()
        .chain(&["--label", "y", "--prediction", "p", "--format", "csv"])
        .map(|s| s.to_string())
        .collect()
    };
    assert_eq!(num(&rows(&run("hfm", base(&same)))[0], "df"), 0.0);

    // Groups coincide under true labels (D = 0) but not under predictions.
    let inf = write_csv(
        dir.path(),
        "inf.csv",
        "x,g,y,p\n0.0,a,1,1\n0.0,b,1,2\n1.0,a,1,1\n1.0,b,1,1\n",
    );
    let r = rows(&run("hfm", base(&inf)));
    assert_eq!(field(&r[0], "d"), "0.0000000000000000");
    assert_eq!(field(&r[0], "df"), "inf");
    let mut json = base(&inf);
    json.truncate(json.len() - 2);
    let out = run("hfm", json);
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"df\": \"inf\""));
}

fn twelve(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "--input",
        &fixture("twelve_rows.csv"),
        "--features",
        "score",
        "--sensitive",
        "race",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(
        [
            "--privileged",
            "A",
            "--label",
            "outcome",
            "--prediction",
            "pred",
        ]
        .map(String::from),
    );
    v.extend(
        [
            "--label-values",
            "no,yes",
            "--positive-label",
            "yes",
            "--format",
            "csv",
        ]
        .map(String::from),
    );
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

#[test]
fn group_metrics_fixture() {
    // Hand counts are derived in the acceptance suite.
    let r = rows(&run(
        "group-metrics",
        twelve(&["--prediction-flipped", "pred_flipped"]),
    ));
    let want = [
        ("dp", 1.0 / 6.0),
        ("eo", 5.0 / 12.0),
        ("pqp", 1.0 / 6.0),
        ("dr", 0.25),
    ];
    assert_eq!(r.len(), 4);
    for (row, (name, v)) in r.iter().zip(want) {
        assert_eq!(field(row, "metric"), name);
        assert!((num(row, "value") - v).abs() < 1e-12);
    }
    let no_dr = rows(&run("group-metrics", twelve(&[])));
    assert_eq!(no_dr.len(), 3);
}

#[test]
fn group_metrics_identical_groups_and_undefined_rates() {
    let dir = tempfile::tempdir().unwrap();
    let same = write_csv(
        dir.path(),
        "same.csv",
        "x,g,y,p\n0.1,a,1,1\n0.1,b,1,1\n0.5,a,2,2\n0.5,b,2,2\n0.7,a,2,1\n0.7,b,2,1\n",
    );
    let args = |p: &Path| -> Vec<String> {
        [
            "--input",
            &p.display().to_string(),
            "--features",
            "x",
            "--sensitive",
            "g",
            "--privileged",
            "a",
        ]
        .iter()
        .chain(&[
            "--label",
            "y",
            "--prediction",
            "p",
            "--positive-label",
            "2",
            "--format",
            "csv",
        ])
        .map(|s| s.to_string())
        .collect()
    };
    for row in rows(&run("group-metrics", args(&same))) {
        assert_eq!(num(&row, "value"), 0.0);
    }
    // Group b never predicts the positive class, so its precision is undefined.
    let undef = write_csv(
        dir.path(),
        "undef.csv",
        "x,g,y,p\n0.1,a,2,2\n0.2,a,1,1\n0.3,b,2,1\n0.4,b,1,1\n",
    );
    let out = run("group-metrics", args(&undef));
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert_eq!(field(&r[2], "metric"), "pqp");
    assert_eq!(field(&r[2], "value"), "undefined");
    assert_eq!(num(&r[0], "value"), 0.5);
}

#[test]
fn bench_sweep_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.csv");
    let out = hfm(&[
        "bench",
        "--datasets",
        "10",
        "--n-min",
        "20",
        "--n-max",
        "200",
        "--format",
        "csv",
        "--summary",
        &summary.display().to_string(),
    ]);
    let r = rows(&out);
    assert_eq!(r.len(), 10);
    for row in &r {
        assert!(num(row, "approx") >= num(row, "exact") - 1e-9);
    }
    let text = std::fs::read_to_string(&summary).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    let get = |k: &str| values[header.iter().position(|h| *h == k).unwrap()];
    let r: f64 = get("pearson").parse().unwrap();
    assert!((-1.0..=1.0).contains(&r));
    assert_eq!(get("rows"), "10");
    assert_eq!(get("overestimation_violations"), "0");
}

#[test]
fn verify_theory_tables() {
    let out = hfm(&[
        "verify-theory",
        "--pairs",
        "20",
        "--trials",
        "20000",
        "--n",
        "1000,50000",
        "--k",
        "2,5",
        "--format",
        "csv",
    ]);
    let r = rows(&out);
    let half = r
        .iter()
        .find(|row| field(row, "kind") == "equal_norm")
        .unwrap();
    assert!((num(half, "exact") - 0.5).abs() <= 1e-12);
    let pairs: Vec<_> = r
        .iter()
        .filter(|row| field(row, "kind") == "pair")
        .collect();
    assert_eq!(pairs.len(), 20);
    assert!(pairs.iter().all(|row| field(row, "sandwich_ok") == "true"));
    let bounds: Vec<_> = r
        .iter()
        .filter(|row| field(row, "kind") == "bound")
        .collect();
    assert_eq!(bounds.len(), 4);
    for row in bounds {
        let (n, k, m1, m2) = (
            num(row, "n") as usize,
            num(row, "k") as usize,
            num(row, "m1") as usize,
            num(row, "m2") as usize,
        );
        assert_eq!(m2, default_m2(n));
        assert_eq!(
            field(row, "lambda"),
            hfm_core::report::format_real(magnitude_lambda(n, k, m1, m2))
        );
    }
}

#[test]
fn joint_and_named_attributes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_csv(
        dir.path(),
        "two.csv",
        "x,s,r,y\n0.0,m,w,1\n0.3,m,b,1\n0.6,f,w,2\n1.0,f,b,2\n",
    );
    let base: Vec<String> = [
        "--input",
        &p.display().to_string(),
        "--features",
        "x",
        "--sensitive",
        "s,r",
    ]
    .iter()
    .chain(&["--privileged", "m,w", "--label", "y", "--format", "csv"])
    .map(|s| s.to_string())
    .collect();
    let by_name = rows(&run(
        "dist",
        [base.clone(), vec!["--attr".into(), "r".into()]].concat(),
    ));
    let by_index = rows(&run(
        "dist",
        [base.clone(), vec!["--attr".into(), "1".into()]].concat(),
    ));
    assert_eq!(field(&by_name[0], "value"), field(&by_index[0], "value"));
    // Joint privileged group is row 0 alone; the farthest other row is (1.0, 2).
    let joint = rows(&run(
        "dist",
        [base.clone(), vec!["--joint".into(), "s,r".into()]].concat(),
    ));
    assert_eq!(num(&joint[0], "value"), 2f64.sqrt());
    let bad = run("dist", [base, vec!["--attr".into(), "zzz".into()]].concat());
    assert_eq!(bad.status.code(), Some(2));
}
