use std::process::{Command, Output};

const HEADER: &str =
    "snr_db,c_awgn_bits,bound_original_bits,bound_new_bits,asymptote_bits,exact_modt_bits,mc_rate_bits,snr_prime_db,sigma_s2";

fn thp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#') && *l != HEADER).collect()
}

#[test]
fn bounds_default_grid() {
    let o = thp(&["bounds"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(!csv.contains('\r'));
    assert!(csv.ends_with('\n'));
    assert!(csv.lines().any(|l| l == HEADER));
    assert!(csv.lines().any(|l| l == "# seed=1"));
    assert!(csv.starts_with(&format!("# thp {} bounds\n", env!("CARGO_PKG_VERSION"))));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 41);
    assert!(rows[0].starts_with("-10,"));
    assert!(rows[40].starts_with("30,"));
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 9);
        // simulation columns stay empty
        assert!(cols[5..].iter().all(|c| c.is_empty()), "{row}");
        let v: Vec<f64> = cols[..5].iter().map(|c| c.parse().unwrap()).collect();
        assert!(v[1] >= v[3] && v[3] >= v[2], "{row}");
    }
}

#[test]
fn clamp_zero_removes_negative_rates() {
    let raw = stdout(&thp(&["bounds", "--snr-start", "-10", "--snr-stop", "0"]));
    assert!(data_rows(&raw)
        .iter()
        .any(|r| r.split(',').nth(2).unwrap().starts_with('-')));
    let clamped = stdout(&thp(&[
        "bounds",
        "--snr-start",
        "-10",
        "--snr-stop",
        "0",
        "--clamp-zero",
    ]));
    for row in data_rows(&clamped) {
        for c in row.split(',').skip(1).take(4) {
            assert!(c.parse::<f64>().unwrap() >= 0.0, "{row}");
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "simulate",
        "--snr-start",
        "0",
        "--snr-stop",
        "10",
        "--snr-step",
        "10",
        "--trials",
        "2",
        "--samples",
        "20000",
        "--residual-trials",
        "10000",
        "--seed",
        "9",
    ];
    let (a, b) = (thp(&args), thp(&args));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    assert!(csv.lines().any(|l| l == "# seed=9"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').all(|c| !c.is_empty())), "{csv}");
    // a different seed changes the simulated columns
    let other = thp(&[&args[..args.len() - 1], &["10"]].concat());
    assert_ne!(data_rows(&stdout(&other)), rows);
}

#[test]
fn output_file_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let o = thp(&["bounds", "--ascii-plot", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let file = std::fs::read_to_string(&path).unwrap();
    assert_eq!(file, stdout(&thp(&["bounds"])));
    // the chart goes to stdout when the CSV has its own file
    assert!(!o.stdout.is_empty());
    let piped = thp(&["bounds", "--ascii-plot"]);
    assert!(!piped.stderr.is_empty());
    assert_eq!(piped.stdout, thp(&["bounds"]).stdout);
}

#[test]
fn unwritable_output_exits_2() {
    let o = thp(&["bounds", "--output", "/nonexistent-dir/sub/out.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/sub/out.csv"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(thp(&["bounds", "--users", "five"]).status.code(), Some(2));
    assert_eq!(thp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(thp(&[]).status.code(), Some(2));
    assert_eq!(thp(&["bounds", "--snr-step", "0"]).status.code(), Some(2));
    assert_eq!(
        thp(&["bounds", "--snr-start", "5", "--snr-stop", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        thp(&["simulate", "--users", "5", "--tx-antennas", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(thp(&["simulate", "--bins", "100"]).status.code(), Some(2));
    assert_eq!(thp(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_passes_with_table() {
    let o = thp(&["verify", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    for name in [
        "rate ordering",
        "inequality chain",
        "crypto lemma",
        "LQ reconstruction",
        "estimator oracle",
    ] {
        assert!(
            out.lines().any(|l| l.starts_with("PASS") && l.contains(name)),
            "{name}:\n{out}"
        );
    }
}
