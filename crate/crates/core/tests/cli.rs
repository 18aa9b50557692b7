use std::process::{Command, Output};

fn paircorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paircorr"))
        .args(args)
        .env_remove("PAIRCORR_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn paircorr_emits_one_csv_row() {
    let o = paircorr(&[
        "paircorr", "--seq", "geometric:2", "--alpha", "1/3", "--N", "6", "--window", "indicator:1",
        "--algorithm", "direct",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,alpha,window,algorithm,value");
    // {2^x / 3} alternates 2/3, 1/3: 2 clusters of 3 points, 12 ordered pairs.
    assert_eq!(lines[1], "6,1/3,indicator:1,direct,2.0");
}

#[test]
fn json_rows_mirror_the_columns() {
    let o = paircorr(&[
        "count-b", "--seq", "geometric:2", "--N", "3", "--epsilon", "0.2", "--mode", "both", "--out", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["count"], 120);
        assert_eq!(r["N"], 3);
        assert_eq!(r["M"], 3);
        for key in ["epsilon", "K", "mode", "bound_ratio", "elapsed_ms"] {
            assert!(r.get(key).is_some(), "{key}");
        }
    }
    assert_eq!(rows[0]["mode"], "oracle");
    assert_eq!(rows[1]["mode"], "fast");
}

#[test]
fn count_a_grid_and_bound_report() {
    let o = paircorr(&[
        "count-a", "--seq", "geometric:2", "--grid", "20,40,80", "--epsilon", "0.2", "--delta-ref", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("N,epsilon,M,K,mode,count,bound_ratio,elapsed_ms\n"));
    assert_eq!(text.lines().count(), 4);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bound:"), "{err}");
}

#[test]
fn moments_and_convergence_headers() {
    let o = paircorr(&["expect", "--seq", "iid", "--N", "200", "--samples", "40", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("N,window,samples,seed,mean,stderr,variance,ci_lo,ci_hi\n"));
    let o = paircorr(&["variance", "--seq", "geometric:3/2", "--N", "64", "--samples", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let o = paircorr(&[
        "convergence", "--seq", "geometric:3/2", "--grid", "16,32", "--samples", "3", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("N,alpha,value,abs_dev\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn same_seed_same_output() {
    let args = ["expect", "--seq", "geometric:3/2", "--N", "128", "--samples", "30", "--seed", "11"];
    assert_eq!(stdout(&paircorr(&args)), stdout(&paircorr(&args)));
}

#[test]
fn out_file_receives_the_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let o = paircorr(&["selftest", "--out-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("check,pass,detail\n"));
    assert!(!text.contains(",false,"));
}

#[test]
fn exit_codes() {
    assert_eq!(paircorr(&["paircorr", "--alpha", "x", "--N", "5"]).status.code(), Some(2));
    assert_eq!(paircorr(&["nonsense"]).status.code(), Some(2));
    assert_eq!(paircorr(&["count-a", "--seq", "sqrt", "--N", "5"]).status.code(), Some(2));
    assert_eq!(
        paircorr(&["count-b", "--N", "500", "--mode", "oracle"]).status.code(),
        Some(3)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_paircorr"))
        .arg("selftest")
        .env("PAIRCORR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_paircorr"))
        .args(["count-b", "--N", "4", "--mode", "both"])
        .env("PAIRCORR_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn fourier_needs_a_transform() {
    let o = paircorr(&[
        "paircorr", "--alpha", "1.5", "--N", "32", "--window", "indicator:1", "--algorithm", "fourier",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
