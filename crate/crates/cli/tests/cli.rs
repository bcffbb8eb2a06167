use std::fs;
use std::process::{Command, Output};

fn skcap(args: &[&str]) -> Output {
    skcap_env(args, &[])
}

fn skcap_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_skcap"));
    cmd.args(args).env_remove("SKC_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value of `column` in the first data row of a CSV.
fn field(csv: &str, column: &str) -> String {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == column).unwrap_or_else(|| panic!("no column {column}"));
    row[i].to_string()
}

#[test]
fn point_csv() {
    let o = skcap(&["point", "--snr-a-db", "20", "--snr-b-db", "20", "--snr-e-db", "20", "--rho", "0.9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert_eq!(field(&out, "snr_a_db"), "20");
    assert_eq!(field(&out, "sigma_e2"), "0.01");
    assert_eq!(field(&out, "csi_mi_ab"), "5.66537127");
    assert_eq!(field(&out, "error"), "");
    let again = skcap(&["point", "--snr-a-db", "20", "--snr-b-db", "20", "--snr-e-db", "20", "--rho", "0.9"]);
    assert_eq!(out, stdout(&again));
}

#[test]
fn point_json() {
    let o = skcap(&["point", "--format", "json", "--modes", "csi", "--rho", "0.6"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lb = v["csi"]["lower_bound"].as_f64().unwrap();
    assert!(lb > 0.0 && lb < v["csi"]["mi_ab"].as_f64().unwrap());
    assert!(v["rss"].is_null());
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &["point", "--rho", "1.5"][..],
        &["point", "--p", "0"],
        &["point", "--tol", "-1"],
        &["point", "--modes", "csi,nonsense"],
        &["sweep", "--axis", "bogus"],
        &["sweep", "--start", "10", "--stop", "0"],
        &["figure", "fig9"],
        &["point", "--format", "xml"],
        &["point", "--config", "/nonexistent/skcap.ini"],
    ] {
        let o = skcap(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn numerical_failure_exits_3() {
    let o = skcap(&["point", "--rho", "1", "--snr-a-db", "300", "--snr-b-db", "300", "--snr-e-db", "300"]);
    assert_eq!(code(&o), 3);
    assert!(field(&stdout(&o), "error").contains("degenerate"));
}

#[test]
fn validation_exit_codes() {
    let one = |snr: &str, rho: &str, n: &str| {
        skcap(&["validate", "--axis", "snr_db", "--start", snr, "--stop", snr, "--count", "1", "--rho", rho, "--samples", n])
    };
    let ok = one("0", "0.5", "5000");
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(String::from_utf8_lossy(&ok.stderr).contains("13/13 checks passed"));
    // far too few samples for a 30 dB channel: the estimator bias dominates
    let bad = one("30", "0.9", "3000");
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).lines().skip(1).any(|l| l.contains(",false,")));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("run.ini");
    fs::write(&ini, "rho = 0.3\nmodes = csi\nsnr_a_db = 5\n\n[point]\nsnr-b-db = 7\n\n[strong]\nrho = 0.8\n").unwrap();
    let ini = ini.to_str().unwrap();

    let base = stdout(&skcap(&["point", "--config", ini]));
    assert_eq!(field(&base, "rho_abs"), "0.3");
    assert_eq!(field(&base, "snr_a_db"), "5");
    assert_eq!(field(&base, "sigma_b2"), "0.199526231");
    assert_eq!(field(&base, "rss_mi_ab"), "");

    let flagged = stdout(&skcap(&["point", "--config", ini, "--rho", "0.5"]));
    assert_eq!(field(&flagged, "rho_abs"), "0.5");
    let section = stdout(&skcap(&["point", "--config", ini, "--section", "strong"]));
    assert_eq!(field(&section, "rho_abs"), "0.8");
    assert_eq!(code(&skcap(&["point", "--config", ini, "--section", "missing"])), 2);

    fs::write(dir.path().join("bad.ini"), "rho = lots\n").unwrap();
    assert_eq!(code(&skcap(&["point", "--config", dir.path().join("bad.ini").to_str().unwrap()])), 2);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["sweep", "--axis", "rho", "--count", "4", "--tol", "1e-4", "--tol3", "1e-2"];
    let one = skcap_env(&args, &[("SKC_THREADS", "1")]);
    let two = skcap_env(&args, &[("SKC_THREADS", "2")]);
    assert_eq!(code(&one), 0);
    assert_eq!(stdout(&one), stdout(&two));
    assert_eq!(stdout(&one).lines().count(), 5);
    let flag = skcap_env(&[&args[..], &["--threads", "3"]].concat(), &[("SKC_THREADS", "0")]);
    assert_eq!(stdout(&flag), stdout(&one));
    assert_eq!(code(&skcap_env(&args, &[("SKC_THREADS", "0")])), 2);
}

#[test]
fn figure_writes_one_file_per_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("figs");
    let o = skcap(&["figure", "fig5", "--modes", "csi", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["fig5_20db.csv", "fig5_5db.csv"]);
    let csv = fs::read_to_string(out.join("fig5_20db.csv")).unwrap();
    assert_eq!(field(&csv, "snr_eve_db"), "0");
    let delta: f64 = field(&csv, "delta_csi_lb").parse().unwrap();
    assert!(delta.abs() < 1e-9);

    let piped = stdout(&skcap(&["figure", "fig2", "--modes", "csi"]));
    assert!(piped.starts_with("# fig2.csv\nsnr_db,"));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let args = ["sweep", "--modes", "csi", "--count", "7", "--clamp"];
    assert_eq!(code(&skcap(&[&args[..], &["--out", path.to_str().unwrap()]].concat())), 0);
    assert_eq!(fs::read_to_string(&path).unwrap(), stdout(&skcap(&args)));
}
