use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vblast(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vblast"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("VBLAST_WORKERS", w),
        None => cmd.env_remove("VBLAST_WORKERS"),
    };
    cmd.output().expect("spawn vblast")
}

fn run_to(dir: &TempDir, name: &str, args: &[&str]) -> (Output, String) {
    let path = dir.path().join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p]);
    let out = vblast(&full, None);
    (out, read(&path))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_default()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn equiv_small_sweep_passes() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_to(&dir, "e.csv", &["equiv", "--m", "2", "--trials", "100", "--snr-db", "20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(csv.starts_with("M,N,snr_db,trial,algorithm,hard_match,min_q_gap,max_soft_err\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 100 * 10);
    assert!(r.iter().all(|row| row[5] == "true"));
    assert!(!csv.contains('\r'));
}

#[test]
fn equiv_single_stream_passes() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_to(&dir, "e.csv", &["equiv", "--m", "1", "--trials", "20", "--snr-db", "0,inf"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(rows(&csv).iter().all(|row| row[5] == "true" && row[6] == "inf"));
}

#[test]
fn zero_trials_is_a_usage_error() {
    let out = vblast(&["equiv", "--trials", "0"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("trials"));
}

#[test]
fn bad_dimensions_are_rejected() {
    let out = vblast(&["mem", "--m", "4", "--n", "2"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("smaller than"));
}

#[test]
fn output_does_not_depend_on_run_or_pool_size() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (i, w) in ["1", "1", "5"].iter().enumerate() {
        let path = dir.path().join(format!("{i}.csv"));
        let p = path.to_str().unwrap();
        let out = vblast(
            &["equiv", "--m", "2,3", "--trials", "40", "--snr-db", "5,15", "--seed", "7", "--out", p],
            Some(w),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let ber = |w: &str| {
        let path = dir.path().join(format!("ber{w}.csv"));
        let p = path.to_str().unwrap();
        let out = vblast(&["ber", "--m", "3", "--n", "4", "--trials", "300", "--snr-db", "8", "--out", p], Some(w));
        assert!(out.status.success());
        std::fs::read(&path).unwrap()
    };
    assert_eq!(ber("1"), ber("6"));
}

#[test]
fn seed_changes_output() {
    let dir = TempDir::new().unwrap();
    let (_, a) = run_to(&dir, "a.csv", &["equiv", "--m", "3", "--trials", "5", "--seed", "1"]);
    let (_, b) = run_to(&dir, "b.csv", &["equiv", "--m", "3", "--trials", "5", "--seed", "2"]);
    assert_ne!(a, b);
}

#[test]
fn flops_ratios_at_64() {
    let dir = TempDir::new().unwrap();
    let ratios = dir.path().join("ratios.csv");
    let (out, csv) =
        run_to(&dir, "f.csv", &["flops", "--m", "8,16,32,64", "--ratios", ratios.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(rows(&csv).len(), 4 * 10);

    let r = read(&ratios);
    assert!(r.starts_with("M,N,ratio,measured,reference,tolerance,within\n"));
    let at64: Vec<_> = rows(&r).into_iter().filter(|row| row[0] == "64").collect();
    let names: Vec<&str> = at64.iter().map(|row| row[2].as_str()).collect();
    assert_eq!(names, ["speed_adv/proposed", "mem_saving/proposed", "fastest_known/speed_adv", "init_i/init_v"]);
    assert!(at64.iter().all(|row| row[6] == "true"));

    // model gaps shrink between the ends of the sweep
    let gap = |m: &str, alg: &str| -> f64 {
        rows(&csv).iter().find(|row| row[0] == m && row[2] == alg).unwrap()[7].parse().unwrap()
    };
    for alg in ["original", "fastest_known", "speed_adv", "mem_saving", "proposed_1", "proposed_2"] {
        assert!(gap("64", alg) <= gap("8", alg), "{alg}");
        assert!(gap("64", alg) <= 0.10, "{alg}");
    }
}

#[test]
fn flops_single_stream() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_to(&dir, "f.csv", &["flops", "--m", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for row in rows(&csv) {
        let total: u64 = row[3].parse::<u64>().unwrap() + row[4].parse::<u64>().unwrap();
        assert!(total <= 10, "{row:?}");
    }
}

#[test]
fn mem_claims_hold() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_to(&dir, "m.csv", &["mem", "--m", "1,4,16,32"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let peak = |m: &str, alg: &str| -> u64 {
        rows(&csv).iter().find(|row| row[0] == m && row[2] == alg).unwrap()[3].parse().unwrap()
    };
    assert_eq!(peak("16", "proposed_2"), 288);
    assert_eq!(peak("16", "mem_saving"), 560);
    for m in ["4", "16", "32"] {
        assert!(peak(m, "proposed_2") < peak(m, "speed_adv"));
    }
    assert!(csv.contains("16,16,proposed_2,288,Ht=256;z=16;scratch=16\n"));
}

#[test]
fn noiseless_ber_is_zero() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_to(&dir, "b.csv", &["ber", "--m", "4", "--trials", "500", "--snr-db", "inf"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = rows(&csv);
    assert_eq!(r.len(), 10);
    assert!(r.iter().all(|row| row[4] == "0" && row[5] == "4000" && row[6] == "0"));
}

#[test]
fn ber_falls_with_snr_and_detectors_agree() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_to(
        &dir,
        "b.csv",
        &["ber", "--m", "4", "--trials", "100000", "--snr-db", "10,25", "--algo", "proposed_2,speed_adv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let r = rows(&csv);
    let ber = |snr: &str, alg: &str| -> f64 {
        r.iter().find(|row| row[2] == snr && row[3] == alg).unwrap()[6].parse().unwrap()
    };
    assert!(ber("25", "proposed_2") < ber("10", "proposed_2"));
    assert!(ber("10", "proposed_2") > 0.0);
    assert_eq!(ber("10", "proposed_2"), ber("10", "speed_adv"));
}

#[test]
fn soft_cancellation_and_qam16_run() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_to(
        &dir,
        "e.csv",
        &["equiv", "--m", "3", "--n", "5", "--trials", "50", "--snr-db", "20", "--cancel-soft", "--modulation", "qam16"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(rows(&csv).len(), 500);
}

#[test]
fn failed_gate_names_first_failure() {
    // the Sherman-Morrison initialized detectors cannot hold the 1e-9 soft
    // tolerance at the noiseless regularization floor
    let dir = TempDir::new().unwrap();
    let (out, csv) =
        run_to(&dir, "e.csv", &["equiv", "--m", "8", "--trials", "50", "--snr-db", "inf", "--algo", "original"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("FAIL: original disagrees with oracle"));
    assert_eq!(rows(&csv).len(), 50);
}
