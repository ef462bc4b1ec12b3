use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quasinil_cli::output::{read_manifest, MANIFEST_FILE};

fn quasinil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasinil"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn partitions_small_and_capped() {
    let one = quasinil(&["partitions", "--p", "1"]);
    assert!(one.status.success());
    let r = rows(&stdout(&one));
    assert_eq!(r.len(), 2);
    assert_eq!((&r[0][0], &r[0][3]), ("1;1", "1"));
    assert_eq!((&r[1][0], &r[1][3]), ("s_1(1)", "1"));

    let four = stdout(&quasinil(&["partitions", "--p", "4"]));
    assert!(four.contains("\"4;2,1,1\",3,210,40"));

    let big = quasinil(&["partitions", "--p", "30"]);
    assert_eq!(big.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&big.stderr).contains("cap"));
}

#[test]
fn cap_override_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_quasinil"))
        .args(["partitions", "--p", "4"])
        .env("QUASINIL_ALPHA_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_similarity_lines() {
    let o = quasinil(&["verify", "--suite", "similarity"]);
    assert!(o.status.success());
    assert!(stdout(&o)
        .lines()
        .any(|l| l.starts_with("W_2A_3W_2⁻¹ = B_2+A_3-A_2") && l.ends_with(": pass")));
}

#[test]
fn verify_algebra_lines_and_fault() {
    let o = quasinil(&["verify", "--suite", "algebra"]);
    assert!(o.status.success());
    assert!(stdout(&o)
        .lines()
        .any(|l| l == "[S(1,2), A_4] = 0 [geometric:1/2]: pass"));

    let bad = quasinil(&["verify", "--suite", "algebra", "--inject-fault", "s-sign"]);
    assert_eq!(bad.status.code(), Some(3));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(
        err.contains("first failing identity: [S(1,2), A_4] = 0"),
        "{err}"
    );
}

#[test]
fn norms_examples() {
    let o = quasinil(&[
        "norms",
        "--coeffs",
        "geometric:1/2",
        "--N",
        "1",
        "--kmax",
        "2",
    ]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!((&r[0][1], &r[0][3], &r[0][5]), ("0.5", "1", "true"));
    assert_eq!(&r[1][1], "0");

    let o = quasinil(&[
        "norms",
        "--coeffs",
        "geometric:1/2",
        "--N",
        "10",
        "--kmax",
        "10",
    ]);
    let r = rows(&stdout(&o));
    let root = |k: usize| r[k - 1][2].parse::<f64>().unwrap();
    assert!(root(10) < root(1));
}

#[test]
fn moments_routes_agree() {
    let o = quasinil(&[
        "moments",
        "--coeffs",
        "geometric:1/2",
        "--op",
        "X",
        "--order",
        "2",
        "--method",
        "all",
        "--N",
        "8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(&r[0][3], "1/3");
    let routes: Vec<&str> = r.iter().map(|x| x.get(1).unwrap()).collect();
    assert_eq!(
        routes,
        [
            "combinatorial",
            "combinatorial",
            "dense_oracle",
            "rademacher_exact",
            "charfn"
        ]
    );

    let dense = quasinil(&[
        "moments",
        "--coeffs",
        "geometric:1/2",
        "--op",
        "X",
        "--order",
        "2",
        "--method",
        "dense",
    ]);
    assert_eq!(dense.status.code(), Some(2));
}

#[test]
fn coefficient_file_and_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    fs::write(&path, r#"{"kind": "list", "values": ["1/2", "1/3"]}"#).unwrap();
    let arg = format!("@{}", path.display());
    let o = quasinil(&[
        "moments", "--coeffs", &arg, "--op", "AstarA", "--order", "1",
    ]);
    assert!(o.status.success());
    assert_eq!(&rows(&stdout(&o))[0][3], "13/72");

    assert_eq!(
        quasinil(&[
            "sigma",
            "--coeffs",
            "geometric:3/2",
            "--kmax",
            "2",
            "--N",
            "3"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        quasinil(&["sigma", "--coeffs", "nonsense", "--kmax", "2", "--N", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        quasinil(&["ratio", "--word", "PX", "--alpha", "1/2", "--mmax", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(quasinil(&["partitions"]).status.code(), Some(2));
}

#[test]
fn gfun_points() {
    let o = quasinil(&["gfun", "--coeffs", "list:1/2", "--z", "2", "--z", "-1i"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2);
    let g: f64 = r[0][2].parse().unwrap();
    assert!((g - 2.0).abs() < 1e-9);
    let gi: f64 = r[1][3].parse().unwrap();
    assert!((gi + 0.5).abs() < 1e-9);
}

fn rerun(manifest_dir: &Path, out: &Path) {
    let m = read_manifest(&manifest_dir.join(MANIFEST_FILE)).unwrap();
    let mut args: Vec<String> = m.command[1..].to_vec();
    let i = args.iter().position(|a| a == "--out").unwrap();
    args[i + 1] = out.display().to_string();
    let status = Command::new(env!("CARGO_BIN_EXE_quasinil"))
        .args(&args)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn manifests_reproduce_outputs() {
    let runs: [&[&str]; 4] = [
        &["partitions", "--p", "5"],
        &[
            "sample", "--alpha", "1/3", "--count", "20000", "--seed", "9", "--bins", "16",
        ],
        &[
            "sigma",
            "--coeffs",
            "list:1/2,1/3,1/7",
            "--kmax",
            "3",
            "--N",
            "3",
        ],
        &["ratio", "--word", "QPQ", "--alpha", "2/3", "--mmax", "12"],
    ];
    for args in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut full: Vec<&str> = args.to_vec();
        let a_path = a.path().display().to_string();
        full.extend(["--out", &a_path]);
        assert!(quasinil(&full).status.success());
        rerun(a.path(), b.path());
        let m = read_manifest(&a.path().join(MANIFEST_FILE)).unwrap();
        assert!(!m.files.is_empty());
        for f in &m.files {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }
}

#[test]
fn sample_manifest_records_seed_and_level() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = quasinil(&[
        "sample", "--alpha", "1/2", "--count", "1000", "--seed", "5", "--bins", "10", "--out", &d,
    ]);
    assert!(o.status.success());
    let m = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.seed, Some(5));
    assert_eq!(m.files, ["histogram.csv", "sample.json"]);
    let hist = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    let total: u64 = rows(&hist)
        .iter()
        .map(|r| r[2].parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 1000);
}
