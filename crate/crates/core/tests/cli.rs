//! End-to-end tests of the `srff` binary.

use std::process::{Command, Output};

use srff::analysis::spearman;
use srff::io::RuleFile;

fn srff(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_srff"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("SRFF_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn quad_radial_writes_rule_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.rule");
    let o = srff(
        &[
            "quad",
            "--radial",
            "--d",
            "4",
            "--mr",
            "1",
            "--out",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success());
    let f = RuleFile::read(&path).unwrap();
    assert_eq!(f.nodes, vec![vec![2.0]]);
    assert_eq!(f.weights, vec![1.0]);
}

#[test]
fn quad_spherical_divisibility_exit_code() {
    let o = srff(
        &[
            "quad",
            "--spherical",
            "--kind",
            "omc",
            "--d",
            "4",
            "--ms",
            "6",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("multiple of 4"));
}

#[test]
fn usage_error_exit_code() {
    assert_eq!(srff(&["approx"], None).status.code(), Some(1));
    assert_eq!(srff(&["--help"], None).status.code(), Some(0));
}

#[test]
fn malformed_csv_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,2\n3,oops\n").unwrap();
    let o = srff(
        &[
            "approx",
            "--method",
            "RFF",
            "--ms",
            "4",
            "--data",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("column 2"), "{err}");
}

#[test]
fn corrupted_rule_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.rule");
    let p = path.to_str().unwrap();
    assert!(srff(
        &["quad", "--radial", "--d", "3", "--mr", "3", "--out", p],
        None
    )
    .status
    .success());
    assert!(srff(&["verify", "--rule", p], None).status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<String> = text
        .lines()
        .map(|l| {
            if l.starts_with("node") {
                l.replacen("node ", "node 1", 1)
            } else {
                l.to_string()
            }
        })
        .collect();
    std::fs::write(&path, lines.join("\n")).unwrap();
    assert_eq!(srff(&["verify", "--rule", p], None).status.code(), Some(3));
}

#[test]
fn approx_deterministic_across_thread_counts() {
    let args = [
        "approx",
        "--method",
        "EXACT,SR_OMC,SR_OKQ_MC,RFF,ORF,QMC_HALTON",
        "--mr",
        "1,2",
        "--ms",
        "4,8",
        "--points",
        "300",
        "--n",
        "150",
        "--seeds",
        "3,4",
        "--spectral",
        "--pointwise",
        "--bound-c",
        "0.5",
    ];
    let a = srff(&args, Some("1"));
    let b = srff(&args, Some("3"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("schema,method,"));
    for line in lines.filter(|l| l.contains(",EXACT,")) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[8].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cells[9].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn approx_sweep_decreases() {
    let o = srff(
        &[
            "approx",
            "--method",
            "SR_OMC",
            "--mr",
            "2",
            "--ms",
            "4,8,16,32,64",
            "--points",
            "1000",
            "--d",
            "4",
            "--sigma",
            "median",
            "--seeds",
            "0",
        ],
        None,
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let (m, err): (Vec<f64>, Vec<f64>) = text
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[6].parse::<f64>().unwrap(), c[8].parse::<f64>().unwrap())
        })
        .unzip();
    assert_eq!(m.len(), 5);
    let rho = spearman(&m, &err);
    assert!(rho < -0.9, "Spearman {rho}, errors {err:?}");
}

#[test]
fn bounds_csv() {
    let o = srff(
        &[
            "bounds", "--d", "8", "--mr", "1,3", "--ms", "8,16,32", "--c", "0,0.3",
        ],
        None,
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for r in rows.iter().filter(|r| r[3] == 0.0) {
        assert_eq!((r[5], r[6]), (0.0, 0.0));
    }
    for r in rows.iter().filter(|r| r[3] > 0.0) {
        assert!((r[10] / r[11] - 1.0).abs() < 1e-12);
    }
    for w in rows
        .windows(2)
        .filter(|w| w[0][1] == w[1][1] && w[0][3] == w[1][3] && w[0][3] > 0.0)
    {
        assert!(w[1][5] < w[0][5] && w[1][6] < w[0][6]);
    }
}

#[test]
fn dataset_gen_then_approx_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    let p = path.to_str().unwrap();
    let o = srff(
        &[
            "dataset", "gen", "--kind", "sphere", "--n", "60", "--d", "3", "--radius", "2",
            "--out", p,
        ],
        None,
    );
    assert!(o.status.success());
    let o = srff(
        &[
            "approx",
            "--method",
            "SR_SOMC,RFF",
            "--ms",
            "6",
            "--mr",
            "2",
            "--sigma",
            "1.5",
            "--data",
            p,
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn verify_subset_passes() {
    let o = srff(&["verify", "--only", "1,2,8"], None);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.starts_with("[PASS]"))
            .count(),
        3
    );
}
