use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pfzeros::saddle::logistic_closed_q;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pfzeros"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pfzeros")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pfzeros-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_map(name: &str, coeffs: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, format!("{{\"coeffs\": {coeffs}}}")).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn hermite_zeros_n64_has_64_rows() {
    let map = write_map("logistic2.json", "[0, 2, -0.5]");
    let out = scratch("zeros.csv");
    let o = run(&[
        "hermite",
        "zeros",
        "--map",
        s(&map),
        "-n",
        "64",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("index,zero"));
    let r = rows(&text);
    assert_eq!(r.len(), 64);
    assert_eq!(r.iter().filter(|row| row[1] > 0.0).count(), 32);
    assert!(r.windows(2).all(|w| w[0][1] <= w[1][1]));
}

#[test]
fn density_saddle_matches_closed_form() {
    let map = write_map("logistic2q.json", "[0, 2, -0.5]");
    let o = run(&["density", "saddle", "--map", s(&map), "--s", "0.01:0.99:99"]);
    assert!(o.status.success());
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(r.len(), 99);
    for row in &r {
        let want = logistic_closed_q(2.0, row[0]);
        assert!(
            (row[1] - want).abs() <= 1e-10 * want.max(1.0),
            "s={} q={} want {}",
            row[0],
            row[1],
            want
        );
    }
}

#[test]
fn csv_floats_round_trip() {
    let map = write_map("logistic3.json", "[0, 3, -0.5]");
    let o = run(&["density", "saddle", "--map", s(&map), "--s", "0.05:0.4:8"]);
    for line in String::from_utf8(o.stdout).unwrap().lines().skip(1) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:.16e}"), field);
        }
    }
}

#[test]
fn lorenz_report_has_three_fixed_points() {
    let out = scratch("report.json");
    let o = run(&[
        "lorenz",
        "report",
        "--sigma",
        "10",
        "--rho",
        "28",
        "--beta",
        "2.666666667",
        "--grid",
        "4:8",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["fixed_points"].as_array().unwrap().len(), 3);
    for key in ["params", "surfaces", "admissible_mask", "density_samples"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn orbit_output_is_independent_of_threads() {
    let map = write_map("chaotic.json", "[0, 4, -0.5]");
    let args = [
        "orbit",
        "--map",
        s(&map),
        "--x0",
        "1.7",
        "--keep",
        "50000",
        "--range",
        "0:8",
        "--bins",
        "64",
    ];
    let one = bin().args(["--threads", "1"]).args(args).output().unwrap();
    let four = bin().args(["--threads", "4"]).args(args).output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let again = bin().args(["--threads", "1"]).args(args).output().unwrap();
    assert_eq!(one.stdout, again.stdout);
}

#[test]
fn orbit_histogram_compares_to_arcsine() {
    let map = write_map("chaotic2.json", "[0, 4, -0.5]");
    let hist = scratch("hist.csv");
    let o = run(&[
        "orbit",
        "--map",
        s(&map),
        "--x0",
        "1.7",
        "--keep",
        "200000",
        "--range",
        "0:8",
        "--out",
        s(&hist),
    ]);
    assert!(o.status.success());
    let c = run(&[
        "compare",
        "--metric",
        "ks",
        "--sample",
        s(&hist),
        "--reference",
        "arcsine",
    ]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let v: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() < 0.02, "{v}");
}

#[test]
fn zeros_compare_to_semicircle() {
    let map = write_map("logistic2z.json", "[0, 2, -0.5]");
    let zeros = scratch("z.csv");
    assert!(run(&[
        "hermite",
        "zeros",
        "--map",
        s(&map),
        "-n",
        "64",
        "--out",
        s(&zeros)
    ])
    .status
    .success());
    // t = λ sqrt(y / n) / 2 with λ = 2
    let text = std::fs::read_to_string(&zeros).unwrap();
    let mut sample = String::from("t\n");
    for row in rows(&text).iter().filter(|r| r[1] > 0.0) {
        sample.push_str(&format!("{}\n", (row[1] / 64.0).sqrt()));
    }
    let t = scratch("t.csv");
    std::fs::write(&t, sample).unwrap();
    let c = run(&[
        "compare",
        "--metric",
        "ks",
        "--sample",
        s(&t),
        "--reference",
        "semicircle",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() < 0.1, "{v}");
}

#[test]
fn ode_subcommands_emit_json() {
    let sys = scratch("linear.json");
    std::fs::write(
        &sys,
        r#"{"dim": 2, "components": [[{"exps": [1, 0], "coef": -1.0}, {"exps": [0, 0], "coef": 1.0}], [{"exps": [0, 1], "coef": -2.0}]]}"#,
    )
    .unwrap();
    let o = run(&[
        "ode",
        "fixed-points",
        "--system",
        s(&sys),
        "--radius",
        "3",
        "--per-axis",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = &v["points"][0];
    assert!(
        (p[0].as_f64().unwrap() - 1.0).abs() < 1e-12 && p[1].as_f64().unwrap().abs() < 1e-12,
        "{v}"
    );

    let o = run(&[
        "ode",
        "euler",
        "--system",
        s(&sys),
        "--a0",
        "0,1",
        "--delta",
        "0.01",
        "-n",
        "100",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let y = v["a_n"][1].as_f64().unwrap();
    assert!((y - 0.98f64.powi(100)).abs() < 1e-12);

    let o = run(&["ode", "frequencies", "--system", s(&sys), "--at", "0.5,0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "density",
        "saddle",
        "--map",
        "/nonexistent/map.json",
        "--s",
        "0:1:3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["density", "saddle", "--map", "x.json", "--s", "0:1"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"coeffs\": ").unwrap();
    assert_eq!(
        run(&["hermite", "gen", "--map", s(&bad), "-n", "3"])
            .status
            .code(),
        Some(2)
    );

    let map = write_map("logistic2e.json", "[0, 2, -0.5]");
    let o = run(&["density", "saddle", "--map", s(&map), "--s", "-1:0:2"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"].is_string() && err["message"].is_string());

    let o = run(&["lorenz", "report", "--sigma=-1", "--grid", "2:2"]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn help_lists_defaults() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for word in [
        "hermite",
        "density",
        "orbit",
        "ode",
        "lorenz",
        "compare",
        "--seed",
        "--threads",
    ] {
        assert!(text.contains(word), "help lacks {word}");
    }
    let o = run(&["orbit", "--help"]);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("[default: 200]"));
}
