use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qentropy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value(out: &Output) -> f64 {
    stdout(out).trim().parse().unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&fs::read_to_string(PathBuf::from(name)).unwrap()).unwrap()
}

#[test]
fn entropy_measures() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"probs": [0.5, 0.25, 0.25]}"#);

    let seff = value(&run(&["entropy", "--measure", "seff-corrected", "--ha", "1.8", "--hb", "1.4", "--iab", "0.34"]));
    assert!((seff - 2.86f64.exp()).abs() < 1e-9);
    assert!((seff - 17.46).abs() < 0.01);

    let hill = value(&run(&["entropy", "--measure", "hill", "--q", "2", "--input", s(&p)]));
    assert!((hill - 8.0 / 3.0).abs() < 1e-12);

    let renyi = stdout(&run(&["entropy", "--measure", "renyi", "--q", "1", "--input", s(&p)]));
    let shannon = stdout(&run(&["entropy", "--measure", "shannon", "--input", s(&p)]));
    assert_eq!(renyi, shannon);
    assert!((shannon.trim().parse::<f64>().unwrap() - 1.5 * 2f64.ln()).abs() < 1e-12);

    let bits = value(&run(&["entropy", "--measure", "shannon", "--units", "bits", "--input", s(&p)]));
    assert!((bits - 1.5).abs() < 1e-12);

    let r = write(&dir, "r.json", r#"{"probs": [0.25, 0.25, 0.5]}"#);
    let kl = value(&run(&["entropy", "--measure", "kl", "--input", s(&p), "--reference", s(&r)]));
    assert!((kl - 0.25 * 2f64.ln()).abs() < 1e-12);

    let j = write(&dir, "j.json", r#"{"probs": [[0.5, 0], [0, 0.5]]}"#);
    let mi = value(&run(&["entropy", "--measure", "mutual-info", "--input", s(&j)]));
    assert!((mi - 2f64.ln()).abs() < 1e-12);

    let json: serde_json::Value =
        serde_json::from_str(&stdout(&run(&["entropy", "--measure", "tsallis", "--q", "2", "--input", s(&p), "--format", "json"])))
            .unwrap();
    assert_eq!(json["measure"], "tsallis");
    assert!((json["value"].as_f64().unwrap() - 0.625).abs() < 1e-12);
}

#[test]
fn profile_writes_csv_and_manifest() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"probs": [0.5, 0.25, 0.25]}"#);
    let out = dir.path().join("profile.csv");
    stdout(&run(&["entropy", "--measure", "profile", "--q-values", "1,2", "--input", s(&p), "--out", s(&out)]));
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "q,hill_number");
    assert!(rows[2].starts_with("2,2.666666666666"));
    let m = manifest(&out);
    assert_eq!(m["subcommand"], "entropy");
    assert_eq!(m["parameters"]["measure"], "profile");
    assert_eq!(m["inputs"][s(&p)].as_str().unwrap().len(), 64);
    assert!(m["version"].is_string());
}

#[test]
fn malformed_input_exits_2_with_location() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\n  \"probs\": [0.5, \"x\"]\n}");
    let out = dir.path().join("never.txt");
    let o = run(&["entropy", "--measure", "shannon", "--input", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line "));
    assert!(!out.exists());

    let samples = write(&dir, "m.csv", "M\n3\nfour\n");
    let o = run(&["fit", "--samples", s(&samples), "--n", "10", "--d", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3, field 1"));

    let o = run(&["entropy", "--measure", "hill", "--q", "-1", "--input", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn maxent_solutions_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "e.json", r#"{"states": ["a", "b", "c", "d"]}"#);
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&["maxent", "--constraints", s(&empty)]))).unwrap();
    for p in json["probs"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 0.25).abs() < 1e-15);
    }

    let bern = write(&dir, "b.json", r#"{"states": [0, 1], "observables": [[0, 1]], "targets": [0.3]}"#);
    let out = dir.path().join("sol.json");
    stdout(&run(&["maxent", "--constraints", s(&bern), "--out", s(&out)]));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let lambda = json["lambdas"][0].as_f64().unwrap();
    assert!((lambda - (7f64 / 3.0).ln()).abs() < 1e-9);
    assert!((lambda - 0.847298).abs() < 1e-6);
    assert!(json["max_residual"].as_f64().unwrap() < 1e-10);

    let csv = stdout(&run(&["maxent", "--constraints", s(&bern), "--format", "csv"]));
    assert!(csv.starts_with("state,probability\n0,0.7"));

    let far = write(&dir, "f.json", r#"{"states": [0, 1], "observables": [[0, 1]], "targets": [1.3]}"#);
    assert_eq!(run(&["maxent", "--constraints", s(&far)]).status.code(), Some(4));

    let hard = write(&dir, "h.json", r#"{"states": [0, 1, 2], "observables": [[0, 1, 2]], "targets": [1.999]}"#);
    assert_eq!(run(&["maxent", "--constraints", s(&hard), "--max-iter", "1"]).status.code(), Some(3));
}

#[test]
fn chain_count_and_too_large() {
    let csv = stdout(&run(&["chain", "--n", "4", "--d", "1"]));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "M,exact,asymptotic");
    for (row, m) in rows[2..5].iter().zip(1..) {
        assert!(row.starts_with(&format!("{m},2,")), "{row}");
    }
    assert_eq!(run(&["chain", "--n", "200", "--d", "8"]).status.code(), Some(5));
}

#[test]
fn chain_sampling_is_seeded() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "chain", "--n", "100", "--d", "4", "--mode", "sample", "--q", "1.8", "--psi", "1.3", "--count", "1000",
            "--seed", "42", "--out",
        ]
        .into_iter()
        .map(String::from)
        .chain([s(out).to_string()])
        .collect::<Vec<_>>()
    };
    for out in [&a, &b] {
        let argv = args(out);
        stdout(&run(&argv.iter().map(String::as_str).collect::<Vec<_>>()));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let values: Vec<usize> = String::from_utf8(text).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 1000);
    assert!(values.iter().all(|&m| m <= 100));
    let m = manifest(&a);
    assert_eq!(m["seed"], 42);
    assert_eq!(m["degeneracy_source"], "exact");

    // Without --seed the drawn seed is recorded and reproduces the output.
    let c = dir.path().join("c.csv");
    stdout(&run(&[
        "chain", "--n", "30", "--d", "2", "--mode", "sample", "--q", "1.2", "--psi", "0.5", "--count", "50", "--out", s(&c),
    ]));
    let seed = manifest(&c)["seed"].as_u64().unwrap().to_string();
    let again = stdout(&run(&[
        "chain", "--n", "30", "--d", "2", "--mode", "sample", "--q", "1.2", "--psi", "0.5", "--count", "50", "--seed", &seed,
    ]));
    assert_eq!(fs::read_to_string(&c).unwrap(), again);
}

#[test]
fn chain_pmf_and_states() {
    let csv = stdout(&run(&["chain", "--n", "4", "--d", "1", "--mode", "pmf", "--q", "1", "--psi", "1"]));
    let p1: f64 = csv.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let z = 2.0 * ((-1f64).exp() + (-2f64).exp() + (-3f64).exp());
    assert!((p1 - 2.0 * (-1f64).exp() / z).abs() < 1e-14);

    let states = stdout(&run(&["chain", "--n", "10", "--d", "3", "--mode", "states", "--m", "4", "--count", "5", "--seed", "1"]));
    let lines: Vec<&str> = states.lines().collect();
    assert_eq!(lines.len(), 5);
    for l in lines {
        assert_eq!(l.len(), 10);
        assert_eq!(l.matches('1').count(), 4);
        let flips = l.as_bytes().windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 3);
    }
}

#[test]
fn fit_pipeline_with_surface() {
    let dir = TempDir::new().unwrap();
    let samples = dir.path().join("s.json");
    stdout(&run(&[
        "chain", "--n", "100", "--d", "4", "--mode", "sample", "--q", "1.8", "--psi", "1.3", "--count", "1000", "--seed", "2",
        "--format", "json", "--out", s(&samples),
    ]));
    let fit_out = dir.path().join("fit.json");
    let surface = dir.path().join("surface.csv");
    let argv = [
        "fit", "--samples", s(&samples), "--surface", s(&surface), "--surface-points", "9", "--out", s(&fit_out),
    ];
    stdout(&run(&argv));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(&fit_out).unwrap()).unwrap();
    let q = fit["q_star"].as_f64().unwrap();
    assert!((q - 1.8).abs() <= 0.15, "{q}");
    assert_eq!(fit["converged"], true);
    assert_eq!(manifest(&fit_out)["degeneracy_source"], "exact");

    let csv = fs::read_to_string(&surface).unwrap();
    let deltas: Vec<f64> = csv.lines().skip(1).filter_map(|l| l.rsplit(',').next()?.parse().ok()).collect();
    assert_eq!(deltas.len(), 81);
    assert!(deltas.iter().all(|&d| d >= 0.0));
    assert_eq!(deltas.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
    assert_eq!(deltas[40], 0.0);

    let first = (fs::read(&fit_out).unwrap(), fs::read(&surface).unwrap());
    stdout(&run(&argv));
    assert_eq!(first, (fs::read(&fit_out).unwrap(), fs::read(&surface).unwrap()));
}

#[test]
fn fit_recovers_exponential_regime() {
    let dir = TempDir::new().unwrap();
    let samples = dir.path().join("s.csv");
    stdout(&run(&[
        "chain", "--n", "100", "--d", "4", "--mode", "sample", "--q", "1", "--psi", "0.8", "--count", "20000", "--seed", "3",
        "--out", s(&samples),
    ]));
    let csv = stdout(&run(&["fit", "--samples", s(&samples), "--n", "100", "--d", "4", "--format", "csv"]));
    let q: f64 = csv.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((q - 1.0).abs() < 0.1, "{q}");
}

#[test]
fn fit_failure_exits_6() {
    let dir = TempDir::new().unwrap();
    let samples = write(&dir, "s.json", r#"{"n": 8, "d": 0, "samples": [0, 0, 0, 0, 0, 0]}"#);
    let o = run(&["fit", "--samples", s(&samples), "--q-min", "0.5", "--q-max", "2"]);
    assert_eq!(o.status.code(), Some(6), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn scaling_verdicts() {
    let dir = TempDir::new().unwrap();
    let mut exp = String::from("n,w\n");
    for n in 2..=12 {
        exp.push_str(&format!("{n},{}\n", 2u64.pow(n)));
    }
    let series = write(&dir, "exp.csv", &exp);
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&["scaling", "--series", s(&series)]))).unwrap();
    assert_eq!(json["recommendation"], "shannon");
    assert!(json["report"].as_str().unwrap().contains("Shannon"));

    let mut chain = String::from("n,w\n");
    for n in (40..=200u64).step_by(10) {
        let c = (n - 1) * (n - 2) * (n - 3) * (n - 4) / 24;
        chain.push_str(&format!("{n},{}\n", 2 * c));
    }
    let series = write(&dir, "chain.csv", &chain);
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&["scaling", "--series", s(&series)]))).unwrap();
    assert_eq!(json["recommendation"], "generalized-q");
    assert_eq!(json["model"], "power-law");

    let short = write(&dir, "short.csv", "n,w\n1,2\n2,4\n3,8\n");
    assert_eq!(run(&["scaling", "--series", s(&short)]).status.code(), Some(7));
}
