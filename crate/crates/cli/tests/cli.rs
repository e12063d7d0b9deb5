use hjlab::Hamiltonian;
use hjlab_cli::reproduce::PaperHamiltonians;
use hjlab_cli::{reproduce_with, run};
use std::fs;
use std::path::Path;
use std::sync::Arc;

fn hjlab(dir: &Path, args: &[&str]) -> i32 {
    let mut all = vec!["hjlab", "--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    run(all)
}

#[test]
fn check_fig1_expectations() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hjlab(d.path(), &["check", "--hamiltonian", "fig1", "--expect", "A6+:sat", "A+:refuted"]), 0);
    let report = fs::read_to_string(d.path().join("check.json")).unwrap();
    assert!(report.contains("\"config_hash\""));
    assert!(d.path().join("psi_a6plus.csv").exists());
}

#[test]
fn check_fig3_expectations() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hjlab(d.path(), &["check", "--hamiltonian", "fig3", "--expect", "A6-:sat", "A-:refuted"]), 0);
}

#[test]
fn wrong_expectation_is_a_scientific_failure() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hjlab(d.path(), &["check", "--hamiltonian", "fig1", "--expect", "A+:sat"]), 1);
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hjlab(d.path(), &["check", "--hamiltonian", "user", "--expr", "p1^^2"]), 2);
    assert_eq!(hjlab(d.path(), &["check", "--hamiltonian", "fig9"]), 2);
    assert_eq!(hjlab(d.path(), &["check", "--expect", "A6+"]), 2);
    assert_eq!(hjlab(d.path(), &["evolve", "--initial", "random"]), 2);
    assert_eq!(hjlab(d.path(), &["frobnicate"]), 2);
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nsize = 3\n").unwrap();
    assert_eq!(hjlab(d.path(), &["--config", cfg.to_str().unwrap(), "evolve"]), 2);
}

#[test]
fn config_file_and_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("scenario.toml");
    fs::write(
        &cfg,
        "[hamiltonian]\nkind = \"fig3\"\n[check]\nexpect = [\"A-:refuted\"]\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(hjlab(d.path(), &["--config", c, "check"]), 0);
    // the flag replaces fig3 by fig1, for which A- holds on samples
    assert_eq!(hjlab(d.path(), &["--config", c, "check", "--hamiltonian", "fig1"]), 1);
}

#[test]
fn evolve_writes_snapshots_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let code = hjlab(
        d.path(),
        &["evolve", "--hamiltonian", "fig1", "--n", "64", "--horizon", "0.5", "--initial", "sin(2*pi*x1)"],
    );
    assert_eq!(code, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("evolve.json")).unwrap()).unwrap();
    let files = manifest["report"]["files"].as_array().unwrap();
    assert_eq!(files.len(), manifest["report"]["times"].as_array().unwrap().len());
    let first = fs::read_to_string(d.path().join(files[0].as_str().unwrap())).unwrap();
    assert!(first.starts_with("# hjlab "));
    assert!(first.contains("# 1,64\n"));
}

#[test]
fn random_initial_data_follows_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "11", "evolve", "--n", "32", "--horizon", "0.2", "--initial", "random"];
    assert_eq!(hjlab(a.path(), &args), 0);
    assert_eq!(hjlab(b.path(), &args), 0);
    let f = "snapshots/u_00000.csv";
    assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    let c = tempfile::tempdir().unwrap();
    let mut other = args;
    other[1] = "12";
    assert_eq!(hjlab(c.path(), &other), 0);
    assert_ne!(fs::read(a.path().join(f)).unwrap(), fs::read(c.path().join(f)).unwrap());
}

#[test]
fn eigenvalue_report() {
    let d = tempfile::tempdir().unwrap();
    let code = hjlab(
        d.path(),
        &["eigenvalue", "--hamiltonian", "eikonal", "--f-expr", "2-cos(2*pi*x1)", "--n", "128", "--horizon", "10"],
    );
    assert_eq!(code, 0);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("eigenvalue.json")).unwrap()).unwrap();
    let c = r["report"]["estimate"]["c_longtime"].as_f64().unwrap();
    assert!((c + 1.0).abs() < 5e-2, "{c}");
    assert_eq!(r["report"]["v0_written"], true);
    assert!(d.path().join("v0.csv").exists());
}

#[test]
fn asymptotics_nr_quadratic() {
    let d = tempfile::tempdir().unwrap();
    let code = hjlab(d.path(), &["asymptotics", "--hamiltonian", "nrquad", "--f-expr", "1-cos(2*pi*x1)", "--n", "128"]);
    assert_eq!(code, 0);
    for f in ["u_infty.csv", "v0.csv", "convergence.csv", "asymptotics.json", "eigenvalue.json"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
}

#[test]
fn asymptotics_fig3_from_rest() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hjlab(d.path(), &["asymptotics", "--hamiltonian", "fig3", "--n", "128"]), 0);
}

#[test]
fn asymptotics_stops_at_coercivity() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hjlab(d.path(), &["asymptotics", "--hamiltonian", "user", "--expr", "p1"]), 1);
    assert!(!d.path().join("eigenvalue.json").exists());
}

#[test]
fn asymptotics_keeps_partial_artifacts() {
    let d = tempfile::tempdir().unwrap();
    // FIG3 from oscillating data has not settled by t = 5
    let code = hjlab(
        d.path(),
        &["asymptotics", "--hamiltonian", "fig3", "--n", "64", "--horizon", "5", "--initial", "0.3*sin(2*pi*x1)"],
    );
    assert_eq!(code, 1);
    assert!(d.path().join("eigenvalue.json").exists());
    assert!(!d.path().join("u_infty.csv").exists());
}

#[test]
fn reproduce_bundle() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("bundle");
    assert_eq!(run(["hjlab", "reproduce-paper", out.to_str().unwrap()]), 0);
    let mut names: Vec<String> =
        fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["fig1_counterexample.json", "fig2_identity.csv", "fig3_values.csv", "psi_nr.csv"]);
    for n in &names {
        assert!(fs::read_to_string(out.join(n)).unwrap().contains("config_hash"), "{n}");
    }
}

#[test]
fn reproduce_detects_tampered_fig2() {
    let d = tempfile::tempdir().unwrap();
    let genuine = Hamiltonian::fig2();
    let tampered = Hamiltonian::custom("fig2", 1, Arc::new(move |x, p| genuine.eval(x, p).unwrap() + 1e-3 * p[0] * p[0]));
    let hs = PaperHamiltonians {
        fig2: tampered,
        ..PaperHamiltonians::default()
    };
    assert_eq!(reproduce_with(&hs, d.path()), 1);
    let table = fs::read_to_string(d.path().join("fig2_identity.csv")).unwrap();
    assert!(table.contains(",fail"));
}

#[test]
fn reproduce_into_unwritable_location() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let target = file.join("bundle");
    assert_eq!(run(["hjlab", "reproduce-paper", target.to_str().unwrap()]), 2);
}
