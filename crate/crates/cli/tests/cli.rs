use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn numetric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_numetric"))
        .args(args)
        .env_remove("NUMETRIC_GRID")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn dist_between_constants() {
    let o = numetric(&["dist", &data("zero.json"), &data("one.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("d_nu            0.707107"), "{}", stdout(&o));
}

#[test]
fn dist_degenerate_branch() {
    let o = numetric(&["--format", "json", "dist", &data("zero.json"), &data("inv_z.json")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["value"], 1.0);
    assert_eq!(v["branch"], "degenerate_one");
}

#[test]
fn margin_of_unit_plant() {
    let o = numetric(&["--format", "json", "margin", &data("one.json"), &data("zero.json")]);
    assert_eq!(code(&o), 0);
    let mu = json(&o)["mu"].as_f64().unwrap();
    assert!((mu - 0.5f64.sqrt()).abs() < 1e-6);
}

#[test]
fn stabilizes_exit_codes() {
    assert_eq!(code(&numetric(&["stabilizes", &data("inv_z.json"), &data("two.json")])), 0);
    assert_eq!(code(&numetric(&["stabilizes", &data("inv_z.json"), &data("zero.json")])), 1);
}

#[test]
fn certify_closed_form_triple() {
    let o = numetric(&[
        "--format",
        "json",
        "certify",
        &data("inv_z.json"),
        &data("two.json"),
        &data("inv_z_scaled.json"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    let close = |key: &str, want: f64| (v[key].as_f64().unwrap() - want).abs() < 1e-5;
    assert!(close("mu0", 0.316228) && close("dnu", 0.047565), "{v}");
    assert!(close("predicted_margin_lower_bound", 0.270746) && close("actual_mu1", 0.360994), "{v}");
    assert_eq!(v["certified"], true);
}

#[test]
fn certify_rejects_far_plant() {
    let o = numetric(&["certify", &data("inv_z.json"), &data("two.json"), &data("zero.json")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("certified       no"));
}

#[test]
fn sweep_rows() {
    let o = numetric(&["sweep", &data("zero.json"), "--values", "0,0.5,1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "param,d_nu,mu,branch");
    assert_eq!(lines.len(), 4);
    let d: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for (k, got) in [0.0f64, 0.5, 1.0].iter().zip(&d) {
        assert!((got - k / (1.0 + k * k).sqrt()).abs() < 1e-9);
    }
    let r = numetric(&["sweep", &data("zero.json"), "--from", "0", "--to", "2", "--steps", "5"]);
    assert_eq!(stdout(&r).lines().count(), 6);
}

#[test]
fn input_errors_exit_2() {
    let bad = numetric(&["dist", &data("zero.json"), &data("malformed.json")]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("line 2"), "{}", stderr(&bad));
    assert_eq!(code(&numetric(&["dist", &data("zero.json"), &data("missing.json")])), 2);
    assert_eq!(code(&numetric(&["dist", &data("one.json"), &data("identity2.json")])), 2);
    assert_eq!(code(&numetric(&["--grid", "1000", "dist", &data("zero.json"), &data("one.json")])), 2);
    assert_eq!(code(&numetric(&["--tol", "tight", "dist", &data("zero.json"), &data("one.json")])), 2);
    assert_eq!(code(&numetric(&["sweep", &data("zero.json"), "--from", "0", "--to", "1", "--steps", "0"])), 2);
    assert_eq!(code(&numetric(&["frobnicate"])), 2);
}

#[test]
fn grid_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_numetric"))
        .args(["--format", "json", "dist", &data("zero.json"), &data("one.json")])
        .env("NUMETRIC_GRID", "1024")
        .output()
        .unwrap();
    assert_eq!(json(&o)["grid_size_used"], 1024);
    let o = Command::new(env!("CARGO_BIN_EXE_numetric"))
        .args(["--grid", "256", "--format", "json", "dist", &data("zero.json"), &data("one.json")])
        .env("NUMETRIC_GRID", "1024")
        .output()
        .unwrap();
    assert_eq!(json(&o)["grid_size_used"], 256);
}

#[test]
fn random_axioms_pass() {
    let o = numetric(&["axioms", "--random", "20", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("passed          yes"));
}

#[test]
fn axioms_on_files() {
    let files = [data("zero.json"), data("one.json"), data("two.json"), data("inv_z.json")];
    let mut args = vec!["--format", "csv", "axioms"];
    args.extend(files.iter().map(String::as_str));
    let o = numetric(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("check,worst,tolerance,passed\n"));
}

#[test]
fn output_is_identical_with_and_without_parallel() {
    for format in ["json", "csv"] {
        let seq = numetric(&["--format", format, "axioms", "--random", "8", "--outputs", "2", "--seed", "3"]);
        let par = numetric(&[
            "--parallel",
            "--format",
            format,
            "axioms",
            "--random",
            "8",
            "--outputs",
            "2",
            "--seed",
            "3",
        ]);
        let again = numetric(&["--format", format, "axioms", "--random", "8", "--outputs", "2", "--seed", "3"]);
        assert_eq!(code(&seq), 0);
        assert_eq!(seq.stdout, par.stdout);
        assert_eq!(seq.stdout, again.stdout);
        let triple = [data("inv_z.json"), data("two.json"), data("inv_z_scaled.json")];
        let c1 = numetric(&["--format", format, "certify", &triple[0], &triple[1], &triple[2]]);
        let c2 = numetric(&["--parallel", "--format", format, "certify", &triple[0], &triple[1], &triple[2]]);
        assert_eq!(c1.stdout, c2.stdout);
    }
}
