use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schrokato"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path, threads: Option<&str>) -> Output {
    let mut c = bin();
    c.args(args).arg("--config").arg(cfg).arg("--out").arg(out);
    match threads {
        Some(n) => c.env("SCHROKATO_THREADS", n),
        None => c.env_remove("SCHROKATO_THREADS"),
    };
    c.output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const H3: &str = "seed = 1\n[space]\nkind = \"hyperbolic\"\ndim = 3\n[kernel]\ntimes = [0.1, 1.0, 10.0]\n";

const CYCLE: &str = r#"
seed = 7
[graph]
preset = "cycle"
n = 4
[graph.gauge]
kind = "flux"
flux = 3.141592653589793
[dominate]
times = [0.5, 1.0]
trials = 50
"#;

const FK: &str = r#"
seed = 5
[graph]
preset = "random"
n = 10
[potentials.w]
kind = "table"
values = [0.1, 0.5, 0.0, 0.3, 0.2, 0.0, 0.7, 0.1, 0.4, 0.2]
[fk]
t = 1.0
n_paths = 100000
potential = "w"
start_vertex = 3
dump_paths = 3
"#;

#[test]
fn kernel_on_h3_has_unit_mass() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.toml", H3);
    let out = d.path().join("out");
    let o = run(&["kernel"], &cfg, &out, None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("kernel.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "t,x0,x1,x2,p,mass");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!((r[5] - 1.0).abs() < 1e-6, "{r:?}");
    }
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn dominate_on_magnetic_cycle_passes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", CYCLE);
    let out = d.path().join("out");
    let o = run(&["dominate"], &cfg, &out, None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out.join("dominate.json"));
    let bottom = v["bottom"]["bottom_v"].as_f64().unwrap();
    assert!((bottom - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-12);
    for k in v["kato_simon"].as_array().unwrap() {
        assert_eq!(k["verdict"]["pass"], true);
    }
}

#[test]
fn fk_is_byte_identical_across_runs_and_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "f.toml", FK);
    let outs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|n| d.path().join(n)).collect();
    for (out, threads) in outs.iter().zip([Some("1"), Some("4"), None]) {
        let o = run(&["fk"], &cfg, out, threads);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["fk.json", "paths.csv", "manifest.json"] {
        let a = fs::read(outs[0].join(name)).unwrap();
        for other in &outs[1..] {
            assert_eq!(a, fs::read(other.join(name)).unwrap(), "{name} differs");
        }
    }
}

#[test]
fn every_file_carries_the_config_hash() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "f.toml", FK);
    let out = d.path().join("out");
    assert_eq!(code(&run(&["lattice"], &cfg, &out, None)), 0);
    let hash = json(&out.join("manifest.json"))["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for entry in fs::read_dir(&out).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        assert!(text.contains(&hash));
    }
    let mtx = fs::read_to_string(out.join("operator.mtx")).unwrap();
    assert!(mtx.lines().next().unwrap().starts_with("%%MatrixMarket"));
    assert_eq!(mtx.lines().nth(1).unwrap(), format!("% config_hash={hash}"));
}

#[test]
fn lattice_export_reloads_with_the_same_spectrum() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "f.toml", &FK.replace("[fk]", "[lattice]\npotential = \"w\"\n[fk]"));
    let out = d.path().join("out");
    assert_eq!(code(&run(&["lattice"], &cfg, &out, None)), 0);
    let bottom = json(&out.join("summary.json"))["bottom"].as_f64().unwrap();
    fs::copy(out.join("lattice.json"), d.path().join("graph.json")).unwrap();
    let cfg2 = write(d.path(), "g.toml", "seed = 1\n[graph]\nfile = \"graph.json\"\n");
    let out2 = d.path().join("out2");
    let o = run(&["spectrum"], &cfg2, &out2, None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let again = json(&out2.join("spectrum.json"))["bottom"].as_f64().unwrap();
    assert!((bottom - again).abs() < 1e-12, "{bottom} vs {again}");
}

#[test]
fn json_config_hashes_like_toml() {
    let d = tempfile::tempdir().unwrap();
    let toml_cfg = write(d.path(), "k.toml", H3);
    let json_cfg = write(d.path(), "k.json", r#"{"seed": 1, "space": {"kind": "hyperbolic", "dim": 3}, "kernel": {"times": [0.1, 1.0, 10.0]}}"#);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(code(&run(&["kernel"], &toml_cfg, &a, None)), 0);
    assert_eq!(code(&run(&["kernel"], &json_cfg, &b, None)), 0);
    assert_eq!(fs::read(a.join("kernel.csv")).unwrap(), fs::read(b.join("kernel.csv")).unwrap());
}

#[test]
fn format_json_writes_tables_as_json() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.toml", H3);
    let out = d.path().join("out");
    let o = bin().args(["kernel", "--format", "json", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0);
    let v = json(&out.join("kernel.json"));
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert!(!out.join("kernel.csv").exists());
}

#[test]
fn unknown_keys_are_all_reported() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.toml", &format!("colour = 1\n{H3}flavour = 2\n"));
    let o = run(&["kernel"], &cfg, &d.path().join("out"), None);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`colour`") && err.contains("`kernel.flavour`"), "{err}");
}

#[test]
fn negative_spacing_is_named() {
    let d = tempfile::tempdir().unwrap();
    let text = "seed = 1\n[graph]\npreset = \"grid\"\nspacing = -0.5\n[graph.grid]\nkind = \"interval\"\nlength = 3.0\n";
    let cfg = write(d.path(), "g.toml", text);
    let o = run(&["lattice"], &cfg, &d.path().join("out"), None);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("graph.spacing"));
}

#[test]
fn both_sources_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "b.toml", &format!("{H3}[graph]\npreset = \"path\"\nn = 3\n"));
    let o = run(&["kernel"], &cfg, &d.path().join("out"), None);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exactly one source"));
}

#[test]
fn seed_is_required_but_can_come_from_the_command_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.toml", &H3.replace("seed = 1\n", ""));
    let out = d.path().join("out");
    assert_eq!(code(&run(&["kernel"], &cfg, &out, None)), 1);
    assert_eq!(code(&run(&["kernel", "--seed", "9"], &cfg, &out, None)), 0);
    assert_eq!(json(&out.join("manifest.json"))["seed"], 9);
}

#[test]
fn violated_contract_exits_two() {
    let d = tempfile::tempdir().unwrap();
    // 0.9·(2π)^{-3/2} undercuts the diagonal
    let c = 0.9 * (2.0 * std::f64::consts::PI).powf(-1.5);
    let text = format!(
        "seed = 1\n[space]\nkind = \"euclidean\"\ndim = 3\n[kernel]\ntimes = [0.5, 1.0]\n[kernel.control]\nvariant = \"ultracontractive\"\nc = {c}\n"
    );
    let cfg = write(d.path(), "u.toml", &text);
    let out = d.path().join("out");
    let o = run(&["kernel"], &cfg, &out, None);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&out.join("manifest.json"))["status"], "violated");

    let exact = (2.0 * std::f64::consts::PI).powf(-1.5);
    let cfg = write(d.path(), "v.toml", &text.replace(&format!("c = {c}"), &format!("c = {exact}")));
    assert_eq!(code(&run(&["kernel"], &cfg, &out, None)), 0);
}

#[test]
fn usage_errors_exit_one() {
    let o = bin().arg("nonsense").output().unwrap();
    assert_eq!(code(&o), 1);
    let o = bin().arg("kernel").output().unwrap();
    assert_eq!(code(&o), 1);
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "k.toml", H3);
    let o = run(&["kernel"], &cfg, &d.path().join("out"), Some("zero"));
    assert_eq!(code(&o), 1);
}

#[test]
fn kato_on_coulomb_reports_sandwich() {
    let d = tempfile::tempdir().unwrap();
    let text = r#"
seed = 3
[space]
kind = "euclidean"
dim = 3
[potentials.coulomb]
kind = "coulomb"
[kato]
potential = "coulomb"
times = [0.0001, 0.001, 0.01, 0.1, 1.0]
"#;
    let cfg = write(d.path(), "c.toml", text);
    let out = d.path().join("out");
    let o = run(&["kato"], &cfg, &out, None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out.join("kato.json"));
    assert_eq!(v["report"]["verdict"], "kato");
    let d01 = v["report"]["curve"][3]["D"].as_f64().unwrap();
    let exact = 2.0 * (2.0 * 0.1 / std::f64::consts::PI).sqrt();
    assert!((d01 / exact - 1.0).abs() < 1e-3);
    assert!(v["sandwich"].as_array().unwrap().iter().all(|r| r["pass"] == true));
}

#[test]
fn fk_on_a_space_matches_survival() {
    let d = tempfile::tempdir().unwrap();
    let text =
        "seed = 2\n[space]\nkind = \"euclidean\"\ndim = 2\n[fk]\nt = 1.0\nn_paths = 1000\nstart_point = [0.0, 0.0]\nstep = 0.1\ndump_paths = 2\n";
    let cfg = write(d.path(), "s.toml", text);
    let out = d.path().join("out");
    let o = run(&["fk"], &cfg, &out, None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out.join("fk.json"));
    assert_eq!(v["estimate"]["value"], 1.0);
    let paths = fs::read_to_string(out.join("paths.csv")).unwrap();
    assert_eq!(paths.lines().nth(1).unwrap(), "path_id,time,state0,state1,alive");
}
