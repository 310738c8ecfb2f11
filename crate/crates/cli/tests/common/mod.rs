#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn sqz(args: &[&str]) -> Output {
    sqz_env(args, &[])
}

pub fn sqz_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sqz"));
    cmd.args(args).env_remove("SQZ_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("sqz runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
pub fn ok(o: &Output) -> String {
    assert_eq!(code(o), 0, "stdout:\n{}\nstderr:\n{}", stdout(o), stderr(o));
    stdout(o)
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub fn write_flat_trace(path: &Path, grid: &[f64], level: f64) {
    let mut s = String::from("frequency_hz,power_dbm\n");
    for f in grid {
        s.push_str(&format!("{f},{level}\n"));
    }
    std::fs::write(path, s).unwrap();
}

/// Rows of a normalized CSV as `(frequency, rel_db, valid)`.
pub fn read_normalized(path: &Path) -> Vec<(f64, f64, bool)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frequency_hz,rel_power_db,valid"));
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[1].parse().unwrap(), c[2] == "1")
        })
        .collect()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"))
}

#[track_caller]
pub fn assert_schema(name: &str, instance: &Value) {
    let schema = read_json(&schema_path(name));
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(instance) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{name} output violates schema:\n{}", msgs.join("\n"));
}

/// Scenario text for the 1.75 GHz system with knobs the tests vary.
pub struct ScenarioText {
    pub seed: u64,
    pub sigma_db: f64,
    pub points: usize,
    pub imbalance: Option<(f64, f64, f64)>,
    pub linearity: Option<String>,
}

impl Default for ScenarioText {
    fn default() -> Self {
        Self {
            seed: 11,
            sigma_db: 0.0,
            points: 400,
            imbalance: None,
            linearity: None,
        }
    }
}

impl ScenarioText {
    pub fn render(&self) -> String {
        let mut s = format!(
            "seed = {}\n\n[opo]\ngamma_fwhm_hz = 1.75e9\nx = 0.8116\neta = 0.858\n\n\
             [grid]\nstart_hz = 1e7\nstop_hz = 1.5e9\npoints = {}\n\n\
             [detector]\nshot_level_dbm = -60.0\ndark_clearance_db = [[3e7, 10.0], [1e9, 9.0]]\n\
             trace_noise_sigma_db = {}\n",
            self.seed, self.points, self.sigma_db
        );
        if let Some((a, f0, w)) = self.imbalance {
            s.push_str(&format!("\n[imbalance]\namplitude_rad = {a}\nf0_hz = {f0}\nwidth_hz = {w}\n"));
        }
        if let Some(l) = &self.linearity {
            s.push_str(&format!("\n[linearity]\n{l}\n"));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> PathBuf {
        let path = dir.join("scenario.toml");
        std::fs::write(&path, self.render()).unwrap();
        path
    }
}

/// simulate → normalize both quadratures → fit, all inside `run`.
pub fn pipeline(run: &Path, scenario: &Path, fit_extra: &[&str]) -> Output {
    ok(&sqz(&["simulate", "--scenario", p(scenario), "--out", p(run)]));
    for q in ["squeezed", "antisqueezed"] {
        ok(&sqz(&[
            "normalize",
            "--measured",
            p(&run.join(format!("{q}.csv"))),
            "--shot",
            p(&run.join("shot.csv")),
            "--dark",
            p(&run.join("dark.csv")),
            "--out",
            p(run),
        ]));
    }
    let sq = run.join("squeezed.normalized.csv");
    let an = run.join("antisqueezed.normalized.csv");
    let mut args = vec!["fit", "--squeezed", p(&sq), "--antisqueezed", p(&an), "--out", p(run)];
    args.extend_from_slice(fit_extra);
    sqz(&args)
}
