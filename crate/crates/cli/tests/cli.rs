use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cascade_core::sim::CoincidenceHistogramSet;
use cascade_core::tomography::TimeBinnedStates;
use serde_json::Value;
use tempfile::TempDir;

fn cascade(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = cascade(dir, args);
    assert!(
        out.status.success(),
        "cascade {args:?} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v.pointer(key).and_then(Value::as_f64).unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn write_xy(path: &Path, header: &str, x: &[f64], y: &[f64]) {
    let mut s = format!("{header}\n");
    for (a, b) in x.iter().zip(y) {
        s += &format!("{a},{b}\n");
    }
    fs::write(path, s).unwrap();
}

#[test]
fn simulate_is_deterministic_under_seed() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let args = ["simulate", "--sampling", "poisson", "--seed", "11", "--t-exp-s", "30"];
    ok(d, &[&args[..], &["--out", "a"]].concat());
    ok(d, &[&args[..], &["--out", "b"]].concat());
    for f in ["histograms.csv", "histograms.json"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    let first = fs::read(d.join("a/histograms.csv")).unwrap();
    ok(d, &[&args[..], &["--out", "a"]].concat());
    assert_eq!(fs::read(d.join("a/histograms.csv")).unwrap(), first);
    ok(d, &["simulate", "--sampling", "poisson", "--seed", "12", "--t-exp-s", "30", "--out", "c"]);
    assert_ne!(fs::read(d.join("c/histograms.csv")).unwrap(), first);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["simulate", "--preset", "spad", "--sampling", "poisson", "--seed", "5", "--out", "first"]);
    let echoed = d.join("first/config.toml");
    ok(d, &["--config", echoed.to_str().unwrap(), "simulate", "--out", "second"]);
    assert_eq!(fs::read(d.join("first/histograms.csv")).unwrap(), fs::read(d.join("second/histograms.csv")).unwrap());
}

#[test]
fn flags_override_config() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("run.toml"), "schema_version = 1\nseed = 1\n[tomography]\nwindow_ps = 100.0\n").unwrap();
    ok(d, &["--config", "run.toml", "--seed", "2", "--window-ps", "20", "simulate", "--out", "o"]);
    let echoed = fs::read_to_string(d.join("o/config.toml")).unwrap();
    assert!(echoed.contains("seed = 2"), "{echoed}");
    assert!(echoed.contains("window_ps = 20.0"), "{echoed}");
}

#[test]
fn config_errors_are_reported() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("bad.toml"), "schema_version = 1\n[source]\nfss = 3.0\n").unwrap();
    let o = cascade(d, &["--config", "bad.toml", "simulate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fss"), "{}", stderr(&o));

    fs::write(d.join("old.toml"), "seed = 3\n").unwrap();
    let o = cascade(d, &["--config", "old.toml", "simulate"]);
    assert!(!o.status.success() && stderr(&o).contains("schema_version"));

    fs::write(d.join("missing.toml"), "schema_version = 1\n[inputs]\nhistograms = \"nope.csv\"\n").unwrap();
    let o = cascade(d, &["--config", "missing.toml", "simulate"]);
    assert!(!o.status.success() && stderr(&o).contains("nope.csv"));

    let o = cascade(d, &["simulate", "--t-exp-s", "-1"]);
    assert!(!o.status.success());
}

#[test]
fn zero_duration_warns_and_succeeds() {
    let tmp = TempDir::new().unwrap();
    let o = ok(tmp.path(), &["simulate", "--t-exp-s", "0", "--out", "z"]);
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let h = CoincidenceHistogramSet::load(&tmp.path().join("z/histograms.csv")).unwrap();
    assert_eq!(h.total(), 0.0);
}

#[test]
fn simulated_snspd_histograms_oscillate_at_the_splitting() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["simulate", "--out", "sim"]);
    let h = CoincidenceHistogramSet::load(&d.join("sim/histograms.csv")).unwrap();
    let taus = h.grid.taus_ps();
    write_xy(&d.join("contrast.csv"), "tau_ps,contrast", &taus, &h.circular_contrast());
    write_xy(&d.join("decay.csv"), "tau_ps,counts", &taus, &h.rectilinear_sum());

    ok(d, &["--out", "fits", "--format", "json", "fit", "fss", "contrast.csv"]);
    let f = json(d.join("fits/fit_fss.json"));
    assert!((num(&f, "/params/fss_uev") - 3.226).abs() < 0.004);
    assert!((num(&f, "/derived/fss_mhz") - 780.0).abs() < 1.0);

    ok(d, &["--out", "fits", "--format", "json", "fit", "lifetime", "decay.csv"]);
    let f = json(d.join("fits/fit_lifetime.json"));
    assert!((num(&f, "/params/tau_x_ns") / 0.777 - 1.0).abs() < 0.01);

    ok(d, &["--out", "fits", "fit", "lifetime", "decay.csv"]);
    let table = fs::read_to_string(d.join("fits/fit_lifetime.csv")).unwrap();
    assert!(table.starts_with("quantity,value,error\n") && table.contains("tau_x_ns,"));
}

#[test]
fn tomo_reproduces_model_concurrence() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["simulate", "--out", "snspd"]);
    ok(d, &["simulate", "--preset", "spad", "--out", "spad"]);
    ok(d, &["tomo", "--histograms", "snspd/histograms.csv", "--out", "snspd"]);
    ok(d, &["tomo", "--histograms", "spad/histograms.csv", "--out", "spad"]);
    let s = json(d.join("snspd/tomo_summary.json"));
    assert!(num(&s, "/peak_concurrence") >= 0.985);
    let s = json(d.join("spad/tomo_summary.json"));
    assert!((num(&s, "/peak_concurrence") - 0.78).abs() <= 0.03);

    let curve = fs::read_to_string(d.join("snspd/concurrence.csv")).unwrap();
    assert!(curve.starts_with("tau_ps,concurrence,n_tau\n"));
    let text = fs::read_to_string(d.join("snspd/states.json")).unwrap();
    assert!(!TimeBinnedStates::from_json(&text).unwrap().is_empty());

    ok(d, &["tomo", "--histograms", "snspd/histograms.csv", "--out", "j", "--format", "json"]);
    let c = json(d.join("j/concurrence.json"));
    assert!(c.as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn malformed_histograms_get_a_row_and_column() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["simulate", "--out", "sim"]);
    let text = fs::read_to_string(d.join("sim/histograms.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<&str> = lines[3].split(',').collect();
    fields[5] = "abc";
    lines[3] = fields.join(",");
    fs::write(d.join("bad.csv"), lines.join("\n")).unwrap();
    let o = cascade(d, &["tomo", "--histograms", "bad.csv", "--out", "t"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 4, column 6"), "{}", stderr(&o));

    fs::write(d.join("xy.csv"), "t,y\n1,2\n2,x\n").unwrap();
    let o = cascade(d, &["fit", "lifetime", "xy.csv"]);
    assert!(stderr(&o).contains("row 3, column 2"), "{}", stderr(&o));
}

#[test]
fn unknown_fit_kind_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let o = cascade(tmp.path(), &["fit", "spectrum", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spectrum"));
}

#[test]
fn efficiency_fit_reports_the_budget() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["--format", "json", "fit", "efficiency"]);
    let f = json(tmp.path().join("out/fit_efficiency.json"));
    assert!((num(&f, "/derived/eta_nw") / 0.016 - 1.0).abs() < 0.05);
    assert!((num(&f, "/derived/eta_est") / 0.0017 - 1.0).abs() < 0.05);
    assert!((num(&f, "/derived/pair_extraction") / 0.0065 - 1.0).abs() < 0.05);
}

#[test]
fn g2_and_blinking_fits() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let period = 1e3 / 76.2;
    let t: Vec<f64> = (-60_000..=60_000).map(|k| k as f64 * 0.05).collect();
    let peak = |t: f64, f: &dyn Fn(f64) -> f64| {
        let k = (t / period).round();
        f(k) * (-0.5 * ((t - k * period) / 0.2).powi(2)).exp()
    };
    let beta = 0.167;
    let tau_b = 1e3 / 2.86;
    let y: Vec<f64> = t
        .iter()
        .map(|t| {
            peak(*t, &|k| {
                if k == 0.0 {
                    0.0
                } else {
                    cascade_core::fitting::blinking_model(k * period, beta, tau_b, 1000.0)
                }
            })
        })
        .collect();
    write_xy(&d.join("hbt.csv"), "tau_ns,counts", &t, &y);
    ok(d, &["--format", "json", "fit", "g2", "hbt.csv", "--beta", "0.167"]);
    let f = json(d.join("out/fit_g2.json"));
    assert_eq!(num(&f, "/params/g2_zero"), 0.0);
    ok(d, &["--format", "json", "fit", "blinking", "hbt.csv", "--hbt"]);
    let f = json(d.join("out/fit_blinking.json"));
    assert!((num(&f, "/params/beta") - beta).abs() < 0.006, "{f}");
}

#[test]
fn keyrate_modes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["keyrate", "--ideal", "--to-ps", "1000", "--out", "ideal"]);
    let text = fs::read_to_string(d.join("ideal/keyrate.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 20);
    for r in rows {
        let v: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 0.99).abs() < 1e-6, "{r}");
    }
    let s = json(d.join("ideal/keyrate_summary.json"));
    assert!((num(&s, "/rate") - 0.99).abs() < 1e-6);
    assert!(s.pointer("/basis/theta1").is_some() && s.pointer("/config/schema_version").is_some());

    fs::write(d.join("empty.json"), r#"{"window_ps": 50.0, "entries": []}"#).unwrap();
    let o = cascade(d, &["keyrate", "--states", "empty.json", "--out", "e"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no time windows"), "{}", stderr(&o));

    ok(d, &["simulate", "--out", "sim", "--window-ps", "100"]);
    ok(d, &["tomo", "--histograms", "sim/histograms.csv", "--out", "sim", "--window-ps", "100"]);
    ok(d, &["keyrate", "--states", "sim/states.json", "--out", "sim", "--to-ps", "1000", "--format", "json"]);
    let s = json(d.join("sim/keyrate_summary.json"));
    let r = num(&s, "/rate");
    assert!(r > 0.8 && r < 0.99, "{r}");
    let curve = json(d.join("sim/keyrate.json"));
    assert_eq!(curve.as_array().unwrap().len(), 10);
}

#[test]
fn reproduce_runs_all_chains() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--window-ps", "200", "reproduce"]);
    let s = json(d.join("out/reproduce_summary.json"));
    let chains = s.as_array().unwrap();
    assert_eq!(chains.len(), 3);
    for c in chains {
        for k in ["/peak_concurrence", "/rate"] {
            assert!(num(c, k).is_finite());
        }
    }
    let ideal = chains.iter().find(|c| c["case"] == "ideal").unwrap();
    assert!((num(ideal, "/rate") - 0.99).abs() < 1e-6);
    for case in ["snspd", "spad", "ideal"] {
        for f in ["histograms.csv", "states.json", "concurrence.csv", "keyrate.csv", "keyrate_summary.json"] {
            assert!(d.join("out").join(case).join(f).exists(), "{case}/{f}");
        }
    }
}

#[test]
fn failing_stages_are_listed() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("empty.toml"), "schema_version = 1\n[experiment]\nt_exp_s = 0.0\n").unwrap();
    let o = cascade(d, &["--config", "empty.toml", "reproduce", "--only", "snspd,spad"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("failed stages:"), "{err}");
    assert!(err.contains("snspd/tomo") && err.contains("spad/tomo"), "{err}");
    assert!(d.join("out/reproduce_summary.json").exists());
}
