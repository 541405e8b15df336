//! Subcommand implementations. Each writes its artifacts under the output
//! directory and reports failed stages instead of stopping at the first one.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, ensure, Context, Result};
use cascade_core::fitting::{
    corrected_g2, efficiency_budget, extract_timing_response, fit_blinking, fit_fss, fit_lifetime, fit_rabi,
    fit_rabi_weighted, g2_from_hbt, pair_extraction, side_peak_heights, FitResult, FssOptions, Smoothing,
};
use cascade_core::qcore::{cascade_state, DensityMatrix, LocalUnitaryParams};
use cascade_core::qkd::{optimize_keyrate_basis, optimize_keyrate_basis_per_window, KeyRateCurve};
use cascade_core::sim::{expected_histograms, sample_histograms, CoincidenceHistogramSet, ResponseKind};
use cascade_core::tomography::{
    curve_weighted, metric_curve, time_resolved_states, write_curve_csv, CurvePoint, Metric, Reference, TimeBin,
    TimeBinnedStates,
};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::config::{Format, Preset, RunConfig, Sampling};
use crate::io;

/// Stages that failed without aborting the command.
#[derive(Debug, Default)]
pub struct Report {
    failures: Vec<String>,
}

impl Report {
    fn fail(&mut self, stage: &str, err: impl std::fmt::Display) {
        self.failures.push(format!("{stage}: {err}"));
    }

    pub fn finish(self) -> ExitCode {
        if self.failures.is_empty() {
            return ExitCode::SUCCESS;
        }
        eprintln!("failed stages:");
        for f in &self.failures {
            eprintln!("  {f}");
        }
        ExitCode::FAILURE
    }
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

/// Validates the config, creates the output directory and echoes the
/// effective config into it.
fn prepare(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    announce(&io::write_text(&dir.join("config.toml"), &cfg.to_toml()?)?);
    Ok(dir)
}

fn write_curve(dir: &Path, stem: &str, value_name: &str, curve: &[CurvePoint], format: Format) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.ext()));
    match format {
        Format::Csv => io::write_with(&path, |w| write_curve_csv(w, value_name, curve)),
        Format::Json => io::write_json(&path, &curve),
    }
}

fn write_keyrate(dir: &Path, curve: &KeyRateCurve, format: Format) -> Result<PathBuf> {
    let path = dir.join(format!("keyrate.{}", format.ext()));
    match format {
        Format::Csv => io::write_with(&path, |w| curve.write_csv(w)),
        Format::Json => io::write_json(&path, &curve.entries),
    }
}

// ---------------------------------------------------------------- simulate

fn simulate_histograms(cfg: &RunConfig) -> Result<CoincidenceHistogramSet> {
    let t = cfg.experiment.t_exp_s;
    if t == 0.0 {
        warn("zero-duration experiment: histograms are empty");
    }
    let h = expected_histograms(&cfg.source, &cfg.detector, &cfg.grid(), t)?;
    Ok(match cfg.experiment.sampling {
        Sampling::Expected => h,
        Sampling::Poisson => sample_histograms(&h, cfg.seed)?,
    })
}

fn write_histograms(dir: &Path, h: &CoincidenceHistogramSet) -> Result<PathBuf> {
    let path = dir.join("histograms.csv");
    let (csv, meta) = h.save(&path).with_context(|| format!("writing {}", path.display()))?;
    announce(&csv);
    announce(&meta);
    Ok(csv)
}

pub fn simulate(cfg: &RunConfig) -> Result<Report> {
    let dir = prepare(cfg)?;
    let h = simulate_histograms(cfg)?;
    write_histograms(&dir, &h)?;
    println!("total coincidences {}", cascade_core::format::sig(h.total()));
    Ok(Report::default())
}

// -------------------------------------------------------------------- tomo

#[derive(Serialize)]
struct TomoSummary<'a> {
    windows: usize,
    skipped_windows: usize,
    unconverged_windows: usize,
    window_ps: f64,
    peak_concurrence: f64,
    peak_tau_ps: f64,
    weighted_concurrence: f64,
    weighted_max_fidelity: f64,
    config: &'a RunConfig,
}

fn load_histograms(cfg: &RunConfig) -> Result<CoincidenceHistogramSet> {
    let path = cfg.inputs.histograms.as_ref().ok_or_else(|| anyhow!("no histogram file given (--histograms)"))?;
    CoincidenceHistogramSet::load(path).with_context(|| format!("reading {}", path.display()))
}

/// Reconstructs and writes states, curves and the summary. Unconverged
/// windows are reported as a failed stage after all files are written.
fn reconstruct(cfg: &RunConfig, dir: &Path, h: &CoincidenceHistogramSet, report: &mut Report, stage: &str) -> Result<TimeBinnedStates> {
    let states = time_resolved_states(h, cfg.tomography.window_ps, &cfg.mle)?;
    ensure!(!states.is_empty(), "no window holds any coincidences");
    announce(&io::write_json(&dir.join("states.json"), &states)?);

    let fss = h.source.as_ref().unwrap_or(&cfg.source).fss_uev;
    let conc = metric_curve(&states, Metric::Concurrence);
    let fmax = metric_curve(&states, Metric::MaxEntangledFidelity);
    let fcas = metric_curve(&states, Metric::Fidelity(Reference::Cascade { fss_uev: fss }));
    let fmt = cfg.output.format;
    announce(&write_curve(dir, "concurrence", "concurrence", &conc, fmt)?);
    announce(&write_curve(dir, "max_fidelity", "max_fidelity", &fmax, fmt)?);
    announce(&write_curve(dir, "cascade_fidelity", "fidelity", &fcas, fmt)?);

    let peak = conc.iter().max_by(|a, b| a.value.total_cmp(&b.value)).expect("non-empty");
    let unconverged = states.entries.iter().filter(|e| !e.converged).count();
    let summary = TomoSummary {
        windows: states.len(),
        skipped_windows: states.skipped_ps.len(),
        unconverged_windows: unconverged,
        window_ps: states.window_ps,
        peak_concurrence: peak.value,
        peak_tau_ps: peak.tau_ps,
        weighted_concurrence: curve_weighted(&conc)?,
        weighted_max_fidelity: curve_weighted(&fmax)?,
        config: cfg,
    };
    announce(&io::write_json(&dir.join("tomo_summary.json"), &summary)?);
    println!(
        "peak concurrence {} at {} ps",
        cascade_core::format::sig(peak.value),
        cascade_core::format::sig(peak.tau_ps)
    );
    if unconverged > 0 {
        report.fail(stage, format!("{unconverged} of {} windows did not converge", states.len()));
    }
    Ok(states)
}

pub fn tomo(cfg: &RunConfig) -> Result<Report> {
    let h = load_histograms(cfg)?;
    let dir = prepare(cfg)?;
    let mut report = Report::default();
    reconstruct(cfg, &dir, &h, &mut report, "tomo")?;
    Ok(report)
}

// ----------------------------------------------------------------- keyrate

#[derive(Serialize)]
struct KeyrateSummary<'a> {
    rate: f64,
    windows: usize,
    from_ps: f64,
    to_ps: f64,
    per_window: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis: Option<LocalUnitaryParams>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    window_bases: Vec<LocalUnitaryParams>,
    config: &'a RunConfig,
}

/// Noiseless oscillating states at window centres in `[0, to]`, weighted by
/// the exciton decay.
fn ideal_states(cfg: &RunConfig) -> Result<TimeBinnedStates> {
    let w = cfg.tomography.window_ps;
    let to = cfg.keyrate_to_ps();
    let src = &cfg.source;
    let entries = (0..)
        .map(|k| (k as f64 + 0.5) * w)
        .take_while(|tau| *tau <= to)
        .map(|tau| TimeBin {
            tau_ps: tau,
            rho: DensityMatrix::from_pure(&cascade_state(tau * 1e-3, src.fss_uev)),
            n_tau: (-tau * 1e-3 / src.tau_x_ns).exp(),
            converged: true,
        })
        .collect();
    Ok(TimeBinnedStates::new(w, entries)?)
}

fn evaluate_keyrate(cfg: &RunConfig, dir: &Path, states: &TimeBinnedStates) -> Result<f64> {
    let (from, to) = (cfg.keyrate.from_ps, cfg.keyrate_to_ps());
    let sel = states.restrict(from, to);
    if sel.is_empty() {
        bail!("no reconstructed windows in [{from}, {to}] ps");
    }
    let (curve, basis, window_bases) = if cfg.keyrate.per_window {
        let (b, c) = optimize_keyrate_basis_per_window(&sel, &cfg.qkd)?;
        (c, None, b)
    } else {
        let (b, c) = optimize_keyrate_basis(&sel, &cfg.qkd)?;
        (c, Some(b), Vec::new())
    };
    announce(&write_keyrate(dir, &curve, cfg.output.format)?);
    let summary = KeyrateSummary {
        rate: curve.rate,
        windows: sel.len(),
        from_ps: from,
        to_ps: to,
        per_window: cfg.keyrate.per_window,
        basis,
        window_bases,
        config: cfg,
    };
    announce(&io::write_json(&dir.join("keyrate_summary.json"), &summary)?);
    println!("R = {} over {} windows", cascade_core::format::sig(curve.rate), sel.len());
    Ok(curve.rate)
}

pub fn keyrate(cfg: &RunConfig, ideal: bool) -> Result<Report> {
    let mut report = Report::default();
    let states = if ideal {
        cfg.validate()?;
        ideal_states(cfg)?
    } else if let Some(p) = &cfg.inputs.states {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        TimeBinnedStates::from_json(&text).with_context(|| format!("in {}", p.display()))?
    } else if cfg.inputs.histograms.is_some() {
        let h = load_histograms(cfg)?;
        let dir = prepare(cfg)?;
        let s = reconstruct(cfg, &dir, &h, &mut report, "tomo")?;
        evaluate_keyrate(cfg, &dir, &s)?;
        return Ok(report);
    } else {
        bail!("no input: give --states, --histograms or --ideal");
    };
    ensure!(!states.is_empty(), "the state file holds no time windows");
    let dir = prepare(cfg)?;
    evaluate_keyrate(cfg, &dir, &states)?;
    Ok(report)
}

// --------------------------------------------------------------- reproduce

#[derive(Serialize, Default)]
struct ChainSummary {
    case: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_concurrence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weighted_concurrence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
}

fn run_chain(cfg: &RunConfig, preset: Preset, report: &mut Report) -> ChainSummary {
    let name = preset.name();
    let mut out = ChainSummary { case: name, ..Default::default() };
    let mut c = cfg.clone().with_preset(preset);
    c.output.dir = cfg.output.dir.join(name);
    c.inputs = Default::default();

    let stage = |s: &str| format!("{name}/{s}");
    let h = match prepare(&c).and_then(|dir| {
        let h = simulate_histograms(&c)?;
        write_histograms(&dir, &h)?;
        Ok(h)
    }) {
        Ok(h) => h,
        Err(e) => {
            report.fail(&stage("simulate"), format!("{e:#}"));
            return out;
        }
    };
    let dir = c.output.dir.clone();
    let states = match reconstruct(&c, &dir, &h, report, &stage("tomo")) {
        Ok(s) => s,
        Err(e) => {
            report.fail(&stage("tomo"), format!("{e:#}"));
            return out;
        }
    };
    let conc = metric_curve(&states, Metric::Concurrence);
    out.peak_concurrence = conc.iter().map(|p| p.value).reduce(f64::max);
    out.weighted_concurrence = curve_weighted(&conc).ok();
    // the reference curve uses the exact states, free of window averaging
    let states = match preset {
        Preset::Ideal => match ideal_states(&c) {
            Ok(s) => s,
            Err(e) => {
                report.fail(&stage("keyrate"), format!("{e:#}"));
                return out;
            }
        },
        _ => states,
    };
    match evaluate_keyrate(&c, &dir, &states) {
        Ok(r) => out.rate = Some(r),
        Err(e) => report.fail(&stage("keyrate"), format!("{e:#}")),
    }
    out
}

pub fn reproduce(cfg: &RunConfig, presets: &[Preset]) -> Result<Report> {
    let dir = prepare(cfg)?;
    let mut report = Report::default();
    let chains: Vec<ChainSummary> = presets.iter().map(|p| run_chain(cfg, *p, &mut report)).collect();
    announce(&io::write_json(&dir.join("reproduce_summary.json"), &chains)?);
    Ok(report)
}

// --------------------------------------------------------------------- fit

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Rabi,
    Lifetime,
    Fss,
    Blinking,
    Timing,
    G2,
    Efficiency,
}

impl FitKind {
    fn name(self) -> &'static str {
        match self {
            FitKind::Rabi => "rabi",
            FitKind::Lifetime => "lifetime",
            FitKind::Fss => "fss",
            FitKind::Blinking => "blinking",
            FitKind::Timing => "timing",
            FitKind::G2 => "g2",
            FitKind::Efficiency => "efficiency",
        }
    }
}

/// Per-kind options of the `fit` subcommand.
#[derive(Debug, Clone, Args)]
pub struct FitOptions {
    /// Detector response FWHM in ps; defaults to the configured detector.
    #[arg(long, value_name = "PS")]
    pub response_fwhm_ps: Option<f64>,
    /// Exciton lifetime: held fixed by `fss`, used to undo the decay by `timing`.
    #[arg(long, value_name = "NS")]
    pub tau_x_ns: Option<f64>,
    /// Blinking ON fraction for the corrected g2.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Laser repetition period; defaults to the configured source.
    #[arg(long, value_name = "NS")]
    pub rep_period_ns: Option<f64>,
    /// For `blinking`: data is a raw HBT histogram (delay ns, counts).
    #[arg(long)]
    pub hbt: bool,
    /// For `timing`: Savitzky-Golay window length in bins.
    #[arg(long, default_value_t = 65)]
    pub sg_window: usize,
    /// For `timing`: Savitzky-Golay polynomial degree.
    #[arg(long, default_value_t = 6)]
    pub sg_degree: usize,
}

fn g2_fit(cols: &io::Columns, period: f64, beta: Option<f64>) -> Result<FitResult> {
    let g = g2_from_hbt(&cols.x, &cols.y, period)?;
    let adjacent: Vec<f64> =
        g.side_areas.iter().filter(|(t, _)| (t.abs() - period).abs() < 1e-9 * period).map(|p| p.1).collect();
    let mean = adjacent.iter().sum::<f64>() / adjacent.len().max(1) as f64;
    // counting errors of the central area and of the two-peak mean
    let var = g.central_area / mean.powi(2) + g.g2_zero.powi(2) * (mean / 2.0) / mean.powi(2);
    let mut r = FitResult { converged: true, ..Default::default() };
    r.set("g2_zero", g.g2_zero, var.sqrt());
    r.derived.insert("central_area".into(), g.central_area);
    r.derived.insert("side_area_mean".into(), mean);
    if let Some(b) = beta {
        r.derived.insert("g2_corrected".into(), corrected_g2(g.g2_zero, b)?);
    }
    Ok(r)
}

fn efficiency_fit(cfg: &RunConfig) -> Result<FitResult> {
    let b = efficiency_budget(&cfg.efficiency)?;
    let p = &cfg.pair_extraction;
    let mut r = FitResult { converged: true, ..Default::default() };
    for (k, v) in [
        ("eta_prep_x", b.eta_prep_x),
        ("eta_prep_xx", b.eta_prep_xx),
        ("eta_blink", b.eta_blink),
        ("eta_nw", b.eta_nw),
        ("eta_opt", b.eta_opt),
        ("eta_int", b.eta_int),
        ("eta_est", b.eta_est),
        ("pair_extraction", pair_extraction(p.n_x_hz, p.n_xx_hz, p.eta_opt, p.f_rep_mhz)?),
    ] {
        r.derived.insert(k.into(), v);
    }
    Ok(r)
}

fn run_fit(cfg: &RunConfig, kind: FitKind, o: &FitOptions) -> Result<FitResult> {
    if kind == FitKind::Efficiency {
        return efficiency_fit(cfg);
    }
    let path = cfg.inputs.data.as_ref().ok_or_else(|| anyhow!("{} fit needs a data file", kind.name()))?;
    let cols = io::read_columns(path)?;
    let det = &cfg.detector;
    let fwhm = o.response_fwhm_ps.unwrap_or(if det.response == ResponseKind::Delta { 0.0 } else { det.width_ps });
    let period = o.rep_period_ns.unwrap_or(1e3 / cfg.source.f_rep_mhz);
    let r = match kind {
        FitKind::Rabi => match &cols.extra {
            Some(sig) => fit_rabi_weighted(&cols.x, &cols.y, sig)?,
            None => fit_rabi(&cols.x, &cols.y)?,
        },
        FitKind::Lifetime => fit_lifetime(&cols.x, &cols.y, fwhm)?,
        FitKind::Fss => {
            // only a Gaussian response is modelled by the oscillation fit
            let g = o.response_fwhm_ps.unwrap_or(if det.response == ResponseKind::Gaussian { det.width_ps } else { 0.0 });
            let opts = FssOptions { response_fwhm_ps: g, tau_x_ns: o.tau_x_ns };
            fit_fss(&cols.x, &cols.y, cols.extra.as_deref(), opts)?
        }
        FitKind::Blinking if o.hbt => {
            let (t, h): (Vec<f64>, Vec<f64>) = side_peak_heights(&cols.x, &cols.y, period)?.into_iter().unzip();
            fit_blinking(&t, &h)?
        }
        FitKind::Blinking => fit_blinking(&cols.x, &cols.y)?,
        FitKind::Timing => {
            let s = Smoothing { window: o.sg_window, degree: o.sg_degree };
            extract_timing_response(&cols.x, &cols.y, s, Some(o.tau_x_ns.unwrap_or(cfg.source.tau_x_ns)))?
        }
        FitKind::G2 => g2_fit(&cols, period, o.beta)?,
        FitKind::Efficiency => unreachable!(),
    };
    Ok(r)
}

fn fit_csv(r: &FitResult) -> String {
    use cascade_core::format::sig;
    let mut s = String::from("quantity,value,error\n");
    for (k, v) in &r.params {
        s += &format!("{k},{},{}\n", sig(*v), sig(r.error(k)));
    }
    for (k, v) in &r.derived {
        s += &format!("{k},{},\n", sig(*v));
    }
    for (k, v) in [("r_squared", r.r_squared), ("reduced_chi2", r.reduced_chi2)] {
        if let Some(v) = v {
            s += &format!("{k},{},\n", sig(v));
        }
    }
    s
}

pub fn fit(cfg: &RunConfig, kind: FitKind, o: &FitOptions) -> Result<Report> {
    let r = run_fit(cfg, kind, o).with_context(|| format!("{} fit", kind.name()))?;
    let dir = prepare(cfg)?;
    let json = r.to_json()? + "\n";
    let path = dir.join(format!("fit_{}.{}", kind.name(), cfg.output.format.ext()));
    match cfg.output.format {
        Format::Json => io::write_text(&path, &json)?,
        Format::Csv => io::write_text(&path, &fit_csv(&r))?,
    };
    print!("{json}");
    announce(&path);
    for w in &r.warnings {
        warn(w);
    }
    let mut report = Report::default();
    if !r.converged {
        report.fail(&format!("fit {}", kind.name()), "did not converge");
    }
    Ok(report)
}
