use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{DetectorModel, Grid, SourceModel};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::qcore::PolLabel;

pub const N_CHANNELS: usize = 36;

/// Channel index of `(a, b)` in the fixed HH, HV, HD, ..., LL order.
pub fn channel_index(a: PolLabel, b: PolLabel) -> usize {
    6 * a.index() + b.index()
}

/// 36 time-binned coincidence channels on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogramSet {
    pub grid: Grid,
    /// Acquisition time per basis setting, seconds.
    pub t_exp_s: f64,
    counts: Vec<Vec<f64>>,
    pub source: Option<SourceModel>,
    pub detector: Option<DetectorModel>,
}

/// Metadata written next to the histogram CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramMeta {
    pub bin_width_ps: f64,
    pub tau_start_ps: f64,
    pub n_bins: usize,
    #[serde(rename = "T_exp_s", alias = "t_exp_s")]
    pub t_exp_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorModel>,
}

impl CoincidenceHistogramSet {
    pub fn new(grid: Grid, t_exp_s: f64, counts: Vec<Vec<f64>>) -> Result<Self> {
        grid.validate()?;
        if counts.len() != N_CHANNELS {
            return Err(Error::InvalidState(format!("expected 36 channels, got {}", counts.len())));
        }
        for (c, ch) in counts.iter().enumerate() {
            if ch.len() != grid.n_bins {
                return Err(Error::InvalidState(format!(
                    "channel {c} has {} bins, grid has {}",
                    ch.len(),
                    grid.n_bins
                )));
            }
            if let Some(k) = ch.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidState(format!("channel {c} bin {k} is negative or non-finite")));
            }
        }
        Ok(Self { grid, t_exp_s, counts, source: None, detector: None })
    }

    pub fn zeros(grid: Grid, t_exp_s: f64) -> Self {
        Self { grid, t_exp_s, counts: vec![vec![0.0; grid.n_bins]; N_CHANNELS], source: None, detector: None }
    }

    pub fn with_models(mut self, source: SourceModel, detector: DetectorModel) -> Self {
        self.source = Some(source);
        self.detector = Some(detector);
        self
    }

    pub fn n_bins(&self) -> usize {
        self.grid.n_bins
    }

    pub fn channel(&self, a: PolLabel, b: PolLabel) -> &[f64] {
        &self.counts[channel_index(a, b)]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.counts
    }

    pub fn map_counts(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let counts = self.counts.iter().map(|ch| ch.iter().map(|&x| f(x)).collect()).collect();
        let mut out = Self::new(self.grid, self.t_exp_s, counts)?;
        out.source = self.source.clone();
        out.detector = self.detector.clone();
        Ok(out)
    }

    /// The 36 counts of bin `k` in channel order.
    pub fn bin(&self, k: usize) -> [f64; N_CHANNELS] {
        std::array::from_fn(|c| self.counts[c][k])
    }

    /// Bin-wise sum of the listed channels.
    pub fn sum_channels(&self, pairs: &[(PolLabel, PolLabel)]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_bins()];
        for &(a, b) in pairs {
            for (o, x) in out.iter_mut().zip(self.channel(a, b)) {
                *o += x;
            }
        }
        out
    }

    /// `HH + HV + VH + VV`, the polarization-insensitive decay.
    pub fn rectilinear_sum(&self) -> Vec<f64> {
        use PolLabel::*;
        self.sum_channels(&[(H, H), (H, V), (V, H), (V, V)])
    }

    /// `RL + LR − RR − LL`, oscillating at the fine-structure frequency.
    pub fn circular_contrast(&self) -> Vec<f64> {
        use PolLabel::*;
        let plus = self.sum_channels(&[(R, L), (L, R)]);
        let minus = self.sum_channels(&[(R, R), (L, L)]);
        plus.iter().zip(&minus).map(|(p, m)| p - m).collect()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    pub fn meta(&self) -> HistogramMeta {
        HistogramMeta {
            bin_width_ps: self.grid.bin_width_ps,
            tau_start_ps: self.grid.tau_start_ps,
            n_bins: self.grid.n_bins,
            t_exp_s: self.t_exp_s,
            source: self.source.clone(),
            detector: self.detector.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["tau_ps".to_string()];
        header.extend(PolLabel::pairs().map(|(a, b)| PolLabel::channel_name(a, b)));
        wr.write_record(&header)?;
        for k in 0..self.n_bins() {
            let mut row = Vec::with_capacity(N_CHANNELS + 1);
            row.push(sig(self.grid.tau_ps(k)));
            row.extend(self.counts.iter().map(|ch| sig(ch[k])));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Parses the CSV body. The grid is taken from the first two rows and
    /// every row is checked against it.
    pub fn read_csv<R: Read>(r: R, t_exp_s: f64) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(r);
        let header = rd.headers()?.clone();
        if header.len() != N_CHANNELS + 1 {
            return Err(Error::Parse(format!(
                "header has {} columns, expected {} (tau_ps plus 36 channels)",
                header.len(),
                N_CHANNELS + 1
            )));
        }
        if &header[0] != "tau_ps" {
            return Err(Error::Parse(format!("column 1 is '{}', expected 'tau_ps'", &header[0])));
        }
        for (c, (a, b)) in PolLabel::pairs().enumerate() {
            let want = PolLabel::channel_name(a, b);
            if header[c + 1] != want {
                return Err(Error::Parse(format!(
                    "column {} is '{}', expected '{want}'",
                    c + 2,
                    &header[c + 1]
                )));
            }
        }
        let mut taus = Vec::new();
        let mut counts = vec![Vec::new(); N_CHANNELS];
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            if rec.len() != N_CHANNELS + 1 {
                return Err(Error::Parse(format!("row {line}: {} columns, expected {}", rec.len(), N_CHANNELS + 1)));
            }
            let parse = |col: usize| -> Result<f64> {
                rec[col].parse::<f64>().map_err(|_| {
                    Error::Parse(format!("row {line}, column {}: cannot parse '{}'", col + 1, &rec[col]))
                })
            };
            taus.push(parse(0)?);
            for (c, ch) in counts.iter_mut().enumerate() {
                let v = parse(c + 1)?;
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Parse(format!("row {line}, column {}: negative or non-finite count", c + 2)));
                }
                ch.push(v);
            }
        }
        if taus.len() < 2 {
            return Err(Error::Parse("need at least two rows to infer the bin width".into()));
        }
        let bw = taus[1] - taus[0];
        if !(bw > 0.0) {
            return Err(Error::Parse("tau_ps must be strictly increasing".into()));
        }
        for (k, t) in taus.iter().enumerate() {
            let want = taus[0] + k as f64 * bw;
            if (t - want).abs() > 1e-6 * bw.max(want.abs()) {
                return Err(Error::Parse(format!("row {}: tau_ps {t} breaks uniform spacing {bw}", k + 2)));
            }
        }
        let grid = Grid { bin_width_ps: bw, n_bins: taus.len(), tau_start_ps: taus[0] };
        Self::new(grid, t_exp_s, counts)
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar; returns both paths.
    pub fn save(&self, csv_path: &Path) -> Result<(PathBuf, PathBuf)> {
        let f = BufWriter::new(File::create(csv_path)?);
        self.write_csv(f)?;
        let meta_path = sidecar_path(csv_path);
        let meta = serde_json::to_string_pretty(&self.meta())?;
        std::fs::write(&meta_path, meta + "\n")?;
        Ok((csv_path.to_path_buf(), meta_path))
    }

    /// Reads a CSV and, when present, its JSON sidecar. The sidecar grid must
    /// agree with the CSV.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let meta_path = sidecar_path(csv_path);
        let meta: Option<HistogramMeta> = if meta_path.exists() {
            Some(serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?)
        } else {
            None
        };
        let t_exp = meta.as_ref().map_or(0.0, |m| m.t_exp_s);
        let mut h = Self::read_csv(File::open(csv_path)?, t_exp)?;
        if let Some(m) = meta {
            let g = h.grid;
            if m.n_bins != g.n_bins
                || (m.bin_width_ps - g.bin_width_ps).abs() > 1e-9 * m.bin_width_ps
                || (m.tau_start_ps - g.tau_start_ps).abs() > 1e-9 * m.bin_width_ps.max(1.0)
            {
                return Err(Error::Parse(format!(
                    "{} disagrees with the CSV grid ({} bins of {} ps from {} ps)",
                    meta_path.display(),
                    g.n_bins,
                    g.bin_width_ps,
                    g.tau_start_ps
                )));
            }
            h.grid.bin_width_ps = m.bin_width_ps;
            h.grid.tau_start_ps = m.tau_start_ps;
            h.source = m.source;
            h.detector = m.detector;
        }
        Ok(h)
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}
