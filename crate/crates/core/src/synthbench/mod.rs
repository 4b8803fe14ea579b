//! Synthetic benchmarks with full ground truth.
//!
//! Two generators: a double-well energy-landscape system observed through
//! monotone nonlinear mixing with known per-factor channel supports, and an
//! AR(1)-driven tokamak-style benchmark whose pre-disruptive regime ramps two
//! of the four latent sources. Both emit the ground truth needed to score
//! latent recovery and support recovery, plus the frame-level transforms
//! (label flipping, subsampling, windowing, balancing) used by the sweeps.

mod dynamics;
mod mixing;
mod regimes;
mod tokamak;
mod windows;

pub use dynamics::{simulate_latents, simulate_latents_with, DynamicsParams};
pub use mixing::{mix_observations, mixing_family, FAMILY_COUNT};
pub use regimes::{assign_regimes, flip_labels, kmeans_regimes, ClusterReport, RegimeLabels};
pub use tokamak::{generate_tokamak, TokamakConfig, TOKAMAK_CHANNELS};
pub use windows::{window_and_balance, FrameSet};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How per-frame regime labels are derived from the reaction coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeDefinition {
    /// Label by well occupancy (state A vs state B).
    WellOccupancy,
    /// Within well A, label frames about to transition within the lookahead
    /// horizon against stable frames; well-B frames are discarded.
    PreTransition,
}

/// Configuration of the double-well benchmark generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Number of true latent factors.
    pub n_true: usize,
    /// Number of observation channels.
    pub obs_dim: usize,
    /// Number of source frames to simulate.
    pub n_frames: usize,
    /// Cross-factor interaction strength (0 = exactly additive mixing).
    pub alpha: f64,
    /// Observation noise standard deviation.
    pub noise_sigma: f64,
    /// Window lag; windows span `lag + 1` frames.
    pub lag: usize,
    pub regime_definition: RegimeDefinition,
    /// Stratified label flip rate in [0, 1].
    pub label_flip_rate: f64,
    /// Keep every k-th frame before windowing.
    pub subsample_stride: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_true: 6,
            obs_dim: 30,
            n_frames: 500_000,
            alpha: 0.0,
            noise_sigma: 0.1,
            lag: 2,
            regime_definition: RegimeDefinition::WellOccupancy,
            label_flip_rate: 0.0,
            subsample_stride: 1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames < self.lag + 1 {
            return Err(Error::config(format!(
                "n_frames ({}) must be at least lag + 1 ({})",
                self.n_frames,
                self.lag + 1
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::config(format!("alpha ({}) must be >= 0", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.label_flip_rate) {
            return Err(Error::config(format!(
                "label_flip_rate ({}) must be in [0, 1]",
                self.label_flip_rate
            )));
        }
        if self.subsample_stride < 1 {
            return Err(Error::config("subsample_stride must be >= 1".to_string()));
        }
        if self.lag < 1 {
            return Err(Error::config("lag must be >= 1".to_string()));
        }
        if self.n_true < 1 {
            return Err(Error::config("n_true must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Which well the reaction coordinate occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Well {
    A,
    B,
}

/// Simulated latent trajectory with per-frame regime annotation.
#[derive(Debug, Clone)]
pub struct LatentTrajectory {
    /// `n_frames x n_true`; column 0 is the reaction coordinate, columns
    /// 1..=3 modulate the potential, remaining columns are invariant.
    pub z: Array2<f64>,
    /// Occupancy by sign of the reaction coordinate.
    pub well_occupancy: Vec<Well>,
    /// Regime label per frame; meaningful only where not discarded.
    pub labels: Vec<u8>,
    /// Frames excluded from windowing (transition buffers etc.).
    pub discarded: Vec<bool>,
}

impl LatentTrajectory {
    pub fn n_frames(&self) -> usize {
        self.z.nrows()
    }
}

/// Per-factor channel support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSupport {
    /// Channels generated only from this factor.
    pub primary: Vec<usize>,
    /// Channels this factor shares with exactly one other factor.
    pub shared: Vec<usize>,
}

/// Ground-truth factor-to-channel support structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportMap {
    pub per_factor: Vec<FactorSupport>,
    /// Channels carrying pure observation noise.
    pub noise_channels: Vec<usize>,
    /// Indices of factors whose dynamics differ across regimes.
    pub regime_varying: Vec<usize>,
}

impl SupportMap {
    /// The 6-factor / 30-channel layout of the double-well benchmark:
    /// channels 4, 8 and 21 are shared between factor pairs, channels
    /// 27-29 are pure noise, and factors 0-2 are regime-varying.
    pub fn synthetic_default() -> Self {
        let f = |primary: &[usize], shared: &[usize]| FactorSupport {
            primary: primary.to_vec(),
            shared: shared.to_vec(),
        };
        SupportMap {
            per_factor: vec![
                f(&[0, 1, 2, 3], &[4]),
                f(&[5, 6, 7], &[8]),
                f(&[9, 10, 11, 12], &[4]),
                f(&[13, 14, 15, 16], &[8]),
                f(&[17, 18, 19, 20], &[21]),
                f(&[22, 23, 24, 25, 26], &[21]),
            ],
            noise_channels: vec![27, 28, 29],
            regime_varying: vec![0, 1, 2],
        }
    }

    /// Block support of the tokamak benchmark: MHD {0,1,2}, Density {3,4},
    /// Energy {5,6,7}, Shape {8..=11}; MHD and Density are regime-varying.
    pub fn tokamak() -> Self {
        let f = |primary: &[usize]| FactorSupport { primary: primary.to_vec(), shared: vec![] };
        SupportMap {
            per_factor: vec![f(&[0, 1, 2]), f(&[3, 4]), f(&[5, 6, 7]), f(&[8, 9, 10, 11])],
            noise_channels: vec![],
            regime_varying: vec![0, 1],
        }
    }

    pub fn n_factors(&self) -> usize {
        self.per_factor.len()
    }

    /// Total channel count implied by the partition.
    pub fn channel_count(&self) -> usize {
        let mut max = 0usize;
        for fs in &self.per_factor {
            for &c in fs.primary.iter().chain(fs.shared.iter()) {
                max = max.max(c + 1);
            }
        }
        for &c in &self.noise_channels {
            max = max.max(c + 1);
        }
        max
    }

    /// Combined support `primary ∪ shared` of one factor.
    pub fn combined(&self, factor: usize) -> Vec<usize> {
        let fs = &self.per_factor[factor];
        let mut v: Vec<usize> = fs.primary.iter().chain(fs.shared.iter()).copied().collect();
        v.sort_unstable();
        v
    }

    /// Factors whose support contains the channel.
    pub fn owners_of(&self, channel: usize) -> Vec<usize> {
        self.per_factor
            .iter()
            .enumerate()
            .filter(|(_, fs)| fs.primary.contains(&channel) || fs.shared.contains(&channel))
            .map(|(j, _)| j)
            .collect()
    }

    /// Checks the partition invariants against an expected channel count:
    /// primary sets pairwise disjoint, every shared channel owned by exactly
    /// two factors, and primary ∪ shared ∪ noise covering `[0, d)` exactly.
    pub fn validate(&self, d: usize) -> Result<()> {
        let mut primary_seen = vec![false; d];
        let mut shared_count = vec![0usize; d];
        let mut covered = vec![false; d];
        for (j, fs) in self.per_factor.iter().enumerate() {
            for &c in &fs.primary {
                if c >= d {
                    return Err(Error::config(format!("factor {j} primary channel {c} >= D ({d})")));
                }
                if primary_seen[c] || shared_count[c] > 0 {
                    return Err(Error::config(format!("channel {c} assigned more than once as primary")));
                }
                primary_seen[c] = true;
                covered[c] = true;
            }
            for &c in &fs.shared {
                if c >= d {
                    return Err(Error::config(format!("factor {j} shared channel {c} >= D ({d})")));
                }
                if primary_seen[c] {
                    return Err(Error::config(format!("channel {c} both primary and shared")));
                }
                shared_count[c] += 1;
                covered[c] = true;
            }
        }
        for (c, &n) in shared_count.iter().enumerate() {
            if n != 0 && n != 2 {
                return Err(Error::config(format!(
                    "shared channel {c} appears in {n} factors, expected exactly 2"
                )));
            }
        }
        for &c in &self.noise_channels {
            if c >= d {
                return Err(Error::config(format!("noise channel {c} >= D ({d})")));
            }
            if covered[c] {
                return Err(Error::config(format!("noise channel {c} also assigned to a factor")));
            }
            covered[c] = true;
        }
        if let Some(c) = covered.iter().position(|&v| !v) {
            return Err(Error::config(format!("channel {c} not covered by the support map")));
        }
        for &j in &self.regime_varying {
            if j >= self.per_factor.len() {
                return Err(Error::config(format!("regime-varying factor {j} out of range")));
            }
        }
        Ok(())
    }
}

/// Dataset metadata carried alongside the tensors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub lag: usize,
    /// Source frame count after subsampling.
    pub effective_frames: usize,
    /// Generator config snapshot, when generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
    /// FNV-1a hash of the generator config, for provenance checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    /// Per-channel (mean, std) applied at ingestion time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Windowed experiment input: observation windows, one regime label per
/// window, and optional ground truth.
#[derive(Debug, Clone)]
pub struct TimeSeriesDataset {
    /// `M x (lag + 1) x D`
    pub x: Array3<f32>,
    /// `M` regime labels in {0, 1}.
    pub labels: Vec<u8>,
    /// Value of the true latents at each window's last frame, `M x n_true`.
    pub z_true: Option<Array2<f32>>,
    pub support: Option<SupportMap>,
    /// Unflipped labels, present when label noise was injected; evaluation
    /// scores against these when available.
    pub clean_labels: Option<Vec<u8>>,
    pub meta: DatasetMeta,
}

impl TimeSeriesDataset {
    pub fn n_windows(&self) -> usize {
        self.x.shape()[0]
    }

    pub fn window_len(&self) -> usize {
        self.x.shape()[1]
    }

    pub fn obs_dim(&self) -> usize {
        self.x.shape()[2]
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&c| c == 1).count();
        (self.labels.len() - ones, ones)
    }

    /// Final frame of every window, `M x D`.
    pub fn final_frames(&self) -> Array2<f32> {
        self.x.index_axis(ndarray::Axis(1), self.window_len() - 1).to_owned()
    }

    /// Seeded per-class downsampling to exactly `n_per_class` windows,
    /// preserving temporal order of the kept windows.
    pub fn cap_per_class(&self, n_per_class: usize, seed: u64) -> Result<TimeSeriesDataset> {
        use rand::seq::SliceRandom;
        let mut keep: Vec<usize> = Vec::with_capacity(2 * n_per_class);
        let mut rng = crate::rng::stream(seed, crate::rng::streams::CAP_PER_CLASS);
        for class in [0u8, 1u8] {
            let mut idx: Vec<usize> =
                (0..self.labels.len()).filter(|&i| self.labels[i] == class).collect();
            if idx.len() < n_per_class {
                return Err(Error::data(format!(
                    "class {class} has {} windows, need {n_per_class}",
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            keep.extend_from_slice(&idx[..n_per_class]);
        }
        keep.sort_unstable();
        Ok(self.select_windows(&keep))
    }

    pub(crate) fn select_windows(&self, keep: &[usize]) -> TimeSeriesDataset {
        let w = self.window_len();
        let d = self.obs_dim();
        let mut x = Array3::<f32>::zeros((keep.len(), w, d));
        for (row, &i) in keep.iter().enumerate() {
            x.index_axis_mut(ndarray::Axis(0), row)
                .assign(&self.x.index_axis(ndarray::Axis(0), i));
        }
        let labels = keep.iter().map(|&i| self.labels[i]).collect();
        let z_true = self.z_true.as_ref().map(|z| {
            let mut out = Array2::<f32>::zeros((keep.len(), z.ncols()));
            for (row, &i) in keep.iter().enumerate() {
                out.row_mut(row).assign(&z.row(i));
            }
            out
        });
        TimeSeriesDataset {
            x,
            labels,
            z_true,
            support: self.support.clone(),
            clean_labels: self
                .clean_labels
                .as_ref()
                .map(|c| keep.iter().map(|&i| c[i]).collect()),
            meta: self.meta.clone(),
        }
    }
}

/// FNV-1a hash used for provenance stamps.
pub fn provenance_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// End-to-end double-well generation: simulate, mix, flip labels, subsample,
/// window and balance.
pub fn generate(cfg: &SynthConfig) -> Result<TimeSeriesDataset> {
    cfg.validate()?;
    let sm = SupportMap::synthetic_default();
    if sm.channel_count() != cfg.obs_dim {
        return Err(Error::config(format!(
            "obs_dim ({}) does not match the support map channel count ({})",
            cfg.obs_dim,
            sm.channel_count()
        )));
    }
    let traj = simulate_latents(cfg)?;
    let obs = mix_observations(&traj, &sm, cfg)?;
    let mut frames = FrameSet::from_parts(obs, &traj)?;
    if cfg.label_flip_rate > 0.0 {
        frames.clean_labels = Some(frames.labels.clone());
        frames.labels = flip_labels(&frames.labels, &frames.discarded, cfg.label_flip_rate, cfg.seed)?;
    }
    let frames = frames.subsample(cfg.subsample_stride, cfg.lag)?;
    let mut ds = window_and_balance(&frames, cfg.lag, true, cfg.seed)?;
    let cfg_json = serde_json::to_vec(cfg)?;
    ds.meta.generator = Some(serde_json::to_value(cfg)?);
    ds.meta.provenance = Some(provenance_hash(&cfg_json));
    ds.support = Some(sm);
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_map_invariants_hold() {
        let sm = SupportMap::synthetic_default();
        assert_eq!(sm.channel_count(), 30);
        sm.validate(30).unwrap();
        assert_eq!(sm.owners_of(4), vec![0, 2]);
        assert_eq!(sm.owners_of(8), vec![1, 3]);
        assert_eq!(sm.owners_of(21), vec![4, 5]);
        assert_eq!(sm.owners_of(27), Vec::<usize>::new());
        assert_eq!(sm.combined(0), vec![0, 1, 2, 3, 4]);

        let tk = SupportMap::tokamak();
        assert_eq!(tk.channel_count(), 12);
        tk.validate(12).unwrap();
    }

    #[test]
    fn support_map_validation_rejects_overlap() {
        let mut sm = SupportMap::synthetic_default();
        sm.per_factor[1].primary.push(0); // already factor 0's primary
        assert!(sm.validate(30).is_err());
    }

    #[test]
    fn config_validation_names_field() {
        let cfg = SynthConfig { n_frames: 2, ..SynthConfig::default() };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("n_frames"), "{err}");
        let cfg = SynthConfig { label_flip_rate: 1.5, ..SynthConfig::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("label_flip_rate"));
    }
}
