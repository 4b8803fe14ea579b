//! Synthetic tokamak disruption benchmark.
//!
//! Four AR(1) latent sources (MHD, Density, Energy, Shape) feed 12 named
//! observables through a seeded sparse block mixing matrix. Pre-disruptive
//! shots (regime 1) add a ramp to the MHD and Density sources over the
//! second half of each shot.

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DatasetMeta, SupportMap, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::rng;

/// Observable channel names in generation order.
pub const TOKAMAK_CHANNELS: [&str; 12] = [
    "q95",
    "li",
    "locked_mode",
    "nbar",
    "greenwald_frac",
    "wMHD",
    "betaN",
    "prad_ratio",
    "Ip",
    "elongation",
    "triangularity",
    "delta",
];

/// Source index feeding each channel (MHD=0, Density=1, Energy=2, Shape=3).
const CHANNEL_SOURCE: [usize; 12] = [0, 0, 0, 1, 1, 2, 2, 2, 3, 3, 3, 3];

const N_SOURCES: usize = 4;
const LAG: usize = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokamakConfig {
    pub n_shots_per_class: usize,
    pub shot_length: usize,
    pub ar_rho: f64,
    pub innovation_std: f64,
    pub mixing_min: f64,
    pub mixing_max: f64,
    pub noise_std: f64,
    pub ramp_mhd: f64,
    pub ramp_density: f64,
    pub seed: u64,
}

impl Default for TokamakConfig {
    fn default() -> Self {
        TokamakConfig {
            n_shots_per_class: 100,
            shot_length: 50,
            ar_rho: 0.95,
            innovation_std: 0.3,
            mixing_min: 0.6,
            mixing_max: 1.5,
            noise_std: 0.15,
            ramp_mhd: 1.5,
            ramp_density: 0.8,
            seed: 42,
        }
    }
}

impl TokamakConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ar_rho > 0.0 && self.ar_rho < 1.0) {
            return Err(Error::config(format!("ar_rho ({}) must be in (0, 1)", self.ar_rho)));
        }
        if self.shot_length < LAG + 1 {
            return Err(Error::config(format!(
                "shot_length ({}) must be at least {}",
                self.shot_length,
                LAG + 1
            )));
        }
        if self.n_shots_per_class == 0 {
            return Err(Error::config("n_shots_per_class must be >= 1".to_string()));
        }
        if self.mixing_min > self.mixing_max {
            return Err(Error::config("mixing_min must be <= mixing_max".to_string()));
        }
        Ok(())
    }
}

/// Ramp applied to a pre-disruptive source at 1-based step `t1` of a
/// `t_total`-step shot: `(t1 - T/2) / T` past the midpoint, zero before.
pub fn ramp_progress(t1: usize, t_total: usize) -> f64 {
    let half = t_total as f64 / 2.0;
    let t = t1 as f64;
    if t > half {
        (t - half) / t_total as f64
    } else {
        0.0
    }
}

/// AR(1) source paths of one shot. Regime 1 adds the MHD/Density ramps; with
/// the same seed and shot index the two regimes share the innovation stream,
/// so their paths coincide until the ramp onset.
fn shot_sources(cfg: &TokamakConfig, shot_idx: u64, regime: u8) -> Array2<f64> {
    let t_total = cfg.shot_length;
    let mut rng = rng::stream(cfg.seed, rng::streams::TOKAMAK_SHOT_BASE + shot_idx);
    let stationary = cfg.innovation_std / (1.0 - cfg.ar_rho * cfg.ar_rho).sqrt();
    let mut state = [0.0f64; N_SOURCES];
    for s in state.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *s = stationary * e;
    }
    let mut out = Array2::<f64>::zeros((t_total, N_SOURCES));
    for t in 0..t_total {
        for (k, s) in state.iter_mut().enumerate() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *s = cfg.ar_rho * *s + cfg.innovation_std * e;
            out[[t, k]] = *s;
        }
        if regime == 1 {
            let progress = ramp_progress(t + 1, t_total);
            out[[t, 0]] += cfg.ramp_mhd * progress;
            out[[t, 1]] += cfg.ramp_density * progress;
        }
    }
    out
}

/// Generates the windowed benchmark with ground-truth sources and support.
pub fn generate_tokamak(cfg: &TokamakConfig) -> Result<TimeSeriesDataset> {
    cfg.validate()?;
    let d = TOKAMAK_CHANNELS.len();
    let t_total = cfg.shot_length;
    let windows_per_shot = t_total - LAG;
    let n_windows = 2 * cfg.n_shots_per_class * windows_per_shot;

    let mut mix_rng = rng::stream(cfg.seed, rng::streams::TOKAMAK_MIXING);
    let coef: Vec<f64> =
        (0..d).map(|_| mix_rng.gen_range(cfg.mixing_min..cfg.mixing_max)).collect();

    let mut x = Array3::<f32>::zeros((n_windows, LAG + 1, d));
    let mut z_true = Array2::<f32>::zeros((n_windows, N_SOURCES));
    let mut labels = Vec::with_capacity(n_windows);
    let mut row = 0usize;
    for regime in [0u8, 1u8] {
        for shot in 0..cfg.n_shots_per_class {
            let sources = shot_sources(cfg, shot as u64, regime);
            // Observation noise: a per-(shot, regime) stream so the
            // sources-coincide invariant stays about sources, not noise.
            let noise_stream = ((regime as u64 + 1) << 32) | ((shot as u64) << 12);
            let mut noise_rng = rng::stream(cfg.seed, noise_stream);
            let mut obs = Array2::<f64>::zeros((t_total, d));
            for t in 0..t_total {
                for c in 0..d {
                    let e: f64 = StandardNormal.sample(&mut noise_rng);
                    obs[[t, c]] = coef[c] * sources[[t, CHANNEL_SOURCE[c]]] + cfg.noise_std * e;
                }
            }
            for end in LAG..t_total {
                for (w, s) in (end - LAG..=end).enumerate() {
                    for c in 0..d {
                        x[[row, w, c]] = obs[[s, c]] as f32;
                    }
                }
                for k in 0..N_SOURCES {
                    z_true[[row, k]] = sources[[end, k]] as f32;
                }
                labels.push(regime);
                row += 1;
            }
        }
    }
    debug_assert_eq!(row, n_windows);

    let cfg_json = serde_json::to_vec(cfg)?;
    Ok(TimeSeriesDataset {
        x,
        labels,
        z_true: Some(z_true),
        support: Some(SupportMap::tokamak()),
        clean_labels: None,
        meta: DatasetMeta {
            lag: LAG,
            effective_frames: 2 * cfg.n_shots_per_class * t_total,
            generator: Some(serde_json::to_value(cfg)?),
            provenance: Some(super::provenance_hash(&cfg_json)),
            channel_names: Some(TOKAMAK_CHANNELS.iter().map(|s| s.to_string()).collect()),
            standardization: None,
            warnings: vec![],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_and_counts() {
        let ds = generate_tokamak(&TokamakConfig::default()).unwrap();
        assert_eq!(ds.obs_dim(), 12);
        assert_eq!(ds.window_len(), 3);
        assert_eq!(ds.n_windows(), 2 * 100 * 48);
        let (c0, c1) = ds.class_counts();
        assert_eq!(c0, c1);
        assert_eq!(ds.meta.channel_names.as_ref().unwrap()[0], "q95");
    }

    #[test]
    fn regime_paths_coincide_before_midpoint_and_ramp_after() {
        let cfg = TokamakConfig::default();
        let s0 = shot_sources(&cfg, 3, 0);
        let s1 = shot_sources(&cfg, 3, 1);
        let t_total = cfg.shot_length;
        for t in 0..t_total {
            let p = ramp_progress(t + 1, t_total);
            for k in 0..N_SOURCES {
                let expect = match k {
                    0 => cfg.ramp_mhd * p,
                    1 => cfg.ramp_density * p,
                    _ => 0.0,
                };
                let diff = s1[[t, k]] - s0[[t, k]];
                assert!((diff - expect).abs() < 1e-12, "t={t} k={k}: {diff} vs {expect}");
            }
            if t + 1 <= t_total / 2 {
                assert_eq!(p, 0.0);
            }
        }
        // Final frame: MHD ramp contribution is ramp_mhd * 0.5.
        let final_diff = s1[[t_total - 1, 0]] - s0[[t_total - 1, 0]];
        assert!((final_diff - 0.75).abs() < 1e-12, "{final_diff}");
    }

    #[test]
    fn regime0_sources_are_pure_ar1() {
        let cfg = TokamakConfig::default();
        let s = shot_sources(&cfg, 0, 0);
        // Replay the stream by hand.
        let mut rng = rng::stream(cfg.seed, rng::streams::TOKAMAK_SHOT_BASE);
        let stationary = cfg.innovation_std / (1.0 - cfg.ar_rho * cfg.ar_rho).sqrt();
        let mut state = [0.0f64; N_SOURCES];
        for v in state.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v = stationary * e;
        }
        for t in 0..cfg.shot_length {
            for (k, v) in state.iter_mut().enumerate() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v = cfg.ar_rho * *v + cfg.innovation_std * e;
                assert_eq!(s[[t, k]], *v);
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = TokamakConfig { ar_rho: 1.0, ..TokamakConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TokamakConfig { shot_length: 2, ..TokamakConfig::default() };
        assert!(bad.validate().is_err());
    }
}
