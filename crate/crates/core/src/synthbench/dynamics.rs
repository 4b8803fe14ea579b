//! Latent dynamics of the double-well benchmark.
//!
//! The reaction coordinate follows overdamped Langevin dynamics on a quartic
//! double well whose left-well depth, right-well depth and barrier height are
//! modulated multiplicatively (through a softplus) by three slow AR(1)
//! factors. Two further AR(1) factors are dynamically invariant. Occupancy of
//! the wells defines the regime.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{assign_regimes, LatentTrajectory, SynthConfig, Well};
use crate::error::Result;
use crate::rng;

/// Internal dynamics constants. Not part of the public configuration; the
/// defaults are calibrated so that well dwell times sit a few hundred frames
/// above the modulator decorrelation time and both regimes stay populated.
#[derive(Debug, Clone)]
pub struct DynamicsParams {
    pub dt: f64,
    pub temperature: f64,
    /// Base barrier height of the quartic term.
    pub barrier0: f64,
    /// Base depth of the two well-tilt terms.
    pub depth0: f64,
    /// Softplus coupling of the barrier modulator.
    pub barrier_coupling: f64,
    /// Softplus coupling of the two depth modulators.
    pub depth_coupling: f64,
    /// Steepness of the logistic well-side weights.
    pub tilt_steepness: f64,
    pub modulator_rho: f64,
    pub modulator_innovation: f64,
    pub burn_in: usize,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            dt: 0.05,
            temperature: 0.47,
            barrier0: 1.3,
            depth0: 1.35,
            barrier_coupling: 1.0,
            depth_coupling: 3.2,
            tilt_steepness: 3.0,
            modulator_rho: 0.98,
            modulator_innovation: 0.1,
            burn_in: 2000,
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        (1.0 + x.exp()).ln()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gradient of the modulated potential
/// `U(z) = B (z^2-1)^2 - A_L sigmoid(-k z) - A_R sigmoid(k z)`.
fn potential_grad(z: f64, barrier: f64, depth_l: f64, depth_r: f64, k: f64) -> f64 {
    let s_l = sigmoid(-k * z);
    let s_r = sigmoid(k * z);
    4.0 * barrier * z * (z * z - 1.0) + depth_l * k * s_l * (1.0 - s_l)
        - depth_r * k * s_r * (1.0 - s_r)
}

/// Simulates the latent system with the default dynamics constants and the
/// regime definition from the config.
pub fn simulate_latents(cfg: &SynthConfig) -> Result<LatentTrajectory> {
    simulate_latents_with(cfg, &DynamicsParams::default())
}

/// Simulation entry point with explicit dynamics constants (used by tests
/// that freeze modulators or remove thermal noise).
pub fn simulate_latents_with(cfg: &SynthConfig, p: &DynamicsParams) -> Result<LatentTrajectory> {
    cfg.validate()?;
    let n = cfg.n_frames;
    let n_mod = 3.min(cfg.n_true.saturating_sub(1));
    let n_inv = cfg.n_true - 1 - n_mod;
    let mut rng = rng::stream(cfg.seed, rng::streams::LATENT_DYNAMICS);

    // Stationary init for the AR(1) block, left well for the coordinate.
    let stationary = if p.modulator_rho < 1.0 {
        p.modulator_innovation / (1.0 - p.modulator_rho * p.modulator_rho).sqrt()
    } else {
        0.0
    };
    let mut modulators = vec![0.0f64; n_mod + n_inv];
    for m in modulators.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *m = stationary * e;
    }
    let mut z0 = -1.0f64;

    let sp1 = softplus(1.0);
    let noise_scale = (2.0 * p.temperature * p.dt).sqrt();
    let step = |z: f64, m: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        let depth_l = p.depth0 * softplus(1.0 + p.depth_coupling * m.first().copied().unwrap_or(0.0)) / sp1;
        let depth_r = p.depth0 * softplus(1.0 + p.depth_coupling * m.get(1).copied().unwrap_or(0.0)) / sp1;
        let barrier =
            p.barrier0 * softplus(1.0 + p.barrier_coupling * m.get(2).copied().unwrap_or(0.0)) / sp1;
        let e: f64 = StandardNormal.sample(rng);
        z - potential_grad(z, barrier, depth_l, depth_r, p.tilt_steepness) * p.dt + noise_scale * e
    };
    let step_modulators = |m: &mut [f64], rng: &mut rand_chacha::ChaCha8Rng| {
        for v in m.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *v = p.modulator_rho * *v + p.modulator_innovation * e;
        }
    };

    for _ in 0..p.burn_in {
        step_modulators(&mut modulators, &mut rng);
        z0 = step(z0, &modulators[..n_mod], &mut rng);
    }

    let mut z = Array2::<f64>::zeros((n, cfg.n_true));
    let mut occupancy = Vec::with_capacity(n);
    for t in 0..n {
        step_modulators(&mut modulators, &mut rng);
        z0 = step(z0, &modulators[..n_mod], &mut rng);
        z[[t, 0]] = z0;
        for (k, &m) in modulators.iter().enumerate() {
            z[[t, k + 1]] = m;
        }
        occupancy.push(if z0 <= 0.0 { Well::A } else { Well::B });
    }

    let regimes = assign_regimes(&z.column(0).to_owned(), cfg.regime_definition)?;
    Ok(LatentTrajectory {
        z,
        well_occupancy: occupancy,
        labels: regimes.labels,
        discarded: regimes.discarded,
    })
}


#[cfg(test)]
mod diag {
    use super::*;

    #[test]
    #[ignore]
    fn print_generator_diagnostics() {
        let cfg = SynthConfig { n_frames: 120_000, seed: 42, ..SynthConfig::default() };
        let traj = simulate_latents(&cfg).unwrap();
        let n = traj.n_frames();
        let mut crossings = 0usize;
        for t in 1..n {
            if traj.well_occupancy[t] != traj.well_occupancy[t - 1] {
                crossings += 1;
            }
        }
        let discarded = traj.discarded.iter().filter(|&&d| d).count();
        let valid: Vec<usize> = (0..n).filter(|&t| !traj.discarded[t]).collect();
        let c1 = valid.iter().filter(|&&t| traj.labels[t] == 1).count();
        println!(
            "frames={n} crossings={crossings} discarded={:.1}% class1={:.1}%",
            100.0 * discarded as f64 / n as f64,
            100.0 * c1 as f64 / valid.len() as f64
        );
        for j in 0..cfg.n_true {
            let mut s = [0.0f64; 2];
            let mut ss = [0.0f64; 2];
            let mut cnt = [0usize; 2];
            for &t in &valid {
                let c = traj.labels[t] as usize;
                let v = traj.z[[t, j]];
                s[c] += v;
                ss[c] += v * v;
                cnt[c] += 1;
            }
            let m0 = s[0] / cnt[0] as f64;
            let m1 = s[1] / cnt[1] as f64;
            let v0 = ss[0] / cnt[0] as f64 - m0 * m0;
            let v1 = ss[1] / cnt[1] as f64 - m1 * m1;
            let d = (m0 - m1).abs() / (0.5 * (v0 + v1)).sqrt();
            println!("factor {j}: cohen_d={d:.3} mean0={m0:.3} mean1={m1:.3}");
        }
    }
}
