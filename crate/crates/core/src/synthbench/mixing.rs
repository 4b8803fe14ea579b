//! Monotone nonlinear mixing from latent factors to observation channels.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::{LatentTrajectory, SupportMap, SynthConfig};
use crate::error::{Error, Result};
use crate::rng;

/// Number of mixing function families.
pub const FAMILY_COUNT: usize = 5;

/// The five monotone families, cycled across channels by channel index:
/// tanh(5z), z^3/4, erf(3z), arctan(5z), cbrt(z).
pub fn mixing_family(channel: usize, z: f64) -> f64 {
    match channel % FAMILY_COUNT {
        0 => (5.0 * z).tanh(),
        1 => z.powi(3) / 4.0,
        2 => libm::erf(3.0 * z),
        3 => (5.0 * z).atan(),
        _ => z.cbrt(),
    }
}

/// Centers and rescales every column to zero mean, unit variance. Columns
/// with (numerically) zero variance are left centered only.
pub fn standardize_columns(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut col in out.columns_mut() {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 1e-12 {
            col.mapv_inplace(|v| (v - mean) / std);
        } else {
            col.mapv_inplace(|v| v - mean);
        }
    }
    out
}

/// Channel hosting the cross-factor interaction term of a factor: its second
/// primary channel (first, if the factor has only one). The interaction
/// partner of factor `j` is factor `(j + 1) mod n`.
pub fn interaction_channel(sm: &SupportMap, factor: usize) -> usize {
    let primary = &sm.per_factor[factor].primary;
    *primary.get(1).unwrap_or(&primary[0])
}

/// Maps a latent trajectory through the per-channel mixing families.
///
/// Latents are standardized first, so the family arguments live in the
/// families' active range. Each channel sums one family response per owning
/// factor (same family for both owners of a shared channel), interaction
/// channels add `alpha * tanh(z_a * z_b)`, and every channel receives
/// N(0, noise_sigma^2) observation noise; pure-noise channels receive only
/// the noise.
pub fn mix_observations(
    traj: &LatentTrajectory,
    sm: &SupportMap,
    cfg: &SynthConfig,
) -> Result<Array2<f64>> {
    if sm.channel_count() != cfg.obs_dim {
        return Err(Error::config(format!(
            "support map covers {} channels but obs_dim is {}",
            sm.channel_count(),
            cfg.obs_dim
        )));
    }
    if sm.n_factors() != cfg.n_true {
        return Err(Error::config(format!(
            "support map has {} factors but n_true is {}",
            sm.n_factors(),
            cfg.n_true
        )));
    }
    let n = traj.n_frames();
    let d = cfg.obs_dim;
    let z = standardize_columns(&traj.z);

    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); d];
    for c in 0..d {
        owners[c] = sm.owners_of(c);
    }
    let mut interactions: Vec<(usize, usize, usize)> = Vec::new(); // (channel, a, b)
    if cfg.alpha > 0.0 {
        for j in 0..sm.n_factors() {
            interactions.push((interaction_channel(sm, j), j, (j + 1) % sm.n_factors()));
        }
    }

    let mut x = Array2::<f64>::zeros((n, d));
    for t in 0..n {
        for c in 0..d {
            let mut v = 0.0;
            for &j in &owners[c] {
                v += mixing_family(c, z[[t, j]]);
            }
            x[[t, c]] = v;
        }
        for &(c, a, b) in &interactions {
            x[[t, c]] += cfg.alpha * (z[[t, a]] * z[[t, b]]).tanh();
        }
    }
    if cfg.noise_sigma > 0.0 {
        let mut rng = rng::stream(cfg.seed, rng::streams::OBSERVATION_NOISE);
        for v in x.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += cfg.noise_sigma * e;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthbench::Well;
    use ndarray::Array2;

    /// Trajectory whose columns have exactly zero mean and unit variance, so
    /// standardization is the identity.
    fn unit_traj(n: usize, k: usize) -> LatentTrajectory {
        let mut z = Array2::<f64>::zeros((n, k));
        for j in 0..k {
            for t in 0..n {
                // Alternate +-1 with a factor-dependent phase.
                z[[t, j]] = if (t + j) % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        LatentTrajectory {
            z,
            well_occupancy: vec![Well::A; n],
            labels: vec![0; n],
            discarded: vec![false; n],
        }
    }

    fn noise_free_cfg(alpha: f64) -> SynthConfig {
        SynthConfig { alpha, noise_sigma: 0.0, n_frames: 64, ..SynthConfig::default() }
    }

    #[test]
    fn lone_parent_channel_is_exact_family_response() {
        let sm = SupportMap::synthetic_default();
        let traj = unit_traj(64, 6);
        let cfg = noise_free_cfg(0.0);
        let x = mix_observations(&traj, &sm, &cfg).unwrap();
        // Channel 0: primary of factor 0, family index 0 = tanh(5z).
        for t in 0..traj.n_frames() {
            let expect = (5.0 * traj.z[[t, 0]]).tanh();
            assert_eq!(x[[t, 0]], expect);
        }
        // Shared channel 4 sums both owners through family 4 (cbrt).
        for t in 0..traj.n_frames() {
            let expect = traj.z[[t, 0]].cbrt() + traj.z[[t, 2]].cbrt();
            assert!((x[[t, 4]] - expect).abs() < 1e-15);
        }
        // Noise channels are exactly zero without observation noise.
        for t in 0..traj.n_frames() {
            assert_eq!(x[[t, 27]], 0.0);
        }
    }

    #[test]
    fn families_cycle_in_listed_order() {
        let z: f64 = 0.37;
        let expect = [
            (5.0 * z).tanh(),
            z * z * z / 4.0,
            libm::erf(3.0 * z),
            (5.0 * z).atan(),
            z.cbrt(),
        ];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(mixing_family(i, z), *e);
            assert_eq!(mixing_family(i + FAMILY_COUNT, z), *e);
        }
    }

    #[test]
    fn interaction_term_recovered_pointwise() {
        let sm = SupportMap::synthetic_default();
        let traj = unit_traj(64, 6);
        let base = mix_observations(&traj, &sm, &noise_free_cfg(0.0)).unwrap();
        let with = mix_observations(&traj, &sm, &noise_free_cfg(0.5)).unwrap();
        // Factor 0's interaction channel pairs z0 with z1.
        let ch = interaction_channel(&sm, 0);
        assert_eq!(ch, 1);
        for t in 0..traj.n_frames() {
            let inter = with[[t, ch]] - base[[t, ch]];
            let expect = 0.5 * (traj.z[[t, 0]] * traj.z[[t, 1]]).tanh();
            assert!((inter - expect).abs() < 1e-12, "{inter} vs {expect}");
        }
    }

    #[test]
    fn families_strictly_monotone_on_active_range() {
        // Non-decreasing across [-3, 3]; strictly increasing on [-1.5, 1.5]
        // where the saturating families still move above f64 resolution.
        let grid: Vec<f64> = (0..=600).map(|i| -3.0 + i as f64 * 0.01).collect();
        for fam in 0..FAMILY_COUNT {
            for w in grid.windows(2) {
                let (a, b) = (mixing_family(fam, w[0]), mixing_family(fam, w[1]));
                assert!(b >= a, "family {fam} decreasing at {}", w[0]);
                if w[0] >= -1.5 && w[1] <= 1.5 {
                    assert!(b > a, "family {fam} not strict at {}", w[0]);
                }
            }
        }
    }

    #[test]
    fn support_consistency_via_perturbation_probes() {
        // alpha = 0, sigma = 0: each channel responds only to its owners.
        let sm = SupportMap::synthetic_default();
        let cfg = noise_free_cfg(0.0);
        let base_traj = unit_traj(64, 6);
        let base = mix_observations(&base_traj, &sm, &cfg).unwrap();
        for j in 0..6 {
            let mut traj = base_traj.clone();
            // Swap the sign pattern of factor j (keeps exact unit variance).
            for t in 0..traj.n_frames() {
                traj.z[[t, j]] = -traj.z[[t, j]];
            }
            let probed = mix_observations(&traj, &sm, &cfg).unwrap();
            for c in 0..30 {
                let changed = (0..64).any(|t| (probed[[t, c]] - base[[t, c]]).abs() > 1e-12);
                let owned = sm.owners_of(c).contains(&j);
                assert_eq!(changed, owned, "factor {j} channel {c}");
            }
        }
    }

    #[test]
    fn mixing_deterministic_under_seed() {
        let sm = SupportMap::synthetic_default();
        let traj = unit_traj(32, 6);
        let cfg = SynthConfig { n_frames: 32, ..SynthConfig::default() };
        let a = mix_observations(&traj, &sm, &cfg).unwrap();
        let b = mix_observations(&traj, &sm, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
