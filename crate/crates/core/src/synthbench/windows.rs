//! Frame-level transforms and windowing.

use ndarray::{Array2, Array3, Axis};
use rand::seq::SliceRandom;

use super::{DatasetMeta, LatentTrajectory, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::rng;

/// Frame-level bundle prior to windowing: observations, per-frame labels,
/// discard mask, and optional ground-truth latents (standardized, matching
/// the mixing input).
#[derive(Debug, Clone)]
pub struct FrameSet {
    pub x: Array2<f64>,
    pub labels: Vec<u8>,
    pub discarded: Vec<bool>,
    pub z_true: Option<Array2<f64>>,
    /// Clean labels kept alongside when flipping was applied.
    pub clean_labels: Option<Vec<u8>>,
}

impl FrameSet {
    pub fn from_parts(x: Array2<f64>, traj: &LatentTrajectory) -> Result<FrameSet> {
        if x.nrows() != traj.n_frames() {
            return Err(Error::data(format!(
                "observation rows ({}) != trajectory frames ({})",
                x.nrows(),
                traj.n_frames()
            )));
        }
        Ok(FrameSet {
            x,
            labels: traj.labels.clone(),
            discarded: traj.discarded.clone(),
            z_true: Some(super::mixing::standardize_columns(&traj.z)),
            clean_labels: None,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.x.nrows()
    }

    /// Keeps every `stride`-th frame (index = 0 mod stride), preserving
    /// temporal ordering. Errors when fewer than `lag + 1` frames remain.
    pub fn subsample(&self, stride: usize, lag: usize) -> Result<FrameSet> {
        if stride < 1 {
            return Err(Error::config("subsample stride must be >= 1".to_string()));
        }
        if stride == 1 {
            return Ok(self.clone());
        }
        let keep: Vec<usize> = (0..self.n_frames()).step_by(stride).collect();
        if keep.len() < lag + 1 {
            return Err(Error::data(format!(
                "subsampling with stride {stride} leaves {} frames, need at least {}",
                keep.len(),
                lag + 1
            )));
        }
        let d = self.x.ncols();
        let mut x = Array2::<f64>::zeros((keep.len(), d));
        for (row, &i) in keep.iter().enumerate() {
            x.row_mut(row).assign(&self.x.row(i));
        }
        let z_true = self.z_true.as_ref().map(|z| {
            let mut out = Array2::<f64>::zeros((keep.len(), z.ncols()));
            for (row, &i) in keep.iter().enumerate() {
                out.row_mut(row).assign(&z.row(i));
            }
            out
        });
        Ok(FrameSet {
            x,
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            discarded: keep.iter().map(|&i| self.discarded[i]).collect(),
            z_true,
            clean_labels: self
                .clean_labels
                .as_ref()
                .map(|c| keep.iter().map(|&i| c[i]).collect()),
        })
    }
}

/// Builds lag windows over contiguous non-discarded frames; the window label
/// is the last frame's label. With balancing on, the majority class is
/// down-sampled by seeded choice to match the minority.
pub fn window_and_balance(
    frames: &FrameSet,
    lag: usize,
    balance: bool,
    seed: u64,
) -> Result<TimeSeriesDataset> {
    let n = frames.n_frames();
    let d = frames.x.ncols();
    if n < lag + 1 {
        return Err(Error::data(format!("{n} frames cannot host a lag-{lag} window")));
    }
    let mut ends: Vec<usize> = Vec::new();
    'outer: for t in lag..n {
        for s in t - lag..=t {
            if frames.discarded[s] {
                continue 'outer;
            }
        }
        ends.push(t);
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for &t in &ends {
        by_class[frames.labels[t] as usize].push(t);
    }
    let mut kept: Vec<usize> = if balance {
        for (c, idx) in by_class.iter().enumerate() {
            if idx.is_empty() {
                return Err(Error::data(format!("class {c} is empty after windowing")));
            }
        }
        let m = by_class[0].len().min(by_class[1].len());
        let mut rng = rng::stream(seed, rng::streams::BALANCE);
        let mut kept = Vec::with_capacity(2 * m);
        for idx in by_class.iter() {
            if idx.len() == m {
                kept.extend_from_slice(idx);
            } else {
                let mut shuffled = idx.clone();
                shuffled.shuffle(&mut rng);
                kept.extend_from_slice(&shuffled[..m]);
            }
        }
        kept
    } else {
        ends
    };
    kept.sort_unstable();

    let mut x = Array3::<f32>::zeros((kept.len(), lag + 1, d));
    for (row, &t) in kept.iter().enumerate() {
        for (w, s) in (t - lag..=t).enumerate() {
            for c in 0..d {
                x[[row, w, c]] = frames.x[[s, c]] as f32;
            }
        }
    }
    let labels: Vec<u8> = kept.iter().map(|&t| frames.labels[t]).collect();
    let z_true = frames.z_true.as_ref().map(|z| {
        let mut out = Array2::<f32>::zeros((kept.len(), z.ncols()));
        for (row, &t) in kept.iter().enumerate() {
            for j in 0..z.ncols() {
                out[[row, j]] = z[[t, j]] as f32;
            }
        }
        out
    });
    Ok(TimeSeriesDataset {
        x,
        labels,
        z_true,
        support: None,
        clean_labels: frames
            .clean_labels
            .as_ref()
            .map(|c| kept.iter().map(|&t| c[t]).collect()),
        meta: DatasetMeta { lag, effective_frames: n, ..DatasetMeta::default() },
    })
}

/// Flattens windows into a frame matrix (used by clustering and probes).
pub fn stack_windows(x: &Array3<f32>) -> Array2<f32> {
    let (m, w, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    x.view().into_shape_with_order((m * w, d)).unwrap().to_owned()
}
