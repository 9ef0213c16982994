//! Difference-image accumulation and the end-to-end pipeline.
//!
//! Every target's forward score is stamped onto its patch footprint in the
//! forward plane and its backward score onto the same footprint in the
//! backward plane; a pixel's change level is the mean of the scores stamped
//! onto it. The two planes are fused per pixel as
//! `fused = backward / mean(backward) + forward / mean(forward)`.
//!
//! Targets are scored in parallel, then stamped sequentially in grid order,
//! so the output is bit-identical for any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::patch::{target_grid, PatchParams, PatchRef};
use crate::raster::Raster;
use crate::structure::{score_target, StructureScorePair};

/// Per-pixel accumulator of structure differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceImage {
    pub width: usize,
    pub height: usize,
    pub sum: Vec<f64>,
    pub count: Vec<u32>,
}

impl DifferenceImage {
    pub fn new(width: usize, height: usize) -> Self {
        DifferenceImage {
            width,
            height,
            sum: vec![0.0; width * height],
            count: vec![0; width * height],
        }
    }

    /// Stamp one score onto the `(2p+1)^2` footprint of a target patch.
    pub fn accumulate(&mut self, target: PatchRef, half_width: usize, score: f64) {
        let top = target.row - half_width;
        let left = target.col - half_width;
        let side = 2 * half_width + 1;
        for dr in 0..side {
            let row_base = (top + dr) * self.width;
            for dc in 0..side {
                let idx = row_base + left + dc;
                self.sum[idx] += score;
                self.count[idx] += 1;
            }
        }
    }

    /// Per-pixel mean; pixels never stamped read as zero.
    pub fn values(&self) -> Vec<f64> {
        self.sum
            .iter()
            .zip(self.count.iter())
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect()
    }

    pub fn min_count(&self) -> u32 {
        self.count.iter().copied().min().unwrap_or(0)
    }
}

/// Fused difference image. When either input plane is identically zero the
/// fusion is undefined; the output is then all zeros with `degenerate` set.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedDI {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub degenerate: bool,
}

impl FusedDI {
    /// Reconstruct from a stored plane; all-zero planes are degenerate.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "plane {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        let degenerate = values.iter().all(|&v| v == 0.0);
        Ok(FusedDI {
            width,
            height,
            values,
            degenerate,
        })
    }
}

/// Mean-normalize both planes and add them per pixel.
pub fn fuse(backward: &DifferenceImage, forward: &DifferenceImage) -> Result<FusedDI> {
    if backward.width != forward.width || backward.height != forward.height {
        return Err(Error::DimensionMismatch(format!(
            "difference images differ: {}x{} vs {}x{}",
            backward.width, backward.height, forward.width, forward.height
        )));
    }
    let n = (backward.width * backward.height) as f64;
    let bw = backward.values();
    let fw = forward.values();
    let mean_b: f64 = bw.iter().sum::<f64>() / n;
    let mean_f: f64 = fw.iter().sum::<f64>() / n;
    if mean_b == 0.0 || mean_f == 0.0 {
        return Ok(FusedDI {
            width: backward.width,
            height: backward.height,
            values: vec![0.0; backward.width * backward.height],
            degenerate: true,
        });
    }
    let values = bw
        .iter()
        .zip(fw.iter())
        .map(|(&b, &f)| b / mean_b + f / mean_f)
        .collect();
    Ok(FusedDI {
        width: backward.width,
        height: backward.height,
        values,
        degenerate: false,
    })
}

/// Everything the pipeline produces for one image pair.
#[derive(Debug, Clone)]
pub struct AlscRun {
    pub fused: FusedDI,
    /// Structure differences evaluated in the second image's domain.
    pub forward: DifferenceImage,
    /// Structure differences evaluated in the first image's domain.
    pub backward: DifferenceImage,
    /// Targets whose neighbor count was clamped below K at the borders.
    pub clamped_targets: usize,
}

/// Run the full pipeline: enumerate targets, score each one, stamp the
/// scores into the two planes and fuse them.
///
/// `workers` = 1 runs strictly sequentially. More workers score targets in
/// parallel; stamping stays in deterministic grid order either way, so the
/// result does not depend on `workers`.
pub fn run_alsc(rx: &Raster, ry: &Raster, params: &PatchParams, workers: usize) -> Result<AlscRun> {
    if rx.width != ry.width || rx.height != ry.height {
        return Err(Error::DimensionMismatch(format!(
            "rasters differ: {}x{} vs {}x{}",
            rx.width, rx.height, ry.width, ry.height
        )));
    }
    let grid = target_grid(rx.width, rx.height, params)?;

    let outcomes: Vec<(StructureScorePair, bool)> = if workers <= 1 {
        grid.iter()
            .map(|&t| score_target(rx, ry, t, params).map(|o| (o.scores, o.clamped)))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;
        pool.install(|| {
            grid.par_iter()
                .map(|&t| score_target(rx, ry, t, params).map(|o| (o.scores, o.clamped)))
                .collect::<Result<_>>()
        })?
    };

    let mut forward = DifferenceImage::new(rx.width, rx.height);
    let mut backward = DifferenceImage::new(rx.width, rx.height);
    let mut clamped_targets = 0;
    for (scores, clamped) in &outcomes {
        forward.accumulate(scores.target, params.half_width, scores.forward);
        backward.accumulate(scores.target, params.half_width, scores.backward);
        if *clamped {
            clamped_targets += 1;
        }
    }
    debug_assert!(forward.min_count() >= 1);

    let fused = fuse(&backward, &forward)?;
    Ok(AlscRun {
        fused,
        forward,
        backward,
        clamped_targets,
    })
}
