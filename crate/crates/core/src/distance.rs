//! Modality-aware patch distance kernels.
//!
//! Optical imagery uses the squared Euclidean distance; SAR imagery, whose
//! multiplicative speckle follows a Gamma law, uses the log-ratio criterion
//! `sum log((a + b) / (2 sqrt(a b)))`, which is nonnegative by AM-GM and
//! zero exactly when the patches agree. Which kernel applies is decided by
//! the raster's modality tag; new modalities plug in through
//! [`patch_distance`].

use crate::error::{Error, Result};
use crate::patch::{NeighborSet, PatchRef};
use crate::raster::{Modality, Raster};

/// Distances from one target to each of its candidates, aligned with the
/// candidate order of the [`NeighborSet`] it was built from.
pub type DistanceVector = Vec<f64>;

/// Squared Euclidean distance between two vectorized patches.
pub fn dist_euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    Ok(acc)
}

/// Gamma-likelihood speckle distance between two vectorized patches.
/// Every element must be strictly positive.
pub fn dist_gamma(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        if x <= 0.0 || y <= 0.0 {
            return Err(Error::NonPositiveValue(x.min(y)));
        }
        acc += ((x + y) / (2.0 * (x * y).sqrt())).ln();
    }
    Ok(acc)
}

/// Distance between two vectorized patches under the kernel of the given
/// modality.
pub fn patch_distance(modality: Modality, a: &[f64], b: &[f64]) -> Result<f64> {
    match modality {
        Modality::Optical => dist_euclidean(a, b),
        Modality::Sar => dist_gamma(a, b),
    }
}

/// Distance between the patches centered at `a` and `b`, walking the raster
/// directly in the same band-major, row-major order as [`extract`], so the
/// result is bit-identical to extracting first. No allocation.
pub fn patch_distance_at(
    raster: &Raster,
    a: PatchRef,
    b: PatchRef,
    half_width: usize,
) -> Result<f64> {
    let side = 2 * half_width + 1;
    let (a_top, a_left) = (a.row - half_width, a.col - half_width);
    let (b_top, b_left) = (b.row - half_width, b.col - half_width);
    let mut acc = 0.0;
    match raster.modality {
        Modality::Optical => {
            for band in 0..raster.bands {
                for dr in 0..side {
                    for dc in 0..side {
                        let x = raster.value(a_top + dr, a_left + dc, band);
                        let y = raster.value(b_top + dr, b_left + dc, band);
                        let d = x - y;
                        acc += d * d;
                    }
                }
            }
        }
        Modality::Sar => {
            for band in 0..raster.bands {
                for dr in 0..side {
                    for dc in 0..side {
                        let x = raster.value(a_top + dr, a_left + dc, band);
                        let y = raster.value(b_top + dr, b_left + dc, band);
                        if x <= 0.0 || y <= 0.0 {
                            return Err(Error::NonPositiveValue(x.min(y)));
                        }
                        acc += ((x + y) / (2.0 * (x * y).sqrt())).ln();
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Distances from the target of `ns` to every candidate, under the raster's
/// modality kernel.
pub fn distance_vector(
    raster: &Raster,
    ns: &NeighborSet,
    half_width: usize,
) -> Result<DistanceVector> {
    ns.candidates
        .iter()
        .map(|&c| patch_distance_at(raster, ns.target, c, half_width))
        .collect()
}
