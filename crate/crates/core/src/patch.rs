//! Target-patch enumeration and neighbor-candidate geometry.
//!
//! Patches are squares of side `2p + 1` that must lie entirely inside the
//! image; no padding is invented at the borders. The target grid strides by
//! the target step and clamps the last center per axis so that every pixel
//! is covered by at least one target patch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Geometry parameters of the patch graph search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchParams {
    /// Patch half-width `p`; the patch side is `2p + 1`.
    pub half_width: usize,
    /// Search window side in pixels (CLI flag `--omega`).
    pub window: usize,
    /// Stride between target-patch centers (`--delta-p`).
    pub target_step: usize,
    /// Stride between candidate-neighbor centers inside the window (`--delta-s`).
    pub search_step: usize,
    /// Number of neighbors kept with nonzero probability (`--k`).
    pub neighbors: usize,
}

impl PatchParams {
    /// Defaults derived from the half-width: window `75p`, target step `p`,
    /// search step `2p + 1`, 35 neighbors.
    pub fn defaults_for(half_width: usize) -> Self {
        PatchParams {
            half_width,
            window: 75 * half_width,
            target_step: half_width,
            search_step: 2 * half_width + 1,
            neighbors: 35,
        }
    }

    /// Patch side length `2p + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_width < 1 {
            return Err(Error::InvalidParams("patch half-width must be >= 1".into()));
        }
        if self.target_step < 1 || self.target_step > self.side() {
            return Err(Error::InvalidParams(format!(
                "target step must lie in [1, {}], got {}",
                self.side(),
                self.target_step
            )));
        }
        if self.search_step < 1 {
            return Err(Error::InvalidParams("search step must be >= 1".into()));
        }
        if self.window < 2 * self.search_step + 1 {
            return Err(Error::InvalidParams(format!(
                "window side {} is too small for search step {} (need >= {})",
                self.window,
                self.search_step,
                2 * self.search_step + 1
            )));
        }
        if self.neighbors < 1 {
            return Err(Error::InvalidParams("neighbor count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Center of one square patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchRef {
    pub row: usize,
    pub col: usize,
}

/// A target patch together with its candidate neighbors, ordered row-major
/// over the window offsets. The ordering is part of the contract: sorting
/// ties downstream break by candidate index, which makes the whole pipeline
/// deterministic.
#[derive(Debug, Clone)]
pub struct NeighborSet {
    pub target: PatchRef,
    pub candidates: Vec<PatchRef>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Centers along one axis: `p, p + step, ...` with the last center clamped
/// to `len - 1 - p` so the final patch touches the image edge.
fn axis_centers(len: usize, half_width: usize, step: usize) -> Vec<usize> {
    let last = len - 1 - half_width;
    let mut centers = Vec::new();
    let mut pos = half_width;
    while pos < last {
        centers.push(pos);
        pos += step;
    }
    centers.push(last);
    centers
}

/// Enumerate the target-patch grid covering the whole image.
pub fn target_grid(width: usize, height: usize, params: &PatchParams) -> Result<Vec<PatchRef>> {
    params.validate()?;
    let side = params.side();
    if width < side || height < side {
        return Err(Error::ImageTooSmall {
            width,
            height,
            side,
        });
    }
    let rows = axis_centers(height, params.half_width, params.target_step);
    let cols = axis_centers(width, params.half_width, params.target_step);
    let mut grid = Vec::with_capacity(rows.len() * cols.len());
    for &row in &rows {
        for &col in &cols {
            grid.push(PatchRef { row, col });
        }
    }
    Ok(grid)
}

/// Enumerate candidate neighbors of a target: centers at offsets
/// `(a * step, b * step)` with `|a * step| <= (window - 1) / 2`, excluding
/// the target itself and any patch that exits the image.
pub fn neighbor_candidates(
    target: PatchRef,
    width: usize,
    height: usize,
    params: &PatchParams,
) -> NeighborSet {
    let reach = ((params.window - 1) / 2 / params.search_step) as isize;
    let step = params.search_step as isize;
    let p = params.half_width as isize;
    let max_row = height as isize - 1 - p;
    let max_col = width as isize - 1 - p;
    let mut candidates = Vec::new();
    for a in -reach..=reach {
        let row = target.row as isize + a * step;
        if row < p || row > max_row {
            continue;
        }
        for b in -reach..=reach {
            if a == 0 && b == 0 {
                continue;
            }
            let col = target.col as isize + b * step;
            if col < p || col > max_col {
                continue;
            }
            candidates.push(PatchRef {
                row: row as usize,
                col: col as usize,
            });
        }
    }
    NeighborSet { target, candidates }
}

/// Vectorize one patch: band-major, then row-major within a band, so that
/// element `q` lines up across patches of the same raster pair.
pub fn extract(raster: &Raster, patch: PatchRef, half_width: usize) -> Vec<f64> {
    let side = 2 * half_width + 1;
    let mut out = Vec::with_capacity(side * side * raster.bands);
    let top = patch.row - half_width;
    let left = patch.col - half_width;
    for band in 0..raster.bands {
        for dr in 0..side {
            for dc in 0..side {
                out.push(raster.value(top + dr, left + dc, band));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Modality;

    fn params(p: usize, window: usize, dp: usize, ds: usize, k: usize) -> PatchParams {
        PatchParams {
            half_width: p,
            window,
            target_step: dp,
            search_step: ds,
            neighbors: k,
        }
    }

    #[test]
    fn single_patch_grid() {
        let g = target_grid(5, 5, &params(2, 5, 2, 1, 1)).unwrap();
        assert_eq!(g, vec![PatchRef { row: 2, col: 2 }]);
    }

    #[test]
    fn grid_strides_and_clamps() {
        let g = target_grid(9, 5, &params(2, 5, 2, 1, 1)).unwrap();
        let cols: Vec<usize> = g.iter().map(|r| r.col).collect();
        let rows: Vec<usize> = g.iter().map(|r| r.row).collect();
        assert_eq!(cols, vec![2, 4, 6]);
        assert_eq!(rows, vec![2, 2, 2]);

        // Stride would give {2, 5}; 5 exceeds 7 - 1 - 2 = 4, so the last
        // center clamps to 4.
        let g = target_grid(7, 5, &params(2, 5, 3, 1, 1)).unwrap();
        let cols: Vec<usize> = g.iter().map(|r| r.col).collect();
        assert_eq!(cols, vec![2, 4]);
    }

    #[test]
    fn grid_rejects_too_small_images() {
        assert!(matches!(
            target_grid(4, 9, &params(2, 5, 2, 1, 1)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn full_coverage_brute_force() {
        // Every pixel of every small image is covered by at least one target
        // patch, for every legal step.
        for p in 1usize..=3 {
            let side = 2 * p + 1;
            for h in side..=20 {
                for w in side..=20 {
                    for dp in 1..=side {
                        let prm = params(p, 2 * side + 1, dp, side, 1);
                        let grid = target_grid(w, h, &prm).unwrap();
                        let mut covered = vec![false; w * h];
                        for t in &grid {
                            for dr in 0..side {
                                for dc in 0..side {
                                    let r = t.row - p + dr;
                                    let c = t.col - p + dc;
                                    covered[r * w + c] = true;
                                }
                            }
                        }
                        assert!(
                            covered.iter().all(|&c| c),
                            "uncovered pixel at w={w} h={h} p={p} dp={dp}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn smallest_window_has_eight_interior_candidates() {
        let prm = params(1, 3, 1, 1, 1);
        let ns = neighbor_candidates(PatchRef { row: 5, col: 5 }, 11, 11, &prm);
        assert_eq!(ns.len(), 8);
        assert!(!ns.candidates.contains(&ns.target));
    }

    #[test]
    fn corner_target_keeps_three_candidates() {
        let prm = params(1, 3, 1, 1, 1);
        let ns = neighbor_candidates(PatchRef { row: 1, col: 1 }, 11, 11, &prm);
        assert_eq!(ns.len(), 3);
        for c in &ns.candidates {
            assert!((1..=9).contains(&c.row) && (1..=9).contains(&c.col));
        }
    }

    #[test]
    fn default_window_candidate_count() {
        // window 75, step 3: offsets -12..=12 in both axes, minus the center.
        let prm = params(1, 75, 1, 3, 35);
        let ns = neighbor_candidates(PatchRef { row: 100, col: 100 }, 201, 201, &prm);
        assert_eq!(ns.len(), 25 * 25 - 1);
    }

    #[test]
    fn candidate_ordering_is_row_major() {
        let prm = params(1, 3, 1, 1, 1);
        let ns = neighbor_candidates(PatchRef { row: 5, col: 5 }, 11, 11, &prm);
        let expect = [
            (4, 4),
            (4, 5),
            (4, 6),
            (5, 4),
            (5, 6),
            (6, 4),
            (6, 5),
            (6, 6),
        ];
        let got: Vec<(usize, usize)> = ns.candidates.iter().map(|r| (r.row, r.col)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn candidate_lattice_is_mirror_symmetric() {
        let prm = params(1, 15, 1, 2, 4);
        for &(tr, tc) in &[(3usize, 3usize), (5, 9), (10, 10)] {
            let ns = neighbor_candidates(PatchRef { row: tr, col: tc }, 21, 21, &prm);
            for c in &ns.candidates {
                let dr = c.row as isize - tr as isize;
                let dc = c.col as isize - tc as isize;
                let mr = tr as isize - dr;
                let mc = tc as isize - dc;
                let in_image = (1..=19).contains(&mr) && (1..=19).contains(&mc);
                if in_image {
                    assert!(ns.candidates.contains(&PatchRef {
                        row: mr as usize,
                        col: mc as usize
                    }));
                }
            }
        }
    }

    #[test]
    fn extract_constant_patch() {
        let r = Raster::new(5, 5, 1, Modality::Optical, vec![0.5; 25]).unwrap();
        let v = extract(&r, PatchRef { row: 2, col: 2 }, 1);
        assert_eq!(v, vec![0.5; 9]);
        let again = extract(&r, PatchRef { row: 2, col: 2 }, 1);
        assert_eq!(v, again);
    }

    #[test]
    fn extract_order_is_band_major_then_row_major() {
        // 3x3 raster, 2 bands; band 0 holds 0..9, band 1 holds 100..109.
        let mut data = Vec::new();
        for px in 0..9 {
            data.push(px as f64);
            data.push(100.0 + px as f64);
        }
        let r = Raster::new(3, 3, 2, Modality::Optical, data).unwrap();
        let v = extract(&r, PatchRef { row: 1, col: 1 }, 1);
        let mut expect: Vec<f64> = (0..9).map(|i| i as f64).collect();
        expect.extend((0..9).map(|i| 100.0 + i as f64));
        assert_eq!(v, expect);
    }
}
