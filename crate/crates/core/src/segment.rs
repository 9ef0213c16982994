//! Binary segmentation of the fused difference image.
//!
//! Two routes: Otsu thresholding on a 256-bin histogram of the min-max
//! scaled DI, and PCA-plus-k-means clustering of per-pixel block features.
//! Both are fully deterministic; repeated runs give bit-identical maps.

use crate::di::FusedDI;
use crate::error::{Error, Result};
use crate::raster::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegMethod {
    Otsu,
    Pcakm,
}

impl std::fmt::Display for SegMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SegMethod::Otsu => write!(f, "otsu"),
            SegMethod::Pcakm => write!(f, "pcakm"),
        }
    }
}

/// Binary change map plus the decision metadata that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeMap {
    pub width: usize,
    pub height: usize,
    /// True = changed.
    pub data: Vec<bool>,
    pub method: SegMethod,
    /// Otsu only: the chosen histogram bin in the scaled [0, 255] domain.
    /// Pixels whose bin is strictly above it are changed.
    pub threshold: Option<f64>,
    /// Set when the DI carried no usable contrast and the map is all
    /// unchanged by decision rule.
    pub degenerate: bool,
}

impl ChangeMap {
    pub fn to_mask(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }

    pub fn changed_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    fn all_unchanged(width: usize, height: usize, method: SegMethod) -> Self {
        ChangeMap {
            width,
            height,
            data: vec![false; width * height],
            method,
            threshold: None,
            degenerate: true,
        }
    }
}

/// Scale a plane to [0, 255] histogram bins. `None` when the plane is
/// constant.
fn to_bins(values: &[f64]) -> Option<Vec<u8>> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return None;
    }
    let range = max - min;
    Some(
        values
            .iter()
            .map(|&v| ((v - min) / range * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect(),
    )
}

/// Otsu thresholding: pick the bin that maximizes the between-class
/// variance; ties resolve to the lowest bin.
pub fn otsu_threshold(di: &FusedDI) -> ChangeMap {
    let bins = match to_bins(&di.values) {
        Some(b) => b,
        None => return ChangeMap::all_unchanged(di.width, di.height, SegMethod::Otsu),
    };
    let mut hist = [0u64; 256];
    for &b in &bins {
        hist[b as usize] += 1;
    }
    let total = bins.len() as f64;
    let weighted_total: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as f64 * h as f64)
        .sum();

    let mut best_t = 0usize;
    let mut best_var = -1.0f64;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for t in 0..256usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (weighted_total - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }

    let data = bins.iter().map(|&b| (b as usize) > best_t).collect();
    ChangeMap {
        width: di.width,
        height: di.height,
        data,
        method: SegMethod::Otsu,
        threshold: Some(best_t as f64),
        degenerate: false,
    }
}

// ---------------------------------------------------------------------------
// PCA + k-means
// ---------------------------------------------------------------------------

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// `eigenvectors[i]` is the unit vector for `eigenvalues[i]`.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let frob: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let tol = (frob * 1e-14).max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= tol / (n * n) as f64 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap().then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = (0..n).map(|r| v[r][col]).collect();
            // Canonical sign: largest-magnitude component positive.
            let lead = vec
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            if vec[lead] < 0.0 {
                for x in vec.iter_mut() {
                    *x = -*x;
                }
            }
            vec
        })
        .collect();
    (eigenvalues, eigenvectors)
}

/// Principal directions of the DI's non-overlapping `block x block` tiles
/// (zero-padded at the right/bottom edges). Returns `dims` eigenvectors of
/// the tile covariance, each of length `block * block`.
pub fn block_pca_basis(di: &FusedDI, block: usize, dims: usize) -> Result<Vec<Vec<f64>>> {
    validate_pcakm(di, block, dims)?;
    let s2 = block * block;
    let tiles_r = di.height.div_ceil(block);
    let tiles_c = di.width.div_ceil(block);
    let n_tiles = tiles_r * tiles_c;

    let mut mean = vec![0.0; s2];
    let mut tiles: Vec<Vec<f64>> = Vec::with_capacity(n_tiles);
    for tr in 0..tiles_r {
        for tc in 0..tiles_c {
            let mut tile = vec![0.0; s2];
            for dr in 0..block {
                for dc in 0..block {
                    let r = tr * block + dr;
                    let c = tc * block + dc;
                    if r < di.height && c < di.width {
                        tile[dr * block + dc] = di.values[r * di.width + c];
                    }
                }
            }
            for (m, t) in mean.iter_mut().zip(tile.iter()) {
                *m += t;
            }
            tiles.push(tile);
        }
    }
    for m in mean.iter_mut() {
        *m /= n_tiles as f64;
    }

    let mut cov = vec![vec![0.0; s2]; s2];
    for tile in &tiles {
        let centered: Vec<f64> = tile.iter().zip(mean.iter()).map(|(t, m)| t - m).collect();
        for i in 0..s2 {
            for j in i..s2 {
                cov[i][j] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..s2 {
        for j in i..s2 {
            cov[i][j] /= n_tiles as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let (_, vecs) = jacobi_eigen(cov);
    Ok(vecs.into_iter().take(dims).collect())
}

fn validate_pcakm(di: &FusedDI, block: usize, dims: usize) -> Result<()> {
    if block < 2 {
        return Err(Error::InvalidParams("block size must be >= 2".into()));
    }
    if dims < 1 || dims > block * block {
        return Err(Error::InvalidParams(format!(
            "feature dims must lie in [1, {}], got {dims}",
            block * block
        )));
    }
    if di.width < block || di.height < block {
        return Err(Error::BlockTooLarge {
            width: di.width,
            height: di.height,
            block,
        });
    }
    Ok(())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Segment using a caller-supplied PCA basis; see [`pcakm_segment`].
pub fn pcakm_segment_with_basis(
    di: &FusedDI,
    block: usize,
    basis: &[Vec<f64>],
) -> Result<ChangeMap> {
    validate_pcakm(di, block, basis.len())?;
    let s2 = block * block;
    let n = di.width * di.height;

    // Tile mean, re-derived so features center the same way the covariance
    // did.
    let tiles_r = di.height.div_ceil(block);
    let tiles_c = di.width.div_ceil(block);
    let mut mean = vec![0.0; s2];
    for tr in 0..tiles_r {
        for tc in 0..tiles_c {
            for dr in 0..block {
                for dc in 0..block {
                    let r = tr * block + dr;
                    let c = tc * block + dc;
                    if r < di.height && c < di.width {
                        mean[dr * block + dc] += di.values[r * di.width + c];
                    }
                }
            }
        }
    }
    for m in mean.iter_mut() {
        *m /= (tiles_r * tiles_c) as f64;
    }

    // Per-pixel feature: centered, edge-replicated neighborhood projected
    // onto the basis. Offsets -(block-1)/2 ..= block/2 cover `block` samples.
    let lo = -((block as isize - 1) / 2);
    let hi = block as isize / 2;
    let mut features = vec![0.0f64; n * basis.len()];
    let mut window = vec![0.0f64; s2];
    for r in 0..di.height {
        for c in 0..di.width {
            let mut q = 0;
            for dr in lo..=hi {
                for dc in lo..=hi {
                    let rr = (r as isize + dr).clamp(0, di.height as isize - 1) as usize;
                    let cc = (c as isize + dc).clamp(0, di.width as isize - 1) as usize;
                    window[q] = di.values[rr * di.width + cc] - mean[q];
                    q += 1;
                }
            }
            let base = (r * di.width + c) * basis.len();
            for (d, vec) in basis.iter().enumerate() {
                features[base + d] = window.iter().zip(vec.iter()).map(|(w, e)| w * e).sum();
            }
        }
    }

    let dims = basis.len();
    let feat = |i: usize| -> &[f64] { &features[i * dims..(i + 1) * dims] };

    // Deterministic farthest-point seeding from the feature mean.
    let mut grand_mean = vec![0.0; dims];
    for i in 0..n {
        for (g, f) in grand_mean.iter_mut().zip(feat(i)) {
            *g += f;
        }
    }
    for g in grand_mean.iter_mut() {
        *g /= n as f64;
    }
    let seed0 = (0..n)
        .max_by(|&i, &j| {
            squared_distance(feat(i), &grand_mean)
                .partial_cmp(&squared_distance(feat(j), &grand_mean))
                .unwrap()
                .then(j.cmp(&i))
        })
        .unwrap();
    if squared_distance(feat(seed0), &grand_mean) <= 0.0 {
        return Ok(ChangeMap::all_unchanged(di.width, di.height, SegMethod::Pcakm));
    }
    let seed1 = (0..n)
        .max_by(|&i, &j| {
            squared_distance(feat(i), feat(seed0))
                .partial_cmp(&squared_distance(feat(j), feat(seed0)))
                .unwrap()
                .then(j.cmp(&i))
        })
        .unwrap();
    if squared_distance(feat(seed1), feat(seed0)) <= 0.0 {
        return Ok(ChangeMap::all_unchanged(di.width, di.height, SegMethod::Pcakm));
    }

    let mut centroids = [feat(seed0).to_vec(), feat(seed1).to_vec()];
    let mut assignment = vec![0u8; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let d0 = squared_distance(feat(i), &centroids[0]);
            let d1 = squared_distance(feat(i), &centroids[1]);
            let a = if d1 < d0 { 1u8 } else { 0u8 };
            if a != assignment[i] {
                assignment[i] = a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = [vec![0.0; dims], vec![0.0; dims]];
        let mut counts = [0usize; 2];
        for i in 0..n {
            let a = assignment[i] as usize;
            counts[a] += 1;
            for (s, f) in sums[a].iter_mut().zip(feat(i)) {
                *s += f;
            }
        }
        for a in 0..2 {
            if counts[a] > 0 {
                for (cd, s) in centroids[a].iter_mut().zip(sums[a].iter()) {
                    *cd = s / counts[a] as f64;
                }
            }
        }
    }

    // The cluster whose members sit on larger DI values is the changed one.
    let mut di_sum = [0.0f64; 2];
    let mut di_count = [0usize; 2];
    for i in 0..n {
        let a = assignment[i] as usize;
        di_sum[a] += di.values[i];
        di_count[a] += 1;
    }
    if di_count[0] == 0 || di_count[1] == 0 {
        return Ok(ChangeMap::all_unchanged(di.width, di.height, SegMethod::Pcakm));
    }
    let mean0 = di_sum[0] / di_count[0] as f64;
    let mean1 = di_sum[1] / di_count[1] as f64;
    let changed_cluster = if mean0 > mean1 { 0u8 } else { 1u8 };

    Ok(ChangeMap {
        width: di.width,
        height: di.height,
        data: assignment.iter().map(|&a| a == changed_cluster).collect(),
        method: SegMethod::Pcakm,
        threshold: None,
        degenerate: false,
    })
}

/// PCA + k-means segmentation: project each pixel's `block x block`
/// neighborhood onto the top `dims` principal directions of the DI's tiles,
/// then 2-means the features with deterministic farthest-point seeding.
pub fn pcakm_segment(di: &FusedDI, block: usize, dims: usize) -> Result<ChangeMap> {
    let basis = block_pca_basis(di, block, dims)?;
    pcakm_segment_with_basis(di, block, &basis)
}
