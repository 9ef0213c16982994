//! Test-only oracles: a projection-onto-simplex solver and a straightforward
//! reference implementation of the whole pipeline, written directly against
//! the defining formulas and kept independent of the library's code paths.

#![allow(dead_code)]

use alsc_core::patch::PatchParams;
use alsc_core::raster::{Modality, Raster};

/// Euclidean projection of `v` onto the probability simplex
/// (sort-based algorithm).
pub fn proj_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Stable ascending argsort (ties keep index order).
fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    idx
}

fn patch_vector(r: &Raster, row: usize, col: usize, p: usize) -> Vec<f64> {
    let side = 2 * p + 1;
    let mut out = Vec::with_capacity(side * side * r.bands);
    for band in 0..r.bands {
        for dr in 0..side {
            for dc in 0..side {
                out.push(r.value(row - p + dr, col - p + dc, band));
            }
        }
    }
    out
}

fn naive_distance(modality: Modality, a: &[f64], b: &[f64]) -> f64 {
    match modality {
        Modality::Optical => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        Modality::Sar => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| ((x + y) / (2.0 * (x * y).sqrt())).ln())
            .sum(),
    }
}

/// Graph weights by rank, solved through the regularized quadratic program:
/// gamma from the K-neighbor formula, then projection of `-d / (2 gamma)`
/// onto the simplex. Falls back to uniform weights when gamma vanishes.
fn qp_graph_weights(dist: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let order = argsort(dist);
    let d_next = dist[order[k]];
    let head_sum: f64 = order[..k].iter().map(|&i| dist[i]).sum();
    let gamma = 0.5 * (k as f64 * d_next - head_sum);
    let ranked = order[..k].to_vec();
    if gamma <= 0.5e-12 {
        return (ranked, vec![1.0 / k as f64; k]);
    }
    let target: Vec<f64> = dist.iter().map(|&d| -d / (2.0 * gamma)).collect();
    let full = proj_simplex(&target);
    let weights = ranked.iter().map(|&i| full[i]).collect();
    (ranked, weights)
}

pub struct ReferenceRun {
    pub fused: Vec<f64>,
    /// Structure differences evaluated in the first image's domain.
    pub backward: Vec<f64>,
    /// Structure differences evaluated in the second image's domain.
    pub forward: Vec<f64>,
}

/// Single-threaded reference pipeline: grid, window candidates, naive patch
/// distances, QP-solved graphs, rank-paired projection, per-pixel means and
/// mean-normalized fusion.
pub fn reference_run(rx: &Raster, ry: &Raster, params: &PatchParams) -> ReferenceRun {
    let (w, h, p) = (rx.width, rx.height, params.half_width);
    let side = 2 * p + 1;
    assert!(w >= side && h >= side);

    let centers = |len: usize| -> Vec<usize> {
        let last = len - 1 - p;
        let mut out = Vec::new();
        let mut pos = p;
        while pos < last {
            out.push(pos);
            pos += params.target_step;
        }
        out.push(last);
        out
    };

    let reach = ((params.window - 1) / 2 / params.search_step) as isize;
    let step = params.search_step as isize;

    let mut fwd_sum = vec![0.0f64; w * h];
    let mut fwd_cnt = vec![0u32; w * h];
    let mut bwd_sum = vec![0.0f64; w * h];
    let mut bwd_cnt = vec![0u32; w * h];

    for &row in &centers(h) {
        for &col in &centers(w) {
            // Candidate centers, row-major over window offsets.
            let mut cands: Vec<(usize, usize)> = Vec::new();
            for a in -reach..=reach {
                for b in -reach..=reach {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let r = row as isize + a * step;
                    let c = col as isize + b * step;
                    if r < p as isize
                        || r > (h - 1 - p) as isize
                        || c < p as isize
                        || c > (w - 1 - p) as isize
                    {
                        continue;
                    }
                    cands.push((r as usize, c as usize));
                }
            }
            assert!(cands.len() >= 2, "target ({row},{col}) lacks candidates");
            let k = params.neighbors.min(cands.len() - 1);

            let tx = patch_vector(rx, row, col, p);
            let ty = patch_vector(ry, row, col, p);
            let cx: Vec<Vec<f64>> = cands.iter().map(|&(r, c)| patch_vector(rx, r, c, p)).collect();
            let cy: Vec<Vec<f64>> = cands.iter().map(|&(r, c)| patch_vector(ry, r, c, p)).collect();
            let dist_x: Vec<f64> = cx.iter().map(|v| naive_distance(rx.modality, &tx, v)).collect();
            let dist_y: Vec<f64> = cy.iter().map(|v| naive_distance(ry.modality, &ty, v)).collect();

            let (rank_x, weight_x) = qp_graph_weights(&dist_x, k);
            let (rank_y, weight_y) = qp_graph_weights(&dist_y, k);

            let mut forward = 0.0;
            let mut backward = 0.0;
            for hh in 0..k {
                let (iy, ix) = (rank_y[hh], rank_x[hh]);
                if iy == ix {
                    continue;
                }
                forward += weight_x[hh] * naive_distance(ry.modality, &cy[iy], &cy[ix]);
                backward += weight_y[hh] * naive_distance(rx.modality, &cx[iy], &cx[ix]);
            }

            for r in row - p..=row + p {
                for c in col - p..=col + p {
                    fwd_sum[r * w + c] += forward;
                    fwd_cnt[r * w + c] += 1;
                    bwd_sum[r * w + c] += backward;
                    bwd_cnt[r * w + c] += 1;
                }
            }
        }
    }

    let forward: Vec<f64> = fwd_sum
        .iter()
        .zip(fwd_cnt.iter())
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let backward: Vec<f64> = bwd_sum
        .iter()
        .zip(bwd_cnt.iter())
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();

    let n = (w * h) as f64;
    let mean_f: f64 = forward.iter().sum::<f64>() / n;
    let mean_b: f64 = backward.iter().sum::<f64>() / n;
    let fused: Vec<f64> = if mean_f == 0.0 || mean_b == 0.0 {
        vec![0.0; w * h]
    } else {
        backward
            .iter()
            .zip(forward.iter())
            .map(|(&b, &f)| b / mean_b + f / mean_f)
            .collect()
    };
    ReferenceRun {
        fused,
        backward,
        forward,
    }
}

/// Deterministic xorshift-style generator for test data, independent of the
/// library's RNG choices.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn next_range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_f64() * (hi - lo) as f64) as usize
    }

    pub fn next_bool(&mut self, p_true: f64) -> bool {
        self.next_f64() < p_true
    }
}
