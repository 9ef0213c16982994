//! Per-target structure differences via graph projection.
//!
//! Each target patch gets one neighbor graph per image, both built over the
//! same candidate geometry. A graph is projected into the other image's
//! domain by pairing rank h of one graph with rank h of the other and
//! evaluating the patch distance of that pair in the other domain, weighted
//! by the first graph's probability. All pixel comparisons therefore stay
//! within a single modality.

use crate::distance::{distance_vector, patch_distance_at};
use crate::error::{Error, Result};
use crate::graph::{solve_simplex, NeighborGraph};
use crate::patch::{neighbor_candidates, PatchParams, PatchRef};
use crate::raster::Raster;

/// Forward and backward structure differences of one target patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureScorePair {
    pub target: PatchRef,
    /// Weighted cross-distance evaluated in the second image's domain.
    pub forward: f64,
    /// Weighted cross-distance evaluated in the first image's domain.
    pub backward: f64,
}

/// One direction of the projection: sum over ranks of
/// `weights[h] * cross_dist(own_ranks[h], other_ranks[h])`.
/// Ranks that coincide contribute a self-distance of zero and are skipped.
pub fn weighted_cross_sum<F>(
    weights: &[f64],
    own_ranks: &[usize],
    other_ranks: &[usize],
    mut cross_dist: F,
) -> Result<f64>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    debug_assert_eq!(weights.len(), own_ranks.len());
    debug_assert_eq!(weights.len(), other_ranks.len());
    let mut acc = 0.0;
    for h in 0..weights.len() {
        if own_ranks[h] == other_ranks[h] {
            continue;
        }
        acc += weights[h] * cross_dist(own_ranks[h], other_ranks[h])?;
    }
    Ok(acc)
}

pub(crate) struct TargetScore {
    pub scores: StructureScorePair,
    /// True when this target had fewer than K + 1 candidates and the
    /// neighbor count was clamped to fit.
    pub clamped: bool,
}

/// Score one target. Shared by [`structure_difference`] and the pipeline,
/// which also wants the clamp flag.
pub(crate) fn score_target(
    rx: &Raster,
    ry: &Raster,
    target: PatchRef,
    params: &PatchParams,
) -> Result<TargetScore> {
    let ns = neighbor_candidates(target, rx.width, rx.height, params);
    if ns.len() < 2 {
        return Err(Error::TooFewCandidates {
            needed: 2,
            found: ns.len(),
        });
    }
    let k_eff = params.neighbors.min(ns.len() - 1);
    let dist_x = distance_vector(rx, &ns, params.half_width)?;
    let dist_y = distance_vector(ry, &ns, params.half_width)?;
    let graph_x = solve_simplex(&dist_x, k_eff)?;
    let graph_y = solve_simplex(&dist_y, k_eff)?;
    let (forward, backward) = project_pair(rx, ry, &ns.candidates, &graph_x, &graph_y, params)?;
    Ok(TargetScore {
        scores: StructureScorePair {
            target,
            forward,
            backward,
        },
        clamped: k_eff < params.neighbors,
    })
}

fn project_pair(
    rx: &Raster,
    ry: &Raster,
    candidates: &[PatchRef],
    graph_x: &NeighborGraph,
    graph_y: &NeighborGraph,
    params: &PatchParams,
) -> Result<(f64, f64)> {
    let p = params.half_width;
    let forward = weighted_cross_sum(&graph_x.weights, &graph_y.ranked, &graph_x.ranked, |a, b| {
        patch_distance_at(ry, candidates[a], candidates[b], p)
    })?;
    let backward = weighted_cross_sum(&graph_y.weights, &graph_y.ranked, &graph_x.ranked, |a, b| {
        patch_distance_at(rx, candidates[a], candidates[b], p)
    })?;
    Ok((forward, backward))
}

/// Forward and backward structure differences for one target patch.
///
/// Both rasters must share dimensions; the candidate geometry is built once
/// and shared so rank indices are comparable across the two graphs.
pub fn structure_difference(
    rx: &Raster,
    ry: &Raster,
    target: PatchRef,
    params: &PatchParams,
) -> Result<StructureScorePair> {
    if rx.width != ry.width || rx.height != ry.height {
        return Err(Error::DimensionMismatch(format!(
            "rasters differ: {}x{} vs {}x{}",
            rx.width, rx.height, ry.width, ry.height
        )));
    }
    params.validate()?;
    Ok(score_target(rx, ry, target, params)?.scores)
}
