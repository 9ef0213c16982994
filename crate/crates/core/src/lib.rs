//! Unsupervised change detection for coregistered heterogeneous image
//! pairs (e.g. SAR vs. optical) via adaptive local structure consistency.
//!
//! For every target patch, a probabilistic K-nearest-neighbor graph is
//! solved in closed form over the patch distances inside a local search
//! window, once per image. Each graph is projected into the other image's
//! domain -- rank-paired neighbors are compared with that domain's own
//! distance kernel -- so heterogeneous pixel values are never compared
//! directly. The per-patch forward/backward differences accumulate into
//! pixelwise difference images, are mean-fused, and segment into a binary
//! change map by Otsu thresholding or PCA + k-means. Evaluation against a
//! ground-truth mask reports confusion rates, overall accuracy, Cohen's
//! kappa and ROC/AUC.

pub mod di;
pub mod distance;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod patch;
pub mod raster;
pub mod segment;
pub mod structure;
pub mod synth;

pub use di::{fuse, run_alsc, AlscRun, DifferenceImage, FusedDI};
pub use error::{Error, Result};
pub use graph::{gamma_of_k, solve_simplex, NeighborGraph};
pub use metrics::{confusion, rates, roc, ConfusionCounts, Rates, RocCurve};
pub use patch::{extract, neighbor_candidates, target_grid, NeighborSet, PatchParams, PatchRef};
pub use raster::{load_mask, load_raster, normalize, write_mask, write_raster, Mask, Modality, Raster};
pub use segment::{otsu_threshold, pcakm_segment, ChangeMap, SegMethod};
pub use structure::{structure_difference, StructureScorePair};
pub use synth::{generate, SceneSpec};
