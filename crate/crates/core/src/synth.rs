//! Synthetic coregistered heterogeneous pairs with ground truth.
//!
//! Scenes are piecewise-constant label maps of random rectangles and
//! ellipses over a background. The optical raster renders the pre-event
//! labels (3 bands, per-class means, Gaussian noise); the SAR raster
//! renders the post-event labels (1 band, per-class reflectivity times
//! Gamma-distributed speckle). The ground truth marks every pixel whose
//! label changed between the two epochs.
//!
//! Randomness comes from ChaCha8 keyed by the scene seed, with one stream
//! per stage (0 = labels and relabeling, 1 = optical, 2 = SAR), so the
//! stages never perturb each other and fixtures are reproducible across
//! platforms.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Mask, Modality, Raster};

const RELABEL_ATTEMPTS: usize = 1000;

/// Parameters of one synthetic scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Number of distinct surface classes, background included.
    pub n_classes: usize,
    /// Requested fraction of changed pixels, reached within +-20%.
    pub change_fraction: f64,
    /// Gamma speckle looks; variance of the speckle is 1/looks.
    pub speckle_looks: u32,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 4 || self.height < 4 {
            return Err(Error::InvalidParams(
                "scene must be at least 4x4 pixels".into(),
            ));
        }
        if !(2..=1024).contains(&self.n_classes) {
            return Err(Error::InvalidParams(
                "class count must lie in [2, 1024]".into(),
            ));
        }
        if !(self.change_fraction > 0.0 && self.change_fraction < 0.5) {
            return Err(Error::InvalidParams(
                "change fraction must lie in (0, 0.5)".into(),
            ));
        }
        if self.speckle_looks < 1 {
            return Err(Error::InvalidParams("speckle looks must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Rectangle,
    Ellipse,
}

/// Paint one axis-aligned shape onto the label plane.
fn paint_shape(
    labels: &mut [u16],
    width: usize,
    height: usize,
    rng: &mut ChaCha8Rng,
    label: u16,
    half_a: f64,
    half_b: f64,
) {
    let kind = if rng.random::<bool>() {
        Shape::Rectangle
    } else {
        Shape::Ellipse
    };
    let cy = rng.random_range(0.0..height as f64);
    let cx = rng.random_range(0.0..width as f64);
    for r in 0..height {
        for c in 0..width {
            let dy = (r as f64 - cy) / half_a.max(0.5);
            let dx = (c as f64 - cx) / half_b.max(0.5);
            let inside = match kind {
                Shape::Rectangle => dy.abs() <= 1.0 && dx.abs() <= 1.0,
                Shape::Ellipse => dy * dy + dx * dx <= 1.0,
            };
            if inside {
                labels[r * width + c] = label;
            }
        }
    }
}

fn pre_event_labels(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Vec<u16> {
    let mut labels = vec![0u16; spec.width * spec.height];
    let scale = 0.22 * spec.width.min(spec.height) as f64;
    let shape_classes = spec.n_classes - 1;
    for j in 0..2 * shape_classes {
        let label = 1 + (j % shape_classes) as u16;
        let half_a = scale * rng.random_range(0.5..1.4);
        let half_b = scale * rng.random_range(0.5..1.4);
        paint_shape(&mut labels, spec.width, spec.height, rng, label, half_a, half_b);
    }
    labels
}

/// Relabel one region of roughly the requested area until the fraction of
/// changed pixels lands within +-20% of the target.
fn post_event_labels(
    spec: &SceneSpec,
    pre: &[u16],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<u16>, Vec<bool>)> {
    let total = (spec.width * spec.height) as f64;
    let target = spec.change_fraction * total;
    let band = 0.2 * spec.change_fraction;

    for _ in 0..RELABEL_ATTEMPTS {
        let mut post = pre.to_vec();
        // Aspect jitter that keeps the area close to the target.
        let aspect = rng.random_range(0.85..1.15);
        let area_jitter = rng.random_range(0.9..1.1);
        let s = (target * area_jitter).sqrt();
        let half_a = 0.5 * s * aspect;
        let half_b = 0.5 * s / aspect;
        let cy = rng.random_range(0.0..spec.height as f64);
        let cx = rng.random_range(0.0..spec.width as f64);
        let center_idx = (cy as usize).min(spec.height - 1) * spec.width
            + (cx as usize).min(spec.width - 1);
        let old = pre[center_idx];
        let mut new_label = rng.random_range(0..spec.n_classes as u16);
        if new_label == old {
            new_label = (new_label + 1) % spec.n_classes as u16;
        }
        // Rectangle for the changed region keeps the area predictable.
        for r in 0..spec.height {
            for c in 0..spec.width {
                let dy = (r as f64 - cy).abs();
                let dx = (c as f64 - cx).abs();
                if dy <= half_a && dx <= half_b {
                    post[r * spec.width + c] = new_label;
                }
            }
        }
        let truth: Vec<bool> = pre.iter().zip(post.iter()).map(|(a, b)| a != b).collect();
        let fraction = truth.iter().filter(|&&b| b).count() as f64 / total;
        if (fraction - spec.change_fraction).abs() <= band {
            return Ok((post, truth));
        }
    }
    Err(Error::ChangeFractionUnreachable {
        target: spec.change_fraction,
        attempts: RELABEL_ATTEMPTS,
    })
}

/// Per-class values spread evenly over `[lo, hi]` in a seeded random order,
/// so any two classes stay well separated.
fn class_palette(n_classes: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ranks: Vec<usize> = (0..n_classes).collect();
    ranks.shuffle(rng);
    ranks
        .into_iter()
        .map(|r| lo + (hi - lo) * r as f64 / (n_classes - 1).max(1) as f64)
        .collect()
}

/// Multiplicative Gamma speckle plane with unit mean and variance 1/looks.
pub(crate) fn speckle_plane(len: usize, looks: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gamma = Gamma::new(looks as f64, 1.0 / looks as f64).expect("valid gamma");
    (0..len).map(|_| gamma.sample(rng)).collect()
}

/// Generate one coregistered (optical, SAR, truth) triple.
pub fn generate(spec: &SceneSpec) -> Result<(Raster, Raster, Mask)> {
    spec.validate()?;

    let mut label_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    label_rng.set_stream(0);
    let pre = pre_event_labels(spec, &mut label_rng);
    let (post, truth_data) = post_event_labels(spec, &pre, &mut label_rng)?;

    // Optical: pre-event labels, 3 bands, Gaussian noise.
    let mut optical_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    optical_rng.set_stream(1);
    let bands = 3;
    let palettes: Vec<Vec<f64>> = (0..bands)
        .map(|_| class_palette(spec.n_classes, 0.2, 0.9, &mut optical_rng))
        .collect();
    let noise = Normal::new(0.0, 0.05).expect("valid normal");
    let mut optical = vec![0.0f64; spec.width * spec.height * bands];
    for (px, &label) in pre.iter().enumerate() {
        for (b, palette) in palettes.iter().enumerate() {
            let v = palette[label as usize] + noise.sample(&mut optical_rng);
            optical[px * bands + b] = v.clamp(0.0, 1.0);
        }
    }

    // SAR: post-event labels, 1 band, multiplicative speckle.
    let mut sar_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    sar_rng.set_stream(2);
    let reflectivity = class_palette(spec.n_classes, 0.1, 0.9, &mut sar_rng);
    let speckle = speckle_plane(spec.width * spec.height, spec.speckle_looks, &mut sar_rng);
    let sar: Vec<f64> = post
        .iter()
        .zip(speckle.iter())
        .map(|(&label, &s)| (reflectivity[label as usize] * s).max(crate::raster::SAR_FLOOR))
        .collect();

    Ok((
        Raster::new(spec.width, spec.height, bands, Modality::Optical, optical)?,
        Raster::new(spec.width, spec.height, 1, Modality::Sar, sar)?,
        Mask::new(spec.width, spec.height, truth_data)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SceneSpec {
        SceneSpec {
            width: 64,
            height: 64,
            seed: 17,
            n_classes: 4,
            change_fraction: 0.1,
            speckle_looks: 4,
        }
    }

    #[test]
    fn truth_fraction_lands_in_the_requested_band() {
        for seed in 0..8 {
            let s = SceneSpec { seed, ..spec() };
            let (_, _, truth) = generate(&s).unwrap();
            let fraction = truth.changed_count() as f64 / (64.0 * 64.0);
            assert!(
                (fraction - 0.1).abs() <= 0.02 + 1e-12,
                "seed {seed}: fraction {fraction}"
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let (o1, s1, t1) = generate(&spec()).unwrap();
        let (o2, s2, t2) = generate(&spec()).unwrap();
        assert_eq!(o1.data, o2.data);
        assert_eq!(s1.data, s2.data);
        assert_eq!(t1.data, t2.data);
    }

    #[test]
    fn outputs_share_dimensions_and_truth_is_proper() {
        let (optical, sar, truth) = generate(&spec()).unwrap();
        assert_eq!((optical.width, optical.height, optical.bands), (64, 64, 3));
        assert_eq!((sar.width, sar.height, sar.bands), (64, 64, 1));
        assert_eq!((truth.width, truth.height), (64, 64));
        assert_eq!(optical.modality, Modality::Optical);
        assert_eq!(sar.modality, Modality::Sar);
        let changed = truth.changed_count();
        assert!(changed > 0 && changed < 64 * 64);
        assert!(sar.data.iter().all(|&v| v >= crate::raster::SAR_FLOOR));
        assert!(optical.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn speckle_statistics_match_the_gamma_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        rng.set_stream(2);
        let looks = 4u32;
        let n = 20_000usize;
        let plane = speckle_plane(n, looks, &mut rng);
        let mean: f64 = plane.iter().sum::<f64>() / n as f64;
        let var: f64 = plane.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
        let expected = 1.0 / looks as f64;
        assert!(
            (var - expected).abs() / expected < 0.15,
            "variance {var} vs {expected}"
        );
        // A constant region of reflectivity r then has variance r^2 / looks.
        let r = 0.6;
        let scaled_var: f64 = plane
            .iter()
            .map(|v| (r * v - r * mean).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((scaled_var - r * r * expected).abs() / (r * r * expected) < 0.15);
    }

    #[test]
    fn unreachable_fraction_is_an_error() {
        let s = SceneSpec {
            width: 5,
            height: 5,
            seed: 1,
            n_classes: 2,
            change_fraction: 0.02,
            speckle_looks: 4,
        };
        assert!(matches!(
            generate(&s),
            Err(Error::ChangeFractionUnreachable { .. })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec();
        s.n_classes = 1;
        assert!(generate(&s).is_err());
        let mut s = spec();
        s.change_fraction = 0.6;
        assert!(generate(&s).is_err());
    }
}
