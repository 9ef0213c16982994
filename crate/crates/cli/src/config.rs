//! Run configuration: JSON config file plus flag overrides; flags win.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use alsc_core::patch::PatchParams;
use alsc_core::raster::Modality;
use alsc_core::segment::SegMethod;

/// Optional fields as they appear in a `--config` JSON file. Every field can
/// also be given (and is overridden) by the matching command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub image_x: Option<PathBuf>,
    pub image_y: Option<PathBuf>,
    pub modality_x: Option<String>,
    pub modality_y: Option<String>,
    pub truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub p: Option<usize>,
    pub omega: Option<usize>,
    pub delta_p: Option<usize>,
    pub delta_s: Option<usize>,
    pub k: Option<usize>,
    pub method: Option<String>,
    pub block: Option<usize>,
    pub dims: Option<usize>,
    pub workers: Option<usize>,
}

/// Fully resolved configuration of a pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub image_x: PathBuf,
    pub image_y: PathBuf,
    #[serde(serialize_with = "as_string")]
    pub modality_x: Modality,
    #[serde(serialize_with = "as_string")]
    pub modality_y: Modality,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    pub params: PatchParams,
    #[serde(serialize_with = "as_string")]
    pub method: SegMethod,
    pub block: usize,
    pub dims: usize,
    pub workers: usize,
}

fn as_string<T: std::fmt::Display, S: serde::Serializer>(
    value: &T,
    ser: S,
) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&value.to_string())
}

pub fn parse_method(s: &str) -> Result<SegMethod, String> {
    match s.to_ascii_lowercase().as_str() {
        "otsu" => Ok(SegMethod::Otsu),
        "pcakm" => Ok(SegMethod::Pcakm),
        other => Err(format!("unknown method '{other}' (expected otsu|pcakm)")),
    }
}

pub fn parse_modality(s: &str) -> Result<Modality, String> {
    s.parse::<Modality>().map_err(|e| e.to_string())
}

/// Merge flag values over config-file values and fill in the defaults
/// derived from the patch half-width, which itself is required.
#[allow(clippy::too_many_arguments)]
pub struct Merge {
    pub file: FileConfig,
    pub image_x: Option<PathBuf>,
    pub image_y: Option<PathBuf>,
    pub modality_x: Option<String>,
    pub modality_y: Option<String>,
    pub truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub p: Option<usize>,
    pub omega: Option<usize>,
    pub delta_p: Option<usize>,
    pub delta_s: Option<usize>,
    pub k: Option<usize>,
    pub method: Option<String>,
    pub block: Option<usize>,
    pub dims: Option<usize>,
    pub workers: Option<usize>,
}

impl Merge {
    pub fn resolve(self) -> Result<RunConfig, String> {
        let image_x = self
            .image_x
            .or(self.file.image_x)
            .ok_or("missing image_x (flag --image-x or config)")?;
        let image_y = self
            .image_y
            .or(self.file.image_y)
            .ok_or("missing image_y (flag --image-y or config)")?;
        let modality_x = self
            .modality_x
            .or(self.file.modality_x)
            .ok_or("missing modality_x")?;
        let modality_y = self
            .modality_y
            .or(self.file.modality_y)
            .ok_or("missing modality_y")?;
        let out = self.out.or(self.file.out).ok_or("missing output directory")?;
        let p = self.p.or(self.file.p).ok_or("missing patch half-width --p")?;

        let defaults = PatchParams::defaults_for(p);
        let params = PatchParams {
            half_width: p,
            window: self.omega.or(self.file.omega).unwrap_or(defaults.window),
            target_step: self
                .delta_p
                .or(self.file.delta_p)
                .unwrap_or(defaults.target_step),
            search_step: self
                .delta_s
                .or(self.file.delta_s)
                .unwrap_or(defaults.search_step),
            neighbors: self.k.or(self.file.k).unwrap_or(defaults.neighbors),
        };
        params.validate().map_err(|e| e.to_string())?;

        let workers = self
            .workers
            .or(self.file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        if workers == 0 {
            return Err("workers must be >= 1".into());
        }

        Ok(RunConfig {
            image_x,
            image_y,
            modality_x: parse_modality(&modality_x)?,
            modality_y: parse_modality(&modality_y)?,
            truth: self.truth.or(self.file.truth),
            out,
            params,
            method: parse_method(&self.method.or(self.file.method).unwrap_or("otsu".into()))?,
            block: self.block.or(self.file.block).unwrap_or(4),
            dims: self.dims.or(self.file.dims).unwrap_or(3),
            workers,
        })
    }
}
