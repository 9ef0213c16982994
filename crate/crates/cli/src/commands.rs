//! The five pipeline subcommands and their artifact layout.
//!
//! Every command writes into an output directory and finishes with a
//! `run.json` manifest listing the resolved configuration, stage timings
//! and the artifacts it produced. Stage failures surface as a
//! machine-readable error JSON on stderr and a nonzero exit.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use alsc_core::di::{run_alsc, FusedDI};
use alsc_core::metrics::{confusion, rates, roc, Rates};
use alsc_core::raster::{
    load_mask, load_raster, normalize, write_mask, write_plane_pgm16, write_raster, Modality,
    Raster,
};
use alsc_core::segment::{otsu_threshold, pcakm_segment, ChangeMap, SegMethod};
use alsc_core::synth::{generate, SceneSpec};

use crate::config::RunConfig;

pub const FUSED_DI: &str = "di_fused.bin";
pub const FORWARD_DI: &str = "di_forward.bin";
pub const BACKWARD_DI: &str = "di_backward.bin";
pub const FUSED_PREVIEW: &str = "di_fused.pgm";
pub const METRICS: &str = "metrics.json";
pub const ROC_CSV: &str = "roc.csv";
pub const MANIFEST: &str = "run.json";

#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl StageError {
    pub fn to_json(&self) -> serde_json::Value {
        json!({"error": {"stage": self.stage, "message": self.message}})
    }
}

fn stage<T, E: Display>(name: &'static str, result: Result<T, E>) -> Result<T, StageError> {
    result.map_err(|e| StageError {
        stage: name,
        message: e.to_string(),
    })
}

pub fn map_file(method: SegMethod) -> String {
    format!("change_map_{method}.pgm")
}

fn write_plane(path: &Path, width: usize, height: usize, values: &[f64]) -> alsc_core::Result<()> {
    let raster = Raster::new(width, height, 1, Modality::Optical, values.to_vec())?;
    write_raster(path, &raster)
}

fn read_fused(path: &Path) -> alsc_core::Result<FusedDI> {
    let raster = load_raster(path, Modality::Optical)?;
    FusedDI::from_values(raster.width, raster.height, raster.data)
}

struct Timings(BTreeMap<&'static str, u128>);

impl Timings {
    fn new() -> Self {
        Timings(BTreeMap::new())
    }

    fn record<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = f();
        self.0.insert(name, start.elapsed().as_millis());
        value
    }
}

fn write_manifest(
    out: &Path,
    command: &str,
    config: serde_json::Value,
    details: serde_json::Value,
    timings: &Timings,
    artifacts: &BTreeMap<&'static str, String>,
) -> Result<(), StageError> {
    let manifest = json!({
        "command": command,
        "config": config,
        "details": details,
        "timings_ms": timings.0,
        "artifacts": artifacts,
    });
    stage(
        "manifest",
        fs::write(
            out.join(MANIFEST),
            serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
        ),
    )
}

fn write_metrics(out: &Path, r: &Rates, auc: Option<f64>) -> Result<(), StageError> {
    let mut payload = serde_json::Map::new();
    payload.insert("fp_rate".into(), json!(r.fp_rate));
    payload.insert("fn_rate".into(), json!(r.fn_rate));
    payload.insert("oa".into(), json!(r.oa));
    payload.insert("kappa".into(), json!(r.kappa));
    if let Some(auc) = auc {
        payload.insert("auc".into(), json!(auc));
    }
    stage(
        "evaluate",
        fs::write(
            out.join(METRICS),
            serde_json::to_string_pretty(&payload).expect("metrics serialize") + "\n",
        ),
    )
}

fn load_pair(config: &RunConfig) -> Result<(Raster, Raster), StageError> {
    let x = stage("load", load_raster(&config.image_x, config.modality_x))?;
    let y = stage("load", load_raster(&config.image_y, config.modality_y))?;
    Ok((normalize(&x), normalize(&y)))
}

fn segment_fused(
    fused: &FusedDI,
    method: SegMethod,
    block: usize,
    dims: usize,
) -> Result<ChangeMap, StageError> {
    match method {
        SegMethod::Otsu => Ok(otsu_threshold(fused)),
        SegMethod::Pcakm => stage("segment", pcakm_segment(fused, block, dims)),
    }
}

/// Shared by `run` and `di`: pipeline to difference images on disk.
fn produce_di(
    config: &RunConfig,
    timings: &mut Timings,
    artifacts: &mut BTreeMap<&'static str, String>,
) -> Result<(FusedDI, usize), StageError> {
    let (x, y) = timings.record("load", || load_pair(config))?;
    let run = timings.record("pipeline", || {
        stage("pipeline", run_alsc(&x, &y, &config.params, config.workers))
    })?;

    stage("write", fs::create_dir_all(&config.out))?;
    let fused_path = config.out.join(FUSED_DI);
    stage(
        "write",
        write_plane(&fused_path, run.fused.width, run.fused.height, &run.fused.values),
    )?;
    stage(
        "write",
        write_plane(
            &config.out.join(FORWARD_DI),
            run.forward.width,
            run.forward.height,
            &run.forward.values(),
        ),
    )?;
    stage(
        "write",
        write_plane(
            &config.out.join(BACKWARD_DI),
            run.backward.width,
            run.backward.height,
            &run.backward.values(),
        ),
    )?;
    stage(
        "write",
        write_plane_pgm16(
            config.out.join(FUSED_PREVIEW),
            run.fused.width,
            run.fused.height,
            &run.fused.values,
        ),
    )?;
    artifacts.insert("fused_di", FUSED_DI.into());
    artifacts.insert("forward_di", FORWARD_DI.into());
    artifacts.insert("backward_di", BACKWARD_DI.into());
    artifacts.insert("fused_preview", FUSED_PREVIEW.into());

    // Downstream stages consume the stored (f32) plane so a staged
    // di -> segment -> evaluate run reproduces `run` exactly.
    let fused = stage("write", read_fused(&fused_path))?;
    Ok((fused, run.clamped_targets))
}

pub fn cmd_run(config: RunConfig) -> Result<(), StageError> {
    let mut timings = Timings::new();
    let mut artifacts = BTreeMap::new();
    let (fused, clamped) = produce_di(&config, &mut timings, &mut artifacts)?;

    let map = timings.record("segment", || {
        segment_fused(&fused, config.method, config.block, config.dims)
    })?;
    let map_name = map_file(config.method);
    stage("segment", write_mask(config.out.join(&map_name), &map.to_mask()))?;
    artifacts.insert("change_map", map_name);

    let mut evaluated = json!(null);
    if let Some(truth_path) = &config.truth {
        let truth = stage("evaluate", load_mask(truth_path))?;
        let (r, curve) = timings.record("evaluate", || -> Result<_, StageError> {
            let counts = stage("evaluate", confusion(&map.to_mask(), &truth))?;
            let curve = if fused.degenerate {
                None
            } else {
                Some(stage("evaluate", roc(&fused, &truth))?)
            };
            Ok((rates(&counts), curve))
        })?;
        write_metrics(&config.out, &r, curve.as_ref().map(|c| c.auc))?;
        artifacts.insert("metrics", METRICS.into());
        if let Some(curve) = &curve {
            stage("evaluate", fs::write(config.out.join(ROC_CSV), curve.to_csv()))?;
            artifacts.insert("roc", ROC_CSV.into());
        }
        evaluated = json!({"auc_skipped": fused.degenerate});
    }

    let details = json!({
        "clamped_targets": clamped,
        "degenerate": fused.degenerate,
        "otsu_threshold": map.threshold,
        "map_degenerate": map.degenerate,
        "evaluation": evaluated,
    });
    let config_echo = serde_json::to_value(&config).expect("config serializes");
    write_manifest(&config.out, "run", config_echo, details, &timings, &artifacts)?;
    println!(
        "run complete: {} artifacts in {}",
        artifacts.len() + 1,
        config.out.display()
    );
    Ok(())
}

pub fn cmd_di(config: RunConfig) -> Result<(), StageError> {
    let mut timings = Timings::new();
    let mut artifacts = BTreeMap::new();
    let (fused, clamped) = produce_di(&config, &mut timings, &mut artifacts)?;
    let details = json!({
        "clamped_targets": clamped,
        "degenerate": fused.degenerate,
    });
    let config_echo = serde_json::to_value(&config).expect("config serializes");
    write_manifest(&config.out, "di", config_echo, details, &timings, &artifacts)?;
    println!(
        "difference images written to {}",
        config.out.display()
    );
    Ok(())
}

pub struct SegmentConfig {
    pub di: PathBuf,
    pub method: SegMethod,
    pub block: usize,
    pub dims: usize,
    pub out: PathBuf,
}

pub fn cmd_segment(config: SegmentConfig) -> Result<(), StageError> {
    let mut timings = Timings::new();
    let fused = stage("load", read_fused(&config.di))?;
    let map = timings.record("segment", || {
        segment_fused(&fused, config.method, config.block, config.dims)
    })?;
    stage("write", fs::create_dir_all(&config.out))?;
    let map_name = map_file(config.method);
    stage("write", write_mask(config.out.join(&map_name), &map.to_mask()))?;
    let mut artifacts = BTreeMap::new();
    artifacts.insert("change_map", map_name);
    let details = json!({
        "otsu_threshold": map.threshold,
        "map_degenerate": map.degenerate,
    });
    let config_echo = json!({
        "di": config.di,
        "method": config.method.to_string(),
        "block": config.block,
        "dims": config.dims,
        "out": config.out,
    });
    write_manifest(&config.out, "segment", config_echo, details, &timings, &artifacts)?;
    println!("change map written to {}", config.out.display());
    Ok(())
}

pub struct EvaluateConfig {
    pub map: Option<PathBuf>,
    pub di: Option<PathBuf>,
    pub truth: PathBuf,
    pub out: PathBuf,
}

pub fn cmd_evaluate(config: EvaluateConfig) -> Result<(), StageError> {
    if config.map.is_none() && config.di.is_none() {
        return Err(StageError {
            stage: "evaluate",
            message: "nothing to evaluate: pass --map and/or --di".into(),
        });
    }
    let mut timings = Timings::new();
    let truth = stage("load", load_mask(&config.truth))?;
    stage("write", fs::create_dir_all(&config.out))?;
    let mut artifacts = BTreeMap::new();

    let mut map_rates = None;
    if let Some(map_path) = &config.map {
        let predicted = stage("load", load_mask(map_path))?;
        let counts = timings.record("evaluate", || confusion(&predicted, &truth));
        let counts = stage("evaluate", counts)?;
        map_rates = Some(rates(&counts));
    }

    let mut auc = None;
    if let Some(di_path) = &config.di {
        let fused = stage("load", read_fused(di_path))?;
        if !fused.degenerate {
            let curve = stage("evaluate", roc(&fused, &truth))?;
            stage("write", fs::write(config.out.join(ROC_CSV), curve.to_csv()))?;
            artifacts.insert("roc", ROC_CSV.into());
            auc = Some(curve.auc);
        }
    }

    if let Some(r) = &map_rates {
        write_metrics(&config.out, r, auc)?;
        artifacts.insert("metrics", METRICS.into());
    } else if let Some(auc) = auc {
        stage(
            "write",
            fs::write(
                config.out.join(METRICS),
                serde_json::to_string_pretty(&json!({"auc": auc})).expect("serializes") + "\n",
            ),
        )?;
        artifacts.insert("metrics", METRICS.into());
    }

    let details = json!({"rates": map_rates, "auc": auc});
    let config_echo = json!({
        "map": config.map,
        "di": config.di,
        "truth": config.truth,
        "out": config.out,
    });
    write_manifest(&config.out, "evaluate", config_echo, details, &timings, &artifacts)?;
    println!("metrics written to {}", config.out.display());
    Ok(())
}

pub struct SynthConfig {
    pub out: PathBuf,
    pub spec: SceneSpec,
}

pub fn cmd_synth(config: SynthConfig) -> Result<(), StageError> {
    let mut timings = Timings::new();
    let generated = timings.record("synth", || generate(&config.spec));
    let (optical, sar, truth) = stage("synth", generated)?;
    stage("write", fs::create_dir_all(&config.out))?;
    stage("write", write_raster(config.out.join("optical.bin"), &optical))?;
    stage("write", write_raster(config.out.join("sar.bin"), &sar))?;
    stage("write", write_mask(config.out.join("truth.pgm"), &truth))?;
    stage(
        "write",
        fs::write(
            config.out.join("scene.json"),
            serde_json::to_string_pretty(&config.spec).expect("spec serializes") + "\n",
        ),
    )?;
    let mut artifacts = BTreeMap::new();
    artifacts.insert("optical", "optical.bin".to_string());
    artifacts.insert("sar", "sar.bin".to_string());
    artifacts.insert("truth", "truth.pgm".to_string());
    artifacts.insert("scene", "scene.json".to_string());
    let details = json!({
        "changed_pixels": truth.changed_count(),
        "changed_fraction": truth.changed_count() as f64 / (truth.width * truth.height) as f64,
    });
    let config_echo = serde_json::to_value(config.spec).expect("spec serializes");
    write_manifest(&config.out, "synth", config_echo, details, &timings, &artifacts)?;
    println!("synthetic pair written to {}", config.out.display());
    Ok(())
}
