//! End-to-end segmentation of the moving objects in an image pair.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::kmeans;
use crate::correspondence::{compute_field, filter_matches, CorrParams, CorrespondenceField, MatchSet};
use crate::error::{Error, Result};
use crate::geometry::{axis_align, convex_hull, min_area_rect, pad_and_clip, Aabb, OrientedRect, Point, Polygon};
use crate::grabcut::{run_grabcut, GrabCutParams};
use crate::imageio::{rgb_to_lab, BinaryMask, ImageLab, ImageRgb};
use crate::motion::{build_motion_matrix, prune_outliers, split_static_dynamic_k, DynamicPoints, MotionMatrix, DEFAULT_COS_MIN, DEFAULT_MIN_RESIDUAL_RMS};
use crate::stats::median;
use crate::saliency::{compute_saliency, saliency_mask, SaliencyMap, SaliencyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Number of moving objects, known in advance.
    pub objects: usize,
    pub conf_threshold: f64,
    /// Box growth as a fraction of its diagonal; 0 keeps the tight box.
    pub pad_frac: f64,
    pub rng_seed: u64,
    pub max_matches: usize,
    pub cos_min: f64,
    /// Drops object points farther from the group's median point than this
    /// multiple of the median such distance; 0 keeps every point.
    pub trim_factor: f64,
    /// Pixels; the scene counts as static when the second singular value of
    /// `W` over `sqrt(N)` is below this. 0 leaves only the ratio test.
    pub min_residual_rms: f64,
    pub saliency: SaliencyParams,
    /// `rng_seed` here is overridden by the top-level seed.
    pub corr: CorrParams,
    /// `rng_seed` here is overridden by the top-level seed.
    pub grabcut: GrabCutParams,
    /// Where front ends write their outputs; unused by the library.
    pub output_dir: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            objects: 1,
            conf_threshold: 0.8,
            pad_frac: 0.10,
            rng_seed: 0,
            max_matches: 5000,
            cos_min: DEFAULT_COS_MIN,
            trim_factor: 3.0,
            min_residual_rms: DEFAULT_MIN_RESIDUAL_RMS,
            saliency: SaliencyParams::default(),
            corr: CorrParams::default(),
            grabcut: GrabCutParams::default(),
            output_dir: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.objects == 0 {
            return Err(Error::Config("objects must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.conf_threshold) {
            return Err(Error::Config("conf_threshold must be in [0, 1]".into()));
        }
        if !(self.pad_frac >= 0.0 && self.pad_frac.is_finite()) {
            return Err(Error::Config("pad_frac must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.cos_min) {
            return Err(Error::Config("cos_min must be in [0, 1]".into()));
        }
        if !(self.trim_factor >= 0.0 && self.trim_factor.is_finite()) {
            return Err(Error::Config("trim_factor must be >= 0".into()));
        }
        if !(self.min_residual_rms >= 0.0 && self.min_residual_rms.is_finite()) {
            return Err(Error::Config("min_residual_rms must be >= 0".into()));
        }
        if self.max_matches < 3 {
            return Err(Error::Config("max_matches must be >= 3".into()));
        }
        self.saliency.validate()?;
        self.corr.validate()?;
        self.grabcut.validate()
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "objects" => self.objects = parse(key, v)?,
            "conf_threshold" => self.conf_threshold = parse(key, v)?,
            "pad_frac" => self.pad_frac = parse(key, v)?,
            "rng_seed" => self.rng_seed = parse(key, v)?,
            "max_matches" => self.max_matches = parse(key, v)?,
            "cos_min" => self.cos_min = parse(key, v)?,
            "trim_factor" => self.trim_factor = parse(key, v)?,
            "min_residual_rms" => self.min_residual_rms = parse(key, v)?,
            "saliency.patch_size" => self.saliency.patch_size = parse(key, v)?,
            "saliency.stride" => self.saliency.stride = parse(key, v)?,
            "saliency.center_prior_weight" => self.saliency.center_prior_weight = parse(key, v)?,
            "corr.patch_size" => self.corr.patch_size = parse(key, v)?,
            "corr.iterations" => self.corr.iterations = parse(key, v)?,
            "corr.coherence_radius" => self.corr.coherence_radius = parse(key, v)?,
            "corr.sigma_dist" => {
                self.corr.sigma_dist = if v == "auto" { None } else { Some(parse(key, v)?) }
            }
            "grabcut.gmm_k" => self.grabcut.gmm_k = parse(key, v)?,
            "grabcut.gamma" => self.grabcut.gamma = parse(key, v)?,
            "grabcut.max_iters" => self.grabcut.max_iters = parse(key, v)?,
            "grabcut.conv_tol" => self.grabcut.conv_tol = parse(key, v)?,
            "output_dir" => self.output_dir = Some(v.to_string()),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Reads flat `key=value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn from_config_str(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_config_str(text)?;
        Ok(cfg)
    }

    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let sigma = self.corr.sigma_dist.map_or("auto".to_string(), |v| v.to_string());
        let _ = writeln!(s, "objects={}", self.objects);
        let _ = writeln!(s, "conf_threshold={}", self.conf_threshold);
        let _ = writeln!(s, "pad_frac={}", self.pad_frac);
        let _ = writeln!(s, "rng_seed={}", self.rng_seed);
        let _ = writeln!(s, "max_matches={}", self.max_matches);
        let _ = writeln!(s, "cos_min={}", self.cos_min);
        let _ = writeln!(s, "trim_factor={}", self.trim_factor);
        let _ = writeln!(s, "min_residual_rms={}", self.min_residual_rms);
        let _ = writeln!(s, "saliency.patch_size={}", self.saliency.patch_size);
        let _ = writeln!(s, "saliency.stride={}", self.saliency.stride);
        let _ = writeln!(s, "saliency.center_prior_weight={}", self.saliency.center_prior_weight);
        let _ = writeln!(s, "corr.patch_size={}", self.corr.patch_size);
        let _ = writeln!(s, "corr.iterations={}", self.corr.iterations);
        let _ = writeln!(s, "corr.coherence_radius={}", self.corr.coherence_radius);
        let _ = writeln!(s, "corr.sigma_dist={sigma}");
        let _ = writeln!(s, "grabcut.gmm_k={}", self.grabcut.gmm_k);
        let _ = writeln!(s, "grabcut.gamma={}", self.grabcut.gamma);
        let _ = writeln!(s, "grabcut.max_iters={}", self.grabcut.max_iters);
        let _ = writeln!(s, "grabcut.conv_tol={}", self.grabcut.conv_tol);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "output_dir={dir}");
        }
        s
    }

    fn corr_params(&self) -> CorrParams {
        CorrParams {
            rng_seed: self.rng_seed,
            ..self.corr
        }
    }

    fn grabcut_params(&self) -> GrabCutParams {
        GrabCutParams {
            rng_seed: self.rng_seed,
            ..self.grabcut.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Segmented,
    /// No moving points were found; there are no masks.
    StaticScene,
}

/// Box construction for one object in one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectBox {
    pub points: Vec<Point>,
    pub hull: Polygon,
    /// Absent when the points are collinear.
    pub rect: Option<OrientedRect>,
    pub aabb: Aabb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectResult {
    pub id: usize,
    /// Index 0 is image A, index 1 image B.
    pub boxes: [ObjectBox; 2],
    pub masks: [BinaryMask; 2],
    pub degenerate: [bool; 2],
}

/// Intermediate products kept for inspection and overlays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DebugArtifacts {
    pub saliency: Vec<SaliencyMap>,
    pub saliency_masks: Vec<BinaryMask>,
    pub field: Option<CorrespondenceField>,
    pub matches: MatchSet,
    pub motion: Option<MotionMatrix>,
    pub dynamic: DynamicPoints,
    /// Per object, the surviving match indices after pruning.
    pub clusters: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub outcome: Outcome,
    pub objects: Vec<ObjectResult>,
    /// Stage name to elapsed milliseconds, in execution order.
    pub timing_ms: Vec<(String, f64)>,
    pub debug: DebugArtifacts,
}

impl PipelineOutput {
    pub fn timing_map(&self) -> BTreeMap<String, f64> {
        self.timing_ms.iter().cloned().collect()
    }
}

struct Timer {
    laps: Vec<(String, f64)>,
    last: Instant,
}

impl Timer {
    fn new() -> Timer {
        Timer {
            laps: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.laps.push((stage.to_string(), (now - self.last).as_secs_f64() * 1e3));
        self.last = now;
    }
}

/// Hull, minimum-area rectangle and padded axis-aligned box of one point
/// group. Collinear groups skip the rectangle and use the points' extent.
pub fn object_box(points: Vec<Point>, pad_frac: f64, width: usize, height: usize) -> Result<ObjectBox> {
    let hull = convex_hull(&points);
    let rect = if hull.degenerate {
        None
    } else {
        Some(min_area_rect(&hull)?)
    };
    let tight = match &rect {
        Some(r) => axis_align(r),
        None => Aabb::from_points(&points).ok_or(Error::EmptyInput("object points"))?,
    };
    let aabb = pad_and_clip(&tight, pad_frac, width, height)?;
    Ok(ObjectBox {
        points,
        hull,
        rect,
        aabb,
    })
}

fn cluster_dynamic(
    m: &MotionMatrix,
    dynamic: &DynamicPoints,
    cfg: &PipelineConfig,
) -> Result<Vec<DynamicPoints>> {
    let k = cfg.objects;
    let pts: Vec<Point> = dynamic.indices.iter().map(|&i| m.points_a[i]).collect();
    let clustering = kmeans(&pts, k, cfg.rng_seed, 100)?;
    let mut groups = vec![DynamicPoints::default(); k];
    for ((&i, &r), &l) in dynamic.indices.iter().zip(&dynamic.residual_norms).zip(&clustering.labels) {
        groups[l].indices.push(i);
        groups[l].residual_norms.push(r);
    }
    // each object is pruned against its own motion direction
    Ok(groups
        .into_iter()
        .map(|g| {
            let mut pruned = prune_outliers(m, &g, cfg.cos_min);
            if pruned.is_empty() {
                pruned = g;
            }
            trim_spatial_outliers(&m.points_a, &pruned, cfg.trim_factor)
        })
        .collect())
}

/// Keeps the points of `g` whose image-A position lies within `factor`
/// times the median distance of the group from its coordinate-wise median.
pub fn trim_spatial_outliers(points: &[Point], g: &DynamicPoints, factor: f64) -> DynamicPoints {
    if factor <= 0.0 || g.len() < 3 {
        return g.clone();
    }
    let xs: Vec<f64> = g.indices.iter().map(|&i| points[i][0]).collect();
    let ys: Vec<f64> = g.indices.iter().map(|&i| points[i][1]).collect();
    let center = [median(&xs), median(&ys)];
    let dist: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - center[0]).hypot(y - center[1])).collect();
    let limit = factor * median(&dist);
    let mut out = DynamicPoints::default();
    for ((&i, &r), &d) in g.indices.iter().zip(&g.residual_norms).zip(&dist) {
        if d <= limit {
            out.indices.push(i);
            out.residual_norms.push(r);
        }
    }
    out
}

/// Runs every stage on a pair of images of equal size.
pub fn run_pipeline(img_a: &ImageRgb, img_b: &ImageRgb, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    if (img_a.width(), img_a.height()) != (img_b.width(), img_b.height()) {
        return Err(Error::DimensionMismatch(format!(
            "image A is {}x{}, image B is {}x{}",
            img_a.width(),
            img_a.height(),
            img_b.width(),
            img_b.height()
        )));
    }
    let (w, h) = (img_a.width(), img_a.height());
    let mut timer = Timer::new();
    let mut debug = DebugArtifacts::default();

    let lab: [ImageLab; 2] = [rgb_to_lab(img_a), rgb_to_lab(img_b)];
    timer.lap("color");

    for img in &lab {
        let map = compute_saliency(img, &cfg.saliency).map_err(|e| e.in_stage("saliency"))?;
        debug.saliency_masks.push(saliency_mask(&map));
        debug.saliency.push(map);
    }
    timer.lap("saliency");

    let corr = cfg.corr_params();
    let field = compute_field(&lab[0], &lab[1], &corr).map_err(|e| e.in_stage("correspondence"))?;
    debug.matches = filter_matches(
        &field,
        &debug.saliency_masks[0],
        &debug.saliency_masks[1],
        &corr,
        cfg.conf_threshold,
        cfg.max_matches,
    )
    .map_err(|e| e.in_stage("correspondence"))?;
    debug.field = Some(field);
    timer.lap("correspondence");

    let static_scene = |mut timer: Timer, debug: DebugArtifacts| {
        timer.lap("motion");
        PipelineOutput {
            outcome: Outcome::StaticScene,
            objects: Vec::new(),
            timing_ms: timer.laps,
            debug,
        }
    };
    if debug.matches.is_empty() {
        return Ok(static_scene(timer, debug));
    }
    let m = build_motion_matrix(&debug.matches).map_err(|e| e.in_stage("motion"))?;
    let dynamic = split_static_dynamic_k(&m, cfg.objects, cfg.min_residual_rms).map_err(|e| e.in_stage("motion"))?;
    debug.motion = Some(m);
    debug.dynamic = dynamic;
    if debug.dynamic.is_empty() {
        return Ok(static_scene(timer, debug));
    }
    timer.lap("motion");

    let m = debug.motion.as_ref().expect("set above");
    let groups = cluster_dynamic(m, &debug.dynamic, cfg).map_err(|e| e.in_stage("cluster"))?;
    debug.clusters = groups.iter().map(|g| g.indices.clone()).collect();
    timer.lap("cluster");

    let mut boxes = Vec::with_capacity(groups.len());
    for g in &groups {
        let a: Vec<Point> = g.indices.iter().map(|&i| m.points_a[i]).collect();
        let b: Vec<Point> = g.indices.iter().map(|&i| m.points_b[i]).collect();
        let box_a = object_box(a, cfg.pad_frac, w, h).map_err(|e| e.in_stage("boxes"))?;
        let box_b = object_box(b, cfg.pad_frac, w, h).map_err(|e| e.in_stage("boxes"))?;
        boxes.push([box_a, box_b]);
    }
    timer.lap("boxes");

    let gc = cfg.grabcut_params();
    let jobs: Vec<(usize, usize)> = (0..boxes.len()).flat_map(|o| [(o, 0), (o, 1)]).collect();
    let cuts = jobs
        .par_iter()
        .map(|&(o, img)| run_grabcut(&lab[img], &boxes[o][img].aabb, &gc))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("grabcut"))?;
    timer.lap("grabcut");

    let mut cuts = cuts.into_iter();
    let objects = boxes
        .into_iter()
        .enumerate()
        .map(|(id, boxes)| {
            let ca = cuts.next().expect("two cuts per object");
            let cb = cuts.next().expect("two cuts per object");
            ObjectResult {
                id,
                boxes,
                degenerate: [ca.degenerate, cb.degenerate],
                masks: [ca.mask, cb.mask],
            }
        })
        .collect();

    Ok(PipelineOutput {
        outcome: Outcome::Segmented,
        objects,
        timing_ms: timer.laps,
        debug,
    })
}
