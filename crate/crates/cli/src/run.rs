use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use dynseg_core::imageio::{load_image, save_gray, save_image, save_mask};
use dynseg_core::{Aabb, ImageRgb, Outcome, PipelineConfig, PipelineOutput};
use serde::Serialize;

use crate::overlay;
use crate::{ConfigArgs, Failure};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// First image (A).
    pub img1: PathBuf,
    /// Second image (B).
    pub img2: PathBuf,
    /// Number of moving objects.
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Box padding as a fraction of the box diagonal.
    #[arg(long)]
    pub pad: Option<f64>,
    /// Minimum match confidence.
    #[arg(long)]
    pub conf: Option<f64>,
    /// Output directory (default: output_dir from the config, else dynseg-out).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write saliency maps and overlays under DIR/debug.
    #[arg(long)]
    pub debug: bool,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

/// `result.json`.
#[derive(Serialize)]
pub struct RunResult<'a> {
    pub outcome: Outcome,
    pub images: Vec<ImageEntry>,
    pub timing_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
    pub config: &'a PipelineConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub debug: Vec<String>,
}

#[derive(Serialize)]
pub struct ImageEntry {
    pub path: String,
    pub objects: Vec<ObjectEntry>,
}

#[derive(Serialize)]
pub struct ObjectEntry {
    pub id: usize,
    pub aabb: Aabb,
    /// Relative to the output directory.
    pub mask: String,
    /// GrabCut fell back to the box or found no foreground.
    pub degenerate: bool,
}

fn resolve_config(args: &RunArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = args.cfg.load()?;
    if let Some(k) = args.objects {
        cfg.objects = k;
    }
    if let Some(s) = args.seed {
        cfg.rng_seed = s;
    }
    if let Some(p) = args.pad {
        cfg.pad_frac = p;
    }
    if let Some(c) = args.conf {
        cfg.conf_threshold = c;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = resolve_config(args)?;
    let out_dir = PathBuf::from(cfg.output_dir.clone().unwrap_or_else(|| "dynseg-out".into()));
    let img_a = load_image(&args.img1)?;
    let img_b = load_image(&args.img2)?;

    let start = Instant::now();
    let out = dynseg_core::run_pipeline(&img_a, &img_b, &cfg)?;
    let total_ms = start.elapsed().as_secs_f64() * 1e3;

    std::fs::create_dir_all(&out_dir).map_err(|e| Failure::io(&out_dir, e))?;
    let mut images = Vec::with_capacity(2);
    for (k, path) in [&args.img1, &args.img2].into_iter().enumerate() {
        let mut objects = Vec::new();
        for obj in &out.objects {
            let name = format!("mask_img{}_obj{}.png", k + 1, obj.id);
            save_mask(&obj.masks[k], out_dir.join(&name))?;
            objects.push(ObjectEntry {
                id: obj.id,
                aabb: obj.boxes[k].aabb,
                mask: name,
                degenerate: obj.degenerate[k],
            });
        }
        images.push(ImageEntry {
            path: path.display().to_string(),
            objects,
        });
    }
    let debug = if args.debug {
        write_debug(&out, [&img_a, &img_b], &out_dir.join("debug"))?
    } else {
        Vec::new()
    };
    let result = RunResult {
        outcome: out.outcome,
        images,
        timing_ms: out.timing_map(),
        total_ms,
        config: &cfg,
        debug,
    };
    let json = serde_json::to_string_pretty(&result).expect("result serializes");
    let json_path = out_dir.join("result.json");
    std::fs::write(&json_path, json + "\n").map_err(|e| Failure::io(&json_path, e))?;

    match out.outcome {
        Outcome::StaticScene => println!("static scene: no moving objects found"),
        Outcome::Segmented => println!("segmented {} object(s)", out.objects.len()),
    }
    println!("wrote {}", json_path.display());
    Ok(())
}

/// Writes the intermediate products; returns paths relative to the output
/// directory.
fn write_debug(out: &PipelineOutput, imgs: [&ImageRgb; 2], dir: &Path) -> Result<Vec<String>, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let mut written = Vec::new();
    let mut record = |name: String| {
        written.push(format!("debug/{name}"));
        dir.join(name)
    };
    let d = &out.debug;

    for (k, map) in d.saliency.iter().enumerate() {
        save_gray(map.width, map.height, &map.score, record(format!("saliency_img{}.png", k + 1)))?;
    }
    for (k, mask) in d.saliency_masks.iter().enumerate() {
        save_mask(mask, record(format!("saliency_mask_img{}.png", k + 1)))?;
    }

    let shift = imgs[0].width() as f64;
    let mut pairs = overlay::side_by_side(&overlay::faded(imgs[0]), &overlay::faded(imgs[1]));
    let step = (d.matches.len() / 80).max(1);
    for m in d.matches.matches.iter().step_by(step) {
        let a = [m.pa[0] as f64, m.pa[1] as f64];
        let b = [m.pb[0] as f64 + shift, m.pb[1] as f64];
        overlay::line(&mut pairs, a, b, [0, 200, 0]);
        overlay::dot(&mut pairs, a, 1, [255, 255, 255]);
        overlay::dot(&mut pairs, b, 1, [255, 255, 255]);
    }
    save_image(&pairs, record("matches.png".into()))?;

    if let Some(m) = &d.motion {
        for (k, img) in imgs.iter().enumerate() {
            let pts = if k == 0 { &m.points_a } else { &m.points_b };
            let mut canvas = overlay::faded(img);
            for p in pts {
                overlay::dot(&mut canvas, *p, 0, [0, 160, 0]);
            }
            for &i in &d.dynamic.indices {
                overlay::dot(&mut canvas, pts[i], 1, [255, 255, 255]);
            }
            for (id, group) in d.clusters.iter().enumerate() {
                for &i in group {
                    overlay::dot(&mut canvas, pts[i], 1, overlay::object_color(id));
                }
            }
            save_image(&canvas, record(format!("dynamic_img{}.png", k + 1)))?;
        }
    }

    if out.outcome == Outcome::Segmented {
        for (k, img) in imgs.iter().enumerate() {
            let mut boxes = overlay::faded(img);
            let mut masks = overlay::faded(img);
            for obj in &out.objects {
                let color = overlay::object_color(obj.id);
                let b = &obj.boxes[k];
                for p in &b.points {
                    overlay::dot(&mut boxes, *p, 0, color);
                }
                overlay::polygon(&mut boxes, &b.hull.vertices, [255, 255, 255]);
                if let Some(rect) = &b.rect {
                    overlay::polygon(&mut boxes, &rect.corners, [255, 255, 0]);
                }
                let aabb = b.aabb;
                let corners = [
                    [aabb.x_min, aabb.y_min],
                    [aabb.x_max, aabb.y_min],
                    [aabb.x_max, aabb.y_max],
                    [aabb.x_min, aabb.y_max],
                ];
                overlay::polygon(&mut boxes, &corners, color);
                let mask = &obj.masks[k];
                for y in 0..mask.height() {
                    for x in 0..mask.width() {
                        if mask.get(x, y) {
                            let p = img.get(x, y);
                            let t = |i: usize| ((p[i] as u16 + color[i] as u16) / 2) as u8;
                            masks.set(x, y, [t(0), t(1), t(2)]);
                        }
                    }
                }
            }
            save_image(&boxes, record(format!("boxes_img{}.png", k + 1)))?;
            save_image(&masks, record(format!("masks_img{}.png", k + 1)))?;
        }
    }
    Ok(written)
}
