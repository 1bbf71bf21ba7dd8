use std::path::PathBuf;

use clap::Args;
use dynseg_core::evaluation::{evaluate_pair, random_scene_spec, RandomSceneOptions};
use dynseg_core::imageio::{save_image, save_mask};
use dynseg_core::{generate_scene, EvalReport, EvalRow, SceneSpec};
use rayon::prelude::*;

use crate::{ConfigArgs, Failure};

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, default_value_t = 20)]
    pub scenes: usize,
    /// Scene `i` uses seed `seed + i` for both generation and the pipeline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Moving objects per scene.
    #[arg(long, default_value_t = 1)]
    pub objects: usize,
    /// Where to write report.txt and report.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene description as JSON; without it a random scene is drawn.
    #[arg(long, value_name = "JSON")]
    pub spec: Option<PathBuf>,
    /// Seed for the random scene.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Moving objects in the random scene.
    #[arg(long, default_value_t = 1)]
    pub objects: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

fn scene_options(objects: usize) -> Result<RandomSceneOptions, Failure> {
    if objects == 0 {
        return Err(Failure::Usage("--objects must be >= 1".into()));
    }
    Ok(RandomSceneOptions {
        objects,
        ..Default::default()
    })
}

pub fn eval(args: &EvalArgs) -> Result<(), Failure> {
    let base = args.cfg.load()?;
    base.validate()?;
    let opts = scene_options(args.objects)?;
    let results: Vec<Result<Vec<EvalRow>, Failure>> = (0..args.scenes as u64)
        .into_par_iter()
        .map(|i| {
            let seed = args.seed + i;
            let spec = random_scene_spec(seed, &opts)?;
            let scene = generate_scene(&spec)?;
            let cfg = dynseg_core::PipelineConfig {
                rng_seed: seed,
                ..base.clone()
            };
            let name = format!("seed{seed}");
            match evaluate_pair(&scene.img_a, &scene.img_b, &scene.gt, &cfg, "synthetic", &name) {
                Ok(rows) => Ok(rows),
                Err(e) if e.is_io() => Err(e.into()),
                Err(e) => {
                    eprintln!("warning: {name}: {e}; scored 0");
                    Ok((0..scene.gt.len())
                        .map(|object| EvalRow {
                            dataset: "synthetic".into(),
                            scene: name.clone(),
                            object,
                            image1: 0.0,
                            image2: 0.0,
                        })
                        .collect())
                }
            }
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let report = EvalReport::from_rows(rows);
    let table = report.to_table();
    print!("{table}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        for (name, text) in [("report.txt", table), ("report.json", report.to_json() + "\n")] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        }
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let spec: SceneSpec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => random_scene_spec(args.seed, &scene_options(args.objects)?)?,
    };
    let scene = generate_scene(&spec)?;
    let dir = &args.out;
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    save_image(&scene.img_a, dir.join("img1.png"))?;
    save_image(&scene.img_b, dir.join("img2.png"))?;
    for (id, gt) in scene.gt.iter().enumerate() {
        for (k, mask) in gt.iter().enumerate() {
            save_mask(mask, dir.join(format!("gt_img{}_obj{id}.png", k + 1)))?;
        }
    }
    let spec_path = dir.join("spec.json");
    let json = serde_json::to_string_pretty(&spec).expect("spec serializes");
    std::fs::write(&spec_path, json + "\n").map_err(|e| Failure::io(&spec_path, e))?;
    println!("wrote scene with {} object(s) to {}", scene.gt.len(), dir.display());
    Ok(())
}
