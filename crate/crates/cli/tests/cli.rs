use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dynseg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynseg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path, seed: &str, objects: &str) {
    let out = dynseg(&["synth", "--seed", seed, "--objects", objects, "--out", "scene"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_masks_and_result_for_every_object() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "5", "2");
    let out = dynseg(
        &["run", "scene/img1.png", "scene/img2.png", "--objects", "2", "--out", "r", "--debug"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = dir.path().join("r");
    let json: Value = serde_json::from_str(&std::fs::read_to_string(r.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["outcome"], "segmented");
    let images = json["images"].as_array().unwrap();
    assert_eq!(images.len(), 2);
    for (k, img) in images.iter().enumerate() {
        let objects = img["objects"].as_array().unwrap();
        assert_eq!(objects.len(), 2);
        for (id, obj) in objects.iter().enumerate() {
            assert_eq!(obj["id"], id);
            let name = format!("mask_img{}_obj{id}.png", k + 1);
            assert_eq!(obj["mask"], name.as_str());
            assert!(r.join(&name).is_file());
            assert!(obj["aabb"]["x_max"].as_f64() >= obj["aabb"]["x_min"].as_f64());
        }
    }
    for f in json["debug"].as_array().unwrap() {
        assert!(r.join(f.as_str().unwrap()).is_file(), "{f}");
    }
    assert!(json["timing_ms"]["grabcut"].is_number());
    assert_eq!(json["config"]["objects"], 2);
}

#[test]
fn identical_images_are_a_static_scene_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1", "1");
    let out = dynseg(&["run", "scene/img1.png", "scene/img1.png", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r/result.json")).unwrap()).unwrap();
    assert_eq!(json["outcome"], "static_scene");
    assert!(json["images"][0]["objects"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1", "1");
    let missing = dynseg(&["run", "missing.png", "scene/img2.png", "--out", "r"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.png"));

    std::fs::write(dir.path().join("junk.png"), b"not a png").unwrap();
    let junk = dynseg(&["run", "junk.png", "scene/img2.png", "--out", "r"], dir.path());
    assert_eq!(junk.status.code(), Some(2));

    assert_eq!(dynseg(&["run", "only-one.png"], dir.path()).status.code(), Some(1));
    assert_eq!(dynseg(&["frobnicate"], dir.path()).status.code(), Some(1));
    let bad_value = dynseg(&["run", "scene/img1.png", "scene/img2.png", "--conf", "1.5"], dir.path());
    assert_eq!(bad_value.status.code(), Some(1));
    let bad_key = dynseg(&["run", "scene/img1.png", "scene/img2.png", "--set", "nope=1"], dir.path());
    assert_eq!(bad_key.status.code(), Some(1));

    assert_eq!(dynseg(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(dynseg(&["--version"], dir.path()).status.code(), Some(0));

    // a 2x2 image is too small for the saliency patches
    let tiny = dir.path().join("tiny.png");
    let rgb: Vec<u8> = vec![90; 12];
    let img = dynseg_core::ImageRgb::new(2, 2, rgb.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()).unwrap();
    dynseg_core::imageio::save_image(&img, &tiny).unwrap();
    let failed = dynseg(&["run", "tiny.png", "tiny.png", "--out", "r"], dir.path());
    assert_eq!(failed.status.code(), Some(3), "{}", String::from_utf8_lossy(&failed.stderr));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "2", "1");
    std::fs::write(
        dir.path().join("cfg.txt"),
        "# test\nobjects=1\npad_frac=0.3\ngrabcut.gamma=40\noutput_dir=from_file\n",
    )
    .unwrap();
    let out = dynseg(
        &["run", "scene/img1.png", "scene/img2.png", "--config", "cfg.txt", "--pad", "0.05"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("from_file/result.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["pad_frac"], 0.05);
    assert_eq!(json["config"]["grabcut"]["gamma"], 40.0);
}

#[test]
fn synth_from_a_spec_file_writes_images_and_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{
        "width": 160, "height": 120,
        "objects": [
            {"shape": {"kind": "disc", "radius": 15}, "center": [50, 60], "color": [53, 80, 67], "motion": [20, 0]}
        ],
        "camera_motion": [5, 5],
        "rng_seed": 4
    }"#;
    std::fs::write(dir.path().join("spec.json"), spec).unwrap();
    let out = dynseg(&["synth", "--spec", "spec.json", "--out", "s"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["img1.png", "img2.png", "gt_img1_obj0.png", "gt_img2_obj0.png", "spec.json"] {
        assert!(dir.path().join("s").join(f).is_file(), "{f}");
    }
    let gt_b = dynseg_core::imageio::load_mask(dir.path().join("s/gt_img2_obj0.png")).unwrap();
    assert!(gt_b.get(75, 65) && !gt_b.get(50, 60));

    std::fs::write(dir.path().join("bad.json"), "{\"width\": 10}").unwrap();
    assert_eq!(dynseg(&["synth", "--spec", "bad.json", "--out", "s"], dir.path()).status.code(), Some(1));
}

#[test]
fn eval_prints_a_row_per_scene_and_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dynseg(&["eval", "--scenes", "2", "--seed", "3", "--out", "e"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("seed3") && stdout.contains("seed4") && stdout.contains("mean"));
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("e/report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("e/report.txt").is_file());
}
