//! Jaccard scoring, a seeded synthetic scene generator and batch reports.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::{lab_pixel_to_rgb, BinaryMask, ImageRgb};
use crate::pipeline::{run_pipeline, PipelineConfig};

/// `|a & b| / |a | b|`; two empty masks agree perfectly.
pub fn jaccard(est: &BinaryMask, reference: &BinaryMask) -> Result<f64> {
    if !est.same_dims(reference) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            est.width(),
            est.height(),
            reference.width(),
            reference.height()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in est.bits().iter().zip(reference.bits()) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disc { radius: f64 },
    Rectangle { width: f64, height: f64 },
    /// Star-shaped outline `r(t) = radius * (1 + amplitude * sin(lobes * t + phase))`.
    Blob {
        radius: f64,
        lobes: u32,
        amplitude: f64,
        phase: f64,
    },
}

impl Shape {
    /// Whether the offset `(dx, dy)` from the shape center is inside.
    pub fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            Shape::Disc { radius } => dx * dx + dy * dy <= radius * radius,
            Shape::Rectangle { width, height } => dx.abs() <= width / 2.0 && dy.abs() <= height / 2.0,
            Shape::Blob {
                radius,
                lobes,
                amplitude,
                phase,
            } => {
                let r = radius * (1.0 + amplitude * (lobes as f64 * dy.atan2(dx) + phase).sin());
                dx * dx + dy * dy <= r * r
            }
        }
    }

    /// Half extents of the bounding box around the center.
    pub fn half_extent(&self) -> [f64; 2] {
        match *self {
            Shape::Disc { radius } => [radius, radius],
            Shape::Rectangle { width, height } => [width / 2.0, height / 2.0],
            Shape::Blob { radius, amplitude, .. } => {
                let r = radius * (1.0 + amplitude.abs());
                [r, r]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    /// Center in image A.
    pub center: [f64; 2],
    pub color: [f64; 3],
    /// Own displacement, added to the camera motion in image B.
    pub motion: [f64; 2],
    /// Amplitude of the object's surface texture in L units.
    #[serde(default)]
    pub texture: f64,
}

/// A static colored patch that belongs to the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropSpec {
    pub shape: Shape,
    pub center: [f64; 2],
    pub color: [f64; 3],
    /// Amplitude of the prop's surface texture in L units.
    #[serde(default)]
    pub texture: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundSpec {
    pub base: [f64; 3],
    /// L change per pixel along x and y.
    pub gradient: [f64; 2],
    /// Amplitude of the value noise in L; a and b get half of it.
    pub noise_amplitude: f64,
    /// Lattice spacing of the coarsest noise octave, in pixels.
    pub noise_scale: f64,
    pub props: Vec<PropSpec>,
    /// Per-frame independent pixel noise, in 8-bit RGB units.
    pub sensor_noise: f64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec {
            base: [55.0, 0.0, 10.0],
            gradient: [0.05, 0.03],
            noise_amplitude: 14.0,
            noise_scale: 24.0,
            props: Vec::new(),
            sensor_noise: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub background: BackgroundSpec,
    pub objects: Vec<ObjectSpec>,
    pub camera_motion: [f64; 2],
    #[serde(default)]
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub img_a: ImageRgb,
    pub img_b: ImageRgb,
    /// Per object, the ground-truth mask in image A and in image B.
    pub gt: Vec<[BinaryMask; 2]>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix(seed ^ splitmix((ix as u64).wrapping_mul(0x1f1f_1f1f) ^ splitmix(iy as u64)));
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Smooth value noise in `[-1, 1]` at a continuous position.
fn value_noise(seed: u64, x: f64, y: f64, scale: f64) -> f64 {
    let (gx, gy) = (x / scale, y / scale);
    let (ix, iy) = (gx.floor(), gy.floor());
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let (tx, ty) = (smooth(gx - ix), smooth(gy - iy));
    let (ix, iy) = (ix as i64, iy as i64);
    let top = lattice(seed, ix, iy) * (1.0 - tx) + lattice(seed, ix + 1, iy) * tx;
    let bottom = lattice(seed, ix, iy + 1) * (1.0 - tx) + lattice(seed, ix + 1, iy + 1) * tx;
    top * (1.0 - ty) + bottom * ty
}

fn fractal(seed: u64, x: f64, y: f64, scale: f64) -> f64 {
    let mut total = 0.0;
    let mut amp = 1.0;
    let mut s = scale;
    for octave in 0..3 {
        total += amp * value_noise(seed.wrapping_add(octave), x, y, s.max(1.0));
        amp *= 0.5;
        s *= 0.5;
    }
    total / 1.75
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Spec("image must be non-empty".into()));
        }
        let (w, h) = (self.width as f64 - 1.0, self.height as f64 - 1.0);
        for (i, o) in self.objects.iter().enumerate() {
            let e = o.shape.half_extent();
            let c_b = [
                o.center[0] + self.camera_motion[0] + o.motion[0],
                o.center[1] + self.camera_motion[1] + o.motion[1],
            ];
            for c in [o.center, c_b] {
                if c[0] - e[0] < 0.0 || c[1] - e[1] < 0.0 || c[0] + e[0] > w || c[1] + e[1] > h {
                    return Err(Error::Spec(format!("object {i} leaves the frame")));
                }
            }
        }
        Ok(())
    }
}

fn background_lab(spec: &SceneSpec, wx: f64, wy: f64) -> [f64; 3] {
    let bg = &spec.background;
    let s = spec.rng_seed;
    for (i, p) in bg.props.iter().enumerate().rev() {
        let (dx, dy) = (wx - p.center[0], wy - p.center[1]);
        if p.shape.contains(dx, dy) {
            let tex = p.texture * fractal(s ^ (0x200 + i as u64), dx, dy, 8.0);
            return [p.color[0] + tex, p.color[1], p.color[2]];
        }
    }
    let amp = bg.noise_amplitude;
    [
        bg.base[0] + bg.gradient[0] * wx + bg.gradient[1] * wy + amp * fractal(s, wx, wy, bg.noise_scale),
        bg.base[1] + 0.5 * amp * fractal(s ^ 0xa, wx, wy, bg.noise_scale * 2.0),
        bg.base[2] + 0.5 * amp * fractal(s ^ 0xb, wx, wy, bg.noise_scale * 2.0),
    ]
}

fn render(spec: &SceneSpec, frame: usize) -> (ImageRgb, Vec<BinaryMask>) {
    let (w, h) = (spec.width, spec.height);
    let cam = if frame == 0 { [0.0, 0.0] } else { spec.camera_motion };
    let centers: Vec<[f64; 2]> = spec
        .objects
        .iter()
        .map(|o| {
            if frame == 0 {
                o.center
            } else {
                [o.center[0] + cam[0] + o.motion[0], o.center[1] + cam[1] + o.motion[1]]
            }
        })
        .collect();
    let mut masks = vec![BinaryMask::empty(w, h); spec.objects.len()];
    let mut img = ImageRgb::filled(w, h, [0, 0, 0]);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(spec.rng_seed ^ (frame as u64 + 1)));
    let sn = spec.background.sensor_noise;
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let mut lab = background_lab(spec, fx - cam[0], fy - cam[1]);
            let mut owner = None;
            for (i, (o, c)) in spec.objects.iter().zip(&centers).enumerate() {
                let (dx, dy) = (fx - c[0], fy - c[1]);
                if o.shape.contains(dx, dy) {
                    owner = Some(i);
                    let tex = o.texture * fractal(spec.rng_seed ^ (0x100 + i as u64), dx, dy, 8.0);
                    lab = [o.color[0] + tex, o.color[1], o.color[2]];
                }
            }
            if let Some(i) = owner {
                masks[i].set(x, y, true);
            }
            let mut rgb = lab_pixel_to_rgb(lab);
            if sn > 0.0 {
                for v in rgb.iter_mut() {
                    *v = (*v as f64 + rng.random_range(-sn..=sn)).round().clamp(0.0, 255.0) as u8;
                }
            }
            img.set(x, y, rgb);
        }
    }
    (img, masks)
}

/// Renders both frames. Image B sees the background shifted by the camera
/// motion and each object shifted by camera plus own motion.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (img_a, masks_a) = render(spec, 0);
    let (img_b, masks_b) = render(spec, 1);
    let gt = masks_a.into_iter().zip(masks_b).map(|(a, b)| [a, b]).collect();
    Ok(Scene { img_a, img_b, gt })
}

/// Knobs for [`random_scene_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSceneOptions {
    pub width: usize,
    pub height: usize,
    pub objects: usize,
    pub camera_motion: [f64; 2],
    pub object_motion: [f64; 2],
    pub props: usize,
    /// Minimum angle between camera and object motion directions, radians.
    pub min_angle: f64,
}

impl Default for RandomSceneOptions {
    fn default() -> Self {
        RandomSceneOptions {
            width: 320,
            height: 240,
            objects: 1,
            camera_motion: [3.0, 10.0],
            object_motion: [15.0, 25.0],
            props: 8,
            min_angle: 0.5,
        }
    }
}

const PALETTE: [[f64; 3]; 7] = [
    [53.0, 80.0, 67.0],
    [40.0, 60.0, -80.0],
    [88.0, -86.0, 83.0],
    [97.0, -22.0, 94.0],
    [60.0, 85.0, -55.0],
    [67.0, 50.0, 74.0],
    [30.0, 55.0, -30.0],
];

fn polar(rng: &mut ChaCha8Rng, range: [f64; 2]) -> [f64; 2] {
    let r = if range[1] > range[0] { rng.random_range(range[0]..=range[1]) } else { range[0] };
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    [r * t.cos(), r * t.sin()]
}

fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (na, nb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
    if na == 0.0 || nb == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let c = ((a[0] * b[0] + a[1] * b[1]) / (na * nb)).clamp(-1.0, 1.0);
    // direction only: opposite vectors are collinear too
    c.abs().acos()
}

/// A seeded scene with non-overlapping objects whose own motion is not
/// parallel to the camera motion, plus a few static props.
pub fn random_scene_spec(seed: u64, opts: &RandomSceneOptions) -> Result<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camera_motion = polar(&mut rng, opts.camera_motion);
    let (w, h) = (opts.width as f64, opts.height as f64);
    let mut objects: Vec<ObjectSpec> = Vec::new();
    let mut palette: Vec<usize> = (0..PALETTE.len()).collect();
    for i in (1..palette.len()).rev() {
        palette.swap(i, rng.random_range(0..=i));
    }
    if opts.objects >= PALETTE.len() {
        return Err(Error::Spec(format!("at most {} objects", PALETTE.len() - 1)));
    }
    let mut taken: Vec<([f64; 2], f64)> = Vec::new();
    for idx in 0..opts.objects {
        let mut placed = None;
        for _ in 0..500 {
            let size = rng.random_range(0.09..0.14) * w.min(h) * if opts.objects > 1 { 0.85 } else { 1.0 };
            let shape = match rng.random_range(0..3) {
                0 => Shape::Disc { radius: size },
                1 => Shape::Rectangle {
                    width: size * rng.random_range(1.4..2.0),
                    height: size * rng.random_range(1.4..2.0),
                },
                _ => Shape::Blob {
                    radius: size,
                    lobes: rng.random_range(3..=5),
                    amplitude: rng.random_range(0.1..0.2),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                },
            };
            let motion = polar(&mut rng, opts.object_motion);
            if opts.camera_motion[1] > 0.0 && angle_between(motion, camera_motion) < opts.min_angle {
                continue;
            }
            let e = shape.half_extent();
            let m = 4.0;
            let center = [
                rng.random_range(e[0] + m..(w - 1.0 - e[0] - m).max(e[0] + m + 1.0)),
                rng.random_range(e[1] + m..(h - 1.0 - e[1] - m).max(e[1] + m + 1.0)),
            ];
            let reach = e[0].hypot(e[1]);
            let far = |c: [f64; 2]| {
                taken.iter().all(|(t, r)| (c[0] - t[0]).hypot(c[1] - t[1]) > reach + r + 6.0)
            };
            let world_b = [center[0] + motion[0], center[1] + motion[1]];
            let spec = ObjectSpec {
                shape,
                center,
                color: PALETTE[palette[idx]],
                motion,
                texture: 4.0,
            };
            let fits = SceneSpec {
                width: opts.width,
                height: opts.height,
                background: BackgroundSpec::default(),
                objects: vec![spec.clone()],
                camera_motion,
                rng_seed: seed,
            }
            .validate()
            .is_ok();
            if fits && far(center) && far(world_b) {
                taken.push((center, reach));
                taken.push((world_b, reach));
                placed = Some(spec);
                break;
            }
        }
        objects.push(placed.ok_or_else(|| Error::Spec("could not place every object".into()))?);
    }

    let mut props = Vec::new();
    let mut attempts = 0;
    while props.len() < opts.props && attempts < 1000 {
        attempts += 1;
        let size = rng.random_range(0.045..0.075) * w.min(h);
        let shape = if rng.random_bool(0.5) {
            Shape::Disc { radius: size }
        } else {
            Shape::Rectangle {
                width: size * rng.random_range(1.2..2.2),
                height: size * rng.random_range(1.2..2.2),
            }
        };
        let e = shape.half_extent();
        let center = [rng.random_range(e[0]..w - e[0]), rng.random_range(e[1]..h - e[1])];
        let reach = e[0].hypot(e[1]);
        if taken.iter().all(|(t, r)| (center[0] - t[0]).hypot(center[1] - t[1]) > reach + r + 6.0) {
            taken.push((center, reach));
            props.push(PropSpec {
                shape,
                center,
                color: PALETTE[palette[opts.objects + props.len() % (palette.len() - opts.objects)]],
                texture: 4.0,
            });
        }
    }

    Ok(SceneSpec {
        width: opts.width,
        height: opts.height,
        background: BackgroundSpec {
            gradient: [rng.random_range(-0.08..0.08), rng.random_range(-0.08..0.08)],
            props,
            ..Default::default()
        },
        objects,
        camera_motion,
        rng_seed: seed,
    })
}

/// One ground-truth object's scores in both images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub dataset: String,
    pub scene: String,
    pub object: usize,
    pub image1: f64,
    pub image2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Over every per-image score.
    pub mean: f64,
    pub min: f64,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> EvalReport {
        let scores: Vec<f64> = rows.iter().flat_map(|r| [r.image1, r.image2]).collect();
        let (mean, min) = if scores.is_empty() {
            (0.0, 0.0)
        } else {
            (
                scores.iter().sum::<f64>() / scores.len() as f64,
                scores.iter().copied().fold(f64::INFINITY, f64::min),
            )
        };
        EvalReport { rows, mean, min }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// Plain-text table with one row per object.
    pub fn to_table(&self) -> String {
        let headers = ["Dataset", "Scene", "Image 1", "Image 2"];
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                let scene = if self.rows.iter().any(|o| o.scene == r.scene && o.object != r.object) {
                    format!("{} #{}", r.scene, r.object)
                } else {
                    r.scene.clone()
                };
                [r.dataset.clone(), scene, format!("{:.4}", r.image1), format!("{:.4}", r.image2)]
            })
            .collect();
        let mut widths = headers.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}",
                row[0],
                row[1],
                row[2],
                row[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
        };
        line(&mut out, headers);
        let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 6));
        for row in &cells {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3]]);
        }
        let _ = writeln!(out, "mean {:.4}  min {:.4}", self.mean, self.min);
        out
    }
}

/// Score of each ground-truth mask after greedily pairing estimates with
/// ground truth by descending Jaccard; ties go to the lower indices. Ground
/// truth left unpaired scores 0.
pub fn match_scores(est: &[BinaryMask], gt: &[BinaryMask]) -> Result<Vec<f64>> {
    let mut pairs = Vec::with_capacity(est.len() * gt.len());
    for (i, e) in est.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            pairs.push((jaccard(e, g)?, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut scores = vec![0.0; gt.len()];
    let mut used_est = vec![false; est.len()];
    let mut used_gt = vec![false; gt.len()];
    for (s, i, j) in pairs {
        if !used_est[i] && !used_gt[j] {
            used_est[i] = true;
            used_gt[j] = true;
            scores[j] = s;
        }
    }
    Ok(scores)
}

/// Runs the pipeline on one pair and scores it against `gt` (per object,
/// masks for image A and image B).
pub fn evaluate_pair(
    img_a: &ImageRgb,
    img_b: &ImageRgb,
    gt: &[[BinaryMask; 2]],
    config: &PipelineConfig,
    dataset: &str,
    scene: &str,
) -> Result<Vec<EvalRow>> {
    for g in gt {
        for (m, img) in g.iter().zip([img_a, img_b]) {
            if (m.width(), m.height()) != (img.width(), img.height()) {
                return Err(Error::DimensionMismatch("ground truth vs image".into()));
            }
        }
    }
    let out = run_pipeline(img_a, img_b, &PipelineConfig {
        objects: gt.len().max(1),
        ..config.clone()
    })?;
    let mut per_image = Vec::with_capacity(2);
    for k in 0..2 {
        let est: Vec<BinaryMask> = out.objects.iter().map(|o| o.masks[k].clone()).collect();
        let truth: Vec<BinaryMask> = gt.iter().map(|g| g[k].clone()).collect();
        per_image.push(match_scores(&est, &truth)?);
    }
    Ok((0..gt.len())
        .map(|j| EvalRow {
            dataset: dataset.to_string(),
            scene: scene.to_string(),
            object: j,
            image1: per_image[0][j],
            image2: per_image[1][j],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, on: &[(usize, usize)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| on.contains(&(x, y)))
    }

    #[test]
    fn jaccard_identities() {
        let a = mask(4, 4, &[(0, 0), (1, 0), (2, 0), (3, 0)]);
        let b = mask(4, 4, &[(2, 0), (3, 0), (0, 1), (1, 1)]);
        let c = mask(4, 4, &[(0, 3)]);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard(&a, &c).unwrap(), 0.0);
        assert!((jaccard(&a, &b).unwrap() - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(jaccard(&a, &b).unwrap(), jaccard(&b, &a).unwrap());
        assert_eq!(jaccard(&BinaryMask::empty(3, 3), &BinaryMask::empty(3, 3)).unwrap(), 1.0);
        assert!(matches!(
            jaccard(&BinaryMask::empty(3, 3), &BinaryMask::empty(3, 4)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    fn disc_spec(camera: [f64; 2], motion: [f64; 2]) -> SceneSpec {
        SceneSpec {
            width: 120,
            height: 90,
            background: BackgroundSpec::default(),
            objects: vec![ObjectSpec {
                shape: Shape::Disc { radius: 12.0 },
                center: [40.0, 40.0],
                color: PALETTE[0],
                motion,
                texture: 0.0,
            }],
            camera_motion: camera,
            rng_seed: 3,
        }
    }

    #[test]
    fn still_scene_renders_identical_frames() {
        let mut spec = disc_spec([0.0, 0.0], [0.0, 0.0]);
        spec.background.sensor_noise = 0.0;
        let s = generate_scene(&spec).unwrap();
        assert_eq!(s.img_a, s.img_b);
        assert_eq!(s.gt[0][0], s.gt[0][1]);
    }

    fn centroid(m: &BinaryMask) -> [f64; 2] {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in 0..m.height() {
            for x in 0..m.width() {
                if m.get(x, y) {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1.0;
                }
            }
        }
        [sx / n, sy / n]
    }

    #[test]
    fn object_moves_by_camera_plus_own_motion() {
        let s = generate_scene(&disc_spec([5.0, 5.0], [20.0, 0.0])).unwrap();
        let (a, b) = (centroid(&s.gt[0][0]), centroid(&s.gt[0][1]));
        assert!((b[0] - a[0] - 25.0).abs() < 1e-9 && (b[1] - a[1] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn background_follows_camera() {
        let mut spec = disc_spec([6.0, 3.0], [20.0, 0.0]);
        spec.background.sensor_noise = 0.0;
        let s = generate_scene(&spec).unwrap();
        // far from the object, B(x + 6, y + 3) = A(x, y)
        for (x, y) in [(100, 70), (90, 10), (5, 80)] {
            assert_eq!(s.img_a.get(x, y), s.img_b.get(x + 6, y + 3));
        }
    }

    #[test]
    fn out_of_frame_objects_rejected() {
        assert!(matches!(generate_scene(&disc_spec([0.0, 0.0], [80.0, 0.0])), Err(Error::Spec(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = random_scene_spec(5, &RandomSceneOptions::default()).unwrap();
        assert_eq!(spec, random_scene_spec(5, &RandomSceneOptions::default()).unwrap());
        assert_eq!(generate_scene(&spec).unwrap(), generate_scene(&spec).unwrap());
    }

    #[test]
    fn random_specs_respect_motion_rules() {
        for seed in 0..30 {
            let opts = RandomSceneOptions {
                objects: 1 + (seed as usize % 2),
                ..Default::default()
            };
            let spec = random_scene_spec(seed, &opts).unwrap();
            let cam = spec.camera_motion;
            assert!(cam[0].hypot(cam[1]) <= 10.0 + 1e-9);
            for o in &spec.objects {
                assert!(o.motion[0].hypot(o.motion[1]) >= 15.0 - 1e-9);
                assert!(angle_between(o.motion, cam) >= opts.min_angle);
            }
            generate_scene(&spec).unwrap();
        }
    }

    #[test]
    fn greedy_matching() {
        let a = mask(4, 4, &[(0, 0), (1, 0)]);
        let b = mask(4, 4, &[(3, 3)]);
        assert_eq!(match_scores(&[b.clone(), a.clone()], &[a.clone(), b.clone()]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(match_scores(&[], std::slice::from_ref(&a)).unwrap(), vec![0.0]);
        let empty = BinaryMask::empty(4, 4);
        assert_eq!(match_scores(&[empty], &[a]).unwrap(), vec![0.0]);
    }

    #[test]
    fn report_summary_and_table() {
        let row = |scene: &str, object, image1, image2| EvalRow {
            dataset: "synthetic".into(),
            scene: scene.into(),
            object,
            image1,
            image2,
        };
        let r = EvalReport::from_rows(vec![row("s0", 0, 1.0, 0.5), row("s1", 0, 0.25, 0.75)]);
        assert_eq!(r.mean, 0.625);
        assert_eq!(r.min, 0.25);
        let table = r.to_table();
        assert!(table.contains("Image 1") && table.contains("0.2500"));
        let widths: Vec<usize> = table.lines().take(4).filter(|l| !l.starts_with('-')).map(str::len).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]));
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
