//! Dense patch correspondence with an explicit per-pixel confidence.
//!
//! The field is a randomized nearest-neighbor field: random initialization,
//! then alternating forward/backward scans that propagate neighbors' offsets
//! and try random candidates in an exponentially shrinking window. Patch
//! distance is the sum of squared Lab differences over a square patch, with
//! edge-replicated borders so every pixel of either image is a valid patch
//! center.
//!
//! Confidence combines match quality and local coherence:
//! `exp(-dist / sigma) * coherence`, where coherence is the fraction of the
//! `(2r+1)^2` window (clipped to the image) whose offsets agree with the
//! center offset to within one pixel per component.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::{BinaryMask, ImageLab};
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrParams {
    pub patch_size: usize,
    pub iterations: usize,
    pub rng_seed: u64,
    /// Distance scale of the confidence. `None` uses the field's
    /// [`CorrespondenceField::reference_scale`].
    pub sigma_dist: Option<f64>,
    pub coherence_radius: usize,
}

impl Default for CorrParams {
    fn default() -> Self {
        Self {
            patch_size: 7,
            iterations: 5,
            rng_seed: 0,
            sigma_dist: None,
            coherence_radius: 3,
        }
    }
}

impl CorrParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.patch_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "correspondence patch_size must be odd, got {}",
                self.patch_size
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("correspondence iterations must be >= 1".into()));
        }
        if let Some(s) = self.sigma_dist {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma_dist must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Per-pixel offsets from image A into image B.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceField {
    pub width: usize,
    pub height: usize,
    pub target_width: usize,
    pub target_height: usize,
    pub offset: Vec<(i32, i32)>,
    pub dist: Vec<f64>,
    /// Median patch distance of the random initial field: the typical
    /// distance between unrelated patches of this image pair.
    pub reference_scale: f64,
}

impl CorrespondenceField {
    pub fn offset_at(&self, x: usize, y: usize) -> (i32, i32) {
        self.offset[y * self.width + x]
    }

    pub fn dist_at(&self, x: usize, y: usize) -> f64 {
        self.dist[y * self.width + x]
    }

    pub fn target(&self, x: usize, y: usize) -> (usize, usize) {
        let (dx, dy) = self.offset_at(x, y);
        ((x as i32 + dx) as usize, (y as i32 + dy) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    #[serde(rename = "pA")]
    pub pa: [usize; 2],
    #[serde(rename = "pB")]
    pub pb: [usize; 2],
    #[serde(rename = "conf")]
    pub confidence: f64,
}

/// Sparse high-confidence matches, in row-major order of `pa`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatchSet {
    pub matches: Vec<Match>,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

/// Edge-replicated copy of an image, padded by `pad` on every side.
struct Padded {
    stride: usize,
    pad: usize,
    data: Vec<[f64; 3]>,
}

impl Padded {
    fn new(img: &ImageLab, pad: usize) -> Self {
        let (w, h) = (img.width(), img.height());
        let stride = w + 2 * pad;
        let mut data = Vec::with_capacity(stride * (h + 2 * pad));
        for py in 0..h + 2 * pad {
            let y = py.saturating_sub(pad).min(h - 1);
            for px in 0..stride {
                let x = px.saturating_sub(pad).min(w - 1);
                data.push(img.get(x, y));
            }
        }
        Self { stride, pad, data }
    }
}

struct PatchDistance<'a> {
    a: &'a Padded,
    b: &'a Padded,
    size: usize,
}

impl PatchDistance<'_> {
    /// SSD between the patches centered at `pa` and `pb`; gives up and
    /// returns `f64::INFINITY` once the partial sum reaches `bound`.
    #[inline]
    fn eval(&self, pa: (usize, usize), pb: (usize, usize), bound: f64) -> f64 {
        // centers shift by `pad` in padded coordinates, top-left by `-half`;
        // with pad == half the top-left lands on the unpadded coordinate.
        let mut sum = 0.0;
        for r in 0..self.size {
            let ra = (pa.1 + r) * self.a.stride + pa.0;
            let rb = (pb.1 + r) * self.b.stride + pb.0;
            let row_a = &self.a.data[ra..ra + self.size];
            let row_b = &self.b.data[rb..rb + self.size];
            for (u, v) in row_a.iter().zip(row_b) {
                let d0 = u[0] - v[0];
                let d1 = u[1] - v[1];
                let d2 = u[2] - v[2];
                sum += d0 * d0 + d1 * d1 + d2 * d2;
            }
            if sum >= bound {
                return f64::INFINITY;
            }
        }
        sum
    }
}

pub fn compute_field(
    img_a: &ImageLab,
    img_b: &ImageLab,
    params: &CorrParams,
) -> Result<CorrespondenceField> {
    compute_field_traced(img_a, img_b, params, |_| {})
}

/// Like [`compute_field`], calling `on_pass` with the distance buffer after
/// initialization and after every pass.
pub fn compute_field_traced(
    img_a: &ImageLab,
    img_b: &ImageLab,
    params: &CorrParams,
    mut on_pass: impl FnMut(&[f64]),
) -> Result<CorrespondenceField> {
    params.validate()?;
    let p = params.patch_size;
    for img in [img_a, img_b] {
        if img.width() < p || img.height() < p {
            return Err(Error::Dimension {
                width: img.width(),
                height: img.height(),
                min: p,
            });
        }
    }
    let half = p / 2;
    let pa = Padded::new(img_a, half);
    let pb = Padded::new(img_b, half);
    debug_assert_eq!(pa.pad, half);
    let metric = PatchDistance {
        a: &pa,
        b: &pb,
        size: p,
    };

    let (w, h) = (img_a.width(), img_a.height());
    let (wb, hb) = (img_b.width() as i64, img_b.height() as i64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut target = Vec::with_capacity(w * h);
    let mut dist = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let t = (rng.random_range(0..wb as usize), rng.random_range(0..hb as usize));
            dist.push(metric.eval((x, y), t, f64::INFINITY));
            target.push(t);
        }
    }
    let reference_scale = median(&dist);
    on_pass(&dist);

    let max_radius = wb.max(hb);
    for it in 0..params.iterations {
        let forward = it % 2 == 0;
        let step: i64 = if forward { 1 } else { -1 };
        for yi in 0..h {
            let y = if forward { yi } else { h - 1 - yi };
            for xi in 0..w {
                let x = if forward { xi } else { w - 1 - xi };
                let idx = y * w + x;
                let mut best_t = target[idx];
                let mut best_d = dist[idx];

                // propagation from the already-visited neighbors
                for (nx, ny) in [(x as i64 - step, y as i64), (x as i64, y as i64 - step)] {
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    let (ntx, nty) = target[nidx];
                    let cx = ntx as i64 + (x as i64 - nx);
                    let cy = nty as i64 + (y as i64 - ny);
                    if cx < 0 || cy < 0 || cx >= wb || cy >= hb {
                        continue;
                    }
                    let cand = (cx as usize, cy as usize);
                    if cand == best_t {
                        continue;
                    }
                    let d = metric.eval((x, y), cand, best_d);
                    if d < best_d {
                        best_d = d;
                        best_t = cand;
                    }
                }

                // random search around the current best
                let mut radius = max_radius;
                while radius >= 1 {
                    let cx = (best_t.0 as i64 + rng.random_range(-radius..=radius)).clamp(0, wb - 1);
                    let cy = (best_t.1 as i64 + rng.random_range(-radius..=radius)).clamp(0, hb - 1);
                    let cand = (cx as usize, cy as usize);
                    if cand != best_t {
                        let d = metric.eval((x, y), cand, best_d);
                        if d < best_d {
                            best_d = d;
                            best_t = cand;
                        }
                    }
                    radius /= 2;
                }

                target[idx] = best_t;
                dist[idx] = best_d;
            }
        }
        on_pass(&dist);
    }

    let offset = target
        .iter()
        .enumerate()
        .map(|(i, &(tx, ty))| (tx as i32 - (i % w) as i32, ty as i32 - (i / w) as i32))
        .collect();
    Ok(CorrespondenceField {
        width: w,
        height: h,
        target_width: img_b.width(),
        target_height: img_b.height(),
        offset,
        dist,
        reference_scale,
    })
}

fn sigma_for(field: &CorrespondenceField, params: &CorrParams) -> f64 {
    params.sigma_dist.unwrap_or(field.reference_scale)
}

fn distance_term(dist: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        (-dist / sigma).exp()
    } else if dist == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn coherence(field: &CorrespondenceField, x: usize, y: usize, radius: usize) -> f64 {
    let (ox, oy) = field.offset_at(x, y);
    let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(field.width - 1));
    let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(field.height - 1));
    let mut agree = 0usize;
    for qy in y0..=y1 {
        for qx in x0..=x1 {
            let (qx_off, qy_off) = field.offset_at(qx, qy);
            if (qx_off - ox).abs() <= 1 && (qy_off - oy).abs() <= 1 {
                agree += 1;
            }
        }
    }
    agree as f64 / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64
}

/// Confidence of the match at pixel `(x, y)` of image A, in `[0, 1]`.
pub fn confidence_of(field: &CorrespondenceField, x: usize, y: usize, params: &CorrParams) -> f64 {
    distance_term(field.dist_at(x, y), sigma_for(field, params))
        * coherence(field, x, y, params.coherence_radius)
}

/// Confidence of every pixel, row-major.
pub fn confidence_map(field: &CorrespondenceField, params: &CorrParams) -> Vec<f64> {
    let sigma = sigma_for(field, params);
    let mut out = Vec::with_capacity(field.width * field.height);
    for y in 0..field.height {
        for x in 0..field.width {
            out.push(
                distance_term(field.dist_at(x, y), sigma)
                    * coherence(field, x, y, params.coherence_radius),
            );
        }
    }
    out
}

/// Keeps matches whose source lies in `mask_a`, whose target lies in
/// `mask_b`, and whose confidence exceeds `threshold`. At most `max_matches`
/// are kept, preferring higher confidence and then row-major order.
pub fn filter_matches(
    field: &CorrespondenceField,
    mask_a: &BinaryMask,
    mask_b: &BinaryMask,
    params: &CorrParams,
    threshold: f64,
    max_matches: usize,
) -> Result<MatchSet> {
    if (mask_a.width(), mask_a.height()) != (field.width, field.height)
        || (mask_b.width(), mask_b.height()) != (field.target_width, field.target_height)
    {
        return Err(Error::DimensionMismatch(
            "saliency masks do not match the correspondence field".into(),
        ));
    }
    let conf = confidence_map(field, params);
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for y in 0..field.height {
        for x in 0..field.width {
            let idx = y * field.width + x;
            if !mask_a.get(x, y) || conf[idx] <= threshold {
                continue;
            }
            let (tx, ty) = field.target(x, y);
            if mask_b.get(tx, ty) {
                kept.push((idx, conf[idx]));
            }
        }
    }
    if kept.len() > max_matches {
        // stable: ties stay in row-major order
        kept.sort_by(|a, b| b.1.total_cmp(&a.1));
        kept.truncate(max_matches);
        kept.sort_by_key(|&(idx, _)| idx);
    }
    let matches = kept
        .into_iter()
        .map(|(idx, c)| {
            let (x, y) = (idx % field.width, idx / field.width);
            let (tx, ty) = field.target(x, y);
            Match {
                pa: [x, y],
                pb: [tx, ty],
                confidence: c,
            }
        })
        .collect();
    Ok(MatchSet { matches })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_image(seed: u64, w: usize, h: usize) -> ImageLab {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h)
            .map(|_| {
                [
                    rng.random_range(0.0..100.0),
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-50.0..50.0),
                ]
            })
            .collect();
        ImageLab::new(w, h, data).unwrap()
    }

    fn params(seed: u64) -> CorrParams {
        CorrParams {
            rng_seed: seed,
            ..CorrParams::default()
        }
    }

    #[test]
    fn identity_pair_converges_to_zero_offsets() {
        let img = noise_image(1, 64, 48);
        let field = compute_field(&img, &img, &params(9)).unwrap();
        let good = field
            .offset
            .iter()
            .zip(&field.dist)
            .filter(|(&o, &d)| o == (0, 0) || d == 0.0)
            .count();
        assert!(good as f64 >= 0.95 * (64.0 * 48.0), "{good}");
    }

    #[test]
    fn translation_is_recovered_as_modal_offset() {
        let big = noise_image(2, 100, 50);
        let (w, h) = (80, 50);
        let crop = |dx: usize| {
            let data = (0..w * h).map(|i| big.get(i % w + dx, i / w)).collect();
            ImageLab::new(w, h, data).unwrap()
        };
        // content at A(x) reappears at B(x + 15)
        let a = crop(15);
        let b = crop(0);
        let field = compute_field(&a, &b, &params(4)).unwrap();
        let mut counts = std::collections::HashMap::new();
        for y in 5..h - 5 {
            for x in 5..w - 20 {
                *counts.entry(field.offset_at(x, y)).or_insert(0usize) += 1;
            }
        }
        let modal = counts.into_iter().max_by_key(|&(_, c)| c).unwrap().0;
        assert_eq!(modal, (15, 0));
    }

    #[test]
    fn unrelated_noise_matches_worse_than_identity() {
        let a = noise_image(5, 48, 40);
        let b = noise_image(6, 48, 40);
        let same = compute_field(&a, &a, &params(1)).unwrap();
        let diff = compute_field(&a, &b, &params(1)).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&diff.dist) > mean(&same.dist));
    }

    #[test]
    fn passes_never_increase_distance() {
        let a = noise_image(7, 40, 30);
        let b = noise_image(8, 40, 30);
        let mut prev: Option<Vec<f64>> = None;
        compute_field_traced(&a, &b, &params(3), |d| {
            if let Some(p) = &prev {
                assert!(d.iter().zip(p).all(|(n, o)| n <= o));
            }
            prev = Some(d.to_vec());
        })
        .unwrap();
    }

    #[test]
    fn field_targets_stay_in_bounds() {
        let a = noise_image(9, 30, 20);
        let b = noise_image(10, 25, 22);
        let f = compute_field(&a, &b, &params(2)).unwrap();
        for y in 0..20 {
            for x in 0..30 {
                let (tx, ty) = f.target(x, y);
                assert!(tx < 25 && ty < 22);
            }
        }
        assert!(f.dist.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = noise_image(11, 32, 32);
        let b = noise_image(12, 32, 32);
        assert_eq!(
            compute_field(&a, &b, &params(5)).unwrap(),
            compute_field(&a, &b, &params(5)).unwrap()
        );
    }

    #[test]
    fn identity_interior_confidence_is_high() {
        let img = noise_image(13, 40, 40);
        let p = params(0);
        let field = compute_field(&img, &img, &p).unwrap();
        let c = confidence_of(&field, 20, 20, &p);
        assert!(c >= 0.95, "{c}");
    }

    #[test]
    fn confidence_formula_bounds() {
        let mut field = CorrespondenceField {
            width: 7,
            height: 7,
            target_width: 7,
            target_height: 7,
            offset: vec![(0, 0); 49],
            dist: vec![0.0; 49],
            reference_scale: 2.0,
        };
        let p = CorrParams::default();
        field.dist[24] = 20.0;
        assert!(confidence_of(&field, 3, 3, &p) <= (-10.0f64).exp());
        assert!((-10.0f64).exp() < 1e-4);

        field.dist[24] = 0.0;
        field.offset[24] = (3, -3);
        assert!(confidence_of(&field, 3, 3, &p) <= 1.0 / 49.0 + 1e-12);
    }

    #[test]
    fn filter_respects_threshold_and_masks() {
        let img = noise_image(14, 40, 30);
        let p = params(0);
        let field = compute_field(&img, &img, &p).unwrap();
        let all = BinaryMask::filled(40, 30, true);
        let none = BinaryMask::empty(40, 30);

        assert!(filter_matches(&field, &all, &all, &p, 1.0 + 1e-9, 5000).unwrap().is_empty());
        assert!(filter_matches(&field, &none, &none, &p, 0.8, 5000).unwrap().is_empty());

        let set = filter_matches(&field, &all, &all, &p, 0.8, usize::MAX).unwrap();
        let interior = 34 * 24;
        let covered = set
            .matches
            .iter()
            .filter(|m| (3..37).contains(&m.pa[0]) && (3..27).contains(&m.pa[1]))
            .count();
        assert!(covered as f64 >= 0.9 * interior as f64, "{covered}");
        for m in &set.matches {
            assert!(m.confidence > 0.8 && m.confidence <= 1.0);
            assert!((confidence_of(&field, m.pa[0], m.pa[1], &p) - m.confidence).abs() < 1e-15);
        }
    }

    #[test]
    fn cap_keeps_most_confident_in_row_major_order() {
        let img = noise_image(15, 30, 30);
        let p = params(0);
        let field = compute_field(&img, &img, &p).unwrap();
        let all = BinaryMask::filled(30, 30, true);
        let full = filter_matches(&field, &all, &all, &p, 0.5, usize::MAX).unwrap();
        let capped = filter_matches(&field, &all, &all, &p, 0.5, 100).unwrap();
        assert_eq!(capped.len(), 100);
        let min_kept = capped.matches.iter().map(|m| m.confidence).fold(1.0, f64::min);
        let above = full.matches.iter().filter(|m| m.confidence > min_kept).count();
        assert!(above <= 100);
        assert!(capped.matches.windows(2).all(|w| (w[0].pa[1], w[0].pa[0]) < (w[1].pa[1], w[1].pa[0])));
    }

    #[test]
    fn match_json_uses_short_keys() {
        let set = MatchSet {
            matches: vec![Match {
                pa: [1, 2],
                pb: [3, 4],
                confidence: 0.5,
            }],
        };
        assert_eq!(
            serde_json::to_string(&set).unwrap(),
            r#"[{"pA":[1,2],"pB":[3,4],"conf":0.5}]"#
        );
    }
}
