//! Patch-distinctness saliency.
//!
//! A patch is salient when it is unusual in two ways at once: its pattern is
//! far from the average patch in the principal-component basis of all
//! sampled patches (L1 norm of its PCA coordinates), and its mean color is far
//! from the image's mean color. Patches are sampled on a stride grid, scored,
//! and splatted back to pixels by averaging the scores of every patch that
//! covers the pixel.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::{BinaryMask, ImageLab};
use crate::stats::otsu_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaliencyParams {
    /// Odd patch side, at least 3.
    pub patch_size: usize,
    pub stride: usize,
    /// Weight of the Gaussian center prior in `[0, 1]`; 0 disables it.
    pub center_prior_weight: f64,
}

impl Default for SaliencyParams {
    fn default() -> Self {
        Self {
            patch_size: 7,
            stride: 4,
            center_prior_weight: 0.25,
        }
    }
}

impl SaliencyParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size < 3 || self.patch_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "saliency patch_size must be odd and >= 3, got {}",
                self.patch_size
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("saliency stride must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.center_prior_weight) {
            return Err(Error::Config(format!(
                "center_prior_weight must be in [0, 1], got {}",
                self.center_prior_weight
            )));
        }
        Ok(())
    }
}

/// Per-pixel saliency in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: usize,
    pub height: usize,
    pub score: Vec<f64>,
}

impl SaliencyMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.score[y * self.width + x]
    }
}

/// Top-left patch offsets along one axis: every `stride`, plus the last valid
/// offset so the far border is covered.
fn grid_offsets(len: usize, patch: usize, stride: usize) -> Vec<usize> {
    let last = len - patch;
    let mut v: Vec<usize> = (0..=last).step_by(stride).collect();
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

pub fn compute_saliency(img: &ImageLab, params: &SaliencyParams) -> Result<SaliencyMap> {
    params.validate()?;
    let (w, h, p) = (img.width(), img.height(), params.patch_size);
    if w < p || h < p {
        return Err(Error::Dimension {
            width: w,
            height: h,
            min: p,
        });
    }

    let xs = grid_offsets(w, p, params.stride);
    let ys = grid_offsets(h, p, params.stride);
    let n = xs.len() * ys.len();
    let dim = p * p * 3;

    let image_mean = {
        let mut m = [0.0; 3];
        for px in img.data() {
            for c in 0..3 {
                m[c] += px[c];
            }
        }
        m.map(|v| v / img.data().len() as f64)
    };

    let mut patches = DMatrix::<f64>::zeros(n, dim);
    let mut color_term = Vec::with_capacity(n);
    let mut origins = Vec::with_capacity(n);
    for &y0 in &ys {
        for &x0 in &xs {
            let row = origins.len();
            let mut mean = [0.0; 3];
            let mut col = 0;
            for y in y0..y0 + p {
                for x in x0..x0 + p {
                    let px = img.get(x, y);
                    for c in 0..3 {
                        patches[(row, col)] = px[c];
                        mean[c] += px[c];
                        col += 1;
                    }
                }
            }
            let d2: f64 = (0..3)
                .map(|c| {
                    let d = mean[c] / (p * p) as f64 - image_mean[c];
                    d * d
                })
                .sum();
            color_term.push(d2.sqrt());
            origins.push((x0, y0));
        }
    }

    let avg_patch = patches.row_mean();
    for mut row in patches.row_iter_mut() {
        row -= &avg_patch;
    }
    let cov = patches.transpose() * &patches / n as f64;
    let basis = SymmetricEigen::new(cov).eigenvectors;
    let coords = &patches * basis;
    let pattern_term: Vec<f64> = coords
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum())
        .collect();

    let mut acc = vec![0.0; w * h];
    let mut hits = vec![0u32; w * h];
    for (i, &(x0, y0)) in origins.iter().enumerate() {
        let s = pattern_term[i] * color_term[i];
        for y in y0..y0 + p {
            let base = y * w;
            for x in x0..x0 + p {
                acc[base + x] += s;
                hits[base + x] += 1;
            }
        }
    }
    let mut score: Vec<f64> = acc
        .iter()
        .zip(&hits)
        .map(|(&a, &k)| if k > 0 { a / k as f64 } else { 0.0 })
        .collect();

    let wgt = params.center_prior_weight;
    if wgt > 0.0 {
        let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        let (sx, sy) = (w as f64 / 3.0, h as f64 / 3.0);
        for y in 0..h {
            for x in 0..w {
                let dx = (x as f64 - cx) / sx;
                let dy = (y as f64 - cy) / sy;
                let g = (-0.5 * (dx * dx + dy * dy)).exp();
                score[y * w + x] *= (1.0 - wgt) + wgt * g;
            }
        }
    }

    normalize(&mut score);
    Ok(SaliencyMap {
        width: w,
        height: h,
        score,
    })
}

/// Min-max normalization; a constant map becomes all zeros.
fn normalize(score: &mut [f64]) {
    let (lo, hi) = score
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 1e-12 * hi.abs().max(1.0)) {
        score.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    for v in score.iter_mut() {
        *v = (*v - lo) / range;
    }
    // exact 1 at the maximum regardless of rounding
    for v in score.iter_mut() {
        if *v > 1.0 - 1e-15 {
            *v = 1.0;
        }
    }
}

/// Binarizes a saliency map at Otsu's threshold (256 bins). A constant map
/// yields an all-false mask.
pub fn saliency_mask(map: &SaliencyMap) -> BinaryMask {
    match otsu_threshold(&map.score, 256) {
        Some(t) => BinaryMask::new(
            map.width,
            map.height,
            map.score.iter().map(|&s| s >= t).collect(),
        )
        .expect("map dimensions are consistent"),
        None => BinaryMask::empty(map.width, map.height),
    }
}
