//! Motion-vector matrix and its two-column SVD.
//!
//! Each match contributes one row `pB - pA` to an `N x 2` matrix `W`. When
//! the background dominates the matches, the camera motion is the dominant
//! singular component of `W`; removing it leaves a rank-one residual in which
//! rows of moving objects stand out from the static majority.

use serde::{Deserialize, Serialize};

use crate::correspondence::MatchSet;
use crate::error::{Error, Result};
use crate::stats::{median, otsu_lowest_threshold};

/// Divide-by-zero guard.
pub const EPS: f64 = 1e-12;

/// `sigma2 / sigma1` below which `W` is treated as pure camera motion.
pub const RANK_ONE_RATIO: f64 = 0.02;

/// Default floor (pixels) on `sigma2 / sqrt(N)` used by the pipeline.
/// Integer matches of a sub-pixel camera shift leave an off-axis RMS of about
/// 0.3 px, which the ratio test alone reads as a second motion.
pub const DEFAULT_MIN_RESIDUAL_RMS: f64 = 1.0;

/// Default cosine for [`prune_outliers`].
pub const DEFAULT_COS_MIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionMatrix {
    pub points_a: Vec<[f64; 2]>,
    pub points_b: Vec<[f64; 2]>,
    /// Row `i` is `points_b[i] - points_a[i]`.
    pub w: Vec<[f64; 2]>,
}

impl MotionMatrix {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

pub fn build_motion_matrix(matches: &MatchSet) -> Result<MotionMatrix> {
    if matches.is_empty() {
        return Err(Error::EmptyInput("match set"));
    }
    let to_f = |p: [usize; 2]| [p[0] as f64, p[1] as f64];
    let points_a: Vec<_> = matches.matches.iter().map(|m| to_f(m.pa)).collect();
    let points_b: Vec<_> = matches.matches.iter().map(|m| to_f(m.pb)).collect();
    let w = points_a
        .iter()
        .zip(&points_b)
        .map(|(a, b)| [b[0] - a[0], b[1] - a[1]])
        .collect();
    Ok(MotionMatrix {
        points_a,
        points_b,
        w,
    })
}

/// Thin SVD `W = U diag(d) V^T` of an `N x 2` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd2 {
    /// `N x 2`, row-major. For `N == 1` the second column is zero.
    pub u: Vec<[f64; 2]>,
    /// `d[0] >= d[1] >= 0`.
    pub d: [f64; 2],
    /// Right singular vectors as columns: `v[0]` and `v[1]`.
    pub v: [[f64; 2]; 2],
}

impl Svd2 {
    pub fn reconstruct(&self) -> Vec<[f64; 2]> {
        self.u
            .iter()
            .map(|u| {
                let mut row = [0.0; 2];
                for k in 0..2 {
                    for (c, r) in row.iter_mut().enumerate() {
                        *r += u[k] * self.d[k] * self.v[k][c];
                    }
                }
                row
            })
            .collect()
    }
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm2(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Dominant unit eigenvector of the symmetric matrix `[[a, b], [b, c]]`.
fn dominant_eigenvector(a: f64, b: f64, c: f64) -> [f64; 2] {
    let half_diff = 0.5 * (a - c);
    let lambda = 0.5 * (a + c) + half_diff.hypot(b);
    // (A - lambda I) v = 0 gives two candidate directions; use the longer one
    let c1 = [b, lambda - a];
    let c2 = [lambda - c, b];
    let cand = if norm2(c1) >= norm2(c2) { c1 } else { c2 };
    let n = norm2(cand);
    let mut v = if n > 0.0 {
        [cand[0] / n, cand[1] / n]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    v
}

/// Unit vector orthogonal to `u` (length `N >= 2`).
fn orthogonal_complement(u: &[f64]) -> Vec<f64> {
    let j = u
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(j, _)| j)
        .unwrap();
    let mut e: Vec<f64> = u.iter().map(|&x| -u[j] * x).collect();
    e[j] += 1.0;
    let n = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    e.iter().map(|x| x / n).collect()
}

/// SVD of an `N x 2` matrix through the closed-form eigendecomposition of
/// `W^T W`. Singular values are taken as `|W v_k|`; the second left vector
/// is orthogonalized against the first, and zero-valued columns are completed
/// to an orthonormal set.
pub fn svd2(w: &[[f64; 2]]) -> Svd2 {
    let n = w.len();
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for r in w {
        a += r[0] * r[0];
        b += r[0] * r[1];
        c += r[1] * r[1];
    }
    let v1 = dominant_eigenvector(a, b, c);
    let v2 = [-v1[1], v1[0]];

    let wv1: Vec<f64> = w.iter().map(|r| dot2(*r, v1)).collect();
    let mut wv2: Vec<f64> = w.iter().map(|r| dot2(*r, v2)).collect();
    let s1 = wv1.iter().map(|x| x * x).sum::<f64>().sqrt();

    let u1: Vec<f64> = if s1 > 0.0 {
        wv1.iter().map(|x| x / s1).collect()
    } else {
        (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
    };
    let proj: f64 = u1.iter().zip(&wv2).map(|(p, q)| p * q).sum();
    for (q, p) in wv2.iter_mut().zip(&u1) {
        *q -= proj * p;
    }
    let s2 = wv2.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u2: Vec<f64> = if n < 2 {
        vec![0.0; n]
    } else if s2 > 1e-13 * s1 {
        wv2.iter().map(|x| x / s2).collect()
    } else {
        orthogonal_complement(&u1)
    };

    let mut svd = Svd2 {
        u: u1.iter().zip(&u2).map(|(&p, &q)| [p, q]).collect(),
        d: [s1, s2],
        v: [v1, v2],
    };
    if svd.d[1] > svd.d[0] {
        // rounding can only swap nearly equal values
        svd.d.swap(0, 1);
        svd.v.swap(0, 1);
        for r in svd.u.iter_mut() {
            r.swap(0, 1);
        }
    }
    svd
}

/// Matches flagged as belonging to moving objects.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicPoints {
    pub indices: Vec<usize>,
    /// Aligned with `indices`.
    pub residual_norms: Vec<f64>,
}

impl DynamicPoints {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Per-row residual after removing the dominant (camera) component of `W`,
/// measured from the median residual row so the static majority sits at 0.
pub fn static_residuals(w: &[[f64; 2]], svd: &Svd2) -> Vec<f64> {
    let v1 = svd.v[0];
    let residual: Vec<[f64; 2]> = w
        .iter()
        .zip(&svd.u)
        .map(|(r, u)| {
            let s = svd.d[0] * u[0];
            [r[0] - s * v1[0], r[1] - s * v1[1]]
        })
        .collect();
    let xs: Vec<f64> = residual.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = residual.iter().map(|r| r[1]).collect();
    let reference = [median(&xs), median(&ys)];
    residual
        .iter()
        .map(|r| norm2([r[0] - reference[0], r[1] - reference[1]]))
        .collect()
}

/// Flags rows whose residual is at or above Otsu's threshold (64 bins).
/// Returns no points when `W` is numerically rank one.
pub fn split_static_dynamic(m: &MotionMatrix) -> Result<DynamicPoints> {
    split_static_dynamic_k(m, 1, 0.0)
}

/// Like [`split_static_dynamic`] for `objects` moving objects: the residual
/// histogram is split into `objects + 1` classes and every row above the
/// lowest threshold is dynamic. Objects moving at different speeds then all
/// land above it.
///
/// The scene is also static when the RMS of the second singular component,
/// `sigma2 / sqrt(N)`, is below `min_residual_rms` pixels.
pub fn split_static_dynamic_k(m: &MotionMatrix, objects: usize, min_residual_rms: f64) -> Result<DynamicPoints> {
    if m.len() < 3 {
        return Err(Error::TooFewMatches(m.len()));
    }
    let svd = svd2(&m.w);
    if svd.d[1] / svd.d[0].max(EPS) < RANK_ONE_RATIO || svd.d[1] / (m.len() as f64).sqrt() < min_residual_rms {
        return Ok(DynamicPoints::default());
    }
    let norms = static_residuals(&m.w, &svd);
    let Some(threshold) = otsu_lowest_threshold(&norms, 64, objects.max(1) + 1) else {
        return Ok(DynamicPoints::default());
    };
    let mut out = DynamicPoints::default();
    for (i, &r) in norms.iter().enumerate() {
        if r >= threshold {
            out.indices.push(i);
            out.residual_norms.push(r);
        }
    }
    Ok(out)
}

/// Keeps dynamic rows aligned with the dominant direction of the dynamic
/// submatrix: `|<w_i, v1>| / |w_i| >= cos_min`. Never adds indices.
pub fn prune_outliers(m: &MotionMatrix, d: &DynamicPoints, cos_min: f64) -> DynamicPoints {
    if d.is_empty() {
        return d.clone();
    }
    let rows: Vec<[f64; 2]> = d.indices.iter().map(|&i| m.w[i]).collect();
    if rows.iter().all(|r| *r == rows[0]) {
        return d.clone();
    }
    let v1 = svd2(&rows).v[0];
    let mut out = DynamicPoints::default();
    for ((&i, &res), row) in d.indices.iter().zip(&d.residual_norms).zip(&rows) {
        if dot2(*row, v1).abs() / norm2(*row).max(EPS) >= cos_min {
            out.indices.push(i);
            out.residual_norms.push(res);
        }
    }
    out
}
