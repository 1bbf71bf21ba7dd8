//! Box-initialized GrabCut: alternating Gaussian-mixture color models and
//! exact minimum cuts on an 8-connected pixel graph.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::kmeans;
use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::imageio::{BinaryMask, ImageLab};
use crate::maxflow::{max_flow, FlowNetwork, Side};

/// Terminal capacity that pins a pixel to the background.
pub const LARGE: f64 = 1e9;
/// Lower bound on any component likelihood.
pub const LIKELIHOOD_FLOOR: f64 = 1e-10;
/// Added to every covariance diagonal.
pub const COV_REGULARIZER: f64 = 1e-3;

const COLOR_KMEANS_ITERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrabCutParams {
    pub gmm_k: usize,
    pub gamma: f64,
    pub max_iters: usize,
    /// Stop once fewer than this fraction of box pixels change label.
    pub conv_tol: f64,
    pub rng_seed: u64,
}

impl Default for GrabCutParams {
    fn default() -> Self {
        GrabCutParams {
            gmm_k: 5,
            gamma: 50.0,
            max_iters: 5,
            conv_tol: 0.001,
            rng_seed: 0,
        }
    }
}

impl GrabCutParams {
    pub fn validate(&self) -> Result<()> {
        if self.gmm_k == 0 {
            return Err(Error::Config("gmm_k must be >= 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.conv_tol) {
            return Err(Error::Config("conv_tol must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    DefiniteBg,
    ProbableBg,
    ProbableFg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trimap {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl Trimap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn foreground(&self) -> BinaryMask {
        let bits = self.labels.iter().map(|&l| l == Label::ProbableFg).collect();
        BinaryMask::new(self.width, self.height, bits).expect("matching length")
    }
}

/// Inside the inclusive box is probable foreground, everything else is
/// fixed background.
pub fn init_trimap(b: &Aabb, width: usize, height: usize) -> Result<Trimap> {
    let (x0, y0) = (b.x_min.max(0.0).ceil(), b.y_min.max(0.0).ceil());
    let x1 = b.x_max.min(width as f64 - 1.0).floor();
    let y1 = b.y_max.min(height as f64 - 1.0).floor();
    if width == 0 || height == 0 || x1 < x0 || y1 < y0 || !(x0.is_finite() && y1.is_finite()) {
        return Err(Error::EmptyBox);
    }
    let (x0, y0, x1, y1) = (x0 as usize, y0 as usize, x1 as usize, y1 as usize);
    let mut labels = vec![Label::DefiniteBg; width * height];
    for y in y0..=y1 {
        labels[y * width + x0..=y * width + x1].fill(Label::ProbableFg);
    }
    Ok(Trimap {
        width,
        height,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 3]>,
    pub covariances: Vec<[[f64; 3]; 3]>,
    inverses: Vec<Matrix3<f64>>,
    /// `-ln(weight) + 0.5 ln((2 pi)^3 det)` per component.
    offsets: Vec<f64>,
}

impl Gmm {
    /// One M-step from hard component assignments.
    fn from_assignments(colors: &[[f64; 3]], comp: &[usize], k: usize) -> Gmm {
        let mut counts = vec![0usize; k];
        let mut sums = vec![Vector3::zeros(); k];
        for (z, &c) in colors.iter().zip(comp) {
            counts[c] += 1;
            sums[c] += Vector3::from(*z);
        }
        let means: Vec<Vector3<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| if n > 0 { s / n as f64 } else { Vector3::zeros() })
            .collect();
        let mut scatter = vec![Matrix3::zeros(); k];
        for (z, &c) in colors.iter().zip(comp) {
            let d = Vector3::from(*z) - means[c];
            scatter[c] += d * d.transpose();
        }
        let total = colors.len() as f64;
        let mut gmm = Gmm {
            weights: Vec::with_capacity(k),
            means: Vec::with_capacity(k),
            covariances: Vec::with_capacity(k),
            inverses: Vec::with_capacity(k),
            offsets: Vec::with_capacity(k),
        };
        let ln_2pi3 = 3.0 * std::f64::consts::TAU.ln();
        for c in 0..k {
            let n = counts[c].max(1) as f64;
            let cov = scatter[c] / n + Matrix3::identity() * COV_REGULARIZER;
            let w = counts[c] as f64 / total;
            let det = cov.determinant();
            gmm.weights.push(w);
            gmm.means.push(means[c].into());
            gmm.covariances.push(cov.transpose().into());
            gmm.inverses.push(cov.try_inverse().expect("regularized covariance is invertible"));
            gmm.offsets.push(-w.ln() + 0.5 * (ln_2pi3 + det.ln()));
        }
        gmm
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    /// `-ln(weight * density)` of one component; infinite for empty ones.
    pub fn component_cost(&self, c: usize, z: [f64; 3]) -> f64 {
        let d = Vector3::from(z) - Vector3::from(self.means[c]);
        self.offsets[c] + 0.5 * (d.transpose() * self.inverses[c] * d)[0]
    }

    /// Lowest-cost component; the lowest index wins ties.
    pub fn best_component(&self, z: [f64; 3]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for c in 0..self.k() {
            let cost = self.component_cost(c, z);
            if cost < best.1 {
                best = (c, cost);
            }
        }
        best
    }

    /// Data cost of a color: the best component's negative log likelihood,
    /// with the likelihood floored.
    pub fn cost(&self, z: [f64; 3]) -> f64 {
        self.best_component(z).1.min(-LIKELIHOOD_FLOOR.ln())
    }
}

fn split_colors(img: &ImageLab, fg: impl Fn(usize) -> bool) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let mut f = Vec::new();
    let mut b = Vec::new();
    for (i, &z) in img.data().iter().enumerate() {
        if fg(i) {
            f.push(z);
        } else {
            b.push(z);
        }
    }
    (f, b)
}

fn kmeans_init(colors: &[[f64; 3]], k: usize, seed: u64) -> Result<Gmm> {
    let clustering = kmeans(colors, k, seed, COLOR_KMEANS_ITERS)?;
    Ok(Gmm::from_assignments(colors, &clustering.labels, k))
}

/// Foreground model from probable-foreground pixels, background model from
/// the rest, each started from seeded k-means on colors.
pub fn fit_gmms(img: &ImageLab, trimap: &Trimap, k: usize, seed: u64) -> Result<(Gmm, Gmm)> {
    check_dims(img, trimap)?;
    let (fg, bg) = split_colors(img, |i| trimap.labels[i] == Label::ProbableFg);
    let got = fg.len().min(bg.len());
    if got < k || k == 0 {
        return Err(Error::TooFewPixels { needed: k.max(1), got });
    }
    Ok((kmeans_init(&fg, k, seed)?, kmeans_init(&bg, k, seed.wrapping_add(1))?))
}

fn check_dims(img: &ImageLab, trimap: &Trimap) -> Result<()> {
    if img.width() != trimap.width || img.height() != trimap.height {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs trimap {}x{}",
            img.width(),
            img.height(),
            trimap.width,
            trimap.height
        )));
    }
    Ok(())
}

/// Precomputed 8-connected contrast-sensitive pairwise weights.
struct Smoothness {
    beta: f64,
    edges: Vec<(usize, usize, f64)>,
}

fn neighbor_pairs(width: usize, height: usize) -> Vec<(usize, usize, f64)> {
    let mut pairs = Vec::with_capacity(width * height * 4);
    let diag = std::f64::consts::SQRT_2;
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if x + 1 < width {
                pairs.push((i, i + 1, 1.0));
            }
            if y + 1 < height {
                pairs.push((i, i + width, 1.0));
                if x + 1 < width {
                    pairs.push((i, i + width + 1, diag));
                }
                if x > 0 {
                    pairs.push((i, i + width - 1, diag));
                }
            }
        }
    }
    pairs
}

fn sq_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|c| (a[c] - b[c]).powi(2)).sum()
}

/// `1 / (2 mean ||z_i - z_j||^2)` over 8-neighbor pairs, or 0 when the image
/// has no contrast at all.
pub fn contrast_beta(img: &ImageLab) -> f64 {
    let pairs = neighbor_pairs(img.width(), img.height());
    beta_of(img, &pairs)
}

fn beta_of(img: &ImageLab, pairs: &[(usize, usize, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let z = img.data();
    let mean = pairs.iter().map(|&(i, j, _)| sq_dist(z[i], z[j])).sum::<f64>() / pairs.len() as f64;
    if mean > 0.0 {
        1.0 / (2.0 * mean)
    } else {
        0.0
    }
}

impl Smoothness {
    fn new(img: &ImageLab, gamma: f64) -> Smoothness {
        let mut edges = neighbor_pairs(img.width(), img.height());
        let beta = beta_of(img, &edges);
        let z = img.data();
        for e in edges.iter_mut() {
            e.2 = gamma * (-beta * sq_dist(z[e.0], z[e.1])).exp() / e.2;
        }
        Smoothness { beta, edges }
    }
}

/// Per-pixel `(bg cost, fg cost)`; fixed background pixels get `(0, LARGE)`
/// so that labeling them foreground is prohibitive.
fn data_terms(img: &ImageLab, trimap: &Trimap, fg: &Gmm, bg: &Gmm) -> Vec<(f64, f64)> {
    img.data()
        .par_iter()
        .zip(trimap.labels.par_iter())
        .map(|(&z, &l)| {
            if l == Label::DefiniteBg {
                (0.0, LARGE)
            } else {
                (bg.cost(z), fg.cost(z))
            }
        })
        .collect()
}

fn assemble(terms: &[(f64, f64)], smooth: &Smoothness) -> FlowNetwork {
    let mut net = FlowNetwork::new(terms.len());
    for (i, &(cost_bg, cost_fg)) in terms.iter().enumerate() {
        // shifting both terminals by the same amount keeps the minimizer and
        // makes negative log likelihoods non-negative
        let m = cost_bg.min(cost_fg);
        net.set_terminal(i, cost_bg - m, cost_fg - m);
    }
    for &(i, j, w) in &smooth.edges {
        net.add_edge(i, j, w, w);
    }
    net
}

/// Graph whose source side is foreground: cutting a pixel from the source
/// pays its background cost, cutting it from the sink pays its foreground
/// cost. Terminal pairs are shifted per pixel so both stay non-negative.
pub fn build_energy_graph(
    img: &ImageLab,
    trimap: &Trimap,
    fg: &Gmm,
    bg: &Gmm,
    params: &GrabCutParams,
) -> Result<FlowNetwork> {
    check_dims(img, trimap)?;
    let smooth = Smoothness::new(img, params.gamma);
    Ok(assemble(&data_terms(img, trimap, fg, bg), &smooth))
}

fn energy(terms: &[(f64, f64)], smooth: &Smoothness, fg: &[bool]) -> f64 {
    let data: f64 = terms
        .iter()
        .zip(fg)
        .map(|(&(cost_bg, cost_fg), &f)| if f { cost_fg } else { cost_bg })
        .sum();
    let pair: f64 = smooth
        .edges
        .iter()
        .filter(|&&(i, j, _)| fg[i] != fg[j])
        .map(|e| e.2)
        .sum();
    data + pair
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrabCutOutput {
    pub mask: BinaryMask,
    /// Set when foreground and background could not be told apart.
    pub degenerate: bool,
    /// Total energy after each accepted cut.
    pub energies: Vec<f64>,
    pub iterations: usize,
    pub beta: f64,
}

fn refit(colors: &[[f64; 3]], prev: &Gmm, k: usize, seed: u64) -> Result<Gmm> {
    let k = k.min(colors.len());
    if prev.k() != k {
        return kmeans_init(colors, k, seed);
    }
    let comp: Vec<usize> = colors.iter().map(|&z| prev.best_component(z).0).collect();
    Ok(Gmm::from_assignments(colors, &comp, k))
}

/// Segments the object inside `b`. Every pixel outside the box stays
/// background; an iteration that would raise the energy is rejected.
pub fn run_grabcut(img: &ImageLab, b: &Aabb, params: &GrabCutParams) -> Result<GrabCutOutput> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let mut trimap = init_trimap(b, w, h)?;
    let box_mask = trimap.foreground();
    let free = box_mask.count();
    let smooth = Smoothness::new(img, params.gamma);
    let degenerate = |mask: BinaryMask| GrabCutOutput {
        mask,
        degenerate: true,
        energies: Vec::new(),
        iterations: 0,
        beta: smooth.beta,
    };

    let first = img.data()[0];
    if free == w * h || img.data().iter().all(|&z| z == first) {
        return Ok(degenerate(box_mask));
    }

    let mut fg_mask: Vec<bool> = box_mask.bits().to_vec();
    let (fg_colors, bg_colors) = split_colors(img, |i| fg_mask[i]);
    let k = params.gmm_k;
    let mut fg = kmeans_init(&fg_colors, k.min(fg_colors.len()), params.rng_seed)?;
    let mut bg = kmeans_init(&bg_colors, k.min(bg_colors.len()), params.rng_seed.wrapping_add(1))?;

    let mut energies = Vec::new();
    let mut iterations = 0;
    for iter in 0..params.max_iters {
        if iter > 0 {
            let (fg_colors, bg_colors) = split_colors(img, |i| fg_mask[i]);
            if fg_colors.is_empty() {
                break;
            }
            fg = refit(&fg_colors, &fg, k, params.rng_seed)?;
            bg = refit(&bg_colors, &bg, k, params.rng_seed.wrapping_add(1))?;
        }
        let terms = data_terms(img, &trimap, &fg, &bg);
        if let Some(&last) = energies.last() {
            // the refit alone must not make the current labeling worse
            let e = energy(&terms, &smooth, &fg_mask);
            if e > last + 1e-9 * f64::abs(last).max(1.0) {
                break;
            }
        }
        let cut = max_flow(&assemble(&terms, &smooth));
        let next: Vec<bool> = cut.side.iter().map(|&s| s == Side::SourceSide).collect();
        let e = energy(&terms, &smooth, &next);
        let changed = next.iter().zip(&fg_mask).filter(|(a, b)| a != b).count();
        fg_mask = next;
        for (l, &f) in trimap.labels.iter_mut().zip(&fg_mask) {
            if *l != Label::DefiniteBg {
                *l = if f { Label::ProbableFg } else { Label::ProbableBg };
            }
        }
        energies.push(e);
        iterations += 1;
        if (changed as f64) < params.conv_tol * free as f64 || !fg_mask.iter().any(|&f| f) {
            break;
        }
    }

    let mask = BinaryMask::new(w, h, fg_mask).expect("matching length");
    let empty = mask.is_empty();
    Ok(GrabCutOutput {
        mask,
        degenerate: empty,
        energies,
        iterations,
        beta: smooth.beta,
    })
}
