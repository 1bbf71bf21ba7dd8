//! Brute-force reference implementations used only by tests. None of these
//! share code with the library paths they check.
#![allow(dead_code)]

use dynseg_core::maxflow::FlowNetwork;

/// Minimum over all 2^n labelings, with cut capacities summed edge by edge.
pub fn exhaustive_min_cut(net: &FlowNetwork) -> f64 {
    let n = net.terminal.len();
    assert!(n <= 16);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        // bit set = node on the source side
        let src = |i: usize| mask & (1 << i) != 0;
        let mut cap = 0.0;
        for (i, &(s, t)) in net.terminal.iter().enumerate() {
            cap += if src(i) { t } else { s };
        }
        for e in &net.edges {
            if src(e.i) && !src(e.j) {
                cap += e.cap_ij;
            }
            if src(e.j) && !src(e.i) {
                cap += e.cap_ji;
            }
        }
        best = best.min(cap);
    }
    best
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Hull by edge testing: (p, q) is a CCW hull edge iff every other point is
/// strictly to its left. Assumes general position. Returned CCW starting at
/// the lowest (then leftmost) vertex.
pub fn brute_force_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut succ = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let all_left = (0..n)
                .filter(|&k| k != i && k != j)
                .all(|k| orient(points[i], points[j], points[k]) > 0.0);
            if all_left {
                succ[i] = Some(j);
            }
        }
    }
    let start = (0..n)
        .filter(|&i| succ[i].is_some())
        .min_by(|&a, &b| {
            points[a][1]
                .total_cmp(&points[b][1])
                .then(points[a][0].total_cmp(&points[b][0]))
        })
        .unwrap();
    let mut hull = vec![points[start]];
    let mut cur = succ[start].unwrap();
    while cur != start {
        hull.push(points[cur]);
        cur = succ[cur].unwrap();
    }
    hull
}

/// Smallest enclosing rectangle among those with a side on a hull edge,
/// each candidate computed by projecting every point.
pub fn brute_force_min_rect_area(hull: &[[f64; 2]], points: &[[f64; 2]]) -> f64 {
    let n = hull.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let v = [-u[1], u[0]];
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            let d = [p[0] - a[0], p[1] - a[1]];
            let pu = d[0] * u[0] + d[1] * u[1];
            let pv = d[0] * v[0] + d[1] * v[1];
            lo_u = lo_u.min(pu);
            hi_u = hi_u.max(pu);
            lo_v = lo_v.min(pv);
            hi_v = hi_v.max(pv);
        }
        best = best.min((hi_u - lo_u) * (hi_v - lo_v));
    }
    best
}

/// Singular values of an N x 2 matrix by one-sided Jacobi rotations on its
/// columns, descending.
pub fn jacobi_singular_values(w: &[[f64; 2]]) -> [f64; 2] {
    let mut a: Vec<f64> = w.iter().map(|r| r[0]).collect();
    let mut b: Vec<f64> = w.iter().map(|r| r[1]).collect();
    for _ in 0..30 {
        let alpha: f64 = a.iter().map(|x| x * x).sum();
        let beta: f64 = b.iter().map(|x| x * x).sum();
        let gamma: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
            break;
        }
        let zeta = (beta - alpha) / (2.0 * gamma);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = c * t;
        for (x, y) in a.iter_mut().zip(b.iter_mut()) {
            let (xa, yb) = (*x, *y);
            *x = c * xa - s * yb;
            *y = s * xa + c * yb;
        }
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na >= nb {
        [na, nb]
    } else {
        [nb, na]
    }
}

/// Analytic rasterization count of a disc: pixels whose centers (integer
/// coordinates) lie within `r` of `(cx, cy)`, counted column by column.
pub fn disc_pixel_count(cx: f64, cy: f64, r: f64, width: usize, height: usize) -> usize {
    let mut count = 0;
    for x in 0..width {
        let dx = x as f64 - cx;
        if dx.abs() > r {
            continue;
        }
        let half = (r * r - dx * dx).sqrt();
        let lo = (cy - half).ceil().max(0.0) as i64;
        let hi = (cy + half).floor().min(height as f64 - 1.0) as i64;
        if hi >= lo {
            count += (hi - lo + 1) as usize;
        }
    }
    count
}
