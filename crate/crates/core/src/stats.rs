//! Small numeric helpers shared by several stages.

/// Otsu's threshold over a `bins`-bin histogram spanning `[min, max]` of the
/// finite values. Samples `>= threshold` form the upper class.
///
/// Returns `None` when there is no variation. When several splits share the
/// maximal between-class variance the middle one is used.
pub fn otsu_threshold(values: &[f64], bins: usize) -> Option<f64> {
    assert!(bins >= 2);
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return None;
    }
    let width = (hi - lo) / bins as f64;
    let mut hist = vec![0u64; bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        hist[b] += 1;
    }
    let total: u64 = hist.iter().sum();
    let center = |b: usize| lo + (b as f64 + 0.5) * width;
    let sum_all: f64 = hist.iter().enumerate().map(|(b, &c)| c as f64 * center(b)).sum();

    let mut best = f64::NEG_INFINITY;
    let mut best_first = 0;
    let mut best_last = 0;
    let (mut w0, mut sum0) = (0u64, 0.0);
    for k in 0..bins - 1 {
        w0 += hist[k];
        sum0 += hist[k] as f64 * center(k);
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1) * (m0 - m1);
        let tol = 1e-12 * between.abs();
        if best == f64::NEG_INFINITY || between > best + tol {
            best = between;
            best_first = k;
            best_last = k;
        } else if (between - best).abs() <= tol {
            best_last = k;
        }
    }
    if best == f64::NEG_INFINITY {
        return None;
    }
    let k = (best_first + best_last) / 2;
    Some(lo + (k + 1) as f64 * width)
}

/// Multi-level Otsu: splits the `bins`-bin histogram into `classes`
/// contiguous non-empty classes maximizing the between-class variance and
/// returns the lowest of the thresholds. Two classes is plain
/// [`otsu_threshold`]; classes beyond the number of occupied bins are
/// dropped.
pub fn otsu_lowest_threshold(values: &[f64], bins: usize, classes: usize) -> Option<f64> {
    assert!(classes >= 2);
    if classes == 2 {
        return otsu_threshold(values, bins);
    }
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return None;
    }
    let width = (hi - lo) / bins as f64;
    let mut hist = vec![0u64; bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        hist[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    let classes = classes.min(occupied);
    if classes == 2 {
        return otsu_threshold(values, bins);
    }
    let mut count = vec![0.0; bins + 1];
    let mut sum = vec![0.0; bins + 1];
    for b in 0..bins {
        let center = lo + (b as f64 + 0.5) * width;
        count[b + 1] = count[b] + hist[b] as f64;
        sum[b + 1] = sum[b] + hist[b] as f64 * center;
    }
    // score of the class covering bins [a, b)
    let score = |a: usize, b: usize| {
        let n = count[b] - count[a];
        if n > 0.0 {
            let s = sum[b] - sum[a];
            s * s / n
        } else {
            f64::NEG_INFINITY
        }
    };
    // best[c][b]: first b bins split into c + 1 classes; from[c][b]: start of the last class
    let mut best = vec![vec![f64::NEG_INFINITY; bins + 1]; classes];
    let mut from = vec![vec![0usize; bins + 1]; classes];
    for b in 1..=bins {
        best[0][b] = score(0, b);
    }
    for c in 1..classes {
        for b in c + 1..=bins {
            for a in c..b {
                let v = best[c - 1][a] + score(a, b);
                if v > best[c][b] {
                    best[c][b] = v;
                    from[c][b] = a;
                }
            }
        }
    }
    let mut b = bins;
    for c in (1..classes).rev() {
        b = from[c][b];
    }
    Some(lo + b as f64 * width)
}

/// Median of a non-empty slice (mean of the two central values for even
/// lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
