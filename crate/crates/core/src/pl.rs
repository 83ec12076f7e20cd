//! Piecewise-linear sample helpers shared across modules.

/// Locate `x` in the sorted array `xs`: returns the cell index `i` with
/// `xs[i] <= x <= xs[i+1]`, clamped to the first/last cell.
pub fn locate(xs: &[f64], x: f64) -> usize {
    debug_assert!(xs.len() >= 2);
    match xs.partition_point(|&v| v <= x) {
        0 => 0,
        p if p >= xs.len() => xs.len() - 2,
        p => p - 1,
    }
}

/// Linear interpolation of samples `(xs, ys)` at `x`, linear extrapolation
/// outside the sampled range.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() == 1 {
        return ys[0];
    }
    let i = locate(xs, x);
    let (x0, x1) = (xs[i], xs[i + 1]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Interpolation that clamps to the boundary values outside the range.
pub fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        ys[0]
    } else if x >= xs[xs.len() - 1] {
        ys[ys.len() - 1]
    } else {
        interp(xs, ys, x)
    }
}

/// Trapezoid antiderivative of samples `(xs, ys)`:
/// `out[i] = ∫_{xs[0]}^{xs[i]}`.
pub fn cumtrapz(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..xs.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
        out.push(acc);
    }
    out
}

/// Trapezoid integral of samples.
pub fn trapz(xs: &[f64], ys: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..xs.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    acc
}

/// Evaluate the trapezoid antiderivative `cum` of `(xs, ys)` at an arbitrary
/// point, quadratic within the cell so that it matches the trapezoid rule on
/// sub-intervals.
#[allow(dead_code)]
pub fn eval_cumtrapz(xs: &[f64], ys: &[f64], cum: &[f64], x: f64) -> f64 {
    let i = locate(xs, x);
    let h = xs[i + 1] - xs[i];
    let d = x - xs[i];
    let slope = if h > 0.0 { (ys[i + 1] - ys[i]) / h } else { 0.0 };
    cum[i] + ys[i] * d + 0.5 * slope * d * d
}

/// Leftmost root of a continuous nondecreasing function: the supremum of all
/// `x` with `f(x') < 0` for every `x' < x`, located by bisection on `[lo, hi]`.
/// Requires `f(lo) <= 0 <= f(hi)`.
pub fn bisect_leftmost_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let mut a = lo;
    let mut b = hi;
    if f(a) >= 0.0 {
        return a;
    }
    if f(b) < 0.0 {
        return b;
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Maximum of |a[i] - b[i]|.
pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Strictly increasing check with a tolerance for duplicate knots.
pub fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

/// Merge sorted values, dropping entries closer than `tol` to the previous.
pub fn dedup_sorted(mut xs: Vec<f64>, tol: f64) -> Vec<f64> {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        if out.last().map_or(true, |&l| x - l > tol) {
            out.push(x);
        }
    }
    out
}
