//! Gauss-Legendre rules and an adaptive integrator built on them.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point rule on [-1, 1], by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Debug, Clone)]
pub struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    pub fn integrate(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * self
            .x
            .iter()
            .zip(&self.w)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

/// Adaptive bisection: a panel is accepted once the rule on the whole
/// panel agrees with the rule on its halves to within the panel's share of
/// `tol`. Returns the estimate and the summed error estimate, or `Err`
/// with the error reached when the depth limit is hit.
pub fn adaptive(
    rule: &Rule,
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<(f64, f64), f64> {
    let whole = rule.integrate(f, a, b);
    recurse(rule, f, a, b, whole, tol, max_depth)
}

fn recurse(
    rule: &Rule,
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<(f64, f64), f64> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    let err = (left + right - whole).abs();
    if err <= tol {
        return Ok((left + right, err));
    }
    if depth == 0 || !err.is_finite() {
        return Err(err);
    }
    let (l, el) = recurse(rule, f, a, m, left, 0.5 * tol, depth - 1)?;
    let (r, er) = recurse(rule, f, m, b, right, 0.5 * tol, depth - 1)?;
    Ok((l + r, el + er))
}
