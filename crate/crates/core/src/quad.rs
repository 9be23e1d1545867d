//! Scalar quadrature and interpolation helpers.

use crate::error::{Error, Result};

/// Adaptive Simpson integration of `f` over `[a, b]` to a relative tolerance.
///
/// The tolerance is interpreted relative to the magnitude of the running
/// estimate, with a small absolute floor so that integrals that are genuinely
/// zero terminate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (a, b, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            // endpoint singularities: nudge inward
            let h = (b - a) * 1e-12;
            let y = f((x + h).min(b - h).max(a + h));
            if y.is_finite() {
                y
            } else {
                0.0
            }
        }
    };
    let m = 0.5 * (a + b);
    let fa = eval(a);
    let fm = eval(m);
    let fb = eval(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = rel_tol * whole.abs().max(1e-300);
    sign * simpson_rec(&eval, a, b, fa, fm, fb, whole, tol.max(1e-305), 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= 52 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fritsch-Carlson monotone cubic interpolant.
///
/// Preserves monotonicity of the data; outside the table it continues
/// linearly with the boundary slope.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Evaluation(
                "monotone cubic needs at least two matching points".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Evaluation(
                "monotone cubic abscissae must strictly increase".into(),
            ));
        }
        let n = xs.len();
        let mut deltas = vec![0.0; n - 1];
        for i in 0..n - 1 {
            deltas[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut ms = vec![0.0; n];
        ms[0] = deltas[0];
        ms[n - 1] = deltas[n - 2];
        for i in 1..n - 1 {
            ms[i] = if deltas[i - 1] * deltas[i] <= 0.0 {
                0.0
            } else {
                0.5 * (deltas[i - 1] + deltas[i])
            };
        }
        // clamp slopes to keep the interpolant monotone
        for i in 0..n - 1 {
            if deltas[i] == 0.0 {
                ms[i] = 0.0;
                ms[i + 1] = 0.0;
            } else {
                let a = ms[i] / deltas[i];
                let b = ms[i + 1] / deltas[i];
                let s = a * a + b * b;
                if s > 9.0 {
                    let t = 3.0 / s.sqrt();
                    ms[i] = t * a * deltas[i];
                    ms[i + 1] = t * b * deltas[i];
                }
            }
        }
        Ok(Self { xs, ys, ms })
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.ms[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.ms[n - 1] * (x - self.xs[n - 1]);
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ms[i] + h01 * self.ys[i + 1] + h11 * h * self.ms[i + 1]
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_matches_closed_forms() {
        let i = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((i - (std::f64::consts::E - 1.0)).abs() < 1e-11);
        let i = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-10);
        assert!((i - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is exact for 8 nodes
        let val: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((val - 2.0 / 15.0).abs() < 1e-13);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn monotone_cubic_preserves_monotone_data() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let mc = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = -1.0;
        for i in 0..500 {
            let x = i as f64 * 0.0196;
            let y = mc.eval(x);
            assert!(y >= prev);
            prev = y;
        }
        assert!((mc.eval(3.1) - 9.61).abs() < 1e-3);
    }

    #[test]
    fn slope_fit_recovers_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((ls_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }
}
