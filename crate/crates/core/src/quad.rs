//! One-dimensional quadrature building blocks.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..m {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = mf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // refresh the derivative at the converged root
        let (mut p0, mut p1) = (1.0, 0.0);
        for k in 0..m {
            let p2 = p1;
            p1 = p0;
            p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
        }
        if z * z != 1.0 {
            dp = mf * (z * p0 - p1) / (z * z - 1.0);
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| v * h).collect())
}

/// Pairwise summation in a fixed order (bit-reproducible).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Barycentric-free Lagrange basis values `ℓ_j(x)` for nodes `xs`.
pub fn lagrange_basis(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|j| {
            xs.iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| (x - xk) / (xs[j] - xk))
                .product()
        })
        .collect()
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel: `(kronrod, |kronrod − gauss|)`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = (a + b) / 2.0;
    let h = (b - a) / 2.0;
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive GK15: repeatedly bisects the panel with the largest
/// error estimate until the total estimate is below `max(abs, rel·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    integrate_panels(&f, &[a, b], abs_tol, rel_tol)
}

/// As [`integrate`], starting from the given panel breakpoints.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    const MAX_PANELS: usize = 20_000;
    let mut panels: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let value = pairwise_sum(&panels.iter().map(|p| p.2).collect::<Vec<_>>());
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite integral on [{}, {}]", breaks[0], breaks[breaks.len() - 1])));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, error });
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature: error {error:e} after {MAX_PANELS} panels"
            )));
        }
        let (k, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (a, b, _, _) = panels.swap_remove(k);
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            return Err(Error::NonConvergence(format!("panel [{a}, {b}] cannot be bisected")));
        }
        for (l, r) in [(a, m), (m, b)] {
            let (v, e) = gk15(f, l, r);
            panels.push((l, r, v, e));
        }
        panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
}

/// Breakpoints `a < … < b` refined geometrically toward `a` with ratio
/// `ratio` down to `a + (b − a)·ratio^levels`.
pub fn graded_toward_start(a: f64, b: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=levels).map(|k| a + (b - a) * ratio.powi(k as i32)).collect();
    pts.push(a);
    pts.reverse();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for m in [1, 2, 5, 8, 16, 33] {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for d in 0..2 * m {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "m={m} d={d}: {q} vs {exact}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn gk15_weights_consistent() {
        let (v, _) = gk15(&|_| 1.0, -1.0, 1.0);
        assert!((v - 2.0).abs() < 1e-15);
        let (v, e) = gk15(&|x: f64| x.powi(12), 0.0, 1.0);
        assert!((v - 1.0 / 13.0).abs() < 1e-15 && e < 1e-6);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{r:?}");
        let r = integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-14, 1e-14).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (1..=1000).map(|k| 1.0 / k as f64).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-13);
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        let xs = [0.0, 0.3, 0.7, 1.0];
        let l = lagrange_basis(&xs, 0.45);
        let f = |x: f64| 1.0 - 2.0 * x + x.powi(3);
        let interp: f64 = l.iter().zip(&xs).map(|(l, x)| l * f(*x)).sum();
        assert!((interp - f(0.45)).abs() < 1e-14);
    }
}
