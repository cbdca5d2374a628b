//! Real vector fields on a periodic box `[c − L/2, c + L/2)³`, kept both as
//! samples and as Fourier coefficients.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::index::ExtReal;
use crate::quad::pairwise_sum;

/// In-place 3-D FFT of an `n³` array (last index fastest). The forward
/// transform is unnormalized; the inverse divides by `n³`.
pub fn fft3(data: &mut [Complex64], n: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let plane = n * n;
    data.par_chunks_mut(plane).for_each(|p| fft.process(p));
    let mut tmp = vec![Complex64::new(0.0, 0.0); data.len()];
    for axis_stride in [n, plane] {
        transpose_axis(data, &mut tmp, n, axis_stride);
        tmp.par_chunks_mut(plane).for_each(|p| fft.process(p));
        transpose_axis_back(&tmp, data, n, axis_stride);
    }
    if inverse {
        let s = 1.0 / (n * n * n) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new())).lock().expect("fft planner");
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Gathers lines along the axis of the given stride into contiguous runs.
fn transpose_axis(src: &[Complex64], dst: &mut [Complex64], n: usize, stride: usize) {
    let outer = src.len() / (stride * n);
    for o in 0..outer {
        for inner in 0..stride {
            let line = (o * stride + inner) * n;
            let base = o * stride * n + inner;
            for t in 0..n {
                dst[line + t] = src[base + t * stride];
            }
        }
    }
}

fn transpose_axis_back(src: &[Complex64], dst: &mut [Complex64], n: usize, stride: usize) {
    let outer = dst.len() / (stride * n);
    for o in 0..outer {
        for inner in 0..stride {
            let line = (o * stride + inner) * n;
            let base = o * stride * n + inner;
            for t in 0..n {
                dst[base + t * stride] = src[line + t];
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub box_len: f64,
    pub resolution: usize,
    pub center: [f64; 3],
    /// Samples per component, index `(i·N + j)·N + k`.
    pub real: Vec<Vec<f64>>,
    /// Fourier coefficients per component (`û = FFT(u)/N³`).
    pub hat: Vec<Vec<Complex64>>,
}

fn check_box(box_len: f64, n: usize) -> Result<()> {
    if !(box_len > 0.0 && box_len.is_finite()) || n < 4 || n % 2 == 1 {
        return Err(Error::Config(format!(
            "periodic box needs L > 0 and an even resolution >= 4, got L = {box_len}, N = {n}"
        )));
    }
    Ok(())
}

impl SpectralField {
    pub fn from_real(box_len: f64, resolution: usize, center: [f64; 3], real: Vec<Vec<f64>>) -> Result<Self> {
        check_box(box_len, resolution)?;
        let len = resolution.pow(3);
        if real.is_empty() || real.iter().any(|c| c.len() != len) {
            return Err(Error::Config(format!("each component needs {len} samples")));
        }
        if real.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite sample in spectral field".into()));
        }
        let s = 1.0 / len as f64;
        let hat = real
            .iter()
            .map(|c| {
                let mut z: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft3(&mut z, resolution, false);
                z.iter_mut().for_each(|v| *v *= s);
                z
            })
            .collect();
        Ok(SpectralField {
            box_len,
            resolution,
            center,
            real,
            hat,
        })
    }

    /// Builds the field from Fourier coefficients; the imaginary part of the
    /// synthesized samples is discarded.
    pub fn from_hat(box_len: f64, resolution: usize, center: [f64; 3], hat: Vec<Vec<Complex64>>) -> Result<Self> {
        check_box(box_len, resolution)?;
        let len = resolution.pow(3);
        if hat.is_empty() || hat.iter().any(|c| c.len() != len) {
            return Err(Error::Config(format!("each component needs {len} coefficients")));
        }
        let real = hat
            .iter()
            .map(|c| {
                let mut z: Vec<Complex64> = c.iter().map(|v| v * len as f64).collect();
                fft3(&mut z, resolution, true);
                z.iter().map(|v| v.re).collect()
            })
            .collect();
        Ok(SpectralField {
            box_len,
            resolution,
            center,
            real,
            hat,
        })
    }

    /// Samples `f(x)` at the box nodes, `x` relative to the center.
    pub fn from_fn<F>(box_len: f64, resolution: usize, center: [f64; 3], components: usize, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Vec<f64> + Sync,
    {
        check_box(box_len, resolution)?;
        let len = resolution.pow(3);
        let h = box_len / resolution as f64;
        let samples: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|idx| f(position(idx, resolution, h)))
            .collect();
        if samples.iter().any(|s| s.len() != components) {
            return Err(Error::Config(format!("sampler must return {components} components")));
        }
        let real = (0..components).map(|c| samples.iter().map(|s| s[c]).collect()).collect();
        SpectralField::from_real(box_len, resolution, center, real)
    }

    pub fn zeros(box_len: f64, resolution: usize, center: [f64; 3], components: usize) -> Result<Self> {
        check_box(box_len, resolution)?;
        let len = resolution.pow(3);
        Ok(SpectralField {
            box_len,
            resolution,
            center,
            real: vec![vec![0.0; len]; components],
            hat: vec![vec![Complex64::new(0.0, 0.0); len]; components],
        })
    }

    pub fn components(&self) -> usize {
        self.real.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.resolution as f64
    }

    /// Node position relative to the center.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        position(idx, self.resolution, self.spacing())
    }

    /// Integer mode numbers of a coefficient index, in `[−N/2, N/2)`.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let n = self.resolution;
        let m = |v: usize| if v < n / 2 { v as i64 } else { v as i64 - n as i64 };
        [m(idx / (n * n)), m((idx / n) % n), m(idx % n)]
    }

    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k = 2.0 * PI / self.box_len;
        let m = self.mode(idx);
        [k * m[0] as f64, k * m[1] as f64, k * m[2] as f64]
    }

    /// True when any axis sits at the unpaired Nyquist mode `−N/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = -(self.resolution as i64 / 2);
        self.mode(idx).contains(&half)
    }

    fn same_box(&self, o: &SpectralField) -> Result<()> {
        if self.box_len != o.box_len || self.resolution != o.resolution || self.components() != o.components() {
            return Err(Error::Config("spectral fields live on different boxes".into()));
        }
        Ok(())
    }

    /// Applies a per-mode map `(ξ, idx, û(ξ)) → v̂(ξ)` acting on all
    /// components at once.
    pub fn map_modes<F>(&self, out_components: usize, f: F) -> Result<SpectralField>
    where
        F: Fn([f64; 3], usize, &[Complex64]) -> Vec<Complex64> + Sync,
    {
        let d = self.components();
        let mapped: Vec<Vec<Complex64>> = (0..self.len())
            .into_par_iter()
            .map(|idx| {
                let v: Vec<Complex64> = (0..d).map(|c| self.hat[c][idx]).collect();
                f(self.wavevector(idx), idx, &v)
            })
            .collect();
        let hat = (0..out_components).map(|c| mapped.iter().map(|v| v[c]).collect()).collect();
        SpectralField::from_hat(self.box_len, self.resolution, self.center, hat)
    }

    /// Same real multiplier `m(ξ)` on every component.
    pub fn multiplier(&self, m: impl Fn([f64; 3]) -> f64 + Sync) -> Result<SpectralField> {
        self.map_modes(self.components(), |xi, _, v| {
            let s = m(xi);
            v.iter().map(|z| z * s).collect()
        })
    }

    /// `max_ξ |ξ·û(ξ)| / max |û|` (0 for the zero field).
    pub fn divergence_residual(&self) -> f64 {
        if self.components() != 3 {
            return f64::NAN;
        }
        let (div, amp) = (0..self.len())
            .into_par_iter()
            .map(|idx| {
                let xi = self.wavevector(idx);
                let d: Complex64 = (0..3).map(|c| self.hat[c][idx] * xi[c]).sum();
                let a = (0..3).map(|c| self.hat[c][idx].norm()).fold(0.0, f64::max);
                (d.norm(), a)
            })
            .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
        if amp == 0.0 {
            0.0
        } else {
            div / amp
        }
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.len())
            .map(|i| self.magnitude(i))
            .fold(0.0, f64::max)
    }

    /// Euclidean magnitude over components at node `idx`.
    pub fn magnitude(&self, idx: usize) -> f64 {
        self.real.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt()
    }

    /// `(∑ |u|² h³)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let h3 = self.spacing().powi(3);
        let t: Vec<f64> = (0..self.len()).map(|i| self.magnitude(i).powi(2)).collect();
        (pairwise_sum(&t) * h3).sqrt()
    }

    pub fn add(&self, o: &SpectralField) -> Result<SpectralField> {
        self.combine(o, 1.0)
    }

    pub fn sub(&self, o: &SpectralField) -> Result<SpectralField> {
        self.combine(o, -1.0)
    }

    fn combine(&self, o: &SpectralField, s: f64) -> Result<SpectralField> {
        self.same_box(o)?;
        let mut r = self.clone();
        for c in 0..self.components() {
            r.real[c].iter_mut().zip(&o.real[c]).for_each(|(a, b)| *a += s * b);
            r.hat[c].iter_mut().zip(&o.hat[c]).for_each(|(a, b)| *a += b * s);
        }
        Ok(r)
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut r = self.clone();
        r.real.iter_mut().flatten().for_each(|v| *v *= s);
        r.hat.iter_mut().flatten().for_each(|v| *v *= s);
        r
    }

    /// Fraction of `∑|u|²` carried by nodes farther than `radius` from the
    /// center.
    pub fn energy_outside(&self, radius: f64) -> f64 {
        let (out, all) = (0..self.len())
            .map(|i| {
                let e = self.magnitude(i).powi(2);
                let x = self.position(i);
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                (if r > radius { e } else { 0.0 }, e)
            })
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        if all == 0.0 {
            0.0
        } else {
            out / all
        }
    }

    /// `‖|x|^α u‖_{L^p_{|x|} L^p̃_θ}` by binning nodes into spherical shells of
    /// width `h` about the center. Shell `k` has representative radius
    /// `(k + ½)h` and angular norm `(∑_shell |u|^p̃ h³ / (ρ_k² h))^{1/p̃}`, so
    /// `α = 0, p = p̃` reproduces the plain `L^p` sum exactly.
    pub fn mixed_norm(&self, alpha: f64, p: ExtReal, p_tilde: ExtReal) -> Result<f64> {
        let h = self.spacing();
        let shells = (3f64.sqrt() * self.box_len / (2.0 * h)).ceil() as usize + 1;
        let mut acc = vec![0.0f64; shells];
        for i in 0..self.len() {
            let x = self.position(i);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let k = (r / h) as usize;
            let m = self.magnitude(i);
            acc[k] = match p_tilde {
                ExtReal::Infinity => acc[k].max(m),
                ExtReal::Finite(pt) => acc[k] + m.powf(pt),
            };
        }
        let rho = |k: usize| (k as f64 + 0.5) * h;
        let g: Vec<f64> = acc
            .iter()
            .enumerate()
            .map(|(k, &a)| match p_tilde {
                ExtReal::Infinity => a,
                ExtReal::Finite(pt) => (a * h * h / (rho(k) * rho(k))).powf(1.0 / pt),
            })
            .collect();
        let v = match p {
            ExtReal::Infinity => g.iter().enumerate().map(|(k, v)| rho(k).powf(alpha) * v).fold(0.0, f64::max),
            ExtReal::Finite(p) => {
                let t: Vec<f64> = g
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| if v == 0.0 { 0.0 } else { (rho(k).powf(alpha) * v).powf(p) * rho(k).powi(2) * h })
                    .collect();
                pairwise_sum(&t).powf(1.0 / p)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonConvergence("mixed norm of spectral field is not finite".into()))
        }
    }
}

fn position(idx: usize, n: usize, h: f64) -> [f64; 3] {
    let half = n as f64 / 2.0;
    [
        ((idx / (n * n)) as f64 - half) * h,
        (((idx / n) % n) as f64 - half) * h,
        ((idx % n) as f64 - half) * h,
    ]
}
