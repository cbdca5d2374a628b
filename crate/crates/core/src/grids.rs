//! Product radial × spherical grids and weighted mixed radial-angular norms
//! `‖|x|^α f‖_{L^p_{|x|} L^p̃_θ}` with the unnormalized surface measure.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, GridError, Result};
use crate::index::ExtReal;
use crate::quad::{gauss_legendre, gauss_legendre_on, pairwise_sum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Linear,
    Log,
    /// Log panels on `[ρ_min, 1]`, linear panels on `[1, ρ_max]`.
    Composite,
}

impl std::str::FromStr for Grading {
    type Err = GridError;
    fn from_str(s: &str) -> Result<Self, GridError> {
        match s {
            "linear" => Ok(Grading::Linear),
            "log" => Ok(Grading::Log),
            "composite" => Ok(Grading::Composite),
            _ => Err(GridError::Format(format!("unknown grading `{s}`"))),
        }
    }
}

impl Grading {
    fn name(self) -> &'static str {
        match self {
            Grading::Linear => "linear",
            Grading::Log => "log",
            Grading::Composite => "composite",
        }
    }
}

const PANEL_ORDER: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub grading: Grading,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Panel breakpoints, `rho_min = breaks[0] < … < breaks[last] = rho_max`.
    pub breaks: Vec<f64>,
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ g(ρ) dρ` over `[ρ_min, ρ_max]`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * g(r)).collect();
        pairwise_sum(&terms)
    }

    /// Grid for `f(·/λ)`: nodes and weights scaled by `λ`.
    pub fn dilated(&self, lambda: f64) -> RadialGrid {
        RadialGrid {
            nodes: self.nodes.iter().map(|r| r * lambda).collect(),
            weights: self.weights.iter().map(|w| w * lambda).collect(),
            grading: self.grading,
            rho_min: self.rho_min * lambda,
            rho_max: self.rho_max * lambda,
            breaks: self.breaks.iter().map(|r| r * lambda).collect(),
        }
    }

    /// Index range of the nodes inside panel `k`.
    pub fn panel_nodes(&self, k: usize) -> std::ops::Range<usize> {
        let lo = self.nodes.partition_point(|&r| r < self.breaks[k]);
        let hi = self.nodes.partition_point(|&r| r < self.breaks[k + 1]);
        lo..hi
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }
}

fn geometric(a: f64, b: f64, m: usize) -> Vec<f64> {
    let ratio = (b / a).ln() / m as f64;
    let mut v: Vec<f64> = (0..=m).map(|k| a * (ratio * k as f64).exp()).collect();
    v[m] = b;
    v
}

fn uniform(a: f64, b: f64, m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
    v[m] = b;
    v
}

/// Composite Gauss–Legendre grid with `n_nodes` nodes on `[ρ_min, ρ_max]`,
/// in `⌊n_nodes/8⌋` panels of (nearly) equal Gauss order.
pub fn build_radial_grid(rho_min: f64, rho_max: f64, n_nodes: usize, grading: Grading) -> Result<RadialGrid, GridError> {
    if !(rho_min > 0.0 && rho_max > rho_min && rho_max.is_finite()) {
        return Err(GridError::Bounds(rho_min, rho_max));
    }
    if n_nodes < PANEL_ORDER {
        return Err(GridError::TooFewNodes(n_nodes));
    }
    let panels = n_nodes / PANEL_ORDER;
    let (base, extra) = (n_nodes / panels, n_nodes % panels);
    let breaks = match grading {
        Grading::Linear => uniform(rho_min, rho_max, panels),
        Grading::Log => geometric(rho_min, rho_max, panels),
        Grading::Composite if rho_min < 1.0 && rho_max > 1.0 && panels >= 2 => {
            let lp = ((panels as f64 * (1.0 / rho_min).ln() / ((1.0 / rho_min).ln() + (rho_max - 1.0)))
                .round() as usize)
                .clamp(1, panels - 1);
            let mut b = geometric(rho_min, 1.0, lp);
            b.extend(uniform(1.0, rho_max, panels - lp).into_iter().skip(1));
            b
        }
        Grading::Composite if rho_max <= 1.0 => geometric(rho_min, rho_max, panels),
        Grading::Composite => uniform(rho_min, rho_max, panels),
    };
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut weights = Vec::with_capacity(n_nodes);
    for (k, w) in breaks.windows(2).enumerate() {
        let order = base + usize::from(k < extra);
        let (x, v) = gauss_legendre_on(order, w[0], w[1]);
        nodes.extend(x);
        weights.extend(v);
    }
    Ok(RadialGrid {
        nodes,
        weights,
        grading,
        rho_min,
        rho_max,
        breaks,
    })
}

/// `|S^{n−1}| = 2π^{n/2}/Γ(n/2)` for `n ∈ {2, 3}` and in general via the
/// recurrence `|S^{n+1}| = 2π|S^{n−1}|/n`.
pub fn sphere_area(n: u32) -> f64 {
    match n {
        0 | 1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI * sphere_area(n - 2) / (n as f64 - 2.0),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    pub n: u32,
    pub level: usize,
    /// Unit vectors; for `n = 2` the third coordinate is 0.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Polar angle of each point (`π/2` for `n = 2`).
    pub theta: Vec<f64>,
    /// Azimuth of each point.
    pub phi: Vec<f64>,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn area(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn integrate(&self, g: impl Fn([f64; 3]) -> f64) -> f64 {
        let t: Vec<f64> = self.points.iter().zip(&self.weights).map(|(&w, &v)| v * g(w)).collect();
        pairwise_sum(&t)
    }
}

/// `n = 2`: `L + 1` equispaced angles (exact for trigonometric degree `L`).
/// `n = 3`: `⌊L/2⌋ + 1` Gauss nodes in `cos θ` times `L + 1` equispaced
/// azimuths (exact for spherical harmonics of degree `L`).
pub fn build_sphere_grid(n: u32, level: usize) -> Result<SphereGrid, GridError> {
    match n {
        2 => {
            let m = level + 1;
            let mut g = SphereGrid {
                n,
                level,
                points: vec![],
                weights: vec![2.0 * PI / m as f64; m],
                theta: vec![PI / 2.0; m],
                phi: vec![],
            };
            for k in 0..m {
                let a = 2.0 * PI * k as f64 / m as f64;
                g.points.push([a.cos(), a.sin(), 0.0]);
                g.phi.push(a);
            }
            Ok(g)
        }
        3 => {
            let nt = level / 2 + 1;
            let np = level + 1;
            let (z, wz) = gauss_legendre(nt);
            let mut g = SphereGrid {
                n,
                level,
                points: vec![],
                weights: vec![],
                theta: vec![],
                phi: vec![],
            };
            for (zi, wi) in z.iter().zip(&wz) {
                let th = zi.acos();
                let st = (1.0 - zi * zi).max(0.0).sqrt();
                for k in 0..np {
                    let a = 2.0 * PI * k as f64 / np as f64;
                    g.points.push([st * a.cos(), st * a.sin(), *zi]);
                    g.weights.push(wi * 2.0 * PI / np as f64);
                    g.theta.push(th);
                    g.phi.push(a);
                }
            }
            Ok(g)
        }
        _ => Err(GridError::Dimension(n)),
    }
}

/// Samples on the product grid, laid out `[component][radius][sphere]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub radial: RadialGrid,
    pub sphere: SphereGrid,
    pub components: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(radial: RadialGrid, sphere: SphereGrid, components: usize, values: Vec<f64>) -> Result<Self, GridError> {
        let expected = components * radial.len() * sphere.len();
        if components == 0 || values.len() != expected {
            return Err(GridError::Shape(format!(
                "expected {components} x {} x {} = {expected} values, got {}",
                radial.len(),
                sphere.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        Ok(GridField {
            radial,
            sphere,
            components,
            values,
        })
    }

    /// Samples `f(ρ, ω)` (returning all components) at every node.
    pub fn from_fn<F>(radial: &RadialGrid, sphere: &SphereGrid, components: usize, f: F) -> Result<Self, GridError>
    where
        F: Fn(f64, [f64; 3]) -> Vec<f64> + Sync,
    {
        let (nr, ns) = (radial.len(), sphere.len());
        let rows: Vec<Vec<f64>> = (0..nr * ns)
            .into_par_iter()
            .map(|k| f(radial.nodes[k / ns], sphere.points[k % ns]))
            .collect();
        let mut values = vec![0.0; components * nr * ns];
        for (k, row) in rows.iter().enumerate() {
            if row.len() != components {
                return Err(GridError::Shape(format!("sampler returned {} components, expected {components}", row.len())));
            }
            for (c, v) in row.iter().enumerate() {
                values[c * nr * ns + k] = *v;
            }
        }
        GridField::new(radial.clone(), sphere.clone(), components, values)
    }

    /// Scalar field `f(ρ, ω)`.
    pub fn scalar<F>(radial: &RadialGrid, sphere: &SphereGrid, f: F) -> Result<Self, GridError>
    where
        F: Fn(f64, [f64; 3]) -> f64 + Sync,
    {
        GridField::from_fn(radial, sphere, 1, |r, w| vec![f(r, w)])
    }

    pub fn n(&self) -> u32 {
        self.sphere.n
    }

    #[inline]
    pub fn index(&self, c: usize, i: usize, j: usize) -> usize {
        (c * self.radial.len() + i) * self.sphere.len() + j
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.values[self.index(c, i, j)]
    }

    /// Euclidean magnitude over components at node `(i, j)`.
    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        if self.components == 1 {
            return self.get(0, i, j).abs();
        }
        (0..self.components).map(|c| self.get(c, i, j).powi(2)).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> GridField {
        GridField {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Same samples with a new radial multiplier `m(ρ)` applied.
    pub fn with_radial_factor(&self, m: impl Fn(f64) -> f64) -> GridField {
        let mut out = self.clone();
        for c in 0..self.components {
            for i in 0..self.radial.len() {
                let f = m(self.radial.nodes[i]);
                for j in 0..self.sphere.len() {
                    let k = self.index(c, i, j);
                    out.values[k] *= f;
                }
            }
        }
        out
    }

    /// Largest deviation from the per-radius angular mean.
    pub fn angular_deviation(&self) -> f64 {
        let area = self.sphere.area();
        let mut worst = 0.0f64;
        for c in 0..self.components {
            for i in 0..self.radial.len() {
                let row: Vec<f64> = (0..self.sphere.len()).map(|j| self.get(c, i, j)).collect();
                let mean = row.iter().zip(&self.sphere.weights).map(|(v, w)| v * w).sum::<f64>() / area;
                worst = row.iter().fold(worst, |m, v| m.max((v - mean).abs()));
            }
        }
        worst
    }
}

/// `‖f(ρ·)‖_{L^p̃(S^{n−1})}` at every radial node (grid max when `p̃ = ∞`).
pub fn sphere_norms(f: &GridField, p_tilde: ExtReal) -> Vec<f64> {
    let ns = f.sphere.len();
    (0..f.radial.len())
        .into_par_iter()
        .map(|i| match p_tilde {
            ExtReal::Infinity => (0..ns).map(|j| f.magnitude(i, j)).fold(0.0, f64::max),
            ExtReal::Finite(pt) => {
                let t: Vec<f64> = (0..ns).map(|j| f.sphere.weights[j] * f.magnitude(i, j).powf(pt)).collect();
                pairwise_sum(&t).powf(1.0 / pt)
            }
        })
        .collect()
}

/// Outer radial norm of per-radius values `g_i` with radial multiplier
/// `m(ρ)`: `(∫ (m g)^p ρ^{n−1} dρ)^{1/p}`, or `max m g` when `p = ∞`.
pub fn radial_norm(radial: &RadialGrid, g: &[f64], n: u32, p: ExtReal, m: impl Fn(f64) -> f64) -> f64 {
    match p {
        ExtReal::Infinity => radial.nodes.iter().zip(g).map(|(&r, &v)| m(r) * v).fold(0.0, f64::max),
        ExtReal::Finite(p) => {
            let t: Vec<f64> = radial
                .nodes
                .iter()
                .zip(&radial.weights)
                .zip(g)
                .map(|((&r, &w), &v)| {
                    let mv = m(r) * v;
                    if mv == 0.0 {
                        0.0
                    } else {
                        w * mv.powf(p) * r.powi(n as i32 - 1)
                    }
                })
                .collect();
            pairwise_sum(&t).powf(1.0 / p)
        }
    }
}

/// `‖|x|^α f‖_{L^p_{|x|} L^p̃_θ}`.
///
/// Rejects `αp + n − 1 <= −1`, where the weight is not locally integrable.
pub fn mixed_norm(f: &GridField, alpha: f64, p: ExtReal, p_tilde: ExtReal) -> Result<f64, GridError> {
    let n = f.n();
    if let ExtReal::Finite(pf) = p {
        let exponent = alpha * pf + n as f64 - 1.0;
        if exponent <= -1.0 {
            return Err(GridError::WeightNotIntegrable { alpha, p: pf, exponent });
        }
    }
    let g = sphere_norms(f, p_tilde);
    Ok(radial_norm(&f.radial, &g, n, p, |r| r.powf(alpha)))
}

/// Mixed norm restricted to `|x| < radius`.
pub fn mixed_norm_within(f: &GridField, alpha: f64, p: ExtReal, p_tilde: ExtReal, radius: f64) -> Result<f64, GridError> {
    let masked = f.with_radial_factor(|r| if r < radius { 1.0 } else { 0.0 });
    mixed_norm(&masked, alpha, p, p_tilde)
}

/// `‖|x|^α u‖_{L^s_T L^p L^p̃}` by the trapezoidal rule in time (max over
/// samples when `s = ∞`).
pub fn spacetime_norm(trajectory: &[(f64, GridField)], alpha: f64, s: ExtReal, p: ExtReal, p_tilde: ExtReal) -> Result<f64> {
    let norms = trajectory
        .iter()
        .map(|(_, f)| mixed_norm(f, alpha, p, p_tilde))
        .collect::<Result<Vec<_>, _>>()?;
    let times: Vec<f64> = trajectory.iter().map(|(t, _)| *t).collect();
    time_norm(&times, &norms, s)
}

/// `L^s` norm in time of sampled values by the trapezoidal rule.
pub fn time_norm(times: &[f64], values: &[f64], s: ExtReal) -> Result<f64> {
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::Config("time series is empty or misaligned".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("times must be strictly increasing".into()));
    }
    match s {
        ExtReal::Infinity => Ok(values.iter().cloned().fold(0.0, f64::max)),
        ExtReal::Finite(s) => {
            let t: Vec<f64> = times
                .windows(2)
                .zip(values.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].powf(s) + v[1].powf(s)))
                .collect();
            Ok(pairwise_sum(&t).powf(1.0 / s))
        }
    }
}

/// Evaluates `eval(level)` at `level, 2·level, 4·level, …` until the relative
/// change drops below `rel_tol`. Returns the last value and level.
pub fn refine_until_stable(
    mut eval: impl FnMut(usize) -> Result<f64>,
    start: usize,
    max_doublings: usize,
    rel_tol: f64,
) -> Result<(f64, usize)> {
    let mut level = start.max(1);
    let mut prev = eval(level)?;
    for _ in 0..max_doublings {
        level *= 2;
        let next = eval(level)?;
        if (next - prev).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok((next, level));
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!(
        "refinement did not stabilize to {rel_tol:e} by level {level}"
    )))
}

/// Writes a field as CSV rows `(rho, omega, component, value)` after a
/// descriptor header.
pub fn write_field_csv(f: &GridField, mut w: impl Write) -> std::io::Result<()> {
    let mut s = String::new();
    writeln!(s, "# grid-field v1").unwrap();
    writeln!(
        s,
        "# radial,{},{},{},{}",
        f.radial.rho_min,
        f.radial.rho_max,
        f.radial.len(),
        f.radial.grading.name()
    )
    .unwrap();
    writeln!(s, "# sphere,{},{}", f.sphere.n, f.sphere.level).unwrap();
    writeln!(s, "# components,{}", f.components).unwrap();
    writeln!(s, "rho,omega,component,value").unwrap();
    w.write_all(s.as_bytes())?;
    for c in 0..f.components {
        for i in 0..f.radial.len() {
            let mut line = String::new();
            for j in 0..f.sphere.len() {
                writeln!(line, "{:?},{j},{c},{:?}", f.radial.nodes[i], f.get(c, i, j)).unwrap();
            }
            w.write_all(line.as_bytes())?;
        }
    }
    Ok(())
}

fn header_field(lines: &mut impl Iterator<Item = std::io::Result<String>>, tag: &str) -> Result<Vec<String>> {
    let line = lines
        .next()
        .ok_or_else(|| GridError::Format(format!("missing `{tag}` header")))??;
    let body = line
        .strip_prefix("# ")
        .and_then(|l| l.strip_prefix(tag))
        .and_then(|l| l.strip_prefix(','))
        .ok_or_else(|| GridError::Format(format!("expected `# {tag},…`, got `{line}`")))?;
    Ok(body.split(',').map(str::to_string).collect())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| GridError::Format(format!("bad {what}: `{s}`")).into())
}

/// Reads a field written by [`write_field_csv`], rebuilding its grids.
pub fn read_field_csv(r: impl BufRead) -> Result<GridField> {
    let mut lines = r.lines();
    let magic = lines.next().ok_or_else(|| GridError::Format("empty input".into()))??;
    if magic.trim() != "# grid-field v1" {
        return Err(GridError::Format(format!("unexpected first line `{magic}`")).into());
    }
    let rad = header_field(&mut lines, "radial")?;
    let sph = header_field(&mut lines, "sphere")?;
    let comp = header_field(&mut lines, "components")?;
    if rad.len() != 4 || sph.len() != 2 || comp.len() != 1 {
        return Err(GridError::Format("malformed descriptor header".into()).into());
    }
    let radial = build_radial_grid(
        parse(&rad[0], "rho_min")?,
        parse(&rad[1], "rho_max")?,
        parse(&rad[2], "node count")?,
        rad[3].parse()?,
    )?;
    let sphere = build_sphere_grid(parse(&sph[0], "dimension")?, parse(&sph[1], "level")?)?;
    let components: usize = parse(&comp[0], "components")?;
    let _columns = lines.next();
    let mut values = vec![f64::NAN; components * radial.len() * sphere.len()];
    let mut count = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(GridError::Format(format!("expected 4 columns: `{line}`")).into());
        }
        let rho: f64 = parse(cols[0], "rho")?;
        let j: usize = parse(cols[1], "omega index")?;
        let c: usize = parse(cols[2], "component")?;
        let v: f64 = parse(cols[3], "value")?;
        let i = radial
            .nodes
            .iter()
            .position(|&r| (r - rho).abs() <= 1e-12 * r)
            .ok_or_else(|| GridError::Format(format!("rho {rho} is not a grid node")))?;
        if j >= sphere.len() || c >= components {
            return Err(GridError::Format(format!("index out of range: `{line}`")).into());
        }
        values[(c * radial.len() + i) * sphere.len() + j] = v;
        count += 1;
    }
    if count != values.len() {
        return Err(GridError::Shape(format!("expected {} rows, got {count}", values.len())).into());
    }
    Ok(GridField::new(radial, sphere, components, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{ExtReal::Finite as F, INF};
    use proptest::prelude::*;
    use statrs::function::erf::erf;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn radial_polynomial_exactness() {
        let g = build_radial_grid(1.0, 2.0, 64, Grading::Linear).unwrap();
        assert!(close(g.integrate(|r| r * r), 7.0 / 3.0, 1e-12));
        assert!(close(g.integrate(|_| 1.0), 1.0, 1e-12));
        assert_eq!(g.len(), 64);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn radial_gaussian_moment_log_grid() {
        let g = build_radial_grid(1e-3, 50.0, 512, Grading::Log).unwrap();
        let got = g.integrate(|r| (-r * r).exp() * r * r);
        // ∫_a^∞ e^{-ρ²}ρ² dρ = √π/4 (1 - erf a) + a e^{-a²}/2
        let a = 1e-3f64;
        let exact = PI.sqrt() / 4.0 * (1.0 - erf(a)) + a * (-a * a).exp() / 2.0;
        assert!((got - exact).abs() < 1e-10, "{got} vs {exact}");
        assert!((got - PI.sqrt() / 4.0).abs() < 1e-8);
        assert!(close(g.integrate(|_| 1.0), 50.0 - 1e-3, 1e-12));
    }

    #[test]
    fn radial_smooth_singular_power() {
        let g = build_radial_grid(1.0, 2.0, 8, Grading::Linear).unwrap();
        let exact = 2.0 * (2f64.sqrt() - 1.0);
        assert!(((g.integrate(|r| r.powf(-0.5)) - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn radial_odd_counts_and_composite() {
        let g = build_radial_grid(1e-2, 10.0, 21, Grading::Composite).unwrap();
        assert_eq!(g.len(), 21);
        assert!(close(g.integrate(|_| 1.0), 10.0 - 1e-2, 1e-12));
        assert!(g.breaks.contains(&1.0));
        assert_eq!(build_radial_grid(0.0, 1.0, 16, Grading::Log), Err(GridError::Bounds(0.0, 1.0)));
        assert_eq!(build_radial_grid(0.5, 1.0, 4, Grading::Log), Err(GridError::TooFewNodes(4)));
    }

    #[test]
    fn sphere_areas_and_harmonics() {
        for level in [0, 1, 4, 9, 16] {
            let s3 = build_sphere_grid(3, level).unwrap();
            assert!(close(s3.area(), 4.0 * PI, 1e-12));
            assert!(s3.points.iter().all(|p| ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-14));
            let s2 = build_sphere_grid(2, level).unwrap();
            assert!(close(s2.area(), 2.0 * PI, 1e-12));
        }
        let s = build_sphere_grid(3, 4).unwrap();
        // Y_2^0 ∝ 3z² − 1, and a degree-4 real harmonic x⁴ − 6x²y² + y⁴
        assert!(s.integrate(|w| 3.0 * w[2] * w[2] - 1.0).abs() < 1e-12);
        assert!(s.integrate(|w| w[0].powi(4) - 6.0 * w[0] * w[0] * w[1] * w[1] + w[1].powi(4)).abs() < 1e-12);
        // degree-4 monomial moment: ∫ z⁴ dS = 4π/5
        assert!(close(s.integrate(|w| w[2].powi(4)), 4.0 * PI / 5.0, 1e-12));
        assert_eq!(build_sphere_grid(4, 2), Err(GridError::Dimension(4)));
        let c = build_sphere_grid(2, 6).unwrap();
        assert!(c.integrate(|w| (w[0] * w[0] - w[1] * w[1]) * w[0]).abs() < 1e-12);
    }

    fn grids() -> (RadialGrid, SphereGrid) {
        (build_radial_grid(1e-4, 12.0, 256, Grading::Log).unwrap(), build_sphere_grid(3, 8).unwrap())
    }

    #[test]
    fn gaussian_l2_norm() {
        let (r, s) = grids();
        let f = GridField::scalar(&r, &s, |rho, _| (-rho * rho).exp()).unwrap();
        let got = mixed_norm(&f, 0.0, F(2.0), F(2.0)).unwrap();
        assert!(close(got, (PI / 2.0).powf(0.75), 1e-9), "{got}");
    }

    #[test]
    fn annulus_indicator() {
        let r = build_radial_grid(1.0, 2.0, 32, Grading::Linear).unwrap();
        let s = build_sphere_grid(3, 4).unwrap();
        let f = GridField::scalar(&r, &s, |_, _| 1.0).unwrap();
        let got = mixed_norm(&f, 0.0, F(2.0), F(2.0)).unwrap();
        assert!(close(got, (28.0 * PI / 3.0).sqrt(), 1e-12));
    }

    #[test]
    fn radial_constant_law() {
        let (r, s) = grids();
        let f = GridField::scalar(&r, &s, |rho, _| (-rho * rho).exp() * (1.0 + rho)).unwrap();
        let area = 4.0 * PI;
        for (alpha, p, pt) in [(0.0, 2.0, 4.0), (0.5, 3.0, 1.5), (-0.5, 1.5, 7.0)] {
            let profile = r.integrate(|rho| (rho.powf(alpha) * (-rho * rho).exp() * (1.0 + rho)).powf(p) * rho * rho);
            let classical = (area * profile).powf(1.0 / p);
            let got = mixed_norm(&f, alpha, F(p), F(pt)).unwrap();
            let expect = area.powf(1.0 / pt - 1.0 / p) * classical;
            assert!(close(got, expect, 1e-12), "{got} vs {expect}");
        }
        let sup = mixed_norm(&f, 0.0, INF, INF).unwrap();
        // max of (1 + ρ)e^{-ρ²} at ρ = (√3 − 1)/2
        let rs = (3f64.sqrt() - 1.0) / 2.0;
        assert!(close(sup, (1.0 + rs) * (-rs * rs).exp(), 1e-4));
    }

    #[test]
    fn nonintegrable_weight_rejected() {
        let (r, s) = grids();
        let f = GridField::scalar(&r, &s, |_, _| 1.0).unwrap();
        assert!(matches!(
            mixed_norm(&f, -1.5, F(2.0), F(2.0)),
            Err(GridError::WeightNotIntegrable { .. })
        ));
        assert!(mixed_norm(&f, -0.9, F(2.0), F(2.0)).is_ok());
    }

    #[test]
    fn ptilde_equal_p_matches_cartesian_quadrature() {
        // f = e^{-|x - e|²}: not radial; compare with a 3D tensor GL rule.
        let r = build_radial_grid(1e-3, 9.0, 256, Grading::Composite).unwrap();
        let s = build_sphere_grid(3, 40).unwrap();
        let f = GridField::scalar(&r, &s, |rho, w| {
            let d2 = (rho * w[0] - 1.0).powi(2) + (rho * w[1]).powi(2) + (rho * w[2]).powi(2);
            (-d2).exp()
        })
        .unwrap();
        let p = 3.0;
        let got = mixed_norm(&f, 0.0, F(p), F(p)).unwrap();
        let (x, w) = gauss_legendre_on(100, -5.0, 6.0);
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                for (zk, wk) in x.iter().zip(&w) {
                    let d2 = (xi - 1.0).powi(2) + yj * yj + zk * zk;
                    acc += wi * wj * wk * (-p * d2).exp();
                }
            }
        }
        let exact = acc.powf(1.0 / p);
        assert!(close(got, exact, 1e-8), "{got} vs {exact}");
    }

    #[test]
    fn dilation_law() {
        let (r, s) = grids();
        let prof = |rho: f64, w: [f64; 3]| (-rho * rho).exp() * (1.0 + 0.5 * w[2]);
        let f = GridField::scalar(&r, &s, prof).unwrap();
        for lambda in [0.5, 2.0, 3.0] {
            let rl = r.dilated(lambda);
            let fl = GridField::scalar(&rl, &s, |rho, w| prof(rho / lambda, w)).unwrap();
            for (alpha, p, pt) in [(0.3, F(2.0), F(4.0)), (-0.5, F(3.0), INF), (0.0, INF, F(2.0))] {
                let a = mixed_norm(&fl, alpha, p, pt).unwrap();
                let b = mixed_norm(&f, alpha, p, pt).unwrap();
                let expect = lambda.powf(alpha + 3.0 * p.recip()) * b;
                assert!(close(a, expect, 1e-10), "λ={lambda}: {a} vs {expect}");
            }
        }
    }

    #[test]
    fn spacetime_examples() {
        let (r, s) = grids();
        let f = GridField::scalar(&r, &s, |rho, _| (-rho * rho).exp()).unwrap();
        let m = mixed_norm(&f, 0.0, F(2.0), F(2.0)).unwrap();
        let traj: Vec<(f64, GridField)> = (0..=4).map(|k| (k as f64 * 0.5, f.clone())).collect();
        let st = spacetime_norm(&traj, 0.0, F(3.0), F(2.0), F(2.0)).unwrap();
        assert!(close(st, 2f64.powf(1.0 / 3.0) * m, 1e-12));
        let one = spacetime_norm(&traj[..1], 0.0, INF, F(2.0), F(2.0)).unwrap();
        assert_eq!(one, m);
        let times: Vec<f64> = (0..=3000).map(|k| 1.0 + 3.0 * k as f64 / 3000.0).collect();
        let vals: Vec<f64> = times.iter().map(|t| t.powf(-0.5)).collect();
        let got = time_norm(&times, &vals, F(2.0)).unwrap();
        assert!(close(got, 4f64.ln().sqrt(), 1e-7));
    }

    #[test]
    fn csv_round_trip() {
        let r = build_radial_grid(0.1, 3.0, 17, Grading::Composite).unwrap();
        let s = build_sphere_grid(3, 3).unwrap();
        let f = GridField::from_fn(&r, &s, 2, |rho, w| vec![rho * w[0], (-rho).exp()]).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let g = read_field_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);
        let bad = String::from_utf8(buf).unwrap().replace("# sphere,3,3", "# sphere,5,3");
        assert!(read_field_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn refinement_rule() {
        let (v, level) = refine_until_stable(|l| Ok(1.0 - 1.0 / (l as f64).powi(4)), 2, 20, 1e-6).unwrap();
        assert!(level >= 32 && (v - 1.0).abs() < 1e-6);
        assert!(refine_until_stable(|l| Ok(l as f64), 1, 3, 1e-6).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn homogeneity_and_ptilde_monotonicity(
            coef in prop::collection::vec(-1.0f64..1.0, 4),
            c in -5.0f64..5.0,
            alpha in -0.5f64..1.0,
            p in 1.0f64..5.0,
        ) {
            let r = build_radial_grid(1e-2, 6.0, 48, Grading::Log).unwrap();
            let s = build_sphere_grid(3, 6).unwrap();
            let f = GridField::scalar(&r, &s, |rho, w| {
                (-rho * rho).exp() * (coef[0] + coef[1] * w[0] + coef[2] * w[1] * w[2] + coef[3] * w[2].powi(3))
            })
            .unwrap();
            let base = mixed_norm(&f, alpha, F(p), F(2.0)).unwrap();
            let scaled = mixed_norm(&f.scaled(c), alpha, F(p), F(2.0)).unwrap();
            prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * scaled.max(1.0));
            let area = 4.0 * PI;
            let normalized: Vec<f64> = [F(1.0), F(2.0), F(4.0), INF]
                .iter()
                .map(|&pt| mixed_norm(&f, alpha, F(p), pt).unwrap() / area.powf(pt.recip()))
                .collect();
            for w in normalized.windows(2) {
                prop_assert!(w[0] <= w[1] * (1.0 + 1e-12), "{normalized:?}");
            }
        }
    }
}
