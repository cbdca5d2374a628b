use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::verdict::Overall;
use super::Checker;
use crate::error::IndexError;
use crate::index::{ExtReal, IndexTuple};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxis {
    pub field: String,
    pub start: f64,
    pub end: f64,
    /// Number of intervals; `steps + 1` samples, or one sample when 0.
    pub steps: usize,
    /// Sample uniformly in `1/x` and set the field to the reciprocal, so a
    /// Lebesgue exponent can reach `∞` at `start` or `end` equal to 0.
    #[serde(default)]
    pub reciprocal: bool,
}

impl ScanAxis {
    pub fn new(field: &str, start: f64, end: f64, steps: usize) -> Self {
        ScanAxis {
            field: field.to_string(),
            start,
            end,
            steps,
            reciprocal: false,
        }
    }

    /// Raw sample coordinates (reciprocals when `reciprocal` is set).
    pub fn samples(&self) -> Vec<f64> {
        if self.steps == 0 {
            return vec![self.start];
        }
        (0..=self.steps)
            .map(|i| {
                let s = i as f64 / self.steps as f64;
                if i == self.steps {
                    self.end
                } else {
                    self.start + (self.end - self.start) * s
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisMeta {
    pub field: String,
    pub reciprocal: bool,
    pub values: Vec<f64>,
}

/// Row-major raster: the last axis varies fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub checker: String,
    pub axes: Vec<AxisMeta>,
    pub cells: Vec<Overall>,
}

impl ScanGrid {
    pub fn shape(&self) -> (usize, usize) {
        match self.axes.len() {
            1 => (1, self.axes[0].values.len()),
            _ => (self.axes[0].values.len(), self.axes[1].values.len()),
        }
    }

    pub fn at(&self, row: usize, col: usize) -> Overall {
        self.cells[row * self.shape().1 + col]
    }

    /// One line of `P`/`F`/`B` per row.
    pub fn raster(&self) -> String {
        let (_, cols) = self.shape();
        self.cells
            .chunks(cols)
            .map(|r| r.iter().map(|o| o.as_char()).collect::<String>())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn lebesgue(v: f64, reciprocal: bool) -> ExtReal {
    if reciprocal {
        ExtReal::from_recip(v)
    } else {
        ExtReal::new(v)
    }
}

/// Sets a named field of the tuple from a scan coordinate.
pub fn set_field(t: &mut IndexTuple, field: &str, v: f64, reciprocal: bool) -> Result<(), IndexError> {
    let real = if reciprocal { 1.0 / v } else { v };
    match field {
        "p" => t.p = Some(lebesgue(v, reciprocal)),
        "p_tilde" => t.p_tilde = Some(lebesgue(v, reciprocal)),
        "q" => t.q = Some(lebesgue(v, reciprocal)),
        "q_tilde" => t.q_tilde = Some(lebesgue(v, reciprocal)),
        "r" => t.r = Some(lebesgue(v, reciprocal)),
        "r_tilde" => t.r_tilde = Some(lebesgue(v, reciprocal)),
        "s" => t.s = Some(lebesgue(v, reciprocal)),
        "p0" => t.p0 = Some(lebesgue(v, reciprocal)),
        "p0_tilde" => t.p0_tilde = Some(lebesgue(v, reciprocal)),
        "alpha" => t.alpha = Some(real),
        "beta" => t.beta = Some(real),
        "gamma" => t.gamma = Some(real),
        "sigma" => t.sigma = Some(real),
        "mu" => t.mu = Some(real),
        "a" => t.a = Some(real),
        "alpha0" => t.alpha0 = Some(real),
        "eta" if real >= 0.0 => t.eta = Some(real.round() as u32),
        _ => {
            return Err(IndexError::Domain {
                field: "axes",
                reason: format!("cannot scan field `{field}` with value {v}"),
            })
        }
    }
    Ok(())
}

/// Evaluates `checker` over a 1- or 2-axis grid around `template`.
pub fn scan_region(template: &IndexTuple, axes: &[ScanAxis], checker: Checker) -> Result<ScanGrid, IndexError> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(IndexError::Domain {
            field: "axes",
            reason: format!("scan needs 1 or 2 axes, got {}", axes.len()),
        });
    }
    let samples: Vec<Vec<f64>> = axes.iter().map(ScanAxis::samples).collect();
    let cols = samples.last().map_or(1, Vec::len);
    let rows = if axes.len() == 2 { samples[0].len() } else { 1 };
    let cells = (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let mut t = template.clone();
            let (i, j) = (k / cols, k % cols);
            if axes.len() == 2 {
                set_field(&mut t, &axes[0].field, samples[0][i], axes[0].reciprocal)?;
                set_field(&mut t, &axes[1].field, samples[1][j], axes[1].reciprocal)?;
            } else {
                set_field(&mut t, &axes[0].field, samples[0][j], axes[0].reciprocal)?;
            }
            checker.run(&t).map(|v| v.overall)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScanGrid {
        checker: checker.to_string(),
        axes: axes
            .iter()
            .zip(samples)
            .map(|(a, values)| AxisMeta {
                field: a.field.clone(),
                reciprocal: a.reciprocal,
                values,
            })
            .collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::{check_stein_weiss, SwMode, SwVariant};
    use crate::index::ExtReal::Finite as F;

    fn template() -> IndexTuple {
        IndexTuple {
            n: 3,
            p: Some(F(2.0)),
            q: Some(F(4.0)),
            p_tilde: Some(F(2.0)),
            q_tilde: Some(F(2.0)),
            alpha: Some(0.0),
            beta: Some(0.0),
            gamma: Some(2.25),
            ..Default::default()
        }
    }

    #[test]
    fn degenerate_scan_equals_direct_call() {
        let c: Checker = "sw-classical".parse().unwrap();
        let g = scan_region(&template(), &[ScanAxis::new("alpha", 0.0, 1.0, 0)], c).unwrap();
        let direct = check_stein_weiss(&template(), SwVariant::Classical, SwMode::General).unwrap();
        assert_eq!(g.cells, vec![direct.overall]);
    }

    #[test]
    fn alpha_scan_passes_then_fails() {
        // binding constraint α < n/p' = 3/2
        let t = IndexTuple {
            q: Some(F(2.0)),
            gamma: Some(3.5),
            ..template()
        };
        let nh: Checker = "nonhomogeneous".parse().unwrap();
        let g = scan_region(&t, &[ScanAxis::new("alpha", 0.0, 3.0, 30)], nh).unwrap();
        let s = g.raster();
        assert_eq!(s, format!("{}B{}", "P".repeat(15), "F".repeat(15)));
    }

    #[test]
    fn tilde_scan_is_monotone() {
        // pass iff 0 <= 1/p~ - 1/q~ <= 0.05
        let t = IndexTuple {
            alpha: Some(-0.4),
            gamma: Some(2.65),
            ..template()
        };
        let axes = [
            ScanAxis { reciprocal: true, ..ScanAxis::new("p_tilde", 1.0, 0.0, 20) },
            ScanAxis { reciprocal: true, ..ScanAxis::new("q_tilde", 1.0, 0.0, 20) },
        ];
        let g = scan_region(&t, &axes, "mixed-sw".parse().unwrap()).unwrap();
        let (rows, cols) = g.shape();
        assert_eq!((rows, cols), (21, 21));
        for i in 0..rows {
            for j in 0..cols {
                let d = g.axes[0].values[i] - g.axes[1].values[j];
                let here = g.at(i, j);
                // any cell with smaller 1/p~ - 1/q~ (and p~ <= q~) is at least as good
                for i2 in 0..rows {
                    for j2 in 0..cols {
                        let d2 = g.axes[0].values[i2] - g.axes[1].values[j2];
                        let ordered = g.axes[0].values[i2] >= g.axes[1].values[j2];
                        if here == Overall::Pass && d2 <= d && ordered {
                            assert_ne!(g.at(i2, j2), Overall::Fail, "({i},{j}) -> ({i2},{j2})");
                        }
                    }
                }
            }
        }
        assert!(g.cells.contains(&Overall::Pass) && g.cells.contains(&Overall::Fail));
    }
}
