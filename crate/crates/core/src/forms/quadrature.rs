use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A circle traversed by the trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub center: C64,
    pub radius: f64,
    pub n_points: usize,
}

impl ContourSpec {
    pub fn new(center: C64, radius: f64, n_points: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("contour radius must be positive".into()));
        }
        if n_points < 32 || !n_points.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "contour node count must be a power of two, at least 32".into(),
            ));
        }
        Ok(ContourSpec {
            center,
            radius,
            n_points,
        })
    }

    /// Node `k` as an angle on the unit circle.
    pub fn unit(&self, k: usize) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * k as f64 / self.n_points as f64)
    }

    pub fn nodes(&self) -> Vec<C64> {
        (0..self.n_points).map(|k| self.center + self.radius * self.unit(k)).collect()
    }

    /// `(1/2πi) ∮ f(z) dz` counterclockwise from samples at [`nodes`](Self::nodes).
    pub fn integrate_samples(&self, samples: &[C64]) -> C64 {
        let n = self.n_points as f64;
        samples
            .iter()
            .enumerate()
            .map(|(k, f)| f * self.radius * self.unit(k))
            .sum::<C64>()
            / n
    }
}

/// `(1/2πi) ∮ f(z) dz` counterclockwise, returning the value with `n` nodes and
/// its change against the `n/2`-node rule.
pub fn circle_integral<F>(center: C64, radius: f64, n: usize, f: F) -> Result<(C64, f64)>
where
    F: Fn(C64) -> Result<C64>,
{
    let spec = ContourSpec::new(center, radius, n)?;
    let samples = spec.nodes().into_iter().map(&f).collect::<Result<Vec<C64>>>()?;
    let full = spec.integrate_samples(&samples);
    let half_spec = ContourSpec {
        n_points: n / 2,
        ..spec
    };
    let half: Vec<C64> = samples.iter().step_by(2).copied().collect();
    let coarse = half_spec.integrate_samples(&half);
    Ok((full, (full - coarse).norm()))
}

pub const PANEL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(PANEL_ORDER)
            .expect("order above one")
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Nodes `t` in `[0, 1]` and weights of a composite rule with `panels` equal panels.
pub fn composite_rule(panels: usize) -> Vec<(f64, f64)> {
    let rule = legendre_rule();
    let h = 1.0 / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let a = p as f64 * h;
        for &(x, w) in rule {
            out.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}
