//! Differentials on the Schottky surface as truncated Poincaré series.
//!
//! Conventions: `ν_a(x) = Ψ₁(x, y) − Ψ₁(x, γ_a y)`, the cycle `α_a` is the
//! circle around `w_{-a}` oriented as part of the boundary of the fundamental
//! domain (clockwise), and `β_a` runs from `γ_a z₀ ∈ 𝒞_{-a}` to `z₀ ∈ 𝒞_a`.
//! With these choices `(1/2πi)∮_{α_a} ν_b = δ_ab` and `exp(2πiΩ_aa)` is the
//! multiplier `q_a`.

mod bers;
mod period;
pub mod quadrature;
pub mod series;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use bers::{BersKernel, BersPoles, ThetaSet};
pub use period::{beta_path, PathPiece, PeriodMatrix};
pub use quadrature::{circle_integral, ContourSpec};
pub use series::Series;

use crate::error::{Error, Result};
use crate::schottky_core::{Group, GroupWord, MobiusMap, Point, SchottkyParams, TruncationPolicy};

/// Distance below which a Poincaré summand is treated as sitting on its pole.
pub const POLE_EPS: f64 = 1e-9;

/// Coefficient of a differential `value · dx^weight_x · dy^weight_y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    pub value: C64,
    pub weight_x: i32,
    pub weight_y: i32,
    pub tail_estimate: f64,
}

impl FormValue {
    fn new(value: C64, weight_x: i32, weight_y: i32, tail_estimate: f64) -> Self {
        FormValue {
            value,
            weight_x,
            weight_y,
            tail_estimate,
        }
    }
}

/// Value of a form together with its derivative in one of its points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: C64,
    pub derivative: C64,
    pub tail_estimate: f64,
}

/// `ω(y, z)` with both partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaJet {
    pub value: C64,
    pub d_first: C64,
    pub d_second: C64,
    pub tail_estimate: f64,
}

/// Deterministic points of the fundamental domain, each at least
/// `min_clearance` radii away from every disc center.
pub fn sample_points(sp: &SchottkyParams, count: usize, min_clearance: f64) -> Vec<C64> {
    let c = sp.centroid();
    let s = sp.domain_scale();
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count && k < 100_000 {
        k += 1;
        let frac = (k as f64 * golden).fract();
        let radius = s * (0.25 + 1.1 * frac);
        let angle = k as f64 * 2.399_963_229_728_653;
        let z = c + C64::from_polar(radius, angle);
        if sp.relative_clearance(z) >= min_clearance {
            out.push(z);
        }
    }
    out
}

/// Cached group elements and auxiliary points for one set of parameters.
#[derive(Debug, Clone)]
pub struct SurfaceFunctionSet {
    sp: SchottkyParams,
    policy: TruncationPolicy,
    group: Group,
    fixed_points: Vec<C64>,
    aux_point: C64,
    probes: [C64; 2],
}

impl SurfaceFunctionSet {
    pub fn new(sp: SchottkyParams, policy: TruncationPolicy) -> Result<Self> {
        sp.ensure_valid()?;
        policy.validate()?;
        let group = Group::new(&sp, policy.max_word_length);
        let fixed_points = sp.fixed_points()?;
        let c = sp.centroid();
        let s = sp.domain_scale();
        let origin = C64::new(0.0, 0.0);
        // The auxiliary pole of Ψ₁⁽⁰⁾ sits at the origin; when the origin is close to a
        // disc it is moved, which is the same as translating the parameters.
        let aux_point = if sp.relative_clearance(origin) >= 1.5 {
            origin
        } else {
            c + C64::new(0.0, 2.0 * s)
        };
        let dir = C64::from_polar(3.0 * s, std::f64::consts::PI / 7.0);
        Ok(SurfaceFunctionSet {
            sp,
            policy,
            group,
            fixed_points,
            aux_point,
            probes: [c + dir, c - dir],
        })
    }

    pub fn params(&self) -> &SchottkyParams {
        &self.sp
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn genus(&self) -> usize {
        self.sp.genus()
    }

    pub fn words(&self) -> &[GroupWord] {
        &self.group.words
    }

    /// Generator fixed points `W_1, W_{-1}, W_2, ...`.
    pub fn fixed_points(&self) -> &[C64] {
        &self.fixed_points
    }

    pub fn aux_point(&self) -> C64 {
        self.aux_point
    }

    /// Same truncation on other parameters (used for finite differences).
    pub fn with_params(&self, sp: SchottkyParams) -> Result<Self> {
        SurfaceFunctionSet::new(sp, self.policy)
    }

    fn pole_error(&self, i: usize, what: &str) -> Error {
        Error::Pole(format!("{what} for word {}", self.group.words[i]))
    }

    fn sum<F>(&self, k: usize, term: F) -> Result<Vec<Series>>
    where
        F: Fn(usize, &MobiusMap, &mut [C64]) -> Result<()> + Sync,
    {
        series::poincare(&self.group, k, term)
    }

    fn check_domain(&self, z: C64, name: &str) -> Result<()> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("{name} = {z} is not finite")));
        }
        // boundary circles belong to the closed domain; allow for rounding on them
        if self.sp.relative_clearance(z) < 1.0 - 1e-12 {
            return Err(Error::Domain(format!("{name} = {z} lies inside a disc")));
        }
        Ok(())
    }

    /// `Ψ₁(x,y) = Σ_γ (1/(γx − y) − 1/(γx − o)) d(γx)`, `o` the auxiliary point.
    pub fn psi1_third_kind(&self, x: C64, y: C64) -> Result<FormValue> {
        self.check_domain(x, "x")?;
        self.check_domain(y, "y")?;
        let o = self.aux_point;
        let s = self.sum(1, |i, m, out| {
            let im = m.image(x);
            let (dy, d0) = (im.z - y, im.z - o);
            if dy.norm() < POLE_EPS {
                return Err(self.pole_error(i, "γx = y"));
            }
            if d0.norm() < POLE_EPS {
                return Err(self.pole_error(i, "γx hits the auxiliary pole"));
            }
            out[0] = im.d1 * (dy.inv() - d0.inv());
            Ok(())
        })?;
        Ok(FormValue::new(s[0].value, 1, 0, s[0].tail_estimate()))
    }

    /// `ω(x,y) = Σ_γ d(γx) dy / (γx − y)²`.
    pub fn bidifferential_omega(&self, x: C64, y: C64) -> Result<FormValue> {
        let j = self.omega_jet(x, y)?;
        Ok(FormValue::new(j.value, 1, 1, j.tail_estimate))
    }

    /// `ω(y,z)` with its derivatives in `y` and in `z`, summed term by term.
    pub fn omega_jet(&self, y: C64, z: C64) -> Result<OmegaJet> {
        self.check_domain(y, "x")?;
        self.check_domain(z, "y")?;
        let s = self.sum(3, |i, m, out| {
            let im = m.image(y);
            let d = im.z - z;
            if d.norm() < POLE_EPS {
                return Err(self.pole_error(i, "γx = y"));
            }
            let inv = d.inv();
            let inv2 = inv * inv;
            out[0] = im.d1 * inv2;
            out[1] = im.d2 * inv2 - 2.0 * im.d1 * im.d1 * inv2 * inv;
            out[2] = 2.0 * im.d1 * inv2 * inv;
            Ok(())
        })?;
        Ok(OmegaJet {
            value: s[0].value,
            d_first: s[1].value,
            d_second: s[2].value,
            tail_estimate: s[0].tail_estimate(),
        })
    }

    /// `ν_b(x)` for every `b = 1..g` from the probe at infinity:
    /// `ν_b(x) = −Σ_γ d(γx)/(γx − w_{-b})`, with derivatives in `x`.
    fn nu_all_series(&self, x: C64) -> Result<Vec<Series>> {
        let g = self.genus();
        let centers: Vec<C64> = (1..=g as i32).map(|b| self.sp.w(-b)).collect();
        self.sum(2 * g, |i, m, out| {
            let im = m.image(x);
            for (b, &w) in centers.iter().enumerate() {
                let d = im.z - w;
                if d.norm() < POLE_EPS {
                    return Err(self.pole_error(i, "γx hits a disc center"));
                }
                let inv = d.inv();
                out[2 * b] = -im.d1 * inv;
                out[2 * b + 1] = -(im.d2 * inv - im.d1 * im.d1 * inv * inv);
            }
            Ok(())
        })
    }

    /// All `ν_b(x)` from one pass over the group.
    pub fn nu_all(&self, x: C64) -> Result<Vec<FormValue>> {
        let s = self.nu_all_series(x)?;
        Ok((0..self.genus())
            .map(|b| FormValue::new(s[2 * b].value, 1, 0, s[2 * b].tail_estimate()))
            .collect())
    }

    /// `ν_a(x)` and `∂_x ν_a(x)`.
    pub fn nu_jet(&self, a: usize, x: C64) -> Result<Jet> {
        self.check_handle(a)?;
        self.check_domain(x, "x")?;
        let s = self.nu_all_series(x)?;
        Ok(Jet {
            value: s[2 * (a - 1)].value,
            derivative: s[2 * (a - 1) + 1].value,
            tail_estimate: s[2 * (a - 1)].tail_estimate(),
        })
    }

    /// `ν_a(x)` at a finite probe, `Ψ₁(x,y₁) − Ψ₁(x,γ_a y₁)`.
    pub fn nu_finite_probe(&self, a: usize, x: C64, probe: C64) -> Result<Series> {
        let ga = self
            .sp
            .generator_map(a as i32)
            .apply(Point::Finite(probe))
            .as_finite()
            .ok_or_else(|| Error::Domain("probe maps to infinity".into()))?;
        let s = self.sum(1, |i, m, out| {
            let im = m.image(x);
            let (d1, d2) = (im.z - probe, im.z - ga);
            if d1.norm() < POLE_EPS || d2.norm() < POLE_EPS {
                return Err(self.pole_error(i, "γx hits the probe"));
            }
            out[0] = im.d1 * (d1.inv() - d2.inv());
            Ok(())
        })?;
        Ok(s.into_iter().next().expect("one series"))
    }

    /// Holomorphic one-form `ν_a(x)`, checked against a second probe.
    pub fn holomorphic_one_form(&self, a: usize, x: C64) -> Result<FormValue> {
        Ok(self.holomorphic_one_form_report(a, x)?.0)
    }

    /// `ν_a(x)` and the discrepancy between the two probes.
    pub fn holomorphic_one_form_report(&self, a: usize, x: C64) -> Result<(FormValue, f64)> {
        self.check_handle(a)?;
        self.check_domain(x, "x")?;
        let s = self.nu_all_series(x)?;
        let v0 = &s[2 * (a - 1)];
        let probe = if (x - self.probes[0]).norm() >= (x - self.probes[1]).norm() {
            self.probes[0]
        } else {
            self.probes[1]
        };
        let v1 = self.nu_finite_probe(a, x, probe)?;
        let discrepancy = (v0.value - v1.value).norm();
        let (t0, t1) = (v0.tail_estimate(), v1.tail_estimate());
        if discrepancy > self.policy.tol * v0.value.norm().max(1.0) + 10.0 * (t0 + t1) {
            return Err(Error::Convergence(format!(
                "ν_{a}({x}) depends on the probe: discrepancy {discrepancy:.3e}"
            )));
        }
        Ok((FormValue::new(v0.value, 1, 0, t0.max(discrepancy)), discrepancy))
    }

    /// `s(x) = 6 Σ_{γ≠Id} d(γx) dx / (γx − x)²`.
    pub fn projective_connection(&self, x: C64) -> Result<FormValue> {
        let j = self.projective_connection_jet(x)?;
        Ok(FormValue::new(j.value, 2, 0, j.tail_estimate))
    }

    /// `s(x)` and `s'(x)`.
    pub fn projective_connection_jet(&self, x: C64) -> Result<Jet> {
        self.check_domain(x, "x")?;
        let s = self.sum(2, |i, m, out| {
            if i == 0 {
                return Ok(());
            }
            let im = m.image(x);
            let d = im.z - x;
            if d.norm() < POLE_EPS {
                return Err(self.pole_error(i, "γx = x"));
            }
            let inv = d.inv();
            let inv2 = inv * inv;
            out[0] = 6.0 * im.d1 * inv2;
            out[1] = 6.0 * (im.d2 * inv2 - 2.0 * im.d1 * (im.d1 - 1.0) * inv2 * inv);
            Ok(())
        })?;
        Ok(Jet {
            value: s[0].value,
            derivative: s[1].value,
            tail_estimate: s[0].tail_estimate(),
        })
    }

    /// `Λ_N(x,y) = Σ_γ (d(γx) dy/(γx − y)²)^N`.
    pub fn lambda_n(&self, x: C64, y: C64, n: u32) -> Result<FormValue> {
        if n == 0 {
            return Err(Error::InvalidParameter("Λ_N needs N ≥ 1".into()));
        }
        self.check_domain(x, "x")?;
        self.check_domain(y, "y")?;
        let s = self.sum(1, |i, m, out| {
            let im = m.image(x);
            let d = im.z - y;
            if d.norm() < POLE_EPS {
                return Err(self.pole_error(i, "γx = y"));
            }
            out[0] = (im.d1 / (d * d)).powu(n);
            Ok(())
        })?;
        Ok(FormValue::new(s[0].value, n as i32, n as i32, s[0].tail_estimate()))
    }

    /// `(1/2πi)∮_{α_a} f`, with `α_a` the circle around `w_{-a}` in the boundary
    /// orientation of the fundamental domain. Returns the value and the change
    /// under halving the node count.
    pub fn alpha_period<F>(&self, a: usize, nodes: usize, f: F) -> Result<(C64, f64)>
    where
        F: Fn(C64) -> Result<C64>,
    {
        self.check_handle(a)?;
        let ai = a as i32;
        let (v, err) = circle_integral(self.sp.w(-ai), self.sp.radius(-ai), nodes, f)?;
        Ok((-v, err))
    }

    pub(crate) fn check_handle(&self, a: usize) -> Result<()> {
        if a == 0 || a > self.genus() {
            return Err(Error::InvalidParameter(format!(
                "handle index {a} outside 1..={}",
                self.genus()
            )));
        }
        Ok(())
    }
}
