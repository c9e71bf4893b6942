use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::mobius::{MobiusMap, Point};
use crate::error::{Error, Result};

/// Sewing data of one handle: the centers `w_a`, `w_{-a}` and the scale `rho_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Handle {
    pub w_plus: C64,
    pub w_minus: C64,
    pub rho: C64,
}

/// A point of the parameter space: `g` handles glued through
/// `(z' - w_{-a})(z - w_a) = rho_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchottkyParams {
    handles: Vec<Handle>,
}

/// Fixed points and multiplier of one generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalHandle {
    /// Repelling fixed point `W_a`.
    pub w_plus: C64,
    /// Attracting fixed point `W_{-a}`.
    pub w_minus: C64,
    pub q: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    pub handles: Vec<ClassicalHandle>,
}

/// Truncation controls shared by every infinite object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Largest reduced word length kept in Poincaré sums.
    pub max_word_length: usize,
    /// Number of modes kept per handle index in the Zhu matrices.
    pub mode_cutoff: usize,
    pub tol: f64,
    /// Trapezoid nodes on each circle (doubled once for the convergence check).
    pub contour_nodes: usize,
}

impl TruncationPolicy {
    /// Policy with word length `l` and the coupled mode cutoff `2l + 8`.
    pub fn with_word_length(l: usize) -> Self {
        TruncationPolicy {
            max_word_length: l,
            mode_cutoff: 2 * l + 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_cutoff < 1 {
            return Err(Error::InvalidParameter("mode cutoff must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.contour_nodes < 32 || !self.contour_nodes.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "contour nodes must be a power of two, at least 32".into(),
            ));
        }
        Ok(())
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            max_word_length: 6,
            mode_cutoff: 20,
            tol: 1e-8,
            contour_nodes: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMargin {
    pub a: i32,
    pub b: i32,
    pub distance: f64,
    pub radius_sum: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub min_margin: f64,
    pub pairs: Vec<PairMargin>,
    pub violations: Vec<PairMargin>,
}

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Signed handle indices in the canonical order `1, -1, 2, -2, ...`.
pub fn signed_indices(g: usize) -> Vec<i32> {
    (1..=g as i32).flat_map(|a| [a, -a]).collect()
}

/// Position of a signed index in the canonical order.
pub fn index_position(a: i32) -> usize {
    2 * (a.unsigned_abs() as usize - 1) + usize::from(a < 0)
}

impl SchottkyParams {
    pub fn new(handles: Vec<Handle>) -> Result<Self> {
        if handles.is_empty() {
            return Err(Error::InvalidParameter("genus must be positive".into()));
        }
        for (i, h) in handles.iter().enumerate() {
            if !(finite(h.w_plus) && finite(h.w_minus) && finite(h.rho)) {
                return Err(Error::InvalidParameter(format!("handle {} has non-finite entries", i + 1)));
            }
            if h.rho == C64::new(0.0, 0.0) {
                return Err(Error::InvalidParameter(format!("rho of handle {} is zero", i + 1)));
            }
        }
        Ok(SchottkyParams { handles })
    }

    pub fn genus(&self) -> usize {
        self.handles.len()
    }

    pub fn handles(&self) -> &[Handle] {
        &self.handles
    }

    pub fn handle(&self, a: usize) -> &Handle {
        &self.handles[a - 1]
    }

    pub fn signed_indices(&self) -> Vec<i32> {
        signed_indices(self.genus())
    }

    /// Center `w_a` for a signed index.
    pub fn w(&self, a: i32) -> C64 {
        let h = &self.handles[a.unsigned_abs() as usize - 1];
        if a > 0 {
            h.w_plus
        } else {
            h.w_minus
        }
    }

    /// `rho_a`, with `rho_{-a} = rho_a`.
    pub fn rho(&self, a: i32) -> C64 {
        self.handles[a.unsigned_abs() as usize - 1].rho
    }

    /// Principal branch of `rho_a^{1/2}`.
    pub fn sqrt_rho(&self, a: i32) -> C64 {
        self.rho(a).sqrt()
    }

    /// Radius `|rho_a|^{1/2}` of the disc around `w_a`.
    pub fn radius(&self, a: i32) -> f64 {
        self.rho(a).norm().sqrt()
    }

    pub fn with_w(&self, a: i32, value: C64) -> SchottkyParams {
        let mut out = self.clone();
        let h = &mut out.handles[a.unsigned_abs() as usize - 1];
        if a > 0 {
            h.w_plus = value;
        } else {
            h.w_minus = value;
        }
        out
    }

    pub fn with_rho(&self, a: usize, value: C64) -> SchottkyParams {
        let mut out = self.clone();
        out.handles[a - 1].rho = value;
        out
    }

    pub fn validate(&self) -> ValidityReport {
        let idx = self.signed_indices();
        let mut pairs = Vec::new();
        for (i, &a) in idx.iter().enumerate() {
            for &b in &idx[i + 1..] {
                let distance = (self.w(a) - self.w(b)).norm();
                let radius_sum = self.radius(a) + self.radius(b);
                pairs.push(PairMargin {
                    a,
                    b,
                    distance,
                    radius_sum,
                    margin: distance - radius_sum,
                });
            }
        }
        let violations: Vec<PairMargin> = pairs.iter().filter(|p| !(p.margin > 0.0)).cloned().collect();
        let min_margin = pairs.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
        ValidityReport {
            valid: violations.is_empty(),
            min_margin,
            pairs,
            violations,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().valid
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let r = self.validate();
        if r.valid {
            Ok(())
        } else {
            let names: Vec<String> = r.violations.iter().map(|p| format!("({}, {})", p.a, p.b)).collect();
            Err(Error::InvalidParameter(format!("overlapping discs {}", names.join(", "))))
        }
    }

    /// Closed fundamental domain: outside every open disc.
    pub fn in_fundamental_domain(&self, z: Point) -> bool {
        match z {
            Point::Infinity => true,
            Point::Finite(z) => self
                .signed_indices()
                .iter()
                .all(|&a| (z - self.w(a)).norm() >= self.radius(a)),
        }
    }

    /// Smallest value of `|z - w_a| / r_a` over all discs.
    pub fn relative_clearance(&self, z: C64) -> f64 {
        self.signed_indices()
            .iter()
            .map(|&a| (z - self.w(a)).norm() / self.radius(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> C64 {
        let idx = self.signed_indices();
        idx.iter().map(|&a| self.w(a)).sum::<C64>() / idx.len() as f64
    }

    /// Radius of a disc around the centroid that contains every circle.
    pub fn domain_scale(&self) -> f64 {
        let c = self.centroid();
        self.signed_indices()
            .iter()
            .map(|&a| (self.w(a) - c).norm() + self.radius(a))
            .fold(0.0, f64::max)
            .max(1e-300)
    }

    /// The generator `γ_a z = w_{-a} + rho_a/(z - w_a)`; negative indices give the inverse.
    pub fn generator_map(&self, a: i32) -> MobiusMap {
        let wa = self.w(a);
        let wm = self.w(-a);
        let rho = self.rho(a);
        let s = (-rho).sqrt();
        MobiusMap {
            a: wm / s,
            b: (rho - wm * wa) / s,
            c: C64::new(1.0, 0.0) / s,
            d: -wa / s,
        }
    }

    /// Conjugated parameters `(w_a, rho_a)` under a Möbius map.
    pub fn mobius_act(&self, m: &MobiusMap) -> Result<SchottkyParams> {
        let (a_, b_, c_, d_) = (m.a, m.b, m.c, m.d);
        if c_.norm() > 0.0 {
            let pole = -d_ / c_;
            for a in self.signed_indices() {
                if (pole - self.w(a)).norm() <= self.radius(a) {
                    return Err(Error::DomainExit(format!("the map sends a point of disc {a} to infinity")));
                }
            }
        }
        let mut handles = Vec::with_capacity(self.genus());
        for h in &self.handles {
            let image = |wa: C64, wm: C64| -> Result<C64> {
                let den = (c_ * wa + d_) * (c_ * wm + d_) - h.rho * c_ * c_;
                if den.norm() < 1e-300 {
                    return Err(Error::DomainExit("a disc is mapped through infinity".into()));
                }
                Ok(((a_ * wa + b_) * (c_ * wm + d_) - h.rho * a_ * c_) / den)
            };
            let den = (c_ * h.w_plus + d_) * (c_ * h.w_minus + d_) - h.rho * c_ * c_;
            if den.norm() < 1e-300 {
                return Err(Error::DomainExit("a disc is mapped through infinity".into()));
            }
            handles.push(Handle {
                w_plus: image(h.w_plus, h.w_minus)?,
                w_minus: image(h.w_minus, h.w_plus)?,
                rho: h.rho / (den * den),
            });
        }
        let out = SchottkyParams::new(handles).map_err(|e| Error::DomainExit(e.to_string()))?;
        let report = out.validate();
        if !report.valid {
            let names: Vec<String> = report.violations.iter().map(|p| format!("({}, {})", p.a, p.b)).collect();
            return Err(Error::DomainExit(format!("image has overlapping discs {}", names.join(", "))));
        }
        Ok(out)
    }

    /// Fixed points and multipliers of the generators.
    pub fn to_classical(&self) -> Result<ClassicalParams> {
        let mut handles = Vec::with_capacity(self.genus());
        for (i, h) in self.handles.iter().enumerate() {
            let (wa, wm, rho) = (h.w_plus, h.w_minus, h.rho);
            // (z - w_{-a})(z - w_a) = rho
            let disc = (wa - wm) * (wa - wm) + 4.0 * rho;
            let scale = (wa - wm).norm().powi(2) + rho.norm();
            if disc.norm() <= 1e-14 * scale {
                return Err(Error::DegenerateMap(format!("generator {} is parabolic", i + 1)));
            }
            let s = disc.sqrt();
            let r1 = (wa + wm + s) / 2.0;
            let r2 = (wa + wm - s) / 2.0;
            let k1 = -rho / ((r1 - wa) * (r1 - wa));
            let k2 = -rho / ((r2 - wa) * (r2 - wa));
            let (attr, rep, q) = if k1.norm() < k2.norm() { (r1, r2, k1) } else { (r2, r1, k2) };
            if !(q.norm() < 1.0) || (q.norm() - 1.0).abs() < 1e-14 {
                return Err(Error::DegenerateMap(format!("generator {} is not loxodromic", i + 1)));
            }
            handles.push(ClassicalHandle {
                w_plus: rep,
                w_minus: attr,
                q,
            });
        }
        Ok(ClassicalParams { handles })
    }

    /// Generator fixed points in the order `W_1, W_{-1}, W_2, W_{-2}, ...`.
    pub fn fixed_points(&self) -> Result<Vec<C64>> {
        Ok(self
            .to_classical()?
            .handles
            .iter()
            .flat_map(|h| [h.w_plus, h.w_minus])
            .collect())
    }
}

impl ClassicalParams {
    pub fn to_schottky(&self) -> Result<SchottkyParams> {
        let mut handles = Vec::with_capacity(self.handles.len());
        for (i, h) in self.handles.iter().enumerate() {
            let one_minus_q = C64::new(1.0, 0.0) - h.q;
            if one_minus_q.norm() < 1e-300 {
                return Err(Error::InvalidParameter(format!("multiplier of handle {} equals 1", i + 1)));
            }
            let diff = h.w_plus - h.w_minus;
            handles.push(Handle {
                w_plus: (h.w_plus - h.q * h.w_minus) / one_minus_q,
                w_minus: (h.w_minus - h.q * h.w_plus) / one_minus_q,
                rho: -h.q * diff * diff / (one_minus_q * one_minus_q),
            });
        }
        SchottkyParams::new(handles)
    }
}
