use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::series::{tail_from_shells, Series};
use super::{FormValue, Jet, SurfaceFunctionSet, POLE_EPS};
use crate::error::{Error, Result};
use crate::schottky_core::Point;

/// Where the poles `A_j` of the Bers kernel sit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BersPoles {
    /// The first `2N − 1` generator fixed points `W_1, W_{-1}, W_2, ...`.
    FixedPoints,
    /// Caller supplied points.
    Explicit(Vec<C64>),
}

/// The Poincaré sum of the Bers kernel prepared at a fixed `x`:
/// `Ψ_N(x,y) = P(y) Σ_γ G_γ/(γx − y)` with `P(y) = Π_j (y − A_j)` and
/// `G_γ = d(γx)^N / Π_j (γx − A_j)`.
#[derive(Debug, Clone)]
pub struct BersKernel {
    pub n: u32,
    pub x: C64,
    pub poles: Vec<C64>,
    entries: Vec<Entry>,
    shells: usize,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    z: C64,
    g: C64,
    shell: usize,
    word: usize,
}

impl BersKernel {
    fn p(&self, y: C64) -> C64 {
        self.poles.iter().map(|a| y - a).product()
    }

    fn sum_at(&self, y: C64, power: i32) -> std::result::Result<Series, usize> {
        let mut s = Series::zero(self.shells);
        for e in &self.entries {
            let d = e.z - y;
            if d.norm() < POLE_EPS {
                return Err(e.word);
            }
            let t = e.g * d.powi(-power);
            s.value += t;
            s.shell_abs[e.shell] += t.norm();
            s.abs_total += t.norm();
        }
        Ok(s)
    }

    fn scaled(&self, y: C64, power: i32, set: &SurfaceFunctionSet) -> Result<Series> {
        let mut s = self
            .sum_at(y, power)
            .map_err(|w| set.pole_error(w, "γx = y in the Bers sum"))?;
        let p = self.p(y);
        s.value *= p;
        s.abs_total *= p.norm();
        s.shell_abs.iter_mut().for_each(|v| *v *= p.norm());
        Ok(s)
    }

    /// `Ψ_N(x,y)`; for `N = 1` this omits the `y`-independent auxiliary term.
    pub fn value(&self, y: C64, set: &SurfaceFunctionSet) -> Result<Series> {
        self.scaled(y, 1, set)
    }

    /// `Ψ_N(x,y)` and `∂_y Ψ_N(x,y)`.
    pub fn jet(&self, y: C64, set: &SurfaceFunctionSet) -> Result<Jet> {
        let v = self.scaled(y, 1, set)?;
        let d = self.scaled(y, 2, set)?;
        let log_p: C64 = self.poles.iter().map(|a| (y - a).inv()).sum();
        Ok(Jet {
            value: v.value,
            derivative: d.value + v.value * log_p,
            tail_estimate: v.tail_estimate(),
        })
    }
}

/// `Θ_a(x; ℓ)` for all handles and all `0 ≤ ℓ ≤ 2N − 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSet {
    pub n: u32,
    pub x: C64,
    /// `values[a - 1][ℓ]`.
    pub values: Vec<Vec<C64>>,
    pub tail_estimates: Vec<Vec<f64>>,
    /// Change of each coefficient when the trapezoid node count is halved.
    pub quadrature_errors: Vec<Vec<f64>>,
}

impl ThetaSet {
    pub fn get(&self, a: usize, ell: usize) -> C64 {
        self.values[a - 1][ell]
    }

    pub fn max_error(&self) -> f64 {
        self.tail_estimates
            .iter()
            .flatten()
            .zip(self.quadrature_errors.iter().flatten())
            .map(|(t, q)| t + q)
            .fold(0.0, f64::max)
    }
}

impl SurfaceFunctionSet {
    /// Pole set of the weight-`n` Bers kernel.
    pub fn bers_poles(&self, n: u32, poles: &BersPoles) -> Result<Vec<C64>> {
        if n < 2 {
            return Err(Error::InvalidParameter("the Bers kernel needs N ≥ 2".into()));
        }
        let need = 2 * n as usize - 1;
        let list = match poles {
            BersPoles::FixedPoints => {
                if self.fixed_points.len() < need {
                    return Err(Error::Configuration(format!(
                        "weight {n} needs {need} distinct limit points, genus {} provides {}",
                        self.genus(),
                        self.fixed_points.len()
                    )));
                }
                self.fixed_points[..need].to_vec()
            }
            BersPoles::Explicit(v) => {
                if v.len() != need {
                    return Err(Error::Configuration(format!(
                        "weight {n} needs {need} poles, {} given",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        let scale = self.sp.domain_scale();
        for i in 0..list.len() {
            for j in 0..i {
                if (list[i] - list[j]).norm() <= 1e-12 * scale {
                    return Err(Error::Configuration("Bers poles are not distinct".into()));
                }
            }
        }
        Ok(list)
    }

    /// Prepares the Poincaré sum of the weight-`n` kernel at `x`. For `n = 1` the
    /// kernel is `1/(x − y)` (the auxiliary pole only adds a constant in `y`).
    pub fn bers_kernel(&self, n: u32, x: C64, poles: &BersPoles) -> Result<BersKernel> {
        self.check_domain(x, "x")?;
        let poles = if n == 1 { Vec::new() } else { self.bers_poles(n, poles)? };
        let mut entries = Vec::with_capacity(self.group.len());
        for (shell, range) in self.group.shells.iter().enumerate() {
            for i in range.clone() {
                let m = &self.group.maps[i];
                let num = m.a * x + m.b;
                let den = m.c * x + m.d;
                let mut g = den.inv();
                if n == 1 {
                    g *= g;
                } else {
                    let mut skip = false;
                    for a in &poles {
                        let u = num - a * den;
                        if u.norm() <= 16.0 * f64::EPSILON * (num.norm() + a.norm() * den.norm()) {
                            if i == 0 {
                                return Err(Error::Pole(format!("x = {x} is a pole of the Bers kernel")));
                            }
                            // γx agrees with a pole to rounding, so the exact summand is
                            // below the rounding level of the sum.
                            skip = true;
                            break;
                        }
                        g /= u;
                    }
                    if skip {
                        continue;
                    }
                }
                entries.push(Entry {
                    z: num / den,
                    g,
                    shell,
                    word: i,
                });
            }
        }
        Ok(BersKernel {
            n,
            x,
            poles,
            entries,
            shells: self.group.shells.len(),
        })
    }

    /// Bers form `Ψ_N(x,y)` with the fixed-point pole set.
    pub fn psi_n_bers(&self, x: C64, y: C64, n: u32) -> Result<FormValue> {
        self.psi_n_bers_with(x, y, n, &BersPoles::FixedPoints)
    }

    pub fn psi_n_bers_with(&self, x: C64, y: C64, n: u32, poles: &BersPoles) -> Result<FormValue> {
        if n < 2 {
            return Err(Error::InvalidParameter("the Bers form needs N ≥ 2".into()));
        }
        self.check_domain(y, "y")?;
        let k = self.bers_kernel(n, x, poles)?;
        let s = k.value(y, self)?;
        Ok(FormValue {
            value: s.value,
            weight_x: n as i32,
            weight_y: 1 - n as i32,
            tail_estimate: s.tail_estimate(),
        })
    }

    /// `Ψ_N(x,y)` and `∂_y Ψ_N(x,y)` by term-wise differentiation.
    pub fn psi_n_bers_jet(&self, x: C64, y: C64, n: u32, poles: &BersPoles) -> Result<Jet> {
        self.check_domain(y, "y")?;
        self.bers_kernel(n, x, poles)?.jet(y, self)
    }

    /// `Ψ_N(x,y) − Ψ_N(x,γ_a y) γ_a'(y)^{1−N}`.
    pub fn psi_quasi_period(&self, x: C64, y: C64, n: u32, a: usize, poles: &BersPoles) -> Result<C64> {
        self.check_handle(a)?;
        let k = self.bers_kernel(n, x, poles)?;
        let ga = self.sp.generator_map(a as i32);
        let im = ga.image(y);
        let lhs = k.value(y, self)?.value - k.value(im.z, self)?.value * im.d1.powi(1 - n as i32);
        Ok(lhs)
    }

    /// Extracts every `Θ_a(x; ℓ)` from trapezoid sums on the circles `𝒞_{±a}`.
    pub fn theta_set(&self, n: u32, x: C64, poles: &BersPoles) -> Result<ThetaSet> {
        if n == 0 {
            return Err(Error::InvalidParameter("Θ needs N ≥ 1".into()));
        }
        let kernel = self.bers_kernel(n, x, poles)?;
        let nodes = 2 * self.policy.contour_nodes;
        let g = self.genus();
        let top = 2 * n as usize - 1;
        let mut values = Vec::with_capacity(g);
        let mut tails = Vec::with_capacity(g);
        let mut qerrs = Vec::with_capacity(g);
        for a in 1..=g as i32 {
            // Laurent coefficients on both circles with `nodes` and `nodes/2` points
            let coeffs = |b: i32| -> Result<(Vec<C64>, Vec<C64>, f64)> {
                let (w, r) = (self.sp.w(b), self.sp.radius(b));
                let samples: Vec<Series> = (0..nodes)
                    .into_par_iter()
                    .map(|k| {
                        let u = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / nodes as f64);
                        kernel.value(w + r * u, self)
                    })
                    .collect::<Result<_>>()?;
                let mut fine = vec![C64::new(0.0, 0.0); top];
                let mut coarse = vec![C64::new(0.0, 0.0); top];
                let mut tail: f64 = 0.0;
                for (k, s) in samples.iter().enumerate() {
                    let u = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / nodes as f64);
                    let mut e = C64::new(1.0, 0.0);
                    for ell in 0..top {
                        let t = s.value * e;
                        fine[ell] += t;
                        if k % 2 == 0 {
                            coarse[ell] += t;
                        }
                        e *= u / r;
                    }
                    tail = tail.max(tail_from_shells(&s.shell_abs, s.abs_total));
                }
                for ell in 0..top {
                    fine[ell] /= nodes as f64;
                    coarse[ell] /= (nodes / 2) as f64;
                }
                Ok((fine, coarse, tail))
            };
            let (fp, cp, tp) = coeffs(a)?;
            let (fm, cm, tm) = coeffs(-a)?;
            let rho = self.sp.rho(a);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let mut v = Vec::with_capacity(top);
            let mut t = Vec::with_capacity(top);
            let mut q = Vec::with_capacity(top);
            for ell in 0..top {
                let f = sign * rho.powi(n as i32 - 1 - ell as i32);
                let j = top - 1 - ell;
                let fine = fp[ell] + f * fm[j];
                let coarse = cp[ell] + f * cm[j];
                let r = self.sp.radius(a);
                v.push(fine);
                t.push(tp * r.powi(-(ell as i32)) + f.norm() * tm * r.powi(-(j as i32)));
                q.push((fine - coarse).norm());
            }
            values.push(v);
            tails.push(t);
            qerrs.push(q);
        }
        let set = ThetaSet {
            n,
            x,
            values,
            tail_estimates: tails,
            quadrature_errors: qerrs,
        };
        for a in 0..g {
            for ell in 0..top {
                let v = set.values[a][ell];
                let q = set.quadrature_errors[a][ell];
                if q > self.policy.tol * v.norm().max(1.0) {
                    return Err(Error::Quadrature(format!(
                        "Θ_{}(x; {ell}) changes by {q:.3e} when the node count is halved",
                        a + 1
                    )));
                }
            }
        }
        Ok(set)
    }

    /// `Θ_a(x; ℓ)` as an `N`-form in `x` (fixed-point Bers kernel for `N ≥ 2`).
    pub fn theta_n_forms(&self, n: u32, a: usize, ell: usize, x: C64) -> Result<FormValue> {
        self.check_handle(a)?;
        if n == 0 || ell > 2 * n as usize - 2 {
            return Err(Error::InvalidParameter(format!("ℓ = {ell} outside 0..={}", 2 * n as i64 - 2)));
        }
        let set = self.theta_set(n, x, &BersPoles::FixedPoints)?;
        Ok(FormValue {
            value: set.get(a, ell),
            weight_x: n as i32,
            weight_y: 0,
            tail_estimate: set.tail_estimates[a - 1][ell] + set.quadrature_errors[a - 1][ell],
        })
    }

    /// True when `z` is a finite point of the closed fundamental domain.
    pub fn contains(&self, z: C64) -> bool {
        self.sp.in_fundamental_domain(Point::Finite(z))
    }
}
