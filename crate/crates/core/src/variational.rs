//! Moduli derivatives `∂_{a,ℓ}`, the operator `∇(x)` and finite-difference
//! checks of the differential identities.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BersPoles, SurfaceFunctionSet, ThetaSet};
use crate::schottky_core::{MobiusMap, SchottkyParams};
use crate::zhu_matrix::heisenberg_partition;

/// `∂_{a,0} = ∂_{w_a}`, `∂_{a,1} = ρ_a ∂_{ρ_a}`, `∂_{a,2} = ρ_a ∂_{w_{−a}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuliDirection {
    pub a: usize,
    pub ell: usize,
}

impl ModuliDirection {
    pub fn new(a: usize, ell: usize) -> Result<Self> {
        if a == 0 || ell > 2 {
            return Err(Error::InvalidParameter(format!("no moduli direction ({a}, {ell})")));
        }
        Ok(ModuliDirection { a, ell })
    }

    /// All `3g` directions, handle-major.
    pub fn all(g: usize) -> Vec<ModuliDirection> {
        (1..=g)
            .flat_map(|a| (0..3).map(move |ell| ModuliDirection { a, ell }))
            .collect()
    }
}

/// Direction of the complex step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepAxis {
    Real,
    Imaginary,
}

/// Central differences with step `h`. Steps in `w` are absolute; steps in `ρ`
/// are taken in `log ρ`, which is exactly `ρ ∂_ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffConfig {
    pub step: f64,
    pub axis: StepAxis,
}

impl Default for FiniteDiffConfig {
    fn default() -> Self {
        FiniteDiffConfig {
            step: 1e-5,
            axis: StepAxis::Real,
        }
    }
}

impl FiniteDiffConfig {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("finite-difference step {step} must be positive")));
        }
        Ok(FiniteDiffConfig {
            step,
            axis: StepAxis::Real,
        })
    }

    /// Default step scaled by the size of the configuration.
    pub fn for_params(sp: &SchottkyParams) -> Self {
        FiniteDiffConfig {
            step: 1e-5 * sp.domain_scale().max(1.0),
            axis: StepAxis::Real,
        }
    }

    pub fn imaginary(self) -> Self {
        FiniteDiffConfig {
            axis: StepAxis::Imaginary,
            ..self
        }
    }

    fn unit(&self) -> C64 {
        match self.axis {
            StepAxis::Real => C64::new(1.0, 0.0),
            StepAxis::Imaginary => C64::new(0.0, 1.0),
        }
    }
}

/// Parameters displaced by `t` along a raw coordinate.
fn displaced(sp: &SchottkyParams, dir: ModuliDirection, t: C64) -> SchottkyParams {
    let a = dir.a as i32;
    match dir.ell {
        0 => sp.with_w(a, sp.w(a) + t),
        1 => sp.with_rho(dir.a, sp.rho(a) * t.exp()),
        _ => sp.with_w(-a, sp.w(-a) + t),
    }
}

fn displaced_valid(sp: &SchottkyParams, dir: ModuliDirection, t: C64) -> Result<SchottkyParams> {
    let p = displaced(sp, dir, t);
    if !p.is_valid() {
        return Err(Error::StepTooLarge(format!(
            "step {t} in direction ({}, {}) leaves the Schottky space",
            dir.a, dir.ell
        )));
    }
    Ok(p)
}

/// `∂_{a,ℓ}` of a vector-valued function. `unwrap` removes integer jumps of
/// functions defined modulo integers (such as normalized periods).
pub fn moduli_partial_vec<F>(
    dir: ModuliDirection,
    f: &F,
    sp: &SchottkyParams,
    cfg: &FiniteDiffConfig,
    unwrap: bool,
) -> Result<Vec<C64>>
where
    F: Fn(&SchottkyParams) -> Result<Vec<C64>> + ?Sized,
{
    if dir.a == 0 || dir.a > sp.genus() || dir.ell > 2 {
        return Err(Error::InvalidParameter(format!(
            "direction ({}, {}) outside genus {}",
            dir.a,
            dir.ell,
            sp.genus()
        )));
    }
    let h = cfg.step * cfg.unit();
    let plus = f(&displaced_valid(sp, dir, h)?)?;
    let minus = f(&displaced_valid(sp, dir, -h)?)?;
    let scale = if dir.ell == 2 { sp.rho(dir.a as i32) } else { C64::new(1.0, 0.0) };
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| {
            let mut d = p - m;
            if unwrap {
                d -= d.re.round();
            }
            scale * d / (2.0 * h)
        })
        .collect())
}

/// Central difference of `f` along `∂_{a,ℓ}`.
pub fn moduli_partial<F>(dir: ModuliDirection, f: &F, sp: &SchottkyParams, cfg: &FiniteDiffConfig) -> Result<C64>
where
    F: Fn(&SchottkyParams) -> Result<C64> + ?Sized,
{
    let v = moduli_partial_vec(dir, &|p: &SchottkyParams| Ok(vec![f(p)?]), sp, cfg, false)?;
    Ok(v[0])
}

/// `Σ_a ∂_{w_a}` style raw derivatives used by the SL₂ generators.
fn raw_w_partial<F>(a: i32, f: &F, sp: &SchottkyParams, cfg: &FiniteDiffConfig) -> Result<C64>
where
    F: Fn(&SchottkyParams) -> Result<C64> + ?Sized,
{
    let dir = if a > 0 {
        ModuliDirection { a: a as usize, ell: 0 }
    } else {
        ModuliDirection {
            a: (-a) as usize,
            ell: 2,
        }
    };
    let d = moduli_partial(dir, f, sp, cfg)?;
    Ok(if a > 0 { d } else { d / sp.rho(a) })
}

/// `∇(x) = Σ_{a,ℓ} Θ_a(x,ℓ) ∂_{a,ℓ}` with `Θ` cached from the weight-2 Bers kernel.
#[derive(Debug, Clone)]
pub struct NablaOperator {
    pub theta: ThetaSet,
    pub sp: SchottkyParams,
}

impl NablaOperator {
    pub fn new(set: &SurfaceFunctionSet, x: C64, poles: &BersPoles) -> Result<Self> {
        if set.genus() < 2 && matches!(poles, BersPoles::FixedPoints) {
            return Err(Error::Configuration(
                "∇ needs three limit points for the weight-2 Bers kernel; genus 1 provides two".into(),
            ));
        }
        Ok(NablaOperator {
            theta: set.theta_set(2, x, poles)?,
            sp: set.params().clone(),
        })
    }

    pub fn x(&self) -> C64 {
        self.theta.x
    }

    pub fn apply<F>(&self, f: &F, cfg: &FiniteDiffConfig) -> Result<C64>
    where
        F: Fn(&SchottkyParams) -> Result<C64> + Sync,
    {
        Ok(self.apply_vec(&|p: &SchottkyParams| Ok(vec![f(p)?]), cfg, false)?[0])
    }

    /// `∇` of every component of `f`; the `6g` evaluations run in parallel.
    pub fn apply_vec<F>(&self, f: &F, cfg: &FiniteDiffConfig, unwrap: bool) -> Result<Vec<C64>>
    where
        F: Fn(&SchottkyParams) -> Result<Vec<C64>> + Sync,
    {
        let dirs = ModuliDirection::all(self.sp.genus());
        let parts: Vec<Vec<C64>> = dirs
            .par_iter()
            .map(|d| moduli_partial_vec(*d, f, &self.sp, cfg, unwrap))
            .collect::<Result<_>>()?;
        let mut out = vec![C64::new(0.0, 0.0); parts[0].len()];
        for (d, p) in dirs.iter().zip(&parts) {
            let th = self.theta.get(d.a, d.ell);
            for (o, v) in out.iter_mut().zip(p) {
                *o += th * v;
            }
        }
        Ok(out)
    }
}

/// Residual of one sample of an identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResidual {
    pub label: String,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub residual: f64,
}

/// Outcome of one identity over all its samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub max_residual: f64,
    pub samples: Vec<SampleResidual>,
    pub tolerance: f64,
    /// Relative size of the series and quadrature errors entering the samples.
    pub truncation_floor: f64,
    pub passed: bool,
}

impl IdentityReport {
    fn new(identity: &str, tolerance: f64, samples: Vec<SampleResidual>, truncation_floor: f64) -> Self {
        let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
        let finite = samples.iter().all(|s| s.residual.is_finite());
        IdentityReport {
            identity: identity.to_string(),
            max_residual: if finite { max_residual } else { f64::INFINITY },
            passed: finite && max_residual < tolerance,
            samples,
            tolerance,
            truncation_floor,
        }
    }

    /// A failure whose residual is explained by the truncation floor.
    pub fn truncation_limited(&self) -> bool {
        !self.passed && self.truncation_floor * 10.0 >= self.tolerance
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// `|l − r| / max(|l|, |r|, 1e−30)`.
pub fn relative_residual(l: C64, r: C64) -> f64 {
    (l - r).norm() / l.norm().max(r.norm()).max(1e-30)
}

fn sample(label: String, lhs: C64, rhs: C64, residual: f64) -> SampleResidual {
    SampleResidual {
        label,
        lhs: [lhs.re, lhs.im],
        rhs: [rhs.re, rhs.im],
        residual,
    }
}

fn partition_fn(cutoff: usize) -> impl Fn(&SchottkyParams) -> Result<C64> + Sync {
    move |p: &SchottkyParams| Ok(heisenberg_partition(p, cutoff)?.value)
}

/// Settings shared by the identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub fd: FiniteDiffConfig,
    pub tolerance: f64,
    /// Points `x` where `∇(x)` is taken.
    pub x_samples: Vec<C64>,
    /// Second points `y, z` for the PDEs.
    pub y: C64,
    pub z: C64,
}

impl CheckConfig {
    /// Default samples spread over the fundamental domain.
    pub fn for_surface(set: &SurfaceFunctionSet) -> Self {
        let pts = crate::forms::sample_points(set.params(), 5, 2.0);
        CheckConfig {
            fd: FiniteDiffConfig::new(1e-4).expect("positive"),
            tolerance: 1e-3,
            x_samples: pts[..3].to_vec(),
            y: pts[3],
            z: pts[4],
        }
    }
}

/// `𝓛_{−1}, 𝓛_0, 𝓛_1` applied to `Z_M`, plus finite Möbius transport of the parameters.
pub fn check_sl2_invariance(
    set: &SurfaceFunctionSet,
    cfg: &FiniteDiffConfig,
    tolerance: f64,
    transports: &[MobiusMap],
) -> Result<IdentityReport> {
    let sp = set.params();
    let m = set.policy().mode_cutoff;
    let zf = partition_fn(m);
    let zv = heisenberg_partition(sp, m)?;
    let z = zv.value;
    let g = sp.genus();
    let idx = sp.signed_indices();
    let dw: Vec<C64> = idx
        .par_iter()
        .map(|&a| raw_w_partial(a, &zf, sp, cfg))
        .collect::<Result<_>>()?;
    let drho: Vec<C64> = (1..=g)
        .into_par_iter()
        .map(|a| moduli_partial(ModuliDirection { a, ell: 1 }, &zf, sp, cfg))
        .collect::<Result<_>>()?;
    let mut l = [C64::new(0.0, 0.0); 3];
    for (k, &a) in idx.iter().enumerate() {
        let w = sp.w(a);
        l[0] -= dw[k];
        l[1] -= w * dw[k];
        l[2] -= (w * w + sp.rho(a)) * dw[k];
    }
    for a in 1..=g {
        let ai = a as i32;
        l[1] -= 2.0 * drho[a - 1];
        l[2] -= 2.0 * (sp.w(ai) + sp.w(-ai)) * drho[a - 1];
    }
    let zero = C64::new(0.0, 0.0);
    let mut samples: Vec<SampleResidual> = ["L_-1", "L_0", "L_1"]
        .iter()
        .zip(l)
        .map(|(name, v)| sample(format!("{name} Z_M"), v, zero, v.norm() / z.norm()))
        .collect();
    for (i, t) in transports.iter().enumerate() {
        let moved = sp.mobius_act(t)?;
        let zm = heisenberg_partition(&moved, m)?.value;
        samples.push(sample(format!("transport {i}"), zm, z, relative_residual(zm, z)));
    }
    Ok(IdentityReport::new(
        "sl2-invariance",
        tolerance,
        samples,
        zv.tail_estimate / z.norm(),
    ))
}

/// Three Möbius maps close to the identity: a translation, a rotation-dilation
/// and a special conformal map.
pub fn default_transports(sp: &SchottkyParams) -> Vec<MobiusMap> {
    let s = sp.domain_scale().max(1.0);
    let c = |re: f64, im: f64| C64::new(re, im);
    vec![
        MobiusMap::translation(c(0.05, -0.03) * s),
        MobiusMap::new(c(1.02, 0.03), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).expect("invertible"),
        MobiusMap::new(c(1.0, 0.0), c(0.0, 0.0), c(0.004, 0.002) / s, c(1.0, 0.0)).expect("invertible"),
    ]
}

fn period_fn(set: &SurfaceFunctionSet) -> impl Fn(&SchottkyParams) -> Result<Vec<C64>> + Sync + '_ {
    move |p: &SchottkyParams| {
        let pm = set.with_params(p.clone())?.period_matrix()?;
        Ok(pm.omega.into_iter().flatten().collect())
    }
}

/// `2πi ∇(x) Ω_ab = ν_a(x) ν_b(x)` over every pair and every sample `x`.
pub fn check_rauch(set: &SurfaceFunctionSet, check: &CheckConfig) -> Result<IdentityReport> {
    let g = set.genus();
    let pm = set.period_matrix()?;
    let f = period_fn(set);
    let mut samples = Vec::new();
    let mut floor: f64 = pm.error_estimate();
    for (i, &x) in check.x_samples.iter().enumerate() {
        let nabla = NablaOperator::new(set, x, &BersPoles::FixedPoints)?;
        let d = nabla.apply_vec(&f, &check.fd, true)?;
        let nu = set.nu_all(x)?;
        for a in 0..g {
            for b in 0..g {
                let lhs = C64::new(0.0, 2.0 * PI) * d[a * g + b];
                let rhs = nu[a].value * nu[b].value;
                floor = floor.max((nu[a].tail_estimate + nu[b].tail_estimate) / nu[a].value.norm().min(nu[b].value.norm()));
                samples.push(sample(
                    format!("x{i} ({}, {})", a + 1, b + 1),
                    lhs,
                    rhs,
                    relative_residual(lhs, rhs),
                ));
            }
        }
        floor = floor.max(nabla.theta.max_error());
    }
    Ok(IdentityReport::new("rauch", check.tolerance, samples, floor))
}

/// Values at `(y, z)` whose `∇` enters the PDE suite:
/// `[s(y), ω(y,z), Z_M, ν_1(y), ..., ν_g(y)]`.
fn pde_fn(set: &SurfaceFunctionSet, y: C64, z: C64) -> impl Fn(&SchottkyParams) -> Result<Vec<C64>> + Sync + '_ {
    let m = set.policy().mode_cutoff;
    move |p: &SchottkyParams| {
        let s = set.with_params(p.clone())?;
        let mut out = vec![
            s.projective_connection(y)?.value,
            s.bidifferential_omega(y, z)?.value,
            heisenberg_partition(p, m)?.value,
        ];
        out.extend(s.nu_all(y)?.into_iter().map(|v| v.value));
        Ok(out)
    }
}

/// The boson equation `(∇(x) − s(x)/12) Z_M = 0` and the PDEs for `s`, `ω` and `ν_a`.
pub fn check_ward_pdes(set: &SurfaceFunctionSet, check: &CheckConfig) -> Result<Vec<IdentityReport>> {
    let g = set.genus();
    let (y, z) = (check.y, check.z);
    let f = pde_fn(set, y, z);
    let zv = heisenberg_partition(set.params(), set.policy().mode_cutoff)?;
    let sy = set.projective_connection_jet(y)?;
    let om = set.omega_jet(y, z)?;
    let nus_y: Vec<_> = (1..=g).map(|a| set.nu_jet(a, y)).collect::<Result<_>>()?;
    let mut boson = Vec::new();
    let mut omega_de = Vec::new();
    let mut nabla_omega = Vec::new();
    let mut nabla_nu = Vec::new();
    let mut floor_boson = zv.tail_estimate / zv.value.norm();
    let mut floor: f64 = 0.0;
    for (i, &x) in check.x_samples.iter().enumerate() {
        let nabla = NablaOperator::new(set, x, &BersPoles::FixedPoints)?;
        let d = nabla.apply_vec(&f, &check.fd, false)?;
        let py = set.psi_n_bers_jet(x, y, 2, &BersPoles::FixedPoints)?;
        let pz = set.psi_n_bers_jet(x, z, 2, &BersPoles::FixedPoints)?;
        let sx = set.projective_connection(x)?;
        let oxy = set.bidifferential_omega(x, y)?;
        let oxz = set.bidifferential_omega(x, z)?;
        let l2 = set.lambda_n(x, y, 2)?;
        let nus_x = set.nu_all(x)?;
        let th = nabla.theta.max_error();
        floor = floor.max(th);

        let lhs = d[2];
        let rhs = sx.value * zv.value / 12.0;
        boson.push(sample(format!("x{i}"), lhs, rhs, (lhs - rhs).norm() / zv.value.norm()));
        floor_boson = floor_boson.max(th + sx.tail_estimate / 12.0);

        let lhs = d[0] + py.value * sy.derivative + 2.0 * py.derivative * sy.value;
        let rhs = 6.0 * (oxy.value * oxy.value - l2.value);
        omega_de.push(sample(format!("x{i}"), lhs, rhs, relative_residual(lhs, rhs)));
        floor = floor.max((oxy.tail_estimate + l2.tail_estimate + sy.tail_estimate) / rhs.norm().max(1e-30));

        let lhs = d[1] + py.value * om.d_first + pz.value * om.d_second + (py.derivative + pz.derivative) * om.value;
        let rhs = oxy.value * oxz.value;
        nabla_omega.push(sample(format!("x{i}"), lhs, rhs, relative_residual(lhs, rhs)));

        for a in 0..g {
            let nu = &nus_y[a];
            let lhs = d[3 + a] + py.value * nu.derivative + py.derivative * nu.value;
            let rhs = oxy.value * nus_x[a].value;
            nabla_nu.push(sample(format!("x{i} a={}", a + 1), lhs, rhs, relative_residual(lhs, rhs)));
        }
    }
    let tol = check.tolerance;
    Ok(vec![
        IdentityReport::new("boson-pde", tol, boson, floor_boson),
        IdentityReport::new("omega-de", tol, omega_de, floor),
        IdentityReport::new("nabla-omega", tol, nabla_omega, floor),
        IdentityReport::new("nabla-nu", tol, nabla_nu, floor),
    ])
}

/// `∇(x) Z_M` under another choice of Bers poles.
pub fn nabla_partition(set: &SurfaceFunctionSet, x: C64, poles: &BersPoles, cfg: &FiniteDiffConfig) -> Result<C64> {
    let nabla = NablaOperator::new(set, x, poles)?;
    nabla.apply(&partition_fn(set.policy().mode_cutoff), cfg)
}

/// Boson residual `|(∇(x) − s(x)/12) Z_M| / |Z_M|` for several steps, with the
/// ratios of consecutive residuals (close to 4 for halved steps in the O(h²) regime).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudy {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl OrderStudy {
    /// Fitted exponent `p` in `residual ∝ h^p` from the first and last steps.
    pub fn order(&self) -> f64 {
        let n = self.steps.len();
        (self.residuals[0] / self.residuals[n - 1]).ln() / (self.steps[0] / self.steps[n - 1]).ln()
    }
}

pub fn boson_order_study(set: &SurfaceFunctionSet, x: C64, steps: &[f64]) -> Result<OrderStudy> {
    let nabla = NablaOperator::new(set, x, &BersPoles::FixedPoints)?;
    let zf = partition_fn(set.policy().mode_cutoff);
    let z = zf(set.params())?;
    let target = set.projective_connection(x)?.value * z / 12.0;
    let residuals: Vec<f64> = steps
        .iter()
        .map(|&h| Ok((nabla.apply(&zf, &FiniteDiffConfig::new(h)?)? - target).norm() / z.norm()))
        .collect::<Result<_>>()?;
    let ratios = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(OrderStudy {
        steps: steps.to_vec(),
        residuals,
        ratios,
    })
}

/// Every identity at once: SL₂, Rauch, and the PDE suite.
pub fn run_identity_suite(set: &SurfaceFunctionSet, check: &CheckConfig) -> Result<Vec<IdentityReport>> {
    let mut out = vec![check_sl2_invariance(
        set,
        &check.fd,
        1e-6,
        &default_transports(set.params()),
    )?];
    if set.genus() >= 2 {
        out.push(check_rauch(set, check)?);
        out.extend(check_ward_pdes(set, check)?);
    }
    Ok(out)
}
