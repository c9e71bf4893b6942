//! Truncated mode matrices `R̃`, `p̃`, `q` and the Heisenberg determinant.
//!
//! Mode indices are laid out handle-major in the order `1, −1, 2, −2, ...`,
//! then by mode number.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::BersPoles;
use crate::schottky_core::{index_position, signed_indices, SchottkyParams};

/// Position of a mode `(a, m)` in the layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeIndex {
    pub a: i32,
    pub m: usize,
}

impl ModeIndex {
    pub fn offset(&self, cutoff: usize) -> usize {
        index_position(self.a) * cutoff + self.m
    }
}

/// Square matrix over mode indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatrix {
    pub genus: usize,
    pub cutoff: usize,
    pub entries: DMatrix<C64>,
}

impl ModeMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, row: ModeIndex, col: ModeIndex) -> C64 {
        self.entries[(row.offset(self.cutoff), col.offset(self.cutoff))]
    }

    pub fn layout(&self) -> Vec<ModeIndex> {
        signed_indices(self.genus)
            .into_iter()
            .flat_map(|a| (0..self.cutoff).map(move |m| ModeIndex { a, m }))
            .collect()
    }

    /// Debug dump with dimensions, layout and entries.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.entries[(i, j)].re, self.entries[(i, j)].im]).collect())
            .collect();
        serde_json::json!({
            "dim": self.dim(),
            "layout": self.layout().iter().map(|k| [k.a as i64, k.m as i64]).collect::<Vec<_>>(),
            "entries": rows,
        })
    }
}

/// Vector over mode indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    pub genus: usize,
    pub cutoff: usize,
    pub entries: DVector<C64>,
}

impl ModeVector {
    pub fn get(&self, k: ModeIndex) -> C64 {
        self.entries[k.offset(self.cutoff)]
    }
}

/// The branch of `rho_a^{1/2}` used for each signed index.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfPowers {
    roots: Vec<C64>,
}

impl HalfPowers {
    /// Principal square roots.
    pub fn principal(sp: &SchottkyParams) -> Self {
        HalfPowers {
            roots: sp.handles().iter().map(|h| h.rho.sqrt()).collect(),
        }
    }

    /// Principal roots with the sign flipped on the listed handles.
    pub fn flipped(sp: &SchottkyParams, handles: &[usize]) -> Self {
        let mut h = Self::principal(sp);
        for &a in handles {
            h.roots[a - 1] = -h.roots[a - 1];
        }
        h
    }

    pub fn root(&self, a: i32) -> C64 {
        self.roots[a.unsigned_abs() as usize - 1]
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn check_cutoff(n: u32, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("weight N must be at least 1".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("mode cutoff must be at least 1".into()));
    }
    Ok(())
}

/// `R̃_ab(m,n) = (−1)^N (−1)^m C(n+2N+m−1, m) ρ_a^{(m+1)/2} ρ_b^{(n+2N−1)/2} / (w_{−a} − w_b)^{n+m+2N}`,
/// and zero when `a = −b`.
pub fn build_rtilde(sp: &SchottkyParams, n: u32, m: usize) -> Result<ModeMatrix> {
    build_rtilde_with(sp, n, m, &HalfPowers::principal(sp))
}

pub fn build_rtilde_with(sp: &SchottkyParams, n: u32, cutoff: usize, half: &HalfPowers) -> Result<ModeMatrix> {
    check_cutoff(n, cutoff)?;
    let g = sp.genus();
    let idx = signed_indices(g);
    let dim = idx.len() * cutoff;
    let two_n = 2 * n as usize;
    let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut r = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for &a in &idx {
        let ra = half.root(a);
        for &b in &idx {
            if a == -b {
                continue;
            }
            let rb = half.root(b);
            let inv = (sp.w(-a) - sp.w(b)).inv();
            for mm in 0..cutoff {
                let sign_m = if mm % 2 == 0 { 1.0 } else { -1.0 };
                let pa = ra.powi(mm as i32 + 1);
                for nn in 0..cutoff {
                    let pb = rb.powi((nn + two_n - 1) as i32);
                    let c = binomial(nn + two_n + mm - 1, mm);
                    let v = sign_n * sign_m * c * pa * pb * inv.powi((nn + mm + two_n) as i32);
                    r[(index_position(a) * cutoff + mm, index_position(b) * cutoff + nn)] = v;
                }
            }
        }
    }
    Ok(ModeMatrix {
        genus: g,
        cutoff,
        entries: r,
    })
}

/// Partial fractions `Σ_k c_k/(x − B_k)` of the genus-zero kernel `ψ_N⁽⁰⁾(x, y)` in `x`.
fn kernel_partial_fractions(y: C64, n: u32, poles: &[C64], aux: C64) -> Vec<(C64, C64)> {
    if n == 1 {
        return vec![(C64::new(1.0, 0.0), y), (C64::new(-1.0, 0.0), aux)];
    }
    let mut out = vec![(C64::new(1.0, 0.0), y)];
    for (k, &ak) in poles.iter().enumerate() {
        let mut c = (ak - y).inv();
        for (j, &aj) in poles.iter().enumerate() {
            c *= y - aj;
            if j != k {
                c /= ak - aj;
            }
        }
        out.push((c, ak));
    }
    out
}

/// Genus-zero kernel: `1/(x−y) − 1/(x−o)` for `N = 1`, the Bers kernel otherwise.
pub fn genus_zero_kernel(x: C64, y: C64, n: u32, poles: &[C64], aux: C64) -> C64 {
    if n == 1 {
        return (x - y).inv() - (x - aux).inv();
    }
    let mut v = (x - y).inv();
    for a in poles {
        v *= (y - a) / (x - a);
    }
    v
}

/// Setup of the matrix identity for one weight: pole set and auxiliary point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelChoice {
    pub n: u32,
    pub poles: Vec<C64>,
    pub aux: C64,
}

impl KernelChoice {
    /// The kernel used by [`SurfaceFunctionSet`](crate::forms::SurfaceFunctionSet) for the same data.
    pub fn from_surface(set: &crate::forms::SurfaceFunctionSet, n: u32, poles: &BersPoles) -> Result<Self> {
        let poles = if n == 1 { Vec::new() } else { set.bers_poles(n, poles)? };
        Ok(KernelChoice {
            n,
            poles,
            aux: set.aux_point(),
        })
    }
}

/// `p̃_b(x; n) = ρ_b^{(n+2N−1)/2}/(x − w_b)^{n+2N}` and
/// `q_a(y; m) = (−1)^N ρ_a^{(m+1)/2} ∂^{(m)}ψ_N⁽⁰⁾(w_{−a}, y)`.
pub fn build_ptilde_q(
    sp: &SchottkyParams,
    kernel: &KernelChoice,
    cutoff: usize,
    x: C64,
    y: C64,
) -> Result<(ModeVector, ModeVector)> {
    build_ptilde_q_with(sp, kernel, cutoff, x, y, &HalfPowers::principal(sp))
}

pub fn build_ptilde_q_with(
    sp: &SchottkyParams,
    kernel: &KernelChoice,
    cutoff: usize,
    x: C64,
    y: C64,
    half: &HalfPowers,
) -> Result<(ModeVector, ModeVector)> {
    let n = kernel.n;
    check_cutoff(n, cutoff)?;
    for (name, z) in [("x", x), ("y", y)] {
        if sp.relative_clearance(z) < 1.0 {
            return Err(Error::Domain(format!("{name} = {z} lies inside a disc")));
        }
    }
    let g = sp.genus();
    let idx = signed_indices(g);
    let dim = idx.len() * cutoff;
    let two_n = 2 * n as usize;
    let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };
    let pf = kernel_partial_fractions(y, n, &kernel.poles, kernel.aux);
    let mut p = DVector::from_element(dim, C64::new(0.0, 0.0));
    let mut q = DVector::from_element(dim, C64::new(0.0, 0.0));
    for &b in &idx {
        let rb = half.root(b);
        let wb = sp.w(b);
        let wm = sp.w(-b);
        // the Taylor series of ψ⁽⁰⁾ about w_{-b} must converge on the circle 𝒞_{-b}
        let nearest = pf.iter().map(|(_, c)| (wm - c).norm()).fold(f64::INFINITY, f64::min);
        if nearest <= sp.radius(b) {
            return Err(Error::Divergence(format!(
                "the genus-zero kernel has a pole inside disc {}; its mode expansion diverges",
                -b
            )));
        }
        let xi = (x - wb).inv();
        for k in 0..cutoff {
            let o = index_position(b) * cutoff + k;
            p[o] = rb.powi((k + two_n - 1) as i32) * xi.powi((k + two_n) as i32);
            let sign_k = if k % 2 == 0 { 1.0 } else { -1.0 };
            let deriv: C64 = pf.iter().map(|(c, pole)| c * sign_k * (wm - pole).powi(-(k as i32) - 1)).sum();
            q[o] = sign_n * rb.powi(k as i32 + 1) * deriv;
        }
    }
    Ok((
        ModeVector {
            genus: g,
            cutoff,
            entries: p,
        },
        ModeVector {
            genus: g,
            cutoff,
            entries: q,
        },
    ))
}

/// Singular value ratio of `I − R̃`.
pub fn condition_estimate(r: &ModeMatrix) -> f64 {
    let dim = r.dim();
    let a = DMatrix::<C64>::identity(dim, dim) - &r.entries;
    let sv = a.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Result of the matrix evaluation of `Ψ_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixPsi {
    pub value: C64,
    pub condition: f64,
    /// Change against the evaluation with half the mode cutoff.
    pub drift: f64,
}

fn solve_psi(r: &ModeMatrix, p: &ModeVector, q: &ModeVector, base: C64) -> Result<(C64, f64)> {
    let cond = condition_estimate(r);
    if !(cond < 1e8) {
        return Err(Error::Conditioning(cond));
    }
    let dim = r.dim();
    let a = DMatrix::<C64>::identity(dim, dim) - &r.entries;
    let z = a
        .lu()
        .solve(&q.entries)
        .ok_or(Error::Conditioning(f64::INFINITY))?;
    Ok((base + p.entries.dot(&z), cond))
}

/// `Ψ_N(x,y) = ψ_N⁽⁰⁾(x,y) + p̃(x)ᵀ (I − R̃)⁻¹ q(y)` through an LU solve.
pub fn psi_via_matrix(sp: &SchottkyParams, kernel: &KernelChoice, cutoff: usize, x: C64, y: C64) -> Result<MatrixPsi> {
    let base = genus_zero_kernel(x, y, kernel.n, &kernel.poles, kernel.aux);
    let eval = |m: usize| -> Result<(C64, f64)> {
        let r = build_rtilde(sp, kernel.n, m)?;
        let (p, q) = build_ptilde_q(sp, kernel, m, x, y)?;
        solve_psi(&r, &p, &q, base)
    };
    let (value, condition) = eval(cutoff)?;
    let drift = if cutoff >= 2 {
        (value - eval(cutoff / 2)?.0).norm()
    } else {
        f64::INFINITY
    };
    Ok(MatrixPsi {
        value,
        condition,
        drift,
    })
}

/// Same as [`psi_via_matrix`] with an explicit branch of the half powers.
pub fn psi_via_matrix_with(
    sp: &SchottkyParams,
    kernel: &KernelChoice,
    cutoff: usize,
    x: C64,
    y: C64,
    half: &HalfPowers,
) -> Result<C64> {
    let base = genus_zero_kernel(x, y, kernel.n, &kernel.poles, kernel.aux);
    let r = build_rtilde_with(sp, kernel.n, cutoff, half)?;
    let (p, q) = build_ptilde_q_with(sp, kernel, cutoff, x, y, half)?;
    Ok(solve_psi(&r, &p, &q, base)?.0)
}

/// `|λ|` of the dominant eigenvalue from 50 power iterations.
pub fn spectral_radius_estimate(r: &ModeMatrix) -> f64 {
    let dim = r.dim();
    let mut v = DVector::from_fn(dim, |i, _| C64::new(1.0, 0.1 * (i % 7) as f64));
    let mut est = 0.0;
    for _ in 0..50 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v /= C64::new(norm, 0.0);
        let w = &r.entries * &v;
        est = w.norm();
        v = w;
    }
    est
}

/// Heisenberg genus-`g` partition function `det(1 − R̃)^{−1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionValue {
    pub value: C64,
    pub cutoff: usize,
    /// `|Z(M) − Z(M/2)|` plus a rounding floor.
    pub tail_estimate: f64,
    pub spectral_radius: f64,
}

fn partition_at(sp: &SchottkyParams, cutoff: usize, half: &HalfPowers) -> Result<(C64, f64)> {
    let r = build_rtilde_with(sp, 1, cutoff, half)?;
    let radius = spectral_radius_estimate(&r);
    if !(radius < 1.0) {
        return Err(Error::Divergence(format!("spectral radius of R̃ is {radius:.4}")));
    }
    let dim = r.dim();
    let det = (DMatrix::<C64>::identity(dim, dim) - &r.entries).lu().determinant();
    Ok((det.sqrt().inv(), radius))
}

pub fn heisenberg_partition(sp: &SchottkyParams, cutoff: usize) -> Result<PartitionValue> {
    heisenberg_partition_with(sp, cutoff, &HalfPowers::principal(sp))
}

pub fn heisenberg_partition_with(sp: &SchottkyParams, cutoff: usize, half: &HalfPowers) -> Result<PartitionValue> {
    check_cutoff(1, cutoff)?;
    let (value, spectral_radius) = partition_at(sp, cutoff, half)?;
    let tail = if cutoff >= 2 {
        (value - partition_at(sp, cutoff / 2, half)?.0).norm()
    } else {
        f64::INFINITY
    };
    Ok(PartitionValue {
        value,
        cutoff,
        tail_estimate: tail + 64.0 * f64::EPSILON * value.norm() * (2 * sp.genus() * cutoff) as f64,
        spectral_radius,
    })
}

/// `det(1 − R̃)` for `N = 1`.
pub fn heisenberg_determinant(sp: &SchottkyParams, cutoff: usize) -> Result<C64> {
    let r = build_rtilde(sp, 1, cutoff)?;
    let dim = r.dim();
    Ok((DMatrix::<C64>::identity(dim, dim) - &r.entries).lu().determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schottky_core::Handle;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> SchottkyParams {
        SchottkyParams::new(vec![
            Handle {
                w_plus: c(1.0, 0.1),
                w_minus: c(-1.0, 0.0),
                rho: c(0.01, 0.004),
            },
            Handle {
                w_plus: c(1.2, 2.5),
                w_minus: c(-0.8, 2.3),
                rho: c(-0.012, 0.003),
            },
        ])
        .unwrap()
    }

    #[test]
    fn zero_blocks_and_sample_entry() {
        let sp = sample();
        let r = build_rtilde(&sp, 1, 3).unwrap();
        for a in [1, -1, 2, -2] {
            for m in 0..3 {
                for n in 0..3 {
                    assert_eq!(r.get(ModeIndex { a, m }, ModeIndex { a: -a, m: n }), c(0.0, 0.0));
                }
            }
        }
        let e = r.get(ModeIndex { a: 1, m: 0 }, ModeIndex { a: 2, m: 0 });
        let expect = -sp.rho(1).sqrt() * sp.rho(2).sqrt() / (sp.w(-1) - sp.w(2)).powi(2);
        assert!((e - expect).norm() < 1e-16);
    }

    #[test]
    fn small_vectors() {
        let sp = sample();
        let k = KernelChoice {
            n: 1,
            poles: vec![],
            aux: c(0.0, 0.0),
        };
        let (x, y) = (c(0.3, 1.0), c(2.0, -1.0));
        let (p, q) = build_ptilde_q(&sp, &k, 2, x, y).unwrap();
        let p0 = p.get(ModeIndex { a: 2, m: 0 });
        assert!((p0 - sp.rho(2).sqrt() / (x - sp.w(2)).powi(2)).norm() < 1e-16);
        let q0 = q.get(ModeIndex { a: 1, m: 0 });
        let wm = sp.w(-1);
        assert!((q0 + sp.rho(1).sqrt() * ((wm - y).inv() - wm.inv())).norm() < 1e-16);
    }

    #[test]
    fn bers_partial_fractions_match_kernel() {
        let poles = [c(0.0, 0.0), c(-2.0, 0.0), c(5.0, 0.0)];
        let (x, y) = (c(3.0, 0.0), c(1.0, 0.0));
        let v = genus_zero_kernel(x, y, 2, &poles, c(0.0, 0.0));
        assert!((v - 0.2).norm() < 1e-15);
        let pf = kernel_partial_fractions(y, 2, &poles, c(0.0, 0.0));
        let s: C64 = pf.iter().map(|(c, b)| c / (x - b)).sum();
        assert!((s - v).norm() < 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(7, 0), 1.0);
        assert_eq!(binomial(10, 10), 1.0);
    }
}
