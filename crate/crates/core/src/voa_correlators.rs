//! Heisenberg, Virasoro and lattice correlators built from the forms and the
//! Heisenberg partition function.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::SurfaceFunctionSet;
use crate::zhu_matrix::{heisenberg_partition, PartitionValue};

/// A correlator value with the accumulated truncation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorValue {
    pub value: C64,
    pub tail_estimate: f64,
}

/// Output record `{points, value_re, value_im, tail_estimate}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRecord {
    pub points: Vec<[f64; 2]>,
    pub value_re: f64,
    pub value_im: f64,
    pub tail_estimate: f64,
}

impl CorrelatorRecord {
    pub fn new(points: &[C64], v: &CorrelatorValue) -> Self {
        CorrelatorRecord {
            points: points.iter().map(|z| [z.re, z.im]).collect(),
            value_re: v.value.re,
            value_im: v.value.im,
            tail_estimate: v.tail_estimate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelatorKind {
    Heisenberg,
    Virasoro1,
    Virasoro2,
}

/// A batch request against one surface.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorRequest {
    pub kind: CorrelatorKind,
    pub points: Vec<C64>,
}

impl CorrelatorRequest {
    pub fn validate(&self, set: &SurfaceFunctionSet) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            if set.params().relative_clearance(*p) < 1.0 {
                return Err(Error::Domain(format!("point {i} = {p} lies inside a disc")));
            }
            for q in &self.points[..i] {
                if p == q {
                    return Err(Error::Pole(format!("insertion point {p} repeated")));
                }
            }
        }
        let arity_ok = match self.kind {
            CorrelatorKind::Heisenberg => true,
            CorrelatorKind::Virasoro1 => self.points.len() == 1,
            CorrelatorKind::Virasoro2 => self.points.len() == 2,
        };
        if !arity_ok {
            return Err(Error::InvalidParameter(format!(
                "{:?} takes {} points",
                self.kind,
                if self.kind == CorrelatorKind::Virasoro1 { 1 } else { 2 }
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, set: &SurfaceFunctionSet) -> Result<CorrelatorValue> {
        self.validate(set)?;
        match self.kind {
            CorrelatorKind::Heisenberg => heisenberg_npoint(set, &self.points),
            CorrelatorKind::Virasoro1 => virasoro_one_point(set, self.points[0]),
            CorrelatorKind::Virasoro2 => virasoro_two_point(set, self.points[0], self.points[1]),
        }
    }
}

/// All fixed-point-free involutions of `0..n`, each as a list of pairs. The
/// lowest unpaired index is always paired first, so the order is lexicographic.
pub fn pairings(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n % 2 == 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    // stack of (partial pairing, used mask)
    let mut stack: Vec<(Vec<(usize, usize)>, Vec<bool>)> = vec![(Vec::new(), vec![false; n])];
    while let Some((pairs, used)) = stack.pop() {
        let Some(i) = used.iter().position(|u| !u) else {
            out.push(pairs);
            continue;
        };
        for j in (i + 1..n).rev() {
            if used[j] {
                continue;
            }
            let mut p = pairs.clone();
            p.push((i, j));
            let mut u = used.clone();
            u[i] = true;
            u[j] = true;
            stack.push((p, u));
        }
    }
    out
}

/// `(n − 1)!!`, the number of pairings of `n` labels (0 for odd `n`).
pub fn pairing_count(n: usize) -> usize {
    if n % 2 == 1 {
        return 0;
    }
    (1..n).step_by(2).product::<usize>().max(1)
}

fn partition(set: &SurfaceFunctionSet) -> Result<PartitionValue> {
    heisenberg_partition(set.params(), set.policy().mode_cutoff)
}

/// Sum over pairings of products of `ω(x_r, x_s)`, without the factor `Z_M`.
pub fn pairing_sum(set: &SurfaceFunctionSet, points: &[C64]) -> Result<CorrelatorValue> {
    let n = points.len();
    if n % 2 == 1 {
        return Ok(CorrelatorValue {
            value: C64::new(0.0, 0.0),
            tail_estimate: 0.0,
        });
    }
    for i in 0..n {
        for j in 0..i {
            if points[i] == points[j] {
                return Err(Error::Pole(format!("coincident insertion points {i} and {j}")));
            }
        }
    }
    let mut om = vec![vec![(C64::new(0.0, 0.0), 0.0); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = set.bidifferential_omega(points[i], points[j])?;
            om[i][j] = (v.value, v.tail_estimate);
        }
    }
    let mut value = C64::new(0.0, 0.0);
    let mut tail = 0.0;
    for p in pairings(n) {
        let mut prod = C64::new(1.0, 0.0);
        let mut rel = 0.0;
        for &(i, j) in &p {
            let (v, t) = om[i][j];
            prod *= v;
            rel += t / v.norm().max(f64::MIN_POSITIVE);
        }
        value += prod;
        tail += prod.norm() * rel;
    }
    Ok(CorrelatorValue {
        value,
        tail_estimate: tail,
    })
}

/// Heisenberg `n`-point function of the weight-one vector: zero for odd `n`,
/// otherwise `Z_M` times the pairing sum.
pub fn heisenberg_npoint(set: &SurfaceFunctionSet, points: &[C64]) -> Result<CorrelatorValue> {
    if points.len() % 2 == 1 {
        return Ok(CorrelatorValue {
            value: C64::new(0.0, 0.0),
            tail_estimate: 0.0,
        });
    }
    let p = pairing_sum(set, points)?;
    let z = partition(set)?;
    Ok(CorrelatorValue {
        value: p.value * z.value,
        tail_estimate: p.tail_estimate * z.value.norm() + p.value.norm() * z.tail_estimate,
    })
}

/// Virasoro 1-point function `s(x) Z_M / 12`.
pub fn virasoro_one_point(set: &SurfaceFunctionSet, x: C64) -> Result<CorrelatorValue> {
    let s = set.projective_connection(x)?;
    let z = partition(set)?;
    Ok(CorrelatorValue {
        value: s.value * z.value / 12.0,
        tail_estimate: (s.tail_estimate * z.value.norm() + s.value.norm() * z.tail_estimate) / 12.0,
    })
}

/// Virasoro 2-point function `(s(x)s(y)/144 + ω(x,y)²/2) Z_M`.
pub fn virasoro_two_point(set: &SurfaceFunctionSet, x: C64, y: C64) -> Result<CorrelatorValue> {
    if x == y {
        return Err(Error::Pole("coincident insertion points".into()));
    }
    let sx = set.projective_connection(x)?;
    let sy = set.projective_connection(y)?;
    let om = set.bidifferential_omega(x, y)?;
    let z = partition(set)?;
    let inner = sx.value * sy.value / 144.0 + 0.5 * om.value * om.value;
    let inner_tail =
        (sx.tail_estimate * sy.value.norm() + sy.tail_estimate * sx.value.norm()) / 144.0 + om.value.norm() * om.tail_estimate;
    Ok(CorrelatorValue {
        value: inner * z.value,
        tail_estimate: inner_tail * z.value.norm() + inner.norm() * z.tail_estimate,
    })
}

/// An even lattice given by its Gram matrix in some basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub rank: usize,
    pub gram: Vec<Vec<i64>>,
}

impl LatticeSpec {
    pub fn new(gram: Vec<Vec<i64>>) -> Result<Self> {
        let l = LatticeSpec { rank: gram.len(), gram };
        l.validate()?;
        Ok(l)
    }

    /// The root lattice `A₁`, Gram matrix `[[2]]`.
    pub fn a1() -> Self {
        LatticeSpec {
            rank: 1,
            gram: vec![vec![2]],
        }
    }

    /// The rank-0 lattice.
    pub fn trivial() -> Self {
        LatticeSpec {
            rank: 0,
            gram: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let l: LatticeSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        l.validate()?;
        Ok(l)
    }

    /// Orthogonal sum.
    pub fn direct_sum(&self, other: &LatticeSpec) -> LatticeSpec {
        let d = self.rank + other.rank;
        let mut gram = vec![vec![0; d]; d];
        for i in 0..self.rank {
            gram[i][..self.rank].copy_from_slice(&self.gram[i]);
        }
        for i in 0..other.rank {
            gram[self.rank + i][self.rank..].copy_from_slice(&other.gram[i]);
        }
        LatticeSpec { rank: d, gram }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.rank;
        if self.gram.len() != d || self.gram.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(format!("gram matrix must be {d}×{d}")));
        }
        for i in 0..d {
            if self.gram[i][i] % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "lattice is not even: gram[{i}][{i}] = {}",
                    self.gram[i][i]
                )));
            }
            for j in 0..i {
                if self.gram[i][j] != self.gram[j][i] {
                    return Err(Error::InvalidParameter("gram matrix is not symmetric".into()));
                }
            }
        }
        if d > 0 && self.gram_matrix().cholesky().is_none() {
            return Err(Error::InvalidParameter("gram matrix is not positive definite".into()));
        }
        Ok(())
    }

    pub fn gram_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rank, self.rank, |i, j| self.gram[i][j] as f64)
    }

    /// `uᵀ G v`.
    pub fn pairing(&self, u: &[i64], v: &[i64]) -> i64 {
        let mut s = 0;
        for i in 0..self.rank {
            for j in 0..self.rank {
                s += u[i] * self.gram[i][j] * v[j];
            }
        }
        s
    }

    /// Integer vectors with `nᵀ G n ≤ r2`, ordered lexicographically.
    pub fn short_vectors(&self, r2: f64) -> Vec<Vec<i64>> {
        let d = self.rank;
        if d == 0 {
            return vec![Vec::new()];
        }
        let inv = self.gram_matrix().try_inverse().expect("positive definite");
        let bounds: Vec<i64> = (0..d).map(|i| (r2 * inv[(i, i)]).sqrt().floor() as i64).collect();
        let mut out = Vec::new();
        let mut n: Vec<i64> = bounds.iter().map(|b| -b).collect();
        loop {
            if (self.pairing(&n, &n) as f64) <= r2 {
                out.push(n.clone());
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if n[k] < bounds[k] {
                    n[k] += 1;
                    for m in n.iter_mut().skip(k + 1).zip(bounds.iter().skip(k + 1)) {
                        *m.0 = -m.1;
                    }
                    break;
                }
            }
        }
    }
}

/// A Siegel theta value with its Gaussian tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub value: C64,
    pub tail_bound: f64,
    pub radius: f64,
    pub terms: usize,
}

fn im_min_eigenvalue(omega: &[Vec<C64>]) -> Result<f64> {
    let g = omega.len();
    if omega.iter().any(|r| r.len() != g) {
        return Err(Error::InvalidParameter("Ω must be square".into()));
    }
    let m = DMatrix::from_fn(g, g, |i, j| 0.5 * (omega[i][j].im + omega[j][i].im));
    let lam = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if !(lam > 0.0) {
        return Err(Error::Domain(format!("Im Ω is not positive definite (λ_min = {lam:.3e})")));
    }
    Ok(lam)
}

/// Radius for which the Gaussian tail bound falls below `tol`.
pub fn default_radius(omega: &[Vec<C64>], lat: &LatticeSpec, tol: f64) -> Result<f64> {
    let lam = im_min_eigenvalue(omega)?;
    let gd = (omega.len() * lat.rank).max(1) as f64;
    Ok(((gd / tol).ln().max(1.0) / (PI * lam)).sqrt())
}

/// `Θ_L(Ω) = Σ_{λ ∈ L^g} exp(iπ Σ_{a,b} Ω_ab ⟨λ_a, λ_b⟩)` over `|λ_a|² ≤ R²`.
pub fn siegel_theta(omega: &[Vec<C64>], lat: &LatticeSpec, radius: f64) -> Result<ThetaValue> {
    lat.validate()?;
    let lam = im_min_eigenvalue(omega)?;
    let g = omega.len();
    if lat.rank == 0 {
        return Ok(ThetaValue {
            value: C64::new(1.0, 0.0),
            tail_bound: 0.0,
            radius,
            terms: 1,
        });
    }
    let vecs = lat.short_vectors(radius * radius);
    let nv = vecs.len();
    let mut gram_pairs = vec![0i64; nv * nv];
    for i in 0..nv {
        for j in 0..nv {
            gram_pairs[i * nv + j] = lat.pairing(&vecs[i], &vecs[j]);
        }
    }
    let mut idx = vec![0usize; g];
    let mut value = C64::new(0.0, 0.0);
    let mut terms = 0usize;
    loop {
        let mut e = C64::new(0.0, 0.0);
        for a in 0..g {
            for b in 0..g {
                e += omega[a][b] * gram_pairs[idx[a] * nv + idx[b]] as f64;
            }
        }
        value += (C64::new(0.0, PI) * e).exp();
        terms += 1;
        let mut k = g;
        loop {
            if k == 0 {
                let tail_bound = (g * lat.rank) as f64 * (-PI * lam * radius * radius).exp();
                return Ok(ThetaValue {
                    value,
                    tail_bound,
                    radius,
                    terms,
                });
            }
            k -= 1;
            if idx[k] + 1 < nv {
                idx[k] += 1;
                idx[k + 1..].iter_mut().for_each(|v| *v = 0);
                break;
            }
        }
    }
}

/// Lattice VOA partition function `Θ_L(Ω) Z_M^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePartition {
    pub value: C64,
    pub theta: ThetaValue,
    pub heisenberg: PartitionValue,
    pub omega: Vec<Vec<C64>>,
    pub tail_estimate: f64,
}

pub fn lattice_partition(set: &SurfaceFunctionSet, lat: &LatticeSpec) -> Result<LatticePartition> {
    lat.validate()?;
    let z = partition(set)?;
    let pm = set.period_matrix()?;
    let tol = set.policy().tol.min(1e-10);
    let theta = siegel_theta(&pm.omega, lat, default_radius(&pm.omega, lat, tol)?)?;
    let d = lat.rank as i32;
    let zd = z.value.powi(d);
    let value = theta.value * zd;
    // first-order propagation of the Ω error through Θ
    let dtheta = {
        let r = theta.radius;
        PI * r * r * theta.value.norm().max(1.0) * pm.error_estimate()
    };
    let z_rel = if d == 0 { 0.0 } else { d as f64 * z.tail_estimate / z.value.norm() };
    let tail = (theta.tail_bound + dtheta) * zd.norm() + value.norm() * z_rel;
    Ok(LatticePartition {
        value,
        theta,
        heisenberg: z,
        omega: pm.omega,
        tail_estimate: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairings_are_lexicographic() {
        assert_eq!(pairings(0), vec![Vec::<(usize, usize)>::new()]);
        assert!(pairings(3).is_empty());
        assert_eq!(
            pairings(4),
            vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(0, 3), (1, 2)]]
        );
        for n in [2, 4, 6, 8] {
            assert_eq!(pairings(n).len(), pairing_count(n));
        }
        assert_eq!(pairing_count(8), 105);
    }

    #[test]
    fn lattice_validation() {
        assert!(LatticeSpec::new(vec![vec![2, 1], vec![1, 2]]).is_ok());
        assert!(LatticeSpec::new(vec![vec![1]]).is_err());
        assert!(LatticeSpec::new(vec![vec![2, 1], vec![0, 2]]).is_err());
        assert!(LatticeSpec::new(vec![vec![2, 3], vec![3, 2]]).is_err());
        assert!(LatticeSpec::from_json(r#"{"rank":1,"gram":[[2]]}"#).is_ok());
        assert!(LatticeSpec::from_json(r#"{"rank":2,"gram":[[2]]}"#).is_err());
        assert!(LatticeSpec::from_json(r#"{"rank":0,"gram":[]}"#).is_ok());
    }

    #[test]
    fn short_vectors_of_a2() {
        let a2 = LatticeSpec::new(vec![vec![2, -1], vec![-1, 2]]).unwrap();
        // zero vector and the six roots
        assert_eq!(a2.short_vectors(2.0).len(), 7);
    }

    #[test]
    fn theta_zero_term_only() {
        let om = vec![vec![C64::new(0.0, 1.0)]];
        let t = siegel_theta(&om, &LatticeSpec::a1(), 1.0).unwrap();
        assert_eq!(t.value, C64::new(1.0, 0.0));
        assert_eq!(t.terms, 1);
        let bad = vec![vec![C64::new(0.0, -1.0)]];
        assert!(matches!(siegel_theta(&bad, &LatticeSpec::a1(), 1.0), Err(Error::Domain(_))));
    }
}
