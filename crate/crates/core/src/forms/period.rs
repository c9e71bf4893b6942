use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::composite_rule;
use super::SurfaceFunctionSet;
use crate::error::{Error, Result};
use crate::schottky_core::SchottkyParams;

/// One piece of a β path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathPiece {
    Segment { from: C64, to: C64 },
    Arc { center: C64, radius: f64, start: f64, sweep: f64 },
}

impl PathPiece {
    /// Point and velocity at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> (C64, C64) {
        match *self {
            PathPiece::Segment { from, to } => (from + t * (to - from), to - from),
            PathPiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let u = C64::from_polar(1.0, start + t * sweep);
                (center + radius * u, C64::new(0.0, sweep) * radius * u)
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathPiece::Segment { from, to } => (to - from).norm(),
            PathPiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn start_point(&self) -> C64 {
        self.eval(0.0).0
    }

    pub fn end_point(&self) -> C64 {
        self.eval(1.0).0
    }
}

/// The point `z₀ ∈ 𝒞_a` nearest to its image `γ_a z₀`, from a 720-point scan.
fn nearest_pair(sp: &SchottkyParams, a: i32) -> (C64, C64) {
    let (w, r) = (sp.w(a), sp.radius(a));
    let (wm, rho) = (sp.w(-a), sp.rho(a));
    let mut best = (f64::INFINITY, w, w);
    for k in 0..720 {
        let z = w + C64::from_polar(r, 2.0 * PI * k as f64 / 720.0);
        let e = wm + rho / (z - w);
        let d = (e - z).norm();
        if d < best.0 {
            best = (d, z, e);
        }
    }
    (best.1, best.2)
}

/// β path of handle `a`: the straight segment from `γ_a z₀` to `z₀`, with every
/// stretch that enters a disc replaced by the shorter arc of that disc's circle.
pub fn beta_path(sp: &SchottkyParams, a: usize) -> Result<Vec<PathPiece>> {
    let ai = a as i32;
    let (z0, z1) = nearest_pair(sp, ai);
    let (p, q) = (z1, z0);
    let d = q - p;
    let len2 = d.norm_sqr();
    let mut cuts: Vec<(f64, f64, i32)> = Vec::new();
    for c in sp.signed_indices() {
        let (w, r) = (sp.w(c), sp.radius(c));
        // |p + t d − w|² = r²
        let f = p - w;
        let b = (f.conj() * d).re;
        let cc = f.norm_sqr() - r * r;
        let disc = b * b - len2 * cc;
        if disc <= 0.0 {
            continue;
        }
        let s = disc.sqrt();
        let (t1, t2) = ((-b - s) / len2, (-b + s) / len2);
        let (lo, hi) = (t1.max(0.0), t2.min(1.0));
        if hi - lo > 1e-9 {
            cuts.push((lo, hi, c));
        }
    }
    cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
    for pair in cuts.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::Path(format!(
                "β_{a} crosses discs {} and {} without a gap",
                pair[0].2, pair[1].2
            )));
        }
    }
    let mut pieces = Vec::new();
    let mut t = 0.0;
    for (lo, hi, c) in cuts {
        let (w, r) = (sp.w(c), sp.radius(c));
        let (enter, exit) = (p + lo * d, p + hi * d);
        if lo > t {
            pieces.push(PathPiece::Segment {
                from: p + t * d,
                to: enter,
            });
        }
        let start = (enter - w).arg();
        let mut sweep = (exit - w).arg() - start;
        while sweep > PI {
            sweep -= 2.0 * PI;
        }
        while sweep < -PI {
            sweep += 2.0 * PI;
        }
        let arc = PathPiece::Arc {
            center: w,
            radius: r,
            start,
            sweep,
        };
        for k in 0..=64 {
            let z = arc.eval(k as f64 / 64.0).0;
            if sp.relative_clearance(z) < 1.0 - 1e-9 {
                return Err(Error::Path(format!("detour of β_{a} around disc {c} enters another disc")));
            }
        }
        pieces.push(arc);
        t = hi;
    }
    if t < 1.0 {
        pieces.push(PathPiece::Segment {
            from: p + t * d,
            to: q,
        });
    }
    Ok(pieces)
}

/// Period matrix with its error budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMatrix {
    /// `omega[a-1][b-1] = Ω_ab`.
    pub omega: Vec<Vec<C64>>,
    pub tail_estimate: f64,
    pub quadrature_error: f64,
    /// `max |Ω_ab − Ω_ba|` after the integer normalization.
    pub asymmetry: f64,
    /// Integers added to the raw path integrals (a change of β cycles by α cycles).
    pub integer_shift: Vec<Vec<i64>>,
    pub im_positive_definite: bool,
}

impl PeriodMatrix {
    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.omega[a - 1][b - 1]
    }

    pub fn genus(&self) -> usize {
        self.omega.len()
    }

    pub fn error_estimate(&self) -> f64 {
        self.tail_estimate + self.quadrature_error
    }

    /// Smallest eigenvalue of the symmetric part of `Im Ω`.
    pub fn im_min_eigenvalue(&self) -> f64 {
        let g = self.genus();
        let m = DMatrix::from_fn(g, g, |i, j| 0.5 * (self.omega[i][j].im + self.omega[j][i].im));
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl SurfaceFunctionSet {
    /// Raw path integrals `(1/2πi)∫_{β_a} ν_b` with `panels` panels per unit of
    /// length scale, plus the largest tail estimate met on the nodes.
    fn beta_integrals(&self, paths: &[Vec<PathPiece>], density: f64) -> Result<(Vec<Vec<C64>>, f64)> {
        let g = self.genus();
        let rmin = self
            .sp
            .signed_indices()
            .iter()
            .map(|&c| self.sp.radius(c))
            .fold(f64::INFINITY, f64::min);
        let mut rows = Vec::with_capacity(g);
        let mut tail: f64 = 0.0;
        for path in paths {
            let mut row = vec![C64::new(0.0, 0.0); g];
            for piece in path {
                let panels = ((piece.length() / rmin) * density).ceil().max(1.0) as usize;
                let rule = composite_rule(panels);
                let parts: Vec<(Vec<C64>, f64)> = rule
                    .par_iter()
                    .map(|&(t, w)| {
                        let (z, dz) = piece.eval(t);
                        let nus = self.nu_all_series(z)?;
                        let mut out = vec![C64::new(0.0, 0.0); g];
                        let mut tl: f64 = 0.0;
                        for b in 0..g {
                            out[b] = nus[2 * b].value * dz * w;
                            tl = tl.max(nus[2 * b].tail_estimate() * dz.norm() * w);
                        }
                        Ok((out, tl))
                    })
                    .collect::<Result<_>>()?;
                for (vals, tl) in parts {
                    for b in 0..g {
                        row[b] += vals[b];
                    }
                    tail += tl;
                }
            }
            for v in row.iter_mut() {
                *v /= C64::new(0.0, 2.0 * PI);
            }
            rows.push(row);
        }
        Ok((rows, tail / (2.0 * PI)))
    }

    /// `Ω_ab = (1/2πi) ∫_{β_a} ν_b`, normalized by integer shifts so that it is
    /// symmetric with real parts in `(−1/2, 1/2]`.
    pub fn period_matrix(&self) -> Result<PeriodMatrix> {
        let g = self.genus();
        let paths = (1..=g).map(|a| beta_path(&self.sp, a)).collect::<Result<Vec<_>>>()?;
        let (coarse, _) = self.beta_integrals(&paths, 1.0)?;
        let (mut om, tail) = self.beta_integrals(&paths, 2.0)?;
        let mut quad: f64 = 0.0;
        for a in 0..g {
            for b in 0..g {
                quad = quad.max((om[a][b] - coarse[a][b]).norm());
            }
        }
        let budget = self.policy.tol.max(10.0 * (tail + quad));
        let mut shift = vec![vec![0i64; g]; g];
        for a in 0..g {
            for b in a + 1..g {
                let diff = om[a][b] - om[b][a];
                let k = diff.re.round();
                if (diff - k).norm() > budget {
                    return Err(Error::Convergence(format!(
                        "Ω is not symmetric: |Ω_{}{} − Ω_{}{}| = {:.3e}",
                        a + 1,
                        b + 1,
                        b + 1,
                        a + 1,
                        diff.norm()
                    )));
                }
                om[b][a] += k;
                shift[b][a] += k as i64;
            }
        }
        for a in 0..g {
            for b in a..g {
                let k = -(om[a][b].re - 0.5).ceil();
                om[a][b] += k;
                shift[a][b] += k as i64;
                if a != b {
                    om[b][a] += k;
                    shift[b][a] += k as i64;
                }
            }
        }
        let mut asym: f64 = 0.0;
        for a in 0..g {
            for b in 0..g {
                asym = asym.max((om[a][b] - om[b][a]).norm());
            }
        }
        let im = DMatrix::from_fn(g, g, |i, j| 0.5 * (om[i][j].im + om[j][i].im));
        let pd = im.cholesky().is_some();
        Ok(PeriodMatrix {
            omega: om,
            tail_estimate: tail,
            quadrature_error: quad,
            asymmetry: asym,
            integer_shift: shift,
            im_positive_definite: pd,
        })
    }
}
