use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::Result;
use crate::schottky_core::{Group, MobiusMap};

/// Words are processed in fixed chunks so the reduction tree does not depend
/// on the number of threads.
const CHUNK: usize = 256;
const PARALLEL_MIN: usize = 4 * CHUNK;

/// A truncated Poincaré sum together with the shell statistics used for its tail estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub value: C64,
    /// Sum of `|term|` over the words of each length.
    pub shell_abs: Vec<f64>,
    pub abs_total: f64,
}

impl Series {
    pub fn zero(shells: usize) -> Self {
        Series {
            value: C64::new(0.0, 0.0),
            shell_abs: vec![0.0; shells],
            abs_total: 0.0,
        }
    }

    /// Geometric extrapolation of the last shells plus a rounding floor.
    ///
    /// Infinite when fewer than two nonzero shells are available or the shells do
    /// not shrink.
    pub fn tail_estimate(&self) -> f64 {
        tail_from_shells(&self.shell_abs, self.abs_total)
    }
}

pub fn rounding_floor(abs_total: f64) -> f64 {
    64.0 * f64::EPSILON * abs_total
}

pub fn tail_from_shells(shell_abs: &[f64], abs_total: f64) -> f64 {
    let floor = rounding_floor(abs_total);
    let n = shell_abs.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let last = shell_abs[n - 1];
    if last == 0.0 && n >= 2 && shell_abs[n - 2] == 0.0 {
        return floor;
    }
    let ratios: Vec<f64> = (n.saturating_sub(3) + 1..n)
        .filter(|&k| shell_abs[k - 1] > 0.0)
        .map(|k| shell_abs[k] / shell_abs[k - 1])
        .collect();
    let mut ratio = ratios.iter().copied().fold(-1.0, f64::max);
    // shell ratios of a free group sum creep up towards their limit; follow the trend
    if let [.., r0, r1] = ratios[..] {
        if r1 > r0 {
            ratio = ratio.max(r1 + (r1 - r0));
        }
    }
    if ratio < 0.0 {
        return if last == 0.0 { floor } else { f64::INFINITY };
    }
    if ratio >= 0.95 {
        return f64::INFINITY;
    }
    last * ratio / (1.0 - ratio) + floor
}

/// Sums `k` Poincaré series at once. `term(i, map, out)` writes the `k`
/// contributions of word `i` into `out`.
pub fn poincare<F>(group: &Group, k: usize, term: F) -> Result<Vec<Series>>
where
    F: Fn(usize, &MobiusMap, &mut [C64]) -> Result<()> + Sync,
{
    let nshell = group.shells.len();
    let shell_of = |i: usize| group.shells.iter().position(|r| r.contains(&i)).unwrap_or(0);
    let n = group.len();
    let chunk = |start: usize| -> Result<(Vec<C64>, Vec<f64>)> {
        let mut sums = vec![C64::new(0.0, 0.0); nshell * k];
        let mut abss = vec![0.0; nshell * k];
        let mut out = vec![C64::new(0.0, 0.0); k];
        let end = (start + CHUNK).min(n);
        let mut s = shell_of(start);
        for i in start..end {
            while !group.shells[s].contains(&i) {
                s += 1;
            }
            out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            term(i, &group.maps[i], &mut out)?;
            for j in 0..k {
                sums[s * k + j] += out[j];
                abss[s * k + j] += out[j].norm();
            }
        }
        Ok((sums, abss))
    };
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let parts: Vec<(Vec<C64>, Vec<f64>)> = if n >= PARALLEL_MIN {
        starts.par_iter().map(|&s| chunk(s)).collect::<Result<_>>()?
    } else {
        starts.iter().map(|&s| chunk(s)).collect::<Result<_>>()?
    };
    let mut series = vec![Series::zero(nshell); k];
    for s in 0..nshell {
        for (j, ser) in series.iter_mut().enumerate() {
            let mut v = C64::new(0.0, 0.0);
            let mut a = 0.0;
            for (sums, abss) in &parts {
                v += sums[s * k + j];
                a += abss[s * k + j];
            }
            ser.value += v;
            ser.shell_abs[s] = a;
            ser.abs_total += a;
        }
    }
    Ok(series)
}
