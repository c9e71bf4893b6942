#![allow(dead_code)]

use num_complex::Complex64 as C64;
use schottky::{Handle, SchottkyParams, SurfaceFunctionSet, TruncationPolicy};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn genus_two() -> SchottkyParams {
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

pub fn genus_one(q_like: f64) -> SchottkyParams {
    SchottkyParams::new(vec![Handle {
        w_plus: c(1.0, 0.0),
        w_minus: c(-1.0, 0.0),
        rho: c(q_like, 0.0),
    }])
    .unwrap()
}

pub fn set(sp: SchottkyParams, l: usize) -> SurfaceFunctionSet {
    SurfaceFunctionSet::new(sp, TruncationPolicy::with_word_length(l)).unwrap()
}

pub fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1e-300)
}
