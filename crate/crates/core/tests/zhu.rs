mod common;

use common::{c, close, genus_one, genus_two, set};
use num_complex::Complex64 as C64;
use schottky::forms::BersPoles;
use schottky::zhu_matrix::{
    build_rtilde, heisenberg_partition, heisenberg_partition_with, psi_via_matrix, psi_via_matrix_with,
    HalfPowers, KernelChoice,
};
use schottky::Error;

#[test]
fn genus_one_partition_is_inverse_euler_product() {
    let sp = genus_one(0.04);
    let q = sp.to_classical().unwrap().handles[0].q;
    let z = heisenberg_partition(&sp, 40).unwrap();
    let mut prod = C64::new(1.0, 0.0);
    for n in 1..200 {
        prod *= C64::new(1.0, 0.0) - q.powi(n);
    }
    assert!(close(z.value, prod.inv(), 1e-12), "{} vs {}", z.value, prod.inv());
}

#[test]
fn genus_two_partition_reference() {
    // independent numpy evaluation of det(1 − R̃)^{−1/2}, cutoff 20
    let z = heisenberg_partition(&genus_two(), 20).unwrap();
    assert!(close(z.value, c(1.0002181605058595, -0.002075092172501119), 1e-12));
    assert!(z.tail_estimate < 1e-10);
    assert!(z.spectral_radius < 1.0);
}

#[test]
fn partition_does_not_depend_on_root_branch() {
    let sp = genus_two();
    let a = heisenberg_partition(&sp, 16).unwrap().value;
    for flips in [vec![1], vec![2], vec![1, 2]] {
        let b = heisenberg_partition_with(&sp, 16, &HalfPowers::flipped(&sp, &flips)).unwrap().value;
        assert!(close(b, a, 1e-13));
    }
}

#[test]
fn weight_one_matrix_matches_third_kind_sum() {
    let sp = genus_two();
    let s = set(sp.clone(), 8);
    let k = KernelChoice::from_surface(&s, 1, &BersPoles::FixedPoints).unwrap();
    for (x, y) in [(c(0.4, 0.7), c(1.5, -0.4)), (c(-0.2, -0.9), c(-0.6, 1.1))] {
        let m = psi_via_matrix(&sp, &k, 24, x, y).unwrap();
        let b = s.psi1_third_kind(x, y).unwrap();
        assert!(close(m.value, b.value, 1e-9), "{} vs {}", m.value, b.value);
        let f = psi_via_matrix_with(&sp, &k, 24, x, y, &HalfPowers::flipped(&sp, &[2])).unwrap();
        assert!(close(f, m.value, 1e-12));
    }
}

#[test]
fn weight_two_matrix_matches_bers_sum_with_exterior_poles() {
    let sp = genus_two();
    let s = set(sp.clone(), 8);
    let poles = BersPoles::Explicit(vec![c(4.0, 0.0), c(-3.0, 1.0), c(0.5, -3.0)]);
    let k = KernelChoice::from_surface(&s, 2, &poles).unwrap();
    let (x, y) = (c(0.4, 0.7), c(1.5, -0.4));
    let m = psi_via_matrix(&sp, &k, 24, x, y).unwrap();
    let b = s.psi_n_bers_with(x, y, 2, &poles).unwrap();
    assert!(close(m.value, b.value, 1e-9), "{} vs {}", m.value, b.value);
}

#[test]
fn fixed_point_poles_make_the_mode_expansion_diverge() {
    let sp = genus_two();
    let s = set(sp.clone(), 4);
    let k = KernelChoice::from_surface(&s, 2, &BersPoles::FixedPoints).unwrap();
    let r = psi_via_matrix(&sp, &k, 12, c(0.4, 0.7), c(1.5, -0.4));
    assert!(matches!(r, Err(Error::Divergence(_))));
}

#[test]
fn rtilde_is_nilpotent_free_and_small() {
    let r = build_rtilde(&genus_two(), 1, 10).unwrap();
    assert_eq!(r.dim(), 40);
    let max = r.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(max < 1.0);
}
