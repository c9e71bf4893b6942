mod common;

use common::{c, set};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use schottky::forms::BersPoles;
use schottky::schottky_core::{word_count, Group, MobiusMap, Point};
use schottky::variational::{FiniteDiffConfig, NablaOperator};
use schottky::voa_correlators::{heisenberg_npoint, pairing_sum, siegel_theta, LatticeSpec};
use schottky::zhu_matrix::{
    heisenberg_determinant, heisenberg_partition, heisenberg_partition_with, psi_via_matrix, psi_via_matrix_with,
    HalfPowers, KernelChoice,
};
use schottky::{Handle, SchottkyParams};

fn cplx(r: f64, t: f64) -> C64 {
    C64::from_polar(r, t)
}

prop_compose! {
    /// Genus-2 surfaces near the shipped sample with random small scales.
    fn genus_two()(
        n in prop::array::uniform4((-0.15f64..0.15, -0.15f64..0.15)),
        r in prop::array::uniform2(0.001f64..0.02),
        t in prop::array::uniform2(0.0f64..std::f64::consts::TAU),
    ) -> SchottkyParams {
        let w = |i: usize, base: C64| base + c(n[i].0, n[i].1);
        SchottkyParams::new(vec![
            Handle { w_plus: w(0, c(1.0, 0.0)), w_minus: w(1, c(-1.0, 0.0)), rho: cplx(r[0], t[0]) },
            Handle { w_plus: w(2, c(1.2, 2.5)), w_minus: w(3, c(-0.8, 2.3)), rho: cplx(r[1], t[1]) },
        ]).unwrap()
    }
}

prop_compose! {
    fn genus_one()(r in 0.001f64..0.05, t in 0.0f64..std::f64::consts::TAU, s in 0.5f64..2.0) -> SchottkyParams {
        SchottkyParams::new(vec![Handle { w_plus: c(s, 0.0), w_minus: c(-s, 0.0), rho: cplx(r * s * s, t) }]).unwrap()
    }
}

prop_compose! {
    fn near_identity()(v in prop::array::uniform6(-0.05f64..0.05)) -> MobiusMap {
        MobiusMap::new(c(1.0 + v[0], v[1]), c(v[2], v[3]), c(v[4] * 0.2, v[5] * 0.2), c(1.0, 0.0)).unwrap()
    }
}

fn far_point(sp: &SchottkyParams, seed: (f64, f64)) -> Option<C64> {
    let z = c(seed.0, seed.1);
    (sp.relative_clearance(z) > 2.0).then_some(z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_map_exterior_into_opposite_disc(sp in genus_two(), th in 0.0f64..std::f64::consts::TAU, s in 1.0f64..4.0) {
        for a in sp.signed_indices() {
            let z = sp.w(a) + cplx(s * sp.radius(a), th);
            let img = sp.generator_map(a).apply(Point::Finite(z)).as_finite().unwrap();
            prop_assert!((img - sp.w(-a)).norm() <= sp.radius(a) * (1.0 + 1e-12));
            let prod = (img - sp.w(-a)).norm() * (z - sp.w(a)).norm();
            prop_assert!((prod - sp.rho(a).norm()).abs() < 1e-9 * sp.rho(a).norm());
        }
    }

    #[test]
    fn classical_round_trip(sp in genus_two()) {
        let back = sp.to_classical().unwrap().to_schottky().unwrap();
        for a in sp.signed_indices() {
            prop_assert!((back.w(a) - sp.w(a)).norm() < 1e-10 * sp.w(a).norm().max(1.0));
        }
        for a in 1..=2 {
            prop_assert!((back.rho(a) - sp.rho(a)).norm() < 1e-10 * sp.rho(a).norm());
        }
    }

    #[test]
    fn mobius_action_is_a_group_action(sp in genus_two(), m1 in near_identity(), m2 in near_identity()) {
        let id = sp.mobius_act(&MobiusMap::identity()).unwrap();
        prop_assert_eq!(&id, &sp);
        let (Ok(step), Ok(direct)) = (sp.mobius_act(&m2).and_then(|p| p.mobius_act(&m1)), sp.mobius_act(&m1.compose(&m2))) else {
            return Ok(());
        };
        for a in sp.signed_indices() {
            prop_assert!((step.w(a) - direct.w(a)).norm() < 1e-10 * direct.w(a).norm().max(1.0));
        }
        for a in 1..=2 {
            prop_assert!((step.rho(a) - direct.rho(a)).norm() < 1e-10 * direct.rho(a).norm());
        }
    }

    #[test]
    fn partition_is_invariant_under_transport(sp in genus_two(), m in near_identity()) {
        if let Ok(moved) = sp.mobius_act(&m) {
            let a = heisenberg_partition(&sp, 16).unwrap().value;
            let b = heisenberg_partition(&moved, 16).unwrap().value;
            prop_assert!((a - b).norm() < 1e-10 * a.norm());
        }
    }

    #[test]
    fn branch_flips_change_nothing(sp in genus_two(), h in 1usize..=2) {
        let a = heisenberg_partition(&sp, 12).unwrap().value;
        let b = heisenberg_partition_with(&sp, 12, &HalfPowers::flipped(&sp, &[h])).unwrap().value;
        prop_assert!((a - b).norm() < 1e-12 * a.norm());
        let k = KernelChoice { n: 1, poles: vec![], aux: c(0.0, -1.5) };
        let (x, y) = (c(0.3, 1.2), c(2.4, -0.3));
        let p = psi_via_matrix(&sp, &k, 12, x, y).unwrap().value;
        let q = psi_via_matrix_with(&sp, &k, 12, x, y, &HalfPowers::flipped(&sp, &[h])).unwrap();
        prop_assert!((p - q).norm() < 1e-12 * p.norm());
    }

    #[test]
    fn real_symmetric_surfaces_have_positive_determinant(
        w in prop::array::uniform2(0.8f64..1.5),
        r in prop::array::uniform2(0.001f64..0.03),
        sign in prop::array::uniform2(prop::bool::ANY),
    ) {
        let rho = |i: usize| c(if sign[i] { r[i] } else { -r[i] }, 0.0);
        let sp = SchottkyParams::new(vec![
            Handle { w_plus: c(w[0], 0.0), w_minus: c(-w[0], 0.0), rho: rho(0) },
            Handle { w_plus: c(w[1] + 3.0, 0.0), w_minus: c(3.0 - w[1] * 0.5, 0.0), rho: rho(1) },
        ]).unwrap();
        prop_assume!(sp.is_valid());
        let d = heisenberg_determinant(&sp, 16).unwrap();
        prop_assert!(d.im.abs() < 1e-14 * d.norm());
        prop_assert!(d.re > 0.0);
    }

    #[test]
    fn diagonal_imaginary_theta_is_at_least_one(t in prop::array::uniform2(0.3f64..3.0)) {
        let om = vec![vec![c(0.0, t[0]), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, t[1])]];
        let a2 = LatticeSpec::new(vec![vec![2, -1], vec![-1, 2]]).unwrap();
        let v = siegel_theta(&om, &a2, 4.0).unwrap();
        prop_assert!(v.value.im.abs() < 1e-14 && v.value.re >= 1.0);
    }

    #[test]
    fn theta_factorizes_over_blocks(t in prop::array::uniform4(-0.5f64..0.5), s in prop::array::uniform2(0.5f64..2.0)) {
        let om = vec![vec![c(t[0], s[0]), c(0.0, 0.0)], vec![c(0.0, 0.0), c(t[1], s[1])]];
        let l = LatticeSpec::a1().direct_sum(&LatticeSpec::new(vec![vec![4, 1], vec![1, 2]]).unwrap());
        let whole = siegel_theta(&om, &l, 5.0).unwrap().value;
        let one = |k: usize, lat: &LatticeSpec| siegel_theta(&[vec![om[k][k]]], lat, 5.0).unwrap().value;
        // the genus splits as well as the lattice: product over both
        let a1 = LatticeSpec::a1();
        let b = LatticeSpec::new(vec![vec![4, 1], vec![1, 2]]).unwrap();
        let prod = one(0, &a1) * one(1, &a1) * one(0, &b) * one(1, &b);
        prop_assert!((whole - prod).norm() < 1e-10 * prod.norm());
    }

    #[test]
    fn theta_is_invariant_under_integer_shifts(t in prop::array::uniform3(-0.5f64..0.5), k in prop::array::uniform3(-2i64..=2)) {
        let om = vec![vec![c(t[0], 1.1), c(t[1], 0.2)], vec![c(t[1], 0.2), c(t[2], 0.9)]];
        let mut sh = om.clone();
        sh[0][0] += k[0] as f64;
        sh[1][1] += k[2] as f64;
        sh[0][1] += k[1] as f64;
        sh[1][0] += k[1] as f64;
        let a2 = LatticeSpec::new(vec![vec![2, -1], vec![-1, 2]]).unwrap();
        let a = siegel_theta(&om, &a2, 5.0).unwrap().value;
        let b = siegel_theta(&sh, &a2, 5.0).unwrap().value;
        prop_assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn omega_and_lambda_are_symmetric(sp in genus_two(), p in prop::array::uniform2((-3.0f64..3.0, -2.0f64..4.0))) {
        let (Some(x), Some(y)) = (far_point(&sp, p[0]), far_point(&sp, p[1])) else { return Ok(()) };
        prop_assume!((x - y).norm() > 0.3);
        let s = set(sp, 5);
        let a = s.bidifferential_omega(x, y).unwrap();
        let b = s.bidifferential_omega(y, x).unwrap();
        prop_assert!((a.value - b.value).norm() <= 10.0 * (a.tail_estimate + b.tail_estimate) + 1e-12 * a.value.norm());
        for n in [2, 3] {
            let a = s.lambda_n(x, y, n).unwrap();
            let b = s.lambda_n(y, x, n).unwrap();
            prop_assert!((a.value - b.value).norm() <= 10.0 * (a.tail_estimate + b.tail_estimate) + 1e-12 * a.value.norm());
        }
    }

    #[test]
    fn one_form_periods_are_kronecker(sp in genus_one()) {
        let s = set(sp, 8);
        let (v, _) = s.alpha_period(1, 256, |z| Ok(s.nu_all(z)?[0].value)).unwrap();
        prop_assert!((v - 1.0).norm() < 1e-8);
    }

    #[test]
    fn quasi_period_is_the_theta_polynomial(sp in genus_two(), th in 0.0f64..std::f64::consts::TAU) {
        let s = set(sp.clone(), 5);
        let x = c(0.4, 0.7);
        prop_assume!(sp.relative_clearance(x) > 2.0);
        let t = s.theta_set(2, x, &BersPoles::FixedPoints).unwrap();
        for a in 1..=2usize {
            let y = sp.w(a as i32) + cplx(1.7 * sp.radius(a as i32), th);
            prop_assume!(sp.relative_clearance(y) >= 1.0);
            let lhs = s.psi_quasi_period(x, y, 2, a, &BersPoles::FixedPoints).unwrap();
            let w = sp.w(a as i32);
            let rhs: C64 = (0..3).map(|l| t.get(a, l) * (y - w).powi(l as i32)).sum();
            prop_assert!((lhs - rhs).norm() < 1e-7 * rhs.norm().max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn heisenberg_four_point_is_symmetric_and_recursive(
        sp in genus_two(),
        perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let s = set(sp.clone(), 5);
        let pts = [c(0.4, 0.7), c(-0.2, -0.9), c(2.2, 1.0), c(-2.0, 1.6)];
        prop_assume!(pts.iter().all(|p| sp.relative_clearance(*p) > 1.5));
        let v = heisenberg_npoint(&s, &pts).unwrap().value;
        let permuted: Vec<C64> = perm.iter().map(|&i| pts[i]).collect();
        let w = heisenberg_npoint(&s, &permuted).unwrap().value;
        prop_assert!((v - w).norm() < 1e-10 * v.norm());
        let mut rec = C64::new(0.0, 0.0);
        for k in 1..4 {
            let rest: Vec<C64> = (1..4).filter(|&j| j != k).map(|j| pts[j]).collect();
            rec += s.bidifferential_omega(pts[0], pts[k]).unwrap().value * heisenberg_npoint(&s, &rest).unwrap().value;
        }
        prop_assert!((rec - v).norm() < 1e-8 * v.norm());
        prop_assert_eq!(heisenberg_npoint(&s, &pts[..3]).unwrap().value, C64::new(0.0, 0.0));
        prop_assert_eq!(pairing_sum(&s, &pts[..1]).unwrap().value, C64::new(0.0, 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn nabla_is_linear(al in (-2.0f64..2.0, -2.0f64..2.0), be in (-2.0f64..2.0, -2.0f64..2.0)) {
        let s = set(common::genus_two(), 4);
        let n = NablaOperator::new(&s, c(0.4, 0.7), &BersPoles::FixedPoints).unwrap();
        let cfg = FiniteDiffConfig::new(1e-4).unwrap();
        let (al, be) = (c(al.0, al.1), c(be.0, be.1));
        let f = |p: &SchottkyParams| Ok(heisenberg_partition(p, 8)?.value);
        let g = |p: &SchottkyParams| Ok(p.w(1) * p.rho(2));
        let lin = n.apply(&|p: &SchottkyParams| Ok(al * f(p)? + be * g(p)?), &cfg).unwrap();
        let sep = al * n.apply(&f, &cfg).unwrap() + be * n.apply(&g, &cfg).unwrap();
        prop_assert!((lin - sep).norm() < 1e-9 * sep.norm().max(1.0));
    }
}

#[test]
fn word_counts_match_closed_form() {
    for g in 1..=3usize {
        let handles = (0..g)
            .map(|i| Handle {
                w_plus: c(1.0 + 4.0 * i as f64, 0.0),
                w_minus: c(-1.0 + 4.0 * i as f64, 0.0),
                rho: c(0.01, 0.0),
            })
            .collect();
        let sp = SchottkyParams::new(handles).unwrap();
        for l in 0..=6usize {
            let expect = if l == 0 {
                1
            } else {
                1 + 2 * g * ((2 * g - 1).pow(l as u32) - 1) / (2 * g - 2).max(1)
            };
            let expect = if g == 1 { 1 + 2 * l } else { expect };
            assert_eq!(word_count(g, l), expect);
            assert_eq!(Group::new(&sp, l).len(), expect);
        }
    }
}

#[test]
fn evaluation_is_deterministic() {
    let s = set(common::genus_two(), 6);
    let x = c(0.4, 0.7);
    let a = s.nu_all(x).unwrap()[0].value;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| s.nu_all(x).unwrap()[0].value);
    assert_eq!(a.re.to_bits(), b.re.to_bits());
    assert_eq!(a.im.to_bits(), b.im.to_bits());
}
