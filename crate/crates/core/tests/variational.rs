mod common;

use common::{c, genus_one, genus_two, set};
use schottky::forms::BersPoles;
use schottky::variational::{
    boson_order_study, check_rauch, check_sl2_invariance, check_ward_pdes, default_transports, moduli_partial,
    nabla_partition, CheckConfig, FiniteDiffConfig, ModuliDirection, NablaOperator,
};
use schottky::zhu_matrix::heisenberg_partition;
use schottky::{Error, SchottkyParams};

fn check_config() -> CheckConfig {
    CheckConfig {
        fd: FiniteDiffConfig::new(1e-4).unwrap(),
        tolerance: 1e-3,
        x_samples: vec![c(0.4, 0.7), c(-0.2, -0.9), c(2.2, 1.0)],
        y: c(1.5, -0.4),
        z: c(-0.6, 1.1),
    }
}

#[test]
fn sl2_invariance_genus_one_and_two() {
    for sp in [genus_one(0.03), genus_two()] {
        let s = set(sp.clone(), 6);
        let r = check_sl2_invariance(&s, &FiniteDiffConfig::new(1e-4).unwrap(), 1e-6, &default_transports(&sp)).unwrap();
        for smp in &r.samples {
            println!("{} {:.3e}", smp.label, smp.residual);
        }
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn rauch_genus_two() {
    let s = set(genus_two(), 6);
    let r = check_rauch(&s, &check_config()).unwrap();
    for smp in &r.samples {
        println!("{} {:.3e}", smp.label, smp.residual);
    }
    assert!(r.passed);
}

#[test]
fn pde_suite_genus_two() {
    let s = set(genus_two(), 6);
    for r in check_ward_pdes(&s, &check_config()).unwrap() {
        println!("{} {:.3e} floor {:.1e}", r.identity, r.max_residual, r.truncation_floor);
        assert!(r.passed, "{}", r.identity);
    }
}

#[test]
fn boson_residual_is_second_order() {
    let s = set(genus_two(), 6);
    let st = boson_order_study(&s, c(0.4, 0.7), &[0.02, 0.01, 0.005]).unwrap();
    println!("{st:?}");
    for r in &st.ratios {
        assert!((r - 4.0).abs() < 0.5, "{st:?}");
    }
}

#[test]
fn nabla_of_partition_does_not_depend_on_pole_choice() {
    let s = set(genus_two(), 6);
    let cfg = FiniteDiffConfig::new(1e-4).unwrap();
    let x = c(0.4, 0.7);
    let a = nabla_partition(&s, x, &BersPoles::FixedPoints, &cfg).unwrap();
    let b = nabla_partition(&s, x, &BersPoles::Explicit(vec![c(4.0, 0.0), c(-3.0, 1.0), c(0.5, -3.0)]), &cfg).unwrap();
    println!("{a} {b}");
    assert!((a - b).norm() < 1e-6 * a.norm().max(1e-3));
}

#[test]
fn partition_is_holomorphic_in_the_moduli() {
    let sp = genus_two();
    let f = |p: &SchottkyParams| Ok(heisenberg_partition(p, 16)?.value);
    let cfg = FiniteDiffConfig::new(1e-4).unwrap();
    for d in ModuliDirection::all(2) {
        let re = moduli_partial(d, &f, &sp, &cfg).unwrap();
        let im = moduli_partial(d, &f, &sp, &cfg.imaginary()).unwrap();
        assert!((re - im).norm() < 1e-7 * re.norm().max(1e-6), "{d:?}: {re} {im}");
    }
}

#[test]
fn nabla_of_constant_vanishes_and_genus_one_is_unsupported() {
    let s = set(genus_two(), 4);
    let n = NablaOperator::new(&s, c(0.4, 0.7), &BersPoles::FixedPoints).unwrap();
    let v = n.apply(&|_: &SchottkyParams| Ok(c(2.5, -1.0)), &FiniteDiffConfig::default()).unwrap();
    assert_eq!(v, c(0.0, 0.0));
    let s1 = set(genus_one(0.02), 4);
    assert!(matches!(
        NablaOperator::new(&s1, c(0.0, 1.0), &BersPoles::FixedPoints),
        Err(Error::Configuration(_))
    ));
}
