//! Hard-instance values against an independent high-precision evaluation.

use btl_core::dist::{hard_instance_f, point_mass};
use btl_core::mechanisms::{fb, randoff, sellerp, Instance, Tolerances};

// (delta, sellerp, fb) with G = point mass at 0
const POINT_MASS_ZERO: [(f64, f64, f64); 4] = [
    (0.2, 0.41403266, 0.60758604),
    (0.1, 0.39210453, 0.61985737),
    (0.05, 0.38010816, 0.62598920),
    (0.01, 0.37033172, 0.63089429),
];

#[test]
fn point_mass_zero_values() {
    let tol = Tolerances::default();
    for (delta, sp, first_best) in POINT_MASS_ZERO {
        let inst = Instance::new(hard_instance_f(delta).unwrap(), point_mass(0.0).unwrap());
        let s = sellerp(&inst, &tol).unwrap();
        let f = fb(&inst, &tol).unwrap();
        assert!((s - sp).abs() < 2e-8, "delta {delta}: sellerp {s}");
        assert!((f - first_best).abs() < 2e-8, "delta {delta}: fb {f}");
        assert!(s <= (-1.0 + delta).exp());
    }
}

#[test]
fn reversed_seller_values() {
    let tol = Tolerances::default();
    let f = hard_instance_f(0.01).unwrap();
    let inst = Instance::new(f.clone(), f.reverse());
    let first_best = fb(&inst, &tol).unwrap();
    let r = randoff(&inst, &tol).unwrap();
    assert!((first_best - 0.365433031).abs() < 2e-6, "fb {first_best}");
    assert!((r - 0.233146719).abs() < 2e-6, "randoff {r}");
}
