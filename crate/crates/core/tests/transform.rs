mod common;

use common::{c, field1, max_cdiff, max_diff, random_field};
use dualbound::transform::{brute_force_dft, check_hermitian, forward_dft, inverse_dft, ORACLE_CAP};
use dualbound::{ComplexSpectrum, Error, Precision, ScalarField};
use proptest::prelude::*;

fn spectrum(values: Vec<dualbound::Complex64>) -> ComplexSpectrum {
    ComplexSpectrum::new(vec![values.len()], values, Precision::F64).unwrap()
}

#[test]
fn forward_examples() {
    let s = forward_dft(&field1(&[1.0, 0.0, 0.0, 0.0])).unwrap();
    assert!(max_cdiff(s.values(), &[c(1.0, 0.0); 4]) < 1e-15);
    let s = forward_dft(&field1(&[1.0; 4])).unwrap();
    assert!(max_cdiff(s.values(), &[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]) < 1e-15);
    let s = forward_dft(&field1(&[0.0, 1.0, 0.0, 0.0])).unwrap();
    assert!(max_cdiff(s.values(), &[c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)]) < 1e-15);
}

#[test]
fn inverse_examples() {
    let x = inverse_dft(&spectrum(vec![c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
    assert!(max_diff(x.values(), &[1.0; 4]) < 1e-15);
    let x = inverse_dft(&spectrum(vec![c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)])).unwrap();
    assert!(max_diff(x.values(), &[0.0, 1.0, 0.0, 0.0]) < 1e-15);
    let f = random_field(&[16], 3);
    let back = inverse_dft(&forward_dft(&f).unwrap()).unwrap();
    assert!(max_diff(back.values(), f.values()) < 1e-12);
}

#[test]
fn inverse_rejects_non_hermitian_input() {
    let s = spectrum(vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 1.0)]);
    assert!(matches!(inverse_dft(&s), Err(Error::Symmetry { .. })));
}

#[test]
fn oracle_examples() {
    let s = brute_force_dft(&field1(&[1.0, 0.0, 0.0, 0.0])).unwrap();
    assert!(max_cdiff(s.values(), &[c(1.0, 0.0); 4]) < 1e-15);
    let ones = ScalarField::from_f64(vec![4, 4], vec![1.0; 16]).unwrap();
    let s = brute_force_dft(&ones).unwrap();
    assert!((s.values()[0] - c(16.0, 0.0)).norm() < 1e-12);
    assert!(s.values()[1..].iter().all(|v| v.norm() < 1e-12));
    let f = random_field(&[8], 11);
    let a = forward_dft(&f).unwrap();
    let b = brute_force_dft(&f).unwrap();
    assert!(max_cdiff(a.values(), b.values()) <= 1e-9 * b.max_magnitude());
}

#[test]
fn oracle_refuses_large_fields() {
    let f = ScalarField::from_f64(vec![ORACLE_CAP + 1], vec![0.0; ORACLE_CAP + 1]).unwrap();
    assert!(matches!(brute_force_dft(&f), Err(Error::OracleCap { .. })));
}

#[test]
fn hermitian_examples() {
    let s = forward_dft(&random_field(&[6, 5], 1)).unwrap();
    assert!(check_hermitian(&s, 1e-9));
    assert!(!check_hermitian(&spectrum(vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 1.0)]), 1e-9));
    assert!(check_hermitian(&spectrum(vec![c(5.0, 0.0), c(1.0, 1.0), c(2.0, 0.0), c(1.0, -1.0)]), 0.0));
}

#[test]
fn invalid_fields_are_rejected() {
    assert!(matches!(ScalarField::from_f64(vec![2], vec![1.0, f64::NAN]), Err(Error::Validation(_))));
    assert!(matches!(ScalarField::from_f64(vec![3], vec![1.0]), Err(Error::Validation(_))));
}

#[test]
fn f32_inverse_uses_the_wider_tolerance() {
    let f = random_field(&[32], 5).cast(Precision::F32).unwrap();
    let mut s = forward_dft(&f).unwrap().into_values();
    s[3].im += 1e-9 * 32.0;
    let s = ComplexSpectrum::new(vec![32], s, Precision::F32).unwrap();
    assert!(inverse_dft(&s).is_ok());
    let s64 = ComplexSpectrum::new(vec![32], s.values().to_vec(), Precision::F64).unwrap();
    assert!(inverse_dft(&s64).is_err());
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        (1usize..80).prop_map(|n| vec![n]),
        (1usize..20, 1usize..20).prop_map(|(a, b)| vec![a, b]),
        (1usize..9, 1usize..9, 1usize..9).prop_map(|(a, b, c)| vec![a, b, c]),
    ]
}

proptest! {
    #![proptest_config(common::proptest_config(96))]

    #[test]
    fn matches_oracle(dims in dims_strategy(), seed in any::<u64>()) {
        let f = random_field(&dims, seed);
        let a = forward_dft(&f).unwrap();
        let b = brute_force_dft(&f).unwrap();
        let scale = b.max_magnitude().max(f64::MIN_POSITIVE);
        prop_assert!(max_cdiff(a.values(), b.values()) <= 1e-9 * scale);
    }

    #[test]
    fn roundtrip_identity(dims in dims_strategy(), seed in any::<u64>()) {
        let f = random_field(&dims, seed);
        let back = inverse_dft(&forward_dft(&f).unwrap()).unwrap();
        prop_assert!(max_diff(back.values(), f.values()) < 1e-12);
    }

    #[test]
    fn parseval(dims in dims_strategy(), seed in any::<u64>()) {
        let f = random_field(&dims, seed);
        let s = forward_dft(&f).unwrap();
        let lhs: f64 = s.values().iter().map(|v| v.norm_sqr()).sum();
        let rhs = f.len() as f64 * f.values().iter().map(|v| v * v).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn linearity(dims in dims_strategy(), seed in any::<u64>(), a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let f = random_field(&dims, seed);
        let g = random_field(&dims, seed ^ 0x9e37);
        let mix = f.with_values(f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let lhs = forward_dft(&mix).unwrap();
        let (sf, sg) = (forward_dft(&f).unwrap(), forward_dft(&g).unwrap());
        let rhs: Vec<_> = sf.values().iter().zip(sg.values()).map(|(x, y)| x * a + y * b).collect();
        let scale = lhs.max_magnitude().max(1.0);
        prop_assert!(max_cdiff(lhs.values(), &rhs) <= 1e-12 * scale);
    }

    #[test]
    fn real_input_is_hermitian(dims in dims_strategy(), seed in any::<u64>()) {
        let s = forward_dft(&random_field(&dims, seed)).unwrap();
        prop_assert!(check_hermitian(&s, 1e-9));
    }
}

#[test]
fn parseval_at_64_cubed() {
    let f = random_field(&[64, 64, 64], 7);
    let s = forward_dft(&f).unwrap();
    let lhs: f64 = s.values().iter().map(|v| v.norm_sqr()).sum();
    let rhs = f.len() as f64 * f.values().iter().map(|v| v * v).sum::<f64>();
    assert!((lhs - rhs).abs() <= 1e-9 * rhs);
}

#[test]
fn non_power_of_two_roundtrip() {
    for dims in [vec![31000], vec![7, 11, 13], vec![100, 3]] {
        let f = random_field(&dims, 9);
        let back = inverse_dft(&forward_dft(&f).unwrap()).unwrap();
        assert!(max_diff(back.values(), f.values()) < 1e-12, "{dims:?}");
    }
}
