#![allow(dead_code)]

pub mod qp;
pub mod gen;

use dualbound::{Complex64, Precision, ScalarField};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples in `[-1, 1)`.
pub fn random_field(dims: &[usize], seed: u64) -> ScalarField {
    let mut r = rng(seed);
    let n = dims.iter().product();
    let values = (0..n).map(|_| 2.0 * r.random::<f64>() - 1.0).collect();
    ScalarField::from_f64(dims.to_vec(), values).unwrap()
}

pub fn random_field_as(dims: &[usize], seed: u64, precision: Precision) -> ScalarField {
    random_field(dims, seed).cast(precision).unwrap()
}

pub fn field1(values: &[f64]) -> ScalarField {
    ScalarField::from_f64(vec![values.len()], values.to_vec()).unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_cdiff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Proptest settings with regressions stored next to the test file.
pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: Some(Box::new(proptest::test_runner::FileFailurePersistence::WithSource(
            "regressions",
        ))),
        ..Default::default()
    }
}
