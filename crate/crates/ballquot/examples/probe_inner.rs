//! Scratch probe: inner-estimate standard error across boundary depths.

use ballquot::groups::family_g;
use ballquot::kernels::{BallPoint, KernelConfig};
use ballquot::verify::{operator_estimate, QuadratureSpec, TestFn};
use num_complex::Complex64;

fn main() {
    let group = family_g(2, 2).unwrap();
    let cfg = KernelConfig::default();
    let spec = QuadratureSpec { nodes: 20_000, seed: 5, ..Default::default() };
    for &rad in &[0.5, 0.8, 0.9, 0.95, 0.99, 0.999, 0.9999] {
        let z = BallPoint::new(
            Complex64::new(0.6 * rad, 0.2 * rad),
            Complex64::new(-0.5 * rad, 0.59160797830996165 * rad),
        )
        .unwrap();
        for f in [TestFn::Monomial { a: 4, b: 0 }, TestFn::Monomial { a: 1, b: 1 }] {
            let est = operator_estimate(&group, &f, &z, &spec, &cfg).unwrap();
            println!(
                "|z| = {:.4}  f = {}  |Qf| = {:.6}  se = {:.6}",
                z.norm(),
                f.name(),
                est.value().norm(),
                est.std_err
            );
        }
    }
}
