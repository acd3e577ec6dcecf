//! Fixtures shared by the criterion benches.

use warpcore::linalg::CMat;
use warpcore::models::random_system;
use warpcore::suite::block_q;
use warpcore::{CovariantSystem, SkewMatrix};

pub struct Fixture {
    pub system: CovariantSystem,
    pub a: CMat,
    pub b: CMat,
    pub q: SkewMatrix,
}

/// A seeded `n`-dimensional system on `C^d` with its invariant operands
/// perturbed by the generators, so the twist is not trivial.
pub fn fixture(n: usize, d: usize) -> Fixture {
    let s = random_system(n, d, 11).expect("valid fixture");
    let g = &s.system.generators()[1];
    let a = &s.invariant_ops.0 + g;
    let b = &s.invariant_ops.1 + g * g;
    let q = block_q(s.system.form(), 1.0, None).expect("standard Q");
    Fixture { system: s.system, a, b, q }
}
