//! Shared fixtures for the benchmarks.

use arithclass_core::scalar::parse_real;
use arithclass_core::{BigRational, TargetVector};

/// `(1, φ, √2, ...)` truncated to `n` coordinates, snapped to 64-bit denominators.
pub fn badly_approximable(n: usize) -> TargetVector {
    let tokens = ["1", "phi", "sqrt(2)", "sqrt(3)", "sqrt(5)"];
    TargetVector::new(
        tokens[..n]
            .iter()
            .map(|t| parse_real(t, 64).unwrap().value)
            .collect::<Vec<BigRational>>(),
    )
}
