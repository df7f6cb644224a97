//! Approximation profiles of real vectors, arithmetic classes defined by
//! decreasing sequences, the lattice/flow machinery around them, and
//! desk-scale measure estimates for preimages of such classes under curved
//! polynomial maps.

pub mod classes;
pub mod config;
pub mod exterior;
pub mod interval;
pub mod io;
pub mod lattice;
pub mod maps;
pub mod measure;
pub mod scalar;

pub use classes::{
    membership, ClassError, ClassVerdict, DecreasingSequence, SeqValue, VerdictStatus,
};
pub use exterior::{ht_subgroup_norm, DiscreteSubgroup, ExteriorError, PolyVector};
pub use interval::Interval;
pub use lattice::{
    delta, sigma, sigma_profile, IntVector, NormKind, SigmaError, SigmaProfile, TargetVector,
};
pub use maps::{DerivativeBounds, Hypercube, MapError, MultiIndex, Polynomial, PolynomialMap};
pub use measure::{BoundReport, DensityCurve, MeasureError, VolumeEstimate};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
