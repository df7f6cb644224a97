//! JSON specifications of vectors, sequences and polynomial maps.
//!
//! Vector: `["1", "phi", "sqrt(2)", "-3/7"]`.
//! Sequence: `{"type":"geometric","C":"1/5","tau":"1"}` or
//! `{"type":"table","values":["1","1/2",...]}`.
//! Map: either `{"moment_curve": ["1","phi"]}` for `α + (x, x², ..)`, or
//! `{"d":1,"n":2,"l":2,"components":[[["1","0"],["1","1"]], ...]}` where each
//! component is a list of `[coefficient, exponent]` terms and the exponent is
//! an integer (or integer string) when `d = 1`, or a list of `d` integers.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{ClassError, DecreasingSequence};
use crate::lattice::TargetVector;
use crate::maps::{MapError, Polynomial, PolynomialMap};
use crate::scalar::{parse_rational, parse_real, ScalarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("{0}")]
    Invalid(String),
}

/// Parses vector tokens, snapping irrationals below `2^snap_bits`.
pub fn parse_vector(tokens: &[String], snap_bits: u32) -> Result<TargetVector, ConfigError> {
    if tokens.is_empty() {
        return Err(ConfigError::Invalid("empty vector".into()));
    }
    let coords = tokens
        .iter()
        .map(|t| parse_real(t, snap_bits).map(|s| s.value))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TargetVector::new(coords))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SequenceSpec {
    Geometric {
        #[serde(rename = "C")]
        c: String,
        tau: String,
    },
    Table {
        values: Vec<String>,
    },
}

impl SequenceSpec {
    pub fn build(&self) -> Result<DecreasingSequence, ConfigError> {
        Ok(match self {
            SequenceSpec::Geometric { c, tau } => {
                DecreasingSequence::geometric(parse_rational(c)?, parse_rational(tau)?)?
            }
            SequenceSpec::Table { values } => DecreasingSequence::table(
                values
                    .iter()
                    .map(|v| parse_rational(v))
                    .collect::<Result<Vec<BigRational>, _>>()?,
            )?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Int(u32),
    Text(String),
    Multi(Vec<u32>),
}

impl Exponent {
    fn to_vec(&self, d: usize) -> Result<Vec<u32>, ConfigError> {
        let v = match self {
            Exponent::Int(e) => vec![*e],
            Exponent::Text(s) => vec![s
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("bad exponent `{s}`")))?],
            Exponent::Multi(v) => v.clone(),
        };
        if v.len() != d {
            return Err(ConfigError::Invalid(format!(
                "exponent {v:?} has {} entries, expected {d}",
                v.len()
            )));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    MomentCurve {
        moment_curve: Vec<String>,
    },
    Explicit {
        d: usize,
        #[serde(default)]
        n: Option<usize>,
        l: u32,
        components: Vec<Vec<(String, Exponent)>>,
    },
}

impl MapSpec {
    pub fn build(&self, snap_bits: u32) -> Result<PolynomialMap, ConfigError> {
        match self {
            MapSpec::MomentCurve { moment_curve } => {
                let alpha = parse_vector(moment_curve, snap_bits)?;
                Ok(PolynomialMap::shifted_moment_curve(alpha.coords()))
            }
            MapSpec::Explicit { d, n, l, components } => {
                if let Some(n) = n {
                    if *n != components.len() {
                        return Err(ConfigError::Invalid(format!(
                            "n = {n} but {} components given",
                            components.len()
                        )));
                    }
                }
                let polys = components
                    .iter()
                    .map(|terms| {
                        let terms = terms
                            .iter()
                            .map(|(c, e)| Ok((e.to_vec(*d)?, parse_real(c, snap_bits)?.value)))
                            .collect::<Result<Vec<_>, ConfigError>>()?;
                        Ok(Polynomial::from_terms(*d, terms))
                    })
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                Ok(PolynomialMap::new(*d, *l, polys)?)
            }
        }
    }
}
