use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Exact rational used for capacities, flow values and cut bounds.
pub type Rational = Ratio<i128>;

/// Edge capacity: a positive rational or the unbounded sentinel.
///
/// Comparisons treat `Unbounded` as larger than every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Capacity {
    Finite(Rational),
    Unbounded,
}

impl Capacity {
    pub fn from_integer(n: i128) -> Self {
        Capacity::Finite(Rational::from_integer(n))
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Capacity::Unbounded)
    }

    pub fn as_finite(&self) -> Option<Rational> {
        match self {
            Capacity::Finite(r) => Some(*r),
            Capacity::Unbounded => None,
        }
    }

    /// Positive-or-unbounded check used by graph construction.
    pub fn is_positive(&self) -> bool {
        match self {
            Capacity::Finite(r) => r.is_positive(),
            Capacity::Unbounded => true,
        }
    }

    /// Divides a finite capacity by a positive integer; unbounded stays unbounded.
    pub fn div_by(&self, n: usize) -> Capacity {
        match self {
            Capacity::Finite(r) => Capacity::Finite(r / Rational::from_integer(n as i128)),
            Capacity::Unbounded => Capacity::Unbounded,
        }
    }

    pub fn scale(&self, factor: Rational) -> Capacity {
        match self {
            Capacity::Finite(r) => Capacity::Finite(r * factor),
            Capacity::Unbounded => Capacity::Unbounded,
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(r) => write!(f, "{r}"),
            Capacity::Unbounded => write!(f, "inf"),
        }
    }
}

impl Serialize for Capacity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for Capacity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Capacity::Unbounded);
        }
        let ratio = Rational::from_str(s).map_err(|e| {
            Error::InvalidInput(format!("cannot parse capacity `{s}`: {e}"))
        })?;
        if ratio.is_zero() || ratio.is_negative() {
            return Err(Error::InvalidInput(format!(
                "capacity must be positive, got `{s}`"
            )));
        }
        Ok(Capacity::Finite(ratio))
    }
}

/// Formats a rational the way reports expect: `2`, `1/2`, `0`.
pub fn rational_to_string(r: &Rational) -> String {
    r.to_string()
}
