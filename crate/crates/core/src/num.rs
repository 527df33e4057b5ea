//! Numeric building blocks: the scalar bound used by the geometry, and an
//! exact fixed-precision decimal for statement values and credits.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floating-point type usable for space-time coordinates.
///
/// Implemented for `f32` and `f64`. The causal tolerance is the absolute
/// slack (in natural units, c = 1) inside which an arrival counts as on the
/// light cone.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + fmt::Debug
    + fmt::Display
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    fn causal_tolerance() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    fn causal_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    // 1e-9 is below f32 resolution at unit scale.
    fn causal_tolerance() -> Self {
        1e-5
    }
}

const SCALE: i64 = 1_000_000;
const FRACTION_DIGITS: usize = 6;

/// Signed decimal with six fractional digits, compared exactly.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Fixed(i64);

/// Token and sub-token values.
pub type Credits = Fixed;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixedParseError {
    #[error("`{0}` is not a decimal number")]
    Syntax(String),
    #[error("`{0}` has more than {FRACTION_DIGITS} fractional digits")]
    Precision(String),
    #[error("`{0}` is out of range")]
    Range(String),
}

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);

    pub const fn from_int(value: i64) -> Self {
        Fixed(value * SCALE)
    }

    pub const fn from_raw(raw: i64) -> Self {
        Fixed(raw)
    }

    /// Underlying integer count of millionths.
    pub const fn raw(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn checked_add(self, other: Fixed) -> Option<Fixed> {
        self.0.checked_add(other.0).map(Fixed)
    }

    pub fn checked_sub(self, other: Fixed) -> Option<Fixed> {
        self.0.checked_sub(other.0).map(Fixed)
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-self.0)
    }
}

impl std::iter::Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        iter.fold(Fixed::ZERO, |a, b| a + b)
    }
}

impl FromStr for Fixed {
    type Err = FixedParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !digits(int_part) || !digits(frac_part) {
            return Err(FixedParseError::Syntax(s.to_string()));
        }
        if frac_part.len() > FRACTION_DIGITS {
            return Err(FixedParseError::Precision(s.to_string()));
        }
        let range = || FixedParseError::Range(s.to_string());
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| range())?
        };
        let mut frac: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| range())?
        };
        for _ in frac_part.len()..FRACTION_DIGITS {
            frac *= 10;
        }
        let magnitude = whole
            .checked_mul(SCALE)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(range)?;
        Ok(Fixed(if negative { -magnitude } else { magnitude }))
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let magnitude = self.0.unsigned_abs();
        let whole = magnitude / SCALE as u64;
        let frac = magnitude % SCALE as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({self})")
    }
}

impl TryFrom<String> for Fixed {
    type Error = FixedParseError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Fixed> for String {
    fn from(value: Fixed) -> String {
        value.to_string()
    }
}
