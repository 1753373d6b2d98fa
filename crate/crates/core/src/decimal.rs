//! Exact fixed-point decimals with six fractional digits.
//!
//! All costs, times, weights and reference values are carried as integer
//! micro-units so that arithmetic and comparisons are identical on every
//! platform.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use thiserror::Error;

/// Number of micro-units in one whole unit.
pub const SCALE: i64 = 1_000_000;

/// Maximum number of fractional digits accepted by the parser.
pub const MAX_FRACTION_DIGITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("empty number")]
    Empty,
    #[error("exponent notation is not allowed in `{0}`")]
    Exponent(String),
    #[error("more than {MAX_FRACTION_DIGITS} fractional digits in `{0}`")]
    TooPrecise(String),
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("number `{0}` is out of range")]
    Overflow(String),
}

/// A signed decimal stored as an integer count of micro-units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal(i64);

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    pub const fn from_micros(micros: i64) -> Self {
        Decimal(micros)
    }

    pub const fn from_int(value: i64) -> Self {
        Decimal(value * SCALE)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn checked_add(self, other: Decimal) -> Option<Decimal> {
        self.0.checked_add(other.0).map(Decimal)
    }

    /// Multiplies by an integer count.
    pub fn checked_mul_int(self, n: i64) -> Option<Decimal> {
        self.0.checked_mul(n).map(Decimal)
    }

    /// Integer part if the value has no fractional component.
    pub fn as_integer(self) -> Option<i64> {
        (self.0 % SCALE == 0).then_some(self.0 / SCALE)
    }

    /// Renders with exactly six fractional digits, e.g. `2.000000`.
    pub fn to_fixed6(self) -> String {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        format!("{sign}{}.{:06}", abs / SCALE as u64, abs % SCALE as u64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }
}

impl Add for Decimal {
    type Output = Decimal;
    fn add(self, rhs: Decimal) -> Decimal {
        Decimal(self.0 + rhs.0)
    }
}

impl Sub for Decimal {
    type Output = Decimal;
    fn sub(self, rhs: Decimal) -> Decimal {
        Decimal(self.0 - rhs.0)
    }
}

/// Shortest exact rendering: `2`, `1.5`, `-0.000001`.
impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fixed = self.to_fixed6();
        let trimmed = fixed.trim_end_matches('0').trim_end_matches('.');
        f.write_str(trimmed)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.is_empty() {
            return Err(DecimalError::Empty);
        }
        if text.contains(['e', 'E']) {
            return Err(DecimalError::Exponent(text.to_string()));
        }
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        let malformed = || DecimalError::Malformed(text.to_string());
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let mut frac_micros: i64 = 0;
        if let Some(frac) = frac_part {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            if frac.len() > MAX_FRACTION_DIGITS {
                return Err(DecimalError::TooPrecise(text.to_string()));
            }
            let padded = format!("{frac:0<6}");
            frac_micros = padded.parse().map_err(|_| malformed())?;
        }
        let overflow = || DecimalError::Overflow(text.to_string());
        let whole: i64 = int_part.parse().map_err(|_| overflow())?;
        let magnitude = whole
            .checked_mul(SCALE)
            .and_then(|m| m.checked_add(frac_micros))
            .ok_or_else(overflow)?;
        Ok(Decimal(if negative { -magnitude } else { magnitude }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        let d: Decimal = "1.5".parse().unwrap();
        assert_eq!(d.micros(), 1_500_000);
        assert_eq!(d.to_string(), "1.5");
        assert_eq!(d.to_fixed6(), "1.500000");
        assert_eq!("2".parse::<Decimal>().unwrap().to_string(), "2");
        assert_eq!("-0.000001".parse::<Decimal>().unwrap().micros(), -1);
        assert_eq!(Decimal::from_int(0).to_string(), "0");
        assert_eq!(Decimal::from_micros(-2_500_000).to_fixed6(), "-2.500000");
    }

    #[test]
    fn rejects_bad_forms() {
        assert!(matches!("1e3".parse::<Decimal>(), Err(DecimalError::Exponent(_))));
        assert!(matches!("0.1234567".parse::<Decimal>(), Err(DecimalError::TooPrecise(_))));
        assert!(matches!(".5".parse::<Decimal>(), Err(DecimalError::Malformed(_))));
        assert!(matches!("5.".parse::<Decimal>(), Err(DecimalError::Malformed(_))));
        assert!(matches!("+5".parse::<Decimal>(), Err(DecimalError::Malformed(_))));
        assert!(matches!("99999999999999".parse::<Decimal>(), Err(DecimalError::Overflow(_))));
    }
}
