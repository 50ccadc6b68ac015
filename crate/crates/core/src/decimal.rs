//! `FixedDecimal`: signed scaled integer with 18 fractional decimal digits.
//!
//! Every monetary and token quantity on the ledger path is a `FixedDecimal`.
//! The inner value is an `i128` count of 1e-18 units (38 significant digits).
//! Products and quotients go through 256-bit intermediates and are rounded
//! only where the caller asks for it (`*_floor`, `*_ceil`).
//!
//! Text form: optional `-`, integer digits, optional `.` followed by at most
//! 18 digits. No exponents, no `+`, no surrounding whitespace. `Display`
//! always renders all 18 fractional digits, which is also the canonical
//! form used in logs, digests and CSV output.

use std::fmt;
use std::str::FromStr;

use ethnum::I256;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of fractional decimal digits carried by public quantities.
pub const SCALE: u32 = 18;

const UNIT: i128 = 1_000_000_000_000_000_000;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FixedDecimal(i128);

impl FixedDecimal {
    pub const ZERO: FixedDecimal = FixedDecimal(0);
    pub const ONE: FixedDecimal = FixedDecimal(UNIT);
    /// Smallest positive value, 1e-18.
    pub const EPSILON: FixedDecimal = FixedDecimal(1);
    pub const MAX: FixedDecimal = FixedDecimal(i128::MAX);

    /// Builds a value from its raw count of 1e-18 units.
    pub const fn from_raw(raw: i128) -> Self {
        FixedDecimal(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn from_int(n: i64) -> Self {
        FixedDecimal(n as i128 * UNIT)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        self.0.checked_add(rhs.0).map(FixedDecimal).ok_or(Error::Overflow)
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self> {
        self.0.checked_sub(rhs.0).map(FixedDecimal).ok_or(Error::Overflow)
    }

    pub fn checked_neg(self) -> Result<Self> {
        self.0.checked_neg().map(FixedDecimal).ok_or(Error::Overflow)
    }

    /// `floor(self * rhs)` at scale 18.
    pub fn mul_floor(self, rhs: Self) -> Result<Self> {
        let p = I256::from(self.0) * I256::from(rhs.0);
        narrow(floor_div(p, I256::from(UNIT)))
    }

    /// `ceil(self * rhs)` at scale 18.
    pub fn mul_ceil(self, rhs: Self) -> Result<Self> {
        let p = I256::from(self.0) * I256::from(rhs.0);
        narrow(ceil_div(p, I256::from(UNIT)))
    }

    /// `floor(self / rhs)` at scale 18.
    pub fn div_floor(self, rhs: Self) -> Result<Self> {
        if rhs.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let n = I256::from(self.0) * I256::from(UNIT);
        narrow(floor_div(n, I256::from(rhs.0)))
    }

    /// `floor(self * num / den)` with a single rounding step.
    pub fn mul_div_floor(self, num: Self, den: Self) -> Result<Self> {
        if den.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let p = I256::from(self.0) * I256::from(num.0);
        narrow(floor_div(p, I256::from(den.0)))
    }

    /// Parses the textual form, also reporting whether it was canonical
    /// (exactly 18 fractional digits, no redundant leading zeros, no `-0`).
    pub fn parse_canonical(s: &str) -> Result<Self> {
        let v: FixedDecimal = s.parse()?;
        if v.to_string() != s {
            return Err(Error::InvalidDecimal(s.to_string()));
        }
        Ok(v)
    }
}

/// Accumulates exact products of two scale-18 values (scale 36) without
/// intermediate rounding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProductSum(I256);

impl ProductSum {
    pub fn new() -> Self {
        ProductSum(I256::ZERO)
    }

    pub fn add_product(&mut self, a: FixedDecimal, b: FixedDecimal) -> Result<()> {
        let p = I256::from(a.0)
            .checked_mul(I256::from(b.0))
            .ok_or(Error::Overflow)?;
        self.0 = self.0.checked_add(p).ok_or(Error::Overflow)?;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.0 == I256::ZERO
    }

    pub fn floor(&self) -> Result<FixedDecimal> {
        narrow(floor_div(self.0, I256::from(UNIT)))
    }

    pub fn ceil(&self) -> Result<FixedDecimal> {
        narrow(ceil_div(self.0, I256::from(UNIT)))
    }
}

pub(crate) fn floor_div(n: I256, d: I256) -> I256 {
    let q = n / d;
    if n % d != I256::ZERO && ((n < I256::ZERO) != (d < I256::ZERO)) {
        q - I256::ONE
    } else {
        q
    }
}

pub(crate) fn ceil_div(n: I256, d: I256) -> I256 {
    let q = n / d;
    if n % d != I256::ZERO && ((n < I256::ZERO) == (d < I256::ZERO)) {
        q + I256::ONE
    } else {
        q
    }
}

fn narrow(v: I256) -> Result<FixedDecimal> {
    i128::try_from(v).map(FixedDecimal).map_err(|_| Error::Overflow)
}

impl FromStr for FixedDecimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidDecimal(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let frac = frac_part.unwrap_or("");
        if frac_part.is_some() && frac.is_empty() {
            return Err(invalid());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        if frac.len() > SCALE as usize {
            return Err(Error::DecimalPrecision(s.to_string()));
        }
        let int: i128 = int_part.parse().map_err(|_| Error::Overflow)?;
        let mut frac_raw: i128 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| invalid())?
        };
        for _ in frac.len()..SCALE as usize {
            frac_raw *= 10;
        }
        let raw = int
            .checked_mul(UNIT)
            .and_then(|v| v.checked_add(frac_raw))
            .ok_or(Error::Overflow)?;
        Ok(FixedDecimal(if negative { -raw } else { raw }))
    }
}

impl fmt::Display for FixedDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let unit = UNIT as u128;
        write!(f, "{sign}{}.{:018}", abs / unit, abs % unit)
    }
}

impl fmt::Debug for FixedDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FixedDecimal({self})")
    }
}

impl Serialize for FixedDecimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FixedDecimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> FixedDecimal {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_renders() {
        assert_eq!(d("0.00000001").raw(), 10_000_000_000);
        assert_eq!(d("1").to_string(), "1.000000000000000000");
        assert_eq!(d("-2.5").to_string(), "-2.500000000000000000");
        assert_eq!(d("6.4428653").raw(), 6_442_865_300_000_000_000);
        assert_eq!(FixedDecimal::EPSILON.to_string(), "0.000000000000000001");
    }

    #[test]
    fn rejects_bad_text() {
        for s in ["", "-", ".5", "1.", "1e5", "+1", " 1", "1.2.3", "0x10", "1,0"] {
            assert!(matches!(s.parse::<FixedDecimal>(), Err(Error::InvalidDecimal(_))), "{s}");
        }
    }

    #[test]
    fn nineteen_fractional_digits_is_a_precision_error() {
        assert!(matches!(
            "0.1234567890123456789".parse::<FixedDecimal>(),
            Err(Error::DecimalPrecision(_))
        ));
        assert!("0.123456789012345678".parse::<FixedDecimal>().is_ok());
    }

    #[test]
    fn canonical_form_is_strict() {
        assert!(FixedDecimal::parse_canonical("1.000000000000000000").is_ok());
        assert!(FixedDecimal::parse_canonical("1.0").is_err());
        assert!(FixedDecimal::parse_canonical("01.000000000000000000").is_err());
        assert!(FixedDecimal::parse_canonical("-0.000000000000000000").is_err());
    }

    #[test]
    fn rounding_directions() {
        let third = d("1").div_floor(d("3")).unwrap();
        assert_eq!(third.to_string(), "0.333333333333333333");
        let neg = d("-1").div_floor(d("3")).unwrap();
        assert_eq!(neg.to_string(), "-0.333333333333333334");
        let a = d("0.000000000000000001");
        assert_eq!(a.mul_floor(d("0.5")).unwrap(), FixedDecimal::ZERO);
        assert_eq!(a.mul_ceil(d("0.5")).unwrap(), FixedDecimal::EPSILON);
        assert_eq!(d("1").div_floor(FixedDecimal::ZERO), Err(Error::DivisionByZero));
    }

    #[test]
    fn overflow_is_reported() {
        assert_eq!(FixedDecimal::MAX.checked_add(FixedDecimal::EPSILON), Err(Error::Overflow));
        assert_eq!(FixedDecimal::MAX.mul_floor(d("2")), Err(Error::Overflow));
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(raw in any::<i128>()) {
            let v = FixedDecimal::from_raw(raw);
            prop_assert_eq!(v.to_string().parse::<FixedDecimal>().unwrap(), v);
            prop_assert_eq!(FixedDecimal::parse_canonical(&v.to_string()).unwrap(), v);
        }

        #[test]
        fn div_then_mul_never_exceeds(num in 0i128..1_000_000_000_000_000_000_000_000i128,
                                      den in 1i128..1_000_000_000_000_000_000_000i128) {
            let n = FixedDecimal::from_raw(num);
            let q = n.div_floor(FixedDecimal::from_raw(den)).unwrap();
            let back = q.mul_floor(FixedDecimal::from_raw(den)).unwrap();
            prop_assert!(back <= n);
        }
    }
}
