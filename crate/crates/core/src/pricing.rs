//! Time-to-price functions.
//!
//! A [`PriceFunction`] maps a timestamp to a token price. The price is a
//! step function of whole days since `start`: constant within a day, strictly
//! increasing across day boundaries up to `end`, and frozen at its `end`
//! value afterwards. Queries before `start` are errors.
//!
//! The exponential family evaluates `initial_price * base^(d / year_length_days)`
//! on day `d` as `initial_price * r^d`, where `r = base^(1 / year_length_days)`
//! is fixed once at 30 fractional digits:
//!
//! 1. Newton's iteration `x <- ((n - 1) x + base / x^(n - 1)) / n` runs in
//!    256-bit integers at 36 fractional digits, starting from the upper bound
//!    `1 + (base - 1) / n`, and stops as soon as an iterate fails to decrease.
//! 2. The fixed point is rounded half-up to 30 fractional digits.
//!
//! `r^d` is then taken by square-and-multiply at 30 fractional digits with
//! round-half-up after every product, multiplied by `initial_price`, and
//! rounded half-up to the public 18-digit scale.

use std::fmt;

use ethnum::U256;
use serde::{Deserialize, Serialize};

use crate::decimal::FixedDecimal;
use crate::error::{Error, Result};
use crate::time::{Timestamp, SECONDS_PER_DAY};

const WIDE_DIGITS: u32 = 30;
const GUARD_DIGITS: u32 = 36;
const MAX_NEWTON_STEPS: usize = 100_000;

fn pow10(n: u32) -> U256 {
    U256::from(10u8).pow(n)
}

/// Unsigned fixed-point value with 30 fractional digits, used for the
/// daily growth ratio and its powers.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WideDecimal(U256);

impl WideDecimal {
    pub const SCALE: u32 = WIDE_DIGITS;

    pub fn from_raw(raw: U256) -> Self {
        WideDecimal(raw)
    }

    pub fn raw(self) -> U256 {
        self.0
    }

    fn one() -> Self {
        WideDecimal(pow10(WIDE_DIGITS))
    }

    /// `round_half_up(self * rhs)` at 30 digits.
    fn mul_round(self, rhs: Self) -> Result<Self> {
        let s = pow10(WIDE_DIGITS);
        let p = self.0.checked_mul(rhs.0).ok_or(Error::Overflow)?;
        let p = p.checked_add(s / 2).ok_or(Error::Overflow)?;
        Ok(WideDecimal(p / s))
    }

    /// `self^exp` by square-and-multiply, rounding after every product.
    pub fn pow(self, mut exp: u64) -> Result<Self> {
        let mut acc = WideDecimal::one();
        let mut base = self;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_round(base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul_round(base)?;
            }
        }
        Ok(acc)
    }
}

impl fmt::Display for WideDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = pow10(WIDE_DIGITS);
        let frac = (self.0 % s).to_string();
        write!(f, "{}.{:0>30}", self.0 / s, frac)
    }
}

impl fmt::Debug for WideDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WideDecimal({self})")
    }
}

/// `base^(1/n)` at 30 fractional digits. `base` is a scale-18 value > 1.
pub fn nth_root_wide(base: FixedDecimal, n: u32) -> Result<WideDecimal> {
    if n == 0 {
        return Err(Error::InvalidPriceFunction("root degree must be positive".into()));
    }
    if base.raw() <= 0 {
        return Err(Error::InvalidPriceFunction("base must be positive".into()));
    }
    let s = pow10(GUARD_DIGITS);
    let b = U256::from(base.raw() as u128) * pow10(GUARD_DIGITS - 18);
    if n == 1 {
        return Ok(round_guard_to_wide(b));
    }
    let n_big = U256::from(n);
    let pow_guard = |x: U256, mut e: u32| -> Result<U256> {
        let mut acc = s;
        let mut base = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc
                    .checked_mul(base)
                    .and_then(|p| p.checked_add(s / 2))
                    .ok_or(Error::Overflow)?
                    / s;
            }
            e >>= 1;
            if e > 0 {
                base = base
                    .checked_mul(base)
                    .and_then(|p| p.checked_add(s / 2))
                    .ok_or(Error::Overflow)?
                    / s;
            }
        }
        Ok(acc)
    };
    let newton = |x: U256| -> Result<U256> {
        let denom = pow_guard(x, n - 1)?;
        if denom == U256::ZERO {
            return Err(Error::Overflow);
        }
        let quotient = b.checked_mul(s).ok_or(Error::Overflow)? / denom;
        let sum = (n_big - 1)
            .checked_mul(x)
            .and_then(|v| v.checked_add(quotient))
            .ok_or(Error::Overflow)?;
        Ok(sum / n_big)
    };
    let mut x = if b > s { s + (b - s) / n_big } else { s };
    // One step from the start point lands above the root even if flooring
    // the start put it slightly below.
    x = x.max(newton(x)?);
    for _ in 0..MAX_NEWTON_STEPS {
        let next = newton(x)?;
        if next >= x {
            return Ok(round_guard_to_wide(x));
        }
        x = next;
    }
    Err(Error::InvalidPriceFunction("root iteration did not converge".into()))
}

fn round_guard_to_wide(v: U256) -> WideDecimal {
    let d = pow10(GUARD_DIGITS - WIDE_DIGITS);
    WideDecimal((v + d / 2) / d)
}

/// Serializable description of a price function. Decimals are strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum PriceConfig {
    #[serde(rename = "exp")]
    Exponential {
        initial_price: FixedDecimal,
        base: FixedDecimal,
        start: Timestamp,
        end: Timestamp,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        day_length_seconds: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        year_length_days: Option<u32>,
    },
    #[serde(rename = "linear")]
    PiecewiseLinear {
        points: Vec<PricePoint>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        day_length_seconds: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricePoint {
    pub at: Timestamp,
    pub price: FixedDecimal,
}

impl PriceConfig {
    pub fn wish() -> Self {
        PriceConfig::Exponential {
            initial_price: FixedDecimal::from_raw(10_000_000_000),
            base: FixedDecimal::from_raw(6_442_865_300_000_000_000),
            start: Timestamp::from_ymd(2023, 3, 6).expect("valid date"),
            end: Timestamp::from_ymd(2033, 1, 21).expect("valid date"),
            day_length_seconds: None,
            year_length_days: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidPriceFunction(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Curve {
    Exponential {
        initial_price: FixedDecimal,
        base: FixedDecimal,
        year_length_days: u32,
        daily_ratio: WideDecimal,
    },
    PiecewiseLinear {
        points: Vec<PricePoint>,
    },
}

/// A validated, ready-to-evaluate price function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceFunction {
    start: Timestamp,
    end: Timestamp,
    day_length: u64,
    curve: Curve,
    config: PriceConfig,
}

impl PriceFunction {
    /// The WISH parameterization: 1e-8 initial price, base 6.4428653 per
    /// 365-day year, from 2023-03-06 to 2033-01-21.
    pub fn wish() -> Self {
        PriceFunction::from_config(&PriceConfig::wish()).expect("built-in configuration is valid")
    }

    pub fn exponential(
        initial_price: FixedDecimal,
        base: FixedDecimal,
        start: Timestamp,
        end: Timestamp,
    ) -> Result<Self> {
        PriceFunction::from_config(&PriceConfig::Exponential {
            initial_price,
            base,
            start,
            end,
            day_length_seconds: None,
            year_length_days: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        PriceFunction::from_config(&PriceConfig::from_json(text)?)
    }

    pub fn from_config(config: &PriceConfig) -> Result<Self> {
        let invalid = |m: &str| Err(Error::InvalidPriceFunction(m.to_string()));
        let pf = match config {
            PriceConfig::Exponential {
                initial_price,
                base,
                start,
                end,
                day_length_seconds,
                year_length_days,
            } => {
                let day_length = day_length_seconds.unwrap_or(SECONDS_PER_DAY);
                let year_length_days = year_length_days.unwrap_or(365);
                if !initial_price.is_positive() {
                    return invalid("initial_price must be positive");
                }
                // base >= 1 + 1e-12
                if base.raw() < FixedDecimal::ONE.raw() + 1_000_000 {
                    return invalid("base must exceed 1 by at least 1e-12");
                }
                if start >= end {
                    return invalid("start must precede end");
                }
                if day_length == 0 || year_length_days == 0 {
                    return invalid("day and year lengths must be positive");
                }
                let daily_ratio = nth_root_wide(*base, year_length_days)
                    .map_err(|_| Error::InvalidPriceFunction("base too large".into()))?;
                PriceFunction {
                    start: *start,
                    end: *end,
                    day_length,
                    curve: Curve::Exponential {
                        initial_price: *initial_price,
                        base: *base,
                        year_length_days,
                        daily_ratio,
                    },
                    config: config.clone(),
                }
            }
            PriceConfig::PiecewiseLinear {
                points,
                day_length_seconds,
            } => {
                let day_length = day_length_seconds.unwrap_or(SECONDS_PER_DAY);
                if day_length == 0 {
                    return invalid("day length must be positive");
                }
                if points.len() < 2 {
                    return invalid("at least two points are required");
                }
                if !points[0].price.is_positive() {
                    return invalid("prices must be positive");
                }
                for w in points.windows(2) {
                    if w[0].at >= w[1].at || w[0].price >= w[1].price {
                        return invalid("points must be strictly increasing in time and price");
                    }
                }
                PriceFunction {
                    start: points[0].at,
                    end: points[points.len() - 1].at,
                    day_length,
                    curve: Curve::PiecewiseLinear {
                        points: points.clone(),
                    },
                    config: config.clone(),
                }
            }
        };
        pf.check_evaluable()?;
        Ok(pf)
    }

    /// Rejects curves whose day-to-day steps vanish at scale 18 or whose
    /// horizon value overflows the 256-bit evaluator.
    fn check_evaluable(&self) -> Result<()> {
        match &self.curve {
            Curve::Exponential {
                initial_price,
                daily_ratio,
                ..
            } => {
                let one = WideDecimal::one().raw();
                let step = U256::from(initial_price.raw() as u128) * (daily_ratio.raw() - one);
                if step < one * 2 {
                    return Err(Error::InvalidPriceFunction(
                        "daily price increase is below the 1e-18 resolution".into(),
                    ));
                }
                self.price_on_day(self.horizon_days()).map_err(|_| {
                    Error::InvalidPriceFunction("horizon price exceeds the evaluable range".into())
                })?;
            }
            Curve::PiecewiseLinear { .. } => {
                let mut prev = self.price_on_day(0)?;
                for d in 1..=self.horizon_days() {
                    let p = self.price_on_day(d)?;
                    if p <= prev {
                        return Err(Error::InvalidPriceFunction(format!(
                            "price does not increase on day {d}"
                        )));
                    }
                    prev = p;
                }
            }
        }
        Ok(())
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn end(&self) -> Timestamp {
        self.end
    }

    pub fn day_length(&self) -> u64 {
        self.day_length
    }

    pub fn config(&self) -> &PriceConfig {
        &self.config
    }

    pub fn initial_price(&self) -> FixedDecimal {
        match &self.curve {
            Curve::Exponential { initial_price, .. } => *initial_price,
            Curve::PiecewiseLinear { points } => points[0].price,
        }
    }

    pub fn base(&self) -> Option<FixedDecimal> {
        match &self.curve {
            Curve::Exponential { base, .. } => Some(*base),
            Curve::PiecewiseLinear { .. } => None,
        }
    }

    pub fn year_length_days(&self) -> Option<u32> {
        match &self.curve {
            Curve::Exponential {
                year_length_days, ..
            } => Some(*year_length_days),
            Curve::PiecewiseLinear { .. } => None,
        }
    }

    /// `base^(1/year_length_days)` at 30 digits; `None` for linear curves.
    pub fn daily_ratio(&self) -> Option<WideDecimal> {
        match &self.curve {
            Curve::Exponential { daily_ratio, .. } => Some(*daily_ratio),
            Curve::PiecewiseLinear { .. } => None,
        }
    }

    /// Index of the last day boundary at or before `end`.
    pub fn horizon_days(&self) -> u64 {
        (self.end.secs() - self.start.secs()) / self.day_length
    }

    /// Day index used to price `t`: whole days from `start` to `min(t, end)`.
    pub fn day_index(&self, t: Timestamp) -> Result<u64> {
        if t < self.start {
            return Err(Error::TimeBeforeStart {
                at: t,
                start: self.start,
            });
        }
        let clamped = t.min(self.end);
        Ok((clamped.secs() - self.start.secs()) / self.day_length)
    }

    pub fn day_start(&self, day: u64) -> Result<Timestamp> {
        let offset = day.checked_mul(self.day_length).ok_or(Error::Overflow)?;
        self.start.plus_secs(offset)
    }

    pub fn price_at(&self, t: Timestamp) -> Result<FixedDecimal> {
        self.price_on_day(self.day_index(t)?)
    }

    /// Price on day `day`; days past the horizon price as the horizon day.
    pub fn price_on_day(&self, day: u64) -> Result<FixedDecimal> {
        let day = day.min(self.horizon_days());
        match &self.curve {
            Curve::Exponential {
                initial_price,
                daily_ratio,
                ..
            } => {
                let growth = daily_ratio.pow(day)?;
                let s = pow10(WIDE_DIGITS);
                let scaled = U256::from(initial_price.raw() as u128)
                    .checked_mul(growth.raw())
                    .and_then(|p| p.checked_add(s / 2))
                    .ok_or(Error::Overflow)?
                    / s;
                let raw = i128::try_from(scaled).map_err(|_| Error::Overflow)?;
                Ok(FixedDecimal::from_raw(raw))
            }
            Curve::PiecewiseLinear { points } => {
                let t = self.day_start(day)?.min(self.end);
                let i = points
                    .windows(2)
                    .position(|w| t < w[1].at)
                    .unwrap_or(points.len() - 2);
                let (a, b) = (&points[i], &points[i + 1]);
                let elapsed = FixedDecimal::from_raw((t.secs() - a.at.secs()) as i128);
                let span = FixedDecimal::from_raw((b.at.secs() - a.at.secs()) as i128);
                let rise = b.price.checked_sub(a.price)?;
                a.price.checked_add(rise.mul_div_floor(elapsed, span)?)
            }
        }
    }
}
