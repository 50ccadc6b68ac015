//! Slow, independent reference arithmetic for checking the engine.
//!
//! Nothing here calls into the pricing, ledger or analytics code; it only
//! reads configuration values and event records. Prices are evaluated from
//! an 80-digit integer root (`floor(base^(1/n) * 10^80)` by integer Newton
//! iteration on big integers) and powers carried at 100 fractional digits.
//! Ledger quantities are exact rationals.
//!
//! Ledger sums are defined on the published (scale-18) price, so
//! [`public_price`] rounds the reference price the way the published curve
//! does: half-up for exponential curves, floor for piecewise-linear ones.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::decimal::FixedDecimal;
use crate::error::{Error, Result};
use crate::ledger::{Event, EventKind, ParticipantId};
use crate::pricing::{PriceConfig, PriceFunction};
use crate::time::Timestamp;

const ROOT_DIGITS: u32 = 80;
const POW_DIGITS: u32 = 100;

fn ten_pow(n: u32) -> BigInt {
    num_traits::pow(BigInt::from(10u8), n as usize)
}

pub fn from_fixed(x: FixedDecimal) -> BigRational {
    BigRational::new(BigInt::from(x.raw()), ten_pow(18))
}

/// `|a - b| / |b|` (or `|a|` when `b` is zero).
pub fn relative_error(a: &BigRational, b: &BigRational) -> BigRational {
    let diff = (a - b).abs();
    if b.is_zero() {
        diff
    } else {
        diff / b.abs()
    }
}

/// `|engine - reference| <= max(rel * |reference|, units * 1e-18)`.
pub fn agrees(engine: FixedDecimal, reference: &BigRational, rel: &BigRational, units: usize) -> bool {
    let diff = (from_fixed(engine) - reference).abs();
    let relative_bound = rel * reference.abs();
    let unit_bound = BigRational::new(BigInt::from(units), ten_pow(18));
    diff <= relative_bound.max(unit_bound)
}

/// `10^-exp` as a rational, for tolerances.
pub fn ten_to_minus(exp: u32) -> BigRational {
    BigRational::new(BigInt::one(), ten_pow(exp))
}

/// Rounds to scale 18, half-up.
pub fn round_half_up_18(x: &BigRational) -> FixedDecimal {
    let scaled = x * BigRational::from_integer(ten_pow(18)) + BigRational::new(1.into(), 2.into());
    fixed_from_int(scaled.floor().to_integer())
}

pub fn floor_18(x: &BigRational) -> FixedDecimal {
    let scaled = x * BigRational::from_integer(ten_pow(18));
    fixed_from_int(scaled.floor().to_integer())
}

fn fixed_from_int(i: BigInt) -> FixedDecimal {
    FixedDecimal::from_raw(i.to_i128().expect("value fits the public scale"))
}

/// `floor(base^(1/n) * 10^80)` for a scale-18 `base`.
pub fn integer_root(base: FixedDecimal, n: u32) -> BigInt {
    static CACHE: OnceLock<Mutex<HashMap<(i128, u32), BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("cache lock").get(&(base.raw(), n)) {
        return r.clone();
    }
    // x^n = base * 10^(80 n) with base = raw / 10^18
    let target = BigInt::from(base.raw()) * ten_pow(ROOT_DIGITS * n - 18);
    let nn = BigInt::from(n);
    let one = ten_pow(ROOT_DIGITS);
    let b = BigInt::from(base.raw()) * ten_pow(ROOT_DIGITS - 18);
    // Bernoulli: 1 + (b - 1)/n is an upper bound of the root.
    let mut x: BigInt = &one + (&b - &one) / &nn + 1;
    loop {
        let next = ((&nn - 1) * &x + &target / num_traits::pow(x.clone(), n as usize - 1)) / &nn;
        if next >= x {
            break;
        }
        x = next;
    }
    debug_assert!(num_traits::pow(x.clone(), n as usize) <= target);
    debug_assert!(num_traits::pow(&x + 1, n as usize) > target);
    cache.lock().expect("cache lock").insert((base.raw(), n), x.clone());
    x
}

/// Reference daily ratio `base^(1/n)` with 80 correct digits (floored).
pub fn oracle_daily_ratio(base: FixedDecimal, n: u32) -> BigRational {
    BigRational::new(integer_root(base, n), ten_pow(ROOT_DIGITS))
}

fn day_of(config: &PriceConfig, t: Timestamp) -> Result<(u64, Timestamp, Timestamp, u64)> {
    let (start, end, day_len) = match config {
        PriceConfig::Exponential {
            start,
            end,
            day_length_seconds,
            ..
        } => (*start, *end, day_length_seconds.unwrap_or(86_400)),
        PriceConfig::PiecewiseLinear {
            points,
            day_length_seconds,
        } => (
            points[0].at,
            points[points.len() - 1].at,
            day_length_seconds.unwrap_or(86_400),
        ),
    };
    if t < start {
        return Err(Error::TimeBeforeStart { at: t, start });
    }
    let effective = if t > end { end } else { t };
    Ok(((effective.secs() - start.secs()) / day_len, start, end, day_len))
}

/// Reference price at `t` without any rounding to the public scale.
pub fn oracle_price(pf: &PriceFunction, t: Timestamp) -> Result<BigRational> {
    let config = pf.config();
    let (day, start, end, day_len) = day_of(config, t)?;
    match config {
        PriceConfig::Exponential {
            initial_price,
            base,
            year_length_days,
            ..
        } => {
            let root = integer_root(*base, year_length_days.unwrap_or(365));
            // root^day carried at 100 fractional digits
            let scale = ten_pow(POW_DIGITS);
            let mut acc = scale.clone();
            let mut sq = root * ten_pow(POW_DIGITS - ROOT_DIGITS);
            let mut e = day;
            while e > 0 {
                if e & 1 == 1 {
                    acc = (&acc * &sq) / &scale;
                }
                e >>= 1;
                if e > 0 {
                    sq = (&sq * &sq) / &scale;
                }
            }
            Ok(from_fixed(*initial_price) * BigRational::new(acc, scale))
        }
        PriceConfig::PiecewiseLinear { points, .. } => {
            let secs = (start.secs() + day * day_len).min(end.secs());
            let i = points
                .windows(2)
                .position(|w| secs < w[1].at.secs())
                .unwrap_or(points.len() - 2);
            let (a, b) = (&points[i], &points[i + 1]);
            let frac = BigRational::new(
                BigInt::from(secs - a.at.secs()),
                BigInt::from(b.at.secs() - a.at.secs()),
            );
            Ok(from_fixed(a.price) + (from_fixed(b.price) - from_fixed(a.price)) * frac)
        }
    }
}

/// Reference price rounded to the published scale.
pub fn public_price(pf: &PriceFunction, t: Timestamp) -> Result<FixedDecimal> {
    let p = oracle_price(pf, t)?;
    Ok(match pf.config() {
        PriceConfig::Exponential { .. } => round_half_up_18(&p),
        PriceConfig::PiecewiseLinear { .. } => floor_18(&p),
    })
}

#[derive(Clone, Debug)]
struct RefLot {
    id: u64,
    owner: ParticipantId,
    minted_at: Timestamp,
    price: BigRational,
    coins: BigRational,
    deposit: BigRational,
}

/// Exact valuation of a trace's surviving lots.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleValuation {
    pub omega: BigRational,
    pub lambda: BigRational,
    pub xi: BigRational,
    /// Exact proportional cost basis of the live lots.
    pub remaining_deposits: BigRational,
    pub total_supply: BigRational,
    pub live_lots: usize,
    pub omega_by_owner: BTreeMap<ParticipantId, BigRational>,
}

/// Replays `events` with exact rationals and evaluates locked value, profit
/// and burn target at `t_m` by direct summation over the surviving lots.
/// Minted coins are `floor(deposit / price)` at token resolution.
pub fn oracle_valuation(pf: &PriceFunction, events: &[Event], t_m: Timestamp) -> Result<OracleValuation> {
    let lots = reference_lots(pf, events)?;
    value_lots(pf, &lots, t_m)
}

/// [`oracle_valuation`] at several evaluation times over one replay.
pub fn oracle_valuations(pf: &PriceFunction, events: &[Event], times: &[Timestamp]) -> Result<Vec<OracleValuation>> {
    let lots = reference_lots(pf, events)?;
    times.iter().map(|&t| value_lots(pf, &lots, t)).collect()
}

fn value_lots(pf: &PriceFunction, lots: &[RefLot], t_m: Timestamp) -> Result<OracleValuation> {
    let now = from_fixed(public_price(pf, t_m)?);
    let zero = BigRational::zero();
    let mut omega = zero.clone();
    let mut lambda = zero.clone();
    let mut remaining = zero.clone();
    let mut supply = zero.clone();
    let mut live = 0;
    let mut by_owner: BTreeMap<ParticipantId, BigRational> = BTreeMap::new();
    for lot in lots.iter().filter(|l| l.coins.is_positive()) {
        let value = &lot.coins * &now;
        omega += &value;
        lambda += &lot.coins * (&now - &lot.price);
        remaining += &lot.deposit;
        supply += &lot.coins;
        live += 1;
        *by_owner.entry(lot.owner).or_insert_with(BigRational::zero) += value;
    }
    Ok(OracleValuation {
        xi: &omega - &lambda,
        omega,
        lambda,
        remaining_deposits: remaining,
        total_supply: supply,
        live_lots: live,
        omega_by_owner: by_owner,
    })
}

fn reference_lots(pf: &PriceFunction, events: &[Event]) -> Result<Vec<RefLot>> {
    let token = BigRational::new(BigInt::one(), ten_pow(18));
    let mut lots: Vec<RefLot> = Vec::new();
    let mut last: Option<Timestamp> = None;
    for (i, e) in events.iter().enumerate() {
        let seq = i as u64;
        if e.seq != seq || last.is_some_and(|l| e.at < l) {
            return Err(Error::malformed(seq, "sequence or time order"));
        }
        last = Some(e.at);
        match &e.kind {
            EventKind::Mint { owner, deposit, .. } => {
                let price = from_fixed(public_price(pf, e.at)?);
                let xi = from_fixed(*deposit);
                let coins = (&xi / &price / &token).floor() * &token;
                lots.push(RefLot {
                    id: lots.len() as u64,
                    owner: *owner,
                    minted_at: e.at,
                    price,
                    coins,
                    deposit: xi,
                });
            }
            EventKind::Burn { owner, coins, .. } => {
                take_fifo(&mut lots, owner, from_fixed(*coins), seq)?;
            }
            EventKind::Transfer { from, to, coins } => {
                if from == to {
                    continue;
                }
                let pieces = take_fifo(&mut lots, from, from_fixed(*coins), seq)?;
                for mut piece in pieces {
                    piece.id = lots.len() as u64;
                    piece.owner = *to;
                    lots.push(piece);
                }
            }
        }
    }
    Ok(lots)
}

/// Removes `amount` coins from `owner`'s lots, oldest first, and returns the
/// removed slices with their proportional cost basis.
fn take_fifo(lots: &mut [RefLot], owner: &ParticipantId, amount: BigRational, seq: u64) -> Result<Vec<RefLot>> {
    let mut order: Vec<usize> = (0..lots.len())
        .filter(|&i| lots[i].owner == *owner && lots[i].coins.is_positive())
        .collect();
    order.sort_by_key(|&i| (lots[i].minted_at, lots[i].id));
    let mut left = amount;
    let mut taken = Vec::new();
    for i in order {
        if left.is_zero() {
            break;
        }
        let lot = &mut lots[i];
        let take = if left < lot.coins { left.clone() } else { lot.coins.clone() };
        let share = &lot.deposit * &take / &lot.coins;
        taken.push(RefLot {
            coins: take.clone(),
            deposit: share.clone(),
            ..lot.clone()
        });
        lot.coins -= &take;
        lot.deposit -= share;
        left -= take;
    }
    if left.is_positive() {
        return Err(Error::malformed(seq, "insufficient balance"));
    }
    Ok(taken)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_brackets_the_target() {
        let base: FixedDecimal = "6.4428653".parse().unwrap();
        let r = integer_root(base, 365);
        let target = BigInt::from(base.raw()) * ten_pow(80 * 365 - 18);
        assert!(num_traits::pow(r.clone(), 365) <= target);
        assert!(num_traits::pow(r + 1, 365) > target);
    }

    #[test]
    fn wish_start_price_is_exact() {
        let pf = PriceFunction::wish();
        assert_eq!(oracle_price(&pf, pf.start()).unwrap(), from_fixed("0.00000001".parse().unwrap()));
    }

    #[test]
    fn one_year_reproduces_the_base() {
        let pf = PriceFunction::wish();
        let p = oracle_price(&pf, pf.day_start(365).unwrap()).unwrap();
        let expected = from_fixed("0.000000064428653".parse().unwrap());
        assert!(relative_error(&p, &expected) < ten_to_minus(45));
    }

    #[test]
    fn before_start_is_an_error() {
        let pf = PriceFunction::wish();
        let t = Timestamp::from_secs(pf.start().secs() - 1).unwrap();
        assert!(matches!(oracle_price(&pf, t), Err(Error::TimeBeforeStart { .. })));
    }

    #[test]
    fn empty_trace_values_to_zero() {
        let pf = PriceFunction::wish();
        let v = oracle_valuation(&pf, &[], pf.end()).unwrap();
        assert!(v.omega.is_zero() && v.lambda.is_zero() && v.xi.is_zero());
    }

    #[test]
    fn rounding_helpers() {
        let half = BigRational::new(BigInt::from(5), ten_pow(19));
        assert_eq!(round_half_up_18(&half), FixedDecimal::EPSILON);
        assert_eq!(floor_18(&half), FixedDecimal::ZERO);
    }
}
