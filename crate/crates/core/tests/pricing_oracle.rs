mod common;

use aims::oracle::{
    from_fixed, oracle_daily_ratio, oracle_price, public_price, relative_error, round_half_up_18, ten_to_minus,
};
use aims::pricing::{nth_root_wide, PricePoint, WideDecimal};
use aims::{FixedDecimal, PriceConfig, PriceFunction, Timestamp};
use common::d;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use proptest::prelude::*;

fn wide(w: WideDecimal) -> BigRational {
    let raw: BigInt = w.raw().to_string().parse().unwrap();
    BigRational::new(raw, BigInt::from(10u8).pow(30))
}

#[test]
fn every_wish_day_is_the_rounded_oracle_price() {
    let pf = PriceFunction::wish();
    for day in 0..=pf.horizon_days() + 3 {
        let t = pf.start().plus_days(day).unwrap();
        assert_eq!(pf.price_at(t).unwrap(), public_price(&pf, t).unwrap(), "day {day}");
    }
}

// Before the public rounding the 30-digit product is far inside 1e-12.
#[test]
fn unrounded_curve_within_1e12_of_oracle() {
    let pf = PriceFunction::wish();
    let r = pf.daily_ratio().unwrap();
    let p0 = from_fixed(pf.initial_price());
    let bound = ten_to_minus(12);
    let mut worst = BigRational::from_integer(0.into());
    for day in 0..=pf.horizon_days() {
        let engine = &p0 * wide(r.pow(day).unwrap());
        let oracle = oracle_price(&pf, pf.day_start(day).unwrap()).unwrap();
        let err = relative_error(&engine, &oracle);
        assert!(err <= bound, "day {day}");
        worst = worst.max(err);
    }
    assert!(worst < ten_to_minus(24), "accumulated error {worst}");
}

// At scale 18 the half-unit quantization alone is 5e-19 / price, which is
// above 1e-12 while the price is below 5e-7.
#[test]
fn public_curve_within_1e12_where_the_scale_allows() {
    let pf = PriceFunction::wish();
    let floor = d("0.0000005");
    let mut checked = 0;
    for day in 0..=pf.horizon_days() {
        let t = pf.day_start(day).unwrap();
        let engine = pf.price_at(t).unwrap();
        if engine < floor {
            continue;
        }
        let oracle = oracle_price(&pf, t).unwrap();
        assert!(relative_error(&from_fixed(engine), &oracle) <= ten_to_minus(12), "day {day}");
        checked += 1;
    }
    assert!(checked > 2000);
}

#[test]
fn public_curve_within_one_unit_everywhere() {
    let pf = PriceFunction::wish();
    let unit = ten_to_minus(18);
    for day in 0..=pf.horizon_days() {
        let t = pf.day_start(day).unwrap();
        let diff = (from_fixed(pf.price_at(t).unwrap()) - oracle_price(&pf, t).unwrap()).abs();
        assert!(diff <= unit, "day {day}");
    }
}

#[test]
fn daily_ratio_against_oracle_root() {
    let pf = PriceFunction::wish();
    let r = wide(pf.daily_ratio().unwrap());
    let exact = oracle_daily_ratio(pf.base().unwrap(), 365);
    // half a unit of the 30th digit, plus the oracle's own 1e-80
    assert!((&r - &exact).abs() <= ten_to_minus(30) / BigInt::from(2) + ten_to_minus(80));
    assert_eq!(pf.daily_ratio().unwrap().to_string(), "1.005117084396619891365433594815");
}

#[test]
fn ratio_to_the_365th_reproduces_the_base() {
    let pf = PriceFunction::wish();
    let b = from_fixed(pf.base().unwrap());
    let engine = wide(pf.daily_ratio().unwrap().pow(365).unwrap());
    assert!(relative_error(&engine, &b) <= ten_to_minus(24));

    let exact = oracle_daily_ratio(pf.base().unwrap(), 365);
    let mut acc = BigRational::from_integer(1.into());
    for _ in 0..365 {
        acc *= &exact;
    }
    assert!(relative_error(&acc, &b) <= ten_to_minus(24));
}

#[test]
fn one_year_is_exactly_p0_times_base() {
    let pf = PriceFunction::wish();
    assert_eq!(pf.price_on_day(365).unwrap().raw(), 64_428_653_000);
}

#[test]
fn terminal_value_and_plateau() {
    let pf = PriceFunction::wish();
    let end = pf.end();
    assert_eq!(pf.horizon_days(), 3609);
    let terminal = pf.price_at(end).unwrap();
    assert_eq!(terminal, round_half_up_18(&oracle_price(&pf, end).unwrap()));
    let published = BigRational::new(100_000_005_841i64.into(), 100_000_000_000i64.into());
    assert!(relative_error(&from_fixed(terminal), &published) <= BigRational::new(5.into(), 1000.into()));
    let later = Timestamp::from_ymd(2040, 1, 1).unwrap();
    assert_eq!(pf.price_at(later).unwrap(), terminal);
}

#[test]
fn linear_curve_matches_oracle_daily() {
    let config = PriceConfig::PiecewiseLinear {
        points: vec![
            PricePoint { at: Timestamp::from_ymd(2024, 1, 1).unwrap(), price: d("0.5") },
            PricePoint { at: Timestamp::from_ymd(2024, 4, 1).unwrap(), price: d("0.75") },
            PricePoint { at: Timestamp::from_ymd(2025, 1, 1).unwrap(), price: d("3.000000000000000001") },
        ],
        day_length_seconds: None,
    };
    let pf = PriceFunction::from_config(&config).unwrap();
    for day in 0..=pf.horizon_days() + 5 {
        let t = pf.start().plus_days(day).unwrap().plus_secs(3_600).unwrap();
        assert_eq!(pf.price_at(t).unwrap(), public_price(&pf, t).unwrap(), "day {day}");
    }
}

#[test]
fn root_of_a_minimal_base() {
    let b = FixedDecimal::from_raw(1_000_000_000_001_000_000);
    let r = wide(nth_root_wide(b, 365).unwrap());
    let exact = oracle_daily_ratio(b, 365);
    assert!((&r - &exact).abs() <= ten_to_minus(30));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Random exponential curves: public price within one unit of the exact
    // value and never more than 1e-12 relative away once above 5e-7.
    #[test]
    fn random_exponential_curves(
        p0_raw in 1_000_000_000i128..1_000_000_000_000_000_000_000,
        base_milli in 1_010u64..40_000,
        year in prop::sample::select(vec![360u32, 365, 366]),
        days in 30u64..1_500,
        probes in prop::collection::vec(0u64..2_000, 8),
    ) {
        let start = Timestamp::from_ymd(2024, 2, 29).unwrap();
        let pf = PriceFunction::from_config(&PriceConfig::Exponential {
            initial_price: FixedDecimal::from_raw(p0_raw),
            base: FixedDecimal::from_raw(base_milli as i128 * 1_000_000_000_000_000),
            start,
            end: start.plus_days(days).unwrap(),
            day_length_seconds: None,
            year_length_days: Some(year),
        });
        let pf = match pf {
            Ok(pf) => pf,
            Err(_) => return Ok(()),
        };
        for k in probes {
            let t = start.plus_days(k).unwrap().plus_secs(k * 37 % 86_400).unwrap();
            let engine = from_fixed(pf.price_at(t).unwrap());
            let oracle = oracle_price(&pf, t).unwrap();
            let err = (&engine - &oracle).abs();
            prop_assert!(err <= ten_to_minus(18), "{} vs {}", engine, oracle);
            if engine >= from_fixed(d("0.0000005")) {
                prop_assert!(relative_error(&engine, &oracle) <= ten_to_minus(12));
            }
        }
    }
}
