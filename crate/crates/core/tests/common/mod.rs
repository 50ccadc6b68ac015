// Shared generators for the integration suites.
#![allow(dead_code)]

use aims::ledger::ParticipantId;
use aims::{BurnActivity, FixedDecimal, Ledger, PriceFunction, Timestamp};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

pub fn d(s: &str) -> FixedDecimal {
    s.parse().unwrap()
}

pub fn who(i: usize) -> ParticipantId {
    ParticipantId::from_label(&format!("p{i}"))
}

/// Raw value spread over magnitudes: `10^e` scale with `e` uniform in `0..=max_exp`.
pub fn spread(rng: &mut Pcg64, max_exp: u32) -> i128 {
    let e = rng.gen_range(0..=max_exp);
    rng.gen_range(1..=10i128.pow(e))
}

/// Uniform raw amount in `[1, cap]`, or all of it one time in five.
pub fn portion(rng: &mut Pcg64, cap: FixedDecimal) -> FixedDecimal {
    if rng.gen_bool(0.2) {
        cap
    } else {
        FixedDecimal::from_raw(rng.gen_range(1..=cap.raw()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TraceShape {
    pub max_events: usize,
    pub participants: usize,
    /// Latest event time, in days past the curve end. `None` keeps every
    /// event at or before the end.
    pub past_end_days: Option<u64>,
}

impl Default for TraceShape {
    fn default() -> Self {
        TraceShape {
            max_events: 500,
            participants: 6,
            past_end_days: Some(200),
        }
    }
}

/// Random valid mint/burn/transfer session on `pf`.
pub fn random_trace(rng: &mut Pcg64, pf: &PriceFunction, shape: TraceShape) -> Ledger {
    let mut ledger = Ledger::new(pf.clone());
    let n = rng.gen_range(1..=shape.max_events);
    let last = pf.end().secs() + shape.past_end_days.unwrap_or(0) * 86_400;
    let span = last - pf.start().secs();
    let mut t = pf.start().secs() + rng.gen_range(0..=span / 4);
    let people: Vec<ParticipantId> = (0..shape.participants).map(who).collect();
    for _ in 0..n {
        if rng.gen_bool(0.8) {
            t += rng.gen_range(0..=2 * span / n as u64);
        }
        t = t.min(last);
        let at = Timestamp::from_secs(t).unwrap();
        let holders: Vec<ParticipantId> =
            people.iter().copied().filter(|p| ledger.balance(p).is_positive()).collect();
        let roll = rng.gen_range(0..100);
        if holders.is_empty() || roll < 45 {
            let owner = people[rng.gen_range(0..people.len())];
            let deposit = if rng.gen_bool(0.03) {
                FixedDecimal::ZERO
            } else {
                FixedDecimal::from_raw(spread(rng, 24))
            };
            ledger.mint(owner, deposit, at).unwrap();
        } else if roll < 70 {
            let owner = holders[rng.gen_range(0..holders.len())];
            let coins = portion(rng, ledger.balance(&owner));
            let activity = if rng.gen_bool(0.5) {
                BurnActivity::Donation
            } else {
                BurnActivity::WishRedeem
            };
            ledger.burn(owner, coins, activity, at).unwrap();
        } else {
            let from = holders[rng.gen_range(0..holders.len())];
            let to = people[rng.gen_range(0..people.len())];
            let coins = portion(rng, ledger.balance(&from));
            ledger.transfer(from, to, coins, at).unwrap();
        }
    }
    ledger
}

/// Uniform time in `[from, to]`.
pub fn time_between(rng: &mut Pcg64, from: Timestamp, to: Timestamp) -> Timestamp {
    Timestamp::from_secs(rng.gen_range(from.secs()..=to.secs())).unwrap()
}
