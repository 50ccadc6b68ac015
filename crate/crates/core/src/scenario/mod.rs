//! Scenario simulation.
//!
//! A scenario is a JSON document naming a price function, participants, a
//! time-sorted schedule of deposits / burns / transfers and optional
//! stochastic agents. [`run`] executes it against a fresh [`Ledger`] and
//! samples the analytics into a [`TimeSeries`].
//!
//! Execution order: the run walks "ticks" (every day boundary from `start`
//! when agents are present, plus every sampling boundary) up to `horizon`.
//! At each tick it applies the scheduled actions timed at or before the
//! tick, then lets each agent act in declaration order, then samples.
//!
//! Agents draw from PCG-XSL-RR-128/64 (`rand_pcg::Pcg64`) seeded with
//! `Pcg64::seed_from_u64(seed)`. Each agent consumes exactly six 64-bit
//! draws per day, in this order: deposit?, deposit amount, burn?, burn
//! activity, transfer?, recipient. An event with probability `p` fires when
//! `draw < floor(p * 2^64)`; a uniform pick in `[0, n)` is
//! `(draw * n) >> 64`, with a 128-bit draw (two words, high first) for
//! amounts.

mod parse;

use std::collections::BTreeMap;

use ethnum::U256;
use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64;

pub use parse::parse_scenario;

use crate::analytics::{check_report, valuation_report};
use crate::decimal::FixedDecimal;
use crate::error::{Error, Result};
use crate::ledger::{BurnActivity, Ledger, ParticipantId};
use crate::pricing::PriceFunction;
use crate::time::Timestamp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Day,
    Week,
    Month,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Deposit {
        participant: String,
        amount: FixedDecimal,
    },
    Burn {
        participant: String,
        coins: FixedDecimal,
        activity: BurnActivity,
    },
    Transfer {
        from: String,
        to: String,
        coins: FixedDecimal,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduledAction {
    pub at: Timestamp,
    pub action: Action,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivityChoice {
    Fixed(BurnActivity),
    /// Donation or wish redeem with equal probability.
    Mixed,
}

/// Daily behaviour of one participant. Probabilities and fractions lie in
/// `[0, 1]`; burns and transfers move `floor(balance * fraction)` coins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentSpec {
    pub participant: String,
    pub deposit_probability: FixedDecimal,
    pub deposit_min: FixedDecimal,
    pub deposit_max: FixedDecimal,
    pub burn_probability: FixedDecimal,
    pub burn_fraction: FixedDecimal,
    pub activity: ActivityChoice,
    pub transfer_probability: FixedDecimal,
    pub transfer_fraction: FixedDecimal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub price_function: PriceFunction,
    pub participants: Vec<String>,
    pub start: Timestamp,
    pub horizon: Timestamp,
    pub sampling: Sampling,
    pub seed: Option<u64>,
    pub schedule: Vec<ScheduledAction>,
    pub agents: Vec<AgentSpec>,
}

impl Scenario {
    pub fn from_json(document: &[u8]) -> Result<Scenario> {
        parse_scenario(document)
    }

    fn sample_times(&self) -> Result<Vec<Timestamp>> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let t = match self.sampling {
                Sampling::Day => self.start.plus_days(k)?,
                Sampling::Week => self.start.plus_days(7 * k)?,
                Sampling::Month => self.start.plus_months(u32::try_from(k).map_err(|_| Error::Overflow)?)?,
            };
            if t > self.horizon {
                return Ok(out);
            }
            out.push(t);
            k += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesRow {
    pub at: Timestamp,
    pub price: FixedDecimal,
    pub total_supply: FixedDecimal,
    pub reserves: FixedDecimal,
    pub omega: FixedDecimal,
    pub lambda: FixedDecimal,
    pub xi_target: FixedDecimal,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimeSeries {
    pub rows: Vec<SeriesRow>,
}

impl TimeSeries {
    pub const CSV_HEADER: &'static str = "timestamp,price,total_supply,reserves,omega,lambda,xi_target";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.rows.len() * 160);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.at, r.price, r.total_supply, r.reserves, r.omega, r.lambda, r.xi_target
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub ledger: Ledger,
    pub series: TimeSeries,
}

/// Uniform-ish helpers over the documented 64-bit generator.
struct Draws(Pcg64);

impl Draws {
    fn chance(&mut self, p: FixedDecimal) -> bool {
        let draw = self.0.next_u64() as u128;
        // floor(p * 2^64), p in [0, 1] at scale 18
        let threshold = (U256::from(p.raw() as u128) << 64) / U256::from(1_000_000_000_000_000_000u128);
        U256::from(draw) < threshold
    }

    fn below(&mut self, n: u64) -> u64 {
        ((self.0.next_u64() as u128 * n as u128) >> 64) as u64
    }

    fn amount(&mut self, min: FixedDecimal, max: FixedDecimal) -> FixedDecimal {
        let hi = self.0.next_u64() as u128;
        let lo = self.0.next_u64() as u128;
        let draw = U256::from((hi << 64) | lo);
        let span = U256::from((max.raw() - min.raw()) as u128 + 1);
        let offset: U256 = (draw * span) >> 128;
        FixedDecimal::from_raw(min.raw() + offset.as_i128())
    }
}

/// Executes `scenario` and returns the final ledger and the sampled series.
/// Every sampled row is checked against the ledger and valuation
/// invariants; a breach is returned as `Error::Invariant`.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let mut draws = match (scenario.agents.is_empty(), scenario.seed) {
        (true, _) => None,
        (false, Some(seed)) => Some(Draws(Pcg64::seed_from_u64(seed))),
        (false, None) => return Err(Error::schema("/seed", "a seed is required when agents are present")),
    };
    let ids: Vec<ParticipantId> = scenario.participants.iter().map(|p| ParticipantId::from_label(p)).collect();
    let id_of = |label: &str| ParticipantId::from_label(label);

    // tick -> (agents act, sample taken)
    let mut ticks: BTreeMap<Timestamp, (bool, bool)> = BTreeMap::new();
    for t in scenario.sample_times()? {
        ticks.entry(t).or_default().1 = true;
    }
    if draws.is_some() {
        let mut k = 0;
        while let Ok(t) = scenario.start.plus_days(k) {
            if t > scenario.horizon {
                break;
            }
            ticks.entry(t).or_default().0 = true;
            k += 1;
        }
    }

    let mut ledger = Ledger::new(scenario.price_function.clone());
    let mut series = TimeSeries::default();
    let mut next_action = 0;
    let apply_until = |ledger: &mut Ledger, next_action: &mut usize, until: Timestamp| -> Result<()> {
        while let Some(a) = scenario.schedule.get(*next_action) {
            if a.at > until {
                break;
            }
            apply(ledger, a, &id_of).map_err(|e| Error::Action {
                index: *next_action,
                source: Box::new(e),
            })?;
            *next_action += 1;
        }
        Ok(())
    };

    for (t, (agent_day, sample)) in ticks {
        apply_until(&mut ledger, &mut next_action, t)?;
        if agent_day {
            let draws = draws.as_mut().expect("agent ticks imply a generator");
            for agent in &scenario.agents {
                act(&mut ledger, draws, agent, &ids, t)?;
            }
        }
        if sample {
            ledger.check_invariants()?;
            let report = valuation_report(&ledger, t)?;
            check_report(&ledger, &report)?;
            series.rows.push(SeriesRow {
                at: t,
                price: report.price,
                total_supply: report.total_supply,
                reserves: report.reserves,
                omega: report.omega,
                lambda: report.lambda,
                xi_target: report.xi_target,
            });
        }
    }
    apply_until(&mut ledger, &mut next_action, scenario.horizon)?;
    ledger.check_invariants()?;
    Ok(RunOutput { ledger, series })
}

fn apply(ledger: &mut Ledger, a: &ScheduledAction, id_of: &impl Fn(&str) -> ParticipantId) -> Result<()> {
    match &a.action {
        Action::Deposit { participant, amount } => ledger.mint(id_of(participant), *amount, a.at).map(|_| ()),
        Action::Burn {
            participant,
            coins,
            activity,
        } => ledger.burn(id_of(participant), *coins, *activity, a.at),
        Action::Transfer { from, to, coins } => ledger.transfer(id_of(from), id_of(to), *coins, a.at),
    }
}

fn act(ledger: &mut Ledger, draws: &mut Draws, agent: &AgentSpec, ids: &[ParticipantId], t: Timestamp) -> Result<()> {
    let me = ParticipantId::from_label(&agent.participant);

    let deposit = draws.chance(agent.deposit_probability);
    let amount = draws.amount(agent.deposit_min, agent.deposit_max);
    if deposit {
        ledger.mint(me, amount, t)?;
    }

    let burn = draws.chance(agent.burn_probability);
    let activity = match (agent.activity, draws.below(2)) {
        (ActivityChoice::Fixed(a), _) => a,
        (ActivityChoice::Mixed, 0) => BurnActivity::Donation,
        (ActivityChoice::Mixed, _) => BurnActivity::WishRedeem,
    };
    if burn {
        let coins = ledger.balance(&me).mul_floor(agent.burn_fraction)?;
        ledger.burn(me, coins, activity, t)?;
    }

    let transfer = draws.chance(agent.transfer_probability);
    let others: Vec<ParticipantId> = ids.iter().copied().filter(|p| *p != me).collect();
    let pick = draws.below(others.len().max(1) as u64) as usize;
    if transfer && !others.is_empty() {
        let coins = ledger.balance(&me).mul_floor(agent.transfer_fraction)?;
        ledger.transfer(me, others[pick], coins, t)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> FixedDecimal {
        s.parse().unwrap()
    }

    #[test]
    fn single_deposit_sampled_at_start() {
        let doc = r#"{"participants":["a"],"horizon":"2023-03-06T00:00:00Z","schedule":[
            {"at":"2023-03-06T00:00:00Z","action":"deposit","participant":"a","amount":"1.0"}]}"#;
        let out = run(&parse_scenario(doc.as_bytes()).unwrap()).unwrap();
        assert_eq!(out.series.rows.len(), 1);
        let row = &out.series.rows[0];
        assert_eq!(row.omega, row.lambda.checked_add(d("1")).unwrap());
        assert_eq!(row.total_supply, d("100000000"));
    }

    #[test]
    fn agents_require_a_seed() {
        let doc = r#"{"participants":["a"],"horizon":"2023-04-01T00:00:00Z",
            "agents":[{"participant":"a","deposit_probability":"1","deposit_min":"1","deposit_max":"1"}]}"#;
        let mut s = parse_scenario(doc.as_bytes()).unwrap();
        assert!(matches!(run(&s), Err(Error::Schema { .. })));
        s.seed = Some(1);
        let out = run(&s).unwrap();
        // deposits every day from 03-06 to 04-01 inclusive
        assert_eq!(out.ledger.reserves(), d("27"));
    }

    #[test]
    fn failing_action_reports_its_index() {
        let doc = r#"{"participants":["a"],"horizon":"2023-04-01T00:00:00Z","schedule":[
            {"at":"2023-03-06T00:00:00Z","action":"deposit","participant":"a","amount":"1"},
            {"at":"2023-03-07T00:00:00Z","action":"burn","participant":"a","coins":"1000000000","activity":"donation"}]}"#;
        match run(&parse_scenario(doc.as_bytes()).unwrap()) {
            Err(Error::Action { index, source }) => {
                assert_eq!(index, 1);
                assert!(matches!(*source, Error::InsufficientBalance { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampling_granularities() {
        let base = r#"{"participants":["a"],"start":"2023-03-06T00:00:00Z","horizon":"2023-06-06T00:00:00Z","sampling":"SAMPLING"}"#;
        let count = |s: &str| {
            let doc = base.replace("SAMPLING", s);
            run(&parse_scenario(doc.as_bytes()).unwrap()).unwrap().series.rows.len()
        };
        assert_eq!(count("day"), 93);
        assert_eq!(count("week"), 14);
        assert_eq!(count("month"), 4);
    }

    #[test]
    fn probability_thresholds_are_exact_at_the_ends() {
        let mut draws = Draws(Pcg64::seed_from_u64(3));
        assert!((0..1000).all(|_| draws.chance(FixedDecimal::ONE)));
        assert!((0..1000).all(|_| !draws.chance(FixedDecimal::ZERO)));
        let x = draws.amount(d("2"), d("2"));
        assert_eq!(x, d("2"));
        let y = draws.amount(d("1"), d("3"));
        assert!(y >= d("1") && y <= d("3"));
    }
}
