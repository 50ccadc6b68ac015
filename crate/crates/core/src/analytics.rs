//! Valuation of the coins still in circulation at an evaluation time `t_m`.
//!
//! Over the live lots (coins `c`, mint price `p`) with `P = price_at(t_m)`:
//!
//! * net profit      `lambda    = floor(sum c * (P - p))`
//! * burn target     `xi_target = ceil(sum c * p)`
//! * locked value    `omega     = lambda + xi_target`
//!
//! Sums are exact (scale 36) and rounded once. `omega - lambda == xi_target`
//! holds exactly, `omega > lambda` whenever any coins remain, and `omega` is
//! within one 1e-18 unit of the exact `sum c * P`. `xi_target` is within one
//! unit per live lot of the remaining cost basis.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::decimal::{FixedDecimal, ProductSum};
use crate::error::Result;
use crate::ledger::{Ledger, Lot, ParticipantId};
use crate::time::Timestamp;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParticipantValuation {
    pub omega: FixedDecimal,
    pub lambda: FixedDecimal,
    pub xi_target: FixedDecimal,
    pub deposits: FixedDecimal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValuationReport {
    pub at: Timestamp,
    pub price: FixedDecimal,
    pub omega: FixedDecimal,
    pub lambda: FixedDecimal,
    pub xi_target: FixedDecimal,
    /// Cost basis of the live lots.
    pub total_deposits: FixedDecimal,
    pub total_supply: FixedDecimal,
    pub reserves: FixedDecimal,
    /// Set when some live lot was minted after `at`; its profit term is then
    /// negative.
    pub lots_after_evaluation: bool,
    pub per_participant: BTreeMap<ParticipantId, ParticipantValuation>,
}

impl ValuationReport {
    pub const CSV_HEADER: &'static str = "t_m,omega,lambda,xi_target,total_supply,reserves,price";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.at,
            self.omega,
            self.lambda,
            self.xi_target,
            self.total_supply,
            self.reserves,
            self.price
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Default)]
struct Sums {
    profit: ProductSum,
    cost: ProductSum,
    deposits: FixedDecimal,
}

impl Sums {
    fn add(&mut self, lot: &Lot, price: FixedDecimal) -> Result<()> {
        self.profit
            .add_product(lot.coins_remaining, price.checked_sub(lot.mint_price)?)?;
        self.cost.add_product(lot.coins_remaining, lot.mint_price)?;
        self.deposits = self.deposits.checked_add(lot.deposited)?;
        Ok(())
    }

    fn finish(&self) -> Result<ParticipantValuation> {
        let lambda = self.profit.floor()?;
        let xi_target = self.cost.ceil()?;
        Ok(ParticipantValuation {
            omega: lambda.checked_add(xi_target)?,
            lambda,
            xi_target,
            deposits: self.deposits,
        })
    }
}

fn global(ledger: &Ledger, t_m: Timestamp) -> Result<ParticipantValuation> {
    let price = ledger.price_function().price_at(t_m)?;
    let mut sums = Sums::default();
    for lot in ledger.live_lots() {
        sums.add(lot, price)?;
    }
    sums.finish()
}

/// Locked value: remaining coins valued at `price_at(t_m)`.
pub fn total_locked_value(ledger: &Ledger, t_m: Timestamp) -> Result<FixedDecimal> {
    Ok(global(ledger, t_m)?.omega)
}

/// Unrealized gain of the remaining coins over their mint prices.
pub fn net_profit(ledger: &Ledger, t_m: Timestamp) -> Result<FixedDecimal> {
    Ok(global(ledger, t_m)?.lambda)
}

/// `omega - lambda`: the mint-price value of the remaining coins, i.e. what
/// burn activities must destroy to bring locked value back to invested value.
pub fn burn_target(ledger: &Ledger, t_m: Timestamp) -> Result<FixedDecimal> {
    Ok(global(ledger, t_m)?.xi_target)
}

pub fn valuation_report(ledger: &Ledger, t_m: Timestamp) -> Result<ValuationReport> {
    let price = ledger.price_function().price_at(t_m)?;
    let mut total = Sums::default();
    let mut by_owner: BTreeMap<ParticipantId, Sums> = BTreeMap::new();
    let mut lots_after_evaluation = false;
    for lot in ledger.live_lots() {
        total.add(lot, price)?;
        by_owner.entry(lot.owner).or_default().add(lot, price)?;
        lots_after_evaluation |= lot.minted_at > t_m;
    }
    let g = total.finish()?;
    let per_participant = by_owner
        .iter()
        .map(|(id, s)| Ok((*id, s.finish()?)))
        .collect::<Result<_>>()?;
    Ok(ValuationReport {
        at: t_m,
        price,
        omega: g.omega,
        lambda: g.lambda,
        xi_target: g.xi_target,
        total_deposits: g.deposits,
        total_supply: ledger.total_supply(),
        reserves: ledger.reserves(),
        lots_after_evaluation,
        per_participant,
    })
}

/// Checks the valuation identities on `report` against `ledger`, allowing
/// the accounting tolerance of one 1e-18 unit per live lot or 1e-12
/// relative, whichever is larger.
pub fn check_report(ledger: &Ledger, report: &ValuationReport) -> Result<()> {
    use crate::error::Error;
    let fail = |invariant: &'static str, detail: String| Err(Error::Invariant { invariant, detail });
    if report.omega.checked_sub(report.lambda)? != report.xi_target {
        return fail("valuation identity", "omega - lambda != xi_target".into());
    }
    let live = ledger.live_lots().count();
    let gap = report.xi_target.checked_sub(report.total_deposits)?;
    if !within_tolerance(gap, report.total_deposits, live) {
        return fail(
            "valuation identity",
            format!(
                "burn target {} differs from remaining deposits {}",
                report.xi_target, report.total_deposits
            ),
        );
    }
    if live > 0 && report.omega <= report.lambda {
        return fail("locked value exceeds profit", "omega <= lambda with coins remaining".into());
    }
    if !report.lots_after_evaluation && report.lambda.is_negative() {
        return fail("non-negative profit", format!("lambda = {}", report.lambda));
    }
    if report.omega.is_negative() {
        return fail("non-negative locked value", format!("omega = {}", report.omega));
    }
    Ok(())
}

/// `|diff| <= max(1e-12 * |reference|, units * 1e-18)`.
pub fn within_tolerance(diff: FixedDecimal, reference: FixedDecimal, units: usize) -> bool {
    let diff = diff.raw().unsigned_abs();
    let relative = reference.raw().unsigned_abs() / 1_000_000_000_000;
    diff <= relative.max(units as u128)
}
