//! Event-sourced token ledger.
//!
//! Deposits mint coins at the current price and are recorded as lots. Each
//! lot remembers when it was minted, the price paid and how many of its coins
//! are still in circulation. Burns and transfers consume an owner's lots
//! oldest first (by mint time, then lot id). A transferred slice becomes a
//! new lot for the receiver that keeps the original mint time and price.
//!
//! A lot's `deposited` amount is the cost basis of its remaining coins:
//! `floor(origin_deposit * coins_remaining / origin_coins)`, where the origin
//! values belong to the mint that created the coins. It equals the full
//! deposit while the lot is intact and zero once it is spent.
//!
//! Every successful operation appends exactly one [`Event`]; a failed
//! operation leaves the ledger untouched.

mod event;
mod log;

use std::collections::{BTreeMap, VecDeque};

use serde_json::{json, Map, Value};

pub use event::{BurnActivity, Digest, Event, EventKind, ParticipantId};
pub use log::{read_jsonl, replay, write_jsonl};

use crate::decimal::FixedDecimal;
use crate::error::{Error, Result};
use crate::pricing::PriceFunction;
use crate::time::Timestamp;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lot {
    pub id: u64,
    pub owner: ParticipantId,
    pub minted_at: Timestamp,
    pub mint_price: FixedDecimal,
    pub deposited: FixedDecimal,
    pub coins_remaining: FixedDecimal,
    pub origin_deposit: FixedDecimal,
    pub origin_coins: FixedDecimal,
}

impl Lot {
    fn cost_basis_for(&self, coins: FixedDecimal) -> Result<FixedDecimal> {
        if coins == self.origin_coins {
            Ok(self.origin_deposit)
        } else if coins.is_zero() {
            Ok(FixedDecimal::ZERO)
        } else {
            self.origin_deposit.mul_div_floor(coins, self.origin_coins)
        }
    }

    /// Still holds coins.
    pub fn is_live(&self) -> bool {
        self.coins_remaining.is_positive()
    }
}

/// Portion of one lot taken by a burn or transfer.
struct Slice {
    lot: usize,
    coins: FixedDecimal,
}

#[derive(Clone, Debug)]
pub struct Ledger {
    price_function: PriceFunction,
    lots: Vec<Lot>,
    // Indices of each owner's live lots, oldest first.
    queues: BTreeMap<ParticipantId, VecDeque<usize>>,
    balances: BTreeMap<ParticipantId, FixedDecimal>,
    total_supply: FixedDecimal,
    reserves: FixedDecimal,
    log: Vec<Event>,
    link: Digest,
}

impl Ledger {
    pub fn new(price_function: PriceFunction) -> Self {
        Ledger {
            price_function,
            lots: Vec::new(),
            queues: BTreeMap::new(),
            balances: BTreeMap::new(),
            total_supply: FixedDecimal::ZERO,
            reserves: FixedDecimal::ZERO,
            log: Vec::new(),
            link: Digest::default(),
        }
    }

    pub fn price_function(&self) -> &PriceFunction {
        &self.price_function
    }

    pub fn lots(&self) -> &[Lot] {
        &self.lots
    }

    pub fn live_lots(&self) -> impl Iterator<Item = &Lot> {
        self.lots.iter().filter(|l| l.is_live())
    }

    /// Lots of `owner` that still hold coins, oldest first.
    pub fn lots_of(&self, owner: &ParticipantId) -> Vec<&Lot> {
        self.queues
            .get(owner)
            .map(|q| q.iter().map(|&i| &self.lots[i]).collect())
            .unwrap_or_default()
    }

    pub fn balance(&self, owner: &ParticipantId) -> FixedDecimal {
        self.balances.get(owner).copied().unwrap_or_default()
    }

    pub fn balances(&self) -> &BTreeMap<ParticipantId, FixedDecimal> {
        &self.balances
    }

    pub fn total_supply(&self) -> FixedDecimal {
        self.total_supply
    }

    /// Sum of every deposit ever made. Burns do not pay anything out.
    pub fn reserves(&self) -> FixedDecimal {
        self.reserves
    }

    /// Cost basis of the coins still in circulation.
    pub fn remaining_deposits(&self) -> Result<FixedDecimal> {
        self.live_lots()
            .try_fold(FixedDecimal::ZERO, |acc, l| acc.checked_add(l.deposited))
    }

    pub fn events(&self) -> &[Event] {
        &self.log
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.log.last().map(|e| e.seq)
    }

    pub fn last_time(&self) -> Option<Timestamp> {
        self.log.last().map(|e| e.at)
    }

    /// Link of the newest event (all zeros for an empty log).
    pub fn head_link(&self) -> Digest {
        self.link
    }

    fn check_time(&self, at: Timestamp) -> Result<()> {
        let start = self.price_function.start();
        if at < start {
            return Err(Error::TimeBeforeStart { at, start });
        }
        if let Some(last) = self.last_time() {
            if at < last {
                return Err(Error::NonMonotoneTimestamp { at, last });
            }
        }
        Ok(())
    }

    fn check_amount(&self, owner: &ParticipantId, coins: FixedDecimal) -> Result<()> {
        if coins.is_negative() {
            return Err(Error::NegativeAmount(coins));
        }
        let available = self.balance(owner);
        if coins > available {
            return Err(Error::InsufficientBalance {
                requested: coins,
                available,
            });
        }
        Ok(())
    }

    /// Deposits `deposit` stablecoin units for `owner` and returns the coins
    /// minted: `floor(deposit / price_at(at))` at scale 18.
    pub fn mint(
        &mut self,
        owner: ParticipantId,
        deposit: FixedDecimal,
        at: Timestamp,
    ) -> Result<FixedDecimal> {
        if deposit.is_negative() {
            return Err(Error::NegativeDeposit(deposit));
        }
        self.check_time(at)?;
        let price = self.price_function.price_at(at)?;
        let coins = deposit.div_floor(price)?;
        let balance = self.balance(&owner).checked_add(coins)?;
        let supply = self.total_supply.checked_add(coins)?;
        let reserves = self.reserves.checked_add(deposit)?;

        let id = self.lots.len();
        self.lots.push(Lot {
            id: id as u64,
            owner,
            minted_at: at,
            mint_price: price,
            deposited: deposit,
            coins_remaining: coins,
            origin_deposit: deposit,
            origin_coins: coins,
        });
        if coins.is_positive() {
            self.queues.entry(owner).or_default().push_back(id);
        }
        self.balances.insert(owner, balance);
        self.total_supply = supply;
        self.reserves = reserves;
        self.append(
            at,
            EventKind::Mint {
                owner,
                deposit,
                price,
                coins,
            },
        );
        Ok(coins)
    }

    /// Destroys `coins` of `owner`'s coins, oldest lots first.
    pub fn burn(
        &mut self,
        owner: ParticipantId,
        coins: FixedDecimal,
        activity: BurnActivity,
        at: Timestamp,
    ) -> Result<()> {
        self.check_time(at)?;
        self.check_amount(&owner, coins)?;
        let slices = self.fifo_slices(&owner, coins)?;
        for s in &slices {
            self.shrink_lot(s)?;
        }
        self.drop_spent(&owner);
        let balance = self.balance(&owner).checked_sub(coins)?;
        self.balances.insert(owner, balance);
        self.total_supply = self.total_supply.checked_sub(coins)?;
        self.append(
            at,
            EventKind::Burn {
                owner,
                coins,
                activity,
            },
        );
        Ok(())
    }

    /// Moves `coins` from `from` to `to`. The receiver gets new lots carrying
    /// the mint time, mint price and proportional cost basis of the coins.
    pub fn transfer(
        &mut self,
        from: ParticipantId,
        to: ParticipantId,
        coins: FixedDecimal,
        at: Timestamp,
    ) -> Result<()> {
        self.check_time(at)?;
        self.check_amount(&from, coins)?;
        if from != to {
            let slices = self.fifo_slices(&from, coins)?;
            for s in &slices {
                let origin = self.lots[s.lot].clone();
                self.shrink_lot(s)?;
                let id = self.lots.len();
                let mut piece = Lot {
                    id: id as u64,
                    owner: to,
                    coins_remaining: s.coins,
                    ..origin
                };
                piece.deposited = piece.cost_basis_for(s.coins)?;
                let key = (piece.minted_at, piece.id);
                self.lots.push(piece);
                let queue = self.queues.entry(to).or_default();
                let lots = &self.lots;
                let pos = queue.partition_point(|&i| (lots[i].minted_at, lots[i].id) < key);
                queue.insert(pos, id);
            }
            self.drop_spent(&from);
            let from_balance = self.balance(&from).checked_sub(coins)?;
            let to_balance = self.balance(&to).checked_add(coins)?;
            self.balances.insert(from, from_balance);
            self.balances.insert(to, to_balance);
        }
        self.append(at, EventKind::Transfer { from, to, coins });
        Ok(())
    }

    fn fifo_slices(&self, owner: &ParticipantId, coins: FixedDecimal) -> Result<Vec<Slice>> {
        let mut left = coins;
        let mut slices = Vec::new();
        if let Some(queue) = self.queues.get(owner) {
            for &i in queue {
                if left.is_zero() {
                    break;
                }
                let take = left.min(self.lots[i].coins_remaining);
                slices.push(Slice { lot: i, coins: take });
                left = left.checked_sub(take)?;
            }
        }
        if left.is_positive() {
            return Err(Error::Invariant {
                invariant: "supply conservation",
                detail: "balance exceeds the coins held in lots".into(),
            });
        }
        Ok(slices)
    }

    fn shrink_lot(&mut self, slice: &Slice) -> Result<()> {
        let lot = &mut self.lots[slice.lot];
        let left = lot.coins_remaining.checked_sub(slice.coins)?;
        lot.deposited = lot.cost_basis_for(left)?;
        lot.coins_remaining = left;
        Ok(())
    }

    fn drop_spent(&mut self, owner: &ParticipantId) {
        if let Some(queue) = self.queues.get_mut(owner) {
            while queue.front().is_some_and(|&i| !self.lots[i].is_live()) {
                queue.pop_front();
            }
        }
    }

    fn append(&mut self, at: Timestamp, kind: EventKind) {
        let mut event = Event {
            seq: self.log.len() as u64,
            at,
            kind,
            supply: self.total_supply,
            link: Digest::default(),
        };
        event.link = event.expected_link(&self.link);
        self.link = event.link;
        self.log.push(event);
    }

    /// Canonical JSON used for the state digest: keys sorted, decimals as
    /// scale-18 strings, timestamps in canonical RFC 3339 form.
    pub fn canonical_state(&self) -> String {
        let lots: Vec<Value> = self
            .lots
            .iter()
            .map(|l| {
                json!({
                    "coins_remaining": l.coins_remaining,
                    "deposited": l.deposited,
                    "id": l.id,
                    "mint_price": l.mint_price,
                    "minted_at": l.minted_at,
                    "owner": l.owner,
                })
            })
            .collect();
        let balances: Map<String, Value> = self
            .balances
            .iter()
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        json!({
            "balances": balances,
            "last_seq": self.last_seq(),
            "lots": lots,
            "reserves": self.reserves,
            "total_supply": self.total_supply,
        })
        .to_string()
    }

    /// SHA-256 of [`Ledger::canonical_state`].
    pub fn state_digest(&self) -> Digest {
        Digest::of(self.canonical_state().as_bytes())
    }

    /// Checks the structural invariants of the current state.
    pub fn check_invariants(&self) -> Result<()> {
        let violation = |invariant: &'static str, detail: String| {
            Err(Error::Invariant { invariant, detail })
        };
        let mut in_lots = FixedDecimal::ZERO;
        let mut basis = FixedDecimal::ZERO;
        let mut per_owner: BTreeMap<ParticipantId, FixedDecimal> = BTreeMap::new();
        for lot in &self.lots {
            if lot.coins_remaining.is_negative() || lot.coins_remaining > lot.origin_coins {
                return violation("lot bounds", format!("lot {} coin count out of range", lot.id));
            }
            if lot.deposited > lot.origin_deposit || lot.deposited.is_negative() {
                return violation("lot bounds", format!("lot {} cost basis out of range", lot.id));
            }
            // coins * price <= deposited, up to the one-unit split rounding
            let cost = lot.coins_remaining.mul_floor(lot.mint_price)?;
            if cost > lot.deposited.checked_add(FixedDecimal::EPSILON)? {
                return violation("lot bounds", format!("lot {} holds more coins than paid for", lot.id));
            }
            in_lots = in_lots.checked_add(lot.coins_remaining)?;
            basis = basis.checked_add(lot.deposited)?;
            let e = per_owner.entry(lot.owner).or_default();
            *e = e.checked_add(lot.coins_remaining)?;
        }
        let mut in_balances = FixedDecimal::ZERO;
        for (owner, bal) in &self.balances {
            if bal.is_negative() {
                return violation("supply conservation", format!("negative balance for {owner}"));
            }
            if per_owner.get(owner).copied().unwrap_or_default() != *bal {
                return violation("supply conservation", format!("balance of {owner} differs from its lots"));
            }
            in_balances = in_balances.checked_add(*bal)?;
        }
        if in_lots != self.total_supply || in_balances != self.total_supply {
            return violation(
                "supply conservation",
                format!(
                    "total supply {} vs balances {} vs lots {}",
                    self.total_supply, in_balances, in_lots
                ),
            );
        }
        if basis > self.reserves {
            return violation("cost basis", format!("cost basis {basis} exceeds reserves {}", self.reserves));
        }
        Ok(())
    }
}
