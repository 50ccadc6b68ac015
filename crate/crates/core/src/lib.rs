//! Deterministic ledger for a token whose price is a fixed, increasing
//! function of time.
//!
//! * [`pricing`]: the price function, evaluated in exact fixed-point
//!   arithmetic as a daily step curve that freezes at its end date.
//! * [`ledger`]: mint / burn / transfer over per-deposit lots, an append-only
//!   hash-linked event log, deterministic replay and a state digest.
//! * [`analytics`]: locked value, unrealized profit and burn target at any
//!   evaluation time, globally and per participant.
//! * [`scenario`]: declarative deposit / burn / transfer schedules and
//!   seeded stochastic agents, producing sampled time series.
//! * [`oracle`]: an independent arbitrary-precision reference used to
//!   check the fixed-point engine.
//! * [`cli`]: the `aims` command-line surface.
//!
//! No binary floating point is used anywhere on the ledger path.

pub mod analytics;
pub mod cli;
pub mod decimal;
pub mod error;
pub mod ledger;
pub mod oracle;
pub mod pricing;
pub mod scenario;
pub mod time;

pub use analytics::{ValuationReport, ParticipantValuation};
pub use decimal::FixedDecimal;
pub use error::{Error, Result};
pub use ledger::{BurnActivity, Event, EventKind, Ledger, Lot, ParticipantId};
pub use pricing::{PriceConfig, PriceFunction};
pub use scenario::{Scenario, TimeSeries};
pub use time::Timestamp;
