//! Locked value, profit and burn target for a two-deposit ledger, before
//! and after the curve end.
//!
//!     cargo run --example valuation_report

use aims::analytics::valuation_report;
use aims::{Ledger, ParticipantId, PriceFunction, ValuationReport};

fn main() -> aims::Result<()> {
    let pf = PriceFunction::wish();
    let mut ledger = Ledger::new(pf.clone());
    let who = ParticipantId::from_label("holder");
    ledger.mint(who, "1.0".parse()?, pf.start())?;
    ledger.mint(who, "1.0".parse()?, pf.day_start(365)?)?;

    println!("{}", ValuationReport::CSV_HEADER);
    for t in [pf.day_start(730)?, pf.end(), pf.end().plus_days(1000)?] {
        println!("{}", valuation_report(&ledger, t)?.csv_row());
    }
    println!("{}", valuation_report(&ledger, pf.day_start(730)?)?.to_json());
    Ok(())
}
