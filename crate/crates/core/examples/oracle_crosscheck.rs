//! Compares the engine with the big-rational reference on a few prices and
//! on a small ledger.
//!
//!     cargo run --example oracle_crosscheck

use aims::analytics::valuation_report;
use aims::oracle::{from_fixed, oracle_price, oracle_valuation, relative_error};
use aims::{Ledger, ParticipantId, PriceFunction};
use num_traits::ToPrimitive;

fn main() -> aims::Result<()> {
    let pf = PriceFunction::wish();
    for day in [0, 1, 365, 730, 1825, 3609] {
        let t = pf.day_start(day)?;
        let engine = pf.price_at(t)?;
        let exact = oracle_price(&pf, t)?;
        let err = relative_error(&from_fixed(engine), &exact).to_f64().unwrap();
        println!("day {day:>4}  {engine}  relative error {err:.3e}");
    }

    let mut ledger = Ledger::new(pf.clone());
    let (x, y) = (ParticipantId::from_label("x"), ParticipantId::from_label("y"));
    ledger.mint(x, "3.3".parse()?, pf.day_start(10)?)?;
    ledger.mint(y, "0.7".parse()?, pf.day_start(500)?)?;
    ledger.transfer(x, y, "100000000".parse()?, pf.day_start(600)?)?;
    let t_m = pf.day_start(900)?;
    let engine = valuation_report(&ledger, t_m)?;
    let exact = oracle_valuation(&pf, ledger.events(), t_m)?;
    println!("omega  engine {}  oracle {:.18}", engine.omega, exact.omega.to_f64().unwrap());
    println!("lambda engine {}  oracle {:.18}", engine.lambda, exact.lambda.to_f64().unwrap());
    println!("xi     engine {}  deposits {}", engine.xi_target, engine.total_deposits);
    Ok(())
}
