//! Mints, burns and transfers on a WISH ledger and shows how lots are
//! consumed oldest first.
//!
//!     cargo run --example ledger_session

use aims::{BurnActivity, FixedDecimal, Ledger, ParticipantId, PriceFunction};

fn main() -> aims::Result<()> {
    let pf = PriceFunction::wish();
    let alice = ParticipantId::from_label("alice");
    let bob = ParticipantId::from_label("bob");
    let mut ledger = Ledger::new(pf.clone());

    let d = |s: &str| s.parse::<FixedDecimal>().unwrap();
    let minted = ledger.mint(alice, d("1.0"), pf.start())?;
    println!("1.0 at launch buys {minted} coins");
    ledger.mint(alice, d("1.0"), pf.day_start(365)?)?;

    // Takes the whole first lot and part of the second.
    ledger.burn(alice, d("110000000"), BurnActivity::Donation, pf.day_start(400)?)?;
    ledger.transfer(alice, bob, d("5000000"), pf.day_start(401)?)?;

    for lot in ledger.lots() {
        println!(
            "lot {} owner {}.. minted {} at {}: {} coins left, basis {}",
            lot.id,
            &lot.owner.to_string()[..8],
            lot.minted_at,
            lot.mint_price,
            lot.coins_remaining,
            lot.deposited
        );
    }
    println!("supply {}  reserves {}", ledger.total_supply(), ledger.reserves());
    ledger.check_invariants()?;
    Ok(())
}
