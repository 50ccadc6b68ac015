//! Prints the WISH curve at the first of every year, then the same for a
//! custom exponential curve loaded from JSON.
//!
//!     cargo run --example price_curve

use aims::{PriceFunction, Timestamp};

fn main() -> aims::Result<()> {
    let wish = PriceFunction::wish();
    println!("daily ratio {}", wish.daily_ratio().unwrap());
    println!("days to plateau {}", wish.horizon_days());
    for year in 2023..=2034 {
        let t = Timestamp::from_ymd(year, 3, 6)?;
        println!("{t}  {}", wish.price_at(t)?);
    }

    let doubling = PriceFunction::from_json(
        r#"{"type":"exp","initial_price":"1","base":"2","start":"2025-01-01","end":"2028-01-01"}"#,
    )?;
    let mid = Timestamp::from_ymd(2026, 7, 1)?;
    println!("doubling curve on {mid}: {}", doubling.price_at(mid)?);
    Ok(())
}
