//! Writes an event log, replays it, then shows what a one-character edit
//! does to the replay.
//!
//!     cargo run --example replay_and_verify

use aims::ledger::{read_jsonl, replay, write_jsonl};
use aims::{BurnActivity, Ledger, ParticipantId, PriceFunction};

fn main() -> aims::Result<()> {
    let pf = PriceFunction::wish();
    let a = ParticipantId::from_label("a");
    let b = ParticipantId::from_label("b");
    let mut live = Ledger::new(pf.clone());
    live.mint(a, "12.5".parse()?, pf.day_start(3)?)?;
    live.transfer(a, b, "400000000".parse()?, pf.day_start(9)?)?;
    live.burn(b, "100000000".parse()?, BurnActivity::WishRedeem, pf.day_start(20)?)?;

    let mut log = Vec::new();
    write_jsonl(live.events(), &mut log).expect("in-memory write");
    print!("{}", String::from_utf8_lossy(&log));

    let rebuilt = replay(&read_jsonl(&log[..])?, &pf)?;
    println!("live digest   {}", live.state_digest());
    println!("replay digest {}", rebuilt.state_digest());

    let text = String::from_utf8(log).unwrap().replacen("\"deposit\":\"12.5", "\"deposit\":\"13.5", 1);
    match replay(&read_jsonl(text.as_bytes())?, &pf) {
        Err(e) => println!("edited log: {} ({e})", e.kind()),
        Ok(_) => println!("edited log replayed?"),
    }
    Ok(())
}
