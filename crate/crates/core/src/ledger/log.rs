use std::io::{self, BufRead, Write};

use super::{Event, EventKind, Ledger};
use crate::error::{Error, Result};
use crate::pricing::PriceFunction;

/// Writes one canonical JSON event per line.
pub fn write_jsonl<W: Write>(events: &[Event], mut out: W) -> io::Result<()> {
    for e in events {
        out.write_all(e.to_json_line().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads a JSON Lines event log. Every line, including the last, must be
/// newline-terminated and canonically encoded; the first bad line is reported
/// as `MalformedLog` with its zero-based line index as the seq. A log cut
/// short inside its last line is flagged `truncated`.
pub fn read_jsonl<R: BufRead>(mut input: R) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let seq = events.len() as u64;
        let n = input
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::malformed(seq, e.to_string()))?;
        if n == 0 {
            return Ok(events);
        }
        let terminated = buf.last() == Some(&b'\n');
        if terminated {
            buf.pop();
        }
        let line = std::str::from_utf8(&buf).map_err(|_| Error::malformed(seq, "invalid UTF-8"))?;
        if !terminated {
            return Err(unterminated(line, seq));
        }
        events.push(Event::from_json_line(line, seq)?);
    }
}

// A last line without its newline is a truncation when what remains is a
// prefix of a JSON document or a complete event; anything else is damage.
fn unterminated(line: &str, seq: u64) -> Error {
    match serde_json::from_str::<Event>(line) {
        Err(e) if e.is_eof() => Error::truncated(seq),
        Ok(event) if event.to_json_line() == line => Error::truncated(seq),
        _ => Error::malformed(seq, "missing line terminator"),
    }
}

/// Rebuilds the ledger from its log.
///
/// Structural problems (seq gaps, time regressions, operations the ledger
/// rejects) are `MalformedLog` at the offending position. Events whose
/// recorded results disagree with the recomputation are invariant
/// violations: `price determinism`, `supply conservation`, `log integrity`.
pub fn replay(log: &[Event], price_function: &PriceFunction) -> Result<Ledger> {
    let mut ledger = Ledger::new(price_function.clone());
    for (i, recorded) in log.iter().enumerate() {
        let seq = i as u64;
        if recorded.seq != seq {
            return Err(Error::malformed(seq, format!("expected seq {seq}, found {}", recorded.seq)));
        }
        if let Some(last) = ledger.last_time() {
            if recorded.at < last {
                return Err(Error::malformed(seq, format!("timestamp {} precedes {last}", recorded.at)));
            }
        }
        let applied = match &recorded.kind {
            EventKind::Mint { owner, deposit, .. } => {
                ledger.mint(*owner, *deposit, recorded.at).map(|_| ())
            }
            EventKind::Burn {
                owner,
                coins,
                activity,
            } => ledger.burn(*owner, *coins, *activity, recorded.at),
            EventKind::Transfer { from, to, coins } => {
                ledger.transfer(*from, *to, *coins, recorded.at)
            }
        };
        applied.map_err(|e| Error::malformed(seq, e.to_string()))?;
        let produced = ledger.events().last().expect("event appended");
        check_recorded(recorded, produced)?;
    }
    Ok(ledger)
}

fn check_recorded(recorded: &Event, produced: &Event) -> Result<()> {
    let violation = |invariant: &'static str, what: &str| {
        Err(Error::Invariant {
            invariant,
            detail: format!("seq {}: recorded {what} does not match replay", recorded.seq),
        })
    };
    if let (
        EventKind::Mint { price: p1, coins: c1, .. },
        EventKind::Mint { price: p2, coins: c2, .. },
    ) = (&recorded.kind, &produced.kind)
    {
        if p1 != p2 {
            return violation("price determinism", "mint price");
        }
        if c1 != c2 {
            return violation("supply conservation", "minted coins");
        }
    }
    if recorded.supply != produced.supply {
        return violation("supply conservation", "total supply");
    }
    if recorded.link != produced.link {
        return violation("log integrity", "link");
    }
    debug_assert_eq!(recorded, produced);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::FixedDecimal;
    use crate::ledger::{BurnActivity, ParticipantId};
    use crate::time::Timestamp;

    fn d(s: &str) -> FixedDecimal {
        s.parse().unwrap()
    }

    fn session() -> Ledger {
        let pf = PriceFunction::wish();
        let t = pf.start();
        let (a, b) = (ParticipantId::from_label("a"), ParticipantId::from_label("b"));
        let mut l = Ledger::new(pf);
        l.mint(a, d("10"), t).unwrap();
        l.mint(b, d("3.5"), t.plus_days(30).unwrap()).unwrap();
        l.transfer(a, b, d("123456.789"), t.plus_days(31).unwrap()).unwrap();
        l.burn(b, d("1000"), BurnActivity::Donation, t.plus_days(40).unwrap()).unwrap();
        l
    }

    #[test]
    fn empty_log_is_genesis() {
        let l = replay(&[], &PriceFunction::wish()).unwrap();
        assert_eq!(l.total_supply(), FixedDecimal::ZERO);
        assert_eq!(l.reserves(), FixedDecimal::ZERO);
        assert_eq!(l.state_digest(), Ledger::new(PriceFunction::wish()).state_digest());
    }

    #[test]
    fn replay_matches_live_session() {
        let live = session();
        let mut bytes = Vec::new();
        write_jsonl(live.events(), &mut bytes).unwrap();
        let events = read_jsonl(&bytes[..]).unwrap();
        let replayed = replay(&events, live.price_function()).unwrap();
        assert_eq!(replayed.state_digest(), live.state_digest());
        assert_eq!(replayed.head_link(), live.head_link());
    }

    #[test]
    fn time_regression_is_malformed_at_that_seq() {
        let mut events = session().events().to_vec();
        events[2].at = Timestamp::from_secs(events[1].at.secs() - 1).unwrap();
        let r = replay(&events, &PriceFunction::wish());
        assert!(matches!(r, Err(Error::MalformedLog { seq: 2, .. })), "{r:?}");
    }

    #[test]
    fn seq_gap_is_malformed() {
        let mut events = session().events().to_vec();
        events.remove(1);
        assert!(matches!(
            replay(&events, &PriceFunction::wish()),
            Err(Error::MalformedLog { seq: 1, .. })
        ));
    }

    #[test]
    fn edited_deposit_breaks_supply_conservation() {
        let mut events = session().events().to_vec();
        if let EventKind::Mint { deposit, .. } = &mut events[1].kind {
            *deposit = d("3.6");
        }
        match replay(&events, &PriceFunction::wish()) {
            Err(Error::Invariant { invariant, .. }) => assert_eq!(invariant, "supply conservation"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn edited_transfer_breaks_the_link_chain() {
        let mut events = session().events().to_vec();
        if let EventKind::Transfer { coins, .. } = &mut events[2].kind {
            *coins = d("123456.788");
        }
        match replay(&events, &PriceFunction::wish()) {
            Err(Error::Invariant { invariant, .. }) => assert_eq!(invariant, "log integrity"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_lines_are_rejected() {
        let mut bytes = Vec::new();
        write_jsonl(session().events(), &mut bytes).unwrap();
        let cut = &bytes[..bytes.len() - 10];
        assert!(matches!(
            read_jsonl(cut),
            Err(Error::MalformedLog { seq: 3, truncated: true, .. })
        ));
        let no_newline = &bytes[..bytes.len() - 1];
        assert!(matches!(
            read_jsonl(no_newline),
            Err(Error::MalformedLog { seq: 3, truncated: true, .. })
        ));
    }

    #[test]
    fn overwritten_terminator_is_not_truncation() {
        let mut bytes = Vec::new();
        write_jsonl(session().events(), &mut bytes).unwrap();
        for b in [b' ', b'x', b'}', b'\r'] {
            let mut m = bytes.clone();
            *m.last_mut().unwrap() = b;
            assert!(
                matches!(read_jsonl(&m[..]), Err(Error::MalformedLog { truncated: false, .. })),
                "{b}"
            );
        }
    }
}
