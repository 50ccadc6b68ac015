use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use crate::decimal::FixedDecimal;
use crate::error::{Error, Result};
use crate::time::Timestamp;

/// Opaque 32-byte participant identifier, rendered as 64 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParticipantId([u8; 32]);

impl ParticipantId {
    pub const fn from_bytes(bytes: [u8; 32]) -> Self {
        ParticipantId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Deterministic id for a human-readable label: SHA-256 of its UTF-8 bytes.
    pub fn from_label(label: &str) -> Self {
        ParticipantId(Sha256::digest(label.as_bytes()).into())
    }
}

impl FromStr for ParticipantId {
    type Err = Error;

    /// Accepts exactly 64 lowercase hex digits.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if s.len() != 64 || !lower {
            return Err(Error::InvalidParticipant(s.to_string()));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| Error::InvalidParticipant(s.to_string()))?;
        Ok(ParticipantId(out))
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParticipantId({})", &hex::encode(self.0)[..12])
    }
}

/// SHA-256 output, rendered as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(bytes: &[u8]) -> Self {
        Digest(Sha256::digest(bytes).into())
    }
}

impl FromStr for Digest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParticipantId::from_str(s)
            .map(|p| Digest(p.0))
            .map_err(|_| Error::InvalidDigest(s.to_string()))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

macro_rules! hex_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_serde!(ParticipantId);
hex_serde!(Digest);

/// Activities that destroy coins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurnActivity {
    Donation,
    WishRedeem,
}

/// What happened. Mint events also record the price applied and the coins
/// created so that a replay can confirm them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Mint {
        owner: ParticipantId,
        deposit: FixedDecimal,
        price: FixedDecimal,
        coins: FixedDecimal,
    },
    Burn {
        owner: ParticipantId,
        coins: FixedDecimal,
        activity: BurnActivity,
    },
    Transfer {
        from: ParticipantId,
        to: ParticipantId,
        coins: FixedDecimal,
    },
}

/// One line of the event log.
///
/// `supply` is the total supply after the event. `link` chains the log:
/// `link_n = SHA-256(link_{n-1} || body_n)` where `body_n` is the compact
/// JSON of the event without its `link` field and `link_{-1}` is 32 zero
/// bytes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: Timestamp,
    #[serde(flatten)]
    pub kind: EventKind,
    pub supply: FixedDecimal,
    pub link: Digest,
}

#[derive(Serialize)]
struct EventBody<'a> {
    seq: u64,
    at: Timestamp,
    #[serde(flatten)]
    kind: &'a EventKind,
    supply: FixedDecimal,
}

impl Event {
    /// Link value this event must carry given the previous link.
    pub fn expected_link(&self, previous: &Digest) -> Digest {
        let body = serde_json::to_vec(&EventBody {
            seq: self.seq,
            at: self.at,
            kind: &self.kind,
            supply: self.supply,
        })
        .expect("event body serializes");
        let mut h = Sha256::new();
        h.update(previous.0);
        h.update(&body);
        Digest(h.finalize().into())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }

    /// Parses one log line, rejecting anything that is not the canonical
    /// rendering of the event it decodes to.
    pub fn from_json_line(line: &str, expected_seq: u64) -> Result<Event> {
        let event: Event = serde_json::from_str(line)
            .map_err(|e| Error::malformed(expected_seq, e.to_string()))?;
        if event.to_json_line() != line {
            return Err(Error::malformed(expected_seq, "non-canonical event encoding"));
        }
        Ok(event)
    }
}
