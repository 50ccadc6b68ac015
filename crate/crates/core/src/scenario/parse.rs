use std::collections::BTreeSet;

use serde_json::{Map, Value};

use super::{Action, ActivityChoice, AgentSpec, Sampling, Scenario, ScheduledAction};
use crate::decimal::FixedDecimal;
use crate::error::{Error, Result};
use crate::ledger::BurnActivity;
use crate::pricing::PriceFunction;
use crate::time::Timestamp;

/// Parses and validates a scenario document (UTF-8 JSON).
pub fn parse_scenario(document: &[u8]) -> Result<Scenario> {
    let text = std::str::from_utf8(document).map_err(|_| Error::schema("", "document is not UTF-8"))?;
    let root: Value = serde_json::from_str(text).map_err(|e| Error::schema("", e.to_string()))?;
    let root = Obj::new(&root, "")?;
    root.only(&[
        "price_function",
        "participants",
        "start",
        "horizon",
        "sampling",
        "seed",
        "schedule",
        "agents",
    ])?;

    let price_function = match root.get("price_function") {
        None => PriceFunction::wish(),
        Some(v) => {
            let path = root.path("price_function");
            match v {
                Value::String(s) if s == "wish" => PriceFunction::wish(),
                Value::Object(_) => PriceFunction::from_json(&v.to_string()).map_err(|e| Error::schema(path, e.to_string()))?,
                _ => return Err(Error::schema(path, "expected \"wish\" or a price function object")),
            }
        }
    };

    let participants = parse_participants(&root)?;
    let known: BTreeSet<&str> = participants.iter().map(String::as_str).collect();

    let start = match root.get("start") {
        Some(_) => root.timestamp("start")?,
        None => price_function.start(),
    };
    if start < price_function.start() {
        return Err(Error::schema(root.path("start"), "start precedes the price function start"));
    }
    let horizon = root.timestamp("horizon")?;
    if horizon < start {
        return Err(Error::schema(root.path("horizon"), "horizon precedes start"));
    }

    let sampling = match root.get("sampling") {
        None => Sampling::Day,
        Some(Value::String(s)) => match s.as_str() {
            "day" => Sampling::Day,
            "week" => Sampling::Week,
            "month" => Sampling::Month,
            _ => return Err(Error::schema(root.path("sampling"), "expected day, week or month")),
        },
        Some(_) => return Err(Error::schema(root.path("sampling"), "expected a string")),
    };

    let seed = match root.get("seed") {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| Error::schema(root.path("seed"), "expected a non-negative integer"))?,
        ),
    };

    let mut schedule = Vec::new();
    for (i, item) in root.array("schedule")?.iter().enumerate() {
        let obj = Obj::new(item, &format!("{}/{i}", root.path("schedule")))?;
        let at = obj.timestamp("at")?;
        if at < start || at > horizon {
            return Err(Error::schema(obj.path("at"), "action lies outside [start, horizon]"));
        }
        if let Some(prev) = schedule.last().map(|a: &ScheduledAction| a.at) {
            if at < prev {
                return Err(Error::schema(obj.path("at"), "schedule is not sorted by time"));
            }
        }
        let action = match obj.string("action")? {
            "deposit" => {
                obj.only(&["at", "action", "participant", "amount"])?;
                Action::Deposit {
                    participant: obj.participant("participant", &known)?,
                    amount: obj.decimal("amount")?,
                }
            }
            "burn" => {
                obj.only(&["at", "action", "participant", "coins", "activity"])?;
                Action::Burn {
                    participant: obj.participant("participant", &known)?,
                    coins: obj.decimal("coins")?,
                    activity: match obj.string("activity")? {
                        "donation" => BurnActivity::Donation,
                        "wish_redeem" => BurnActivity::WishRedeem,
                        _ => return Err(Error::schema(obj.path("activity"), "expected donation or wish_redeem")),
                    },
                }
            }
            "transfer" => {
                obj.only(&["at", "action", "from", "to", "coins"])?;
                Action::Transfer {
                    from: obj.participant("from", &known)?,
                    to: obj.participant("to", &known)?,
                    coins: obj.decimal("coins")?,
                }
            }
            _ => return Err(Error::schema(obj.path("action"), "expected deposit, burn or transfer")),
        };
        schedule.push(ScheduledAction { at, action });
    }

    let mut agents = Vec::new();
    for (i, item) in root.array("agents")?.iter().enumerate() {
        let obj = Obj::new(item, &format!("{}/{i}", root.path("agents")))?;
        obj.only(&[
            "participant",
            "deposit_probability",
            "deposit_min",
            "deposit_max",
            "burn_probability",
            "burn_fraction",
            "activity",
            "transfer_probability",
            "transfer_fraction",
        ])?;
        let agent = AgentSpec {
            participant: obj.participant("participant", &known)?,
            deposit_probability: obj.fraction_or_zero("deposit_probability")?,
            deposit_min: obj.decimal_or_zero("deposit_min")?,
            deposit_max: obj.decimal_or_zero("deposit_max")?,
            burn_probability: obj.fraction_or_zero("burn_probability")?,
            burn_fraction: obj.fraction_or_zero("burn_fraction")?,
            activity: match obj.get("activity") {
                None => ActivityChoice::Mixed,
                Some(Value::String(s)) if s == "donation" => ActivityChoice::Fixed(BurnActivity::Donation),
                Some(Value::String(s)) if s == "wish_redeem" => ActivityChoice::Fixed(BurnActivity::WishRedeem),
                Some(Value::String(s)) if s == "mixed" => ActivityChoice::Mixed,
                Some(_) => return Err(Error::schema(obj.path("activity"), "expected donation, wish_redeem or mixed")),
            },
            transfer_probability: obj.fraction_or_zero("transfer_probability")?,
            transfer_fraction: obj.fraction_or_zero("transfer_fraction")?,
        };
        if agent.deposit_min > agent.deposit_max {
            return Err(Error::schema(obj.path("deposit_min"), "deposit_min exceeds deposit_max"));
        }
        agents.push(agent);
    }

    Ok(Scenario {
        price_function,
        participants,
        start,
        horizon,
        sampling,
        seed,
        schedule,
        agents,
    })
}

fn parse_participants(root: &Obj) -> Result<Vec<String>> {
    let list = root.array("participants")?;
    if list.is_empty() {
        return Err(Error::schema(root.path("participants"), "at least one participant is required"));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, v) in list.iter().enumerate() {
        let path = format!("{}/{i}", root.path("participants"));
        let s = v.as_str().filter(|s| !s.is_empty()).ok_or_else(|| Error::schema(&path, "expected a non-empty string"))?;
        if !seen.insert(s) {
            return Err(Error::schema(&path, "duplicate participant"));
        }
        out.push(s.to_string());
    }
    Ok(out)
}

/// A JSON object plus its JSON-pointer path.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: &str) -> Result<Self> {
        match v {
            Value::Object(map) => Ok(Obj {
                map,
                path: path.to_string(),
            }),
            _ => Err(Error::schema(path, "expected an object")),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}/{}", self.path, escape(key))
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::schema(self.path(k), "unknown field")),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn required(&self, key: &str) -> Result<&'a Value> {
        self.get(key).ok_or_else(|| Error::schema(self.path(key), "missing field"))
    }

    fn string(&self, key: &str) -> Result<&'a str> {
        self.required(key)?
            .as_str()
            .ok_or_else(|| Error::schema(self.path(key), "expected a string"))
    }

    fn array(&self, key: &str) -> Result<&'a [Value]> {
        match self.get(key) {
            None if key != "participants" => Ok(&[]),
            None => Err(Error::schema(self.path(key), "missing field")),
            Some(Value::Array(a)) => Ok(a),
            Some(_) => Err(Error::schema(self.path(key), "expected an array")),
        }
    }

    fn timestamp(&self, key: &str) -> Result<Timestamp> {
        self.string(key)?
            .parse()
            .map_err(|e: Error| Error::schema(self.path(key), e.to_string()))
    }

    fn participant(&self, key: &str, known: &BTreeSet<&str>) -> Result<String> {
        let s = self.string(key)?;
        if !known.contains(s) {
            return Err(Error::schema(self.path(key), format!("undeclared participant {s:?}")));
        }
        Ok(s.to_string())
    }

    /// Non-negative decimal given as a string. Excess precision is reported
    /// as `DecimalPrecisionError`, not as a schema error.
    fn decimal(&self, key: &str) -> Result<FixedDecimal> {
        let s = self
            .required(key)?
            .as_str()
            .ok_or_else(|| Error::schema(self.path(key), "decimals must be JSON strings"))?;
        let v = match s.parse::<FixedDecimal>() {
            Ok(v) => v,
            Err(e @ Error::DecimalPrecision(_)) => return Err(e),
            Err(e) => return Err(Error::schema(self.path(key), e.to_string())),
        };
        if v.is_negative() {
            return Err(Error::schema(self.path(key), "must not be negative"));
        }
        Ok(v)
    }

    fn decimal_or_zero(&self, key: &str) -> Result<FixedDecimal> {
        match self.get(key) {
            None => Ok(FixedDecimal::ZERO),
            Some(_) => self.decimal(key),
        }
    }

    fn fraction_or_zero(&self, key: &str) -> Result<FixedDecimal> {
        let v = self.decimal_or_zero(key)?;
        if v > FixedDecimal::ONE {
            return Err(Error::schema(self.path(key), "must lie in [0, 1]"));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "participants": ["alice"],
        "horizon": "2023-03-10T00:00:00Z",
        "schedule": [{"at": "2023-03-06T00:00:00Z", "action": "deposit", "participant": "alice", "amount": "1.0"}]
    }"#;

    fn schema_path(r: Result<Scenario>) -> String {
        match r {
            Err(Error::Schema { path, .. }) => path,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document() {
        let s = parse_scenario(MINIMAL.as_bytes()).unwrap();
        assert_eq!(s.schedule.len(), 1);
        assert_eq!(s.participants, vec!["alice"]);
        assert_eq!(s.price_function, PriceFunction::wish());
        assert_eq!(s.sampling, Sampling::Day);
        assert!(s.agents.is_empty());
    }

    #[test]
    fn unsorted_schedule_points_at_the_offending_entry() {
        let doc = r#"{"participants":["a"],"horizon":"2023-04-01T00:00:00Z","schedule":[
            {"at":"2023-03-08T00:00:00Z","action":"deposit","participant":"a","amount":"1"},
            {"at":"2023-03-09T00:00:00Z","action":"deposit","participant":"a","amount":"1"},
            {"at":"2023-03-07T00:00:00Z","action":"deposit","participant":"a","amount":"1"}]}"#;
        assert_eq!(schema_path(parse_scenario(doc.as_bytes())), "/schedule/2/at");
    }

    #[test]
    fn excess_precision_is_its_own_error() {
        let doc = MINIMAL.replace("\"1.0\"", "\"0.1234567890123456789\"");
        assert!(matches!(parse_scenario(doc.as_bytes()), Err(Error::DecimalPrecision(_))));
    }

    #[test]
    fn numbers_are_not_decimals() {
        let doc = MINIMAL.replace("\"1.0\"", "1.0");
        assert_eq!(schema_path(parse_scenario(doc.as_bytes())), "/schedule/0/amount");
    }

    #[test]
    fn undeclared_participant() {
        let doc = MINIMAL.replace("\"participant\": \"alice\"", "\"participant\": \"mallory\"");
        assert_eq!(schema_path(parse_scenario(doc.as_bytes())), "/schedule/0/participant");
    }

    #[test]
    fn unknown_and_missing_fields() {
        let doc = MINIMAL.replace("\"horizon\"", "\"horizn\"");
        assert_eq!(schema_path(parse_scenario(doc.as_bytes())), "/horizn");
        let doc = r#"{"participants":["a"]}"#;
        assert_eq!(schema_path(parse_scenario(doc.as_bytes())), "/horizon");
        assert_eq!(schema_path(parse_scenario(b"[1]")), "");
        assert_eq!(schema_path(parse_scenario(b"{")), "");
    }

    #[test]
    fn agent_fields() {
        let doc = r#"{"participants":["a","b"],"horizon":"2023-04-01T00:00:00Z","seed":7,
            "agents":[{"participant":"a","deposit_probability":"0.5","deposit_min":"1","deposit_max":"2",
                       "burn_probability":"0.1","burn_fraction":"0.5","activity":"donation"}]}"#;
        let s = parse_scenario(doc.as_bytes()).unwrap();
        assert_eq!(s.seed, Some(7));
        assert_eq!(s.agents[0].activity, ActivityChoice::Fixed(BurnActivity::Donation));
        let bad = doc.replace("\"0.5\",\"deposit_min\"", "\"1.5\",\"deposit_min\"");
        assert_eq!(schema_path(parse_scenario(bad.as_bytes())), "/agents/0/deposit_probability");
    }
}
