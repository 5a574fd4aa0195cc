//! Run traces and their JSON-lines encoding.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    /// One outer update.
    Step,
    /// The candidate learning rate replaced the current one.
    AcceptEta,
    /// The candidate learning rate was discarded.
    RejectEta,
    /// Neither rate made progress; the learning rate was divided by `c_η³`.
    ShrinkEta,
    /// The round was undone: position and step sizes restored.
    Revert,
    Converged,
    Budget,
    /// The iterate or the gap became non-finite.
    Diverged,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// Non-finite values are written as `null`; read them back as NaN.
fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// One trace line: `{"t","s","eta","F","metric","fcalls","event"}`.
///
/// `t` counts outer rounds (steps for fixed-η runs) and `s` the inner step
/// within an adaptation round (0 for fixed-η runs and round-level events).
/// `eta` is the learning rate the step used. Round-level events repeat the
/// `F`, metric and f-call values of the step that closed the round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub s: u64,
    pub eta: f64,
    #[serde(rename = "F", deserialize_with = "nullable")]
    pub f_gap: f64,
    #[serde(deserialize_with = "nullable")]
    pub metric: f64,
    pub fcalls: u64,
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().map_or(true, |r| r.fcalls <= record.fcalls));
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn steps(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.event == Event::Step)
    }

    pub fn count(&self, event: Event) -> usize {
        self.records.iter().filter(|r| r.event == event).count()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<TraceRecord>, _>>()?;
        Ok(Self { records })
    }
}
