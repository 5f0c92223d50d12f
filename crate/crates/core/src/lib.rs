//! Detection and mitigation of DNS cache-poisoning responses at the
//! resolver edge.
//!
//! Responses are checked against three rules: a per-window query-name
//! frequency limit backed by a Count-Min Sketch, IP fragmentation, and
//! bailiwick compliance. Flagged responses are truncated (TC=1) so the
//! resolver retries over TCP; non-first fragments are dropped.

pub mod dns;
pub mod engine;
pub mod mitigate;
pub mod pcap;
pub mod rules;
pub mod sketch;
pub mod trafficgen;

pub use dns::{Action, DnsMessage, DnsResponsePacket, DomainName, RuleId, Timestamp, Verdict};
pub use engine::{process, EngineConfig, EngineError, Label, Pipeline, ProcessOptions, ProcessResult, RunMetrics};
pub use sketch::CountMinSketch;
pub use trafficgen::{generate, LabeledStream, ScenarioKind, ScenarioSpec};
