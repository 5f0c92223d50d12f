//! The mitigation pipeline: evaluates R1, R2 and R3 on each response in
//! arrival order and forwards, truncates or drops it.

mod metrics;
pub mod report;
mod sweep;

use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dns::{Action, DnsResponsePacket, RuleId, Timestamp, Verdict};
use crate::mitigate::truncate;
use crate::rules::{rule1, rule2, rule3, DetectorState};
use crate::sketch::{CountMinSketch, SketchError};

pub use metrics::{compute_asr, compute_fp, Label, RuleCounts, RunMetrics};
pub use sweep::{sweep, SweepGrid, SweepRow};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("packet {index} at {ts} precedes the previous packet at {previous}")]
    UnsortedStream { index: usize, ts: Timestamp, previous: Timestamp },
    #[error("{labels} labels supplied for {packets} packets")]
    LabelCountMismatch { packets: usize, labels: usize },
    #[error(transparent)]
    Scenario(#[from] crate::trafficgen::GenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleToggles {
    pub r1: bool,
    pub r2: bool,
    pub r3: bool,
}

impl Default for RuleToggles {
    fn default() -> Self {
        RuleToggles { r1: true, r2: true, r3: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// A name is flagged once its estimate exceeds this many responses.
    pub tau: u64,
    /// The threshold check runs on every N-th unflagged packet.
    pub check_interval: u64,
    pub window_seconds: f64,
    pub cms_depth: usize,
    pub cms_width: usize,
    /// Resolver address; used to filter captures.
    pub resolver_ip: Option<IpAddr>,
    /// Seed for the sketch's hash family.
    pub seed: u64,
    pub rules: RuleToggles,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            tau: 5,
            check_interval: 1,
            window_seconds: 1.0,
            cms_depth: 5,
            cms_width: 200,
            resolver_ip: None,
            seed: 0,
            rules: RuleToggles::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.check_interval == 0 {
            return Err(EngineError::InvalidConfig("check_interval must be at least 1".into()));
        }
        if !(self.window_seconds.is_finite() && self.window_us() > 0) {
            return Err(EngineError::InvalidConfig(format!(
                "window_seconds must be at least one microsecond, got {}",
                self.window_seconds
            )));
        }
        if self.cms_depth == 0 || self.cms_width == 0 {
            return Err(SketchError::ZeroDimension { depth: self.cms_depth, width: self.cms_width }.into());
        }
        Ok(())
    }

    pub fn window_us(&self) -> u64 {
        (self.window_seconds * 1e6).round().max(0.0) as u64
    }

    pub fn with_dimensions(&self, depth: usize, width: usize) -> Self {
        EngineConfig { cms_depth: depth, cms_width: width, ..self.clone() }
    }
}

/// Result of handling one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    /// What goes on to the resolver: the packet itself, its truncated form,
    /// or nothing.
    pub emitted: Option<DnsResponsePacket>,
}

enum Evaluation {
    Pass,
    Flag(RuleId),
    Nullify,
}

/// Streaming evaluator. Packets must arrive in timestamp order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    rules: RuleToggles,
    state: DetectorState,
    next_index: usize,
    last_ts: Option<Timestamp>,
    mitigation_failures: usize,
}

impl Pipeline {
    pub fn new(config: &EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let cms = CountMinSketch::new(config.cms_depth, config.cms_width, config.seed)?;
        Ok(Pipeline {
            rules: config.rules,
            state: DetectorState::new(cms, config.tau, config.check_interval, config.window_us()),
            next_index: 0,
            last_ts: None,
            mitigation_failures: 0,
        })
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    pub fn processed(&self) -> usize {
        self.next_index
    }

    pub fn mitigation_failures(&self) -> usize {
        self.mitigation_failures
    }

    fn evaluate(&mut self, p: &DnsResponsePacket) -> Evaluation {
        // Later fragments carry no DNS header, so only R2 applies to them.
        if self.rules.r1 && !p.is_later_fragment() {
            if let Some(qname) = p.qname() {
                if rule1(&mut self.state, qname, p.timestamp) {
                    return Evaluation::Flag(RuleId::R1);
                }
            }
        }
        if self.rules.r2 {
            let check = rule2(p);
            if check.flag {
                return Evaluation::Flag(RuleId::R2);
            }
            if check.drop {
                return Evaluation::Nullify;
            }
        }
        if self.rules.r3 && p.fragment.is_none() && rule3(p) {
            return Evaluation::Flag(RuleId::R3);
        }
        Evaluation::Pass
    }

    fn admit(&mut self, p: &DnsResponsePacket) -> Result<usize, EngineError> {
        let index = self.next_index;
        if let Some(previous) = self.last_ts {
            if p.timestamp < previous {
                return Err(EngineError::UnsortedStream { index, ts: p.timestamp, previous });
            }
        }
        self.last_ts = Some(p.timestamp);
        self.next_index += 1;
        Ok(index)
    }

    /// Evaluates and mitigates one packet.
    pub fn handle(&mut self, p: DnsResponsePacket) -> Result<Outcome, EngineError> {
        let packet_index = self.admit(&p)?;
        let outcome = match self.evaluate(&p) {
            Evaluation::Pass => Outcome { verdict: Verdict::forward(packet_index), emitted: Some(p) },
            Evaluation::Nullify => Outcome {
                verdict: Verdict { action: Action::Drop, fired_rule: Some(RuleId::R2), packet_index },
                emitted: None,
            },
            Evaluation::Flag(rule) => match truncate(&p) {
                Ok(t) => Outcome {
                    verdict: Verdict { action: Action::Truncate, fired_rule: Some(rule), packet_index },
                    emitted: Some(t),
                },
                Err(_) => {
                    self.mitigation_failures += 1;
                    Outcome {
                        verdict: Verdict { action: Action::Drop, fired_rule: Some(rule), packet_index },
                        emitted: None,
                    }
                }
            },
        };
        Ok(outcome)
    }

    /// Like [`Pipeline::handle`] but only produces the verdict.
    pub fn judge(&mut self, p: &DnsResponsePacket) -> Result<Verdict, EngineError> {
        let packet_index = self.admit(p)?;
        let verdict = match self.evaluate(p) {
            Evaluation::Pass => Verdict::forward(packet_index),
            Evaluation::Nullify => Verdict { action: Action::Drop, fired_rule: Some(RuleId::R2), packet_index },
            Evaluation::Flag(rule) => {
                let action = if p.message.is_some() {
                    Action::Truncate
                } else {
                    self.mitigation_failures += 1;
                    Action::Drop
                };
                Verdict { action, fired_rule: Some(rule), packet_index }
            }
        };
        Ok(verdict)
    }
}

#[derive(Debug, Clone)]
pub struct ProcessResult {
    pub verdicts: Vec<Verdict>,
    pub metrics: RunMetrics,
    /// Packets handed on to the resolver, in order. Empty unless requested.
    pub emitted: Vec<DnsResponsePacket>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessOptions<'a> {
    pub labels: Option<&'a [Label]>,
    /// ASR denominator; defaults to the number of attack labels.
    pub intended_attack: Option<usize>,
    /// Frames already discarded as unparseable, reported in the metrics.
    pub malformed: usize,
    pub keep_emitted: bool,
}

/// Runs a fresh pipeline over a timestamp-ordered packet sequence.
pub fn process<'p, I>(config: &EngineConfig, packets: I, opts: ProcessOptions<'_>) -> Result<ProcessResult, EngineError>
where
    I: IntoIterator<Item = &'p DnsResponsePacket>,
{
    let mut pipeline = Pipeline::new(config)?;
    let mut verdicts = Vec::new();
    let mut emitted = Vec::new();
    for p in packets {
        if opts.keep_emitted {
            let out = pipeline.handle(p.clone())?;
            verdicts.push(out.verdict);
            emitted.extend(out.emitted);
        } else {
            verdicts.push(pipeline.judge(p)?);
        }
    }
    if let Some(labels) = opts.labels {
        if labels.len() != verdicts.len() {
            return Err(EngineError::LabelCountMismatch { packets: verdicts.len(), labels: labels.len() });
        }
    }
    let mut metrics = RunMetrics::from_verdicts(&verdicts, opts.labels, opts.intended_attack);
    metrics.malformed = opts.malformed;
    metrics.mitigation_failures = pipeline.mitigation_failures();
    Ok(ProcessResult { verdicts, metrics, emitted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dns::{DnsMessage, DomainName, FragmentInfo, Question, RecordType, ResourceRecord};
    use std::net::Ipv4Addr;

    fn n(s: &str) -> DomainName {
        s.parse().unwrap()
    }

    fn resp(qname: &str, txid: u16, ts: u64) -> DnsResponsePacket {
        let q = n(qname);
        let mut m = DnsMessage::response(txid, Question::new(q.clone(), RecordType::A));
        m.answers.push(ResourceRecord::a(q, 300, Ipv4Addr::new(192, 0, 2, 7)));
        DnsResponsePacket::udp(
            Timestamp(ts),
            ("198.51.100.1".parse().unwrap(), 53),
            ("10.0.0.53".parse().unwrap(), 40000),
            m,
        )
    }

    fn run(packets: &[DnsResponsePacket]) -> ProcessResult {
        let opts = ProcessOptions { keep_emitted: true, ..Default::default() };
        process(&EngineConfig::default(), packets, opts).unwrap()
    }

    #[test]
    fn flood_is_truncated_after_tau() {
        let packets: Vec<_> = (0..65_535u32).map(|i| resp("victim.com", i as u16, u64::from(i) * 6)).collect();
        let r = run(&packets);
        assert_eq!(r.metrics.forwarded, 5);
        assert_eq!(r.metrics.truncated, 65_530);
        assert!(r.verdicts[..5].iter().all(|v| v.action == Action::Forward));
        assert_eq!(r.verdicts[5].fired_rule, Some(RuleId::R1));
        assert_eq!(r.metrics.first_flag_index, Some(5));
        let emitted_tc = r.emitted.iter().filter(|p| p.tc_flag()).count();
        assert_eq!(emitted_tc, 65_530);
        assert!(r.emitted.iter().filter(|p| p.tc_flag()).all(|p| p.message.as_ref().unwrap().record_count() == 0));
    }

    #[test]
    fn verdicts_match_handle_and_judge() {
        let packets: Vec<_> = (0..50u64).map(|i| resp(if i % 3 == 0 { "a.com" } else { "b.com" }, 1, i)).collect();
        let cfg = EngineConfig::default();
        let slow = process(&cfg, &packets, ProcessOptions { keep_emitted: true, ..Default::default() }).unwrap();
        let fast = process(&cfg, &packets, ProcessOptions::default()).unwrap();
        assert_eq!(slow.verdicts, fast.verdicts);
        assert!(fast.emitted.is_empty());
    }

    #[test]
    fn unsorted_input_is_rejected() {
        let packets = [resp("a.com", 1, 10), resp("a.com", 2, 5)];
        let err = process(&EngineConfig::default(), &packets, ProcessOptions::default()).unwrap_err();
        assert!(matches!(err, EngineError::UnsortedStream { index: 1, .. }));
    }

    #[test]
    fn fragments_truncated_and_dropped() {
        let mut first = resp("victim.com", 9, 0);
        first.fragment = Some(FragmentInfo { offset: 0, more_fragments: true, ipid: 3, payload: vec![0; 64] });
        let mut later = resp("victim.com", 9, 1);
        later.message = None;
        later.fragment = Some(FragmentInfo { offset: 185, more_fragments: false, ipid: 3, payload: vec![0; 64] });
        let r = run(&[first, later]);
        assert_eq!(r.verdicts[0].action, Action::Truncate);
        assert_eq!(r.verdicts[0].fired_rule, Some(RuleId::R2));
        assert_eq!(r.verdicts[1].action, Action::Drop);
        assert_eq!(r.emitted.len(), 1);
        assert!(r.emitted[0].fragment.is_none());
    }

    #[test]
    fn first_fragment_without_question_is_dropped() {
        let mut first = resp("victim.com", 9, 0);
        first.message = None;
        first.fragment = Some(FragmentInfo { offset: 0, more_fragments: true, ipid: 3, payload: vec![0; 8] });
        let r = run(&[first]);
        assert_eq!(r.verdicts[0].action, Action::Drop);
        assert_eq!(r.metrics.mitigation_failures, 1);
    }

    #[test]
    fn bailiwick_violation_truncated() {
        let mut p = resp("example.net", 1, 0);
        p.message.as_mut().unwrap().additional.push(ResourceRecord::a(n("bank.com"), 60, Ipv4Addr::LOCALHOST));
        let r = run(&[resp("example.org", 2, 0), p]);
        assert_eq!(r.verdicts[0].action, Action::Forward);
        assert_eq!(r.verdicts[1].fired_rule, Some(RuleId::R3));
        assert_eq!(r.verdicts[1].action, Action::Truncate);
    }

    #[test]
    fn disabled_rules_do_not_fire() {
        let cfg = EngineConfig { rules: RuleToggles { r1: false, r2: true, r3: true }, ..Default::default() };
        let packets: Vec<_> = (0..100u64).map(|i| resp("victim.com", i as u16, i)).collect();
        let r = process(&cfg, &packets, ProcessOptions::default()).unwrap();
        assert_eq!(r.metrics.forwarded, 100);
    }

    #[test]
    fn bad_config_rejected() {
        assert!(EngineConfig { check_interval: 0, ..Default::default() }.validate().is_err());
        assert!(EngineConfig { window_seconds: 0.0, ..Default::default() }.validate().is_err());
        assert!(EngineConfig { cms_width: 0, ..Default::default() }.validate().is_err());
        assert!(EngineConfig { window_seconds: f64::NAN, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn label_mismatch_rejected() {
        let packets = [resp("a.com", 1, 0)];
        let labels = [Label::Benign, Label::Benign];
        let opts = ProcessOptions { labels: Some(&labels), ..Default::default() };
        assert!(matches!(
            process(&EngineConfig::default(), &packets, opts),
            Err(EngineError::LabelCountMismatch { .. })
        ));
    }
}
