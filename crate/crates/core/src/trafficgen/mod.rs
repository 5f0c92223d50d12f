//! Deterministic, labelled packet streams for the attack and benign
//! scenarios.

mod attack;
mod benign;
mod domains;
mod labels;

use std::fmt;
use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dns::{DnsResponsePacket, DomainName, RecordType, Timestamp};
use crate::engine::Label;

pub use benign::{benign_response, shape_plan, ResponseShape, SHAPE_MIX};
pub use domains::{load_domain_list, parse_domain_list, synthetic_domains};
pub use labels::{read_labels_csv, write_labels_csv};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("benign traffic needs a non-empty domain list")]
    MissingDomainList,
    #[error("domain list line {line}: {reason}")]
    BadDomainList { line: usize, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("labels file line {line}: {reason}")]
    BadLabels { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// TXID-sweeping flood of spoofed responses.
    #[serde(rename = "s")]
    SAttack,
    /// Forged second fragments planted ahead of a fragmented response.
    Frag,
    /// A response smuggling out-of-bailiwick records.
    Oob,
    /// Legitimate traffic only.
    Benign,
    /// The flood mixed with benign responses for other names.
    Interleaved,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] =
        [ScenarioKind::SAttack, ScenarioKind::Frag, ScenarioKind::Oob, ScenarioKind::Benign, ScenarioKind::Interleaved];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::SAttack => "s",
            ScenarioKind::Frag => "frag",
            ScenarioKind::Oob => "oob",
            ScenarioKind::Benign => "benign",
            ScenarioKind::Interleaved => "interleaved",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scenario {s:?} (expected s, frag, oob, benign or interleaved)"))
    }
}

/// Where the out-of-bailiwick record goes in the OoB scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OobVariant {
    /// An A record for a foreign name in the additional section.
    AdditionalRecord,
    /// An NS record delegating the foreign name's TLD in the authority
    /// section.
    TldDelegation,
    /// A response with no foreign records at all.
    Compliant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arrival {
    /// Independent uniform times over the noise window.
    Uniform,
    /// Exponential gaps at `noise_count / noise window` per second.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    /// Time of the query that opens the stream.
    pub start: Timestamp,
    pub attack_domain: DomainName,
    /// Forged packets: spoofed responses, or forged fragments.
    pub attack_count: usize,
    pub attack_window_ms: u64,
    pub noise_count: usize,
    /// Span over which noise is spread, starting at `start`.
    pub noise_window_ms: u64,
    pub noise_arrival: Arrival,
    /// Chance that a benign name gets a second (AAAA) response.
    pub second_response_prob: f64,
    /// Names for benign traffic; a synthetic list is used when `None`.
    pub noise_domains: Option<Vec<DomainName>>,
    pub resolver_ip: Ipv4Addr,
    pub auth_ip: Ipv4Addr,
    pub attacker_ip: Ipv4Addr,
    pub oob_variant: OobVariant,
    /// Name the OoB response tries to poison.
    pub oob_target: DomainName,
}

impl ScenarioSpec {
    /// Defaults for each scenario.
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        let base = ScenarioSpec {
            kind,
            seed,
            start: Timestamp::from_micros(1_700_000_000_000_000),
            attack_domain: name("victim.com"),
            attack_count: 65_535,
            attack_window_ms: 400,
            noise_count: 0,
            noise_window_ms: 1_000,
            noise_arrival: Arrival::Uniform,
            second_response_prob: 0.0,
            noise_domains: None,
            resolver_ip: Ipv4Addr::new(10, 0, 0, 53),
            auth_ip: Ipv4Addr::new(198, 51, 100, 53),
            attacker_ip: Ipv4Addr::new(203, 0, 113, 66),
            oob_variant: OobVariant::AdditionalRecord,
            oob_target: name("bank.com"),
        };
        match kind {
            ScenarioKind::SAttack => base,
            ScenarioKind::Interleaved => ScenarioSpec { noise_count: 1_000, ..base },
            ScenarioKind::Frag => ScenarioSpec { attack_count: 64, attack_window_ms: 50, ..base },
            ScenarioKind::Oob => {
                ScenarioSpec { attack_domain: name("example.net"), attack_count: 1, noise_count: 1_000, ..base }
            }
            ScenarioKind::Benign => ScenarioSpec {
                attack_count: 0,
                noise_count: 10_000,
                noise_window_ms: 34_000,
                second_response_prob: 0.5,
                ..base
            },
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.attack_count > 65_535 {
            return Err(GenError::InvalidSpec(format!(
                "attack_count {} exceeds the 65,535 spare transaction ids",
                self.attack_count
            )));
        }
        if self.kind == ScenarioKind::Oob && self.attack_count > 1 {
            return Err(GenError::InvalidSpec("the OoB scenario sends a single response".into()));
        }
        if !(0.0..=1.0).contains(&self.second_response_prob) {
            return Err(GenError::InvalidSpec("second_response_prob must lie in [0, 1]".into()));
        }
        if self.noise_count > 0 {
            if self.noise_window_ms == 0 {
                return Err(GenError::InvalidSpec("noise_window_ms must be positive".into()));
            }
            if self.noise_domains.as_ref().is_some_and(Vec::is_empty) {
                return Err(GenError::MissingDomainList);
            }
        }
        Ok(())
    }
}

fn name(s: &str) -> DomainName {
    s.parse().expect("built-in names are valid")
}

/// Generated traffic toward one resolver.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    /// The resolver's upstream query the attack races against, if any.
    pub query: Option<DnsResponsePacket>,
    /// Responses in timestamp order.
    pub packets: Vec<DnsResponsePacket>,
    /// One label per packet.
    pub labels: Vec<Label>,
    /// Forged packets the attacker meant to land.
    pub intended_attack: usize,
}

impl LabeledStream {
    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

/// Accumulates labelled packets and sorts them at the end.
struct StreamBuilder {
    rows: Vec<(DnsResponsePacket, Label)>,
}

impl StreamBuilder {
    fn new() -> Self {
        StreamBuilder { rows: Vec::new() }
    }

    fn push(&mut self, p: DnsResponsePacket, label: Label) {
        self.rows.push((p, label));
    }

    fn finish(mut self, query: Option<DnsResponsePacket>, intended_attack: usize) -> LabeledStream {
        // stable: equal timestamps keep insertion order
        self.rows.sort_by_key(|(p, _)| p.timestamp);
        let (packets, labels) = self.rows.into_iter().unzip();
        LabeledStream { query, packets, labels, intended_attack }
    }
}

/// Generates the stream for `spec`. Output depends only on the spec.
pub fn generate(spec: &ScenarioSpec) -> Result<LabeledStream, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = StreamBuilder::new();
    let query = match spec.kind {
        ScenarioKind::SAttack | ScenarioKind::Interleaved => Some(attack::txid_flood(spec, &mut rng, &mut out)),
        ScenarioKind::Frag => Some(attack::fragment_injection(spec, &mut rng, &mut out)?),
        ScenarioKind::Oob => Some(attack::out_of_bailiwick(spec, &mut rng, &mut out)),
        ScenarioKind::Benign => None,
    };
    add_noise(spec, &mut rng, &mut out)?;
    let intended = if spec.kind == ScenarioKind::Benign { 0 } else { spec.attack_count };
    Ok(out.finish(query, intended))
}

/// Benign responses for names other than the attacked one, each name used
/// once before any repeats.
fn add_noise(spec: &ScenarioSpec, rng: &mut ChaCha8Rng, out: &mut StreamBuilder) -> Result<(), GenError> {
    if spec.noise_count == 0 {
        return Ok(());
    }
    let mut names: Vec<DomainName> = match &spec.noise_domains {
        Some(list) => list.clone(),
        None => synthetic_domains(spec.noise_count, rng.gen()),
    };
    names.retain(|d| *d != spec.attack_domain && *d != spec.oob_target);
    if names.is_empty() {
        return Err(GenError::MissingDomainList);
    }
    names.shuffle(rng);

    let times = arrival_times(spec, rng);
    let shapes = shape_plan(spec.noise_count, rng);
    let resolver = IpAddr::V4(spec.resolver_ip);
    let mut next_name = names.iter().cycle();
    let mut i = 0;
    while i < spec.noise_count {
        let qname = next_name.next().expect("non-empty cycle");
        let ts = times[i];
        out.push(benign_response(rng, qname, RecordType::A, shapes[i], ts, resolver), Label::Benign);
        i += 1;
        if i < spec.noise_count && rng.gen_bool(spec.second_response_prob) {
            // the AAAA answer follows a few milliseconds later
            let ts = Timestamp(ts.micros() + rng.gen_range(200..20_000));
            out.push(benign_response(rng, qname, RecordType::AAAA, shapes[i], ts, resolver), Label::Benign);
            i += 1;
        }
    }
    Ok(())
}

/// One time per noise packet, ascending, starting at `spec.start`.
fn arrival_times(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<Timestamp> {
    let span = spec.noise_window_ms * 1_000;
    let start = spec.start.micros();
    let mut offsets: Vec<u64> = match spec.noise_arrival {
        Arrival::Uniform => (0..spec.noise_count).map(|_| rng.gen_range(0..span)).collect(),
        Arrival::Poisson => {
            let mean_gap = span as f64 / spec.noise_count as f64;
            let mut t = 0.0;
            (0..spec.noise_count)
                .map(|_| {
                    let u: f64 = rng.gen();
                    t += -mean_gap * (1.0 - u).ln();
                    t as u64
                })
                .collect()
        }
    };
    offsets.sort_unstable();
    offsets.into_iter().map(|o| Timestamp(start + o)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small(kind: ScenarioKind) -> ScenarioSpec {
        let mut s = ScenarioSpec::new(kind, 11);
        if matches!(kind, ScenarioKind::SAttack | ScenarioKind::Interleaved) {
            s.attack_count = 2_000;
        }
        s
    }

    #[test]
    fn streams_are_sorted_labelled_and_deterministic() {
        for kind in ScenarioKind::ALL {
            let spec = small(kind);
            let a = generate(&spec).unwrap();
            assert_eq!(a.packets.len(), a.labels.len());
            assert!(a.packets.windows(2).all(|w| w[0].timestamp <= w[1].timestamp), "{kind}");
            assert_eq!(a, generate(&spec).unwrap(), "{kind}");
            assert_ne!(a.packets, generate(&spec.with_seed(12)).unwrap().packets, "{kind}");
        }
    }

    #[test]
    fn interleaved_default_counts() {
        let s = generate(&ScenarioSpec::new(ScenarioKind::Interleaved, 1)).unwrap();
        assert_eq!(s.count(Label::Attack), 65_535);
        assert_eq!(s.count(Label::Authentic), 1);
        assert_eq!(s.count(Label::Benign), 1_000);
        let benign: Vec<_> = s
            .packets
            .iter()
            .zip(&s.labels)
            .filter(|(_, l)| **l == Label::Benign)
            .map(|(p, _)| p.qname().unwrap().clone())
            .collect();
        assert_eq!(benign.iter().collect::<HashSet<_>>().len(), 1_000);
        let first = s.packets[0].timestamp.micros();
        assert!(s.packets.iter().all(|p| p.timestamp.micros() - first < 1_000_000));
    }

    #[test]
    fn benign_counts_and_mix() {
        let s = generate(&ScenarioSpec::new(ScenarioKind::Benign, 5)).unwrap();
        assert_eq!(s.len(), 10_000);
        assert_eq!(s.count(Label::Benign), 10_000);
        assert!(s.query.is_none());
        let mut per_name = std::collections::HashMap::new();
        for p in &s.packets {
            *per_name.entry(p.qname().unwrap().clone()).or_insert(0) += 1;
        }
        assert!(per_name.values().all(|&c| c == 1 || c == 2));
        let answer_only = s
            .packets
            .iter()
            .filter(|p| {
                let m = p.message.as_ref().unwrap();
                !m.answers.is_empty() && m.authority.is_empty()
            })
            .count();
        assert!((answer_only as f64 / 10_000.0 - 0.46).abs() <= 0.02);
    }

    #[test]
    fn empty_specs() {
        let mut spec = ScenarioSpec::new(ScenarioKind::Benign, 1);
        spec.noise_count = 0;
        assert!(generate(&spec).unwrap().is_empty());
        spec.noise_count = 10;
        spec.noise_domains = Some(vec![]);
        assert!(matches!(generate(&spec), Err(GenError::MissingDomainList)));
    }

    #[test]
    fn rejects_oversized_sweep() {
        let mut spec = ScenarioSpec::new(ScenarioKind::SAttack, 1);
        spec.attack_count = 65_536;
        assert!(matches!(generate(&spec), Err(GenError::InvalidSpec(_))));
    }

    #[test]
    fn poisson_arrivals_fill_the_window() {
        let mut spec = ScenarioSpec::new(ScenarioKind::Benign, 3);
        spec.noise_arrival = Arrival::Poisson;
        let s = generate(&spec).unwrap();
        let span = s.packets.last().unwrap().timestamp.micros() - spec.start.micros();
        assert!((span as f64 / 34e6 - 1.0).abs() < 0.1, "span {span}");
    }

    #[test]
    fn kind_names() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.as_str().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("x".parse::<ScenarioKind>().is_err());
    }
}
