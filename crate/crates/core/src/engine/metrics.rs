use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dns::{Action, RuleId, Verdict};

/// Ground truth attached to a generated packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// Forged by the attacker.
    Attack,
    /// Unrelated legitimate traffic.
    Benign,
    /// The genuine answer to the query under attack. Counted in neither
    /// the attack success rate nor the false-positive rate.
    Authentic,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Attack => "attack",
            Label::Benign => "benign",
            Label::Authentic => "authentic",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "attack" => Ok(Label::Attack),
            "benign" => Ok(Label::Benign),
            "authentic" => Ok(Label::Authentic),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
}

impl RuleCounts {
    fn bump(&mut self, rule: RuleId) {
        match rule {
            RuleId::R1 => self.r1 += 1,
            RuleId::R2 => self.r2 += 1,
            RuleId::R3 => self.r3 += 1,
        }
    }
}

/// Aggregate outcome of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total: usize,
    pub forwarded: usize,
    pub truncated: usize,
    pub dropped: usize,
    /// Frames discarded before evaluation because they could not be parsed.
    pub malformed: usize,
    /// Flagged packets that could not be truncated and were dropped instead.
    pub mitigation_failures: usize,
    pub per_rule: RuleCounts,
    /// Whether ground-truth labels were supplied; the rates are 0 otherwise.
    pub labelled: bool,
    pub attack_packets: usize,
    pub attack_forwarded: usize,
    /// Denominator of the attack success rate.
    pub intended_attack: usize,
    pub benign_packets: usize,
    pub benign_flagged: usize,
    pub asr: f64,
    pub fp_rate: f64,
    /// Index of the first flagged attack packet, or of the first flagged
    /// packet of any kind when no labels are given.
    pub first_flag_index: Option<usize>,
}

impl RunMetrics {
    /// `intended_attack` overrides the attack-label count as the ASR
    /// denominator when given.
    pub fn from_verdicts(verdicts: &[Verdict], labels: Option<&[Label]>, intended_attack: Option<usize>) -> Self {
        let mut m = RunMetrics { total: verdicts.len(), labelled: labels.is_some(), ..Default::default() };
        for (i, v) in verdicts.iter().enumerate() {
            match v.action {
                Action::Forward => m.forwarded += 1,
                Action::Truncate => m.truncated += 1,
                Action::Drop => m.dropped += 1,
            }
            if let Some(rule) = v.fired_rule {
                m.per_rule.bump(rule);
            }
            let label = labels.map(|l| l[i]);
            if v.flagged() && m.first_flag_index.is_none() && matches!(label, None | Some(Label::Attack)) {
                m.first_flag_index = Some(v.packet_index);
            }
            match label {
                Some(Label::Attack) => {
                    m.attack_packets += 1;
                    if !v.flagged() {
                        m.attack_forwarded += 1;
                    }
                }
                Some(Label::Benign) => {
                    m.benign_packets += 1;
                    if v.flagged() {
                        m.benign_flagged += 1;
                    }
                }
                _ => {}
            }
        }
        m.intended_attack = intended_attack.unwrap_or(m.attack_packets);
        m.asr = ratio(m.attack_forwarded, m.intended_attack);
        m.fp_rate = ratio(m.benign_flagged, m.benign_packets);
        m
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Attack packets forwarded over the number the attacker meant to land.
pub fn compute_asr(labels: &[Label], verdicts: &[Verdict], intended_total: usize) -> f64 {
    let landed = labels.iter().zip(verdicts).filter(|(l, v)| **l == Label::Attack && !v.flagged()).count();
    ratio(landed, intended_total)
}

/// Benign packets truncated or dropped over all benign packets.
pub fn compute_fp(labels: &[Label], verdicts: &[Verdict]) -> f64 {
    let (hit, all) = labels
        .iter()
        .zip(verdicts)
        .filter(|(l, _)| **l == Label::Benign)
        .fold((0, 0), |(hit, all), (_, v)| (hit + usize::from(v.flagged()), all + 1));
    ratio(hit, all)
}
