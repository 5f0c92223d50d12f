use std::fmt;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::name::DomainName;
use super::record::{RecordType, ResourceRecord, CLASS_IN};

/// Capture time in microseconds since the start of the capture epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn from_micros(us: u64) -> Self {
        Timestamp(us)
    }

    pub fn from_secs_f64(secs: f64) -> Self {
        Timestamp((secs * 1e6).round().max(0.0) as u64)
    }

    pub fn micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Question {
    pub qname: DomainName,
    pub qtype: RecordType,
    pub qclass: u16,
}

impl Question {
    pub fn new(qname: DomainName, qtype: RecordType) -> Self {
        Question { qname, qtype, qclass: CLASS_IN }
    }
}

pub mod flags {
    pub const QR: u16 = 0x8000;
    pub const AA: u16 = 0x0400;
    pub const TC: u16 = 0x0200;
    pub const RD: u16 = 0x0100;
    pub const RA: u16 = 0x0080;
    pub const RCODE_MASK: u16 = 0x000f;
    pub const NXDOMAIN: u16 = 3;
}

/// The DNS layer of a packet. Exactly one question is carried.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DnsMessage {
    pub txid: u16,
    /// Raw header flag word (QR, opcode, AA, TC, RD, RA, Z, RCODE).
    pub flags: u16,
    pub question: Question,
    pub answers: Vec<ResourceRecord>,
    pub authority: Vec<ResourceRecord>,
    pub additional: Vec<ResourceRecord>,
}

impl DnsMessage {
    pub fn response(txid: u16, question: Question) -> Self {
        DnsMessage {
            txid,
            flags: flags::QR | flags::RD | flags::RA,
            question,
            answers: Vec::new(),
            authority: Vec::new(),
            additional: Vec::new(),
        }
    }

    pub fn query(txid: u16, question: Question) -> Self {
        DnsMessage { flags: flags::RD, ..Self::response(txid, question) }
    }

    pub fn qr(&self) -> bool {
        self.flags & flags::QR != 0
    }

    pub fn tc(&self) -> bool {
        self.flags & flags::TC != 0
    }

    pub fn set_tc(&mut self, on: bool) {
        if on {
            self.flags |= flags::TC;
        } else {
            self.flags &= !flags::TC;
        }
    }

    pub fn rcode(&self) -> u16 {
        self.flags & flags::RCODE_MASK
    }

    pub fn record_count(&self) -> usize {
        self.answers.len() + self.authority.len() + self.additional.len()
    }

    pub fn has_edns(&self) -> bool {
        self.additional.iter().any(|r| r.rtype == RecordType::OPT)
    }

    pub fn records(&self) -> impl Iterator<Item = &ResourceRecord> {
        self.answers.iter().chain(&self.authority).chain(&self.additional)
    }

    pub fn wire_len(&self) -> usize {
        12 + self.question.qname.wire_len() + 4 + self.records().map(|r| r.wire_len()).sum::<usize>()
    }
}

/// IPv4 fragmentation metadata.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FragmentInfo {
    /// Fragment offset in 8-byte units.
    pub offset: u16,
    pub more_fragments: bool,
    pub ipid: u16,
    /// The fragment's IP payload exactly as carried on the wire.
    pub payload: Vec<u8>,
}

impl FragmentInfo {
    pub fn is_first(&self) -> bool {
        self.offset == 0 && self.more_fragments
    }

    pub fn is_later(&self) -> bool {
        self.offset > 0
    }
}

/// A DNS packet observed on the wire, with its transport metadata.
///
/// `message` is `None` for non-first fragments, which carry no DNS header.
/// For first fragments it holds whatever could be decoded from the partial
/// payload; the payload bytes themselves live in `fragment`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DnsResponsePacket {
    pub timestamp: Timestamp,
    pub src_ip: IpAddr,
    pub dst_ip: IpAddr,
    pub src_port: u16,
    pub dst_port: u16,
    pub message: Option<DnsMessage>,
    pub fragment: Option<FragmentInfo>,
    /// IP datagram length in bytes.
    pub raw_len: usize,
}

impl DnsResponsePacket {
    /// Builds an unfragmented UDP packet and fills in `raw_len`.
    pub fn udp(timestamp: Timestamp, src: (IpAddr, u16), dst: (IpAddr, u16), message: DnsMessage) -> Self {
        let mut p = DnsResponsePacket {
            timestamp,
            src_ip: src.0,
            dst_ip: dst.0,
            src_port: src.1,
            dst_port: dst.1,
            message: Some(message),
            fragment: None,
            raw_len: 0,
        };
        p.raw_len = p.computed_len();
        p
    }

    pub fn txid(&self) -> Option<u16> {
        self.message.as_ref().map(|m| m.txid)
    }

    pub fn qname(&self) -> Option<&DomainName> {
        self.message.as_ref().map(|m| &m.question.qname)
    }

    pub fn tc_flag(&self) -> bool {
        self.message.as_ref().is_some_and(DnsMessage::tc)
    }

    pub fn is_first_fragment(&self) -> bool {
        self.fragment.as_ref().is_some_and(FragmentInfo::is_first)
    }

    pub fn is_later_fragment(&self) -> bool {
        self.fragment.as_ref().is_some_and(FragmentInfo::is_later)
    }

    pub fn ip_header_len(&self) -> usize {
        match self.dst_ip {
            IpAddr::V4(_) => 20,
            IpAddr::V6(_) => 40,
        }
    }

    /// Datagram length implied by the current contents.
    pub fn computed_len(&self) -> usize {
        let body = match (&self.fragment, &self.message) {
            (Some(f), _) => f.payload.len(),
            (None, Some(m)) => 8 + m.wire_len(),
            (None, None) => 8,
        };
        self.ip_header_len() + body
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    Truncate,
    Drop,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Forward => "forward",
            Action::Truncate => "truncate",
            Action::Drop => "drop",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    /// Per-window frequency of a query name.
    R1,
    /// IP fragmentation.
    R2,
    /// Bailiwick compliance.
    R3,
}

impl RuleId {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::R1 => "R1",
            RuleId::R2 => "R2",
            RuleId::R3 => "R3",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub action: Action,
    pub fired_rule: Option<RuleId>,
    pub packet_index: usize,
}

impl Verdict {
    pub fn forward(packet_index: usize) -> Self {
        Verdict { action: Action::Forward, fired_rule: None, packet_index }
    }

    pub fn flagged(&self) -> bool {
        self.action != Action::Forward
    }
}
