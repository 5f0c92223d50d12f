use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};

use super::name::DomainName;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordType(pub u16);

impl RecordType {
    pub const A: RecordType = RecordType(1);
    pub const NS: RecordType = RecordType(2);
    pub const CNAME: RecordType = RecordType(5);
    pub const SOA: RecordType = RecordType(6);
    pub const PTR: RecordType = RecordType(12);
    pub const MX: RecordType = RecordType(15);
    pub const TXT: RecordType = RecordType(16);
    pub const AAAA: RecordType = RecordType(28);
    pub const OPT: RecordType = RecordType(41);

    pub fn mnemonic(self) -> Option<&'static str> {
        Some(match self {
            Self::A => "A",
            Self::NS => "NS",
            Self::CNAME => "CNAME",
            Self::SOA => "SOA",
            Self::PTR => "PTR",
            Self::MX => "MX",
            Self::TXT => "TXT",
            Self::AAAA => "AAAA",
            Self::OPT => "OPT",
            _ => return None,
        })
    }
}

impl fmt::Display for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mnemonic() {
            Some(m) => f.write_str(m),
            None => write!(f, "TYPE{}", self.0),
        }
    }
}

impl fmt::Debug for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub const CLASS_IN: u16 = 1;

/// A resource record. `rdata` holds the uncompressed wire form of the
/// record data; names inside well-known types are expanded at decode time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceRecord {
    pub name: DomainName,
    pub rtype: RecordType,
    pub class: u16,
    pub ttl: u32,
    pub rdata: Vec<u8>,
}

impl ResourceRecord {
    pub fn new(name: DomainName, rtype: RecordType, ttl: u32, rdata: Vec<u8>) -> Self {
        ResourceRecord { name, rtype, class: CLASS_IN, ttl, rdata }
    }

    pub fn a(name: DomainName, ttl: u32, addr: Ipv4Addr) -> Self {
        Self::new(name, RecordType::A, ttl, addr.octets().to_vec())
    }

    pub fn aaaa(name: DomainName, ttl: u32, addr: Ipv6Addr) -> Self {
        Self::new(name, RecordType::AAAA, ttl, addr.octets().to_vec())
    }

    pub fn ns(name: DomainName, ttl: u32, host: &DomainName) -> Self {
        let mut rdata = Vec::with_capacity(host.wire_len());
        write_name(&mut rdata, host);
        Self::new(name, RecordType::NS, ttl, rdata)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn soa(
        zone: DomainName,
        ttl: u32,
        mname: &DomainName,
        rname: &DomainName,
        serial: u32,
        refresh: u32,
        retry: u32,
        expire: u32,
        minimum: u32,
    ) -> Self {
        let mut rdata = Vec::new();
        write_name(&mut rdata, mname);
        write_name(&mut rdata, rname);
        for v in [serial, refresh, retry, expire, minimum] {
            rdata.extend_from_slice(&v.to_be_bytes());
        }
        Self::new(zone, RecordType::SOA, ttl, rdata)
    }

    /// EDNS0 OPT pseudo-record advertising `udp_size`.
    pub fn opt(udp_size: u16) -> Self {
        ResourceRecord { name: DomainName::root(), rtype: RecordType::OPT, class: udp_size, ttl: 0, rdata: Vec::new() }
    }

    pub fn as_a(&self) -> Option<Ipv4Addr> {
        let octets: [u8; 4] = self.rdata.as_slice().try_into().ok()?;
        (self.rtype == RecordType::A).then(|| Ipv4Addr::from(octets))
    }

    pub fn as_aaaa(&self) -> Option<Ipv6Addr> {
        let octets: [u8; 16] = self.rdata.as_slice().try_into().ok()?;
        (self.rtype == RecordType::AAAA).then(|| Ipv6Addr::from(octets))
    }

    pub fn as_ns(&self) -> Option<DomainName> {
        if self.rtype != RecordType::NS {
            return None;
        }
        let (name, used) = read_plain_name(&self.rdata)?;
        (used == self.rdata.len()).then_some(name)
    }

    pub fn wire_len(&self) -> usize {
        self.name.wire_len() + 10 + self.rdata.len()
    }
}

/// Uncompressed wire encoding of a name.
pub(crate) fn write_name(out: &mut Vec<u8>, name: &DomainName) {
    for label in name.labels() {
        out.push(label.len() as u8);
        out.extend_from_slice(label.as_bytes());
    }
    out.push(0);
}

/// Reads an uncompressed name from the start of `buf`.
fn read_plain_name(buf: &[u8]) -> Option<(DomainName, usize)> {
    let mut labels = Vec::new();
    let mut pos = 0;
    loop {
        let len = *buf.get(pos)? as usize;
        pos += 1;
        if len == 0 {
            break;
        }
        if len > 63 {
            return None;
        }
        labels.push(buf.get(pos..pos + len)?);
        pos += len;
    }
    Some((DomainName::from_labels(labels).ok()?, pos))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_accessors_check_length_and_type() {
        let name: DomainName = "abc.com".parse().unwrap();
        let a = ResourceRecord::a(name.clone(), 60, Ipv4Addr::new(10, 0, 0, 1));
        assert_eq!(a.as_a(), Some(Ipv4Addr::new(10, 0, 0, 1)));
        assert_eq!(a.as_aaaa(), None);
        let bad = ResourceRecord::new(name.clone(), RecordType::A, 60, vec![1, 2, 3]);
        assert_eq!(bad.as_a(), None);
        let six = ResourceRecord::aaaa(name.clone(), 60, Ipv6Addr::LOCALHOST);
        assert_eq!(six.as_aaaa(), Some(Ipv6Addr::LOCALHOST));
        let host: DomainName = "ns1.abc.com".parse().unwrap();
        let ns = ResourceRecord::ns(name, 60, &host);
        assert_eq!(ns.as_ns(), Some(host));
    }

    #[test]
    fn display_unknown_type() {
        assert_eq!(RecordType(99).to_string(), "TYPE99");
        assert_eq!(RecordType::AAAA.to_string(), "AAAA");
    }
}
