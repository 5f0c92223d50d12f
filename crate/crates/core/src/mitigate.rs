//! Turning a flagged response into a truncated one.

use thiserror::Error;

use crate::dns::DnsResponsePacket;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MitigateError {
    #[error("packet carries no DNS question to truncate")]
    MissingQuestion,
}

/// Returns a copy of `p` with TC set and the answer, authority and
/// additional sections emptied (EDNS0 OPT included), so the resolver
/// retries over TCP. Header id, question and addressing are kept.
///
/// A first fragment is replaced by a complete, unfragmented reply rebuilt
/// from whatever header and question its payload held. Packets with no
/// recoverable question, such as later fragments, are rejected.
pub fn truncate(p: &DnsResponsePacket) -> Result<DnsResponsePacket, MitigateError> {
    let mut msg = p.message.clone().ok_or(MitigateError::MissingQuestion)?;
    msg.set_tc(true);
    msg.answers.clear();
    msg.authority.clear();
    msg.additional.clear();
    Ok(DnsResponsePacket::udp(p.timestamp, (p.src_ip, p.src_port), (p.dst_ip, p.dst_port), msg))
}
