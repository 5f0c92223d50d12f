use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use super::error::{DecodeError, EncodeError};
use super::packet::{DnsResponsePacket, FragmentInfo, Timestamp};
use super::wire::{decode_message, encode_message};

const IPPROTO_UDP: u8 = 17;
const IPV4_DF: u16 = 0x4000;
const IPV4_MF: u16 = 0x2000;
const IPV4_OFFSET_MASK: u16 = 0x1fff;
const DEFAULT_TTL: u8 = 64;

/// Decodes an IP datagram carrying UDP/DNS, without checking the QR bit.
///
/// Non-first IPv4 fragments are returned with no DNS message. First
/// fragments are decoded leniently: records cut by the fragment boundary
/// are left out, and a DNS header that cannot be parsed at all leaves
/// `message` empty.
pub fn decode_packet(bytes: &[u8], ts: Timestamp) -> Result<DnsResponsePacket, DecodeError> {
    let version = bytes.first().ok_or(DecodeError::Malformed("empty datagram"))? >> 4;
    let (src_ip, dst_ip, payload, raw_len, frag) = match version {
        4 => {
            if bytes.len() < 20 {
                return Err(DecodeError::Malformed("truncated IPv4 header"));
            }
            let ihl = ((bytes[0] & 0x0f) as usize) * 4;
            let total = be16(bytes, 2) as usize;
            if ihl < 20 || total < ihl || bytes.len() < total {
                return Err(DecodeError::Malformed("truncated IPv4 datagram"));
            }
            if bytes[9] != IPPROTO_UDP {
                return Err(DecodeError::NotUdp(bytes[9]));
            }
            let ipid = be16(bytes, 4);
            let flags_off = be16(bytes, 6);
            let src = Ipv4Addr::new(bytes[12], bytes[13], bytes[14], bytes[15]);
            let dst = Ipv4Addr::new(bytes[16], bytes[17], bytes[18], bytes[19]);
            let offset = flags_off & IPV4_OFFSET_MASK;
            let mf = flags_off & IPV4_MF != 0;
            let frag = (offset > 0 || mf).then_some((offset, mf, ipid));
            (IpAddr::V4(src), IpAddr::V4(dst), &bytes[ihl..total], total, frag)
        }
        6 => {
            if bytes.len() < 40 {
                return Err(DecodeError::Malformed("truncated IPv6 header"));
            }
            let total = 40 + be16(bytes, 4) as usize;
            if bytes.len() < total {
                return Err(DecodeError::Malformed("truncated IPv6 datagram"));
            }
            if bytes[6] != IPPROTO_UDP {
                return Err(DecodeError::NotUdp(bytes[6]));
            }
            let src: [u8; 16] = bytes[8..24].try_into().unwrap();
            let dst: [u8; 16] = bytes[24..40].try_into().unwrap();
            (IpAddr::V6(Ipv6Addr::from(src)), IpAddr::V6(Ipv6Addr::from(dst)), &bytes[40..total], total, None)
        }
        v => return Err(DecodeError::UnsupportedIpVersion(v)),
    };

    let mut packet = DnsResponsePacket {
        timestamp: ts,
        src_ip,
        dst_ip,
        src_port: 0,
        dst_port: 0,
        message: None,
        fragment: None,
        raw_len,
    };

    if let Some((offset, more_fragments, ipid)) = frag {
        if offset == 0 {
            if payload.len() < 8 {
                return Err(DecodeError::Malformed("truncated UDP header"));
            }
            packet.src_port = be16(payload, 0);
            packet.dst_port = be16(payload, 2);
            packet.message = decode_message(&payload[8..], true).ok();
        }
        packet.fragment = Some(FragmentInfo { offset, more_fragments, ipid, payload: payload.to_vec() });
        return Ok(packet);
    }

    if payload.len() < 8 {
        return Err(DecodeError::Malformed("truncated UDP header"));
    }
    let udp_len = be16(payload, 4) as usize;
    if udp_len < 8 || udp_len > payload.len() {
        return Err(DecodeError::Malformed("bad UDP length"));
    }
    packet.src_port = be16(payload, 0);
    packet.dst_port = be16(payload, 2);
    packet.message = Some(decode_message(&payload[8..udp_len], false)?);
    Ok(packet)
}

/// Decodes a DNS response datagram. Queries are rejected with
/// [`DecodeError::NotAResponse`]; non-first fragments carry no DNS header
/// and are accepted as-is.
pub fn decode_response(bytes: &[u8], ts: Timestamp) -> Result<DnsResponsePacket, DecodeError> {
    let packet = decode_packet(bytes, ts)?;
    match &packet.message {
        Some(m) if !m.qr() => Err(DecodeError::NotAResponse),
        _ => Ok(packet),
    }
}

/// Encodes a packet as an IP datagram. Fragments are re-emitted from their
/// stored payload; everything else is rebuilt from the typed message.
pub fn encode_response(p: &DnsResponsePacket) -> Result<Vec<u8>, EncodeError> {
    let udp;
    let payload: &[u8] = match (&p.fragment, &p.message) {
        (Some(f), _) => &f.payload,
        (None, Some(m)) => {
            udp = udp_datagram(p.src_ip, p.dst_ip, p.src_port, p.dst_port, &encode_message(m))?;
            &udp
        }
        (None, None) => return Err(EncodeError::NoMessage),
    };
    match (p.src_ip, p.dst_ip) {
        (IpAddr::V4(src), IpAddr::V4(dst)) => {
            let (ipid, flags_off) = match &p.fragment {
                Some(f) => (f.ipid, (f.offset & IPV4_OFFSET_MASK) | if f.more_fragments { IPV4_MF } else { 0 }),
                None => (0, IPV4_DF),
            };
            ipv4_datagram(src, dst, ipid, flags_off, payload)
        }
        (IpAddr::V6(src), IpAddr::V6(dst)) => {
            if p.fragment.is_some() {
                return Err(EncodeError::Ipv6Fragment);
            }
            let len = u16::try_from(payload.len()).map_err(|_| EncodeError::TooLarge(payload.len()))?;
            let mut out = Vec::with_capacity(40 + payload.len());
            out.extend_from_slice(&[0x60, 0, 0, 0]);
            out.extend_from_slice(&len.to_be_bytes());
            out.push(IPPROTO_UDP);
            out.push(DEFAULT_TTL);
            out.extend_from_slice(&src.octets());
            out.extend_from_slice(&dst.octets());
            out.extend_from_slice(payload);
            Ok(out)
        }
        _ => Err(EncodeError::AddressFamilyMismatch),
    }
}

/// UDP header plus payload, with the checksum filled in.
pub(crate) fn udp_datagram(
    src: IpAddr,
    dst: IpAddr,
    src_port: u16,
    dst_port: u16,
    body: &[u8],
) -> Result<Vec<u8>, EncodeError> {
    let len = u16::try_from(8 + body.len()).map_err(|_| EncodeError::TooLarge(8 + body.len()))?;
    let mut out = Vec::with_capacity(len as usize);
    out.extend_from_slice(&src_port.to_be_bytes());
    out.extend_from_slice(&dst_port.to_be_bytes());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(body);

    let mut pseudo = Vec::with_capacity(40);
    match (src, dst) {
        (IpAddr::V4(s), IpAddr::V4(d)) => {
            pseudo.extend_from_slice(&s.octets());
            pseudo.extend_from_slice(&d.octets());
            pseudo.extend_from_slice(&[0, IPPROTO_UDP]);
            pseudo.extend_from_slice(&len.to_be_bytes());
        }
        (IpAddr::V6(s), IpAddr::V6(d)) => {
            pseudo.extend_from_slice(&s.octets());
            pseudo.extend_from_slice(&d.octets());
            pseudo.extend_from_slice(&(len as u32).to_be_bytes());
            pseudo.extend_from_slice(&[0, 0, 0, IPPROTO_UDP]);
        }
        _ => return Err(EncodeError::AddressFamilyMismatch),
    }
    let sum = match internet_checksum(&[&pseudo, &out]) {
        0 => 0xffff,
        s => s,
    };
    out[6..8].copy_from_slice(&sum.to_be_bytes());
    Ok(out)
}

pub(crate) fn ipv4_datagram(
    src: Ipv4Addr,
    dst: Ipv4Addr,
    ipid: u16,
    flags_off: u16,
    payload: &[u8],
) -> Result<Vec<u8>, EncodeError> {
    let total = u16::try_from(20 + payload.len()).map_err(|_| EncodeError::TooLarge(20 + payload.len()))?;
    let mut out = Vec::with_capacity(total as usize);
    out.extend_from_slice(&[0x45, 0]);
    out.extend_from_slice(&total.to_be_bytes());
    out.extend_from_slice(&ipid.to_be_bytes());
    out.extend_from_slice(&flags_off.to_be_bytes());
    out.extend_from_slice(&[DEFAULT_TTL, IPPROTO_UDP, 0, 0]);
    out.extend_from_slice(&src.octets());
    out.extend_from_slice(&dst.octets());
    let sum = internet_checksum(&[&out]);
    out[10..12].copy_from_slice(&sum.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// RFC 1071 ones'-complement checksum over the concatenation of `parts`.
pub fn internet_checksum(parts: &[&[u8]]) -> u16 {
    let mut sum: u32 = 0;
    let mut carry: Option<u8> = None;
    for part in parts {
        for &b in *part {
            match carry.take() {
                Some(hi) => sum += u32::from(u16::from_be_bytes([hi, b])),
                None => carry = Some(b),
            }
        }
    }
    if let Some(hi) = carry {
        sum += u32::from(hi) << 8;
    }
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

fn be16(buf: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([buf[at], buf[at + 1]])
}
