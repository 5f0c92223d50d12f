//! RFC 1035 message encoding. Compression pointers are followed on decode
//! and never emitted on encode.

use super::error::DecodeError;
use super::name::DomainName;
use super::packet::{DnsMessage, Question};
use super::record::{write_name, RecordType, ResourceRecord};

const HEADER_LEN: usize = 12;
const MAX_WIRE_NAME: usize = 255;

pub fn encode_message(msg: &DnsMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(msg.wire_len());
    out.extend_from_slice(&msg.txid.to_be_bytes());
    out.extend_from_slice(&msg.flags.to_be_bytes());
    for count in [1, msg.answers.len(), msg.authority.len(), msg.additional.len()] {
        out.extend_from_slice(&(count as u16).to_be_bytes());
    }
    write_name(&mut out, &msg.question.qname);
    out.extend_from_slice(&msg.question.qtype.0.to_be_bytes());
    out.extend_from_slice(&msg.question.qclass.to_be_bytes());
    for rr in msg.records() {
        write_name(&mut out, &rr.name);
        out.extend_from_slice(&rr.rtype.0.to_be_bytes());
        out.extend_from_slice(&rr.class.to_be_bytes());
        out.extend_from_slice(&rr.ttl.to_be_bytes());
        out.extend_from_slice(&(rr.rdata.len() as u16).to_be_bytes());
        out.extend_from_slice(&rr.rdata);
    }
    out
}

/// Decodes a DNS message.
///
/// With `partial` set (first IP fragments), the header and question must be
/// intact but record parsing stops quietly at the first record that runs
/// past the end of the buffer.
pub fn decode_message(buf: &[u8], partial: bool) -> Result<DnsMessage, DecodeError> {
    if buf.len() < HEADER_LEN {
        return Err(DecodeError::Malformed("truncated DNS header"));
    }
    let txid = be16(buf, 0);
    let flags = be16(buf, 2);
    let counts = [be16(buf, 4), be16(buf, 6), be16(buf, 8), be16(buf, 10)];
    if counts[0] != 1 {
        return Err(DecodeError::Malformed("expected exactly one question"));
    }
    let mut reader = Reader { msg: buf, pos: HEADER_LEN };
    let qname = reader.name()?;
    let qtype = RecordType(reader.u16()?);
    let qclass = reader.u16()?;
    let mut msg = DnsMessage {
        txid,
        flags,
        question: Question { qname, qtype, qclass },
        answers: Vec::new(),
        authority: Vec::new(),
        additional: Vec::new(),
    };
    for (section, &count) in counts[1..].iter().enumerate() {
        for _ in 0..count {
            let rr = match reader.record() {
                Ok(rr) => rr,
                Err(_) if partial => return Ok(msg),
                Err(e) => return Err(e),
            };
            match section {
                0 => msg.answers.push(rr),
                1 => msg.authority.push(rr),
                _ => msg.additional.push(rr),
            }
        }
    }
    Ok(msg)
}

/// Reads just the header and question, for fragments whose records are cut.
pub fn decode_question(buf: &[u8]) -> Result<(u16, u16, Question), DecodeError> {
    if buf.len() < HEADER_LEN {
        return Err(DecodeError::Malformed("truncated DNS header"));
    }
    let mut reader = Reader { msg: buf, pos: HEADER_LEN };
    let qname = reader.name()?;
    let qtype = RecordType(reader.u16()?);
    let qclass = reader.u16()?;
    Ok((be16(buf, 0), be16(buf, 2), Question { qname, qtype, qclass }))
}

fn be16(buf: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([buf[at], buf[at + 1]])
}

struct Reader<'a> {
    msg: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.msg.len());
        let end = end.ok_or(DecodeError::Malformed("record runs past end of message"))?;
        let out = &self.msg[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn name(&mut self) -> Result<DomainName, DecodeError> {
        let (name, next) = read_name(self.msg, self.pos)?;
        self.pos = next;
        Ok(name)
    }

    fn record(&mut self) -> Result<ResourceRecord, DecodeError> {
        let name = self.name()?;
        let rtype = RecordType(self.u16()?);
        let class = self.u16()?;
        let ttl = self.u32()?;
        let rdlen = self.u16()? as usize;
        let start = self.pos;
        self.take(rdlen)?;
        let rdata = expand_rdata(self.msg, rtype, start, rdlen)?;
        Ok(ResourceRecord { name, rtype, class, ttl, rdata })
    }
}

/// Reads a possibly compressed name at `pos`. Returns the name and the
/// offset just past it in the original byte stream.
///
/// Pointers must point strictly backwards, which rules out loops.
fn read_name(msg: &[u8], mut pos: usize) -> Result<(DomainName, usize), DecodeError> {
    let mut labels: Vec<&[u8]> = Vec::new();
    let mut wire_len = 1;
    let mut resume = None;
    loop {
        let len = *msg.get(pos).ok_or(DecodeError::Malformed("name runs past end of message"))?;
        match len & 0xC0 {
            0x00 if len == 0 => {
                pos += 1;
                break;
            }
            0x00 => {
                let len = len as usize;
                let label =
                    msg.get(pos + 1..pos + 1 + len).ok_or(DecodeError::Malformed("label runs past end of message"))?;
                wire_len += len + 1;
                if wire_len > MAX_WIRE_NAME {
                    return Err(DecodeError::Malformed("name exceeds 255 bytes"));
                }
                labels.push(label);
                pos += 1 + len;
            }
            0xC0 => {
                let lo = *msg.get(pos + 1).ok_or(DecodeError::Malformed("truncated compression pointer"))?;
                let target = (((len & 0x3F) as usize) << 8) | lo as usize;
                if target >= pos {
                    return Err(DecodeError::Malformed("compression pointer loop"));
                }
                resume.get_or_insert(pos + 2);
                pos = target;
            }
            _ => return Err(DecodeError::Malformed("reserved label type")),
        }
    }
    let name = DomainName::from_labels(labels).map_err(|_| DecodeError::Malformed("invalid label"))?;
    Ok((name, resume.unwrap_or(pos)))
}

fn expand_rdata(msg: &[u8], rtype: RecordType, start: usize, len: usize) -> Result<Vec<u8>, DecodeError> {
    let end = start + len;
    let raw = &msg[start..end];
    let mut out = Vec::with_capacity(len);
    let mut pos = start;
    let name = |out: &mut Vec<u8>, pos: &mut usize| -> Result<(), DecodeError> {
        if *pos >= end {
            return Err(DecodeError::Malformed("rdata too short"));
        }
        let (n, next) = read_name(msg, *pos)?;
        write_name(out, &n);
        *pos = next;
        Ok(())
    };
    match rtype {
        RecordType::A if len != 4 => return Err(DecodeError::Malformed("A rdata is not 4 bytes")),
        RecordType::AAAA if len != 16 => return Err(DecodeError::Malformed("AAAA rdata is not 16 bytes")),
        RecordType::NS | RecordType::CNAME | RecordType::PTR => name(&mut out, &mut pos)?,
        RecordType::MX => {
            out.extend_from_slice(raw.get(..2).ok_or(DecodeError::Malformed("rdata too short"))?);
            pos += 2;
            name(&mut out, &mut pos)?;
        }
        RecordType::SOA => {
            name(&mut out, &mut pos)?;
            name(&mut out, &mut pos)?;
            out.extend_from_slice(msg.get(pos..pos + 20).ok_or(DecodeError::Malformed("rdata too short"))?);
            pos += 20;
        }
        _ => return Ok(raw.to_vec()),
    }
    if pos != end {
        return Err(DecodeError::Malformed("rdata length mismatch"));
    }
    Ok(out)
}
