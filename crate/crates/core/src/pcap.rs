//! Classic libpcap capture files: reading resolver-bound DNS responses out
//! of a capture and writing packet streams back.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::IpAddr;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dns::{decode_response, encode_response, DecodeError, DnsResponsePacket, EncodeError, Timestamp};

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
const SNAPLEN: u32 = 65_535;

pub const LINKTYPE_ETHERNET: u32 = 1;
pub const LINKTYPE_RAW: u32 = 101;
pub const LINKTYPE_LINUX_SLL: u32 = 113;
pub const LINKTYPE_IPV4: u32 = 228;
pub const LINKTYPE_IPV6: u32 = 229;

const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_IPV6: u16 = 0x86dd;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88a8;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("bad capture header: {0}")]
    BadCaptureHeader(String),
    #[error("unsupported link type {0}")]
    UnsupportedLinkType(u32),
    #[error("cannot encode packet {index}: {source}")]
    Encode { index: usize, source: EncodeError },
}

/// One captured frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub timestamp: Timestamp,
    pub data: Vec<u8>,
    pub orig_len: u32,
}

pub struct PcapReader<R> {
    inner: R,
    big_endian: bool,
    nanos: bool,
    link_type: u32,
    truncated: bool,
}

impl<R: Read> PcapReader<R> {
    pub fn new(mut inner: R) -> Result<Self, PcapError> {
        let mut hdr = [0u8; 24];
        read_full(&mut inner, &mut hdr)
            .map_err(|e| PcapError::BadCaptureHeader(format!("header unreadable: {e}")))?
            .then_some(())
            .ok_or_else(|| PcapError::BadCaptureHeader("file shorter than the 24-byte header".into()))?;
        let magic_le = u32::from_le_bytes(hdr[..4].try_into().unwrap());
        let (big_endian, nanos) = match magic_le {
            MAGIC_MICROS => (false, false),
            MAGIC_NANOS => (false, true),
            m if m.swap_bytes() == MAGIC_MICROS => (true, false),
            m if m.swap_bytes() == MAGIC_NANOS => (true, true),
            m => return Err(PcapError::BadCaptureHeader(format!("unknown magic {m:#010x}"))),
        };
        let field = |at: usize| {
            let b: [u8; 4] = hdr[at..at + 4].try_into().unwrap();
            if big_endian {
                u32::from_be_bytes(b)
            } else {
                u32::from_le_bytes(b)
            }
        };
        let link_type = field(20) & 0x0fff_ffff;
        if !matches!(link_type, LINKTYPE_ETHERNET | LINKTYPE_RAW | LINKTYPE_LINUX_SLL | LINKTYPE_IPV4 | LINKTYPE_IPV6) {
            return Err(PcapError::UnsupportedLinkType(link_type));
        }
        Ok(PcapReader { inner, big_endian, nanos, link_type, truncated: false })
    }

    pub fn link_type(&self) -> u32 {
        self.link_type
    }

    /// Whether reading stopped at a record cut short by end of file.
    pub fn hit_truncated_record(&self) -> bool {
        self.truncated
    }

    fn u32_at(&self, b: &[u8], at: usize) -> u32 {
        let b: [u8; 4] = b[at..at + 4].try_into().unwrap();
        if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        }
    }

    /// The next frame, or `None` at end of file. A record cut short by end
    /// of file ends the stream and sets [`Self::hit_truncated_record`].
    pub fn next_frame(&mut self) -> Result<Option<Frame>, PcapError> {
        if self.truncated {
            return Ok(None);
        }
        let mut rec = [0u8; 16];
        let mut got = 0;
        while got < rec.len() {
            match self.inner.read(&mut rec[got..])? {
                0 if got == 0 => return Ok(None),
                0 => {
                    self.truncated = true;
                    return Ok(None);
                }
                n => got += n,
            }
        }
        let secs = u64::from(self.u32_at(&rec, 0));
        let frac = u64::from(self.u32_at(&rec, 4));
        let incl = self.u32_at(&rec, 8) as usize;
        let orig_len = self.u32_at(&rec, 12);
        if incl > 16 * 1024 * 1024 {
            return Err(PcapError::BadCaptureHeader(format!("record length {incl} is implausible")));
        }
        let mut data = vec![0u8; incl];
        if !read_full(&mut self.inner, &mut data)? {
            self.truncated = true;
            return Ok(None);
        }
        let micros = if self.nanos { frac / 1_000 } else { frac };
        Ok(Some(Frame { timestamp: Timestamp(secs * 1_000_000 + micros), data, orig_len }))
    }

    /// Strips the link-layer header; `None` for non-IP frames.
    pub fn ip_payload<'a>(&self, data: &'a [u8]) -> Option<&'a [u8]> {
        match self.link_type {
            LINKTYPE_ETHERNET => {
                let mut at = 12;
                let mut ethertype = be16(data, at)?;
                while matches!(ethertype, ETHERTYPE_VLAN | ETHERTYPE_QINQ) {
                    at += 4;
                    ethertype = be16(data, at)?;
                }
                matches!(ethertype, ETHERTYPE_IPV4 | ETHERTYPE_IPV6).then(|| data.get(at + 2..)).flatten()
            }
            LINKTYPE_LINUX_SLL => {
                let proto = be16(data, 14)?;
                matches!(proto, ETHERTYPE_IPV4 | ETHERTYPE_IPV6).then(|| data.get(16..)).flatten()
            }
            _ => Some(data),
        }
    }
}

impl<R: Read> Iterator for PcapReader<R> {
    type Item = Result<Frame, PcapError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Fills `buf` completely; `Ok(false)` if the input ended first.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => return Ok(false),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

fn be16(b: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_be_bytes([*b.get(at)?, *b.get(at + 1)?]))
}

/// Writes little-endian, microsecond, Ethernet-framed captures.
pub struct PcapWriter<W: Write> {
    inner: W,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W) -> io::Result<Self> {
        let mut hdr = Vec::with_capacity(24);
        hdr.extend_from_slice(&MAGIC_MICROS.to_le_bytes());
        hdr.extend_from_slice(&2u16.to_le_bytes());
        hdr.extend_from_slice(&4u16.to_le_bytes());
        hdr.extend_from_slice(&0i32.to_le_bytes());
        hdr.extend_from_slice(&0u32.to_le_bytes());
        hdr.extend_from_slice(&SNAPLEN.to_le_bytes());
        hdr.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());
        inner.write_all(&hdr)?;
        Ok(PcapWriter { inner })
    }

    /// Writes one IP datagram wrapped in an Ethernet header.
    pub fn write_ip(&mut self, ts: Timestamp, ip: &[u8]) -> io::Result<()> {
        let ethertype = if ip.first().is_some_and(|b| b >> 4 == 6) { ETHERTYPE_IPV6 } else { ETHERTYPE_IPV4 };
        let len = (14 + ip.len()) as u32;
        let secs = u32::try_from(ts.micros() / 1_000_000)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "timestamp beyond 2106"))?;
        let mut rec = Vec::with_capacity(16 + len as usize);
        rec.extend_from_slice(&secs.to_le_bytes());
        rec.extend_from_slice(&((ts.micros() % 1_000_000) as u32).to_le_bytes());
        rec.extend_from_slice(&len.to_le_bytes());
        rec.extend_from_slice(&len.to_le_bytes());
        rec.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01, 0x02, 0, 0, 0, 0, 0x02]);
        rec.extend_from_slice(&ethertype.to_be_bytes());
        rec.extend_from_slice(ip);
        self.inner.write_all(&rec)
    }

    pub fn write_packet(&mut self, p: &DnsResponsePacket) -> Result<(), PcapError> {
        let bytes = encode_response(p).map_err(|source| PcapError::Encode { index: 0, source })?;
        Ok(self.write_ip(p.timestamp, &bytes)?)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// What happened to the frames of a capture.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureStats {
    pub frames: usize,
    pub kept: usize,
    pub malformed: usize,
    /// DNS queries toward the resolver.
    pub queries: usize,
    /// Non-IP, non-UDP or non-DNS frames, and traffic for other hosts.
    pub other: usize,
    /// Whether the file ended in the middle of a record.
    pub truncated_tail: bool,
}

#[derive(Debug, Clone)]
pub struct Capture {
    pub packets: Vec<DnsResponsePacket>,
    pub stats: CaptureStats,
}

pub fn read_capture(path: &Path, resolver_ip: IpAddr) -> Result<Capture, PcapError> {
    read_capture_from(BufReader::new(File::open(path)?), resolver_ip)
}

/// Keeps DNS responses from port 53 addressed to `resolver_ip`, together
/// with their fragments: the first fragment of such a response and every
/// non-first fragment toward the resolver. Output is stably sorted by
/// timestamp.
pub fn read_capture_from<R: Read>(input: R, resolver_ip: IpAddr) -> Result<Capture, PcapError> {
    let mut reader = PcapReader::new(input)?;
    let mut stats = CaptureStats::default();
    let mut packets = Vec::new();
    while let Some(frame) = reader.next_frame()? {
        stats.frames += 1;
        let Some(ip) = reader.ip_payload(&frame.data) else {
            stats.other += 1;
            continue;
        };
        if destination(ip).is_some_and(|d| d != resolver_ip) {
            stats.other += 1;
            continue;
        }
        let p = match decode_response(ip, frame.timestamp) {
            Ok(p) => p,
            Err(DecodeError::NotAResponse) => {
                stats.queries += 1;
                continue;
            }
            Err(DecodeError::NotUdp(_)) | Err(DecodeError::UnsupportedIpVersion(_)) => {
                stats.other += 1;
                continue;
            }
            Err(DecodeError::Malformed(_)) => {
                stats.malformed += 1;
                continue;
            }
        };
        let keep = match &p.fragment {
            Some(f) if f.is_later() => true,
            _ => p.src_port == 53,
        };
        if keep {
            packets.push(p);
        } else {
            stats.other += 1;
        }
    }
    stats.truncated_tail = reader.hit_truncated_record();
    packets.sort_by_key(|p| p.timestamp);
    stats.kept = packets.len();
    Ok(Capture { packets, stats })
}

fn destination(ip: &[u8]) -> Option<IpAddr> {
    match ip.first()? >> 4 {
        4 => {
            let b: [u8; 4] = ip.get(16..20)?.try_into().ok()?;
            Some(IpAddr::from(b))
        }
        6 => {
            let b: [u8; 16] = ip.get(24..40)?.try_into().ok()?;
            Some(IpAddr::from(b))
        }
        _ => None,
    }
}

/// Writes `packets` in order.
pub fn write_capture_to<'p, W, I>(out: W, packets: I) -> Result<W, PcapError>
where
    W: Write,
    I: IntoIterator<Item = &'p DnsResponsePacket>,
{
    let mut w = PcapWriter::new(out)?;
    for (index, p) in packets.into_iter().enumerate() {
        let bytes = encode_response(p).map_err(|source| PcapError::Encode { index, source })?;
        w.write_ip(p.timestamp, &bytes)?;
    }
    w.flush()?;
    Ok(w.into_inner())
}

pub fn write_capture<'p, I>(path: &Path, packets: I) -> Result<(), PcapError>
where
    I: IntoIterator<Item = &'p DnsResponsePacket>,
{
    let out = write_capture_to(BufWriter::new(File::create(path)?), packets)?;
    out.into_inner().map_err(|e| PcapError::Io(e.into_error()))?.sync_all()?;
    Ok(())
}
