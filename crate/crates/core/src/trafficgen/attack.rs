use std::net::{IpAddr, Ipv4Addr};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dns::{
    decode_packet, ipv4_datagram, udp_datagram, wire::encode_message, DnsMessage, DnsResponsePacket, DomainName,
    Question, RecordType, ResourceRecord, Timestamp,
};
use crate::engine::Label;

use super::{GenError, OobVariant, ScenarioSpec, StreamBuilder};

const IPV4_MF: u16 = 0x2000;
/// IP payload bytes carried by the first fragment (1500-byte MTU).
const FIRST_FRAGMENT_PAYLOAD: usize = 1480;
/// Enough A records to push the response past one fragment.
const FRAGMENTED_ANSWERS: u8 = 64;
const AUTHENTIC_DELAY_US: u64 = 5_000;

struct Race {
    resolver_port: u16,
    txid: u16,
}

fn race(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> (Race, DnsResponsePacket) {
    let r = Race { resolver_port: rng.gen_range(1024..=u16::MAX), txid: rng.gen() };
    let q = DnsMessage::query(r.txid, Question::new(spec.attack_domain.clone(), RecordType::A));
    let query = DnsResponsePacket::udp(
        spec.start,
        (IpAddr::V4(spec.resolver_ip), r.resolver_port),
        (IpAddr::V4(spec.auth_ip), 53),
        q,
    );
    (r, query)
}

fn reply(spec: &ScenarioSpec, r: &Race, msg: DnsMessage, ts: Timestamp) -> DnsResponsePacket {
    DnsResponsePacket::udp(ts, (IpAddr::V4(spec.auth_ip), 53), (IpAddr::V4(spec.resolver_ip), r.resolver_port), msg)
}

/// Offset of forged packet `i` of `n`, spread evenly over the attack window
/// after a 100 us head start.
fn attack_offset(spec: &ScenarioSpec, i: usize, n: usize) -> u64 {
    100 + (i as u64 * spec.attack_window_ms * 1_000) / n.max(1) as u64
}

fn authentic_offset(spec: &ScenarioSpec) -> u64 {
    spec.attack_window_ms * 1_000 + AUTHENTIC_DELAY_US
}

/// Spoofed responses cycling through every transaction id except the
/// genuine one, then the genuine response.
pub(super) fn txid_flood(spec: &ScenarioSpec, rng: &mut ChaCha8Rng, out: &mut StreamBuilder) -> DnsResponsePacket {
    let (r, query) = race(spec, rng);
    let question = Question::new(spec.attack_domain.clone(), RecordType::A);
    let mut forged = DnsMessage::response(0, question.clone());
    forged.answers.push(ResourceRecord::a(spec.attack_domain.clone(), 604_800, spec.attacker_ip));
    for i in 0..spec.attack_count {
        forged.txid = r.txid.wrapping_add(1).wrapping_add(i as u16);
        let ts = Timestamp(spec.start.micros() + attack_offset(spec, i, spec.attack_count));
        out.push(reply(spec, &r, forged.clone(), ts), Label::Attack);
    }
    let mut genuine = DnsMessage::response(r.txid, question);
    genuine.answers.push(ResourceRecord::a(spec.attack_domain.clone(), 3_600, Ipv4Addr::new(192, 0, 2, 10)));
    let ts = Timestamp(spec.start.micros() + authentic_offset(spec));
    out.push(reply(spec, &r, genuine, ts), Label::Authentic);
    query
}

fn fragmented_answer(spec: &ScenarioSpec, txid: u16, addr: impl Fn(u8) -> Ipv4Addr) -> DnsMessage {
    let mut m = DnsMessage::response(txid, Question::new(spec.attack_domain.clone(), RecordType::A));
    for i in 0..FRAGMENTED_ANSWERS {
        m.answers.push(ResourceRecord::a(spec.attack_domain.clone(), 3_600, addr(i)));
    }
    m
}

fn fragment(spec: &ScenarioSpec, ipid: u16, flags_off: u16, payload: &[u8], ts: Timestamp) -> DnsResponsePacket {
    let bytes = ipv4_datagram(spec.auth_ip, spec.resolver_ip, ipid, flags_off, payload)
        .expect("fragment fits in an IPv4 datagram");
    decode_packet(&bytes, ts).expect("generated fragment decodes")
}

/// Forged second fragments with consecutive IPIDs starting at the genuine
/// response's, followed by the genuine two-fragment response.
pub(super) fn fragment_injection(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    out: &mut StreamBuilder,
) -> Result<DnsResponsePacket, GenError> {
    let (r, query) = race(spec, rng);
    let ipid: u16 = rng.gen();
    let (src, dst) = (IpAddr::V4(spec.auth_ip), IpAddr::V4(spec.resolver_ip));
    let udp = |m: &DnsMessage| {
        udp_datagram(src, dst, 53, r.resolver_port, &encode_message(m))
            .map_err(|e| GenError::InvalidSpec(format!("fragmented response: {e}")))
    };
    let genuine = udp(&fragmented_answer(spec, r.txid, |i| Ipv4Addr::new(192, 0, 2, i)))?;
    let poisoned = udp(&fragmented_answer(spec, r.txid, |_| spec.attacker_ip))?;
    debug_assert_eq!(genuine.len(), poisoned.len());
    let split = FIRST_FRAGMENT_PAYLOAD;
    let tail_offset = (split / 8) as u16;

    for i in 0..spec.attack_count {
        let ts = Timestamp(spec.start.micros() + attack_offset(spec, i, spec.attack_count));
        let p = fragment(spec, ipid.wrapping_add(i as u16), tail_offset, &poisoned[split..], ts);
        out.push(p, Label::Attack);
    }
    let label = if spec.attack_count > 0 { Label::Authentic } else { Label::Benign };
    let ts = spec.start.micros() + authentic_offset(spec);
    out.push(fragment(spec, ipid, IPV4_MF, &genuine[..split], Timestamp(ts)), label);
    out.push(fragment(spec, ipid, tail_offset, &genuine[split..], Timestamp(ts + 20)), label);
    Ok(query)
}

/// One response for the attacked name carrying a record for a foreign name.
pub(super) fn out_of_bailiwick(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    out: &mut StreamBuilder,
) -> DnsResponsePacket {
    let (r, query) = race(spec, rng);
    let mut m = DnsMessage::response(r.txid, Question::new(spec.attack_domain.clone(), RecordType::A));
    m.answers.push(ResourceRecord::a(spec.attack_domain.clone(), 3_600, Ipv4Addr::new(192, 0, 2, 20)));
    match spec.oob_variant {
        OobVariant::AdditionalRecord => {
            m.additional.push(ResourceRecord::a(spec.oob_target.clone(), 604_800, spec.attacker_ip));
        }
        OobVariant::TldDelegation => {
            let tld = tld_of(&spec.oob_target);
            let host = spec.oob_target.prepend("ns").unwrap_or_else(|_| spec.oob_target.clone());
            m.authority.push(ResourceRecord::ns(tld, 172_800, &host));
            m.additional.push(ResourceRecord::a(host, 172_800, spec.attacker_ip));
        }
        OobVariant::Compliant => {}
    }
    let label = if spec.oob_variant == OobVariant::Compliant { Label::Benign } else { Label::Attack };
    let window = spec.noise_window_ms * 1_000;
    let ts = Timestamp(spec.start.micros() + if spec.noise_count > 0 { window / 2 } else { 1_000 });
    for _ in 0..spec.attack_count {
        out.push(reply(spec, &r, m.clone(), ts), label);
    }
    query
}

fn tld_of(name: &DomainName) -> DomainName {
    let mut n = name.clone();
    while let Some(parent) = n.parent() {
        if parent.is_root() {
            break;
        }
        n = parent;
    }
    n
}
