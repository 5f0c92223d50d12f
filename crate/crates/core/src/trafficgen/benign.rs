use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dns::{DnsMessage, DnsResponsePacket, DomainName, Question, RecordType, ResourceRecord, Timestamp};

/// Which sections a benign response fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseShape {
    AnswerOnly,
    AnswerAuthority,
    /// Negative answer: SOA in the authority section.
    NoAnswer,
    /// Answer, NS in authority and glue in additional.
    Full,
}

/// Observed share of each shape in resolver-bound traffic.
pub const SHAPE_MIX: [(ResponseShape, f64); 4] = [
    (ResponseShape::AnswerOnly, 0.46),
    (ResponseShape::AnswerAuthority, 0.26),
    (ResponseShape::NoAnswer, 0.22),
    (ResponseShape::Full, 0.06),
];

/// `count` shapes in exact [`SHAPE_MIX`] proportions (largest remainder),
/// shuffled.
pub fn shape_plan(count: usize, rng: &mut ChaCha8Rng) -> Vec<ResponseShape> {
    let quotas: Vec<f64> = SHAPE_MIX.iter().map(|(_, p)| p * count as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())));
    let short = count - alloc.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        alloc[i] += 1;
    }
    let mut plan: Vec<ResponseShape> =
        SHAPE_MIX.iter().zip(&alloc).flat_map(|((shape, _), &n)| std::iter::repeat(*shape).take(n)).collect();
    plan.shuffle(rng);
    plan
}

fn ttl(rng: &mut ChaCha8Rng) -> u32 {
    *[60, 300, 900, 3600, 86_400].choose(rng).expect("non-empty")
}

fn answer(rng: &mut ChaCha8Rng, qname: &DomainName, qtype: RecordType) -> ResourceRecord {
    if qtype == RecordType::AAAA {
        let addr = Ipv6Addr::new(0x2001, 0xdb8, rng.gen(), rng.gen(), 0, 0, 0, rng.gen_range(1..0xffff));
        ResourceRecord::aaaa(qname.clone(), ttl(rng), addr)
    } else {
        let addr = Ipv4Addr::new(192, 0, 2, rng.gen_range(1..255));
        ResourceRecord::a(qname.clone(), ttl(rng), addr)
    }
}

fn name_servers(qname: &DomainName) -> [DomainName; 2] {
    ["ns1", "ns2"].map(|l| qname.prepend(l).unwrap_or_else(|_| qname.clone()))
}

/// A legitimate, bailiwick-compliant response from an authoritative server
/// to the resolver.
pub fn benign_response(
    rng: &mut ChaCha8Rng,
    qname: &DomainName,
    qtype: RecordType,
    shape: ResponseShape,
    ts: Timestamp,
    resolver: IpAddr,
) -> DnsResponsePacket {
    let mut msg = DnsMessage::response(rng.gen(), Question::new(qname.clone(), qtype));
    let n_answers = rng.gen_range(1..=3);
    match shape {
        ResponseShape::AnswerOnly => {
            msg.answers.extend((0..n_answers).map(|_| answer(rng, qname, qtype)));
        }
        ResponseShape::AnswerAuthority => {
            msg.answers.extend((0..n_answers).map(|_| answer(rng, qname, qtype)));
            let t = ttl(rng);
            msg.authority.extend(name_servers(qname).iter().map(|ns| ResourceRecord::ns(qname.clone(), t, ns)));
        }
        ResponseShape::NoAnswer => {
            let [mname, _] = name_servers(qname);
            let rname = qname.prepend("hostmaster").unwrap_or_else(|_| qname.clone());
            msg.authority.push(ResourceRecord::soa(
                qname.clone(),
                ttl(rng),
                &mname,
                &rname,
                rng.gen(),
                7200,
                900,
                1_209_600,
                300,
            ));
        }
        ResponseShape::Full => {
            msg.answers.extend((0..n_answers).map(|_| answer(rng, qname, qtype)));
            let t = ttl(rng);
            for ns in name_servers(qname) {
                msg.authority.push(ResourceRecord::ns(qname.clone(), t, &ns));
                msg.additional.push(ResourceRecord::a(ns, t, Ipv4Addr::new(198, 51, 100, rng.gen_range(1..255))));
            }
        }
    }
    let server = IpAddr::V4(Ipv4Addr::new(203, 0, 113, rng.gen_range(1..255)));
    let port = rng.gen_range(1024..=u16::MAX);
    DnsResponsePacket::udp(ts, (server, 53), (resolver, port), msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::rule3;
    use rand::SeedableRng;

    #[test]
    fn plan_has_exact_proportions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = shape_plan(10_000, &mut rng);
        for (shape, p) in SHAPE_MIX {
            let n = plan.iter().filter(|s| **s == shape).count();
            assert_eq!(n as f64, p * 10_000.0);
        }
        assert_eq!(shape_plan(7, &mut rng).len(), 7);
        assert!(shape_plan(0, &mut rng).is_empty());
    }

    #[test]
    fn every_shape_is_in_bailiwick() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q: DomainName = "shop.example.org".parse().unwrap();
        let resolver: IpAddr = "10.0.0.53".parse().unwrap();
        for (shape, _) in SHAPE_MIX {
            for qtype in [RecordType::A, RecordType::AAAA] {
                let p = benign_response(&mut rng, &q, qtype, shape, Timestamp(0), resolver);
                assert!(!rule3(&p), "{shape:?} flagged");
                let m = p.message.as_ref().unwrap();
                match shape {
                    ResponseShape::AnswerOnly => assert!(m.authority.is_empty() && !m.answers.is_empty()),
                    ResponseShape::AnswerAuthority => assert!(m.additional.is_empty() && !m.authority.is_empty()),
                    ResponseShape::NoAnswer => assert!(m.answers.is_empty() && m.authority.len() == 1),
                    ResponseShape::Full => assert!(!m.additional.is_empty()),
                }
            }
        }
    }
}
