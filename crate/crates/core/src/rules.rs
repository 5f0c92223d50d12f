//! The three detection predicates.
//!
//! * R1 counts responses per query name in a Count-Min Sketch over a
//!   tumbling window and flags a name once its estimate exceeds `tau`.
//! * R2 flags first IP fragments and nullifies every later fragment.
//! * R3 flags responses whose records fall outside the queried name's
//!   bailiwick.

use std::collections::HashSet;

use crate::dns::{is_within_bailiwick, DnsResponsePacket, DomainName, RecordType, Timestamp};
use crate::sketch::CountMinSketch;

/// Mutable state behind R1.
#[derive(Debug, Clone)]
pub struct DetectorState {
    cms: CountMinSketch,
    tau: u64,
    check_interval: u64,
    window_us: u64,
    count: u64,
    window_start: Option<Timestamp>,
    domain_map: HashSet<DomainName>,
}

impl DetectorState {
    /// `tau` and `check_interval` are packet counts, `window_us` the
    /// tumbling-window length in microseconds. All must be non-zero.
    pub fn new(cms: CountMinSketch, tau: u64, check_interval: u64, window_us: u64) -> Self {
        assert!(check_interval > 0 && window_us > 0, "check interval and window must be positive");
        DetectorState { cms, tau, check_interval, window_us, count: 0, window_start: None, domain_map: HashSet::new() }
    }

    pub fn cms(&self) -> &CountMinSketch {
        &self.cms
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn window_start(&self) -> Option<Timestamp> {
        self.window_start
    }

    pub fn is_flagged(&self, name: &DomainName) -> bool {
        self.domain_map.contains(name)
    }

    pub fn flagged_domains(&self) -> impl Iterator<Item = &DomainName> {
        self.domain_map.iter()
    }

    /// Clears all per-window state, keeping hash seeds.
    pub fn reset(&mut self) {
        self.cms.reset();
        self.count = 0;
        self.window_start = None;
        self.domain_map.clear();
    }
}

/// R1. Steps, in order: add the name to the sketch; a name already in the
/// domain map is flagged again straight away; on check packets
/// (`count mod N == 0`) a name whose estimate exceeds `tau` is recorded and
/// flagged; otherwise the counter advances and, once `W` has elapsed since
/// the window start, the sketch, counter and domain map are cleared and the
/// window restarts at this packet.
///
/// Flagged packets return before the counter advance and the window check,
/// so the window can only roll on a packet that is let through.
pub fn rule1(state: &mut DetectorState, qname: &DomainName, ts: Timestamp) -> bool {
    let start = *state.window_start.get_or_insert(ts);
    let key = qname.as_bytes();
    state.cms.add(key);
    if state.domain_map.contains(qname) {
        return true;
    }
    if state.count % state.check_interval == 0 && u64::from(state.cms.estimate(key)) > state.tau {
        state.domain_map.insert(qname.clone());
        return true;
    }
    state.count += 1;
    if ts.micros().saturating_sub(start.micros()) >= state.window_us {
        state.cms.reset();
        state.count = 0;
        state.domain_map.clear();
        state.window_start = Some(ts);
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FragmentCheck {
    /// First fragment: truncate it.
    pub flag: bool,
    /// Later fragment: discard it.
    pub drop: bool,
}

/// R2.
pub fn rule2(p: &DnsResponsePacket) -> FragmentCheck {
    match &p.fragment {
        Some(f) if f.is_first() => FragmentCheck { flag: true, drop: false },
        Some(f) if f.is_later() => FragmentCheck { flag: false, drop: true },
        _ => FragmentCheck { flag: false, drop: false },
    }
}

/// R3. Answer and additional owners must sit under the query name; the
/// query name must sit under every authority owner. Checks run section by
/// section and stop at the first violation. EDNS0 OPT pseudo-records carry
/// no owner name and are skipped.
pub fn rule3(p: &DnsResponsePacket) -> bool {
    let Some(msg) = &p.message else {
        return false;
    };
    let qname = &msg.question.qname;
    let answers_ok = msg.answers.iter().all(|r| is_within_bailiwick(&r.name, qname));
    let authority_ok = || msg.authority.iter().all(|r| is_within_bailiwick(qname, &r.name));
    let additional_ok =
        || msg.additional.iter().filter(|r| r.rtype != RecordType::OPT).all(|r| is_within_bailiwick(&r.name, qname));
    !(answers_ok && authority_ok() && additional_ok())
}
