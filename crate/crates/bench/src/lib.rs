//! Shared fixtures for the criterion benches.

use tcguard::{generate, DnsResponsePacket, LabeledStream, ScenarioKind, ScenarioSpec};

/// Default spoofed-flood stream (65,535 forged replies plus the real one).
pub fn flood_stream() -> LabeledStream {
    generate(&ScenarioSpec::new(ScenarioKind::SAttack, 1)).expect("default scenario is valid")
}

/// Interleaved flood with benign noise.
pub fn interleaved_stream() -> LabeledStream {
    generate(&ScenarioSpec::new(ScenarioKind::Interleaved, 1)).expect("default scenario is valid")
}

/// Encoded IP datagrams for a slice of packets.
pub fn encoded(packets: &[DnsResponsePacket]) -> Vec<Vec<u8>> {
    packets.iter().map(|p| tcguard::dns::encode_response(p).expect("generated packets encode")).collect()
}

/// `n` distinct keys of the form `k<i>.example`.
pub fn keys(n: usize) -> Vec<Vec<u8>> {
    (0..n).map(|i| format!("k{i}.example").into_bytes()).collect()
}
