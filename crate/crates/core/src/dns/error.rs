use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
    #[error("not a DNS response (QR=0)")]
    NotAResponse,
    #[error("not a UDP datagram (IP protocol {0})")]
    NotUdp(u8),
    #[error("unsupported IP version {0}")]
    UnsupportedIpVersion(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("packet has neither a DNS message nor fragment payload")]
    NoMessage,
    #[error("source and destination address families differ")]
    AddressFamilyMismatch,
    #[error("IPv6 fragments are not supported")]
    Ipv6Fragment,
    #[error("datagram of {0} bytes exceeds the IP length field")]
    TooLarge(usize),
}
