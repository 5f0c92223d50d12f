//! Typed model of DNS responses and their IP/UDP framing.

mod codec;
mod error;
mod name;
mod packet;
mod record;
pub mod wire;

pub use codec::{decode_packet, decode_response, encode_response, internet_checksum};
pub(crate) use codec::{ipv4_datagram, udp_datagram};
pub use error::{DecodeError, EncodeError};
pub use name::{is_within_bailiwick, DomainName, NameError};
pub use packet::{flags, Action, DnsMessage, DnsResponsePacket, FragmentInfo, Question, RuleId, Timestamp, Verdict};
pub use record::{RecordType, ResourceRecord, CLASS_IN};
