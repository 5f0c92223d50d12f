use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_LABEL_LEN: usize = 63;
pub const MAX_NAME_LEN: usize = 253;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("empty label")]
    EmptyLabel,
    #[error("label of {0} bytes exceeds 63")]
    LabelTooLong(usize),
    #[error("name of {0} bytes exceeds 253")]
    NameTooLong(usize),
    #[error("invalid byte 0x{0:02x} in label")]
    InvalidByte(u8),
}

/// A DNS name in lowercase presentation form, without the trailing root dot.
///
/// The root name is the empty string. Suffix tests always respect label
/// boundaries, so `ample.com` is not considered to end with `example.com`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DomainName(String);

impl DomainName {
    pub fn root() -> Self {
        DomainName(String::new())
    }

    /// Builds a name from raw label bytes, lowercasing ASCII letters.
    pub fn from_labels<I, L>(labels: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = L>,
        L: AsRef<[u8]>,
    {
        let mut out = String::new();
        for label in labels {
            let label = label.as_ref();
            check_label(label)?;
            if !out.is_empty() {
                out.push('.');
            }
            out.extend(label.iter().map(|b| b.to_ascii_lowercase() as char));
        }
        if out.len() > MAX_NAME_LEN {
            return Err(NameError::NameTooLong(out.len()));
        }
        Ok(DomainName(out))
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.split('.').filter(|l| !l.is_empty())
    }

    pub fn label_count(&self) -> usize {
        self.labels().count()
    }

    /// Length of the uncompressed wire encoding, including the root byte.
    pub fn wire_len(&self) -> usize {
        if self.is_root() {
            1
        } else {
            self.0.len() + 2
        }
    }

    /// True iff `origin`'s labels are a suffix of this name's labels.
    /// Every name ends with the root; equal names qualify.
    pub fn ends_with(&self, origin: &DomainName) -> bool {
        if origin.is_root() || self == origin {
            return true;
        }
        let (me, suffix) = (self.as_bytes(), origin.as_bytes());
        me.len() > suffix.len() && me.ends_with(suffix) && me[me.len() - suffix.len() - 1] == b'.'
    }

    /// The name with its leftmost label removed; `None` for the root.
    pub fn parent(&self) -> Option<DomainName> {
        if self.is_root() {
            return None;
        }
        Some(match self.0.find('.') {
            Some(i) => DomainName(self.0[i + 1..].to_owned()),
            None => DomainName::root(),
        })
    }

    pub fn prepend(&self, label: &str) -> Result<DomainName, NameError> {
        let mut labels: Vec<&str> = vec![label];
        labels.extend(self.labels());
        DomainName::from_labels(labels)
    }
}

fn check_label(label: &[u8]) -> Result<(), NameError> {
    if label.is_empty() {
        return Err(NameError::EmptyLabel);
    }
    if label.len() > MAX_LABEL_LEN {
        return Err(NameError::LabelTooLong(label.len()));
    }
    match label.iter().find(|&&b| !b.is_ascii_graphic() || b == b'.') {
        Some(&b) => Err(NameError::InvalidByte(b)),
        None => Ok(()),
    }
}

impl FromStr for DomainName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_suffix('.').unwrap_or(s);
        if s.is_empty() {
            return Ok(DomainName::root());
        }
        DomainName::from_labels(s.split('.'))
    }
}

impl TryFrom<String> for DomainName {
    type Error = NameError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DomainName> for String {
    fn from(n: DomainName) -> String {
        n.0
    }
}

impl fmt::Display for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            f.write_str(".")
        } else {
            f.write_str(&self.0)
        }
    }
}

impl fmt::Debug for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DomainName({self})")
    }
}

/// Bailiwick test: `domain` lies at or under `origin`.
pub fn is_within_bailiwick(domain: &DomainName, origin: &DomainName) -> bool {
    domain.ends_with(origin)
}
