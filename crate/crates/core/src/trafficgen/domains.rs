use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dns::DomainName;

use super::GenError;

const TLDS: &[&str] = &["com", "net", "org", "io", "de", "uk", "co", "info", "app", "dev"];
const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

/// `count` distinct second-level names with random 5-12 character labels.
pub fn synthetic_domains(count: usize, seed: u64) -> Vec<DomainName> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.gen_range(5..=12);
        // a leading letter keeps names looking like registrable labels
        let mut label = String::with_capacity(len);
        label.push(ALPHABET[rng.gen_range(0..26)] as char);
        for _ in 1..len {
            label.push(*ALPHABET.choose(&mut rng).expect("non-empty alphabet") as char);
        }
        let tld = TLDS.choose(&mut rng).expect("non-empty tld list");
        let name: DomainName = format!("{label}.{tld}").parse().expect("generated names are valid");
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

/// Parses a popularity list: one domain per line, optionally preceded by a
/// rank and a comma (`1,google.com`). Blank lines and `#` comments are
/// skipped; duplicates keep their first position.
pub fn parse_domain_list(text: &str) -> Result<Vec<DomainName>, GenError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        let name: DomainName =
            field.parse().map_err(|e| GenError::BadDomainList { line: i + 1, reason: format!("{field:?}: {e}") })?;
        if name.is_root() {
            return Err(GenError::BadDomainList { line: i + 1, reason: "root name".into() });
        }
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    if out.is_empty() {
        return Err(GenError::MissingDomainList);
    }
    Ok(out)
}

pub fn load_domain_list(path: &Path) -> Result<Vec<DomainName>, GenError> {
    let text = std::fs::read_to_string(path).map_err(|e| GenError::Io { path: path.to_owned(), source: e })?;
    parse_domain_list(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_names_are_distinct_and_seeded() {
        let a = synthetic_domains(2000, 1);
        assert_eq!(a.len(), 2000);
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 2000);
        assert_eq!(a, synthetic_domains(2000, 1));
        assert_ne!(a, synthetic_domains(2000, 2));
        assert!(a.iter().all(|d| d.label_count() == 2));
    }

    #[test]
    fn list_formats() {
        let text = "# header\n1,Google.com\n2,example.org.\n\nplain.net\nexample.org\n";
        let names = parse_domain_list(text).unwrap();
        let s: Vec<&str> = names.iter().map(|d| d.as_str()).collect();
        assert_eq!(s, ["google.com", "example.org", "plain.net"]);
    }

    #[test]
    fn list_errors() {
        assert!(matches!(parse_domain_list("# nothing\n"), Err(GenError::MissingDomainList)));
        assert!(matches!(parse_domain_list("1,bad..name\n"), Err(GenError::BadDomainList { line: 1, .. })));
        assert!(load_domain_list(Path::new("/nonexistent/list.csv")).is_err());
    }
}
