use std::collections::HashSet;

use super::species::Species;
use crate::error::{Error, Result};

/// The twenty standard amino acids, alphabetical by one-letter code.
pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";

pub fn is_standard_residue(b: u8) -> bool {
    AMINO_ACIDS.as_bytes().contains(&b)
}

/// One protein sequence from a FASTA file.
///
/// The header is `>id [species]`; the species part is optional and must
/// name one of the eight benchmark species when present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProteinRecord {
    pub id: String,
    pub species: Option<Species>,
    pub residues: String,
}

impl ProteinRecord {
    pub fn new(id: impl Into<String>, species: Option<Species>, residues: impl Into<String>) -> Self {
        ProteinRecord { id: id.into(), species, residues: residues.into() }
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// 0-based offsets of letters outside the standard alphabet.
    pub fn nonstandard_positions(&self) -> Vec<usize> {
        self.residues
            .bytes()
            .enumerate()
            .filter(|&(_, b)| !is_standard_residue(b))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_flagged(&self) -> bool {
        self.residues.bytes().any(|b| !is_standard_residue(b))
    }

    /// 1-based positions of every lysine.
    pub fn lysine_positions(&self) -> Vec<usize> {
        self.residues
            .bytes()
            .enumerate()
            .filter(|&(_, b)| b == b'K')
            .map(|(i, _)| i + 1)
            .collect()
    }
}

fn finish(
    out: &mut Vec<ProteinRecord>,
    seen: &mut HashSet<String>,
    pending: Option<(String, Option<Species>, String, usize)>,
) -> Result<()> {
    if let Some((id, species, residues, line)) = pending {
        if residues.is_empty() {
            return Err(Error::parse(line, format!("record {id:?} has no residues")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::parse(line, format!("duplicate id {id:?}")));
        }
        out.push(ProteinRecord { id, species, residues });
    }
    Ok(())
}

/// Parse FASTA text into protein records.
///
/// Sequence lines are concatenated and uppercased; internal whitespace is
/// dropped. Letters outside the standard alphabet are kept (see
/// [`ProteinRecord::is_flagged`]).
pub fn parse_fasta(text: &str) -> Result<Vec<ProteinRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut pending: Option<(String, Option<Species>, String, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            finish(&mut out, &mut seen, pending.take())?;
            let header = header.trim();
            let (id, rest) = match header.split_once(char::is_whitespace) {
                Some((id, rest)) => (id, rest.trim()),
                None => (header, ""),
            };
            if id.is_empty() {
                return Err(Error::parse(line_no, "empty record id"));
            }
            let species = if rest.is_empty() {
                None
            } else {
                Some(rest.parse::<Species>().map_err(|e| Error::parse(line_no, e.to_string()))?)
            };
            pending = Some((id.to_string(), species, String::new(), line_no));
        } else {
            let Some((_, _, residues, _)) = pending.as_mut() else {
                return Err(Error::parse(line_no, "sequence data before any header"));
            };
            residues.extend(line.chars().filter(|c| !c.is_whitespace()).map(|c| c.to_ascii_uppercase()));
        }
    }
    finish(&mut out, &mut seen, pending)?;
    if out.is_empty() {
        return Err(Error::data("empty FASTA input"));
    }
    Ok(out)
}

/// Render records as FASTA, wrapping sequence lines at 60 columns.
pub fn write_fasta(records: &[ProteinRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push('>');
        out.push_str(&r.id);
        if let Some(sp) = r.species {
            out.push(' ');
            out.push_str(sp.name());
        }
        out.push('\n');
        for chunk in r.residues.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("ascii residues"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_record() {
        let r = parse_fasta(">p1\nMKV").unwrap();
        assert_eq!(r, vec![ProteinRecord::new("p1", None, "MKV")]);
    }

    #[test]
    fn concatenates_lines() {
        let r = parse_fasta(">p1\nMK\nV\n>p2\nAAK").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].residues, "MKV");
        assert_eq!(r[1].residues, "AAK");
    }

    #[test]
    fn header_species_and_case() {
        let r = parse_fasta(">sp1 E. coli\n  mk v \r\n>sp2 Bacillus subtilis\nAK\n").unwrap();
        assert_eq!(r[0].species, Some(Species::EColi));
        assert_eq!(r[0].residues, "MKV");
        assert_eq!(r[1].species, Some(Species::BSubtilis));
    }

    #[test]
    fn flags_nonstandard_letters() {
        let r = parse_fasta(">p\nMKXBV").unwrap();
        assert!(r[0].is_flagged());
        assert_eq!(r[0].nonstandard_positions(), vec![2, 3]);
        assert_eq!(r[0].residues, "MKXBV");
    }

    #[test]
    fn errors() {
        assert!(parse_fasta("").is_err());
        assert!(parse_fasta("\n\n").is_err());
        assert!(matches!(parse_fasta("MKV\n>p1\nA"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_fasta(">p1\nA\n>p1\nK").is_err());
        assert!(parse_fasta(">p1 Homo sapiens\nA").is_err());
        assert!(parse_fasta(">p1\n>p2\nA").is_err());
    }

    fn record_strategy() -> impl Strategy<Value = (Option<usize>, String)> {
        (proptest::option::of(0usize..8), "[ACDEFGHIKLMNPQRSTVWYXBZ]{1,150}")
    }

    proptest! {
        #[test]
        fn fifty_record_roundtrip(recs in proptest::collection::vec(record_strategy(), 50)) {
            let records: Vec<ProteinRecord> = recs
                .into_iter()
                .enumerate()
                .map(|(i, (sp, seq))| ProteinRecord::new(format!("prot{i}"), sp.map(|s| Species::ALL[s]), seq))
                .collect();
            let text = write_fasta(&records);
            let parsed = parse_fasta(&text).unwrap();
            prop_assert_eq!(&parsed, &records);
            prop_assert_eq!(write_fasta(&parsed), text);
        }
    }
}
