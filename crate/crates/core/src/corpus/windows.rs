use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::fasta::ProteinRecord;
use super::species::Species;
use crate::error::{Error, Result};

/// Window length used throughout the benchmark.
pub const WINDOW_LEN: usize = 41;
pub const PAD: u8 = b'X';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// Not acetylated (non-K-Ace).
    Negative,
    /// Acetylated lysine (K-Ace).
    Positive,
}

impl Label {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn as_u8(self) -> u8 {
        self.is_positive() as u8
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_positive() { "1" } else { "0" })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "positive" | "pos" | "k-ace" | "kace" | "true" | "+" => Ok(Label::Positive),
            "0" | "negative" | "neg" | "non-k-ace" | "nonkace" | "false" | "-" => Ok(Label::Negative),
            other => Err(Error::data(format!("unknown label {other:?}"))),
        }
    }
}

/// A lysine site annotation (1-based position).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SiteAnnotation {
    pub protein_id: String,
    pub position: usize,
    pub label: Label,
}

impl SiteAnnotation {
    pub fn new(protein_id: impl Into<String>, position: usize, label: Label) -> Self {
        SiteAnnotation { protein_id: protein_id.into(), position, label }
    }
}

/// Where a window came from: protein id and 1-based site position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Origin {
    pub protein_id: String,
    pub position: usize,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.protein_id, self.position)
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (id, pos) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::data(format!("origin {s:?} is not `protein:position`")))?;
        let position = pos.parse().map_err(|_| Error::data(format!("bad origin position in {s:?}")))?;
        if id.is_empty() {
            return Err(Error::data(format!("origin {s:?} has an empty protein id")));
        }
        Ok(Origin { protein_id: id.to_string(), position })
    }
}

/// A fixed-length fragment centred on a lysine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeptideWindow {
    pub residues: String,
    pub label: Label,
    pub species: Species,
    pub origin: Origin,
}

impl PeptideWindow {
    /// Validate and build a window of any odd length.
    pub fn new(residues: impl Into<String>, label: Label, species: Species, origin: Origin) -> Result<Self> {
        let residues = residues.into();
        let bytes = residues.as_bytes();
        if bytes.len() % 2 == 0 {
            return Err(Error::data(format!("window for {origin} has even length {}", bytes.len())));
        }
        if bytes[bytes.len() / 2] != b'K' {
            return Err(Error::data(format!("window for {origin} is not centred on K")));
        }
        Ok(PeptideWindow { residues, label, species, origin })
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn center(&self) -> u8 {
        self.residues.as_bytes()[self.residues.len() / 2]
    }

    /// (leading, trailing) pad run lengths.
    pub fn padding(&self) -> (usize, usize) {
        let b = self.residues.as_bytes();
        let lead = b.iter().take_while(|&&c| c == PAD).count();
        let trail = b.iter().rev().take_while(|&&c| c == PAD).count();
        (lead, trail)
    }
}

/// Cut one window per site; positions past either terminus become `X`.
pub fn extract_windows(
    protein: &ProteinRecord,
    sites: &[SiteAnnotation],
    window_len: usize,
) -> Result<Vec<PeptideWindow>> {
    if window_len % 2 == 0 || window_len == 0 {
        return Err(Error::data(format!("window length must be odd, got {window_len}")));
    }
    let species = protein
        .species
        .ok_or_else(|| Error::data(format!("protein {} has no species", protein.id)))?;
    let seq = protein.residues.as_bytes();
    let half = (window_len - 1) / 2;
    sites
        .iter()
        .map(|site| {
            if site.protein_id != protein.id {
                return Err(Error::data(format!(
                    "site {}:{} does not belong to protein {}",
                    site.protein_id, site.position, protein.id
                )));
            }
            if site.position == 0 || site.position > seq.len() {
                return Err(Error::data(format!(
                    "site {}:{} outside protein of length {}",
                    site.protein_id,
                    site.position,
                    seq.len()
                )));
            }
            if seq[site.position - 1] != b'K' {
                return Err(Error::data(format!(
                    "site {}:{} is {:?}, not K",
                    site.protein_id, site.position, seq[site.position - 1] as char
                )));
            }
            let center = site.position as isize - 1;
            let residues: String = (center - half as isize..=center + half as isize)
                .map(|i| if i < 0 || i >= seq.len() as isize { PAD as char } else { seq[i as usize] as char })
                .collect();
            Ok(PeptideWindow {
                residues,
                label: site.label,
                species,
                origin: Origin { protein_id: protein.id.clone(), position: site.position },
            })
        })
        .collect()
}

/// Parse `protein_id \t position \t label` rows. `#` lines and a
/// `protein_id\tposition\tlabel` header are skipped.
pub fn parse_annotations(text: &str) -> Result<Vec<SiteAnnotation>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Error::parse(line_no, format!("expected 3 tab-separated columns, got {}", cols.len())));
        }
        if out.is_empty() && cols[1].eq_ignore_ascii_case("position") {
            continue;
        }
        let position: usize = cols[1]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad position {:?}", cols[1])))?;
        let label: Label = cols[2].parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
        out.push(SiteAnnotation::new(cols[0], position, label));
    }
    Ok(out)
}

/// How unannotated lysines are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativePolicy {
    /// Only annotated sites become windows.
    AsGiven,
    /// Every unannotated lysine becomes a negative.
    AllUnannotatedLysines,
}

impl NegativePolicy {
    /// Annotations that already name negatives are taken as given;
    /// positives-only annotations imply every other K is a negative.
    pub fn infer(annotations: &[SiteAnnotation]) -> Self {
        if annotations.iter().any(|a| a.label == Label::Negative) {
            NegativePolicy::AsGiven
        } else {
            NegativePolicy::AllUnannotatedLysines
        }
    }
}

/// Group annotations by protein and expand them to the final site list.
///
/// Duplicate annotations collapse; a site annotated both ways is positive.
/// Annotations naming proteins not in `proteins` are ignored (they may have
/// been removed by redundancy reduction).
pub fn assign_sites(
    proteins: &[ProteinRecord],
    annotations: &[SiteAnnotation],
    policy: NegativePolicy,
) -> BTreeMap<String, Vec<SiteAnnotation>> {
    let mut by_protein: BTreeMap<&str, BTreeMap<usize, Label>> = BTreeMap::new();
    for a in annotations {
        let slot = by_protein.entry(a.protein_id.as_str()).or_default().entry(a.position).or_insert(a.label);
        if a.label.is_positive() {
            *slot = Label::Positive;
        }
    }
    let mut out = BTreeMap::new();
    for p in proteins {
        let mut sites: BTreeMap<usize, Label> = by_protein.get(p.id.as_str()).cloned().unwrap_or_default();
        if policy == NegativePolicy::AllUnannotatedLysines {
            for pos in p.lysine_positions() {
                sites.entry(pos).or_insert(Label::Negative);
            }
        }
        let list: Vec<SiteAnnotation> =
            sites.into_iter().map(|(pos, label)| SiteAnnotation::new(p.id.clone(), pos, label)).collect();
        if !list.is_empty() {
            out.insert(p.id.clone(), list);
        }
    }
    out
}

/// Origins must be unique within a dataset.
pub fn check_unique_origins(windows: &[PeptideWindow]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for w in windows {
        if !seen.insert(&w.origin) {
            return Err(Error::data(format!("duplicate window origin {}", w.origin)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn protein(len: usize) -> ProteinRecord {
        // deterministic filler without K except where placed
        let alphabet = b"ACDEFGHILMNPQRSTVWY";
        let residues: String = (0..len).map(|i| alphabet[i % alphabet.len()] as char).collect();
        ProteinRecord::new("p", Some(Species::EColi), residues)
    }

    fn with_k(mut p: ProteinRecord, positions: &[usize]) -> ProteinRecord {
        let mut b = p.residues.into_bytes();
        for &pos in positions {
            b[pos - 1] = b'K';
        }
        p.residues = String::from_utf8(b).unwrap();
        p
    }

    #[test]
    fn exact_fit_has_no_padding() {
        let p = with_k(protein(60), &[21]);
        let w = extract_windows(&p, &[SiteAnnotation::new("p", 21, Label::Positive)], 41).unwrap();
        assert_eq!(w[0].residues, &p.residues[..41]);
        assert_eq!(w[0].padding(), (0, 0));
        assert_eq!(w[0].label, Label::Positive);
        assert_eq!(w[0].origin, Origin { protein_id: "p".into(), position: 21 });
    }

    #[test]
    fn leading_padding() {
        let p = with_k(protein(60), &[5]);
        let w = extract_windows(&p, &[SiteAnnotation::new("p", 5, Label::Negative)], 41).unwrap();
        assert_eq!(&w[0].residues[..16], "X".repeat(16));
        assert_eq!(&w[0].residues[16..], &p.residues[..25]);
        assert_eq!(w[0].center(), b'K');
    }

    #[test]
    fn trailing_padding() {
        let p = with_k(protein(30), &[28]);
        let w = extract_windows(&p, &[SiteAnnotation::new("p", 28, Label::Negative)], 41).unwrap();
        assert_eq!(w[0].padding(), (0, 18));
        assert_eq!(w[0].len(), 41);
    }

    #[test]
    fn three_sites_match_brute_force_enumeration() {
        let p = with_k(protein(80), &[3, 40, 79]);
        let brute: Vec<usize> = p.residues.bytes().enumerate().filter(|(_, b)| *b == b'K').map(|(i, _)| i + 1).collect();
        assert_eq!(brute, vec![3, 40, 79]);
        let sites = assign_sites(std::slice::from_ref(&p), &[], NegativePolicy::AllUnannotatedLysines);
        let w = extract_windows(&p, &sites["p"], 41).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|w| w.center() == b'K' && w.len() == 41));
        assert_eq!(w.iter().map(|w| w.origin.position).collect::<Vec<_>>(), brute);
    }

    #[test]
    fn extraction_errors() {
        let p = with_k(protein(60), &[21]);
        assert!(extract_windows(&p, &[SiteAnnotation::new("p", 22, Label::Positive)], 41).is_err());
        assert!(extract_windows(&p, &[SiteAnnotation::new("p", 61, Label::Positive)], 41).is_err());
        assert!(extract_windows(&p, &[SiteAnnotation::new("p", 0, Label::Positive)], 41).is_err());
        assert!(extract_windows(&p, &[SiteAnnotation::new("q", 21, Label::Positive)], 41).is_err());
        assert!(extract_windows(&p, &[SiteAnnotation::new("p", 21, Label::Positive)], 40).is_err());
        let mut nosp = p.clone();
        nosp.species = None;
        assert!(extract_windows(&nosp, &[SiteAnnotation::new("p", 21, Label::Positive)], 41).is_err());
    }

    #[test]
    fn annotation_parsing_and_policy() {
        let text = "protein_id\tposition\tlabel\np\t21\t1\np\t30\tnon-K-Ace\n# c\nq\t4\tK-Ace\n";
        let a = parse_annotations(text).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a[1].label, Label::Negative);
        assert_eq!(NegativePolicy::infer(&a), NegativePolicy::AsGiven);
        assert_eq!(NegativePolicy::infer(&a[2..]), NegativePolicy::AllUnannotatedLysines);
        assert!(parse_annotations("p\t1").is_err());
        assert!(parse_annotations("p\tx\t1").is_err());
        assert!(parse_annotations("p\t1\tmaybe").is_err());
    }

    #[test]
    fn positives_only_labels_remaining_lysines_negative() {
        let p = with_k(protein(80), &[3, 40, 79]);
        let ann = vec![SiteAnnotation::new("p", 40, Label::Positive), SiteAnnotation::new("gone", 1, Label::Positive)];
        let sites = assign_sites(std::slice::from_ref(&p), &ann, NegativePolicy::infer(&ann));
        let labels: Vec<(usize, Label)> = sites["p"].iter().map(|s| (s.position, s.label)).collect();
        assert_eq!(labels, vec![(3, Label::Negative), (40, Label::Positive), (79, Label::Negative)]);
    }

    #[test]
    fn origin_roundtrip() {
        let o: Origin = "sp|P1:2:17".parse().unwrap();
        assert_eq!(o.protein_id, "sp|P1:2");
        assert_eq!(o.to_string(), "sp|P1:2:17");
        assert!("nopos".parse::<Origin>().is_err());
    }

    proptest! {
        #[test]
        fn windows_always_centred_and_padded_only_at_ends(
            seq in "[ACDEFGHIKLMNPQRSTVWY]{1,120}",
        ) {
            let p = ProteinRecord::new("p", Some(Species::BSubtilis), seq);
            let sites = assign_sites(std::slice::from_ref(&p), &[], NegativePolicy::AllUnannotatedLysines);
            let sites = sites.get("p").cloned().unwrap_or_default();
            let windows = extract_windows(&p, &sites, WINDOW_LEN).unwrap();
            prop_assert_eq!(windows.len(), p.lysine_positions().len());
            for w in &windows {
                prop_assert_eq!(w.len(), WINDOW_LEN);
                prop_assert_eq!(w.residues.as_bytes()[20], b'K');
                let (lead, trail) = w.padding();
                let interior = &w.residues.as_bytes()[lead..WINDOW_LEN - trail];
                prop_assert!(!interior.contains(&PAD));
            }
        }
    }
}
