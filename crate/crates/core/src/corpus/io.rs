//! Window dataset files: `species \t origin \t sequence \t label`.

use std::fmt::Write as _;

use super::species::Species;
use super::windows::{Label, Origin, PeptideWindow};
use crate::error::{Error, Result};

pub fn write_windows(windows: &[PeptideWindow]) -> String {
    let mut out = String::new();
    for w in windows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", w.species.name(), w.origin, w.residues, w.label);
    }
    out
}

pub fn parse_windows(text: &str) -> Result<Vec<PeptideWindow>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            let wrap = |e: Error| Error::parse(idx + 1, e.to_string());
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse(idx + 1, format!("expected 4 columns, got {}", cols.len())));
            }
            let species: Species = cols[0].parse().map_err(wrap)?;
            let origin: Origin = cols[1].parse().map_err(wrap)?;
            let label: Label = cols[3].parse().map_err(wrap)?;
            PeptideWindow::new(cols[2], label, species, origin).map_err(wrap)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tsv_roundtrip(
            rows in proptest::collection::vec(("[ACDEFGHIKLMNPQRSTVWYX]{20}", "[ACDEFGHIKLMNPQRSTVWYX]{20}", any::<bool>(), 0usize..8, 1usize..5000), 1..30)
        ) {
            let windows: Vec<PeptideWindow> = rows
                .iter()
                .enumerate()
                .map(|(i, (l, r, pos, sp, at))| PeptideWindow {
                    residues: format!("{l}K{r}"),
                    label: Label::from_bool(*pos),
                    species: Species::ALL[*sp],
                    origin: Origin { protein_id: format!("p{i}"), position: *at },
                })
                .collect();
            let text = write_windows(&windows);
            prop_assert_eq!(parse_windows(&text).unwrap(), windows);
        }
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_windows("E. coli\tp:1\tAKA").is_err());
        assert!(parse_windows("E. coli\tp:1\tAAA\t1").is_err());
        assert!(parse_windows("Mars\tp:1\tAKA\t1").is_err());
        assert!(parse_windows("E. coli\tp:1\tAKA\t1\n").unwrap().len() == 1);
    }
}
