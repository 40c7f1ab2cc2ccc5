use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The eight prokaryotic species of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Species {
    EColi,
    CGlutamicum,
    MTuberculosis,
    BSubtilis,
    STyphimurium,
    GKaustophilus,
    BVelezensis,
    SEriocheiris,
}

impl Species {
    pub const ALL: [Species; 8] = [
        Species::EColi,
        Species::CGlutamicum,
        Species::MTuberculosis,
        Species::BSubtilis,
        Species::STyphimurium,
        Species::GKaustophilus,
        Species::BVelezensis,
        Species::SEriocheiris,
    ];

    /// Abbreviated binomial, e.g. `E. coli`.
    pub fn name(self) -> &'static str {
        match self {
            Species::EColi => "E. coli",
            Species::CGlutamicum => "C. glutamicum",
            Species::MTuberculosis => "M. tuberculosis",
            Species::BSubtilis => "B. subtilis",
            Species::STyphimurium => "S. typhimurium",
            Species::GKaustophilus => "G. kaustophilus",
            Species::BVelezensis => "B. velezensis",
            Species::SEriocheiris => "S. eriocheiris",
        }
    }

    pub fn full_name(self) -> &'static str {
        match self {
            Species::EColi => "Escherichia coli",
            Species::CGlutamicum => "Corynebacterium glutamicum",
            Species::MTuberculosis => "Mycobacterium tuberculosis",
            Species::BSubtilis => "Bacillus subtilis",
            Species::STyphimurium => "Salmonella typhimurium",
            Species::GKaustophilus => "Geobacillus kaustophilus",
            Species::BVelezensis => "Bacillus velezensis",
            Species::SEriocheiris => "Spiroplasma eriocheiris",
        }
    }

    /// File-name friendly key, e.g. `e_coli`.
    pub fn slug(self) -> &'static str {
        match self {
            Species::EColi => "e_coli",
            Species::CGlutamicum => "c_glutamicum",
            Species::MTuberculosis => "m_tuberculosis",
            Species::BSubtilis => "b_subtilis",
            Species::STyphimurium => "s_typhimurium",
            Species::GKaustophilus => "g_kaustophilus",
            Species::BVelezensis => "b_velezensis",
            Species::SEriocheiris => "s_eriocheiris",
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl FromStr for Species {
    type Err = Error;

    /// Accepts the abbreviated name, the full binomial or the slug,
    /// case-insensitively and ignoring punctuation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize(s);
        Species::ALL
            .into_iter()
            .find(|sp| {
                key == normalize(sp.name()) || key == normalize(sp.full_name()) || key == normalize(sp.slug())
            })
            .ok_or_else(|| Error::data(format!("unknown species {s:?}")))
    }
}

/// Parse a comma-separated species list; empty means all eight.
pub fn parse_species_list(s: &str) -> Result<Vec<Species>, Error> {
    let mut out: Vec<Species> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let sp: Species = part.parse()?;
        if !out.contains(&sp) {
            out.push(sp);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn name_forms_parse() {
        for sp in Species::ALL {
            assert_eq!(sp.name().parse::<Species>().unwrap(), sp);
            assert_eq!(sp.full_name().parse::<Species>().unwrap(), sp);
            assert_eq!(sp.slug().parse::<Species>().unwrap(), sp);
        }
        assert_eq!("e.coli".parse::<Species>().unwrap(), Species::EColi);
        assert!("H. sapiens".parse::<Species>().is_err());
    }

    #[test]
    fn species_list() {
        assert!(parse_species_list("").unwrap().is_empty());
        let l = parse_species_list("B. subtilis, e_coli,E. coli").unwrap();
        assert_eq!(l, vec![Species::EColi, Species::BSubtilis]);
    }
}
