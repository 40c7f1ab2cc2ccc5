use crate::corpus::{PeptideWindow, AMINO_ACIDS, PAD};

/// Residue → token index. The twenty amino acids map to 1..=20 in
/// alphabetical order; pad and every unknown letter map to 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    alphabet: Vec<u8>,
    index: [u8; 256],
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::standard()
    }
}

impl Vocabulary {
    pub fn standard() -> Self {
        Self::from_alphabet(AMINO_ACIDS).expect("standard alphabet is valid")
    }

    /// Build from an explicit alphabet (used when loading model files).
    pub fn from_alphabet(alphabet: &str) -> Option<Self> {
        let bytes = alphabet.as_bytes();
        if bytes.is_empty() || bytes.len() > 255 || bytes.contains(&PAD) {
            return None;
        }
        let mut index = [0u8; 256];
        for (i, &b) in bytes.iter().enumerate() {
            if index[b as usize] != 0 {
                return None;
            }
            index[b as usize] = (i + 1) as u8;
        }
        Some(Vocabulary { alphabet: bytes.to_vec(), index })
    }

    /// Number of token ids including the pad id 0.
    pub fn size(&self) -> usize {
        self.alphabet.len() + 1
    }

    pub fn alphabet(&self) -> &str {
        std::str::from_utf8(&self.alphabet).expect("ascii alphabet")
    }

    #[inline]
    pub fn token(&self, residue: u8) -> usize {
        self.index[residue.to_ascii_uppercase() as usize] as usize
    }

    pub fn encode_str(&self, residues: &str) -> Vec<usize> {
        residues.bytes().map(|b| self.token(b)).collect()
    }

    pub fn encode_window(&self, window: &PeptideWindow) -> Vec<usize> {
        self.encode_str(&window.residues)
    }

    /// Inverse on defined tokens; id 0 decodes to the pad letter.
    pub fn decode(&self, tokens: &[usize]) -> String {
        tokens
            .iter()
            .map(|&t| if t == 0 || t > self.alphabet.len() { PAD as char } else { self.alphabet[t - 1] as char })
            .collect()
    }
}

/// Token ids for one window.
pub fn encode_window(window: &PeptideWindow, vocab: &Vocabulary) -> Vec<usize> {
    vocab.encode_window(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_indices() {
        let v = Vocabulary::standard();
        assert_eq!(v.size(), 21);
        assert_eq!(v.token(b'A'), 1);
        assert_eq!(v.token(b'Y'), 20);
        assert_eq!(v.token(b'K'), 9);
        assert_eq!(v.token(b'X'), 0);
        assert_eq!(v.token(b'B'), 0);
        assert_eq!(v.token(b'a'), 1);
    }

    #[test]
    fn rejects_bad_alphabets() {
        assert!(Vocabulary::from_alphabet("AAC").is_none());
        assert!(Vocabulary::from_alphabet("ACX").is_none());
        assert!(Vocabulary::from_alphabet("").is_none());
    }

    proptest! {
        #[test]
        fn roundtrip_on_standard_letters(s in "[ACDEFGHIKLMNPQRSTVWYX]{41}") {
            let v = Vocabulary::standard();
            let t = v.encode_str(&s);
            prop_assert_eq!(t.len(), 41);
            prop_assert!(t.iter().all(|&i| i < 21));
            prop_assert_eq!(v.decode(&t), s);
        }
    }
}
