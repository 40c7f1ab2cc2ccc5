//! Greedy identity clustering in the spirit of CD-HIT.
//!
//! Identity is the best ungapped overlap: slide one sequence along the other,
//! count positional matches at every offset, take the maximum and divide by
//! the shorter length. No gaps, no word filter.

use super::fasta::ProteinRecord;
use crate::error::{Error, Result};

fn matches_at(a: &[u8], b: &[u8], offset: isize) -> usize {
    // offset = start of b relative to a
    let (a_start, b_start) = if offset >= 0 { (offset as usize, 0) } else { (0, (-offset) as usize) };
    if a_start >= a.len() || b_start >= b.len() {
        return 0;
    }
    let len = (a.len() - a_start).min(b.len() - b_start);
    a[a_start..a_start + len].iter().zip(&b[b_start..b_start + len]).filter(|(x, y)| x == y).count()
}

fn overlap_at(a_len: usize, b_len: usize, offset: isize) -> usize {
    let (a_start, b_start) = if offset >= 0 { (offset as usize, 0) } else { (0, (-offset) as usize) };
    if a_start >= a_len || b_start >= b_len {
        0
    } else {
        (a_len - a_start).min(b_len - b_start)
    }
}

fn offsets(a_len: usize, b_len: usize) -> impl Iterator<Item = isize> {
    -(b_len as isize) + 1..a_len as isize
}

/// Best ungapped identity between two sequences, in [0, 1].
pub fn ungapped_identity(a: &str, b: &str) -> f64 {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    let shorter = a.len().min(b.len());
    if shorter == 0 {
        return 0.0;
    }
    let best = offsets(a.len(), b.len()).map(|o| matches_at(a, b, o)).max().unwrap_or(0);
    best as f64 / shorter as f64
}

/// `ungapped_identity(a, b) >= threshold`, exiting as soon as it is decided.
fn identity_reaches(a: &[u8], b: &[u8], threshold: f64) -> bool {
    let shorter = a.len().min(b.len());
    let needed = (threshold * shorter as f64 - 1e-9).ceil().max(0.0) as usize;
    if needed == 0 {
        return true;
    }
    offsets(a.len(), b.len())
        .filter(|&o| overlap_at(a.len(), b.len(), o) >= needed)
        .any(|o| matches_at(a, b, o) >= needed)
}

/// Keep one representative per identity cluster.
///
/// Proteins are visited longest first (ties keep input order). Each joins the
/// first representative it reaches `identity_threshold` with, otherwise it
/// founds a new cluster. Representatives are returned in visiting order.
pub fn reduce_redundancy(proteins: &[ProteinRecord], identity_threshold: f64) -> Result<Vec<ProteinRecord>> {
    if proteins.is_empty() {
        return Err(Error::data("no proteins to cluster"));
    }
    if !(identity_threshold > 0.0 && identity_threshold <= 1.0) {
        return Err(Error::data(format!("identity threshold must be in (0, 1], got {identity_threshold}")));
    }
    let mut order: Vec<&ProteinRecord> = proteins.iter().collect();
    order.sort_by(|a, b| b.len().cmp(&a.len()));
    let mut reps: Vec<&ProteinRecord> = Vec::new();
    for p in order {
        let seq = p.residues.as_bytes();
        if !reps.iter().any(|r| identity_reaches(r.residues.as_bytes(), seq, identity_threshold)) {
            reps.push(p);
        }
    }
    Ok(reps.into_iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Species;
    use rand::{Rng, SeedableRng};

    fn rec(id: &str, s: &str) -> ProteinRecord {
        ProteinRecord::new(id, Some(Species::EColi), s)
    }

    fn random_seq(rng: &mut impl Rng, len: usize) -> String {
        let aa = crate::corpus::AMINO_ACIDS.as_bytes();
        (0..len).map(|_| aa[rng.random_range(0..aa.len())] as char).collect()
    }

    fn mutate(rng: &mut impl Rng, s: &str, rate: f64) -> String {
        let aa = crate::corpus::AMINO_ACIDS.as_bytes();
        s.chars().map(|c| if rng.random_bool(rate) { aa[rng.random_range(0..aa.len())] as char } else { c }).collect()
    }

    #[test]
    fn identity_basics() {
        assert_eq!(ungapped_identity("MKVLA", "MKVLA"), 1.0);
        // shifted copy is found at a non-zero offset
        assert_eq!(ungapped_identity("AAMKVL", "MKVL"), 1.0);
        assert_eq!(ungapped_identity("AAAA", "CCCC"), 0.0);
        assert_eq!(ungapped_identity("ACDE", "ACWW"), 0.5);
        assert_eq!(ungapped_identity("ABC", ""), 0.0);
    }

    #[test]
    fn early_exit_agrees_with_full_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (la, lb, lc) = (rng.random_range(1..40), rng.random_range(1..40), rng.random_range(1..40));
            let a = random_seq(&mut rng, la);
            let b = mutate(&mut rng, &a[..a.len().min(lb)], 0.6);
            let b = if rng.random_bool(0.5) { b } else { random_seq(&mut rng, lc) };
            for thr in [0.1, 0.3, 0.5, 1.0] {
                assert_eq!(
                    identity_reaches(a.as_bytes(), b.as_bytes(), thr),
                    ungapped_identity(&a, &b) >= thr,
                    "{a} {b} {thr}"
                );
            }
        }
    }

    #[test]
    fn identical_sequences_collapse() {
        let out = reduce_redundancy(&[rec("a", "MKVLAAGHT"), rec("b", "MKVLAAGHT")], 0.3).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "a");
    }

    #[test]
    fn low_identity_sequences_are_kept() {
        // identity 1/10 at best, no shared 2-mers
        let a = "ACDEFGHIKL";
        let b = "MNPQRSTVWA";
        assert!(ungapped_identity(a, b) <= 0.1);
        let out = reduce_redundancy(&[rec("a", a), rec("b", b)], 0.3).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn four_mutation_families_give_four_representatives() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut proteins = Vec::new();
        let mut family = Vec::new();
        for f in 0..4 {
            let root = random_seq(&mut rng, 120 + 10 * f);
            for m in 0..5 {
                proteins.push(rec(&format!("f{f}m{m}"), &mutate(&mut rng, &root, 0.3)));
                family.push(f);
            }
        }
        // brute-force identity matrix: families are internally similar and mutually dissimilar
        for i in 0..proteins.len() {
            for j in 0..proteins.len() {
                let id = ungapped_identity(&proteins[i].residues, &proteins[j].residues);
                if family[i] == family[j] {
                    assert!(id >= 0.3, "{i} {j} {id}");
                } else {
                    assert!(id < 0.3, "{i} {j} {id}");
                }
            }
        }
        let reps = reduce_redundancy(&proteins, 0.3).unwrap();
        assert_eq!(reps.len(), 4);
        let mut fams: Vec<char> = reps.iter().map(|r| r.id.as_bytes()[1] as char).collect();
        fams.sort();
        assert_eq!(fams, vec!['0', '1', '2', '3']);
    }

    #[test]
    fn representatives_are_pairwise_below_threshold() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut proteins = Vec::new();
        for i in 0..50 {
            let base = if i % 3 == 0 || proteins.is_empty() {
                let len = rng.random_range(10..60);
                random_seq(&mut rng, len)
            } else {
                let p: &ProteinRecord = &proteins[rng.random_range(0..proteins.len())];
                mutate(&mut rng, &p.residues, 0.5)
            };
            proteins.push(rec(&format!("p{i}"), &base));
        }
        for thr in [0.3, 0.5] {
            let reps = reduce_redundancy(&proteins, thr).unwrap();
            for i in 0..reps.len() {
                for j in i + 1..reps.len() {
                    assert!(ungapped_identity(&reps[i].residues, &reps[j].residues) < thr);
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert!(reduce_redundancy(&[], 0.3).is_err());
        assert!(reduce_redundancy(&[rec("a", "K")], 0.0).is_err());
        assert!(reduce_redundancy(&[rec("a", "K")], 1.5).is_err());
    }
}
