//! Protein sequences, lysine site annotations and labelled peptide windows.

mod fasta;
mod io;
mod redundancy;
mod species;
mod split;
mod windows;

pub use fasta::{is_standard_residue, parse_fasta, write_fasta, ProteinRecord, AMINO_ACIDS};
pub use io::{parse_windows, write_windows};
pub use redundancy::{reduce_redundancy, ungapped_identity};
pub use species::{parse_species_list, Species};
pub(crate) use split::stratified_mask;
pub use split::{split_train_independent, ClassCounts, SpeciesDataset};
pub use windows::{
    assign_sites, check_unique_origins, extract_windows, parse_annotations, Label, NegativePolicy, Origin,
    PeptideWindow, SiteAnnotation, PAD, WINDOW_LEN,
};
