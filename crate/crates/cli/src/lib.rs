//! Command-line harness for `radio-gather-core`: simulation runs, scaling
//! experiments, construction dumps, adversary searches and the structural
//! lemma checks, plus the file formats they read and write.

pub mod commands;
pub mod formats;
pub mod lemmas;
pub mod scaling;
