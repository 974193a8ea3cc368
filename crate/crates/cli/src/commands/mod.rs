pub mod check;
pub mod experiment;
pub mod infer;
pub mod klbound;
pub mod sample_prior;
pub mod simulate;
