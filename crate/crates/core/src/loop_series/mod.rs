//! Graded sparse series over edge words: products, involution, rotations,
//! norms and substitution, plus tensor series and matrices of them.

mod series;
mod tensor;
mod word;

pub use series::{split_graded, unit_k, validate_graded, wedge_k, WordSeries, C64, PRUNE};
pub(crate) use series::{c, letter_weights};
pub use tensor::{SeriesMatrix, TensorSeries};
pub use word::{Letters, Word};
