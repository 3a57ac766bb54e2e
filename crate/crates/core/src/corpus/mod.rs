//! Annotated Reddit conversation trees and cross-dataset stance sequences.

mod dast;
mod model;
mod preprocess;
mod sequences;

pub use dast::{load_dataset, load_submission, load_submission_file, load_submission_with, LoadOptions};
pub use model::*;
pub use preprocess::{is_quote_line, preprocess, QUOTE_TAG, URL_TAG};
pub(crate) use preprocess::URL_RE;
pub use sequences::{
    filter_pheme, load_sequences, parse_sequences, write_sequences, SequenceItem, SequenceRecord,
    PHEME_MIN_ITEMS, PHEME_MIN_RUMOURS,
};
