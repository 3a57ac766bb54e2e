//! Stance classification for Reddit conversation trees and HMM-based rumour
//! veracity prediction over crowd stance sequences.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod resources;
pub mod sampling;
pub mod veracity;

pub use error::{Error, Result};
