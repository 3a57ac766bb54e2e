//! Rumour veracity from crowd stance: sequence structures, Gaussian HMMs, the VB
//! baseline and the experiment protocols.

mod classifier;
mod hmm;
mod protocols;
mod structure;

pub use classifier::{argmax_label, stance_distribution, stance_string, HmmClassifier, HmmOptions, VbBaseline};
pub use hmm::{baum_welch, em_step, random_init, EmConfig, EmTrace, GaussianHmm, DEFAULT_VARIANCE_FLOOR};
pub use protocols::{
    auto_label, protocol_cv, protocol_cv3, protocol_mix, protocol_transfer, AuditEntry, AutoLabelOutcome,
    VeracitySpec,
};
pub use structure::{encode, to_sequences, StructureMode, TimeNorm, UnverifiedMode, Variant};
