//! PCA gait models: the participant factorization and the sinusoid-driven
//! normative walker, plus JSON persistence for both.

mod io;
mod normative;
mod participant;
pub(crate) mod pca;
mod sinusoid;

pub use io::{
    normative_from_json, normative_to_json, participant_from_json, participant_to_json, read_normative, read_participant,
    write_normative, write_participant, MODEL_FORMAT_VERSION,
};
pub use normative::{
    fit_normative_model, fit_normative_model_with, normative_scores, reconstruct_normative, NormativeModel,
    NormativeOptions, Pooling, NORMALIZED_CYCLE_SAMPLES, NORMATIVE_COMPONENTS,
};
pub use participant::{
    fit_participant_model, fit_participant_model_with, fit_trajectory, reconstruct_participant, ComponentSelection,
    ParticipantModel, PARTICIPANT_VARIANCE_THRESHOLD,
};
pub use pca::Pca;
pub use sinusoid::{fit_sinusoid, fit_sinusoid_with, SinusoidFit, SinusoidOptions};
