//! Experiments that replay the information-theoretic steps of the area-law
//! argument on small systems.

pub mod decoupling;
pub mod lemma1;
pub mod merging;
pub mod saturation;
pub mod theorem;

pub use decoupling::{
    decoupling_merging_experiment, haar_decoupling_experiment, random_rank_povm, DecouplingReport,
    PovmDecouplingReport, PovmFamily,
};
pub use lemma1::{
    cor_lower_from_measurement, lemma1_part3_check, lemma1_random_measurement_demo, DemoParams, DemoReport, Part3Check,
};
pub use merging::{merging_rate_report, MergingReport};
pub use saturation::{saturation_scan, Geometry, SaturationResult};
pub use theorem::{theorem_harness, HarnessOptions, TheoremRow, TheoremTable};
