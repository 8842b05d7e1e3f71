//! Offline analysis: Brockway metabolic power, net metabolic rate over a
//! trial window, condition summaries in the layout of the results table,
//! squat-cycle segmentation and cycle-normalized kinematics.

mod cycles;
mod manifest;
mod metabolic;
mod table;

pub use cycles::{
    peak_flexion, resample_cycles, segment_cycles, write_curves_csv, CycleStats, PEAK_DEG,
    RESAMPLE_POINTS, SMOOTHING_S, STANDING_DEG,
};
pub use manifest::{ConditionEntry, KinematicsEntry, SubjectEntry, SubjectsManifest};
pub use metabolic::{
    brockway_power, gross_metabolic_rate, last_window, mean_heart_rate, net_metabolic_rate,
    read_metabolic_csv, write_metabolic_csv, MetabolicRecord, VCO2_COEFF, VO2_COEFF,
};
pub use table::{
    percent_change, round_to, summarize, write_summary_csv, Condition, ConditionSummary, Stat,
    SubjectRecord, SubjectRow, Summary,
};
