//! Evaluation toolkit for spoofing countermeasures (CM) and spoofing-robust
//! speaker verification (SASV).
//!
//! The crate covers the full scoring pipeline used in spoofing-detection
//! evaluations: score/key file ingestion ([`trialdata`]), two-class detection
//! metrics ([`detmetrics`]), three-class tandem metrics ([`tandem`]), score
//! calibration and calibration diagnostics ([`calib`]), per-condition
//! breakdowns and ranking ([`analysis`]), and synthetic score generation with
//! analytic ground truth for testing ([`simgen`]).
//!
//! Scores follow the convention that higher values indicate the positive
//! class (bona fide speech, or a target speaker). Decision rule everywhere:
//! a trial is ACCEPTED iff its score is greater than or equal to the
//! threshold.

pub mod analysis;
pub mod calib;
pub mod detmetrics;
pub mod simgen;
pub mod tandem;
pub mod trialdata;

pub use detmetrics::{CmReport, CostConfig, ErrorCurve};
pub use tandem::{SasvCostConfig, SasvCurve, SasvReport, TandemScores};
pub use trialdata::{JoinedTrialSet, Track};
