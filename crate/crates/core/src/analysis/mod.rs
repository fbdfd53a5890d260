//! Scenario-level analysis: the blow-up alternative as a refinement-checked
//! detector and the small-data global bound with every constant evaluated.

mod blowup;
mod certificate;
mod window;

pub use blowup::{detect_blowup, BlowupOutcome, BlowupPolicy, BlowupVerdict, RefinementRun};
pub use certificate::{
    certificate_from_constants, monitored_global_run, small_data_certificate, MonitorReport,
    SmallDataCertificate,
};
pub use window::{window_norm, WindowKind};
