//! Whitening (KLD against a moment-matched Gaussian) and localization
//! error reports.

mod kld;
mod rmse;
mod whitening;

pub use kld::{kld_vs_gaussian, Histogram, Kld, KLD_BINS};
pub use rmse::{rmse_report, RmseReport, SPIKE_THRESHOLD_M};
pub use whitening::{
    collect_cell_samples, summarize, whitening_report, CellRecord, CellSamples, RegionRow,
    WhiteningConfig, WhiteningReport,
};
