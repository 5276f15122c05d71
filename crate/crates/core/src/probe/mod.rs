//! Feature-dependence measurements on trained models.

mod boundary;
mod ensemble;
pub mod export;
mod groups;
mod nfm;
mod shuffle;

pub use boundary::{boundary_grid, BoundaryGrid};
pub use ensemble::{disagreement, ensemble_accuracy, ensemble_predict, mean_pairwise_disagreement};
pub use groups::{group_accuracy, GroupAccuracy, GroupReport};
pub use nfm::{gram_top_eigvec, nfm_diag, nfm_top_eigvec, NfmSummary, PowerIteration};
pub use shuffle::{shuffle_accuracy, shuffle_accuracy_with, ShuffleResult, DEFAULT_SHUFFLE_REPEATS};

/// Mean and sample standard deviation (`n - 1` denominator; 0 for `n < 2`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
