//! Anomaly scoring by latent inversion against a frozen generator and
//! discriminator, plus threshold calibration.

mod invert;
mod io;
mod threshold;

pub use invert::{invert, score_at, score_batch, InversionConfig, ScoredWindow};
pub use io::{
    parse_scores, parse_threshold, read_scores, read_threshold, scores_to_csv, threshold_to_string, write_scores,
    write_threshold, ScoreRow,
};
pub use threshold::{calibrate_scores, calibrate_threshold, classify, f1_at, Threshold};
