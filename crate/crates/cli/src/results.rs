//! The results table shared by `run` and `report`.

use serde::{Deserialize, Serialize, Serializer};

/// Column names of a results file, in order.
pub const RESULT_FIELDS: [&str; 10] = [
    "method",
    "seed",
    "K",
    "session",
    "accuracy",
    "base_acc",
    "inc_acc",
    "hm",
    "replay_bytes",
    "seconds",
];

/// One session of one run. Accuracies are percentages written with two
/// decimals; the base/incremental split is empty while only the first
/// session's classes have been seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub session: usize,
    #[serde(serialize_with = "two_decimals")]
    pub accuracy: f64,
    #[serde(serialize_with = "two_decimals_opt")]
    pub base_acc: Option<f64>,
    #[serde(serialize_with = "two_decimals_opt")]
    pub inc_acc: Option<f64>,
    #[serde(serialize_with = "two_decimals_opt")]
    pub hm: Option<f64>,
    pub replay_bytes: u64,
    #[serde(serialize_with = "three_decimals")]
    pub seconds: f64,
}

fn two_decimals<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x:.2}"))
}

fn two_decimals_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(x) => two_decimals(x, s),
        None => s.serialize_str(""),
    }
}

fn three_decimals<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x:.3}"))
}
