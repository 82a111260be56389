//! Per-batch weight policy for CE, MARVEL and MARVEL+.
//!
//! For a batch drawn at epoch `e`:
//!
//! * warm-up (`e <= warm_up`): uniform loss weights, weights and margins
//!   carried over from epoch `e - 1` (so margins stay `+inf`);
//! * afterwards: the previous epoch's weights are normalized over the batch
//!   and used as loss weights. The weights to record are then rebuilt from
//!   the fresh margins, reset to `{0, 1}` (MARVEL) or to the adaptive
//!   Gaussian-tail weights (MARVEL+), and any instance whose `wait` most
//!   recent margins (the fresh one included) are all negative is zeroed.
//!
//! CE uses uniform weights throughout but still records real margins after
//! warm-up so that margin metrics compare across methods.

use std::fmt;
use std::str::FromStr;

use crate::ledger::HistoryLedger;
use crate::model::Logits;
use crate::{Error, Result};

/// `e^{-1/2}`: the weight at one standard deviation below the median and
/// for every margin above it.
pub const BENCHMARK_WEIGHT: f64 = 0.606_530_659_712_633_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ce,
    Marvel,
    MarvelPlus,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ce => "ce",
            Method::Marvel => "marvel",
            Method::MarvelPlus => "marvel_plus",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '+'], "_").as_str() {
            "ce" => Ok(Method::Ce),
            "marvel" => Ok(Method::Marvel),
            "marvel_plus" | "marvel_" | "marvelplus" => Ok(Method::MarvelPlus),
            _ => Err(Error::Config(format!("unknown method `{s}`"))),
        }
    }
}

/// Where MARVEL+ takes its median and variance from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsScope {
    /// Margins of the retained instances in the current mini-batch.
    Batch,
    /// The previous epoch's recorded margins of all retained instances.
    PrevEpoch,
}

impl fmt::Display for StatsScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatsScope::Batch => "batch",
            StatsScope::PrevEpoch => "prev_epoch",
        })
    }
}

impl FromStr for StatsScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(StatsScope::Batch),
            "prev_epoch" => Ok(StatsScope::PrevEpoch),
            _ => Err(Error::Config(format!("unknown stats scope `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig {
    pub method: Method,
    pub warm_up: usize,
    pub wait: usize,
    pub stats_scope: StatsScope,
    pub sigma_floor: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            method: Method::Marvel,
            warm_up: 1,
            wait: 3,
            stats_scope: StatsScope::Batch,
            sigma_floor: 1e-8,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warm_up < 1 {
            return Err(Error::Config("warm_up must be >= 1".into()));
        }
        if self.wait < 1 {
            return Err(Error::Config("wait must be >= 1".into()));
        }
        if !(self.sigma_floor > 0.0) {
            return Err(Error::Config("sigma_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMarginStats {
    pub median: f64,
    pub variance: f64,
}

impl EpochMarginStats {
    fn clamped(self, floor: f64) -> Self {
        Self {
            variance: self.variance.max(floor),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchDecision {
    /// Normalized weights for this batch's loss. All zero when `skip` is set.
    pub loss_weights: Vec<f64>,
    /// Every instance in the batch has zero prior weight; no gradient step.
    pub skip: bool,
    /// Weights to record for this epoch, in `[0, 1]`.
    pub policy_weights: Vec<f64>,
    /// Margins to record for this epoch.
    pub margins: Vec<f64>,
}

/// Every nonzero weight becomes 1.
pub fn reset_nonzero(w: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|&v| if v != 0.0 { 1.0 } else { 0.0 })
        .collect()
}

/// Gaussian left-tail weights around the median, flat at the benchmark
/// weight above it. Zero weights stay zero; the variance must already be
/// floored. Retained weights are kept strictly positive so that an
/// underflowing `exp` never reads as a removal.
pub fn adaptive_weights(w: &[f64], margins: &[f64], stats: EpochMarginStats) -> Vec<f64> {
    let EpochMarginStats { median, variance } = stats;
    w.iter()
        .zip(margins)
        .map(|(&wi, &m)| {
            if wi == 0.0 {
                0.0
            } else if m <= median {
                (-(m - median).powi(2) / (2.0 * variance))
                    .exp()
                    .max(f64::MIN_POSITIVE)
            } else {
                BENCHMARK_WEIGHT
            }
        })
        .collect()
}

/// Median (midpoint of the central pair for even counts) and sample variance.
pub fn epoch_stats(margins: &[f64]) -> Result<EpochMarginStats> {
    if margins.len() < 2 {
        return Err(Error::DegenerateStats(margins.len()));
    }
    let mut sorted = margins.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let variance = sorted.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(EpochMarginStats { median, variance })
}

/// Zero every weight whose window maximum is negative.
pub fn apply_removal(w: &[f64], window_max: &[f64]) -> Vec<f64> {
    w.iter()
        .zip(window_max)
        .map(|(&wi, &m)| if m < 0.0 { 0.0 } else { wi })
        .collect()
}

/// Divides by the sum; `None` when every weight is zero.
fn normalize(w: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = w.iter().sum();
    (total > 0.0).then(|| w.iter().map(|v| v / total).collect())
}

pub fn decide_batch(
    cfg: &SchedulerConfig,
    ledger: &HistoryLedger,
    epoch: usize,
    indices: &[usize],
    logits: &Logits,
    labels: &[usize],
) -> Result<BatchDecision> {
    if epoch == 0 {
        return Err(Error::State("training epochs start at 1".into()));
    }
    if logits.rows() != indices.len() || labels.len() != indices.len() {
        return Err(Error::Shape(format!(
            "{} indices, {} logit rows, {} labels",
            indices.len(),
            logits.rows(),
            labels.len()
        )));
    }
    let b = indices.len();
    let uniform = vec![1.0 / b as f64; b];

    if epoch <= cfg.warm_up {
        return Ok(BatchDecision {
            loss_weights: uniform,
            skip: false,
            policy_weights: ledger.weights_at(epoch - 1, indices)?,
            margins: ledger.margins_at(epoch - 1, indices)?,
        });
    }

    let margins = logits.margins(labels)?;
    if cfg.method == Method::Ce {
        return Ok(BatchDecision {
            loss_weights: uniform,
            skip: false,
            policy_weights: vec![1.0; b],
            margins,
        });
    }

    let prior = ledger.weights_at(epoch - 1, indices)?;
    let (loss_weights, skip) = match normalize(&prior) {
        Some(w) => (w, false),
        None => (vec![0.0; b], true),
    };

    let reset = reset_nonzero(&prior);
    let policy = match cfg.method {
        Method::MarvelPlus => match marvel_plus_stats(cfg, ledger, epoch, &prior, &margins) {
            Ok(stats) => adaptive_weights(&reset, &margins, stats.clamped(cfg.sigma_floor)),
            Err(Error::DegenerateStats(_)) => reset,
            Err(e) => return Err(e),
        },
        _ => reset,
    };
    let window = ledger.window_max_with(epoch, indices, &margins, cfg.wait)?;
    Ok(BatchDecision {
        loss_weights,
        skip,
        policy_weights: apply_removal(&policy, &window),
        margins,
    })
}

fn marvel_plus_stats(
    cfg: &SchedulerConfig,
    ledger: &HistoryLedger,
    epoch: usize,
    prior: &[f64],
    fresh: &[f64],
) -> Result<EpochMarginStats> {
    match cfg.stats_scope {
        StatsScope::Batch => {
            let retained: Vec<f64> = prior
                .iter()
                .zip(fresh)
                .filter(|&(&w, _)| w != 0.0)
                .map(|(_, &m)| m)
                .collect();
            epoch_stats(&retained)
        }
        StatsScope::PrevEpoch => {
            let all: Vec<usize> = (0..ledger.len()).collect();
            let w = ledger.weights_at(epoch - 1, &all)?;
            let m = ledger.margins_at(epoch - 1, &all)?;
            // The last warm-up column still holds the +inf sentinel.
            let retained: Vec<f64> = w
                .iter()
                .zip(&m)
                .filter(|&(&w, m)| w != 0.0 && m.is_finite())
                .map(|(_, &m)| m)
                .collect();
            epoch_stats(&retained)
        }
    }
}
