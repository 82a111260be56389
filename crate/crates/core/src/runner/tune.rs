//! Wait-period selection by k-fold cross validation on the noisy labels.
//! No clean validation data is used: held-out folds are scored against their
//! observed labels.

use std::thread;

use crate::data::kfold;
use crate::metrics::accuracy;
use crate::{Error, Result};

use super::config::ExperimentConfig;
use super::train::{prepare, train_on};

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub wait: usize,
    /// Held-out accuracy per fold, or the error that fold hit.
    pub folds: Vec<Result<f64, String>>,
    /// Mean over folds; `None` if any fold failed.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaitSelection {
    pub best: usize,
    pub table: Vec<CvRow>,
}

/// Scores every wait in `grid` and returns the best mean held-out accuracy,
/// ties going to the smaller wait.
pub fn tune_wait(cfg: &ExperimentConfig, grid: &[usize], k_folds: usize) -> Result<WaitSelection> {
    if grid.is_empty() {
        return Err(Error::Config("wait grid is empty".into()));
    }
    cfg.validate()?;
    let data = prepare(cfg)?;
    let plan = kfold(data.train.len(), k_folds, cfg.seed)?;

    let score = |wait: usize, fold: usize| -> Result<f64> {
        let mut c = cfg.clone();
        c.scheduler.wait = wait;
        let train = data.train.subset(&plan.training(fold));
        let held = data.train.subset(&plan.folds[fold]);
        let run = train_on(&c, &train, None)?;
        let pred = run.model.forward(&held.features)?.predictions();
        accuracy(&pred, &held.labels)
    };

    let table: Vec<CvRow> = thread::scope(|s| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&wait| {
                let score = &score;
                s.spawn(move || {
                    let folds: Vec<Result<f64, String>> = (0..k_folds)
                        .map(|f| score(wait, f).map_err(|e| e.to_string()))
                        .collect();
                    let mean = folds
                        .iter()
                        .map(|r| r.as_ref().ok().copied())
                        .sum::<Option<f64>>()
                        .map(|t| t / k_folds as f64);
                    CvRow { wait, folds, mean }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cv worker panicked"))
            .collect()
    });

    let best = table
        .iter()
        .filter_map(|r| r.mean.map(|m| (r.wait, m)))
        .fold(None::<(usize, f64)>, |acc, (w, m)| match acc {
            Some((bw, bm)) if bm > m || (bm == m && bw <= w) => Some((bw, bm)),
            _ => Some((w, m)),
        })
        .map(|(w, _)| w)
        .ok_or_else(|| Error::Config("every wait value failed cross validation".into()))?;
    Ok(WaitSelection { best, table })
}
