//! Per-instance history of weights and margins, one column per epoch.
//!
//! Column 0 is the initial state: every weight 1 and every margin `+inf`.
//! Columns `1..=epochs` are written once each, per instance, as the training
//! loop visits the instance's batch. A weight that reaches 0 stays 0.

use std::io::Write;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct HistoryLedger {
    n: usize,
    epochs: usize,
    weights: Vec<f64>,
    margins: Vec<f64>,
    written: Vec<bool>,
}

impl HistoryLedger {
    pub fn new(n: usize, epochs: usize) -> Result<Self> {
        if n == 0 || epochs == 0 {
            return Err(Error::Domain(format!(
                "ledger needs n >= 1 and epochs >= 1, got n={n}, epochs={epochs}"
            )));
        }
        let cols = epochs + 1;
        let mut ledger = Self {
            n,
            epochs,
            weights: vec![0.0; n * cols],
            margins: vec![0.0; n * cols],
            written: vec![false; n * cols],
        };
        for i in 0..n {
            let c = ledger.cell(i, 0);
            ledger.weights[c] = 1.0;
            ledger.margins[c] = f64::INFINITY;
            ledger.written[c] = true;
        }
        Ok(ledger)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    #[inline]
    fn cell(&self, i: usize, e: usize) -> usize {
        i * (self.epochs + 1) + e
    }

    fn check(&self, epoch: usize, indices: &[usize]) -> Result<()> {
        if epoch > self.epochs {
            return Err(Error::State(format!(
                "epoch {epoch} beyond ledger horizon {}",
                self.epochs
            )));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::State(format!("instance {i} out of range (n={})", self.n)));
        }
        Ok(())
    }

    fn read(&self, src: &[f64], epoch: usize, indices: &[usize]) -> Result<Vec<f64>> {
        self.check(epoch, indices)?;
        indices
            .iter()
            .map(|&i| {
                let c = self.cell(i, epoch);
                if self.written[c] {
                    Ok(src[c])
                } else {
                    Err(Error::State(format!(
                        "cell (instance {i}, epoch {epoch}) not written yet"
                    )))
                }
            })
            .collect()
    }

    pub fn weights_at(&self, epoch: usize, indices: &[usize]) -> Result<Vec<f64>> {
        self.read(&self.weights, epoch, indices)
    }

    pub fn margins_at(&self, epoch: usize, indices: &[usize]) -> Result<Vec<f64>> {
        self.read(&self.margins, epoch, indices)
    }

    pub fn is_written(&self, instance: usize, epoch: usize) -> bool {
        instance < self.n && epoch <= self.epochs && self.written[self.cell(instance, epoch)]
    }

    /// Whether every instance has a value in `epoch`'s column.
    pub fn column_complete(&self, epoch: usize) -> bool {
        epoch <= self.epochs && (0..self.n).all(|i| self.written[self.cell(i, epoch)])
    }

    /// Stores one batch's weights and margins for `epoch`. Rejects double
    /// writes, weights outside `[0, 1]` and any attempt to revive an instance
    /// whose previous weight was 0. Nothing is written on error.
    pub fn record(
        &mut self,
        epoch: usize,
        indices: &[usize],
        weights: &[f64],
        margins: &[f64],
    ) -> Result<()> {
        self.check(epoch, indices)?;
        if epoch == 0 {
            return Err(Error::State("column 0 is fixed at construction".into()));
        }
        if weights.len() != indices.len() || margins.len() != indices.len() {
            return Err(Error::Shape(format!(
                "{} indices, {} weights, {} margins",
                indices.len(),
                weights.len(),
                margins.len()
            )));
        }
        for (k, (&i, &w)) in indices.iter().zip(weights).enumerate() {
            if indices[..k].contains(&i) || self.written[self.cell(i, epoch)] {
                return Err(Error::State(format!(
                    "cell (instance {i}, epoch {epoch}) written twice"
                )));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Invariant(format!(
                    "weight {w} for instance {i} outside [0, 1]"
                )));
            }
            let prev = self.cell(i, epoch - 1);
            if !self.written[prev] {
                return Err(Error::State(format!(
                    "cell (instance {i}, epoch {}) must be written before epoch {epoch}",
                    epoch - 1
                )));
            }
            if self.weights[prev] == 0.0 && w != 0.0 {
                return Err(Error::Invariant(format!(
                    "instance {i} was removed at epoch {} and cannot return",
                    epoch - 1
                )));
            }
        }
        for ((&i, &w), &m) in indices.iter().zip(weights).zip(margins) {
            let c = self.cell(i, epoch);
            self.weights[c] = w;
            self.margins[c] = m;
            self.written[c] = true;
        }
        Ok(())
    }

    /// Per-instance maximum of the `wait` most recent recorded margins ending
    /// at `epoch` inclusive.
    pub fn window_max(&self, epoch: usize, indices: &[usize], wait: usize) -> Result<Vec<f64>> {
        let current = self.margins_at(epoch, indices)?;
        self.window_max_with(epoch, indices, &current, wait)
    }

    /// As [`window_max`](Self::window_max), with `fresh` standing in for the
    /// (not yet recorded) margins of `epoch`.
    pub fn window_max_with(
        &self,
        epoch: usize,
        indices: &[usize],
        fresh: &[f64],
        wait: usize,
    ) -> Result<Vec<f64>> {
        if wait < 1 {
            return Err(Error::Domain("wait must be >= 1".into()));
        }
        if fresh.len() != indices.len() {
            return Err(Error::Shape(format!(
                "{} fresh margins for {} indices",
                fresh.len(),
                indices.len()
            )));
        }
        self.check(epoch, indices)?;
        let start = (epoch + 1).saturating_sub(wait);
        let mut out = fresh.to_vec();
        for e in start..epoch {
            for (o, m) in out.iter_mut().zip(self.margins_at(e, indices)?) {
                *o = o.max(m);
            }
        }
        Ok(out)
    }

    /// Checks that no written weight row revives after a zero.
    pub fn audit(&self) -> Result<()> {
        for i in 0..self.n {
            let mut removed_at = None;
            for e in 0..=self.epochs {
                let c = self.cell(i, e);
                if !self.written[c] {
                    continue;
                }
                let w = self.weights[c];
                match removed_at {
                    Some(r) if w != 0.0 => {
                        return Err(Error::Invariant(format!(
                            "instance {i} removed at epoch {r} has weight {w} at epoch {e}"
                        )))
                    }
                    None if w == 0.0 => removed_at = Some(e),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Weight of each instance in the last written column of its row.
    pub fn final_weights(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (0..=self.epochs)
                    .rev()
                    .map(|e| self.cell(i, e))
                    .find(|&c| self.written[c])
                    .map_or(1.0, |c| self.weights[c])
            })
            .collect()
    }

    /// Writes `instance,epoch,weight,margin`, one row per written cell, in
    /// instance-major order. `+inf` is written as `inf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "instance,epoch,weight,margin")?;
        for i in 0..self.n {
            for e in 0..=self.epochs {
                let c = self.cell(i, e);
                if self.written[c] {
                    writeln!(
                        out,
                        "{i},{e},{},{}",
                        fmt_num(self.weights[c]),
                        fmt_num(self.margins[c])
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Shortest round-trip decimal; infinities as `inf` / `-inf`.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}
