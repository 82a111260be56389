use crate::data::{holdout_split, load_dataset, batches, Dataset};
use crate::ledger::HistoryLedger;
use crate::metrics::{
    accuracy, label_precision_recall, margin_summary, memorization_ratio, retained_fractions,
    EpochReport,
};
use crate::model::{weighted_ce_loss, Model, Sgd};
use crate::noise::{corrupt, NoiseSpec};
use crate::rng::{stream, Stream};
use crate::scheduler::decide_batch;
use crate::{Error, Result};

use super::config::{BinaryOutput, DataSource, ExperimentConfig};

/// Training and test data after noise injection.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Option<Dataset>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub reports: Vec<EpochReport>,
    /// Training indices with a nonzero weight after the last epoch.
    pub retained: Vec<usize>,
    pub model: Model,
    pub ledger: HistoryLedger,
    /// The resolved config, as written to `config.echo`.
    pub config_echo: String,
}

impl RunResult {
    pub fn last(&self) -> &EpochReport {
        self.reports.last().expect("a run has at least one epoch")
    }
}

/// Loads or generates the data and corrupts the training labels.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let (mut train, test) = match &cfg.data {
        DataSource::Generated { generator, test_n } => {
            let train = generator.generate(cfg.seed, 0)?;
            let test = if *test_n > 0 {
                let g = with_size(generator, *test_n);
                Some(g.generate(cfg.seed, 1)?)
            } else {
                None
            };
            (train, test)
        }
        DataSource::File {
            path,
            test_path,
            test_fraction,
        } => {
            let all = load_dataset(path)?;
            match test_path {
                Some(t) => (all, Some(load_dataset(t)?)),
                None if *test_fraction > 0.0 => {
                    let (tr, te) = holdout_split(all.len(), *test_fraction, cfg.seed)?;
                    (all.subset(&tr), Some(all.subset(&te)))
                }
                None => (all, None),
            }
        }
    };
    if cfg.noise != NoiseSpec::None {
        let c = corrupt(&train.labels, train.classes, &cfg.noise, cfg.seed)?;
        // Labels read from a file may lack ground truth; the pre-noise labels
        // then become the reference.
        for (t, &y) in train.truth.iter_mut().zip(&train.labels) {
            t.get_or_insert(y);
        }
        train.labels = c.observed;
    }
    Ok(Prepared { train, test })
}

fn with_size(g: &crate::data::Generator, n: usize) -> crate::data::Generator {
    use crate::data::Generator::*;
    match *g {
        Gaussians { d, delta, .. } => Gaussians { n, d, delta },
        Ring { sigma, .. } => Ring { n, sigma },
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let data = prepare(cfg)?;
    train_on(cfg, &data.train, data.test.as_ref())
}

/// The training loop on explicit data.
pub fn train_on(cfg: &ExperimentConfig, train: &Dataset, test: Option<&Dataset>) -> Result<RunResult> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let n = train.len();
    let out_dim = if train.classes == 2 && cfg.binary_output == BinaryOutput::Logit {
        1
    } else {
        train.classes
    };
    let mut model = Model::init(
        train.dim(),
        cfg.model.hidden(),
        out_dim,
        &mut stream(cfg.seed, Stream::Init, 0),
    )?;
    let opt_cfg = cfg.optimizer();
    let mut sgd = Sgd::new(&model, opt_cfg.clone());
    let mut ledger = HistoryLedger::new(n, cfg.epochs)?;
    let truth = train.true_labels();
    let noisy = train.noisy_mask();
    let all: Vec<usize> = (0..n).collect();
    let mut reports = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        for batch in batches(n, cfg.batch_size, epoch, cfg.seed) {
            let x = train.features.select_rows(&batch);
            let y: Vec<usize> = batch.iter().map(|&i| train.labels[i]).collect();
            let logits = model.forward(&x)?;
            let decision = decide_batch(&cfg.scheduler, &ledger, epoch, &batch, &logits, &y)?;
            if !decision.skip {
                let loss = weighted_ce_loss(&logits, &y, &decision.loss_weights)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch });
                }
                let grads = model.gradients(&x, &y, &decision.loss_weights)?;
                sgd.step(&mut model, &grads, epoch)?;
            }
            ledger.record(epoch, &batch, &decision.policy_weights, &decision.margins)?;
        }
        if model.parameters().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        if cfg.audit {
            audit_epoch(&ledger, epoch, cfg)?;
        }

        let weights = ledger.weights_at(epoch, &all)?;
        let retained: Vec<bool> = weights.iter().map(|&w| w != 0.0).collect();
        let train_pred = model.forward(&train.features)?.predictions();
        let test_acc = match test {
            Some(t) if !t.is_empty() => {
                let reference = t.true_labels().unwrap_or_else(|| t.labels.clone());
                Some(accuracy(&model.forward(&t.features)?.predictions(), &reference)?)
            }
            _ => None,
        };
        let margins = ledger.margins_at(epoch, &all)?;
        let kept_margins: Vec<f64> = margins
            .iter()
            .zip(&retained)
            .filter(|&(_, &r)| r)
            .map(|(&m, _)| m)
            .collect();
        let summary = margin_summary(&kept_margins).ok();

        let mut report = EpochReport {
            epoch,
            lr: opt_cfg.lr_at(epoch),
            train_acc: accuracy(&train_pred, &train.labels)?,
            test_acc,
            mem_ratio: None,
            retained_clean_frac: None,
            retained_noisy_frac: None,
            label_precision: None,
            label_recall: None,
            margin_median: summary.map(|s| s.median),
            margin_var: summary.map(|s| s.variance),
            margin_q05: summary.map(|s| s.q05),
        };
        if let (Some(truth), Some(noisy)) = (&truth, &noisy) {
            report.mem_ratio = memorization_ratio(&train_pred, &train.labels, truth).ok();
            let frac = retained_fractions(&retained, noisy)?;
            report.retained_clean_frac = frac.clean;
            report.retained_noisy_frac = frac.noisy;
            let q = label_precision_recall(&retained, &train.labels, truth)?;
            report.label_precision = q.precision;
            report.label_recall = q.recall;
        }
        reports.push(report);
    }

    let retained = ledger
        .final_weights()
        .iter()
        .enumerate()
        .filter(|&(_, &w)| w != 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(RunResult {
        reports,
        retained,
        model,
        ledger,
        config_echo: cfg.echo(),
    })
}

/// Permanence holds and nothing is removed before `warm_up + wait`.
fn audit_epoch(ledger: &HistoryLedger, epoch: usize, cfg: &ExperimentConfig) -> Result<()> {
    ledger.audit()?;
    if epoch < cfg.scheduler.warm_up + cfg.scheduler.wait {
        let all: Vec<usize> = (0..ledger.len()).collect();
        if let Some(i) = ledger.weights_at(epoch, &all)?.iter().position(|&w| w == 0.0) {
            return Err(Error::Invariant(format!(
                "instance {i} removed at epoch {epoch}, before warm_up + wait = {}",
                cfg.scheduler.warm_up + cfg.scheduler.wait
            )));
        }
    }
    Ok(())
}
