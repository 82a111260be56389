//! Experiment configuration.
//!
//! The config file is INI-style `key = value` text. Top-level keys set the
//! run; the `[dataset]`, `[noise]`, `[model]`, `[optimizer]` and
//! `[scheduler]` sections set the parts. Unknown keys are rejected.
//!
//! ```text
//! seed = 0
//! epochs = 100
//! batch_size = 128
//! out = runs/gauss
//!
//! [dataset]
//! kind = gaussians
//! n = 2000
//! d = 2
//! delta = 3
//! test_n = 2000
//!
//! [noise]
//! family = binary_asymmetric
//! rate_neg = 0.4
//! rate_pos = 0.1
//!
//! [model]
//! kind = linear
//!
//! [optimizer]
//! lr = 0.1
//!
//! [scheduler]
//! method = marvel
//! warm_up = 15
//! wait = 4
//! ```
//!
//! When `[optimizer] decay_epochs` is absent the learning-rate schedule comes
//! from the method preset: CE decays at 1/3 and 2/3 of the run, MARVEL and
//! MARVEL+ at 2/3 and 5/6.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::data::Generator;
use crate::model::OptimizerConfig;
use crate::noise::{parse_pairs, NoiseSpec};
use crate::scheduler::{Method, SchedulerConfig, StatsScope};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Synthetic training sample plus an independent clean test sample of
    /// `test_n` instances (none when 0).
    Generated { generator: Generator, test_n: usize },
    /// A dataset file. The test set is `test_path` if given, otherwise a
    /// seeded `test_fraction` holdout.
    File {
        path: PathBuf,
        test_path: Option<PathBuf>,
        test_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Linear,
    Mlp { hidden: Vec<usize> },
}

impl ModelSpec {
    pub fn hidden(&self) -> &[usize] {
        match self {
            ModelSpec::Linear => &[],
            ModelSpec::Mlp { hidden } => hidden,
        }
    }
}

/// Output layout for two-class problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOutput {
    /// One logit, logistic loss.
    Logit,
    /// Two logits, softmax cross entropy.
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub noise: NoiseSpec,
    pub model: ModelSpec,
    pub binary_output: BinaryOutput,
    /// Base optimizer settings; see [`ExperimentConfig::optimizer`].
    pub optimizer: OptimizerConfig,
    /// Explicit decay epochs. `None` selects the method preset.
    pub decay_epochs: Option<Vec<usize>>,
    pub scheduler: SchedulerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Check ledger invariants after every epoch.
    pub audit: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Generated {
                generator: Generator::Gaussians {
                    n: 2000,
                    d: 2,
                    delta: 3.0,
                },
                test_n: 2000,
            },
            noise: NoiseSpec::None,
            model: ModelSpec::Linear,
            binary_output: BinaryOutput::Logit,
            optimizer: OptimizerConfig::default(),
            decay_epochs: None,
            scheduler: SchedulerConfig::default(),
            epochs: 100,
            batch_size: 128,
            seed: 0,
            out_dir: PathBuf::from("out"),
            audit: false,
        }
    }
}

/// Learning-rate decay epochs for a method when none are configured.
pub fn schedule_preset(method: Method, epochs: usize) -> Vec<usize> {
    let at = |num: usize, den: usize| (epochs * num + den / 2) / den;
    let mut e = match method {
        Method::Ce => vec![at(1, 3), at(2, 3)],
        Method::Marvel | Method::MarvelPlus => vec![at(2, 3), at(5, 6)],
    };
    e.retain(|&x| x >= 1);
    e.dedup();
    e
}

impl ExperimentConfig {
    /// Optimizer settings with the decay schedule resolved.
    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            decay_epochs: self
                .decay_epochs
                .clone()
                .unwrap_or_else(|| schedule_preset(self.scheduler.method, self.epochs)),
            ..self.optimizer.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs <= self.scheduler.warm_up {
            return Err(Error::Config(format!(
                "epochs ({}) must exceed warm_up ({})",
                self.epochs, self.scheduler.warm_up
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if let DataSource::File { test_fraction, .. } = &self.data {
            if !(0.0..1.0).contains(test_fraction) {
                return Err(Error::Config(format!(
                    "test_fraction must be in [0, 1), got {test_fraction}"
                )));
            }
        }
        self.scheduler.validate()?;
        self.optimizer().validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        // Relative dataset paths resolve against the config file's directory.
        if let DataSource::File { path: p, test_path, .. } = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new(""));
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if let Some(t) = test_path {
                if t.is_relative() {
                    *t = base.join(&*t);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = ExperimentConfig::default();
        let src = Sections { ini: &ini };

        for section in ini.sections() {
            match section {
                None | Some("dataset" | "noise" | "model" | "optimizer" | "scheduler") => {}
                Some(other) => return Err(Error::Config(format!("unknown section [{other}]"))),
            }
        }

        src.check_keys(None, &["seed", "epochs", "batch_size", "out", "audit"])?;
        if let Some(v) = src.get(None, "seed")? {
            cfg.seed = v;
        }
        if let Some(v) = src.get(None, "epochs")? {
            cfg.epochs = v;
        }
        if let Some(v) = src.get(None, "batch_size")? {
            cfg.batch_size = v;
        }
        if let Some(v) = src.raw(None, "out") {
            cfg.out_dir = PathBuf::from(v);
        }
        if let Some(v) = src.get(None, "audit")? {
            cfg.audit = v;
        }

        let ds = Some("dataset");
        src.check_keys(
            ds,
            &["kind", "n", "d", "delta", "sigma", "test_n", "path", "test_path", "test_fraction"],
        )?;
        let kind = src.raw(ds, "kind").unwrap_or("gaussians");
        cfg.data = match kind {
            "gaussians" | "ring" => {
                let n = src.get(ds, "n")?.unwrap_or(2000);
                let generator = if kind == "gaussians" {
                    Generator::Gaussians {
                        n,
                        d: src.get(ds, "d")?.unwrap_or(2),
                        delta: src.get(ds, "delta")?.unwrap_or(3.0),
                    }
                } else {
                    Generator::Ring {
                        n,
                        sigma: src.get(ds, "sigma")?.unwrap_or(0.05),
                    }
                };
                DataSource::Generated {
                    generator,
                    test_n: src.get(ds, "test_n")?.unwrap_or(n),
                }
            }
            "file" => DataSource::File {
                path: src
                    .raw(ds, "path")
                    .map(PathBuf::from)
                    .ok_or_else(|| Error::Config("[dataset] kind = file needs path".into()))?,
                test_path: src.raw(ds, "test_path").map(PathBuf::from),
                test_fraction: src.get(ds, "test_fraction")?.unwrap_or(0.2),
            },
            other => return Err(Error::Config(format!("unknown dataset kind `{other}`"))),
        };

        let nz = Some("noise");
        src.check_keys(nz, &["family", "rate", "rate_neg", "rate_pos", "pairs"])?;
        let rate = |src: &Sections| -> Result<f64> {
            src.get(nz, "rate")?
                .ok_or_else(|| Error::Config("[noise] needs rate".into()))
        };
        cfg.noise = match src.raw(nz, "family").unwrap_or("none") {
            "none" => NoiseSpec::None,
            "binary_asymmetric" | "binary" => NoiseSpec::BinaryAsymmetric {
                rate_neg: src.get(nz, "rate_neg")?.map_or_else(|| rate(&src), Ok)?,
                rate_pos: src.get(nz, "rate_pos")?.map_or_else(|| rate(&src), Ok)?,
            },
            "multiclass_symmetric" | "symmetric" => NoiseSpec::MulticlassSymmetric {
                rate: rate(&src)?,
            },
            "circular" => NoiseSpec::Circular {
                rate: rate(&src)?,
            },
            "pair_map" | "pair" => NoiseSpec::PairMap {
                rate: rate(&src)?,
                pairs: parse_pairs(
                    src.raw(nz, "pairs")
                        .ok_or_else(|| Error::Config("[noise] pair_map needs pairs".into()))?,
                )?,
            },
            other => return Err(Error::Config(format!("unknown noise family `{other}`"))),
        };

        let md = Some("model");
        src.check_keys(md, &["kind", "hidden", "binary_output"])?;
        cfg.model = match src.raw(md, "kind").unwrap_or("linear") {
            "linear" => ModelSpec::Linear,
            "mlp" => ModelSpec::Mlp {
                hidden: parse_list(src.raw(md, "hidden").unwrap_or("16"), "hidden")?,
            },
            other => return Err(Error::Config(format!("unknown model kind `{other}`"))),
        };
        cfg.binary_output = match src.raw(md, "binary_output").unwrap_or("logit") {
            "logit" => BinaryOutput::Logit,
            "softmax" => BinaryOutput::Softmax,
            other => return Err(Error::Config(format!("unknown binary_output `{other}`"))),
        };

        let op = Some("optimizer");
        src.check_keys(op, &["lr", "momentum", "weight_decay", "decay_epochs", "decay_factor"])?;
        if let Some(v) = src.get(op, "lr")? {
            cfg.optimizer.learning_rate = v;
        }
        if let Some(v) = src.get(op, "momentum")? {
            cfg.optimizer.momentum = v;
        }
        if let Some(v) = src.get(op, "weight_decay")? {
            cfg.optimizer.weight_decay = v;
        }
        if let Some(v) = src.get(op, "decay_factor")? {
            cfg.optimizer.decay_factor = v;
        }
        if let Some(v) = src.raw(op, "decay_epochs") {
            cfg.decay_epochs = Some(parse_list(v, "decay_epochs")?);
        }

        let sc = Some("scheduler");
        src.check_keys(sc, &["method", "warm_up", "wait", "stats_scope", "sigma_floor"])?;
        if let Some(v) = src.get::<Method>(sc, "method")? {
            cfg.scheduler.method = v;
        }
        if let Some(v) = src.get(sc, "warm_up")? {
            cfg.scheduler.warm_up = v;
        }
        if let Some(v) = src.get(sc, "wait")? {
            cfg.scheduler.wait = v;
        }
        if let Some(v) = src.get::<StatsScope>(sc, "stats_scope")? {
            cfg.scheduler.stats_scope = v;
        }
        if let Some(v) = src.get(sc, "sigma_floor")? {
            cfg.scheduler.sigma_floor = v;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    /// The fully resolved configuration in the same format [`parse`] reads.
    ///
    /// [`parse`]: ExperimentConfig::parse
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let list = |v: &[usize]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "out = {}", self.out_dir.display());
        let _ = writeln!(s, "audit = {}", self.audit);

        let _ = writeln!(s, "\n[dataset]");
        match &self.data {
            DataSource::Generated { generator, test_n } => {
                match generator {
                    Generator::Gaussians { n, d, delta } => {
                        let _ = writeln!(s, "kind = gaussians\nn = {n}\nd = {d}\ndelta = {delta}");
                    }
                    Generator::Ring { n, sigma } => {
                        let _ = writeln!(s, "kind = ring\nn = {n}\nsigma = {sigma}");
                    }
                }
                let _ = writeln!(s, "test_n = {test_n}");
            }
            DataSource::File {
                path,
                test_path,
                test_fraction,
            } => {
                let _ = writeln!(s, "kind = file\npath = {}", path.display());
                if let Some(t) = test_path {
                    let _ = writeln!(s, "test_path = {}", t.display());
                }
                let _ = writeln!(s, "test_fraction = {test_fraction}");
            }
        }

        let _ = writeln!(s, "\n[noise]");
        let _ = match &self.noise {
            NoiseSpec::None => writeln!(s, "family = none"),
            NoiseSpec::BinaryAsymmetric { rate_neg, rate_pos } => writeln!(
                s,
                "family = binary_asymmetric\nrate_neg = {rate_neg}\nrate_pos = {rate_pos}"
            ),
            NoiseSpec::MulticlassSymmetric { rate } => {
                writeln!(s, "family = multiclass_symmetric\nrate = {rate}")
            }
            NoiseSpec::Circular { rate } => writeln!(s, "family = circular\nrate = {rate}"),
            NoiseSpec::PairMap { rate, pairs } => {
                let p: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}>{b}")).collect();
                writeln!(s, "family = pair_map\nrate = {rate}\npairs = {}", p.join(","))
            }
        };

        let _ = writeln!(s, "\n[model]");
        let _ = match &self.model {
            ModelSpec::Linear => writeln!(s, "kind = linear"),
            ModelSpec::Mlp { hidden } => writeln!(s, "kind = mlp\nhidden = {}", list(hidden)),
        };
        let _ = writeln!(
            s,
            "binary_output = {}",
            match self.binary_output {
                BinaryOutput::Logit => "logit",
                BinaryOutput::Softmax => "softmax",
            }
        );

        let opt = self.optimizer();
        let _ = writeln!(s, "\n[optimizer]");
        let _ = writeln!(s, "lr = {}", opt.learning_rate);
        let _ = writeln!(s, "momentum = {}", opt.momentum);
        let _ = writeln!(s, "weight_decay = {}", opt.weight_decay);
        let _ = writeln!(s, "decay_epochs = {}", list(&opt.decay_epochs));
        let _ = writeln!(s, "decay_factor = {}", opt.decay_factor);

        let sch = &self.scheduler;
        let _ = writeln!(s, "\n[scheduler]");
        let _ = writeln!(s, "method = {}", sch.method);
        let _ = writeln!(s, "warm_up = {}", sch.warm_up);
        let _ = writeln!(s, "wait = {}", sch.wait);
        let _ = writeln!(s, "stats_scope = {}", sch.stats_scope);
        let _ = writeln!(s, "sigma_floor = {}", sch.sigma_floor);
        s
    }
}

fn parse_list(s: &str, key: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: `{v}` is not a non-negative integer")))
        })
        .collect()
}

struct Sections<'a> {
    ini: &'a Ini,
}

impl Sections<'_> {
    fn raw(&self, section: Option<&str>, key: &str) -> Option<&str> {
        self.ini
            .section(section)
            .and_then(|s| s.get(key))
            .map(str::trim)
            .filter(|v| !v.is_empty())
    }

    fn get<T: std::str::FromStr>(&self, section: Option<&str>, key: &str) -> Result<Option<T>> {
        self.raw(section, key)
            .map(|v| {
                v.parse().map_err(|_| {
                    Error::Config(format!(
                        "[{}] {key}: cannot parse `{v}`",
                        section.unwrap_or("top")
                    ))
                })
            })
            .transpose()
    }

    fn check_keys(&self, section: Option<&str>, allowed: &[&str]) -> Result<()> {
        if let Some(props) = self.ini.section(section) {
            for (k, _) in props.iter() {
                if !allowed.contains(&k) {
                    return Err(Error::Config(format!(
                        "unknown key `{k}` in [{}]",
                        section.unwrap_or("top")
                    )));
                }
            }
        }
        Ok(())
    }
}
