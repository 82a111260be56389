//! Seeded label corruption.
//!
//! Flip counts are exact: `round(rate * count)` with halves rounded up. Only the
//! choice of which instances flip (and, for symmetric noise, the wrong class
//! each one receives) depends on the seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::rng::{stream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Class 0 (−1) flips to class 1 at `rate_neg`, class 1 (+1) to class 0
    /// at `rate_pos`. Symmetric binary noise is `rate_neg == rate_pos`.
    BinaryAsymmetric { rate_neg: f64, rate_pos: f64 },
    /// `round(rate * n)` instances, each to a uniformly chosen other class.
    MulticlassSymmetric { rate: f64 },
    /// Class `c` flips to `(c + 1) mod k`.
    Circular { rate: f64 },
    /// Each listed source class flips to its target; other classes untouched.
    PairMap { rate: f64, pairs: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub observed: Vec<usize>,
    pub noisy: Vec<bool>,
}

fn check_rate(rate: f64, what: &str) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Domain(format!("{what} must be in [0, 1), got {rate}")));
    }
    Ok(())
}

impl NoiseSpec {
    pub fn validate(&self, classes: usize) -> Result<()> {
        match self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::BinaryAsymmetric { rate_neg, rate_pos } => {
                check_rate(*rate_neg, "rate_neg")?;
                check_rate(*rate_pos, "rate_pos")?;
                if rate_neg + rate_pos >= 1.0 {
                    return Err(Error::Domain(format!(
                        "binary noise rates must sum below 1, got {rate_neg} + {rate_pos}"
                    )));
                }
                if classes != 2 {
                    return Err(Error::Domain(format!(
                        "binary noise needs 2 classes, dataset has {classes}"
                    )));
                }
                Ok(())
            }
            NoiseSpec::MulticlassSymmetric { rate } | NoiseSpec::Circular { rate } => {
                check_rate(*rate, "rate")?;
                if classes < 2 {
                    return Err(Error::Domain("noise needs at least 2 classes".into()));
                }
                Ok(())
            }
            NoiseSpec::PairMap { rate, pairs } => {
                check_rate(*rate, "rate")?;
                for (i, &(s, t)) in pairs.iter().enumerate() {
                    if s >= classes || t >= classes {
                        return Err(Error::Domain(format!(
                            "pair {s}>{t} out of range for {classes} classes"
                        )));
                    }
                    if s == t {
                        return Err(Error::Domain(format!("pair {s}>{t} maps a class to itself")));
                    }
                    if pairs[..i].iter().any(|&(p, _)| p == s) {
                        return Err(Error::Domain(format!("source class {s} mapped twice")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Parses `none`, `binary:0.4,0.1`, `symmetric:0.2`, `circular:0.3`,
/// `pair:0.4:9>1,2>0`.
impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("noise spec `{s}`: {msg}"));
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{v}` is not a number")))
        };
        let (family, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        match family {
            "none" => Ok(NoiseSpec::None),
            "binary" | "binary_asymmetric" => {
                let (a, b) = rest.split_once(',').unwrap_or((rest, rest));
                Ok(NoiseSpec::BinaryAsymmetric {
                    rate_neg: num(a)?,
                    rate_pos: num(b)?,
                })
            }
            "symmetric" | "multiclass_symmetric" => Ok(NoiseSpec::MulticlassSymmetric {
                rate: num(rest)?,
            }),
            "circular" => Ok(NoiseSpec::Circular { rate: num(rest)? }),
            "pair" | "pair_map" => {
                let (rate, pairs) = rest
                    .split_once(':')
                    .ok_or_else(|| bad("expected pair:<rate>:<s>t,...>"))?;
                Ok(NoiseSpec::PairMap {
                    rate: num(rate)?,
                    pairs: parse_pairs(pairs)?,
                })
            }
            other => Err(bad(&format!("unknown family `{other}`"))),
        }
    }
}

/// Parses `9>1,2>0,...`.
pub fn parse_pairs(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once('>')
                .ok_or_else(|| Error::Config(format!("pair `{p}` is not `source>target`")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("pair `{p}`: `{v}` is not a class index")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::None => f.write_str("none"),
            NoiseSpec::BinaryAsymmetric { rate_neg, rate_pos } => {
                write!(f, "binary:{rate_neg},{rate_pos}")
            }
            NoiseSpec::MulticlassSymmetric { rate } => write!(f, "symmetric:{rate}"),
            NoiseSpec::Circular { rate } => write!(f, "circular:{rate}"),
            NoiseSpec::PairMap { rate, pairs } => {
                write!(f, "pair:{rate}:")?;
                for (i, (s, t)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}>{t}")?;
                }
                Ok(())
            }
        }
    }
}

/// Number of flips for a group of `count` instances, rounding halves up.
pub fn flip_count(rate: f64, count: usize) -> usize {
    (rate * count as f64).round() as usize
}

pub fn corrupt(labels: &[usize], classes: usize, spec: &NoiseSpec, seed: u64) -> Result<Corruption> {
    spec.validate(classes)?;
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::Domain(format!("label {bad} out of range for {classes} classes")));
    }
    let mut rng = stream(seed, Stream::Noise, 0);
    let mut observed = labels.to_vec();
    let mut noisy = vec![false; labels.len()];

    let members = |c: usize| -> Vec<usize> {
        labels
            .iter()
            .enumerate()
            .filter(|&(_, &y)| y == c)
            .map(|(i, _)| i)
            .collect()
    };
    // Flip a uniformly chosen `rate` share of `group` to `target`.
    let mut flip_group = |group: &[usize], rate: f64, rng: &mut rand_chacha::ChaCha8Rng, target: &dyn Fn(usize) -> usize| {
        let picks = index::sample(rng, group.len(), flip_count(rate, group.len()));
        for p in picks {
            let i = group[p];
            observed[i] = target(labels[i]);
            noisy[i] = true;
        }
    };

    match spec {
        NoiseSpec::None => {}
        NoiseSpec::BinaryAsymmetric { rate_neg, rate_pos } => {
            flip_group(&members(0), *rate_neg, &mut rng, &|_| 1);
            flip_group(&members(1), *rate_pos, &mut rng, &|_| 0);
        }
        NoiseSpec::Circular { rate } => {
            for c in 0..classes {
                flip_group(&members(c), *rate, &mut rng, &|y| (y + 1) % classes);
            }
        }
        NoiseSpec::PairMap { rate, pairs } => {
            for &(s, t) in pairs {
                flip_group(&members(s), *rate, &mut rng, &|_| t);
            }
        }
        NoiseSpec::MulticlassSymmetric { rate } => {
            let picks = index::sample(&mut rng, labels.len(), flip_count(*rate, labels.len()));
            let mut picks = picks.into_vec();
            picks.sort_unstable();
            for i in picks {
                // Uniform over the k-1 other classes.
                let r = rng.random_range(0..classes - 1);
                observed[i] = if r >= labels[i] { r + 1 } else { r };
                noisy[i] = true;
            }
        }
    }
    Ok(Corruption { observed, noisy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn exact_binary_count() {
        let labels = vec![1; 10];
        let c = corrupt(&labels, 2, &NoiseSpec::BinaryAsymmetric { rate_neg: 0.0, rate_pos: 0.2 }, 3)
            .unwrap();
        assert_eq!(c.noisy.iter().filter(|&&b| b).count(), 2);
        assert_eq!(c.observed.iter().filter(|&&y| y == 0).count(), 2);
    }

    #[test]
    fn zero_rate_is_identity() {
        let labels = vec![0, 1, 2, 1, 0];
        for spec in [
            NoiseSpec::MulticlassSymmetric { rate: 0.0 },
            NoiseSpec::Circular { rate: 0.0 },
            NoiseSpec::None,
        ] {
            let c = corrupt(&labels, 3, &spec, 9).unwrap();
            assert_eq!(c.observed, labels);
            assert!(c.noisy.iter().all(|&b| !b));
        }
    }

    #[test]
    fn circular_rounding() {
        // Class sizes 2, 1, 1 at rate 0.5: round(1.0) = 1 and round(0.5) = 1.
        let labels = vec![0, 0, 1, 2];
        for seed in 0..20 {
            let c = corrupt(&labels, 3, &NoiseSpec::Circular { rate: 0.5 }, seed).unwrap();
            let zero_flips: Vec<usize> = (0..2).filter(|&i| c.noisy[i]).collect();
            assert_eq!(zero_flips.len(), 1);
            assert_eq!(c.observed[zero_flips[0]], 1);
            assert_eq!(&c.observed[2..], &[2, 0]);
            assert_eq!(c.noisy.iter().filter(|&&b| b).count(), 3);
        }
        assert_eq!(flip_count(0.5, 1), 1);
        assert_eq!(flip_count(0.5, 3), 2);
        assert_eq!(flip_count(0.25, 10), 3);
        assert_eq!(flip_count(0.2, 10), 2);
    }

    #[test]
    fn pair_map_touches_only_sources() {
        let labels: Vec<usize> = (0..100).map(|i| i % 10).collect();
        let spec: NoiseSpec = "pair:0.4:9>1,2>0,4>7,3>5,5>3".parse().unwrap();
        let c = corrupt(&labels, 10, &spec, 1).unwrap();
        for (i, &y) in labels.iter().enumerate() {
            match y {
                9 | 2 | 4 | 3 | 5 => {}
                _ => assert!(!c.noisy[i]),
            }
        }
        // 10 per class, round(4.0) = 4 flips per source.
        for (s, t) in [(9, 1), (2, 0), (4, 7), (3, 5), (5, 3)] {
            let n = (0..100).filter(|&i| labels[i] == s && c.noisy[i]).count();
            assert_eq!(n, 4);
            assert!((0..100).filter(|&i| labels[i] == s && c.noisy[i]).all(|i| c.observed[i] == t));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let l = [0, 1];
        let bad = [
            NoiseSpec::BinaryAsymmetric { rate_neg: 0.6, rate_pos: 0.4 },
            NoiseSpec::BinaryAsymmetric { rate_neg: -0.1, rate_pos: 0.0 },
            NoiseSpec::Circular { rate: 1.0 },
            NoiseSpec::PairMap { rate: 0.1, pairs: vec![(0, 1), (0, 1)] },
        ];
        for spec in bad {
            assert!(matches!(corrupt(&l, 2, &spec, 0), Err(Error::Domain(_))), "{spec}");
        }
    }

    #[test]
    fn spec_round_trips_through_text() {
        for s in ["none", "binary:0.4,0.1", "symmetric:0.2", "circular:0.3", "pair:0.4:9>1,2>0"] {
            let spec: NoiseSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("gauss:0.1".parse::<NoiseSpec>().is_err());
        assert!("pair:0.1:9-1".parse::<NoiseSpec>().is_err());
    }

    #[test]
    fn seeds_move_the_flipped_set() {
        let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
        let spec = NoiseSpec::MulticlassSymmetric { rate: 0.3 };
        let sets: BTreeSet<Vec<bool>> = (0..100)
            .map(|s| corrupt(&labels, 4, &spec, s).unwrap().noisy)
            .collect();
        assert_eq!(sets.len(), 100);
        assert_eq!(corrupt(&labels, 4, &spec, 5).unwrap(), corrupt(&labels, 4, &spec, 5).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flips_are_exact_and_consistent(
                labels in prop::collection::vec(0usize..4, 1..120),
                rate in 0.0f64..0.95,
                family in 0u8..3,
                seed in any::<u64>(),
            ) {
                let spec = match family {
                    0 => NoiseSpec::MulticlassSymmetric { rate },
                    1 => NoiseSpec::Circular { rate },
                    _ => NoiseSpec::PairMap { rate, pairs: vec![(0, 3), (2, 1)] },
                };
                let c = corrupt(&labels, 4, &spec, seed).unwrap();
                for i in 0..labels.len() {
                    prop_assert_eq!(c.noisy[i], c.observed[i] != labels[i]);
                }
                let count = |c_: usize| labels.iter().filter(|&&y| y == c_).count();
                let flipped = c.noisy.iter().filter(|&&b| b).count();
                let expect = match &spec {
                    NoiseSpec::MulticlassSymmetric { .. } => flip_count(rate, labels.len()),
                    NoiseSpec::Circular { .. } => (0..4).map(|k| flip_count(rate, count(k))).sum(),
                    _ => flip_count(rate, count(0)) + flip_count(rate, count(2)),
                };
                prop_assert_eq!(flipped, expect);
            }
        }
    }
}
