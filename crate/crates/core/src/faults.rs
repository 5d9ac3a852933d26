//! Controller fault models: for each intended action, a finite distribution
//! over the action sequences that actually execute.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

pub type Word = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(rename = "prob")]
    pub probability: f64,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaultModel {
    // per action, merged and sorted lexicographically by word
    table: Vec<Vec<Outcome>>,
}

impl FaultModel {
    /// Builds a model from raw per-action outcome lists, merging duplicate
    /// words and checking that each list is a distribution.
    pub fn new(num_actions: usize, raw: Vec<Vec<Outcome>>) -> Result<Self> {
        if raw.len() != num_actions {
            return Err(Error::Config(format!(
                "fault table has {} entries for {num_actions} actions",
                raw.len()
            )));
        }
        let mut table = Vec::with_capacity(num_actions);
        for outcomes in raw {
            let mut merged: BTreeMap<Word, f64> = BTreeMap::new();
            for o in outcomes {
                if !(o.probability > 0.0 && o.probability <= 1.0) {
                    return Err(Error::BadProbability(o.probability));
                }
                if let Some(&bad) = o.word.iter().find(|&&a| a >= num_actions) {
                    return Err(Error::BadActionIndex {
                        index: bad,
                        count: num_actions,
                    });
                }
                *merged.entry(o.word).or_insert(0.0) += o.probability;
            }
            let total: f64 = merged.values().sum();
            if (total - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::BadDistribution(total));
            }
            table.push(
                merged
                    .into_iter()
                    .map(|(word, probability)| Outcome { probability, word })
                    .collect(),
            );
        }
        Ok(FaultModel { table })
    }

    pub fn fault_free(num_actions: usize) -> Self {
        FaultModel {
            table: (0..num_actions)
                .map(|a| {
                    vec![Outcome {
                        probability: 1.0,
                        word: vec![a],
                    }]
                })
                .collect(),
        }
    }

    /// Each action executes twice with probability `p`.
    pub fn sticky(p: f64, num_actions: usize) -> Result<Self> {
        check_open_unit(p)?;
        let raw = (0..num_actions)
            .map(|a| {
                vec![
                    Outcome {
                        probability: 1.0 - p,
                        word: vec![a],
                    },
                    Outcome {
                        probability: p,
                        word: vec![a, a],
                    },
                ]
            })
            .collect();
        FaultModel::new(num_actions, raw)
    }

    /// Each action fails to execute with probability `p`.
    pub fn dropped(p: f64, num_actions: usize) -> Result<Self> {
        check_open_unit(p)?;
        let raw = (0..num_actions)
            .map(|a| {
                vec![
                    Outcome {
                        probability: p,
                        word: vec![],
                    },
                    Outcome {
                        probability: 1.0 - p,
                        word: vec![a],
                    },
                ]
            })
            .collect();
        FaultModel::new(num_actions, raw)
    }

    pub fn num_actions(&self) -> usize {
        self.table.len()
    }

    pub fn outcomes(&self, action: usize) -> Result<&[Outcome]> {
        self.table
            .get(action)
            .map(Vec::as_slice)
            .ok_or(Error::BadActionIndex {
                index: action,
                count: self.table.len(),
            })
    }

    /// Largest number of outcomes of any action.
    pub fn max_support(&self) -> usize {
        self.table.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn check_open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::BadProbability(p))
    }
}

/// Fault model section of a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FaultConfig {
    None,
    Sticky {
        p: f64,
    },
    Dropped {
        p: f64,
    },
    /// Action index (as a string key) to its outcome list.
    Custom {
        table: BTreeMap<String, Vec<Outcome>>,
    },
}

impl FaultConfig {
    pub fn build(&self, num_actions: usize) -> Result<FaultModel> {
        match self {
            FaultConfig::None => Ok(FaultModel::fault_free(num_actions)),
            FaultConfig::Sticky { p } => FaultModel::sticky(*p, num_actions),
            FaultConfig::Dropped { p } => FaultModel::dropped(*p, num_actions),
            FaultConfig::Custom { table } => {
                let mut raw = vec![Vec::new(); num_actions];
                for (key, outcomes) in table {
                    let a: usize = key.parse().map_err(|_| {
                        Error::Config(format!("fault table key {key:?} is not an action index"))
                    })?;
                    if a >= num_actions {
                        return Err(Error::BadActionIndex {
                            index: a,
                            count: num_actions,
                        });
                    }
                    raw[a] = outcomes.clone();
                }
                FaultModel::new(num_actions, raw)
            }
        }
    }
}
