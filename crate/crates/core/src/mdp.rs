//! Finite MDPs over box states, with explicit-format export and import.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extraction::TaggedRegion;
use crate::geometry::HyperBox;

const SUM_TOLERANCE: f64 = 1e-12;

pub type StateId = usize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbstractState {
    pub region: HyperBox,
    pub fail: bool,
    pub depth: usize,
}

/// Where a choice came from: the action it plays and the subregions of
/// the source state it covers, each with the actions possible there.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceProvenance {
    pub action: usize,
    pub pieces: Vec<TaggedRegion>,
    /// Successor of each fault outcome of `action`, in outcome order.
    pub word_targets: Vec<StateId>,
}

impl ChoiceProvenance {
    pub fn covers(&self, s: &[f64]) -> bool {
        self.pieces
            .iter()
            .any(|p| p.region.contains(s).unwrap_or(false))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub distribution: Vec<(f64, StateId)>,
    pub provenance: Option<ChoiceProvenance>,
}

#[derive(Clone, Debug, Default)]
pub struct AbstractMdp {
    states: Vec<AbstractState>,
    initial: Vec<StateId>,
    choices: Vec<Vec<Choice>>,
    index: HashMap<(usize, bool, Vec<u64>), StateId>,
    horizon: usize,
}

impl AbstractMdp {
    pub fn new(horizon: usize) -> Self {
        AbstractMdp {
            horizon,
            ..Default::default()
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    pub fn num_transitions(&self) -> usize {
        self.choices
            .iter()
            .flatten()
            .map(|c| c.distribution.len())
            .sum()
    }

    pub fn state(&self, id: StateId) -> Result<&AbstractState> {
        self.states.get(id).ok_or(Error::UnknownState(id))
    }

    pub fn states(&self) -> &[AbstractState] {
        &self.states
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn choices(&self, id: StateId) -> Result<&[Choice]> {
        self.choices
            .get(id)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownState(id))
    }

    /// Adds a state, or returns the id of an identical one.
    pub fn add_state(&mut self, region: HyperBox, fail: bool, depth: usize) -> StateId {
        let key = (depth, fail, region.key());
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.states.len();
        self.states.push(AbstractState {
            region,
            fail,
            depth,
        });
        self.choices.push(Vec::new());
        self.index.insert(key, id);
        id
    }

    pub fn find_state(&self, region: &HyperBox, fail: bool, depth: usize) -> Option<StateId> {
        self.index.get(&(depth, fail, region.key())).copied()
    }

    pub fn mark_initial(&mut self, id: StateId) -> Result<()> {
        self.state(id)?;
        if !self.initial.contains(&id) {
            self.initial.push(id);
        }
        Ok(())
    }

    /// Adds a choice to `id`. Entries with the same successor are merged.
    pub fn add_choice(
        &mut self,
        id: StateId,
        distribution: &[(f64, StateId)],
        provenance: Option<ChoiceProvenance>,
    ) -> Result<usize> {
        if self.state(id)?.fail {
            return Err(Error::ChoiceOnFailState(id));
        }
        let mut merged: Vec<(f64, StateId)> = Vec::with_capacity(distribution.len());
        for &(p, dst) in distribution {
            self.state(dst)?;
            if !(p > 0.0 && p <= 1.0 + SUM_TOLERANCE) {
                return Err(Error::BadDistribution(p));
            }
            match merged.iter_mut().find(|(_, d)| *d == dst) {
                Some(entry) => entry.0 += p,
                None => merged.push((p, dst)),
            }
        }
        let total: f64 = merged.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::BadDistribution(total));
        }
        let list = &mut self.choices[id];
        list.push(Choice {
            distribution: merged,
            provenance,
        });
        Ok(list.len() - 1)
    }

    /// Writes `<path>` in the explicit transition format and a label file
    /// next to it with the extension replaced by `lab`.
    pub fn export_model(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tra())?;
        fs::write(path.with_extension("lab"), self.to_lab())?;
        Ok(())
    }

    /// States without choices get a probability-one self-loop so that
    /// external checkers see no deadlocks.
    pub fn to_tra(&self) -> String {
        let rows: usize = self.choices.iter().map(|c| c.len().max(1)).sum();
        let transitions: usize = self
            .choices
            .iter()
            .map(|c| {
                if c.is_empty() {
                    1
                } else {
                    c.iter().map(|ch| ch.distribution.len()).sum()
                }
            })
            .sum();
        let mut out = format!("{} {} {}\n", self.states.len(), rows, transitions);
        for (s, list) in self.choices.iter().enumerate() {
            if list.is_empty() {
                let _ = writeln!(out, "{s} 0 {s} {:.16e}", 1.0);
            }
            for (j, ch) in list.iter().enumerate() {
                for &(p, dst) in &ch.distribution {
                    let _ = writeln!(out, "{s} {j} {dst} {p:.16e}");
                }
            }
        }
        out
    }

    pub fn to_lab(&self) -> String {
        let mut out = String::from("0=\"init\" 1=\"fail\"\n");
        for (s, st) in self.states.iter().enumerate() {
            let init = self.initial.contains(&s);
            match (init, st.fail) {
                (true, true) => {
                    let _ = writeln!(out, "{s}: 0 1");
                }
                (true, false) => {
                    let _ = writeln!(out, "{s}: 0");
                }
                (false, true) => {
                    let _ = writeln!(out, "{s}: 1");
                }
                (false, false) => {}
            }
        }
        out
    }
}

/// An MDP read back from the explicit format, without box geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitModel {
    pub choices: Vec<Vec<Vec<(StateId, f64)>>>,
    pub initial: Vec<StateId>,
    pub fail: Vec<bool>,
}

impl ExplicitModel {
    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    /// Maximum probability of reaching a fail state within `k` steps, by
    /// `k` rounds of value iteration.
    pub fn bounded_max_reach(&self, k: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .fail
            .iter()
            .map(|&f| if f { 1.0 } else { 0.0 })
            .collect();
        for _ in 0..k {
            v = (0..self.num_states())
                .map(|s| {
                    if self.fail[s] {
                        return 1.0;
                    }
                    self.choices[s]
                        .iter()
                        .map(|d| d.iter().map(|&(t, p)| p * v[t]).sum::<f64>())
                        .fold(0.0, f64::max)
                })
                .collect();
        }
        v
    }
}

pub fn import_model(tra: impl AsRef<Path>, lab: impl AsRef<Path>) -> Result<ExplicitModel> {
    let bad = |msg: String| Error::ParseError(msg);
    let text = fs::read_to_string(tra)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("empty transition file".into()))?
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| bad(format!("bad header token {t:?}")))
        })
        .collect::<Result<_>>()?;
    if header.len() != 3 {
        return Err(bad("header must be `states choices transitions`".into()));
    }
    let n = header[0];
    let mut choices: Vec<Vec<Vec<(StateId, f64)>>> = vec![Vec::new(); n];
    let mut count = 0;
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(bad(format!("bad transition line {line:?}")));
        }
        let parse_id = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| bad(format!("bad index {t:?}")))
        };
        let (s, j, d) = (parse_id(tok[0])?, parse_id(tok[1])?, parse_id(tok[2])?);
        let p: f64 = tok[3]
            .parse()
            .map_err(|_| bad(format!("bad probability {:?}", tok[3])))?;
        if s >= n || d >= n {
            return Err(Error::UnknownState(s.max(d)));
        }
        while choices[s].len() <= j {
            choices[s].push(Vec::new());
        }
        choices[s][j].push((d, p));
        count += 1;
    }
    if count != header[2] {
        return Err(bad(format!(
            "expected {} transitions, found {count}",
            header[2]
        )));
    }

    let labels = fs::read_to_string(lab)?;
    let mut initial = Vec::new();
    let mut fail = vec![false; n];
    for line in labels.lines().skip(1) {
        let Some((s, ids)) = line.split_once(':') else {
            continue;
        };
        let s: usize = s
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad label line {line:?}")))?;
        if s >= n {
            return Err(Error::UnknownState(s));
        }
        for id in ids.split_whitespace() {
            match id {
                "0" => initial.push(s),
                "1" => fail[s] = true,
                _ => return Err(bad(format!("unknown label {id}"))),
            }
        }
    }
    Ok(ExplicitModel {
        choices,
        initial,
        fail,
    })
}
