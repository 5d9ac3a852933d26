//! Construction of the controller execution abstraction.
//!
//! States are explored one depth layer at a time. Each frontier box is
//! partitioned into policy-consistent pieces, every candidate action's
//! pieces are pushed through the abstract environment under each fault
//! outcome, and the successors become the next layer. Successors that may
//! fail are absorbing.

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, FailStatus};
use crate::error::{Error, Result};
use crate::extraction::{ActionCache, CacheView, Findings, PolicyExtractor, TaggedRegion};
use crate::faults::FaultModel;
use crate::geometry::HyperBox;
use crate::mdp::{AbstractMdp, ChoiceProvenance, StateId};
use crate::network::{BoundMethod, Network};
use crate::par;

pub const DEFAULT_MAX_STATES: usize = 500_000;

/// How choices are formed from a state's consistent partition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceGranularity {
    /// One choice per action over all pieces where it is possible; each
    /// successor is the hull of the pieces' abstract successors.
    #[default]
    PerAction,
    /// One choice per (piece, possible action) pair.
    PerSubregion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildOptions {
    pub epsilon: f64,
    pub method: BoundMethod,
    pub granularity: ChoiceGranularity,
    pub max_states: usize,
    pub use_cache: bool,
}

impl BuildOptions {
    pub fn new(epsilon: f64) -> Self {
        BuildOptions {
            epsilon,
            method: BoundMethod::Planet,
            granularity: ChoiceGranularity::PerAction,
            max_states: DEFAULT_MAX_STATES,
            use_cache: true,
        }
    }
}

struct PendingChoice {
    action: usize,
    pieces: Vec<TaggedRegion>,
    // per fault outcome, in outcome order
    successors: Vec<(f64, HyperBox, bool)>,
}

struct Expansion {
    choices: Vec<PendingChoice>,
    findings: Findings,
}

/// A prepared abstraction builder that can share an action cache across
/// several builds.
pub struct Builder<'a> {
    extractor: PolicyExtractor,
    env: &'a dyn Environment,
    faults: &'a FaultModel,
    opts: BuildOptions,
}

impl<'a> Builder<'a> {
    pub fn new(
        net: &Network,
        env: &'a dyn Environment,
        faults: &'a FaultModel,
        opts: BuildOptions,
    ) -> Result<Self> {
        env.check_dim(net.input_dim())?;
        if net.output_dim() != env.num_actions() {
            return Err(Error::BadActionIndex {
                index: net.output_dim(),
                count: env.num_actions(),
            });
        }
        if faults.num_actions() != env.num_actions() {
            return Err(Error::Config(format!(
                "fault model covers {} actions, environment has {}",
                faults.num_actions(),
                env.num_actions()
            )));
        }
        let extractor = PolicyExtractor::new(net, opts.epsilon, opts.method)?;
        Ok(Builder {
            extractor,
            env,
            faults,
            opts,
        })
    }

    pub fn options(&self) -> &BuildOptions {
        &self.opts
    }

    pub fn new_cache(&self) -> ActionCache {
        ActionCache::new(self.env.state_dim(), self.env.num_actions())
    }

    fn is_fail(&self, b: &HyperBox) -> Result<bool> {
        Ok(self.env.box_fail_status(b)? == FailStatus::IntersectsFail)
    }

    fn successors(
        &self,
        pieces: &[&HyperBox],
        action: usize,
    ) -> Result<Vec<(f64, HyperBox, bool)>> {
        let mut out = Vec::new();
        for o in self.faults.outcomes(action)? {
            let mut hull: Option<HyperBox> = None;
            for p in pieces {
                let next = self.env.abstract_step(p, &o.word)?;
                hull = Some(match hull {
                    Some(h) => h.hull(&next)?,
                    None => next,
                });
            }
            let b = hull.expect("at least one piece");
            let fail = self.is_fail(&b)?;
            out.push((o.probability, b, fail));
        }
        Ok(out)
    }

    fn expand(&self, b: &HyperBox, view: CacheView<'_>) -> Result<Expansion> {
        let (tagged, findings) = self.extractor.partition_consistent(b, view)?;
        let mut choices = Vec::new();
        match self.opts.granularity {
            ChoiceGranularity::PerAction => {
                for a in 0..self.env.num_actions() {
                    let pieces: Vec<TaggedRegion> = tagged
                        .iter()
                        .filter(|t| t.actions.contains(&a))
                        .cloned()
                        .collect();
                    if pieces.is_empty() {
                        continue;
                    }
                    let regions: Vec<&HyperBox> = pieces.iter().map(|t| &t.region).collect();
                    let successors = self.successors(&regions, a)?;
                    choices.push(PendingChoice {
                        action: a,
                        pieces,
                        successors,
                    });
                }
            }
            ChoiceGranularity::PerSubregion => {
                for t in &tagged {
                    for &a in &t.actions {
                        choices.push(PendingChoice {
                            action: a,
                            pieces: vec![t.clone()],
                            successors: self.successors(&[&t.region], a)?,
                        });
                    }
                }
            }
        }
        Ok(Expansion { choices, findings })
    }

    /// Builds the abstraction from `init` to horizon `k`, consulting
    /// `shared` read-only and recording new extraction results in `local`.
    pub fn build(
        &self,
        init: &[HyperBox],
        k: usize,
        shared: Option<&ActionCache>,
        local: &mut ActionCache,
    ) -> Result<AbstractMdp> {
        if init.is_empty() {
            return Err(Error::NoInitialStates);
        }
        let mut mdp = AbstractMdp::new(k);
        let mut frontier: Vec<StateId> = Vec::new();
        for b in init {
            self.env.check_dim(b.dim())?;
            let fail = self.is_fail(b)?;
            let before = mdp.num_states();
            let id = mdp.add_state(b.clone(), fail, 0);
            mdp.mark_initial(id)?;
            if !fail && mdp.num_states() > before {
                frontier.push(id);
            }
        }
        self.guard(&mdp)?;

        for depth in 0..k {
            let boxes: Vec<HyperBox> = frontier
                .iter()
                .map(|&id| mdp.states()[id].region.clone())
                .collect();
            let expansions = {
                let view = match (self.opts.use_cache, shared) {
                    (false, _) => CacheView::none(),
                    (true, Some(s)) => CacheView::stacked(s, local),
                    (true, None) => CacheView::single(local),
                };
                par::map(&boxes, |b| self.expand(b, view))
            };
            let mut next = Vec::new();
            for (&id, exp) in frontier.iter().zip(expansions) {
                let exp = exp?;
                for ch in exp.choices {
                    let mut targets = Vec::with_capacity(ch.successors.len());
                    let mut dist = Vec::with_capacity(ch.successors.len());
                    for (p, b, fail) in ch.successors {
                        let before = mdp.num_states();
                        let dst = mdp.add_state(b, fail, depth + 1);
                        if !fail && mdp.num_states() > before {
                            next.push(dst);
                        }
                        targets.push(dst);
                        dist.push((p, dst));
                    }
                    mdp.add_choice(
                        id,
                        &dist,
                        Some(ChoiceProvenance {
                            action: ch.action,
                            pieces: ch.pieces,
                            word_targets: targets,
                        }),
                    )?;
                }
                self.guard(&mdp)?;
                if self.opts.use_cache {
                    local.record(&exp.findings)?;
                }
            }
            frontier = next;
        }
        Ok(mdp)
    }

    fn guard(&self, mdp: &AbstractMdp) -> Result<()> {
        if mdp.num_states() > self.opts.max_states {
            Err(Error::MemoryGuard {
                limit: self.opts.max_states,
            })
        } else {
            Ok(())
        }
    }
}

/// Builds the abstraction MDP to horizon `k` with initial states `init`.
pub fn build_mdp(
    net: &Network,
    env: &dyn Environment,
    f: &FaultModel,
    init: &[HyperBox],
    k: usize,
    opts: &BuildOptions,
) -> Result<AbstractMdp> {
    let builder = Builder::new(net, env, f, opts.clone())?;
    let mut cache = builder.new_cache();
    builder.build(init, k, None, &mut cache)
}

/// Tiles `region` with cells of the given widths; cells in the last row of
/// each dimension are truncated to fit. Cells are ordered with dimension 0
/// varying slowest.
pub fn initial_grid(region: &HyperBox, widths: &[f64]) -> Result<Vec<HyperBox>> {
    if widths.len() != region.dim() {
        return Err(Error::dims(region.dim(), widths.len()));
    }
    if let Some(&w) = widths.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::BadPrecision(w));
    }
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(region.dim());
    for (iv, &w) in region.intervals().iter().zip(widths) {
        let n = ((iv.width() / w) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let cuts: Vec<f64> = (0..=n)
            .map(|j| {
                if j == n {
                    iv.hi()
                } else {
                    iv.lo() + j as f64 * w
                }
            })
            .collect();
        axes.push(cuts.windows(2).map(|c| (c[0], c[1])).collect());
    }
    let mut cells: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for axis in &axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&seg| {
                    let mut c = prefix.clone();
                    c.push(seg);
                    c
                })
            })
            .collect();
    }
    cells.iter().map(|c| HyperBox::from_bounds(c)).collect()
}
