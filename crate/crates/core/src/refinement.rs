//! Splitting unsafe initial regions and rebuilding their abstractions.

use serde::{Deserialize, Serialize};

use crate::abstraction::{BuildOptions, Builder};
use crate::environment::Environment;
use crate::error::Result;
use crate::extraction::ActionCache;
use crate::faults::FaultModel;
use crate::geometry::HyperBox;
use crate::mdp::AbstractMdp;
use crate::model_check::max_reach;
use crate::network::Network;
use crate::par;

pub const DEFAULT_MAX_ROUNDS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    Unsafe,
    PrecisionLimited,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe => "unsafe",
            Verdict::PrecisionLimited => "precision_limited",
        }
    }

    /// Safe iff `bound < p_safe`; unsafe regions narrower than `epsilon`
    /// cannot be split further.
    pub fn classify(bound: f64, p_safe: f64, region: &HyperBox, epsilon: f64) -> Verdict {
        if bound < p_safe {
            Verdict::Safe
        } else if region.max_width() < epsilon {
            Verdict::PrecisionLimited
        } else {
            Verdict::Unsafe
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionResult {
    pub region: HyperBox,
    pub upper_bound: f64,
    pub verdict: Verdict,
    pub generation: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineSettings {
    pub k: usize,
    pub p_safe: f64,
    pub max_rounds: usize,
    pub build: BuildOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub regions_split: usize,
    pub states_built: usize,
    pub regions: Vec<RegionResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub regions: Vec<RegionResult>,
    pub rounds: Vec<RoundReport>,
}

/// Region results for the initial states of a built abstraction.
pub fn initial_results(mdp: &AbstractMdp, p_safe: f64, epsilon: f64) -> Result<Vec<RegionResult>> {
    let values = max_reach(mdp, mdp.horizon())?;
    mdp.initial()
        .iter()
        .map(|&id| {
            let region = mdp.state(id)?.region.clone();
            let bound = values[id];
            Ok(RegionResult {
                verdict: Verdict::classify(bound, p_safe, &region, epsilon),
                region,
                upper_bound: bound,
                generation: 0,
            })
        })
        .collect()
}

/// Runs up to `max_rounds` refinement rounds. Each round splits every
/// unsafe region, rebuilds both halves as sole initial states, and reports
/// `min(child bound, parent bound)` for each half.
pub fn refine(
    net: &Network,
    env: &dyn Environment,
    f: &FaultModel,
    results: Vec<RegionResult>,
    settings: &RefineSettings,
    cache: &mut ActionCache,
) -> Result<Refinement> {
    let builder = Builder::new(net, env, f, settings.build.clone())?;
    let eps = settings.build.epsilon;
    let mut regions = results;
    let mut rounds = Vec::new();
    for round in 1..=settings.max_rounds {
        let mut targets: Vec<usize> = (0..regions.len())
            .filter(|&i| regions[i].verdict == Verdict::Unsafe)
            .collect();
        if targets.is_empty() {
            break;
        }
        targets.sort_by(|&a, &b| {
            regions[b]
                .region
                .volume()
                .total_cmp(&regions[a].region.volume())
                .then(a.cmp(&b))
        });
        let halves: Vec<(usize, HyperBox)> = targets
            .iter()
            .map(|&i| {
                let (l, r) = regions[i].region.split()?;
                Ok([(i, l), (i, r)])
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();

        let shared: &ActionCache = cache;
        let built = par::map(&halves, |(_, half)| {
            let mut local = builder.new_cache();
            let mdp = builder.build(
                std::slice::from_ref(half),
                settings.k,
                Some(shared),
                &mut local,
            )?;
            let bound = max_reach(&mdp, settings.k)?[mdp.initial()[0]];
            Ok::<_, crate::error::Error>((bound, mdp.num_states(), local))
        });

        let mut children: Vec<Vec<RegionResult>> = vec![Vec::new(); regions.len()];
        let mut states_built = 0;
        let mut locals = Vec::with_capacity(halves.len());
        for ((parent, half), res) in halves.into_iter().zip(built) {
            let (bound, states, local) = res?;
            states_built += states;
            locals.push(local);
            let p = &regions[parent];
            let bound = bound.min(p.upper_bound);
            children[parent].push(RegionResult {
                verdict: Verdict::classify(bound, settings.p_safe, &half, eps),
                region: half,
                upper_bound: bound,
                generation: p.generation + 1,
            });
        }
        for local in &locals {
            cache.absorb(local)?;
        }

        regions = regions
            .into_iter()
            .zip(children)
            .flat_map(|(r, ch)| if ch.is_empty() { vec![r] } else { ch })
            .collect();
        rounds.push(RoundReport {
            round,
            regions_split: targets.len(),
            states_built,
            regions: regions.clone(),
        });
    }
    Ok(Refinement { regions, rounds })
}
