//! Branch-and-bound decomposition of a box into regions where the policy
//! always, never, or possibly takes a given action.
//!
//! The worklist is processed in FIFO waves: every domain in the current
//! wave is bounded (in parallel when the wave is large), then classified in
//! queue order. `UB < 0` on the action-layer network means the action is
//! the strict argmax everywhere in the domain, `LB > 0` means it never is;
//! otherwise the domain is split, unless it is already narrower than the
//! precision, in which case it stays undecided.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::network::{BoundMethod, Network};
use crate::par;
use crate::spatial_index::SpatialIndex;

// waves smaller than this are bounded on the calling thread
const PAR_WAVE: usize = 32;
// stop carving cached regions out of a domain past this many fragments
const CACHE_FRAGMENT_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Sat,
    Unsat,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionPartition {
    pub action: usize,
    pub epsilon: f64,
    pub sat: Vec<HyperBox>,
    pub unsat: Vec<HyperBox>,
    pub undecided: Vec<HyperBox>,
}

impl ActionPartition {
    fn leaves(&self) -> impl Iterator<Item = (&HyperBox, Classification)> {
        self.sat
            .iter()
            .map(|b| (b, Classification::Sat))
            .chain(self.unsat.iter().map(|b| (b, Classification::Unsat)))
            .chain(
                self.undecided
                    .iter()
                    .map(|b| (b, Classification::Undecided)),
            )
    }

    pub fn total_volume(&self) -> f64 {
        self.leaves().map(|(b, _)| b.volume()).sum()
    }
}

/// A piece of a consistent partition with the actions the policy may take
/// there. A single action means the piece is decided.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedRegion {
    pub region: HyperBox,
    pub actions: Vec<usize>,
}

impl TaggedRegion {
    pub fn is_decided(&self) -> bool {
        self.actions.len() == 1
    }
}

/// Boxes already proven sat (`true`) or unsat (`false`), one index per action.
#[derive(Clone, Debug)]
pub struct ActionCache {
    per_action: Vec<SpatialIndex<bool>>,
}

impl ActionCache {
    pub fn new(dim: usize, num_actions: usize) -> Self {
        ActionCache {
            per_action: (0..num_actions).map(|_| SpatialIndex::new(dim)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.per_action.iter().map(SpatialIndex::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn record(&mut self, findings: &Findings) -> Result<()> {
        for (a, boxes) in findings.per_action.iter().enumerate() {
            for (b, sat) in boxes {
                self.per_action[a].insert(b.clone(), *sat)?;
            }
        }
        Ok(())
    }

    /// Appends every entry of `other`, preserving its insertion order.
    pub fn absorb(&mut self, other: &ActionCache) -> Result<()> {
        for (mine, theirs) in self.per_action.iter_mut().zip(&other.per_action) {
            for r in theirs.iter() {
                mine.insert(r.region.clone(), r.payload)?;
            }
        }
        Ok(())
    }
}

/// Read-only stack of caches consulted in order.
#[derive(Clone, Copy, Debug, Default)]
pub struct CacheView<'a> {
    layers: [Option<&'a ActionCache>; 2],
}

impl<'a> CacheView<'a> {
    pub fn none() -> Self {
        CacheView::default()
    }

    pub fn single(cache: &'a ActionCache) -> Self {
        CacheView {
            layers: [Some(cache), None],
        }
    }

    pub fn stacked(shared: &'a ActionCache, local: &'a ActionCache) -> Self {
        CacheView {
            layers: [Some(shared), Some(local)],
        }
    }

    fn caches(&self) -> impl Iterator<Item = &'a ActionCache> + '_ {
        self.layers.iter().flatten().copied()
    }
}

/// Newly classified boxes per action, to be recorded into a cache.
#[derive(Clone, Debug, Default)]
pub struct Findings {
    per_action: Vec<Vec<(HyperBox, bool)>>,
}

impl Findings {
    pub fn is_empty(&self) -> bool {
        self.per_action.iter().all(Vec::is_empty)
    }
}

/// A policy network prepared for region extraction.
#[derive(Clone, Debug)]
pub struct PolicyExtractor {
    net: Network,
    action_nets: Vec<Network>,
    epsilon: f64,
    method: BoundMethod,
}

impl PolicyExtractor {
    pub fn new(net: &Network, epsilon: f64, method: BoundMethod) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::BadPrecision(epsilon));
        }
        let action_nets = (0..net.output_dim())
            .map(|a| net.add_action_layer(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolicyExtractor {
            net: net.clone(),
            action_nets,
            epsilon,
            method,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn num_actions(&self) -> usize {
        self.action_nets.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn check(&self, action: usize, b: &HyperBox) -> Result<()> {
        if action >= self.num_actions() {
            return Err(Error::BadActionIndex {
                index: action,
                count: self.num_actions(),
            });
        }
        if b.dim() != self.net.input_dim() {
            return Err(Error::dims(self.net.input_dim(), b.dim()));
        }
        Ok(())
    }

    fn bound(&self, action: usize, b: &HyperBox) -> (f64, f64) {
        let net = &self.action_nets[action];
        let naive = net.bounds_interval(b).expect("dimension checked");
        let (lb, ub) = (naive.lb[0], naive.ub[0]);
        if self.method == BoundMethod::Interval || ub < 0.0 || lb > 0.0 {
            return (lb, ub);
        }
        let tight = net.bounds_planet(b).expect("dimension checked");
        (tight.lb[0], tight.ub[0])
    }

    pub fn find_action_subregions(
        &self,
        action: usize,
        b: &HyperBox,
        cache: CacheView<'_>,
    ) -> Result<(ActionPartition, Vec<(HyperBox, bool)>)> {
        self.check(action, b)?;
        let mut part = ActionPartition {
            action,
            epsilon: self.epsilon,
            sat: Vec::new(),
            unsat: Vec::new(),
            undecided: Vec::new(),
        };

        // carve out regions classified by earlier calls
        let mut remaining = vec![b.clone()];
        'layers: for c in cache.caches() {
            for hit in c.per_action[action].window_query(b)? {
                let mut next = Vec::with_capacity(remaining.len());
                for r in remaining {
                    if !r.overlaps_interior(&hit.region) {
                        next.push(r);
                        continue;
                    }
                    let piece = r
                        .intersection(&hit.region)?
                        .expect("overlapping boxes intersect");
                    if hit.payload {
                        part.sat.push(piece);
                    } else {
                        part.unsat.push(piece);
                    }
                    next.extend(r.subtract(&hit.region)?);
                }
                remaining = next;
                if remaining.is_empty() || remaining.len() > CACHE_FRAGMENT_LIMIT {
                    break 'layers;
                }
            }
        }

        let mut fresh = Vec::new();
        let mut queue: VecDeque<HyperBox> = remaining.into();
        while !queue.is_empty() {
            let wave: Vec<HyperBox> = queue.drain(..).collect();
            let bounds = if wave.len() >= PAR_WAVE {
                par::map(&wave, |d| self.bound(action, d))
            } else {
                wave.iter().map(|d| self.bound(action, d)).collect()
            };
            for (domain, (lb, ub)) in wave.into_iter().zip(bounds) {
                if ub < 0.0 {
                    fresh.push((domain.clone(), true));
                    part.sat.push(domain);
                } else if lb > 0.0 {
                    fresh.push((domain.clone(), false));
                    part.unsat.push(domain);
                } else if domain.max_width() < self.epsilon {
                    part.undecided.push(domain);
                } else {
                    let (left, right) = domain.split()?;
                    queue.push_back(left);
                    queue.push_back(right);
                }
            }
        }
        Ok((part, fresh))
    }

    fn statuses(&self, d: &HyperBox) -> Vec<Classification> {
        let classify = |(lb, ub): (f64, f64)| {
            if ub < 0.0 {
                Classification::Sat
            } else if lb > 0.0 {
                Classification::Unsat
            } else {
                Classification::Undecided
            }
        };
        if self.num_actions() == 2 {
            // the second action network is the negation of the first
            let (lb, ub) = self.bound(0, d);
            return vec![classify((lb, ub)), classify((-ub, -lb))];
        }
        (0..self.num_actions())
            .map(|a| classify(self.bound(a, d)))
            .collect()
    }

    /// Splits `b` into interior-disjoint pieces tagged with the actions the
    /// policy may choose there.
    ///
    /// A single branch-and-bound runs over all actions at once: a domain is
    /// final when some action is proven to be the argmax, when all but one
    /// action are ruled out, or when it is narrower than the precision.
    /// Regions proven for an action by earlier calls are taken from the
    /// cache instead.
    pub fn partition_consistent(
        &self,
        b: &HyperBox,
        cache: CacheView<'_>,
    ) -> Result<(Vec<TaggedRegion>, Findings)> {
        self.check(0, b)?;
        let m = self.num_actions();
        let mut regions = Vec::new();
        let mut findings = Findings {
            per_action: vec![Vec::new(); m],
        };

        let mut remaining = vec![b.clone()];
        'layers: for c in cache.caches() {
            for (a, index) in c.per_action.iter().enumerate() {
                for hit in index.window_query(b)? {
                    if !hit.payload {
                        continue;
                    }
                    let mut next = Vec::with_capacity(remaining.len());
                    for r in remaining {
                        if !r.overlaps_interior(&hit.region) {
                            next.push(r);
                            continue;
                        }
                        let piece = r
                            .intersection(&hit.region)?
                            .expect("overlapping boxes intersect");
                        regions.push(TaggedRegion {
                            region: piece,
                            actions: vec![a],
                        });
                        next.extend(r.subtract(&hit.region)?);
                    }
                    remaining = next;
                    if remaining.is_empty() || remaining.len() > CACHE_FRAGMENT_LIMIT {
                        break 'layers;
                    }
                }
            }
        }

        let mut queue: VecDeque<HyperBox> = remaining.into();
        while !queue.is_empty() {
            let wave: Vec<HyperBox> = queue.drain(..).collect();
            let statuses = if wave.len() >= PAR_WAVE {
                par::map(&wave, |d| self.statuses(d))
            } else {
                wave.iter().map(|d| self.statuses(d)).collect()
            };
            for (domain, st) in wave.into_iter().zip(statuses) {
                let sat: Vec<usize> = (0..m).filter(|&a| st[a] == Classification::Sat).collect();
                let open: Vec<usize> = (0..m).filter(|&a| st[a] != Classification::Unsat).collect();
                let actions = if !sat.is_empty() {
                    if let [a] = sat[..] {
                        findings.per_action[a].push((domain.clone(), true));
                    }
                    sat
                } else if open.len() == 1 {
                    open
                } else if domain.max_width() < self.epsilon {
                    if open.is_empty() {
                        (0..m).collect()
                    } else {
                        open
                    }
                } else {
                    let (left, right) = domain.split()?;
                    queue.push_back(left);
                    queue.push_back(right);
                    continue;
                };
                regions.push(TaggedRegion {
                    region: domain,
                    actions,
                });
            }
        }
        Ok((regions, findings))
    }
}

/// One-shot extraction without a cache.
pub fn find_action_subregions(
    net: &Network,
    action: usize,
    b: &HyperBox,
    epsilon: f64,
    method: BoundMethod,
) -> Result<ActionPartition> {
    if action >= net.output_dim() {
        return Err(Error::BadActionIndex {
            index: action,
            count: net.output_dim(),
        });
    }
    let ex = PolicyExtractor::new(net, epsilon, method)?;
    Ok(ex.find_action_subregions(action, b, CacheView::none())?.0)
}

/// One-shot consistent partition without a cache.
pub fn partition_consistent(
    net: &Network,
    b: &HyperBox,
    epsilon: f64,
    method: BoundMethod,
) -> Result<Vec<TaggedRegion>> {
    let ex = PolicyExtractor::new(net, epsilon, method)?;
    Ok(ex.partition_consistent(b, CacheView::none())?.0)
}
