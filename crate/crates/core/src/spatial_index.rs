//! An in-memory R*-tree over boxes of a fixed dimension.
//!
//! Supports insertion with the R* heuristics (overlap-minimising subtree
//! choice, margin-driven split axis, forced reinsertion), closed window
//! queries, exact-match lookup and coverage-gap computation by box
//! subtraction. There is no deletion.

use crate::error::{Error, Result};
use crate::geometry::HyperBox;

/// Maximum number of children per node.
pub const MAX_FANOUT: usize = 8;
/// Minimum number of children per node after a split (40% of the fan-out).
pub const MIN_FILL: usize = 3;
/// Number of children evicted for forced reinsertion (30% of `MAX_FANOUT + 1`).
pub const REINSERT_COUNT: usize = 3;

pub type RegionId = usize;

#[derive(Clone, Debug)]
pub struct IndexedRegion<T> {
    pub id: RegionId,
    pub region: HyperBox,
    pub payload: T,
}

#[derive(Clone, Debug)]
struct Node {
    // 0 for leaves; leaf kids are region ids, inner kids are node ids
    level: usize,
    mbr: Option<HyperBox>,
    kids: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SpatialIndex<T> {
    dim: usize,
    regions: Vec<IndexedRegion<T>>,
    nodes: Vec<Node>,
    root: usize,
}

impl<T> SpatialIndex<T> {
    pub fn new(dim: usize) -> Self {
        SpatialIndex {
            dim,
            regions: Vec::new(),
            nodes: vec![Node {
                level: 0,
                mbr: None,
                kids: Vec::new(),
            }],
            root: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn get(&self, id: RegionId) -> Option<&IndexedRegion<T>> {
        self.regions.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &IndexedRegion<T>> {
        self.regions.iter()
    }

    pub fn height(&self) -> usize {
        self.nodes[self.root].level + 1
    }

    fn check(&self, b: &HyperBox) -> Result<()> {
        if b.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::dims(self.dim, b.dim()))
        }
    }

    fn kid_box(&self, level: usize, kid: usize) -> &HyperBox {
        if level == 0 {
            &self.regions[kid].region
        } else {
            self.nodes[kid]
                .mbr
                .as_ref()
                .expect("inner nodes are never empty")
        }
    }

    fn recompute_mbr(&mut self, node: usize) {
        let level = self.nodes[node].level;
        let mut acc: Option<HyperBox> = None;
        for &k in &self.nodes[node].kids {
            let b = self.kid_box(level, k);
            acc = Some(match acc {
                None => b.clone(),
                Some(a) => hull(&a, b),
            });
        }
        self.nodes[node].mbr = acc;
    }

    pub fn insert(&mut self, region: HyperBox, payload: T) -> Result<RegionId> {
        self.check(&region)?;
        let id = self.regions.len();
        self.regions.push(IndexedRegion {
            id,
            region,
            payload,
        });
        let mut reinserted = vec![false; self.nodes[self.root].level + 2];
        self.insert_kid(id, 0, &mut reinserted);
        Ok(id)
    }

    fn insert_kid(&mut self, kid: usize, level: usize, reinserted: &mut Vec<bool>) {
        let kbox = self.kid_box(level, kid).clone();
        let path = self.choose_path(&kbox, level);
        let target = *path.last().unwrap();
        self.nodes[target].kids.push(kid);
        self.nodes[target].mbr = Some(match self.nodes[target].mbr.take() {
            None => kbox.clone(),
            Some(m) => hull(&m, &kbox),
        });

        // walk up handling overflow
        let mut i = path.len();
        while i > 0 {
            i -= 1;
            let node = path[i];
            if self.nodes[node].kids.len() <= MAX_FANOUT {
                self.recompute_mbr(node);
                continue;
            }
            let lvl = self.nodes[node].level;
            if reinserted.len() <= lvl {
                reinserted.resize(lvl + 1, false);
            }
            if node != self.root && !reinserted[lvl] {
                reinserted[lvl] = true;
                let evicted = self.evict_far(node);
                for &n in path[..=i].iter().rev() {
                    self.recompute_mbr(n);
                }
                for k in evicted {
                    self.insert_kid(k, lvl, reinserted);
                }
                return;
            }
            let sibling = self.split_node(node);
            if node == self.root {
                let new_root = self.nodes.len();
                self.nodes.push(Node {
                    level: lvl + 1,
                    mbr: None,
                    kids: vec![node, sibling],
                });
                self.recompute_mbr(new_root);
                self.root = new_root;
            } else {
                let parent = path[i - 1];
                self.nodes[parent].kids.push(sibling);
            }
        }
    }

    fn choose_path(&self, b: &HyperBox, level: usize) -> Vec<usize> {
        let mut path = vec![self.root];
        let mut node = self.root;
        while self.nodes[node].level > level {
            let n = &self.nodes[node];
            let kids_are_leaves = n.level == 1;
            let mut best = n.kids[0];
            let mut best_key = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
            for &k in &n.kids {
                let kb = self.kid_box(n.level, k);
                let grown = hull(kb, b);
                let area = kb.volume();
                let area_enl = grown.volume() - area;
                let key = if kids_are_leaves {
                    let mut overlap_enl = 0.0;
                    for &o in &n.kids {
                        if o == k {
                            continue;
                        }
                        let ob = self.kid_box(n.level, o);
                        overlap_enl += overlap_volume(&grown, ob) - overlap_volume(kb, ob);
                    }
                    (overlap_enl, area_enl, area)
                } else {
                    (area_enl, area, 0.0)
                };
                if key < best_key {
                    best_key = key;
                    best = k;
                }
            }
            node = best;
            path.push(node);
        }
        path
    }

    /// Removes the children whose centres lie farthest from the node centre.
    fn evict_far(&mut self, node: usize) -> Vec<usize> {
        let level = self.nodes[node].level;
        let centre = self.nodes[node].mbr.as_ref().unwrap().centre();
        let mut scored: Vec<(f64, usize)> = self.nodes[node]
            .kids
            .iter()
            .map(|&k| {
                let c = self.kid_box(level, k).centre();
                let d: f64 = c.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, k)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let evicted: Vec<usize> = scored[..REINSERT_COUNT].iter().map(|&(_, k)| k).collect();
        self.nodes[node].kids.retain(|k| !evicted.contains(k));
        // close reinsert: nearest of the evicted first
        evicted.into_iter().rev().collect()
    }

    /// R* split; returns the id of the new sibling node.
    fn split_node(&mut self, node: usize) -> usize {
        let level = self.nodes[node].level;
        let kids = std::mem::take(&mut self.nodes[node].kids);
        let boxes: Vec<HyperBox> = kids
            .iter()
            .map(|&k| self.kid_box(level, k).clone())
            .collect();
        let total = kids.len();
        let dists = total - 2 * MIN_FILL + 1;

        let sorted_by = |axis: usize, by_upper: bool| -> Vec<usize> {
            let mut order: Vec<usize> = (0..total).collect();
            order.sort_by(|&a, &b| {
                let (ia, ib) = (boxes[a].interval(axis), boxes[b].interval(axis));
                let (ka, kb) = if by_upper {
                    ((ia.hi(), ia.lo()), (ib.hi(), ib.lo()))
                } else {
                    ((ia.lo(), ia.hi()), (ib.lo(), ib.hi()))
                };
                ka.0.total_cmp(&kb.0)
                    .then(ka.1.total_cmp(&kb.1))
                    .then(a.cmp(&b))
            });
            order
        };
        let group_hull = |idx: &[usize]| -> HyperBox {
            let mut h = boxes[idx[0]].clone();
            for &i in &idx[1..] {
                h = hull(&h, &boxes[i]);
            }
            h
        };

        // axis with the smallest total margin
        let mut best_axis = 0;
        let mut best_margin = f64::INFINITY;
        for axis in 0..self.dim {
            let mut margin = 0.0;
            for by_upper in [false, true] {
                let order = sorted_by(axis, by_upper);
                for k in 0..dists {
                    let cut = MIN_FILL + k;
                    margin += group_hull(&order[..cut]).widths().iter().sum::<f64>();
                    margin += group_hull(&order[cut..]).widths().iter().sum::<f64>();
                }
            }
            if margin < best_margin {
                best_margin = margin;
                best_axis = axis;
            }
        }

        let mut best: Option<(f64, f64, Vec<usize>, usize)> = None;
        for by_upper in [false, true] {
            let order = sorted_by(best_axis, by_upper);
            for k in 0..dists {
                let cut = MIN_FILL + k;
                let (g1, g2) = (group_hull(&order[..cut]), group_hull(&order[cut..]));
                let overlap = overlap_volume(&g1, &g2);
                let area = g1.volume() + g2.volume();
                let better = match &best {
                    None => true,
                    Some((o, a, _, _)) => overlap < *o || (overlap == *o && area < *a),
                };
                if better {
                    best = Some((overlap, area, order.clone(), cut));
                }
            }
        }
        let (_, _, order, cut) = best.unwrap();
        self.nodes[node].kids = order[..cut].iter().map(|&i| kids[i]).collect();
        let sibling_kids: Vec<usize> = order[cut..].iter().map(|&i| kids[i]).collect();
        let sibling = self.nodes.len();
        self.nodes.push(Node {
            level,
            mbr: None,
            kids: sibling_kids,
        });
        self.recompute_mbr(node);
        self.recompute_mbr(sibling);
        sibling
    }

    /// All stored regions whose boxes intersect `window` (closed semantics),
    /// in insertion order.
    pub fn window_query(&self, window: &HyperBox) -> Result<Vec<&IndexedRegion<T>>> {
        Ok(self.window_query_counted(window)?.0)
    }

    /// Like [`window_query`](Self::window_query), also returning the number
    /// of tree nodes visited.
    pub fn window_query_counted(
        &self,
        window: &HyperBox,
    ) -> Result<(Vec<&IndexedRegion<T>>, usize)> {
        self.check(window)?;
        let mut out = Vec::new();
        let mut visits = 0;
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            visits += 1;
            let node = &self.nodes[n];
            match &node.mbr {
                Some(m) if m.intersects_unchecked(window) => {}
                _ => continue,
            }
            for &k in &node.kids {
                if node.level == 0 {
                    if self.regions[k].region.intersects_unchecked(window) {
                        out.push(&self.regions[k]);
                    }
                } else if self.nodes[k]
                    .mbr
                    .as_ref()
                    .is_some_and(|m| m.intersects_unchecked(window))
                {
                    stack.push(k);
                }
            }
        }
        out.sort_by_key(|r| r.id);
        Ok((out, visits))
    }

    /// First stored region bitwise equal to `b`.
    pub fn find_exact(&self, b: &HyperBox) -> Result<Option<&IndexedRegion<T>>> {
        Ok(self.window_query(b)?.into_iter().find(|r| r.region == *b))
    }

    /// Interior-disjoint boxes covering exactly `window` minus the union of
    /// stored boxes; empty when the window is fully covered.
    pub fn coverage_gaps(&self, window: &HyperBox) -> Result<Vec<HyperBox>> {
        let hits = self.window_query(window)?;
        let mut remaining = vec![window.clone()];
        for r in hits {
            let mut next = Vec::with_capacity(remaining.len());
            for piece in remaining {
                next.extend(piece.subtract(&r.region)?);
            }
            remaining = next;
            if remaining.is_empty() {
                break;
            }
        }
        Ok(remaining)
    }
}

fn hull(a: &HyperBox, b: &HyperBox) -> HyperBox {
    a.hull(b).expect("index boxes share one dimension")
}

fn overlap_volume(a: &HyperBox, b: &HyperBox) -> f64 {
    a.intervals()
        .iter()
        .zip(b.intervals())
        .map(|(x, y)| (x.hi().min(y.hi()) - x.lo().max(y.lo())).max(0.0))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bx(b: &[(f64, f64)]) -> HyperBox {
        HyperBox::from_bounds(b).unwrap()
    }

    fn random_box(rng: &mut ChaCha8Rng, dim: usize, extent: f64) -> HyperBox {
        let bounds: Vec<(f64, f64)> = (0..dim)
            .map(|_| {
                let lo = rng.gen_range(0.0..100.0);
                (lo, lo + rng.gen_range(0.0..extent))
            })
            .collect();
        bx(&bounds)
    }

    #[test]
    fn insert_then_query() {
        let mut idx = SpatialIndex::new(2);
        idx.insert(bx(&[(0.0, 1.0), (0.0, 1.0)]), 0usize).unwrap();
        let hits = idx.window_query(&bx(&[(0.5, 2.0), (0.0, 1.0)])).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].payload, 0);
        assert!(idx
            .window_query(&bx(&[(5.0, 6.0), (5.0, 6.0)]))
            .unwrap()
            .is_empty());
        let same = idx.window_query(&bx(&[(0.0, 1.0), (0.0, 1.0)])).unwrap();
        assert_eq!(same.len(), 1);
    }

    #[test]
    fn dimension_checks() {
        let mut idx: SpatialIndex<()> = SpatialIndex::new(2);
        assert!(matches!(
            idx.insert(bx(&[(0.0, 1.0)]), ()),
            Err(Error::DimMismatch { .. })
        ));
        assert!(idx.window_query(&bx(&[(0.0, 1.0)])).is_err());
        assert!(idx.coverage_gaps(&bx(&[(0.0, 1.0)])).is_err());
    }

    #[test]
    fn randomized_queries_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2, 4] {
            let mut idx = SpatialIndex::new(dim);
            let mut all = Vec::new();
            for i in 0..10_000 {
                let b = random_box(&mut rng, dim, 3.0);
                idx.insert(b.clone(), i).unwrap();
                all.push(b);
            }
            for _ in 0..200 {
                let w = random_box(&mut rng, dim, 15.0);
                let got: Vec<usize> = idx.window_query(&w).unwrap().iter().map(|r| r.id).collect();
                let want: Vec<usize> = all
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.intersects(&w).unwrap())
                    .map(|(i, _)| i)
                    .collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn ids_are_stable_and_exact_lookup_works() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut idx = SpatialIndex::new(2);
        let boxes: Vec<HyperBox> = (0..500).map(|_| random_box(&mut rng, 2, 2.0)).collect();
        for (i, b) in boxes.iter().enumerate() {
            assert_eq!(idx.insert(b.clone(), i).unwrap(), i);
        }
        for (i, b) in boxes.iter().enumerate() {
            assert_eq!(idx.get(i).unwrap().region, *b);
            let hit = idx.find_exact(b).unwrap().unwrap();
            assert_eq!(hit.region, *b);
        }
    }

    #[test]
    fn gaps_examples() {
        let mut idx = SpatialIndex::new(1);
        idx.insert(bx(&[(0.0, 1.0)]), ()).unwrap();
        assert_eq!(
            idx.coverage_gaps(&bx(&[(0.0, 2.0)])).unwrap(),
            vec![bx(&[(1.0, 2.0)])]
        );

        let mut idx = SpatialIndex::new(2);
        idx.insert(bx(&[(0.0, 1.0), (0.0, 1.0)]), ()).unwrap();
        assert!(idx
            .coverage_gaps(&bx(&[(0.0, 1.0), (0.0, 1.0)]))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn gaps_membership_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut idx = SpatialIndex::new(2);
        let window = bx(&[(20.0, 60.0), (20.0, 60.0)]);
        for _ in 0..60 {
            let lo0 = rng.gen_range(10.0..60.0);
            let lo1 = rng.gen_range(10.0..60.0);
            idx.insert(
                bx(&[
                    (lo0, lo0 + rng.gen_range(1.0..12.0)),
                    (lo1, lo1 + rng.gen_range(1.0..12.0)),
                ]),
                (),
            )
            .unwrap();
        }
        let gaps = idx.coverage_gaps(&window).unwrap();
        for (i, g) in gaps.iter().enumerate() {
            assert!(window.contains_box(g).unwrap());
            for h in &gaps[i + 1..] {
                assert!(!g.overlaps_interior(h));
            }
        }
        for _ in 0..10_000 {
            let p = [rng.gen_range(20.0..60.0), rng.gen_range(20.0..60.0)];
            let in_gap = gaps.iter().any(|g| g.contains(&p).unwrap());
            let in_stored = idx.iter().any(|r| r.region.contains(&p).unwrap());
            assert!(
                in_gap != in_stored,
                "point {p:?}: gap {in_gap}, stored {in_stored}"
            );
        }
    }

    #[test]
    fn node_visits_grow_sublinearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut visits_at = Vec::new();
        let mut idx = SpatialIndex::new(2);
        let mut n = 0;
        for target in [1_000, 16_000] {
            while n < target {
                idx.insert(random_box(&mut rng, 2, 0.5), ()).unwrap();
                n += 1;
            }
            let mut total = 0;
            for _ in 0..100 {
                let w = random_box(&mut rng, 2, 0.5);
                total += idx.window_query_counted(&w).unwrap().1;
            }
            visits_at.push(total as f64 / 100.0);
        }
        // 16x the data; a linear scan would visit 16x the nodes
        assert!(visits_at[1] < 8.0 * visits_at[0], "{visits_at:?}");
    }
}
