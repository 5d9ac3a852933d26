//! Finite-horizon reachability: backward induction on the abstraction and
//! exhaustive enumeration on the concrete system.

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::faults::FaultModel;
use crate::mdp::{AbstractMdp, StateId};
use crate::network::Network;
use crate::par;

const KAHAN_THRESHOLD: usize = 8;

fn weighted_sum(dist: &[(f64, StateId)], values: &[f64]) -> f64 {
    if dist.len() <= KAHAN_THRESHOLD {
        return dist.iter().map(|&(p, t)| p * values[t]).sum();
    }
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &(p, t) in dist {
        let y = p * values[t] - c;
        let s = sum + y;
        c = (s - sum) - y;
        sum = s;
    }
    sum
}

/// `Pr^max(reach fail within k - depth(s) steps)` for every state of depth
/// at most `k`; deeper states get 0.
pub fn max_reach(mdp: &AbstractMdp, k: usize) -> Result<Vec<f64>> {
    if k > mdp.horizon() {
        return Err(Error::NotLayered(format!(
            "query horizon {k} exceeds the model horizon {}",
            mdp.horizon()
        )));
    }
    let states = mdp.states();
    let mut layers: Vec<Vec<StateId>> = vec![Vec::new(); k + 1];
    for (id, st) in states.iter().enumerate() {
        if st.depth <= k {
            layers[st.depth].push(id);
        }
        for ch in mdp.choices(id)? {
            for &(_, dst) in &ch.distribution {
                if states[dst].depth != st.depth + 1 {
                    return Err(Error::NotLayered(format!(
                        "transition {id} -> {dst} goes from depth {} to {}",
                        st.depth, states[dst].depth
                    )));
                }
            }
        }
    }

    let mut values = vec![0.0; states.len()];
    for (depth, layer) in layers.iter().enumerate().rev() {
        let computed = par::map(layer, |&id| {
            let st = &states[id];
            if st.fail {
                1.0
            } else if depth == k {
                0.0
            } else {
                mdp.choices(id)
                    .expect("id from the model")
                    .iter()
                    .map(|ch| weighted_sum(&ch.distribution, &values))
                    .fold(0.0, f64::max)
                    .min(1.0)
            }
        });
        for (&id, v) in layer.iter().zip(computed) {
            values[id] = v;
        }
    }
    Ok(values)
}

fn check_compatible(net: &Network, env: &dyn Environment, f: &FaultModel) -> Result<()> {
    env.check_dim(net.input_dim())?;
    if net.output_dim() != env.num_actions() {
        return Err(Error::BadActionIndex {
            index: net.output_dim(),
            count: env.num_actions(),
        });
    }
    if f.num_actions() != env.num_actions() {
        return Err(Error::Config(format!(
            "fault model covers {} actions, environment has {}",
            f.num_actions(),
            env.num_actions()
        )));
    }
    Ok(())
}

/// Successor distribution of the concrete system at `s`.
pub fn concrete_successors(
    net: &Network,
    env: &dyn Environment,
    f: &FaultModel,
    s: &[f64],
) -> Result<Vec<(f64, Vec<f64>)>> {
    let a = net.policy_action(s)?;
    f.outcomes(a)?
        .iter()
        .map(|o| Ok((o.probability, env.step_word(s, &o.word)?)))
        .collect()
}

/// Exact probability that the concrete system started at `s0` fails within
/// `k` steps, by depth-first enumeration of every fault path.
pub fn concrete_reach(
    net: &Network,
    env: &dyn Environment,
    f: &FaultModel,
    s0: &[f64],
    k: usize,
) -> Result<f64> {
    check_compatible(net, env, f)?;
    env.check_dim(s0.len())?;
    enumerate(net, env, f, s0, k)
}

fn enumerate(
    net: &Network,
    env: &dyn Environment,
    f: &FaultModel,
    s: &[f64],
    k: usize,
) -> Result<f64> {
    if env.is_fail(s)? {
        return Ok(1.0);
    }
    if k == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (p, next) in concrete_successors(net, env, f, s)? {
        total += p * enumerate(net, env, f, &next, k - 1)?;
    }
    Ok(total)
}

/// Value of the abstraction under the policy that, at each abstract state,
/// plays the choice generated by the concrete state's own action and
/// subregion, following the concrete trajectory of `s0` from `state`.
///
/// Fails with `Uncovered` if no such choice exists or a concrete successor
/// leaves the abstract successor it is assigned to.
pub fn sigma_reach(
    mdp: &AbstractMdp,
    net: &Network,
    env: &dyn Environment,
    f: &FaultModel,
    s0: &[f64],
    state: StateId,
    k: usize,
) -> Result<f64> {
    check_compatible(net, env, f)?;
    let st = mdp.state(state)?;
    if !st.region.contains(s0)? {
        return Err(Error::Uncovered);
    }
    if st.fail {
        return Ok(1.0);
    }
    if st.depth >= k {
        return Ok(0.0);
    }
    let a = net.policy_action(s0)?;
    let choice = mdp
        .choices(state)?
        .iter()
        .filter_map(|c| c.provenance.as_ref())
        .find(|p| p.action == a && p.covers(s0))
        .ok_or(Error::Uncovered)?;
    let mut total = 0.0;
    for (o, &target) in f.outcomes(a)?.iter().zip(&choice.word_targets) {
        let next = env.step_word(s0, &o.word)?;
        total += o.probability * sigma_reach(mdp, net, env, f, &next, target, k)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HyperBox;

    fn unit(x: f64) -> HyperBox {
        HyperBox::from_bounds(&[(x, x + 1.0)]).unwrap()
    }

    #[test]
    fn trivial_values() {
        let mut m = AbstractMdp::new(0);
        let s = m.add_state(unit(0.0), false, 0);
        let f = m.add_state(unit(1.0), true, 0);
        let v = max_reach(&m, 0).unwrap();
        assert_eq!(v[s], 0.0);
        assert_eq!(v[f], 1.0);
    }

    #[test]
    fn best_of_two_choices() {
        let mut m = AbstractMdp::new(1);
        let s = m.add_state(unit(0.0), false, 0);
        let ok = m.add_state(unit(1.0), false, 1);
        let bad = m.add_state(unit(2.0), true, 1);
        m.add_choice(s, &[(0.8, ok), (0.2, bad)], None).unwrap();
        m.add_choice(s, &[(0.3, ok), (0.7, bad)], None).unwrap();
        assert_eq!(max_reach(&m, 1).unwrap()[s], 0.7);
    }

    #[test]
    fn two_step_chain() {
        let mut m = AbstractMdp::new(2);
        let s0 = m.add_state(unit(0.0), false, 0);
        let s1 = m.add_state(unit(1.0), false, 1);
        let f1 = m.add_state(unit(2.0), true, 1);
        let s2 = m.add_state(unit(3.0), false, 2);
        let f2 = m.add_state(unit(4.0), true, 2);
        m.add_choice(s0, &[(0.8, s1), (0.2, f1)], None).unwrap();
        m.add_choice(s1, &[(0.8, s2), (0.2, f2)], None).unwrap();
        let v = max_reach(&m, 2).unwrap();
        assert!((v[s0] - (1.0 - 0.8 * 0.8)).abs() < 1e-15);
        // prefix: one step
        assert_eq!(max_reach(&m, 1).unwrap()[s0], 0.2);
        assert!(matches!(max_reach(&m, 3), Err(Error::NotLayered(_))));
    }

    #[test]
    fn skipping_a_layer_is_rejected() {
        let mut m = AbstractMdp::new(2);
        let s0 = m.add_state(unit(0.0), false, 0);
        let s2 = m.add_state(unit(1.0), false, 2);
        m.add_choice(s0, &[(1.0, s2)], None).unwrap();
        assert!(matches!(max_reach(&m, 2), Err(Error::NotLayered(_))));
    }

    #[test]
    fn wide_distribution_uses_compensated_sum() {
        let mut m = AbstractMdp::new(1);
        let s = m.add_state(unit(0.0), false, 0);
        let n = 1000;
        let dist: Vec<(f64, StateId)> = (0..n)
            .map(|i| (1.0 / n as f64, m.add_state(unit(10.0 + i as f64), true, 1)))
            .collect();
        m.add_choice(s, &dist, None).unwrap();
        assert!((max_reach(&m, 1).unwrap()[s] - 1.0).abs() <= 1e-15);
    }
}
