//! Deterministic benchmark dynamics and their interval abstractions.
//!
//! State vectors:
//! - pendulum: `[theta (rad), omega (rad/s)]`, `theta = 0` upright;
//! - cartpole: `[x (m), x_dot (m/s), theta (rad), omega (rad/s)]`.
//!
//! Both environments integrate with explicit Euler steps built only from
//! `+`, `*`, `/`, `sin` and `cos`, so the abstract step evaluates the same
//! expression tree over intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HyperBox, Interval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailStatus {
    AllSafe,
    IntersectsFail,
}

/// A deterministic environment `E : S x A -> S` with a sound box lift.
pub trait Environment: Send + Sync {
    fn state_dim(&self) -> usize;

    fn num_actions(&self) -> usize;

    /// One step under action `a`; inputs are already validated.
    fn step_raw(&self, s: &[f64], a: usize) -> Vec<f64>;

    /// Box enclosing `step_raw(s, a)` for every `s` in `b`.
    fn abstract_step_raw(&self, b: &HyperBox, a: usize) -> HyperBox;

    fn is_fail_raw(&self, s: &[f64]) -> bool;

    /// Whether some point of `b` is a failure state.
    fn box_intersects_fail_raw(&self, b: &HyperBox) -> bool;

    fn check_action(&self, a: usize) -> Result<()> {
        if a < self.num_actions() {
            Ok(())
        } else {
            Err(Error::BadActionIndex {
                index: a,
                count: self.num_actions(),
            })
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.state_dim() {
            Ok(())
        } else {
            Err(Error::dims(self.state_dim(), got))
        }
    }

    fn step(&self, s: &[f64], a: usize) -> Result<Vec<f64>> {
        self.check_dim(s.len())?;
        self.check_action(a)?;
        Ok(self.step_raw(s, a))
    }

    /// Left fold of [`step`](Self::step) over `word`; the empty word is the
    /// identity.
    fn step_word(&self, s: &[f64], word: &[usize]) -> Result<Vec<f64>> {
        self.check_dim(s.len())?;
        for &a in word {
            self.check_action(a)?;
        }
        let mut cur = s.to_vec();
        for &a in word {
            cur = self.step_raw(&cur, a);
        }
        Ok(cur)
    }

    fn abstract_step(&self, b: &HyperBox, word: &[usize]) -> Result<HyperBox> {
        self.check_dim(b.dim())?;
        for &a in word {
            self.check_action(a)?;
        }
        let mut cur = b.clone();
        for &a in word {
            cur = self.abstract_step_raw(&cur, a);
        }
        Ok(cur)
    }

    fn is_fail(&self, s: &[f64]) -> Result<bool> {
        self.check_dim(s.len())?;
        Ok(self.is_fail_raw(s))
    }

    fn box_fail_status(&self, b: &HyperBox) -> Result<FailStatus> {
        self.check_dim(b.dim())?;
        Ok(if self.box_intersects_fail_raw(b) {
            FailStatus::IntersectsFail
        } else {
            FailStatus::AllSafe
        })
    }
}

fn default_pendulum_init() -> HyperBox {
    HyperBox::from_bounds(&[(-0.35, 0.35), (-0.5, 0.5)]).unwrap()
}

fn default_cartpole_init() -> HyperBox {
    HyperBox::from_bounds(&[(-0.05, 0.05); 4]).unwrap()
}

/// Inverted pendulum with discrete torques.
///
/// `omega' = clip(omega + dt * (3g/(2l) sin(theta) + 3/(m l^2) u), -max_speed, max_speed)`,
/// `theta' = theta + dt * omega'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pendulum {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub dt: f64,
    /// Torque for each action index.
    pub torques: Vec<f64>,
    pub max_speed: f64,
    /// Failure when `|theta| > theta_max`.
    pub theta_max: f64,
    pub init_region: HyperBox,
}

impl Default for Pendulum {
    fn default() -> Self {
        Pendulum {
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            dt: 0.05,
            torques: vec![-2.0, 2.0],
            max_speed: 8.0,
            theta_max: 1.0,
            init_region: default_pendulum_init(),
        }
    }
}

impl Pendulum {
    fn gravity_coeff(&self) -> f64 {
        3.0 * self.gravity / (2.0 * self.length)
    }

    fn torque_coeff(&self) -> f64 {
        3.0 / (self.mass * self.length * self.length)
    }
}

impl Environment for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn num_actions(&self) -> usize {
        self.torques.len()
    }

    fn step_raw(&self, s: &[f64], a: usize) -> Vec<f64> {
        let (theta, omega) = (s[0], s[1]);
        let acc = self.gravity_coeff() * theta.sin() + self.torque_coeff() * self.torques[a];
        let omega = (omega + acc * self.dt).clamp(-self.max_speed, self.max_speed);
        vec![theta + omega * self.dt, omega]
    }

    fn abstract_step_raw(&self, b: &HyperBox, a: usize) -> HyperBox {
        let (theta, omega) = (b.interval(0), b.interval(1));
        let acc = theta
            .sin()
            .scale(self.gravity_coeff())
            .add_scalar(self.torque_coeff() * self.torques[a]);
        let omega = omega
            .add(&acc.scale(self.dt))
            .clamp(-self.max_speed, self.max_speed);
        let theta = theta.add(&omega.scale(self.dt));
        HyperBox::new(vec![theta, omega]).expect("two dimensions")
    }

    fn is_fail_raw(&self, s: &[f64]) -> bool {
        s[0].abs() > self.theta_max
    }

    fn box_intersects_fail_raw(&self, b: &HyperBox) -> bool {
        outside(b.interval(0), self.theta_max)
    }
}

/// Cart with a hinged pole, frictionless, driven by a fixed-magnitude
/// push left (action 0) or right (action 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cartpole {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub length: f64,
    pub force_mag: f64,
    pub dt: f64,
    pub x_threshold: f64,
    /// Radians; 12 degrees by default.
    pub theta_threshold: f64,
    pub init_region: HyperBox,
}

impl Default for Cartpole {
    fn default() -> Self {
        Cartpole {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            length: 0.5,
            force_mag: 10.0,
            dt: 0.02,
            x_threshold: 2.4,
            theta_threshold: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            init_region: default_cartpole_init(),
        }
    }
}

impl Cartpole {
    fn force(&self, a: usize) -> f64 {
        if a == 1 {
            self.force_mag
        } else {
            -self.force_mag
        }
    }

    fn total_mass(&self) -> f64 {
        self.mass_cart + self.mass_pole
    }

    fn polemass_length(&self) -> f64 {
        self.mass_pole * self.length
    }
}

impl Environment for Cartpole {
    fn state_dim(&self) -> usize {
        4
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn step_raw(&self, s: &[f64], a: usize) -> Vec<f64> {
        let (x, x_dot, theta, omega) = (s[0], s[1], s[2], s[3]);
        let total = self.total_mass();
        let pml = self.polemass_length();
        let (sin_t, cos_t) = (theta.sin(), theta.cos());
        let temp = (self.force(a) + pml * (omega * omega) * sin_t) / total;
        let theta_acc = (self.gravity * sin_t - cos_t * temp)
            / (self.length * (4.0 / 3.0 - self.mass_pole * (cos_t * cos_t) / total));
        let x_acc = temp - pml * theta_acc * cos_t / total;
        vec![
            x + self.dt * x_dot,
            x_dot + self.dt * x_acc,
            theta + self.dt * omega,
            omega + self.dt * theta_acc,
        ]
    }

    fn abstract_step_raw(&self, b: &HyperBox, a: usize) -> HyperBox {
        let (x, x_dot, theta, omega) = (b.interval(0), b.interval(1), b.interval(2), b.interval(3));
        let total = Interval::point(self.total_mass());
        let pml = self.polemass_length();
        let (sin_t, cos_t) = (theta.sin(), theta.cos());
        let temp = omega
            .sqr()
            .scale(pml)
            .mul(&sin_t)
            .add_scalar(self.force(a))
            .div(&total)
            .expect("positive total mass");
        let denom = Interval::point(4.0 / 3.0)
            .sub(
                &cos_t
                    .sqr()
                    .scale(self.mass_pole)
                    .div(&total)
                    .expect("positive total mass"),
            )
            .scale(self.length);
        let theta_acc = sin_t
            .scale(self.gravity)
            .sub(&cos_t.mul(&temp))
            .div(&denom)
            .expect("pole inertia term is positive");
        let x_acc = temp.sub(
            &theta_acc
                .scale(pml)
                .mul(&cos_t)
                .div(&total)
                .expect("positive total mass"),
        );
        HyperBox::new(vec![
            x.add(&x_dot.scale(self.dt)),
            x_dot.add(&x_acc.scale(self.dt)),
            theta.add(&omega.scale(self.dt)),
            omega.add(&theta_acc.scale(self.dt)),
        ])
        .expect("four dimensions")
    }

    fn is_fail_raw(&self, s: &[f64]) -> bool {
        s[0].abs() > self.x_threshold || s[2].abs() > self.theta_threshold
    }

    fn box_intersects_fail_raw(&self, b: &HyperBox) -> bool {
        outside(b.interval(0), self.x_threshold) || outside(b.interval(2), self.theta_threshold)
    }
}

// some point v of iv has |v| > limit
fn outside(iv: Interval, limit: f64) -> bool {
    iv.hi() > limit || iv.lo() < -limit
}

/// A benchmark environment selected by name in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum EnvironmentSpec {
    Pendulum(Pendulum),
    Cartpole(Cartpole),
}

impl EnvironmentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvironmentSpec::Pendulum(_) => "pendulum",
            EnvironmentSpec::Cartpole(_) => "cartpole",
        }
    }

    pub fn init_region(&self) -> &HyperBox {
        match self {
            EnvironmentSpec::Pendulum(p) => &p.init_region,
            EnvironmentSpec::Cartpole(c) => &c.init_region,
        }
    }

    pub fn variable_names(&self) -> &'static [&'static str] {
        match self {
            EnvironmentSpec::Pendulum(_) => &["theta", "omega"],
            EnvironmentSpec::Cartpole(_) => &["x", "x_dot", "theta", "omega"],
        }
    }

    pub fn action_labels(&self) -> &'static [&'static str] {
        match self {
            EnvironmentSpec::Pendulum(_) => &["torque_neg", "torque_pos"],
            EnvironmentSpec::Cartpole(_) => &["push_left", "push_right"],
        }
    }

    fn inner(&self) -> &dyn Environment {
        match self {
            EnvironmentSpec::Pendulum(p) => p,
            EnvironmentSpec::Cartpole(c) => c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{}.{name} must be positive",
                    self.name()
                )))
            }
        };
        match self {
            EnvironmentSpec::Pendulum(p) => {
                for (n, v) in [
                    ("gravity", p.gravity),
                    ("mass", p.mass),
                    ("length", p.length),
                    ("dt", p.dt),
                    ("max_speed", p.max_speed),
                    ("theta_max", p.theta_max),
                ] {
                    positive(n, v)?;
                }
                if p.torques.is_empty() || p.torques.iter().any(|t| !t.is_finite()) {
                    return Err(Error::Config(
                        "pendulum.torques must be finite and non-empty".into(),
                    ));
                }
            }
            EnvironmentSpec::Cartpole(c) => {
                for (n, v) in [
                    ("gravity", c.gravity),
                    ("mass_cart", c.mass_cart),
                    ("mass_pole", c.mass_pole),
                    ("length", c.length),
                    ("force_mag", c.force_mag),
                    ("dt", c.dt),
                    ("x_threshold", c.x_threshold),
                    ("theta_threshold", c.theta_threshold),
                ] {
                    positive(n, v)?;
                }
            }
        }
        if self.init_region().dim() != self.state_dim() {
            return Err(Error::dims(self.state_dim(), self.init_region().dim()));
        }
        Ok(())
    }
}

impl Environment for EnvironmentSpec {
    fn state_dim(&self) -> usize {
        self.inner().state_dim()
    }

    fn num_actions(&self) -> usize {
        self.inner().num_actions()
    }

    fn step_raw(&self, s: &[f64], a: usize) -> Vec<f64> {
        self.inner().step_raw(s, a)
    }

    fn abstract_step_raw(&self, b: &HyperBox, a: usize) -> HyperBox {
        self.inner().abstract_step_raw(b, a)
    }

    fn is_fail_raw(&self, s: &[f64]) -> bool {
        self.inner().is_fail_raw(s)
    }

    fn box_intersects_fail_raw(&self, b: &HyperBox) -> bool {
        self.inner().box_intersects_fail_raw(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::sample_in_box;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bx(b: &[(f64, f64)]) -> HyperBox {
        HyperBox::from_bounds(b).unwrap()
    }

    #[test]
    fn pendulum_step_from_rest() {
        let p = Pendulum::default();
        let next = p.step(&[0.0, 0.0], 1).unwrap();
        // omega gains 3 * 2 / (m l^2) * dt, theta advances by dt * omega'
        assert!((next[1] - 0.3).abs() < 1e-15);
        assert!((next[0] - 0.05 * 0.3).abs() < 1e-15);
        let back = p.step(&[0.0, 0.0], 0).unwrap();
        assert!((back[1] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn pendulum_speed_is_clipped() {
        let p = Pendulum::default();
        let next = p.step(&[0.9, 7.9], 1).unwrap();
        assert_eq!(next[1], 8.0);
    }

    // Independent rewrite of the frictionless cart-pole equations, solving
    // the coupled accelerations directly from the force balance.
    fn cartpole_reference(s: [f64; 4], force: f64) -> [f64; 4] {
        let (mc, mp, l, g, dt) = (1.0, 0.1, 0.5, 9.8, 0.02);
        let (x, xd, th, om) = (s[0], s[1], s[2], s[3]);
        let m = mc + mp;
        let num = g * th.sin() + th.cos() * ((-force - mp * l * om * om * th.sin()) / m);
        let den = l * (4.0 / 3.0 - mp * th.cos().powi(2) / m);
        let th_acc = num / den;
        let x_acc = (force + mp * l * (om * om * th.sin() - th_acc * th.cos())) / m;
        [x + dt * xd, xd + dt * x_acc, th + dt * om, om + dt * th_acc]
    }

    #[test]
    fn cartpole_matches_reference() {
        let c = Cartpole::default();
        let rest = c.step(&[0.0; 4], 1).unwrap();
        let want = cartpole_reference([0.0; 4], 10.0);
        for i in 0..4 {
            assert!((rest[i] - want[i]).abs() < 1e-12);
        }
        // frozen from the reference: pushing right tips the pole left
        assert!((rest[1] - 0.195_121_951_219_512_2).abs() < 1e-12);
        assert!((rest[3] + 0.292_682_926_829_268_3).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let s: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.3..0.3));
            let a = rng.gen_range(0..2);
            let got = c.step(&s, a).unwrap();
            let want = cartpole_reference(s, if a == 1 { 10.0 } else { -10.0 });
            for i in 0..4 {
                assert!((got[i] - want[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn word_semantics() {
        let p = EnvironmentSpec::Pendulum(Pendulum::default());
        let s = [0.1, -0.2];
        assert_eq!(p.step_word(&s, &[]).unwrap(), s.to_vec());
        assert_eq!(p.step_word(&s, &[1]).unwrap(), p.step(&s, 1).unwrap());
        let twice = p.step(&p.step(&s, 0).unwrap(), 0).unwrap();
        assert_eq!(p.step_word(&s, &[0, 0]).unwrap(), twice);
        let b = bx(&[(0.0, 0.1), (0.0, 0.1)]);
        assert_eq!(p.abstract_step(&b, &[]).unwrap(), b);
        assert!(matches!(p.step(&s, 2), Err(Error::BadActionIndex { .. })));
        assert!(matches!(p.step(&[0.0], 0), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn degenerate_box_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let envs = [
            EnvironmentSpec::Pendulum(Pendulum::default()),
            EnvironmentSpec::Cartpole(Cartpole::default()),
        ];
        for env in &envs {
            for _ in 0..500 {
                let s: Vec<f64> = (0..env.state_dim())
                    .map(|_| rng.gen_range(-0.3..0.3))
                    .collect();
                let a = rng.gen_range(0..2);
                let next = env.step(&s, a).unwrap();
                let abs = env
                    .abstract_step(&HyperBox::point(&s).unwrap(), &[a])
                    .unwrap();
                assert!(abs.contains(&next).unwrap());
                for (d, iv) in abs.intervals().iter().enumerate() {
                    // ulps measured at unit scale for sub-unit values
                    let scale = next[d].abs().max(1.0);
                    let ulp = scale.next_up() - scale;
                    assert!(
                        iv.width() <= 16.0 * ulp,
                        "{} dim {d}: width {}",
                        env.name(),
                        iv.width()
                    );
                }
            }
        }
    }

    #[test]
    fn abstract_step_contains_concrete() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let envs = [
            EnvironmentSpec::Pendulum(Pendulum::default()),
            EnvironmentSpec::Cartpole(Cartpole::default()),
        ];
        for env in &envs {
            for _ in 0..2000 {
                let n = env.state_dim();
                let bounds: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        let lo = rng.gen_range(-1.0..1.0);
                        (lo, lo + rng.gen_range(0.0..0.5))
                    })
                    .collect();
                let b = bx(&bounds);
                let len = rng.gen_range(0..=2);
                let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
                let abs = env.abstract_step(&b, &word).unwrap();
                for s in sample_in_box(&mut rng, &b, 5) {
                    assert!(abs.contains(&env.step_word(&s, &word).unwrap()).unwrap());
                }
            }
        }
    }

    #[test]
    fn failure_predicates() {
        let c = Cartpole::default();
        assert!(c.is_fail(&[3.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(!c.is_fail(&[0.0; 4]).unwrap());
        let inside = bx(&[(-0.1, 0.1); 4]);
        assert_eq!(c.box_fail_status(&inside).unwrap(), FailStatus::AllSafe);
        let deg12 = c.theta_threshold;
        let straddle = bx(&[
            (-0.1, 0.1),
            (-0.1, 0.1),
            (deg12 - 0.01, deg12 + 0.01),
            (-0.1, 0.1),
        ]);
        assert_eq!(
            c.box_fail_status(&straddle).unwrap(),
            FailStatus::IntersectsFail
        );

        let p = Pendulum::default();
        assert!(p.is_fail(&[-1.2, 0.0]).unwrap());
        assert!(!p.is_fail(&[1.0, 0.0]).unwrap());
        assert!(p.box_fail_status(&bx(&[(0.5, 1.0), (0.0, 0.0)])).unwrap() == FailStatus::AllSafe);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec: EnvironmentSpec =
            serde_json::from_str(r#"{"name":"pendulum","dt":0.1}"#).unwrap();
        match &spec {
            EnvironmentSpec::Pendulum(p) => {
                assert_eq!(p.dt, 0.1);
                assert_eq!(p.gravity, 10.0);
            }
            _ => panic!("wrong environment"),
        }
        spec.validate().unwrap();
        let bad: EnvironmentSpec = serde_json::from_str(r#"{"name":"cartpole","dt":-1}"#).unwrap();
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<EnvironmentSpec>(r#"{"name":"acrobot"}"#).is_err());
    }
}
