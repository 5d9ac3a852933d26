#![allow(dead_code)]

use std::path::PathBuf;

use mosaic::config::RunConfig;
use mosaic::geometry::HyperBox;
use mosaic::network::{Layer, Network};
use mosaic::Environment;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str, overrides: &[&str]) -> RunConfig {
    let sets: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::load(fixture(name), &sets).expect("fixture config loads")
}

/// Dense ReLU network, weights uniform in `±1.5/sqrt(fan_in)`, biases in `±0.5`.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    input: usize,
    hidden: &[usize],
    outputs: usize,
) -> Network {
    let mut layers = Vec::new();
    let mut width = input;
    for &h in hidden.iter().chain(std::iter::once(&outputs)) {
        let scale = 1.0 / (width as f64).sqrt();
        let weights = (0..h)
            .map(|_| {
                (0..width)
                    .map(|_| rng.gen_range(-1.5..1.5) * scale)
                    .collect()
            })
            .collect();
        let bias = (0..h).map(|_| rng.gen_range(-0.5..0.5)).collect();
        layers.push(Layer::Affine { weights, bias });
        layers.push(Layer::Relu);
        width = h;
    }
    layers.pop();
    Network::new(input, layers).unwrap()
}

pub fn sample_point(rng: &mut ChaCha8Rng, b: &HyperBox) -> Vec<f64> {
    b.intervals()
        .iter()
        .map(|iv| {
            if iv.width() > 0.0 {
                rng.gen_range(iv.lo()..=iv.hi())
            } else {
                iv.lo()
            }
        })
        .collect()
}

pub fn random_box(
    rng: &mut ChaCha8Rng,
    dim: usize,
    centre: f64,
    spread: f64,
    max_width: f64,
) -> HyperBox {
    let bounds: Vec<(f64, f64)> = (0..dim)
        .map(|_| {
            let lo = centre + rng.gen_range(-spread..spread);
            (lo, lo + rng.gen_range(0.0..max_width))
        })
        .collect();
    HyperBox::from_bounds(&bounds).unwrap()
}

/// Single output `x`, or `[-x, x]` with two outputs: action 1 exactly when `x > 0`.
pub fn boundary_net() -> Network {
    Network::new(
        1,
        vec![Layer::Affine {
            weights: vec![vec![-1.0], vec![1.0]],
            bias: vec![0.0, 0.0],
        }],
    )
    .unwrap()
}

/// One-dimensional line: action `a` moves right by `speeds[a]`; fail past `limit`.
pub struct Line {
    pub speeds: Vec<f64>,
    pub limit: f64,
}

impl Environment for Line {
    fn state_dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        self.speeds.len()
    }

    fn step_raw(&self, s: &[f64], a: usize) -> Vec<f64> {
        vec![s[0] + self.speeds[a]]
    }

    fn abstract_step_raw(&self, b: &HyperBox, a: usize) -> HyperBox {
        HyperBox::new(vec![b.interval(0).add_scalar(self.speeds[a])]).unwrap()
    }

    fn is_fail_raw(&self, s: &[f64]) -> bool {
        s[0] > self.limit
    }

    fn box_intersects_fail_raw(&self, b: &HyperBox) -> bool {
        b.interval(0).hi() > self.limit
    }
}
