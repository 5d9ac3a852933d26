use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::HyperBox;
use crate::network::{Layer, Network};

/// Dense ReLU network with Gaussian-ish weights scaled by fan-in.
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

pub fn sample_in_box(rng: &mut ChaCha8Rng, b: &HyperBox, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
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
        })
        .collect()
}
