//! Feed-forward ReLU policy networks: loading, exact evaluation, the action
//! layer, and sound output bounds over boxes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HyperBox;

// Relative slack added when concretising symbolic linear forms. The forms'
// coefficients carry accumulated floating-point error that is not tracked
// term by term; this margin dominates it by several orders of magnitude.
const SYMBOLIC_SLACK: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer {
    /// `y = W x + b`, with `weights` stored row-major as `out x in`.
    Affine {
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
    Relu,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    input_dim: usize,
    layers: Vec<Layer>,
}

/// A validated network; `output_dim` is the number of actions for a policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<Layer>,
}

/// Per-output lower and upper bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputBounds {
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMethod {
    /// Naive interval propagation.
    Interval,
    /// Symbolic linear propagation with the triangle ReLU relaxation.
    #[default]
    Planet,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::ShapeMismatch("input_dim must be at least 1".into()));
        }
        let mut width = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Affine { weights, bias } = layer {
                if weights.len() != bias.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {i}: {} weight rows but bias of length {}",
                        weights.len(),
                        bias.len()
                    )));
                }
                if weights.is_empty() {
                    return Err(Error::ShapeMismatch(format!("layer {i}: no output rows")));
                }
                if let Some(row) = weights.iter().find(|r| r.len() != width) {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {i}: row of length {} but input width {width}",
                        row.len()
                    )));
                }
                if weights.iter().flatten().chain(bias).any(|w| !w.is_finite()) {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {i}: non-finite weight"
                    )));
                }
                width = weights.len();
            }
        }
        Ok(Network {
            input_dim,
            output_dim: width,
            layers,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        Network::new(file.input_dim, file.layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkFile {
            input_dim: self.input_dim,
            layers: self.layers.clone(),
        })
        .expect("network serialises")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Network::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    fn check_input(&self, got: usize) -> Result<()> {
        if got == self.input_dim {
            Ok(())
        } else {
            Err(Error::dims(self.input_dim, got))
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        let mut v = x.to_vec();
        for layer in &self.layers {
            match layer {
                Layer::Affine { weights, bias } => {
                    v = weights
                        .iter()
                        .zip(bias)
                        .map(|(row, b)| row.iter().zip(&v).map(|(w, x)| w * x).sum::<f64>() + b)
                        .collect();
                }
                Layer::Relu => v.iter_mut().for_each(|x| *x = x.max(0.0)),
            }
        }
        Ok(v)
    }

    /// The action with the largest output; ties go to the lowest index.
    pub fn policy_action(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Scalar network computing `max_{a' != a} (q_{a'} - q_a)`: negative
    /// exactly where `a` is the strict argmax.
    pub fn add_action_layer(&self, action: usize) -> Result<Network> {
        let m = self.output_dim;
        if action >= m || m < 2 {
            return Err(Error::BadActionIndex {
                index: action,
                count: m,
            });
        }
        let diff: Vec<Vec<f64>> = (0..m)
            .filter(|&o| o != action)
            .map(|o| {
                let mut row = vec![0.0; m];
                row[o] = 1.0;
                row[action] = -1.0;
                row
            })
            .collect();
        let mut layers = self.layers.clone();
        push_affine(&mut layers, diff, vec![0.0; m - 1]);

        // pairwise max(x, y) = y + relu(x - y); y is carried through the
        // ReLU as relu(y) - relu(-y)
        let mut width = m - 1;
        while width > 1 {
            let pairs = width / 2;
            let odd = width % 2 == 1;
            let mid_width = pairs * 3 + if odd { 2 } else { 0 };
            let mut expand = Vec::with_capacity(mid_width);
            for p in 0..pairs {
                let (x, y) = (2 * p, 2 * p + 1);
                expand.push(unit_combo(width, &[(x, 1.0), (y, -1.0)]));
                expand.push(unit_combo(width, &[(y, 1.0)]));
                expand.push(unit_combo(width, &[(y, -1.0)]));
            }
            if odd {
                expand.push(unit_combo(width, &[(width - 1, 1.0)]));
                expand.push(unit_combo(width, &[(width - 1, -1.0)]));
            }
            push_affine(&mut layers, expand, vec![0.0; mid_width]);
            layers.push(Layer::Relu);

            let out_width = pairs + usize::from(odd);
            let mut collapse = Vec::with_capacity(out_width);
            for p in 0..pairs {
                collapse.push(unit_combo(
                    mid_width,
                    &[(3 * p, 1.0), (3 * p + 1, 1.0), (3 * p + 2, -1.0)],
                ));
            }
            if odd {
                collapse.push(unit_combo(
                    mid_width,
                    &[(3 * pairs, 1.0), (3 * pairs + 1, -1.0)],
                ));
            }
            layers.push(Layer::Affine {
                weights: collapse,
                bias: vec![0.0; out_width],
            });
            width = out_width;
        }
        Network::new(self.input_dim, layers)
    }

    pub fn bounds(&self, method: BoundMethod, b: &HyperBox) -> Result<OutputBounds> {
        match method {
            BoundMethod::Interval => self.bounds_interval(b),
            BoundMethod::Planet => self.bounds_planet(b),
        }
    }

    /// Interval propagation: affine layers by interval dot products, ReLU
    /// by clamping both endpoints at zero.
    pub fn bounds_interval(&self, b: &HyperBox) -> Result<OutputBounds> {
        self.check_input(b.dim())?;
        let mut lo = b.lower();
        let mut hi = b.upper();
        for layer in &self.layers {
            match layer {
                Layer::Affine { weights, bias } => {
                    let (l, h) = affine_interval(weights, bias, &lo, &hi);
                    lo = l;
                    hi = h;
                }
                Layer::Relu => {
                    lo.iter_mut().for_each(|x| *x = x.max(0.0));
                    hi.iter_mut().for_each(|x| *x = x.max(0.0));
                }
            }
        }
        Ok(OutputBounds { lb: lo, ub: hi })
    }

    /// Symbolic linear bound propagation with the triangle relaxation.
    ///
    /// Every neuron carries a lower and an upper linear form in the input
    /// variables. Stable ReLUs pass their forms through (or zero them);
    /// unstable ones take `y <= u (x - l) / (u - l)` above and either
    /// `y >= x` (when `u > -l`) or `y >= 0` below. Concrete neuron bounds
    /// are the intersection of the concretised forms with interval
    /// propagation from the previous layer's concrete bounds, so the result
    /// is never looser than [`bounds_interval`](Self::bounds_interval).
    pub fn bounds_planet(&self, b: &HyperBox) -> Result<OutputBounds> {
        self.check_input(b.dim())?;
        let n = self.input_dim;
        let stride = n + 1;
        let in_lo = b.lower();
        let in_hi = b.upper();
        // row-major forms: n coefficients then the constant
        let mut lower = vec![0.0; n * stride];
        for i in 0..n {
            lower[i * stride + i] = 1.0;
        }
        let mut upper = lower.clone();
        let mut lo = in_lo.clone();
        let mut hi = in_hi.clone();

        for layer in &self.layers {
            match layer {
                Layer::Affine { weights, bias } => {
                    let (il, ih) = affine_interval(weights, bias, &lo, &hi);
                    let rows = weights.len();
                    let mut new_lower = vec![0.0; rows * stride];
                    let mut new_upper = vec![0.0; rows * stride];
                    let mut new_lo = Vec::with_capacity(rows);
                    let mut new_hi = Vec::with_capacity(rows);
                    for (r, (row, &bias_r)) in weights.iter().zip(bias).enumerate() {
                        let lf = &mut new_lower[r * stride..(r + 1) * stride];
                        let uf = &mut new_upper[r * stride..(r + 1) * stride];
                        lf[n] = bias_r;
                        uf[n] = bias_r;
                        for (j, &w) in row.iter().enumerate() {
                            let (src_l, src_u) = if w > 0.0 {
                                (
                                    &lower[j * stride..(j + 1) * stride],
                                    &upper[j * stride..(j + 1) * stride],
                                )
                            } else if w < 0.0 {
                                (
                                    &upper[j * stride..(j + 1) * stride],
                                    &lower[j * stride..(j + 1) * stride],
                                )
                            } else {
                                continue;
                            };
                            for k in 0..stride {
                                lf[k] += w * src_l[k];
                                uf[k] += w * src_u[k];
                            }
                        }
                        let mut l = form_extreme(lf, &in_lo, &in_hi, false).max(il[r]);
                        let mut h = form_extreme(uf, &in_lo, &in_hi, true).min(ih[r]);
                        if l > h {
                            // only possible through rounding in the forms
                            l = il[r];
                            h = ih[r];
                        }
                        new_lo.push(l);
                        new_hi.push(h);
                    }
                    lo = new_lo;
                    hi = new_hi;
                    lower = new_lower;
                    upper = new_upper;
                }
                Layer::Relu => {
                    for i in 0..lo.len() {
                        let (l, u) = (lo[i], hi[i]);
                        let lf = &mut lower[i * stride..(i + 1) * stride];
                        if u <= 0.0 {
                            lf.fill(0.0);
                            upper[i * stride..(i + 1) * stride].fill(0.0);
                            lo[i] = 0.0;
                            hi[i] = 0.0;
                        } else if l >= 0.0 {
                            // identity phase
                        } else {
                            if u <= -l {
                                lf.fill(0.0);
                            }
                            let slope = u / (u - l);
                            let uf = &mut upper[i * stride..(i + 1) * stride];
                            uf[n] -= l;
                            uf.iter_mut().for_each(|c| *c *= slope);
                            lo[i] = 0.0;
                        }
                    }
                }
            }
        }
        Ok(OutputBounds { lb: lo, ub: hi })
    }
}

/// Upper triangle relaxation of an unstable ReLU with pre-activation
/// bounds `[l, u]`, evaluated at `x`.
pub fn relu_upper_relaxation(l: f64, u: f64, x: f64) -> f64 {
    u * (x - l) / (u - l)
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn unit_combo(width: usize, terms: &[(usize, f64)]) -> Vec<f64> {
    let mut row = vec![0.0; width];
    for &(i, c) in terms {
        row[i] += c;
    }
    row
}

/// Appends an affine layer, folding it into a trailing affine layer.
fn push_affine(layers: &mut Vec<Layer>, weights: Vec<Vec<f64>>, bias: Vec<f64>) {
    if let Some(Layer::Affine {
        weights: prev_w,
        bias: prev_b,
    }) = layers.last()
    {
        let composed_w: Vec<Vec<f64>> = weights
            .iter()
            .map(|row| {
                (0..prev_w[0].len())
                    .map(|j| row.iter().zip(prev_w).map(|(c, pw)| c * pw[j]).sum())
                    .collect()
            })
            .collect();
        let composed_b: Vec<f64> = weights
            .iter()
            .zip(&bias)
            .map(|(row, b)| row.iter().zip(prev_b).map(|(c, pb)| c * pb).sum::<f64>() + b)
            .collect();
        *layers.last_mut().unwrap() = Layer::Affine {
            weights: composed_w,
            bias: composed_b,
        };
    } else {
        layers.push(Layer::Affine { weights, bias });
    }
}

// Error bound for an n-term floating-point dot product plus bias, relative
// to the sum of absolute products.
fn gamma(n: usize) -> f64 {
    let nu = (n as f64 + 2.0) * f64::EPSILON;
    2.0 * nu / (1.0 - nu)
}

fn affine_interval(
    weights: &[Vec<f64>],
    bias: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let g = gamma(lo.len());
    let mut out_lo = Vec::with_capacity(weights.len());
    let mut out_hi = Vec::with_capacity(weights.len());
    for (row, &b) in weights.iter().zip(bias) {
        let mut l = b;
        let mut h = b;
        let mut mag = b.abs();
        for ((&w, &xl), &xh) in row.iter().zip(lo).zip(hi) {
            if w >= 0.0 {
                l += w * xl;
                h += w * xh;
            } else {
                l += w * xh;
                h += w * xl;
            }
            mag += w.abs() * xl.abs().max(xh.abs());
        }
        let slack = g * mag + f64::MIN_POSITIVE;
        out_lo.push((l - slack).next_down());
        out_hi.push((h + slack).next_up());
    }
    (out_lo, out_hi)
}

/// Sound bound of a linear form `c . x + c0` over the box `[lo, hi]`.
fn form_extreme(form: &[f64], lo: &[f64], hi: &[f64], maximise: bool) -> f64 {
    let n = lo.len();
    let mut v = form[n];
    let mut mag = form[n].abs();
    for ((&c, &l), &h) in form[..n].iter().zip(lo).zip(hi) {
        let pick = if (c >= 0.0) == maximise { h } else { l };
        v += c * pick;
        mag += c.abs() * l.abs().max(h.abs());
    }
    let slack = SYMBOLIC_SLACK * mag + f64::MIN_POSITIVE;
    if maximise {
        (v + slack).next_up()
    } else {
        (v - slack).next_down()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_network, sample_in_box};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn affine(w: Vec<Vec<f64>>, b: Vec<f64>) -> Layer {
        Layer::Affine {
            weights: w,
            bias: b,
        }
    }

    fn bx(b: &[(f64, f64)]) -> HyperBox {
        HyperBox::from_bounds(b).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn load_minimal_file() {
        let net = Network::from_json(
            r#"{"input_dim":1,"layers":[{"kind":"affine","weights":[[1],[-1]],"bias":[0,0]}]}"#,
        )
        .unwrap();
        assert_eq!(net.input_dim(), 1);
        assert_eq!(net.output_dim(), 2);
    }

    #[test]
    fn load_rejects_bad_shapes() {
        let err = Network::from_json(
            r#"{"input_dim":1,"layers":[{"kind":"affine","weights":[[1],[-1]],"bias":[0]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
        let err = Network::from_json(
            r#"{"input_dim":2,"layers":[{"kind":"affine","weights":[[1]],"bias":[0]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
        assert!(matches!(
            Network::from_json("{not json").unwrap_err(),
            Error::ParseError(_)
        ));
        assert!(matches!(
            Network::from_json(r#"{"input_dim":1,"layers":[{"kind":"conv"}]}"#).unwrap_err(),
            Error::ParseError(_)
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_network(&mut rng, 3, &[8, 8], 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        net.save(&path).unwrap();
        let back = Network::load(&path).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert_eq!(net.forward(&x).unwrap(), back.forward(&x).unwrap());
        }
    }

    #[test]
    fn forward_examples() {
        let net = Network::new(1, vec![affine(vec![vec![2.0]], vec![1.0]), Layer::Relu]).unwrap();
        assert_eq!(net.forward(&[-3.0]).unwrap(), vec![0.0]);
        assert_eq!(net.forward(&[1.0]).unwrap(), vec![3.0]);
        let id = Network::new(
            2,
            vec![affine(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0])],
        )
        .unwrap();
        assert_eq!(id.forward(&[0.25, -7.0]).unwrap(), vec![0.25, -7.0]);
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn policy_action_examples() {
        assert_eq!(argmax(&[0.2, 0.9]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        let net =
            Network::new(1, vec![affine(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0])]).unwrap();
        assert_eq!(net.policy_action(&[0.3]).unwrap(), 0);
        assert_eq!(net.policy_action(&[-0.3]).unwrap(), 1);
        assert_eq!(net.policy_action(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn action_layer_examples() {
        let ident2 = Network::new(
            2,
            vec![affine(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 2])],
        )
        .unwrap();
        let mod0 = ident2.add_action_layer(0).unwrap();
        assert_eq!(mod0.output_dim(), 1);
        assert_eq!(mod0.forward(&[3.0, 1.0]).unwrap(), vec![-2.0]);

        let ident3 = Network::new(
            3,
            vec![affine(
                vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                vec![0.0; 3],
            )],
        )
        .unwrap();
        let mod1 = ident3.add_action_layer(1).unwrap();
        assert!(close(mod1.forward(&[0.0, 5.0, 4.0]).unwrap()[0], -1.0));
        assert!(matches!(
            ident3.add_action_layer(3),
            Err(Error::BadActionIndex { .. })
        ));
        let single = Network::new(1, vec![affine(vec![vec![1.0]], vec![0.0])]).unwrap();
        assert!(single.add_action_layer(0).is_err());
    }

    #[test]
    fn action_layer_semantics_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..200 {
            let m = 2 + trial % 5;
            let net = random_network(&mut rng, 2, &[6], m);
            let a = rng.gen_range(0..m);
            let modified = net.add_action_layer(a).unwrap();
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let q = net.forward(&x).unwrap();
            let want = (0..m)
                .filter(|&o| o != a)
                .map(|o| q[o] - q[a])
                .fold(f64::NEG_INFINITY, f64::max);
            let got = modified.forward(&x).unwrap()[0];
            assert!(close(got, want), "m={m} a={a}: {got} vs {want}");
            let strict = (0..m).all(|o| o == a || q[o] < q[a]);
            if got.abs() > 1e-9 {
                assert_eq!(got < 0.0, strict && net.policy_action(&x).unwrap() == a);
            }
        }
    }

    #[test]
    fn interval_bound_examples() {
        let sum = Network::new(2, vec![affine(vec![vec![1.0, 1.0]], vec![0.0])]).unwrap();
        let b = sum.bounds_interval(&bx(&[(0.0, 1.0), (0.0, 1.0)])).unwrap();
        assert!(close(b.lb[0], 0.0) && b.lb[0] <= 0.0);
        assert!(close(b.ub[0], 2.0) && b.ub[0] >= 2.0);

        let relu = Network::new(1, vec![Layer::Relu]).unwrap();
        let b = relu.bounds_interval(&bx(&[(-2.0, 3.0)])).unwrap();
        assert_eq!((b.lb[0], b.ub[0]), (0.0, 3.0));
    }

    #[test]
    fn planet_relaxation_examples() {
        assert_eq!(relu_upper_relaxation(-1.0, 1.0, 0.0), 0.5);
        let relu = Network::new(1, vec![affine(vec![vec![1.0]], vec![0.0]), Layer::Relu]).unwrap();
        let b = relu.bounds_planet(&bx(&[(2.0, 5.0)])).unwrap();
        assert!(close(b.lb[0], 2.0) && close(b.ub[0], 5.0));
        // the unstable case: relaxation evaluated through a downstream layer
        let net = Network::new(
            1,
            vec![
                affine(vec![vec![1.0]], vec![0.0]),
                Layer::Relu,
                affine(vec![vec![1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let b = net.bounds_planet(&bx(&[(-1.0, 1.0)])).unwrap();
        assert!(close(b.lb[0], 0.0) && close(b.ub[0], 1.0));
    }

    #[test]
    fn planet_is_tighter_on_cancelling_paths() {
        // y = relu(x) - relu(x) is identically zero
        let net = Network::new(
            1,
            vec![
                affine(vec![vec![1.0], vec![1.0]], vec![0.0, 0.0]),
                Layer::Relu,
                affine(vec![vec![1.0, -1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let b = bx(&[(1.0, 2.0)]);
        let naive = net.bounds_interval(&b).unwrap();
        let planet = net.bounds_planet(&b).unwrap();
        assert!(naive.ub[0] > 0.5);
        assert!(planet.ub[0].abs() < 1e-9 && planet.lb[0].abs() < 1e-9);
    }

    #[test]
    fn linear_networks_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let net = random_network(&mut rng, 3, &[], 2);
            let deep = Network::new(
                3,
                net.layers()
                    .iter()
                    .cloned()
                    .chain(std::iter::once(affine(
                        vec![vec![1.5, -0.5], vec![0.25, 2.0]],
                        vec![0.1, -0.1],
                    )))
                    .collect(),
            )
            .unwrap();
            let b = bx(&[(-1.0, 0.5), (0.0, 2.0), (-0.3, 0.3)]);
            for (candidate, methods) in [
                (&net, &[BoundMethod::Interval, BoundMethod::Planet][..]),
                (&deep, &[BoundMethod::Planet][..]),
            ] {
                // a linear map attains its extremes at box corners
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for corner in 0..8u32 {
                    let x: Vec<f64> = (0..3)
                        .map(|d| {
                            if corner >> d & 1 == 1 {
                                b.interval(d).hi()
                            } else {
                                b.interval(d).lo()
                            }
                        })
                        .collect();
                    for (o, v) in candidate.forward(&x).unwrap().into_iter().enumerate() {
                        lo[o] = lo[o].min(v);
                        hi[o] = hi[o].max(v);
                    }
                }
                for &m in methods {
                    let got = candidate.bounds(m, &b).unwrap();
                    for o in 0..2 {
                        assert!(
                            close(got.lb[o], lo[o]),
                            "{m:?} lb {} vs {}",
                            got.lb[o],
                            lo[o]
                        );
                        assert!(
                            close(got.ub[o], hi[o]),
                            "{m:?} ub {} vs {}",
                            got.ub[o],
                            hi[o]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn random_bounds_enclose_samples_and_planet_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let net = random_network(&mut rng, 2, &[8, 8], 3);
            let c = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let r = rng.gen_range(0.01..1.5);
            let b = bx(&[(c[0] - r, c[0] + r), (c[1] - r, c[1] + r)]);
            let naive = net.bounds_interval(&b).unwrap();
            let planet = net.bounds_planet(&b).unwrap();
            for o in 0..3 {
                assert!(planet.lb[o] >= naive.lb[o] - 1e-9);
                assert!(planet.ub[o] <= naive.ub[o] + 1e-9);
                assert!(planet.lb[o] <= planet.ub[o]);
            }
            for p in sample_in_box(&mut rng, &b, 1000) {
                let y = net.forward(&p).unwrap();
                for (o, v) in y.iter().enumerate() {
                    assert!(planet.lb[o] <= *v && *v <= planet.ub[o]);
                }
            }
        }
    }
}
