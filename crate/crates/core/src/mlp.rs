//! Dense ReLU projector `f: R^d -> R^2`.
//!
//! Hidden layers use ReLU, the output layer is affine. The derivative of
//! `max(0, x)` is taken as 0 at `x == 0`, so activation masks are `pre > 0`.
//!
//! Because a ReLU network is piecewise linear, its input Jacobian at `x` is
//! `W_L D_{L-1} W_{L-1} ... D_1 W_1`, with `D_l` the diagonal activation
//! masks. The squared Frobenius penalty `||J||_F^2` is differentiated with
//! the masks held fixed: for layer `l`,
//!
//! ```text
//! d||J||^2 / dW_l = 2 * sum_o g_l^(o) t_l^(o)^T
//! ```
//!
//! where `g_l^(o)` is the reverse cotangent reaching layer `l` from output
//! coordinate `o` and `t_l^(o)` is the forward tangent obtained by pushing
//! the Jacobian row `J[o, :]` through layers `1..l`. Bias gradients of the
//! penalty vanish almost everywhere.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gemm, Op};
use crate::matrix::Matrix;
use crate::rng::{self, Domain};

/// Output dimensionality of every projector.
pub const OUTPUT_DIM: usize = 2;

/// Rows per forward chunk when projecting large matrices.
const FORWARD_CHUNK: usize = 2048;

/// Fully connected layer with `weights` stored `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Validation("layer widths must be at least 1".into()));
        }
        if weights.len() != inputs * outputs {
            return Err(Error::Dimension {
                expected: inputs * outputs,
                actual: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::Dimension {
                expected: outputs,
                actual: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Validation("layer parameters must be finite".into()));
        }
        Ok(Dense {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    /// `out = a * W^T + b` for a batch `a` of `rows x inputs`.
    fn affine(&self, a: &[f64], rows: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows * self.outputs);
        for _ in 0..rows {
            out.extend_from_slice(&self.bias);
        }
        gemm(
            rows,
            self.inputs,
            self.outputs,
            1.0,
            a,
            Op::N,
            &self.weights,
            Op::T,
            1.0,
            &mut out,
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Dense>,
}

/// Named architecture presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Three hidden layers of 512 units.
    MlpSmall,
    /// Six hidden layers of 1024 units.
    MlpLarge,
}

impl Preset {
    pub fn hidden(self) -> Vec<usize> {
        match self {
            Preset::MlpSmall => vec![512; 3],
            Preset::MlpLarge => vec![1024; 6],
        }
    }

    /// Full width chain `[input_dim, hidden.., 2]`.
    pub fn widths(self, input_dim: usize) -> Vec<usize> {
        widths_for(input_dim, &self.hidden())
    }
}

pub fn widths_for(input_dim: usize, hidden: &[usize]) -> Vec<usize> {
    let mut widths = Vec::with_capacity(hidden.len() + 2);
    widths.push(input_dim);
    widths.extend_from_slice(hidden);
    widths.push(OUTPUT_DIM);
    widths
}

impl Network {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| Error::Validation("network needs at least one layer".into()))?;
        if last.outputs != OUTPUT_DIM {
            return Err(Error::Validation(format!(
                "final layer width must be {OUTPUT_DIM}, got {}",
                last.outputs
            )));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Validation(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].outputs,
                    i + 1,
                    pair[1].inputs
                )));
            }
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                actual: cols,
            });
        }
        Ok(())
    }

    /// Affine/ReLU chain over `rows` inputs; returns every activation
    /// `a_0 = x, a_1, .., a_L = f(x)`.
    fn activations(&self, x: &[f64], rows: usize) -> Result<Vec<Vec<f64>>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = layer.affine(acts.last().unwrap(), rows);
            if l < last {
                for v in &mut out {
                    if *v <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    layer: l,
                    message: "non-finite activation".into(),
                });
            }
            acts.push(out);
        }
        Ok(acts)
    }
}

/// He-normal weights (`std = sqrt(2 / fan_in)`) and zero biases.
pub fn init_network(widths: &[usize], seed: u64) -> Result<Network> {
    if widths.len() < 2 {
        return Err(Error::Validation(
            "width list needs an input and an output width".into(),
        ));
    }
    if let Some(i) = widths.iter().position(|&w| w == 0) {
        return Err(Error::Validation(format!("width at position {i} is 0")));
    }
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / fan_in as f64).sqrt();
            let mut rng = rng::keyed(seed, Domain::Init, &[l as u64]);
            let weights = (0..fan_in * fan_out)
                .map(|_| std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Dense::new(fan_in, fan_out, weights, vec![0.0; fan_out])
        })
        .collect::<Result<Vec<_>>>()?;
    Network::from_layers(layers)
}

/// Projects every row of `batch`.
pub fn forward(net: &Network, batch: &Matrix) -> Result<Matrix> {
    net.check_input(batch.cols())?;
    let mut out = Vec::with_capacity(batch.rows() * OUTPUT_DIM);
    for chunk in batch.values().chunks(FORWARD_CHUNK * batch.cols()) {
        let rows = chunk.len() / batch.cols();
        let mut acts = net.activations(chunk, rows)?;
        out.extend_from_slice(&acts.pop().unwrap());
    }
    Ok(Matrix::from_raw(batch.rows(), OUTPUT_DIM, out))
}

/// Projects a single input vector.
pub fn project(net: &Network, x: &[f64]) -> Result<[f64; 2]> {
    net.check_input(x.len())?;
    let acts = net.activations(x, 1)?;
    let out = acts.last().unwrap();
    Ok([out[0], out[1]])
}

/// Multiplies each row `r` of `m` (row width `w`) elementwise by the mask of
/// sample `r / 2` taken from `act` (`pre > 0`).
fn apply_paired_mask(m: &mut [f64], act: &[f64], w: usize) {
    for (r, row) in m.chunks_exact_mut(w).enumerate() {
        let s = r / OUTPUT_DIM;
        let mask = &act[s * w..(s + 1) * w];
        for (v, &a) in row.iter_mut().zip(mask) {
            if a <= 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// Reverse cotangents for both output coordinates of every sample.
///
/// Returns `gs[l]` (rows `2 * rows`, width `outputs_l`; row `2s + o` belongs
/// to sample `s`, output `o`) and the stacked Jacobian rows `J` of width d.
fn reverse_cotangents(net: &Network, acts: &[Vec<f64>], rows: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let layers = net.layers();
    let big = rows * OUTPUT_DIM;
    let mut gs: Vec<Vec<f64>> = vec![Vec::new(); layers.len()];

    let mut g = vec![0.0; big * OUTPUT_DIM];
    for r in 0..big {
        g[r * OUTPUT_DIM + r % OUTPUT_DIM] = 1.0;
    }
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let mut prev = vec![0.0; big * layer.inputs];
        gemm(
            big,
            layer.outputs,
            layer.inputs,
            1.0,
            &g,
            Op::N,
            &layer.weights,
            Op::N,
            0.0,
            &mut prev,
        );
        gs[l] = g;
        if l > 0 {
            apply_paired_mask(&mut prev, &acts[l], layer.inputs);
        }
        g = prev;
    }
    (gs, g)
}

/// Exact 2×d input Jacobian at `x`, one reverse pass per output coordinate.
pub fn jacobian(net: &Network, x: &[f64]) -> Result<JacobianBlock> {
    net.check_input(x.len())?;
    let acts = net.activations(x, 1)?;
    let (_, j) = reverse_cotangents(net, &acts, 1);
    Ok(JacobianBlock {
        dim: x.len(),
        values: j,
    })
}

/// Input–output Jacobian: row `o` holds `d f_o / d x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBlock {
    dim: usize,
    values: Vec<f64>,
}

impl JacobianBlock {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, output: usize) -> &[f64] {
        &self.values[output * self.dim..(output + 1) * self.dim]
    }

    pub fn get(&self, output: usize, input: usize) -> f64 {
        self.values[output * self.dim + input]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `J v`, the directional derivative along `v`.
    pub fn apply(&self, v: &[f64]) -> [f64; 2] {
        let dot = |o: usize| self.row(o).iter().zip(v).map(|(a, b)| a * b).sum();
        [dot(0), dot(1)]
    }
}

/// Mean squared Frobenius norm of the Jacobian over the rows of `batch`.
pub fn jacobian_frobenius_sq(net: &Network, batch: &Matrix) -> Result<f64> {
    net.check_input(batch.cols())?;
    let mut total = 0.0;
    for chunk in batch.values().chunks(FORWARD_CHUNK * batch.cols()) {
        let rows = chunk.len() / batch.cols();
        let acts = net.activations(chunk, rows)?;
        let (_, j) = reverse_cotangents(net, &acts, rows);
        total += j.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total / batch.rows() as f64)
}

/// Parameter gradients laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }
}

/// Loss decomposition returned with the gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    /// Mean over rows of the squared Euclidean prediction error.
    pub mse: f64,
    /// Mean squared Frobenius norm of the input Jacobian (without λ).
    pub jacobian: f64,
    /// `mse + λ * jacobian`.
    pub total: f64,
}

/// Gradients of `mse + λ * mean ||J_f||_F^2` over a batch.
///
/// The Jacobian term is only evaluated when `lambda > 0`; with `lambda == 0`
/// `Loss::jacobian` is reported as 0.
pub fn param_gradients(
    net: &Network,
    batch: &Matrix,
    targets: &Matrix,
    lambda: f64,
) -> Result<(Gradients, Loss)> {
    net.check_input(batch.cols())?;
    if targets.cols() != OUTPUT_DIM || targets.rows() != batch.rows() {
        return Err(Error::Validation(format!(
            "targets are {}x{}, expected {}x{OUTPUT_DIM}",
            targets.rows(),
            targets.cols(),
            batch.rows()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Validation(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }

    let rows = batch.rows();
    let scale = 1.0 / rows as f64;
    let layers = net.layers();
    let acts = net.activations(batch.values(), rows)?;
    let mut grads = Gradients::zeros_like(net);

    // Squared-error term.
    let out = acts.last().unwrap();
    let mut g: Vec<f64> = out
        .iter()
        .zip(targets.values())
        .map(|(p, t)| 2.0 * (p - t) * scale)
        .collect();
    let mse = out
        .iter()
        .zip(targets.values())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        * scale;

    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let lg = &mut grads.layers[l];
        gemm(
            layer.outputs,
            rows,
            layer.inputs,
            1.0,
            &g,
            Op::T,
            &acts[l],
            Op::N,
            0.0,
            &mut lg.weights,
        );
        for row in g.chunks_exact(layer.outputs) {
            for (b, v) in lg.bias.iter_mut().zip(row) {
                *b += v;
            }
        }
        if l > 0 {
            let mut prev = vec![0.0; rows * layer.inputs];
            gemm(
                rows,
                layer.outputs,
                layer.inputs,
                1.0,
                &g,
                Op::N,
                &layer.weights,
                Op::N,
                0.0,
                &mut prev,
            );
            for (v, &a) in prev.iter_mut().zip(&acts[l]) {
                if a <= 0.0 {
                    *v = 0.0;
                }
            }
            if prev.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    layer: l,
                    message: "non-finite backpropagated gradient".into(),
                });
            }
            g = prev;
        }
    }

    let mut jac = 0.0;
    if lambda > 0.0 {
        let big = rows * OUTPUT_DIM;
        let (gs, jrows) = reverse_cotangents(net, &acts, rows);
        jac = jrows.iter().map(|v| v * v).sum::<f64>() * scale;
        let coeff = 2.0 * lambda * scale;
        let mut t = jrows;
        for (l, layer) in layers.iter().enumerate() {
            gemm(
                layer.outputs,
                big,
                layer.inputs,
                coeff,
                &gs[l],
                Op::T,
                &t,
                Op::N,
                1.0,
                &mut grads.layers[l].weights,
            );
            if l + 1 < layers.len() {
                let mut next = vec![0.0; big * layer.outputs];
                gemm(
                    big,
                    layer.inputs,
                    layer.outputs,
                    1.0,
                    &t,
                    Op::N,
                    &layer.weights,
                    Op::T,
                    0.0,
                    &mut next,
                );
                apply_paired_mask(&mut next, &acts[l + 1], layer.outputs);
                t = next;
            }
        }
    }

    let total = mse + lambda * jac;
    if let Some(l) = grads
        .layers
        .iter()
        .position(|g| g.weights.iter().chain(&g.bias).any(|v| !v.is_finite()))
    {
        return Err(Error::Numerical {
            layer: l,
            message: "non-finite parameter gradient".into(),
        });
    }
    if !total.is_finite() {
        return Err(Error::Numerical {
            layer: layers.len() - 1,
            message: "non-finite loss".into(),
        });
    }
    Ok((
        grads,
        Loss {
            mse,
            jacobian: jac,
            total,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Network {
        // 2 -> 2 (ReLU) -> 2
        let l1 = Dense::new(2, 2, vec![1.0, 2.0, -1.0, 0.5], vec![0.5, -0.25]).unwrap();
        let l2 = Dense::new(2, 2, vec![1.0, -1.0, 2.0, 3.0], vec![0.0, 1.0]).unwrap();
        Network::from_layers(vec![l1, l2]).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let l = Dense::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let net = Network::from_layers(vec![l]).unwrap();
        assert_eq!(project(&net, &[3.0, -1.0]).unwrap(), [3.0, -1.0]);
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        // Hidden pre-activation is (-5, 2); the identity readout exposes it.
        let l1 = Dense::new(1, 2, vec![-5.0, 2.0], vec![0.0, 0.0]).unwrap();
        let l2 = Dense::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let net = Network::from_layers(vec![l1, l2]).unwrap();
        assert_eq!(project(&net, &[1.0]).unwrap(), [0.0, 2.0]);
    }

    #[test]
    fn toy_network_matches_hand_evaluation() {
        // Input (1,1): pre1 = (1+2+0.5, -1+0.5-0.25) = (3.5, -0.75) -> h = (3.5, 0)
        // out = (3.5*1 + 0*-1 + 0, 3.5*2 + 0*3 + 1) = (3.5, 8)
        assert_eq!(project(&toy(), &[1.0, 1.0]).unwrap(), [3.5, 8.0]);
    }

    #[test]
    fn presets_have_expected_shapes() {
        let net = init_network(&Preset::MlpSmall.widths(784), 0).unwrap();
        let shapes: Vec<(usize, usize)> =
            net.layers().iter().map(|l| (l.outputs(), l.inputs())).collect();
        assert_eq!(shapes, vec![(512, 784), (512, 512), (512, 512), (2, 512)]);
        assert!(net.layers().iter().all(|l| l.bias().iter().all(|&b| b == 0.0)));

        let large = Preset::MlpLarge.widths(10);
        assert_eq!(large, vec![10, 1024, 1024, 1024, 1024, 1024, 1024, 2]);
        assert_eq!(large.len() - 1, 7);
    }

    #[test]
    fn init_is_seeded() {
        let a = init_network(&[5, 8, 2], 3).unwrap();
        assert_eq!(a, init_network(&[5, 8, 2], 3).unwrap());
        assert_ne!(a, init_network(&[5, 8, 2], 4).unwrap());
    }

    #[test]
    fn init_rejects_bad_widths() {
        assert!(init_network(&[], 0).is_err());
        assert!(init_network(&[3, 0, 2], 0).is_err());
        assert!(init_network(&[3, 4, 3], 0).is_err());
    }

    #[test]
    fn he_init_scale() {
        let net = init_network(&[400, 300, 2], 11).unwrap();
        let w = net.layers()[0].weights();
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        let want = 2.0 / 400.0;
        assert!((var / want - 1.0).abs() < 0.02, "var {var} vs {want}");
    }

    #[test]
    fn width_mismatch_is_reported() {
        let m = Matrix::zeros(3, 5);
        assert!(matches!(
            forward(&toy(), &m),
            Err(Error::Dimension { expected: 2, actual: 5 })
        ));
    }

    #[test]
    fn linear_network_jacobian_is_its_weight() {
        let w = vec![1.0, -2.0, 0.5, 3.0, 0.25, -1.0];
        let net = Network::from_layers(vec![Dense::new(3, 2, w.clone(), vec![1.0, 2.0]).unwrap()])
            .unwrap();
        let j = jacobian(&net, &[0.3, -0.7, 2.0]).unwrap();
        assert_eq!(j.row(0), &w[..3]);
        assert_eq!(j.row(1), &w[3..]);
        let batch = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, -4.0, 5.0, 6.0]).unwrap();
        let fro: f64 = w.iter().map(|v| v * v).sum();
        assert_eq!(jacobian_frobenius_sq(&net, &batch).unwrap(), fro);
    }

    #[test]
    fn dead_first_layer_gives_zero_jacobian() {
        let l1 = Dense::new(2, 3, vec![1.0; 6], vec![-100.0; 3]).unwrap();
        let l2 = Dense::new(3, 2, vec![1.0; 6], vec![0.0; 2]).unwrap();
        let net = Network::from_layers(vec![l1, l2]).unwrap();
        let j = jacobian(&net, &[0.5, 0.5]).unwrap();
        assert_eq!(j.frobenius_sq(), 0.0);
    }

    #[test]
    fn zero_network_has_zero_penalty() {
        let l1 = Dense::new(3, 4, vec![0.0; 12], vec![0.0; 4]).unwrap();
        let l2 = Dense::new(4, 2, vec![0.0; 8], vec![0.0; 2]).unwrap();
        let net = Network::from_layers(vec![l1, l2]).unwrap();
        let batch = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]).unwrap();
        assert_eq!(jacobian_frobenius_sq(&net, &batch).unwrap(), 0.0);
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let net = init_network(&[3, 6, 2], 5).unwrap();
        let batch = Matrix::new(2, 3, vec![0.1, 0.2, 0.3, -0.3, 0.5, 0.9]).unwrap();
        let targets = forward(&net, &batch).unwrap();
        let (grads, loss) = param_gradients(&net, &batch, &targets, 0.0).unwrap();
        assert_eq!(loss.total, 0.0);
        assert!(grads.iter().all(|g| g == 0.0));
    }

    #[test]
    fn penalty_on_linear_net_adds_two_lambda_w() {
        let w = vec![0.5, -1.5, 2.0, 0.25];
        let net = Network::from_layers(vec![Dense::new(2, 2, w.clone(), vec![0.0; 2]).unwrap()])
            .unwrap();
        let batch = Matrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 2.0, -1.0]).unwrap();
        let targets = Matrix::new(3, 2, vec![0.3, 0.1, -0.2, 0.7, 1.0, 1.0]).unwrap();
        let (plain, l0) = param_gradients(&net, &batch, &targets, 0.0).unwrap();
        let (reg, l10) = param_gradients(&net, &batch, &targets, 10.0).unwrap();
        for (i, wi) in w.iter().enumerate() {
            let added = reg.layers[0].weights[i] - plain.layers[0].weights[i];
            assert!((added - 2.0 * 10.0 * wi).abs() < 1e-12, "{added}");
        }
        assert_eq!(reg.layers[0].bias, plain.layers[0].bias);
        let fro: f64 = w.iter().map(|v| v * v).sum();
        assert!((l10.total - l0.total - 10.0 * fro).abs() < 1e-12);
        assert!(l10.total >= l10.mse);
    }

    #[test]
    fn rejects_bad_targets_and_lambda() {
        let net = toy();
        let batch = Matrix::zeros(2, 2);
        assert!(param_gradients(&net, &batch, &Matrix::zeros(3, 2), 0.0).is_err());
        assert!(param_gradients(&net, &batch, &Matrix::zeros(2, 2), -1.0).is_err());
    }

    #[test]
    fn huge_weights_surface_numerical_error_with_layer() {
        let l1 = Dense::new(1, 1, vec![1e300], vec![0.0]).unwrap();
        let l2 = Dense::new(1, 2, vec![1e300, 1.0], vec![0.0; 2]).unwrap();
        let net = Network::from_layers(vec![l1, l2]).unwrap();
        let batch = Matrix::new(1, 1, vec![1e10]).unwrap();
        match forward(&net, &batch) {
            Err(Error::Numerical { layer, .. }) => assert_eq!(layer, 0),
            other => panic!("{other:?}"),
        }
    }
}
