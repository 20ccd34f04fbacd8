//! The parameterized displacement network `u(X, eta)`: a coordinate
//! encoder and a material-parameter encoder feeding a manifold network,
//! `u = g_manifold([g_coord(X); g_param(eta)])`.
//!
//! Inputs are affinely normalized to [-1, 1] per component; spatial
//! derivatives are produced by forward-mode tangents seeded on each
//! normalized coordinate and chain-ruled through the normalization map, so
//! the reported jacobian is with respect to physical coordinates. Encoder
//! layers are all activated; the final manifold layer is linear so the
//! output scale is unconstrained.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Scalar, TangentValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply<V: Scalar>(self, x: TangentValue<V>) -> TangentValue<V> {
        match self {
            Activation::Tanh => Scalar::tanh(x),
            Activation::Relu => Scalar::relu(x),
        }
    }
}

/// Per-input affine normalization `x_norm = scale * x + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    /// Maps [min, max] onto [-1, 1].
    pub fn to_unit(min: f64, max: f64) -> Self {
        let scale = 2.0 / (max - min);
        Self {
            scale,
            offset: -(max + min) / (max - min),
        }
    }

    pub fn identity() -> Self {
        Self { scale: 1.0, offset: 0.0 }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }
}

/// Which sub-network a layer belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    CoordEncoder,
    ParamEncoder,
    Manifold,
}

/// Shape and flat-vector placement of one dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub block: Block,
    pub rows: usize,
    pub cols: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
    pub activated: bool,
}

impl LayerShape {
    pub fn n_params(&self) -> usize {
        self.rows * self.cols + self.rows
    }
}

/// Network topology plus input normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelArchitecture {
    /// Widths of the coordinate encoder; first entry is the spatial
    /// dimension. A single-entry list means an identity encoder.
    pub coord_encoder_widths: Vec<usize>,
    /// Widths of the material encoder; first entry is dim(eta).
    pub param_encoder_widths: Vec<usize>,
    /// Widths of the manifold network; the input width must equal the sum
    /// of the two encoder latent widths and the output width the spatial
    /// dimension.
    pub manifold_widths: Vec<usize>,
    pub activation: Activation,
    pub coord_norm: Vec<AffineMap>,
    pub param_norm: Vec<AffineMap>,
}

impl ModelArchitecture {
    pub fn dim(&self) -> usize {
        self.coord_encoder_widths[0]
    }

    pub fn eta_dim(&self) -> usize {
        self.param_encoder_widths[0]
    }

    pub fn coord_latent(&self) -> usize {
        *self.coord_encoder_widths.last().unwrap()
    }

    pub fn param_latent(&self) -> usize {
        *self.param_encoder_widths.last().unwrap()
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |what: String| Err(NetworkError::BadArchitecture { what });
        if self.coord_encoder_widths.is_empty()
            || self.param_encoder_widths.is_empty()
            || self.manifold_widths.len() < 2
        {
            return bad("width lists must be non-empty (manifold needs at least one layer)".into());
        }
        if self
            .coord_encoder_widths
            .iter()
            .chain(&self.param_encoder_widths)
            .chain(&self.manifold_widths)
            .any(|&w| w == 0)
        {
            return bad("all widths must be >= 1".into());
        }
        let d = self.dim();
        if !(1..=3).contains(&d) {
            return bad(format!("spatial dimension {d} not in 1..=3"));
        }
        let concat = self.coord_latent() + self.param_latent();
        if self.manifold_widths[0] != concat {
            return bad(format!(
                "manifold input width {} != coord latent {} + param latent {}",
                self.manifold_widths[0],
                self.coord_latent(),
                self.param_latent()
            ));
        }
        if *self.manifold_widths.last().unwrap() != d {
            return bad(format!(
                "manifold output width {} != spatial dimension {d}",
                self.manifold_widths.last().unwrap()
            ));
        }
        if self.param_latent() <= self.eta_dim() {
            return bad(format!(
                "param-encoder latent width {} must exceed dim(eta) {}",
                self.param_latent(),
                self.eta_dim()
            ));
        }
        if self.coord_norm.len() != d || self.param_norm.len() != self.eta_dim() {
            return bad("normalization maps must match input dimensions".into());
        }
        Ok(())
    }

    /// Flat-vector layout: coord encoder, param encoder, manifold; weights
    /// (row-major) then biases per layer.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let mut shapes = Vec::new();
        let mut offset = 0;
        let mut push_chain = |widths: &[usize], block: Block, last_linear: bool| {
            let n_layers = widths.len().saturating_sub(1);
            for (i, w) in widths.windows(2).enumerate() {
                let (cols, rows) = (w[0], w[1]);
                let is_last = i + 1 == n_layers;
                shapes.push(LayerShape {
                    block,
                    rows,
                    cols,
                    weight_offset: offset,
                    bias_offset: offset + rows * cols,
                    activated: !(last_linear && is_last),
                });
                offset += rows * cols + rows;
            }
        };
        push_chain(&self.coord_encoder_widths, Block::CoordEncoder, false);
        push_chain(&self.param_encoder_widths, Block::ParamEncoder, false);
        push_chain(&self.manifold_widths, Block::Manifold, true);
        shapes
    }

    pub fn n_params(&self) -> usize {
        params_in_chain(&self.coord_encoder_widths)
            + params_in_chain(&self.param_encoder_widths)
            + params_in_chain(&self.manifold_widths)
    }
}

/// Parameter count of a dense chain: sum of rows*cols + rows over layers.
pub fn params_in_chain(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

/// Precomputed evaluation plan; build once, evaluate many times.
#[derive(Clone, Debug)]
pub struct LayerPlan {
    pub shapes: Vec<LayerShape>,
    pub n_coord_layers: usize,
    pub n_param_layers: usize,
    pub n_params: usize,
}

impl LayerPlan {
    pub fn new(arch: &ModelArchitecture) -> Self {
        let shapes = arch.layer_shapes();
        Self {
            n_coord_layers: arch.coord_encoder_widths.len() - 1,
            n_param_layers: arch.param_encoder_widths.len() - 1,
            n_params: shapes.iter().map(|s| s.n_params()).sum(),
            shapes,
        }
    }
}

/// Flat trainable parameters with per-layer shapes and a freeze mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    pub flat: Vec<f64>,
    pub shape_table: Vec<LayerShape>,
    pub freeze_mask: Vec<bool>,
}

impl ParameterVector {
    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// `flat[i] += delta[i]` on every unfrozen entry; frozen entries are
    /// never modified.
    pub fn apply_step(&mut self, delta: &[f64]) {
        debug_assert_eq!(delta.len(), self.flat.len());
        for i in 0..self.flat.len() {
            if !self.freeze_mask[i] {
                self.flat[i] += delta[i];
            }
        }
    }

    /// Entries belonging to either encoder block.
    pub fn encoder_param_count(&self) -> usize {
        self.shape_table
            .iter()
            .filter(|s| s.block != Block::Manifold)
            .map(|s| s.n_params())
            .sum()
    }
}

/// Freeze policies for fine-tuning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreezePolicy {
    None,
    FreezeEncoders,
}

/// Sets the freeze mask: `FreezeEncoders` marks every coordinate- and
/// material-encoder entry, leaving the manifold trainable.
pub fn apply_freeze(params: &mut ParameterVector, policy: FreezePolicy) {
    match policy {
        FreezePolicy::None => params.freeze_mask.iter_mut().for_each(|m| *m = false),
        FreezePolicy::FreezeEncoders => {
            params.freeze_mask.iter_mut().for_each(|m| *m = false);
            for shape in &params.shape_table {
                if shape.block != Block::Manifold {
                    for i in shape.weight_offset..shape.bias_offset + shape.rows {
                        params.freeze_mask[i] = true;
                    }
                }
            }
        }
    }
}

/// Glorot-uniform initialization: weights in +-sqrt(6/(fan_in+fan_out)),
/// biases zero; deterministic for a fixed seed.
pub fn init_network(arch: &ModelArchitecture, seed: u64) -> Result<ParameterVector, NetworkError> {
    arch.validate()?;
    let shapes = arch.layer_shapes();
    let n: usize = shapes.iter().map(|s| s.n_params()).sum();
    let mut flat = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for shape in &shapes {
        let bound = (6.0 / (shape.cols + shape.rows) as f64).sqrt();
        for w in 0..shape.rows * shape.cols {
            flat[shape.weight_offset + w] = rng.gen_range(-bound..bound);
        }
        // biases stay zero
    }
    Ok(ParameterVector {
        freeze_mask: vec![false; n],
        shape_table: shapes,
        flat,
    })
}

/// Raw network output and its jacobian with respect to physical coordinates.
#[derive(Clone, Copy, Debug)]
pub struct NetworkOutput<V: Scalar> {
    pub dim: usize,
    pub u: [V; 3],
    /// Row i, column j: tangent of output i seeded on coordinate j.
    pub coord_jacobian: [[V; 3]; 3],
}

fn eval_chain<V: Scalar>(
    params: &[V],
    shapes: &[LayerShape],
    activation: Activation,
    inputs: Vec<TangentValue<V>>,
    block_name: &'static str,
) -> Result<Vec<TangentValue<V>>, NetworkError> {
    let mut current = inputs;
    for (layer_idx, shape) in shapes.iter().enumerate() {
        debug_assert_eq!(current.len(), shape.cols);
        let mut next = Vec::with_capacity(shape.rows);
        for r in 0..shape.rows {
            let mut acc = TangentValue::constant(params[shape.bias_offset + r]);
            let row = &params[shape.weight_offset + r * shape.cols..shape.weight_offset + (r + 1) * shape.cols];
            for (c, &w) in row.iter().enumerate() {
                acc = acc + TangentValue::constant(w) * current[c];
            }
            let out = if shape.activated { activation.apply(acc) } else { acc };
            if !out.val().is_finite() {
                return Err(NetworkError::NonFiniteLayer {
                    block: block_name,
                    layer: layer_idx,
                    neuron: r,
                });
            }
            next.push(out);
        }
        current = next;
    }
    Ok(current)
}

/// Encodes the material parameters once; the latent is constant across
/// collocation points for a fixed (params, eta) pair.
pub fn param_latent<V: Scalar>(
    params: &[V],
    arch: &ModelArchitecture,
    plan: &LayerPlan,
    eta: &[f64],
    lift: &impl Fn(f64) -> V,
) -> Result<Vec<TangentValue<V>>, NetworkError> {
    debug_assert_eq!(eta.len(), arch.eta_dim());
    let inputs: Vec<TangentValue<V>> = eta
        .iter()
        .zip(&arch.param_norm)
        .map(|(&v, map)| TangentValue::constant(lift(map.apply(v))))
        .collect();
    let range = plan.n_coord_layers..plan.n_coord_layers + plan.n_param_layers;
    eval_chain(params, &plan.shapes[range], arch.activation, inputs, "param_encoder")
}

/// Forward pass with a precomputed material latent. Coordinate inputs are
/// seeded with forward-mode tangents scaled by the normalization map, so
/// the jacobian is with respect to physical coordinates.
pub fn forward_with_latent<V: Scalar>(
    params: &[V],
    arch: &ModelArchitecture,
    plan: &LayerPlan,
    x: &[f64],
    h_param: &[TangentValue<V>],
    lift: &impl Fn(f64) -> V,
) -> Result<NetworkOutput<V>, NetworkError> {
    let d = arch.dim();
    debug_assert!(x.len() >= d);
    let zero = lift(0.0);
    let coord_inputs: Vec<TangentValue<V>> = (0..d)
        .map(|j| {
            let map = arch.coord_norm[j];
            let mut tangents = [zero; 3];
            tangents[j] = lift(map.scale);
            TangentValue::new(lift(map.apply(x[j])), &tangents[..d])
        })
        .collect();

    let h_coord = eval_chain(
        params,
        &plan.shapes[..plan.n_coord_layers],
        arch.activation,
        coord_inputs,
        "coord_encoder",
    )?;

    let mut concat = h_coord;
    concat.extend_from_slice(h_param);
    let outputs = eval_chain(
        params,
        &plan.shapes[plan.n_coord_layers + plan.n_param_layers..],
        arch.activation,
        concat,
        "manifold",
    )?;

    let mut u = [zero; 3];
    let mut jac = [[zero; 3]; 3];
    for (i, out) in outputs.iter().enumerate() {
        u[i] = out.value();
        for j in 0..d {
            jac[i][j] = out.tangent_or(j, zero);
        }
    }
    Ok(NetworkOutput {
        dim: d,
        u,
        coord_jacobian: jac,
    })
}

/// One-off forward pass over plain numbers.
pub fn forward(
    params: &ParameterVector,
    arch: &ModelArchitecture,
    x: &[f64],
    eta: &[f64],
) -> Result<NetworkOutput<f64>, NetworkError> {
    arch.validate()?;
    let plan = LayerPlan::new(arch);
    let lift = |c: f64| c;
    let h = param_latent(&params.flat, arch, &plan, eta, &lift)?;
    forward_with_latent(&params.flat, arch, &plan, x, &h, &lift)
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    BadArchitecture { what: String },
    NonFiniteLayer {
        block: &'static str,
        layer: usize,
        neuron: usize,
    },
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::BadArchitecture { what } => write!(f, "invalid architecture: {what}"),
            NetworkError::NonFiniteLayer { block, layer, neuron } => write!(
                f,
                "non-finite activation in {block} layer {layer}, neuron {neuron}"
            ),
        }
    }
}

impl std::error::Error for NetworkError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch_2d() -> ModelArchitecture {
        ModelArchitecture {
            coord_encoder_widths: vec![2, 20, 20],
            param_encoder_widths: vec![2, 10, 10],
            manifold_widths: vec![30, 20, 2],
            activation: Activation::Tanh,
            coord_norm: vec![AffineMap::to_unit(0.0, 3.0), AffineMap::to_unit(0.0, 1.0)],
            param_norm: vec![
                AffineMap::to_unit(800.0, 1200.0),
                AffineMap::to_unit(0.25, 0.35),
            ],
        }
    }

    #[test]
    fn chain_param_count_matches_hand_arithmetic() {
        // 2*20+20 + 20*20+20 + 20*2+2 = 522
        assert_eq!(params_in_chain(&[2, 20, 20, 2]), 522);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let arch = arch_2d();
        let a = init_network(&arch, 0).unwrap();
        let b = init_network(&arch, 0).unwrap();
        assert_eq!(a, b);
        let c = init_network(&arch, 1).unwrap();
        assert_ne!(a.flat, c.flat);

        for shape in &a.shape_table {
            for i in 0..shape.rows {
                assert_eq!(a.flat[shape.bias_offset + i], 0.0);
            }
        }
        assert_eq!(a.len(), arch.n_params());
    }

    #[test]
    fn invalid_widths_rejected() {
        let mut arch = arch_2d();
        arch.manifold_widths[0] = 29;
        assert!(matches!(
            init_network(&arch, 0),
            Err(NetworkError::BadArchitecture { .. })
        ));

        let mut arch = arch_2d();
        arch.param_encoder_widths = vec![2, 10, 2]; // latent not > dim(eta)
        assert!(arch.validate().is_err());
    }

    #[test]
    fn zero_params_give_zero_output_and_jacobian() {
        let arch = arch_2d();
        let mut params = init_network(&arch, 0).unwrap();
        params.flat.iter_mut().for_each(|w| *w = 0.0);
        let out = forward(&params, &arch, &[1.0, 0.5], &[1000.0, 0.3]).unwrap();
        for i in 0..2 {
            assert_eq!(out.u[i], 0.0);
            for j in 0..2 {
                assert_eq!(out.coord_jacobian[i][j], 0.0);
            }
        }
    }

    #[test]
    fn single_linear_layer_reproduces_matrix() {
        // coord encoder = identity, param encoder zeroed, manifold single
        // linear layer: u = W x exactly, jacobian = W.
        let arch = ModelArchitecture {
            coord_encoder_widths: vec![2],
            param_encoder_widths: vec![1, 2],
            manifold_widths: vec![4, 2],
            activation: Activation::Tanh,
            coord_norm: vec![AffineMap::identity(), AffineMap::identity()],
            param_norm: vec![AffineMap::identity()],
        };
        let mut params = init_network(&arch, 3).unwrap();
        params.flat.iter_mut().for_each(|w| *w = 0.0);
        let w = [[1.5, -0.25], [0.75, 2.0]];
        // manifold layer is the last shape; cols = 4 (2 coord + 2 param)
        let shape = *params.shape_table.last().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                params.flat[shape.weight_offset + i * shape.cols + j] = w[i][j];
            }
        }
        let x = [0.6, -1.2];
        let out = forward(&params, &arch, &x, &[0.0]).unwrap();
        for i in 0..2 {
            let expect = w[i][0] * x[0] + w[i][1] * x[1];
            assert!((out.u[i] - expect).abs() < 1e-15);
            for j in 0..2 {
                assert_eq!(out.coord_jacobian[i][j], w[i][j]);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let arch = arch_2d();
        let params = init_network(&arch, 11).unwrap();
        let eta = [950.0, 0.31];
        let x = [1.7, 0.43];
        let out = forward(&params, &arch, &x, &eta).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let up = forward(&params, &arch, &xp, &eta).unwrap();
            let um = forward(&params, &arch, &xm, &eta).unwrap();
            for i in 0..2 {
                let fd = (up.u[i] - um.u[i]) / (2.0 * h);
                let ad = out.coord_jacobian[i][j];
                assert!(
                    (ad - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "jac[{i}][{j}]: ad {ad} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn forward_is_stateless() {
        let arch = arch_2d();
        let params = init_network(&arch, 5).unwrap();
        let eta = [900.0, 0.27];
        let a1 = forward(&params, &arch, &[0.5, 0.5], &eta).unwrap();
        let b1 = forward(&params, &arch, &[2.5, 0.1], &eta).unwrap();
        let b2 = forward(&params, &arch, &[2.5, 0.1], &eta).unwrap();
        let a2 = forward(&params, &arch, &[0.5, 0.5], &eta).unwrap();
        assert_eq!(a1.u, a2.u);
        assert_eq!(b1.u, b2.u);
    }

    #[test]
    fn relu_network_reproduces_piecewise_linear_interpolant() {
        // With relu activation, hand-set knots and weights, the network is
        // exactly u0 + sum_i w_i relu(x - x_i).
        let knots = [-0.8, -0.35, 0.05, 0.4, 0.75];
        let w = [0.9, -1.4, 0.6, 1.1, -0.3];
        let u0 = 0.25;
        let arch = ModelArchitecture {
            coord_encoder_widths: vec![1],
            param_encoder_widths: vec![1, 2],
            manifold_widths: vec![3, knots.len(), 1],
            activation: Activation::Relu,
            coord_norm: vec![AffineMap::identity()],
            param_norm: vec![AffineMap::identity()],
        };
        let mut params = init_network(&arch, 0).unwrap();
        params.flat.iter_mut().for_each(|v| *v = 0.0);
        let shapes = arch.layer_shapes();
        let hidden = shapes[shapes.len() - 2];
        let out_layer = shapes[shapes.len() - 1];
        for (i, (&xi, &_wi)) in knots.iter().zip(&w).enumerate() {
            params.flat[hidden.weight_offset + i * hidden.cols] = 1.0; // coord slot
            params.flat[hidden.bias_offset + i] = -xi;
        }
        for (i, &wi) in w.iter().enumerate() {
            params.flat[out_layer.weight_offset + i] = wi;
        }
        params.flat[out_layer.bias_offset] = u0;

        for k in 0..1000 {
            let x = -1.0 + 2.0 * (k as f64) / 999.0;
            let direct = {
                let mut acc = u0;
                for (&xi, &wi) in knots.iter().zip(&w) {
                    acc += wi * (x - xi).max(0.0);
                }
                acc
            };
            let net = forward(&params, &arch, &[x], &[0.0]).unwrap().u[0];
            assert!(
                (net - direct).abs() <= 1e-14 * (1.0 + direct.abs()),
                "x={x}: net {net} vs direct {direct}"
            );
        }
    }

    #[test]
    fn restriction_to_x_is_continuous() {
        let arch = arch_2d();
        let params = init_network(&arch, 9).unwrap();
        let eta = [1100.0, 0.26];
        let base = forward(&params, &arch, &[1.5, 0.5], &eta).unwrap().u;
        let mut last_max = f64::INFINITY;
        for &delta in &[1e-2, 1e-4, 1e-6] {
            let moved = forward(&params, &arch, &[1.5 + delta, 0.5 + delta], &eta)
                .unwrap()
                .u;
            let diff = (0..2).map(|i| (moved[i] - base[i]).abs()).fold(0.0, f64::max);
            assert!(diff < last_max || diff == 0.0);
            last_max = diff;
        }
        assert!(last_max < 1e-4);
    }

    #[test]
    fn freeze_policy_marks_encoder_entries() {
        let arch = arch_2d();
        let mut params = init_network(&arch, 2).unwrap();
        apply_freeze(&mut params, FreezePolicy::None);
        assert!(params.freeze_mask.iter().all(|&m| !m));

        apply_freeze(&mut params, FreezePolicy::FreezeEncoders);
        let frozen = params.freeze_mask.iter().filter(|&&m| m).count();
        assert_eq!(frozen, params.encoder_param_count());
        assert_eq!(
            frozen,
            params_in_chain(&[2, 20, 20]) + params_in_chain(&[2, 10, 10])
        );

        // a step never touches frozen entries
        let before = params.clone();
        let delta = vec![1.0; params.len()];
        params.apply_step(&delta);
        for (i, shape) in params.shape_table.iter().enumerate() {
            let _ = i;
            let range = shape.weight_offset..shape.bias_offset + shape.rows;
            for k in range {
                if shape.block == Block::Manifold {
                    assert_eq!(params.flat[k], before.flat[k] + 1.0);
                } else {
                    assert_eq!(params.flat[k].to_bits(), before.flat[k].to_bits());
                }
            }
        }
    }
}
