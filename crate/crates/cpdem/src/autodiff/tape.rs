use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{AdError, Scalar, TangentValue};

/// Primitive kinds recorded on the tape; carried for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Scale,
    Shift,
    Recip,
    Powi,
    Exp,
    Ln,
    Tanh,
    Relu,
    Min,
    Max,
}

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
    value: f64,
    op: OpKind,
}

/// Append-only record of primitive operations for one reverse sweep.
///
/// Single-threaded during recording and replay; independent tapes (one per
/// collocation chunk) may run concurrently and their gradient vectors are
/// combined by the caller in a fixed order.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    leaves: RefCell<Vec<u32>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(nodes)),
            leaves: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Clears all recorded nodes and leaves; capacity is kept so the tape
    /// can be reused across chunks without reallocating.
    pub fn reset(&self) {
        self.nodes.borrow_mut().clear();
        self.leaves.borrow_mut().clear();
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        idx
    }

    /// Registers a trainable leaf; its adjoint is reported by [`Tape::gradient`].
    pub fn leaf(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [0, 0],
            partials: [0.0, 0.0],
            value,
            op: OpKind::Leaf,
        });
        self.leaves.borrow_mut().push(idx);
        Var {
            tape: self,
            index: idx,
            value,
        }
    }

    /// Records a constant input; no gradient is reported for it.
    pub fn constant(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [0, 0],
            partials: [0.0, 0.0],
            value,
            op: OpKind::Const,
        });
        Var {
            tape: self,
            index: idx,
            value,
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.borrow().len()
    }

    /// First node holding a non-finite value, if any.
    pub fn first_nonfinite(&self) -> Option<(usize, OpKind, f64)> {
        self.nodes
            .borrow()
            .iter()
            .enumerate()
            .find(|(_, n)| !n.value.is_finite())
            .map(|(i, n)| (i, n.op, n.value))
    }

    /// Reverse sweep from `output`: adjoints of every registered leaf, in
    /// registration order. Does not validate finiteness; see
    /// [`tape_gradient`] for the checked entry point.
    pub fn gradient(&self, output: Var<'_>) -> GradientVector {
        assert!(
            std::ptr::eq(output.tape, self),
            "output recorded on a different tape"
        );
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0f64; nodes.len()];
        adj[output.index as usize] = 1.0;
        for i in (0..=output.index as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = &nodes[i];
            match node.op {
                OpKind::Leaf | OpKind::Const => {}
                _ => {
                    adj[node.parents[0] as usize] += node.partials[0] * a;
                    if node.partials[1] != 0.0 {
                        adj[node.parents[1] as usize] += node.partials[1] * a;
                    }
                }
            }
        }
        let entries = self
            .leaves
            .borrow()
            .iter()
            .map(|&l| adj[l as usize])
            .collect();
        GradientVector { entries }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// A value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: u32,
    value: f64,
}

impl<'t> Var<'t> {
    fn unary(self, op: OpKind, value: f64, partial: f64) -> Self {
        let idx = self.tape.push(Node {
            parents: [self.index, 0],
            partials: [partial, 0.0],
            value,
            op,
        });
        Var {
            tape: self.tape,
            index: idx,
            value,
        }
    }

    fn binary(self, rhs: Self, op: OpKind, value: f64, da: f64, db: f64) -> Self {
        debug_assert!(
            std::ptr::eq(self.tape, rhs.tape),
            "operands recorded on different tapes"
        );
        let idx = self.tape.push(Node {
            parents: [self.index, rhs.index],
            partials: [da, db],
            value,
            op,
        });
        Var {
            tape: self.tape,
            index: idx,
            value,
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, OpKind::Add, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, OpKind::Sub, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, OpKind::Mul, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let value = self.value / rhs.value;
        let rb = 1.0 / rhs.value;
        self.binary(rhs, OpKind::Div, value, rb, -value * rb)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(OpKind::Neg, -self.value, -1.0)
    }
}

impl<'t> Scalar for Var<'t> {
    #[inline]
    fn val(self) -> f64 {
        self.value
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self.unary(OpKind::Scale, c * self.value, c)
    }
    #[inline]
    fn shift(self, c: f64) -> Self {
        self.unary(OpKind::Shift, self.value + c, 1.0)
    }
    #[inline]
    fn recip(self) -> Self {
        let r = 1.0 / self.value;
        self.unary(OpKind::Recip, r, -r * r)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        match n {
            0 => self.unary(OpKind::Powi, 1.0, 0.0),
            1 => self,
            _ => self.unary(
                OpKind::Powi,
                self.value.powi(n),
                f64::from(n) * self.value.powi(n - 1),
            ),
        }
    }
    #[inline]
    fn exp(self) -> Self {
        let w = self.value.exp();
        self.unary(OpKind::Exp, w, w)
    }
    #[inline]
    fn ln(self) -> Self {
        self.unary(OpKind::Ln, self.value.ln(), 1.0 / self.value)
    }
    #[inline]
    fn tanh(self) -> Self {
        let w = self.value.tanh();
        self.unary(OpKind::Tanh, w, 1.0 - w * w)
    }
    #[inline]
    fn relu(self) -> Self {
        if self.value > 0.0 {
            self.unary(OpKind::Relu, self.value, 1.0)
        } else {
            self.unary(OpKind::Relu, 0.0, 0.0)
        }
    }
    #[inline]
    fn min(self, other: Self) -> Self {
        if self.value <= other.value {
            self.binary(other, OpKind::Min, self.value, 1.0, 0.0)
        } else {
            self.binary(other, OpKind::Min, other.value, 0.0, 1.0)
        }
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        if self.value >= other.value {
            self.binary(other, OpKind::Max, self.value, 1.0, 0.0)
        } else {
            self.binary(other, OpKind::Max, other.value, 0.0, 1.0)
        }
    }
}

/// Gradient entries aligned index-for-index with the trainable parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector {
    pub entries: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            entries: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.entries.len(), other.len());
        self.entries.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// `self += scale * other`, entry-wise, in index order.
    pub fn axpy(&mut self, scale: f64, other: &GradientVector) {
        debug_assert_eq!(self.entries.len(), other.entries.len());
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += scale * b;
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for e in &mut self.entries {
            *e *= s;
        }
    }

    /// Zeroes every entry whose freeze flag is set.
    pub fn mask_frozen(&mut self, freeze_mask: &[bool]) {
        debug_assert_eq!(self.entries.len(), freeze_mask.len());
        for (e, &frozen) in self.entries.iter_mut().zip(freeze_mask) {
            if frozen {
                *e = 0.0;
            }
        }
    }
}

/// Evaluates `f` at `x` with forward-mode duals and returns the value and
/// the directional derivative with respect to `x[seed]`.
pub fn dual_eval<F>(f: F, x: &[f64], seed: usize) -> Result<(f64, f64), AdError>
where
    F: FnOnce(&[TangentValue<f64>]) -> Result<TangentValue<f64>, AdError>,
{
    if seed >= x.len() {
        return Err(AdError::SeedOutOfRange { seed, len: x.len() });
    }
    let inputs: Vec<TangentValue<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let t = [if i == seed { 1.0 } else { 0.0 }];
            TangentValue::new(xi, &t)
        })
        .collect();
    let out = f(&inputs)?;
    Ok((out.value(), out.tangent_or_zero(0)))
}

/// Records `f` over registered leaves and returns the exact gradient.
///
/// Every node value is validated: the first non-finite intermediate is
/// reported by index and operation. The tape is created internally; use
/// [`Tape`] directly when the recording needs to be reused or chunked.
pub fn tape_gradient<F>(f: F, leaves: &[f64]) -> Result<GradientVector, AdError>
where
    F: for<'t> FnOnce(&'t Tape, &[Var<'t>]) -> Result<Var<'t>, AdError>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = leaves.iter().map(|&v| tape.leaf(v)).collect();
    let out = f(&tape, &vars)?;
    if let Some((node, op, value)) = tape.first_nonfinite() {
        return Err(AdError::NonFinite { node, op, value });
    }
    Ok(tape.gradient(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_sum_of_squares() {
        let g = tape_gradient(
            |_tape, leaves| {
                let mut s = leaves[0] * leaves[0];
                for &l in &leaves[1..] {
                    s = s + l * l;
                }
                Ok(s)
            },
            &[1.0, 2.0, 3.0],
        )
        .unwrap();
        assert_eq!(g.entries, vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = tape_gradient(|tape, _| Ok(tape.constant(7.5)), &[1.0, -2.0]).unwrap();
        assert_eq!(g.entries, vec![0.0, 0.0]);
    }

    #[test]
    fn nested_dual_inside_tape() {
        // Nesting smoke test: a forward-mode derivative computed on top of
        // tape variables flows back into the reverse sweep.
        // g(x) = l * x^2 / 2, so dg/dx at x = 2 is 2l, and
        // f = l * dg = 2 l^2 with gradient 4l = 12 at l = 3.
        let g = tape_gradient(
            |tape, leaves| {
                let l = leaves[0];
                let x = TangentValue::new(tape.constant(2.0), &[tape.constant(1.0)]);
                let g = (TangentValue::constant(l) * x * x).scale(0.5);
                let dg = g.tangent(0);
                Ok(l * dg)
            },
            &[3.0],
        )
        .unwrap();
        assert_eq!(g.entries, vec![12.0]);
    }

    #[test]
    fn nonfinite_intermediate_is_diagnosed() {
        let err = tape_gradient(
            |_tape, leaves| {
                let z = leaves[0].scale(0.0); // exactly zero
                Ok(leaves[0] / z)
            },
            &[1.0],
        )
        .unwrap_err();
        match err {
            AdError::NonFinite { op, .. } => assert_eq!(op, OpKind::Div),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn tape_reusable_after_reset() {
        let tape = Tape::with_capacity(16);
        let a = tape.leaf(2.0);
        let y = a * a;
        assert_eq!(tape.gradient(y).entries, vec![4.0]);
        tape.reset();
        assert_eq!(tape.len(), 0);
        let b = tape.leaf(5.0);
        let y = b * b * b;
        assert_eq!(tape.gradient(y).entries, vec![75.0]);
    }

    #[test]
    fn dual_eval_matches_spec_examples() {
        let (v, d) = dual_eval(|x| Ok(x[0] * x[0]), &[3.0], 0).unwrap();
        assert_eq!((v, d), (9.0, 6.0));

        let (v, d) = dual_eval(|x| Ok(Scalar::tanh(x[0])), &[0.0], 0).unwrap();
        assert_eq!((v, d), (0.0, 1.0));
    }

    #[test]
    fn dual_eval_rejects_bad_seed() {
        let err = dual_eval(|x| Ok(x[0]), &[1.0], 3).unwrap_err();
        assert!(matches!(err, AdError::SeedOutOfRange { seed: 3, len: 1 }));
    }

    #[test]
    fn min_max_partials_follow_selection() {
        let g = tape_gradient(
            |_tape, leaves| Ok(Scalar::min(leaves[0], leaves[1]) + Scalar::max(leaves[0], leaves[1]).scale(3.0)),
            &[1.0, 2.0],
        )
        .unwrap();
        assert_eq!(g.entries, vec![1.0, 3.0]);
    }
}
