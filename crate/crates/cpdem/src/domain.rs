//! Collocation grids over 1D/2D/3D boxes, quadrature for domain and
//! boundary integrals, and hard Dirichlet enforcement by multiplying the
//! raw network output with a function that vanishes on the constrained
//! face.

use std::fmt;

use crate::autodiff::Scalar;
use crate::network::NetworkOutput;

/// Quadrature rule for the tensor-product grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Product trapezoid weights; any counts >= 2.
    Trapezoid,
    /// Product Simpson weights; odd counts >= 3 per axis.
    Simpson,
}

/// A box face, identified by axis and side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    Min(usize),
    Max(usize),
}

impl Face {
    pub fn axis(&self) -> usize {
        match *self {
            Face::Min(a) | Face::Max(a) => a,
        }
    }
}

/// Traction-loaded boundary patch with its own quadrature.
#[derive(Clone, Debug)]
pub struct NeumannSegment {
    pub face: Face,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub traction: [f64; 3],
}

/// Regular tensor-product collocation grid with quadrature weights.
#[derive(Clone, Debug)]
pub struct CollocationDomain {
    pub dim: usize,
    /// Per-axis (min, max); axes beyond `dim` are unused.
    pub bounds: [(f64, f64); 3],
    pub counts: [usize; 3],
    pub rule: QuadratureRule,
    /// Row-major tensor grid, axis 0 slowest.
    pub points: Vec<[f64; 3]>,
    /// Per-point quadrature weights; they sum to the box volume.
    pub weights: Vec<f64>,
    pub neumann_segments: Vec<NeumannSegment>,
}

/// Equally spaced per-axis nodes and quadrature weights.
fn axis_rule(
    min: f64,
    max: f64,
    count: usize,
    rule: QuadratureRule,
) -> Result<(Vec<f64>, Vec<f64>), DomainError> {
    if count < 2 {
        return Err(DomainError::BadCounts {
            what: "at least 2 points per axis",
            got: count,
        });
    }
    if max <= min {
        return Err(DomainError::BadBox { min, max });
    }
    let h = (max - min) / (count - 1) as f64;
    let nodes: Vec<f64> = (0..count).map(|i| min + h * i as f64).collect();
    let weights = match rule {
        QuadratureRule::Trapezoid => (0..count)
            .map(|i| if i == 0 || i == count - 1 { 0.5 * h } else { h })
            .collect(),
        QuadratureRule::Simpson => {
            if count % 2 == 0 {
                return Err(DomainError::BadCounts {
                    what: "odd point count for the Simpson rule",
                    got: count,
                });
            }
            (0..count)
                .map(|i| {
                    let c = if i == 0 || i == count - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 3.0
                })
                .collect()
        }
    };
    Ok((nodes, weights))
}

/// Tensor grid with trapezoid product weights.
pub fn build_grid(
    dim: usize,
    bounds: &[(f64, f64)],
    counts: &[usize],
) -> Result<CollocationDomain, DomainError> {
    build_grid_with_rule(dim, bounds, counts, QuadratureRule::Trapezoid)
}

pub fn build_grid_with_rule(
    dim: usize,
    bounds: &[(f64, f64)],
    counts: &[usize],
    rule: QuadratureRule,
) -> Result<CollocationDomain, DomainError> {
    if !(1..=3).contains(&dim) || bounds.len() != dim || counts.len() != dim {
        return Err(DomainError::BadCounts {
            what: "dim in 1..=3 with matching bounds/counts",
            got: dim,
        });
    }
    let mut axes = Vec::with_capacity(dim);
    for a in 0..dim {
        axes.push(axis_rule(bounds[a].0, bounds[a].1, counts[a], rule)?);
    }

    let total: usize = counts.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = [0usize; 3];
    loop {
        let mut p = [0.0; 3];
        let mut w = 1.0;
        for a in 0..dim {
            p[a] = axes[a].0[idx[a]];
            w *= axes[a].1[idx[a]];
        }
        points.push(p);
        weights.push(w);
        // odometer increment, last axis fastest
        let mut a = dim;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
        }
        if idx.iter().take(dim).all(|&i| i == 0) {
            break;
        }
    }

    let mut b = [(0.0, 0.0); 3];
    b[..dim].copy_from_slice(&bounds[..dim]);
    let mut c = [1usize; 3];
    c[..dim].copy_from_slice(&counts[..dim]);
    Ok(CollocationDomain {
        dim,
        bounds: b,
        counts: c,
        rule,
        points,
        weights,
        neumann_segments: Vec::new(),
    })
}

impl CollocationDomain {
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.bounds[a].1 - self.bounds[a].0).product()
    }

    /// Grid restricted to a box face: points and face-measure weights.
    pub fn face_grid(&self, face: Face) -> Result<(Vec<[f64; 3]>, Vec<f64>), DomainError> {
        let axis = face.axis();
        if axis >= self.dim {
            return Err(DomainError::BadFace { axis, dim: self.dim });
        }
        let fixed = match face {
            Face::Min(_) => self.bounds[axis].0,
            Face::Max(_) => self.bounds[axis].1,
        };
        let other: Vec<usize> = (0..self.dim).filter(|&a| a != axis).collect();
        let mut axes = Vec::new();
        for &a in &other {
            axes.push(axis_rule(
                self.bounds[a].0,
                self.bounds[a].1,
                self.counts[a],
                self.rule,
            )?);
        }
        let total: usize = other.iter().map(|&a| self.counts[a]).product::<usize>().max(1);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        if other.is_empty() {
            // 1D domain: a face is a single endpoint with unit measure
            let mut p = [0.0; 3];
            p[axis] = fixed;
            points.push(p);
            weights.push(1.0);
        } else {
            let mut idx = vec![0usize; other.len()];
            loop {
                let mut p = [0.0; 3];
                p[axis] = fixed;
                let mut w = 1.0;
                for (k, &a) in other.iter().enumerate() {
                    p[a] = axes[k].0[idx[k]];
                    w *= axes[k].1[idx[k]];
                }
                points.push(p);
                weights.push(w);
                let mut k = other.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < self.counts[other[k]] {
                        break;
                    }
                    idx[k] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
        Ok((points, weights))
    }

    /// Attaches a uniform traction on a box face.
    pub fn add_traction(&mut self, face: Face, traction: [f64; 3]) -> Result<(), DomainError> {
        let (points, weights) = self.face_grid(face)?;
        self.neumann_segments.push(NeumannSegment {
            face,
            points,
            weights,
            traction,
        });
        Ok(())
    }
}

/// Compensated (Kahan) accumulator; used so integral values do not depend
/// on how the point loop is chunked.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Quadrature over the domain in ascending point order with compensated
/// summation. The integrand may fail; non-finite values are diagnosed with
/// the point index and coordinates.
pub fn try_integrate_domain<E>(
    domain: &CollocationDomain,
    mut f: impl FnMut(usize, &[f64; 3]) -> Result<f64, E>,
) -> Result<f64, QuadratureError<E>> {
    let mut acc = KahanSum::default();
    for (i, (p, &w)) in domain.points.iter().zip(&domain.weights).enumerate() {
        let v = f(i, p).map_err(|source| QuadratureError::Eval {
            index: i,
            point: *p,
            source,
        })?;
        if !v.is_finite() {
            return Err(QuadratureError::NonFinite {
                index: i,
                point: *p,
                value: v,
            });
        }
        acc.add(w * v);
    }
    Ok(acc.value())
}

/// Infallible-integrand wrapper around [`try_integrate_domain`].
pub fn integrate_domain(
    domain: &CollocationDomain,
    mut f: impl FnMut(usize, &[f64; 3]) -> f64,
) -> Result<f64, QuadratureError<NoError>> {
    try_integrate_domain(domain, |i, p| Ok::<_, NoError>(f(i, p)))
}

/// Boundary work integral of `traction . f(x)` over a segment.
pub fn try_integrate_boundary<E>(
    segment: &NeumannSegment,
    mut f: impl FnMut(usize, &[f64; 3]) -> Result<[f64; 3], E>,
) -> Result<f64, QuadratureError<E>> {
    let mut acc = KahanSum::default();
    for (i, (p, &w)) in segment.points.iter().zip(&segment.weights).enumerate() {
        let v = f(i, p).map_err(|source| QuadratureError::Eval {
            index: i,
            point: *p,
            source,
        })?;
        let dot: f64 = (0..3).map(|k| segment.traction[k] * v[k]).sum();
        if !dot.is_finite() {
            return Err(QuadratureError::NonFinite {
                index: i,
                point: *p,
                value: dot,
            });
        }
        acc.add(w * dot);
    }
    Ok(acc.value())
}

pub fn integrate_boundary(
    segment: &NeumannSegment,
    mut f: impl FnMut(usize, &[f64; 3]) -> [f64; 3],
) -> Result<f64, QuadratureError<NoError>> {
    try_integrate_boundary(segment, |i, p| Ok::<_, NoError>(f(i, p)))
}

/// Uninhabited error for infallible integrands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoError {}

impl fmt::Display for NoError {
    fn fmt(&self, _: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {}
    }
}

/// Hard Dirichlet enforcement: the displacement is
/// `u(X) = m(X) * z(X) + offset` with `m(X) = coef . X + c0` vanishing on
/// the constrained face, so the boundary condition holds for every network
/// output by construction.
#[derive(Clone, Copy, Debug)]
pub struct DirichletAnsatz {
    pub kind: AnsatzKind,
    coef: [f64; 3],
    c0: f64,
    pub offset: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzKind {
    /// `m(X) = x1`; clamps the `x1 = 0` face (2D/3D beams).
    MultiplyByX1,
    /// `m(X) = X`; clamps the left end of the 1D bar.
    MultiplyByX,
    /// `m(X) = coef . X + c0` with a constant displacement offset, for
    /// driven boundaries.
    CustomAffine,
}

impl DirichletAnsatz {
    pub fn multiply_by_x1() -> Self {
        Self {
            kind: AnsatzKind::MultiplyByX1,
            coef: [1.0, 0.0, 0.0],
            c0: 0.0,
            offset: [0.0; 3],
        }
    }

    pub fn multiply_by_x() -> Self {
        Self {
            kind: AnsatzKind::MultiplyByX,
            coef: [1.0, 0.0, 0.0],
            c0: 0.0,
            offset: [0.0; 3],
        }
    }

    pub fn custom_affine(coef: [f64; 3], c0: f64, offset: [f64; 3]) -> Self {
        Self {
            kind: AnsatzKind::CustomAffine,
            coef,
            c0,
            offset,
        }
    }

    /// Multiplier value at a point.
    pub fn multiplier(&self, x: &[f64; 3]) -> f64 {
        self.coef[0] * x[0] + self.coef[1] * x[1] + self.coef[2] * x[2] + self.c0
    }

    /// The box face on which the multiplier vanishes, if it is one.
    pub fn clamped_face(&self, domain: &CollocationDomain) -> Option<Face> {
        let axis = (0..3).find(|&a| self.coef[a] != 0.0)?;
        if (0..3).any(|a| a != axis && self.coef[a] != 0.0) {
            return None;
        }
        let x_zero = -self.c0 / self.coef[axis];
        let (min, max) = domain.bounds[axis];
        if (x_zero - min).abs() <= 1e-12 * (1.0 + min.abs()) {
            Some(Face::Min(axis))
        } else if (x_zero - max).abs() <= 1e-12 * (1.0 + max.abs()) {
            Some(Face::Max(axis))
        } else {
            None
        }
    }
}

/// Composes the ansatz with a raw network output by the product rule:
/// `u_i = m z_i + offset_i`, `du_i/dX_j = (dm/dX_j) z_i + m dz_i/dX_j`.
pub fn apply_ansatz<V: Scalar>(
    ansatz: &DirichletAnsatz,
    x: &[f64; 3],
    raw: &NetworkOutput<V>,
) -> ([V; 3], [[V; 3]; 3]) {
    let m = ansatz.multiplier(x);
    let dim = raw.dim;
    let mut u = raw.u;
    let mut grad = raw.coord_jacobian;
    for i in 0..dim {
        u[i] = raw.u[i].scale(m).shift(ansatz.offset[i]);
        for j in 0..dim {
            grad[i][j] = raw.u[i].scale(ansatz.coef[j]) + raw.coord_jacobian[i][j].scale(m);
        }
    }
    (u, grad)
}

/// Errors from grid construction.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainError {
    BadCounts { what: &'static str, got: usize },
    BadBox { min: f64, max: f64 },
    BadFace { axis: usize, dim: usize },
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainError::BadCounts { what, got } => write!(f, "grid needs {what}, got {got}"),
            DomainError::BadBox { min, max } => write!(f, "empty box: [{min}, {max}]"),
            DomainError::BadFace { axis, dim } => {
                write!(f, "face axis {axis} does not exist in dimension {dim}")
            }
        }
    }
}

impl std::error::Error for DomainError {}

/// Quadrature failure: a non-finite integrand value or an integrand error,
/// both carrying the collocation point.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError<E> {
    NonFinite {
        index: usize,
        point: [f64; 3],
        value: f64,
    },
    Eval {
        index: usize,
        point: [f64; 3],
        source: E,
    },
}

impl<E: fmt::Display> fmt::Display for QuadratureError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::NonFinite { index, point, value } => write!(
                f,
                "non-finite integrand {value} at point {index} ({:?})",
                &point[..]
            ),
            QuadratureError::Eval { index, point, source } => {
                write!(f, "integrand failed at point {index} ({:?}): {source}", &point[..])
            }
        }
    }
}

impl<E: fmt::Debug + fmt::Display> std::error::Error for QuadratureError<E> {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_weights_1d() {
        let d = build_grid(1, &[(0.0, 1.0)], &[3]).unwrap();
        let xs: Vec<f64> = d.points.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!(d.weights, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn beam_grid_weight_sum() {
        let d = build_grid(2, &[(0.0, 3.0), (0.0, 1.0)], &[150, 50]).unwrap();
        assert_eq!(d.points.len(), 7500);
        let sum: f64 = d.weights.iter().sum();
        assert!((sum - 3.0).abs() < 1e-12 * 3.0);
    }

    #[test]
    fn face_weights_sum_to_face_measure() {
        let mut d = build_grid(2, &[(0.0, 3.0), (0.0, 1.0)], &[150, 50]).unwrap();
        d.add_traction(Face::Max(0), [0.0, -5.0, 0.0]).unwrap();
        let seg = &d.neumann_segments[0];
        assert_eq!(seg.points.len(), 50);
        let sum: f64 = seg.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(seg.points.iter().all(|p| (p[0] - 3.0).abs() < 1e-15));
    }

    #[test]
    fn points_unique_and_inside_box() {
        let d = build_grid(3, &[(0.0, 3.0), (-1.0, 1.0), (0.5, 2.0)], &[5, 4, 3]).unwrap();
        assert_eq!(d.points.len(), 60);
        for p in &d.points {
            for a in 0..3 {
                assert!(p[a] >= d.bounds[a].0 - 1e-15 && p[a] <= d.bounds[a].1 + 1e-15);
            }
        }
        let mut seen = std::collections::HashSet::new();
        for p in &d.points {
            let key = format!("{:?}", p);
            assert!(seen.insert(key), "duplicate point {p:?}");
        }
    }

    #[test]
    fn rejects_too_few_points() {
        assert!(matches!(
            build_grid(1, &[(0.0, 1.0)], &[1]),
            Err(DomainError::BadCounts { .. })
        ));
    }

    #[test]
    fn integrate_constant_and_linear_exactly() {
        let d = build_grid(1, &[(0.0, 1.0)], &[7]).unwrap();
        let one = integrate_domain(&d, |_, _| 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
        let lin = integrate_domain(&d, |_, p| p[0]).unwrap();
        assert!((lin - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_quadratic_error_hand_value() {
        let d = build_grid(1, &[(0.0, 1.0)], &[3]).unwrap();
        let v = integrate_domain(&d, |_, p| p[0] * p[0]).unwrap();
        assert!((v - 0.375).abs() < 1e-15);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let d = build_grid_with_rule(1, &[(0.0, 1.0)], &[5], QuadratureRule::Simpson).unwrap();
        let v = integrate_domain(&d, |_, p| p[0].powi(3)).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(matches!(
            build_grid_with_rule(1, &[(0.0, 1.0)], &[4], QuadratureRule::Simpson),
            Err(DomainError::BadCounts { .. })
        ));
    }

    #[test]
    fn second_order_refinement_on_sine() {
        let exact = 1.0 - 1.0f64.cos();
        let mut errors = Vec::new();
        for &n in &[11usize, 21, 41] {
            let d = build_grid(1, &[(0.0, 1.0)], &[n]).unwrap();
            let v = integrate_domain(&d, |_, p| p[0].sin()).unwrap();
            errors.push((v - exact).abs());
        }
        // halving h divides the error by about 4
        assert!(errors[0] / errors[1] > 3.5 && errors[0] / errors[1] < 4.5);
        assert!(errors[1] / errors[2] > 3.5 && errors[1] / errors[2] < 4.5);
    }

    #[test]
    fn boundary_integral_hand_values() {
        let mut d = build_grid(2, &[(0.0, 3.0), (0.0, 1.0)], &[4, 11]).unwrap();
        d.add_traction(Face::Max(0), [0.0, -5.0, 0.0]).unwrap();
        let seg = &d.neumann_segments[0];

        let zero = integrate_boundary(seg, |_, _| [0.0; 3]).unwrap();
        assert_eq!(zero, 0.0);

        let constant = integrate_boundary(seg, |_, _| [0.0, 1.0, 0.0]).unwrap();
        assert!((constant - (-5.0)).abs() < 1e-14);

        let linear = integrate_boundary(seg, |_, p| [0.0, p[1], 0.0]).unwrap();
        assert!((linear - (-2.5)).abs() < 1e-14);
    }

    #[test]
    fn nonfinite_integrand_diagnosed_with_point() {
        let d = build_grid(1, &[(0.0, 1.0)], &[5]).unwrap();
        let err = integrate_domain(&d, |i, _| if i == 3 { f64::NAN } else { 1.0 }).unwrap_err();
        match err {
            QuadratureError::NonFinite { index, point, .. } => {
                assert_eq!(index, 3);
                assert!((point[0] - 0.75).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ansatz_clamps_and_differentiates() {
        let ansatz = DirichletAnsatz::multiply_by_x1();
        // constant raw output z = (1, 1) with zero jacobian
        let raw = NetworkOutput::<f64> {
            dim: 2,
            u: [1.0, 1.0, 0.0],
            coord_jacobian: [[0.0; 3]; 3],
        };
        let (u, _) = apply_ansatz(&ansatz, &[0.0, 0.7, 0.0], &raw);
        assert_eq!(u[0], 0.0);
        assert_eq!(u[1], 0.0);

        let (u, grad) = apply_ansatz(&ansatz, &[2.0, 0.7, 0.0], &raw);
        assert_eq!(u[0], 2.0);
        assert_eq!(grad[0][0], 1.0);
        assert_eq!(grad[1][0], 1.0);
        assert_eq!(grad[0][1], 0.0);
    }

    #[test]
    fn driven_boundary_offset() {
        let ansatz = DirichletAnsatz::custom_affine([0.0, 1.0, 0.0], -3.0, [2.5, -0.5, 0.0]);
        let raw = NetworkOutput::<f64> {
            dim: 2,
            u: [0.3, -0.9, 0.0],
            coord_jacobian: [[0.1; 3]; 3],
        };
        let (u, _) = apply_ansatz(&ansatz, &[1.0, 3.0, 0.0], &raw);
        assert_eq!(u[0], 2.5);
        assert_eq!(u[1], -0.5);
    }

    #[test]
    fn clamped_face_detection() {
        let d = build_grid(2, &[(0.0, 3.0), (0.0, 1.0)], &[4, 4]).unwrap();
        assert_eq!(
            DirichletAnsatz::multiply_by_x1().clamped_face(&d),
            Some(Face::Min(0))
        );
        let driven = DirichletAnsatz::custom_affine([0.0, 1.0, 0.0], -1.0, [0.0; 3]);
        assert_eq!(driven.clamped_face(&d), Some(Face::Max(1)));
    }
}
