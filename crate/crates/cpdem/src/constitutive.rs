//! Constitutive models and kinematics: small-strain linear elasticity,
//! finite-strain Neo-Hookean and Mooney-Rivlin energy densities, the
//! Lamé-parameter conversion, and the first Piola-Kirchhoff stress.
//!
//! All density functions are generic over the autodiff payload so the same
//! code evaluates plain numbers, records on a gradient tape, and feeds
//! nested forward-mode derivatives.

use std::fmt;

use crate::autodiff::{Scalar, TangentValue};

/// Near-inversion guard: the Neo-Hookean density rejects `J <= J_MIN`
/// before `ln` underflows rather than at exactly zero.
pub const J_MIN: f64 = 1e-8;

/// A single constitutive realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaterialSample {
    /// Young's modulus and Poisson's ratio.
    IsotropicENu { e: f64, nu: f64 },
    /// Mooney-Rivlin constants.
    MooneyRivlin { c1: f64, c2: f64 },
}

impl MaterialSample {
    /// Validates the physical bounds: `E > 0`, `0 <= nu < 0.5` (strict so
    /// the Lamé denominators stay nonzero), `C1, C2 >= 0`, `C1 + C2 > 0`.
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        match *self {
            MaterialSample::IsotropicENu { e, nu } => {
                if !(e > 0.0) {
                    return Err(ConstitutiveError::InvalidMaterial {
                        what: "Young's modulus must be positive",
                        value: e,
                    });
                }
                if !(0.0..0.5).contains(&nu) {
                    return Err(ConstitutiveError::IncompressibilityLimit { nu });
                }
                Ok(())
            }
            MaterialSample::MooneyRivlin { c1, c2 } => {
                if c1 < 0.0 || c2 < 0.0 {
                    return Err(ConstitutiveError::InvalidMaterial {
                        what: "Mooney-Rivlin constants must be non-negative",
                        value: c1.min(c2),
                    });
                }
                if c1 + c2 <= 0.0 {
                    return Err(ConstitutiveError::InvalidMaterial {
                        what: "Mooney-Rivlin constants must not both vanish",
                        value: c1 + c2,
                    });
                }
                Ok(())
            }
        }
    }
}

/// Isotropic Lamé constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LameParams {
    pub lambda: f64,
    pub mu: f64,
}

/// lambda = E nu / ((1+nu)(1-2nu)), mu = E / (2(1+nu)).
pub fn lame_from_e_nu(eta: &MaterialSample) -> Result<LameParams, ConstitutiveError> {
    match *eta {
        MaterialSample::IsotropicENu { e, nu } => {
            eta.validate()?;
            Ok(LameParams {
                lambda: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
                mu: e / (2.0 * (1.0 + nu)),
            })
        }
        MaterialSample::MooneyRivlin { .. } => Err(ConstitutiveError::InvalidMaterial {
            what: "Lamé conversion needs (E, nu)",
            value: f64::NAN,
        }),
    }
}

/// Kinematic quantities derived from a displacement gradient.
///
/// The finite-strain branch embeds 1D/2D states in 3x3 form: for plane
/// strain the out-of-plane stretch is 1, for the uniaxial bar both lateral
/// stretches are 1.
#[derive(Clone, Copy, Debug)]
pub struct KinematicState<V: Scalar> {
    /// Spatial dimension of the underlying problem (1, 2 or 3).
    pub dim: usize,
    /// Displacement gradient, upper-left `dim x dim` block meaningful.
    pub grad_u: [[V; 3]; 3],
    /// Deformation gradient F = I + grad_u, 3x3 embedded.
    pub f: [[V; 3]; 3],
    /// Right Cauchy-Green tensor C = F^T F.
    pub c: [[V; 3]; 3],
    /// tr(C).
    pub i1: V,
    /// (tr(C)^2 - tr(C^2)) / 2.
    pub i2: V,
    /// det(F).
    pub j: V,
}

/// Builds the finite-strain state from a displacement gradient.
///
/// `lift` injects plain constants into the payload type (identity for f64,
/// `tape.constant` for tape variables).
pub fn deformation_gradient<V: Scalar>(
    grad_u: &[[V; 3]; 3],
    dim: usize,
    lift: &impl Fn(f64) -> V,
) -> KinematicState<V> {
    assert!((1..=3).contains(&dim));
    let zero = lift(0.0);
    let one = lift(1.0);
    let mut f = [[zero; 3]; 3];
    for (i, row) in f.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            if i < dim && j < dim {
                *entry = if i == j {
                    grad_u[i][j].shift(1.0)
                } else {
                    grad_u[i][j]
                };
            } else {
                *entry = if i == j { one } else { zero };
            }
        }
    }

    let mut c = [[zero; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = f[0][i] * f[0][j];
            s = s + f[1][i] * f[1][j];
            s = s + f[2][i] * f[2][j];
            c[i][j] = s;
        }
    }

    let i1 = c[0][0] + c[1][1] + c[2][2];
    // tr(C^2) = sum of squares of C entries (C symmetric)
    let mut tr_c2 = c[0][0] * c[0][0];
    for i in 0..3 {
        for j in 0..3 {
            if i != 0 || j != 0 {
                tr_c2 = tr_c2 + c[i][j] * c[i][j];
            }
        }
    }
    let i2 = (i1 * i1 - tr_c2).scale(0.5);
    let j = det3(&f);

    KinematicState {
        dim,
        grad_u: *grad_u,
        f,
        c,
        i1,
        i2,
        j,
    }
}

/// Small-strain energy density in Lamé form:
/// `psi = lambda/2 (tr eps)^2 + mu (eps : eps)` with
/// `eps = (grad_u + grad_u^T)/2` over the active `dim x dim` block.
pub fn linear_energy_density<V: Scalar>(grad_u: &[[V; 3]; 3], dim: usize, lame: LameParams) -> V {
    let mut tr = grad_u[0][0];
    for k in 1..dim {
        tr = tr + grad_u[k][k];
    }
    let mut contraction = sym_entry(grad_u, 0, 0).powi(2);
    for i in 0..dim {
        for j in 0..dim {
            if i != 0 || j != 0 {
                contraction = contraction + sym_entry(grad_u, i, j).powi(2);
            }
        }
    }
    tr.powi(2).scale(0.5 * lame.lambda) + contraction.scale(lame.mu)
}

#[inline]
fn sym_entry<V: Scalar>(g: &[[V; 3]; 3], i: usize, j: usize) -> V {
    (g[i][j] + g[j][i]).scale(0.5)
}

/// Neo-Hookean density `psi = lambda/2 (ln J)^2 - mu ln J + mu/2 (I1 - 3)`.
///
/// Rejects `J <= J_MIN` as an inverted element; the caller attaches the
/// evaluation point.
pub fn neo_hookean_density<V: Scalar>(
    state: &KinematicState<V>,
    lame: LameParams,
) -> Result<V, ConstitutiveError> {
    let j_val = state.j.val();
    if !(j_val > J_MIN) {
        return Err(ConstitutiveError::InvertedElement { j: j_val });
    }
    let ln_j = Scalar::ln(state.j);
    Ok(ln_j.powi(2).scale(0.5 * lame.lambda) + ln_j.scale(-lame.mu)
        + state.i1.shift(-3.0).scale(0.5 * lame.mu))
}

/// Mooney-Rivlin density `psi = C1 (I1 - 3) + C2 (I2 - 3)`.
pub fn mooney_rivlin_density<V: Scalar>(state: &KinematicState<V>, c1: f64, c2: f64) -> V {
    state.i1.shift(-3.0).scale(c1) + state.i2.shift(-3.0).scale(c2)
}

/// Finite-strain energy models usable with [`first_pk_stress`].
#[derive(Clone, Copy, Debug)]
pub enum EnergyDensity {
    NeoHookean(LameParams),
    MooneyRivlin { c1: f64, c2: f64 },
}

impl EnergyDensity {
    pub fn eval<V: Scalar>(&self, state: &KinematicState<V>) -> Result<V, ConstitutiveError> {
        match *self {
            EnergyDensity::NeoHookean(lame) => neo_hookean_density(state, lame),
            EnergyDensity::MooneyRivlin { c1, c2 } => Ok(mooney_rivlin_density(state, c1, c2)),
        }
    }
}

/// First Piola-Kirchhoff stress `P = d psi / d F` by forward-mode
/// differentiation of the density with respect to each entry of F.
pub fn first_pk_stress(
    f: &[[f64; 3]; 3],
    model: &EnergyDensity,
) -> Result<[[f64; 3]; 3], ConstitutiveError> {
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let f_dual: [[TangentValue<f64>; 3]; 3] = std::array::from_fn(|r| {
                std::array::from_fn(|c| {
                    if r == i && c == j {
                        TangentValue::seeded(f[r][c], 1, 0)
                    } else {
                        TangentValue::new(f[r][c], &[0.0])
                    }
                })
            });
            let state = kinematics_from_f(&f_dual);
            let psi = model.eval(&state)?;
            p[i][j] = psi.tangent_or_zero(0);
        }
    }
    Ok(p)
}

/// Kinematics from an explicit 3x3 deformation gradient (no embedding).
pub fn kinematics_from_f<V: Scalar>(f: &[[V; 3]; 3]) -> KinematicState<V> {
    let mut c = [[f[0][0]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = f[0][i] * f[0][j];
            s = s + f[1][i] * f[1][j];
            s = s + f[2][i] * f[2][j];
            c[i][j] = s;
        }
    }
    let i1 = c[0][0] + c[1][1] + c[2][2];
    let mut tr_c2 = c[0][0] * c[0][0];
    for i in 0..3 {
        for j in 0..3 {
            if i != 0 || j != 0 {
                tr_c2 = tr_c2 + c[i][j] * c[i][j];
            }
        }
    }
    let i2 = (i1 * i1 - tr_c2).scale(0.5);
    let j = det3(f);
    let grad_u = [
        [f[0][0].shift(-1.0), f[0][1], f[0][2]],
        [f[1][0], f[1][1].shift(-1.0), f[1][2]],
        [f[2][0], f[2][1], f[2][2].shift(-1.0)],
    ];
    KinematicState {
        dim: 3,
        grad_u,
        f: *f,
        c,
        i1,
        i2,
        j,
    }
}

pub fn det3<V: Scalar>(m: &[[V; 3]; 3]) -> V {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Errors from constitutive evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstitutiveError {
    /// Poisson's ratio at or beyond the incompressible limit.
    IncompressibilityLimit { nu: f64 },
    /// Determinant of F at or below the inversion guard.
    InvertedElement { j: f64 },
    InvalidMaterial { what: &'static str, value: f64 },
}

impl fmt::Display for ConstitutiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstitutiveError::IncompressibilityLimit { nu } => {
                write!(f, "Poisson's ratio {nu} at or beyond the incompressible limit 0.5")
            }
            ConstitutiveError::InvertedElement { j } => {
                write!(f, "inverted element: det(F) = {j} <= {J_MIN}")
            }
            ConstitutiveError::InvalidMaterial { what, value } => {
                write!(f, "{what} (got {value})")
            }
        }
    }
}

impl std::error::Error for ConstitutiveError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn id3() -> [[f64; 3]; 3] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    fn grad_from_2x2(g: [[f64; 2]; 2]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = g[i][j];
            }
        }
        out
    }

    #[test]
    fn lame_conversion_hand_values() {
        let l = lame_from_e_nu(&MaterialSample::IsotropicENu { e: 1.0, nu: 0.0 }).unwrap();
        assert_eq!((l.lambda, l.mu), (0.0, 0.5));

        let l = lame_from_e_nu(&MaterialSample::IsotropicENu { e: 1.0, nu: 0.25 }).unwrap();
        assert!((l.lambda - 0.4).abs() < 1e-15);
        assert!((l.mu - 0.4).abs() < 1e-15);

        let l = lame_from_e_nu(&MaterialSample::IsotropicENu { e: 1000.0, nu: 0.3 }).unwrap();
        assert!((l.lambda - 576.9230769230769).abs() < 1e-9);
        assert!((l.mu - 384.61538461538464).abs() < 1e-9);
    }

    #[test]
    fn lame_conversion_rejects_incompressible() {
        let err = lame_from_e_nu(&MaterialSample::IsotropicENu { e: 1.0, nu: 0.5 }).unwrap_err();
        assert!(matches!(err, ConstitutiveError::IncompressibilityLimit { .. }));
    }

    #[test]
    fn linear_density_hand_values() {
        let lame = LameParams { lambda: 0.4, mu: 0.4 };
        let zero = grad_from_2x2([[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(linear_energy_density(&zero, 2, lame), 0.0);

        let eps = grad_from_2x2([[0.01, 0.0], [0.0, 0.0]]);
        let psi = linear_energy_density(&eps, 2, lame);
        assert!((psi - 6e-5).abs() < 1e-18);

        // density doubles with doubled moduli
        let double = LameParams { lambda: 0.8, mu: 0.8 };
        let g = grad_from_2x2([[0.02, 0.01], [-0.03, 0.005]]);
        let a = linear_energy_density(&g, 2, lame);
        let b = linear_energy_density(&g, 2, double);
        assert!((b - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn deformation_gradient_reference_state() {
        let zero = [[0.0; 3]; 3];
        let st = deformation_gradient(&zero, 3, &|c| c);
        assert_eq!(st.j, 1.0);
        assert_eq!(st.i1, 3.0);
        assert_eq!(st.f, id3());
    }

    #[test]
    fn deformation_gradient_plane_strain_embedding() {
        let g = grad_from_2x2([[1.0, 0.0], [0.0, 0.0]]);
        let st = deformation_gradient(&g, 2, &|c| c);
        assert_eq!(st.f[0][0], 2.0);
        assert_eq!(st.f[1][1], 1.0);
        assert_eq!(st.f[2][2], 1.0);
        assert_eq!(st.j, 2.0);
        assert_eq!(st.i1, 6.0);

        // simple shear
        let g = grad_from_2x2([[0.0, 0.5], [0.0, 0.0]]);
        let st = deformation_gradient(&g, 2, &|c| c);
        assert_eq!(st.j, 1.0);
        assert!((st.i1 - 3.25).abs() < 1e-15);
    }

    #[test]
    fn neo_hookean_hand_value() {
        let lame = LameParams { lambda: 0.4, mu: 0.4 };
        let g = grad_from_2x2([[1.0, 0.0], [0.0, 0.0]]);
        let st = deformation_gradient(&g, 2, &|c| c);
        let psi = neo_hookean_density(&st, lame).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let expected = 0.2 * ln2 * ln2 - 0.4 * ln2 + 0.2 * 3.0;
        assert!((psi - expected).abs() < 1e-14);
        assert!((expected - 0.4188).abs() < 1e-4);
    }

    #[test]
    fn neo_hookean_zero_at_reference() {
        let lame = LameParams { lambda: 1.3, mu: 0.7 };
        let st = deformation_gradient(&[[0.0; 3]; 3], 3, &|c| c);
        assert_eq!(neo_hookean_density(&st, lame).unwrap(), 0.0);
    }

    #[test]
    fn neo_hookean_rejects_inversion() {
        let lame = LameParams { lambda: 0.4, mu: 0.4 };
        let mut g = [[0.0; 3]; 3];
        g[0][0] = -1.5; // F00 = -0.5, J < 0
        let st = deformation_gradient(&g, 3, &|c| c);
        let err = neo_hookean_density(&st, lame).unwrap_err();
        assert!(matches!(err, ConstitutiveError::InvertedElement { .. }));
    }

    #[test]
    fn mooney_rivlin_hand_values() {
        let st = deformation_gradient(&[[0.0; 3]; 3], 3, &|c| c);
        assert_eq!(mooney_rivlin_density(&st, 0.3, 0.6), 0.0);

        let g = grad_from_2x2([[1.0, 0.0], [0.0, 0.0]]);
        let st = deformation_gradient(&g, 2, &|c| c);
        // C = diag(4,1,1): I1 = 6, I2 = (36 - 18)/2 = 9
        assert!((st.i2 - 9.0).abs() < 1e-13);
        let psi = mooney_rivlin_density(&st, 2.0, 0.5);
        assert!((psi - (3.0 * 2.0 + 6.0 * 0.5)).abs() < 1e-13);

        // doubling constants doubles the density
        let a = mooney_rivlin_density(&st, 1.1, 0.4);
        let b = mooney_rivlin_density(&st, 2.2, 0.8);
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn pk_stress_vanishes_at_reference() {
        let lame = LameParams { lambda: 0.4, mu: 0.4 };
        let p = first_pk_stress(&id3(), &EnergyDensity::NeoHookean(lame)).unwrap();
        for row in &p {
            for &v in row {
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pk_stress_matches_finite_difference_uniaxial() {
        let lame = LameParams { lambda: 0.6, mu: 0.9 };
        let model = EnergyDensity::NeoHookean(lame);
        let gamma = 1.37;
        let mut f = id3();
        f[0][0] = gamma;
        let p = first_pk_stress(&f, &model).unwrap();

        let h = 1e-6;
        let psi_at = |f00: f64| {
            let mut fm = id3();
            fm[0][0] = f00;
            let fd: [[f64; 3]; 3] = fm;
            let fdual: [[TangentValue<f64>; 3]; 3] =
                std::array::from_fn(|r| std::array::from_fn(|c| TangentValue::new(fd[r][c], &[0.0])));
            model.eval(&kinematics_from_f(&fdual)).unwrap().value()
        };
        let fd = (psi_at(gamma + h) - psi_at(gamma - h)) / (2.0 * h);
        assert!(
            ((p[0][0] - fd) / fd).abs() < 1e-6,
            "autodiff {} vs fd {}",
            p[0][0],
            fd
        );
    }

    #[test]
    fn pk_stress_matches_neo_hookean_closed_form() {
        // P = lambda ln(J) F^-T - mu F^-T + mu F
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let lame = LameParams { lambda: 1.2, mu: 0.8 };
        let model = EnergyDensity::NeoHookean(lame);
        let mut tested = 0;
        while tested < 50 {
            let mut f = id3();
            for row in f.iter_mut() {
                for v in row.iter_mut() {
                    *v += rng.gen_range(-0.3..0.3);
                }
            }
            let fdual: [[TangentValue<f64>; 3]; 3] =
                std::array::from_fn(|r| std::array::from_fn(|c| TangentValue::new(f[r][c], &[0.0])));
            let j = kinematics_from_f(&fdual).j.value();
            if j <= 0.2 {
                continue;
            }
            tested += 1;
            let p = first_pk_stress(&f, &model).unwrap();
            let f_inv_t = transpose3(&inv3(&f));
            for i in 0..3 {
                for k in 0..3 {
                    let closed =
                        lame.lambda * j.ln() * f_inv_t[i][k] - lame.mu * f_inv_t[i][k] + lame.mu * f[i][k];
                    assert!(
                        (p[i][k] - closed).abs() < 1e-10 * (1.0 + closed.abs()),
                        "autodiff {} vs closed form {}",
                        p[i][k],
                        closed
                    );
                }
            }
        }
    }

    #[test]
    fn frame_indifference_of_hyperelastic_densities() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let lame = LameParams { lambda: 0.9, mu: 1.1 };
        let mut tested = 0;
        while tested < 100 {
            let mut f = id3();
            for row in f.iter_mut() {
                for v in row.iter_mut() {
                    *v += rng.gen_range(-0.3..0.3);
                }
            }
            let st = state_from_plain_f(&f);
            if st.j <= 0.2 {
                continue;
            }
            tested += 1;
            let q = random_rotation(&mut rng);
            let qf = mat_mul(&q, &f);
            let st_q = state_from_plain_f(&qf);
            let nh = neo_hookean_density(&st, lame).unwrap();
            let nh_q = neo_hookean_density(&st_q, lame).unwrap();
            assert!((nh - nh_q).abs() <= 1e-10 * (1.0 + nh.abs()));
            let mr = mooney_rivlin_density(&st, 0.7, 0.3);
            let mr_q = mooney_rivlin_density(&st_q, 0.7, 0.3);
            assert!((mr - mr_q).abs() <= 1e-10 * (1.0 + mr.abs()));
        }
    }

    #[test]
    fn neo_hookean_consistent_with_linear_at_small_strain() {
        let lame = LameParams { lambda: 0.8, mu: 0.6 };
        let base = [[0.3, -0.2, 0.1], [0.15, -0.25, 0.05], [-0.1, 0.2, 0.3]];
        let mut prev_ratio = f64::INFINITY;
        for &s in &[1e-2, 1e-3, 1e-4] {
            let mut g = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = s * base[i][j];
                }
            }
            let st = deformation_gradient(&g, 3, &|c| c);
            let nh = neo_hookean_density(&st, lame).unwrap();
            let lin = linear_energy_density(&g, 3, lame);
            let norm = frob_norm(&g);
            let ratio = (nh - lin).abs() / norm.powi(3);
            // cubic-order difference: the ratio stays bounded as strain shrinks
            assert!(ratio < 10.0, "ratio {ratio} at scale {s}");
            assert!(ratio < prev_ratio * 10.0);
            prev_ratio = ratio;
        }
    }

    fn state_from_plain_f(f: &[[f64; 3]; 3]) -> KinematicState<f64> {
        let fdual: [[TangentValue<f64>; 3]; 3] =
            std::array::from_fn(|r| std::array::from_fn(|c| TangentValue::new(f[r][c], &[0.0])));
        let st = kinematics_from_f(&fdual);
        KinematicState {
            dim: 3,
            grad_u: st.grad_u.map(|r| r.map(|v| v.value())),
            f: *f,
            c: st.c.map(|r| r.map(|v| v.value())),
            i1: st.i1.value(),
            i2: st.i2.value(),
            j: st.j.value(),
        }
    }

    fn frob_norm(m: &[[f64; 3]; 3]) -> f64 {
        m.iter()
            .flat_map(|r| r.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn transpose3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
    }

    fn inv3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let d = det3(m);
        let cof = |r: usize, c: usize| {
            let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
            let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        std::array::from_fn(|i| std::array::from_fn(|j| cof(j, i) / d))
    }

    fn random_rotation(rng: &mut impl rand::Rng) -> [[f64; 3]; 3] {
        // rotation from a random axis-angle
        let axis = {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-9);
            [v[0] / n, v[1] / n, v[2] / n]
        };
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (axis[0], axis[1], axis[2]);
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    }
}
