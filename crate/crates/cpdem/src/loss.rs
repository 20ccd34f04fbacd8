//! The parameterized potential-energy loss `U - W` for a single material
//! realization and its expectation over sampled realizations, which is the
//! pre-training objective.
//!
//! The same generic pipeline evaluates the loss over plain numbers, over
//! tape variables (for parameter gradients), and over nested duals (for
//! line-search slopes). Parallel gradient evaluation is chunked over a
//! fixed partition of the collocation points and reduced in chunk order,
//! so results are bit-reproducible regardless of thread scheduling.

use std::cell::RefCell;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{AdError, GradientVector, Scalar, Tape, TangentValue, Var};
use crate::constitutive::{
    deformation_gradient, lame_from_e_nu, linear_energy_density, mooney_rivlin_density,
    neo_hookean_density, ConstitutiveError, MaterialSample,
};
use crate::domain::{apply_ansatz, CollocationDomain, DirichletAnsatz, KahanSum};
use crate::network::{
    forward_with_latent, param_latent, LayerPlan, ModelArchitecture, NetworkError, ParameterVector,
};

/// Fixed chunk width for parallel gradient work items; part of the
/// deterministic reduction order, so it must not depend on thread count.
const DOMAIN_CHUNK: usize = 64;

/// How sampled raw parameter vectors map to constitutive realizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaterialMap {
    /// eta = [E, nu].
    ENu,
    /// eta = [E] with a fixed Poisson's ratio (the 1D bars).
    EWithFixedNu(f64),
    /// eta = [C1, C2].
    C1C2,
}

impl MaterialMap {
    pub fn eta_dim(&self) -> usize {
        match self {
            MaterialMap::ENu | MaterialMap::C1C2 => 2,
            MaterialMap::EWithFixedNu(_) => 1,
        }
    }

    pub fn to_sample(&self, raw: &[f64]) -> MaterialSample {
        match *self {
            MaterialMap::ENu => MaterialSample::IsotropicENu { e: raw[0], nu: raw[1] },
            MaterialMap::EWithFixedNu(nu) => MaterialSample::IsotropicENu { e: raw[0], nu },
            MaterialMap::C1C2 => MaterialSample::MooneyRivlin { c1: raw[0], c2: raw[1] },
        }
    }

    /// Network inputs for a realization (the sampled components only).
    pub fn to_inputs(&self, sample: &MaterialSample) -> Vec<f64> {
        match (*self, *sample) {
            (MaterialMap::ENu, MaterialSample::IsotropicENu { e, nu }) => vec![e, nu],
            (MaterialMap::EWithFixedNu(_), MaterialSample::IsotropicENu { e, .. }) => vec![e],
            (MaterialMap::C1C2, MaterialSample::MooneyRivlin { c1, c2 }) => vec![c1, c2],
            _ => panic!("material sample does not match the parameter map"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DistributionKind {
    UniformBox,
    TruncatedGaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

/// Sampling law p(eta) over the bounded box P.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterDistribution {
    pub kind: DistributionKind,
    /// Per-parameter (min, max).
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
    pub map: MaterialMap,
}

impl ParameterDistribution {
    pub fn uniform(bounds: Vec<(f64, f64)>, seed: u64, map: MaterialMap) -> Self {
        Self {
            kind: DistributionKind::UniformBox,
            bounds,
            seed,
            map,
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if self.bounds.len() != self.map.eta_dim() {
            return Err(EnergyError::Config(format!(
                "parameter box has {} axes but the material map needs {}",
                self.bounds.len(),
                self.map.eta_dim()
            )));
        }
        for &(lo, hi) in &self.bounds {
            if !(lo <= hi) {
                return Err(EnergyError::Config(format!("empty parameter box [{lo}, {hi}]")));
            }
        }
        if let DistributionKind::TruncatedGaussian { mean, cov } = &self.kind {
            let k = self.bounds.len();
            if mean.len() != k || cov.len() != k || cov.iter().any(|row| row.len() != k) {
                return Err(EnergyError::Config(
                    "truncated Gaussian mean/cov dimensions must match the box".into(),
                ));
            }
            cholesky(cov).ok_or_else(|| {
                EnergyError::Config("covariance matrix is not positive definite".into())
            })?;
        }
        // the corners of the box must be physically admissible
        let lo: Vec<f64> = self.bounds.iter().map(|b| b.0).collect();
        let hi: Vec<f64> = self.bounds.iter().map(|b| b.1).collect();
        for corner in [&lo, &hi] {
            self.map
                .to_sample(corner)
                .validate()
                .map_err(|e| EnergyError::Config(format!("parameter box corner invalid: {e}")))?;
        }
        Ok(())
    }

    /// Draws the midpoint of the box; used for diagnostics.
    pub fn midpoint(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// Lower Cholesky factor of a small SPD matrix.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Draws `n` realizations; deterministic for a fixed (seed, epoch) because
/// each epoch gets its own counter-mode stream.
pub fn sample_parameters(
    dist: &ParameterDistribution,
    n: usize,
    epoch: u64,
) -> Result<Vec<MaterialSample>, EnergyError> {
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(dist.seed);
    rng.set_stream(epoch);
    let k = dist.bounds.len();
    let mut out = Vec::with_capacity(n);
    match &dist.kind {
        DistributionKind::UniformBox => {
            for _ in 0..n {
                let raw: Vec<f64> = dist
                    .bounds
                    .iter()
                    .map(|&(lo, hi)| if lo < hi { rng.gen_range(lo..hi) } else { lo })
                    .collect();
                out.push(dist.map.to_sample(&raw));
            }
        }
        DistributionKind::TruncatedGaussian { mean, cov } => {
            let l = cholesky(cov).expect("validated above");
            let mut trials: u64 = 0;
            while out.len() < n {
                trials += 1;
                if trials >= 1_000_000 && (out.len() as f64) < 1e-3 * trials as f64 {
                    return Err(EnergyError::Config(
                        "truncated Gaussian acceptance rate below 1e-3: box and Gaussian incompatible"
                            .into(),
                    ));
                }
                let z: Vec<f64> = (0..k)
                    .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect();
                let raw: Vec<f64> = (0..k)
                    .map(|i| mean[i] + (0..=i).map(|j| l[i][j] * z[j]).sum::<f64>())
                    .collect();
                let inside = raw
                    .iter()
                    .zip(&dist.bounds)
                    .all(|(&v, &(lo, hi))| v >= lo && v <= hi);
                if inside {
                    out.push(dist.map.to_sample(&raw));
                }
            }
        }
    }
    Ok(out)
}

/// Which strain-energy density the problem uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    LinearElastic,
    NeoHookean,
    MooneyRivlin,
}

/// Body force per unit reference volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BodyForce {
    Zero,
    /// `f_b(X) = (X_1, 0, 0)`: the linearly distributed axial load of the
    /// bar benchmarks.
    AxialLinear,
}

impl BodyForce {
    #[inline]
    pub fn at(&self, x: &[f64; 3]) -> Option<[f64; 3]> {
        match self {
            BodyForce::Zero => None,
            BodyForce::AxialLinear => Some([x[0], 0.0, 0.0]),
        }
    }
}

/// A constitutive density with its kinematic pipeline and loading.
#[derive(Clone, Copy, Debug)]
pub struct EnergyModel {
    pub kind: ModelKind,
    pub dim: usize,
    pub body_force: BodyForce,
}

impl EnergyModel {
    /// Density at one point. For `dim == 1` the linear model uses the
    /// uniaxial-stress reduction `psi = E/2 u'^2` (the bar carries EA, not
    /// the plane-strain modulus); the finite-strain models use the 3x3
    /// embedding with unit lateral stretches.
    pub fn density<V: Scalar>(
        &self,
        grad_u: &[[V; 3]; 3],
        sample: &MaterialSample,
        lift: &impl Fn(f64) -> V,
    ) -> Result<V, ConstitutiveError> {
        match (self.kind, sample) {
            (ModelKind::LinearElastic, MaterialSample::IsotropicENu { e, .. }) if self.dim == 1 => {
                Ok(grad_u[0][0].powi(2).scale(0.5 * e))
            }
            (ModelKind::LinearElastic, MaterialSample::IsotropicENu { .. }) => {
                let lame = lame_from_e_nu(sample)?;
                Ok(linear_energy_density(grad_u, self.dim, lame))
            }
            (ModelKind::NeoHookean, MaterialSample::IsotropicENu { .. }) => {
                let lame = lame_from_e_nu(sample)?;
                let state = deformation_gradient(grad_u, self.dim, lift);
                neo_hookean_density(&state, lame)
            }
            (ModelKind::MooneyRivlin, MaterialSample::MooneyRivlin { c1, c2 }) => {
                let state = deformation_gradient(grad_u, self.dim, lift);
                Ok(mooney_rivlin_density(&state, *c1, *c2))
            }
            _ => Err(ConstitutiveError::InvalidMaterial {
                what: "material sample kind does not match the energy model",
                value: f64::NAN,
            }),
        }
    }
}

/// Everything needed to evaluate the training objective.
#[derive(Clone, Debug)]
pub struct TrainingProblem {
    pub arch: ModelArchitecture,
    pub plan: LayerPlan,
    pub domain: CollocationDomain,
    pub ansatz: DirichletAnsatz,
    pub model: EnergyModel,
    pub dist: ParameterDistribution,
}

impl TrainingProblem {
    pub fn new(
        arch: ModelArchitecture,
        domain: CollocationDomain,
        ansatz: DirichletAnsatz,
        model: EnergyModel,
        dist: ParameterDistribution,
    ) -> Result<Self, EnergyError> {
        arch.validate().map_err(EnergyError::Network)?;
        dist.validate()?;
        if arch.dim() != domain.dim || model.dim != domain.dim {
            return Err(EnergyError::Config(format!(
                "dimension mismatch: network {}, domain {}, model {}",
                arch.dim(),
                domain.dim,
                model.dim
            )));
        }
        if arch.eta_dim() != dist.map.eta_dim() {
            return Err(EnergyError::Config(format!(
                "network eta input {} != sampled parameter dimension {}",
                arch.eta_dim(),
                dist.map.eta_dim()
            )));
        }
        let plan = LayerPlan::new(&arch);
        Ok(Self {
            arch,
            plan,
            domain,
            ansatz,
            model,
            dist,
        })
    }
}

/// Internal energy, external work and their difference.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyParts {
    pub internal: f64,
    pub external: f64,
    pub total: f64,
}

impl EnergyParts {
    fn from_parts(internal: f64, external: f64) -> Self {
        Self {
            internal,
            external,
            total: internal - external,
        }
    }
}

/// Potential energy `U - W` of the network field at one realization,
/// evaluated in ascending point order with compensated summation.
pub fn potential_energy(
    params: &ParameterVector,
    arch: &ModelArchitecture,
    domain: &CollocationDomain,
    ansatz: &DirichletAnsatz,
    model: &EnergyModel,
    eta: &MaterialSample,
) -> Result<EnergyParts, EnergyError> {
    let plan = LayerPlan::new(arch);
    let map = infer_map_from_arch(arch, eta);
    potential_energy_with_plan(&params.flat, arch, &plan, domain, ansatz, model, eta, &map)
}

/// Picks the input mapping consistent with the architecture's eta width.
fn infer_map_from_arch(arch: &ModelArchitecture, eta: &MaterialSample) -> MaterialMap {
    match (arch.eta_dim(), eta) {
        (1, MaterialSample::IsotropicENu { nu, .. }) => MaterialMap::EWithFixedNu(*nu),
        (_, MaterialSample::MooneyRivlin { .. }) => MaterialMap::C1C2,
        _ => MaterialMap::ENu,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn potential_energy_with_plan(
    flat: &[f64],
    arch: &ModelArchitecture,
    plan: &LayerPlan,
    domain: &CollocationDomain,
    ansatz: &DirichletAnsatz,
    model: &EnergyModel,
    eta: &MaterialSample,
    map: &MaterialMap,
) -> Result<EnergyParts, EnergyError> {
    eta.validate()
        .map_err(|e| EnergyError::Config(e.to_string()))?;
    let lift = |c: f64| c;
    let inputs = map.to_inputs(eta);
    let h_param = param_latent(flat, arch, plan, &inputs, &lift).map_err(EnergyError::Network)?;

    let mut internal = KahanSum::default();
    let mut external = KahanSum::default();
    for (i, (point, &w)) in domain.points.iter().zip(&domain.weights).enumerate() {
        let raw = forward_with_latent(flat, arch, plan, point, &h_param, &lift)
            .map_err(EnergyError::Network)?;
        let (u, grad_u) = apply_ansatz(ansatz, point, &raw);
        let psi = model
            .density(&grad_u, eta, &lift)
            .map_err(|source| EnergyError::Constitutive {
                index: i,
                point: *point,
                source,
            })?;
        if !psi.is_finite() {
            return Err(EnergyError::NonFinite {
                what: "energy density",
                index: i,
                point: *point,
            });
        }
        internal.add(w * psi);
        if let Some(fb) = model.body_force.at(point) {
            let work: f64 = (0..model.dim).map(|k| fb[k] * u[k]).sum();
            external.add(w * work);
        }
    }
    for segment in &domain.neumann_segments {
        for (point, &w) in segment.points.iter().zip(&segment.weights) {
            let raw = forward_with_latent(flat, arch, plan, point, &h_param, &lift)
                .map_err(EnergyError::Network)?;
            let (u, _) = apply_ansatz(ansatz, point, &raw);
            let work: f64 = (0..model.dim).map(|k| segment.traction[k] * u[k]).sum();
            external.add(w * work);
        }
    }
    Ok(EnergyParts::from_parts(internal.value(), external.value()))
}

/// Mean potential energy over an explicit realization list.
pub fn mean_potential(
    flat: &[f64],
    problem: &TrainingProblem,
    samples: &[MaterialSample],
) -> Result<EnergyParts, EnergyError> {
    assert!(!samples.is_empty());
    let mut internal = 0.0;
    let mut external = 0.0;
    for eta in samples {
        let parts = potential_energy_with_plan(
            flat,
            &problem.arch,
            &problem.plan,
            &problem.domain,
            &problem.ansatz,
            &problem.model,
            eta,
            &problem.dist.map,
        )
        .map_err(|source| EnergyError::AtSample {
            eta: Box::new(*eta),
            source: Box::new(source),
        })?;
        internal += parts.internal;
        external += parts.external;
    }
    let n = samples.len() as f64;
    Ok(EnergyParts::from_parts(internal / n, external / n))
}

/// Expected potential energy: `(1/n) sum_k (U - W)(eta_k)` with the
/// epoch-specific sample stream.
pub fn expected_potential(
    params: &ParameterVector,
    problem: &TrainingProblem,
    n_samples: usize,
    epoch: u64,
) -> Result<f64, EnergyError> {
    let samples = sample_parameters(&problem.dist, n_samples.max(1), epoch)?;
    Ok(mean_potential(&params.flat, problem, &samples)?.total)
}

/// One parallel work item of the gradient evaluation.
#[derive(Clone, Copy)]
enum Item {
    Domain { sample: usize, start: usize, end: usize },
    Segment { sample: usize, segment: usize },
}

struct ItemResult {
    grad: GradientVector,
    internal: f64,
    external: f64,
}

thread_local! {
    static WORK_TAPE: RefCell<Tape> = RefCell::new(Tape::with_capacity(1 << 16));
}

/// Mean energy and its exact gradient over the given realizations.
///
/// Work is split into fixed chunks of collocation points; each chunk is
/// recorded on its own tape and reduced in chunk order, so the result does
/// not depend on the number of worker threads.
pub fn expected_energy_gradient(
    params: &ParameterVector,
    problem: &TrainingProblem,
    samples: &[MaterialSample],
) -> Result<(EnergyParts, GradientVector), EnergyError> {
    assert!(!samples.is_empty());
    let n_points = problem.domain.points.len();
    let mut items = Vec::new();
    for (s, _) in samples.iter().enumerate() {
        let mut start = 0;
        while start < n_points {
            let end = (start + DOMAIN_CHUNK).min(n_points);
            items.push(Item::Domain { sample: s, start, end });
            start = end;
        }
        for seg in 0..problem.domain.neumann_segments.len() {
            items.push(Item::Segment { sample: s, segment: seg });
        }
    }

    let results: Result<Vec<ItemResult>, EnergyError> = items
        .par_iter()
        .map(|item| eval_item(&params.flat, problem, samples, item))
        .collect();
    let results = results?;

    let mut grad = GradientVector::zeros(params.len());
    let mut internal = 0.0;
    let mut external = 0.0;
    for r in &results {
        grad.axpy(1.0, &r.grad);
        internal += r.internal;
        external += r.external;
    }
    let inv_n = 1.0 / samples.len() as f64;
    grad.scale_in_place(inv_n);
    Ok((
        EnergyParts::from_parts(internal * inv_n, external * inv_n),
        grad,
    ))
}

fn eval_item(
    flat: &[f64],
    problem: &TrainingProblem,
    samples: &[MaterialSample],
    item: &Item,
) -> Result<ItemResult, EnergyError> {
    WORK_TAPE.with(|cell| {
        let tape = cell.borrow();
        tape.reset();
        let leaves: Vec<Var<'_>> = flat.iter().map(|&v| tape.leaf(v)).collect();
        let lift = |c: f64| tape.constant(c);

        let sample_idx = match item {
            Item::Domain { sample, .. } | Item::Segment { sample, .. } => *sample,
        };
        let eta = &samples[sample_idx];
        let inputs = problem.dist.map.to_inputs(eta);
        let h_param = param_latent(&leaves, &problem.arch, &problem.plan, &inputs, &lift)
            .map_err(EnergyError::Network)?;

        let mut internal_acc: Option<Var<'_>> = None;
        let mut external_acc: Option<Var<'_>> = None;

        match *item {
            Item::Domain { start, end, .. } => {
                for i in start..end {
                    let point = &problem.domain.points[i];
                    let w = problem.domain.weights[i];
                    let raw = forward_with_latent(
                        &leaves,
                        &problem.arch,
                        &problem.plan,
                        point,
                        &h_param,
                        &lift,
                    )
                    .map_err(EnergyError::Network)?;
                    let (u, grad_u) = apply_ansatz(&problem.ansatz, point, &raw);
                    let psi = problem
                        .model
                        .density(&grad_u, eta, &lift)
                        .map_err(|source| EnergyError::Constitutive {
                            index: i,
                            point: *point,
                            source,
                        })
                        .map_err(|source| EnergyError::AtSample {
                            eta: Box::new(*eta),
                            source: Box::new(source),
                        })?;
                    let weighted = psi.scale(w);
                    internal_acc = Some(match internal_acc {
                        Some(acc) => acc + weighted,
                        None => weighted,
                    });
                    if let Some(fb) = problem.model.body_force.at(point) {
                        let mut work = u[0].scale(fb[0] * w);
                        for k in 1..problem.model.dim {
                            work = work + u[k].scale(fb[k] * w);
                        }
                        external_acc = Some(match external_acc {
                            Some(acc) => acc + work,
                            None => work,
                        });
                    }
                }
            }
            Item::Segment { segment, .. } => {
                let seg = &problem.domain.neumann_segments[segment];
                for (point, &w) in seg.points.iter().zip(&seg.weights) {
                    let raw = forward_with_latent(
                        &leaves,
                        &problem.arch,
                        &problem.plan,
                        point,
                        &h_param,
                        &lift,
                    )
                    .map_err(EnergyError::Network)?;
                    let (u, _) = apply_ansatz(&problem.ansatz, point, &raw);
                    let mut work = u[0].scale(seg.traction[0] * w);
                    for k in 1..problem.model.dim {
                        work = work + u[k].scale(seg.traction[k] * w);
                    }
                    external_acc = Some(match external_acc {
                        Some(acc) => acc + work,
                        None => work,
                    });
                }
            }
        }

        let internal_val = internal_acc.map_or(0.0, |v| v.val());
        let external_val = external_acc.map_or(0.0, |v| v.val());
        let total = match (internal_acc, external_acc) {
            (Some(i), Some(e)) => Some(i - e),
            (Some(i), None) => Some(i),
            (None, Some(e)) => Some(-e),
            (None, None) => None,
        };
        let grad = match total {
            Some(out) => {
                if !out.val().is_finite() {
                    if let Some((node, op, value)) = tape.first_nonfinite() {
                        return Err(EnergyError::Autodiff(AdError::NonFinite { node, op, value }));
                    }
                }
                tape.gradient(out)
            }
            None => GradientVector::zeros(flat.len()),
        };
        if grad.entries.iter().any(|g| !g.is_finite()) {
            return Err(EnergyError::Autodiff(AdError::NonFinite {
                node: 0,
                op: crate::autodiff::OpKind::Leaf,
                value: f64::NAN,
            }));
        }
        Ok(ItemResult {
            grad,
            internal: internal_val,
            external: external_val,
        })
    })
}

/// Largest deviation of the composed field from the prescribed value on the
/// clamped face; zero by construction for ansatz boundary conditions and
/// logged as a diagnostic.
pub fn boundary_residual(
    params: &ParameterVector,
    problem: &TrainingProblem,
    eta: &MaterialSample,
) -> Result<f64, EnergyError> {
    let face = match problem.ansatz.clamped_face(&problem.domain) {
        Some(f) => f,
        None => return Ok(f64::NAN),
    };
    let (points, _) = problem
        .domain
        .face_grid(face)
        .map_err(|e| EnergyError::Config(e.to_string()))?;
    let lift = |c: f64| c;
    let inputs = problem.dist.map.to_inputs(eta);
    let h_param = param_latent(&params.flat, &problem.arch, &problem.plan, &inputs, &lift)
        .map_err(EnergyError::Network)?;
    let mut worst = 0.0f64;
    for p in &points {
        let raw = forward_with_latent(&params.flat, &problem.arch, &problem.plan, p, &h_param, &lift)
            .map_err(EnergyError::Network)?;
        let (u, _) = apply_ansatz(&problem.ansatz, p, &raw);
        for k in 0..problem.model.dim {
            worst = worst.max((u[k] - problem.ansatz.offset[k]).abs());
        }
    }
    Ok(worst)
}

/// Loss-evaluation failures, tagged with enough context to locate them.
#[derive(Debug)]
pub enum EnergyError {
    Network(NetworkError),
    Constitutive {
        index: usize,
        point: [f64; 3],
        source: ConstitutiveError,
    },
    NonFinite {
        what: &'static str,
        index: usize,
        point: [f64; 3],
    },
    Autodiff(AdError),
    Config(String),
    AtSample {
        eta: Box<MaterialSample>,
        source: Box<EnergyError>,
    },
}

impl fmt::Display for EnergyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyError::Network(e) => write!(f, "{e}"),
            EnergyError::Constitutive { index, point, source } => {
                write!(f, "{source} at collocation point {index} ({:?})", &point[..])
            }
            EnergyError::NonFinite { what, index, point } => {
                write!(f, "non-finite {what} at point {index} ({:?})", &point[..])
            }
            EnergyError::Autodiff(e) => write!(f, "{e}"),
            EnergyError::Config(msg) => write!(f, "{msg}"),
            EnergyError::AtSample { eta, source } => {
                write!(f, "{source} (material realization {eta:?})")
            }
        }
    }
}

impl std::error::Error for EnergyError {}
