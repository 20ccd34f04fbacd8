//! Two-phase training: Adam for rapid initial descent, then L-BFGS with a
//! strong-Wolfe line search to enforce strict equilibrium, plus the fast
//! fine-tuning mode that freezes both encoders and adapts the manifold
//! network at a single material realization.
//!
//! During the quasi-Newton phase the material sample set is frozen so the
//! objective is deterministic; a quasi-Newton method on a resampled
//! stochastic objective would be ill-posed.

use std::collections::VecDeque;
use std::fmt;
use std::time::Instant;

use crate::autodiff::GradientVector;
use crate::loss::{
    directional_energy, expected_energy_gradient, sample_parameters, EnergyError, EnergyParts,
    TrainingProblem,
};
use crate::network::{apply_freeze, FreezePolicy, ParameterVector};

/// Adam moment estimates aligned with the parameter vector.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update; frozen entries are untouched, including
/// their moment estimates.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut ParameterVector,
    grad: &GradientVector,
) -> Result<(), TrainError> {
    debug_assert_eq!(grad.len(), params.len());
    if let Some(index) = grad.entries.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGradient { index });
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        if params.freeze_mask[i] {
            continue;
        }
        let g = grad.entries[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params.flat[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Bounded curvature history for the two-loop recursion.
#[derive(Clone, Debug)]
pub struct LbfgsState {
    history: VecDeque<(Vec<f64>, Vec<f64>)>,
    m_hist: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_iters: usize,
}

/// Pairs with `s . y` at or below this are discarded to keep the implicit
/// Hessian approximation positive definite.
pub const CURVATURE_MIN: f64 = 1e-10;

impl LbfgsState {
    pub fn new(m_hist: usize) -> Self {
        Self {
            history: VecDeque::with_capacity(m_hist),
            m_hist,
            c1: 1e-4,
            c2: 0.9,
            max_line_iters: 25,
        }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }

    /// Stores (s, y) when the curvature condition holds; returns whether it
    /// was kept.
    pub fn push_pair(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if sy <= CURVATURE_MIN {
            return false;
        }
        if self.history.len() == self.m_hist {
            self.history.pop_front();
        }
        self.history.push_back((s, y));
        true
    }
}

/// Two-loop recursion with initial scaling `gamma = s.y / y.y` from the
/// newest pair; an empty history yields steepest descent.
pub fn lbfgs_direction(state: &LbfgsState, grad: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    if state.history.is_empty() {
        for v in &mut q {
            *v = -*v;
        }
        return q;
    }
    let k = state.history.len();
    let mut alphas = vec![0.0; k];
    let mut rhos = vec![0.0; k];
    for (idx, (s, y)) in state.history.iter().enumerate().rev() {
        let rho = 1.0 / dot(s, y);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas[idx] = a;
        rhos[idx] = rho;
    }
    let (s_new, y_new) = state.history.back().unwrap();
    let gamma = dot(s_new, y_new) / dot(y_new, y_new);
    for v in &mut q {
        *v *= gamma;
    }
    for (idx, (s, y)) in state.history.iter().enumerate() {
        let b = rhos[idx] * dot(y, &q);
        let corr = alphas[idx] - b;
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += corr * si;
        }
    }
    for v in &mut q {
        *v = -*v;
    }
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug)]
pub struct WolfeOptions {
    pub c1: f64,
    pub c2: f64,
    pub alpha_init: f64,
    pub max_iters: usize,
}

impl Default for WolfeOptions {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            alpha_init: 1.0,
            max_iters: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearchFailure {
    /// The supplied direction has non-negative slope at the start point.
    NotDescentDirection { slope: f64 },
    /// No step satisfying the strong Wolfe conditions within the budget.
    NoAdmissibleStep,
    /// The objective failed at the start point.
    StartEvaluationFailed,
}

impl fmt::Display for LineSearchFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineSearchFailure::NotDescentDirection { slope } => {
                write!(f, "not a descent direction (slope {slope})")
            }
            LineSearchFailure::NoAdmissibleStep => write!(f, "no admissible Wolfe step"),
            LineSearchFailure::StartEvaluationFailed => write!(f, "objective failed at alpha = 0"),
        }
    }
}

impl std::error::Error for LineSearchFailure {}

/// Strong-Wolfe line search (bracket and zoom).
///
/// `phi(alpha)` returns the objective value and slope along the search
/// direction; `None` marks an evaluation failure (for example an inverted
/// element at a too-long trial step), which is treated as an infinite value
/// so the search backs off.
pub fn wolfe_line_search(
    mut phi: impl FnMut(f64) -> Option<(f64, f64)>,
    opts: &WolfeOptions,
) -> Result<f64, LineSearchFailure> {
    let (f0, g0) = phi(0.0).ok_or(LineSearchFailure::StartEvaluationFailed)?;
    if !(g0 < 0.0) {
        return Err(LineSearchFailure::NotDescentDirection { slope: g0 });
    }
    let sufficient = |alpha: f64, f: f64| f <= f0 + opts.c1 * alpha * g0;
    let curvature = |g: f64| g.abs() <= -opts.c2 * g0;

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut alpha = opts.alpha_init;
    let mut bracket: Option<(f64, f64, f64, f64)> = None; // (lo, f_lo, g_lo, hi)

    for i in 0..opts.max_iters {
        match phi(alpha) {
            Some((f, g)) => {
                if !sufficient(alpha, f) || (i > 0 && f >= f_prev) {
                    bracket = Some((alpha_prev, f_prev, g_at(&mut phi, alpha_prev, f0, g0), alpha));
                    break;
                }
                if curvature(g) {
                    return Ok(alpha);
                }
                if g >= 0.0 {
                    bracket = Some((alpha, f, g, alpha_prev));
                    break;
                }
                alpha_prev = alpha;
                f_prev = f;
                alpha *= 2.0;
            }
            None => {
                // step too long: bracket between the last good point and here
                bracket = Some((alpha_prev, f_prev, g_at(&mut phi, alpha_prev, f0, g0), alpha));
                break;
            }
        }
    }

    let (mut lo, mut f_lo, mut g_lo, mut hi) = bracket.ok_or(LineSearchFailure::NoAdmissibleStep)?;
    for _ in 0..opts.max_iters {
        let mid = 0.5 * (lo + hi);
        match phi(mid) {
            Some((f, g)) => {
                if !sufficient(mid, f) || f >= f_lo {
                    hi = mid;
                } else {
                    if curvature(g) {
                        return Ok(mid);
                    }
                    if g * (hi - lo) >= 0.0 {
                        hi = lo;
                    }
                    lo = mid;
                    f_lo = f;
                    g_lo = g;
                }
            }
            None => {
                hi = mid;
            }
        }
        let _ = g_lo;
        if (hi - lo).abs() <= 1e-14 * (1.0 + lo.abs()) {
            break;
        }
    }
    // accept the best sufficient-decrease point even if the curvature
    // condition was not certified within the budget
    if lo > 0.0 && f_lo < f0 {
        return Ok(lo);
    }
    Err(LineSearchFailure::NoAdmissibleStep)
}

fn g_at(
    phi: &mut impl FnMut(f64) -> Option<(f64, f64)>,
    alpha: f64,
    f0: f64,
    g0: f64,
) -> f64 {
    if alpha == 0.0 {
        g0
    } else {
        phi(alpha).map(|(_, g)| g).unwrap_or(f0)
    }
}

/// Training phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Adam,
    Lbfgs,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Adam => write!(f, "adam"),
            Phase::Lbfgs => write!(f, "lbfgs"),
        }
    }
}

/// One row of the training log.
#[derive(Clone, Copy, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub total: f64,
    pub internal: f64,
    pub external: f64,
    pub boundary_diag: f64,
    pub wall_ms: f64,
}

impl EpochRecord {
    pub fn csv_header() -> &'static str {
        "epoch,phase,total_loss,internal,external,boundary_diag,wall_ms"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.epoch,
            self.phase,
            self.total,
            self.internal,
            self.external,
            self.boundary_diag,
            self.wall_ms
        )
    }
}

/// Two-phase schedule and optimizer settings.
#[derive(Clone, Copy, Debug)]
pub struct TrainSchedule {
    pub adam_epochs: usize,
    pub lbfgs_epochs: usize,
    pub lr: f64,
    pub n_samples: usize,
    pub lbfgs_history: usize,
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.adam_epochs + self.lbfgs_epochs == 0 {
            return Err(TrainError::Config("schedule has zero epochs".into()));
        }
        if !(self.lr > 0.0) || self.n_samples == 0 || self.lbfgs_history == 0 {
            return Err(TrainError::Config(
                "learning rate, sample count and history size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// What the trainer needs from an objective. The energy objective is the
/// production implementation; tests drive the optimizer with closed-form
/// surrogates.
pub trait TrainObjective {
    /// Called once per epoch before any evaluation. `frozen = true`
    /// requests the fixed quasi-Newton sample set.
    fn begin_epoch(&mut self, epoch: u64, frozen: bool) -> Result<(), TrainError>;
    fn value_and_grad(
        &mut self,
        flat: &[f64],
    ) -> Result<(EnergyParts, GradientVector), TrainError>;
    /// Objective value and directional slope at `flat + alpha * dir`.
    fn value_and_slope(
        &mut self,
        flat: &[f64],
        dir: &[f64],
        alpha: f64,
    ) -> Result<(f64, f64), TrainError>;
    /// Diagnostic residual on the Dirichlet face; NaN when not applicable.
    fn boundary_diag(&mut self, _flat: &[f64]) -> f64 {
        f64::NAN
    }
}

/// Expected-energy objective backed by the loss module.
pub struct EnergyObjective<'a> {
    pub problem: &'a TrainingProblem,
    pub n_samples: usize,
    samples: Vec<crate::constitutive::MaterialSample>,
    samples_frozen: bool,
}

impl<'a> EnergyObjective<'a> {
    pub fn new(problem: &'a TrainingProblem, n_samples: usize) -> Self {
        Self {
            problem,
            n_samples,
            samples: Vec::new(),
            samples_frozen: false,
        }
    }

    /// Point-mass objective at one realization (fine-tuning).
    pub fn point_mass(problem: &'a TrainingProblem, eta: crate::constitutive::MaterialSample) -> Self {
        Self {
            problem,
            n_samples: 1,
            samples: vec![eta],
            samples_frozen: true,
        }
    }

    pub fn samples(&self) -> &[crate::constitutive::MaterialSample] {
        &self.samples
    }
}

impl TrainObjective for EnergyObjective<'_> {
    fn begin_epoch(&mut self, epoch: u64, frozen: bool) -> Result<(), TrainError> {
        if self.samples_frozen {
            return Ok(());
        }
        self.samples = sample_parameters(&self.problem.dist, self.n_samples, epoch)
            .map_err(TrainError::Energy)?;
        if frozen {
            self.samples_frozen = true;
        }
        Ok(())
    }

    fn value_and_grad(
        &mut self,
        flat: &[f64],
    ) -> Result<(EnergyParts, GradientVector), TrainError> {
        expected_energy_gradient(flat, self.problem, &self.samples).map_err(TrainError::Energy)
    }

    fn value_and_slope(
        &mut self,
        flat: &[f64],
        dir: &[f64],
        alpha: f64,
    ) -> Result<(f64, f64), TrainError> {
        directional_energy(flat, dir, alpha, self.problem, &self.samples)
            .map_err(TrainError::Energy)
    }

    fn boundary_diag(&mut self, flat: &[f64]) -> f64 {
        let eta = match self.samples.first() {
            Some(s) => *s,
            None => return f64::NAN,
        };
        crate::loss::boundary_residual_flat(flat, self.problem, &eta).unwrap_or(f64::NAN)
    }
}

/// Runs the Adam phase then the L-BFGS phase, appending one record per
/// epoch to `log` (records survive an abort). Deterministic for fixed
/// seeds: the sample streams, chunked gradient reduction and line search
/// are all fixed-order.
pub fn train(
    params: &mut ParameterVector,
    schedule: &TrainSchedule,
    objective: &mut impl TrainObjective,
    log: &mut Vec<EpochRecord>,
) -> Result<(), TrainError> {
    schedule.validate()?;
    let mut adam = AdamState::new(params.len(), schedule.lr);
    for epoch in 0..schedule.adam_epochs {
        let started = Instant::now();
        objective
            .begin_epoch(epoch as u64, false)
            .map_err(|e| e.at_epoch(epoch, Phase::Adam))?;
        let (parts, mut grad) = objective
            .value_and_grad(&params.flat)
            .map_err(|e| e.at_epoch(epoch, Phase::Adam))?;
        grad.mask_frozen(&params.freeze_mask);
        adam_step(&mut adam, params, &grad).map_err(|e| e.at_epoch(epoch, Phase::Adam))?;
        log.push(EpochRecord {
            epoch,
            phase: Phase::Adam,
            total: parts.total,
            internal: parts.internal,
            external: parts.external,
            boundary_diag: objective.boundary_diag(&params.flat),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }

    let mut lbfgs = LbfgsState::new(schedule.lbfgs_history);
    let mut fallback: Option<AdamState> = None;
    let mut current: Option<(EnergyParts, GradientVector)> = None;
    for k in 0..schedule.lbfgs_epochs {
        let epoch = schedule.adam_epochs + k;
        let started = Instant::now();
        objective
            .begin_epoch(epoch as u64, true)
            .map_err(|e| e.at_epoch(epoch, Phase::Lbfgs))?;
        let (parts, grad) = match current.take() {
            Some(pg) => pg,
            None => {
                let (p, mut g) = objective
                    .value_and_grad(&params.flat)
                    .map_err(|e| e.at_epoch(epoch, Phase::Lbfgs))?;
                g.mask_frozen(&params.freeze_mask);
                (p, g)
            }
        };

        let mut direction = lbfgs_direction(&lbfgs, grad.as_slice());
        let mut slope = grad.dot(&direction);
        if slope >= 0.0 {
            lbfgs.clear();
            direction = grad.entries.iter().map(|g| -g).collect();
            slope = grad.dot(&direction);
        }
        if slope == 0.0 {
            // stationary in the trainable subspace: nothing left to do
            log.push(EpochRecord {
                epoch,
                phase: Phase::Lbfgs,
                total: parts.total,
                internal: parts.internal,
                external: parts.external,
                boundary_diag: objective.boundary_diag(&params.flat),
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            });
            current = Some((parts, grad));
            continue;
        }

        let opts = WolfeOptions {
            c1: lbfgs.c1,
            c2: lbfgs.c2,
            alpha_init: 1.0,
            max_iters: lbfgs.max_line_iters,
        };
        let search = wolfe_line_search(
            |alpha| objective.value_and_slope(&params.flat, &direction, alpha).ok(),
            &opts,
        );

        let new_parts;
        match search {
            Ok(alpha) => {
                let step: Vec<f64> = direction.iter().map(|d| alpha * d).collect();
                params.apply_step(&step);
                let (p2, mut g2) = objective
                    .value_and_grad(&params.flat)
                    .map_err(|e| e.at_epoch(epoch, Phase::Lbfgs))?;
                g2.mask_frozen(&params.freeze_mask);
                let y: Vec<f64> = g2
                    .entries
                    .iter()
                    .zip(&grad.entries)
                    .map(|(a, b)| a - b)
                    .collect();
                lbfgs.push_pair(step, y);
                new_parts = p2;
                current = Some((p2, g2));
            }
            Err(_failure) => {
                // fall back to one bounded Adam step; revert if it does not
                // decrease the objective so the logged loss stays monotone
                let before = params.flat.clone();
                let fb = fallback.get_or_insert_with(|| AdamState::new(params.len(), schedule.lr));
                adam_step(fb, params, &grad).map_err(|e| e.at_epoch(epoch, Phase::Lbfgs))?;
                match objective.value_and_grad(&params.flat) {
                    Ok((p2, mut g2)) if p2.total <= parts.total => {
                        g2.mask_frozen(&params.freeze_mask);
                        new_parts = p2;
                        current = Some((p2, g2));
                    }
                    _ => {
                        params.flat = before;
                        new_parts = parts;
                        current = Some((parts, grad));
                    }
                }
            }
        }

        log.push(EpochRecord {
            epoch,
            phase: Phase::Lbfgs,
            total: new_parts.total,
            internal: new_parts.internal,
            external: new_parts.external,
            boundary_diag: objective.boundary_diag(&params.flat),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(())
}

/// Fast fine-tuning: freezes both encoders and runs at most `steps` L-BFGS
/// iterations on the point-mass objective at `target`. Encoder entries of
/// the result are bitwise equal to the input.
pub fn finetune(
    params: &mut ParameterVector,
    problem: &TrainingProblem,
    target: crate::constitutive::MaterialSample,
    steps: usize,
    log: &mut Vec<EpochRecord>,
) -> Result<(), TrainError> {
    apply_freeze(params, FreezePolicy::FreezeEncoders);
    if steps == 0 {
        return Ok(());
    }
    let mut objective = EnergyObjective::point_mass(problem, target);
    let schedule = TrainSchedule {
        adam_epochs: 0,
        lbfgs_epochs: steps,
        lr: 1e-3,
        n_samples: 1,
        lbfgs_history: 10,
    };
    train(params, &schedule, &mut objective, log)
}

/// Trainer failures with epoch context.
#[derive(Debug)]
pub enum TrainError {
    Energy(EnergyError),
    NonFiniteGradient { index: usize },
    Config(String),
    Aborted {
        epoch: usize,
        phase: Phase,
        source: Box<TrainError>,
    },
}

impl TrainError {
    fn at_epoch(self, epoch: usize, phase: Phase) -> TrainError {
        match self {
            TrainError::Aborted { .. } => self,
            other => TrainError::Aborted {
                epoch,
                phase,
                source: Box::new(other),
            },
        }
    }
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Energy(e) => write!(f, "{e}"),
            TrainError::NonFiniteGradient { index } => {
                write!(f, "non-finite gradient entry at index {index}")
            }
            TrainError::Config(msg) => write!(f, "{msg}"),
            TrainError::Aborted { epoch, phase, source } => {
                write!(f, "training aborted at {phase} epoch {epoch}: {source}")
            }
        }
    }
}

impl std::error::Error for TrainError {}
