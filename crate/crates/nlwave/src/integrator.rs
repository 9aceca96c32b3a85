//! Time integration of the band-projected wave system
//! `∂_t²u + Λu + J(‖∂_t u‖²)∂_t u + P_N g(u) = P_N h`
//! and of its parabolic companion flow.
//!
//! The nonlocal coefficient couples every mode through the single scalar
//! `σ = J(‖v‖²)`. Each step solves for that scalar with an outer
//! fixed-point/bisection iteration (monotone laws make the root unique) and
//! for the modal system with an inner fixed-point sweep that switches to a
//! Newton/conjugate-residual solve when the contraction stalls.
//!
//! `implicit_midpoint` is the default scheme: it conserves the quadratic
//! part of the energy exactly, so the discrete energy-balance residual
//! isolates the nonlinear/nonlocal treatment error and converges at second
//! order. `semi_implicit_exponential` integrates the linear-stiff part
//! exactly per mode with an explicit source, and is the cheaper choice for
//! very long runs.

use crate::krylov::conjugate_residual;
use crate::model::{DampingLaw, Model};
use crate::spectral::{Field, ModalState, SpectralDomain, SpectralError};
use thiserror::Error;

/// Inner nonlinear tolerance on the phase-space norm of the increment,
/// relative to the state scale.
const NONLINEAR_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 50;
const MAX_NEWTON: usize = 25;
/// One-step growth factor beyond which the run is aborted as unstable.
const INSTABILITY_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("damping scalar iteration failed to converge at t = {t}")]
    ScalarSolveFailed { t: f64 },
    #[error("inner nonlinear solve failed to converge at t = {t}")]
    NonlinearSolveFailed { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("energy norm grew by {ratio:.2}x in one step at t = {t}; reduce dt")]
    Instability { t: f64, ratio: f64 },
    #[error("invalid integrator configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImplicitMidpoint,
    SemiImplicitExponential,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    /// Relative tolerance on the damping-scalar fixed point.
    pub scalar_tol: f64,
    pub scalar_max_iter: usize,
    /// Disables the source term and the nonlocal scalar solve. A constant
    /// law still applies its explicit coefficient; any other law integrates
    /// the undamped linear system.
    pub linear_test_mode: bool,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        IntegratorConfig {
            scheme,
            dt,
            scalar_tol: 1e-12,
            scalar_max_iter: 100,
            linear_test_mode: false,
        }
    }

    pub fn midpoint(dt: f64) -> Self {
        Self::new(Scheme::ImplicitMidpoint, dt)
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(IntegratorError::BadConfig(format!(
                "dt must be positive and finite (got {})",
                self.dt
            )));
        }
        if self.scalar_tol <= 0.0 {
            return Err(IntegratorError::BadConfig(
                "scalar_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-step record handed to observers and accumulated into the ledger.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// Damping scalar used by the step, `σ = J(‖v_mid‖²)`.
    pub sigma: f64,
    /// `2 σ ‖v_mid‖² dt`, the midpoint-quadrature dissipation of the step.
    pub diss_increment: f64,
}

/// Read-only per-sample callback during integration.
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, state: &ModalState, sigma: f64, diss_increment: f64);
}

/// A discrete trajectory with its dissipation ledger.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub stride: usize,
    /// Sample times, strictly increasing.
    pub times: Vec<f64>,
    pub states: Vec<ModalState>,
    /// Cumulative dissipation at the sample times.
    pub cum_dissipation: Vec<f64>,
    /// Damping scalar per step.
    pub sigmas: Vec<f64>,
    /// Dissipation increment per step.
    pub diss_increments: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &ModalState {
        self.states.last().expect("trajectory holds >= 1 state")
    }
}

/// Reusable scratch buffers for the per-step solves.
pub struct StepWorkspace {
    grid: Vec<f64>,
    grid2: Vec<f64>,
}

impl StepWorkspace {
    pub fn new(domain: &SpectralDomain) -> Self {
        StepWorkspace {
            grid: vec![0.0; domain.grid_total()],
            grid2: vec![0.0; domain.grid_total()],
        }
    }
}

/// Band projection of the source term: `P_N g(u)` evaluated through the
/// dealiased collocation grid. Exact for quintic products at padding 3.
pub fn g_modal(domain: &SpectralDomain, model: &Model, u: &Field) -> Field {
    let mut ws = StepWorkspace::new(domain);
    let mut out = Field::zeros(domain);
    g_modal_into(domain, model, &u.coeffs, &mut out.coeffs, &mut ws);
    out
}

fn g_modal_into(
    domain: &SpectralDomain,
    model: &Model,
    u: &[f64],
    out: &mut [f64],
    ws: &mut StepWorkspace,
) {
    let f = Field { coeffs: u.to_vec() };
    domain.to_grid_into(&f, &mut ws.grid);
    for g in ws.grid.iter_mut() {
        *g = model.nonlinearity.g(*g);
    }
    domain.from_grid_into(&ws.grid, out);
}

/// Applies the linearized source `P_N g'(u)·x` with `u` given on the grid.
pub(crate) fn gprime_apply(
    domain: &SpectralDomain,
    gprime_grid: &[f64],
    x: &[f64],
    out: &mut [f64],
    ws: &mut StepWorkspace,
) {
    let f = Field { coeffs: x.to_vec() };
    domain.to_grid_into(&f, &mut ws.grid2);
    for (g, gp) in ws.grid2.iter_mut().zip(gprime_grid) {
        *g *= gp;
    }
    domain.from_grid_into(&ws.grid2, out);
}

fn l2_norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// Solves `σ = J(m(σ))` for a continuous non-increasing candidate map `m`
/// (the squared velocity norm produced by the step under damping `σ`).
///
/// `Φ(σ) = σ − J(m(σ))` is strictly increasing under those preconditions, so
/// the root is unique; a damped fixed point does the fast work and bisection
/// on the tracked bracket is the guaranteed fallback. Constant laws return
/// immediately without evaluating the map.
pub fn solve_damping_scalar(
    map: &mut dyn FnMut(f64) -> Result<f64, IntegratorError>,
    law: &DampingLaw,
    cfg: &IntegratorConfig,
) -> Result<f64, IntegratorError> {
    if let DampingLaw::Constant { gamma } = law {
        return Ok(*gamma);
    }
    let tol = cfg.scalar_tol;
    let jeval = |m: f64| law_value(law, m);

    let mut lo: Option<f64> = None; // Φ < 0
    let mut hi: Option<f64> = None; // Φ > 0
    let mut sigma = jeval(map(0.0)?);
    for iter in 0..cfg.scalar_max_iter {
        let target = jeval(map(sigma)?);
        let phi = sigma - target;
        if phi.abs() <= tol * (1.0 + sigma.abs()) {
            return Ok(sigma);
        }
        if phi < 0.0 {
            lo = Some(lo.map_or(sigma, |l: f64| l.max(sigma)));
        } else {
            hi = Some(hi.map_or(sigma, |h: f64| h.min(sigma)));
        }
        sigma = match (lo, hi) {
            // bracket known: bisect after the first few fixed-point tries
            (Some(l), Some(h)) if iter >= 4 => 0.5 * (l + h),
            (Some(l), Some(h)) => target.clamp(l, h),
            // expand upward until Φ changes sign
            (Some(l), None) => target.max(2.0 * l + 1.0).max(target),
            _ => target,
        };
        if !sigma.is_finite() {
            return Err(IntegratorError::ScalarSolveFailed { t: f64::NAN });
        }
    }
    Err(IntegratorError::ScalarSolveFailed { t: f64::NAN })
}

fn law_value(law: &DampingLaw, m: f64) -> f64 {
    crate::model::eval_damping(law, m.max(0.0))
        .map(|(j, _)| j)
        .unwrap_or(f64::NAN)
}

/// Effective damping scalar in linear test mode: a constant law keeps its
/// explicit coefficient, every other law is switched off.
fn linear_mode_sigma(law: &DampingLaw) -> f64 {
    match law {
        DampingLaw::Constant { gamma } => *gamma,
        _ => 0.0,
    }
}

struct MidpointSystem<'a> {
    domain: &'a SpectralDomain,
    model: &'a Model,
    dt: f64,
    u_n: &'a [f64],
    /// right-hand side `v_n − (dt/2) Λ u_n + (dt/2) h`
    b: Vec<f64>,
    nonlinear: bool,
    scale: f64,
}

impl<'a> MidpointSystem<'a> {
    fn new(
        domain: &'a SpectralDomain,
        model: &'a Model,
        dt: f64,
        state: &'a ModalState,
        nonlinear: bool,
    ) -> Self {
        let n = domain.modes_total();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = state.v.coeffs[i] - 0.5 * dt * domain.eigenvalues[i] * state.u.coeffs[i]
                + 0.5 * dt * model.forcing.h.coeffs[i];
        }
        let scale = 1.0 + domain.energy_norm(state);
        MidpointSystem {
            domain,
            model,
            dt,
            u_n: &state.u.coeffs,
            b,
            nonlinear,
            scale,
        }
    }

    fn diag(&self, sigma: f64) -> Vec<f64> {
        self.domain
            .eigenvalues
            .iter()
            .map(|&lam| 1.0 + 0.5 * self.dt * sigma + 0.25 * self.dt * self.dt * lam)
            .collect()
    }

    fn u_mid(&self, w: &[f64], out: &mut [f64]) {
        for i in 0..w.len() {
            out[i] = self.u_n[i] + 0.5 * self.dt * w[i];
        }
    }

    /// Solves the midpoint system for the midpoint velocity `w` at fixed σ.
    fn solve(
        &self,
        sigma: f64,
        w: &mut Vec<f64>,
        ws: &mut StepWorkspace,
    ) -> Result<(), IntegratorError> {
        let n = self.b.len();
        let d = self.diag(sigma);
        if !self.nonlinear {
            for i in 0..n {
                w[i] = self.b[i] / d[i];
            }
            return Ok(());
        }

        let tol = NONLINEAR_TOL * self.scale;
        let mut u_mid = vec![0.0; n];
        let mut gm = vec![0.0; n];
        let mut prev_inc = f64::INFINITY;
        for sweep in 0..MAX_SWEEPS {
            self.u_mid(w, &mut u_mid);
            g_modal_into(self.domain, self.model, &u_mid, &mut gm, ws);
            let mut inc_sq = 0.0;
            for i in 0..n {
                let w_new = (self.b[i] - 0.5 * self.dt * gm[i]) / d[i];
                let dw = w_new - w[i];
                inc_sq += dw * dw * (1.0 + 0.25 * self.dt * self.dt * self.domain.eigenvalues[i]);
                w[i] = w_new;
            }
            let inc = inc_sq.sqrt();
            if inc <= tol {
                return Ok(());
            }
            // stalled contraction: hand over to Newton
            if sweep >= 3 && inc > 0.5 * prev_inc {
                return self.solve_newton(sigma, &d, w, ws, tol);
            }
            prev_inc = inc;
        }
        self.solve_newton(sigma, &d, w, ws, tol)
    }

    fn solve_newton(
        &self,
        _sigma: f64,
        d: &[f64],
        w: &mut Vec<f64>,
        ws: &mut StepWorkspace,
        tol: f64,
    ) -> Result<(), IntegratorError> {
        let n = self.b.len();
        let mut u_mid = vec![0.0; n];
        let mut gm = vec![0.0; n];
        let mut residual = vec![0.0; n];
        for _ in 0..MAX_NEWTON {
            self.u_mid(w, &mut u_mid);
            g_modal_into(self.domain, self.model, &u_mid, &mut gm, ws);
            let mut rnorm_sq = 0.0;
            for i in 0..n {
                residual[i] = d[i] * w[i] - self.b[i] + 0.5 * self.dt * gm[i];
                rnorm_sq += residual[i] * residual[i];
            }
            if rnorm_sq.sqrt() <= tol {
                return Ok(());
            }
            // J = D + (dt²/4) P_N g'(u_mid) P_N, symmetric
            let um_field = Field {
                coeffs: u_mid.clone(),
            };
            self.domain.to_grid_into(&um_field, &mut ws.grid);
            let gp_grid: Vec<f64> = ws
                .grid
                .iter()
                .map(|&g| self.model.nonlinearity.g_prime(g))
                .collect();
            let quarter = 0.25 * self.dt * self.dt;
            let mut ws2 = StepWorkspace::new(self.domain);
            let mut apply = |x: &[f64], y: &mut [f64]| {
                gprime_apply(self.domain, &gp_grid, x, y, &mut ws2);
                for i in 0..n {
                    y[i] = d[i] * x[i] + quarter * y[i];
                }
            };
            let delta = conjugate_residual(&mut apply, &residual, 1e-13, 4 * n + 20)
                .ok_or(IntegratorError::NonlinearSolveFailed { t: f64::NAN })?;
            for i in 0..n {
                w[i] -= delta[i];
            }
        }
        Err(IntegratorError::NonlinearSolveFailed { t: f64::NAN })
    }
}

/// Advances one step; the public single-shot form of the stepper.
pub fn step(
    domain: &SpectralDomain,
    state: &ModalState,
    model: &Model,
    cfg: &IntegratorConfig,
) -> Result<ModalState, IntegratorError> {
    let mut ws = StepWorkspace::new(domain);
    step_with_record(domain, state, model, cfg, &mut ws).map(|(s, _)| s)
}

pub fn step_with_record(
    domain: &SpectralDomain,
    state: &ModalState,
    model: &Model,
    cfg: &IntegratorConfig,
    ws: &mut StepWorkspace,
) -> Result<(ModalState, StepRecord), IntegratorError> {
    cfg.validate()?;
    if !state.is_finite() {
        return Err(IntegratorError::NonFiniteState { t: state.t });
    }
    let out = match cfg.scheme {
        Scheme::ImplicitMidpoint => step_midpoint(domain, state, model, cfg, ws),
        Scheme::SemiImplicitExponential => step_exponential(domain, state, model, cfg, ws),
    }?;
    if !out.0.is_finite() {
        return Err(IntegratorError::NonFiniteState { t: state.t });
    }
    Ok(out)
}

fn attach_time<T>(r: Result<T, IntegratorError>, t: f64) -> Result<T, IntegratorError> {
    r.map_err(|e| match e {
        IntegratorError::ScalarSolveFailed { .. } => IntegratorError::ScalarSolveFailed { t },
        IntegratorError::NonlinearSolveFailed { .. } => IntegratorError::NonlinearSolveFailed { t },
        other => other,
    })
}

fn step_midpoint(
    domain: &SpectralDomain,
    state: &ModalState,
    model: &Model,
    cfg: &IntegratorConfig,
    ws: &mut StepWorkspace,
) -> Result<(ModalState, StepRecord), IntegratorError> {
    let dt = cfg.dt;
    let nonlinear = !cfg.linear_test_mode;
    let system = MidpointSystem::new(domain, model, dt, state, nonlinear);
    let mut w = state.v.coeffs.clone();

    let sigma = if cfg.linear_test_mode {
        let s = linear_mode_sigma(&model.damping);
        attach_time(system.solve(s, &mut w, ws), state.t)?;
        s
    } else if let DampingLaw::Constant { gamma } = model.damping {
        attach_time(system.solve(gamma, &mut w, ws), state.t)?;
        gamma
    } else {
        let mut map = |s: f64| -> Result<f64, IntegratorError> {
            system.solve(s, &mut w, ws)?;
            Ok(l2_norm_sq(&w))
        };
        attach_time(solve_damping_scalar(&mut map, &model.damping, cfg), state.t)?
    };

    let n = domain.modes_total();
    let mut u1 = vec![0.0; n];
    let mut v1 = vec![0.0; n];
    for i in 0..n {
        u1[i] = state.u.coeffs[i] + dt * w[i];
        v1[i] = 2.0 * w[i] - state.v.coeffs[i];
    }
    let m = l2_norm_sq(&w);
    let record = StepRecord {
        sigma,
        diss_increment: 2.0 * sigma * m * dt,
    };
    Ok((
        ModalState {
            u: Field { coeffs: u1 },
            v: Field { coeffs: v1 },
            t: state.t + dt,
        },
        record,
    ))
}

/// Entries of `exp(t A)` for the single-mode block `A = [[0,1],[−λ,−σ]]`,
/// together with the particular response to a constant force `(0, f)`.
fn mode_propagator(lambda: f64, sigma: f64, t: f64) -> [f64; 4] {
    let half = 0.5 * sigma;
    let disc = half * half - lambda;
    let x = disc * t * t;
    // C(t), S(t) solve y'' = disc·y with (C,S)(0) = (1,0), (C',S')(0) = (0,1)
    let (c, s) = if x > 1e-8 {
        let mu = disc.sqrt();
        ((mu * t).cosh(), (mu * t).sinh() / mu)
    } else if x < -1e-8 {
        let om = (-disc).sqrt();
        ((om * t).cos(), (om * t).sin() / om)
    } else {
        (
            1.0 + x / 2.0 + x * x / 24.0,
            t * (1.0 + x / 6.0 + x * x / 120.0),
        )
    };
    let ex = (-half * t).exp();
    [
        ex * (c + half * s),
        ex * s,
        -lambda * ex * s,
        ex * (c - half * s),
    ]
}

fn exponential_advance(
    domain: &SpectralDomain,
    state: &ModalState,
    force: &[f64],
    sigma: f64,
    t: f64,
    u_out: &mut [f64],
    v_out: &mut [f64],
) {
    for i in 0..domain.modes_total() {
        let lam = domain.eigenvalues[i];
        let [e11, e12, e21, e22] = mode_propagator(lam, sigma, t);
        let u = state.u.coeffs[i];
        let v = state.v.coeffs[i];
        let f = force[i];
        u_out[i] = e11 * u + e12 * v + (1.0 - e11) * f / lam;
        v_out[i] = e21 * u + e22 * v - e21 * f / lam;
    }
}

fn step_exponential(
    domain: &SpectralDomain,
    state: &ModalState,
    model: &Model,
    cfg: &IntegratorConfig,
    ws: &mut StepWorkspace,
) -> Result<(ModalState, StepRecord), IntegratorError> {
    let dt = cfg.dt;
    let n = domain.modes_total();

    // frozen source over the step: h − g(u_n)
    let mut force = vec![0.0; n];
    if !cfg.linear_test_mode {
        g_modal_into(domain, model, &state.u.coeffs, &mut force, ws);
    }
    for i in 0..n {
        force[i] = model.forcing.h.coeffs[i] - force[i];
    }

    let mut uh = vec![0.0; n];
    let mut vh = vec![0.0; n];
    let sigma = if cfg.linear_test_mode {
        linear_mode_sigma(&model.damping)
    } else if let DampingLaw::Constant { gamma } = model.damping {
        gamma
    } else {
        let mut map = |s: f64| -> Result<f64, IntegratorError> {
            exponential_advance(domain, state, &force, s, 0.5 * dt, &mut uh, &mut vh);
            Ok(l2_norm_sq(&vh))
        };
        attach_time(solve_damping_scalar(&mut map, &model.damping, cfg), state.t)?
    };

    exponential_advance(domain, state, &force, sigma, 0.5 * dt, &mut uh, &mut vh);
    let m_mid = l2_norm_sq(&vh);
    let mut u1 = vec![0.0; n];
    let mut v1 = vec![0.0; n];
    exponential_advance(domain, state, &force, sigma, dt, &mut u1, &mut v1);

    Ok((
        ModalState {
            u: Field { coeffs: u1 },
            v: Field { coeffs: v1 },
            t: state.t + dt,
        },
        StepRecord {
            sigma,
            diss_increment: 2.0 * sigma * m_mid * dt,
        },
    ))
}

/// Integrates to the horizon, recording samples every `stride` steps (plus
/// the final step) and accumulating the dissipation ledger.
pub fn integrate(
    domain: &SpectralDomain,
    state0: &ModalState,
    model: &Model,
    cfg: &IntegratorConfig,
    horizon: f64,
    stride: usize,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory, IntegratorError> {
    cfg.validate()?;
    if horizon < 0.0 {
        return Err(IntegratorError::BadConfig("horizon must be >= 0".into()));
    }
    if model.forcing.h.coeffs.len() != domain.modes_total() {
        return Err(SpectralError::SizeMismatch {
            expected: domain.modes_total(),
            got: model.forcing.h.coeffs.len(),
        }
        .into());
    }
    let stride = stride.max(1);
    let steps = (horizon / cfg.dt).round() as usize;

    let mut traj = Trajectory {
        dt: cfg.dt,
        stride,
        times: vec![state0.t],
        states: vec![state0.clone()],
        cum_dissipation: vec![0.0],
        sigmas: Vec::with_capacity(steps),
        diss_increments: Vec::with_capacity(steps),
    };
    for obs in observers.iter_mut() {
        obs.observe(0, state0.t, state0, 0.0, 0.0);
    }

    let mut ws = StepWorkspace::new(domain);
    let mut state = state0.clone();
    let mut cum = 0.0;
    let mut prev_norm = domain.energy_norm(&state);
    for k in 1..=steps {
        let (next, record) = step_with_record(domain, &state, model, cfg, &mut ws)?;
        let norm = domain.energy_norm(&next);
        if norm > INSTABILITY_FACTOR * prev_norm + 1e-6 {
            return Err(IntegratorError::Instability {
                t: next.t,
                ratio: norm / prev_norm.max(f64::MIN_POSITIVE),
            });
        }
        prev_norm = norm;
        cum += record.diss_increment;
        state = next;
        state.t = state0.t + k as f64 * cfg.dt; // avoid additive drift
        traj.sigmas.push(record.sigma);
        traj.diss_increments.push(record.diss_increment);
        if k % stride == 0 || k == steps {
            traj.times.push(state.t);
            traj.states.push(state.clone());
            traj.cum_dissipation.push(cum);
            for obs in observers.iter_mut() {
                obs.observe(k, state.t, &state, record.sigma, record.diss_increment);
            }
        }
    }
    Ok(traj)
}

/// Integrates the companion parabolic flow
/// `∂_t z + Λ z + ℓ Λ^{-1} z + P_N g(z) = ĥ`
/// with the linear part exact per mode and one Newton correction per step
/// for the source. Returns `(t, z)` samples every `stride` steps.
pub fn parabolic_integrate(
    domain: &SpectralDomain,
    z0: &Field,
    model: &Model,
    ell: f64,
    hhat: &Field,
    cfg: &IntegratorConfig,
    horizon: f64,
    stride: usize,
) -> Result<Vec<(f64, Field)>, IntegratorError> {
    cfg.validate()?;
    if ell <= 0.0 {
        return Err(IntegratorError::BadConfig("ell must be > 0".into()));
    }
    let n = domain.modes_total();
    let dt = cfg.dt;
    let stride = stride.max(1);
    let steps = (horizon / dt).round() as usize;

    // a_k = λ_k + ℓ/λ_k; E = e^{−a dt}; B = (1 − E)/a
    let mut decay = vec![0.0; n];
    let mut bcoef = vec![0.0; n];
    for i in 0..n {
        let a = domain.eigenvalues[i] + ell / domain.eigenvalues[i];
        decay[i] = (-a * dt).exp();
        bcoef[i] = (1.0 - decay[i]) / a;
    }

    let mut ws = StepWorkspace::new(domain);
    let mut z = z0.coeffs.clone();
    let mut out = vec![(0.0, z0.clone())];
    let mut gm = vec![0.0; n];
    let mut zp = vec![0.0; n];
    let tol = NONLINEAR_TOL * (1.0 + domain.hs_norm(z0, 1.0));

    for k in 1..=steps {
        // predictor with the source frozen at z_n
        g_modal_into(domain, model, &z, &mut gm, &mut ws);
        for i in 0..n {
            zp[i] = decay[i] * z[i] + bcoef[i] * (hhat.coeffs[i] - gm[i]);
        }
        // one Newton correction of F(z) = z − E z_n − B (ĥ − g(z)) at zp,
        // solved on the symmetrized system B^{1/2}(I + B^{1/2} g' B^{1/2})B^{-1/2}
        g_modal_into(domain, model, &zp, &mut gm, &mut ws);
        let mut residual = vec![0.0; n];
        let mut rnorm_sq = 0.0;
        for i in 0..n {
            residual[i] = zp[i] - decay[i] * z[i] - bcoef[i] * (hhat.coeffs[i] - gm[i]);
            rnorm_sq += residual[i] * residual[i];
        }
        if rnorm_sq.sqrt() > tol {
            let zp_field = Field { coeffs: zp.clone() };
            domain.to_grid_into(&zp_field, &mut ws.grid);
            let gp_grid: Vec<f64> = ws
                .grid
                .iter()
                .map(|&g| model.nonlinearity.g_prime(g))
                .collect();
            let sqrt_b: Vec<f64> = bcoef.iter().map(|&b| b.sqrt()).collect();
            let rhs: Vec<f64> = residual
                .iter()
                .zip(&sqrt_b)
                .map(|(r, sb)| r / sb.max(f64::MIN_POSITIVE))
                .collect();
            let mut ws2 = StepWorkspace::new(domain);
            let mut apply = |x: &[f64], y: &mut [f64]| {
                let scaled: Vec<f64> = x.iter().zip(&sqrt_b).map(|(xi, sb)| xi * sb).collect();
                gprime_apply(domain, &gp_grid, &scaled, y, &mut ws2);
                for i in 0..n {
                    y[i] = x[i] + sqrt_b[i] * y[i];
                }
            };
            if let Some(ysol) = conjugate_residual(&mut apply, &rhs, 1e-12, 4 * n + 20) {
                for i in 0..n {
                    zp[i] -= sqrt_b[i] * ysol[i];
                }
            } else {
                // fall back to a few damped fixed-point sweeps
                for _ in 0..8 {
                    g_modal_into(domain, model, &zp, &mut gm, &mut ws);
                    for i in 0..n {
                        zp[i] = decay[i] * z[i] + bcoef[i] * (hhat.coeffs[i] - gm[i]);
                    }
                }
            }
        }
        std::mem::swap(&mut z, &mut zp);
        if z.iter().any(|c| !c.is_finite()) {
            return Err(IntegratorError::NonFiniteState {
                t: k as f64 * dt,
            });
        }
        if k % stride == 0 || k == steps {
            out.push((k as f64 * dt, Field { coeffs: z.clone() }));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DampingLaw, Forcing, Model, Nonlinearity};
    use crate::spectral::build_domain;

    fn quintic_model(domain: &SpectralDomain, law: DampingLaw) -> Model {
        Model::new(
            law,
            Nonlinearity::OddPower { q: 5 },
            Forcing {
                h: Field::zeros(domain),
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let model = quintic_model(
            &domain,
            DampingLaw::ShiftedPower {
                epsilon: 0.1,
                p: 2.0,
            },
        );
        let cfg = IntegratorConfig::midpoint(1e-2);
        let state = ModalState::zeros(&domain);
        let next = step(&domain, &state, &model, &cfg).unwrap();
        assert_eq!(next.u.coeffs, state.u.coeffs);
        assert_eq!(next.v.coeffs, state.v.coeffs);
    }

    #[test]
    fn single_linear_mode_tracks_cosine() {
        let domain = build_domain(1, 1, 3.0).unwrap();
        let model = quintic_model(&domain, DampingLaw::Hyperbolic { a: 1.0, b: 2.0 });
        let mut cfg = IntegratorConfig::midpoint(1e-3);
        cfg.linear_test_mode = true;
        let state = ModalState::new(Field::basis(&domain, &[1]), Field::zeros(&domain), 0.0);
        let next = step(&domain, &state, &model, &cfg).unwrap();
        // one midpoint step of u'' = −u from (1,0): u1 ≈ cos(dt) to O(dt³)
        assert!((next.u.coeffs[0] - (1e-3f64).cos()).abs() < 1e-9);

        let traj = integrate(&domain, &state, &model, &cfg, 10.0, 100, &mut []).unwrap();
        let mut max_err: f64 = 0.0;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            max_err = max_err.max((s.u.coeffs[0] - t.cos()).abs());
        }
        assert!(max_err < 1e-5, "max error {max_err}");
    }

    #[test]
    fn constant_damping_matches_closed_form() {
        // u'' + u' + u = 0 from (1, 0): x(t) = e^{-t/2}(cos ωt + sin ωt/(2ω)), ω = √3/2
        let domain = build_domain(1, 1, 3.0).unwrap();
        let model = quintic_model(&domain, DampingLaw::Constant { gamma: 1.0 });
        let mut cfg = IntegratorConfig::midpoint(1e-4);
        cfg.linear_test_mode = true;
        let state = ModalState::new(Field::basis(&domain, &[1]), Field::zeros(&domain), 0.0);
        let traj = integrate(&domain, &state, &model, &cfg, 1.0, 100, &mut []).unwrap();
        let om = 3f64.sqrt() / 2.0;
        let mut max_err: f64 = 0.0;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = (-0.5 * t).exp() * ((om * t).cos() + (om * t).sin() / (2.0 * om));
            max_err = max_err.max((s.u.coeffs[0] - exact).abs());
        }
        assert!(max_err < 1e-6, "max error {max_err}");
    }

    #[test]
    fn exponential_scheme_is_exact_on_linear_damped_modes() {
        let domain = build_domain(1, 3, 3.0).unwrap();
        let model = quintic_model(&domain, DampingLaw::Constant { gamma: 1.0 });
        let mut cfg = IntegratorConfig::new(Scheme::SemiImplicitExponential, 0.05);
        cfg.linear_test_mode = true;
        let mut u0 = Field::basis(&domain, &[1]);
        u0.axpy(0.5, &Field::basis(&domain, &[3]));
        let state = ModalState::new(u0, Field::zeros(&domain), 0.0);
        let traj = integrate(&domain, &state, &model, &cfg, 2.0, 1, &mut []).unwrap();
        // mode 1: u'' + u' + u = 0; mode 3: u'' + u' + 9u = 0
        let final_state = traj.final_state();
        for (idx, lam, c0) in [(0usize, 1.0f64, 1.0f64), (2, 9.0, 0.5)] {
            let om = (lam - 0.25).sqrt();
            let t = 2.0f64;
            let exact = c0 * (-0.5 * t).exp() * ((om * t).cos() + (om * t).sin() / (2.0 * om));
            assert!(
                (final_state.u.coeffs[idx] - exact).abs() < 1e-12,
                "mode {idx}"
            );
        }
    }

    #[test]
    fn midpoint_is_time_reversible_without_damping() {
        let domain = build_domain(1, 6, 3.0).unwrap();
        let model = quintic_model(&domain, DampingLaw::Hyperbolic { a: 1.0, b: 2.0 });
        let mut cfg = IntegratorConfig::midpoint(1e-2);
        cfg.linear_test_mode = true;
        let mut u0 = Field::basis(&domain, &[1]);
        u0.axpy(-0.3, &Field::basis(&domain, &[4]));
        let v0 = Field::basis(&domain, &[2]).scaled(0.7);
        let state = ModalState::new(u0.clone(), v0.clone(), 0.0);

        let n = 50;
        let mut s = state.clone();
        let mut ws = StepWorkspace::new(&domain);
        for _ in 0..n {
            s = step_with_record(&domain, &s, &model, &cfg, &mut ws).unwrap().0;
        }
        s.v.scale(-1.0);
        for _ in 0..n {
            s = step_with_record(&domain, &s, &model, &cfg, &mut ws).unwrap().0;
        }
        s.v.scale(-1.0);
        let dist = domain.state_distance(&s, &state);
        assert!(dist < 1e-10, "reversibility defect {dist}");
    }

    #[test]
    fn scalar_solve_examples() {
        let cfg = IntegratorConfig::midpoint(1e-3);
        // constant law: immediate, map never called
        let mut calls = 0;
        let mut map = |_s: f64| {
            calls += 1;
            Ok(1.0)
        };
        let sigma =
            solve_damping_scalar(&mut map, &DampingLaw::Constant { gamma: 2.5 }, &cfg).unwrap();
        assert_eq!(sigma, 2.5);
        assert_eq!(calls, 0);

        // σ-independent norm: σ = J(m0)
        let law = DampingLaw::Hyperbolic { a: 1.0, b: 2.0 };
        let mut map = |_s: f64| Ok(3.0);
        let sigma = solve_damping_scalar(&mut map, &law, &cfg).unwrap();
        assert!((sigma - 4.0 / 5.0).abs() < 1e-12);

        // contracting map: σ = J(1/(1+σ)), bisection oracle as reference
        let mut map = |s: f64| Ok(1.0 / (1.0 + s));
        let sigma = solve_damping_scalar(&mut map, &law, &cfg).unwrap();
        let phi = |s: f64| {
            let m = 1.0 / (1.0 + s);
            s - (1.0 + m) / (2.0 + m)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let reference = 0.5 * (lo + hi);
        assert!(
            (sigma - reference).abs() < 1e-11,
            "sigma {sigma} vs {reference}"
        );
        assert!(sigma > 0.0 && sigma < 1.0);
    }

    #[test]
    fn scalar_root_is_unique_across_starting_brackets() {
        let law = DampingLaw::ShiftedPower {
            epsilon: 0.5,
            p: 2.0,
        };
        let mut cfg = IntegratorConfig::midpoint(1e-3);
        let mut roots = Vec::new();
        for tol in [1e-12, 1e-13] {
            cfg.scalar_tol = tol;
            let mut map = |s: f64| Ok(2.0 / (1.0 + 0.5 * s));
            roots.push(solve_damping_scalar(&mut map, &law, &cfg).unwrap());
        }
        assert!((roots[0] - roots[1]).abs() < 1e-10);
    }

    #[test]
    fn zero_horizon_returns_initial_state_only() {
        let domain = build_domain(1, 4, 3.0).unwrap();
        let model = quintic_model(&domain, DampingLaw::Hyperbolic { a: 1.0, b: 2.0 });
        let cfg = IntegratorConfig::midpoint(1e-3);
        let state = ModalState::new(Field::basis(&domain, &[2]), Field::zeros(&domain), 0.0);
        let traj = integrate(&domain, &state, &model, &cfg, 0.0, 10, &mut []).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], state);
    }

    #[test]
    fn equilibria_of_the_parabolic_flow_are_fixed() {
        // g ≡ 0, ĥ = 0, z0 = e1: exact decay e^{−(λ1 + ℓ/λ1)t}
        let domain = build_domain(1, 4, 3.0).unwrap();
        let mut model = quintic_model(&domain, DampingLaw::Constant { gamma: 1.0 });
        model.nonlinearity = Nonlinearity::CustomOddPolynomial {
            coeffs: vec![0.0],
            constants: crate::model::StructuralConstants {
                kappa: [1.0; 5],
                c_g: 1.0,
                q: 3.0,
            },
        };
        let cfg = IntegratorConfig::midpoint(1e-4);
        let ell = 4.0;
        let z0 = Field::basis(&domain, &[1]);
        let hhat = Field::zeros(&domain);
        let samples =
            parabolic_integrate(&domain, &z0, &model, ell, &hhat, &cfg, 1.0, 1000).unwrap();
        let (t_end, z_end) = samples.last().unwrap();
        let exact = (-(1.0 + ell) * t_end).exp();
        assert!((z_end.coeffs[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn parabolic_quintic_norm_decays_monotonically() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let model = quintic_model(
            &domain,
            DampingLaw::ShiftedPower {
                epsilon: 0.1,
                p: 2.0,
            },
        );
        let cfg = IntegratorConfig::midpoint(1e-3);
        let mut z0 = Field::basis(&domain, &[1]);
        z0.axpy(0.4, &Field::basis(&domain, &[3]));
        let hhat = Field::zeros(&domain);
        let samples = parabolic_integrate(&domain, &z0, &model, 4.0, &hhat, &cfg, 5.0, 50).unwrap();
        let norms: Vec<f64> = samples
            .iter()
            .map(|(_, z)| domain.hs_norm(z, 0.0))
            .collect();
        for pair in norms.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
        assert!(*norms.last().unwrap() < 1e-3 * norms[0]);
    }
}
