//! Orchestrated numerical experiments over ensembles of trajectories:
//! absorbing-ball probes in both phase spaces, trajectory-difference
//! Lipschitz and quasi-stability estimates, convergence of the resolved
//! dynamics under band refinement, and long-run probing of the limit set.
//!
//! Every probe is deterministic under a fixed seed: trajectories are
//! independent (and run in parallel), and all reductions walk a stably
//! ordered list. Empirical constants reported here (radii, rates, fitted
//! coefficients) are structural verdicts about boundedness / invariance /
//! batch stability, never comparisons against theoretical envelopes, which
//! are not explicit.

use crate::diagnostics;
use crate::integrator::{integrate, IntegratorConfig, IntegratorError, Trajectory};
use crate::model::Model;
use crate::spectral::{Field, ModalState, SpectralDomain};
use crate::steady::{self, EquilibriumSet, MultistartSpec};
use crate::trace::NamedTrace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("pair {0} has zero initial separation")]
    ZeroSeparation(usize),
    #[error("probe needs at least one equilibrium")]
    NeedEquilibria,
    #[error("invalid probe parameters: {0}")]
    BadParameters(String),
}

/// A reproducible family of initial states with prescribed norm range.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub count: usize,
    /// Closed range of phase-space norms for the sampled states.
    pub norm_range: (f64, f64),
    /// Highest excited mode per axis.
    pub mode_band: usize,
    pub seed: u64,
    /// Spectral decay exponent of the coefficient profile `λ_k^{-decay}`.
    pub decay: f64,
}

impl EnsembleSpec {
    pub fn new(count: usize, norm_range: (f64, f64), mode_band: usize, seed: u64) -> Self {
        EnsembleSpec {
            count,
            norm_range,
            mode_band,
            seed,
            decay: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.count < 1 {
            return Err(ExperimentError::BadParameters("count must be >= 1".into()));
        }
        let (lo, hi) = self.norm_range;
        if !(0.0 <= lo && lo <= hi) {
            return Err(ExperimentError::BadParameters(
                "norm_range must satisfy 0 <= r_min <= r_max".into(),
            ));
        }
        Ok(())
    }
}

fn per_member_rng(seed: u64, member: u64) -> ChaCha8Rng {
    // one independent counter-based stream per member
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(member.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn sample_field(domain: &SpectralDomain, rng: &mut ChaCha8Rng, band: usize, decay: f64) -> Field {
    let mut f = Field::zeros(domain);
    for ((c, idx), &lam) in f
        .coeffs
        .iter_mut()
        .zip(&domain.index_set)
        .zip(&domain.eigenvalues)
    {
        let inside = idx[..domain.dim].iter().all(|&k| k <= band);
        // draw unconditionally so the stream position is band-independent
        let z: f64 = standard_normal(rng);
        if inside {
            *c = lam.powf(-decay) * z;
        }
    }
    f
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on two uniform draws
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A single reproducible random field: `amplitude · λ_k^{-decay} · z_k`
/// with standard-normal `z_k` from a ChaCha8 stream.
pub fn random_smooth_field(
    domain: &SpectralDomain,
    seed: u64,
    decay: f64,
    amplitude: f64,
    mode_band: usize,
) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = mode_band.min(domain.modes_per_axis).max(1);
    let mut f = sample_field(domain, &mut rng, band, decay);
    f.scale(amplitude);
    f
}

/// Samples `count` states with phase-space norms uniform in `norm_range`,
/// band-limited to `mode_band`, deterministic per `(seed, index)`.
pub fn sample_ensemble(domain: &SpectralDomain, spec: &EnsembleSpec) -> Vec<ModalState> {
    let band = spec.mode_band.min(domain.modes_per_axis).max(1);
    (0..spec.count)
        .map(|i| {
            let mut rng = per_member_rng(spec.seed, i as u64);
            let u = sample_field(domain, &mut rng, band, spec.decay);
            let v = sample_field(domain, &mut rng, band, spec.decay);
            let mut state = ModalState::new(u, v, 0.0);
            let (lo, hi) = spec.norm_range;
            let target = lo + (hi - lo) * rng.gen_range(0.0..=1.0);
            let norm = domain.energy_norm(&state);
            if norm > 0.0 {
                let s = target / norm;
                state.u.scale(s);
                state.v.scale(s);
            }
            state
        })
        .collect()
}

/// Base states plus perturbed partners at the given phase-space separation.
pub fn sample_pairs(
    domain: &SpectralDomain,
    base: &EnsembleSpec,
    separation: f64,
    direction_seed: u64,
) -> Vec<(ModalState, ModalState)> {
    let bases = sample_ensemble(domain, base);
    bases
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut rng = per_member_rng(direction_seed, i as u64);
            let band = base.mode_band.min(domain.modes_per_axis).max(1);
            let du = sample_field(domain, &mut rng, band, base.decay);
            let dv = sample_field(domain, &mut rng, band, base.decay);
            let dir = ModalState::new(du, dv, 0.0);
            let norm = domain.energy_norm(&dir);
            let mut b = a.clone();
            if norm > 0.0 {
                b.u.axpy(separation / norm, &dir.u);
                b.v.axpy(separation / norm, &dir.v);
            }
            (a, b)
        })
        .collect()
}

/// Result of one probe: summary scalars, named verdicts, and plot-ready
/// traces. `pass` is the conjunction of the verdicts.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub probe: String,
    pub scalars: Vec<(String, f64)>,
    pub verdicts: Vec<(String, bool)>,
    pub pass: bool,
    pub traces: Vec<NamedTrace>,
}

impl ProbeReport {
    fn build(probe: &str, scalars: Vec<(String, f64)>, verdicts: Vec<(String, bool)>, traces: Vec<NamedTrace>) -> Self {
        let pass = verdicts.iter().all(|(_, v)| *v);
        ProbeReport {
            probe: probe.to_string(),
            scalars,
            verdicts,
            pass,
            traces,
        }
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn verdict(&self, name: &str) -> Option<bool> {
        self.verdicts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

fn integrate_set(
    domain: &SpectralDomain,
    states: &[ModalState],
    model: &Model,
    cfg: &IntegratorConfig,
    horizon: f64,
    stride: usize,
) -> Result<Vec<Trajectory>, IntegratorError> {
    states
        .par_iter()
        .map(|s| integrate(domain, s, model, cfg, horizon, stride, &mut []))
        .collect()
}

fn sampling_stride(cfg: &IntegratorConfig, horizon: f64, target_samples: usize) -> usize {
    let steps = (horizon / cfg.dt).round() as usize;
    (steps / target_samples.max(1)).max(1)
}

fn least_squares_slope(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len() as f64;
    if times.len() < 2 {
        return 0.0;
    }
    let tm = times.iter().sum::<f64>() / n;
    let vm = values.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, v) in times.iter().zip(values) {
        num += (t - tm) * (v - vm);
        den += (t - tm) * (t - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Integrates the ensemble and measures the empirical absorbing ball: the
/// late-time sup of the phase-space norm, per-trajectory entry times into
/// the slightly inflated ball, and positive invariance after entry.
pub fn dissipativity_probe(
    domain: &SpectralDomain,
    model: &Model,
    cfg: &IntegratorConfig,
    ensemble: &EnsembleSpec,
    horizon: f64,
    ball_margin: f64,
) -> Result<ProbeReport, ExperimentError> {
    ensemble.validate()?;
    let states = sample_ensemble(domain, ensemble);
    let stride = sampling_stride(cfg, horizon, 2000);
    let trajectories = integrate_set(domain, &states, model, cfg, horizon, stride)?;

    let mut r_emp: f64 = 0.0;
    let norms: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|traj| {
            traj.states
                .iter()
                .map(|s| domain.energy_norm(s))
                .collect::<Vec<_>>()
        })
        .collect();
    for (traj, ns) in trajectories.iter().zip(&norms) {
        for (t, n) in traj.times.iter().zip(ns) {
            if *t >= horizon / 2.0 {
                r_emp = r_emp.max(*n);
            }
        }
    }
    let ball = (1.0 + ball_margin) * r_emp;

    let mut entry_times = Vec::new();
    let mut exits = 0usize;
    let mut all_entered = true;
    let mut traces = Vec::new();
    for (i, (traj, ns)) in trajectories.iter().zip(&norms).enumerate() {
        let mut entry: Option<f64> = None;
        for (t, n) in traj.times.iter().zip(ns) {
            match entry {
                None if *n <= ball => entry = Some(*t),
                Some(_) if *n > ball => exits += 1,
                _ => {}
            }
        }
        if entry.is_none() {
            all_entered = false;
        }
        entry_times.push(entry.unwrap_or(f64::INFINITY));
        let mut tr = NamedTrace::new(format!("traj_{i:03}"), &["t", "e_norm"], &["time", "1"]);
        for (t, n) in traj.times.iter().zip(ns) {
            tr.push(vec![*t, *n]);
        }
        traces.push(tr);
    }
    let max_entry = entry_times.iter().copied().fold(0.0f64, f64::max);

    Ok(ProbeReport::build(
        "dissipativity",
        vec![
            ("r_emp".into(), r_emp),
            ("ball_radius".into(), ball),
            ("max_entry_time".into(), max_entry),
            ("exit_count".into(), exits as f64),
        ],
        vec![
            ("all_entered".into(), all_entered),
            ("no_reexit".into(), exits == 0),
        ],
        traces,
    ))
}

/// Strong-norm analogue: bounded `ℰ¹` traces with a vanishing late-time
/// growth trend, measured by a least-squares slope over the second half.
pub fn e1_dissipativity_probe(
    domain: &SpectralDomain,
    model: &Model,
    cfg: &IntegratorConfig,
    ensemble: &EnsembleSpec,
    horizon: f64,
    slope_tol: f64,
) -> Result<ProbeReport, ExperimentError> {
    ensemble.validate()?;
    let states = sample_ensemble(domain, ensemble);
    let stride = sampling_stride(cfg, horizon, 2000);
    let trajectories = integrate_set(domain, &states, model, cfg, horizon, stride)?;

    let mut r1_emp: f64 = 0.0;
    let mut worst_slope = f64::NEG_INFINITY;
    let mut traces = Vec::new();
    let mut all_finite = true;
    for (i, traj) in trajectories.iter().enumerate() {
        let e1: Vec<f64> = traj.states.iter().map(|s| domain.e1_norm(s)).collect();
        all_finite &= e1.iter().all(|x| x.is_finite());
        let half = traj.times.len() / 2;
        for (t, n) in traj.times.iter().zip(&e1) {
            if *t >= horizon / 2.0 {
                r1_emp = r1_emp.max(*n);
            }
        }
        let slope = least_squares_slope(&traj.times[half..], &e1[half..]);
        worst_slope = worst_slope.max(slope);
        let mut tr = NamedTrace::new(format!("traj_{i:03}"), &["t", "e1_norm"], &["time", "1"]);
        for (t, n) in traj.times.iter().zip(&e1) {
            tr.push(vec![*t, *n]);
        }
        traces.push(tr);
    }

    Ok(ProbeReport::build(
        "dissipativity_e1",
        vec![
            ("r1_emp".into(), r1_emp),
            ("worst_late_slope".into(), worst_slope),
        ],
        vec![
            ("bounded".into(), all_finite),
            ("slope_ok".into(), worst_slope <= slope_tol),
        ],
        traces,
    ))
}

/// Separation growth of trajectory pairs: `ρ(t)` per pair, a shared
/// exponential rate `L_emp`, and the verdict that one rate covers all pairs.
pub fn lipschitz_probe(
    domain: &SpectralDomain,
    model: &Model,
    cfg: &IntegratorConfig,
    pairs: &[(ModalState, ModalState)],
    horizon: f64,
) -> Result<ProbeReport, ExperimentError> {
    for (i, (a, b)) in pairs.iter().enumerate() {
        if domain.state_distance(a, b) == 0.0 {
            return Err(ExperimentError::ZeroSeparation(i));
        }
    }
    let stride = sampling_stride(cfg, horizon, 1000);
    let flat: Vec<ModalState> = pairs
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    let trajectories = integrate_set(domain, &flat, model, cfg, horizon, stride)?;

    let mut l_emp = f64::NEG_INFINITY;
    let mut rhos: Vec<Vec<f64>> = Vec::new();
    let times = trajectories[0].times.clone();
    for pair in trajectories.chunks(2) {
        let (ta, tb) = (&pair[0], &pair[1]);
        let sep0 = domain.state_distance(&ta.states[0], &tb.states[0]);
        let rho: Vec<f64> = ta
            .states
            .iter()
            .zip(&tb.states)
            .map(|(a, b)| domain.state_distance(a, b) / sep0)
            .collect();
        for (t, r) in times.iter().zip(&rho) {
            if *t > 0.0 && *r > 0.0 {
                l_emp = l_emp.max(r.ln() / t);
            }
        }
        rhos.push(rho);
    }

    let tol = 0.01;
    let mut covered = true;
    for rho in &rhos {
        for (t, r) in times.iter().zip(rho) {
            if *r > (l_emp * t).exp() * (1.0 + tol) {
                covered = false;
            }
        }
    }

    let mut traces = Vec::new();
    for (i, rho) in rhos.iter().enumerate() {
        let mut tr = NamedTrace::new(format!("pair_{i:03}"), &["t", "rho"], &["time", "1"]);
        for (t, r) in times.iter().zip(rho) {
            tr.push(vec![*t, *r]);
        }
        traces.push(tr);
    }
    Ok(ProbeReport::build(
        "lipschitz",
        vec![("l_emp".into(), l_emp)],
        vec![
            ("finite_rate".into(), l_emp.is_finite()),
            ("one_rate_covers_all".into(), covered),
        ],
        traces,
    ))
}

/// Outcome of the quasi-stability fit for one batch of pairs.
#[derive(Debug, Clone)]
pub struct QuasistabilityFit {
    pub gamma0: f64,
    pub t_star: f64,
    /// `(‖ξ_w(T)‖²_{ℰ¹} − (η²/16)‖ξ_w(0)‖²_{ℰ¹}) / ∫₀ᵀ ‖ξ_w‖²_ℰ dt` per pair.
    pub mu_per_pair: Vec<f64>,
    /// Max over pairs — the fitted compactness coefficient.
    pub mu_emp: f64,
}

/// Default contraction rate `min{1, √λ₁/2, J₀/2}`.
pub fn default_gamma0(domain: &SpectralDomain, model: &Model) -> f64 {
    1.0f64
        .min(domain.lambda1().sqrt() / 2.0)
        .min(model.damping.j0() / 2.0)
}

/// Difference-of-trajectories contraction test at the horizon
/// `T = ln(48/η)/γ₀`: the strong-norm endpoint must be covered by an
/// `η²/16` head plus a weak-norm tail integral with a finite coefficient.
pub fn quasistability_probe(
    domain: &SpectralDomain,
    model: &Model,
    cfg: &IntegratorConfig,
    pairs: &[(ModalState, ModalState)],
    eta: f64,
    gamma0: Option<f64>,
) -> Result<(ProbeReport, QuasistabilityFit), ExperimentError> {
    if !(0.0 < eta && eta < 1.0) {
        return Err(ExperimentError::BadParameters(
            "eta must lie in (0, 1)".into(),
        ));
    }
    for (i, (a, b)) in pairs.iter().enumerate() {
        if domain.state_distance(a, b) == 0.0 {
            return Err(ExperimentError::ZeroSeparation(i));
        }
    }
    let gamma0 = gamma0.unwrap_or_else(|| default_gamma0(domain, model));
    if gamma0 <= 0.0 {
        return Err(ExperimentError::BadParameters(
            "gamma0 must be positive (degenerate laws have J0 = 0)".into(),
        ));
    }
    let t_star = (48.0 / eta).ln() / gamma0;
    let stride = sampling_stride(cfg, t_star, 2000);
    let flat: Vec<ModalState> = pairs
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    let trajectories = integrate_set(domain, &flat, model, cfg, t_star, stride)?;

    let mut mu_per_pair = Vec::new();
    let mut traces = Vec::new();
    for (i, pair) in trajectories.chunks(2).enumerate() {
        let (ta, tb) = (&pair[0], &pair[1]);
        let diff = |a: &ModalState, b: &ModalState| ModalState {
            u: a.u.sub(&b.u),
            v: a.v.sub(&b.v),
            t: a.t,
        };
        let w0 = diff(&ta.states[0], &tb.states[0]);
        let w_end = diff(ta.final_state(), tb.final_state());
        let lhs = domain.e1_norm(&w_end).powi(2);
        let head = eta * eta / 16.0 * domain.e1_norm(&w0).powi(2);
        // trapezoid of the weak-norm square over the samples
        let mut tail = 0.0;
        let mut tr = NamedTrace::new(
            format!("pair_{i:03}"),
            &["t", "e_dist_sq", "e1_dist"],
            &["time", "1", "1"],
        );
        let mut prev: Option<(f64, f64)> = None;
        for ((t, a), b) in ta.times.iter().zip(&ta.states).zip(&tb.states) {
            let d = domain.state_distance(a, b);
            let dsq = d * d;
            if let Some((tp, vp)) = prev {
                tail += 0.5 * (vp + dsq) * (t - tp);
            }
            prev = Some((*t, dsq));
            tr.push(vec![*t, dsq, domain.e1_norm(&diff(a, b))]);
        }
        mu_per_pair.push((lhs - head) / tail);
        traces.push(tr);
    }
    let mu_emp = mu_per_pair.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fit = QuasistabilityFit {
        gamma0,
        t_star,
        mu_per_pair: mu_per_pair.clone(),
        mu_emp,
    };
    let report = ProbeReport::build(
        "quasistability",
        vec![
            ("gamma0".into(), gamma0),
            ("t_star".into(), t_star),
            ("mu_emp".into(), mu_emp),
        ],
        vec![("mu_finite".into(), mu_emp.is_finite())],
        traces,
    );
    Ok((report, fit))
}

/// Long-run probe of the limit set: unstable-manifold seeds plus a random
/// ensemble, tail verdicts on the velocity decay and on the distance to the
/// (tail-augmented) stationary set, and strong-norm boundedness of tails.
#[allow(clippy::too_many_arguments)]
pub fn attractor_probe(
    domain: &SpectralDomain,
    model: &Model,
    cfg: &IntegratorConfig,
    equilibria: &EquilibriumSet,
    ensemble: &EnsembleSpec,
    horizon: f64,
    burn_in: Option<f64>,
    tail_tol: f64,
) -> Result<(ProbeReport, EquilibriumSet), ExperimentError> {
    if equilibria.members.is_empty() {
        return Err(ExperimentError::NeedEquilibria);
    }
    let burn_in = burn_in.unwrap_or(horizon / 2.0);
    let mut starts: Vec<ModalState> = Vec::new();
    for eq in &equilibria.members {
        if eq.morse_index > 0 {
            let delta = steady::default_seed_delta(domain, eq);
            starts.extend(steady::unstable_seeds(domain, eq, delta).expect("unstable index > 0"));
        }
    }
    starts.extend(sample_ensemble(domain, ensemble));

    let stride = sampling_stride(cfg, horizon, 2000);
    let trajectories = integrate_set(domain, &starts, model, cfg, horizon, stride)?;

    // refresh the stationary set from trajectory tails before any verdict:
    // an incomplete set would inflate every distance
    let mut set = equilibria.clone();
    for traj in &trajectories {
        let tail_u = traj.final_state().u.clone();
        if let Ok(eq) = steady::solve_equilibrium(domain, model, &tail_u, 1e-12) {
            let dup = set.members.iter().any(|m| {
                domain.hs_norm(&m.u_star.sub(&eq.u_star), 1.0) < steady::DEDUP_DISTANCE
            });
            if !dup {
                set.members.push(eq);
            }
        }
    }

    let tail_start = 0.9 * horizon;
    let mut max_tail_dist: f64 = 0.0;
    let mut max_tail_vel: f64 = 0.0;
    let mut tail_sup_e1: f64 = 0.0;
    let mut traces = Vec::new();
    for (i, traj) in trajectories.iter().enumerate() {
        let mut tr = NamedTrace::new(
            format!("traj_{i:03}"),
            &["t", "dist_to_stationary", "v_neg_norm", "e1_norm"],
            &["time", "1", "1", "1"],
        );
        for (t, s) in traj.times.iter().zip(&traj.states) {
            if *t < burn_in {
                continue;
            }
            let dist = set.distance(domain, s);
            let vneg = diagnostics::negative_norm_velocity(domain, s, 1.0);
            let e1 = domain.e1_norm(s);
            if *t >= tail_start {
                max_tail_dist = max_tail_dist.max(dist);
                max_tail_vel = max_tail_vel.max(vneg);
                tail_sup_e1 = tail_sup_e1.max(e1);
            }
            tr.push(vec![*t, dist, vneg, e1]);
        }
        traces.push(tr);
    }
    let eq_max_e1 = set.max_e1_norm(domain);

    let report = ProbeReport::build(
        "attractor",
        vec![
            ("max_tail_dist".into(), max_tail_dist),
            ("max_tail_velocity_neg_norm".into(), max_tail_vel),
            ("tail_sup_e1".into(), tail_sup_e1),
            ("equilibria_max_e1".into(), eq_max_e1),
            ("equilibria_count".into(), set.members.len() as f64),
        ],
        vec![
            ("velocity_decays".into(), max_tail_vel <= tail_tol),
            ("tails_reach_stationary_set".into(), max_tail_dist <= tail_tol),
        ],
        traces,
    );
    Ok((report, set))
}

/// Re-solves the same initial data under increasing mode counts and checks
/// that the phase-space distance between consecutive resolutions decreases.
pub fn galerkin_convergence_probe(
    dim: usize,
    padding: f64,
    n_list: &[usize],
    build: &(dyn Fn(&SpectralDomain) -> (Model, ModalState) + Sync),
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<ProbeReport, ExperimentError> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::BadParameters(
            "n_list must be strictly increasing with at least two entries".into(),
        ));
    }
    let runs: Vec<(SpectralDomain, ModalState)> = n_list
        .par_iter()
        .map(|&n| {
            let domain = crate::spectral::build_domain(dim, n, padding)
                .map_err(IntegratorError::Spectral)?;
            let (model, state0) = build(&domain);
            let steps = (horizon / cfg.dt).round() as usize;
            let traj = integrate(&domain, &state0, &model, cfg, horizon, steps.max(1), &mut [])?;
            Ok((domain, traj.final_state().clone()))
        })
        .collect::<Result<_, IntegratorError>>()?;

    let mut distances = Vec::new();
    for w in runs.windows(2) {
        let (coarse_dom, coarse_state) = &w[0];
        let (fine_dom, fine_state) = &w[1];
        let u = fine_dom.embed_from(coarse_dom, &coarse_state.u).unwrap();
        let v = fine_dom.embed_from(coarse_dom, &coarse_state.v).unwrap();
        let embedded = ModalState::new(u, v, coarse_state.t);
        distances.push(fine_dom.state_distance(&embedded, fine_state));
    }
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);

    let mut tr = NamedTrace::new("refinement", &["n_coarse", "distance"], &["modes", "1"]);
    for (n, d) in n_list.iter().zip(&distances) {
        tr.push(vec![*n as f64, *d]);
    }
    let mut scalars: Vec<(String, f64)> = Vec::new();
    for (n, d) in n_list.iter().zip(&distances) {
        scalars.push((format!("distance_n{n}"), *d));
    }
    Ok(ProbeReport::build(
        "convergence",
        scalars,
        vec![("distances_decrease".into(), monotone)],
        vec![tr],
    ))
}

/// Convenience: equilibria for a model with the default multistart.
pub fn default_equilibria(domain: &SpectralDomain, model: &Model, seed: u64) -> EquilibriumSet {
    steady::find_equilibria(
        domain,
        model,
        &MultistartSpec {
            seed,
            ..MultistartSpec::default()
        },
    )
}
