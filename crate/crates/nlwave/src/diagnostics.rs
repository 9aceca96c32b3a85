//! Scalar functionals and identities evaluated along discrete trajectories:
//! the energy functional and its balance ledger, descent of the Lyapunov
//! functional, dissipation integrals, negative-order velocity norms, the
//! windowed `L⁴L¹²` norm, and multiplier-perturbed energies.
//!
//! The potential `⟨G(u),1⟩` and the `L¹²` norm have no closed modal form and
//! use the padded-grid quadrature. For polynomial `G` of degree `q+1 ≤ 6`
//! and padding 3 that quadrature is exact on band-limited fields (the
//! integrand is a trigonometric polynomial below the quadrature's exactness
//! degree and vanishes at the boundary); the `L¹²` integrand is not, and its
//! quadrature error is accepted and documented rather than eliminated.

use crate::integrator::Trajectory;
use crate::model::Model;
use crate::spectral::{Field, ModalState, SpectralDomain};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("window [{0}, {1}] outside trajectory span")]
    WindowOutOfRange(f64, f64),
    #[error("multiplier weight rho = {rho} outside [0, sqrt(lambda_1)] = [0, {max}]")]
    RhoOutOfRange { rho: f64, max: f64 },
}

/// Instantaneous energy decomposition plus the running balance ledger.
#[derive(Debug, Clone, Copy)]
pub struct EnergyReport {
    pub t: f64,
    /// `‖ξ‖²_ℰ = ‖u‖²_{H¹} + ‖v‖²`
    pub e_norm_sq: f64,
    /// `2⟨G(u), 1⟩` by grid quadrature
    pub potential: f64,
    /// `2⟨h, u⟩`
    pub forcing_term: f64,
    /// `ℰ_u = e_norm_sq + potential − forcing_term`
    pub e_u: f64,
    /// Lyapunov functional; identical value to `e_u` by its defining role.
    pub phi: f64,
    /// `D(t) = Σ 2σ‖v_mid‖² dt` accumulated by the integrator
    pub cumulative_dissipation: f64,
    /// `(ℰ_u(t) + D(t) − ℰ_u(0)) / max(1, |ℰ_u(0)|)`
    pub identity_residual: f64,
}

/// Grid quadrature of `∫ F(u(x)) dx` over the box.
pub fn grid_quadrature(domain: &SpectralDomain, u: &Field, f: impl Fn(f64) -> f64) -> f64 {
    let grid = domain.to_grid(u).expect("field sized for domain");
    let w = domain.quad_weight();
    grid.iter().map(|&g| f(g)).sum::<f64>() * w
}

/// Instantaneous energy at a state (ledger fields zero).
pub fn energy(domain: &SpectralDomain, state: &ModalState, model: &Model) -> EnergyReport {
    let e_norm_sq = domain.energy_norm_sq(state);
    let potential = 2.0 * grid_quadrature(domain, &state.u, |s| model.nonlinearity.big_g(s));
    let forcing_term = 2.0 * model.forcing.h.dot(&state.u);
    let e_u = e_norm_sq + potential - forcing_term;
    EnergyReport {
        t: state.t,
        e_norm_sq,
        potential,
        forcing_term,
        e_u,
        phi: e_u,
        cumulative_dissipation: 0.0,
        identity_residual: 0.0,
    }
}

/// Energy reports at every sample of a trajectory, with the dissipation
/// ledger and the normalized balance residual filled in.
pub fn energy_ledger(
    domain: &SpectralDomain,
    traj: &Trajectory,
    model: &Model,
) -> Vec<EnergyReport> {
    let mut out = Vec::with_capacity(traj.len());
    let mut e0 = 0.0;
    for (i, state) in traj.states.iter().enumerate() {
        let mut report = energy(domain, state, model);
        report.cumulative_dissipation = traj.cum_dissipation[i];
        if i == 0 {
            e0 = report.e_u;
        }
        report.identity_residual =
            (report.e_u + report.cumulative_dissipation - e0) / e0.abs().max(1.0);
        out.push(report);
    }
    out
}

/// Normalized residual of the energy balance over the whole trajectory.
pub fn energy_identity_residual(domain: &SpectralDomain, traj: &Trajectory, model: &Model) -> f64 {
    energy_ledger(domain, traj, model)
        .last()
        .map(|r| r.identity_residual)
        .unwrap_or(0.0)
}

/// Lyapunov trace along a trajectory with the monotonicity verdict.
#[derive(Debug, Clone)]
pub struct LyapunovTrace {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    /// Allowed per-interval uptick: 10x the scheme residual scale
    /// `dt²(1 + |Φ(0)|)`.
    pub tol_mono: f64,
    /// Largest observed increase between consecutive samples.
    pub max_uptick: f64,
    pub monotone: bool,
    /// `|ΔΦ_total + D_total|`, the cumulative descent-vs-dissipation defect.
    pub descent_defect: f64,
}

pub fn lyapunov_trace(domain: &SpectralDomain, traj: &Trajectory, model: &Model) -> LyapunovTrace {
    let ledger = energy_ledger(domain, traj, model);
    let phi: Vec<f64> = ledger.iter().map(|r| r.phi).collect();
    let tol_mono = 10.0 * traj.dt * traj.dt * (1.0 + phi.first().copied().unwrap_or(0.0).abs());
    let mut max_uptick: f64 = 0.0;
    for pair in phi.windows(2) {
        max_uptick = max_uptick.max(pair[1] - pair[0]);
    }
    let descent_defect = if phi.len() > 1 {
        let dphi = phi.last().unwrap() - phi[0];
        let dd = traj.cum_dissipation.last().unwrap() - traj.cum_dissipation[0];
        (dphi + dd).abs()
    } else {
        0.0
    };
    LyapunovTrace {
        times: traj.times.clone(),
        phi,
        tol_mono,
        max_uptick,
        monotone: max_uptick <= tol_mono,
        descent_defect,
    }
}

/// Running trapezoid values of `∫ ‖v(t)‖^{2p+2} dt` over the sample times.
pub fn dissipation_integral(traj: &Trajectory, p: f64) -> Vec<f64> {
    let vals: Vec<f64> = traj
        .states
        .iter()
        .map(|s| s.v.dot(&s.v).powf(p + 1.0))
        .collect();
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..vals.len() {
        let dt = traj.times[i] - traj.times[i - 1];
        acc += 0.5 * (vals[i] + vals[i - 1]) * dt;
        out.push(acc);
    }
    out
}

/// `‖v‖_{H^{−ς}}` for `ς ∈ (0, 1]`.
pub fn negative_norm_velocity(domain: &SpectralDomain, state: &ModalState, sigma_exp: f64) -> f64 {
    domain.hs_norm(&state.v, -sigma_exp)
}

/// `L¹²` norm of a field by grid quadrature.
pub fn l12_norm(domain: &SpectralDomain, u: &Field) -> f64 {
    grid_quadrature(domain, u, |s| s.powi(12)).powf(1.0 / 12.0)
}

/// Windowed space-time norm `(∫_{t1}^{t2} ‖u(t)‖⁴_{L¹²} dt)^{1/4}` with the
/// integrand interpolated linearly at the window ends.
pub fn strichartz_norm(
    domain: &SpectralDomain,
    traj: &Trajectory,
    window: (f64, f64),
) -> Result<f64, DiagnosticsError> {
    let (t1, t2) = window;
    let span = (traj.times[0], *traj.times.last().unwrap());
    if t1 < span.0 - 1e-12 || t2 > span.1 + 1e-12 || t1 > t2 {
        return Err(DiagnosticsError::WindowOutOfRange(t1, t2));
    }
    let vals: Vec<f64> = traj
        .states
        .iter()
        .map(|s| l12_norm(domain, &s.u).powi(4))
        .collect();
    let at = |t: f64| -> f64 {
        match traj.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => vals[i],
            Err(i) => {
                let (i0, i1) = (i - 1, i);
                let w = (t - traj.times[i0]) / (traj.times[i1] - traj.times[i0]);
                vals[i0] * (1.0 - w) + vals[i1] * w
            }
        }
    };
    let mut acc = 0.0;
    let mut t_prev = t1;
    let mut v_prev = at(t1);
    for (i, &t) in traj.times.iter().enumerate() {
        if t <= t1 || t >= t2 {
            continue;
        }
        acc += 0.5 * (v_prev + vals[i]) * (t - t_prev);
        t_prev = t;
        v_prev = vals[i];
    }
    acc += 0.5 * (v_prev + at(t2)) * (t2 - t_prev);
    Ok(acc.powf(0.25))
}

/// Multiplier-perturbed energy `ℰ_u^ϱ` and its decomposition terms.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedEnergyReport {
    pub rho: f64,
    /// `‖ξ‖²_ℰ + 2⟨G(u),1⟩ + ϱ⟨v,u⟩ − 2⟨h,u⟩`
    pub e_rho: f64,
    /// Plain energy `ℰ_u` for comparison; `e_rho == e_u` at `ϱ = 0`.
    pub e_u: f64,
    /// Damping/coercivity quadratic form of the perturbed balance.
    pub q_term: f64,
    /// Source structure term `ϱ⟨g(u),u⟩ − (ϱ/2)⟨G(u),1⟩`.
    pub g_term: f64,
    /// Forcing term `−(ϱ/2)⟨h,u⟩`.
    pub i_term: f64,
}

/// Evaluates the perturbed energy with multiplier weight `ϱ`, guarded to
/// `0 ≤ ϱ ≤ √λ₁` where the perturbation stays norm-equivalent.
pub fn perturbed_energy(
    domain: &SpectralDomain,
    state: &ModalState,
    model: &Model,
    rho: f64,
) -> Result<PerturbedEnergyReport, DiagnosticsError> {
    let max = domain.lambda1().sqrt();
    if !(0.0..=max).contains(&rho) {
        return Err(DiagnosticsError::RhoOutOfRange { rho, max });
    }
    let base = energy(domain, state, model);
    let vu = state.v.dot(&state.u);
    let e_rho = base.e_norm_sq + base.potential + rho * vu - base.forcing_term;

    let vv = state.v.dot(&state.v);
    let (sigma, _) =
        crate::model::eval_damping(&model.damping, vv).expect("norm squared is non-negative");
    let u_h1_sq = {
        let n = domain.hs_norm(&state.u, 1.0);
        n * n
    };
    let q_term = (2.0 * sigma - 1.25 * rho) * vv + 0.75 * rho * u_h1_sq + rho * sigma * vu
        - 0.25 * rho * rho * vu;
    let gu = crate::integrator::g_modal(domain, model, &state.u);
    let g_term = rho * gu.dot(&state.u) - 0.25 * rho * base.potential;
    let i_term = -0.25 * rho * base.forcing_term;

    Ok(PerturbedEnergyReport {
        rho,
        e_rho,
        e_u: base.e_u,
        q_term,
        g_term,
        i_term,
    })
}

/// `(‖u‖²_{H²} + ‖v‖²_{H¹})^{1/2}`, the strong phase-space norm.
pub fn e1_norm(domain: &SpectralDomain, state: &ModalState) -> f64 {
    domain.e1_norm(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegratorConfig};
    use crate::model::{DampingLaw, Forcing, Model, Nonlinearity};
    use crate::spectral::{build_domain, Field, ModalState};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn model(domain: &crate::spectral::SpectralDomain, law: DampingLaw, nl: Nonlinearity) -> Model {
        Model::new(
            law,
            nl,
            Forcing {
                h: Field::zeros(domain),
            },
        )
        .unwrap()
    }

    /// Composite Simpson quadrature, the reference for grid quadratures.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn energy_examples() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(
            &domain,
            DampingLaw::Hyperbolic { a: 1.0, b: 2.0 },
            Nonlinearity::OddPower { q: 5 },
        );
        let zero = ModalState::zeros(&domain);
        assert_eq!(energy(&domain, &zero, &m).e_u, 0.0);

        let v_only = ModalState::new(Field::zeros(&domain), Field::basis(&domain, &[1]), 0.0);
        assert!(close(energy(&domain, &v_only, &m).e_u, 1.0, 1e-13));

        // u = e1: E_u = 1 + 2∫ G(sqrt(2/π) sin x) dx, pinned against a
        // 10^6-point Simpson oracle of the closed-form integrand
        let u_only = ModalState::new(Field::basis(&domain, &[1]), Field::zeros(&domain), 0.0);
        let amp = (2.0 / std::f64::consts::PI).sqrt();
        let oracle = simpson(
            |x| (amp * x.sin()).powi(6) / 6.0,
            0.0,
            std::f64::consts::PI,
            1_000_000,
        );
        let got = energy(&domain, &u_only, &m).e_u;
        assert!(close(got, 1.0 + 2.0 * oracle, 1e-12), "{got}");
    }

    #[test]
    fn ledger_residual_vanishes_for_conservative_runs() {
        let domain = build_domain(1, 4, 3.0).unwrap();
        let m = model(
            &domain,
            DampingLaw::Hyperbolic { a: 1.0, b: 2.0 },
            Nonlinearity::OddPower { q: 5 },
        );
        let mut cfg = IntegratorConfig::midpoint(1e-3);
        cfg.linear_test_mode = true;
        let state = ModalState::new(
            Field::basis(&domain, &[2]),
            Field::basis(&domain, &[1]).scaled(0.5),
            0.0,
        );
        let traj = integrate(&domain, &state, &m, &cfg, 5.0, 10, &mut []).unwrap();
        // linear test mode discards g, so compare using a matching-model view
        let mut linear = m.clone();
        linear.nonlinearity = Nonlinearity::CustomOddPolynomial {
            coeffs: vec![0.0],
            constants: m.constants,
        };
        let res = energy_identity_residual(&domain, &traj, &linear);
        assert!(res.abs() < 1e-10, "residual {res}");
    }

    #[test]
    fn lyapunov_trace_flags_descent() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(
            &domain,
            DampingLaw::ShiftedPower {
                epsilon: 0.5,
                p: 2.0,
            },
            Nonlinearity::OddPower { q: 5 },
        );
        let cfg = IntegratorConfig::midpoint(1e-3);
        let state = ModalState::new(
            Field::basis(&domain, &[1]),
            Field::basis(&domain, &[2]).scaled(0.3),
            0.0,
        );
        let traj = integrate(&domain, &state, &m, &cfg, 3.0, 20, &mut []).unwrap();
        let trace = lyapunov_trace(&domain, &traj, &m);
        assert!(trace.monotone);
        // strictly decreasing well beyond tolerance somewhere
        assert!(trace.phi[0] - trace.phi.last().unwrap() > 100.0 * trace.tol_mono);
        assert!(trace.descent_defect < 1e-6 * (1.0 + trace.phi[0].abs()));
    }

    #[test]
    fn dissipation_integral_examples() {
        let domain = build_domain(1, 2, 3.0).unwrap();
        let m = model(
            &domain,
            DampingLaw::Constant { gamma: 1.0 },
            Nonlinearity::OddPower { q: 3 },
        );
        let mut cfg = IntegratorConfig::midpoint(1e-4);
        cfg.linear_test_mode = true;
        // v ≡ 0 trajectory
        let rest = ModalState::zeros(&domain);
        let traj0 = integrate(&domain, &rest, &m, &cfg, 0.5, 10, &mut []).unwrap();
        assert!(dissipation_integral(&traj0, 1.0).iter().all(|&x| x == 0.0));

        // closed-form damped mode: u'' + u' + u = 0, v(t) known analytically
        let state = ModalState::new(Field::basis(&domain, &[1]), Field::zeros(&domain), 0.0);
        let traj = integrate(&domain, &state, &m, &cfg, 1.0, 1, &mut []).unwrap();
        let got = *dissipation_integral(&traj, 0.0).last().unwrap();
        let om = 3f64.sqrt() / 2.0;
        let v_exact = |t: f64| -(-0.5 * t).exp() * (om * t).sin() / om;
        let oracle = simpson(|t| v_exact(t) * v_exact(t), 0.0, 1.0, 1_000_000);
        assert!(close(got, oracle, 1e-6), "{got} vs {oracle}");
    }

    #[test]
    fn negative_norm_examples() {
        let domain = build_domain(1, 4, 3.0).unwrap();
        let state = ModalState::new(Field::zeros(&domain), Field::basis(&domain, &[2]), 0.0);
        assert!(close(
            negative_norm_velocity(&domain, &state, 1.0),
            0.5,
            1e-14
        ));
        let zero = ModalState::zeros(&domain);
        assert_eq!(negative_norm_velocity(&domain, &zero, 1.0), 0.0);
        // dominated by the plain L² norm for every ς in (0,1]
        for s in [0.1, 0.5, 1.0] {
            assert!(
                negative_norm_velocity(&domain, &state, s) <= domain.hs_norm(&state.v, 0.0) + 1e-15
            );
        }
    }

    #[test]
    fn strichartz_norm_examples() {
        let domain = build_domain(1, 4, 3.0).unwrap();
        let m = model(
            &domain,
            DampingLaw::Hyperbolic { a: 1.0, b: 2.0 },
            Nonlinearity::OddPower { q: 5 },
        );
        // static field: hold u = e1 fixed along a fake trajectory
        let state = ModalState::new(Field::basis(&domain, &[1]), Field::zeros(&domain), 0.0);
        let mut traj = integrate(
            &domain,
            &ModalState::zeros(&domain),
            &m,
            &IntegratorConfig::midpoint(0.05),
            2.0,
            1,
            &mut [],
        )
        .unwrap();
        for s in traj.states.iter_mut() {
            s.u = state.u.clone();
        }
        let amp = (2.0 / std::f64::consts::PI).sqrt();
        let oracle_l12 = simpson(
            |x| (amp * x.sin()).powi(12),
            0.0,
            std::f64::consts::PI,
            1_000_000,
        )
        .powf(1.0 / 12.0);
        let one = strichartz_norm(&domain, &traj, (0.0, 1.0)).unwrap();
        assert!(close(one, oracle_l12, 1e-10), "{one} vs {oracle_l12}");
        // doubling a static window scales by 2^{1/4}
        let two = strichartz_norm(&domain, &traj, (0.0, 2.0)).unwrap();
        assert!(close(two / one, 2f64.powf(0.25), 1e-12));
        // zero field
        let zero_traj = {
            let mut t = traj.clone();
            for s in t.states.iter_mut() {
                s.u = Field::zeros(&domain);
            }
            t
        };
        assert_eq!(
            strichartz_norm(&domain, &zero_traj, (0.0, 2.0)).unwrap(),
            0.0
        );
        assert!(strichartz_norm(&domain, &traj, (0.0, 3.0)).is_err());
    }

    #[test]
    fn perturbed_energy_examples() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(
            &domain,
            DampingLaw::Hyperbolic { a: 1.0, b: 2.0 },
            Nonlinearity::OddPower { q: 5 },
        );
        let e1 = Field::basis(&domain, &[1]);
        let state = ModalState::new(e1.clone(), e1.clone(), 0.0);
        let r0 = perturbed_energy(&domain, &state, &m, 0.0).unwrap();
        assert!(close(r0.e_rho, r0.e_u, 1e-14));
        let r = perturbed_energy(&domain, &state, &m, 0.1).unwrap();
        assert!(close(r.e_rho - r0.e_rho, 0.1, 1e-13));
        assert!(perturbed_energy(&domain, &state, &m, 1.5).is_err());
    }

    #[test]
    fn perturbed_energy_norm_equivalence_scan() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(
            &domain,
            DampingLaw::Hyperbolic { a: 1.0, b: 2.0 },
            Nonlinearity::OddPower { q: 5 },
        );
        let rho = 0.3;
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..1000 {
            let mut u = Field::zeros(&domain);
            let mut v = Field::zeros(&domain);
            for c in u.coeffs.iter_mut().chain(v.coeffs.iter_mut()) {
                *c = next();
            }
            let state = ModalState::new(u, v, 0.0);
            let r = perturbed_energy(&domain, &state, &m, rho).unwrap();
            let bound = rho * domain.energy_norm_sq(&state) / domain.lambda1().sqrt();
            assert!((r.e_rho - r.e_u).abs() <= bound + 1e-13);
        }
    }
}
