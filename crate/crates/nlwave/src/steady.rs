//! The stationary set: equilibria `Λu + P_N g(u) = P_N h`, their linearized
//! spectra, and seed states for tracing the unstable manifold.
//!
//! Newton iterates on the modal residual with the symmetric Jacobian
//! `Λ + P_N g'(u)·` solved by conjugate-residual inner iterations; inner
//! breakdown is reported, never silently regularized. At an equilibrium the
//! velocity vanishes, so the linearized damping coefficient is exactly
//! `J₀ = J(0)` and the derivative term of the nonlocal coefficient drops
//! out; degenerate laws (`J₀ = 0`) are refused by `linearize` since the
//! first-order blocks then lose their damped structure.

use crate::krylov::conjugate_residual;
use crate::model::Model;
use crate::spectral::{Field, ModalState, SpectralDomain};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SteadyError {
    #[error("Newton failed to reduce the residual below {residual:.3e} in {iters} steps")]
    NewtonDiverged { residual: f64, iters: usize },
    #[error("inner conjugate-residual solver broke down (singular Jacobian)")]
    JacobianSingular,
    #[error("equilibrium has no unstable directions")]
    NoUnstableDirections,
    #[error("linearization needs a non-degenerate damping law (J(0) > 0)")]
    DegenerateDamping,
    #[error("non-finite initial guess")]
    NonFiniteGuess,
}

/// Threshold above which a real part counts toward the Morse index;
/// magnitudes at or below it are reported as center directions.
pub const MORSE_THRESHOLD: f64 = 1e-10;
/// Equilibria closer than this in the phase-space metric are duplicates.
pub const DEDUP_DISTANCE: f64 = 1e-6;

/// One eigenpair of the linearized first-order system
/// `d/dt (w, ẇ) = (ẇ, −Λw − P_N g'(u*)w − J₀ ẇ)`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub mu_re: f64,
    pub mu_im: f64,
    /// Eigenvalue of the symmetric stiffness block `Λ + P_N g'(u*)`.
    pub kappa: f64,
    /// Displacement part of the eigenvector, scaled so `(w, μw)` has unit
    /// phase-space norm.
    pub w: Field,
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub u_star: Field,
    /// `H^{-1}` norm of the stationary residual at `u_star`, relative to
    /// `max(1, ‖u*‖_{H¹})`.
    pub residual: f64,
    /// Count of eigenvalues with real part above [`MORSE_THRESHOLD`].
    pub morse_index: usize,
    /// Count of eigenvalues with `|Re μ| ≤` [`MORSE_THRESHOLD`], reported
    /// separately and never folded into the index.
    pub center_count: usize,
    /// Full spectrum of the first-order block system, sorted by `Re μ`
    /// descending. Empty when the damping law is degenerate.
    pub eigen: Vec<EigenPair>,
    /// Newton residual history, for convergence-order audits.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EquilibriumSet {
    pub members: Vec<Equilibrium>,
}

impl EquilibriumSet {
    /// ℰ-distance from a state to the set, embedding members as `(u*, 0)`.
    pub fn distance(&self, domain: &SpectralDomain, state: &ModalState) -> f64 {
        self.members
            .iter()
            .map(|eq| {
                let member = ModalState::new(eq.u_star.clone(), Field::zeros(domain), 0.0);
                domain.state_distance(state, &member)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_e1_norm(&self, domain: &SpectralDomain) -> f64 {
        self.members
            .iter()
            .map(|eq| domain.hs_norm(&eq.u_star, 2.0))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn stationary_residual(domain: &SpectralDomain, model: &Model, u: &Field) -> Field {
    let mut f = crate::integrator::g_modal(domain, model, u);
    for i in 0..f.coeffs.len() {
        f.coeffs[i] += domain.eigenvalues[i] * u.coeffs[i] - model.forcing.h.coeffs[i];
    }
    f
}

/// Newton iteration on `F(u) = Λu + P_N g(u) − P_N h`, with a halving line
/// search on the `H^{-1}` residual norm.
pub fn solve_equilibrium(
    domain: &SpectralDomain,
    model: &Model,
    guess: &Field,
    tol: f64,
) -> Result<Equilibrium, SteadyError> {
    if !guess.is_finite() {
        return Err(SteadyError::NonFiniteGuess);
    }
    let n = domain.modes_total();
    let mut u = guess.clone();
    let mut history = Vec::new();

    let res_norm = |f: &Field, u: &Field| -> f64 {
        domain.hs_norm(f, -1.0) / domain.hs_norm(u, 1.0).max(1.0)
    };

    let mut residual = stationary_residual(domain, model, &u);
    let mut rnorm = res_norm(&residual, &u);
    history.push(rnorm);

    for _iter in 0..50 {
        if rnorm <= tol {
            return finish(domain, model, u, rnorm, history);
        }

        // J δ = −F with J = Λ + P_N g'(u)·, symmetric
        let grid_u = domain.to_grid(&u).expect("sized field");
        let gp_grid: Vec<f64> = grid_u
            .iter()
            .map(|&g| model.nonlinearity.g_prime(g))
            .collect();
        let mut ws = crate::integrator::StepWorkspace::new(domain);
        let mut apply = |x: &[f64], y: &mut [f64]| {
            apply_stiffness(domain, &gp_grid, x, y, &mut ws);
        };
        let delta = conjugate_residual(&mut apply, &residual.coeffs, 1e-13, 8 * n + 50)
            .ok_or(SteadyError::JacobianSingular)?;

        // line search on the residual norm
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial = u.clone();
            for i in 0..n {
                trial.coeffs[i] -= step * delta[i];
            }
            let trial_res = stationary_residual(domain, model, &trial);
            let trial_norm = res_norm(&trial_res, &trial);
            if trial_norm < rnorm {
                u = trial;
                residual = trial_res;
                rnorm = trial_norm;
                history.push(rnorm);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(SteadyError::NewtonDiverged {
                residual: rnorm,
                iters: history.len(),
            });
        }
    }
    if rnorm <= tol {
        return finish(domain, model, u, rnorm, history);
    }
    Err(SteadyError::NewtonDiverged {
        residual: rnorm,
        iters: history.len(),
    })
}

fn finish(
    domain: &SpectralDomain,
    model: &Model,
    u: Field,
    rnorm: f64,
    history: Vec<f64>,
) -> Result<Equilibrium, SteadyError> {
    let (eigen, morse_index, center_count) = match linearize(domain, model, &u) {
        Ok(t) => t,
        // equilibria exist regardless of the damping; only the spectrum is
        // unavailable for degenerate laws
        Err(SteadyError::DegenerateDamping) => (Vec::new(), 0, 0),
        Err(e) => return Err(e),
    };
    Ok(Equilibrium {
        u_star: u,
        residual: rnorm,
        morse_index,
        center_count,
        eigen,
        residual_history: history,
    })
}

fn apply_stiffness(
    domain: &SpectralDomain,
    gp_grid: &[f64],
    x: &[f64],
    y: &mut [f64],
    ws: &mut crate::integrator::StepWorkspace,
) {
    crate::integrator::gprime_apply(domain, gp_grid, x, y, ws);
    for i in 0..x.len() {
        y[i] += domain.eigenvalues[i] * x[i];
    }
}

/// Spectrum of the linearized first-order system at `u_star`. The symmetric
/// stiffness block `K = Λ + P_N g'(u*)` is diagonalized densely; each of its
/// eigenvalues `κ` yields the pair `μ± = (−J₀ ± sqrt(J₀² − 4κ))/2`.
pub fn linearize(
    domain: &SpectralDomain,
    model: &Model,
    u_star: &Field,
) -> Result<(Vec<EigenPair>, usize, usize), SteadyError> {
    let j0 = model.damping.j0();
    if j0 <= 0.0 {
        return Err(SteadyError::DegenerateDamping);
    }
    let n = domain.modes_total();
    let grid_u = domain.to_grid(u_star).expect("sized field");
    let gp_grid: Vec<f64> = grid_u
        .iter()
        .map(|&g| model.nonlinearity.g_prime(g))
        .collect();

    let mut k_mat = DMatrix::<f64>::zeros(n, n);
    let mut ws = crate::integrator::StepWorkspace::new(domain);
    let mut col = vec![0.0; n];
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        apply_stiffness(domain, &gp_grid, &unit, &mut col, &mut ws);
        unit[j] = 0.0;
        for i in 0..n {
            k_mat[(i, j)] = col[i];
        }
    }
    // enforce exact symmetry against transform round-off
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (k_mat[(i, j)] + k_mat[(j, i)]);
            k_mat[(i, j)] = avg;
            k_mat[(j, i)] = avg;
        }
    }

    let eig = SymmetricEigen::new(k_mat);
    let mut pairs = Vec::with_capacity(2 * n);
    for (j, &kappa) in eig.eigenvalues.iter().enumerate() {
        let disc = j0 * j0 - 4.0 * kappa;
        let roots: [(f64, f64); 2] = if disc >= 0.0 {
            let r = disc.sqrt();
            [((-j0 + r) / 2.0, 0.0), ((-j0 - r) / 2.0, 0.0)]
        } else {
            let r = (-disc).sqrt();
            [(-j0 / 2.0, r / 2.0), (-j0 / 2.0, -r / 2.0)]
        };
        for (mu_re, mu_im) in roots {
            let mut w = Field {
                coeffs: eig.eigenvectors.column(j).iter().copied().collect(),
            };
            // scale so the block vector (w, μw) has unit phase-space norm
            let h1 = domain.hs_norm(&w, 1.0);
            let l2 = domain.hs_norm(&w, 0.0);
            let mu_abs_sq = mu_re * mu_re + mu_im * mu_im;
            let block = (h1 * h1 + mu_abs_sq * l2 * l2).sqrt();
            if block > 0.0 {
                w.scale(1.0 / block);
            }
            pairs.push(EigenPair {
                mu_re,
                mu_im,
                kappa,
                w,
            });
        }
    }
    pairs.sort_by(|a, b| b.mu_re.partial_cmp(&a.mu_re).unwrap());
    let morse = pairs.iter().filter(|p| p.mu_re > MORSE_THRESHOLD).count();
    let centers = pairs
        .iter()
        .filter(|p| p.mu_re.abs() <= MORSE_THRESHOLD)
        .count();
    Ok((pairs, morse, centers))
}

/// Default perturbation size for unstable-manifold seeds.
pub fn default_seed_delta(domain: &SpectralDomain, eq: &Equilibrium) -> f64 {
    1e-4 * domain.hs_norm(&eq.u_star, 1.0).max(1.0)
}

/// Initial conditions `(u* ± δ w, ± δ μ w)` along each unstable direction,
/// tracing heteroclinic orbits of the unstable manifold forward in time.
pub fn unstable_seeds(
    _domain: &SpectralDomain,
    eq: &Equilibrium,
    delta: f64,
) -> Result<Vec<ModalState>, SteadyError> {
    if eq.morse_index == 0 {
        return Err(SteadyError::NoUnstableDirections);
    }
    let mut seeds = Vec::new();
    for pair in eq.eigen.iter().filter(|p| p.mu_re > MORSE_THRESHOLD) {
        for sign in [1.0, -1.0] {
            let mut u = eq.u_star.clone();
            u.axpy(sign * delta, &pair.w);
            let v = pair.w.scaled(sign * delta * pair.mu_re);
            seeds.push(ModalState::new(u, v, 0.0));
        }
    }
    Ok(seeds)
}

#[derive(Debug, Clone)]
pub struct MultistartSpec {
    /// Number of random starts, on top of the structured ones.
    pub count: usize,
    pub amplitude_range: (f64, f64),
    pub seed: u64,
}

impl Default for MultistartSpec {
    fn default() -> Self {
        MultistartSpec {
            count: 8,
            amplitude_range: (0.2, 3.0),
            seed: 1,
        }
    }
}

/// Multistart wrapper: structured `±c·e_k` guesses plus seeded random smooth
/// fields, deduplicated into a canonical, deterministic set. Failed starts
/// are skipped.
pub fn find_equilibria(
    domain: &SpectralDomain,
    model: &Model,
    spec: &MultistartSpec,
) -> EquilibriumSet {
    let mut guesses: Vec<Field> = vec![Field::zeros(domain)];
    let (a_lo, a_hi) = spec.amplitude_range;
    let amps = [a_lo, (a_lo * a_hi).sqrt(), a_hi];
    for k in 1..=domain.modes_per_axis.min(3) {
        let idx = vec![k; domain.dim];
        for amp in amps {
            for sign in [1.0, -1.0] {
                guesses.push(Field::basis(domain, &idx).scaled(sign * amp));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.count {
        let mut f = Field::zeros(domain);
        for (c, &lam) in f.coeffs.iter_mut().zip(&domain.eigenvalues) {
            *c = rng.gen_range(-1.0..1.0) / lam;
        }
        let norm = domain.hs_norm(&f, 1.0);
        if norm > 0.0 {
            let amp = rng.gen_range(a_lo..=a_hi);
            f.scale(amp / norm);
        }
        guesses.push(f);
    }

    let solved: Vec<Option<Equilibrium>> = guesses
        .par_iter()
        .map(|g| solve_equilibrium(domain, model, g, 1e-12).ok())
        .collect();

    let mut members: Vec<Equilibrium> = Vec::new();
    for eq in solved.into_iter().flatten() {
        let dup = members.iter().any(|m| {
            let d = domain.state_distance(
                &ModalState::new(m.u_star.clone(), Field::zeros(domain), 0.0),
                &ModalState::new(eq.u_star.clone(), Field::zeros(domain), 0.0),
            );
            d < DEDUP_DISTANCE
        });
        if !dup {
            members.push(eq);
        }
    }
    members.sort_by(|a, b| {
        let na = domain.hs_norm(&a.u_star, 1.0);
        let nb = domain.hs_norm(&b.u_star, 1.0);
        na.partial_cmp(&nb)
            .unwrap()
            .then_with(|| signature(a).partial_cmp(&signature(b)).unwrap())
    });
    EquilibriumSet { members }
}

fn signature(eq: &Equilibrium) -> f64 {
    eq.u_star
        .coeffs
        .iter()
        .find(|c| c.abs() > 1e-9)
        .copied()
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{step, IntegratorConfig};
    use crate::model::{Forcing, Nonlinearity};
    use crate::spectral::build_domain;

    fn model(domain: &SpectralDomain, nl: Nonlinearity) -> Model {
        Model::new(
            DampingLaw::Hyperbolic { a: 1.0, b: 2.0 },
            nl,
            Forcing {
                h: Field::zeros(domain),
            },
        )
        .unwrap()
    }

    #[test]
    fn monotone_source_has_only_the_trivial_equilibrium() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::OddPower { q: 5 });
        let guess = Field::basis(&domain, &[1]).scaled(0.1);
        let eq = solve_equilibrium(&domain, &m, &guess, 1e-12).unwrap();
        assert!(domain.hs_norm(&eq.u_star, 1.0) < 1e-10);
        assert!(eq.residual <= 1e-12);
        assert_eq!(eq.morse_index, 0);

        let set = find_equilibria(&domain, &m, &MultistartSpec::default());
        assert_eq!(set.members.len(), 1);
    }

    #[test]
    fn manufactured_forcing_recovers_the_target() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let mut m = model(&domain, Nonlinearity::OddPower { q: 5 });
        let e1 = Field::basis(&domain, &[1]);
        let mut h = crate::integrator::g_modal(&domain, &m, &e1);
        for i in 0..h.coeffs.len() {
            h.coeffs[i] += domain.eigenvalues[i] * e1.coeffs[i];
        }
        m.forcing = Forcing { h };
        let guess = e1.scaled(0.9);
        let eq = solve_equilibrium(&domain, &m, &guess, 1e-12).unwrap();
        let diff = eq.u_star.sub(&e1);
        assert!(domain.hs_norm(&diff, 1.0) < 1e-10);
    }

    #[test]
    fn single_mode_bistable_matches_the_scalar_oracle() {
        // N = 1 Galerkin branch: λ₁c + <g(c e₁), e₁> = 0 solved by bisection
        let domain = build_domain(1, 1, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::Bistable { q: 5, a: 2.0 });
        // <e₁⁵, e₁> = 5/(2π²), so the branch solves c + (5/(2π²))c⁵ − 2c = 0
        let coef = 5.0 / (2.0 * std::f64::consts::PI.powi(2));
        let phi = |c: f64| c + coef * c.powi(5) - 2.0 * c;
        let (mut lo, mut hi) = (0.5, 3.0);
        assert!(phi(lo) < 0.0 && phi(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);

        let guess = Field::basis(&domain, &[1]);
        let eq = solve_equilibrium(&domain, &m, &guess, 1e-13).unwrap();
        assert!(
            (eq.u_star.coeffs[0] - oracle).abs() < 1e-10,
            "{} vs {}",
            eq.u_star.coeffs[0],
            oracle
        );
    }

    #[test]
    fn bistable_set_contains_the_odd_pair() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::Bistable { q: 5, a: 2.0 });
        let set = find_equilibria(&domain, &m, &MultistartSpec::default());
        assert!(set.members.len() >= 3, "found {}", set.members.len());
        // odd symmetry: for every member, −u* is also stationary
        for eq in &set.members {
            let neg = eq.u_star.scaled(-1.0);
            let res = stationary_residual(&domain, &m, &neg);
            assert!(domain.hs_norm(&res, -1.0) < 1e-9);
        }
        // deterministic under a fixed seed
        let set2 = find_equilibria(&domain, &m, &MultistartSpec::default());
        assert_eq!(set.members.len(), set2.members.len());
        for (a, b) in set.members.iter().zip(&set2.members) {
            assert_eq!(a.u_star.coeffs, b.u_star.coeffs);
        }
    }

    #[test]
    fn linearization_matches_the_per_mode_formula() {
        let domain = build_domain(1, 4, 3.0).unwrap();
        // u* = 0, quintic: g'(0) = 0, J0 = 0.5 → μ = (−J0 ± sqrt(J0² − 4λ))/2
        let m = model(&domain, Nonlinearity::OddPower { q: 5 });
        let j0 = 0.5;
        let (pairs, morse, centers) = linearize(&domain, &m, &Field::zeros(&domain)).unwrap();
        assert_eq!(morse, 0);
        assert_eq!(centers, 0);
        assert_eq!(pairs.len(), 8);
        for p in &pairs {
            assert!((p.mu_re + j0 / 2.0).abs() < 1e-10);
            let lam = p.kappa;
            let expected_im = (4.0 * lam - j0 * j0).sqrt() / 2.0;
            assert!((p.mu_im.abs() - expected_im).abs() < 1e-10);
        }

        // bistable at 0: mode-1 stiffness λ₁ − 2 = −1 < 0 gives a real
        // unstable root
        let mb = model(&domain, Nonlinearity::Bistable { q: 5, a: 2.0 });
        let (pairs, morse, _) = linearize(&domain, &mb, &Field::zeros(&domain)).unwrap();
        assert!(morse >= 1);
        let top = &pairs[0];
        let expected = (-j0 + (j0 * j0 + 4.0).sqrt()) / 2.0;
        assert!((top.mu_re - expected).abs() < 1e-10, "{}", top.mu_re);
        assert_eq!(top.mu_im, 0.0);
    }

    #[test]
    fn eigenpairs_satisfy_the_block_system() {
        let domain = build_domain(1, 6, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::Bistable { q: 5, a: 2.0 });
        let set = find_equilibria(&domain, &m, &MultistartSpec::default());
        let eq = set
            .members
            .iter()
            .max_by(|a, b| {
                domain
                    .hs_norm(&a.u_star, 1.0)
                    .partial_cmp(&domain.hs_norm(&b.u_star, 1.0))
                    .unwrap()
            })
            .unwrap();
        let grid_u = domain.to_grid(&eq.u_star).unwrap();
        let gp: Vec<f64> = grid_u.iter().map(|&g| m.nonlinearity.g_prime(g)).collect();
        let j0 = m.damping.j0();
        let mut ws = crate::integrator::StepWorkspace::new(&domain);
        for p in eq.eigen.iter().filter(|p| p.mu_im == 0.0) {
            // real pair: (K + J0 μ + μ²) w = 0
            let mut kw = vec![0.0; domain.modes_total()];
            apply_stiffness(&domain, &gp, &p.w.coeffs, &mut kw, &mut ws);
            let mut worst: f64 = 0.0;
            for i in 0..kw.len() {
                let res = -kw[i] - j0 * p.mu_re * p.w.coeffs[i] - p.mu_re * p.mu_re * p.w.coeffs[i];
                worst = worst.max(res.abs());
            }
            assert!(worst < 1e-8, "eigen residual {worst}");
        }
    }

    #[test]
    fn seeds_require_instability() {
        let domain = build_domain(1, 4, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::OddPower { q: 5 });
        let eq = solve_equilibrium(&domain, &m, &Field::zeros(&domain), 1e-12).unwrap();
        assert!(matches!(
            unstable_seeds(&domain, &eq, 1e-4),
            Err(SteadyError::NoUnstableDirections)
        ));

        let mb = model(&domain, Nonlinearity::Bistable { q: 5, a: 2.0 });
        let eq0 = solve_equilibrium(&domain, &mb, &Field::zeros(&domain), 1e-12).unwrap();
        assert_eq!(eq0.morse_index, 1);
        let seeds = unstable_seeds(&domain, &eq0, 1e-4).unwrap();
        assert_eq!(seeds.len(), 2);
        for s in &seeds {
            assert!((domain.energy_norm(s) - 1e-4).abs() < 1e-8);
        }
    }

    #[test]
    fn equilibria_are_fixed_points_of_the_stepper() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::Bistable { q: 5, a: 2.0 });
        let set = find_equilibria(&domain, &m, &MultistartSpec::default());
        let cfg = IntegratorConfig::midpoint(1e-3);
        for eq in &set.members {
            let state = ModalState::new(eq.u_star.clone(), Field::zeros(&domain), 0.0);
            let next = step(&domain, &state, &m, &cfg).unwrap();
            assert!(domain.state_distance(&next, &state) < 1e-10);
        }
    }

    #[test]
    fn newton_is_locally_quadratic() {
        let domain = build_domain(1, 8, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::Bistable { q: 5, a: 2.0 });
        let guess = Field::basis(&domain, &[1]).scaled(1.2);
        let eq = solve_equilibrium(&domain, &m, &guess, 1e-13).unwrap();
        let hist = &eq.residual_history;
        let mut checked = 0;
        for w in hist.windows(2) {
            if w[0] < 1e-3 && w[1] > 1e-15 {
                let c = w[1] / (w[0] * w[0]);
                assert!(c < 1e4, "non-quadratic contraction: {} -> {}", w[0], w[1]);
                checked += 1;
            }
        }
        assert!(checked >= 1, "history too short: {hist:?}");
    }

    #[test]
    fn monotone_spectra_sit_left_of_half_the_damping() {
        let domain = build_domain(1, 6, 3.0).unwrap();
        let m = model(&domain, Nonlinearity::OddPower { q: 5 });
        let j0 = m.damping.j0();
        assert!(j0 * j0 <= 4.0 * domain.lambda1());
        let guess = Field::basis(&domain, &[2]).scaled(0.5);
        let eq = solve_equilibrium(&domain, &m, &guess, 1e-12).unwrap();
        for p in &eq.eigen {
            assert!(p.mu_re <= -j0 / 2.0 + 1e-10);
        }
    }
}
