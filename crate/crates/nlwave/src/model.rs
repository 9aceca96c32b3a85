//! Damping laws, nonlinearities, forcing, and the structural-condition checker.
//!
//! A damping law is a scalar coefficient `J(s)` applied to the velocity with
//! `s = ‖∂_t u‖²`; a nonlinearity is a source `g(u)` with antiderivative `G`.
//! The checker scans the structural inequalities the dynamics relies on
//! (monotone positive damping or a superlinear lower bound, growth and
//! coercivity bounds on `g`) over a dense sample and reports worst margins.

use crate::spectral::Field;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid damping parameters: {0}")]
    InvalidDamping(String),
    #[error("invalid nonlinearity parameters: {0}")]
    InvalidNonlinearity(String),
    #[error("damping law evaluated at negative argument {0}")]
    NegativeArgument(f64),
    #[error("custom nonlinearities must supply their own structural constants")]
    CustomConstantsRequired,
    #[error("checker needs s_max > 0 and samples >= 100")]
    BadCheckerInput,
}

/// Scalar damping coefficient `J(‖v‖²)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingLaw {
    /// Classical linear damping `J ≡ γ > 0`; accepted although not strictly
    /// increasing, and flagged as such by the checker.
    Constant { gamma: f64 },
    /// `J(s) = (a+s)/(b+s)` with `0 < a < b`; bounded in `(a/b, 1)`.
    Hyperbolic { a: f64, b: f64 },
    /// `J(s) = a e^s / (1 + b e^s)` with `0 < a < b`; bounded in `(a/(1+b), a/b)`.
    Logistic { a: f64, b: f64 },
    /// `J(s) = (√s + ε)^p` with `ε, p > 0`; non-degenerate since `J(0) = ε^p`.
    ShiftedPower { epsilon: f64, p: f64 },
    /// Degenerate pure power `J(s) = s^p`; `J(0) = 0`, satisfies the
    /// superlinear bound with equality.
    PurePower { p: f64 },
}

impl DampingLaw {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidDamping(msg.to_string()));
        match *self {
            DampingLaw::Constant { gamma } if gamma <= 0.0 => bad("constant: gamma must be > 0"),
            DampingLaw::Hyperbolic { a, b } if !(0.0 < a && a < b) => {
                bad("hyperbolic: need 0 < a < b")
            }
            DampingLaw::Logistic { a, b } if !(0.0 < a && a < b) => bad("logistic: need 0 < a < b"),
            DampingLaw::ShiftedPower { epsilon, p } if !(epsilon > 0.0 && p > 0.0) => {
                bad("shifted_power: need epsilon > 0 and p > 0")
            }
            DampingLaw::PurePower { p } if p <= 0.0 => bad("pure_power: need p > 0"),
            _ => Ok(()),
        }
    }

    /// `J(0)`; zero exactly for the degenerate pure power law.
    pub fn j0(&self) -> f64 {
        self.eval_unchecked(0.0).0
    }

    pub fn is_degenerate(&self) -> bool {
        self.j0() == 0.0
    }

    /// The law is admitted through the constant-damping bypass rather than
    /// the strict-monotonicity predicate.
    pub fn monotonicity_bypassed(&self) -> bool {
        matches!(self, DampingLaw::Constant { .. })
    }

    /// Exponent for the superlinear lower bound `J(s)·s ≥ s^{p+1}`, where it
    /// applies; 0 disables that branch of the check.
    pub fn p_exponent(&self) -> f64 {
        match *self {
            DampingLaw::PurePower { p } => p,
            DampingLaw::ShiftedPower { p, .. } => p / 2.0,
            _ => 0.0,
        }
    }

    fn eval_unchecked(&self, s: f64) -> (f64, f64) {
        match *self {
            DampingLaw::Constant { gamma } => (gamma, 0.0),
            DampingLaw::Hyperbolic { a, b } => {
                let d = b + s;
                ((a + s) / d, (b - a) / (d * d))
            }
            DampingLaw::Logistic { a, b } => {
                // a e^s/(1+b e^s) rewritten as a/(e^{-s}+b) to stay finite for large s.
                let e = (-s).exp();
                let d = e + b;
                (a / d, a * e / (d * d))
            }
            DampingLaw::ShiftedPower { epsilon, p } => {
                let r = s.sqrt();
                let base = r + epsilon;
                let j = base.powf(p);
                // one-sided derivative blows up at s = 0
                let jp = if s == 0.0 {
                    f64::INFINITY
                } else {
                    p * base.powf(p - 1.0) / (2.0 * r)
                };
                (j, jp)
            }
            DampingLaw::PurePower { p } => {
                let j = s.powf(p);
                let jp = if s == 0.0 {
                    if p > 1.0 {
                        0.0
                    } else if p == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    p * s.powf(p - 1.0)
                };
                (j, jp)
            }
        }
    }
}

/// Evaluates `(J(s), J'(s))`; rejects negative arguments.
pub fn eval_damping(law: &DampingLaw, s: f64) -> Result<(f64, f64), ModelError> {
    if s < 0.0 {
        return Err(ModelError::NegativeArgument(s));
    }
    Ok(law.eval_unchecked(s))
}

/// Structural constants `(κ_1..κ_5, C_g)` certifying the growth and
/// coercivity inequalities for a nonlinearity of growth exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralConstants {
    pub kappa: [f64; 5],
    pub c_g: f64,
    pub q: f64,
}

/// Source term `g(u)` with `g(0) = 0` and antiderivative `G`.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `g(s) = |s|^{q-1} s = s^q` for odd integer `q` in {3, 5}.
    OddPower { q: u32 },
    /// `g(s) = |s|^{q-1} s − a·s` with `a > 0`; has nontrivial equilibria.
    Bistable { q: u32, a: f64 },
    /// Odd polynomial `Σ coeffs[i]·s^{2i+1}` with caller-certified constants.
    CustomOddPolynomial {
        coeffs: Vec<f64>,
        constants: StructuralConstants,
    },
}

impl Nonlinearity {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidNonlinearity(msg.to_string()));
        match self {
            Nonlinearity::OddPower { q } if !matches!(q, 3 | 5) => {
                bad("odd_power: q must be 3 or 5")
            }
            Nonlinearity::Bistable { q, a } if !matches!(q, 3 | 5) || *a <= 0.0 => {
                bad("bistable: q must be 3 or 5 and a > 0")
            }
            Nonlinearity::CustomOddPolynomial { coeffs, .. } if coeffs.is_empty() => {
                bad("custom polynomial needs at least one coefficient")
            }
            _ => Ok(()),
        }
    }

    pub fn growth_exponent(&self) -> f64 {
        match self {
            Nonlinearity::OddPower { q } | Nonlinearity::Bistable { q, .. } => *q as f64,
            Nonlinearity::CustomOddPolynomial { constants, .. } => constants.q,
        }
    }

    /// `(g, g', g'', G)` at `s`, in closed form.
    pub fn eval(&self, s: f64) -> (f64, f64, f64, f64) {
        match self {
            Nonlinearity::OddPower { q } => odd_power_eval(s, *q),
            Nonlinearity::Bistable { q, a } => {
                let (g, gp, gpp, gg) = odd_power_eval(s, *q);
                (g - a * s, gp - a, gpp, gg - 0.5 * a * s * s)
            }
            Nonlinearity::CustomOddPolynomial { coeffs, .. } => {
                let mut g = 0.0;
                let mut gp = 0.0;
                let mut gpp = 0.0;
                let mut big = 0.0;
                for (i, &c) in coeffs.iter().enumerate() {
                    let k = (2 * i + 1) as i32;
                    g += c * s.powi(k);
                    gp += c * k as f64 * s.powi(k - 1);
                    if k >= 2 {
                        gpp += c * (k * (k - 1)) as f64 * s.powi(k - 2);
                    }
                    big += c * s.powi(k + 1) / (k as f64 + 1.0);
                }
                (g, gp, gpp, big)
            }
        }
    }

    pub fn g(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    pub fn g_prime(&self, s: f64) -> f64 {
        self.eval(s).1
    }

    pub fn big_g(&self, s: f64) -> f64 {
        self.eval(s).3
    }
}

fn odd_power_eval(s: f64, q: u32) -> (f64, f64, f64, f64) {
    let qi = q as i32;
    let qf = q as f64;
    let g = s.powi(qi);
    let gp = qf * s.powi(qi - 1);
    let gpp = qf * (qf - 1.0) * s.powi(qi - 2);
    let big = s.powi(qi + 1) / (qf + 1.0);
    (g, gp, gpp, big)
}

/// Evaluates `(g, g', g'', G)`; no preconditions.
pub fn eval_nonlinearity(nl: &Nonlinearity, s: f64) -> (f64, f64, f64, f64) {
    nl.eval(s)
}

/// Conservative certified constants for the built-in nonlinearities.
///
/// For `odd_power(q)`: `g' = q|s|^{q-1}` gives `κ_1 = 1` (any positive value
/// works; 1 is the conservative convention), `κ_2 = q`;
/// `g·s − 4G = (1 − 4/(q+1))|s|^{q+1} ≥ 0` gives `κ_3 = 1`;
/// `G = |s|^{q+1}/(q+1)` gives `κ_4 = 1/(q+1)`, `κ_5 = 1`; `C_g = q(q−1)`.
/// For `bistable(q, a)` the linear term shifts `κ_1` to `max(1, a)` and the
/// coercivity constants to `κ_4 = 1/(2(q+1))` with `κ_5` absorbing the
/// quadratic well, maximized in closed form.
pub fn certified_constants(nl: &Nonlinearity) -> Result<StructuralConstants, ModelError> {
    match nl {
        Nonlinearity::OddPower { q } => {
            let qf = *q as f64;
            Ok(StructuralConstants {
                kappa: [1.0, qf, 1.0, 1.0 / (qf + 1.0), 1.0],
                c_g: qf * (qf - 1.0),
                q: qf,
            })
        }
        Nonlinearity::Bistable { q, a } => {
            let qf = *q as f64;
            let kappa4 = 1.0 / (2.0 * (qf + 1.0));
            // max_s [a s²/2 − κ4 |s|^{q+1}] attained at s* = (2a)^{1/(q−1)}
            let s_star = (2.0 * a).powf(1.0 / (qf - 1.0));
            let well = 0.5 * a * s_star * s_star - kappa4 * s_star.powf(qf + 1.0);
            Ok(StructuralConstants {
                kappa: [a.max(1.0), qf, 1.0, kappa4, 1.0 + well.max(0.0)],
                c_g: qf * (qf - 1.0),
                q: qf,
            })
        }
        Nonlinearity::CustomOddPolynomial { .. } => Err(ModelError::CustomConstantsRequired),
    }
}

/// Time-independent external force as a band-limited field.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub h: Field,
}

/// A full model: damping law, nonlinearity with its constants, and forcing.
#[derive(Debug, Clone)]
pub struct Model {
    pub damping: DampingLaw,
    pub nonlinearity: Nonlinearity,
    pub forcing: Forcing,
    pub constants: StructuralConstants,
}

impl Model {
    pub fn new(
        damping: DampingLaw,
        nonlinearity: Nonlinearity,
        forcing: Forcing,
    ) -> Result<Self, ModelError> {
        damping.validate()?;
        nonlinearity.validate()?;
        let constants = match &nonlinearity {
            Nonlinearity::CustomOddPolynomial { constants, .. } => *constants,
            _ => certified_constants(&nonlinearity)?,
        };
        Ok(Model {
            damping,
            nonlinearity,
            forcing,
            constants,
        })
    }
}

/// Outcome of the structural-condition scan.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub s_max: f64,
    pub samples: usize,
    pub monotone_ok: bool,
    pub monotone_bypassed: bool,
    pub positivity_ok: bool,
    pub superlinear_ok: bool,
    pub superlinear_exponent: f64,
    pub g_growth_ok: bool,
    pub g_structure_ok: bool,
    pub degenerate_flag: bool,
    /// Worst (most negative) normalized margins, by condition:
    /// monotonicity, positivity, superlinearity, second-derivative growth,
    /// first-derivative lower bound, `g·s − 4G` bound, `G` coercivity.
    pub margins: Margins,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Margins {
    pub monotone: f64,
    pub positivity: f64,
    pub superlinear: f64,
    pub g_second: f64,
    pub g_prime: f64,
    pub gs_minus_4g: f64,
    pub g_lower: f64,
}

impl AssumptionReport {
    /// The damping-side condition holds (monotone + positive, or superlinear).
    pub fn damping_ok(&self) -> bool {
        (self.monotone_ok || self.monotone_bypassed)
            && (self.positivity_ok || self.superlinear_ok)
    }

    /// Everything holds and the law is non-degenerate.
    pub fn all_ok(&self) -> bool {
        self.damping_ok() && self.g_growth_ok && self.g_structure_ok && !self.degenerate_flag
    }
}

const MARGIN_TOL: f64 = 1e-12;

/// Scans every structural inequality on a log-spaced sample of `[0, s_max]`
/// (symmetric for the source-term conditions) and records worst margins.
/// Margins are normalized by the local polynomial scale so a zero margin
/// means the inequality is attained with equality.
pub fn check_assumptions(
    law: &DampingLaw,
    nl: &Nonlinearity,
    s_max: f64,
    samples: usize,
) -> Result<AssumptionReport, ModelError> {
    if s_max <= 0.0 || samples < 100 {
        return Err(ModelError::BadCheckerInput);
    }
    law.validate()?;
    nl.validate()?;

    let q = nl.growth_exponent();
    let constants = match nl {
        Nonlinearity::CustomOddPolynomial { constants, .. } => *constants,
        _ => certified_constants(nl)?,
    };
    let [k1, k2, k3, k4, k5] = constants.kappa;
    let c_g = constants.c_g;

    // log-spaced grid on (0, s_max] plus the origin
    let lo = (s_max * 1e-9).max(1e-12);
    let mut grid = vec![0.0];
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        grid.push(lo * (s_max / lo).powf(t));
    }

    let mut margins = Margins {
        monotone: f64::INFINITY,
        positivity: f64::INFINITY,
        superlinear: f64::INFINITY,
        g_second: f64::INFINITY,
        g_prime: f64::INFINITY,
        gs_minus_4g: f64::INFINITY,
        g_lower: f64::INFINITY,
    };

    let p = law.p_exponent();
    let mut prev_j = None;
    for &s in &grid {
        let (j, _) = law.eval_unchecked(s);
        margins.positivity = margins.positivity.min(j);
        if let Some(pj) = prev_j {
            margins.monotone = margins.monotone.min(j - pj);
        }
        prev_j = Some(j);
        if p > 0.0 {
            let scale = 1.0 + s.powf(p + 1.0);
            margins.superlinear = margins.superlinear.min((j * s - s.powf(p + 1.0)) / scale);
        }
    }
    if p == 0.0 {
        margins.superlinear = f64::NEG_INFINITY;
    }

    for &s in &grid {
        for sign in [1.0, -1.0] {
            let x = sign * s;
            let (g, gp, gpp, big) = nl.eval(x);
            let scale = 1.0 + s.powf(q + 1.0);
            margins.g_second = margins
                .g_second
                .min((c_g * (1.0 + s.powf(q - 2.0)) - gpp.abs()) / scale);
            margins.g_prime = margins
                .g_prime
                .min((gp + k1 - k2 * s.powf(q - 1.0)) / scale);
            margins.gs_minus_4g = margins.gs_minus_4g.min((g * x - 4.0 * big + k3) / scale);
            margins.g_lower = margins
                .g_lower
                .min((big - k4 * s.powf(q + 1.0) + k5) / scale);
        }
    }

    let ok = |m: f64| m >= -MARGIN_TOL;
    // Bounded laws saturate in floating point (logistic is constant in f64
    // past s ~ 36), so strictness is asserted globally and the pairwise
    // margins are only required to be nonnegative within round-off.
    let strictly_up = law.eval_unchecked(s_max).0 > law.eval_unchecked(0.0).0;
    Ok(AssumptionReport {
        s_max,
        samples,
        monotone_ok: !law.monotonicity_bypassed() && ok(margins.monotone) && strictly_up,
        monotone_bypassed: law.monotonicity_bypassed(),
        positivity_ok: margins.positivity > 0.0,
        superlinear_ok: p > 0.0 && ok(margins.superlinear),
        superlinear_exponent: p,
        g_growth_ok: ok(margins.g_second) && ok(margins.g_prime),
        g_structure_ok: ok(margins.gs_minus_4g) && ok(margins.g_lower),
        degenerate_flag: law.is_degenerate(),
        margins,
    })
}
