//! Run configuration: a TOML file with `domain`, `model`, `integrator`,
//! `experiment` and `output` sections.
//!
//! Parsing is strict: unknown keys are rejected with their location, and
//! semantic validation names the offending key and the violated constraint.
//! A parsed config re-serializes to a canonical form (fixed key order,
//! defaults materialized) that re-parses to an equal value.
//!
//! Random fields are reproducible from the config alone: coefficients are
//! `amplitude · λ_k^{-decay} · z_k` with `z_k` standard normal drawn from a
//! ChaCha8 counter-based stream seeded with the stated 64-bit seed
//! (Box-Muller on two uniform draws per coefficient, modes in index order).

use crate::experiments::EnsembleSpec;
use crate::integrator::{IntegratorConfig, Scheme};
use crate::model::{DampingLaw, Forcing, Model, Nonlinearity, StructuralConstants};
use crate::spectral::{build_domain_with, Field, ModalState, SpectralDomain};
use crate::steady::MultistartSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("config error at `{key}`: {constraint}")]
    Semantic { key: String, constraint: String },
}

fn semantic(key: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Semantic {
        key: key.to_string(),
        constraint: constraint.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainBlock,
    pub model: ModelBlock,
    pub integrator: IntegratorBlock,
    pub experiment: ExperimentBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub dim: usize,
    pub modes_per_axis: usize,
    #[serde(default = "default_padding")]
    pub padding_factor: f64,
    #[serde(default)]
    pub allow_aliasing: bool,
}

fn default_padding() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub damping: DampingBlock,
    pub nonlinearity: NonlinearityBlock,
    #[serde(default)]
    pub forcing: ForcingBlock,
}

pub const DAMPING_KINDS: &[&str] = &[
    "constant",
    "hyperbolic",
    "logistic",
    "shifted_power",
    "pure_power",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingBlock {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

pub const NONLINEARITY_KINDS: &[&str] = &["odd_power", "bistable", "custom_odd_polynomial"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityBlock {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    /// Structural constants for custom polynomials: `[κ1..κ5]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<[f64; 5]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_g: Option<f64>,
    /// Growth exponent certified for a custom polynomial.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingBlock {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<ModalTerm>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

impl Default for ForcingBlock {
    fn default() -> Self {
        ForcingBlock {
            kind: "zero".into(),
            terms: None,
            seed: None,
            decay: None,
            amplitude: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalTerm {
    pub index: Vec<usize>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    pub dt: f64,
    #[serde(default = "default_scalar_tol")]
    pub scalar_tol: f64,
    #[serde(default = "default_scalar_max_iter")]
    pub scalar_max_iter: usize,
    #[serde(default)]
    pub linear_test_mode: bool,
}

fn default_scheme() -> String {
    "implicit_midpoint".into()
}

fn default_scalar_tol() -> f64 {
    1e-12
}

fn default_scalar_max_iter() -> usize {
    100
}

pub const EXPERIMENT_KINDS: &[&str] = &[
    "simulate",
    "equilibria",
    "check_assumptions",
    "dissipativity",
    "dissipativity_e1",
    "lipschitz",
    "quasistability",
    "attractor",
    "convergence",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multistart: Option<MultistartBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<ModalTerm>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<ModalTerm>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_band: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub mode_band: usize,
    pub seed: u64,
    #[serde(default = "default_decay")]
    pub decay: f64,
}

fn default_decay() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsBlock {
    pub count: usize,
    pub separation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultistartBlock {
    pub count: usize,
    pub amp_min: f64,
    pub amp_max: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: String,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub binary_traces: bool,
}

fn default_stride() -> usize {
    10
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical serialized form; idempotent (`canon(canon(c)) = canon(c)`).
pub fn canonical_form(cfg: &RunConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}

/// Applies `section.key=value` overrides to a raw document and re-parses.
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut value: toml::Value =
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| semantic(item, "override must look like section.key=value"))?;
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .map(|t| t["v"].clone())
            .unwrap_or_else(|_| toml::Value::String(raw.to_string()));
        let parts: Vec<&str> = path.trim().split('.').collect();
        let mut cursor = &mut value;
        for part in &parts[..parts.len() - 1] {
            cursor = match cursor {
                toml::Value::Table(t) => t
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new())),
                _ => return Err(semantic(path, "path does not address a table")),
            };
        }
        match cursor {
            toml::Value::Table(t) => {
                t.insert(parts.last().unwrap().to_string(), parsed);
            }
            _ => return Err(semantic(path, "path does not address a table")),
        }
    }
    let text = toml::to_string(&value).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    parse_config(&text)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.domain;
        if !(1..=3).contains(&d.dim) {
            return Err(semantic("domain.dim", "must be 1, 2 or 3"));
        }
        if d.modes_per_axis < 1 {
            return Err(semantic("domain.modes_per_axis", "must be >= 1"));
        }
        if d.padding_factor < 3.0 && !d.allow_aliasing {
            return Err(semantic(
                "domain.padding_factor",
                "below 3 a quintic product aliases into the band; set domain.allow_aliasing = true to override",
            ));
        }
        self.model.validate(d.dim)?;
        let i = &self.integrator;
        match i.scheme.as_str() {
            "implicit_midpoint" | "semi_implicit_exponential" => {}
            other => {
                return Err(semantic(
                    "integrator.scheme",
                    format!(
                        "unknown scheme `{other}`; valid: implicit_midpoint, semi_implicit_exponential"
                    ),
                ))
            }
        }
        if !(i.dt > 0.0 && i.dt.is_finite()) {
            return Err(semantic("integrator.dt", "must be positive and finite"));
        }
        if i.scalar_tol <= 0.0 {
            return Err(semantic("integrator.scalar_tol", "must be positive"));
        }
        if i.scalar_max_iter == 0 {
            return Err(semantic("integrator.scalar_max_iter", "must be >= 1"));
        }
        self.experiment.validate(self)?;
        if self.output.stride == 0 {
            return Err(semantic("output.stride", "must be >= 1"));
        }
        if self.output.directory.is_empty() {
            return Err(semantic("output.directory", "must not be empty"));
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<SpectralDomain, ConfigError> {
        build_domain_with(
            self.domain.dim,
            self.domain.modes_per_axis,
            self.domain.padding_factor,
            self.domain.allow_aliasing,
        )
        .map_err(|e| semantic("domain", e.to_string()))
    }

    pub fn build_model(&self, domain: &SpectralDomain) -> Result<Model, ConfigError> {
        self.model.build(domain)
    }

    pub fn build_integrator(&self) -> IntegratorConfig {
        let scheme = match self.integrator.scheme.as_str() {
            "semi_implicit_exponential" => Scheme::SemiImplicitExponential,
            _ => Scheme::ImplicitMidpoint,
        };
        IntegratorConfig {
            scheme,
            dt: self.integrator.dt,
            scalar_tol: self.integrator.scalar_tol,
            scalar_max_iter: self.integrator.scalar_max_iter,
            linear_test_mode: self.integrator.linear_test_mode,
        }
    }
}

impl ModelBlock {
    fn validate(&self, dim: usize) -> Result<(), ConfigError> {
        let dmp = &self.damping;
        let need = |cond: bool, key: &str, msg: &str| -> Result<(), ConfigError> {
            if cond {
                Ok(())
            } else {
                Err(semantic(key, msg))
            }
        };
        match dmp.kind.as_str() {
            "constant" => {
                need(dmp.gamma.is_some(), "model.damping.gamma", "required for constant")?;
                need(
                    dmp.a.is_none() && dmp.b.is_none() && dmp.epsilon.is_none() && dmp.p.is_none(),
                    "model.damping",
                    "constant takes only gamma",
                )?;
            }
            "hyperbolic" | "logistic" => {
                need(
                    dmp.a.is_some() && dmp.b.is_some(),
                    "model.damping.a",
                    "hyperbolic/logistic require a and b",
                )?;
                need(
                    dmp.gamma.is_none() && dmp.epsilon.is_none() && dmp.p.is_none(),
                    "model.damping",
                    "hyperbolic/logistic take only a and b",
                )?;
            }
            "shifted_power" => {
                need(
                    dmp.epsilon.is_some() && dmp.p.is_some(),
                    "model.damping.epsilon",
                    "shifted_power requires epsilon and p",
                )?;
                need(
                    dmp.gamma.is_none() && dmp.a.is_none() && dmp.b.is_none(),
                    "model.damping",
                    "shifted_power takes only epsilon and p",
                )?;
            }
            "pure_power" => {
                need(dmp.p.is_some(), "model.damping.p", "required for pure_power")?;
                need(
                    dmp.gamma.is_none()
                        && dmp.a.is_none()
                        && dmp.b.is_none()
                        && dmp.epsilon.is_none(),
                    "model.damping",
                    "pure_power takes only p",
                )?;
            }
            other => {
                return Err(semantic(
                    "model.damping.kind",
                    format!("unknown kind `{other}`; valid: {}", DAMPING_KINDS.join(", ")),
                ))
            }
        }
        self.damping_law()?.validate().map_err(|e| semantic("model.damping", e.to_string()))?;

        let nl = &self.nonlinearity;
        match nl.kind.as_str() {
            "odd_power" => {
                need(nl.q.is_some(), "model.nonlinearity.q", "required for odd_power")?;
                need(
                    nl.a.is_none() && nl.coeffs.is_none() && nl.kappa.is_none(),
                    "model.nonlinearity",
                    "odd_power takes only q",
                )?;
            }
            "bistable" => {
                need(
                    nl.q.is_some() && nl.a.is_some(),
                    "model.nonlinearity.q",
                    "bistable requires q and a",
                )?;
                need(
                    nl.coeffs.is_none() && nl.kappa.is_none(),
                    "model.nonlinearity",
                    "bistable takes only q and a",
                )?;
            }
            "custom_odd_polynomial" => {
                need(
                    nl.coeffs.is_some()
                        && nl.kappa.is_some()
                        && nl.c_g.is_some()
                        && nl.growth_q.is_some(),
                    "model.nonlinearity.coeffs",
                    "custom_odd_polynomial requires coeffs, kappa, c_g and growth_q",
                )?;
            }
            other => {
                return Err(semantic(
                    "model.nonlinearity.kind",
                    format!(
                        "unknown kind `{other}`; valid: {}",
                        NONLINEARITY_KINDS.join(", ")
                    ),
                ))
            }
        }
        self.nonlinearity_fn()?
            .validate()
            .map_err(|e| semantic("model.nonlinearity", e.to_string()))?;

        let f = &self.forcing;
        match f.kind.as_str() {
            "zero" => {}
            "modal" => {
                let terms = f
                    .terms
                    .as_ref()
                    .ok_or_else(|| semantic("model.forcing.terms", "required for modal forcing"))?;
                for t in terms {
                    if t.index.len() != dim {
                        return Err(semantic(
                            "model.forcing.terms",
                            format!("index {:?} does not have dim = {dim} entries", t.index),
                        ));
                    }
                }
            }
            "random_smooth" => {
                if f.seed.is_none() || f.decay.is_none() || f.amplitude.is_none() {
                    return Err(semantic(
                        "model.forcing",
                        "random_smooth requires seed, decay and amplitude",
                    ));
                }
            }
            other => {
                return Err(semantic(
                    "model.forcing.kind",
                    format!("unknown kind `{other}`; valid: zero, modal, random_smooth"),
                ))
            }
        }
        Ok(())
    }

    pub fn damping_law(&self) -> Result<DampingLaw, ConfigError> {
        Ok(match self.damping.kind.as_str() {
            "constant" => DampingLaw::Constant {
                gamma: self.damping.gamma.unwrap_or(1.0),
            },
            "hyperbolic" => DampingLaw::Hyperbolic {
                a: self.damping.a.unwrap_or(1.0),
                b: self.damping.b.unwrap_or(2.0),
            },
            "logistic" => DampingLaw::Logistic {
                a: self.damping.a.unwrap_or(1.0),
                b: self.damping.b.unwrap_or(2.0),
            },
            "shifted_power" => DampingLaw::ShiftedPower {
                epsilon: self.damping.epsilon.unwrap_or(0.1),
                p: self.damping.p.unwrap_or(2.0),
            },
            "pure_power" => DampingLaw::PurePower {
                p: self.damping.p.unwrap_or(2.0),
            },
            other => {
                return Err(semantic(
                    "model.damping.kind",
                    format!("unknown kind `{other}`; valid: {}", DAMPING_KINDS.join(", ")),
                ))
            }
        })
    }

    pub fn nonlinearity_fn(&self) -> Result<Nonlinearity, ConfigError> {
        Ok(match self.nonlinearity.kind.as_str() {
            "odd_power" => Nonlinearity::OddPower {
                q: self.nonlinearity.q.unwrap_or(5),
            },
            "bistable" => Nonlinearity::Bistable {
                q: self.nonlinearity.q.unwrap_or(5),
                a: self.nonlinearity.a.unwrap_or(1.0),
            },
            "custom_odd_polynomial" => Nonlinearity::CustomOddPolynomial {
                coeffs: self.nonlinearity.coeffs.clone().unwrap_or_default(),
                constants: StructuralConstants {
                    kappa: self.nonlinearity.kappa.unwrap_or([1.0; 5]),
                    c_g: self.nonlinearity.c_g.unwrap_or(1.0),
                    q: self.nonlinearity.growth_q.unwrap_or(3.0),
                },
            },
            other => {
                return Err(semantic(
                    "model.nonlinearity.kind",
                    format!(
                        "unknown kind `{other}`; valid: {}",
                        NONLINEARITY_KINDS.join(", ")
                    ),
                ))
            }
        })
    }

    pub fn build(&self, domain: &SpectralDomain) -> Result<Model, ConfigError> {
        let law = self.damping_law()?;
        let nl = self.nonlinearity_fn()?;
        let h = build_field(
            domain,
            &self.forcing.kind,
            self.forcing.terms.as_deref(),
            self.forcing.seed,
            self.forcing.decay,
            self.forcing.amplitude,
            None,
        )?;
        Model::new(law, nl, Forcing { h }).map_err(|e| semantic("model", e.to_string()))
    }
}

fn build_field(
    domain: &SpectralDomain,
    kind: &str,
    terms: Option<&[ModalTerm]>,
    seed: Option<u64>,
    decay: Option<f64>,
    amplitude: Option<f64>,
    mode_band: Option<usize>,
) -> Result<Field, ConfigError> {
    match kind {
        "zero" => Ok(Field::zeros(domain)),
        "modal" => {
            let mut f = Field::zeros(domain);
            for t in terms.unwrap_or(&[]) {
                let flat = domain.flat_index(&t.index).ok_or_else(|| {
                    semantic("terms", format!("index {:?} outside the band", t.index))
                })?;
                f.coeffs[flat] += t.amplitude;
            }
            Ok(f)
        }
        "random_smooth" => Ok(crate::experiments::random_smooth_field(
            domain,
            seed.unwrap_or(0),
            decay.unwrap_or(1.0),
            amplitude.unwrap_or(1.0),
            mode_band.unwrap_or(domain.modes_per_axis),
        )),
        other => Err(semantic(
            "kind",
            format!("unknown field kind `{other}`; valid: zero, modal, random_smooth"),
        )),
    }
}

impl ExperimentBlock {
    fn validate(&self, cfg: &RunConfig) -> Result<(), ConfigError> {
        let kind = self.kind.as_str();
        if !EXPERIMENT_KINDS.contains(&kind) {
            return Err(semantic(
                "experiment.kind",
                format!("unknown kind `{kind}`; valid: {}", EXPERIMENT_KINDS.join(", ")),
            ));
        }
        let need = |cond: bool, key: &str, msg: &str| -> Result<(), ConfigError> {
            if cond {
                Ok(())
            } else {
                Err(semantic(key, msg))
            }
        };
        let horizon_needed = matches!(
            kind,
            "simulate"
                | "dissipativity"
                | "dissipativity_e1"
                | "lipschitz"
                | "attractor"
                | "convergence"
        );
        if horizon_needed {
            let h = self
                .horizon
                .ok_or_else(|| semantic("experiment.horizon", "required for this experiment"))?;
            need(
                h >= 0.0 && h.is_finite(),
                "experiment.horizon",
                "must be finite and >= 0",
            )?;
        }
        match kind {
            "simulate" => {
                need(self.initial.is_some(), "experiment.initial", "required for simulate")?;
            }
            "dissipativity" | "dissipativity_e1" | "attractor" => {
                let e = self
                    .ensemble
                    .as_ref()
                    .ok_or_else(|| semantic("experiment.ensemble", "required for this probe"))?;
                need(e.count >= 1, "experiment.ensemble.count", "must be >= 1")?;
                need(
                    0.0 <= e.r_min && e.r_min <= e.r_max,
                    "experiment.ensemble.r_min",
                    "need 0 <= r_min <= r_max",
                )?;
            }
            "lipschitz" | "quasistability" => {
                let p = self
                    .pairs
                    .as_ref()
                    .ok_or_else(|| semantic("experiment.pairs", "required for this probe"))?;
                need(p.count >= 1, "experiment.pairs.count", "must be >= 1")?;
                need(
                    p.separation > 0.0,
                    "experiment.pairs.separation",
                    "must be positive",
                )?;
                if kind == "quasistability" {
                    let eta = self
                        .eta
                        .ok_or_else(|| semantic("experiment.eta", "required for quasistability"))?;
                    need(0.0 < eta && eta < 1.0, "experiment.eta", "must lie in (0,1)")?;
                }
            }
            "convergence" => {
                let list = self
                    .n_list
                    .as_ref()
                    .ok_or_else(|| semantic("experiment.n_list", "required for convergence"))?;
                need(
                    list.len() >= 2 && list.windows(2).all(|w| w[0] < w[1]),
                    "experiment.n_list",
                    "must be strictly increasing with >= 2 entries",
                )?;
                need(self.initial.is_some(), "experiment.initial", "required for convergence")?;
                if let Some(init) = &self.initial {
                    need(
                        init.kind == "modal",
                        "experiment.initial.kind",
                        "convergence requires modal initial data resolvable at the smallest n",
                    )?;
                }
                need(
                    cfg.model.forcing.kind != "random_smooth",
                    "model.forcing.kind",
                    "convergence requires zero or modal forcing so every resolution sees the same force",
                )?;
            }
            "check_assumptions" => {
                if let Some(s) = self.samples {
                    need(s >= 100, "experiment.samples", "must be >= 100")?;
                }
            }
            _ => {}
        }
        if let Some(init) = &self.initial {
            match init.kind.as_str() {
                "modal" => {}
                "random_smooth" => {
                    need(
                        init.seed.is_some() && init.amplitude.is_some(),
                        "experiment.initial",
                        "random_smooth requires seed and amplitude",
                    )?;
                }
                other => {
                    return Err(semantic(
                        "experiment.initial.kind",
                        format!("unknown kind `{other}`; valid: modal, random_smooth"),
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn ensemble_spec(&self) -> Option<EnsembleSpec> {
        self.ensemble.as_ref().map(|e| EnsembleSpec {
            count: e.count,
            norm_range: (e.r_min, e.r_max),
            mode_band: e.mode_band,
            seed: e.seed,
            decay: e.decay,
        })
    }

    pub fn multistart_spec(&self) -> MultistartSpec {
        self.multistart
            .as_ref()
            .map(|m| MultistartSpec {
                count: m.count,
                amplitude_range: (m.amp_min, m.amp_max),
                seed: m.seed,
            })
            .unwrap_or_default()
    }

    pub fn initial_state(&self, domain: &SpectralDomain) -> Result<ModalState, ConfigError> {
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| semantic("experiment.initial", "missing initial data"))?;
        match init.kind.as_str() {
            "modal" => {
                let u = build_field(domain, "modal", init.u.as_deref(), None, None, None, None)?;
                let v = build_field(domain, "modal", init.v.as_deref(), None, None, None, None)?;
                Ok(ModalState::new(u, v, 0.0))
            }
            "random_smooth" => {
                let seed = init.seed.unwrap_or(0);
                let u = build_field(
                    domain,
                    "random_smooth",
                    None,
                    Some(seed),
                    init.decay,
                    init.amplitude,
                    init.mode_band,
                )?;
                let v = build_field(
                    domain,
                    "random_smooth",
                    None,
                    Some(seed.wrapping_add(1)),
                    init.decay,
                    init.amplitude,
                    init.mode_band,
                )?;
                Ok(ModalState::new(u, v, 0.0))
            }
            other => Err(semantic(
                "experiment.initial.kind",
                format!("unknown kind `{other}`"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
dim = 1
modes_per_axis = 32

[model.damping]
kind = "shifted_power"
epsilon = 0.1
p = 2.0

[model.nonlinearity]
kind = "odd_power"
q = 5

[integrator]
dt = 1e-3

[experiment]
kind = "simulate"
horizon = 1.0

[experiment.initial]
kind = "modal"
u = [{ index = [1], amplitude = 1.0 }]

[output]
directory = "out/run"
"#;

    #[test]
    fn minimal_config_parses_and_canonicalizes() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.domain.modes_per_axis, 32);
        assert_eq!(cfg.integrator.scalar_max_iter, 100);
        let canon = canonical_form(&cfg);
        let cfg2 = parse_config(&canon).unwrap();
        assert_eq!(cfg, cfg2);
        // canonicalization is idempotent
        assert_eq!(canon, canonical_form(&cfg2));
    }

    #[test]
    fn aliasing_guard_names_the_constraint() {
        let text = MINIMAL.replace("modes_per_axis = 32", "modes_per_axis = 32\npadding_factor = 2.0");
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("padding_factor"), "{msg}");
        assert!(msg.contains("alias"), "{msg}");
        let ok = parse_config(&text.replace(
            "padding_factor = 2.0",
            "padding_factor = 2.0\nallow_aliasing = true",
        ));
        assert!(ok.is_ok());
    }

    #[test]
    fn unknown_damping_kind_lists_valid_kinds() {
        let text = MINIMAL.replace("kind = \"shifted_power\"", "kind = \"quadratic\"");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("quadratic"), "{err}");
        assert!(err.contains("hyperbolic"), "{err}");
    }

    #[test]
    fn unknown_keys_are_syntax_errors_with_location() {
        let text = MINIMAL.replace("dt = 1e-3", "dt = 1e-3\nwat = 1");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("wat"), "{err}");
    }

    #[test]
    fn overrides_apply_and_validate() {
        let cfg = apply_overrides(MINIMAL, &["integrator.dt=5e-4".into()]).unwrap();
        assert_eq!(cfg.integrator.dt, 5e-4);
        let err = apply_overrides(MINIMAL, &["integrator.dt=-1".into()]).unwrap_err();
        assert!(err.to_string().contains("integrator.dt"));
    }

    #[test]
    fn probe_configs_require_their_blocks() {
        let text = MINIMAL
            .replace("kind = \"simulate\"", "kind = \"dissipativity\"")
            .replace(
                "[experiment.initial]\nkind = \"modal\"\nu = [{ index = [1], amplitude = 1.0 }]\n",
                "",
            );
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("ensemble"), "{err}");
    }

    #[test]
    fn builders_produce_consistent_objects() {
        let cfg = parse_config(MINIMAL).unwrap();
        let domain = cfg.build_domain().unwrap();
        assert_eq!(domain.grid_per_axis, 96);
        let model = cfg.build_model(&domain).unwrap();
        assert_eq!(model.damping.j0(), 0.1f64.powi(2));
        let state = cfg.experiment.initial_state(&domain).unwrap();
        assert_eq!(state.u.coeffs[0], 1.0);
        let icfg = cfg.build_integrator();
        assert_eq!(icfg.dt, 1e-3);
    }
}
