//! Experiment orchestration: builds the objects named by a [`RunConfig`],
//! executes the requested simulation or probe, and persists traces, a
//! summary, and a manifest with content digests of every emitted file.
//!
//! All writes go through write-temp-then-rename. Identical configs produce
//! identical data-file digests on one platform; the manifest additionally
//! records wall-clock and platform and is not part of the digest set.
//! `NLWAVE_THREADS` caps the worker pool used for independent trajectories
//! (default: all cores).

use crate::config::{ConfigError, RunConfig};
use crate::diagnostics;
use crate::experiments::{self, EnsembleSpec, ExperimentError, ProbeReport};
use crate::integrator::{integrate, IntegratorError};
use crate::model::ModelError;
use crate::spectral::SpectralError;
use crate::steady::{self, SteadyError};
use crate::trace::{self, NamedTrace, TraceError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Steady(#[from] SteadyError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub platform: String,
    pub started_unix_ms: u64,
    pub wall_seconds: f64,
    pub experiment: String,
    /// Executed phases, in order (dependency resolution shows up here).
    pub phases: Vec<String>,
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub scalars: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    /// sha256 of every emitted data file, keyed by file name.
    pub digests: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// `None` for plain simulations, `Some(verdict)` for probes/checks.
    pub pass: Option<bool>,
}

fn platform_fingerprint() -> String {
    format!(
        "{}-{}-{}-f64",
        std::env::consts::ARCH,
        std::env::consts::OS,
        if cfg!(target_endian = "little") {
            "le"
        } else {
            "be"
        }
    )
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct Emitter {
    dir: PathBuf,
    binary: bool,
    digests: BTreeMap<String, String>,
}

impl Emitter {
    fn new(dir: &Path, binary: bool) -> Self {
        Emitter {
            dir: dir.to_path_buf(),
            binary,
            digests: BTreeMap::new(),
        }
    }

    fn emit_text(&mut self, name: &str, content: &str) -> Result<(), TraceError> {
        trace::write_atomic(&self.dir.join(name), content.as_bytes())?;
        self.digests
            .insert(name.to_string(), sha256_hex(content.as_bytes()));
        Ok(())
    }

    fn emit_trace(&mut self, t: &NamedTrace) -> Result<(), TraceError> {
        let name = format!("{}.csv", t.name);
        let content = trace::render_text_trace(t);
        self.emit_text(&name, &content)?;
        if self.binary {
            let bname = format!("{}.bin", t.name);
            trace::write_binary_trace(&self.dir.join(&bname), t)?;
            let bytes = std::fs::read(self.dir.join(&bname))?;
            self.digests.insert(bname, sha256_hex(&bytes));
        }
        Ok(())
    }
}

/// Executes the experiment named by the config. The manifest is written even
/// when the run fails, with the failure recorded.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let clock = Instant::now();
    let dir = PathBuf::from(&cfg.output.directory);
    std::fs::create_dir_all(&dir).map_err(TraceError::from)?;

    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        platform: platform_fingerprint(),
        started_unix_ms: started,
        wall_seconds: 0.0,
        experiment: cfg.experiment.kind.clone(),
        phases: Vec::new(),
        pass: None,
        error: None,
        scalars: BTreeMap::new(),
        verdicts: BTreeMap::new(),
        digests: BTreeMap::new(),
    };
    let mut emitter = Emitter::new(&dir, cfg.output.binary_traces);
    emitter.emit_text("canonical.toml", &crate::config::canonical_form(cfg))?;

    let result = with_thread_pool(|| execute(cfg, &mut emitter, &mut manifest));

    manifest.digests = emitter.digests.clone();
    manifest.wall_seconds = clock.elapsed().as_secs_f64();
    let manifest_path = dir.join("manifest.toml");
    match result {
        Ok(pass) => {
            manifest.pass = pass;
            let text = toml::to_string_pretty(&manifest).expect("manifest serializes");
            trace::write_atomic(&manifest_path, text.as_bytes())?;
            Ok(RunOutcome {
                manifest,
                manifest_path,
                pass,
            })
        }
        Err(e) => {
            manifest.error = Some(e.to_string());
            let text = toml::to_string_pretty(&manifest).expect("manifest serializes");
            trace::write_atomic(&manifest_path, text.as_bytes())?;
            Err(e)
        }
    }
}

fn with_thread_pool<T>(f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match std::env::var("NLWAVE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .expect("thread pool builds"),
        _ => f(),
    }
}

fn execute(
    cfg: &RunConfig,
    emitter: &mut Emitter,
    manifest: &mut RunManifest,
) -> Result<Option<bool>, RunError> {
    let domain = cfg.build_domain()?;
    let model = cfg.build_model(&domain)?;
    let icfg = cfg.build_integrator();
    let exp = &cfg.experiment;

    match exp.kind.as_str() {
        "simulate" => {
            manifest.phases.push("simulate".into());
            let state0 = exp.initial_state(&domain)?;
            let horizon = exp.horizon.unwrap_or(1.0);
            let traj = integrate(
                &domain,
                &state0,
                &model,
                &icfg,
                horizon,
                cfg.output.stride,
                &mut [],
            )?;
            let ledger = diagnostics::energy_ledger(&domain, &traj, &model);
            let mut tr = NamedTrace::new(
                "trajectory",
                &[
                    "t",
                    "e_norm",
                    "e1_norm",
                    "energy",
                    "potential",
                    "forcing",
                    "dissipation",
                    "residual",
                ],
                &["time", "1", "1", "1", "1", "1", "1", "1"],
            );
            for (state, rep) in traj.states.iter().zip(&ledger) {
                tr.push(vec![
                    rep.t,
                    domain.energy_norm(state),
                    domain.e1_norm(state),
                    rep.e_u,
                    rep.potential,
                    rep.forcing_term,
                    rep.cumulative_dissipation,
                    rep.identity_residual,
                ]);
            }
            emitter.emit_trace(&tr)?;
            let final_res = ledger.last().map(|r| r.identity_residual).unwrap_or(0.0);
            manifest.scalars.insert("rows".into(), tr.rows.len() as f64);
            manifest
                .scalars
                .insert("identity_residual".into(), final_res);
            emit_summary(emitter, &manifest.scalars, &manifest.verdicts)?;
            Ok(None)
        }
        "equilibria" => {
            manifest.phases.push("equilibria".into());
            let set = steady::find_equilibria(&domain, &model, &exp.multistart_spec());
            emit_equilibria(emitter, &domain, &set)?;
            manifest
                .scalars
                .insert("count".into(), set.members.len() as f64);
            for (i, eq) in set.members.iter().enumerate() {
                manifest
                    .scalars
                    .insert(format!("residual_{i:03}"), eq.residual);
                manifest
                    .scalars
                    .insert(format!("morse_index_{i:03}"), eq.morse_index as f64);
            }
            emit_summary(emitter, &manifest.scalars, &manifest.verdicts)?;
            Ok(None)
        }
        "check_assumptions" => {
            manifest.phases.push("check_assumptions".into());
            let law = cfg.model.damping_law()?;
            let nl = cfg.model.nonlinearity_fn()?;
            let report = crate::model::check_assumptions(
                &law,
                &nl,
                exp.s_max.unwrap_or(1e3),
                exp.samples.unwrap_or(1000),
            )?;
            let m = &report.margins;
            for (k, v) in [
                ("margin_monotone", m.monotone),
                ("margin_positivity", m.positivity),
                ("margin_superlinear", m.superlinear),
                ("margin_g_second", m.g_second),
                ("margin_g_prime", m.g_prime),
                ("margin_gs_minus_4g", m.gs_minus_4g),
                ("margin_g_lower", m.g_lower),
            ] {
                manifest.scalars.insert(k.into(), v);
            }
            for (k, v) in [
                ("monotone_ok", report.monotone_ok),
                ("monotone_bypassed", report.monotone_bypassed),
                ("positivity_ok", report.positivity_ok),
                ("superlinear_ok", report.superlinear_ok),
                ("g_growth_ok", report.g_growth_ok),
                ("g_structure_ok", report.g_structure_ok),
                ("degenerate", report.degenerate_flag),
                ("all_ok", report.all_ok()),
            ] {
                manifest.verdicts.insert(k.into(), v);
            }
            emit_summary(emitter, &manifest.scalars, &manifest.verdicts)?;
            Ok(Some(report.all_ok()))
        }
        "dissipativity" => {
            manifest.phases.push("dissipativity".into());
            let spec = exp.ensemble_spec().expect("validated");
            let report = experiments::dissipativity_probe(
                &domain,
                &model,
                &icfg,
                &spec,
                exp.horizon.unwrap_or(100.0),
                exp.ball_margin.unwrap_or(0.05),
            )?;
            finish_probe(emitter, manifest, report)
        }
        "dissipativity_e1" => {
            manifest.phases.push("dissipativity_e1".into());
            let spec = exp.ensemble_spec().expect("validated");
            let report = experiments::e1_dissipativity_probe(
                &domain,
                &model,
                &icfg,
                &spec,
                exp.horizon.unwrap_or(100.0),
                exp.slope_tol.unwrap_or(1e-4),
            )?;
            finish_probe(emitter, manifest, report)
        }
        "lipschitz" => {
            manifest.phases.push("lipschitz".into());
            let pb = exp.pairs.as_ref().expect("validated");
            let base = EnsembleSpec {
                count: pb.count,
                norm_range: (0.5, 1.5),
                mode_band: domain.modes_per_axis.min(4),
                seed: pb.seed,
                decay: 2.0,
            };
            let pairs = experiments::sample_pairs(&domain, &base, pb.separation, pb.seed ^ 0xD1F);
            let report = experiments::lipschitz_probe(
                &domain,
                &model,
                &icfg,
                &pairs,
                exp.horizon.unwrap_or(5.0),
            )?;
            finish_probe(emitter, manifest, report)
        }
        "quasistability" => {
            manifest.phases.push("quasistability".into());
            let pb = exp.pairs.as_ref().expect("validated");
            let base = EnsembleSpec {
                count: pb.count,
                norm_range: (0.5, 1.5),
                mode_band: domain.modes_per_axis.min(4),
                seed: pb.seed,
                decay: 2.0,
            };
            let pairs = experiments::sample_pairs(&domain, &base, pb.separation, pb.seed ^ 0xD1F);
            let (report, _fit) = experiments::quasistability_probe(
                &domain,
                &model,
                &icfg,
                &pairs,
                exp.eta.unwrap_or(0.5),
                exp.gamma0,
            )?;
            finish_probe(emitter, manifest, report)
        }
        "attractor" => {
            // dependency resolution: the stationary set is computed first
            manifest.phases.push("equilibria".into());
            let set = steady::find_equilibria(&domain, &model, &exp.multistart_spec());
            if set.members.is_empty() {
                return Err(ExperimentError::NeedEquilibria.into());
            }
            emit_equilibria(emitter, &domain, &set)?;
            manifest.phases.push("attractor".into());
            let spec = exp.ensemble_spec().expect("validated");
            let (report, _augmented) = experiments::attractor_probe(
                &domain,
                &model,
                &icfg,
                &set,
                &spec,
                exp.horizon.unwrap_or(200.0),
                exp.burn_in,
                exp.tail_tol.unwrap_or(1e-3),
            )?;
            finish_probe(emitter, manifest, report)
        }
        "convergence" => {
            manifest.phases.push("convergence".into());
            let n_list = exp.n_list.clone().expect("validated");
            let model_block = cfg.model.clone();
            let exp_block = exp.clone();
            let build = move |d: &crate::spectral::SpectralDomain| {
                let m = model_block.build(d).expect("validated model");
                let s = exp_block.initial_state(d).expect("validated initial data");
                (m, s)
            };
            let report = experiments::galerkin_convergence_probe(
                cfg.domain.dim,
                cfg.domain.padding_factor,
                &n_list,
                &build,
                &icfg,
                exp.horizon.unwrap_or(5.0),
            )?;
            finish_probe(emitter, manifest, report)
        }
        other => Err(ConfigError::Semantic {
            key: "experiment.kind".into(),
            constraint: format!("unhandled kind `{other}`"),
        }
        .into()),
    }
}

fn finish_probe(
    emitter: &mut Emitter,
    manifest: &mut RunManifest,
    report: ProbeReport,
) -> Result<Option<bool>, RunError> {
    for t in &report.traces {
        emitter.emit_trace(t)?;
    }
    for (k, v) in &report.scalars {
        manifest.scalars.insert(k.clone(), *v);
    }
    for (k, v) in &report.verdicts {
        manifest.verdicts.insert(k.clone(), *v);
    }
    emit_summary(emitter, &manifest.scalars, &manifest.verdicts)?;
    Ok(Some(report.pass))
}

fn emit_summary(
    emitter: &mut Emitter,
    scalars: &BTreeMap<String, f64>,
    verdicts: &BTreeMap<String, bool>,
) -> Result<(), TraceError> {
    let mut tr = NamedTrace::new("summary", &["name", "value"], &["key", "1"]);
    // summary keeps the self-describing two-header shape; names go in a
    // sidecar column file since rows are numeric
    let mut names = String::new();
    let mut idx = 0.0;
    for (k, v) in scalars {
        names.push_str(&format!("{idx},{k}\n"));
        tr.push(vec![idx, *v]);
        idx += 1.0;
    }
    for (k, v) in verdicts {
        names.push_str(&format!("{idx},verdict:{k}\n"));
        tr.push(vec![idx, if *v { 1.0 } else { 0.0 }]);
        idx += 1.0;
    }
    emitter.emit_trace(&tr)?;
    emitter.emit_text("summary_names.csv", &format!("row,name\nindex,key\n{names}"))?;
    Ok(())
}

fn emit_equilibria(
    emitter: &mut Emitter,
    domain: &crate::spectral::SpectralDomain,
    set: &steady::EquilibriumSet,
) -> Result<(), TraceError> {
    for (i, eq) in set.members.iter().enumerate() {
        let mut tr = NamedTrace::new(
            format!("equilibrium_{i:03}"),
            &["flat_index", "lambda", "coeff"],
            &["1", "1", "1"],
        );
        for (j, c) in eq.u_star.coeffs.iter().enumerate() {
            tr.push(vec![j as f64, domain.eigenvalues[j], *c]);
        }
        emitter.emit_trace(&tr)?;
    }
    Ok(())
}
