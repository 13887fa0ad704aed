//! Flat key=value config files with [problem], [algorithm] and [run]
//! sections. Unknown keys are hard errors so typos cannot silently fall
//! back to defaults.

use crate::engine::{set_param, RunConfig};
use crate::error::{invalid, Result};
use crate::optim::{Algorithm, EtaMode};
use crate::problems::{make_counterexample, make_logistic, make_quadratic, Problem, ProblemKind};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub n_clients: usize,
    pub dim: usize,
    pub center_spread: f64,
    pub curvature_lo: f64,
    pub curvature_hi: f64,
    pub noise_sigma: f64,
    pub samples_per_client: usize,
    pub label_skew: f64,
    pub seed: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            kind: ProblemKind::HeterogeneousQuadratic,
            n_clients: 8,
            dim: 20,
            center_spread: 2.0,
            curvature_lo: 0.5,
            curvature_hi: 2.0,
            noise_sigma: 0.5,
            samples_per_client: 50,
            label_skew: 0.5,
            seed: 1,
        }
    }
}

impl ProblemConfig {
    pub fn build(&self) -> Result<Problem> {
        match self.kind {
            ProblemKind::CounterExample1D => Ok(make_counterexample()),
            ProblemKind::HeterogeneousQuadratic => make_quadratic(
                self.n_clients,
                self.dim,
                self.center_spread,
                (self.curvature_lo, self.curvature_hi),
                self.noise_sigma,
                self.seed,
            ),
            ProblemKind::SyntheticLogistic => make_logistic(
                self.n_clients,
                self.dim,
                self.samples_per_client,
                self.label_skew,
                self.seed,
            ),
        }
    }
}

pub fn parse_problem_kind(s: &str) -> Result<ProblemKind> {
    match s {
        "counterexample" => Ok(ProblemKind::CounterExample1D),
        "quadratic" => Ok(ProblemKind::HeterogeneousQuadratic),
        "logistic" => Ok(ProblemKind::SyntheticLogistic),
        other => invalid(format!(
            "unknown problem kind '{other}' (expected counterexample, quadratic, logistic)"
        )),
    }
}

/// Whole parsed configuration: a problem recipe plus a run setup.
#[derive(Debug, Clone)]
pub struct FullConfig {
    pub problem: ProblemConfig,
    pub run: RunConfig,
    pub out: Option<String>,
}

impl Default for FullConfig {
    fn default() -> Self {
        FullConfig {
            problem: ProblemConfig::default(),
            run: RunConfig::new(Algorithm::Fafed),
            out: None,
        }
    }
}

fn parse_sections(body: &str) -> Result<BTreeMap<String, Vec<(String, String)>>> {
    let mut sections: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut current = String::new();
    for (lineno, raw) in body.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return invalid(format!("line {}: malformed section '{raw}'", lineno + 1));
            }
            current = line[1..line.len() - 1].trim().to_string();
            match current.as_str() {
                "problem" | "algorithm" | "run" => {}
                other => return invalid(format!("line {}: unknown section '{other}'", lineno + 1)),
            }
            sections.entry(current.clone()).or_default();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return invalid(format!(
                "line {}: expected key = value, got '{raw}'",
                lineno + 1
            ));
        };
        if current.is_empty() {
            return invalid(format!(
                "line {}: key '{}' appears before any section header",
                lineno + 1,
                k.trim()
            ));
        }
        sections
            .get_mut(&current)
            .unwrap()
            .push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(sections)
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| crate::error::SimError::InvalidArgument(format!("{key}: bad integer '{v}'")))
}

fn parse_f64v(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| crate::error::SimError::InvalidArgument(format!("{key}: bad number '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => invalid(format!("{key}: bad boolean '{v}'")),
    }
}

/// Parse config text into a full configuration, starting from defaults.
pub fn parse_config(body: &str) -> Result<FullConfig> {
    let sections = parse_sections(body)?;
    let mut cfg = FullConfig::default();

    if let Some(kvs) = sections.get("problem") {
        for (k, v) in kvs {
            match k.as_str() {
                "kind" => cfg.problem.kind = parse_problem_kind(v)?,
                "n" | "n_clients" => cfg.problem.n_clients = parse_u64(k, v)? as usize,
                "dim" => cfg.problem.dim = parse_u64(k, v)? as usize,
                "center_spread" => cfg.problem.center_spread = parse_f64v(k, v)?,
                "curvature_lo" => cfg.problem.curvature_lo = parse_f64v(k, v)?,
                "curvature_hi" => cfg.problem.curvature_hi = parse_f64v(k, v)?,
                "noise_sigma" => cfg.problem.noise_sigma = parse_f64v(k, v)?,
                "samples_per_client" => cfg.problem.samples_per_client = parse_u64(k, v)? as usize,
                "label_skew" => cfg.problem.label_skew = parse_f64v(k, v)?,
                "seed" => cfg.problem.seed = parse_u64(k, v)?,
                other => return invalid(format!("unknown key '{other}' in [problem]")),
            }
        }
    }

    if let Some(kvs) = sections.get("algorithm") {
        for (k, v) in kvs {
            match k.as_str() {
                "algo" | "algorithm" => cfg.run.algorithm = Algorithm::parse(v)?,
                "eta_mode" => {
                    cfg.run.hp.eta_mode = match v.as_str() {
                        "decaying" => EtaMode::DecayingEq5,
                        "constant" => EtaMode::Constant,
                        other => {
                            return invalid(format!(
                                "eta_mode: '{other}' (expected decaying or constant)"
                            ))
                        }
                    }
                }
                "eta" | "rho_hbar" | "rho" | "beta" | "c" | "w" | "q" | "b" | "batch"
                | "init_batch" | "adam_beta1" | "adam_beta2" | "adam_tau" | "adam_eta_global" => {
                    set_param(&mut cfg.run, k, parse_f64v(k, v)?)?
                }
                other => return invalid(format!("unknown key '{other}' in [algorithm]")),
            }
        }
    }

    if let Some(kvs) = sections.get("run") {
        for (k, v) in kvs {
            match k.as_str() {
                "t" | "total_steps" => cfg.run.total_steps = parse_u64(k, v)?,
                "seed" => cfg.run.seed = parse_u64(k, v)?,
                "record_every" => cfg.run.record_every = parse_u64(k, v)?,
                "x0" => cfg.run.x0 = Some(parse_f64v(k, v)?),
                "audit" => cfg.run.audit = parse_bool(k, v)?,
                "workers" => cfg.run.workers = parse_u64(k, v)? as usize,
                "out" => cfg.out = Some(v.clone()),
                other => return invalid(format!("unknown key '{other}' in [run]")),
            }
        }
    }

    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<FullConfig> {
    let body = std::fs::read_to_string(path)?;
    parse_config(&body)
}
