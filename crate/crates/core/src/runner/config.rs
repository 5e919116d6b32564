//! Experiment configuration: JSON in, validated before anything runs.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::{ChaosObservable, Engine, FSpec};
use crate::error::{Error, Result};
use crate::exact::{Beta, ENUMERATION_CAP};
use crate::models::{Graph, ModelSpec};
use crate::valleys::{asymptotic_schedule, ValleyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Worker pool size; `None` lets rayon decide.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, rename = "assert")]
    pub assertions: Vec<Assertion>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Result file name, default `<name>.json`.
    #[serde(default)]
    pub json: Option<String>,
    /// Curve file name; no CSV is written when absent.
    #[serde(default)]
    pub csv: Option<String>,
}

/// `min <= metric <= max`, either side optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

fn default_n_sigma() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMethod {
    /// Single-edge E-A by 1-D and 2-D Gauss-Hermite quadrature.
    Quadrature,
    /// Direct variance over disorder plus the chaos integral of the kernel.
    Exact,
    /// Direct variance only; allows `beta = inf`.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    ChaosCurve {
        model: ModelSpec,
        beta: Beta,
        observable: ChaosObservable,
        #[serde(default)]
        t_grid: Option<Vec<f64>>,
        n_disorder: usize,
        #[serde(default = "exact_engine")]
        engine: Engine,
        #[serde(default = "default_n_sigma")]
        n_sigma: f64,
    },
    Variance {
        model: ModelSpec,
        beta: Beta,
        method: VarianceMethod,
        #[serde(default)]
        n_disorder: Option<usize>,
        #[serde(default)]
        t_grid: Option<Vec<f64>>,
        /// SK only: repeat the direct estimate over these sizes.
        #[serde(default)]
        sweep_sizes: Option<Vec<usize>>,
    },
    Plancherel {
        n_polys: usize,
        max_vars: usize,
        max_degree: u32,
        #[serde(default = "default_max_terms")]
        max_terms: usize,
    },
    Discrete {
        f: FSpec,
        k: usize,
        n_samples: usize,
        #[serde(default = "default_n_sigma")]
        n_sigma: f64,
    },
    Quenched {
        graph: Graph,
        beta: f64,
        t: f64,
        n_disorder: usize,
        #[serde(default = "exact_engine")]
        engine: Engine,
        #[serde(default = "default_n_sigma")]
        n_sigma: f64,
    },
    Valleys {
        model: ModelSpec,
        /// Start from the schedule of the size of `model`, then apply overrides.
        #[serde(default)]
        schedule: bool,
        #[serde(default)]
        r: Option<usize>,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        t: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
        n_disorder: usize,
    },
    Rem {
        n: usize,
        beta: Beta,
        t_grid: Vec<f64>,
        n_disorder: usize,
        #[serde(default = "default_n_sigma")]
        n_sigma: f64,
    },
    EaBounds {
        graph: Graph,
        beta: Beta,
        n_disorder: usize,
        #[serde(default = "default_n_sigma")]
        n_sigma: f64,
    },
}

fn exact_engine() -> Engine {
    Engine::Exact
}

fn default_max_terms() -> usize {
    6
}

fn need(cond: bool, field: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(field, reason))
    }
}

fn check_enumerable(model: &ModelSpec) -> Result<()> {
    model.validate()?;
    let n = model.n_sites();
    if n > ENUMERATION_CAP {
        return Err(Error::Resource {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

fn check_draws(n_disorder: usize) -> Result<()> {
    need(n_disorder >= 2, "n_disorder", format!("need at least 2 disorder draws, got {n_disorder}"))
}

fn check_variance_draws(n_disorder: Option<usize>) -> Result<()> {
    let n = n_disorder.unwrap_or(0);
    need(n >= 3, "n_disorder", format!("variance needs at least 3 disorder draws, got {n}"))
}

fn check_t_grid(grid: &[f64]) -> Result<()> {
    crate::analysis::chaos::check_grid(grid)
}

fn check_engine(engine: &Engine) -> Result<()> {
    if let Engine::Mc { samples, .. } = engine {
        need(*samples >= 2, "samples", "Monte Carlo engine needs at least 2 samples")?;
    }
    Ok(())
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::ChaosCurve { .. } => "chaos-curve",
            Experiment::Variance { .. } => "variance",
            Experiment::Plancherel { .. } => "plancherel",
            Experiment::Discrete { .. } => "discrete",
            Experiment::Quenched { .. } => "quenched",
            Experiment::Valleys { .. } => "valleys",
            Experiment::Rem { .. } => "rem",
            Experiment::EaBounds { .. } => "ea-bounds",
        }
    }

    /// Checks every precondition of the target operation; no computation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Experiment::ChaosCurve {
                model,
                beta,
                observable,
                t_grid,
                n_disorder,
                engine,
                n_sigma,
            } => {
                check_enumerable(model)?;
                check_draws(*n_disorder)?;
                check_engine(engine)?;
                need(*n_sigma > 0.0, "n_sigma", "must be positive")?;
                if let Some(grid) = t_grid {
                    check_t_grid(grid)?;
                }
                if matches!(engine, Engine::Mc { .. }) && beta.is_infinite() {
                    return Err(Error::invalid("beta", "Monte Carlo engine needs a finite beta"));
                }
                match observable {
                    ChaosObservable::OverlapMoment { k } => need(*k >= 1, "k", "moment order must be at least 1"),
                    ChaosObservable::BondOverlap => need(
                        matches!(model, ModelSpec::EdwardsAnderson { .. }),
                        "observable",
                        "bond overlap needs an Edwards-Anderson model",
                    ),
                    _ => Ok(()),
                }
            }
            Experiment::Variance {
                model,
                beta,
                method,
                n_disorder,
                t_grid,
                sweep_sizes,
            } => {
                model.validate()?;
                match method {
                    VarianceMethod::Quadrature => {
                        let single = matches!(model, ModelSpec::EdwardsAnderson { graph } if graph.n_edges() == 1);
                        need(single, "model", "quadrature method needs the single-edge Edwards-Anderson model")?;
                        need(!beta.is_infinite(), "beta", "quadrature method needs a finite beta")?;
                    }
                    VarianceMethod::Exact => {
                        check_enumerable(model)?;
                        need(!beta.is_infinite(), "beta", "chaos integral needs a finite beta")?;
                        check_variance_draws(*n_disorder)?;
                        if let Some(grid) = t_grid {
                            check_t_grid(grid)?;
                            need(grid[0] == 0.0, "t_grid", "integration grid must start at 0")?;
                        }
                    }
                    VarianceMethod::Direct => check_variance_draws(*n_disorder)?,
                }
                need(*beta != Beta::Finite(0.0), "beta", "F is infinite at beta = 0")?;
                if *method != VarianceMethod::Direct {
                    need(sweep_sizes.is_none(), "sweep_sizes", "size sweeps use the direct method")?;
                }
                match sweep_sizes {
                    Some(sizes) => {
                        need(matches!(model, ModelSpec::Sk { .. }), "sweep_sizes", "size sweeps are for SK")?;
                        need(!sizes.is_empty(), "sweep_sizes", "empty size list")?;
                        for &n in sizes {
                            need(n >= 2, "sweep_sizes", format!("size {n} below 2"))?;
                            check_enumerable(&ModelSpec::sk(n)?)?;
                        }
                        Ok(())
                    }
                    None => check_enumerable(model),
                }
            }
            Experiment::Plancherel {
                n_polys,
                max_vars,
                max_degree,
                max_terms,
            } => {
                need(*n_polys >= 1, "n_polys", "need at least one polynomial")?;
                need((1..=8).contains(max_vars), "max_vars", "must lie in 1..=8")?;
                need(*max_degree <= 20, "max_degree", "must be at most 20")?;
                need(*max_terms >= 1, "max_terms", "need at least one term")
            }
            Experiment::Discrete { f, k, n_samples, n_sigma } => {
                if let FSpec::SkFreeEnergy { n_sites, beta } = f {
                    check_enumerable(&ModelSpec::sk(*n_sites)?)?;
                    need(beta.is_finite() && *beta > 0.0, "beta", "need 0 < beta < inf")?;
                }
                let n = f.n_inputs();
                need(n >= 1, "f", "function has no inputs")?;
                need(*k <= n, "k", format!("subset size {k} exceeds n = {n}"))?;
                need(*n_samples >= 3, "n_samples", "need at least three samples")?;
                need(*n_sigma > 0.0, "n_sigma", "must be positive")
            }
            Experiment::Quenched {
                graph,
                beta,
                t,
                n_disorder,
                engine,
                n_sigma,
            } => {
                crate::analysis::variance::quenched_bound(graph, *beta, *t)?;
                check_enumerable(&ModelSpec::edwards_anderson(graph.clone()))?;
                check_draws(*n_disorder)?;
                check_engine(engine)?;
                need(*n_sigma > 0.0, "n_sigma", "must be positive")
            }
            Experiment::Valleys {
                model, n_disorder, alpha, ..
            } => {
                check_enumerable(model)?;
                self.valley_params()?.validate()?;
                need(*n_disorder >= 1, "n_disorder", "need at least one disorder draw")?;
                if let Some(a) = alpha {
                    need(*a > 0.0 && *a <= 1.0, "alpha", format!("must lie in (0, 1], got {a}"))?;
                }
                Ok(())
            }
            Experiment::Rem {
                n,
                t_grid,
                n_disorder,
                n_sigma,
                ..
            } => {
                check_enumerable(&ModelSpec::rem(*n)?)?;
                check_t_grid(t_grid)?;
                check_draws(*n_disorder)?;
                need(*n_sigma > 0.0, "n_sigma", "must be positive")
            }
            Experiment::EaBounds {
                graph,
                beta,
                n_disorder,
                n_sigma,
            } => {
                check_enumerable(&ModelSpec::edwards_anderson(graph.clone()))?;
                check_variance_draws(Some(*n_disorder))?;
                need(*beta != Beta::Finite(0.0), "beta", "F is infinite at beta = 0")?;
                need(*n_sigma > 0.0, "n_sigma", "must be positive")
            }
        }
    }

    /// Resolved valley parameters (schedule plus overrides).
    pub fn valley_params(&self) -> Result<ValleyParams> {
        let Experiment::Valleys {
            model,
            schedule,
            r,
            epsilon,
            delta,
            beta,
            t,
            ..
        } = self
        else {
            return Err(Error::Unsupported("not a valleys experiment".into()));
        };
        let base = if *schedule {
            Some(asymptotic_schedule(model.n_sites())?)
        } else {
            None
        };
        let pick = |over: Option<f64>, from: Option<f64>, field: &'static str| {
            over.or(from)
                .ok_or_else(|| Error::invalid(field, "missing; give a value or set \"schedule\": true"))
        };
        Ok(ValleyParams {
            r: r.or(base.map(|b| b.r))
                .ok_or_else(|| Error::invalid("r", "missing; give a value or set \"schedule\": true"))?,
            epsilon: pick(*epsilon, base.map(|b| b.epsilon), "epsilon")?,
            delta: pick(*delta, base.map(|b| b.delta), "delta")?,
            beta: pick(*beta, base.map(|b| b.beta), "beta")?,
            t: pick(*t, base.map(|b| b.t), "t")?,
        })
    }

    /// Names of the scalar metrics this experiment reports, usable in `assert`.
    pub fn metric_names(&self) -> BTreeSet<&'static str> {
        let names: &[&'static str] = match self {
            Experiment::ChaosCurve { .. } => &["phi_first", "phi_last", "stderr_last", "monotone", "violations"],
            Experiment::Variance {
                method, model, sweep_sizes, ..
            } => match (method, sweep_sizes.is_some()) {
                (_, true) => &["max_scaled", "min_scaled"],
                (VarianceMethod::Quadrature, _) => &["var_direct", "var_integral", "abs_diff", "tail_bound"],
                (VarianceMethod::Exact, _) if matches!(model, ModelSpec::EdwardsAnderson { .. }) => &[
                    "var_direct",
                    "var_direct_stderr",
                    "var_integral",
                    "var_integral_stderr",
                    "abs_diff",
                    "z_diff",
                    "lower_bound",
                ],
                (VarianceMethod::Exact, _) => &[
                    "var_direct",
                    "var_direct_stderr",
                    "var_integral",
                    "var_integral_stderr",
                    "abs_diff",
                    "z_diff",
                ],
                (VarianceMethod::Direct, _) if matches!(model, ModelSpec::EdwardsAnderson { .. }) => {
                    &["var_direct", "var_direct_stderr", "lower_bound"]
                }
                (VarianceMethod::Direct, _) => &["var_direct", "var_direct_stderr"],
            },
            Experiment::Plancherel { .. } => &["max_abs_error", "max_bound_excess", "g1_squared_gap"],
            Experiment::Discrete { .. } => &["lhs", "lhs_stderr", "rhs", "rhs_stderr", "var_f", "holds"],
            Experiment::Quenched { .. } => &["estimate", "stderr", "bound", "holds"],
            Experiment::Valleys { .. } => &["pass_rate", "passes"],
            Experiment::Rem { .. } => &["phi_first", "phi_last", "stderr_last", "target", "monotone", "z_last"],
            Experiment::EaBounds { .. } => &["var_est", "stderr", "bound", "margin", "holds"],
        };
        names.iter().copied().collect()
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if let Some(t) = self.threads {
            need(t >= 1, "threads", "need at least one thread")?;
        }
        let known = self.experiment.metric_names();
        for a in &self.assertions {
            if !known.contains(a.metric.as_str()) {
                return Err(Error::invalid(
                    "metric",
                    format!(
                        "unknown metric {:?} for {}; available: {}",
                        a.metric,
                        self.experiment.kind(),
                        known.iter().copied().collect::<Vec<_>>().join(", ")
                    ),
                ));
            }
            need(
                a.min.is_some() || a.max.is_some(),
                "assert",
                format!("assertion on {:?} has neither min nor max", a.metric),
            )?;
        }
        Ok(())
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.kind().to_string())
    }
}
