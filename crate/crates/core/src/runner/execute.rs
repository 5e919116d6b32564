use std::collections::BTreeMap;

use rand::Rng;
use serde_json::{json, Value};

use super::config::{Experiment, VarianceMethod};
use crate::analysis::{
    chaos_curve, check_complete_monotonicity, default_grid, discrete_perturb_experiment, ea_variance_lower_bound,
    gaussian_variance_oracle, hermite_variance, quenched_chaos_statistic, rem_overlap_curve, single_edge_chaos_curve,
    variance_direct, variance_from_chaos_integral, variance_lower_bound_general, ChaosCurve, ChaosObservable, Engine,
    Polynomial,
};
use crate::disorder::SeedRecord;
use crate::error::{Error, Result};
use crate::exact::Beta;
use crate::models::ModelSpec;
use crate::quadrature::single_edge_variance;
use crate::valleys::valley_pass_rate;

/// Scalar metrics for `assert`, the full result, and an optional CSV curve.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub result: Value,
    pub csv: Option<String>,
}

pub(crate) fn has_curve(exp: &Experiment) -> bool {
    match exp {
        Experiment::ChaosCurve { .. } | Experiment::Rem { .. } => true,
        Experiment::Variance {
            method, sweep_sizes, ..
        } => *method != VarianceMethod::Direct || sweep_sizes.is_some(),
        _ => false,
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Numeric(format!("serialize: {e}")))
}

fn metrics<const K: usize>(pairs: [(&str, f64); K]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn curve_csv(curve: &ChaosCurve) -> String {
    let mut out = String::from("t,estimate,stderr\n");
    for ((t, m), s) in curve.t_grid.iter().zip(&curve.phi_hat).zip(&curve.stderr) {
        out.push_str(&format!("{t},{m},{s}\n"));
    }
    out
}

fn curve_metrics(curve: &ChaosCurve, n_sigma: f64) -> (BTreeMap<String, f64>, Value) {
    let report = check_complete_monotonicity(curve, n_sigma);
    let last = curve.phi_hat.len() - 1;
    let m = metrics([
        ("phi_first", curve.phi_hat[0]),
        ("phi_last", curve.phi_hat[last]),
        ("stderr_last", curve.stderr[last]),
        ("monotone", flag(report.passed())),
        ("violations", report.violations.len() as f64),
    ]);
    (m, json!({ "curve": curve, "monotonicity": report }))
}

/// Runs a validated experiment. Seeds derive from `seed` only.
pub fn execute(exp: &Experiment, seed: SeedRecord) -> Result<Outcome> {
    exp.validate()?;
    match exp {
        Experiment::ChaosCurve {
            model,
            beta,
            observable,
            t_grid,
            n_disorder,
            engine,
            n_sigma,
        } => {
            let grid = t_grid.clone().unwrap_or_else(default_grid);
            let curve = chaos_curve(model, *beta, *observable, &grid, *n_disorder, *engine, seed)?;
            let (metrics, result) = curve_metrics(&curve, *n_sigma);
            Ok(Outcome {
                csv: Some(curve_csv(&curve)),
                metrics,
                result,
            })
        }
        Experiment::Variance {
            model,
            beta,
            method,
            n_disorder,
            t_grid,
            sweep_sizes,
        } => run_variance(model, *beta, *method, n_disorder.unwrap_or(0), t_grid.as_deref(), sweep_sizes.as_deref(), seed),
        Experiment::Plancherel {
            n_polys,
            max_vars,
            max_degree,
            max_terms,
        } => {
            let mut rng = seed.rng();
            let mut max_err: f64 = 0.0;
            let mut max_excess = f64::NEG_INFINITY;
            for _ in 0..*n_polys {
                let nv = rng.random_range(1..=*max_vars);
                let f = Polynomial::random(&mut rng, nv, *max_degree, *max_terms)?;
                let h = hermite_variance(&f)?.variance;
                max_err = max_err.max((h - gaussian_variance_oracle(&f)).abs());
                max_excess = max_excess.max(variance_lower_bound_general(&f).per_coordinate - h);
            }
            let g1sq = Polynomial::from_terms(1, [(vec![2], 1.0)])?;
            let gap = (variance_lower_bound_general(&g1sq).per_coordinate - hermite_variance(&g1sq)?.variance).abs();
            let m = metrics([
                ("max_abs_error", max_err),
                ("max_bound_excess", max_excess),
                ("g1_squared_gap", gap),
            ]);
            Ok(Outcome {
                result: to_value(&m)?,
                metrics: m,
                csv: None,
            })
        }
        Experiment::Discrete { f, k, n_samples, n_sigma } => {
            let report = discrete_perturb_experiment(f, *k, *n_samples, seed)?;
            let m = metrics([
                ("lhs", report.lhs.mean),
                ("lhs_stderr", report.lhs.stderr),
                ("rhs", report.rhs),
                ("rhs_stderr", report.rhs_stderr),
                ("var_f", report.var_f.mean),
                ("holds", flag(report.holds_within(*n_sigma))),
            ]);
            Ok(Outcome {
                result: to_value(&report)?,
                metrics: m,
                csv: None,
            })
        }
        Experiment::Quenched {
            graph,
            beta,
            t,
            n_disorder,
            engine,
            n_sigma,
        } => {
            let report = quenched_chaos_statistic(graph, *beta, *t, *n_disorder, *engine, seed)?;
            let m = metrics([
                ("estimate", report.estimate.mean),
                ("stderr", report.estimate.stderr),
                ("bound", report.bound),
                ("holds", flag(report.holds_within(*n_sigma))),
            ]);
            Ok(Outcome {
                result: to_value(&report)?,
                metrics: m,
                csv: None,
            })
        }
        Experiment::Valleys {
            model, alpha, n_disorder, ..
        } => {
            let params = exp.valley_params()?;
            let rate = valley_pass_rate(model, &params, *alpha, *n_disorder, seed)?;
            let m = metrics([("pass_rate", rate.rate), ("passes", rate.passes as f64)]);
            Ok(Outcome {
                result: json!({ "params": params, "threshold": "empirical", "pass_rate": rate }),
                metrics: m,
                csv: None,
            })
        }
        Experiment::Rem {
            n,
            beta,
            t_grid,
            n_disorder,
            n_sigma,
        } => {
            let curve = rem_overlap_curve(*n, *beta, t_grid, *n_disorder, seed)?;
            let (mut m, result) = curve_metrics(&curve, *n_sigma);
            let target = 0.5f64.powi(*n as i32);
            let last = curve.phi_hat.len() - 1;
            let (phi, se) = (curve.phi_hat[last], curve.stderr[last]);
            let z = if se > 0.0 {
                (phi - target) / se
            } else if phi == target {
                0.0
            } else {
                f64::INFINITY
            };
            m.insert("target".into(), target);
            m.insert("z_last".into(), z);
            Ok(Outcome {
                csv: Some(curve_csv(&curve)),
                metrics: m,
                result,
            })
        }
        Experiment::EaBounds {
            graph,
            beta,
            n_disorder,
            n_sigma,
        } => {
            let model = ModelSpec::edwards_anderson(graph.clone());
            let direct = variance_direct(&model, *beta, *n_disorder, seed)?;
            let bound = ea_variance_lower_bound(graph, *beta);
            let margin = direct.var.mean + n_sigma * direct.var.stderr - bound;
            let m = metrics([
                ("var_est", direct.var.mean),
                ("stderr", direct.var.stderr),
                ("bound", bound),
                ("margin", margin),
                ("holds", flag(margin >= 0.0)),
            ]);
            Ok(Outcome {
                result: json!({ "direct": direct, "bound": bound }),
                metrics: m,
                csv: None,
            })
        }
    }
}

fn run_variance(
    model: &ModelSpec,
    beta: Beta,
    method: VarianceMethod,
    n_disorder: usize,
    t_grid: Option<&[f64]>,
    sweep: Option<&[usize]>,
    seed: SeedRecord,
) -> Result<Outcome> {
    if let Some(sizes) = sweep {
        let mut rows = Vec::new();
        let mut csv = String::from("n,estimate,stderr,scaled\n");
        for &n in sizes {
            let d = variance_direct(&ModelSpec::sk(n)?, beta, n_disorder, seed.child(n as u64))?;
            let scaled = d.var.mean * (n as f64).ln() / n as f64;
            csv.push_str(&format!("{n},{},{},{scaled}\n", d.var.mean, d.var.stderr));
            rows.push(json!({ "n": n, "var": d.var, "scaled": scaled }));
        }
        let scaled: Vec<f64> = rows.iter().filter_map(|r| r["scaled"].as_f64()).collect();
        let m = metrics([
            ("max_scaled", scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ("min_scaled", scaled.iter().copied().fold(f64::INFINITY, f64::min)),
        ]);
        return Ok(Outcome {
            result: json!({ "sweep": rows, "note": "var F log N / N, reported only" }),
            metrics: m,
            csv: Some(csv),
        });
    }
    let grid = t_grid.map(<[f64]>::to_vec).unwrap_or_else(default_grid);
    let lower = match model {
        ModelSpec::EdwardsAnderson { graph } => Some(ea_variance_lower_bound(graph, beta)),
        _ => None,
    };
    match method {
        VarianceMethod::Quadrature => {
            let b = beta.value();
            let var_direct = single_edge_variance(b);
            let curve = single_edge_chaos_curve(b, &grid)?;
            let integral = variance_from_chaos_integral(&curve)?;
            let m = metrics([
                ("var_direct", var_direct),
                ("var_integral", integral.value),
                ("abs_diff", (var_direct - integral.value).abs()),
                ("tail_bound", integral.tail_bound),
            ]);
            Ok(Outcome {
                result: json!({ "var_direct": var_direct, "var_integral": integral, "curve": curve }),
                metrics: m,
                csv: Some(curve_csv(&curve)),
            })
        }
        VarianceMethod::Exact => {
            let direct = variance_direct(model, beta, n_disorder, seed.child(0))?;
            let curve = chaos_curve(model, beta, ChaosObservable::Kernel, &grid, n_disorder, Engine::Exact, seed.child(1))?;
            let integral = variance_from_chaos_integral(&curve)?;
            let diff = (direct.var.mean - integral.value).abs();
            let se = direct.var.stderr.hypot(integral.stderr);
            let mut m = metrics([
                ("var_direct", direct.var.mean),
                ("var_direct_stderr", direct.var.stderr),
                ("var_integral", integral.value),
                ("var_integral_stderr", integral.stderr),
                ("abs_diff", diff),
                ("z_diff", if se > 0.0 { diff / se } else { 0.0 }),
            ]);
            if let Some(lb) = lower {
                m.insert("lower_bound".into(), lb);
            }
            Ok(Outcome {
                result: json!({ "direct": direct, "integral": integral, "lower_bound": lower, "curve": curve }),
                metrics: m,
                csv: Some(curve_csv(&curve)),
            })
        }
        VarianceMethod::Direct => {
            let direct = variance_direct(model, beta, n_disorder, seed)?;
            let mut m = metrics([("var_direct", direct.var.mean), ("var_direct_stderr", direct.var.stderr)]);
            if let Some(lb) = lower {
                m.insert("lower_bound".into(), lb);
            }
            Ok(Outcome {
                result: json!({ "direct": direct, "lower_bound": lower }),
                metrics: m,
                csv: None,
            })
        }
    }
}
