//! Command execution. Every command writes tidy CSV tables and prints a
//! short summary.

use std::fs::File;
use std::path::Path;

use idm::inference::bootstrap::BootstrapConfig;
use idm::{
    bootstrap_ci, build_counting_data, correlation, correlation_mc, fit_mle, nelson_aalen,
    run_scenario_study, s_os, s_pfs, sample_cohort, transition_matrix, ClockConvention, IdmParams, MomentSet,
    ScenarioStudy, Statistic, Transition,
};
use serde::Serialize;

use crate::config::{FamilyName, RunConfig};
use crate::error::CliError;
use crate::ingest::{ingest_csv, write_subjects};

fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn data_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.data.path.as_deref().ok_or_else(|| CliError::Validation("no data file: give --data or [data] path".into()))
}

#[derive(Serialize)]
struct FitRow<'a> {
    family: &'a str,
    clock: String,
    transition: String,
    scale: f64,
    shape: f64,
    events: usize,
    fixed: bool,
    loglik: f64,
    converged: bool,
    iterations: usize,
    gradient_norm: f64,
}

#[derive(Serialize)]
struct CumulativeHazardRow {
    transition: String,
    time: f64,
    fitted: f64,
    nelson_aalen: Option<f64>,
}

fn fit(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let records = ingest_csv(data_path(cfg)?)?;
    let data = build_counting_data(&records)?;
    let family = cfg.fit.family.unwrap_or(FamilyName::Exponential);
    let clock: ClockConvention = cfg.fit.clock.expect("resolved").into();
    let res = fit_mle(&data, family.into(), clock, &cfg.fit_options())?;
    let family_name = match family {
        FamilyName::Exponential => "exponential",
        FamilyName::Weibull => "weibull",
        FamilyName::WeibullCommonShape => "weibull-common-shape",
    };
    let rows: Vec<FitRow> = Transition::ALL
        .into_iter()
        .map(|tr| {
            let f = res.params_hat.hazard(tr).family;
            FitRow {
                family: family_name,
                clock: clock.to_string(),
                transition: tr.to_string(),
                scale: f.scale(),
                shape: f.shape(),
                events: data.n_events(tr),
                fixed: res.fixed.contains(&tr),
                loglik: res.loglik,
                converged: res.converged,
                iterations: res.iterations,
                gradient_norm: res.gradient_norm,
            }
        })
        .collect();
    write_table(&out.join("fit.csv"), &rows)?;

    let mut curves = Vec::new();
    for tr in Transition::ALL {
        let na = nelson_aalen(&data, tr);
        let on_study_time = !(tr == Transition::OneTwo && clock == ClockConvention::SemiMarkov);
        for &t in cfg.grid.times.as_deref().unwrap_or_default() {
            curves.push(CumulativeHazardRow {
                transition: tr.to_string(),
                time: t,
                fitted: res.params_hat.hazard(tr).family.cumulative(t),
                nelson_aalen: on_study_time.then(|| na.eval(t)),
            });
        }
    }
    write_table(&out.join("cumulative_hazard.csv"), &curves)?;

    println!("fit {family_name} / {clock}: loglik {:.6}, converged {}", res.loglik, res.converged);
    for (r, state) in rows.iter().zip([0, 0, 1]) {
        let exposure = data.exposure(state);
        if family == FamilyName::Exponential {
            println!(
                "  {}: rate {} = {} events / {} exposure{}",
                r.transition,
                r.scale,
                r.events,
                exposure,
                if r.fixed { " (fixed at floor)" } else { "" }
            );
        } else {
            println!("  {}: scale {} shape {} ({} events)", r.transition, r.scale, r.shape, r.events);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ProbRow {
    s: f64,
    t: f64,
    t1: Option<f64>,
    p00: f64,
    p01: f64,
    p02: f64,
    p11: f64,
    p12: f64,
}

fn probs(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let p = cfg.params()?;
    let q = cfg.quadrature()?;
    let mut rows = Vec::new();
    for &s in cfg.grid.s.as_deref().unwrap_or_default() {
        for &t in cfg.grid.times.as_deref().unwrap_or_default().iter().filter(|&&t| t >= s) {
            let t1 = match p.clock() {
                ClockConvention::SemiMarkov => Some(cfg.grid.t1.unwrap_or(s)),
                _ => cfg.grid.t1,
            };
            let m = transition_matrix(&p, s, t, t1, &q)?;
            rows.push(ProbRow { s, t, t1, p00: m.p00, p01: m.p01, p02: m.p02, p11: m.p11, p12: m.p12 });
        }
    }
    write_table(&out.join("probs.csv"), &rows)?;
    println!("{} transition matrices written to {}", rows.len(), out.join("probs.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    time: f64,
    s_pfs: f64,
    s_os: f64,
}

fn curves(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let p = cfg.params()?;
    let q = cfg.quadrature()?;
    let rows = cfg
        .grid
        .times
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(|&t| Ok(CurveRow { time: t, s_pfs: s_pfs(&p, t)?, s_os: s_os(&p, t, &q)? }))
        .collect::<Result<Vec<_>, idm::IdmError>>()?;
    write_table(&out.join("curves.csv"), &rows)?;
    println!("{} survival points written to {}", rows.len(), out.join("curves.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct CorrRow {
    source: String,
    method: &'static str,
    mean_pfs: f64,
    mean_os: f64,
    var_pfs: f64,
    var_os: f64,
    e_product: f64,
    covariance: f64,
    correlation: f64,
    mc_se: Option<f64>,
    ci_lower: Option<f64>,
    ci_upper: Option<f64>,
    level: Option<f64>,
    bootstrap_failures: Option<usize>,
}

impl CorrRow {
    fn new(source: &str, method: &'static str, m: &MomentSet) -> Self {
        CorrRow {
            source: source.to_string(),
            method,
            mean_pfs: m.mean_pfs,
            mean_os: m.mean_os,
            var_pfs: m.var_pfs,
            var_os: m.var_os,
            e_product: m.e_product,
            covariance: m.covariance,
            correlation: m.correlation,
            mc_se: m.mc_se,
            ci_lower: None,
            ci_upper: None,
            level: None,
            bootstrap_failures: None,
        }
    }
}

#[derive(Serialize)]
struct ReplicateRow {
    replicate: usize,
    value: Option<f64>,
}

fn corr(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let q = cfg.quadrature()?;
    let seed = cfg.seed.unwrap_or(0);
    let (params, source, records) = match &cfg.data.path {
        Some(path) => {
            let records = ingest_csv(path)?;
            let estimator = cfg.estimator()?;
            let fit = estimator.fit(&build_counting_data(&records)?, &cfg.fit_options())?;
            (fit.params_hat, format!("fit:{estimator}"), Some((records, estimator)))
        }
        None => (cfg.params()?, "model".to_string(), None),
    };
    let analytic = correlation(&params, &q)?;
    let mut rows = vec![CorrRow::new(&source, "analytic", &analytic)];
    println!("{source}: analytic correlation {:.6}", analytic.correlation);
    let paths = cfg.monte_carlo.paths.unwrap_or(0);
    if paths > 0 {
        let mc = correlation_mc(&params, paths, seed)?;
        println!("{source}: monte-carlo correlation {:.6} (s.e. {:.6}, {paths} paths)", mc.correlation, mc.mc_se.unwrap_or(f64::NAN));
        rows.push(CorrRow::new(&source, "monte-carlo", &mc));
    }
    if let Some(b) = cfg.bootstrap.replicates {
        let Some((records, estimator)) = &records else {
            return Err(CliError::Validation("bootstrap intervals need --data".into()));
        };
        let res = bootstrap_ci(
            records,
            &BootstrapConfig {
                estimator: *estimator,
                statistic: Statistic::Correlation,
                method: cfg.bootstrap_method()?,
                replicates: b,
                seed,
                level: cfg.bootstrap.level.unwrap_or(0.95),
                fit: cfg.fit_options(),
                quadrature: q,
            },
        )?;
        let row = &mut rows[0];
        row.ci_lower = Some(res.lower);
        row.ci_upper = Some(res.upper);
        row.level = Some(res.level);
        row.bootstrap_failures = Some(res.failures);
        println!(
            "{source}: {:.0}% bootstrap interval [{:.6}; {:.6}] from {} replicates ({} failed)",
            100.0 * res.level,
            res.lower,
            res.upper,
            res.successes,
            res.failures
        );
        let reps: Vec<ReplicateRow> =
            res.replicates.iter().enumerate().map(|(i, v)| ReplicateRow { replicate: i, value: *v }).collect();
        write_table(&out.join("bootstrap_replicates.csv"), &reps)?;
    }
    write_table(&out.join("corr.csv"), &rows)?;
    Ok(())
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let p = cfg.params()?;
    let n = cfg.simulate.n.unwrap_or(500);
    let cohort = sample_cohort(&p, n, &cfg.censoring.spec()?, cfg.seed.unwrap_or(0))?;
    let path = out.join("cohort.csv");
    write_subjects(File::create(&path)?, &cohort)?;
    let progressed = cohort.iter().filter(|r| r.pd_status == idm::PdStatus::Event).count();
    println!("{n} subjects written to {} ({progressed} with observed progression)", path.display());
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow {
    estimator: String,
    truth: f64,
    n_ok: usize,
    n_failed: usize,
    mean: f64,
    sd: f64,
    se_mean: f64,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

#[derive(Serialize)]
struct StudyRow {
    replication: usize,
    estimator: String,
    correlation: Option<f64>,
    converged: Option<bool>,
    error: Option<String>,
}

fn study(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let params: IdmParams = cfg.params()?;
    let study = ScenarioStudy {
        params,
        n_subjects: cfg.study.n_subjects.unwrap_or(500),
        n_replications: cfg.study.n_replications.unwrap_or(1000),
        estimators: cfg.estimators()?,
        seed: cfg.seed.ok_or_else(|| CliError::Validation("study requires a seed".into()))?,
        censoring: cfg.censoring.spec()?,
        fit: cfg.fit_options(),
        quadrature: cfg.quadrature()?,
    };
    let res = run_scenario_study(&study)?;
    let rows: Vec<StudyRow> = res
        .rows
        .iter()
        .map(|r| StudyRow {
            replication: r.replication,
            estimator: r.estimator.to_string(),
            correlation: r.correlation,
            converged: r.converged,
            error: r.error.clone(),
        })
        .collect();
    write_table(&out.join("study_replications.csv"), &rows)?;
    let summary: Vec<SummaryRow> = res
        .summaries
        .iter()
        .map(|s| SummaryRow {
            estimator: s.estimator.to_string(),
            truth: res.truth,
            n_ok: s.n_ok,
            n_failed: s.n_failed,
            mean: s.mean,
            sd: s.sd,
            se_mean: s.se_mean,
            min: s.min,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            max: s.max,
        })
        .collect();
    write_table(&out.join("study_summary.csv"), &summary)?;
    println!("true correlation {:.6}", res.truth);
    for s in &summary {
        println!(
            "  {}: mean {:.6} (s.e. {:.6}), median {:.6}, {} ok, {} failed",
            s.estimator, s.mean, s.se_mean, s.median, s.n_ok, s.n_failed
        );
    }
    Ok(())
}

/// Runs `command` on a resolved configuration, writing into `out`.
pub fn execute(command: &str, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    match command {
        "fit" => fit(cfg, out),
        "probs" => probs(cfg, out),
        "curves" => curves(cfg, out),
        "corr" => corr(cfg, out),
        "simulate" => simulate(cfg, out),
        "study" => study(cfg, out),
        other => Err(CliError::Validation(format!("unknown command '{other}'"))),
    }
}
