use serde::Serialize;
use tfqkd::oracle::{compare_empirical, compare_spectra, run_mc, DftConfig, McConfig, LOW_POWER_COLUMN_COUNT};
use tfqkd::{
    c_surface, key_rate, mixed_bob_matrix, optimize_point, OptimizationResult, OptimizerConfig, ProtocolParams,
};

use crate::cli::{Format, KeyrateArgs, OptimizeArgs, SearchArgs, SurfaceArgs, SweepArgs, ValidateArgs};
use crate::output::{csv_bytes, emit, g9, json_bytes, round9};
use crate::parse;
use crate::CliError;

/// Largest spectral-oracle bin deviation accepted by `validate`.
const SPECTRUM_TOLERANCE: f64 = 1e-6;

fn check_point(m: usize, eps: f64) -> Result<(), CliError> {
    ProtocolParams::new(m, 0.5, 0.5, eps)
        .map(|_| ())
        .map_err(CliError::from_model_input)
}

fn check_accuracy(accuracy: f64) -> Result<(), CliError> {
    if accuracy > 0.0 && accuracy.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--accuracy must be positive, got {accuracy}")))
    }
}

fn optimizer_config(s: &SearchArgs) -> Result<OptimizerConfig, CliError> {
    let cfg = OptimizerConfig {
        alpha_box: parse::search_box(&s.alpha_box, "--alpha-box")?,
        beta_box: parse::search_box(&s.beta_box, "--beta-box")?,
        step: s.step,
        tol: s.tol,
        accuracy: s.accuracy,
        u_variant: s.u_variant.into(),
        scheme: s.scheme.into(),
    };
    cfg.validate().map_err(CliError::from_model_input)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SurfaceRow {
    alpha: f64,
    beta: f64,
    capacity: f64,
    i_ab: f64,
    i_ae: f64,
    qser: f64,
}

pub fn surface(a: &SurfaceArgs) -> Result<(), CliError> {
    check_point(a.m, a.eps)?;
    check_accuracy(a.accuracy)?;
    let alphas = parse::range(&a.alpha, "--alpha")?;
    let betas = parse::range(&a.beta, "--beta")?;
    parse::strictly_increasing(&alphas, "--alpha")?;
    parse::strictly_increasing(&betas, "--beta")?;

    let grid = c_surface(a.m, a.eps, &alphas, &betas, a.accuracy).map_err(CliError::from_model_input)?;
    let failures: Vec<_> = grid.failures().collect();
    if let Some(&(alpha, beta, e)) = failures.first() {
        eprintln!("tfqkd: {} of {} grid points failed", failures.len(), grid.cells.len());
        eprintln!("tfqkd: first failure at alpha={} beta={}", g9(alpha), g9(beta));
        return Err(CliError::Model(e.clone()));
    }

    let mut rows = Vec::with_capacity(grid.cells.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        for (j, &beta) in betas.iter().enumerate() {
            let r = grid.report(i, j).expect("failures were handled above");
            rows.push(SurfaceRow {
                alpha,
                beta,
                capacity: r.capacity,
                i_ab: r.i_ab,
                i_ae: r.i_ae,
                qser: r.qser,
            });
        }
    }
    let bytes = match a.format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| [r.alpha, r.beta, r.capacity, r.i_ab, r.i_ae, r.qser].map(g9).to_vec())
                .collect();
            csv_bytes(&["alpha", "beta", "capacity", "i_ab", "i_ae", "qser"], &table)?
        }
        Format::Json => {
            let rounded: Vec<SurfaceRow> = rows
                .iter()
                .map(|r| SurfaceRow {
                    alpha: round9(r.alpha),
                    beta: round9(r.beta),
                    capacity: round9(r.capacity),
                    i_ab: round9(r.i_ab),
                    i_ae: round9(r.i_ae),
                    qser: round9(r.qser),
                })
                .collect();
            json_bytes(&rounded)
        }
    };
    emit(a.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct OptimizeReport {
    m: usize,
    eps: f64,
    alpha_opt: f64,
    beta_opt: f64,
    capacity: f64,
    i_ab: f64,
    i_ae: f64,
    qser: f64,
    u_min: f64,
    scheme: &'static str,
    u_variant: &'static str,
}

impl From<&OptimizationResult> for OptimizeReport {
    fn from(r: &OptimizationResult) -> Self {
        OptimizeReport {
            m: r.m,
            eps: round9(r.epsilon),
            alpha_opt: round9(r.alpha_opt),
            beta_opt: round9(r.beta_opt),
            capacity: round9(r.c_opt),
            i_ab: round9(r.report.i_ab),
            i_ae: round9(r.report.i_ae),
            qser: round9(r.report.qser),
            u_min: round9(r.u_min),
            scheme: r.scheme.as_str(),
            u_variant: r.u_variant.as_str(),
        }
    }
}

#[derive(Serialize)]
struct FailureReport {
    status: &'static str,
    m: usize,
    eps: f64,
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    context: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    achieved: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<f64>,
}

impl FailureReport {
    fn new(m: usize, eps: f64, e: &tfqkd::Error) -> Self {
        let (context, achieved, target) = match e {
            tfqkd::Error::NumericFailure {
                context,
                achieved,
                target,
            } => (Some(context.clone()), Some(round9(*achieved)), Some(round9(*target))),
            _ => (None, None, None),
        };
        FailureReport {
            status: "failed",
            m,
            eps: round9(eps),
            error: e.to_string(),
            context,
            achieved,
            target,
        }
    }
}

pub fn optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    check_point(a.m, a.eps)?;
    let cfg = optimizer_config(&a.search)?;
    let result = match optimize_point(a.m, a.eps, &cfg) {
        Ok(r) => r,
        Err(tfqkd::Error::Domain(msg)) => return Err(CliError::Usage(msg)),
        Err(e) => {
            emit(None, &json_bytes(&FailureReport::new(a.m, a.eps, &e)))?;
            return Err(CliError::Model(e));
        }
    };
    if let Some(path) = &a.trace {
        let rows: Vec<Vec<String>> = result
            .trace
            .iter()
            .map(|p| vec![g9(p.alpha), g9(p.beta), g9(p.capacity)])
            .collect();
        emit(Some(path), &csv_bytes(&["alpha", "beta", "capacity"], &rows)?)?;
    }
    emit(a.out.as_deref(), &json_bytes(&OptimizeReport::from(&result)))
}

#[derive(Serialize)]
struct SweepRow {
    m: usize,
    eps: f64,
    alpha_opt: Option<f64>,
    beta_opt: Option<f64>,
    capacity: Option<f64>,
    qser: Option<f64>,
    status: &'static str,
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    let ms = parse::usize_list(&a.m, "--m")?;
    let epsilons = parse::float_list(&a.eps, "--eps")?;
    for &m in &ms {
        for &eps in &epsilons {
            check_point(m, eps)?;
        }
    }
    let cfg = optimizer_config(&a.search)?;
    let entries = tfqkd::sweep(&ms, &epsilons, &cfg).map_err(CliError::from_model_input)?;

    let mut rows = Vec::with_capacity(entries.len());
    let mut first_error = None;
    for e in &entries {
        rows.push(match &e.outcome {
            Ok(r) => SweepRow {
                m: e.m,
                eps: e.epsilon,
                alpha_opt: Some(r.alpha_opt),
                beta_opt: Some(r.beta_opt),
                capacity: Some(r.c_opt),
                qser: Some(r.report.qser),
                status: "ok",
            },
            Err(err) => {
                eprintln!("tfqkd: M={} eps={} failed: {err}", e.m, g9(e.epsilon));
                first_error.get_or_insert_with(|| err.clone());
                SweepRow {
                    m: e.m,
                    eps: e.epsilon,
                    alpha_opt: None,
                    beta_opt: None,
                    capacity: None,
                    qser: None,
                    status: "failed",
                }
            }
        });
    }
    if rows.iter().all(|r| r.status == "failed") {
        return Err(CliError::Model(first_error.expect("sweep has at least one point")));
    }

    let opt = |v: Option<f64>| v.map(g9).unwrap_or_default();
    let bytes = match a.format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        g9(r.eps),
                        opt(r.alpha_opt),
                        opt(r.beta_opt),
                        opt(r.capacity),
                        opt(r.qser),
                        r.status.to_string(),
                    ]
                })
                .collect();
            csv_bytes(
                &["m", "eps", "alpha_opt", "beta_opt", "capacity", "qser", "status"],
                &table,
            )?
        }
        Format::Json => {
            let r9 = |v: Option<f64>| v.map(round9);
            let rounded: Vec<SweepRow> = rows
                .iter()
                .map(|r| SweepRow {
                    m: r.m,
                    eps: round9(r.eps),
                    alpha_opt: r9(r.alpha_opt),
                    beta_opt: r9(r.beta_opt),
                    capacity: r9(r.capacity),
                    qser: r9(r.qser),
                    status: r.status,
                })
                .collect();
            json_bytes(&rounded)
        }
    };
    emit(a.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct ChiSquareRow {
    column: usize,
    statistic: f64,
    dof: usize,
    p_value: f64,
}

#[derive(Serialize)]
struct ValidateReport {
    m: usize,
    alpha: f64,
    beta: f64,
    eps: f64,
    photons: u64,
    seed: u64,
    max_abs_z: f64,
    min_p_value: f64,
    chi_square: Vec<ChiSquareRow>,
    zero_count_columns: Vec<usize>,
    spectrum_oracle_max_deviation: Option<f64>,
    spectrum_oracle_bins: Option<usize>,
    low_power: bool,
    warnings: Vec<String>,
    pass: bool,
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let params = ProtocolParams::new(a.m, a.alpha, a.beta, a.eps).map_err(CliError::from_model_input)?;
    check_accuracy(a.accuracy)?;
    let mc = McConfig::new(a.photons, a.seed, params).map_err(CliError::from_model_input)?;

    let analytic = mixed_bob_matrix(&params)?;
    let empirical = run_mc(&mc)?;
    let cmp = compare_empirical(&empirical, &analytic)?;
    let spectrum = if a.no_spectrum {
        None
    } else {
        Some(compare_spectra(
            a.m,
            a.beta,
            a.alpha,
            a.accuracy,
            &DftConfig::default(),
        )?)
    };

    let mut warnings = Vec::new();
    if cmp.low_power {
        warnings.push(format!(
            "low statistical power: some columns have fewer than {LOW_POWER_COLUMN_COUNT} photons"
        ));
    }
    if !cmp.zero_count_columns.is_empty() {
        warnings.push(format!("columns without photons: {:?}", cmp.zero_count_columns));
    }
    let spectrum_ok = spectrum.is_none_or(|s| s.max_bin_deviation <= SPECTRUM_TOLERANCE);
    let report = ValidateReport {
        m: a.m,
        alpha: round9(a.alpha),
        beta: round9(a.beta),
        eps: round9(a.eps),
        photons: a.photons,
        seed: a.seed,
        max_abs_z: round9(cmp.max_abs_z),
        min_p_value: round9(cmp.min_p_value),
        chi_square: cmp
            .chi_square
            .iter()
            .map(|c| ChiSquareRow {
                column: c.column,
                statistic: round9(c.statistic),
                dof: c.dof,
                p_value: round9(c.p_value),
            })
            .collect(),
        zero_count_columns: cmp.zero_count_columns.clone(),
        spectrum_oracle_max_deviation: spectrum.map(|s| round9(s.max_bin_deviation)),
        spectrum_oracle_bins: spectrum.map(|s| s.bins_checked),
        low_power: cmp.low_power,
        warnings,
        pass: cmp.pass && spectrum_ok,
    };
    emit(a.out.as_deref(), &json_bytes(&report))?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Statistical(format!(
            "validation failed: max |z| = {}, min p = {}",
            g9(cmp.max_abs_z),
            g9(cmp.min_p_value)
        )))
    }
}

#[derive(Serialize)]
struct KeyrateReport {
    m: usize,
    eps: f64,
    rep_rate_hz: f64,
    sifted_rate_hz: f64,
    alpha_opt: f64,
    beta_opt: f64,
    capacity: f64,
    key_rate_bps: f64,
    /// Time-bin width `1 / (rep_rate * M)`; absent at zero rate.
    slot_width_s: Option<f64>,
}

pub fn keyrate(a: &KeyrateArgs) -> Result<(), CliError> {
    check_point(a.m, a.eps)?;
    let sifted = a.sifted_rate_hz.unwrap_or(a.rep_rate_hz);
    for (name, v) in [("--rep-rate-hz", a.rep_rate_hz), ("--sifted-rate-hz", sifted)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(CliError::Usage(format!(
                "{name} must be a non-negative number, got {v}"
            )));
        }
    }
    let cfg = optimizer_config(&a.search)?;
    let r = optimize_point(a.m, a.eps, &cfg).map_err(CliError::from_model_input)?;
    let rate = key_rate(sifted, r.c_opt).map_err(CliError::from_model_input)?;
    let report = KeyrateReport {
        m: a.m,
        eps: round9(a.eps),
        rep_rate_hz: round9(a.rep_rate_hz),
        sifted_rate_hz: round9(sifted),
        alpha_opt: round9(r.alpha_opt),
        beta_opt: round9(r.beta_opt),
        capacity: round9(r.c_opt),
        key_rate_bps: round9(rate),
        slot_width_s: (a.rep_rate_hz > 0.0).then(|| round9(1.0 / (a.rep_rate_hz * a.m as f64))),
    };
    emit(a.out.as_deref(), &json_bytes(&report))
}
