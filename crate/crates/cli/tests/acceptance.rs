//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; exits non-zero if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use tfqkd::channel::{bin_bounds, p_correct, p_wrong};
use tfqkd::info::{mutual_info_single, uniform_prior};
use tfqkd::oracle::{compare_spectra, DftConfig};
use tfqkd::pulse::density_bin_mass;
use tfqkd::{
    attack_matrix, bob_matrix, build_spectrum, c_surface, capacity, eve_matrix, i_ae, mixed_bob_matrix,
    mutual_info_dual, optimize_point, sweep, ConditionalMatrix, OptimizerConfig, ProtocolParams,
};

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1() -> Check {
    let cfg = OptimizerConfig::default();
    let mut parts = Vec::new();
    for m in [2usize, 4, 8] {
        let start = Instant::now();
        let r = optimize_point(m, 0.0, &cfg).map_err(err)?;
        let took = start.elapsed();
        let floor = 0.99 * (m as f64).log2();
        ensure(r.c_opt >= floor, || format!("M={m}: C={} < {floor}", r.c_opt))?;
        ensure(took < Duration::from_secs(60), || format!("M={m} took {took:?}"))?;
        parts.push(format!("M={m} C={:.4}", r.c_opt));
    }
    Ok(parts.join(", "))
}

fn criterion_2() -> Check {
    let cfg = OptimizerConfig::default();
    let mut checked = 0;
    for m in [2usize, 4, 8, 16] {
        for eps in [0.9, 1.0] {
            let r = optimize_point(m, eps, &cfg).map_err(err)?;
            ensure(r.c_opt == 0.0, || format!("M={m} eps={eps}: C={}", r.c_opt))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} points at C=0"))
}

fn criterion_3() -> Check {
    let cfg = OptimizerConfig::default();
    let mut parts = Vec::new();
    for m in [16usize, 32] {
        for eps in [0.25, 0.5] {
            let r = optimize_point(m, eps, &cfg).map_err(err)?;
            ensure((0.3..=0.7).contains(&r.alpha_opt), || {
                format!("M={m} eps={eps}: alpha_opt={}", r.alpha_opt)
            })?;
            ensure((0.5..=0.9).contains(&r.beta_opt), || {
                format!("M={m} eps={eps}: beta_opt={}", r.beta_opt)
            })?;
            parts.push(format!("M={m} eps={eps} a={:.3} b={:.3}", r.alpha_opt, r.beta_opt));
        }
    }
    Ok(parts.join(", "))
}

fn criterion_4() -> Check {
    let ms = [2usize, 4, 8, 16, 32];
    let epsilons = [0.0, 0.25, 0.5, 0.75];
    let entries = sweep(&ms, &epsilons, &OptimizerConfig::default()).map_err(err)?;
    let mut c = vec![vec![0.0; epsilons.len()]; ms.len()];
    for (k, e) in entries.iter().enumerate() {
        let r = e
            .outcome
            .as_ref()
            .map_err(|x| format!("M={} eps={}: {x}", e.m, e.epsilon))?;
        c[k / epsilons.len()][k % epsilons.len()] = r.c_opt;
    }
    let mut violations = Vec::new();
    for (j, eps) in epsilons.iter().enumerate() {
        for i in 1..ms.len() {
            if c[i][j] <= c[i - 1][j] {
                violations.push(format!(
                    "eps={eps}: C(M={})={:.4} !> C(M={})={:.4}",
                    ms[i],
                    c[i][j],
                    ms[i - 1],
                    c[i - 1][j]
                ));
            }
        }
    }
    for (i, m) in ms.iter().enumerate() {
        for j in 1..epsilons.len() {
            if c[i][j] > c[i][j - 1] {
                violations.push(format!(
                    "M={m}: C rises from eps={} to eps={}",
                    epsilons[j - 1],
                    epsilons[j]
                ));
            }
        }
    }
    ensure(violations.is_empty(), || violations.join("; "))?;
    Ok(format!("{} points monotone", entries.len()))
}

fn criterion_5() -> Check {
    let (m, eps) = (4, 0.5);
    let cfg = OptimizerConfig::default();
    let opt = optimize_point(m, eps, &cfg).map_err(err)?;
    let spread = |values: Vec<f64>| {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let betas: Vec<f64> = (0..=50).map(|k| 0.5 + 0.01 * k as f64).collect();
    let alphas: Vec<f64> = (0..=140).map(|k| 0.1 + 0.01 * k as f64).collect();
    let along_beta = c_surface(m, eps, &[opt.alpha_opt], &betas, cfg.accuracy).map_err(err)?;
    let along_alpha = c_surface(m, eps, &alphas, &[opt.beta_opt], cfg.accuracy).map_err(err)?;
    let collect = |g: &tfqkd::SurfaceGrid| -> Result<Vec<f64>, String> {
        g.cells
            .iter()
            .map(|c| c.as_ref().map(|r| r.capacity).map_err(err))
            .collect()
    };
    let dv_beta = spread(collect(&along_beta)?);
    let dv_alpha = spread(collect(&along_alpha)?);
    let ratio = dv_beta / dv_alpha;
    ensure(ratio < 0.05, || {
        format!(
            "beta variation {dv_beta:.4} is {:.1}% of alpha variation {dv_alpha:.4}",
            100.0 * ratio
        )
    })?;
    Ok(format!("ratio {:.2}%", 100.0 * ratio))
}

fn tfqkd_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tfqkd"))
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(err)?;
    serde_json::from_str(&text).map_err(err)
}

fn criterion_6() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let out = dir.path().join("validate.json");
    let status = tfqkd_bin()
        .args([
            "validate", "--m", "4", "--alpha", "0.5", "--beta", "0.7", "--eps", "0.5",
        ])
        .args(["--photons", "1000000", "--seed", "42", "--out"])
        .arg(&out)
        .status()
        .map_err(err)?;
    let report = read_json(&out)?;
    let max_z = report["max_abs_z"].as_f64().ok_or("missing max_abs_z")?;
    let p_values: Vec<f64> = report["chi_square"]
        .as_array()
        .ok_or("missing chi_square")?
        .iter()
        .filter_map(|c| c["p_value"].as_f64())
        .collect();
    let min_p = p_values.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(status.success(), || format!("validate exited with {status}"))?;
    ensure(max_z <= 4.0, || format!("max |z| = {max_z}"))?;
    ensure(p_values.len() == 8 && min_p >= 1e-3, || {
        format!("chi-square p-values {p_values:?}")
    })?;
    ensure(report["pass"] == Value::Bool(true), || "report says fail".into())?;
    Ok(format!("max|z|={max_z:.3}, min p={min_p:.4}"))
}

fn criterion_7() -> Check {
    let cfg = DftConfig::default();
    let mut worst_total: f64 = 0.0;
    let mut worst_bin: f64 = 0.0;
    let mut bins = 0;
    for m in [2usize, 4, 8] {
        for beta in [0.3, 0.7, 1.2] {
            for f in 0..m {
                let spec = build_spectrum(f, m, beta, tfqkd::DEFAULT_ACCURACY).map_err(err)?;
                let (lo, hi) = bin_bounds(f, m);
                let filter_mass = density_bin_mass(beta * m as f64 / 2.0, 0.0, lo, hi).map_err(err)?;
                let numeric = spec.numeric_total().map_err(err)?;
                let dev = (spec.total_mass() - filter_mass)
                    .abs()
                    .max((numeric - filter_mass).abs());
                ensure(dev <= 1e-8, || format!("M={m} beta={beta} f={f}: total off by {dev:e}"))?;
                worst_total = worst_total.max(dev);
            }
            let cmp = compare_spectra(m, beta, 0.5, tfqkd::DEFAULT_ACCURACY, &cfg).map_err(err)?;
            ensure(cmp.max_bin_deviation <= 1e-6, || {
                format!("M={m} beta={beta}: bin deviation {:e}", cmp.max_bin_deviation)
            })?;
            worst_bin = worst_bin.max(cmp.max_bin_deviation);
            bins += cmp.bins_checked;
        }
    }
    Ok(format!(
        "total dev {worst_total:.1e}, {bins} bins, max bin dev {worst_bin:.1e}"
    ))
}

/// Reversing both symbol order and bin order maps the matrix onto itself.
fn mirrored(m: &ConditionalMatrix, tol: f64) -> bool {
    let n = m.size();
    (0..n).all(|r| (0..n).all(|c| (m.get(r, c) - m.get(n - 1 - r, n - 1 - c)).abs() <= tol))
}

/// Sifted 2M matrices: each basis block is mirrored on its own.
fn blocks_mirrored(m: &ConditionalMatrix, tol: f64) -> bool {
    mirrored(&m.diagonal_block(true), tol) && mirrored(&m.diagonal_block(false), tol)
}

fn invariants() -> Result<usize, String> {
    let mut points = 0;
    for m in [2usize, 3, 4, 8] {
        let log_m = (m as f64).log2();
        for alpha in [0.1, 0.5, 1.2] {
            for beta in [0.3, 0.7, 1.2] {
                let base = ProtocolParams::new(m, alpha, beta, 1.0).map_err(err)?;
                let tag = format!("M={m} a={alpha} b={beta}");
                let eve = eve_matrix(&base, tfqkd::DEFAULT_ACCURACY).map_err(err)?;
                ensure(eve.stochasticity_error() <= 1e-6, || format!("{tag}: eve columns"))?;
                ensure(blocks_mirrored(&eve, 1e-8), || format!("{tag}: eve mirror"))?;
                let full_eve = i_ae(&base, tfqkd::DEFAULT_ACCURACY).map_err(err)?;
                ensure((0.0..=log_m + 1e-12).contains(&full_eve), || {
                    format!("{tag}: I_AE={full_eve}")
                })?;
                for mat in [
                    p_correct(&base),
                    p_wrong(&base),
                    bob_matrix(&base),
                    attack_matrix(&base),
                ] {
                    let mat = mat.map_err(err)?;
                    let sym = if mat.size() == m {
                        mirrored(&mat, 1e-12)
                    } else {
                        blocks_mirrored(&mat, 1e-12)
                    };
                    ensure(mat.stochasticity_error() <= 1e-9, || format!("{tag}: analytic columns"))?;
                    ensure(sym, || format!("{tag}: analytic mirror"))?;
                }
                for eps in [0.0, 0.3, 0.7] {
                    let p = base.with_epsilon(eps).map_err(err)?;
                    let mixed = mixed_bob_matrix(&p).map_err(err)?;
                    ensure(mixed.stochasticity_error() <= 1e-9, || format!("{tag}: mixed columns"))?;
                    let r = capacity(&p, tfqkd::DEFAULT_ACCURACY).map_err(err)?;
                    ensure((0.0..=log_m + 1e-12).contains(&r.i_ab), || {
                        format!("{tag}: I_AB={}", r.i_ab)
                    })?;
                    ensure((0.0..=log_m + 1e-12).contains(&r.capacity), || {
                        format!("{tag}: C={}", r.capacity)
                    })?;
                    let lin = (r.i_ae - eps * full_eve).abs();
                    ensure(lin <= 1e-12, || format!("{tag} eps={eps}: I_AE not linear ({lin:e})"))?;
                    let prior = uniform_prior(m);
                    let top = mutual_info_single(&mixed.diagonal_block(true), &prior).map_err(err)?;
                    let bottom = mutual_info_single(&mixed.diagonal_block(false), &prior).map_err(err)?;
                    let dual = mutual_info_dual(&mixed, &uniform_prior(2 * m)).map_err(err)?;
                    let gap = (dual - 0.5 * (top + bottom)).abs();
                    ensure(gap <= 1e-12, || {
                        format!("{tag} eps={eps}: block decomposition off by {gap:e}")
                    })?;
                    points += 1;
                }
            }
        }
    }
    Ok(points)
}

const CLI_RUNS: [&[&str]; 5] = [
    &[
        "surface",
        "--m",
        "4",
        "--eps",
        "0.5",
        "--alpha",
        "0.2:0.8:0.2",
        "--beta",
        "0.4:1.0:0.3",
    ],
    &["optimize", "--m", "4", "--eps", "0.25", "--step", "0.1"],
    &["sweep", "--m", "2,4", "--eps", "0,0.5", "--step", "0.1"],
    &["validate", "--m", "4", "--photons", "200000", "--seed", "7"],
    &[
        "keyrate",
        "--m",
        "4",
        "--eps",
        "0.25",
        "--rep-rate-hz",
        "1e9",
        "--step",
        "0.1",
    ],
];

fn cli_output(dir: &Path, args: &[&str], run: usize, threads: &str) -> Result<Vec<u8>, String> {
    let out = dir.join(format!("{}-{run}", args[0]));
    let status = tfqkd_bin()
        .args(args)
        .arg("--out")
        .arg(&out)
        .env("TFQKD_THREADS", threads)
        .status()
        .map_err(err)?;
    ensure(status.success(), || format!("{} exited with {status}", args[0]))?;
    std::fs::read(&out).map_err(err)
}

fn criterion_8() -> Check {
    let points = invariants()?;
    let dir = tempfile::tempdir().map_err(err)?;
    for args in CLI_RUNS {
        let first = cli_output(dir.path(), args, 0, "2")?;
        let second = cli_output(dir.path(), args, 1, "2")?;
        let single = cli_output(dir.path(), args, 2, "1")?;
        ensure(first == second && first == single, || {
            format!("{} output differs between runs", args[0])
        })?;
    }
    Ok(format!(
        "{points} model points, {} commands byte-identical",
        CLI_RUNS.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("eps=0 capacity reaches log2 M", Duration::from_secs(180), criterion_1),
        (
            "capacity vanishes for eps >= 0.9",
            Duration::from_secs(600),
            criterion_2,
        ),
        ("optimal width brackets", Duration::from_secs(1800), criterion_3),
        ("monotone in M and eps", Duration::from_secs(1800), criterion_4),
        ("beta flatness", Duration::from_secs(300), criterion_5),
        ("Monte Carlo agreement", Duration::from_secs(120), criterion_6),
        ("spectrum conservation", Duration::from_secs(300), criterion_7),
        ("invariants and determinism", Duration::from_secs(300), criterion_8),
    ];
    let mut failed = 0;
    for (k, (title, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget {budget:?}")),
            Err(e) => (false, e),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} | {title} | {detail} | {:.1}s",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
