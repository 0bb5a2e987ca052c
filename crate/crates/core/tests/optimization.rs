use tfqkd::optimizer::{
    c_surface, grid_axis, grid_golden_min, minimize_beta, optimize_point, sweep, u_functional, OptimizerConfig, Scheme,
    SearchBox, UVariant,
};

/// Closed-form L1 distance between two normal densities.
fn gaussian_l1(mu1: f64, s1: f64, mu2: f64, s2: f64) -> f64 {
    use libm::erf;
    let cdf = |x: f64, mu: f64, s: f64| 0.5 * (1.0 + erf((x - mu) / (s * std::f64::consts::SQRT_2)));
    // Crossing points of the two densities.
    let a = 1.0 / (2.0 * s2 * s2) - 1.0 / (2.0 * s1 * s1);
    let b = mu1 / (s1 * s1) - mu2 / (s2 * s2);
    let c = mu2 * mu2 / (2.0 * s2 * s2) - mu1 * mu1 / (2.0 * s1 * s1) + (s2 / s1).ln();
    let mut roots = if a.abs() < 1e-14 {
        vec![-c / b]
    } else {
        let d = b * b - 4.0 * a * c;
        if d < 0.0 {
            vec![]
        } else {
            vec![(-b - d.sqrt()) / (2.0 * a), (-b + d.sqrt()) / (2.0 * a)]
        }
    };
    roots.sort_by(f64::total_cmp);
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(roots);
    edges.push(f64::INFINITY);
    let mass = |lo: f64, hi: f64, mu: f64, s: f64| {
        let c_hi = if hi.is_infinite() { 1.0 } else { cdf(hi, mu, s) };
        let c_lo = if lo.is_infinite() { 0.0 } else { cdf(lo, mu, s) };
        c_hi - c_lo
    };
    edges
        .windows(2)
        .map(|w| (mass(w[0], w[1], mu1, s1) - mass(w[0], w[1], mu2, s2)).abs())
        .sum()
}

fn per_term_closed_form(m: usize, alpha: f64, beta: f64) -> f64 {
    let sd_sym = alpha / 2.0 / std::f64::consts::SQRT_2;
    let sd_conj = beta * m as f64 / 2.0 / std::f64::consts::SQRT_2;
    (0..m)
        .map(|s| gaussian_l1(s as f64 - (m as f64 - 1.0) / 2.0, sd_sym, 0.0, sd_conj))
        .sum()
}

#[test]
fn per_term_overlap_matches_closed_form() {
    for &(m, a, b) in &[
        (2, 0.5, 0.7),
        (4, 0.3, 0.6),
        (8, 1.1, 0.2),
        (16, 0.05, 1.4),
        (5, 0.7, 0.55),
    ] {
        let u = u_functional(m, a, b, UVariant::PerTerm, 1e-10).unwrap();
        let want = per_term_closed_form(m, a, b);
        assert!((u - want).abs() < 1e-8, "M={m} α={a} β={b}: {u} vs {want}");
    }
}

#[test]
fn overlap_has_unique_interior_minimum() {
    let betas: Vec<f64> = (3..=15).map(|k| k as f64 * 0.1).collect();
    let u: Vec<f64> = betas
        .iter()
        .map(|&b| u_functional(2, 0.5, b, UVariant::PerTerm, 1e-10).unwrap())
        .collect();
    let k = (0..u.len()).min_by(|&i, &j| u[i].total_cmp(&u[j])).unwrap();
    assert!(k > 0 && k + 1 < u.len());
    assert!(u[..k].windows(2).all(|w| w[1] < w[0]));
    assert!(u[k..].windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn beta_minimizer_matches_dense_scan() {
    let search = SearchBox::new(0.05, 1.5).unwrap();
    for &(m, alpha) in &[(2, 0.5), (4, 0.3)] {
        let (beta, u_min) = minimize_beta(m, alpha, UVariant::PerTerm, search, 0.05, 1e-3, 1e-9).unwrap();
        let dense = grid_axis(0.05, 1.5, 1e-3).unwrap();
        let scan: Vec<f64> = dense
            .iter()
            .map(|&b| u_functional(m, alpha, b, UVariant::PerTerm, 1e-9).unwrap())
            .collect();
        let k = (0..scan.len()).min_by(|&i, &j| scan[i].total_cmp(&scan[j])).unwrap();
        assert!((beta - dense[k]).abs() <= 1e-3 + 5e-4, "M={m}: {beta} vs {}", dense[k]);
        assert!(u_min <= scan[k] + 1e-9);
    }
}

#[test]
fn beta_argmin_ignores_rescaling() {
    let search = SearchBox::new(0.05, 1.5).unwrap();
    let u = |b: f64| u_functional(4, 0.5, b, UVariant::PerTerm, 1e-9);
    let (b1, _) = grid_golden_min(u, search, 0.05, 1e-3).unwrap();
    for scale in [0.25, 3.0, 1e3] {
        let (b2, _) = grid_golden_min(|b| Ok(scale * u(b)?), search, 0.05, 1e-3).unwrap();
        assert!((b1 - b2).abs() <= 1e-3);
    }
}

#[test]
fn whole_sum_never_exceeds_per_term() {
    for a in [0.1, 0.4, 0.9, 1.4] {
        for b in [0.1, 0.5, 0.9, 1.4] {
            let p = u_functional(4, a, b, UVariant::PerTerm, 1e-10).unwrap();
            let w = u_functional(4, a, b, UVariant::WholeSum, 1e-10).unwrap();
            assert!(w <= p + 1e-8);
        }
    }
}

#[test]
fn surface_without_eve_decreases_in_alpha() {
    let alphas = grid_axis(0.1, 1.5, 0.1).unwrap();
    let betas = [0.4, 0.7, 1.0];
    let grid = c_surface(4, 0.0, &alphas, &betas, 1e-8).unwrap();
    for j in 0..betas.len() {
        for i in 1..alphas.len() {
            assert!(grid.value(i, j).unwrap() <= grid.value(i - 1, j).unwrap() + 1e-12);
        }
    }
    assert_eq!(grid.failures().count(), 0);
    for cell in &grid.cells {
        let c = cell.as_ref().unwrap().capacity;
        assert!((0.0..=2.0).contains(&c));
    }
}

#[test]
fn no_eavesdropper_pins_alpha_to_box_edge() {
    let cfg = OptimizerConfig::default();
    let r = optimize_point(4, 0.0, &cfg).unwrap();
    assert_eq!(r.alpha_opt, cfg.alpha_box.lo);
    assert!(r.c_opt >= 0.99 * 2.0);
}

#[test]
fn heavy_eavesdropping_gives_zero_plateau() {
    let cfg = OptimizerConfig::default();
    let r = optimize_point(2, 0.9, &cfg).unwrap();
    assert_eq!(r.c_opt, 0.0);
    assert_eq!(r.alpha_opt, cfg.alpha_box.lo);
}

#[test]
fn optimum_is_consistent() {
    let cfg = OptimizerConfig::default();
    for scheme in [Scheme::Staged, Scheme::Nested] {
        let r = optimize_point(4, 0.25, &OptimizerConfig { scheme, ..cfg }).unwrap();
        assert!(cfg.alpha_box.contains(r.alpha_opt) && cfg.beta_box.contains(r.beta_opt));
        let again = tfqkd::capacity(
            &tfqkd::ProtocolParams::new(4, r.alpha_opt, r.beta_opt, 0.25).unwrap(),
            cfg.accuracy,
        )
        .unwrap();
        assert!((again.capacity - r.c_opt).abs() < 1e-9);
        assert!(r.search_capacity >= r.grid_max - 1e-12);
        assert!(r.grid_max > 0.0 && !r.trace.is_empty());
    }
}

#[cfg(feature = "parallel")]
#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = OptimizerConfig::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| optimize_point(4, 0.5, &cfg).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn sweep_orders_m_outer() {
    let cfg = OptimizerConfig {
        step: 0.1,
        ..OptimizerConfig::default()
    };
    let entries = sweep(&[2, 3], &[0.0, 0.5], &cfg).unwrap();
    let keys: Vec<(usize, f64)> = entries.iter().map(|e| (e.m, e.epsilon)).collect();
    assert_eq!(keys, vec![(2, 0.0), (2, 0.5), (3, 0.0), (3, 0.5)]);
    assert!(entries.iter().all(|e| e.outcome.is_ok()));
}
