use tfqkd::channel::{attack_matrix, mixed_bob_matrix, p_correct};
use tfqkd::oracle::{compare_empirical, compare_spectra, dft_spectrum_oracle, run_mc, DftConfig, McConfig};
use tfqkd::pulse::{build_spectrum, spectrum_bin_mass};
use tfqkd::ProtocolParams;

fn within_sigmas(p: f64, observed: u64, n: u64, k: f64) -> bool {
    let p_hat = observed as f64 / n as f64;
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    (p_hat - p).abs() <= k * sd.max(1e-300)
}

#[test]
fn no_attack_diagonal_matches_bin_mass() {
    let p = ProtocolParams::new(2, 1.0, 0.7, 0.0).unwrap();
    let emp = run_mc(&McConfig::new(1_000_000, 11, p).unwrap()).unwrap();
    let want = p_correct(&p).unwrap().get(0, 0);
    assert!((want - 0.921_350).abs() < 1e-6);
    for c in 0..4 {
        assert!(within_sigmas(want, emp.count(c, c), emp.column_totals()[c], 3.0));
    }
}

#[test]
fn full_attack_matches_attack_matrix() {
    let p = ProtocolParams::new(2, 1.0, 0.7, 1.0).unwrap();
    let emp = run_mc(&McConfig::new(1_000_000, 5, p).unwrap()).unwrap();
    let analytic = attack_matrix(&p).unwrap();
    for r in 0..4 {
        for c in 0..4 {
            assert!(within_sigmas(
                analytic.get(r, c),
                emp.count(r, c),
                emp.column_totals()[c],
                3.0
            ));
        }
    }
}

#[test]
fn mixed_matrix_agrees_with_simulation() {
    for &(m, alpha, beta, eps) in &[(4, 0.5, 0.7, 0.5), (3, 0.9, 0.4, 0.3)] {
        let p = ProtocolParams::new(m, alpha, beta, eps).unwrap();
        let emp = run_mc(&McConfig::new(1_000_000, 42, p).unwrap()).unwrap();
        let analytic = mixed_bob_matrix(&p).unwrap();
        let n = 2 * m;
        for r in 0..n {
            for c in 0..n {
                assert!(
                    within_sigmas(analytic.get(r, c), emp.count(r, c), emp.column_totals()[c], 3.0),
                    "entry ({r},{c})"
                );
            }
        }
        assert!(compare_empirical(&emp, &analytic).unwrap().pass);
    }
}

#[test]
fn deviation_shrinks_with_photon_count() {
    let p = ProtocolParams::new(4, 0.5, 0.7, 0.5).unwrap();
    let analytic = mixed_bob_matrix(&p).unwrap();
    let deviation = |n: u64| {
        let emp = run_mc(&McConfig::new(n, 2024, p).unwrap()).unwrap().normalized();
        emp.as_slice()
            .iter()
            .zip(analytic.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let d: Vec<f64> = [10_000, 100_000, 1_000_000].iter().map(|&n| deviation(n)).collect();
    assert!(d[1] < d[0] && d[2] < d[1], "{d:?}");
    // Roughly 1/√n: each tenfold increase should cut the error by ~3.
    assert!(d[2] < d[0] / 3.0);
}

#[test]
fn spectral_oracle_matches_closed_form() {
    let c = compare_spectra(4, 0.7, 0.5, 1e-8, &DftConfig::default()).unwrap();
    assert_eq!(c.bins_checked, 4 * 5);
    assert!(c.max_bin_deviation < 1e-6, "{c:?}");
    assert!(c.max_total_deviation < 1e-6);
    assert!(c.max_error_estimate < 1e-6);
}

#[test]
fn spectral_oracle_outer_filter_bins() {
    let cfg = DftConfig::default();
    let oracle = dft_spectrum_oracle(0, 3, 1.2, &cfg).unwrap();
    let spec = build_spectrum(0, 3, 1.2, 1e-9).unwrap();
    for &(a, b) in &[(-0.5, 0.5), (0.5, 1.5), (-7.0, -2.0), (3.0, 25.0)] {
        let (mass, err) = oracle.bin_mass(a, b).unwrap();
        assert!((mass - spectrum_bin_mass(&spec, a, b).unwrap()).abs() < 1e-6);
        assert!(err < 1e-6);
    }
}
