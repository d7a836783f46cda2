use gridloc::denoise::{fista_denoise, fista_minimize, objective, soft_threshold, DenoiseConfig};
use gridloc::grid::{GradientField, GridGeometry, MaskedGrid};
use proptest::prelude::*;

fn closed_form(y: &[f64], lambda: f64) -> Vec<f64> {
    y.iter().map(|v| v.signum() * (v.abs() - lambda).max(0.0)).collect()
}

proptest! {
    #[test]
    fn soft_threshold_is_the_scalar_prox(s in -100.0f64..100.0, tau in 0.0f64..50.0) {
        // brute-force minimizer of ½(x − s)² + τ|x| over a fine grid around it
        let f = |x: f64| 0.5 * (x - s) * (x - s) + tau * x.abs();
        let x = soft_threshold(s, tau);
        for k in -200..=200 {
            let probe = x + k as f64 * 1e-3;
            prop_assert!(f(x) <= f(probe) + 1e-12);
        }
    }

    #[test]
    fn fista_reaches_the_closed_form_optimum(
        y in prop::collection::vec(-30.0f64..30.0, 1..200),
        lambda in 0.05f64..20.0,
        step in 0.2f64..1.0,
    ) {
        let cfg = DenoiseConfig { lambda, step, max_iters: 5000, rel_tol: 0.0 };
        let (s, history) = fista_minimize(&y, &vec![0.0; y.len()], &cfg);
        let star = closed_form(&y, lambda);
        let f_star = objective(&y, &star, lambda);
        prop_assert!((history.last().unwrap() - f_star).abs() <= 1e-6);
        for (a, b) in s.iter().zip(&star) {
            prop_assert!((a - b).abs() <= 1e-5);
        }
    }
}

#[test]
fn unavailable_cells_are_left_alone() {
    let geom = GridGeometry::new(4, 4, 1.0, 0.0, 0.0).unwrap();
    let mask: Vec<bool> = (0..16).map(|n| n % 3 != 0).collect();
    let dx = MaskedGrid::from_parts(geom, (0..16).map(|n| n as f64 - 8.0).collect(), mask.clone()).unwrap();
    let dy = MaskedGrid::from_parts(geom, (0..16).map(|n| 0.5 * n as f64).collect(), mask).unwrap();
    let out = fista_denoise(&GradientField::new(dx.clone(), dy.clone()).unwrap(), &DenoiseConfig::new(2.0)).unwrap();
    assert_eq!(out.dx.mask(), dx.mask());
    let want = closed_form(&dx.available_values(), 2.0);
    assert_eq!(out.dx.available_values(), want);
    assert_eq!(out.dy.available_values(), closed_form(&dy.available_values(), 2.0));
}

#[test]
fn invalid_lambda_is_rejected() {
    let geom = GridGeometry::new(2, 2, 1.0, 0.0, 0.0).unwrap();
    let f = GradientField::new(MaskedGrid::filled(geom, 1.0), MaskedGrid::filled(geom, 1.0)).unwrap();
    assert!(fista_denoise(&f, &DenoiseConfig::new(0.0)).is_err());
    assert!(fista_denoise(&f, &DenoiseConfig::new(f64::NAN)).is_err());
}
