use std::f64::consts::PI;

use nullcurv::blowup::{
    self, bubble_residual, envelope_check, eta, is_resolved, rescaled_profile_with_scale, scale_from_parts,
    weak_estimate_stats, BlowupConfig, BubbleProfile,
};
use nullcurv::green::{self, GreenContext};
use nullcurv::subcritical::SubcriticalSolution;
use nullcurv::torus::{self, ScalarField, TorusGrid};
use nullcurv::Error;

fn planted(res: usize, mu: f64, q: f64) -> (ScalarField, SubcriticalSolution) {
    let g = TorusGrid::new(3, res).unwrap();
    let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).cos() - 0.1).unwrap();
    let bubble = BubbleProfile::new(3);
    let u = ScalarField::from_fn(&g, |x| {
        let r2: f64 = x.iter().map(|c| c.min(1.0 - c).powi(2)).sum();
        bubble.at_radius(r2.sqrt() / mu)
    })
    .unwrap();
    let lam = 3.0 / (mu * mu);
    let sol = SubcriticalSolution::from_field(u, q, lam, &f).unwrap();
    (f, sol)
}

#[test]
fn bubble_solves_its_equation() {
    assert!(bubble_residual(3, &[0.0, 0.5, 1.0, 2.0, 5.0]).unwrap() <= 1e-4);
    assert!(bubble_residual(4, &[0.0, 1.0, 3.0]).unwrap() <= 1e-4);
    assert!(bubble_residual(2, &[1.0]).is_err());
    assert!(bubble_residual(3, &[11.0]).is_err());
    let b = BubbleProfile::new(3);
    assert_eq!(b.at_radius(0.0), 1.0);
    assert!((b.at(&[1.0, 1.0, 1.0]) - 0.5).abs() < 1e-15);
}

#[test]
fn scale_follows_its_power_law() {
    let mu = scale_from_parts(3, 2.0, 0.5, 1.0, 5.0).unwrap();
    assert!((mu - 3f64.sqrt()).abs() < 1e-15);
    let ratio = scale_from_parts(3, 2.0, 0.5, 16.0, 5.0).unwrap() / mu;
    assert!((ratio - 16f64.powf(-1.5)).abs() < 1e-15);
    assert!(matches!(
        scale_from_parts(3, 2.0, 0.0, 1.0, 5.0),
        Err(Error::UndefinedScale { .. })
    ));
    let g = TorusGrid::new(3, 16).unwrap();
    assert!(is_resolved(0.1, &g));
    assert!(!is_resolved(0.05, &g));
}

#[test]
fn planted_bubble_is_recovered() {
    let mu = 4.0 / 32.0;
    let (f, sol) = planted(32, mu, 5.0);
    let measured = blowup::concentration_scale(&sol, &f).unwrap();
    assert!((measured - mu / 0.9f64.sqrt()).abs() < 1e-12);
    let prof = rescaled_profile_with_scale(&sol, mu, 2.0).unwrap();
    assert!(!prof.samples.is_empty());
    assert!(prof.sup_err < 5e-2, "{}", prof.sup_err);
    assert!(matches!(
        rescaled_profile_with_scale(&sol, mu, 3.0),
        Err(Error::WindowTooLarge { .. })
    ));
}

#[test]
fn eta_is_the_supremum_outside_the_ball() {
    let mu = 0.125;
    let (_, sol) = planted(32, mu, 5.0);
    let want = BubbleProfile::new(3).at_radius(0.25 / mu);
    assert!((eta(&sol, 0.25).unwrap() - want).abs() < 1e-14);
    assert!(matches!(eta(&sol, 0.6), Err(Error::BallCoversTorus { .. })));
}

#[test]
fn weak_estimate_tail_is_dominated() {
    let (_, sol) = planted(16, 0.125, 5.0);
    let (w_max, w_tail) = weak_estimate_stats(&sol, 0.125, 2.0);
    assert!(w_tail <= w_max);
    let g = sol.grid();
    let dist = torus::distance_field(g, sol.x_max_flat());
    let by_hand = dist
        .iter()
        .zip(sol.u.values())
        .map(|(d, u)| d.powf(2.0 / 3.0) * u)
        .fold(0.0, f64::max);
    assert!((w_max - by_hand).abs() < 1e-15);
}

#[test]
fn envelope_check_validates_epsilon_and_fits_a_constant() {
    let mu = 0.125;
    let (_, sol) = planted(16, mu, 5.0);
    let e = eta(&sol, 0.25).unwrap();
    assert!(envelope_check(&sol, 0.0, 1.0, 2.0, mu, e).is_err());
    assert!(envelope_check(&sol, 0.5, 1.0, 2.0, mu, e).is_err());
    assert!(envelope_check(&sol, 0.1, -1.0, 2.0, mu, e).is_err());
    let fit = envelope_check(&sol, 0.1, 1.0, 2.0, mu, e).unwrap();
    let tight = envelope_check(&sol, 0.1, fit.fitted_c, 2.0, mu, e).unwrap();
    assert!(tight.pass);
    assert!((tight.worst_ratio - 1.0).abs() < 1e-14);
    let zero = envelope_check(&sol, 0.1, 0.0, 2.0, mu, e).unwrap();
    assert!(!zero.pass && zero.worst_ratio.is_infinite());
}

#[test]
fn analysis_flags_under_resolved_runs() {
    let (f, sol) = planted(16, 0.04, 5.0);
    let ctx = GreenContext::new(f.grid()).unwrap();
    let report = blowup::analyze(&sol, &f, &ctx, &BlowupConfig::default());
    assert!(report.under_resolved);
    assert!(report.profile_sup_err.is_none());

    let (f, sol) = planted(16, 0.125, 5.0);
    let report = blowup::analyze(&sol, &f, &ctx, &BlowupConfig::default());
    assert!(!report.under_resolved);
    assert!(report.mu_q.is_some() && report.eta_q.is_some());
}

#[test]
fn green_columns_satisfy_their_equation_and_symmetry() {
    let g = TorusGrid::new(3, 16).unwrap();
    let ctx = GreenContext::new(&g).unwrap();
    let sources = [0, 77, 2048, 4095];
    for &s in &sources {
        assert!(green::column_equation_residual(&ctx, s) < 1e-12);
        let col = ctx.column(s);
        assert!(torus::integrate(&col).abs() < 1e-14 * col.sup_norm());
    }
    for &x in &sources {
        for &y in &sources {
            assert!((ctx.column(x).get(y) - ctx.column(y).get(x)).abs() < 1e-13);
        }
    }
    assert_eq!(ctx.cached_columns(), sources.len());
}

#[test]
fn green_column_is_translation_invariant() {
    let g = TorusGrid::new(3, 8).unwrap();
    let ctx = GreenContext::new(&g).unwrap();
    let a = ctx.column(0);
    let shift = g.flat_index(&[1, 2, 3]).unwrap();
    let b = ctx.column(shift);
    for i in 0..g.len() {
        let idx = g.multi_index(i);
        let moved: Vec<usize> = idx.iter().zip([1, 2, 3]).map(|(v, s)| (v + s) % 8).collect();
        assert!((a.get(i) - b.get(g.flat_index(&moved).unwrap())).abs() < 1e-13);
    }
}

#[test]
fn kernel_ratio_is_defined_off_the_diagonal() {
    let g = TorusGrid::new(3, 16).unwrap();
    let ctx = GreenContext::new(&g).unwrap();
    assert!(matches!(green::capital_phi(&ctx, 5, 5), Err(Error::SingularKernel)));
    let far = g.flat_index(&[8, 8, 8]).unwrap();
    let v = green::capital_phi(&ctx, 0, far).unwrap();
    assert!(v.is_finite());
}

#[test]
fn phi_requires_a_nonzero_mean() {
    let g = TorusGrid::new(3, 8).unwrap();
    let ctx = GreenContext::new(&g).unwrap();
    let zero_mean = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).cos()).unwrap();
    assert!(matches!(green::phi_field(&ctx, &zero_mean, 1.0), Err(Error::MeanTooSmall { .. })));
    let other = TorusGrid::new(3, 4).unwrap();
    assert!(green::phi_field(&ctx, &ScalarField::constant(&other, -1.0), 1.0).is_err());
}
