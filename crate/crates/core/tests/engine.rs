mod common;

use etnes::analysis::{convergence_metrics, design_report, dwell_time_bound, lyapunov_decay_check};
use etnes::scenario::Scenario;
use etnes::sim::{
    compare_traces, inter_event_stats, omega_sweep, simulate, simulate_average, trigger_soundness, SimConfig, SimMode,
};
use etnes::{DitherConfig, Rational, TriggerConfig};

fn dither(a: f64, base: f64) -> DitherConfig<f64> {
    DitherConfig::new(vec![a, a], vec![Rational::from_integer(7), Rational::from_integer(11)], base).unwrap()
}

fn trigger(k: f64) -> TriggerConfig<f64> {
    TriggerConfig::new(vec![0.5, 0.4], vec![k, k]).unwrap()
}

fn sim(mode: SimMode, theta0: [f64; 2]) -> SimConfig<f64> {
    SimConfig::new(1e-3, 20.0, theta0.to_vec(), mode).unwrap()
}

#[test]
fn original_loop_settles_in_dither_band() {
    let game = common::well_separated_game();
    let tr = simulate(&game, &dither(0.1, 10.0), &trigger(0.5), &sim(SimMode::Original, [2.0, -0.5])).unwrap();
    let m = convergence_metrics(&tr, &[1.0, 1.0]).unwrap();
    assert!(m.final_residual < 0.3, "{m:?}");
    assert!(m.fitted_rate.unwrap() > 0.0);
    let stats = inter_event_stats(&tr);
    assert!(stats.iter().all(|s| s.min_gap.unwrap() >= 1e-3 * (1.0 - 1e-9)));
}

#[test]
fn deviation_from_equilibrium_scales_with_amplitude() {
    let game = common::well_separated_game();
    let mut prev = 0.0;
    for a in [0.05, 0.1, 0.2] {
        let tr = simulate(&game, &dither(a, 10.0), &trigger(0.2), &sim(SimMode::Original, [1.0, 1.0])).unwrap();
        let dev = tr.theta.rows().flat_map(|r| r.iter().map(|x| (x - 1.0).abs())).fold(0.0, f64::max);
        assert!(dev <= 1.5 * a, "a={a}: {dev}");
        assert!(dev > prev);
        prev = dev;
    }
}

#[test]
fn gap_to_average_shrinks_with_frequency() {
    let game = common::well_separated_game();
    let rows = omega_sweep(&game, &dither(0.1, 10.0), &trigger(0.5), &sim(SimMode::Original, [2.0, -0.5]), &[1.0, 2.0, 4.0])
        .unwrap();
    for r in &rows[1..] {
        let q = r.ratio.unwrap();
        assert!((0.3..=0.8).contains(&q), "{rows:?}");
    }
}

#[test]
fn trigger_rule_holds_along_trace() {
    let game = common::well_separated_game();
    let trig = trigger(0.5);
    let tr = simulate(&game, &dither(0.1, 10.0), &trig, &sim(SimMode::Original, [2.0, -0.5])).unwrap();
    let s = trigger_soundness(&tr, trig.sigmas()).unwrap();
    assert!(s.checked_events > 100);
    assert_eq!((s.unjustified_events, s.slack_violations), (0, 0), "{s:?}");
}

#[test]
fn zero_gain_holds_estimates() {
    let game = common::well_separated_game();
    let tr = simulate(&game, &dither(0.1, 10.0), &trigger(0.0), &sim(SimMode::Original, [2.0, -0.5])).unwrap();
    assert!(tr.theta_hat.rows().all(|r| r == [2.0, -0.5]));
}

#[test]
fn average_loop_meets_lyapunov_rate() {
    let game = common::well_separated_game();
    let trig = trigger(0.2);
    let tr = simulate_average(&game, &trig, &sim(SimMode::Average, [2.0, -0.5])).unwrap();
    let report = design_report(&game, trig.gains(), trig.sigmas()).unwrap();
    let check = lyapunov_decay_check(&tr, &report.p);
    assert_eq!((check.violations, check.sandwich_violations), (0, 0), "{check:?}");
    let rate = convergence_metrics(&tr, &[1.0, 1.0]).unwrap().fitted_rate.unwrap();
    assert!(rate >= 0.8 * report.bounds.decay_rate.unwrap(), "{rate} vs {:?}", report.bounds);
}

#[test]
fn average_loop_at_equilibrium_never_fires() {
    let game = common::well_separated_game();
    let tr = simulate_average(&game, &trigger(0.5), &sim(SimMode::Average, [1.0, 1.0])).unwrap();
    assert!(tr.g_est.rows().all(|g| g == [0.0, 0.0]));
    assert_eq!(tr.event_counts(), vec![1, 1]);
}

#[test]
fn runs_are_deterministic() {
    let game = common::well_separated_game();
    let run = || simulate(&game, &dither(0.1, 10.0), &trigger(0.5), &sim(SimMode::Original, [2.0, -0.5])).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(compare_traces(&a, &b).unwrap().max_gap, 0.0);
}

#[test]
fn oligopoly_average_counts_are_grid_converged() {
    let mut sc = Scenario::preset("oligopoly-4firm").unwrap();
    sc.override_sim(Some(SimMode::Average), None, None, None).unwrap();
    let coarse = simulate_average(&sc.game, &sc.trigger, &sc.sim).unwrap();
    sc.override_sim(None, Some(5e-4), None, None).unwrap();
    let fine = simulate_average(&sc.game, &sc.trigger, &sc.sim).unwrap();
    for (c, f) in coarse.event_counts().iter().zip(fine.event_counts()) {
        let change = (f as f64 - *c as f64).abs() / *c as f64;
        assert!(change < 0.05, "{c} -> {f}");
    }
}

#[test]
fn oligopoly_dwell_bound_is_reported_next_to_average_gaps() {
    let sc = Scenario::preset("oligopoly-4firm").unwrap();
    let h = etnes::pseudo_gradient_matrix(&sc.game).matrix;
    let tau = dwell_time_bound(&h, sc.trigger.gains(), sc.trigger.sigma_bar());
    assert!(tau > 0.0 && tau.is_finite());
    let mut cfg = sc.sim.clone();
    cfg.mode = SimMode::Average;
    cfg.horizon = 5.0;
    let tr = simulate_average(&sc.game, &sc.trigger, &cfg).unwrap();
    let min_gap = inter_event_stats(&tr).iter().filter_map(|s| s.min_gap).fold(f64::INFINITY, f64::min);
    // informational comparison; the grid step bounds gaps from below
    assert!(min_gap >= cfg.dt * (1.0 - 1e-9));
}
