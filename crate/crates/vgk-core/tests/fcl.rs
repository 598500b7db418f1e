use std::f64::consts::PI;

use proptest::prelude::*;
use vgk_core::fcl::*;
use vgk_core::firing::solve_limit_firing;
use vgk_core::ModelParams;

const NODES: usize = 4096;

fn shifted_cosine() -> FclState {
    FclState::from_fn(1.0, NODES, |v| 1.0 - 0.2 * (2.0 * PI * v).cos())
}

fn exact_rate(tau: f64, p: &ModelParams) -> f64 {
    let rho = 1.0 - 0.2 * (2.0 * PI * (1.0 - tau)).cos();
    solve_limit_firing(rho, p).unwrap().rate().unwrap()
}

// Composite Gauss–Legendre (5 points) on many panels.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let x = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let m = a + (i as f64 + 0.5) * h;
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(m + 0.5 * h * xi))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

#[test]
fn blow_up_above_threshold() {
    let p = ModelParams::figure1().with_epsilon(0.0);
    let s = shifted_cosine();
    let run = evolve(&s, &p, 1.0, 1.0 / NODES as f64).unwrap();
    let FclOutcome::Blowup {
        t_star,
        v_star,
        tau_star,
    } = run.outcome
    else {
        panic!("expected blow-up")
    };
    assert!((v_star - 0.75).abs() < 1e-6 && (tau_star - 0.25).abs() < 1e-6);
    assert!(t_star > 0.0 && t_star <= p.v_f / p.g0);
    // Near τ* the integrand 1/g_in vanishes like the distance to τ*, so a
    // graded split keeps the oracle accurate.
    let f = |tau: f64| 1.0 / p.g_in(exact_rate(tau, &p));
    let mut oracle = 0.0;
    let mut a = 0.0;
    for k in 1..=30 {
        let b = 0.25 * (1.0 - 0.5f64.powi(k));
        oracle += integrate(f, a, b, 64);
        a = b;
    }
    assert!((t_star - oracle).abs() < 1e-6, "{t_star} {oracle}");
    let n0 = run.trajectory[0].n;
    let offset = 1e-3 * p.v_f / p.g0;
    let FclFiring::Rate(late) = firing_at_tau(tau_star - offset, &s, &p).unwrap() else {
        panic!()
    };
    assert!(late > 1e3 * n0, "{late} {n0}");
    assert_eq!(firing_at_tau(tau_star, &s, &p).unwrap(), FclFiring::BlowUp);
    assert!(run.trajectory.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn periodic_below_threshold() {
    let p = ModelParams::figure2().with_epsilon(0.0);
    let s = shifted_cosine();
    let run = evolve(&s, &p, 0.2, 1.0 / NODES as f64).unwrap();
    let FclOutcome::Periodic { period } = run.outcome else {
        panic!("expected periodic")
    };
    let oracle = integrate(|tau| 1.0 / p.g_in(exact_rate(tau, &p)), 0.0, 1.0, 256);
    assert!((period - oracle).abs() < 1e-9 * oracle, "{period} {oracle}");
    assert!(period <= p.v_f / p.g0);

    let tr = &run.trajectory;
    let interp = |t: f64| {
        let i = tr.partition_point(|x| x.t <= t).clamp(1, tr.len() - 1);
        let (a, b) = (&tr[i - 1], &tr[i]);
        a.n + (b.n - a.n) * (t - a.t) / (b.t - a.t)
    };
    let mut worst: f64 = 0.0;
    for x in tr.iter().take_while(|x| x.t + period <= tr[tr.len() - 1].t) {
        worst = worst.max((interp(x.t + period) - x.n).abs());
    }
    assert!(worst <= 1e-6, "{worst}");
    for w in tr.windows(2) {
        let slope = (w[1].t - w[0].t) / (w[1].tau - w[0].tau);
        assert!(slope > 0.0 && slope <= 1.0 / p.g0 * (1.0 + 1e-12));
    }
}

#[test]
fn threshold_is_sharp() {
    let s = shifted_cosine();
    let g_star = threshold_g1(&s);
    assert!((g_star - 1.0 / 1.2).abs() < 1e-12);
    let below = ModelParams::figure2()
        .with_epsilon(0.0)
        .with_g1(g_star * (1.0 - 1e-3));
    let at = below.with_g1(g_star);
    assert!(matches!(
        evolve(&s, &below, 0.2, 1.0 / NODES as f64).unwrap().outcome,
        FclOutcome::Periodic { .. }
    ));
    assert!(matches!(
        evolve(&s, &at, 0.2, 1.0 / NODES as f64).unwrap().outcome,
        FclOutcome::Blowup { .. }
    ));
}

#[test]
fn uniform_marginal_at_unit_gain_blows_up_immediately() {
    let s = FclState::uniform(1.0, 64);
    for g1 in [1.0, 2.0] {
        let p = ModelParams::figure1().with_epsilon(0.0).with_g1(g1);
        assert!(evolve(&s, &p, 1.0, 1.0 / 64.0).is_err());
        assert_eq!(firing_at_tau(0.3, &s, &p).unwrap(), FclFiring::BlowUp);
    }
}

#[test]
fn uniform_marginal_rate_is_constant() {
    let p = ModelParams::figure2().with_epsilon(0.0);
    let run = evolve(&FclState::uniform(1.0, 128), &p, 1.0, 1.0 / 128.0).unwrap();
    let n0 = run.trajectory[0].n;
    assert!(run.trajectory.iter().all(|x| x.n == n0));
    let FclOutcome::Periodic { period } = run.outcome else {
        panic!()
    };
    assert!((period - 1.0 / p.g_in(n0)).abs() < 1e-14);
}

#[test]
fn profile_returns_after_one_period() {
    let s = shifted_cosine();
    for tau in [0.0, 0.13, 0.71] {
        let a = s.profile_at_tau(tau, 512);
        let b = s.profile_at_tau(tau + 1.0, 512);
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 512.0;
        assert!(l1 < 1e-12);
    }
}

#[test]
fn invalid_marginals_rejected() {
    let lopsided = FclState {
        v_f: 1.0,
        rho: vec![0.5, 1.5, 1.0],
    };
    assert!(lopsided.validate().is_err());
    let unnormalized = FclState::from_fn(1.0, 16, |_| 2.0);
    assert!(evolve(&unnormalized, &ModelParams::figure2(), 1.0, 0.1).is_err());
}

proptest! {
    #[test]
    fn threshold_never_exceeds_threshold_voltage(c1 in -0.3..0.3f64, s2 in -0.2..0.2f64, v_f in 0.5..3.0f64) {
        let w = 2.0 * PI / v_f;
        let s = FclState::from_fn(v_f, 512, |v| (1.0 + c1 * (w * v).cos() + s2 * (2.0 * w * v).sin()) / v_f);
        prop_assert!(threshold_g1(&s) <= v_f * (1.0 + 1e-12));
    }
}
