use approx::assert_relative_eq;
use proptest::prelude::*;
use vgk_core::firing::{firing_rate, GaussianState};
use vgk_core::ode::*;
use vgk_core::ModelParams;

// Steady states satisfy b = g0 + g1 N, c = a0 + a1 N; bisect on N instead of c.
fn oracle(p: &ModelParams) -> (f64, f64) {
    let h = |n: f64| {
        n - firing_rate(GaussianState::new(p.g0 + p.g1 * n, p.a0 + p.a1 * n), p.v_f).unwrap()
    };
    let (mut lo, mut hi) = (0.0, 1e7);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n = 0.5 * (lo + hi);
    (p.g0 + p.g1 * n, p.a0 + p.a1 * n)
}

#[test]
fn steady_state_matches_oracle_and_bounds() {
    let p = ModelParams::figure2();
    let r = steady_state(&p).unwrap().unwrap();
    let (b, c) = oracle(&p);
    assert_relative_eq!(r.state.b, b, max_relative = 1e-10);
    assert_relative_eq!(r.state.c, c, max_relative = 1e-10);
    assert!(r.residual.abs() <= 1e-12);
    assert!(r.state.b >= 20.0 && r.state.c >= 4.0);
    assert!(r.state.b >= r.lower_bounds.0 && r.state.c >= r.lower_bounds.1);
    assert!(r.trace < 0.0 && r.det > 0.0 && r.stable);
    let (db, dc) = rhs(r.state, &p).unwrap();
    assert!(db.abs() < 1e-10 && dc.abs() < 1e-10);
}

#[test]
fn classification_follows_threshold() {
    let p = ModelParams::figure2();
    assert!(matches!(
        classify(&p).unwrap(),
        Classification::Convergent(_)
    ));
    assert_eq!(
        classify(&p.with_g1(1.0)).unwrap(),
        Classification::Divergent
    );
    assert_eq!(
        classify(&p.with_g1(2.0)).unwrap(),
        Classification::Divergent
    );
}

#[test]
fn converges_from_origin() {
    let p = ModelParams::figure2();
    let r = steady_state(&p).unwrap().unwrap();
    let tr = integrate(GaussianState::new(0.0, 1.0), &p, 50.0, 1e-3).unwrap();
    let last = tr.last();
    assert!((last.b - r.state.b).abs() < 1e-6 && (last.c - r.state.c).abs() < 1e-6);
    for (t, s) in tr.times.iter().zip(&tr.states) {
        assert!(s.c >= p.a0 * (1.0 - (-2.0 * t).exp()) * (1.0 - 10.0 * tr.dt));
    }
    // Sign of b' changes at most once after t = 5.
    let signs: Vec<bool> = tr
        .times
        .iter()
        .zip(&tr.states)
        .filter(|(t, _)| **t >= 5.0)
        .map(|(_, s)| rhs(*s, &p).unwrap().0)
        .filter(|d| d.abs() > 1e-12)
        .map(|d| d > 0.0)
        .collect();
    assert!(signs.windows(2).filter(|w| w[0] != w[1]).count() <= 1);
}

#[test]
fn attractor_from_ring() {
    let p = ModelParams::figure2();
    let s = steady_state(&p).unwrap().unwrap().state;
    for i in 0..8 {
        let th = std::f64::consts::TAU * i as f64 / 8.0;
        let init = GaussianState::new(s.b + 10.0 * th.cos(), (s.c + 10.0 * th.sin()).max(0.1));
        let last = integrate(init, &p, 50.0, 1e-3).unwrap().last();
        assert!(
            (last.b - s.b).abs() < 1e-5 && (last.c - s.c).abs() < 1e-5,
            "ring point {i}"
        );
    }
}

#[test]
fn mean_grows_at_least_linearly_when_divergent() {
    for g1 in [1.0, 2.0] {
        let p = ModelParams::figure2().with_g1(g1);
        let tr = integrate(GaussianState::new(0.0, 1.0), &p, 20.0, 1e-3).unwrap();
        let b0 = tr.states[0].b;
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!(s.b >= b0 + 0.95 * p.g0 * t, "g1 {g1} t {t}");
        }
    }
}

#[test]
fn equilibrium_is_held() {
    let p = ModelParams::figure2();
    let s = steady_state(&p).unwrap().unwrap().state;
    let tr = integrate(s, &p, 10.0, 1e-2).unwrap();
    let last = tr.last();
    assert!((last.b - s.b).abs() <= 1e-8 * 10.0 && (last.c - s.c).abs() <= 1e-8 * 10.0);
}

#[test]
fn attractor_blows_up_near_threshold() {
    let p = ModelParams::figure2();
    let high = steady_state(&p.with_g1(0.99)).unwrap().unwrap().state.b;
    let mid = steady_state(&p).unwrap().unwrap().state.b;
    assert!(high >= p.g0 / (1.0 - 0.99) * (1.0 - 1e-9));
    assert!(high >= 50.0 * mid * (1.0 - 1e-9), "{high} {mid}");
}

#[test]
fn frozen_feedback_mean_is_baseline() {
    let p = ModelParams {
        g1: 0.0,
        ..ModelParams::figure2()
    };
    let s = steady_state(&p).unwrap().unwrap().state;
    assert_eq!(s.b, p.g0);
    let n = firing_rate(s, p.v_f).unwrap();
    assert!((s.c - (p.a0 + p.a1 * n)).abs() < 1e-12);
}

#[test]
fn domain_errors() {
    let p = ModelParams::figure2();
    assert!(rhs(GaussianState { b: 0.0, c: 0.0 }, &p).is_err());
    assert!(jacobian(GaussianState { b: 0.0, c: -1.0 }, &p).is_err());
    assert!(integrate(GaussianState { b: 0.0, c: 0.0 }, &p, 1.0, 1e-3).is_err());
}

proptest! {
    #[test]
    fn jacobian_matches_differences(b in -30.0..60.0f64, c in 0.2..50.0f64, g1 in 0.0..2.0f64) {
        let p = ModelParams::figure2().with_g1(g1);
        let s = GaussianState::new(b, c);
        let j = jacobian(s, &p).unwrap();
        prop_assert!(j[0][1] > 0.0 || g1 == 0.0 || b / c.sqrt() > 37.0);
        prop_assert!(j[1][0] > 0.0 || b / c.sqrt() < -37.0);
        let h = 1e-5;
        let f = |b: f64, c: f64| rhs(GaussianState::new(b, c), &p).unwrap();
        let (pb, mb) = (f(b + h, c), f(b - h, c));
        let (pc, mc) = (f(b, c + h), f(b, c - h));
        let fd = [[(pb.0 - mb.0) / (2.0 * h), (pc.0 - mc.0) / (2.0 * h)], [(pb.1 - mb.1) / (2.0 * h), (pc.1 - mc.1) / (2.0 * h)]];
        for r in 0..2 {
            for k in 0..2 {
                prop_assert!((fd[r][k] - j[r][k]).abs() <= 1e-6 * j[r][k].abs().max(1.0), "{r}{k}: {} {}", fd[r][k], j[r][k]);
            }
        }
    }

    #[test]
    fn variance_stays_positive(b0 in -20.0..40.0f64, c0 in 0.01..30.0f64, g1 in 0.0..0.9f64) {
        let p = ModelParams::figure2().with_g1(g1);
        let tr = integrate(GaussianState::new(b0, c0), &p, 5.0, 1e-2).unwrap();
        prop_assert!(tr.states.iter().all(|s| s.c > 0.0));
        prop_assert!(tr.firing.iter().all(|&n| n >= 0.0));
    }
}
