use vgk_core::firing::{firing_rate, GaussianState};
use vgk_core::modes::*;
use vgk_core::ode;
use vgk_core::{InitialData, ModelParams};

// a0 (t - 2 tanh(t/2)), with its series near zero.
fn d_lower(a0: f64, t: f64) -> f64 {
    if t < 1e-2 {
        a0 * (t.powi(3) / 12.0 - t.powi(5) / 120.0 + 17.0 * t.powi(7) / 20160.0)
    } else {
        a0 * (t - 2.0 * (t / 2.0).tanh())
    }
}

#[test]
fn lower_decay_small_time_expansion() {
    let a0 = 2.0;
    for i in 1..=100 {
        let t = 1e-4 * i as f64;
        assert!((d_lower(a0, t) - a0 * t.powi(3) / 12.0).abs() <= a0 * t.powi(4));
    }
}

#[test]
fn constant_rate_series_closed_forms() {
    let p = ModelParams::figure2();
    let nbar = 7.5;
    let mut s = FiringSeries::new(nbar, 1e-3, 1.0);
    for _ in 0..1000 {
        s = advance_series(&s, nbar, &p).unwrap();
    }
    let pt = s.at(1.0).unwrap();
    let (g, a) = (p.g_in(nbar), p.diffusion(nbar));
    assert!((pt.b - g * (1.0 - (-1.0f64).exp())).abs() < 1e-10);
    assert!((pt.c - a * (1.0 - (-2.0f64).exp())).abs() < 1e-10);
    assert!((pt.decay(1.0) - a * (1.0 - 2.0 * 0.5f64.tanh())).abs() < 1e-10);
    assert!(s.at(1.5).is_err());
}

#[test]
fn tracks_moment_ode() {
    let p = ModelParams::figure2();
    for &(m0, s0) in &[(0.0, 1.0), (25.0, 6.0), (-3.0, 0.5)] {
        let init = InitialData::gaussian(m0, s0);
        let run = run(
            &init,
            &p,
            &ModeRunConfig {
                t_end: 10.0,
                dt: 1e-3,
                k_max: 0,
                ..Default::default()
            },
        )
        .unwrap();
        let tr = ode::integrate(GaussianState::new(m0, s0), &p, 10.0, 1e-3).unwrap();
        for (i, pt) in run.series.points.iter().enumerate().step_by(100) {
            let b = pt.b + m0 * (-pt.t).exp();
            let c = pt.c + s0 * (-2.0 * pt.t).exp();
            let s = tr.states[i];
            assert!(
                (b - s.b).abs() < 1e-4 && (c - s.c).abs() < 1e-4,
                "t {}: {b} {c} vs {} {}",
                pt.t,
                s.b,
                s.c
            );
            let n = firing_rate(GaussianState::new(b, c), p.v_f).unwrap();
            assert!((n - pt.n).abs() < 1e-8 * n.max(1.0));
        }
    }
}

#[test]
fn homogeneous_data_excite_no_modes() {
    let p = ModelParams::figure2();
    let init = InitialData::gaussian(5.0, 2.0);
    let run = run(
        &init,
        &p,
        &ModeRunConfig {
            t_end: 0.5,
            dt: 1e-2,
            k_max: 3,
            g_points: 256,
            snapshot_times: vec![0.5],
        },
    )
    .unwrap();
    for k in 1..=3 {
        assert_eq!(run.snapshots[0].mode_l1(k), 0.0);
    }
}

#[test]
fn cosine_data_obey_homogenization_envelope() {
    let p = ModelParams::figure2();
    let init = InitialData::cosine_gaussian(0.8, 10.0, 4.0, p.v_f);
    let times: Vec<f64> = (1..=40)
        .map(|i| 0.05 * i as f64)
        .chain([3.0, 5.0, 10.0])
        .collect();
    let cfg = ModeRunConfig {
        t_end: 10.0,
        dt: 1e-3,
        k_max: 4,
        g_points: 1024,
        snapshot_times: times.clone(),
    };
    let run = run(&init, &p, &cfg).unwrap();
    let w2 = p.omega().powi(2);
    let l1_init = 0.4;
    for snap in &run.snapshots {
        let pt = run.series.at(snap.t).unwrap();
        let d = pt.decay(p.epsilon);
        assert!(d >= d_lower(p.a0, pt.t) * (1.0 - 1e-9), "t {}: D {d}", pt.t);
        let e = (-w2 * d).exp();
        let dev = snap.deviation_from_mean(64);
        assert!(dev <= 2.0 * e / (1.0 - e), "t {}: {dev}", pt.t);
        assert!(snap.mode_l1(1) <= l1_init * e * (1.0 + 1e-6) + 1e-14);
        assert!((snap.mass() - 1.0).abs() < 1e-8);
        // Every mode is bounded pointwise by the peak of the evolved Gaussian.
        let bound = l1_init / (2.0 * std::f64::consts::PI * pt.c).sqrt() * e;
        assert!(snap.modes[1]
            .iter()
            .all(|z| z.norm() <= bound * (1.0 + 1e-9)));
        assert!(snap.modes[0].iter().all(|z| z.re >= -1e-12));
    }
    assert!(run
        .series
        .points
        .iter()
        .all(|pt| pt.decay(1.0) >= d_lower(p.a0, pt.t) * (1.0 - 1e-9)));
}

#[test]
fn mode_contributions_shrink() {
    let p = ModelParams::figure2();
    let init = InitialData::cosine_gaussian(0.8, 10.0, 4.0, p.v_f);
    let solver = ModeSolver::new(&init, &p, 2).unwrap();
    let run = solver
        .run(&ModeRunConfig {
            t_end: 2.0,
            dt: 1e-3,
            ..Default::default()
        })
        .unwrap();
    let pt = run.series.at(2.0).unwrap();
    let f = solver.firing(pt).unwrap();
    let e = (-p.omega().powi(2) * pt.decay(1.0)).exp();
    let nonzero: f64 = f.per_mode.iter().skip(1).map(|z| 2.0 * z.re).sum();
    let n_bc = firing_rate(GaussianState::new(pt.b, pt.c), p.v_f).unwrap();
    assert!(nonzero.abs() <= 2.0 * e / (1.0 - e) * (1.0 + n_bc));
    assert!(f.per_mode.iter().map(|z| z.im).sum::<f64>().abs() <= 1e-10);
}

#[test]
fn runaway_feedback_increases_rate() {
    let p = ModelParams::figure1();
    let init = InitialData::cosine_gaussian(-0.2, 10.0, 4.0, p.v_f);
    let run = run(
        &init,
        &p,
        &ModeRunConfig {
            t_end: 20.0,
            dt: 1e-2,
            k_max: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let n0 = run.series.points[0].n;
    assert!(run.series.last().n > 10.0 * n0);
}

#[test]
fn time_scale_family_is_consistent() {
    // (ε, V_F, g1, a1) at time t equals (1, V_F/ε, g1/ε, a1/ε) at t/ε, with rates scaled by 1/ε.
    let base = ModelParams::figure2();
    let dt = 2e-3;
    let reference: Vec<f64> = {
        let init = InitialData::cosine_gaussian(0.5, 12.0, 3.0, base.v_f);
        run(
            &init,
            &base,
            &ModeRunConfig {
                t_end: 2.0,
                dt,
                k_max: 1,
                ..Default::default()
            },
        )
        .unwrap()
        .series
        .rates()
    };
    for eps in [0.5, 0.25] {
        let p = ModelParams {
            epsilon: eps,
            ..base
        };
        let scaled = ModelParams {
            v_f: base.v_f / eps,
            g1: base.g1 / eps,
            a1: base.a1 / eps,
            epsilon: 1.0,
            ..base
        };
        let init = InitialData::cosine_gaussian(0.5, 12.0, 3.0, p.v_f);
        let init_s = InitialData::cosine_gaussian(0.5, 12.0, 3.0, scaled.v_f);
        let a = run(
            &init,
            &p,
            &ModeRunConfig {
                t_end: 2.0 * eps,
                dt: dt * eps,
                k_max: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let b = run(
            &init_s,
            &scaled,
            &ModeRunConfig {
                t_end: 2.0,
                dt,
                k_max: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in a.series.rates().iter().zip(b.series.rates()) {
            assert!(
                (x * eps - y).abs() <= 1e-8 * y.max(1.0),
                "eps {eps}: {x} {y}"
            );
        }
        assert_eq!(a.series.points.len(), reference.len());
    }
}

#[test]
fn profile_beyond_series_is_error() {
    let p = ModelParams::figure2();
    let init = InitialData::gaussian(1.0, 1.0);
    let solver = ModeSolver::new(&init, &p, 0).unwrap();
    let s = FiringSeries::new(1.0, 1e-2, 1.0);
    let grid = UniformGrid {
        lo: -5.0,
        hi: 5.0,
        n: 11,
    };
    assert!(mode_profile(0, 1.0, &s, solver.init_modes(), &p, &grid).is_err());
}
