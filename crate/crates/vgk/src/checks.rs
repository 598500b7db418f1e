//! Named property checks shared by `vgk verify` and the acceptance tests.
//! Each check reports a verdict and a short numeric detail; nothing panics.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;
use vgk_core::fcl::{self, FclFiring, FclOutcome, FclState};
use vgk_core::firing::{
    firing_rate, firing_rate_grad, solve_limit_firing, stability_margin, GaussianState,
};
use vgk_core::grid::{self, GridDiagnostics, GridField, GridRunConfig, GridSpec, StepOptions};
use vgk_core::modes::{self, FiringSeries, ModeRunConfig};
use vgk_core::ode;
use vgk_core::{InitialData, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// What the check asserts, in words.
    pub asserts: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, asserts: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            asserts: asserts.into(),
            passed,
            detail,
        }
    }

    fn failed(name: &str, asserts: &str, err: impl std::fmt::Display) -> Self {
        Self::new(name, asserts, false, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

impl Criterion {
    fn from_checks(id: u8, title: &str, start: Instant, checks: Vec<Check>) -> Self {
        Self {
            id,
            title: title.into(),
            passed: checks.iter().all(|c| c.passed),
            seconds: start.elapsed().as_secs_f64(),
            checks,
        }
    }

    /// `criterion N: PASS|FAIL title (seconds)` plus one indented line per check.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "criterion {}: {} {} ({:.1} s)\n",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds
        );
        for c in &self.checks {
            s.push_str(&format!(
                "    [{}] {}: {}\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        s
    }
}

/// Grid runs whose conservation and sign are audited afterwards.
#[derive(Debug, Clone, Default)]
pub struct GridAudit {
    pub runs: Vec<(String, GridDiagnostics)>,
}

// Low-discrepancy points in the unit square.
fn r2(i: usize) -> (f64, f64) {
    let a1 = 0.754_877_666_246_692_7;
    let a2 = 0.569_840_290_998_053_2;
    ((0.5 + a1 * i as f64).fract(), (0.5 + a2 * i as f64).fract())
}

pub fn firing_suite() -> Criterion {
    let start = Instant::now();
    let samples = 10_000;
    let mut env_worst = f64::NEG_INFINITY;
    let mut grad_worst: f64 = 0.0;
    let mut grad_at = (0.0, 0.0);
    let mut grad_err = None;
    for i in 0..samples {
        let (u, w) = r2(i);
        let b = -50.0 + 100.0 * u;
        let c = 100.0 * (1.0 - w);
        let s = GaussianState::new(b, c);
        let Ok(n) = firing_rate(s, 1.0) else {
            grad_err = Some(format!("firing_rate failed at ({b}, {c})"));
            break;
        };
        let lo = b.max(0.0) - n;
        let hi = n - b.max(0.0) - c.sqrt();
        env_worst = env_worst.max(lo).max(hi);

        let (nb, nc) = firing_rate_grad(s, 1.0).expect("c > 0");
        // Five-point stencils on the scale over which log N varies, which
        // shrinks like 1/|lambda| in b and 1/lambda^2 in c in the lower tail.
        let f = |b: f64, c: f64| firing_rate(GaussianState::new(b, c), 1.0).expect("c > 0");
        let d5 = |g: &dyn Fn(f64) -> f64, h: f64| {
            (8.0 * (g(h) - g(-h)) - (g(2.0 * h) - g(-2.0 * h))) / (12.0 * h)
        };
        let lambda = b / c.sqrt();
        let hb = 1e-3 * c.sqrt() / (1.0 + lambda.abs());
        let hc = 1e-3 * c / (1.0 + lambda * lambda);
        let fb = d5(&|h| f(b + h, c), hb);
        let fc = d5(&|h| f(b, c + h), hc);
        for (fd, exact, h) in [(fb, nb, hb), (fc, nc, hc)] {
            // Round-off in the stencil is about 3 ulp(N)/h; ulp bottoms out
            // at the smallest subnormal.
            let ulp = (f64::EPSILON * n).max(f64::from_bits(1));
            let noise = 3.0 * ulp / h;
            let excess = ((fd - exact).abs() - noise).max(0.0) / exact.abs().max(f64::MIN_POSITIVE);
            if excess > grad_worst {
                grad_worst = excess;
                grad_at = (b, c);
            }
        }
    }
    let mut margin_worst = f64::INFINITY;
    for i in 0..10_000 {
        let lambda = 50.0 * i as f64 / 9_999.0;
        margin_worst = margin_worst.min(
            stability_margin(lambda)
                .map(|m| m.2)
                .unwrap_or(f64::NEG_INFINITY),
        );
    }
    let mut checks = vec![
        Check::new(
            "firing_rate_envelope",
            "b+ <= V_F N <= b+ + sqrt(c) on 1e4 states, b in [-50, 50], c in (0, 100]",
            env_worst <= 1e-12,
            format!("largest violation {env_worst:.3e} (tol 1e-12)"),
        ),
        Check::new(
            "firing_rate_gradient",
            "closed-form dN/db, dN/dc match five-point differences (h = 1e-3 of the log-N scale) to rel 1e-6 beyond round-off",
            grad_worst <= 1e-6,
            format!("worst relative excess {grad_worst:.3e} at (b, c) = ({:.4}, {:.4})", grad_at.0, grad_at.1),
        ),
        Check::new(
            "stability_margin_nonnegative",
            "1 - A1 - A2 >= -1e-12 on 1e4 points of lambda in [0, 50]",
            margin_worst >= -1e-12,
            format!("smallest margin {margin_worst:.3e}"),
        ),
    ];
    if let Some(e) = grad_err {
        checks.push(Check::new(
            "firing_rate_domain",
            "evaluation succeeds",
            false,
            e,
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "firing_suite_runtime",
        "suite runs in under 5 s",
        elapsed < 5.0,
        format!("{elapsed:.2} s"),
    ));
    Criterion::from_checks(1, "firing-function suite", start, checks)
}

pub fn ode_dichotomy() -> Criterion {
    let start = Instant::now();
    let p = ModelParams::figure2();
    let mut checks = Vec::new();
    let name = "ode_steady_state";
    let what = "steady state exists with b* >= 20, c* >= 4, trace < 0, det > 0";
    match ode::steady_state(&p) {
        Ok(Some(r)) => {
            let s = r.state;
            checks.push(Check::new(
                name,
                what,
                s.b >= 20.0
                    && s.c >= 4.0
                    && r.trace < 0.0
                    && r.det > 0.0
                    && r.residual.abs() <= 1e-12,
                format!(
                    "b* = {:.10}, c* = {:.10}, trace = {:.4}, det = {:.4}, F(c*) = {:.1e}",
                    s.b, s.c, r.trace, r.det, r.residual
                ),
            ));
            let mut worst: f64 = 0.0;
            for i in 0..8 {
                let th = 2.0 * PI * i as f64 / 8.0;
                let init =
                    GaussianState::new(s.b + 10.0 * th.cos(), (s.c + 10.0 * th.sin()).max(0.1));
                match ode::integrate(init, &p, 50.0, 1e-3) {
                    Ok(tr) => {
                        let l = tr.last();
                        worst = worst.max((l.b - s.b).abs()).max((l.c - s.c).abs());
                    }
                    Err(_) => worst = f64::INFINITY,
                }
            }
            checks.push(Check::new(
                "ode_global_attractor",
                "8 initial states on a ring of radius 10 around (b*, c*) end within 1e-5 of it at t = 50",
                worst <= 1e-5,
                format!("largest distance {worst:.3e}"),
            ));
        }
        Ok(None) => checks.push(Check::new(name, what, false, "no steady state".into())),
        Err(e) => checks.push(Check::failed(name, what, e)),
    }
    for g1 in [1.0, 2.0] {
        let q = p.with_g1(g1);
        let name = if g1 == 1.0 {
            "ode_divergence_g1_1"
        } else {
            "ode_divergence_g1_2"
        };
        let what = "b(t) >= b(0) + 0.95 g0 t on [0, 20] (up to the divergence stop at b = 1e6)";
        match ode::integrate(GaussianState::new(0.0, 1.0), &q, 20.0, 1e-3) {
            Ok(tr) => {
                let b0 = tr.states[0].b;
                let worst = tr
                    .times
                    .iter()
                    .zip(&tr.states)
                    .map(|(t, s)| s.b - (b0 + 0.95 * q.g0 * t))
                    .fold(f64::INFINITY, f64::min);
                let div = matches!(ode::classify(&q), Ok(ode::Classification::Divergent));
                checks.push(Check::new(
                    name,
                    what,
                    worst >= 0.0 && div,
                    format!(
                        "min slack {worst:.3}, covered t <= {:.2}, classified divergent: {div}",
                        tr.times.last().unwrap()
                    ),
                ));
            }
            Err(e) => checks.push(Check::failed(name, what, e)),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "ode_runtime",
        "suite runs in under 10 s",
        elapsed < 10.0,
        format!("{elapsed:.2} s"),
    ));
    Criterion::from_checks(2, "moment ODE dichotomy", start, checks)
}

pub fn modes_vs_ode() -> Criterion {
    let start = Instant::now();
    let p = ModelParams::figure2();
    let mut checks = Vec::new();
    for &(m0, s0) in &[(0.0, 1.0), (30.0, 8.0)] {
        let name = format!("modes_track_moment_ode_from_{m0}_{s0}");
        let what = "effective mean B + m0 e^-t and variance C + s0 e^-2t of the mode solver match the moment ODE within 1e-4 on [0, 10], dt = 1e-3";
        let init = InitialData::gaussian(m0, s0);
        let cfg = ModeRunConfig {
            t_end: 10.0,
            dt: 1e-3,
            k_max: 0,
            ..Default::default()
        };
        let res = modes::run(&init, &p, &cfg).and_then(|r| {
            ode::integrate(GaussianState::new(m0, s0), &p, 10.0, 1e-3).map(|tr| (r, tr))
        });
        match res {
            Ok((r, tr)) => {
                let worst = r
                    .series
                    .points
                    .iter()
                    .zip(&tr.states)
                    .map(|(pt, s)| {
                        let b = pt.b + m0 * (-pt.t).exp();
                        let c = pt.c + s0 * (-2.0 * pt.t).exp();
                        (b - s.b).abs().max((c - s.c).abs())
                    })
                    .fold(0.0, f64::max);
                checks.push(Check::new(
                    &name,
                    what,
                    worst <= 1e-4,
                    format!("max deviation {worst:.3e}"),
                ));
            }
            Err(e) => checks.push(Check::failed(&name, what, e)),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "modes_vs_ode_runtime",
        "runs in under 60 s",
        elapsed < 60.0,
        format!("{elapsed:.2} s"),
    ));
    Criterion::from_checks(3, "mode solver against the moment ODE", start, checks)
}

/// `a0 (t - 2 tanh(t/2))` with its series for small `t`.
pub fn decay_lower_bound(a0: f64, t: f64) -> f64 {
    if t < 1e-2 {
        a0 * (t.powi(3) / 12.0 - t.powi(5) / 120.0 + 17.0 * t.powi(7) / 20160.0)
    } else {
        a0 * (t - 2.0 * (t / 2.0).tanh())
    }
}

pub fn homogenization_envelope(t_end: f64) -> Criterion {
    let start = Instant::now();
    let p = ModelParams::figure2();
    let init = InitialData::cosine_gaussian(0.9, 10.0, 4.0, p.v_f);
    let steps = (t_end / 0.05).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| 0.05 * i as f64).collect();
    let cfg = ModeRunConfig {
        t_end,
        dt: 1e-3,
        k_max: 4,
        g_points: 1024,
        snapshot_times: times,
    };
    let mut checks = Vec::new();
    match modes::run(&init, &p, &cfg) {
        Ok(r) => {
            let w2 = p.omega().powi(2);
            let mut env_slack = f64::INFINITY;
            let mut ratio: f64 = 0.0;
            let mut ratio_at = 0.0;
            for s in &r.snapshots {
                let Ok(pt) = r.series.at(s.t) else { continue };
                let e = (-w2 * pt.decay(p.epsilon)).exp();
                let bound = if e < 1.0 {
                    2.0 * e / (1.0 - e)
                } else {
                    f64::INFINITY
                };
                let dev = s.deviation_from_mean(64);
                env_slack = env_slack.min(bound - dev);
                if bound >= f64::MIN_POSITIVE && dev / bound > ratio {
                    ratio = dev / bound;
                    ratio_at = s.t;
                }
            }
            checks.push(Check::new(
                "mode_decay_envelope",
                "||p - p0/V_F||_L1 <= 2 e^{-w^2 D}/(1 - e^{-w^2 D}) at every output time (w = 2 pi/V_F)",
                env_slack >= 0.0,
                format!("{} output times, largest deviation/bound {ratio:.3e} at t = {ratio_at:.2}", r.snapshots.len()),
            ));
            let mut worst = f64::INFINITY;
            let mut tightest = f64::INFINITY;
            for pt in &r.series.points {
                let d = decay_lower_bound(p.a0, pt.t);
                let big_d = pt.decay(p.epsilon);
                worst = worst.min(big_d - d * (1.0 - 1e-12));
                if pt.t > 0.0 {
                    tightest = tightest.min(big_d / d);
                }
            }
            checks.push(Check::new(
                "mode_decay_factor_lower_bound",
                "D(t) >= a0 (t - 2(e^t - 1)/(e^t + 1)) at every step",
                worst >= 0.0,
                format!(
                    "smallest D/d {tightest:.6} over {} steps",
                    r.series.points.len()
                ),
            ));
            let cubic = (1..=100).map(|i| 1e-4 * i as f64).all(|t| {
                (decay_lower_bound(p.a0, t) - p.a0 * t.powi(3) / 12.0).abs() <= p.a0 * t.powi(4)
            });
            checks.push(Check::new(
                "decay_lower_bound_cubic_onset",
                "|d(t) - a0 t^3/12| <= a0 t^4 for t <= 0.01",
                cubic,
                String::new(),
            ));
        }
        Err(e) => checks.push(Check::failed("mode_decay_envelope", "mode solver run", e)),
    }
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "homogenization_runtime",
        "runs in under 2 min",
        elapsed < 120.0,
        format!("{elapsed:.2} s"),
    ));
    Criterion::from_checks(4, "voltage homogenization envelope", start, checks)
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[i - 1], times[i]);
    values[i - 1] + (values[i] - values[i - 1]) * (t - t0) / (t1 - t0)
}

/// Initial data for the ε-series in every solver: cosine marginal
/// `1 - 0.2 cos(2πv)` with a Gaussian at the limit model's quasi-steady state.
pub fn figure_init(p: &ModelParams, amplitude: f64) -> Option<InitialData> {
    let n0 = solve_limit_firing((1.0 + amplitude) / p.v_f, p)
        .ok()?
        .rate()?;
    Some(InitialData::cosine_gaussian(
        amplitude,
        p.g_in(n0),
        p.diffusion(n0),
        p.v_f,
    ))
}

pub fn cross_solver(sizes: &[usize], audit: &mut GridAudit) -> Criterion {
    let start = Instant::now();
    let p = ModelParams::figure2();
    let mut checks = Vec::new();
    let init = InitialData::cosine_gaussian(-0.2, 10.0, 4.0, p.v_f);
    let t_end = 10.0;
    let reference = match modes::run(
        &init,
        &p,
        &ModeRunConfig {
            t_end,
            dt: 1e-3,
            ..Default::default()
        },
    ) {
        Ok(r) => r.series,
        Err(e) => {
            checks.push(Check::failed(
                "cross_solver_reference",
                "mode solver run",
                e,
            ));
            return Criterion::from_checks(5, "grid solver against mode solver", start, checks);
        }
    };
    let mut l1 = Vec::new();
    for &n in sizes {
        let spec = GridSpec::aligned(n, n, -10.0, 50.0);
        let cfg = GridRunConfig {
            t_end,
            dt_max: 1.0,
            output_dt: 0.01,
            snapshot_times: vec![],
            options: StepOptions::default(),
        };
        let name = format!("grid_vs_modes_{n}x{n}");
        let what =
            "grid N(t) within 2% of the mode solver at t = 1, 5, 10 (eps = 1, dt at Courant 0.9)";
        let run = GridField::from_initial(&init, p.v_f, spec).and_then(|f| grid::run(f, &p, &cfg));
        match run {
            Ok(r) => {
                audit.runs.push((name.clone(), r.diagnostics));
                let mut worst: f64 = 0.0;
                let mut parts = Vec::new();
                for t in [1.0, 5.0, 10.0] {
                    let (g, m) = (r.series.at(t).map(|x| x.n), reference.at(t).map(|x| x.n));
                    let rel = match (g, m) {
                        (Ok(g), Ok(m)) => (g - m).abs() / m,
                        _ => f64::INFINITY,
                    };
                    worst = worst.max(rel);
                    parts.push(format!("t={t}: {rel:.2e}"));
                }
                checks.push(Check::new(&name, what, worst <= 0.02, parts.join(", ")));
                l1.push(time_l1(&r.series, &reference));
            }
            Err(e) => checks.push(Check::failed(&name, what, e)),
        }
    }
    if l1.len() >= 2 {
        let ratios: Vec<f64> = l1.windows(2).map(|w| w[0] / w[1]).collect();
        checks.push(Check::new(
            "grid_refinement_convergence",
            "halving dv, dg and dt shrinks the time-L1 gap to the mode solver on [0, 10] by at least 1.5x",
            ratios.iter().all(|&r| r >= 1.5),
            format!("gaps {}, ratios {ratios:.2?}", l1.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")),
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "cross_solver_runtime",
        "runs in under 10 min",
        elapsed < 600.0,
        format!("{elapsed:.1} s"),
    ));
    Criterion::from_checks(5, "grid solver against mode solver", start, checks)
}

// ∫|N_grid - N_modes| dt on the grid's output nodes.
fn time_l1(grid: &FiringSeries, modes: &FiringSeries) -> f64 {
    let mt = modes.times();
    let mn = modes.rates();
    let diffs: Vec<f64> = grid
        .points
        .iter()
        .map(|p| (p.n - interp(&mt, &mn, p.t)).abs())
        .collect();
    vgk_core::quad::trapezoid(&diffs, grid.dt)
}

/// Cosine marginal with its maximum at `v = V_F/2`, so `ρ(V_F) = 0.8`.
pub fn shifted_cosine(nodes: usize) -> FclState {
    FclState::from_fn(1.0, nodes, |v| 1.0 - 0.2 * (2.0 * PI * v).cos())
}

pub fn fcl_dichotomy() -> Criterion {
    let start = Instant::now();
    let nodes = 4096;
    let dtau = 1.0 / nodes as f64;
    let s = shifted_cosine(nodes);
    let mut checks = Vec::new();

    let p1 = ModelParams::figure1().with_epsilon(0.0);
    let what = "g1 = 1: blow-up with 0 < T* <= V_F/g0 and N(tau* - 1e-3 V_F/g0) > 1e3 N(0)";
    match fcl::evolve(&s, &p1, 1.0, dtau) {
        Ok(r) => {
            let n0 = r.trajectory.first().map(|x| x.n).unwrap_or(f64::NAN);
            match r.outcome {
                FclOutcome::Blowup {
                    t_star,
                    v_star,
                    tau_star,
                } => {
                    let offset = 1e-3 * p1.v_f / p1.g0;
                    let late = match fcl::firing_at_tau(tau_star - offset, &s, &p1) {
                        Ok(FclFiring::Rate(n)) => n,
                        _ => f64::NAN,
                    };
                    checks.push(Check::new(
                        "fcl_blowup",
                        what,
                        t_star > 0.0 && t_star <= p1.v_f / p1.g0 && late > 1e3 * n0,
                        format!("T* = {t_star:.6e}, v* = {v_star:.6}, N(0) = {n0:.4}, N near tau* = {late:.4e}"),
                    ));
                }
                FclOutcome::Periodic { .. } => {
                    checks.push(Check::new("fcl_blowup", what, false, "periodic".into()))
                }
            }
        }
        Err(e) => checks.push(Check::failed("fcl_blowup", what, e)),
    }

    let p2 = ModelParams::figure2().with_epsilon(0.0);
    let what = "g1 = 0.5: periodic, ||N(t + T) - N(t)||_inf <= 1e-6, T matches quadrature of 1/g_in over one tau-period";
    match fcl::evolve(&s, &p2, 0.2, dtau) {
        Ok(r) => {
            match r.outcome {
                FclOutcome::Periodic { period } => {
                    let t: Vec<f64> = r.trajectory.iter().map(|x| x.t).collect();
                    let n: Vec<f64> = r.trajectory.iter().map(|x| x.n).collect();
                    let t_last = *t.last().unwrap();
                    let shift = t
                        .iter()
                        .zip(&n)
                        .take_while(|(ti, _)| **ti + period <= t_last)
                        .map(|(ti, ni)| (interp(&t, &n, ti + period) - ni).abs())
                        .fold(0.0, f64::max);
                    // Independent period: Simpson on 2048 panels with the exact marginal.
                    let f = |tau: f64| {
                        let rho = 1.0 - 0.2 * (2.0 * PI * (1.0 - tau)).cos();
                        let n = solve_limit_firing(rho, &p2)
                            .ok()
                            .and_then(|l| l.rate())
                            .unwrap_or(f64::NAN);
                        1.0 / p2.g_in(n)
                    };
                    let m = 2048;
                    let h = 1.0 / m as f64;
                    let quad = (0..m)
                        .map(|i| {
                            let a = i as f64 * h;
                            h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h))
                        })
                        .sum::<f64>();
                    checks.push(Check::new(
                    "fcl_periodic",
                    what,
                    shift <= 1e-6 && (period - quad).abs() <= 1e-9 * quad,
                    format!("T = {period:.12e}, quadrature {quad:.12e}, periodicity defect {shift:.2e}"),
                ));
                }
                FclOutcome::Blowup { .. } => {
                    checks.push(Check::new("fcl_periodic", what, false, "blow-up".into()))
                }
            }
        }
        Err(e) => checks.push(Check::failed("fcl_periodic", what, e)),
    }

    let g_star = fcl::threshold_g1(&s);
    let below = fcl::evolve(&s, &p2.with_g1(g_star * (1.0 - 1e-3)), 0.2, dtau);
    let at = fcl::evolve(&s, &p2.with_g1(g_star), 0.2, dtau);
    let sharp = matches!(below.map(|r| r.outcome), Ok(FclOutcome::Periodic { .. }))
        && matches!(at.map(|r| r.outcome), Ok(FclOutcome::Blowup { .. }));
    checks.push(Check::new(
        "fcl_threshold",
        "g1* = 1/max rho_init = 1/1.2; periodic at g1*(1 - 1e-3), blow-up at g1*",
        sharp && (g_star - 1.0 / 1.2).abs() <= 1e-12,
        format!("g1* = {g_star:.15}"),
    ));
    let unshifted = FclState::from_fn(1.0, nodes, |v| 1.0 + 0.2 * (2.0 * PI * v).cos());
    checks.push(Check::new(
        "fcl_blowup_at_start",
        "marginal with rho(V_F) >= 1/g1 is rejected as blow-up at t = 0",
        fcl::evolve(&unshifted, &p1, 1.0, dtau).is_err(),
        String::new(),
    ));
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "fcl_runtime",
        "runs in under 30 s",
        elapsed < 30.0,
        format!("{elapsed:.2} s"),
    ));
    Criterion::from_checks(6, "limit-model dichotomy", start, checks)
}

fn sup_gap(series: &FiringSeries, lt: &[f64], ln: &[f64], window: (f64, f64)) -> f64 {
    series
        .points
        .iter()
        .filter(|p| p.t >= window.0 - 1e-12 && p.t <= window.1 + 1e-12)
        .map(|p| (p.n - interp(lt, ln, p.t)).abs())
        .fold(0.0, f64::max)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

pub fn eps_limit(grid_n: usize, audit: &mut GridAudit) -> Criterion {
    let start = Instant::now();
    let eps_list = [0.5, 0.1, 0.02];
    let mut checks = Vec::new();
    let p2 = ModelParams::figure2();
    let limit = fcl::evolve(
        &shifted_cosine(4096),
        &p2.with_epsilon(0.0),
        3.0,
        1.0 / 4096.0,
    );
    let Some(init) = figure_init(&p2, -0.2) else {
        checks.push(Check::new(
            "eps_limit_init",
            "limit rate at t = 0 exists",
            false,
            String::new(),
        ));
        return Criterion::from_checks(7, "fast-conductance limit", start, checks);
    };
    match limit {
        Ok(l) => {
            let lt: Vec<f64> = l.trajectory.iter().map(|x| x.t).collect();
            let ln: Vec<f64> = l.trajectory.iter().map(|x| x.n).collect();
            let what = "sup over t in [0.5, 3] of |N^eps - N^0| strictly decreases over eps = 0.5, 0.1, 0.02";
            let mut gaps = Vec::new();
            let mut failed = None;
            for &eps in &eps_list {
                let cfg = ModeRunConfig {
                    t_end: 3.0,
                    dt: 1e-3,
                    k_max: 1,
                    ..Default::default()
                };
                match modes::run(&init, &p2.with_epsilon(eps), &cfg) {
                    Ok(r) => gaps.push(sup_gap(&r.series, &lt, &ln, (0.5, 3.0))),
                    Err(e) => failed = Some(e),
                }
            }
            checks.push(match failed {
                Some(e) => Check::failed("eps_limit_periodic_modes", what, e),
                None => Check::new(
                    "eps_limit_periodic_modes",
                    what,
                    strictly_decreasing(&gaps),
                    format!("mode solver gaps {gaps:.6?}"),
                ),
            });
            if grid_n > 0 {
                let spec = GridSpec::aligned(grid_n, grid_n, -10.0, 50.0);
                let cfg = GridRunConfig {
                    t_end: 3.0,
                    dt_max: 1.0,
                    output_dt: 1e-3,
                    snapshot_times: vec![],
                    options: StepOptions::default(),
                };
                match grid::run_eps_sweep(&init, &p2, spec, &eps_list, &cfg) {
                    Ok(runs) => {
                        let gaps: Vec<f64> = runs
                            .iter()
                            .map(|(_, r)| sup_gap(&r.series, &lt, &ln, (0.5, 3.0)))
                            .collect();
                        for (eps, r) in &runs {
                            audit
                                .runs
                                .push((format!("eps_sweep_{grid_n}_eps_{eps}"), r.diagnostics));
                        }
                        checks.push(Check::new(
                            "eps_limit_periodic_grid",
                            what,
                            strictly_decreasing(&gaps),
                            format!("grid {grid_n}x{grid_n} gaps {gaps:.6?}"),
                        ));
                    }
                    Err(e) => checks.push(Check::failed("eps_limit_periodic_grid", what, e)),
                }
            }
        }
        Err(e) => checks.push(Check::failed("eps_limit_reference", "limit model run", e)),
    }

    let p1 = ModelParams::figure1();
    let what = "max over t in [0, 3] of N^eps increases as eps decreases (0.5, 0.1, 0.02)";
    match figure_init(&p1, -0.2) {
        Some(init) => {
            let mut maxima = Vec::new();
            let mut failed = None;
            for &eps in &eps_list {
                let cfg = ModeRunConfig {
                    t_end: 3.0,
                    dt: 1e-3,
                    k_max: 1,
                    ..Default::default()
                };
                match modes::run(&init, &p1.with_epsilon(eps), &cfg) {
                    Ok(r) => maxima.push(r.series.points.iter().map(|p| p.n).fold(0.0, f64::max)),
                    Err(e) => failed = Some(e),
                }
            }
            checks.push(match failed {
                Some(e) => Check::failed("eps_limit_blowup_modes", what, e),
                None => Check::new(
                    "eps_limit_blowup_modes",
                    what,
                    maxima.windows(2).all(|w| w[1] > w[0]),
                    format!("maxima {maxima:.4?}"),
                ),
            });
        }
        None => checks.push(Check::new(
            "eps_limit_blowup_modes",
            what,
            false,
            "no initial rate".into(),
        )),
    }
    Criterion::from_checks(7, "fast-conductance limit", start, checks)
}

pub fn conservation(audit: &GridAudit) -> Criterion {
    let start = Instant::now();
    let mut checks = Vec::new();
    for (name, d) in &audit.runs {
        checks.push(Check::new(
            &format!("conservation_{name}"),
            "mass drift <= 1e-10 per unit time and min density >= -1e-14",
            d.mass_drift_rate <= 1e-10 && d.min_density >= -1e-14,
            format!(
                "drift {:.3e}/time, min density {:.3e}, leakage {:.2e}",
                d.mass_drift_rate, d.min_density, d.max_leakage
            ),
        ));
    }
    if checks.is_empty() {
        checks.push(Check::new(
            "conservation",
            "at least one audited grid run",
            false,
            "no grid runs".into(),
        ));
    }
    Criterion::from_checks(8, "grid conservation and positivity", start, checks)
}
