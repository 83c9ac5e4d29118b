use itrpower_core::{
    flexible_power, CheckEvery, Error, IterationRecord, ModelSpec, RunConfig, Termination, Variant,
};

fn ising(rank: usize) -> RunConfig {
    RunConfig::new(ModelSpec::Ising { g: 2.0 }, rank)
}

fn fixed_t(mut c: RunConfig, t: f64, iters: usize) -> RunConfig {
    c.t_init = t;
    c.t_min = t;
    c.max_iters = iters;
    c.stop_on_stagnation = false;
    c
}

fn strip_clock(h: &[IterationRecord]) -> Vec<IterationRecord> {
    h.iter()
        .map(|r| IterationRecord {
            wallclock_s: 0.0,
            ..r.clone()
        })
        .collect()
}

#[test]
fn identical_seeds_give_identical_histories() {
    let mut c = ising(6);
    c.t_min = 1e-3;
    c.max_iters = 3000;
    let a = flexible_power(&c, None).unwrap();
    let b = flexible_power(&c, None).unwrap();
    assert_eq!(strip_clock(&a.history), strip_clock(&b.history));
    c.seed += 1;
    let other = flexible_power(&c, None).unwrap();
    assert_ne!(strip_clock(&a.history), strip_clock(&other.history));
}

#[test]
fn theta_decreases_at_fixed_timestep() {
    for variant in [Variant::Canonical, Variant::Fast] {
        let mut c = fixed_t(ising(10), 0.01, 100);
        c.variant = variant;
        c.check_every = CheckEvery::Fixed(1);
        let out = flexible_power(&c, None).unwrap();
        let thetas: Vec<f64> = out.history.iter().map(|r| r.theta).collect();
        for w in thetas[9..].windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "{variant:?}: {} after {}", w[1], w[0]);
        }
    }
}

#[test]
fn timestep_only_shrinks_by_the_factor() {
    let mut c = ising(6);
    c.t_min = 1e-4;
    let out = flexible_power(&c, None).unwrap();
    assert_eq!(out.termination, Termination::Stagnation);
    for w in out.history.windows(2) {
        assert!(w[1].t == w[0].t || (w[0].t / w[1].t - c.t_shrink).abs() < 1e-9);
        assert!(w[1].total_time >= w[0].total_time);
    }
    let ts: Vec<f64> = out.schedule.iter().map(|e| e.t).collect();
    assert_eq!(ts.len(), 4);
    assert!((ts[3] - 1e-4).abs() < 1e-16);
    let total: usize = out.schedule.iter().map(|e| e.iters).sum();
    assert_eq!(total, out.last().unwrap().iter);
}

#[test]
fn stagnation_happens_at_similar_total_time() {
    let stall = |t: f64| {
        let mut c = ising(10);
        c.t_init = t;
        c.t_min = t;
        let out = flexible_power(&c, None).unwrap();
        assert_eq!(out.termination, Termination::Stagnation);
        out.last().unwrap().total_time
    };
    let (a, b) = (stall(1e-2), stall(1e-3));
    assert!(
        a.max(b) / a.min(b) <= 3.0,
        "T = {a} at t = 1e-2, {b} at t = 1e-3"
    );
}

#[test]
fn total_time_limit_stops_the_run() {
    let mut c = fixed_t(ising(4), 0.01, 1_000_000);
    c.max_total_time = Some(0.5);
    let out = flexible_power(&c, None).unwrap();
    assert_eq!(out.termination, Termination::MaxTotalTime);
    let last = out.last().unwrap();
    assert_eq!(last.iter, 50);
    assert!((last.total_time - 0.5).abs() < 1e-12);
}

#[test]
fn iteration_limit_forces_a_final_check() {
    let mut c = fixed_t(ising(4), 0.01, 37);
    c.check_every = CheckEvery::Fixed(10);
    let out = flexible_power(&c, None).unwrap();
    assert_eq!(out.termination, Termination::MaxIters);
    let iters: Vec<usize> = out.history.iter().map(|r| r.iter).collect();
    assert_eq!(iters, vec![10, 20, 30, 37]);
    assert_eq!(out.schedule.len(), 1);
    assert_eq!(out.schedule[0].iters, 37);
}

#[test]
fn records_carry_the_exact_error() {
    let c = fixed_t(ising(4), 0.05, 40);
    let out = flexible_power(&c, None).unwrap();
    let lambda = itrpower_core::exact_eigenvalue(&c.model).unwrap();
    for r in &out.history {
        assert_eq!(r.err, Some((lambda - r.theta).abs()));
        assert!((r.theta - 0.5 * (r.theta1 + r.theta2)).abs() < 1e-12);
    }
    let heis = fixed_t(
        RunConfig::new(ModelSpec::HeisenbergS1 { delta: 0.5 }, 3),
        0.05,
        20,
    );
    let out = flexible_power(&heis, None).unwrap();
    assert!(out.history.iter().all(|r| r.err.is_none()));
}

#[test]
fn theta_hat_is_reported_on_request() {
    let mut c = fixed_t(RunConfig::new(ModelSpec::HeisenbergHalf, 4), 0.05, 40);
    c.theta_hat = true;
    let out = flexible_power(&c, None).unwrap();
    assert!(out
        .history
        .iter()
        .all(|r| r.theta_hat.is_some_and(f64::is_finite)));
}

#[test]
fn supplied_state_is_used() {
    let c = fixed_t(ising(4), 0.05, 20);
    let init = itrpower_core::Itr2State::random(4, 2, 77).unwrap();
    let a = flexible_power(&c, Some(init.clone())).unwrap();
    let mut c2 = c.clone();
    c2.seed = 77;
    let b = flexible_power(&c2, None).unwrap();
    assert_eq!(strip_clock(&a.history), strip_clock(&b.history));
}

#[test]
fn failures_carry_the_iteration() {
    // a state of the wrong physical dimension cannot be evolved
    let c = fixed_t(ising(4), 0.05, 20);
    let init = itrpower_core::Itr2State::random(4, 3, 1).unwrap();
    let err = flexible_power(&c, Some(init)).unwrap_err();
    assert!(matches!(err, Error::AtIteration { iter: 1, .. }), "{err}");
    assert!(matches!(err.root(), Error::Shape(_)));
}
