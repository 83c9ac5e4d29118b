//! The flexible power iteration: alternating Trotter half-steps with a
//! timestep that shrinks whenever the residual stops improving.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{trotter_half_step_with, GateCache, Parity, Variant};
use crate::itr2::{
    projected_avg_eigenvalue, rayleigh_quotient, residual_with, Itr2State, ResidualConfig,
};
use crate::models::{build_gate, exact_eigenvalue, ModelSpec};

/// Iterations between residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckEvery {
    /// `⌈1/t⌉`, clamped to `[10, 100000]`.
    Auto,
    Fixed(usize),
}

impl CheckEvery {
    pub fn interval(self, t: f64) -> usize {
        match self {
            CheckEvery::Fixed(n) => n.max(1),
            CheckEvery::Auto => ((1.0 / t).ceil() as usize).clamp(10, 100_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub rank: usize,
    pub t_init: f64,
    pub t_min: f64,
    pub t_shrink: f64,
    pub variant: Variant,
    pub check_every: CheckEvery,
    /// Number of consecutive checks compared by the stagnation test.
    pub stagnation_window: usize,
    pub max_iters: usize,
    /// Stop once the accumulated time `Σ t` reaches this value.
    pub max_total_time: Option<f64>,
    /// Stop when stagnation is detected at `t ≤ t_min`. When false the run
    /// continues at `t_min` until another limit is hit.
    pub stop_on_stagnation: bool,
    pub seed: u64,
    pub eig_tol: f64,
    pub solve_tol: f64,
    /// Evaluate the projected averaged eigenvalue at every check.
    pub theta_hat: bool,
    pub threads: usize,
}

impl RunConfig {
    pub fn new(model: ModelSpec, rank: usize) -> Self {
        Self {
            model,
            rank,
            t_init: 1e-1,
            t_min: 1e-5,
            t_shrink: 10.0,
            variant: Variant::Fast,
            check_every: CheckEvery::Auto,
            stagnation_window: 3,
            max_iters: 10_000_000,
            max_total_time: None,
            stop_on_stagnation: true,
            seed: DEFAULT_SEED,
            eig_tol: 1e-12,
            solve_tol: 1e-8,
            theta_hat: false,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.rank == 0 {
            return bad("rank must be positive".into());
        }
        if !(self.t_min > 0.0 && self.t_init >= self.t_min && self.t_init.is_finite()) {
            return bad(format!(
                "need t_init ≥ t_min > 0, got t_init = {}, t_min = {}",
                self.t_init, self.t_min
            ));
        }
        if !(self.t_shrink > 1.0 && self.t_shrink.is_finite()) {
            return bad(format!("t_shrink = {} must exceed 1", self.t_shrink));
        }
        if self.stagnation_window < 2 {
            return bad("stagnation window must be at least 2".into());
        }
        if let CheckEvery::Fixed(0) = self.check_every {
            return bad("check interval must be positive".into());
        }
        if !(self.eig_tol > 0.0 && self.solve_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }
}

/// Diagnostics recorded at one residual check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub t: f64,
    pub total_time: f64,
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub res_norm: f64,
    /// `|λ₀ − θ|` when the exact value is known.
    pub err: Option<f64>,
    pub sigma_min: f64,
    pub omega_min: f64,
    pub wallclock_s: f64,
    pub theta_hat: Option<f64>,
}

/// Iterations and wall-clock time spent at one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub t: f64,
    pub iters: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Stagnation,
    MaxIters,
    MaxTotalTime,
    RankDeficient,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: Itr2State,
    pub history: Vec<IterationRecord>,
    pub schedule: Vec<ScheduleEntry>,
    pub termination: Termination,
}

impl RunOutcome {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.history.last()
    }
}

/// Leading three significant decimal digits and the decimal exponent.
fn leading_digits(x: f64) -> (i32, u32) {
    if x == 0.0 || !x.is_finite() {
        return (i32::MIN, 0);
    }
    let s = format!("{:e}", x.abs());
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let digits: String = mant
        .chars()
        .filter(|c| c.is_ascii_digit())
        .chain("000".chars())
        .take(3)
        .collect();
    (
        exp.parse().expect("integer exponent"),
        digits.parse().expect("digits"),
    )
}

/// True when the leading three significant digits of the last `window`
/// values coincide, or when the last value exceeds its predecessor.
pub fn detect_stagnation(history: &[f64], window: usize) -> bool {
    let n = history.len();
    if n >= 2 && history[n - 1] > history[n - 2] {
        return true;
    }
    if window < 2 || n < window {
        return false;
    }
    let tail = &history[n - window..];
    let first = leading_digits(tail[0]);
    tail.iter().all(|&x| leading_digits(x) == first)
}

const SIGMA_FLOOR: f64 = 1e-12;

/// Seed used when none is given. Some random starting points at moderate
/// rank are drawn into a non-injective fixed point whose Schmidt values
/// come in exact pairs; this one is not, for every built-in model.
pub const DEFAULT_SEED: u64 = 2;

/// Runs the flexible power method from `init`, or from a seeded random
/// canonical state when `init` is `None`.
pub fn flexible_power(config: &RunConfig, init: Option<Itr2State>) -> Result<RunOutcome> {
    flexible_power_observed(config, init, |_| {})
}

/// [`flexible_power`] that also hands every record to `observer` as soon as
/// it is computed.
pub fn flexible_power_observed(
    config: &RunConfig,
    init: Option<Itr2State>,
    mut observer: impl FnMut(&IterationRecord),
) -> Result<RunOutcome> {
    config.validate()?;
    let m = build_gate(&config.model)?;
    let exact = exact_eigenvalue(&config.model);
    let mut state = match init {
        Some(s) => s,
        None => Itr2State::random(config.rank, config.model.d(), config.seed)?,
    };
    let mut cache = GateCache::new(m.clone());
    let res_cfg = ResidualConfig {
        solve_tol: config.solve_tol,
        threads: config.threads.max(1),
    };

    let start = Instant::now();
    let mut t = config.t_init;
    let mut interval = config.check_every.interval(t);
    let mut since_change = 0usize;
    let mut segment_start = 0.0f64;
    let mut window: Vec<f64> = Vec::new();
    let mut low_sigma = 0usize;
    let mut iter = 0usize;
    let mut total_time = 0.0;
    let mut history = Vec::new();
    let mut schedule = Vec::new();

    let termination = loop {
        if iter >= config.max_iters {
            break Termination::MaxIters;
        }
        if config
            .max_total_time
            .is_some_and(|tm| total_time >= tm * (1.0 - 1e-12))
        {
            break Termination::MaxTotalTime;
        }
        let at = move |e: Error| Error::AtIteration {
            iter: iter + 1,
            source: Box::new(e),
        };
        let gate = cache.get(t).map_err(at)?;
        for parity in [Parity::Odd, Parity::Even] {
            state = trotter_half_step_with(
                &state,
                gate,
                parity,
                config.variant,
                config.rank,
                config.eig_tol,
            )
            .map_err(at)?
            .0;
        }
        iter += 1;
        since_change += 1;
        total_time += t;

        let time_up = config
            .max_total_time
            .is_some_and(|tm| total_time >= tm * (1.0 - 1e-12));
        if !since_change.is_multiple_of(interval) && iter < config.max_iters && !time_up {
            continue;
        }
        let (theta, _, _) = rayleigh_quotient(&state, &m).map_err(at)?;
        let rep = residual_with(&state, &m, theta, &res_cfg).map_err(at)?;
        let theta_hat = if config.theta_hat {
            Some(projected_avg_eigenvalue(&state, &m, theta).map_err(at)?)
        } else {
            None
        };
        let wallclock_s = start.elapsed().as_secs_f64();
        let rec = IterationRecord {
            iter,
            t,
            total_time,
            theta,
            theta1: rep.theta1,
            theta2: rep.theta2,
            res_norm: rep.res_norm,
            err: exact.map(|l| (l - theta).abs()),
            sigma_min: rep.sigma_min,
            omega_min: rep.omega_min,
            wallclock_s,
            theta_hat,
        };
        log::info!(
            "iter {iter} t {t:.1e} T {total_time:.4} theta {theta:.15} res {:.3e} sigma_min {:.2e}",
            rec.res_norm,
            rec.sigma_min.min(rec.omega_min)
        );
        observer(&rec);
        history.push(rec);
        window.push(rep.res_norm);

        if rep.sigma_min.min(rep.omega_min) < SIGMA_FLOOR {
            low_sigma += 1;
            if low_sigma >= config.stagnation_window {
                schedule.push(ScheduleEntry {
                    t,
                    iters: since_change,
                    seconds: wallclock_s - segment_start,
                });
                break Termination::RankDeficient;
            }
        } else {
            low_sigma = 0;
        }

        if detect_stagnation(&window, config.stagnation_window) {
            if t <= config.t_min * (1.0 + 1e-12) {
                if config.stop_on_stagnation {
                    schedule.push(ScheduleEntry {
                        t,
                        iters: since_change,
                        seconds: wallclock_s - segment_start,
                    });
                    break Termination::Stagnation;
                }
            } else {
                schedule.push(ScheduleEntry {
                    t,
                    iters: since_change,
                    seconds: wallclock_s - segment_start,
                });
                t /= config.t_shrink;
                interval = config.check_every.interval(t);
                since_change = 0;
                segment_start = wallclock_s;
                window.clear();
            }
        }
    };
    if matches!(
        termination,
        Termination::MaxIters | Termination::MaxTotalTime
    ) && since_change > 0
    {
        schedule.push(ScheduleEntry {
            t,
            iters: since_change,
            seconds: start.elapsed().as_secs_f64() - segment_start,
        });
    }
    Ok(RunOutcome {
        state,
        history,
        schedule,
        termination,
    })
}
