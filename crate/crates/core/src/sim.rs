//! Fixed-step simulation of the event-triggered NES loop and of its average
//! system.
//!
//! Triggering is evaluated once per step per player on the integration grid,
//! so event times are grid points. In the original loop the input is held
//! constant between events and `dθ̂/dt = u` is advanced exactly. The average
//! loop `dθ̃_av/dt = KHθ̃_av + K e_av` is advanced with classical RK4.

use crate::dither::DitherConfig;
use crate::error::{Error, Result};
use crate::game::{nash_equilibrium, pseudo_gradient_matrix, QuadraticGame};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::trigger::{measure, should_trigger, PlayerState, TriggerConfig};

/// Runs abort once `|θ̂_i| > DIVERGENCE_FACTOR · (1 + |θ*_i|)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Original,
    Average,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::Original => "original",
            SimMode::Average => "average",
        }
    }
}

impl std::str::FromStr for SimMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(SimMode::Original),
            "average" => Ok(SimMode::Average),
            other => Err(Error::config("sim.mode", format!("expected \"original\" or \"average\", got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub horizon: T,
    pub theta_hat_0: Vec<T>,
    pub mode: SimMode,
    /// Record every `decimate`-th step (1 = every step).
    pub decimate: usize,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(dt: T, horizon: T, theta_hat_0: Vec<T>, mode: SimMode) -> Result<Self> {
        let cfg = Self { dt, horizon, theta_hat_0, mode, decimate: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_decimation(mut self, decimate: usize) -> Result<Self> {
        self.decimate = decimate;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::config("sim.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(Error::config("sim.horizon", format!("must be at least dt = {}, got {}", self.dt, self.horizon)));
        }
        if self.decimate == 0 {
            return Err(Error::config("sim.decimate", "must be at least 1"));
        }
        if let Some(i) = self.theta_hat_0.iter().position(|x| !x.is_finite()) {
            return Err(Error::config(format!("sim.theta_hat_0[{i}]"), "must be finite"));
        }
        Ok(())
    }

    /// Number of integration steps; the grid is `k·dt` for `k = 0..=steps`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().to_usize().unwrap_or(0)
    }
}

/// Row-major table of fixed-width samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series<T> {
    width: usize,
    data: Vec<T>,
}

impl<T: Copy> Series<T> {
    pub fn new(width: usize) -> Self {
        Self { width, data: Vec::new() }
    }

    pub fn with_capacity(width: usize, rows: usize) -> Self {
        Self { width, data: Vec::with_capacity(width * rows) }
    }

    pub fn push(&mut self, row: &[T]) {
        assert_eq!(row.len(), self.width, "series row width");
        self.data.extend_from_slice(row);
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn last(&self) -> Option<&[T]> {
        self.len().checked_sub(1).map(|k| self.row(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace<T> {
    pub mode: SimMode,
    pub dt: T,
    /// Grid step index of every recorded sample.
    pub steps: Vec<usize>,
    pub times: Vec<T>,
    /// Applied actions `θ = θ̂ + S` (equal to `θ̂` in average mode).
    pub theta: Series<T>,
    pub theta_hat: Series<T>,
    /// Pseudo-gradient estimate `Ĝ` (or `Ĝ_av = Hθ̃_av`).
    pub g_est: Series<T>,
    /// Broadcast value held after this sample's trigger decisions.
    pub broadcast: Series<T>,
    pub u: Series<T>,
    pub payoffs: Series<T>,
    /// 1 where the player fired at this sample or at any unrecorded step
    /// since the previous recorded sample.
    pub event_flags: Series<u8>,
    /// Full per-player event time lists, each starting at 0.
    pub events: Vec<Vec<T>>,
}

impl<T: Scalar> SimTrace<T> {
    fn new(mode: SimMode, dt: T, n: usize, capacity: usize) -> Self {
        Self {
            mode,
            dt,
            steps: Vec::with_capacity(capacity),
            times: Vec::with_capacity(capacity),
            theta: Series::with_capacity(n, capacity),
            theta_hat: Series::with_capacity(n, capacity),
            g_est: Series::with_capacity(n, capacity),
            broadcast: Series::with_capacity(n, capacity),
            u: Series::with_capacity(n, capacity),
            payoffs: Series::with_capacity(n, capacity),
            event_flags: Series::with_capacity(n, capacity),
            events: vec![vec![T::zero()]; n],
        }
    }

    pub fn players(&self) -> usize {
        self.events.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }

    pub fn event_counts(&self) -> Vec<usize> {
        self.events.iter().map(Vec::len).collect()
    }

    /// Union of all players' event times, sorted and deduplicated.
    pub fn merged_event_times(&self) -> Vec<T> {
        let mut all: Vec<T> = self.events.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        all.dedup();
        all
    }
}

struct Recorder<T> {
    trace: SimTrace<T>,
    decimate: usize,
    pending: Vec<u8>,
}

struct Sample<'a, T> {
    step: usize,
    t: T,
    theta: &'a [T],
    theta_hat: &'a [T],
    g: &'a [T],
    broadcast: &'a [T],
    u: &'a [T],
    payoffs: &'a [T],
    fired: &'a [bool],
}

impl<T: Scalar> Recorder<T> {
    fn new(mode: SimMode, dt: T, n: usize, steps: usize, decimate: usize) -> Self {
        Self { trace: SimTrace::new(mode, dt, n, steps / decimate + 1), decimate, pending: vec![0; n] }
    }

    fn record(&mut self, s: Sample<'_, T>) {
        for (i, &f) in s.fired.iter().enumerate() {
            if f {
                self.trace.events[i].push(s.t);
                self.pending[i] = 1;
            }
        }
        if !s.step.is_multiple_of(self.decimate) {
            return;
        }
        let tr = &mut self.trace;
        tr.steps.push(s.step);
        tr.times.push(s.t);
        tr.theta.push(s.theta);
        tr.theta_hat.push(s.theta_hat);
        tr.g_est.push(s.g);
        tr.broadcast.push(s.broadcast);
        tr.u.push(s.u);
        tr.payoffs.push(s.payoffs);
        tr.event_flags.push(&self.pending);
        self.pending.iter_mut().for_each(|p| *p = 0);
    }
}

fn check_players<T: Scalar>(
    game: &QuadraticGame<T>,
    dither: Option<&DitherConfig<T>>,
    trigger: &TriggerConfig<T>,
    sim: &SimConfig<T>,
) -> Result<usize> {
    let n = game.players();
    let mismatch = |what: &str, got: usize| Error::Dimension(format!("game has {n} players but {what} has {got}"));
    if let Some(d) = dither {
        if d.players() != n {
            return Err(mismatch("dither config", d.players()));
        }
    }
    if trigger.players() != n {
        return Err(mismatch("trigger config", trigger.players()));
    }
    if sim.theta_hat_0.len() != n {
        return Err(mismatch("theta_hat_0", sim.theta_hat_0.len()));
    }
    sim.validate()?;
    Ok(n)
}

fn divergence_check<T: Scalar>(theta_hat: &[T], theta_star: &[T], step: usize, t: T) -> Option<Error> {
    let factor = T::lit(DIVERGENCE_FACTOR);
    theta_hat.iter().zip(theta_star).enumerate().find_map(|(i, (&x, &star))| {
        (!x.is_finite() || x.abs() > factor * (T::one() + star.abs())).then(|| Error::Divergence {
            step,
            t: t.to_f64_lossy(),
            detail: format!("estimate of player {} reached {x}", i + 1),
        })
    })
}

/// Full closed loop. Fails on the first divergent step; use
/// [`simulate_partial`] to keep the samples recorded before that.
pub fn simulate<T: Scalar>(
    game: &QuadraticGame<T>,
    dither: &DitherConfig<T>,
    trigger: &TriggerConfig<T>,
    sim: &SimConfig<T>,
) -> Result<SimTrace<T>> {
    match simulate_partial(game, dither, trigger, sim)? {
        (trace, None) => Ok(trace),
        (_, Some(err)) => Err(err),
    }
}

/// Like [`simulate`], but a divergence is returned next to the trace recorded
/// up to the failing step.
pub fn simulate_partial<T: Scalar>(
    game: &QuadraticGame<T>,
    dither: &DitherConfig<T>,
    trigger: &TriggerConfig<T>,
    sim: &SimConfig<T>,
) -> Result<(SimTrace<T>, Option<Error>)> {
    let n = check_players(game, Some(dither), trigger, sim)?;
    if sim.mode == SimMode::Average {
        return simulate_average_partial(game, trigger, sim);
    }
    let theta_star = nash_equilibrium(&pseudo_gradient_matrix(game))?;
    let steps = sim.steps();
    let dt = sim.dt;
    let mut rec = Recorder::new(SimMode::Original, dt, n, steps, sim.decimate);

    let m0 = measure(game, dither, &sim.theta_hat_0, T::zero());
    let mut players: Vec<PlayerState<T>> =
        sim.theta_hat_0.iter().zip(&m0.estimate).map(|(&th, &g)| PlayerState::new(th, g)).collect();
    let mut theta_hat = sim.theta_hat_0.clone();
    let mut fired = vec![false; n];
    let mut u = vec![T::zero(); n];
    let mut broadcast = vec![T::zero(); n];

    for k in 0..=steps {
        let t = T::from_count(k) * dt;
        let m = if k == 0 { m0.clone() } else { measure(game, dither, &theta_hat, t) };
        for i in 0..n {
            fired[i] = false;
            if k > 0 {
                let p = &mut players[i];
                let e = p.error(m.estimate[i]);
                if should_trigger(trigger.sigma(i), m.estimate[i], e) {
                    p.apply_event(t, m.estimate[i])?;
                    fired[i] = true;
                }
            }
            u[i] = players[i].input(trigger.gain(i));
            broadcast[i] = players[i].g_broadcast;
        }
        rec.record(Sample {
            step: k,
            t,
            theta: &m.theta,
            theta_hat: &theta_hat,
            g: &m.estimate,
            broadcast: &broadcast,
            u: &u,
            payoffs: &m.payoffs,
            fired: &fired,
        });
        if k == steps {
            break;
        }
        for i in 0..n {
            theta_hat[i] = theta_hat[i] + u[i] * dt;
            players[i].theta_hat = theta_hat[i];
        }
        if let Some(err) = divergence_check(&theta_hat, &theta_star, k + 1, T::from_count(k + 1) * dt) {
            return Ok((rec.trace, Some(err)));
        }
    }
    Ok((rec.trace, None))
}

/// Average closed loop with the average static triggering rule applied
/// componentwise to `Ĝ_av = Hθ̃_av`.
pub fn simulate_average<T: Scalar>(
    game: &QuadraticGame<T>,
    trigger: &TriggerConfig<T>,
    sim: &SimConfig<T>,
) -> Result<SimTrace<T>> {
    match simulate_average_partial(game, trigger, sim)? {
        (trace, None) => Ok(trace),
        (_, Some(err)) => Err(err),
    }
}

pub fn simulate_average_partial<T: Scalar>(
    game: &QuadraticGame<T>,
    trigger: &TriggerConfig<T>,
    sim: &SimConfig<T>,
) -> Result<(SimTrace<T>, Option<Error>)> {
    let n = check_players(game, None, trigger, sim)?;
    let pg = pseudo_gradient_matrix(game);
    let theta_star = nash_equilibrium(&pg)?;
    let h = &pg.matrix;
    let gains = trigger.gains();
    let steps = sim.steps();
    let dt = sim.dt;
    let mut rec = Recorder::new(SimMode::Average, dt, n, steps, sim.decimate);

    let mut err: Vec<T> = sim.theta_hat_0.iter().zip(&theta_star).map(|(&a, &b)| a - b).collect();
    let g0 = h.mul_vec(&err);
    let mut players: Vec<PlayerState<T>> =
        sim.theta_hat_0.iter().zip(&g0).map(|(&th, &g)| PlayerState::new(th, g)).collect();
    let mut fired = vec![false; n];
    let mut u = vec![T::zero(); n];
    let mut broadcast = vec![T::zero(); n];

    for k in 0..=steps {
        let t = T::from_count(k) * dt;
        let g = h.mul_vec(&err);
        for i in 0..n {
            fired[i] = false;
            if k > 0 {
                let p = &mut players[i];
                let e = p.error(g[i]);
                if should_trigger(trigger.sigma(i), g[i], e) {
                    p.apply_event(t, g[i])?;
                    fired[i] = true;
                }
            }
            u[i] = players[i].input(gains[i]);
            broadcast[i] = players[i].g_broadcast;
        }
        let theta: Vec<T> = err.iter().zip(&theta_star).map(|(&e, &s)| e + s).collect();
        let payoffs = game.payoffs(&theta);
        rec.record(Sample {
            step: k,
            t,
            theta: &theta,
            theta_hat: &theta,
            g: &g,
            broadcast: &broadcast,
            u: &u,
            payoffs: &payoffs,
            fired: &fired,
        });
        if k == steps {
            break;
        }
        // dθ̃/dt = KHθ̃ + K(Ĝ_held − Hθ̃)
        let rhs = |x: &[T]| -> Vec<T> {
            let hx = h.mul_vec(x);
            (0..n).map(|i| gains[i] * hx[i] + gains[i] * (broadcast[i] - hx[i])).collect()
        };
        err = rk4_step(rhs, &err, dt);
        for (p, (&e, &s)) in players.iter_mut().zip(err.iter().zip(&theta_star)) {
            p.theta_hat = e + s;
        }
        let theta_hat: Vec<T> = players.iter().map(|p| p.theta_hat).collect();
        if let Some(e) = divergence_check(&theta_hat, &theta_star, k + 1, T::from_count(k + 1) * dt) {
            return Ok((rec.trace, Some(e)));
        }
    }
    Ok((rec.trace, None))
}

/// One classical fourth-order Runge–Kutta step of `dx/dt = f(x)`.
pub fn rk4_step<T: Scalar>(f: impl Fn(&[T]) -> Vec<T>, x: &[T], dt: T) -> Vec<T> {
    let half = T::lit(0.5);
    let axpy = |a: T, k: &[T]| -> Vec<T> { x.iter().zip(k).map(|(&xi, &ki)| xi + a * ki).collect() };
    let k1 = f(x);
    let k2 = f(&axpy(half * dt, &k1));
    let k3 = f(&axpy(half * dt, &k2));
    let k4 = f(&axpy(dt, &k3));
    let sixth = dt / T::lit(6.0);
    (0..x.len()).map(|i| x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i])).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStats<T> {
    /// Number of events including the initial one at t = 0.
    pub count: usize,
    pub min_gap: Option<T>,
    pub max_gap: Option<T>,
    pub mean_gap: Option<T>,
}

pub fn inter_event_stats<T: Scalar>(trace: &SimTrace<T>) -> Vec<EventStats<T>> {
    trace
        .events
        .iter()
        .map(|times| {
            let gaps: Vec<T> = times.windows(2).map(|w| w[1] - w[0]).collect();
            let (min_gap, max_gap, mean_gap) = if gaps.is_empty() {
                (None, None, None)
            } else {
                let min = gaps.iter().copied().fold(T::infinity(), T::min);
                let max = gaps.iter().copied().fold(T::neg_infinity(), T::max);
                let sum = gaps.iter().copied().fold(T::zero(), |s, g| s + g);
                (Some(min), Some(max), Some(sum / T::from_count(gaps.len())))
            };
            EventStats { count: times.len(), min_gap, max_gap, mean_gap }
        })
        .collect()
}

/// Sampled check of the triggering rule along a trace recorded without
/// decimation.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerSoundness<T> {
    /// Events whose pre-event slack `σ_i|Ĝ_i| − |e_i|` was not negative.
    pub unjustified_events: usize,
    /// Non-event samples whose slack fell below `−ε_step`.
    pub slack_violations: usize,
    /// Per-player `ε_step = max_k |Ĝ_i(t_{k+1}) − Ĝ_i(t_k)|`.
    pub eps_step: Vec<T>,
    /// Per-player minimum slack over non-event samples.
    pub min_slack: Vec<T>,
    pub checked_events: usize,
}

pub fn trigger_soundness<T: Scalar>(trace: &SimTrace<T>, sigmas: &[T]) -> Result<TriggerSoundness<T>> {
    if trace.steps.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::TraceTooShort("trigger soundness needs an undecimated trace".into()));
    }
    let n = trace.players();
    let len = trace.len();
    let mut eps_step = vec![T::zero(); n];
    for k in 1..len {
        for (i, eps) in eps_step.iter_mut().enumerate() {
            *eps = eps.max((trace.g_est.row(k)[i] - trace.g_est.row(k - 1)[i]).abs());
        }
    }
    let mut unjustified = 0;
    let mut violations = 0;
    let mut checked = 0;
    let mut min_slack = vec![T::infinity(); n];
    for k in 1..len {
        let g = trace.g_est.row(k);
        let held_before = trace.broadcast.row(k - 1);
        let held_after = trace.broadcast.row(k);
        let flags = trace.event_flags.row(k);
        for i in 0..n {
            if flags[i] == 1 {
                checked += 1;
                let slack = sigmas[i] * g[i].abs() - (held_before[i] - g[i]).abs();
                if !(slack < T::zero()) {
                    unjustified += 1;
                }
            } else {
                let slack = sigmas[i] * g[i].abs() - (held_after[i] - g[i]).abs();
                min_slack[i] = min_slack[i].min(slack);
                if slack < -eps_step[i] {
                    violations += 1;
                }
            }
        }
    }
    Ok(TriggerSoundness { unjustified_events: unjustified, slack_violations: violations, eps_step, min_slack, checked_events: checked })
}

/// Sup-norm gap between the estimate trajectories of two traces on the same
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceComparison<T> {
    pub times: Vec<T>,
    pub gaps: Vec<T>,
    pub max_gap: T,
    pub time_of_max: T,
}

pub fn compare_traces<T: Scalar>(a: &SimTrace<T>, b: &SimTrace<T>) -> Result<TraceComparison<T>> {
    compare_series(&a.times, &a.theta_hat, &b.times, &b.theta_hat)
}

pub fn compare_series<T: Scalar>(ta: &[T], a: &Series<T>, tb: &[T], b: &Series<T>) -> Result<TraceComparison<T>> {
    if ta.len() != tb.len() {
        return Err(Error::GridMismatch(format!("{} samples vs {} samples", ta.len(), tb.len())));
    }
    if a.width() != b.width() {
        return Err(Error::GridMismatch(format!("{} players vs {} players", a.width(), b.width())));
    }
    let tol = T::lit(1e-9);
    if let Some(k) = ta.iter().zip(tb).position(|(&x, &y)| (x - y).abs() > tol * (T::one() + x.abs())) {
        return Err(Error::GridMismatch(format!("sample {k}: t={} vs t={}", ta[k], tb[k])));
    }
    let gaps: Vec<T> = a
        .rows()
        .zip(b.rows())
        .map(|(ra, rb)| ra.iter().zip(rb).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs())))
        .collect();
    let (idx, max_gap) = gaps
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::zero()), |best, (k, g)| if g > best.1 { (k, g) } else { best });
    Ok(TraceComparison { times: ta.to_vec(), time_of_max: ta.get(idx).copied().unwrap_or_else(T::zero), gaps, max_gap })
}

/// One row of an ω-sweep: original-vs-average gap at a base-frequency factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub factor: T,
    pub max_gap: Option<T>,
    /// `max_gap / previous row's max_gap`.
    pub ratio: Option<T>,
    pub failure: Option<String>,
}

/// Runs the original loop at `factor × ω` for every factor and compares each
/// run against the average loop.
pub fn omega_sweep<T: Scalar>(
    game: &QuadraticGame<T>,
    dither: &DitherConfig<T>,
    trigger: &TriggerConfig<T>,
    sim: &SimConfig<T>,
    factors: &[T],
) -> Result<Vec<SweepRow<T>>> {
    let mut avg_cfg = sim.clone();
    avg_cfg.mode = SimMode::Average;
    let average = simulate_average(game, trigger, &avg_cfg)?;
    let mut orig_cfg = sim.clone();
    orig_cfg.mode = SimMode::Original;
    let mut rows: Vec<SweepRow<T>> = Vec::with_capacity(factors.len());
    for &factor in factors {
        let scaled = dither.with_base_freq(dither.base_freq() * factor)?;
        let (max_gap, failure) = match simulate(game, &scaled, trigger, &orig_cfg) {
            Ok(trace) => (Some(compare_traces(&trace, &average)?.max_gap), None),
            Err(e @ Error::Divergence { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        let ratio = match (rows.last().and_then(|r| r.max_gap), max_gap) {
            (Some(prev), Some(cur)) if prev > T::zero() => Some(cur / prev),
            _ => None,
        };
        rows.push(SweepRow { factor, max_gap, ratio, failure });
    }
    Ok(rows)
}

/// `V_av = Ĝᵀ P Ĝ` at every recorded sample.
pub fn lyapunov_values<T: Scalar>(trace: &SimTrace<T>, p: &Matrix<T>) -> Vec<T> {
    trace.g_est.rows().map(|g| p.quadratic_form(g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dither::Rational;

    fn game() -> QuadraticGame<f64> {
        QuadraticGame::new(
            vec![Matrix::from_rows(&[[-2.0, 1.0], [1.0, 0.0]]), Matrix::from_rows(&[[0.0, 1.0], [1.0, -2.0]])],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
        )
        .unwrap()
    }

    fn dither() -> DitherConfig<f64> {
        DitherConfig::new(vec![0.1, 0.1], vec![Rational::from_integer(7), Rational::from_integer(11)], 10.0).unwrap()
    }

    fn trigger(k: f64) -> TriggerConfig<f64> {
        TriggerConfig::new(vec![0.5, 0.5], vec![k, k]).unwrap()
    }

    #[test]
    fn zero_gain_freezes_estimates() {
        let sim = SimConfig::new(1e-3, 2.0, vec![0.3, -0.4], SimMode::Original).unwrap();
        let tr = simulate(&game(), &dither(), &trigger(0.0), &sim).unwrap();
        assert!(tr.theta_hat.rows().all(|r| r == [0.3, -0.4]));
        assert!(tr.u.rows().all(|r| r == [0.0, 0.0]));
    }

    #[test]
    fn zero_gain_still_fires_on_probed_payoffs() {
        // u stays 0 but Ĝ_i = M_i J_i still oscillates, so the rule keeps firing
        let flat = QuadraticGame::new(
            vec![Matrix::from_diag(&[-1.0, 0.0]), Matrix::from_diag(&[0.0, -1.0])],
            vec![vec![0.0; 2]; 2],
            vec![0.0; 2],
        )
        .unwrap();
        let sim = SimConfig::new(1e-3, 1.0, vec![0.0, 0.0], SimMode::Original).unwrap();
        let tr = simulate(&flat, &dither(), &trigger(0.0), &sim).unwrap();
        assert!(tr.event_counts().iter().all(|&c| c > 1));
        let stats = inter_event_stats(&tr);
        assert!(stats.iter().all(|s| s.min_gap.unwrap() >= 1e-3 - 1e-12));
    }

    #[test]
    fn average_mode_at_equilibrium_stays_put() {
        let sim = SimConfig::new(1e-3, 1.0, vec![1.0, 1.0], SimMode::Average).unwrap();
        let tr = simulate_average(&game(), &trigger(1.0), &sim).unwrap();
        assert!(tr.g_est.rows().all(|g| g.iter().all(|&x| x.abs() < 1e-15)));
        assert_eq!(tr.event_counts(), vec![1, 1]);
        assert!(inter_event_stats(&tr).iter().all(|s| s.min_gap.is_none()));
    }

    #[test]
    fn row_count_and_decimation() {
        let sim = SimConfig::new(1e-2, 1.0, vec![0.0, 0.0], SimMode::Original).unwrap();
        let tr = simulate(&game(), &dither(), &trigger(1.0), &sim).unwrap();
        assert_eq!(tr.len(), 101);
        let dec = simulate(&game(), &dither(), &trigger(1.0), &sim.clone().with_decimation(10).unwrap()).unwrap();
        assert_eq!(dec.len(), 11);
        assert_eq!(dec.events, tr.events);
        let fired_full: usize = tr.event_flags.rows().skip(1).map(|r| r.iter().map(|&x| x as usize).sum::<usize>()).sum();
        assert_eq!(fired_full + 2, tr.event_counts().iter().sum::<usize>());
    }

    #[test]
    fn exact_advance_between_samples() {
        let sim = SimConfig::new(1e-3, 2.0, vec![0.5, 1.5], SimMode::Original).unwrap();
        let tr = simulate(&game(), &dither(), &trigger(0.5), &sim).unwrap();
        for k in 1..tr.len() {
            let prev = tr.theta_hat.row(k - 1);
            let cur = tr.theta_hat.row(k);
            let u = tr.u.row(k - 1);
            for i in 0..2 {
                assert_eq!(cur[i], prev[i] + u[i] * 1e-3);
            }
        }
    }

    #[test]
    fn deterministic_runs() {
        let sim = SimConfig::new(1e-3, 3.0, vec![0.5, 1.5], SimMode::Original).unwrap();
        let a = simulate(&game(), &dither(), &trigger(0.5), &sim).unwrap();
        let b = simulate(&game(), &dither(), &trigger(0.5), &sim).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported_with_partial_trace() {
        let sim = SimConfig::new(1e-2, 50.0, vec![0.5, 1.5], SimMode::Original).unwrap();
        let (tr, err) = simulate_partial(&game(), &dither(), &trigger(1e4), &sim).unwrap();
        assert!(matches!(err, Some(Error::Divergence { .. })), "{err:?}");
        assert!(tr.len() < 5001);
        assert!(simulate(&game(), &dither(), &trigger(1e4), &sim).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sim = SimConfig::new(1e-2, 1.0, vec![0.0; 3], SimMode::Original).unwrap();
        assert!(matches!(simulate(&game(), &dither(), &trigger(1.0), &sim), Err(Error::Dimension(_))));
    }

    #[test]
    fn sim_config_validation() {
        assert!(SimConfig::new(0.0, 1.0, vec![0.0], SimMode::Original).is_err());
        assert!(SimConfig::new(0.1, 0.05, vec![0.0], SimMode::Original).is_err());
        assert!(SimConfig::new(0.1, 1.0, vec![f64::NAN], SimMode::Original).is_err());
        assert!(SimConfig::new(0.1, 1.0, vec![0.0], SimMode::Original).unwrap().with_decimation(0).is_err());
    }

    #[test]
    fn rk4_is_exact_for_constant_field() {
        let x = rk4_step(|_| vec![2.0, -1.0], &[1.0, 1.0], 0.25);
        assert_eq!(x, vec![1.5, 0.75]);
    }

    #[test]
    fn identical_traces_compare_to_zero() {
        let sim = SimConfig::new(1e-2, 1.0, vec![0.0, 0.0], SimMode::Original).unwrap();
        let tr = simulate(&game(), &dither(), &trigger(1.0), &sim).unwrap();
        let c = compare_traces(&tr, &tr).unwrap();
        assert_eq!(c.max_gap, 0.0);
        let short = simulate(&game(), &dither(), &trigger(1.0), &SimConfig { horizon: 0.5, ..sim }).unwrap();
        assert!(matches!(compare_traces(&tr, &short), Err(Error::GridMismatch(_))));
    }
}
