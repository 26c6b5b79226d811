//! Per-player event-triggered NES logic: demodulated pseudo-gradient
//! estimate, broadcast error, static triggering rule and zero-order-hold
//! tuning input.

use crate::dither::DitherConfig;
use crate::error::{Error, Result};
use crate::game::QuadraticGame;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerConfig<T> {
    sigmas: Vec<T>,
    gains: Vec<T>,
}

impl<T: Scalar> TriggerConfig<T> {
    /// `σ_i` must lie in the open interval (0, 1). Gains must be nonnegative;
    /// a zero gain freezes that player's estimate.
    pub fn new(sigmas: Vec<T>, gains: Vec<T>) -> Result<Self> {
        if sigmas.len() != gains.len() {
            return Err(Error::Dimension(format!("{} sigmas but {} gains", sigmas.len(), gains.len())));
        }
        for (i, &s) in sigmas.iter().enumerate() {
            if !(s > T::zero() && s < T::one()) {
                return Err(Error::config(format!("trigger.sigmas[{i}]"), format!("sigma out of (0,1): {s}")));
            }
        }
        for (i, &k) in gains.iter().enumerate() {
            if !(k >= T::zero()) || !k.is_finite() {
                return Err(Error::config(format!("trigger.gains[{i}]"), format!("gain must be nonnegative, got {k}")));
            }
        }
        Ok(Self { sigmas, gains })
    }

    pub fn players(&self) -> usize {
        self.sigmas.len()
    }

    pub fn sigmas(&self) -> &[T] {
        &self.sigmas
    }

    pub fn gains(&self) -> &[T] {
        &self.gains
    }

    pub fn sigma(&self, i: usize) -> T {
        self.sigmas[i]
    }

    pub fn gain(&self, i: usize) -> T {
        self.gains[i]
    }

    /// Largest triggering parameter, `σ̄ = max σ_i`.
    pub fn sigma_bar(&self) -> T {
        self.sigmas.iter().fold(T::zero(), |m, &s| m.max(s))
    }
}

/// State one player keeps between events.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState<T> {
    pub theta_hat: T,
    /// Last broadcast pseudo-gradient estimate `Ĝ_i(t^i_κ)`.
    pub g_broadcast: T,
    /// Event instants; always starts with `t^i_0 = 0`.
    pub event_times: Vec<T>,
}

impl<T: Scalar> PlayerState<T> {
    /// State at t = 0 with the initial broadcast `Ĝ_i(0)`.
    pub fn new(theta_hat: T, g_initial: T) -> Self {
        Self { theta_hat, g_broadcast: g_initial, event_times: vec![T::zero()] }
    }

    pub fn last_event(&self) -> T {
        *self.event_times.last().expect("event list starts at t=0")
    }

    pub fn error(&self, g_now: T) -> T {
        error_signal(self, g_now)
    }

    pub fn input(&self, gain: T) -> T {
        tuning_input(self, gain)
    }

    pub fn apply_event(&mut self, t: T, g_now: T) -> Result<()> {
        apply_event(self, t, g_now)
    }
}

/// Signals seen by the players at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T> {
    /// Applied actions `θ = θ̂ + S(t)`.
    pub theta: Vec<T>,
    /// Measured payoffs `y_i = J_i(θ)`.
    pub payoffs: Vec<T>,
    /// Demodulated estimate `Ĝ_i = M_i(t) y_i`.
    pub estimate: Vec<T>,
}

/// Perturbs the estimates with the probes, measures every payoff and
/// demodulates. Only payoff measurements enter the estimate.
pub fn measure<T: Scalar>(game: &QuadraticGame<T>, dither: &DitherConfig<T>, theta_hat: &[T], t: T) -> Measurement<T> {
    let theta: Vec<T> = theta_hat.iter().enumerate().map(|(i, &th)| th + dither.probe(i, t)).collect();
    let payoffs = game.payoffs(&theta);
    let estimate = payoffs.iter().enumerate().map(|(i, &y)| dither.demod(i, t) * y).collect();
    Measurement { theta, payoffs, estimate }
}

pub fn pseudo_gradient_estimate<T: Scalar>(
    game: &QuadraticGame<T>,
    dither: &DitherConfig<T>,
    theta_hat: &[T],
    t: T,
) -> Vec<T> {
    measure(game, dither, theta_hat, t).estimate
}

/// `e_i = Ĝ_i(t^i_κ) − Ĝ_i(t)`
pub fn error_signal<T: Scalar>(state: &PlayerState<T>, g_now: T) -> T {
    state.g_broadcast - g_now
}

/// Static rule: fire iff `σ_i|Ĝ_i| − |e_i| < 0`. Equality does not fire.
pub fn should_trigger<T: Scalar>(sigma: T, g_now: T, error: T) -> bool {
    sigma * g_now.abs() - error.abs() < T::zero()
}

/// Zero-order-hold input `u_i = K_i Ĝ_i(t^i_κ)`.
pub fn tuning_input<T: Scalar>(state: &PlayerState<T>, gain: T) -> T {
    gain * state.g_broadcast
}

pub fn apply_event<T: Scalar>(state: &mut PlayerState<T>, t: T, g_now: T) -> Result<()> {
    let last = state.last_event();
    if !(t > last) {
        return Err(Error::EventOrder { t: t.to_f64_lossy(), last: last.to_f64_lossy() });
    }
    state.g_broadcast = g_now;
    state.event_times.push(t);
    Ok(())
}
