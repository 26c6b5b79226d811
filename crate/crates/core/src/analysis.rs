//! Time-varying decomposition of the estimate, averaging checks, Lyapunov
//! design and the trigger, decay and dwell-time bounds derived from it.

use crate::dither::{common_period, DitherConfig};
use crate::error::{Error, Result};
use crate::game::{pseudo_gradient_matrix, QuadraticGame};
use crate::linalg::{norm2, Matrix};
use crate::scalar::Scalar;
use crate::sim::SimTrace;

/// Linear-in-`θ̃` part of the estimate: `Ĝ(t) ≈ ℋ(t)θ̃ + Δ(t)`.
///
/// Entry `(i, j)` collects every term of `M_i J_i(θ* + θ̃ + S)` that multiplies
/// `θ̃_j`, with the product of sines expanded into cosines of the sum and
/// difference frequencies.
pub fn time_varying_h<T: Scalar>(game: &QuadraticGame<T>, dither: &DitherConfig<T>, theta_star: &[T], t: T) -> Matrix<T> {
    let n = game.players();
    let a = dither.amplitudes();
    let w: Vec<T> = (0..n).map(|k| dither.omega(k)).collect();
    let two = T::lit(2.0);
    Matrix::from_fn(n, n, |i, j| {
        let hi = game.payoff_matrix(i);
        let hv = game.payoff_vector(i);
        let mut v = hi[(i, j)];
        let hstar: T = (0..n).fold(T::zero(), |s, k| s + hi[(j, k)] * theta_star[k]);
        v = v + two / a[i] * (w[i] * t).sin() * (hv[j] + hstar);
        for k in 0..n {
            let r = a[k] / a[i] * hi[(j, k)];
            v = v - r * ((w[i] + w[k]) * t).cos();
            if k != i {
                v = v + r * ((w[i] - w[k]) * t).cos();
            }
        }
        v
    })
}

/// θ̃-independent disturbance `Δ(t)` of the estimate around `θ*`.
pub fn disturbance_delta<T: Scalar>(game: &QuadraticGame<T>, dither: &DitherConfig<T>, theta_star: &[T], t: T) -> Vec<T> {
    let n = game.players();
    let a = dither.amplitudes();
    let w: Vec<T> = (0..n).map(|k| dither.omega(k)).collect();
    let s: Vec<T> = (0..n).map(|k| (w[k] * t).sin()).collect();
    let pg = pseudo_gradient_matrix(game).evaluate(theta_star);
    let two = T::lit(2.0);
    (0..n)
        .map(|i| {
            let hi = game.payoff_matrix(i);
            let hv = game.payoff_vector(i);
            // θ*ᵀH^iθ* sin(ω_i t)/a_i
            let g1 = hi.quadratic_form(theta_star) * s[i] / a[i];
            // 2 h^iᵀθ* sin(ω_i t)/a_i
            let g2 = two * crate::linalg::dot(hv, theta_star) * s[i] / a[i];
            // 2 c_i sin(ω_i t)/a_i
            let g3 = two * game.offset(i) * s[i] / a[i];
            let mut g4 = T::zero();
            let mut g5 = T::zero();
            let mut g6 = T::zero();
            for k in 0..n {
                let coef = (0..n).fold(hv[k], |acc, j| acc + theta_star[j] * hi[(j, k)]);
                let r = a[k] / a[i] * coef;
                // cos((ω_i−ω_k)t); the k = i term is the constant pseudo-gradient part
                g4 = g4 + r * ((w[i] - w[k]) * t).cos();
                g5 = g5 - r * ((w[i] + w[k]) * t).cos();
                for j in 0..n {
                    g6 = g6 + hi[(j, k)] * a[j] * a[k] * s[j] * s[k];
                }
            }
            g6 = g6 * s[i] / a[i];
            // remove the pseudo-gradient at θ*, zero when θ* is the equilibrium
            let g7 = -pg[i];
            g1 + g2 + g3 + g4 + g5 + g6 + g7
        })
        .collect()
}

/// Composite Simpson average of a vector-valued function over `[0, period]`
/// with `intervals` subintervals (rounded up to even).
pub fn period_average<T: Scalar>(period: T, intervals: usize, mut f: impl FnMut(T) -> Vec<T>) -> Vec<T> {
    let m = intervals.max(2) + intervals % 2;
    let h = period / T::from_count(m);
    let mut acc = f(T::zero());
    let last = f(period);
    acc.iter_mut().zip(&last).for_each(|(a, &b)| *a = *a + b);
    for k in 1..m {
        let weight = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        let v = f(T::from_count(k) * h);
        acc.iter_mut().zip(&v).for_each(|(a, &b)| *a = *a + weight * b);
    }
    let scale = h / (T::lit(3.0) * period);
    acc.into_iter().map(|a| a * scale).collect()
}

/// Default Simpson resolution per period.
pub const QUADRATURE_NODES: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingResiduals<T> {
    pub period: T,
    pub nodes: usize,
    /// `max |⟨ℋ⟩ − H|`
    pub h_mean: T,
    /// `max |⟨Δ⟩|`
    pub delta_mean: T,
    /// `max |⟨dℋ/dt⟩|`
    pub h_rate_mean: T,
    /// `max |⟨dΔ/dt⟩|`
    pub delta_rate_mean: T,
}

/// Averages of ℋ, Δ and their time derivatives over one common period.
/// Derivatives use central differences with step `period / (100·nodes)`.
pub fn averaging_residuals<T: Scalar>(
    game: &QuadraticGame<T>,
    dither: &DitherConfig<T>,
    theta_star: &[T],
    nodes: usize,
) -> Result<AveragingResiduals<T>> {
    let n = game.players();
    let period = common_period(dither)?.period;
    let h = pseudo_gradient_matrix(game).matrix;
    let flat = |t: T| -> Vec<T> {
        let mut v = time_varying_h(game, dither, theta_star, t).vec_columns();
        v.extend(disturbance_delta(game, dither, theta_star, t));
        v
    };
    let eps = period / T::from_count(100 * nodes.max(1));
    let mean = period_average(period, nodes, &flat);
    let rate = period_average(period, nodes, |t| {
        let (p, m) = (flat(t + eps), flat(t - eps));
        p.iter().zip(&m).map(|(&x, &y)| (x - y) / (T::lit(2.0) * eps)).collect()
    });
    let max_abs = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let hv = h.vec_columns();
    let h_dev: Vec<T> = mean[..n * n].iter().zip(&hv).map(|(&x, &y)| x - y).collect();
    Ok(AveragingResiduals {
        period,
        nodes: nodes + nodes % 2,
        h_mean: max_abs(&h_dev),
        delta_mean: max_abs(&mean[n * n..]),
        h_rate_mean: max_abs(&rate[..n * n]),
        delta_rate_mean: max_abs(&rate[n * n..]),
    })
}

/// Maximum tolerated `‖AᵀP + PA + Q‖∞` for a Lyapunov solution.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSolution<T> {
    pub p: Matrix<T>,
    pub residual: T,
    /// Eigenvalues of `P`, ascending.
    pub eigenvalues: Vec<T>,
}

/// Solves `(HK)ᵀP + P(HK) = −Q` through the Kronecker form
/// `(I⊗Aᵀ + Aᵀ⊗I) vec(P) = −vec(Q)` with `A = HK`.
pub fn lyapunov_design<T: Scalar>(h: &Matrix<T>, gains: &[T], q: &Matrix<T>) -> Result<LyapunovSolution<T>> {
    let n = h.rows();
    if !h.is_square() || gains.len() != n || q.rows() != n || !q.is_square() {
        return Err(Error::Dimension(format!("H is {}x{}, {} gains, Q is {}x{}", h.rows(), h.cols(), gains.len(), q.rows(), q.cols())));
    }
    let a = h.matmul(&Matrix::from_diag(gains));
    let eig = a.eigenvalues()?;
    if let Some((re, im)) = eig.iter().find(|(re, _)| !(*re < T::zero())) {
        return Err(Error::Design(format!("HK is not Hurwitz (eigenvalue {re} {im:+}i)")));
    }
    let at = a.transpose();
    let id = Matrix::identity(n);
    let big = id.kron(&at).add(&at.kron(&id));
    let rhs: Vec<T> = q.vec_columns().into_iter().map(|x| -x).collect();
    let p = Matrix::from_vec_columns(n, n, &big.solve(&rhs)?).symmetrized();
    let residual = at.matmul(&p).add(&p.matmul(&a)).add(q).max_abs();
    if !(residual <= T::lit(LYAPUNOV_RESIDUAL_TOL)) {
        return Err(Error::Design(format!("Lyapunov residual {residual:e} exceeds {LYAPUNOV_RESIDUAL_TOL:e}")));
    }
    let eigenvalues = p.symmetric_eigenvalues();
    if !(eigenvalues[0] > T::zero()) {
        return Err(Error::Design(format!("P is not positive definite (smallest eigenvalue {})", eigenvalues[0])));
    }
    Ok(LyapunovSolution { p, residual, eigenvalues })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerBounds<T> {
    pub sigma_bar: T,
    pub sigma_bar_max: T,
    pub sigma_hat: T,
    pub alpha: T,
    /// `α(1 − σ̂)/2`; `None` when `σ̂ ≥ 1`.
    pub decay_rate: Option<T>,
}

impl<T: Scalar> TriggerBounds<T> {
    pub fn certified(&self) -> bool {
        self.decay_rate.is_some()
    }
}

pub fn trigger_bounds<T: Scalar>(p: &Matrix<T>, h: &Matrix<T>, gains: &[T], q: &Matrix<T>, sigmas: &[T]) -> TriggerBounds<T> {
    let sigma_bar = sigmas.iter().fold(T::zero(), |m, &s| m.max(s));
    let q_min = q.symmetrized().symmetric_eigenvalues()[0];
    let p_max = *p.symmetric_eigenvalues().last().expect("nonempty P");
    let phk = p.matmul(h).matmul(&Matrix::from_diag(gains));
    let sigma_bar_max = q_min / (T::lit(2.0) * phk.spectral_norm());
    let sigma_hat = sigma_bar / sigma_bar_max;
    let alpha = q_min / p_max;
    let decay_rate = (sigma_hat < T::one()).then(|| alpha * (T::one() - sigma_hat) / T::lit(2.0));
    TriggerBounds { sigma_bar, sigma_bar_max, sigma_hat, alpha, decay_rate }
}

/// `τ* = 1/‖KH‖ · 1/σ̄² · 1/(1 + 1/σ̄)`, the large-ω limit of the dwell-time
/// bound (the O(1/ω) corrections are dropped).
pub fn dwell_time_bound<T: Scalar>(h: &Matrix<T>, gains: &[T], sigma_bar: T) -> T {
    let kh = Matrix::from_diag(gains).matmul(h).spectral_norm();
    dwell_time_from_norm(kh, sigma_bar)
}

pub fn dwell_time_from_norm<T: Scalar>(kh_norm: T, sigma_bar: T) -> T {
    T::one() / kh_norm / (sigma_bar * sigma_bar) / (T::one() + T::one() / sigma_bar)
}

/// Least-squares fit `log y ≈ log c − r t` over the points with `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit<T> {
    pub rate: T,
    pub amplitude: T,
    pub points: usize,
}

pub fn fit_exponential<T: Scalar>(times: &[T], values: &[T]) -> Result<ExpFit<T>> {
    let pts: Vec<(T, T)> =
        times.iter().zip(values).filter(|(_, &y)| y > T::zero() && y.is_finite()).map(|(&t, &y)| (t, y.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::TraceTooShort(format!("{} usable points for an exponential fit", pts.len())));
    }
    let m = T::from_count(pts.len());
    let (st, sy) = pts.iter().fold((T::zero(), T::zero()), |(a, b), &(t, y)| (a + t, b + y));
    let (tm, ym) = (st / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(a, b), &(t, y)| (a + (t - tm) * (y - ym), b + (t - tm) * (t - tm)));
    if !(sxx > T::zero()) {
        return Err(Error::TraceTooShort("exponential fit needs distinct times".into()));
    }
    let slope = sxy / sxx;
    Ok(ExpFit { rate: -slope, amplitude: (ym - slope * tm).exp(), points: pts.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMetrics<T> {
    /// Sup of `‖θ − θ*‖₂` over the last 10% of samples.
    pub final_residual: T,
    /// Exponential rate fitted to `‖θ − θ*‖₂ − floor` over the transient.
    pub fitted_rate: Option<T>,
    /// Residual floor, the mean of `‖θ − θ*‖₂` over the final band.
    pub fitted_offset: T,
}

/// Relative size below which the transient is treated as having reached the
/// floor, so roundoff and underflow stay out of the fit.
const FIT_RELATIVE_CUTOFF: f64 = 1e-9;

pub fn convergence_metrics<T: Scalar>(trace: &SimTrace<T>, theta_star: &[T]) -> Result<ConvergenceMetrics<T>> {
    let len = trace.len();
    if len < 20 {
        return Err(Error::TraceTooShort(format!("{len} samples, need at least 20")));
    }
    let dist: Vec<T> = trace
        .theta
        .rows()
        .map(|r| norm2(&r.iter().zip(theta_star).map(|(&x, &s)| x - s).collect::<Vec<_>>()))
        .collect();
    let band = len - len / 10;
    let tail = &dist[band..];
    let final_residual = tail.iter().fold(T::zero(), |m, &d| m.max(d));
    let floor = tail.iter().fold(T::zero(), |s, &d| s + d) / T::from_count(tail.len());
    let start = dist[0] - floor;
    let cutoff = start.abs() * T::lit(FIT_RELATIVE_CUTOFF);
    let (ts, ys): (Vec<T>, Vec<T>) = trace.times[..band]
        .iter()
        .zip(&dist[..band])
        .map(|(&t, &d)| (t, d - floor))
        .take_while(|&(_, y)| y > cutoff)
        .unzip();
    let fitted_rate = fit_exponential(&ts, &ys).ok().map(|f| f.rate);
    Ok(ConvergenceMetrics { final_residual, fitted_rate, fitted_offset: floor })
}

/// Evaluation of `V_av = Ĝᵀ P Ĝ` at consecutive event instants.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovDecayCheck<T> {
    pub event_samples: usize,
    pub violations: usize,
    /// Largest `V(t_{k+1}) − V(t_k)` seen (negative when strictly decaying).
    pub worst_increase: T,
    /// Samples where `λ_min(P)‖Ĝ‖² ≤ V ≤ λ_max(P)‖Ĝ‖²` failed beyond rounding.
    /// Samples in the subnormal range are skipped.
    pub sandwich_violations: usize,
}

pub fn lyapunov_decay_check<T: Scalar>(trace: &SimTrace<T>, p: &Matrix<T>) -> LyapunovDecayCheck<T> {
    let eig = p.symmetric_eigenvalues();
    let (lo, hi) = (eig[0], *eig.last().expect("nonempty P"));
    let rounding = T::lit(64.0) * T::epsilon();
    let mut sandwich_violations = 0;
    let mut at_events = Vec::new();
    for (k, (g, flags)) in trace.g_est.rows().zip(trace.event_flags.rows()).enumerate() {
        let v = p.quadratic_form(g);
        let g2 = crate::linalg::dot(g, g);
        // subnormal values carry no relative precision
        let resolvable = lo * g2 >= T::min_positive_value();
        if resolvable && (v < lo * g2 * (T::one() - rounding) || v > hi * g2 * (T::one() + rounding)) {
            sandwich_violations += 1;
        }
        if k == 0 || flags.contains(&1) {
            at_events.push(v);
        }
    }
    let mut violations = 0;
    let mut worst = T::neg_infinity();
    for w in at_events.windows(2) {
        let d = w[1] - w[0];
        worst = worst.max(d);
        if d > T::zero() {
            violations += 1;
        }
    }
    LyapunovDecayCheck { event_samples: at_events.len(), violations, worst_increase: worst, sandwich_violations }
}

/// Everything the runner reports next to a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport<T> {
    pub p: Matrix<T>,
    pub q: Matrix<T>,
    pub lyapunov_residual: T,
    pub bounds: TriggerBounds<T>,
    pub tau_star: T,
    pub averaging: Option<AveragingResiduals<T>>,
    pub convergence: Option<ConvergenceMetrics<T>>,
}

/// Lyapunov design with `Q = I` and the bounds that follow from it.
pub fn design_report<T: Scalar>(game: &QuadraticGame<T>, gains: &[T], sigmas: &[T]) -> Result<AnalysisReport<T>> {
    let h = pseudo_gradient_matrix(game).matrix;
    let q = Matrix::identity(game.players());
    let sol = lyapunov_design(&h, gains, &q)?;
    let bounds = trigger_bounds(&sol.p, &h, gains, &q, sigmas);
    let tau_star = dwell_time_bound(&h, gains, bounds.sigma_bar);
    Ok(AnalysisReport { p: sol.p, q, lyapunov_residual: sol.residual, bounds, tau_star, averaging: None, convergence: None })
}
