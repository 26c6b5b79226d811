//! Sinusoidal probing (`S_i = a_i sin ω_i t`) and demodulation
//! (`M_i = (2/a_i) sin ω_i t`) signals with `ω_i = ω'_i · ω`.
//!
//! Frequency ratios are exact rationals; floats appear only when a signal is
//! evaluated.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DitherConfig<T> {
    amplitudes: Vec<T>,
    freq_ratios: Vec<Rational>,
    base_freq: T,
}

impl<T: Scalar> DitherConfig<T> {
    pub fn new(amplitudes: Vec<T>, freq_ratios: Vec<Rational>, base_freq: T) -> Result<Self> {
        if amplitudes.len() != freq_ratios.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes but {} frequency ratios",
                amplitudes.len(),
                freq_ratios.len()
            )));
        }
        for (i, &a) in amplitudes.iter().enumerate() {
            if !(a > T::zero()) || !a.is_finite() {
                return Err(Error::config(format!("dither.amplitudes[{i}]"), format!("must be positive, got {a}")));
            }
        }
        for (i, r) in freq_ratios.iter().enumerate() {
            if *r <= Rational::zero() {
                return Err(Error::config(format!("dither.freq_ratios[{i}]"), format!("must be positive, got {r}")));
            }
            if let Some(j) = freq_ratios[..i].iter().position(|q| q == r) {
                return Err(Error::config(
                    format!("dither.freq_ratios[{i}]"),
                    format!("duplicates freq_ratios[{j}] = {r}"),
                ));
            }
        }
        if !(base_freq > T::zero()) || !base_freq.is_finite() {
            return Err(Error::config("dither.base_freq", format!("must be positive, got {base_freq}")));
        }
        Ok(Self { amplitudes, freq_ratios, base_freq })
    }

    pub fn players(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize) -> T {
        self.amplitudes[i]
    }

    pub fn freq_ratios(&self) -> &[Rational] {
        &self.freq_ratios
    }

    pub fn base_freq(&self) -> T {
        self.base_freq
    }

    /// Angular frequency `ω_i = ω'_i ω` in rad/s.
    pub fn omega(&self, i: usize) -> T {
        ratio_to_scalar::<T>(self.freq_ratios[i]) * self.base_freq
    }

    /// The same configuration with the base frequency multiplied by `factor`.
    pub fn with_base_freq(&self, base_freq: T) -> Result<Self> {
        Self::new(self.amplitudes.clone(), self.freq_ratios.clone(), base_freq)
    }

    /// Euclidean norm of the amplitude vector.
    pub fn aggregate_amplitude(&self) -> T {
        crate::linalg::norm2(&self.amplitudes)
    }

    pub fn probe(&self, i: usize, t: T) -> T {
        probe_signal(self, i, t)
    }

    pub fn demod(&self, i: usize, t: T) -> T {
        demod_signal(self, i, t)
    }

    pub fn probe_vector(&self, t: T) -> Vec<T> {
        (0..self.players()).map(|i| self.probe(i, t)).collect()
    }

    pub fn demod_vector(&self, t: T) -> Vec<T> {
        (0..self.players()).map(|i| self.demod(i, t)).collect()
    }
}

pub fn ratio_to_scalar<T: Scalar>(r: Rational) -> T {
    T::lit(r.numer().to_f64().unwrap_or(f64::NAN)) / T::lit(r.denom().to_f64().unwrap_or(f64::NAN))
}

pub fn probe_signal<T: Scalar>(cfg: &DitherConfig<T>, i: usize, t: T) -> T {
    cfg.amplitudes[i] * (cfg.omega(i) * t).sin()
}

pub fn demod_signal<T: Scalar>(cfg: &DitherConfig<T>, i: usize, t: T) -> T {
    T::lit(2.0) / cfg.amplitudes[i] * (cfg.omega(i) * t).sin()
}

/// The excluded relations between probing frequency ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyRule {
    /// ω'_i = ω'_j
    Equal,
    /// ω'_i = ½(ω'_j + ω'_k)
    Midpoint,
    /// ω'_i = ω'_j + 2ω'_k
    SumWithDouble,
    /// ω'_i = ω'_k + ω'_l
    Sum,
    /// ω'_i = ω'_k − ω'_l
    Difference,
}

impl fmt::Display for FrequencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrequencyRule::Equal => "ω'_j",
            FrequencyRule::Midpoint => "½(ω'_j+ω'_k)",
            FrequencyRule::SumWithDouble => "ω'_j+2ω'_k",
            FrequencyRule::Sum => "ω'_k+ω'_l",
            FrequencyRule::Difference => "ω'_k−ω'_l",
        })
    }
}

/// `freq_ratios[player]` satisfies `rule` with the given witness indices
/// (0-based, in the order the rule names them).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyViolation {
    pub player: usize,
    pub rule: FrequencyRule,
    pub witnesses: Vec<usize>,
}

impl fmt::Display for FrequencyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = match self.rule {
            FrequencyRule::Equal => ["j"].as_slice(),
            FrequencyRule::Midpoint | FrequencyRule::SumWithDouble => ["j", "k"].as_slice(),
            FrequencyRule::Sum | FrequencyRule::Difference => ["k", "l"].as_slice(),
        };
        let w: Vec<String> = names.iter().zip(&self.witnesses).map(|(n, i)| format!("{n}={}", i + 1)).collect();
        write!(f, "ω'_{} = {} with {}", self.player + 1, self.rule, w.join(", "))
    }
}

/// Exhaustive exact check of the probing-frequency separation conditions.
///
/// Witness indices always differ from the tested player. Degenerate witness
/// choices are skipped: `j = k` in the midpoint rule (it reduces to
/// equality) and `k = l` in the difference rule (it gives zero).
pub fn validate_frequencies<T: Scalar>(cfg: &DitherConfig<T>) -> Vec<FrequencyViolation> {
    check_frequency_ratios(&cfg.freq_ratios)
}

pub fn check_frequency_ratios(w: &[Rational]) -> Vec<FrequencyViolation> {
    let n = w.len();
    let two = Rational::from_integer(2);
    let mut out = Vec::new();
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut push = |rule, witnesses: Vec<usize>| out.push(FrequencyViolation { player: i, rule, witnesses });
        for &j in &others {
            if w[i] == w[j] {
                push(FrequencyRule::Equal, vec![j]);
            }
        }
        for &j in &others {
            for &k in others.iter().filter(|&&k| k > j) {
                if w[i] * two == w[j] + w[k] {
                    push(FrequencyRule::Midpoint, vec![j, k]);
                }
            }
        }
        for &j in &others {
            for &k in &others {
                if w[i] == w[j] + two * w[k] {
                    push(FrequencyRule::SumWithDouble, vec![j, k]);
                }
            }
        }
        for &k in &others {
            for &l in others.iter().filter(|&&l| l >= k) {
                if w[i] == w[k] + w[l] {
                    push(FrequencyRule::Sum, vec![k, l]);
                }
            }
        }
        for &k in &others {
            for &l in others.iter().filter(|&&l| l != k) {
                if w[i] == w[k] - w[l] {
                    push(FrequencyRule::Difference, vec![k, l]);
                }
            }
        }
    }
    out
}

/// Common period of all dither signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonPeriod<T> {
    /// `LCM{1/ω'_i}` as an exact rational.
    pub inverse_ratio_lcm: Rational,
    /// `T = 2π · LCM{1/ω_i}` in seconds.
    pub period: T,
    /// `ω = 2π / T` in rad/s.
    pub omega: T,
}

/// `T = 2π · LCM{1/ω_i}`, computed on the exact ratios
/// (`LCM(a/b, c/d) = LCM(a, c) / GCD(b, d)` in lowest terms) and scaled by the
/// base frequency only at the end.
pub fn common_period<T: Scalar>(cfg: &DitherConfig<T>) -> Result<CommonPeriod<T>> {
    let lcm = inverse_lcm(&cfg.freq_ratios)?;
    let two_pi = T::lit(2.0) * T::PI();
    let lcm_t = ratio_to_scalar::<T>(lcm);
    let period = two_pi * lcm_t / cfg.base_freq;
    let omega = cfg.base_freq * ratio_to_scalar::<T>(lcm.recip());
    Ok(CommonPeriod { inverse_ratio_lcm: lcm, period, omega })
}

fn inverse_lcm(ratios: &[Rational]) -> Result<Rational> {
    let overflow = || Error::config("dither.freq_ratios", "least common multiple overflows 64-bit integers");
    let mut iter = ratios.iter().map(|r| r.recip());
    let first = iter.next().ok_or_else(|| Error::config("dither.freq_ratios", "no frequencies"))?;
    iter.try_fold(first, |acc, r| {
        let (a, b) = (*acc.numer(), *acc.denom());
        let (c, d) = (*r.numer(), *r.denom());
        let g = a.gcd(&c);
        let num = (a / g).checked_mul(c).ok_or_else(overflow)?;
        Ok(Rational::new(num, b.gcd(&d)))
    })
}
