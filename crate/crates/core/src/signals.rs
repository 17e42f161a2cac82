//! Piecewise-constant switching signals for α and for the controller gate.
//!
//! All signals are immutable and right-continuous: at a change instant the
//! new value already applies. Random signals draw sample `k` from a ChaCha8
//! stream positioned at word `2k`, so any sample can be evaluated directly
//! and evaluation order never changes a value.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The set a signal's values are confined to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Codomain {
    /// α values, the closed interval [0, 1].
    Unit,
    /// On/off gates, {0, 1}.
    Binary,
}

impl Codomain {
    pub fn contains(self, v: f64) -> bool {
        match self {
            Codomain::Unit => (0.0..=1.0).contains(&v),
            Codomain::Binary => v == 0.0 || v == 1.0,
        }
    }
}

/// A continuous source that can be sampled and held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Constant {
        value: f64,
    },
    /// `bias + amplitude·sin(omega·t)`.
    Sine {
        omega: f64,
        amplitude: f64,
        bias: f64,
    },
    /// `0.5 + 0.5·sin(2π(f0·t + (f1 − f0)·t²/(2T)))`, a linear sweep from
    /// `f0` to `f1` Hz over `duration` seconds.
    Chirp {
        f0: f64,
        f1: f64,
        duration: f64,
    },
}

impl Source {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Source::Constant { value } => value,
            Source::Sine {
                omega,
                amplitude,
                bias,
            } => bias + amplitude * (omega * t).sin(),
            Source::Chirp { f0, f1, duration } => {
                let phase = 2.0 * PI * (f0 * t + (f1 - f0) * t * t / (2.0 * duration));
                0.5 * phase.sin() + 0.5
            }
        }
    }

    /// Closed range the source can reach.
    fn range(&self) -> (f64, f64) {
        match *self {
            Source::Constant { value } => (value, value),
            Source::Sine {
                amplitude, bias, ..
            } => (bias - amplitude.abs(), bias + amplitude.abs()),
            Source::Chirp { .. } => (0.0, 1.0),
        }
    }
}

pub fn sine_source(omega: f64, amplitude: f64, bias: f64) -> Result<Source> {
    let s = Source::Sine {
        omega,
        amplitude,
        bias,
    };
    if ![omega, amplitude, bias].iter().all(|v| v.is_finite()) {
        return invalid("sine parameters must be finite");
    }
    let (lo, hi) = s.range();
    if lo < 0.0 || hi > 1.0 {
        return invalid(format!(
            "sine with amplitude {amplitude} and bias {bias} leaves [0, 1]"
        ));
    }
    Ok(s)
}

pub fn chirp_source(f0: f64, f1: f64, duration: f64) -> Result<Source> {
    if !(f0 > 0.0 && f1 > 0.0 && duration > 0.0)
        || ![f0, f1, duration].iter().all(|v| v.is_finite())
    {
        return invalid(format!(
            "chirp needs positive frequencies and duration, got f0={f0} f1={f1} T={duration}"
        ));
    }
    Ok(Source::Chirp { f0, f1, duration })
}

/// Breakpoints `(t_i, v_i)` with `t_0 = 0` and strictly increasing times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    breakpoints: Vec<(f64, f64)>,
}

impl StepSchedule {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let Some(&(t0, _)) = breakpoints.first() else {
            return invalid("step schedule needs at least one breakpoint");
        };
        if t0 != 0.0 {
            return invalid(format!("step schedule must start at t = 0, got {t0}"));
        }
        if breakpoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return invalid("step schedule times must be strictly increasing");
        }
        if breakpoints
            .iter()
            .any(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return invalid("step schedule entries must be finite");
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    fn eval(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&(ti, _)| ti <= t + SNAP);
        self.breakpoints[idx.saturating_sub(1)].1
    }
}

/// Uniform draws on `[low, high)` refreshed every `ts` seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomHold {
    pub seed: u64,
    pub ts: f64,
    pub low: f64,
    pub high: f64,
}

impl RandomHold {
    /// The `k`-th held value.
    pub fn sample(&self, k: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(2 * k as u128);
        rng.gen_range(self.low..self.high)
    }
}

/// Square wave: `high` on `[0, duty·period)` of each period shifted by `delay`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareWave {
    pub period: f64,
    pub duty: f64,
    pub delay: f64,
    pub low: f64,
    pub high: f64,
}

impl SquareWave {
    fn eval(&self, t: f64) -> f64 {
        let cycles = (t - self.delay) / self.period;
        let phase = cycles - snapped_floor(cycles);
        if phase + SNAP < self.duty {
            self.high
        } else {
            self.low
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    Constant { value: f64 },
    Step(StepSchedule),
    SampledHold { source: Source, ts: f64 },
    Random(RandomHold),
    Square(SquareWave),
}

/// A piecewise-constant function of time with values in a declared codomain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSignal {
    rule: Rule,
    codomain: Codomain,
}

impl SwitchingSignal {
    fn checked(rule: Rule, codomain: Codomain) -> Result<Self> {
        let sig = Self { rule, codomain };
        let extremes: Vec<f64> = match &sig.rule {
            Rule::Constant { value } => vec![*value],
            Rule::Step(s) => s.breakpoints.iter().map(|b| b.1).collect(),
            Rule::SampledHold { source, .. } => {
                let (lo, hi) = source.range();
                vec![lo, hi]
            }
            Rule::Random(r) => vec![r.low, r.high],
            Rule::Square(w) => vec![w.low, w.high],
        };
        if let Some(v) = extremes.iter().find(|v| !codomain.contains(**v)) {
            return invalid(format!("signal value {v} outside codomain {codomain:?}"));
        }
        Ok(sig)
    }

    pub fn constant(value: f64, codomain: Codomain) -> Result<Self> {
        Self::checked(Rule::Constant { value }, codomain)
    }

    pub fn always_on() -> Self {
        Self {
            rule: Rule::Constant { value: 1.0 },
            codomain: Codomain::Binary,
        }
    }

    pub fn always_off() -> Self {
        Self {
            rule: Rule::Constant { value: 0.0 },
            codomain: Codomain::Binary,
        }
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn codomain(&self) -> Codomain {
        self.codomain
    }

    /// Value at time `t ≥ 0`.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.rule {
            Rule::Constant { value } => *value,
            Rule::Step(s) => s.eval(t),
            Rule::SampledHold { source, ts } => source.eval(hold_index(t, *ts) as f64 * ts),
            Rule::Random(r) => r.sample(hold_index(t, r.ts)),
            Rule::Square(w) => w.eval(t),
        }
    }

    /// Gate reading: any nonzero value counts as on.
    pub fn is_on(&self, t: f64) -> bool {
        self.eval(t) != 0.0
    }
}

/// Times within this fraction of a sample period of a switch instant count as
/// having reached it, so `k·dt` grids land on the right side of each switch.
const SNAP: f64 = 1e-9;

fn snapped_floor(x: f64) -> f64 {
    (x + SNAP).floor()
}

fn hold_index(t: f64, ts: f64) -> u64 {
    snapped_floor(t / ts).max(0.0) as u64
}

/// α from a step schedule. Values must lie in [0, 1].
pub fn step_schedule(breakpoints: Vec<(f64, f64)>) -> Result<SwitchingSignal> {
    SwitchingSignal::checked(Rule::Step(StepSchedule::new(breakpoints)?), Codomain::Unit)
}

/// Zero-order hold of `source` with sample time `ts`.
pub fn sampled_hold(source: Source, ts: f64) -> Result<SwitchingSignal> {
    if !(ts > 0.0) || !ts.is_finite() {
        return invalid(format!("sample time must be positive, got {ts}"));
    }
    SwitchingSignal::checked(Rule::SampledHold { source, ts }, Codomain::Unit)
}

pub fn random_source(seed: u64, ts: f64, low: f64, high: f64) -> Result<SwitchingSignal> {
    if !(ts > 0.0) || !ts.is_finite() {
        return invalid(format!("sample time must be positive, got {ts}"));
    }
    if !(low < high) || !low.is_finite() || !high.is_finite() {
        return invalid(format!("random range [{low}, {high}) is empty"));
    }
    SwitchingSignal::checked(
        Rule::Random(RandomHold {
            seed,
            ts,
            low,
            high,
        }),
        Codomain::Unit,
    )
}

/// Square wave. Levels must both lie in `codomain`.
pub fn square_wave(
    period: f64,
    duty: f64,
    delay: f64,
    low: f64,
    high: f64,
    codomain: Codomain,
) -> Result<SwitchingSignal> {
    if !(period > 0.0) || !period.is_finite() {
        return invalid(format!("square wave period must be positive, got {period}"));
    }
    if !(duty > 0.0 && duty < 1.0) {
        return invalid(format!("square wave duty must lie in (0, 1), got {duty}"));
    }
    if !delay.is_finite() {
        return invalid("square wave delay must be finite");
    }
    SwitchingSignal::checked(
        Rule::Square(SquareWave {
            period,
            duty,
            delay,
            low,
            high,
        }),
        codomain,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn preset_sine() -> Source {
        sine_source(1.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn step_schedule_examples() {
        let s = step_schedule(vec![(0.0, 0.0), (10.0, 0.8), (20.0, 1.0)]).unwrap();
        assert_eq!(s.eval(9.99), 0.0);
        assert_eq!(s.eval(10.0), 0.8);
        assert_eq!(s.eval(25.0), 1.0);
    }

    #[test]
    fn step_schedule_rejects_bad_breakpoints() {
        assert!(step_schedule(vec![]).is_err());
        assert!(step_schedule(vec![(1.0, 0.0)]).is_err());
        assert!(step_schedule(vec![(0.0, 0.0), (5.0, 0.5), (5.0, 1.0)]).is_err());
        assert!(step_schedule(vec![(0.0, 0.0), (5.0, 1.5)]).is_err());
    }

    #[test]
    fn sine_examples() {
        let s = preset_sine();
        assert_eq!(s.eval(0.0), 0.5);
        assert_abs_diff_eq!(s.eval(PI / 2.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.eval(1.0), 0.920735, epsilon = 1e-6);
        assert!(sine_source(1.0, 0.6, 0.5).is_err());
    }

    #[test]
    fn sampled_hold_examples() {
        let h = sampled_hold(preset_sine(), 0.25).unwrap();
        assert_eq!(h.eval(0.2), 0.5);
        assert_abs_diff_eq!(h.eval(0.3), 0.623702, epsilon = 1e-6);
        let c = sampled_hold(Source::Constant { value: 0.3 }, 0.1).unwrap();
        assert!((0..100).all(|i| c.eval(i as f64 * 0.037) == 0.3));
        assert!(sampled_hold(preset_sine(), 0.0).is_err());
        assert!(sampled_hold(preset_sine(), -1.0).is_err());
    }

    #[test]
    fn chirp_examples() {
        let c = chirp_source(0.1, 1.0, 30.0).unwrap();
        assert_eq!(c.eval(0.0), 0.5);
        assert_abs_diff_eq!(c.eval(1.0), 0.8307, epsilon = 1e-4);
        assert!((0..=30_000).all(|i| (0.0..=1.0).contains(&c.eval(i as f64 * 1e-3))));
        assert!(chirp_source(0.0, 1.0, 30.0).is_err());
        assert!(chirp_source(0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn random_examples() {
        let a = random_source(42, 0.1, 0.0, 1.0).unwrap();
        let b = random_source(42, 0.1, 0.0, 1.0).unwrap();
        let other = random_source(43, 0.1, 0.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..3000).map(|i| i as f64 * 1e-3).collect();
        assert!(grid.iter().all(|&t| a.eval(t) == b.eval(t)));
        assert!(grid.iter().any(|&t| a.eval(t) != other.eval(t)));
        assert!(grid.iter().all(|&t| (0.0..1.0).contains(&a.eval(t))));
        for k in 0..20 {
            let v = a.eval(k as f64 * 0.1 + 1e-9);
            for j in 1..10 {
                assert_eq!(a.eval(k as f64 * 0.1 + j as f64 * 0.0099), v);
            }
        }
        assert!(random_source(1, 0.1, 1.0, 1.0).is_err());
        assert!(random_source(1, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn random_draws_do_not_depend_on_evaluation_order() {
        let a = random_source(9, 0.25, 0.0, 1.0).unwrap();
        let forward: Vec<f64> = (0..50).map(|k| a.eval(k as f64 * 0.25)).collect();
        let backward: Vec<f64> = (0..50).rev().map(|k| a.eval(k as f64 * 0.25)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }

    #[test]
    fn square_wave_examples() {
        let w = square_wave(20.0, 0.5, 5.0, 0.0, 1.0, Codomain::Unit).unwrap();
        assert_eq!(w.eval(0.0), 0.0);
        assert_eq!(w.eval(5.0), 1.0);
        assert_eq!(w.eval(14.999), 1.0);
        assert_eq!(w.eval(15.0), 0.0);
        assert_eq!(w.eval(25.0), 1.0);
        assert!(square_wave(0.0, 0.5, 0.0, 0.0, 1.0, Codomain::Unit).is_err());
        assert!(square_wave(1.0, 1.0, 0.0, 0.0, 1.0, Codomain::Unit).is_err());
        assert!(square_wave(1.0, 0.5, 0.0, 0.0, 0.5, Codomain::Binary).is_err());
    }

    #[test]
    fn gates() {
        assert!(SwitchingSignal::always_on().is_on(3.0));
        assert!(!SwitchingSignal::always_off().is_on(3.0));
        assert!(SwitchingSignal::constant(0.5, Codomain::Binary).is_err());
    }
}
