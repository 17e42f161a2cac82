//! Fixed-step classical Runge–Kutta integration.

use crate::error::{invalid, Error, Result};

/// Default step size for the synchronization runs, in seconds.
pub const DEFAULT_DT: f64 = 1e-3;

/// Magnitude beyond which a state component is treated as a blow-up.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e6;

/// Time information handed to the right-hand side at every RK4 stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageTime {
    /// Time of the stage being evaluated.
    pub t: f64,
    /// Start of the step the stage belongs to. Piecewise-constant inputs are
    /// sampled here so they stay fixed across the four stages.
    pub step_start: f64,
}

/// Fixed-step RK4 integrator configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rk4 {
    pub dt: f64,
    pub blowup_bound: f64,
}

impl Default for Rk4 {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
        }
    }
}

impl Rk4 {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    /// Number of full steps and the length of the trailing partial step.
    pub fn step_plan(&self, t0: f64, t_end: f64) -> (usize, f64) {
        let span = t_end - t0;
        let n_full = (span / self.dt + 1e-9).floor() as usize;
        let rem = span - n_full as f64 * self.dt;
        let rem = if rem > 1e-12 * self.dt.max(t_end.abs()) {
            rem
        } else {
            0.0
        };
        (n_full, rem)
    }

    /// Integrates from `t0` to `t_end`.
    ///
    /// `observer(k, t, state)` runs at `t0` (k = 0) and after every accepted
    /// step. A step that produces a non-finite component, or one larger than
    /// `blowup_bound`, aborts with [`Error::Divergence`].
    pub fn integrate<const N: usize, F, O>(
        &self,
        mut rhs: F,
        initial: [f64; N],
        t0: f64,
        t_end: f64,
        mut observer: O,
    ) -> Result<[f64; N]>
    where
        F: FnMut(StageTime, &[f64; N]) -> [f64; N],
        O: FnMut(usize, f64, &[f64; N]),
    {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("step size must be positive, got {}", self.dt));
        }
        if !(t_end >= t0) {
            return invalid(format!("t_end {t_end} precedes t0 {t0}"));
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return invalid("initial state is not finite");
        }

        let (n_full, rem) = self.step_plan(t0, t_end);
        let mut y = initial;
        observer(0, t0, &y);

        let steps = (0..n_full)
            .map(|k| (t0 + k as f64 * self.dt, self.dt))
            .chain((rem > 0.0).then_some((t0 + n_full as f64 * self.dt, rem)));

        for (k, (t, h)) in steps.enumerate() {
            y = rk4_step(&mut rhs, t, h, &y);
            let t_next = if k + 1 == n_full && rem == 0.0 || k == n_full {
                t_end
            } else {
                t0 + (k + 1) as f64 * self.dt
            };
            if y.iter()
                .any(|v| !v.is_finite() || v.abs() > self.blowup_bound)
            {
                return Err(Error::Divergence { time: t_next });
            }
            observer(k + 1, t_next, &y);
        }
        Ok(y)
    }
}

fn rk4_step<const N: usize, F>(rhs: &mut F, t: f64, h: f64, y: &[f64; N]) -> [f64; N]
where
    F: FnMut(StageTime, &[f64; N]) -> [f64; N],
{
    let at = |dt_frac: f64| StageTime {
        t: t + dt_frac * h,
        step_start: t,
    };
    let shifted = |k: &[f64; N], c: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + c * k[i]) };

    let k1 = rhs(at(0.0), y);
    let k2 = rhs(at(0.5), &shifted(&k1, 0.5 * h));
    let k3 = rhs(at(0.5), &shifted(&k2, 0.5 * h));
    let k4 = rhs(at(1.0), &shifted(&k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Convenience wrapper over [`Rk4::integrate`] with the default blow-up bound.
pub fn rk4_integrate<const N: usize, F, O>(
    rhs: F,
    initial: [f64; N],
    t0: f64,
    t_end: f64,
    dt: f64,
    observer: O,
) -> Result<[f64; N]>
where
    F: FnMut(StageTime, &[f64; N]) -> [f64; N],
    O: FnMut(usize, f64, &[f64; N]),
{
    Rk4::with_dt(dt).integrate(rhs, initial, t0, t_end, observer)
}
