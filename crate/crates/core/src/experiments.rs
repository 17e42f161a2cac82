//! Scenario presets, simulation runs and their output files.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrate::{Rk4, DEFAULT_DT};
use crate::lmi::{lyapunov_value, CertificateFile, GainCertificate};
use crate::signals::{
    chirp_source, random_source, sampled_hold, sine_source, square_wave, step_schedule, Codomain,
    SwitchingSignal,
};
use crate::smallmat::{lambda_max, SymMatrix};
use crate::system::{coupled_rhs, sync_error_norm, Alpha, ErrorVec, Feedback, State3};
use crate::textio::{format_real, to_json_string};

pub const DEFAULT_T_END: f64 = 30.0;
pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_SYNC_THRESHOLD: f64 = 1e-2;
/// Relative per-step growth of V tolerated before a step counts as a violation.
pub const LYAPUNOV_REL_TOL: f64 = 1e-6;

pub const DEFAULT_MASTER_IC: State3 = State3::new(15.0, 20.0, 10.0);
pub const DEFAULT_SLAVE_IC: State3 = State3::new(25.0, -5.0, 15.0);

/// Half-width of the box random initial conditions are drawn from.
pub const RANDOM_IC_HALF_WIDTH: f64 = 30.0;

pub const CSV_HEADER: &str = "t,x_m,y_m,z_m,x_s,y_s,z_s,e1,e2,e3,e_norm,alpha,gate";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Step,
    Sine,
    Chirp,
    Random,
    RandomIc,
    Onoff,
    None,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::Step,
        ScenarioName::Sine,
        ScenarioName::Chirp,
        ScenarioName::Random,
        ScenarioName::RandomIc,
        ScenarioName::Onoff,
        ScenarioName::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Step => "step",
            ScenarioName::Sine => "sine",
            ScenarioName::Chirp => "chirp",
            ScenarioName::Random => "random",
            ScenarioName::RandomIc => "random-ic",
            ScenarioName::Onoff => "onoff",
            ScenarioName::None => "none",
        }
    }

    /// Default hold time for the sampled presets.
    pub fn default_sample_time(self) -> Option<f64> {
        match self {
            ScenarioName::Sine | ScenarioName::RandomIc => Some(0.25),
            ScenarioName::Chirp | ScenarioName::Random => Some(0.1),
            _ => None,
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .map_or_else(|| invalid(format!("unknown scenario {s:?}")), Ok)
    }
}

/// Everything needed to reproduce one synchronization run.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    pub alpha: SwitchingSignal,
    pub gate: SwitchingSignal,
    pub master0: State3,
    pub slave0: State3,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Keep every `stride`-th step in the trajectory.
    pub stride: usize,
    pub sync_threshold: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return invalid(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.stride == 0 {
            return invalid("stride must be at least 1");
        }
        if !self.master0.is_finite() || !self.slave0.is_finite() {
            return invalid("initial conditions must be finite");
        }
        if self.alpha.codomain() != Codomain::Unit {
            return invalid("alpha signal must have codomain [0, 1]");
        }
        if self.gate.codomain() != Codomain::Binary {
            return invalid("gate signal must have codomain {0, 1}");
        }
        Ok(())
    }

    /// Replaces the gate with one that is always off.
    pub fn without_control(mut self) -> Self {
        self.gate = SwitchingSignal::always_off();
        self
    }
}

/// Knobs applied on top of a preset.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetOptions {
    pub seed: u64,
    /// Overrides the hold time of sampled presets.
    pub sample_time: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            sample_time: None,
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            stride: DEFAULT_STRIDE,
        }
    }
}

/// Draws master and slave initial conditions uniformly from [−30, 30]³.
pub fn random_initial_conditions(seed: u64) -> (State3, State3) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Stream 0 feeds the α draws of the same seed.
    rng.set_stream(1);
    let mut draw = || {
        State3::new(
            rng.gen_range(-RANDOM_IC_HALF_WIDTH..RANDOM_IC_HALF_WIDTH),
            rng.gen_range(-RANDOM_IC_HALF_WIDTH..RANDOM_IC_HALF_WIDTH),
            rng.gen_range(-RANDOM_IC_HALF_WIDTH..RANDOM_IC_HALF_WIDTH),
        )
    };
    let master = draw();
    let slave = draw();
    (master, slave)
}

/// Builds a named preset with custom options.
pub fn build_preset(name: ScenarioName, opts: &PresetOptions) -> Result<Scenario> {
    let ts = opts.sample_time.or(name.default_sample_time());
    let ts_val = ts.unwrap_or(f64::NAN);
    let mut gate = SwitchingSignal::always_on();
    let (mut master0, mut slave0) = (DEFAULT_MASTER_IC, DEFAULT_SLAVE_IC);

    let alpha = match name {
        ScenarioName::Step => step_schedule(vec![(0.0, 0.0), (10.0, 0.8), (20.0, 1.0)])?,
        ScenarioName::Sine => sampled_hold(sine_source(1.0, 0.5, 0.5)?, ts_val)?,
        ScenarioName::Chirp => sampled_hold(chirp_source(0.1, 1.0, 30.0)?, ts_val)?,
        ScenarioName::Random => random_source(opts.seed, ts_val, 0.0, 1.0)?,
        ScenarioName::RandomIc => {
            (master0, slave0) = random_initial_conditions(opts.seed);
            random_source(opts.seed, ts_val, 0.0, 1.0)?
        }
        ScenarioName::Onoff => {
            gate = square_wave(10.0, 0.5, 5.0, 0.0, 1.0, Codomain::Binary)?;
            square_wave(20.0, 0.5, 5.0, 0.0, 1.0, Codomain::Unit)?
        }
        ScenarioName::None => SwitchingSignal::constant(0.0, Codomain::Unit)?,
    };

    let scenario = Scenario {
        name,
        alpha,
        gate,
        master0,
        slave0,
        dt: opts.dt,
        t_end: opts.t_end,
        seed: opts.seed,
        stride: opts.stride,
        sync_threshold: DEFAULT_SYNC_THRESHOLD,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// A preset with default options.
pub fn scenario_presets(name: &str) -> Result<Scenario> {
    build_preset(name.parse()?, &PresetOptions::default())
}

/// Gain and Lyapunov matrix of a certificate that has passed verification.
#[derive(Clone, Debug)]
pub struct Controller {
    pub feedback: Feedback,
    pub p: SymMatrix,
}

impl Controller {
    pub fn from_certificate(cert: &GainCertificate) -> Self {
        Self {
            feedback: cert.feedback(),
            p: cert.p.clone(),
        }
    }

    /// Loads a certificate file, refusing it unless it re-verifies.
    pub fn from_file(file: &CertificateFile) -> Result<Self> {
        let check = file.verify(0)?;
        if !check.passed() {
            return invalid(format!(
                "certificate does not verify (min eig(P) = {:.3e}, worst margin = {:.3e})",
                check.vertices.p_min_eig(),
                check.vertices.worst_margin()
            ));
        }
        Ok(Self {
            feedback: file.feedback()?,
            p: file.p_matrix()?,
        })
    }
}

/// One simulation sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub master: State3,
    pub slave: State3,
    pub e: ErrorVec,
    pub e_norm: f64,
    pub alpha: f64,
    pub gate: bool,
}

impl TrajectoryRecord {
    fn new(t: f64, master: State3, slave: State3, alpha: f64, gate: bool) -> Self {
        let e = ErrorVec::between(master, slave);
        Self {
            t,
            master,
            slave,
            e,
            e_norm: sync_error_norm(e),
            alpha,
            gate,
        }
    }

    pub fn csv_line(&self) -> String {
        let reals = [
            self.t,
            self.master.x,
            self.master.y,
            self.master.z,
            self.slave.x,
            self.slave.y,
            self.slave.z,
            self.e.e1,
            self.e.e2,
            self.e.e3,
            self.e_norm,
            self.alpha,
        ];
        let mut line = reals.map(format_real).join(",");
        line.push_str(if self.gate { ",1" } else { ",0" });
        line
    }
}

/// Summary numbers of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// First step time after which `e_norm` stays below the threshold to the end.
    pub time_to_sync: Option<f64>,
    pub max_error_after_sync: Option<f64>,
    pub final_error: f64,
    /// Gated-on steps where V grew beyond the tolerance.
    pub lyapunov_violations: usize,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    pub sync_threshold: f64,
    pub steps: usize,
}

impl RunMetrics {
    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    pub records: Vec<TrajectoryRecord>,
    pub metrics: RunMetrics,
}

impl Run {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_csv(&self.records, &mut out)
    }
}

pub fn write_csv<W: Write>(records: &[TrajectoryRecord], out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Slack on V growth that covers rounding in `slave − master` once the error
/// reaches the floating-point resolution of the states.
pub fn lyapunov_roundoff_floor(p: &SymMatrix, master: State3, slave: State3) -> f64 {
    let scale = master
        .to_array()
        .into_iter()
        .chain(slave.to_array())
        .fold(1.0, |acc: f64, v| acc.max(v.abs()));
    let resolution = 16.0 * f64::EPSILON * scale;
    3.0 * lambda_max(p) * resolution * resolution
}

/// True when `v_next` does not exceed `v_prev` beyond the relative tolerance
/// and the rounding floor.
pub fn lyapunov_step_ok(v_prev: f64, v_next: f64, floor: f64) -> bool {
    v_next <= v_prev * (1.0 + LYAPUNOV_REL_TOL) + floor
}

/// Simulates master and slave under the scenario's α and gate signals.
///
/// α and the gate are sampled at the start of each RK4 step. A blow-up ends
/// the run early with `diverged` set; the samples up to that point are kept.
pub fn run_scenario(scenario: &Scenario, controller: &Controller) -> Result<Run> {
    scenario.validate()?;
    let rk4 = Rk4::with_dt(scenario.dt);
    let (n_full, rem) = rk4.step_plan(0.0, scenario.t_end);
    let last_step = n_full + usize::from(rem > 0.0);

    let alpha_at = |t: f64| Alpha::new(scenario.alpha.eval(t));
    // Validate the whole α path up front so the RHS can stay infallible.
    for k in 0..=last_step {
        alpha_at(k as f64 * scenario.dt)?;
    }

    let rhs = |st: crate::integrate::StageTime, w: &[f64; 6]| -> [f64; 6] {
        let alpha = alpha_at(st.step_start).expect("checked above");
        let gate = scenario.gate.is_on(st.step_start);
        let master = State3::new(w[0], w[1], w[2]);
        let slave = State3::new(w[3], w[4], w[5]);
        let (dm, ds) = coupled_rhs(alpha, master, slave, &controller.feedback, gate);
        [dm.x, dm.y, dm.z, ds.x, ds.y, ds.z]
    };

    let threshold = scenario.sync_threshold;
    let mut records = Vec::with_capacity(last_step / scenario.stride + 2);
    let mut errors: Vec<(f64, f64)> = Vec::with_capacity(last_step + 1);
    let mut violations = 0;
    let mut prev: Option<(f64, bool)> = None;

    let observer = |k: usize, t: f64, w: &[f64; 6]| {
        let master = State3::new(w[0], w[1], w[2]);
        let slave = State3::new(w[3], w[4], w[5]);
        let gate = scenario.gate.is_on(t);
        let e = ErrorVec::between(master, slave);
        let v = lyapunov_value(&controller.p, e);
        if let Some((v_prev, gate_prev)) = prev {
            let floor = lyapunov_roundoff_floor(&controller.p, master, slave);
            if gate_prev && !lyapunov_step_ok(v_prev, v, floor) {
                violations += 1;
            }
        }
        prev = Some((v, gate));
        errors.push((t, sync_error_norm(e)));
        if k.is_multiple_of(scenario.stride) || k == last_step {
            records.push(TrajectoryRecord::new(
                t,
                master,
                slave,
                scenario.alpha.eval(t),
                gate,
            ));
        }
    };

    let w0 = [
        scenario.master0.x,
        scenario.master0.y,
        scenario.master0.z,
        scenario.slave0.x,
        scenario.slave0.y,
        scenario.slave0.z,
    ];
    let outcome = rk4.integrate(rhs, w0, 0.0, scenario.t_end, observer);
    let divergence_time = match outcome {
        Ok(_) => None,
        Err(Error::Divergence { time }) => Some(time),
        Err(e) => return Err(e),
    };

    let diverged = divergence_time.is_some();
    let (time_to_sync, max_error_after_sync) = if diverged {
        (None, None)
    } else {
        sync_summary(&errors, threshold)
    };
    let metrics = RunMetrics {
        time_to_sync,
        max_error_after_sync,
        final_error: errors.last().map_or(f64::NAN, |e| e.1),
        lyapunov_violations: violations,
        diverged,
        divergence_time,
        sync_threshold: threshold,
        steps: errors.len().saturating_sub(1),
    };
    Ok(Run { records, metrics })
}

/// First time after which every error stays below `threshold`, and the
/// largest error from then on.
pub fn sync_summary(errors: &[(f64, f64)], threshold: f64) -> (Option<f64>, Option<f64>) {
    let below_from = errors
        .iter()
        .rposition(|&(_, e)| !(e < threshold))
        .map_or(0, |i| i + 1);
    if below_from >= errors.len() {
        return (None, None);
    }
    let max_after = errors[below_from..].iter().map(|e| e.1).fold(0.0, f64::max);
    (Some(errors[below_from].0), Some(max_after))
}
