//! The unified chaotic family, master/slave coupling and the synchronizing
//! controller.
//!
//! The family is
//!
//! ```text
//! ẋ = (25α + 10)(y − x)
//! ẏ = (28 − 35α)x + (29α − 1)y − xz
//! ż = xy − ((α + 8)/3) z
//! ```
//!
//! with α = 0 giving Lorenz, α = 0.8 Lü and α = 1 Chen. The controller splits
//! into a part that cancels the bilinear terms of the error dynamics and a
//! linear state feedback `B·K·e` designed by [`crate::lmi`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::smallmat::Matrix;

const ALPHA_CLAMP_BAND: f64 = 1e-12;

/// The key parameter α ∈ [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const LORENZ: Alpha = Alpha(0.0);
    pub const LU: Alpha = Alpha(0.8);
    pub const CHEN: Alpha = Alpha(1.0);

    /// Values within 1e-12 outside [0, 1] are clamped, anything further is
    /// rejected.
    pub fn new(value: f64) -> Result<Self> {
        if !(-ALPHA_CLAMP_BAND..=1.0 + ALPHA_CLAMP_BAND).contains(&value) {
            return invalid(format!("alpha {value} outside [0, 1]"));
        }
        Ok(Self(value.clamp(0.0, 1.0)))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// A point of one system's state space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State3 {
    pub const ZERO: State3 = State3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Synchronization error `slave − master`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorVec {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl ErrorVec {
    pub const ZERO: ErrorVec = ErrorVec::new(0.0, 0.0, 0.0);

    pub const fn new(e1: f64, e2: f64, e3: f64) -> Self {
        Self { e1, e2, e3 }
    }

    pub fn between(master: State3, slave: State3) -> Self {
        Self {
            e1: slave.x - master.x,
            e2: slave.y - master.y,
            e3: slave.z - master.z,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.e1, self.e2, self.e3]
    }

    pub fn from_array([e1, e2, e3]: [f64; 3]) -> Self {
        Self { e1, e2, e3 }
    }
}

/// Euclidean norm of the synchronization error.
pub fn sync_error_norm(e: ErrorVec) -> f64 {
    (e.e1 * e.e1 + e.e2 * e.e2 + e.e3 * e.e3).sqrt()
}

/// Row gain `K = [k1 k2 k3]` for the default single-input distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainRow {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl GainRow {
    pub const fn new(k1: f64, k2: f64, k3: f64) -> Self {
        Self { k1, k2, k3 }
    }

    pub fn to_matrix(self) -> Matrix {
        Matrix::from_rows(&[[self.k1, self.k2, self.k3]])
    }
}

/// How the linear feedback is distributed over the three error channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionMatrix {
    /// `B = [1 1 1]ᵀ`: every channel receives the scalar `K·e`.
    #[default]
    Ones,
    /// `B = I₃` with a full 3×3 gain.
    Identity,
}

impl DistributionMatrix {
    /// Number of inputs `m` (columns of B, rows of K).
    pub fn inputs(self) -> usize {
        match self {
            DistributionMatrix::Ones => 1,
            DistributionMatrix::Identity => 3,
        }
    }

    pub fn matrix(self) -> Matrix {
        match self {
            DistributionMatrix::Ones => Matrix::from_rows(&[[1.0], [1.0], [1.0]]),
            DistributionMatrix::Identity => Matrix::identity(3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistributionMatrix::Ones => "ones",
            DistributionMatrix::Identity => "identity",
        }
    }
}

impl std::str::FromStr for DistributionMatrix {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ones" => Ok(Self::Ones),
            "identity" => Ok(Self::Identity),
            other => invalid(format!("unknown distribution matrix {other:?}")),
        }
    }
}

/// Linear feedback `u_lin = B·K·e`, with K of shape m×3.
#[derive(Clone, Debug, PartialEq)]
pub struct Feedback {
    b: DistributionMatrix,
    k: Matrix,
}

impl Feedback {
    pub fn new(b: DistributionMatrix, k: Matrix) -> Result<Self> {
        if k.rows() != b.inputs() || k.cols() != 3 {
            return invalid(format!(
                "gain must be {}x3 for B = {}, got {}x{}",
                b.inputs(),
                b.name(),
                k.rows(),
                k.cols()
            ));
        }
        Ok(Self { b, k })
    }

    pub fn row(k: GainRow) -> Self {
        Self {
            b: DistributionMatrix::Ones,
            k: k.to_matrix(),
        }
    }

    pub fn zero(b: DistributionMatrix) -> Self {
        Self {
            b,
            k: Matrix::zeros(b.inputs(), 3),
        }
    }

    pub fn distribution(&self) -> DistributionMatrix {
        self.b
    }

    pub fn gain(&self) -> &Matrix {
        &self.k
    }

    /// The 3×3 matrix `B·K`.
    pub fn closed_loop_term(&self) -> Matrix {
        &self.b.matrix() * &self.k
    }

    /// `B·K·e`.
    pub fn apply(&self, e: ErrorVec) -> [f64; 3] {
        let ke = self.k.mul_vec(&e.to_array());
        match self.b {
            DistributionMatrix::Ones => [ke[0]; 3],
            DistributionMatrix::Identity => [ke[0], ke[1], ke[2]],
        }
    }
}

/// Control input applied to the slave.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControlInput {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput {
        u1: 0.0,
        u2: 0.0,
        u3: 0.0,
    };
}

struct Coefficients {
    a: f64,
    c: f64,
    d: f64,
    b: f64,
}

#[inline]
fn coefficients(alpha: Alpha) -> Coefficients {
    let al = alpha.value();
    Coefficients {
        a: 25.0 * al + 10.0,
        c: 28.0 - 35.0 * al,
        d: 29.0 * al - 1.0,
        b: (al + 8.0) / 3.0,
    }
}

/// Vector field of the unified system.
pub fn drift(alpha: Alpha, s: State3) -> State3 {
    let Coefficients { a, c, d, b } = coefficients(alpha);
    State3 {
        x: a * (s.y - s.x),
        y: c * s.x + d * s.y - s.x * s.z,
        z: s.x * s.y - b * s.z,
    }
}

/// Linear part of the error dynamics left after the nonlinear cancellation.
pub fn a_tilde(alpha: Alpha) -> Matrix {
    let Coefficients { a, c, d, b } = coefficients(alpha);
    Matrix::from_rows(&[[-a, a, 0.0], [c, d, 0.0], [0.0, 0.0, -b]])
}

/// State-dependent matrix `A` with `ė = A·e + u`.
pub fn error_matrix(alpha: Alpha, z_m: f64, x_s: f64, y_m: f64) -> Matrix {
    let Coefficients { a, c, d, b } = coefficients(alpha);
    Matrix::from_rows(&[[-a, a, 0.0], [c - z_m, d, -x_s], [y_m, x_s, -b]])
}

/// Nonlinear cancellation plus linear feedback. Zero whenever `gate` is off.
pub fn control_law(feedback: &Feedback, master: State3, slave: State3, gate: bool) -> ControlInput {
    if !gate {
        return ControlInput::ZERO;
    }
    let e = ErrorVec::between(master, slave);
    let lin = feedback.apply(e);
    ControlInput {
        u1: lin[0],
        u2: master.z * e.e1 + slave.x * e.e3 + lin[1],
        u3: -master.y * e.e1 - slave.x * e.e2 + lin[2],
    }
}

/// Derivatives of the master and of the controlled slave.
pub fn coupled_rhs(
    alpha: Alpha,
    master: State3,
    slave: State3,
    feedback: &Feedback,
    gate: bool,
) -> (State3, State3) {
    let dm = drift(alpha, master);
    let ds = drift(alpha, slave);
    let u = control_law(feedback, master, slave, gate);
    (
        dm,
        State3 {
            x: ds.x + u.u1,
            y: ds.y + u.u2,
            z: ds.z + u.u3,
        },
    )
}

/// `(Ã(α) + B·K)·e`, the error dynamics with the controller engaged.
pub fn closed_loop_error_rhs(alpha: Alpha, e: ErrorVec, feedback: &Feedback) -> ErrorVec {
    let lin = a_tilde(alpha).mul_vec(&e.to_array());
    let fb = feedback.apply(e);
    ErrorVec::new(lin[0] + fb[0], lin[1] + fb[1], lin[2] + fb[2])
}
