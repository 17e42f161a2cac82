//! Synchronization of switched unified chaotic systems with one global
//! controller.
//!
//! A master and a slave copy of the unified chaotic system share a switching
//! key parameter α(t). The slave's controller cancels the bilinear terms of the
//! error dynamics and adds a linear feedback `B·K·e`, whose gain comes from a
//! common quadratic Lyapunov function over the 32-vertex polytope that covers
//! every α ∈ [0, 1]. The same `K` then synchronizes the pair for any switching
//! law.
//!
//! * [`smallmat`]: small dense linear algebra.
//! * [`system`] and [`integrate`]: the dynamics, the controller and RK4.
//! * [`signals`]: piecewise-constant switching laws.
//! * [`polytope`]: interval vertices of `Ã(α)`.
//! * [`lmi`]: LMI synthesis, gain recovery and certificate checks.
//! * [`experiments`]: scenario presets, simulation runs and their outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN.

pub mod error;
pub mod experiments;
pub mod integrate;
pub mod lmi;
pub mod polytope;
pub mod signals;
pub mod smallmat;
pub mod system;
pub mod textio;

pub use error::{Error, Result};
pub use lmi::{
    assemble_lmi, lyapunov_value, recover_gains, solve_feasibility, verify_certificate,
    CertificateFile, GainCertificate, LmiProblem, Verification,
};
pub use polytope::{convex_combination, ConvexWeights, EntryInterval, VertexSet};
pub use signals::SwitchingSignal;
pub use smallmat::{Matrix, SymMatrix};
pub use system::{Alpha, ControlInput, DistributionMatrix, ErrorVec, Feedback, GainRow, State3};
