//! Fixtures shared by the benchmarks under `benches/`.

use chaosync::experiments::{build_preset, Controller, PresetOptions, Scenario, ScenarioName};
use chaosync::system::{DistributionMatrix, Feedback, GainRow};
use chaosync::{LmiProblem, Matrix, SymMatrix};

/// A well-conditioned symmetric matrix of the given order.
pub fn sym_fixture(n: usize) -> SymMatrix {
    let data = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                (n + i) as f64
            } else {
                1.0 / (1.0 + i as f64 + j as f64)
            }
        })
        .collect();
    SymMatrix::from_matrix(&Matrix::new(n, n, data).expect("square")).expect("symmetric")
}

pub fn full_problem() -> LmiProblem {
    LmiProblem::full(DistributionMatrix::Ones)
}

/// A stabilizing controller that needs no synthesis.
pub fn fixed_controller() -> Controller {
    Controller {
        feedback: Feedback::row(GainRow::new(-28.3433, -543.0217, 1.0950)),
        p: SymMatrix::from_rows(&[
            [27.2002, 28.9674, -0.5062],
            [28.9674, 779.2615, 0.0738],
            [-0.5062, 0.0738, 1.7481],
        ]),
    }
}

/// A preset shortened to `t_end` seconds.
pub fn short_scenario(name: ScenarioName, t_end: f64) -> Scenario {
    build_preset(
        name,
        &PresetOptions {
            t_end,
            ..Default::default()
        },
    )
    .expect("valid preset")
}
