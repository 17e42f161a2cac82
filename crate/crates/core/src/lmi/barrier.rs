//! Log-det barrier method for small affine LMI systems.
//!
//! A system is a list of blocks `F_b(x) = F_b0 + Σ_j x_j F_bj`, each required
//! to be positive definite. [`BarrierSolver::center`] minimizes
//! `s·cᵀx − Σ_b log det F_b(x)` by damped Newton steps;
//! [`BarrierSolver::path_follow`] drives `s` upward to approach the minimum of
//! `cᵀx` over the feasible set.

use crate::smallmat::{Cholesky, Matrix, SymMatrix};

/// One affine matrix constraint `F0 + Σ x_j F_j ≻ 0`.
#[derive(Clone, Debug)]
pub struct AffineBlock {
    pub constant: Matrix,
    /// One coefficient per variable; `None` when the variable does not enter.
    pub coefficients: Vec<Option<Matrix>>,
}

impl AffineBlock {
    pub fn order(&self) -> usize {
        self.constant.rows()
    }

    pub fn eval(&self, x: &[f64]) -> SymMatrix {
        let mut m = self.constant.clone();
        for (xj, fj) in x.iter().zip(&self.coefficients) {
            if let Some(fj) = fj {
                m = &m + &fj.scale(*xj);
            }
        }
        SymMatrix::from_matrix(&m).expect("square block")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BarrierOptions {
    /// Total Newton iterations allowed across all centering passes.
    pub max_newton: usize,
    /// Cap on Newton iterations within one centering pass.
    pub max_newton_per_center: usize,
    /// Centering stops once the Newton decrement λ²/2 falls below this.
    pub newton_tol: f64,
    /// Path following stops once the duality-gap bound `rows / s` drops below this.
    pub gap_tol: f64,
    pub s_initial: f64,
    pub s_growth: f64,
    /// Stops the outer loop when the objective improves by less than this.
    pub min_improvement: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            max_newton: 10_000,
            max_newton_per_center: 200,
            newton_tol: 1e-10,
            gap_tol: 1e-8,
            s_initial: 1.0,
            s_growth: 10.0,
            min_improvement: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BarrierOutcome {
    pub x: Vec<f64>,
    pub newton_iterations: usize,
    /// False when the iteration budget ran out before the stopping test.
    pub converged: bool,
}

pub struct BarrierSolver {
    blocks: Vec<AffineBlock>,
    objective: Vec<f64>,
    options: BarrierOptions,
    newton_used: usize,
}

struct Local {
    value: f64,
    grad: Vec<f64>,
    hess: Matrix,
}

impl BarrierSolver {
    pub fn new(blocks: Vec<AffineBlock>, objective: Vec<f64>, options: BarrierOptions) -> Self {
        debug_assert!(blocks
            .iter()
            .all(|b| b.coefficients.len() == objective.len()));
        Self {
            blocks,
            objective,
            options,
            newton_used: 0,
        }
    }

    fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(AffineBlock::order).sum()
    }

    pub fn is_strictly_feasible(&self, x: &[f64]) -> bool {
        self.blocks
            .iter()
            .all(|b| Cholesky::factor(&b.eval(x)).is_some())
    }

    /// Barrier value, or `None` outside the interior.
    fn value(&self, s: f64, x: &[f64]) -> Option<f64> {
        let mut v = s * dot(&self.objective, x);
        for b in &self.blocks {
            v -= Cholesky::factor(&b.eval(x))?.log_det();
        }
        Some(v)
    }

    fn local(&self, s: f64, x: &[f64]) -> Option<Local> {
        let n = self.dim();
        let mut value = s * dot(&self.objective, x);
        let mut grad: Vec<f64> = self.objective.iter().map(|c| s * c).collect();
        let mut hess = Matrix::zeros(n, n);

        for b in &self.blocks {
            let chol = Cholesky::factor(&b.eval(x))?;
            value -= chol.log_det();
            let w = chol.inverse();
            // G_j = W F_j; grad_j −= tr G_j; H_jk += tr(G_j G_k).
            let g: Vec<Option<Matrix>> = b
                .coefficients
                .iter()
                .map(|f| f.as_ref().map(|f| w.as_matrix() * f))
                .collect();
            for j in 0..n {
                let Some(gj) = &g[j] else { continue };
                grad[j] -= gj.trace();
                for k in j..n {
                    let Some(gk) = &g[k] else { continue };
                    let order = gj.rows();
                    let mut tr = 0.0;
                    for p in 0..order {
                        for q in 0..order {
                            tr += gj[(p, q)] * gk[(q, p)];
                        }
                    }
                    hess[(j, k)] += tr;
                    if k != j {
                        hess[(k, j)] += tr;
                    }
                }
            }
        }
        Some(Local { value, grad, hess })
    }

    fn newton_direction(hess: &Matrix, grad: &[f64]) -> Vec<f64> {
        let n = grad.len();
        let scale = (0..n)
            .map(|i| hess[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut ridge = 0.0;
        loop {
            let mut h = hess.clone();
            for i in 0..n {
                h[(i, i)] += ridge;
            }
            if let Some(c) = SymMatrix::from_matrix(&h)
                .ok()
                .and_then(|h| Cholesky::factor(&h))
            {
                let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
                return c.solve(&neg);
            }
            ridge = if ridge == 0.0 {
                1e-14 * scale
            } else {
                ridge * 10.0
            };
        }
    }

    /// Damped Newton minimization of the barrier at fixed `s`, from a strictly
    /// feasible `x`. Returns false if the iteration budget is exhausted.
    pub fn center(&mut self, s: f64, x: &mut Vec<f64>) -> bool {
        let mut passes = 0;
        while self.newton_used < self.options.max_newton {
            if passes == self.options.max_newton_per_center {
                // Stalled near a badly conditioned boundary; accept the point.
                return true;
            }
            passes += 1;
            let Some(local) = self.local(s, x) else {
                return false;
            };
            let dx = Self::newton_direction(&local.hess, &local.grad);
            let slope = dot(&local.grad, &dx);
            if -slope / 2.0 <= self.options.newton_tol {
                return true;
            }
            self.newton_used += 1;

            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-16 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
                if let Some(v) = self.value(s, &trial) {
                    if v <= local.value + 0.25 * step * slope {
                        *x = trial;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                // No progress possible at working precision.
                return true;
            }
        }
        false
    }

    /// Follows the central path from a strictly feasible `x0`.
    ///
    /// After each centering pass `stop(objective, gap)` is consulted, where
    /// `gap = rows / s` bounds how far the objective is above the true
    /// minimum.
    pub fn path_follow(
        &mut self,
        x0: Vec<f64>,
        mut stop: impl FnMut(f64, f64) -> bool,
    ) -> BarrierOutcome {
        let mut x = x0;
        let mut s = self.options.s_initial;
        let rows = self.total_rows() as f64;
        let mut last = f64::INFINITY;
        let mut converged = false;
        loop {
            if !self.center(s, &mut x) {
                break;
            }
            let obj = dot(&self.objective, &x);
            let gap = rows / s;
            if gap < self.options.gap_tol
                || (last - obj).abs() < self.options.min_improvement
                || stop(obj, gap)
            {
                converged = true;
                break;
            }
            last = obj;
            s *= self.options.s_growth;
        }
        BarrierOutcome {
            x,
            newton_iterations: self.newton_used,
            converged,
        }
    }

    /// Analytic center of the feasible set (requires a bounded set).
    pub fn analytic_center(&mut self, x0: Vec<f64>) -> BarrierOutcome {
        let mut x = x0;
        let converged = self.center(0.0, &mut x);
        BarrierOutcome {
            x,
            newton_iterations: self.newton_used,
            converged,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
