//! Gain synthesis through a common quadratic Lyapunov function.
//!
//! A gain `K` and a matrix `P ≻ 0` certify synchronization under arbitrary
//! switching of α when
//!
//! ```text
//! (Ãᵢ + BK)ᵀP + P(Ãᵢ + BK) ≺ 0        for every vertex Ãᵢ.
//! ```
//!
//! This is bilinear in `(P, K)`. With `Y = P⁻¹` and `Ka = K·Y`, a congruence by
//! `Y` turns it into the LMIs
//!
//! ```text
//! ÃᵢY + YÃᵢᵀ + B·Ka + Kaᵀ·Bᵀ ≺ 0,     Y ≻ 0,
//! ```
//!
//! which [`solve_feasibility`] solves, after which `P = Y⁻¹` and `K = Ka·P` are
//! recovered and re-checked against the bilinear form.

mod barrier;
mod certificate;

pub use barrier::{AffineBlock, BarrierOptions, BarrierOutcome, BarrierSolver};
pub use certificate::{CertificateCheck, CertificateFile};

use crate::error::{invalid, Error, Result};
use crate::polytope::VertexSet;
use crate::smallmat::{
    invert, is_positive_definite, lambda_max, sym_eigenvalues, Matrix, SymMatrix,
};
use crate::system::{Alpha, DistributionMatrix, ErrorVec, Feedback};

pub const DEFAULT_EPS: f64 = 1e-3;
pub const DEFAULT_DELTA: f64 = 1e-3;

/// Bound on ‖Ka‖_F while searching with `trace(Y) = 1`.
pub const DEFAULT_GAIN_BOUND: f64 = 10.0;

/// Phase one stops once the optimal margin is known to this relative accuracy.
const CENTER_GAP_REL: f64 = 1e-2;

/// Optimal margins above this (in trace-normalized units) count as infeasible.
const FEASIBILITY_TOL: f64 = 1e-8;

/// Vertex matrices, input distribution and strictness margins.
#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub vertices: VertexSet,
    pub b: DistributionMatrix,
    /// Lower bound `Y ⪰ eps·I`.
    pub eps: f64,
    /// Strictness: every vertex LMI must satisfy `⪯ −delta·I`.
    pub delta: f64,
    /// α range the vertices were built from, when they come from the family.
    pub alpha_range: Option<(Alpha, Alpha)>,
    pub gain_bound: f64,
    pub barrier: BarrierOptions,
}

impl LmiProblem {
    pub fn new(vertices: VertexSet, b: DistributionMatrix, eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
            return invalid(format!(
                "eps and delta must be positive, got {eps}, {delta}"
            ));
        }
        if vertices.order() != 3 {
            return invalid(format!(
                "vertices must be 3x3, got order {}",
                vertices.order()
            ));
        }
        Ok(Self {
            vertices,
            b,
            eps,
            delta,
            alpha_range: None,
            gain_bound: DEFAULT_GAIN_BOUND,
            barrier: BarrierOptions::default(),
        })
    }

    /// The 32-vertex problem for α ∈ [alpha_lo, alpha_hi].
    pub fn for_alpha_range(
        alpha_lo: Alpha,
        alpha_hi: Alpha,
        b: DistributionMatrix,
        eps: f64,
        delta: f64,
    ) -> Result<Self> {
        let vertices = VertexSet::for_alpha_range(alpha_lo, alpha_hi)?;
        let mut p = Self::new(vertices, b, eps, delta)?;
        p.alpha_range = Some((alpha_lo, alpha_hi));
        Ok(p)
    }

    /// The full family α ∈ [0, 1] with default margins.
    pub fn full(b: DistributionMatrix) -> Self {
        Self::for_alpha_range(Alpha::LORENZ, Alpha::CHEN, b, DEFAULT_EPS, DEFAULT_DELTA)
            .expect("default problem is valid")
    }

    fn check_shapes(&self, y: &SymMatrix, ka: &Matrix) -> Result<()> {
        let n = self.vertices.order();
        if y.order() != n || ka.rows() != self.b.inputs() || ka.cols() != n {
            return invalid(format!(
                "Y must be {n}x{n} and Ka {}x{n}, got {}x{} and {}x{}",
                self.b.inputs(),
                y.order(),
                y.order(),
                ka.rows(),
                ka.cols()
            ));
        }
        Ok(())
    }
}

/// Left-hand sides `ÃᵢY + YÃᵢᵀ + B·Ka + KaᵀBᵀ`, one per vertex.
pub fn assemble_lmi(problem: &LmiProblem, y: &SymMatrix, ka: &Matrix) -> Result<Vec<SymMatrix>> {
    problem.check_shapes(y, ka)?;
    let bka = &problem.b.matrix() * ka;
    let bka_sym = &bka + &bka.transpose();
    problem
        .vertices
        .iter()
        .map(|a| {
            let ay = a * y.as_matrix();
            SymMatrix::from_matrix(&(&(&ay + &ay.transpose()) + &bka_sym))
        })
        .collect()
}

/// `P = Y⁻¹` (symmetrized) and `K = Ka·P`.
pub fn recover_gains(y: &SymMatrix, ka: &Matrix) -> Result<(SymMatrix, Matrix)> {
    if !is_positive_definite(y) {
        return invalid("Y is not positive definite");
    }
    if ka.cols() != y.order() {
        return invalid(format!(
            "Ka has {} columns, Y is {}x{}",
            ka.cols(),
            y.order(),
            y.order()
        ));
    }
    let p = SymMatrix::from_matrix(&invert(y.as_matrix())?)?;
    let k = ka * p.as_matrix();
    Ok((p, k))
}

/// Outcome of checking `(P, K)` against the bilinear vertex conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub p_eigenvalues: Vec<f64>,
    /// λ_max of `(Ãᵢ + BK)ᵀP + P(Ãᵢ + BK)` per vertex.
    pub bmi_margins: Vec<f64>,
}

impl Verification {
    pub fn p_min_eig(&self) -> f64 {
        self.p_eigenvalues[0]
    }

    pub fn worst_margin(&self) -> f64 {
        self.bmi_margins
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.p_min_eig() > 0.0 && self.bmi_margins.iter().all(|m| *m < 0.0)
    }
}

/// λ_max of the symmetrized `(A + BK)ᵀP + P(A + BK)`.
pub fn lyapunov_margin(p: &SymMatrix, closed_loop: &Matrix) -> f64 {
    let pa = p.as_matrix() * closed_loop;
    let lhs = SymMatrix::from_matrix(&(&pa + &pa.transpose())).expect("square");
    lambda_max(&lhs)
}

/// Checks `P ≻ 0` and the bilinear inequality at every vertex. Failing
/// certificates are reported, never rejected.
pub fn verify_certificate(
    p: &SymMatrix,
    k: &Matrix,
    b: DistributionMatrix,
    vertices: &VertexSet,
) -> Result<Verification> {
    let feedback = Feedback::new(b, k.clone())?;
    if p.order() != vertices.order() {
        return invalid("P and vertices differ in order");
    }
    let bk = feedback.closed_loop_term();
    let bmi_margins = vertices
        .iter()
        .map(|a| lyapunov_margin(p, &(a + &bk)))
        .collect();
    Ok(Verification {
        p_eigenvalues: sym_eigenvalues(p),
        bmi_margins,
    })
}

/// `V(e) = eᵀPe`.
pub fn lyapunov_value(p: &SymMatrix, e: ErrorVec) -> f64 {
    p.quadratic_form(&e.to_array())
}

/// A verified solution of the synthesis problem.
#[derive(Clone, Debug)]
pub struct GainCertificate {
    pub b: DistributionMatrix,
    pub alpha_range: Option<(Alpha, Alpha)>,
    pub eps: f64,
    pub delta: f64,
    pub y: SymMatrix,
    pub ka: Matrix,
    pub p: SymMatrix,
    pub k: Matrix,
    /// λ_max of each vertex LMI at `(Y, Ka)`.
    pub lmi_margins: Vec<f64>,
    pub bmi_margins: Vec<f64>,
    pub p_eigenvalues: Vec<f64>,
}

impl GainCertificate {
    pub fn p_min_eig(&self) -> f64 {
        self.p_eigenvalues[0]
    }

    pub fn feedback(&self) -> Feedback {
        Feedback::new(self.b, self.k.clone()).expect("certificate gain shape")
    }

    /// Builds a certificate from `(Y, Ka)` after checking the LMIs, the
    /// recovered bilinear condition and `P·Y = I`.
    pub fn from_lmi_solution(problem: &LmiProblem, y: SymMatrix, ka: Matrix) -> Result<Self> {
        let lmi_margins: Vec<f64> = assemble_lmi(problem, &y, &ka)?
            .iter()
            .map(lambda_max)
            .collect();
        let (p, k) = recover_gains(&y, &ka)?;
        let check = verify_certificate(&p, &k, problem.b, &problem.vertices)?;
        let worst_lmi = lmi_margins
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !check.passed() || worst_lmi >= 0.0 {
            return Err(Error::Infeasible {
                best_margin: worst_lmi.max(check.worst_margin()),
            });
        }
        let residual = (&(p.as_matrix() * y.as_matrix()) - &Matrix::identity(3)).max_abs();
        if residual > 1e-8 {
            return Err(Error::Singular {
                condition: residual / f64::EPSILON,
            });
        }
        Ok(Self {
            b: problem.b,
            alpha_range: problem.alpha_range,
            eps: problem.eps,
            delta: problem.delta,
            y,
            ka,
            p,
            k,
            lmi_margins,
            bmi_margins: check.bmi_margins,
            p_eigenvalues: check.p_eigenvalues,
        })
    }
}

/// Variable layout: the upper triangle of Y except its last diagonal entry
/// (fixed by `trace(Y) = 1`), then Ka row-major, then optionally the margin t.
struct Layout {
    n: usize,
    m: usize,
    y_basis: Vec<Matrix>,
    y_offset: Matrix,
    with_t: bool,
}

impl Layout {
    fn new(n: usize, m: usize, with_t: bool) -> Self {
        let mut y_offset = Matrix::zeros(n, n);
        y_offset[(n - 1, n - 1)] = 1.0;
        let mut y_basis = Vec::new();
        for i in 0..n {
            for j in i..n {
                if i == n - 1 && j == n - 1 {
                    continue;
                }
                let mut e = Matrix::zeros(n, n);
                if i == j {
                    e[(i, i)] = 1.0;
                    e[(n - 1, n - 1)] = -1.0;
                } else {
                    e[(i, j)] = 1.0;
                    e[(j, i)] = 1.0;
                }
                y_basis.push(e);
            }
        }
        Self {
            n,
            m,
            y_basis,
            y_offset,
            with_t,
        }
    }

    fn n_y(&self) -> usize {
        self.y_basis.len()
    }

    fn n_ka(&self) -> usize {
        self.n * self.m
    }

    fn dim(&self) -> usize {
        self.n_y() + self.n_ka() + usize::from(self.with_t)
    }

    fn ka_basis(&self, idx: usize) -> Matrix {
        let mut e = Matrix::zeros(self.m, self.n);
        e[(idx / self.n, idx % self.n)] = 1.0;
        e
    }

    fn y(&self, x: &[f64]) -> SymMatrix {
        let mut y = self.y_offset.clone();
        for (xj, e) in x.iter().zip(&self.y_basis) {
            y = &y + &e.scale(*xj);
        }
        SymMatrix::from_matrix(&y).expect("square")
    }

    fn ka(&self, x: &[f64]) -> Matrix {
        let start = self.n_y();
        Matrix::new(self.m, self.n, x[start..start + self.n_ka()].to_vec()).expect("finite")
    }

    /// Initial point `Y = I/n`, `Ka = 0`.
    fn start(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let mut idx = 0;
        for i in 0..self.n {
            for j in i..self.n {
                if i == self.n - 1 && j == self.n - 1 {
                    continue;
                }
                if i == j {
                    x[idx] = 1.0 / self.n as f64;
                }
                idx += 1;
            }
        }
        x
    }

    /// `margin·I − (ÃY + YÃᵀ + B·Ka + KaᵀBᵀ)` as an affine block. With a
    /// free margin variable, `margin` is ignored.
    fn vertex_block(&self, a: &Matrix, b: &Matrix, margin: f64) -> AffineBlock {
        let sym = |m: &Matrix| &(a * m) + &(m * &a.transpose());
        let mut constant = &Matrix::identity(self.n).scale(if self.with_t { 0.0 } else { margin })
            - &sym(&self.y_offset);
        constant = SymMatrix::from_matrix(&constant).unwrap().into_matrix();
        let mut coefficients: Vec<Option<Matrix>> =
            self.y_basis.iter().map(|e| Some(-&sym(e))).collect();
        for idx in 0..self.n_ka() {
            let bk = b * &self.ka_basis(idx);
            coefficients.push(Some(-&(&bk + &bk.transpose())));
        }
        if self.with_t {
            coefficients.push(Some(Matrix::identity(self.n)));
        }
        AffineBlock {
            constant,
            coefficients,
        }
    }

    /// `Y − eps·I`.
    fn y_block(&self, eps: f64) -> AffineBlock {
        let mut coefficients: Vec<Option<Matrix>> =
            self.y_basis.iter().cloned().map(Some).collect();
        coefficients.resize(self.dim(), None);
        AffineBlock {
            constant: &self.y_offset - &Matrix::identity(self.n).scale(eps),
            coefficients,
        }
    }

    /// `[[R, vec(Ka)ᵀ], [vec(Ka), R·I]] ≻ 0`, i.e. ‖Ka‖_F < R.
    fn gain_bound_block(&self, bound: f64) -> AffineBlock {
        let q = self.n_ka();
        let mut coefficients: Vec<Option<Matrix>> = vec![None; self.n_y()];
        for idx in 0..q {
            let mut e = Matrix::zeros(q + 1, q + 1);
            e[(0, idx + 1)] = 1.0;
            e[(idx + 1, 0)] = 1.0;
            coefficients.push(Some(e));
        }
        if self.with_t {
            coefficients.push(None);
        }
        AffineBlock {
            constant: Matrix::identity(q + 1).scale(bound),
            coefficients,
        }
    }

    fn blocks(&self, problem: &LmiProblem, eps: f64, margin: f64) -> Vec<AffineBlock> {
        let b = problem.b.matrix();
        let mut blocks: Vec<AffineBlock> = problem
            .vertices
            .iter()
            .map(|a| self.vertex_block(a, &b, margin))
            .collect();
        blocks.push(self.y_block(eps));
        blocks.push(self.gain_bound_block(problem.gain_bound));
        blocks
    }
}

/// Solves the vertex LMIs for `(Y, Ka)` and returns a verified certificate.
///
/// The search runs with `trace(Y) = 1`, `Y ⪰ eps·I` and `‖Ka‖_F < gain_bound`.
/// A barrier path first minimizes the worst vertex eigenvalue `t*`. If
/// `t* < 0`, the analytic center of the set where every vertex LMI is below
/// `t*/2` is taken as the solution, and the pair is scaled up until the
/// vertex LMIs clear `−delta`. The returned margins are recomputed from the
/// final matrices.
pub fn solve_feasibility(problem: &LmiProblem) -> Result<GainCertificate> {
    let n = problem.vertices.order();
    if problem.eps * n as f64 >= 1.0 {
        return invalid(format!(
            "eps = {} leaves no room under trace(Y) = 1 for order {n}",
            problem.eps
        ));
    }
    let m = problem.b.inputs();

    let layout = Layout::new(n, m, true);
    let mut x0 = layout.start();
    let t0 = assemble_lmi(problem, &layout.y(&x0), &layout.ka(&x0))?
        .iter()
        .map(lambda_max)
        .fold(f64::NEG_INFINITY, f64::max);
    *x0.last_mut().unwrap() = t0 + 1.0;

    let blocks = layout.blocks(problem, problem.eps, 0.0);
    let mut objective = vec![0.0; layout.dim()];
    *objective.last_mut().unwrap() = 1.0;
    let mut solver = BarrierSolver::new(blocks, objective, problem.barrier);
    // A point with t < 0 proves feasibility; a nonnegative lower bound
    // t − gap proves infeasibility.
    let outcome = solver.path_follow(x0, |t, gap| {
        t - gap >= 0.0 || (t < -FEASIBILITY_TOL && gap <= CENTER_GAP_REL * -t)
    });
    let best = *outcome.x.last().unwrap();
    if best >= -FEASIBILITY_TOL {
        return Err(Error::Infeasible { best_margin: best });
    }

    let target = 0.5 * best;
    let fixed = Layout::new(n, m, false);
    let mut center_opts = problem.barrier;
    center_opts.max_newton = problem
        .barrier
        .max_newton
        .saturating_sub(outcome.newton_iterations);
    let mut centering = BarrierSolver::new(
        fixed.blocks(problem, problem.eps, target),
        vec![0.0; fixed.dim()],
        center_opts,
    );
    let x_start = outcome.x[..fixed.dim()].to_vec();
    let x = if centering.is_strictly_feasible(&x_start) {
        centering.analytic_center(x_start).x
    } else {
        x_start
    };

    let scale = (problem.delta / -target).max(1.0);
    let y = fixed.y(&x).scale(scale);
    let ka = fixed.ka(&x).scale(scale);
    let cert = GainCertificate::from_lmi_solution(problem, y, ka)?;
    let worst = cert
        .lmi_margins
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > -problem.delta || sym_eigenvalues(&cert.y)[0] < problem.eps {
        return Err(Error::Infeasible { best_margin: worst });
    }
    Ok(cert)
}
