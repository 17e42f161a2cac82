#![allow(dead_code)]

use chaosync::{Matrix, SymMatrix};

/// Closed-form eigenvalues of a symmetric 3×3 matrix (trigonometric form of
/// the characteristic cubic), ascending. Independent of the Jacobi kernel.
pub fn eig3_closed_form(m: &SymMatrix) -> [f64; 3] {
    let a = |i, j| m[(i, j)];
    let p1 = a(0, 1).powi(2) + a(0, 2).powi(2) + a(1, 2).powi(2);
    let mut ev = if p1 == 0.0 {
        [a(0, 0), a(1, 1), a(2, 2)]
    } else {
        let q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
        let p2 = (a(0, 0) - q).powi(2) + (a(1, 1) - q).powi(2) + (a(2, 2) - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = |i, j| (a(i, j) - if i == j { q } else { 0.0 }) / p;
        let det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
            - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [e1, 3.0 * q - e1 - e3, e3]
    };
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn reference_y() -> SymMatrix {
    SymMatrix::from_rows(&[
        [0.0385, -0.0014, 0.0112],
        [-0.0014, 0.0013, -0.0005],
        [0.0112, -0.0005, 0.5753],
    ])
}

pub fn reference_p() -> SymMatrix {
    SymMatrix::from_rows(&[
        [27.2002, 28.9674, -0.5062],
        [28.9674, 779.2615, 0.0738],
        [-0.5062, 0.0738, 1.7481],
    ])
}

pub fn reference_ka() -> Matrix {
    Matrix::from_rows(&[[-0.3012, -0.6857, 0.5681]])
}

pub fn reference_k() -> Matrix {
    Matrix::from_rows(&[[-28.3433, -543.0217, 1.0950]])
}
