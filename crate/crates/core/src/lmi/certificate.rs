//! On-disk form of a gain certificate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{lyapunov_margin, verify_certificate, GainCertificate, Verification};
use crate::error::{invalid, Result};
use crate::polytope::VertexSet;
use crate::smallmat::{Matrix, SymMatrix};
use crate::system::{a_tilde, Alpha, DistributionMatrix, Feedback};
use crate::textio::to_json_string;

/// Certificate document. Matrices are stored as arrays of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub b_form: DistributionMatrix,
    pub alpha_range: [f64; 2],
    #[serde(rename = "Y")]
    pub y: Vec<Vec<f64>>,
    #[serde(rename = "Ka")]
    pub ka: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    pub eps: f64,
    pub delta: f64,
    pub lmi_margins: Vec<f64>,
    pub bmi_margins: Vec<f64>,
    pub p_eigenvalues: Vec<f64>,
}

/// Result of re-checking a certificate file.
#[derive(Clone, Debug)]
pub struct CertificateCheck {
    pub vertices: Verification,
    /// `(α, margin)` on an evenly spaced α grid.
    pub grid: Vec<(f64, f64)>,
}

impl CertificateCheck {
    pub fn passed(&self) -> bool {
        self.vertices.passed() && self.grid.iter().all(|(_, m)| *m < 0.0)
    }

    pub fn worst_grid_margin(&self) -> f64 {
        self.grid
            .iter()
            .map(|g| g.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl CertificateFile {
    pub fn from_certificate(cert: &GainCertificate) -> Result<Self> {
        let Some((lo, hi)) = cert.alpha_range else {
            return invalid("certificate was not built from an alpha range");
        };
        Ok(Self {
            b_form: cert.b,
            alpha_range: [lo.value(), hi.value()],
            y: cert.y.as_matrix().to_nested(),
            ka: cert.ka.to_nested(),
            p: cert.p.as_matrix().to_nested(),
            k: cert.k.to_nested(),
            eps: cert.eps,
            delta: cert.delta,
            lmi_margins: cert.lmi_margins.clone(),
            bmi_margins: cert.bmi_margins.clone(),
            p_eigenvalues: cert.p_eigenvalues.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn alphas(&self) -> Result<(Alpha, Alpha)> {
        Ok((
            Alpha::new(self.alpha_range[0])?,
            Alpha::new(self.alpha_range[1])?,
        ))
    }

    pub fn p_matrix(&self) -> Result<SymMatrix> {
        let p = Matrix::from_nested(&self.p)?;
        if p.rows() != 3 || p.cols() != 3 {
            return invalid("P must be 3x3");
        }
        SymMatrix::from_matrix(&p)
    }

    pub fn k_matrix(&self) -> Result<Matrix> {
        Matrix::from_nested(&self.k)
    }

    pub fn feedback(&self) -> Result<Feedback> {
        Feedback::new(self.b_form, self.k_matrix()?)
    }

    /// Re-verifies `(P, K)` on the vertices of the stored α range and on a
    /// `grid_points`-point α grid over the same range. Stored margins are
    /// not trusted.
    pub fn verify(&self, grid_points: usize) -> Result<CertificateCheck> {
        let (lo, hi) = self.alphas()?;
        let vertices = VertexSet::for_alpha_range(lo, hi)?;
        let p = self.p_matrix()?;
        let feedback = self.feedback()?;
        let vertex_check = verify_certificate(&p, feedback.gain(), self.b_form, &vertices)?;
        let bk = feedback.closed_loop_term();
        let grid = (0..grid_points)
            .map(|i| {
                let frac = if grid_points > 1 {
                    i as f64 / (grid_points - 1) as f64
                } else {
                    0.0
                };
                let a = Alpha::new(lo.value() + frac * (hi.value() - lo.value()))?;
                Ok((a.value(), lyapunov_margin(&p, &(&a_tilde(a) + &bk))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CertificateCheck {
            vertices: vertex_check,
            grid,
        })
    }
}
