//! Polytopic over-approximation of `Ã(α)`.
//!
//! Five entries of `Ã` depend (affinely) on α. Each is replaced by an
//! independent interval, and every combination of interval endpoints gives a
//! vertex matrix, 2⁵ = 32 in total.

use crate::error::{invalid, Result};
use crate::smallmat::Matrix;
use crate::system::{a_tilde, Alpha};

/// Positions of the α-dependent entries of `Ã`, in enumeration order.
pub const ALPHA_ENTRIES: [(usize, usize); 5] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)];

/// Range of one entry of `Ã(α)` over an α interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryInterval {
    pub row: usize,
    pub col: usize,
    pub lo: f64,
    pub hi: f64,
}

impl EntryInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// `lo` for choice 0, `hi` for choice 1.
    pub fn endpoint(&self, choice: bool) -> f64 {
        if choice {
            self.hi
        } else {
            self.lo
        }
    }
}

/// Entry intervals of `Ã` for α ∈ [alpha_lo, alpha_hi].
///
/// The entries are affine in α, so their extremes sit at the α endpoints.
pub fn entry_intervals(alpha_lo: Alpha, alpha_hi: Alpha) -> Result<Vec<EntryInterval>> {
    if alpha_lo > alpha_hi {
        return invalid(format!(
            "alpha range [{}, {}] is reversed",
            alpha_lo.value(),
            alpha_hi.value()
        ));
    }
    let at_lo = a_tilde(alpha_lo);
    let at_hi = a_tilde(alpha_hi);
    Ok(ALPHA_ENTRIES
        .iter()
        .map(|&(row, col)| {
            let (a, b) = (at_lo[(row, col)], at_hi[(row, col)]);
            EntryInterval {
                row,
                col,
                lo: a.min(b),
                hi: a.max(b),
            }
        })
        .collect())
}

/// Ordered vertex matrices of the polytope.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexSet {
    vertices: Vec<Matrix>,
}

impl VertexSet {
    pub fn new(vertices: Vec<Matrix>) -> Result<Self> {
        if vertices.is_empty() {
            return invalid("vertex set is empty");
        }
        let n = vertices[0].rows();
        if vertices.iter().any(|v| v.rows() != n || v.cols() != n) {
            return invalid("vertices must be square matrices of equal order");
        }
        Ok(Self { vertices })
    }

    /// A single-vertex set, handy for small problems.
    pub fn single(vertex: Matrix) -> Result<Self> {
        Self::new(vec![vertex])
    }

    /// The 32 vertices for α ∈ [alpha_lo, alpha_hi].
    pub fn for_alpha_range(alpha_lo: Alpha, alpha_hi: Alpha) -> Result<Self> {
        Ok(enumerate_vertices(&entry_intervals(alpha_lo, alpha_hi)?))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn order(&self) -> usize {
        self.vertices[0].rows()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matrix> {
        self.vertices.iter()
    }

    pub fn as_slice(&self) -> &[Matrix] {
        &self.vertices
    }
}

impl std::ops::Index<usize> for VertexSet {
    type Output = Matrix;
    fn index(&self, i: usize) -> &Matrix {
        &self.vertices[i]
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a Matrix;
    type IntoIter = std::slice::Iter<'a, Matrix>;
    fn into_iter(self) -> Self::IntoIter {
        self.vertices.iter()
    }
}

/// All endpoint combinations, in lexicographic order of the choice bits
/// (first interval most significant, 0 = lo). α-independent entries are zero.
pub fn enumerate_vertices(intervals: &[EntryInterval]) -> VertexSet {
    let n = intervals.len();
    let order = intervals
        .iter()
        .map(|iv| iv.row.max(iv.col) + 1)
        .max()
        .unwrap_or(1)
        .max(3);
    let vertices = (0..1usize << n)
        .map(|index| {
            let mut m = Matrix::zeros(order, order);
            for (j, iv) in intervals.iter().enumerate() {
                let bit = (index >> (n - 1 - j)) & 1 == 1;
                m[(iv.row, iv.col)] = iv.endpoint(bit);
            }
            m
        })
        .collect();
    VertexSet { vertices }
}

/// Non-negative weights summing to one, one per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexWeights(Vec<f64>);

impl ConvexWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("no weights");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("weights must be finite and non-negative");
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return invalid(format!("weights sum to {sum}, not 1"));
        }
        Ok(Self(weights))
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        assert!(index < len, "one-hot index out of range");
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Self(w)
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Self(vec![1.0 / len as f64; len])
    }

    /// Normalizes arbitrary non-negative numbers onto the simplex.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) || raw.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return invalid("cannot normalize weights");
        }
        let mut w: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        // Push the rounding residue onto the largest weight.
        let residue = 1.0 - w.iter().sum::<f64>();
        let imax = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        w[imax] += residue;
        Self::new(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Σ wᵢ·Ãᵢ`.
pub fn convex_combination(weights: &ConvexWeights, vertices: &VertexSet) -> Result<Matrix> {
    if weights.len() != vertices.len() {
        return invalid(format!(
            "{} weights for {} vertices",
            weights.len(),
            vertices.len()
        ));
    }
    let n = vertices.order();
    let mut acc = Matrix::zeros(n, n);
    for (w, v) in weights.as_slice().iter().zip(vertices) {
        if *w == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                acc[(i, j)] += w * v[(i, j)];
            }
        }
    }
    Ok(acc)
}
