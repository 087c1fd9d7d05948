//! Tridiagonal matrix storage, M-matrix validation and direct solves.
//!
//! Every matrix appearing in the discrete systems handled by this crate is
//! tridiagonal, and the solvers rely on the M-matrix structure (non-positive
//! off-diagonals, positive diagonal, non-negative row sums with at least one
//! strictly positive). Such matrices have a non-negative inverse and admit
//! stable Thomas elimination without pivoting.

use std::fmt;

use crate::error::{Error, Result};

/// Relative pivot threshold for the direct solve.
const PIVOT_RTOL: f64 = 1e-14;

/// Why a matrix failed the M-matrix structural check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MMatrixViolation {
    /// An off-diagonal entry is strictly positive.
    PositiveOffDiagonal { row: usize, value: f64 },
    /// A diagonal entry is zero or negative.
    NonPositiveDiagonal { row: usize, value: f64 },
    /// A row sum is strictly negative.
    NegativeRowSum { row: usize, value: f64 },
    /// All row sums are zero (none strictly positive).
    NoPositiveRowSum,
}

impl fmt::Display for MMatrixViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PositiveOffDiagonal { row, value } => {
                write!(f, "positive off-diagonal entry {value:e} in row {row}")
            }
            Self::NonPositiveDiagonal { row, value } => {
                write!(f, "non-positive diagonal entry {value:e} in row {row}")
            }
            Self::NegativeRowSum { row, value } => {
                write!(f, "negative row sum {value:e} in row {row}")
            }
            Self::NoPositiveRowSum => write!(f, "no positive row sum"),
        }
    }
}

/// Tridiagonal real matrix stored as three bands.
///
/// `lower[i]` is entry (i+1, i), `diag[i]` is (i, i), `upper[i]` is (i, i+1).
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl BandedMatrix {
    /// Builds a tridiagonal matrix from its bands. The diagonal must have
    /// length `n >= 1` and both off-diagonal bands length `n - 1`.
    pub fn tridiagonal(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be at least 1".into(),
            ));
        }
        if lower.len() + 1 != n {
            return Err(Error::DimensionMismatch {
                context: "sub-diagonal band",
                expected: n - 1,
                actual: lower.len(),
            });
        }
        if upper.len() + 1 != n {
            return Err(Error::DimensionMismatch {
                context: "super-diagonal band",
                expected: n - 1,
                actual: upper.len(),
            });
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "identity matrix needs dimension >= 1");
        Self {
            lower: vec![0.0; n - 1],
            diag: vec![1.0; n],
            upper: vec![0.0; n - 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Row `i` as `(sub, diag, super)`, with zeros outside the matrix.
    pub fn row(&self, i: usize) -> (f64, f64, f64) {
        let sub = if i > 0 { self.lower[i - 1] } else { 0.0 };
        let sup = if i + 1 < self.dim() { self.upper[i] } else { 0.0 };
        (sub, self.diag[i], sup)
    }

    /// Sum of the entries of row `i`.
    pub fn row_sum(&self, i: usize) -> f64 {
        let (sub, d, sup) = self.row(i);
        sub + d + sup
    }

    /// Dot product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = self.diag[i] * x[i];
        if i > 0 {
            acc += self.lower[i - 1] * x[i - 1];
        }
        if i + 1 < self.dim() {
            acc += self.upper[i] * x[i + 1];
        }
        acc
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok((0..self.dim()).map(|i| self.row_dot(i, x)).collect())
    }

    /// Returns a matrix with all bands negated.
    pub fn negated(&self) -> Self {
        Self {
            lower: self.lower.iter().map(|v| -v).collect(),
            diag: self.diag.iter().map(|v| -v).collect(),
            upper: self.upper.iter().map(|v| -v).collect(),
        }
    }

    /// Adds `scale` times row `i` of `src` to row `i` of `self`.
    pub(crate) fn add_scaled_row(&mut self, i: usize, scale: f64, src: &BandedMatrix) {
        debug_assert_eq!(self.dim(), src.dim());
        if i > 0 {
            self.lower[i - 1] += scale * src.lower[i - 1];
        }
        self.diag[i] += scale * src.diag[i];
        if i + 1 < self.dim() {
            self.upper[i] += scale * src.upper[i];
        }
    }

    /// Checks the four structural M-matrix conditions: non-positive
    /// off-diagonals, positive diagonal, non-negative row sums, and at least
    /// one strictly positive row sum. Reports the first offending row.
    pub fn validate_m_matrix(&self) -> std::result::Result<(), MMatrixViolation> {
        let n = self.dim();
        let mut any_positive_sum = false;
        for i in 0..n {
            let (sub, d, sup) = self.row(i);
            if sub > 0.0 {
                return Err(MMatrixViolation::PositiveOffDiagonal { row: i, value: sub });
            }
            if sup > 0.0 {
                return Err(MMatrixViolation::PositiveOffDiagonal { row: i, value: sup });
            }
            if d <= 0.0 {
                return Err(MMatrixViolation::NonPositiveDiagonal { row: i, value: d });
            }
            let sum = sub + d + sup;
            if sum < 0.0 {
                return Err(MMatrixViolation::NegativeRowSum { row: i, value: sum });
            }
            if sum > 0.0 {
                any_positive_sum = true;
            }
        }
        if !any_positive_sum {
            return Err(MMatrixViolation::NoPositiveRowSum);
        }
        Ok(())
    }

    /// Rows whose sum is strictly positive, in ascending order.
    pub fn positive_row_sums(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.row_sum(i) > 0.0).collect()
    }

    /// Solves `self * x = rhs` by Thomas elimination without pivoting.
    ///
    /// Pivoting is unnecessary for the M-matrices this crate works with; a
    /// pivot whose magnitude falls below `1e-14` times the largest diagonal
    /// magnitude aborts with a singular-pivot error.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "linear solve right-hand side",
                expected: n,
                actual: rhs.len(),
            });
        }
        let max_diag = self.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let threshold = PIVOT_RTOL * max_diag;

        let mut c_prime = vec![0.0; n.saturating_sub(1)];
        let mut d_prime = vec![0.0; n];

        let mut pivot = self.diag[0];
        if pivot.abs() < threshold || pivot == 0.0 {
            return Err(Error::SingularPivot { row: 0, pivot });
        }
        if n > 1 {
            c_prime[0] = self.upper[0] / pivot;
        }
        d_prime[0] = rhs[0] / pivot;

        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c_prime[i - 1];
            if pivot.abs() < threshold || pivot == 0.0 {
                return Err(Error::SingularPivot { row: i, pivot });
            }
            if i < n - 1 {
                c_prime[i] = self.upper[i] / pivot;
            }
            d_prime[i] = (rhs[i] - self.lower[i - 1] * d_prime[i - 1]) / pivot;
        }

        let mut x = vec![0.0; n];
        x[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// Builds a matrix by taking, for every row index `0..n`, that row from a
/// designated source matrix. Each pair `(matrix, i)` contributes row `i` of
/// `matrix` at position `i`; the pairs must cover every row exactly once and
/// all sources must share one dimension. The composite is re-validated as an
/// M-matrix, which is guaranteed to succeed whenever all sources are valid
/// with co-located positive row sums.
pub fn row_splice(sources: &[(&BandedMatrix, usize)]) -> Result<BandedMatrix> {
    let Some((first, _)) = sources.first() else {
        return Err(Error::InvalidParameter("row_splice needs at least one source row".into()));
    };
    let n = first.dim();
    if sources.len() != n {
        return Err(Error::DimensionMismatch {
            context: "row splice assignment",
            expected: n,
            actual: sources.len(),
        });
    }

    let mut covered = vec![false; n];
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];
    for &(m, i) in sources {
        if m.dim() != n {
            return Err(Error::DimensionMismatch {
                context: "row splice source dimension",
                expected: n,
                actual: m.dim(),
            });
        }
        if i >= n || covered[i] {
            return Err(Error::DimensionMismatch {
                context: "row splice row index",
                expected: n,
                actual: i,
            });
        }
        covered[i] = true;
        let (sub, d, sup) = m.row(i);
        if i > 0 {
            lower[i - 1] = sub;
        }
        diag[i] = d;
        if i + 1 < n {
            upper[i] = sup;
        }
    }
    debug_assert!(covered.iter().all(|&c| c));

    let spliced = BandedMatrix::tridiagonal(lower, diag, upper)?;
    spliced.validate_m_matrix().map_err(|violation| Error::NotMMatrix {
        context: "row-spliced matrix".into(),
        violation,
    })?;
    Ok(spliced)
}
