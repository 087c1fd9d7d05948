//! The nonlinear discrete system `min{A_s x - b_s : s in S} = 0` over a
//! finite control set, with residual evaluation, solution verification and
//! the max-form reduction by negation.

use crate::banded::{BandedMatrix, row_splice};
use crate::error::{Error, Result};

/// Whether the envelope over controls is a minimum or a maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// A discrete control problem: one matrix/right-hand-side pair per control.
///
/// In min form, every matrix must satisfy the M-matrix conditions and the
/// rows with strictly positive sums must be the same set for all controls.
/// Instances are immutable after construction and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    controls: Vec<String>,
    matrices: Vec<BandedMatrix>,
    rhs: Vec<Vec<f64>>,
    sense: Sense,
    dim: usize,
}

impl ControlProblem {
    pub fn new(
        controls: Vec<String>,
        matrices: Vec<BandedMatrix>,
        rhs: Vec<Vec<f64>>,
        sense: Sense,
    ) -> Result<Self> {
        if controls.is_empty() {
            return Err(Error::InvalidParameter(
                "a control problem needs at least one control".into(),
            ));
        }
        if matrices.len() != controls.len() {
            return Err(Error::DimensionMismatch {
                context: "matrices per control",
                expected: controls.len(),
                actual: matrices.len(),
            });
        }
        if rhs.len() != controls.len() {
            return Err(Error::DimensionMismatch {
                context: "right-hand sides per control",
                expected: controls.len(),
                actual: rhs.len(),
            });
        }
        let dim = matrices[0].dim();
        for (s, m) in matrices.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "control matrix dimension",
                    expected: dim,
                    actual: m.dim(),
                });
            }
            if rhs[s].len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "control right-hand side length",
                    expected: dim,
                    actual: rhs[s].len(),
                });
            }
        }

        if sense == Sense::Min {
            let mut reference_rows: Option<Vec<usize>> = None;
            for (s, m) in matrices.iter().enumerate() {
                m.validate_m_matrix().map_err(|violation| Error::NotMMatrix {
                    context: format!("matrix for control {s} ({})", controls[s]),
                    violation,
                })?;
                let rows = m.positive_row_sums();
                match &reference_rows {
                    None => reference_rows = Some(rows),
                    Some(expected) => {
                        if &rows != expected {
                            return Err(Error::RowSumLocationMismatch {
                                control: s,
                                expected: expected.clone(),
                                actual: rows,
                            });
                        }
                    }
                }
            }
        }

        Ok(Self { controls, matrices, rhs, sense, dim })
    }

    /// Same matrices and controls, new right-hand sides. Matrix validation
    /// is not repeated; only the dimensions are checked.
    pub fn with_rhs(&self, rhs: Vec<Vec<f64>>) -> Result<Self> {
        if rhs.len() != self.controls.len() {
            return Err(Error::DimensionMismatch {
                context: "right-hand sides per control",
                expected: self.controls.len(),
                actual: rhs.len(),
            });
        }
        for b in &rhs {
            if b.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    context: "control right-hand side length",
                    expected: self.dim,
                    actual: b.len(),
                });
            }
        }
        Ok(Self {
            controls: self.controls.clone(),
            matrices: self.matrices.clone(),
            rhs,
            sense: self.sense,
            dim: self.dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn control_label(&self, s: usize) -> &str {
        &self.controls[s]
    }

    pub fn labels(&self) -> &[String] {
        &self.controls
    }

    pub fn matrix(&self, s: usize) -> &BandedMatrix {
        &self.matrices[s]
    }

    pub fn rhs(&self, s: usize) -> &[f64] {
        &self.rhs[s]
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// The denominator of the relative termination criteria:
    /// `max(||max{b_s : s in S}||_inf, 1)`. The guard against zero keeps the
    /// criteria well defined for zero boundary data.
    pub fn termination_scale(&self) -> f64 {
        let mut norm = 0.0_f64;
        for i in 0..self.dim {
            let mut row_max = f64::NEG_INFINITY;
            for b in &self.rhs {
                row_max = row_max.max(b[i]);
            }
            norm = norm.max(row_max.abs());
        }
        norm.max(1.0)
    }

    /// Componentwise residuals `A_s x - b_s` for every control, plus their
    /// componentwise minimum over controls.
    pub fn residual(&self, x: &[f64]) -> Result<Residual> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "residual evaluation",
                expected: self.dim,
                actual: x.len(),
            });
        }
        let per_control: Vec<Vec<f64>> = self
            .matrices
            .iter()
            .zip(&self.rhs)
            .map(|(m, b)| (0..self.dim).map(|i| m.row_dot(i, x) - b[i]).collect())
            .collect();
        let min_envelope = (0..self.dim)
            .map(|i| per_control.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min))
            .collect();
        Ok(Residual { per_control, min_envelope })
    }

    /// Two-sided check that `x` solves the min-form system at relative
    /// tolerance `tol`: every scaled residual entry is `>= -tol` and every
    /// row has some control with scaled residual `<= tol`.
    pub fn verify_solution(&self, x: &[f64], tol: f64) -> Result<Verification> {
        if tol <= 0.0 {
            return Err(Error::InvalidParameter("verification tolerance must be > 0".into()));
        }
        let residual = self.residual(x)?;
        let scale = self.termination_scale();

        let mut min_entry = (0usize, 0usize, f64::INFINITY);
        let mut worst_row = (0usize, f64::NEG_INFINITY);
        for i in 0..self.dim {
            let mut row_min = f64::INFINITY;
            for (s, r) in residual.per_control.iter().enumerate() {
                let scaled = r[i] / scale;
                if scaled < min_entry.2 {
                    min_entry = (i, s, scaled);
                }
                row_min = row_min.min(scaled);
            }
            if row_min > worst_row.1 {
                worst_row = (i, row_min);
            }
        }

        let ok = min_entry.2 >= -tol && worst_row.1 <= tol;
        Ok(Verification {
            ok,
            scale,
            min_scaled_residual: min_entry,
            worst_row_envelope: worst_row,
        })
    }

    /// Converts a max-form problem into the min form by negating every
    /// matrix and right-hand side. The result is fully validated; solutions
    /// carry over unchanged.
    pub fn negate_to_min_form(&self) -> Result<ControlProblem> {
        if self.sense != Sense::Max {
            return Err(Error::MaxSenseRequired);
        }
        let matrices = self.matrices.iter().map(BandedMatrix::negated).collect();
        let rhs = self
            .rhs
            .iter()
            .map(|b| b.iter().map(|v| -v).collect())
            .collect();
        ControlProblem::new(self.controls.clone(), matrices, rhs, Sense::Min)
    }

    /// Row-splices the matrices and right-hand sides along a per-row control
    /// assignment, yielding the composite system `A* x = b*`.
    pub fn spliced_system(&self, assignment: &[usize]) -> Result<(BandedMatrix, Vec<f64>)> {
        if assignment.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "control assignment",
                expected: self.dim,
                actual: assignment.len(),
            });
        }
        for &s in assignment {
            if s >= self.num_controls() {
                return Err(Error::InvalidParameter(format!(
                    "control index {s} out of range (have {})",
                    self.num_controls()
                )));
            }
        }
        let sources: Vec<(&BandedMatrix, usize)> = assignment
            .iter()
            .enumerate()
            .map(|(i, &s)| (&self.matrices[s], i))
            .collect();
        let spliced = row_splice(&sources)?;
        let b_star = assignment
            .iter()
            .enumerate()
            .map(|(i, &s)| self.rhs[s][i])
            .collect();
        Ok((spliced, b_star))
    }
}

/// Residuals of a candidate solution.
#[derive(Debug, Clone)]
pub struct Residual {
    /// `per_control[s][i] = (A_s x - b_s)_i`.
    pub per_control: Vec<Vec<f64>>,
    /// `min_envelope[i] = min over s of per_control[s][i]`.
    pub min_envelope: Vec<f64>,
}

impl Residual {
    pub fn envelope_inf_norm(&self) -> f64 {
        self.min_envelope.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Outcome of `verify_solution` with the binding diagnostics.
#[derive(Debug, Clone)]
pub struct Verification {
    pub ok: bool,
    pub scale: f64,
    /// Most negative scaled residual as `(row, control, value)`.
    pub min_scaled_residual: (usize, usize, f64),
    /// Row whose best control is furthest from activity, as `(row, value)`.
    pub worst_row_envelope: (usize, f64),
}
