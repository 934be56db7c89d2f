//! Problem data: the plant `x' = A x + B u` and the quadratic cost weights.

use crate::matops::{self, MatError, Matrix};
use nalgebra::Cholesky;
use thiserror::Error;

/// Q is accepted as positive semidefinite down to this eigenvalue.
pub const Q_PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("weight Q is not positive semidefinite (min eigenvalue {0:.3e})")]
    QNotPositiveSemidefinite(f64),
    #[error("weight R is not positive definite")]
    RNotPositiveDefinite,
    #[error(transparent)]
    Matrix(#[from] MatError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
}

impl LtiSystem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self, ModelError> {
        matops::ensure_square(&a)?;
        matops::ensure_finite(&a)?;
        matops::ensure_finite(&b)?;
        if b.nrows() != a.nrows() {
            return Err(ModelError::DimensionMismatch(format!(
                "A is {n}x{n} but B has {} rows",
                b.nrows(),
                n = a.nrows()
            )));
        }
        if a.nrows() == 0 {
            return Err(ModelError::DimensionMismatch("empty state".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    q: Matrix,
    r: Matrix,
    r_inv: Matrix,
}

impl QuadraticCost {
    pub fn new(q: Matrix, r: Matrix) -> Result<Self, ModelError> {
        matops::check_symmetric(&q)?;
        matops::ensure_finite(&q)?;
        matops::ensure_square(&r)?;
        matops::ensure_finite(&r)?;
        if q.nrows() == 0 || r.nrows() == 0 {
            return Err(ModelError::DimensionMismatch("empty weight".into()));
        }
        let q_min = matops::min_eig_sym(&q)?;
        if q_min < -Q_PSD_TOL {
            return Err(ModelError::QNotPositiveSemidefinite(q_min));
        }
        if matops::symmetry_residual(&r) > matops::sym_tol(&r) {
            return Err(ModelError::RNotPositiveDefinite);
        }
        let chol = Cholesky::new(matops::symmetric_part(&r)).ok_or(ModelError::RNotPositiveDefinite)?;
        let r_inv = matops::symmetric_part(&chol.inverse());
        Ok(Self { q, r, r_inv })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn r_inv(&self) -> &Matrix {
        &self.r_inv
    }

    /// Checks that the weights fit a plant.
    pub fn check_against(&self, sys: &LtiSystem) -> Result<(), ModelError> {
        if self.q.nrows() != sys.n() {
            return Err(ModelError::DimensionMismatch(format!(
                "Q is {q}x{q}, state dimension is {}",
                sys.n(),
                q = self.q.nrows()
            )));
        }
        if self.r.nrows() != sys.m() {
            return Err(ModelError::DimensionMismatch(format!(
                "R is {r}x{r}, input dimension is {}",
                sys.m(),
                r = self.r.nrows()
            )));
        }
        Ok(())
    }

    /// `B R^-1 B^T`.
    pub fn input_weight(&self, sys: &LtiSystem) -> Matrix {
        matops::symmetric_part(&(sys.b() * &self.r_inv * sys.b().transpose()))
    }
}
