//! Dense real matrix kernel.
//!
//! Thin layer over `nalgebra` that fixes the tolerances used across the
//! crate: relative symmetry tolerance, partial-pivot singularity threshold and
//! the strict Hurwitz margin. Eigenvalues of general matrices come from the
//! real Schur form (shifted QR), symmetric spectra from the symmetric
//! eigensolver sorted in descending order.

use nalgebra::{Complex, DMatrix, DVector, Schur};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative factor of the symmetry tolerance `1e-9 * (1 + ||m||_F)`.
pub const SYM_TOL_FACTOR: f64 = 1e-9;

/// A matrix is Hurwitz when its spectral abscissa is below this value.
pub const HURWITZ_THRESHOLD: f64 = -1e-9;

const PIVOT_TOL_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (residual {residual:.3e} exceeds {tolerance:.3e})")]
    NotSymmetric { residual: f64, tolerance: f64 },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("eigenvalue iteration did not converge")]
    IterationLimit,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// Eigenvalues of a real square matrix, sorted by descending real part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest real part, `-inf` for an empty spectrum.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest real part, `+inf` for an empty spectrum.
    pub fn min_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn all_real_parts_positive(&self) -> bool {
        self.eigenvalues.iter().all(|z| z.re > 0.0)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

/// Eigen-decomposition of a symmetric matrix. `values` are descending and
/// column `i` of `vectors` belongs to `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzCheck {
    pub hurwitz: bool,
    pub abscissa: f64,
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}

/// `1e-9 * (1 + ||m||_F)`.
pub fn sym_tol(m: &Matrix) -> f64 {
    SYM_TOL_FACTOR * (1.0 + frobenius(m))
}

/// `||m - m^T||_F`.
pub fn symmetry_residual(m: &Matrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (m - m.transpose()).norm()
}

pub fn symmetric_part(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn ensure_finite(m: &Matrix) -> Result<(), MatError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MatError::NonFinite)
    }
}

pub fn ensure_square(m: &Matrix) -> Result<(), MatError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(MatError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub fn check_symmetric(m: &Matrix) -> Result<(), MatError> {
    ensure_square(m)?;
    let residual = symmetry_residual(m);
    let tolerance = sym_tol(m);
    if residual <= tolerance {
        Ok(())
    } else {
        Err(MatError::NotSymmetric {
            residual,
            tolerance,
        })
    }
}

/// Eigenvalues of a general real square matrix via the real Schur form.
pub fn eig_general(m: &Matrix) -> Result<Spectrum, MatError> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
        });
    }
    let schur =
        Schur::try_new(m.clone(), f64::EPSILON, 200 * n).ok_or(MatError::IterationLimit)?;
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(Spectrum { eigenvalues })
}

/// Spectrum and orthonormal eigenvectors of a symmetric matrix.
pub fn eig_sym(m: &Matrix) -> Result<SymmetricEigen, MatError> {
    check_symmetric(m)?;
    ensure_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let eig = nalgebra::SymmetricEigen::new(symmetric_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

pub fn min_eig_sym(m: &Matrix) -> Result<f64, MatError> {
    Ok(eig_sym(m)?.values.last().copied().unwrap_or(f64::INFINITY))
}

pub fn max_eig_sym(m: &Matrix) -> Result<f64, MatError> {
    Ok(eig_sym(m)?.values.first().copied().unwrap_or(f64::NEG_INFINITY))
}

/// Solves `a x = b` by LU with partial pivoting.
///
/// A pivot below `1e-12 * max_row_norm(a)` is treated as a rank deficiency.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix, MatError> {
    ensure_square(a)?;
    ensure_finite(a)?;
    ensure_finite(b)?;
    if b.nrows() != a.nrows() {
        return Err(MatError::DimensionMismatch(format!(
            "right-hand side has {} rows, matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    if a.nrows() == 0 {
        return Ok(b.clone());
    }
    let max_row_norm = a
        .row_iter()
        .map(|row| row.norm())
        .fold(0.0, f64::max);
    let pivot_tol = PIVOT_TOL_FACTOR * max_row_norm;
    let lu = a.clone().lu();
    let u = lu.u();
    if max_row_norm == 0.0 || u.diagonal().iter().any(|p| p.abs() <= pivot_tol) {
        return Err(MatError::Singular);
    }
    lu.solve(b).ok_or(MatError::Singular)
}

/// Cholesky test on the symmetric part.
pub fn is_positive_definite(m: &Matrix) -> bool {
    m.is_square() && m.nrows() > 0 && nalgebra::Cholesky::new(symmetric_part(m)).is_some()
}

pub fn spectral_abscissa(m: &Matrix) -> Result<f64, MatError> {
    Ok(eig_general(m)?.spectral_abscissa())
}

/// Strict Hurwitz test with margin: `max Re(lambda) < -1e-9`.
pub fn is_hurwitz(m: &Matrix) -> Result<HurwitzCheck, MatError> {
    let abscissa = spectral_abscissa(m)?;
    Ok(HurwitzCheck {
        hurwitz: abscissa < HURWITZ_THRESHOLD,
        abscissa,
    })
}

/// `x^T m x`.
pub fn quadratic_form(m: &Matrix, x: &Vector) -> f64 {
    x.dot(&(m * x))
}

/// Row-major construction helper used throughout tests and parsers.
pub fn from_rows(rows: &[&[f64]]) -> Matrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}
