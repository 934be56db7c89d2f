//! Matrix inequalities as affine constraints over one shared variable vector.
//!
//! The decision variables `X` (symmetric), `Y` (general), `W` (symmetric) and
//! `P_` (general, the lower design matrix) are laid out contiguously; a
//! constraint stores `G(v) = C + sum_k v_k G_k` with symmetric `C`, `G_k`.

use crate::matops::{self, MatError, Matrix};
use crate::system::{LtiSystem, QuadraticCost};
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmiError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("weight R is not positive definite")]
    RNotPositiveDefinite,
    #[error("variable layout has no block {0}")]
    MissingBlock(BlockName),
    #[error("duplicate block {0} in layout")]
    DuplicateBlock(BlockName),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockName {
    X,
    Y,
    W,
    PLower,
}

impl fmt::Display for BlockName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BlockName::X => "X",
            BlockName::Y => "Y",
            BlockName::W => "W",
            BlockName::PLower => "P_lower",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Stores the upper triangle, row by row.
    Symmetric,
    /// Stores all entries, row-major.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub name: BlockName,
    pub kind: BlockKind,
    pub order: usize,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        let n = self.order;
        match self.kind {
            BlockKind::Symmetric => n * (n + 1) / 2,
            BlockKind::General => n * n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scalar index of entry `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let n = self.order;
        debug_assert!(i < n && j < n);
        match self.kind {
            BlockKind::General => self.offset + i * n + j,
            BlockKind::Symmetric => {
                let (r, c) = if i <= j { (i, j) } else { (j, i) };
                // rows before r hold n + (n-1) + ... + (n-r+1) entries
                self.offset + r * n - r * r.saturating_sub(1) / 2 + (c - r)
            }
        }
    }

    pub fn assemble(&self, v: &[f64]) -> Matrix {
        let n = self.order;
        Matrix::from_fn(n, n, |i, j| v[self.index(i, j)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    order: usize,
    blocks: Vec<Block>,
    dim: usize,
}

impl VariableLayout {
    pub fn new(order: usize, specs: &[(BlockName, BlockKind)]) -> Result<Self, LmiError> {
        let mut blocks: Vec<Block> = Vec::with_capacity(specs.len());
        let mut offset = 0;
        for &(name, kind) in specs {
            if blocks.iter().any(|b| b.name == name) {
                return Err(LmiError::DuplicateBlock(name));
            }
            let block = Block {
                name,
                kind,
                order,
                offset,
            };
            offset += block.len();
            blocks.push(block);
        }
        Ok(Self {
            order,
            blocks,
            dim: offset,
        })
    }

    /// `X` symmetric, `Y` general, `W` symmetric, `P_` general.
    pub fn full(order: usize) -> Self {
        Self::new(
            order,
            &[
                (BlockName::X, BlockKind::Symmetric),
                (BlockName::Y, BlockKind::General),
                (BlockName::W, BlockKind::Symmetric),
                (BlockName::PLower, BlockKind::General),
            ],
        )
        .expect("distinct block names")
    }

    /// `X` symmetric and `Y` general only.
    pub fn stabilization(order: usize) -> Self {
        Self::new(
            order,
            &[
                (BlockName::X, BlockKind::Symmetric),
                (BlockName::Y, BlockKind::General),
            ],
        )
        .expect("distinct block names")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: BlockName) -> Result<&Block, LmiError> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or(LmiError::MissingBlock(name))
    }

    pub fn index(&self, name: BlockName, i: usize, j: usize) -> Result<usize, LmiError> {
        Ok(self.block(name)?.index(i, j))
    }

    /// Matrix value of block `name` under assignment `v`.
    pub fn matrix(&self, v: &[f64], name: BlockName) -> Result<Matrix, LmiError> {
        self.check_assignment(v)?;
        Ok(self.block(name)?.assemble(v))
    }

    /// Builds an assignment from block values; absent blocks are zero and
    /// symmetric blocks read their upper triangle.
    pub fn pack(&self, values: &[(BlockName, &Matrix)]) -> Result<Vec<f64>, LmiError> {
        let mut v = vec![0.0; self.dim];
        for &(name, m) in values {
            let block = self.block(name)?;
            if m.shape() != (self.order, self.order) {
                return Err(LmiError::DimensionMismatch(format!(
                    "block {name} must be {n}x{n}",
                    n = self.order
                )));
            }
            for i in 0..self.order {
                for j in 0..self.order {
                    if block.kind == BlockKind::General || i <= j {
                        v[block.index(i, j)] = m[(i, j)];
                    }
                }
            }
        }
        Ok(v)
    }

    fn check_assignment(&self, v: &[f64]) -> Result<(), LmiError> {
        if v.len() == self.dim {
            Ok(())
        } else {
            Err(LmiError::DimensionMismatch(format!(
                "assignment has {} scalars, layout has {}",
                v.len(),
                self.dim
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `G(v) >= margin * I`.
    PositiveDefinite,
    /// `G(v) <= -margin * I`.
    NegativeDefinite,
    /// `G(v) = 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrixConstraint {
    pub name: String,
    pub constant: Matrix,
    pub coefficients: BTreeMap<usize, Matrix>,
    pub sense: Sense,
    pub margin: f64,
}

impl AffineMatrixConstraint {
    /// Extracts the coefficients of `G(v) = constant + linear(v)` by probing
    /// `linear` with unit vectors.
    pub fn from_linear_map(
        name: impl Into<String>,
        dim: usize,
        constant: Matrix,
        sense: Sense,
        margin: f64,
        linear: impl Fn(&[f64]) -> Matrix,
    ) -> Self {
        let mut coefficients = BTreeMap::new();
        let mut unit = vec![0.0; dim];
        for k in 0..dim {
            unit[k] = 1.0;
            let g = linear(&unit);
            unit[k] = 0.0;
            debug_assert_eq!(g.shape(), constant.shape());
            if g.iter().any(|&x| x != 0.0) {
                coefficients.insert(k, g);
            }
        }
        Self {
            name: name.into(),
            constant,
            coefficients,
            sense,
            margin,
        }
    }

    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn evaluate(&self, v: &[f64]) -> Matrix {
        let mut g = self.constant.clone();
        for (&k, coeff) in &self.coefficients {
            if v[k] != 0.0 {
                g += coeff * v[k];
            }
        }
        g
    }

    /// Achieved margin: smallest eigenvalue of `G` (PD), of `-G` (ND), or the
    /// largest absolute entry (Zero).
    pub fn margin_at(&self, v: &[f64]) -> Result<f64, MatError> {
        let g = self.evaluate(v);
        match self.sense {
            Sense::PositiveDefinite => matops::min_eig_sym(&matops::symmetric_part(&g)),
            Sense::NegativeDefinite => matops::min_eig_sym(&matops::symmetric_part(&(-g))),
            Sense::Zero => Ok(g.iter().fold(0.0, |m, x| m.max(x.abs()))),
        }
    }

    pub fn satisfied_at(&self, v: &[f64], tol: f64) -> Result<bool, MatError> {
        let achieved = self.margin_at(v)?;
        Ok(match self.sense {
            Sense::Zero => achieved <= tol,
            _ => achieved >= self.margin - tol,
        })
    }
}

/// Sparsity and scaling restrictions on the design variables.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureSpec {
    /// `true` marks a free entry of `Y`, `false` pins it to zero.
    pub y_mask: DMatrix<bool>,
    /// Restrict `X` to `xi * I`.
    pub x_scalar: bool,
    /// Pairs of `Y` entries forced equal.
    pub y_ties: Vec<((usize, usize), (usize, usize))>,
}

impl StructureSpec {
    pub fn new(y_mask: DMatrix<bool>, x_scalar: bool) -> Result<Self, LmiError> {
        Self::with_ties(y_mask, x_scalar, Vec::new())
    }

    pub fn with_ties(
        y_mask: DMatrix<bool>,
        x_scalar: bool,
        y_ties: Vec<((usize, usize), (usize, usize))>,
    ) -> Result<Self, LmiError> {
        if !y_mask.is_square() {
            return Err(LmiError::InvalidStructure("Y mask must be square".into()));
        }
        if let Some(row) = y_mask.row_iter().position(|r| r.iter().all(|free| !free)) {
            return Err(LmiError::InvalidStructure(format!(
                "row {} of the Y mask has no free entry",
                row + 1
            )));
        }
        let n = y_mask.nrows();
        for &((a, b), (c, d)) in &y_ties {
            if a >= n || b >= n || c >= n || d >= n {
                return Err(LmiError::InvalidStructure("tie index out of range".into()));
            }
            if !y_mask[(a, b)] || !y_mask[(c, d)] {
                return Err(LmiError::InvalidStructure("tie refers to a pinned entry".into()));
            }
        }
        Ok(Self {
            y_mask,
            x_scalar,
            y_ties,
        })
    }

    /// Every entry free, optionally with scalar `X`.
    pub fn unstructured(n: usize, x_scalar: bool) -> Self {
        Self {
            y_mask: DMatrix::from_element(n, n, true),
            x_scalar,
            y_ties: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.y_mask.nrows()
    }
}

fn check_dims(sys: &LtiSystem, cost: &QuadraticCost, layout: &VariableLayout) -> Result<(), LmiError> {
    cost.check_against(sys)
        .map_err(|e| LmiError::DimensionMismatch(e.to_string()))?;
    if layout.order() != sys.n() {
        return Err(LmiError::DimensionMismatch(format!(
            "layout order {} differs from state dimension {}",
            layout.order(),
            sys.n()
        )));
    }
    Ok(())
}

fn checked_input_weight(sys: &LtiSystem, cost: &QuadraticCost) -> Result<Matrix, LmiError> {
    if !matops::is_positive_definite(cost.r()) {
        return Err(LmiError::RNotPositiveDefinite);
    }
    Ok(cost.input_weight(sys))
}

/// `X A^T + A X - Y^T S - S Y < 0` with `S = B R^-1 B^T`.
pub fn build_stability_lmi(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    layout: &VariableLayout,
    margin: f64,
) -> Result<AffineMatrixConstraint, LmiError> {
    check_dims(sys, cost, layout)?;
    let s = checked_input_weight(sys, cost)?;
    let a = sys.a().clone();
    let xb = *layout.block(BlockName::X)?;
    let yb = *layout.block(BlockName::Y)?;
    let n = sys.n();
    Ok(AffineMatrixConstraint::from_linear_map(
        "stability",
        layout.dim(),
        Matrix::zeros(n, n),
        Sense::NegativeDefinite,
        margin,
        |v| {
            let x = xb.assemble(v);
            let y = yb.assemble(v);
            &x * a.transpose() + &a * &x - y.transpose() * &s - &s * &y
        },
    ))
}

/// The `(2n+m)`-square block inequality
///
/// ```text
/// [ A^T P_ + P_^T A - Q + W   (I + Y^T A)^T   P_^T B ]
/// [ I + Y^T A                 X               0      ]  > 0
/// [ B^T P_                    0               R      ]
/// ```
pub fn build_suboptimality_lmi(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    layout: &VariableLayout,
    margin: f64,
) -> Result<AffineMatrixConstraint, LmiError> {
    check_dims(sys, cost, layout)?;
    let (n, m) = (sys.n(), sys.m());
    let a = sys.a().clone();
    let b = sys.b().clone();
    let xb = *layout.block(BlockName::X)?;
    let yb = *layout.block(BlockName::Y)?;
    let wb = *layout.block(BlockName::W)?;
    let pb = *layout.block(BlockName::PLower)?;

    let size = 2 * n + m;
    let mut constant = Matrix::zeros(size, size);
    constant.view_mut((0, 0), (n, n)).copy_from(&(-cost.q()));
    constant.view_mut((n, 0), (n, n)).fill_with_identity();
    constant.view_mut((0, n), (n, n)).fill_with_identity();
    constant.view_mut((2 * n, 2 * n), (m, m)).copy_from(cost.r());

    Ok(AffineMatrixConstraint::from_linear_map(
        "suboptimality",
        layout.dim(),
        constant,
        Sense::PositiveDefinite,
        margin,
        |v| {
            let x = xb.assemble(v);
            let y = yb.assemble(v);
            let w = wb.assemble(v);
            let pl = pb.assemble(v);
            let mut g = Matrix::zeros(size, size);
            let top = a.transpose() * &pl + pl.transpose() * &a + w;
            let mid = y.transpose() * &a;
            let side = pl.transpose() * &b;
            g.view_mut((0, 0), (n, n)).copy_from(&top);
            g.view_mut((n, 0), (n, n)).copy_from(&mid);
            g.view_mut((0, n), (n, n)).copy_from(&mid.transpose());
            g.view_mut((n, n), (n, n)).copy_from(&x);
            g.view_mut((0, 2 * n), (n, m)).copy_from(&side);
            g.view_mut((2 * n, 0), (m, n)).copy_from(&side.transpose());
            g
        },
    ))
}

/// Realness equality: with `M = A X - S Y`, requires `M - M^T = 0`, stored as
/// the symmetric embedding `[[0, M - M^T], [(M - M^T)^T, 0]] = 0`.
///
/// With `X > 0` this makes the closed loop similar to a symmetric matrix
/// (real spectrum); with scalar `X` the closed loop itself is symmetric.
pub fn build_realness_constraint(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    layout: &VariableLayout,
) -> Result<AffineMatrixConstraint, LmiError> {
    check_dims(sys, cost, layout)?;
    let s = checked_input_weight(sys, cost)?;
    let a = sys.a().clone();
    let xb = *layout.block(BlockName::X)?;
    let yb = *layout.block(BlockName::Y)?;
    let n = sys.n();
    Ok(AffineMatrixConstraint::from_linear_map(
        "realness",
        layout.dim(),
        Matrix::zeros(2 * n, 2 * n),
        Sense::Zero,
        0.0,
        |v| {
            let x = xb.assemble(v);
            let y = yb.assemble(v);
            let d = &a * &x - &x * a.transpose() - &s * &y + y.transpose() * &s;
            let mut g = Matrix::zeros(2 * n, 2 * n);
            g.view_mut((0, n), (n, n)).copy_from(&d);
            g.view_mut((n, 0), (n, n)).copy_from(&d.transpose());
            g
        },
    ))
}

/// `block >= margin * I`.
pub fn build_block_lower_bound(
    layout: &VariableLayout,
    name: BlockName,
    margin: f64,
) -> Result<AffineMatrixConstraint, LmiError> {
    let block = *layout.block(name)?;
    let n = layout.order();
    Ok(AffineMatrixConstraint::from_linear_map(
        format!("{name} positive"),
        layout.dim(),
        Matrix::zeros(n, n),
        Sense::PositiveDefinite,
        margin,
        |v| matops::symmetric_part(&block.assemble(v)),
    ))
}

/// `block <= cap * I`.
pub fn build_block_upper_bound(
    layout: &VariableLayout,
    name: BlockName,
    cap: f64,
) -> Result<AffineMatrixConstraint, LmiError> {
    let block = *layout.block(name)?;
    let n = layout.order();
    Ok(AffineMatrixConstraint::from_linear_map(
        format!("{name} cap"),
        layout.dim(),
        -Matrix::identity(n, n) * cap,
        Sense::NegativeDefinite,
        0.0,
        |v| matops::symmetric_part(&block.assemble(v)),
    ))
}

fn scalar_equality(name: String, terms: &[(usize, f64)]) -> AffineMatrixConstraint {
    let mut coefficients = BTreeMap::new();
    for &(k, c) in terms {
        coefficients.insert(k, Matrix::from_element(1, 1, c));
    }
    AffineMatrixConstraint {
        name,
        constant: Matrix::zeros(1, 1),
        coefficients,
        sense: Sense::Zero,
        margin: 0.0,
    }
}

/// Equality constraints for a structure: one zero-pin per masked `Y` entry,
/// one equality per tie, and for scalar `X` zero-pins on the off-diagonal
/// plus `X_ii = X_11`.
pub fn apply_structure(
    layout: &VariableLayout,
    spec: &StructureSpec,
) -> Result<Vec<AffineMatrixConstraint>, LmiError> {
    let n = layout.order();
    if spec.order() != n {
        return Err(LmiError::DimensionMismatch(format!(
            "structure is {}x{}, layout order is {n}",
            spec.order(),
            spec.order()
        )));
    }
    let yb = *layout.block(BlockName::Y)?;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !spec.y_mask[(i, j)] {
                out.push(scalar_equality(
                    format!("pin Y({},{})", i + 1, j + 1),
                    &[(yb.index(i, j), 1.0)],
                ));
            }
        }
    }
    for &((a, b), (c, d)) in &spec.y_ties {
        out.push(scalar_equality(
            format!("tie Y({},{}) = Y({},{})", a + 1, b + 1, c + 1, d + 1),
            &[(yb.index(a, b), 1.0), (yb.index(c, d), -1.0)],
        ));
    }
    if spec.x_scalar {
        let xb = *layout.block(BlockName::X)?;
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(scalar_equality(
                    format!("pin X({},{})", i + 1, j + 1),
                    &[(xb.index(i, j), 1.0)],
                ));
            }
        }
        for i in 1..n {
            out.push(scalar_equality(
                format!("tie X({0},{0}) = X(1,1)", i + 1),
                &[(xb.index(i, i), 1.0), (xb.index(0, 0), -1.0)],
            ));
        }
    }
    Ok(out)
}
