//! Dense linear-algebra helpers shared by the solver, the oracle and the
//! certificate checks.
//!
//! Everything here is desk-scale and dense. Matrices are `nalgebra::DMatrix<f64>`;
//! anything spectral goes through the symmetric eigensolver.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use thiserror::Error;

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance used for rank decisions throughout the crate.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("linear system is singular or numerically rank-deficient")]
    Singular,
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
}

pub fn ensure_finite_matrix(m: &DenseMatrix, what: &'static str) -> Result<(), NumericsError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite(what))
    }
}

pub fn ensure_finite_vector(v: &Vector, what: &'static str) -> Result<(), NumericsError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite(what))
    }
}

/// `[0 M; Mᵀ 0]`, whose eigenvalues are `±σ_i` of `M` plus `|rows - cols|`
/// zeros, with eigenvectors `[u_i; ±v_i] / √2`.
///
/// Singular values and vectors are read off its symmetric eigendecomposition
/// rather than nalgebra's SVD, which loses up to several digits on matrices
/// with clustered singular values (KKT matrices of box constraints, for one).
fn embedding_eigen(m: &DenseMatrix) -> SymmetricEigen<f64, Dyn> {
    let (r, c) = m.shape();
    let mut j = DenseMatrix::zeros(r + c, r + c);
    j.view_mut((0, r), (r, c)).copy_from(m);
    j.view_mut((r, 0), (c, r)).copy_from(&m.transpose());
    j.symmetric_eigen()
}

/// Eigenvalue indices sorted from largest to smallest.
fn descending(values: &Vector) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// The `min(rows, cols)` singular values of `m`, largest first.
pub fn singular_values(m: &DenseMatrix) -> Vector {
    let p = m.nrows().min(m.ncols());
    let eig = embedding_eigen(m);
    let order = descending(&eig.eigenvalues);
    Vector::from_iterator(p, order[..p].iter().map(|&i| eig.eigenvalues[i].max(0.0)))
}

/// Thin SVD `m = U diag(σ) Vᵀ` of a matrix with full rank `min(rows, cols)`.
/// Singular vectors belonging to zero singular values are not meaningful.
pub fn thin_svd(m: &DenseMatrix) -> (DenseMatrix, Vector, DenseMatrix) {
    let (r, c) = m.shape();
    let p = r.min(c);
    let eig = embedding_eigen(m);
    let order = descending(&eig.eigenvalues);
    let scale = std::f64::consts::SQRT_2;
    let u = DenseMatrix::from_fn(r, p, |i, k| scale * eig.eigenvectors[(i, order[k])]);
    let v = DenseMatrix::from_fn(c, p, |i, k| scale * eig.eigenvectors[(r + i, order[k])]);
    let sigma = Vector::from_iterator(p, order[..p].iter().map(|&i| eig.eigenvalues[i].max(0.0)));
    (u, sigma, v)
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(m: &DenseMatrix, tol: f64) -> Result<usize, NumericsError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(NumericsError::Dimension("rank of an empty matrix".into()));
    }
    let sv = singular_values(m);
    let largest = sv.iter().cloned().fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * largest).count())
}

/// Minimum-norm least-squares solution of `m z = b` for symmetric `m` (its
/// symmetric part is used), with eigenvalues below `tol` times the largest
/// magnitude treated as zero.
pub fn symmetric_least_squares(m: &DenseMatrix, b: &Vector, tol: f64) -> Result<Vector, NumericsError> {
    if !m.is_square() || m.nrows() != b.len() {
        return Err(NumericsError::Dimension(format!(
            "rhs has length {}, matrix is {}x{}",
            b.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = ((m + m.transpose()) * 0.5).symmetric_eigen();
    let cutoff = tol * eig.eigenvalues.amax();
    let coords = eig.eigenvectors.transpose() * b;
    let scaled = Vector::from_iterator(
        coords.len(),
        coords.iter().zip(eig.eigenvalues.iter()).map(|(c, &l)| if l.abs() > cutoff { c / l } else { 0.0 }),
    );
    Ok(&eig.eigenvectors * scaled)
}

fn asymmetry(m: &DenseMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Fails when `m` is not square or its entries differ from the transpose by more
/// than `tol` (scaled by the largest entry when that exceeds one).
pub fn check_symmetric(m: &DenseMatrix, tol: f64) -> Result<(), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let worst = asymmetry(m);
    if worst > tol * m.amax().max(1.0) {
        return Err(NumericsError::Asymmetric(worst));
    }
    Ok(())
}

pub fn min_eigenvalue(m: &DenseMatrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// True iff the smallest eigenvalue of the symmetric matrix `m` is at least `-tol`.
pub fn is_psd(m: &DenseMatrix, tol: f64) -> Result<bool, NumericsError> {
    check_symmetric(m, tol)?;
    Ok(min_eigenvalue(m) >= -tol)
}

/// Solves `m z = b` by LU with full pivoting.
///
/// A pivot below `n * eps` times the largest pivot is treated as singular.
pub fn solve_linear(m: &DenseMatrix, b: &Vector) -> Result<Vector, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::Dimension(format!(
            "solve needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() != b.len() {
        return Err(NumericsError::Dimension(format!(
            "rhs has length {}, matrix has {} rows",
            b.len(),
            m.nrows()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vector::zeros(0));
    }
    let lu = m.clone().full_piv_lu();
    let u = lu.u();
    let diag = u.diagonal();
    let largest = diag.amax();
    let smallest = diag.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if largest == 0.0 || smallest <= (n as f64) * f64::EPSILON * largest {
        return Err(NumericsError::Singular);
    }
    lu.solve(b).ok_or(NumericsError::Singular)
}

/// Orthonormal basis of the null space of `m` (columns), using `RANK_TOL`.
pub fn null_space(m: &DenseMatrix) -> DenseMatrix {
    let (r, n) = m.shape();
    if r == 0 {
        return DenseMatrix::identity(n, n);
    }
    // The (near-)zero eigenvectors of the embedding span left and right null
    // spaces together; their lower blocks W give the projector WWᵀ onto the
    // right one, whose unit eigenvectors are the basis.
    let eig = embedding_eigen(m);
    let largest = eig.eigenvalues.amax();
    let zero: Vec<usize> = (0..r + n).filter(|&i| eig.eigenvalues[i].abs() <= RANK_TOL * largest).collect();
    let w = DenseMatrix::from_fn(n, zero.len(), |i, k| eig.eigenvectors[(r + i, zero[k])]);
    let projector = &w * w.transpose();
    let proj_eig = projector.symmetric_eigen();
    let cols: Vec<Vector> = (0..n)
        .filter(|&i| proj_eig.eigenvalues[i] > 0.5)
        .map(|i| proj_eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DenseMatrix::zeros(n, 0)
    } else {
        DenseMatrix::from_columns(&cols)
    }
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[&DenseMatrix], cols: usize) -> DenseMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DenseMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(b);
        at += b.nrows();
    }
    out
}

pub fn vconcat(parts: &[&Vector]) -> Vector {
    Vector::from_iterator(
        parts.iter().map(|p| p.len()).sum(),
        parts.iter().flat_map(|p| p.iter().cloned()),
    )
}

pub fn block_diag(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}
