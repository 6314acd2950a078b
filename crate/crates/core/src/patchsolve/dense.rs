//! Dense factorizations on patch-sized matrices, backed by faer.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use nalgebra as na;

use crate::{Error, Result};

/// Relative residual bound certified after every linear solve.
pub const SOLVE_TOL: f64 = 1e-10;

pub(crate) fn view(a: &na::DMatrix<f64>) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols())
}

pub(crate) fn to_na(m: MatRef<'_, f64>) -> na::DMatrix<f64> {
    na::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn col_to_mat(b: &na::DVector<f64>) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn breakdown(context: &str, detail: impl Into<String>) -> Error {
    Error::NumericalBreakdown {
        context: context.into(),
        detail: detail.into(),
    }
}

fn frobenius(a: &na::DMatrix<f64>) -> f64 {
    a.norm()
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
pub struct Cholesky {
    llt: faer::linalg::solvers::Llt<f64>,
    n: usize,
}

impl Cholesky {
    pub fn new(a: &na::DMatrix<f64>) -> Result<Cholesky> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let llt = view(a)
            .llt(Side::Lower)
            .map_err(|e| breakdown("cholesky", format!("{e:?} (n = {}, |A|_F = {:.3e})", a.nrows(), frobenius(a))))?;
        Ok(Cholesky { llt, n: a.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &na::DVector<f64>) -> na::DVector<f64> {
        let mut x = col_to_mat(b);
        self.llt.solve_in_place(x.as_mut());
        na::DVector::from_fn(self.n, |i, _| x[(i, 0)])
    }

    pub fn solve_matrix(&self, b: &na::DMatrix<f64>) -> na::DMatrix<f64> {
        let mut x = Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)]);
        self.llt.solve_in_place(x.as_mut());
        to_na(x.as_ref())
    }

    /// The lower triangular factor.
    pub fn l(&self) -> na::DMatrix<f64> {
        to_na(self.llt.L())
    }
}

/// `X R⁻¹` with `XᵀX = RᵀR`: solves `R Y = Xᵀ` style right divisions by
/// the upper factor `Lᵀ` of `chol`.
pub fn right_divide_by_upper(x: &na::DMatrix<f64>, chol: &Cholesky) -> na::DMatrix<f64> {
    let l = chol.l();
    // Y Lᵀ = X  <=>  L Yᵀ = Xᵀ
    let mut yt = x.transpose();
    l.solve_lower_triangular_mut(&mut yt);
    yt.transpose()
}

/// Solves `A x = b` by partially pivoted LU with one step of iterative
/// refinement. The result satisfies `|Ax - b| <= SOLVE_TOL |b|`.
pub fn lu_solve(a: &na::DMatrix<f64>, b: &na::DVector<f64>) -> Result<na::DVector<f64>> {
    let (x, res) = lu_solve_unchecked(a, b)?;
    let bound = SOLVE_TOL * b.norm();
    if res > bound || !res.is_finite() {
        return Err(breakdown(
            "lu_solve",
            format!("residual {res:.3e} above {bound:.3e} (n = {})", a.nrows()),
        ));
    }
    Ok(x)
}

/// LU solve returning the solution and its absolute residual.
pub fn lu_solve_unchecked(a: &na::DMatrix<f64>, b: &na::DVector<f64>) -> Result<(na::DVector<f64>, f64)> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok((na::DVector::zeros(0), 0.0));
    }
    let lu = view(a).partial_piv_lu();
    let solve = |rhs: &na::DVector<f64>| {
        let mut x = col_to_mat(rhs);
        lu.solve_in_place(x.as_mut());
        na::DVector::from_fn(n, |i, _| x[(i, 0)])
    };
    let mut x = solve(b);
    let r = b - a * &x;
    x += solve(&r);
    let res = (b - a * &x).norm();
    if !x.iter().all(|v| v.is_finite()) {
        return Err(breakdown("lu_solve", "non-finite solution"));
    }
    Ok((x, res))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
pub fn sym_eig(a: &na::DMatrix<f64>) -> Result<(na::DVector<f64>, na::DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((na::DVector::zeros(0), na::DMatrix::zeros(0, 0)));
    }
    let sym = (a + a.transpose()) * 0.5;
    let evd = view(&sym)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| breakdown("sym_eig", format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = na::DVector::from_fn(n, |i, _| s[i]);
    Ok((values, to_na(evd.U())))
}

/// Eigenvalues (ascending) of a symmetric matrix.
pub fn sym_eigenvalues(a: &na::DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let sym = (a + a.transpose()) * 0.5;
    view(&sym)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| breakdown("sym_eigenvalues", format!("{e:?}")))
}

/// Eigenvalues (ascending) of the pencil `A x = λ M x` with `M` SPD, by
/// reduction with the Cholesky factor of `M`.
pub fn generalized_eigenvalues(a: &na::DMatrix<f64>, m: &na::DMatrix<f64>) -> Result<Vec<f64>> {
    let c = reduce_pencil(a, m)?;
    sym_eigenvalues(&c)
}

fn reduce_pencil(a: &na::DMatrix<f64>, m: &na::DMatrix<f64>) -> Result<na::DMatrix<f64>> {
    let chol = Cholesky::new(m)?;
    let l = chol.l();
    let mut y = a.clone();
    l.solve_lower_triangular_mut(&mut y);
    let mut c = y.transpose();
    l.solve_lower_triangular_mut(&mut c);
    Ok(c)
}

/// Eigenpairs of the pencil `A x = λ M x`; eigenvectors are M-orthonormal.
pub fn generalized_eig(a: &na::DMatrix<f64>, m: &na::DMatrix<f64>) -> Result<(na::DVector<f64>, na::DMatrix<f64>)> {
    let chol = Cholesky::new(m)?;
    let l = chol.l();
    let mut y = a.clone();
    l.solve_lower_triangular_mut(&mut y);
    let mut c = y.transpose();
    l.solve_lower_triangular_mut(&mut c);
    let (values, mut vecs) = sym_eig(&c)?;
    l.transpose().solve_upper_triangular_mut(&mut vecs);
    Ok((values, vecs))
}

/// Singular values, largest first.
pub fn singular_values(a: &na::DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = view(a)
        .singular_values()
        .map_err(|e| breakdown("singular_values", format!("{e:?}")))?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Numerical rank: singular values above `rel_tol` times the largest.
pub fn numerical_rank(a: &na::DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let top = s.first().copied().unwrap_or(0.0);
    Ok(s.iter().filter(|&&v| v > rel_tol * top && v > 0.0).count())
}

/// Orthonormal basis of the numerical null space of `a`, from the right
/// singular vectors of the `dim` smallest singular values.
pub fn null_space(a: &na::DMatrix<f64>, dim: usize) -> Result<(na::DMatrix<f64>, Vec<f64>)> {
    let n = a.ncols();
    if dim == 0 {
        return Ok((na::DMatrix::zeros(n, 0), Vec::new()));
    }
    // pad to at least square so the thin factor carries all right vectors
    let rows = a.nrows().max(n);
    let padded = na::DMatrix::from_fn(rows, n, |i, j| if i < a.nrows() { a[(i, j)] } else { 0.0 });
    let svd = view(&padded).svd().map_err(|e| breakdown("null_space", format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let picked = &order[..dim];
    let basis = na::DMatrix::from_fn(n, dim, |i, k| v[(i, picked[k])]);
    Ok((basis, picked.iter().map(|&i| s[i]).collect()))
}
