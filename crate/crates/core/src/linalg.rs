//! Dense numerical kernels: eigenvalues, semidefinite Cholesky, Schur
//! complements, determinants and edge sign flips.

use nalgebra::DMatrix;

use crate::complex::VertexSet;
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Default relative tolerance for semidefiniteness decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Condition number above which a pivot block counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub tolerance_used: f64,
}

/// Eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations. Deterministic for a given input on every platform.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Semidefiniteness verdict: `min eigenvalue ≥ -tol · max(1, max |entry|)`.
pub fn is_psd(sigma: &SymmetricMatrix, tol: f64) -> Result<PsdReport> {
    sigma.check_finite()?;
    let min_eigenvalue = symmetric_eigenvalues(sigma.as_dmatrix())
        .first()
        .copied()
        .unwrap_or(0.0);
    let tolerance_used = tol * sigma.scale();
    Ok(PsdReport {
        is_psd: min_eigenvalue >= -tolerance_used,
        min_eigenvalue,
        tolerance_used,
    })
}

/// Lower-triangular `L` with `L Lᵀ = Σ` for semidefinite `Σ`.
///
/// Pivots below `tol · max |entry|` yield an all-zero column; no pivoting
/// is done, so column `k` is supported on rows `k..`.
pub fn cholesky(sigma: &SymmetricMatrix, tol: f64) -> Result<DMatrix<f64>> {
    sigma.check_finite()?;
    cholesky_semidefinite(sigma.as_dmatrix(), tol)
}

pub(crate) fn cholesky_semidefinite(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let scale = a.amax();
    let mut l = DMatrix::<f64>::zeros(n, n);
    if scale == 0.0 {
        return Ok(l);
    }
    let pivot_floor = tol * scale;
    let residual_limit = tol.sqrt() * scale;
    for k in 0..n {
        let mut d = a[(k, k)];
        for j in 0..k {
            d -= l[(k, j)] * l[(k, j)];
        }
        if d < -pivot_floor {
            return Err(Error::NotPsd { min_eigenvalue: d });
        }
        if d <= pivot_floor {
            for i in k + 1..n {
                let mut r = a[(i, k)];
                for j in 0..k {
                    r -= l[(i, j)] * l[(k, j)];
                }
                if r.abs() > residual_limit {
                    return Err(Error::NotPsd { min_eigenvalue: -r.abs() });
                }
            }
            continue;
        }
        let lkk = d.sqrt();
        l[(k, k)] = lkk;
        for i in k + 1..n {
            let mut r = a[(i, k)];
            for j in 0..k {
                r -= l[(i, j)] * l[(k, j)];
            }
            l[(i, k)] = r / lkk;
        }
    }
    Ok(l)
}

/// `L Lᵀ` as a symmetric matrix.
pub fn reconstruct(l: &DMatrix<f64>) -> SymmetricMatrix {
    let p = l * l.transpose();
    SymmetricMatrix::from_lower_fn(p.nrows(), |i, j| p[(i, j)])
}

/// Schur complement `M / M_{U,U}` on the remaining vertices, listed in
/// increasing order.
pub fn schur_complement(m: &SymmetricMatrix, u: VertexSet) -> Result<SymmetricMatrix> {
    m.check_finite()?;
    let n = m.dim();
    if !u.is_subset(VertexSet::full(n)) {
        return Err(Error::InvalidInput(format!("{u:?} is not a subset of 0..{n}")));
    }
    if u.len() == n {
        return Err(Error::InvalidInput("cannot eliminate every vertex".into()));
    }
    let keep: Vec<usize> = VertexSet::full(n).difference(u).to_vec();
    let elim: Vec<usize> = u.to_vec();
    if elim.is_empty() {
        return Ok(m.clone());
    }
    let block = m.principal_submatrix(&elim);
    let ev = symmetric_eigenvalues(block.as_dmatrix());
    let max_abs = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_abs = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let condition = if min_abs == 0.0 { f64::INFINITY } else { max_abs / min_abs };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularBlock { condition });
    }
    let cross = DMatrix::from_fn(elim.len(), keep.len(), |a, b| m.get(elim[a], keep[b]));
    let solved = block
        .as_dmatrix()
        .clone()
        .lu()
        .solve(&cross)
        .ok_or(Error::SingularBlock { condition })?;
    let correction = cross.transpose() * solved;
    Ok(SymmetricMatrix::from_lower_fn(keep.len(), |a, b| {
        m.get(keep[a], keep[b]) - 0.5 * (correction[(a, b)] + correction[(b, a)])
    }))
}

/// `Σ^{(ij)}`: the matrix with entries `(i,j)` and `(j,i)` negated.
pub fn sign_flip(sigma: &SymmetricMatrix, i: usize, j: usize) -> Result<SymmetricMatrix> {
    if i == j {
        return Err(Error::InvalidInput(format!("sign flip needs i != j, got {i}")));
    }
    if i >= sigma.dim() || j >= sigma.dim() {
        return Err(Error::InvalidInput(format!("index out of range for dimension {}", sigma.dim())));
    }
    let mut out = sigma.clone();
    out.set(i, j, -sigma.get(i, j));
    Ok(out)
}

/// Determinant of the symmetric tridiagonal matrix with the given diagonal
/// and off-diagonal, by the three-term recurrence. The empty matrix has
/// determinant one.
pub fn tridiagonal_det(diagonal: &[f64], offdiagonal: &[f64]) -> f64 {
    assert!(
        offdiagonal.len() + 1 == diagonal.len() || diagonal.is_empty() && offdiagonal.is_empty(),
        "tridiagonal_det: {} diagonal and {} off-diagonal entries",
        diagonal.len(),
        offdiagonal.len()
    );
    let mut prev = 1.0;
    let mut cur = match diagonal.first() {
        Some(&d) => d,
        None => return 1.0,
    };
    for k in 1..diagonal.len() {
        let next = diagonal[k] * cur - offdiagonal[k - 1] * offdiagonal[k - 1] * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Dense determinant by LU with partial pivoting.
pub fn determinant(sigma: &SymmetricMatrix) -> f64 {
    if sigma.dim() == 0 {
        return 1.0;
    }
    sigma.as_dmatrix().clone().lu().determinant()
}
