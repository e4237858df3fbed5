//! Dense linear-algebra helpers shared by the system and pencil modules.

use nalgebra::{Complex, DMatrix, Hessenberg, LU};

use crate::error::{LoewnerError, Result};

pub type C64 = Complex<f64>;

pub(crate) fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub(crate) fn max_imag(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

pub(crate) fn all_finite(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest singular value. Used for the per-sample 2-norm of small
/// transfer-function matrices.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0, |acc: f64, &s| acc.max(s))
}

/// Solves `a * x = b` by partial-pivoting LU. Returns `None` when a pivot
/// falls below `n * eps * max|a|`, i.e. the matrix is numerically singular.
pub(crate) fn lu_solve(a: DMatrix<C64>, b: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let n = a.nrows();
    let scale = max_abs(&a);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let lu = LU::new(a);
    let u = lu.u();
    let tiny = n as f64 * f64::EPSILON * scale;
    if u.diagonal().iter().any(|p| p.norm() <= tiny) {
        return None;
    }
    let x = lu.solve(b)?;
    all_finite(&x).then_some(x)
}

/// Same as [`lu_solve`] for real matrices.
pub(crate) fn lu_solve_real(a: DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let scale = max_abs_real(&a);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let lu = LU::new(a);
    let u = lu.u();
    let tiny = n as f64 * f64::EPSILON * scale;
    if u.diagonal().iter().any(|p| p.abs() <= tiny) {
        return None;
    }
    let x = lu.solve(b)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Evaluates `C (sI - H)^{-1} B + D` for many `s` after a one-off reduction
/// of the state matrix to upper Hessenberg form.
///
/// Given a descriptor realization `(E, A, B, C, D)` with invertible `E`,
/// `E^{-1} A = Q H Q^*` so each evaluation costs `O(n^2)` instead of a fresh
/// `O(n^3)` factorization.
#[derive(Clone, Debug)]
pub struct ResolventEvaluator {
    hess: DMatrix<C64>,
    b: DMatrix<C64>,
    c: DMatrix<C64>,
    d: DMatrix<C64>,
    scale: f64,
}

impl ResolventEvaluator {
    pub fn new(
        e: &DMatrix<C64>,
        a: &DMatrix<C64>,
        b: &DMatrix<C64>,
        c: &DMatrix<C64>,
        d: &DMatrix<C64>,
    ) -> Result<Self> {
        let n = a.nrows();
        let mut rhs = DMatrix::<C64>::zeros(n, n + b.ncols());
        rhs.columns_mut(0, n).copy_from(a);
        rhs.columns_mut(n, b.ncols()).copy_from(b);
        let sol = lu_solve(e.clone(), &rhs).ok_or(LoewnerError::SingularE)?;
        let state = sol.columns(0, n).into_owned();
        let input = sol.columns(n, b.ncols()).into_owned();

        let (q, hess) = Hessenberg::new(state).unpack();
        let b_hat = q.adjoint() * input;
        let c_hat = c * q;
        let scale = max_abs(&hess);
        Ok(Self {
            hess,
            b: b_hat,
            c: c_hat,
            d: d.clone(),
            scale,
        })
    }

    pub fn eval(&self, s: C64) -> Result<DMatrix<C64>> {
        let n = self.hess.nrows();
        let m = self.b.ncols();
        let mut t = -self.hess.clone();
        for k in 0..n {
            t[(k, k)] += s;
        }
        let mut z = self.b.clone();
        let tiny = n as f64 * f64::EPSILON * (self.scale + s.norm());

        // Gaussian elimination on an upper Hessenberg matrix: only the single
        // subdiagonal entry per column needs eliminating.
        for k in 0..n.saturating_sub(1) {
            if t[(k + 1, k)].norm() > t[(k, k)].norm() {
                t.swap_rows(k, k + 1);
                z.swap_rows(k, k + 1);
            }
            let pivot = t[(k, k)];
            if pivot.norm() <= tiny {
                return Err(LoewnerError::SingularPencil { s });
            }
            let l = t[(k + 1, k)] / pivot;
            if l != C64::new(0.0, 0.0) {
                t[(k + 1, k)] = C64::new(0.0, 0.0);
                for j in (k + 1)..n {
                    let v = t[(k, j)];
                    t[(k + 1, j)] -= l * v;
                }
                for j in 0..m {
                    let v = z[(k, j)];
                    z[(k + 1, j)] -= l * v;
                }
            }
        }
        if n > 0 && t[(n - 1, n - 1)].norm() <= tiny {
            return Err(LoewnerError::SingularPencil { s });
        }
        for j in 0..m {
            for i in (0..n).rev() {
                let mut acc = z[(i, j)];
                for k in (i + 1)..n {
                    acc -= t[(i, k)] * z[(k, j)];
                }
                z[(i, j)] = acc / t[(i, i)];
            }
        }
        let h = &self.c * z + &self.d;
        if !all_finite(&h) {
            return Err(LoewnerError::SingularPencil { s });
        }
        Ok(h)
    }
}
