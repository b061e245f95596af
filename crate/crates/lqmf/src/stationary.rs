//! Dense kernel for stationary equations of linear SDEs.
//!
//! Everything downstream reduces to three operations on small dense
//! matrices:
//!
//! - stability tests (spectral abscissa of a general square matrix),
//! - the continuous Lyapunov equation `W Y + Y W^T + S = 0`,
//! - the continuous algebraic Riccati equation
//!   `A^T P + P A - P B R^-1 B^T P + Q = 0`.
//!
//! The Lyapunov solve vectorizes through the Kronecker identity
//! `(I (x) W + W (x) I) vec(Y) = -vec(S)` and solves the dense `d^2`
//! system by LU. At the intended scale (`d <= ~10`) this is exact,
//! reproducible and dependency-free. The Riccati solve is a
//! Newton-Kleinman iteration, one Lyapunov solve per step, started from
//! a stabilizing gain.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Eigenvalues with real part above `-STABILITY_MARGIN` are ruled
/// unstable, keeping downstream Lyapunov solves well-conditioned.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Relative residual accepted from a Lyapunov solve.
pub const LYAP_TOL: f64 = 1e-10;

/// Relative residual accepted from a Riccati solve.
pub const CARE_TOL: f64 = 1e-10;

/// Relative asymmetry tolerated in inputs required to be symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Stability verdict for a square matrix.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub is_stable: bool,
    /// Largest real part over all eigenvalues.
    pub spectral_abscissa: f64,
    /// All eigenvalues, sorted by descending real part (ties by
    /// descending imaginary part) so output is deterministic.
    pub eigenvalues: Vec<Complex<f64>>,
}

/// Stabilizing solution of a continuous algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct CareSolution {
    /// Symmetric positive definite value matrix.
    pub p_star: DMatrix<f64>,
    /// Optimal gain `K* = R^-1 B^T P*`.
    pub k_star: DMatrix<f64>,
    /// Frobenius norm of the Riccati residual at `p_star`.
    pub residual_norm: f64,
}

/// Spectral abscissa test: stable means every eigenvalue has real part
/// below `-STABILITY_MARGIN`.
pub fn is_stable(m: &DMatrix<f64>) -> Result<StabilityReport> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: format!("stability test needs a square matrix, got {}x{}", m.nrows(), m.ncols()),
        });
    }
    if !is_finite(m) {
        return Err(Error::NonFinite { what: "stability test input" });
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailure)?;
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let spectral_abscissa = eigenvalues.first().map(|e| e.re).unwrap_or(f64::NEG_INFINITY);
    Ok(StabilityReport {
        is_stable: spectral_abscissa < -STABILITY_MARGIN,
        spectral_abscissa,
        eigenvalues,
    })
}

/// Solves `W Y + Y W^T + S = 0` for stable `W` and symmetric `S`.
///
/// The output is symmetrized and its residual checked against
/// [`LYAP_TOL`]; positive semidefinite `S` yields positive semidefinite
/// `Y`.
pub fn solve_lyapunov(w: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = w.nrows();
    if !w.is_square() || !s.is_square() || s.nrows() != d {
        return Err(Error::DimensionMismatch {
            what: format!(
                "Lyapunov operands must be square of equal size, got {}x{} and {}x{}",
                w.nrows(),
                w.ncols(),
                s.nrows(),
                s.ncols()
            ),
        });
    }
    if !is_finite(s) {
        return Err(Error::NonFinite { what: "Lyapunov right-hand side" });
    }
    let s_norm = s.norm();
    if s_norm > 0.0 {
        let asymmetry = (s - s.transpose()).norm() / s_norm;
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::AsymmetricInput { asymmetry });
        }
    }
    let report = is_stable(w)?;
    if !report.is_stable {
        return Err(Error::UnstableMatrix { abscissa: report.spectral_abscissa });
    }

    // vec(WY) = (I (x) W) vec(Y), vec(Y W^T) = (W (x) I) vec(Y).
    let eye = DMatrix::<f64>::identity(d, d);
    let coeff = eye.kronecker(w) + w.kronecker(&eye);
    let rhs = DMatrix::from_column_slice(d * d, 1, s.as_slice());
    let vec_y = coeff
        .lu()
        .solve(&(-rhs))
        .ok_or_else(|| Error::Numerical { what: "singular Kronecker Lyapunov system".into() })?;
    let y = DMatrix::from_column_slice(d, d, vec_y.as_slice());
    let y = symmetrize(&y);

    let residual = (w * &y + &y * w.transpose() + s).norm();
    if residual > LYAP_TOL * s_norm.max(1.0) {
        return Err(Error::Numerical {
            what: format!("Lyapunov residual {residual:.3e} exceeds tolerance"),
        });
    }
    Ok(y)
}

/// Solves `A^T P + P A - P B R^-1 B^T P + Q = 0` for the stabilizing
/// `P*` by Newton-Kleinman iteration.
///
/// The start gain is `K0 = 0` when `A` is already stable, otherwise
/// `K0 = c B^T` with `c` doubled until the loop closes stably (at most
/// 50 attempts). Stability of `A - B K*` is verified on the result.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<CareSolution> {
    let d = a.nrows();
    let k = b.ncols();
    if !a.is_square() || b.nrows() != d || q.nrows() != d || !q.is_square() || r.nrows() != k || !r.is_square() {
        return Err(Error::DimensionMismatch {
            what: format!(
                "Riccati operands inconsistent: A {}x{}, B {}x{}, Q {}x{}, R {}x{}",
                a.nrows(), a.ncols(), b.nrows(), b.ncols(),
                q.nrows(), q.ncols(), r.nrows(), r.ncols()
            ),
        });
    }
    require_spd(q, "Q")?;
    require_spd(r, "R")?;

    let r_inv_bt = r
        .clone()
        .lu()
        .solve(&b.transpose())
        .ok_or_else(|| Error::Numerical { what: "R is numerically singular".into() })?;

    // Stabilizing start gain.
    let mut gain = DMatrix::<f64>::zeros(k, d);
    if !is_stable(a)?.is_stable {
        let mut c = 1.0;
        let mut found = false;
        for _ in 0..50 {
            gain = b.transpose().scale(c);
            if is_stable(&(a - b * &gain))?.is_stable {
                found = true;
                break;
            }
            c *= 2.0;
        }
        if !found {
            return Err(Error::NoStabilizingSolution {
                reason: "pole-shift start gain c B^T found no stabilizing c in 50 doublings".into(),
            });
        }
    }

    // Newton-Kleinman: each step solves the policy-evaluation Lyapunov
    // equation for the current gain and re-derives the gain from it.
    let mut p = DMatrix::<f64>::zeros(d, d);
    let mut converged = false;
    for _ in 0..100 {
        let closed = a - b * &gain;
        let cost = q + gain.transpose() * r * &gain;
        let p_next = solve_lyapunov(&closed.transpose(), &cost).map_err(|e| match e {
            Error::UnstableMatrix { abscissa } => Error::NoStabilizingSolution {
                reason: format!("Newton iterate lost stability (abscissa {abscissa:.3e})"),
            },
            other => other,
        })?;
        let step = (&p_next - &p).norm();
        p = p_next;
        gain = &r_inv_bt * &p;
        if step <= 1e-13 * p.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    let residual = care_residual(a, b, q, r, &p)?;
    if !converged || residual > CARE_TOL * q.norm() {
        return Err(Error::NoStabilizingSolution {
            reason: format!("Newton-Kleinman residual {residual:.3e} did not converge"),
        });
    }
    let closed_report = is_stable(&(a - b * &gain))?;
    if !closed_report.is_stable {
        return Err(Error::NoStabilizingSolution {
            reason: format!(
                "converged P yields unstable closed loop (abscissa {:.3e})",
                closed_report.spectral_abscissa
            ),
        });
    }
    Ok(CareSolution { p_star: symmetrize(&p), k_star: gain, residual_norm: residual })
}

/// Frobenius norm of `A^T P + P A - P B R^-1 B^T P + Q`.
pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64> {
    let r_inv_btp = r
        .clone()
        .lu()
        .solve(&(b.transpose() * p))
        .ok_or_else(|| Error::Numerical { what: "R is numerically singular".into() })?;
    Ok((a.transpose() * p + p * a - p * b * r_inv_btp + q).norm())
}

/// Closed-loop Lyapunov operator `F_K(X) = (A-BK) X + X (A-BK)^T`.
pub fn closed_loop_apply_f(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    k: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if !a.is_square() || b.nrows() != d || k.ncols() != d || k.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch {
            what: format!(
                "closed loop needs A {d}x{d}, B {d}xk, K kx{d}; got B {}x{}, K {}x{}",
                b.nrows(), b.ncols(), k.nrows(), k.ncols()
            ),
        });
    }
    if !x.is_square() || x.nrows() != d {
        return Err(Error::DimensionMismatch {
            what: format!("operator argument must be {d}x{d}, got {}x{}", x.nrows(), x.ncols()),
        });
    }
    let closed = a - b * k;
    Ok(&closed * x + x * closed.transpose())
}

/// `(Y + Y^T) / 2`.
pub fn symmetrize(y: &DMatrix<f64>) -> DMatrix<f64> {
    (y + y.transpose()).scale(0.5)
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// 2-norm condition number.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// Checks symmetry (within [`SYMMETRY_TOL`]) and positive definiteness
/// with minimum-eigenvalue floor `1e-12`.
pub fn require_spd(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if !is_finite(m) {
        return Err(Error::NonFinite { what });
    }
    let norm = m.norm();
    if norm > 0.0 {
        let asymmetry = (m - m.transpose()).norm() / norm;
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::AsymmetricInput { asymmetry });
        }
    }
    let min_eig = min_symmetric_eigenvalue(m);
    if min_eig <= 1e-12 {
        return Err(Error::NotPositiveDefinite { what, min_eig });
    }
    Ok(())
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// `tr(M^T N)`.
pub fn frobenius_inner(m: &DMatrix<f64>, n: &DMatrix<f64>) -> f64 {
    m.iter().zip(n.iter()).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn neg_identity_is_stable() {
        let report = is_stable(&DMatrix::from_diagonal_element(3, 3, -1.0)).unwrap();
        assert!(report.is_stable);
        assert!((report.spectral_abscissa + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_not_stable() {
        let m = dmatrix![0.0, 1.0; -1.0, 0.0];
        let report = is_stable(&m).unwrap();
        assert!(!report.is_stable);
        assert!(report.spectral_abscissa.abs() < 1e-10);
        // eigenvalues are +-i
        assert!((report.eigenvalues[0].im - 1.0).abs() < 1e-10);
        assert!((report.eigenvalues[1].im + 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let m = dmatrix![f64::NAN, 0.0; 0.0, -1.0];
        assert!(matches!(is_stable(&m), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn lyapunov_diagonal_case() {
        let w = DMatrix::from_diagonal_element(3, 3, -1.0);
        let s = DMatrix::from_diagonal_element(3, 3, 2.0);
        let y = solve_lyapunov(&w, &s).unwrap();
        assert!((y - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn lyapunov_scalar_case() {
        let w = dmatrix![-2.0];
        let s = dmatrix![4.0];
        let y = solve_lyapunov(&w, &s).unwrap();
        assert!((y[(0, 0)] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn lyapunov_rejects_unstable_w() {
        let w = dmatrix![1.0, 0.0; 0.0, -1.0];
        let s = DMatrix::identity(2, 2);
        assert!(matches!(solve_lyapunov(&w, &s), Err(Error::UnstableMatrix { .. })));
    }

    #[test]
    fn lyapunov_rejects_asymmetric_rhs() {
        let w = DMatrix::from_diagonal_element(2, 2, -1.0);
        let s = dmatrix![1.0, 0.5; 0.0, 1.0];
        assert!(matches!(solve_lyapunov(&w, &s), Err(Error::AsymmetricInput { .. })));
    }

    #[test]
    fn care_scalar_closed_form() {
        // -2P - P^2 + 1 = 0 has positive root sqrt(2) - 1.
        let sol = solve_care(&dmatrix![-1.0], &dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0]).unwrap();
        let expected = 2.0_f64.sqrt() - 1.0;
        assert!((sol.p_star[(0, 0)] - expected).abs() < 1e-12);
        assert!((sol.k_star[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn care_zero_input_matrix() {
        let a = DMatrix::from_diagonal_element(3, 3, -1.0);
        let b = DMatrix::zeros(3, 1);
        let q = DMatrix::from_diagonal_element(3, 3, 2.0);
        let r = dmatrix![1.0];
        let sol = solve_care(&a, &b, &q, &r).unwrap();
        assert!((sol.p_star - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert!(sol.k_star.norm() < 1e-14);
    }

    #[test]
    fn care_rejects_indefinite_q() {
        let q = dmatrix![1.0, 0.0; 0.0, -1.0];
        let err = solve_care(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2), &q, &DMatrix::identity(2, 2));
        assert!(matches!(err, Err(Error::NotPositiveDefinite { what: "Q", .. })));
    }

    #[test]
    fn operator_f_diagonal() {
        let a = DMatrix::from_diagonal_element(3, 3, -1.0);
        let b = DMatrix::zeros(3, 1);
        let k = DMatrix::zeros(1, 3);
        let x = DMatrix::identity(3, 3);
        let fx = closed_loop_apply_f(&a, &b, &k, &x).unwrap();
        assert!((fx + DMatrix::identity(3, 3).scale(2.0)).norm() < 1e-14);
    }

    #[test]
    fn operator_f_scalar() {
        let fx = closed_loop_apply_f(&dmatrix![-1.0], &dmatrix![1.0], &dmatrix![0.0], &dmatrix![0.5]).unwrap();
        assert!((fx[(0, 0)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn operator_f_rejects_mismatch() {
        let err = closed_loop_apply_f(
            &DMatrix::identity(3, 3),
            &DMatrix::zeros(2, 1),
            &DMatrix::zeros(1, 3),
            &DMatrix::identity(3, 3),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
