//! Cyclic Jacobi eigensolver for real symmetric matrices.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Maximum number of full sweeps over the upper triangle.
pub const MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to the
/// Frobenius norm of the input.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Eigenpairs sorted by descending eigenvalue. Each eigenvector is flipped so
/// that its largest-magnitude component is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn off_diagonal_norm(a: &SquareMatrix) -> f64 {
    let mut s = 0.0;
    for (_, _, v) in a.upper_triangle() {
        s += 2.0 * v * v;
    }
    s.sqrt()
}

pub fn symmetric_eigen(input: &SquareMatrix) -> Result<SymmetricEigen> {
    let n = input.dim();
    if input.max_asymmetry() > 1e-12 * (1.0 + input.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
        return Err(Error::invalid("eigensolver input is not symmetric"));
    }
    let mut a = input.clone();
    let mut v = SquareMatrix::identity(n);
    let scale = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * scale.max(f64::MIN_POSITIVE);

    let mut converged = off_diagonal_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // skip rotations that cannot change the diagonal at working precision
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if sweeps > 3 && apq.abs() * 1e18 < app.abs().min(aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[(k, p)] = new_kp;
                    a[(p, k)] = new_kp;
                    a[(k, q)] = new_kq;
                    a[(q, k)] = new_kq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(&a) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps, residual: off_diagonal_norm(&a) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]).then(x.cmp(&y)));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut u: Vec<f64> = (0..n).map(|i| v[(i, k)]).collect();
            fix_sign(&mut u);
            u
        })
        .collect();
    Ok(SymmetricEigen { values, vectors })
}

/// Flips `u` so its largest-magnitude component (first one on ties) is positive.
pub(crate) fn fix_sign(u: &mut [f64]) {
    let mut best = 0;
    for (i, x) in u.iter().enumerate() {
        if x.abs() > u[best].abs() {
            best = i;
        }
    }
    if u.get(best).is_some_and(|x| *x < 0.0) {
        u.iter_mut().for_each(|x| *x = -*x);
    }
}
