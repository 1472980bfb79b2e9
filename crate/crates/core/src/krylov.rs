//! Matrix-free Krylov solvers on flat complex vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    /// Operator applications spent inside the Krylov iteration.
    pub iterations: usize,
    /// Final relative residual `‖b - A x‖ / ‖b‖`.
    pub residual: f64,
    pub converged: bool,
}

pub fn norm(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ conj(x_i) y_i`.
pub fn dot(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn axpy(alpha: C, x: &[C], y: &mut [C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Restarted GMRES for `A x = b`, starting from the contents of `x`.
///
/// Stops when the true residual satisfies `‖b - A x‖ <= tol ‖b‖`; fails with
/// [`Error::NoConvergence`] once `maxiter` operator applications are spent.
pub fn gmres<A>(
    mut op: A,
    b: &[C],
    x: &mut [C],
    restart: usize,
    tol: f64,
    maxiter: usize,
) -> Result<SolveStats>
where
    A: FnMut(&[C], &mut [C]),
{
    let n = b.len();
    assert_eq!(x.len(), n);
    let restart = restart.max(1);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(C::new(0.0, 0.0));
        return Ok(SolveStats { iterations: 0, residual: 0.0, converged: true });
    }

    let mut r = vec![C::new(0.0, 0.0); n];
    let mut basis: Vec<Vec<C>> = Vec::with_capacity(restart + 1);
    let mut hess = vec![vec![C::new(0.0, 0.0); restart]; restart + 1];
    let mut cs = vec![0.0f64; restart];
    let mut sn = vec![C::new(0.0, 0.0); restart];
    let mut g = vec![C::new(0.0, 0.0); restart + 1];
    let mut total = 0usize;

    loop {
        op(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= tol {
            return Ok(SolveStats { iterations: total, residual: rel, converged: true });
        }
        if total >= maxiter {
            return Err(Error::NoConvergence { iterations: total, residual: rel });
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(C::new(0.0, 0.0));
        g[0] = C::new(beta, 0.0);
        let mut cols = 0;

        for j in 0..restart {
            let mut w = vec![C::new(0.0, 0.0); n];
            op(&basis[j], &mut w);
            total += 1;
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for col in hess.iter_mut() {
                col[j] = C::new(0.0, 0.0);
            }
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(v, &w);
                    hess[i][j] += hij;
                    axpy(-hij, v, &mut w);
                }
            }
            let wnorm = norm(&w);
            hess[j + 1][j] = C::new(wnorm, 0.0);

            for i in 0..j {
                let (a, bb) = (hess[i][j], hess[i + 1][j]);
                hess[i][j] = cs[i] * a + sn[i] * bb;
                hess[i + 1][j] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (a, bb) = (hess[j][j], hess[j + 1][j]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = C::new(0.0, 0.0);
            } else if a.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = bb.conj() / bb.norm();
            } else {
                cs[j] = a.norm() / denom;
                sn[j] = (a / a.norm()) * bb.conj() / denom;
            }
            hess[j][j] = cs[j] * a + sn[j] * bb;
            hess[j + 1][j] = C::new(0.0, 0.0);
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] *= cs[j];
            cols = j + 1;

            let breakdown = wnorm <= 1e-14 * bnorm;
            if g[j + 1].norm() <= tol * bnorm || total >= maxiter || breakdown {
                break;
            }
            basis.push(w.iter().map(|v| v / wnorm).collect());
        }

        // Back substitution on the triangular Hessenberg factor.
        let mut y = vec![C::new(0.0, 0.0); cols];
        for i in (0..cols).rev() {
            let mut s = g[i];
            for l in i + 1..cols {
                s -= hess[i][l] * y[l];
            }
            y[i] = s / hess[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, x);
        }
    }
}

/// Conjugate gradients for a Hermitian positive definite operator, starting from zero.
///
/// Never fails: on hitting `maxiter` the current iterate is returned with
/// `converged == false` so the caller can decide how loudly to complain.
pub fn conjugate_gradient<A>(mut op: A, b: &[C], tol: f64, maxiter: usize) -> (Vec<C>, SolveStats)
where
    A: FnMut(&[C], &mut [C]),
{
    let n = b.len();
    let mut x = vec![C::new(0.0, 0.0); n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (x, SolveStats { iterations: 0, residual: 0.0, converged: true });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![C::new(0.0, 0.0); n];
    let mut rr = dot(&r, &r).re;
    let mut iterations = 0;
    while iterations < maxiter {
        if rr.sqrt() <= tol * bnorm {
            break;
        }
        op(&p, &mut ap);
        iterations += 1;
        let alpha = rr / dot(&p, &ap).re;
        axpy(C::new(alpha, 0.0), &p, &mut x);
        axpy(C::new(-alpha, 0.0), &ap, &mut r);
        let rr_next = dot(&r, &r).re;
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    let residual = rr.sqrt() / bnorm;
    let stats = SolveStats { iterations, residual, converged: residual <= tol };
    (x, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64, shift: f64) -> Vec<Vec<C>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let v = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                        if i == j { v + shift } else { v / n as f64 }
                    })
                    .collect()
            })
            .collect()
    }

    fn matvec(a: &[Vec<C>], x: &[C], y: &mut [C]) {
        for (yi, row) in y.iter_mut().zip(a) {
            *yi = row.iter().zip(x).map(|(r, v)| r * v).sum();
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 60;
        let a = random_matrix(n, 1, 3.0);
        let b: Vec<C> = (0..n).map(|i| C::new(i as f64, 1.0)).collect();
        let mut x = vec![C::new(0.0, 0.0); n];
        // Small restart forces several cycles.
        let stats = gmres(|v, out| matvec(&a, v, out), &b, &mut x, 7, 1e-12, 500).unwrap();
        assert!(stats.converged && stats.residual <= 1e-12);
        let mut ax = vec![C::new(0.0, 0.0); n];
        matvec(&a, &x, &mut ax);
        let err: Vec<C> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&err) <= 1e-12 * norm(&b));
    }

    #[test]
    fn gmres_reports_iteration_cap() {
        let n = 40;
        let a = random_matrix(n, 2, 0.1);
        let b = vec![C::new(1.0, 0.0); n];
        let mut x = vec![C::new(0.0, 0.0); n];
        let err = gmres(|v, out| matvec(&a, v, out), &b, &mut x, 5, 1e-14, 3).unwrap_err();
        assert!(err.is_no_convergence());
    }

    #[test]
    fn gmres_zero_rhs() {
        let mut x = vec![C::new(1.0, 0.0); 3];
        let stats = gmres(|v, out| out.copy_from_slice(v), &[C::new(0.0, 0.0); 3], &mut x, 5, 1e-6, 10)
            .unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn cg_solves_hermitian_system() {
        let n = 30;
        let m = random_matrix(n, 3, 0.0);
        // A = M^H M + I
        let apply = |x: &[C], y: &mut [C]| {
            let mut t = vec![C::new(0.0, 0.0); n];
            matvec(&m, x, &mut t);
            for j in 0..n {
                y[j] = x[j] + (0..n).map(|i| m[i][j].conj() * t[i]).sum::<C>();
            }
        };
        let b: Vec<C> = (0..n).map(|i| C::new(1.0, -(i as f64))).collect();
        let (x, stats) = conjugate_gradient(apply, &b, 1e-10, 200);
        assert!(stats.converged);
        let mut ax = vec![C::new(0.0, 0.0); n];
        apply(&x, &mut ax);
        let err: Vec<C> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&err) <= 1e-9 * norm(&b));
    }
}
