use nalgebra::DVector;

use super::LinearOperator;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone)]
pub struct KrylovSolution<T: Scalar> {
    pub x: DVector<T>,
    pub iterations: usize,
    /// True residual `‖b − Ax‖` relative to `‖b‖`.
    pub relative_residual: f64,
}

fn relative_residual<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    x: &DVector<T>,
    b: &DVector<T>,
) -> f64 {
    let bn = b.norm().as_f64();
    if bn == 0.0 {
        return x.norm().as_f64();
    }
    (b - op.apply(x)).norm().as_f64() / bn
}

/// Conjugate gradients for a symmetric positive definite operator.
pub fn cg<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    b: &DVector<T>,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovSolution<T>> {
    let n = op.dim();
    let mut x = DVector::zeros(n);
    let bn = b.norm();
    if bn == T::zero() {
        return Ok(KrylovSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = T::of(tol) * bn;
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    for it in 1..=max_iter {
        let ap = op.apply(&p);
        let pap = p.dot(&ap);
        if pap <= T::zero() {
            return Err(Error::Singular(format!(
                "operator not positive definite (pᵀAp = {:e})",
                pap.as_f64()
            )));
        }
        let step = rr / pap;
        x.axpy(step, &p, T::one());
        r.axpy(-step, &ap, T::one());
        let rr_new = r.dot(&r);
        if rr_new.sqrt() <= target {
            let rel = relative_residual(op, &x, b);
            if rel <= 10.0 * tol {
                return Ok(KrylovSolution {
                    x,
                    iterations: it,
                    relative_residual: rel,
                });
            }
            r = b - op.apply(&x);
            p = r.clone();
            rr = r.dot(&r);
            continue;
        }
        p.axpy(T::one(), &r, rr_new / rr);
        rr = rr_new;
    }
    Err(Error::NoConvergence {
        solver: "conjugate gradient",
        iterations: max_iter,
        residual: relative_residual(op, &x, b),
    })
}

/// MINRES for a symmetric, possibly indefinite, operator (Paige and Saunders).
pub fn minres<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    b: &DVector<T>,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovSolution<T>> {
    let n = op.dim();
    let mut x = DVector::zeros(n);
    let beta1 = b.norm();
    if beta1 == T::zero() {
        return Ok(KrylovSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let eps = T::default_epsilon();
    let mut r1 = b.clone();
    let mut r2 = b.clone();
    let mut y = b.clone();
    let mut oldb = T::zero();
    let mut beta = beta1;
    let mut dbar = T::zero();
    let mut epsln = T::zero();
    let mut phibar = beta1;
    let mut cs = -T::one();
    let mut sn = T::zero();
    let mut w = DVector::zeros(n);
    let mut w2 = DVector::zeros(n);
    let target = T::of(tol) * beta1;

    for it in 1..=max_iter {
        let v = &y / beta;
        y = op.apply(&v);
        if it >= 2 {
            y.axpy(-beta / oldb, &r1, T::one());
        }
        let alfa = v.dot(&y);
        y.axpy(-alfa / beta, &r2, T::one());
        r1 = std::mem::replace(&mut r2, y.clone());
        oldb = beta;
        beta = r2.norm();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(eps);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, w.clone());
        w = (&v - &w1 * oldeps - &w2 * delta) / gamma;
        x.axpy(phi, &w, T::one());

        if phibar <= target || beta <= eps * beta1 {
            let rel = relative_residual(op, &x, b);
            if rel <= 10.0 * tol {
                return Ok(KrylovSolution {
                    x,
                    iterations: it,
                    relative_residual: rel,
                });
            }
            if beta <= eps * beta1 {
                break;
            }
        }
    }
    Err(Error::NoConvergence {
        solver: "MINRES",
        iterations: max_iter,
        residual: relative_residual(op, &x, b),
    })
}

/// Orthonormal Krylov basis with the tridiagonal projection of a symmetric operator.
pub(crate) struct Lanczos<T: Scalar> {
    pub basis: Vec<DVector<T>>,
    pub alphas: Vec<T>,
    pub betas: Vec<T>,
    pending: Option<DVector<T>>,
}

impl<T: Scalar> Lanczos<T> {
    pub fn new(start: &DVector<T>) -> Self {
        Self {
            basis: Vec::new(),
            alphas: Vec::new(),
            betas: Vec::new(),
            pending: Some(start.normalize()),
        }
    }

    /// Extends the basis by one vector; returns the new off-diagonal β, or `None`
    /// when the Krylov space is exhausted.
    pub fn step<A: LinearOperator<T> + ?Sized>(&mut self, op: &A) -> Option<T> {
        let v = self.pending.take()?;
        let mut w = op.apply(&v);
        if let (Some(prev), Some(b)) = (self.basis.last(), self.betas.last()) {
            w.axpy(-*b, prev, T::one());
        }
        let a = v.dot(&w);
        w.axpy(-a, &v, T::one());
        self.basis.push(v);
        for _ in 0..2 {
            for q in &self.basis {
                let c = q.dot(&w);
                w.axpy(-c, q, T::one());
            }
        }
        let b = w.norm();
        self.alphas.push(a);
        self.betas.push(b);
        let scale = self
            .alphas
            .iter()
            .chain(self.betas.iter())
            .fold(T::zero(), |m, x| m.max(x.abs()));
        if b > T::of(1e3) * T::default_epsilon() * scale.max(T::one()) && self.basis.len() < op.dim() {
            self.pending = Some(w / b);
        }
        Some(b)
    }

    pub fn exhausted(&self) -> bool {
        self.pending.is_none()
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn combine(&self, coeffs: &[T]) -> DVector<T> {
        let mut x = DVector::zeros(self.basis[0].len());
        for (q, c) in self.basis.iter().zip(coeffs) {
            x.axpy(*c, q, T::one());
        }
        x
    }
}

/// Solves `(σ − T) y = β₀e₁` for a symmetric tridiagonal `T` by the Thomas recursion.
fn shifted_tridiagonal_solve<T: Scalar>(alphas: &[T], betas: &[T], shift: T, rhs0: T) -> Vec<T> {
    let k = alphas.len();
    let mut c = vec![T::zero(); k];
    let mut d = vec![T::zero(); k];
    let mut denom = shift - alphas[0];
    if k > 1 {
        c[0] = -betas[0] / denom;
    }
    d[0] = rhs0 / denom;
    for i in 1..k {
        let off = -betas[i - 1];
        denom = shift - alphas[i] - off * c[i - 1];
        if i + 1 < k {
            c[i] = -betas[i] / denom;
        }
        d[i] = (-off * d[i - 1]) / denom;
    }
    let mut y = d;
    for i in (0..k.saturating_sub(1)).rev() {
        let next = y[i + 1];
        y[i] -= c[i] * next;
    }
    y
}

/// Solves `(σᵢI − A)xᵢ = b` for every shift `σᵢ > λ_max(A)` from one Lanczos basis.
///
/// Shift invariance of Krylov spaces lets a single basis serve all shifts; each
/// solution is accepted once its residual `β_k |e_kᵀyᵢ|` drops below `tol·‖b‖`.
pub fn shifted_solves<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    b: &DVector<T>,
    shifts: &[T],
    tol: f64,
    max_steps: usize,
) -> Result<Vec<DVector<T>>> {
    let n = op.dim();
    let bn = b.norm();
    if bn == T::zero() || shifts.is_empty() {
        return Ok(vec![DVector::zeros(n); shifts.len()]);
    }
    let mut lz = Lanczos::new(b);
    let target = T::of(tol) * bn;
    let mut worst = f64::INFINITY;
    while lz.len() < max_steps.min(n) {
        let beta = match lz.step(op) {
            Some(b) => b,
            None => break,
        };
        let k = lz.len();
        if lz.exhausted() {
            worst = 0.0;
            break;
        }
        if k % 5 != 0 {
            continue;
        }
        worst = 0.0;
        let mut done = true;
        for &s in shifts {
            let y = shifted_tridiagonal_solve(&lz.alphas, &lz.betas, s, bn);
            let res = (beta * y[k - 1]).abs();
            worst = worst.max((res / bn).as_f64());
            if res > target {
                done = false;
                break;
            }
        }
        if done {
            break;
        }
    }
    let k = lz.len();
    let mut out = Vec::with_capacity(shifts.len());
    for &s in shifts {
        let y = shifted_tridiagonal_solve(&lz.alphas, &lz.betas[..k], s, bn);
        let res = (lz.betas[k - 1] * y[k - 1]).abs();
        if !lz.exhausted() && res > target {
            return Err(Error::NoConvergence {
                solver: "shifted Lanczos",
                iterations: k,
                residual: worst.max((res / bn).as_f64()),
            });
        }
        out.push(lz.combine(&y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn spd(n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
        &a * a.transpose() + DMatrix::identity(n, n)
    }

    #[test]
    fn cg_solves_spd_system() {
        let a = spd(20);
        let b = DVector::from_fn(20, |i, _| (i as f64).sin());
        let sol = cg(&a, &b, 1e-12, 500).unwrap();
        let oracle = a.clone().lu().solve(&b).unwrap();
        assert!((sol.x - oracle).norm() < 1e-9);
    }

    #[test]
    fn minres_solves_indefinite_system() {
        let mut a = spd(15);
        for i in 0..15 {
            a[(i, i)] -= 4.0;
        }
        let b = DVector::from_fn(15, |i, _| 1.0 + i as f64);
        let sol = minres(&a, &b, 1e-12, 500).unwrap();
        let oracle = a.clone().lu().solve(&b).unwrap();
        assert!((&sol.x - &oracle).norm() / oracle.norm() < 1e-9);
    }

    #[test]
    fn shifted_solves_match_direct() {
        let a = spd(30);
        let top = a.clone().symmetric_eigenvalues().max();
        let b = DVector::from_fn(30, |i, _| (i as f64 * 0.3).cos());
        let shifts: Vec<f64> = [1.001, 1.1, 3.0, 100.0].iter().map(|f| f * top).collect();
        let xs = shifted_solves(&a, &b, &shifts, 1e-12, 30).unwrap();
        for (s, x) in shifts.iter().zip(&xs) {
            let m = DMatrix::identity(30, 30) * *s - &a;
            let oracle = m.lu().solve(&b).unwrap();
            assert!((x - &oracle).norm() / oracle.norm() < 1e-9);
        }
    }
}
