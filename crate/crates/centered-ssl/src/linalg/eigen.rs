use nalgebra::{DMatrix, DVector};

use super::krylov::Lanczos;
use super::LinearOperator;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone)]
pub struct PowerEstimate<T> {
    pub value: T,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct EigenPair<T: Scalar> {
    pub value: T,
    pub vector: DVector<T>,
    pub iterations: usize,
}

/// Spectral norm of a symmetric operator by power iteration on `A²`.
///
/// Starts from the normalized all-ones vector; when that lies in the null space
/// the centered ramp is used instead. The estimate `‖Av‖` approaches `‖A‖` from below.
pub fn power_norm<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    tol: f64,
    max_iter: usize,
) -> Result<PowerEstimate<T>> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Empty("operator"));
    }
    let mut v = DVector::from_element(n, T::one() / T::of(n as f64).sqrt());
    let mut u = op.apply(&v);
    if u.norm() <= T::default_epsilon() {
        let mid = T::of((n as f64 - 1.0) / 2.0);
        v = DVector::from_fn(n, |i, _| T::of(i as f64) - mid);
        if v.norm() == T::zero() {
            v[0] = T::one();
        }
        v.normalize_mut();
        u = op.apply(&v);
    }
    let mut est = u.norm();
    if est == T::zero() {
        return Ok(PowerEstimate {
            value: T::zero(),
            iterations: 1,
        });
    }
    for it in 1..=max_iter {
        let w = op.apply(&u);
        let wn = w.norm();
        if wn == T::zero() {
            return Ok(PowerEstimate {
                value: est,
                iterations: it,
            });
        }
        v = w / wn;
        u = op.apply(&v);
        let next = u.norm();
        if (next - est).abs() <= T::of(tol) * next {
            return Ok(PowerEstimate {
                value: next.max(est),
                iterations: it,
            });
        }
        est = next;
    }
    Err(Error::NoConvergence {
        solver: "power iteration (norm)",
        iterations: max_iter,
        residual: f64::NAN,
    })
}

fn deterministic_start<T: Scalar>(n: usize) -> DVector<T> {
    // Weyl sequence: fixed, aperiodic and free of symmetry with respect to index order.
    let golden = 0.618_033_988_749_894_9_f64;
    let v = DVector::from_fn(n, |i, _| T::of(((i as f64 + 1.0) * golden).fract() - 0.5));
    v.normalize()
}

fn power_run<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    shift: T,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair<T>> {
    let n = op.dim();
    let mut v = deterministic_start::<T>(n);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut w = op.apply(&v);
        w.axpy(-shift, &v, T::one());
        let lambda = v.dot(&w);
        let r = (&w - &v * lambda).norm();
        residual = r.as_f64();
        let wn = w.norm();
        if wn == T::zero() {
            return Ok(EigenPair {
                value: lambda + shift,
                vector: v,
                iterations: it,
            });
        }
        if r <= T::of(tol) * lambda.abs().max(T::default_epsilon()) {
            return Ok(EigenPair {
                value: lambda + shift,
                vector: v,
                iterations: it,
            });
        }
        v = w / wn;
    }
    Err(Error::NoConvergence {
        solver: "power iteration",
        iterations: max_iter,
        residual,
    })
}

/// Algebraically largest eigenpair by power iteration.
///
/// If the dominant eigenvalue in magnitude is negative, the iteration is rerun on
/// `A − λI`, whose dominant eigenvalue is the largest of `A` shifted by `−λ`.
pub fn power_largest<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair<T>> {
    let first = power_run(op, T::zero(), tol, max_iter)?;
    if first.value >= T::zero() {
        return Ok(first);
    }
    let mut second = power_run(op, first.value, tol, max_iter)?;
    second.iterations += first.iterations;
    Ok(second)
}

/// Algebraically largest eigenpair by Lanczos with full reorthogonalization.
pub fn lanczos_largest<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    tol: f64,
    max_steps: usize,
) -> Result<EigenPair<T>> {
    let n = op.dim();
    let mut lz = Lanczos::new(&deterministic_start::<T>(n));
    let mut residual: f64;
    loop {
        let beta = lz.step(op);
        let k = lz.len();
        let last = beta.is_none() || lz.exhausted() || k >= max_steps.min(n);
        if k % 10 != 0 && !last {
            continue;
        }
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = lz.alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = lz.betas[i];
                t[(i + 1, i)] = lz.betas[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, T::min_value().unwrap()), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        let y = eig.eigenvectors.column(imax);
        let r = if lz.exhausted() {
            T::zero()
        } else {
            (lz.betas[k - 1] * y[k - 1]).abs()
        };
        residual = r.as_f64();
        if r <= T::of(tol) * theta.abs().max(T::default_epsilon()) || lz.exhausted() {
            let coeffs: Vec<T> = y.iter().copied().collect();
            let vector = lz.combine(&coeffs).normalize();
            return Ok(EigenPair {
                value: theta,
                vector,
                iterations: k,
            });
        }
        if last {
            break;
        }
    }
    Err(Error::NoConvergence {
        solver: "Lanczos",
        iterations: lz.len(),
        residual,
    })
}
