//! Sparse storage and iterative solvers shared by the graph and solver layers.

mod csr;
mod eigen;
mod krylov;

pub use csr::CsrMatrix;
pub use eigen::{lanczos_largest, power_largest, power_norm, EigenPair, PowerEstimate};
pub use krylov::{cg, minres, shifted_solves, KrylovSolution};

use nalgebra::{DMatrix, DVector};

use crate::Scalar;

/// A symmetric linear map applied matrix-free.
pub trait LinearOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<T>) -> DVector<T>;
}

impl<T: Scalar> LinearOperator<T> for DMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DVector<T>) -> DVector<T> {
        self * x
    }
}

/// `shift·I − A` for a wrapped operator `A`.
pub struct Shifted<'a, T: Scalar, A: LinearOperator<T> + ?Sized> {
    pub inner: &'a A,
    pub shift: T,
}

impl<T: Scalar, A: LinearOperator<T> + ?Sized> LinearOperator<T> for Shifted<'_, T, A> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &DVector<T>) -> DVector<T> {
        let mut y = self.inner.apply(x);
        y.axpy(self.shift, x, -T::one());
        y
    }
}
