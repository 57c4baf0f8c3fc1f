use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point element type accepted by the graph, solver and spectral layers.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `tol`, loosened to what the type's precision can reach.
    fn attainable(tol: f64) -> f64 {
        tol.max(100.0 * Self::default_epsilon().as_f64())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
