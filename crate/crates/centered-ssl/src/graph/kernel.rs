/// Step used for central-difference derivatives of kernels without analytic ones.
pub const FD_STEP: f64 = 1e-5;

/// The map `h` turning a normalized squared distance `‖xᵢ − xⱼ‖²/p` into a weight.
pub trait Kernel: Send + Sync {
    fn eval(&self, t: f64) -> f64;

    fn d1(&self, t: f64) -> f64 {
        (self.eval(t + FD_STEP) - self.eval(t - FD_STEP)) / (2.0 * FD_STEP)
    }

    fn d2(&self, t: f64) -> f64 {
        (self.eval(t + FD_STEP) - 2.0 * self.eval(t) + self.eval(t - FD_STEP)) / (FD_STEP * FD_STEP)
    }

    fn name(&self) -> String {
        "custom".into()
    }
}

/// `h(t) = exp(−t/b)`; `b = 1` gives the `e^{−‖xᵢ−xⱼ‖²/p}` weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    pub bandwidth: f64,
}

impl Default for GaussianKernel {
    fn default() -> Self {
        Self { bandwidth: 1.0 }
    }
}

impl Kernel for GaussianKernel {
    fn eval(&self, t: f64) -> f64 {
        (-t / self.bandwidth).exp()
    }

    fn d1(&self, t: f64) -> f64 {
        -self.eval(t) / self.bandwidth
    }

    fn d2(&self, t: f64) -> f64 {
        self.eval(t) / (self.bandwidth * self.bandwidth)
    }

    fn name(&self) -> String {
        if self.bandwidth == 1.0 {
            "gaussian".into()
        } else {
            format!("gaussian:{}", self.bandwidth)
        }
    }
}

/// Kernel given by a closure; derivatives come from central differences.
pub struct FnKernel<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> Kernel for FnKernel<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// Value and first two derivatives of `h` at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelJet {
    pub h: f64,
    pub d1: f64,
    pub d2: f64,
}

impl KernelJet {
    pub fn at(kernel: &dyn Kernel, t: f64) -> Self {
        Self {
            h: kernel.eval(t),
            d1: kernel.d1(t),
            d2: kernel.d2(t),
        }
    }
}
