//! Switched-system abstraction: a family of vector fields indexed by mode.
//!
//! The simulator, adjoint solver, and optimizer are generic over
//! [`SwitchedSystem`] and [`RunningCost`] so they can be exercised on small
//! closed-form systems in tests as well as on the full multimachine network.

use nalgebra::{DMatrix, DVector};

/// 1-based mode label, `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeId(usize);

impl ModeId {
    /// `number` is the 1-based mode label.
    pub fn new(number: usize) -> Self {
        assert!(number >= 1, "mode labels are 1-based");
        ModeId(number)
    }

    /// 1-based label as written in schedules.
    pub fn number(self) -> usize {
        self.0
    }

    /// 0-based index into per-mode storage.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl std::fmt::Display for ModeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite family of smooth vector fields f_1, ..., f_N on R^dim.
pub trait SwitchedSystem {
    fn dim(&self) -> usize;
    fn num_modes(&self) -> usize;

    /// Writes f_mode(x) into `dx`.
    fn vector_field(&self, mode: ModeId, x: &DVector<f64>, dx: &mut DVector<f64>);

    /// Writes the state Jacobian Df_mode(x) into `jac` (dim x dim, overwritten).
    fn jacobian(&self, mode: ModeId, x: &DVector<f64>, jac: &mut DMatrix<f64>);

    fn vector_field_owned(&self, mode: ModeId, x: &DVector<f64>) -> DVector<f64> {
        let mut dx = DVector::zeros(self.dim());
        self.vector_field(mode, x, &mut dx);
        dx
    }

    fn modes(&self) -> impl Iterator<Item = ModeId> {
        (1..=self.num_modes()).map(ModeId::new)
    }
}

/// State-dependent running cost with gradient, integrated along trajectories.
pub trait RunningCost {
    fn value(&self, x: &DVector<f64>) -> f64;

    /// Writes dl/dx into `grad` (overwritten).
    fn gradient(&self, x: &DVector<f64>, grad: &mut DVector<f64>);
}

/// Scratch buffers for one classic fourth-order Runge-Kutta step.
pub(crate) struct Rk4Workspace {
    pub k1: DVector<f64>,
    pub k2: DVector<f64>,
    pub k3: DVector<f64>,
    pub k4: DVector<f64>,
    pub stage: DVector<f64>,
}

impl Rk4Workspace {
    pub fn new(dim: usize) -> Self {
        Rk4Workspace {
            k1: DVector::zeros(dim),
            k2: DVector::zeros(dim),
            k3: DVector::zeros(dim),
            k4: DVector::zeros(dim),
            stage: DVector::zeros(dim),
        }
    }

    /// Advances `x` in place by one RK4 step of size `h` under f_mode.
    pub fn step<S: SwitchedSystem>(&mut self, sys: &S, mode: ModeId, x: &mut DVector<f64>, h: f64) {
        sys.vector_field(mode, x, &mut self.k1);

        self.stage.copy_from(x);
        self.stage.axpy(0.5 * h, &self.k1, 1.0);
        sys.vector_field(mode, &self.stage, &mut self.k2);

        self.stage.copy_from(x);
        self.stage.axpy(0.5 * h, &self.k2, 1.0);
        sys.vector_field(mode, &self.stage, &mut self.k3);

        self.stage.copy_from(x);
        self.stage.axpy(h, &self.k3, 1.0);
        sys.vector_field(mode, &self.stage, &mut self.k4);

        x.axpy(h / 6.0, &self.k1, 1.0);
        x.axpy(h / 3.0, &self.k2, 1.0);
        x.axpy(h / 3.0, &self.k3, 1.0);
        x.axpy(h / 6.0, &self.k4, 1.0);
    }
}
