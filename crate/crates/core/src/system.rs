//! State-space model `x_{k+1} = A x_k + B u_k`, `y_k = C x_k`, and sample trajectories.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, ensure_finite_vec, Matrix, Vector};

/// Strictly proper discrete-time LTI system.
///
/// Construction enforces square `A`, matching `B`/`C` shapes, `1 <= m <= n`,
/// `1 <= l <= n`, and finite entries. The initial state defaults to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    x0: Vector,
}

impl StateSpaceSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension(format!("A must be square and non-empty, got {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected n = {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, expected n = {n}", c.ncols())));
        }
        let (m, l) = (b.ncols(), c.nrows());
        if m == 0 || m > n {
            return Err(Error::DimensionPolicy(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
        }
        if l == 0 || l > n {
            return Err(Error::DimensionPolicy(format!("need 1 <= l <= n, got l = {l}, n = {n}")));
        }
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        ensure_finite(&c, "C")?;
        Ok(Self { a, b, c, x0: Vector::zeros(n) })
    }

    /// Convenience constructor from row-major slices.
    pub fn from_rows(n: usize, m: usize, l: usize, a: &[f64], b: &[f64], c: &[f64]) -> Result<Self> {
        if a.len() != n * n || b.len() != n * m || c.len() != l * n {
            return Err(Error::Dimension(format!(
                "row-major data lengths ({}, {}, {}) do not match n = {n}, m = {m}, l = {l}",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        Self::new(Matrix::from_row_slice(n, n, a), Matrix::from_row_slice(n, m, b), Matrix::from_row_slice(l, n, c))
    }

    pub fn with_initial_state(mut self, x0: Vector) -> Result<Self> {
        if x0.len() != self.n() {
            return Err(Error::Dimension(format!("x0 has length {}, expected n = {}", x0.len(), self.n())));
        }
        ensure_finite_vec(&x0, "x0")?;
        self.x0 = x0;
        Ok(self)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn x0(&self) -> &Vector {
        &self.x0
    }
    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    /// Output dimension.
    pub fn l(&self) -> usize {
        self.c.nrows()
    }

    /// One step of the recursion. The output is read at the current state,
    /// before the update.
    pub fn step(&self, x: &Vector, u: &Vector) -> Result<(Vector, Vector)> {
        if x.len() != self.n() || u.len() != self.m() {
            return Err(Error::Dimension(format!(
                "step expects x in R^{} and u in R^{}, got {} and {}",
                self.n(),
                self.m(),
                x.len(),
                u.len()
            )));
        }
        let x_next = &self.a * x + &self.b * u;
        let y = &self.c * x;
        Ok((x_next, y))
    }

    /// `(T A T^-1, T B, C T^-1)`; `None` when `T` is singular or mis-sized.
    pub fn similarity_transform(&self, t: &Matrix) -> Option<Self> {
        if t.shape() != (self.n(), self.n()) {
            return None;
        }
        let t_inv = t.clone().try_inverse()?;
        let sys = Self::new(t * &self.a * &t_inv, t * &self.b, &self.c * &t_inv).ok()?;
        sys.with_initial_state(t * &self.x0).ok()
    }

    /// `(A, B, C_sel)` keeping the listed output rows of `C` in the given order.
    pub fn with_output_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("at least one output row must be kept".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.l()) {
            return Err(Error::InvalidArgument(format!("output row {bad} out of range for l = {}", self.l())));
        }
        let c = self.c.select_rows(rows.iter());
        Self::new(self.a.clone(), self.b.clone(), c)?.with_initial_state(self.x0.clone())
    }
}

/// Equally sized vector samples indexed `start_index, start_index + 1, ...`.
///
/// Used for references `y_ref,k` (starting at the delay `L`), input sequences
/// `u_k` (starting at 0) and output sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start_index: usize,
    dim: usize,
    samples: Vec<Vector>,
}

pub type ReferenceTrajectory = Trajectory;
pub type InputTrajectory = Trajectory;
pub type OutputTrajectory = Trajectory;

impl Trajectory {
    pub fn new(start_index: usize, samples: Vec<Vector>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InvalidArgument("trajectory must contain at least one sample".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("trajectory samples must be non-empty vectors".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::Dimension(format!(
                    "sample {} has length {}, expected {dim}",
                    start_index + i,
                    s.len()
                )));
            }
            ensure_finite_vec(s, "trajectory sample")?;
        }
        Ok(Self { start_index, dim, samples })
    }

    /// Splits a stacked vector into `dim`-sized samples.
    pub fn from_stacked(start_index: usize, dim: usize, stacked: &Vector) -> Result<Self> {
        if dim == 0 || stacked.is_empty() || !stacked.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!(
                "stacked length {} is not a positive multiple of {dim}",
                stacked.len()
            )));
        }
        let samples = (0..stacked.len() / dim).map(|i| stacked.rows(i * dim, dim).into_owned()).collect();
        Self::new(start_index, samples)
    }

    pub fn zeros(start_index: usize, dim: usize, len: usize) -> Result<Self> {
        Self::new(start_index, (0..len).map(|_| Vector::zeros(dim)).collect())
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }
    /// Index of the last sample.
    pub fn end_index(&self) -> usize {
        self.start_index + self.samples.len() - 1
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn samples(&self) -> &[Vector] {
        &self.samples
    }
    /// Sample at absolute index `k`, if present.
    pub fn at(&self, k: usize) -> Option<&Vector> {
        k.checked_sub(self.start_index).and_then(|i| self.samples.get(i))
    }

    pub fn stacked(&self) -> Vector {
        let mut v = Vector::zeros(self.dim * self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            v.rows_mut(i * self.dim, self.dim).copy_from(s);
        }
        v
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.samples.iter().map(|s| s.norm_squared()).sum::<f64>())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { start_index: self.start_index, dim: self.dim, samples: self.samples.iter().map(|s| s * alpha).collect() }
    }

    /// 2-norm of the stacked difference; shapes must agree.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.start_index != other.start_index || self.dim != other.dim || self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "trajectories cover different samples: [{}..={}] x {} vs [{}..={}] x {}",
                self.start_index,
                self.end_index(),
                self.dim,
                other.start_index,
                other.end_index(),
                other.dim
            )));
        }
        Ok(libm::sqrt(self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm_squared()).sum::<f64>()))
    }
}
