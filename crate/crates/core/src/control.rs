//! Inversion-based tracking inputs and a step-by-step simulator.
//!
//! With `G = C A^(L-1) B`, the open-loop input is
//! `u_k = G^+ (y_ref,k+L - C A^(k+L) x0 - sum_{i=1..k} C A^(i+L-1) B u_(k-i))`
//! and the closed-loop input is `u_k = G^+ (y_ref,k+L - C A^L x_k)`. Both agree
//! because the bracketed sum equals `C A^L x_k`. When `G` is not right
//! invertible the pseudoinverse gives a per-step least-squares action.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{pseudoinverse_with, rank_of, Matrix, RankTolerance, Vector};
use crate::markov::{build_stacks_with_delay, compute_delay, powers, MarkovStack};
use crate::system::{InputTrajectory, OutputTrajectory, ReferenceTrajectory, StateSpaceSystem, Trajectory};
use crate::trackability::{decompose_with_stack, stacks_for_reference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    OpenLoop,
    #[default]
    ClosedLoop,
    /// Track the projection of the reference onto the trackable space, from `x0 = 0`.
    Projected,
}

/// Closed-loop inversion law `u = G^+ (y_ref,k+L - C~ A^L x)` for a subset of
/// output rows (all rows by default).
#[derive(Debug, Clone, PartialEq)]
pub struct InversionController {
    delay: usize,
    rows: Vec<usize>,
    g_pinv: Matrix,
    ca_l: Matrix,
    exact: bool,
}

impl InversionController {
    pub fn new(sys: &StateSpaceSystem, tol: RankTolerance) -> Result<Self> {
        let rows: Vec<usize> = (0..sys.l()).collect();
        Self::for_rows(sys, &rows, tol)
    }

    /// Controller built from the outputs in `rows` only. The reduced system
    /// must share the delay of the full one.
    pub fn for_rows(sys: &StateSpaceSystem, rows: &[usize], tol: RankTolerance) -> Result<Self> {
        let full_delay = compute_delay(sys, tol)?.delay;
        let reduced = sys.with_output_rows(rows)?;
        let delay = compute_delay(&reduced, tol)?.delay;
        if delay != full_delay {
            return Err(Error::InvalidArgument(format!(
                "selected rows have delay {delay}, full system has delay {full_delay}"
            )));
        }
        let pw = powers(sys.a(), delay);
        let g = reduced.c() * &pw[delay - 1] * reduced.b();
        let exact = rank_of(&g, tol) == rows.len();
        Ok(InversionController {
            delay,
            rows: rows.to_vec(),
            g_pinv: pseudoinverse_with(&g, tol)?,
            ca_l: reduced.c() * &pw[delay],
            exact,
        })
    }

    pub fn delay(&self) -> usize {
        self.delay
    }
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }
    /// `G` restricted to the selected rows is right invertible.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `u_k` from the full reference sample `y_ref,k+L` and state `x_k`.
    pub fn input(&self, y_ref_future: &Vector, x: &Vector) -> Result<Vector> {
        if x.len() != self.ca_l.ncols() {
            return Err(Error::Dimension(format!("state has length {}, expected {}", x.len(), self.ca_l.ncols())));
        }
        let y_sel = Vector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|&i| y_ref_future.get(i).copied().unwrap_or(f64::NAN)),
        );
        if self.rows.iter().any(|&i| i >= y_ref_future.len()) {
            return Err(Error::Dimension(format!("reference sample has length {}", y_ref_future.len())));
        }
        Ok(&self.g_pinv * (y_sel - &self.ca_l * x))
    }
}

/// Single closed-loop step `u_k = G^+ (y_ref,k+L - C A^L x_k)`.
pub fn closed_loop_input(
    sys: &StateSpaceSystem,
    y_ref_future: &Vector,
    x: &Vector,
    tol: RankTolerance,
) -> Result<Vector> {
    if y_ref_future.len() != sys.l() {
        return Err(Error::Dimension(format!(
            "reference sample has length {}, expected {}",
            y_ref_future.len(),
            sys.l()
        )));
    }
    InversionController::new(sys, tol)?.input(y_ref_future, x)
}

/// Open-loop input `u_0..u_(r-L)` computed from `x0` and the reference alone.
pub fn open_loop_input(
    sys: &StateSpaceSystem,
    reference: &ReferenceTrajectory,
    x0: &Vector,
    tol: RankTolerance,
) -> Result<InputTrajectory> {
    let stack = stacks_for_reference(sys, reference, tol)?;
    open_loop_with_stack(&stack, reference, x0, tol)
}

fn open_loop_with_stack(
    stack: &MarkovStack,
    reference: &ReferenceTrajectory,
    x0: &Vector,
    tol: RankTolerance,
) -> Result<InputTrajectory> {
    let (n, m, l) = (stack.state_dim(), stack.input_dim(), stack.output_dim());
    if x0.len() != n {
        return Err(Error::Dimension(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let markov = stack.markov_parameters();
    let g_pinv = pseudoinverse_with(&markov[0], tol)?;
    let free = stack.gamma() * x0;
    let mut inputs: Vec<Vector> = Vec::with_capacity(stack.blocks());
    for (k, y) in reference.samples().iter().enumerate() {
        let mut target = y - free.rows(k * l, l);
        for i in 1..=k {
            target -= &markov[i] * &inputs[k - i];
        }
        let u = &g_pinv * target;
        debug_assert_eq!(u.len(), m);
        inputs.push(u);
    }
    Trajectory::new(0, inputs)
}

/// Record of one simulation over `k = 0..=r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub mode: Mode,
    /// `u_0..u_(r-L)`; later inputs cannot reach the horizon and are zero.
    pub inputs: InputTrajectory,
    /// `x_0..x_r`.
    pub states: Vec<Vector>,
    /// `y_L..y_r`.
    pub outputs: OutputTrajectory,
    /// Reference as given.
    pub reference: ReferenceTrajectory,
    /// What the controller tracks: the projection in projected mode, otherwise the reference.
    pub target: ReferenceTrajectory,
    /// `||target - Y||` over the stacked samples.
    pub error_norm: f64,
    /// `||reference - Y||` over the stacked samples.
    pub reference_error_norm: f64,
    /// The first Markov parameter (on the controlled rows) is not right
    /// invertible, so exact tracking is not guaranteed.
    pub best_effort: bool,
}

impl SimulationRun {
    /// Samples of `reference - outputs`.
    pub fn error(&self) -> Vec<Vector> {
        self.reference.samples().iter().zip(self.outputs.samples()).map(|(r, y)| r - y).collect()
    }
}

/// Run the inversion controller in the given mode against a reference on
/// indices `L..=r`.
pub fn simulate(
    sys: &StateSpaceSystem,
    mode: Mode,
    reference: &ReferenceTrajectory,
    x0: &Vector,
    tol: RankTolerance,
) -> Result<SimulationRun> {
    let stack = stacks_for_reference(sys, reference, tol)?;
    let (target, x0) = match mode {
        Mode::Projected => (decompose_with_stack(&stack, reference, tol)?.projected, Vector::zeros(sys.n())),
        _ => (reference.clone(), x0.clone()),
    };
    if x0.len() != sys.n() {
        return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), sys.n())));
    }
    let controller = InversionController::new(sys, tol)?;
    let best_effort = !controller.is_exact();
    let inputs = match mode {
        Mode::OpenLoop => open_loop_with_stack(&stack, &target, &x0, tol)?,
        Mode::ClosedLoop | Mode::Projected => closed_loop_inputs(sys, &controller, &target, &x0)?,
    };
    finish_run(sys, mode, inputs, reference.clone(), target, &x0, best_effort)
}

/// Closed-loop run of a controller built on a subset of output rows, applied
/// to the full system.
pub fn simulate_with_rows(
    sys: &StateSpaceSystem,
    rows: &[usize],
    reference: &ReferenceTrajectory,
    x0: &Vector,
    tol: RankTolerance,
) -> Result<SimulationRun> {
    stacks_for_reference(sys, reference, tol)?;
    let controller = InversionController::for_rows(sys, rows, tol)?;
    let inputs = closed_loop_inputs(sys, &controller, reference, x0)?;
    finish_run(sys, Mode::ClosedLoop, inputs, reference.clone(), reference.clone(), x0, !controller.is_exact())
}

/// Apply a given input sequence `u_0..u_(r-L)` and record the outputs
/// `y_L..y_r` against `reference`.
pub fn simulate_inputs(
    sys: &StateSpaceSystem,
    inputs: &InputTrajectory,
    reference: &ReferenceTrajectory,
    x0: &Vector,
    tol: RankTolerance,
) -> Result<SimulationRun> {
    let stack = stacks_for_reference(sys, reference, tol)?;
    if inputs.start_index() != 0 || inputs.len() != stack.blocks() || inputs.dim() != sys.m() {
        return Err(Error::Dimension(format!(
            "expected {} inputs of dimension {} starting at 0",
            stack.blocks(),
            sys.m()
        )));
    }
    finish_run(sys, Mode::OpenLoop, inputs.clone(), reference.clone(), reference.clone(), x0, false)
}

fn closed_loop_inputs(
    sys: &StateSpaceSystem,
    controller: &InversionController,
    target: &ReferenceTrajectory,
    x0: &Vector,
) -> Result<InputTrajectory> {
    let mut x = x0.clone();
    let mut inputs = Vec::with_capacity(target.len());
    for y in target.samples() {
        let u = controller.input(y, &x)?;
        x = sys.step(&x, &u)?.0;
        inputs.push(u);
    }
    Trajectory::new(0, inputs)
}

fn finish_run(
    sys: &StateSpaceSystem,
    mode: Mode,
    inputs: InputTrajectory,
    reference: ReferenceTrajectory,
    target: ReferenceTrajectory,
    x0: &Vector,
    best_effort: bool,
) -> Result<SimulationRun> {
    let delay = reference.start_index();
    let r = reference.end_index();
    let zero = Vector::zeros(sys.m());
    let mut x = x0.clone();
    let mut states = Vec::with_capacity(r + 1);
    let mut outputs = Vec::with_capacity(reference.len());
    for k in 0..=r {
        let u = inputs.at(k).unwrap_or(&zero);
        let (next, y) = sys.step(&x, u)?;
        if k >= delay {
            outputs.push(y);
        }
        states.push(x);
        x = next;
    }
    let outputs = Trajectory::new(delay, outputs)?;
    let error_norm = target.distance(&outputs)?;
    let reference_error_norm = reference.distance(&outputs)?;
    Ok(SimulationRun {
        mode,
        inputs,
        states,
        outputs,
        reference,
        target,
        error_norm,
        reference_error_norm,
        best_effort,
    })
}

/// The system `(A, B, C~)` keeping only the output rows in `rows`.
pub fn truncated_c_retrofit(sys: &StateSpaceSystem, rows: &[usize]) -> Result<StateSpaceSystem> {
    sys.with_output_rows(rows)
}

/// Walk the rows of `C` in order, keeping a row when it raises the rank of the
/// selected rows of `C A^(L-1) B`. Stops at `size` rows (default: the rank).
pub fn greedy_trackable_rows(sys: &StateSpaceSystem, size: Option<usize>, tol: RankTolerance) -> Result<Vec<usize>> {
    let delay = compute_delay(sys, tol)?;
    let stack = build_stacks_with_delay(sys, delay.clone(), delay.delay)?;
    let g = stack.first_markov_parameter();
    let rank = rank_of(g, tol);
    let wanted = size.unwrap_or(rank);
    if wanted == 0 || wanted > rank {
        return Err(Error::NoTrackableSubset { requested: wanted, rank });
    }
    let mut rows = Vec::with_capacity(wanted);
    for i in 0..g.nrows() {
        rows.push(i);
        let sel = g.select_rows(rows.iter());
        if rank_of(&sel, tol) < rows.len() {
            rows.pop();
        }
        if rows.len() == wanted {
            break;
        }
    }
    Ok(rows)
}
