//! Delay `L`, Markov-parameter stacks and the batch input-output equation
//! `Y_{r,L} = Gamma_r x0 + M_r U_{r-L}`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{is_negligible, permutation_matrix, rank_of, spectral_norm, Matrix, RankTolerance, Vector};
use crate::system::{InputTrajectory, OutputTrajectory, StateSpaceSystem, Trajectory};

/// Input-output delay of a system.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Delay {
    /// `L = min_q L_q`.
    pub delay: usize,
    /// `L_q` per input channel; `None` when channel `q` never reaches the output
    /// within `n` steps.
    pub channel_delays: Vec<Option<usize>>,
}

/// `A^0, A^1, ..., A^max`.
pub(crate) fn powers(a: &Matrix, max: usize) -> Vec<Matrix> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(max + 1);
    out.push(Matrix::identity(n, n));
    for k in 1..=max {
        let next = &out[k - 1] * a;
        out.push(next);
    }
    out
}

/// `C A^k B`.
pub fn markov_parameter(sys: &StateSpaceSystem, k: usize) -> Matrix {
    let mut cak = sys.c().clone();
    for _ in 0..k {
        cak = &cak * sys.a();
    }
    cak * sys.b()
}

/// Smallest `k` (per input channel, `1 <= k <= n`) with `C A^(k-1) b_q != 0`.
///
/// A Markov parameter column counts as zero when its norm is below
/// `eps * ||C|| ||A^(k-1)|| ||b_q||`, i.e. it is indistinguishable from
/// round-off in the product.
pub fn compute_delay(sys: &StateSpaceSystem, tol: RankTolerance) -> Result<Delay> {
    let n = sys.n();
    let pw = powers(sys.a(), n - 1);
    let c_norm = spectral_norm(sys.c());
    let mut channel_delays = alloc::vec![None; sys.m()];
    for (q, slot) in channel_delays.iter_mut().enumerate() {
        let b_q = sys.b().columns(q, 1).into_owned();
        let b_norm = b_q.norm();
        for (k, ak) in pw.iter().enumerate() {
            let col = sys.c() * ak * &b_q;
            let scale = c_norm * spectral_norm(ak) * b_norm;
            if !is_negligible(&col, scale, tol) {
                *slot = Some(k + 1);
                break;
            }
        }
    }
    let delay = channel_delays.iter().flatten().copied().min().ok_or(Error::NoInputOutputCoupling)?;
    Ok(Delay { delay, channel_delays })
}

/// Default horizon `r = L + n`.
pub fn default_horizon(sys: &StateSpaceSystem, delay: &Delay) -> usize {
    delay.delay + sys.n()
}

/// Markov-parameter matrices of a system for horizon `r`.
#[derive(Debug, Clone)]
pub struct MarkovStack {
    delay: Delay,
    horizon: usize,
    n: usize,
    m: usize,
    l: usize,
    /// `C A^(L-1+j) B` for `j = 0..=r-L`.
    markov: Vec<Matrix>,
    gamma: Matrix,
    m_r: Matrix,
    m_tilde: Matrix,
}

/// Computes the delay and builds the stacks for horizon `r`.
pub fn build_stacks(sys: &StateSpaceSystem, r: usize, tol: RankTolerance) -> Result<MarkovStack> {
    let delay = compute_delay(sys, tol)?;
    build_stacks_with_delay(sys, delay, r)
}

pub fn build_stacks_with_delay(sys: &StateSpaceSystem, delay: Delay, r: usize) -> Result<MarkovStack> {
    let big_l = delay.delay;
    if r < big_l {
        return Err(Error::HorizonTooShort { horizon: r, delay: big_l });
    }
    let (n, m, l) = (sys.n(), sys.m(), sys.l());
    let blocks = r - big_l + 1;
    let pw = powers(sys.a(), r);

    let markov: Vec<Matrix> = (0..blocks).map(|j| sys.c() * &pw[big_l - 1 + j] * sys.b()).collect();

    let mut gamma = Matrix::zeros(blocks * l, n);
    for i in 0..blocks {
        gamma.view_mut((i * l, 0), (l, n)).copy_from(&(sys.c() * &pw[big_l + i]));
    }

    let mut m_r = Matrix::zeros(blocks * l, blocks * m);
    let mut m_tilde = Matrix::zeros(blocks * l, blocks * m);
    for i in 0..blocks {
        for j in 0..=i {
            m_r.view_mut((i * l, j * m), (l, m)).copy_from(&markov[i - j]);
            // upper-triangular arrangement: block (j, i) carries C A^(L-1+i-j) B
            m_tilde.view_mut((j * l, i * m), (l, m)).copy_from(&markov[i - j]);
        }
    }

    Ok(MarkovStack { delay, horizon: r, n, m, l, markov, gamma, m_r, m_tilde })
}

/// Ranks of `M_r` and its permuted form.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TildeRankCheck {
    pub rank_m: usize,
    pub rank_m_tilde: usize,
    /// `max |M_tilde - P_l M_r P_m|` entrywise.
    pub permutation_residual: f64,
}

impl TildeRankCheck {
    pub fn ranks_agree(&self) -> bool {
        self.rank_m == self.rank_m_tilde
    }
}

impl MarkovStack {
    pub fn delay(&self) -> usize {
        self.delay.delay
    }
    pub fn channel_delays(&self) -> &[Option<usize>] {
        &self.delay.channel_delays
    }
    pub fn delay_info(&self) -> &Delay {
        &self.delay
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    /// Number of sample blocks, `r - L + 1`.
    pub fn blocks(&self) -> usize {
        self.horizon - self.delay.delay + 1
    }
    pub fn state_dim(&self) -> usize {
        self.n
    }
    pub fn input_dim(&self) -> usize {
        self.m
    }
    pub fn output_dim(&self) -> usize {
        self.l
    }
    /// `C A^(L-1) B`.
    pub fn first_markov_parameter(&self) -> &Matrix {
        &self.markov[0]
    }
    /// `C A^(L-1+j) B` for `j = 0..=r-L`.
    pub fn markov_parameters(&self) -> &[Matrix] {
        &self.markov
    }
    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }
    pub fn m_r(&self) -> &Matrix {
        &self.m_r
    }
    pub fn m_tilde(&self) -> &Matrix {
        &self.m_tilde
    }

    /// `Gamma_r x0 + M_r U` unstacked into outputs indexed `L..=r`.
    pub fn batch_output(&self, x0: &Vector, inputs: &InputTrajectory) -> Result<OutputTrajectory> {
        if x0.len() != self.n {
            return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), self.n)));
        }
        if inputs.dim() != self.m || inputs.len() != self.blocks() || inputs.start_index() != 0 {
            return Err(Error::Dimension(format!(
                "expected inputs u_0..u_{} in R^{}, got {} samples of dimension {} starting at {}",
                self.blocks() - 1,
                self.m,
                inputs.len(),
                inputs.dim(),
                inputs.start_index()
            )));
        }
        let y = &self.gamma * x0 + &self.m_r * inputs.stacked();
        Trajectory::from_stacked(self.delay.delay, self.l, &y)
    }

    /// Ranks of `M_r` and `M_tilde`, plus the residual of `M_tilde = P_l M_r P_m`.
    pub fn tilde_rank_check(&self, tol: RankTolerance) -> TildeRankCheck {
        let blocks = self.blocks();
        let p_l = permutation_matrix(self.l, blocks).expect("l and blocks are positive");
        let p_m = permutation_matrix(self.m, blocks).expect("m and blocks are positive");
        let permuted = p_l * &self.m_r * p_m;
        TildeRankCheck {
            rank_m: rank_of(&self.m_r, tol),
            rank_m_tilde: rank_of(&self.m_tilde, tol),
            permutation_residual: (permuted - &self.m_tilde).amax(),
        }
    }
}
