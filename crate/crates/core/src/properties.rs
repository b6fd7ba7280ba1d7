//! Classical property battery and the 17-region property classification.
//!
//! All tests use horizon `r = n`: controllability `[B AB .. A^(n-1)B]`,
//! observability `[C; CA; ..; CA^(n-1)]`, output controllability `C Q_sc`,
//! input-and-state observability through `Psi_n`, and the invariant-zero
//! rank test through `Phi_(n-1)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{rank_of, Matrix, RankTolerance};
use crate::markov::{compute_delay, powers, Delay};
use crate::system::StateSpaceSystem;

/// `[B, AB, ..., A^(r-1) B]`.
pub fn controllability_matrix(sys: &StateSpaceSystem, r: usize) -> Matrix {
    let (n, m) = (sys.n(), sys.m());
    let mut q = Matrix::zeros(n, r * m);
    let mut block = sys.b().clone();
    for k in 0..r {
        q.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = sys.a() * block;
    }
    q
}

/// `[C; CA; ...; C A^(r-1)]`.
pub fn observability_matrix(sys: &StateSpaceSystem, r: usize) -> Matrix {
    let (n, l) = (sys.n(), sys.l());
    let mut q = Matrix::zeros(r * l, n);
    let mut block = sys.c().clone();
    for k in 0..r {
        q.view_mut((k * l, 0), (l, n)).copy_from(&block);
        block *= sys.a();
    }
    q
}

/// `C [B, AB, ..., A^(r-1) B]`.
pub fn output_controllability_matrix(sys: &StateSpaceSystem, r: usize) -> Matrix {
    sys.c() * controllability_matrix(sys, r)
}

/// Input-and-state observability matrix
///
/// ```text
/// Psi_r = [ C; CA; ..; CA^(L-1)   0            ]
///         [ Gamma_r               M_r   0      ]
/// ```
///
/// of size `(r+1) l x (n + r m)`. The input columns cover `u_0..u_(r-1)`;
/// inputs past `u_(r-L)` never reach `y_0..y_r`, so those trailing columns are
/// zero whenever `L > 1`.
pub fn iso_matrix(sys: &StateSpaceSystem, r: usize, tol: RankTolerance) -> Result<Matrix> {
    let delay = compute_delay(sys, tol)?;
    iso_matrix_with_delay(sys, &delay, r)
}

pub fn iso_matrix_with_delay(sys: &StateSpaceSystem, delay: &Delay, r: usize) -> Result<Matrix> {
    let big_l = delay.delay;
    if r < big_l {
        return Err(Error::HorizonTooShort { horizon: r, delay: big_l });
    }
    let (n, m, l) = (sys.n(), sys.m(), sys.l());
    let pw = powers(sys.a(), r);
    let mut psi = Matrix::zeros((r + 1) * l, n + r * m);
    // output rows y_0..y_r: y_k = C A^k x0 + sum_j C A^(k-1-j) B u_j
    for k in 0..=r {
        psi.view_mut((k * l, 0), (l, n)).copy_from(&(sys.c() * &pw[k]));
        if k >= big_l {
            for j in 0..=(k - big_l) {
                let g = sys.c() * &pw[k - 1 - j] * sys.b();
                psi.view_mut((k * l, n + j * m), (l, m)).copy_from(&g);
            }
        }
    }
    Ok(psi)
}

/// Conditions under which a full-rank `Phi_(n-1)` certifies absence of
/// invariant zeros (and hence trackability).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PreconditionWarning {
    NotMinimal,
    DelayNotOne,
    /// Neither `l < m` nor `l = m = n`.
    UnsupportedShape,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroRankTest {
    pub phi_rank: usize,
    /// `n + (n-1) l`
    pub required_rank: usize,
    pub full: bool,
    pub warnings: Vec<PreconditionWarning>,
}

/// `Phi_r = [Q_sc,(r+1); 0 | M_tilde_r]`, with `M_tilde_r` the block upper
/// triangular Toeplitz matrix of `CB, CAB, ..., CA^(r-1)B`.
pub fn phi_matrix(sys: &StateSpaceSystem, r: usize) -> Matrix {
    let (n, m, l) = (sys.n(), sys.m(), sys.l());
    let top = controllability_matrix(sys, r + 1);
    let mut phi = Matrix::zeros(n + r * l, (r + 1) * m);
    phi.view_mut((0, 0), (n, (r + 1) * m)).copy_from(&top);
    let pw = powers(sys.a(), r.saturating_sub(1));
    for i in 0..r {
        for j in i..r {
            let g = sys.c() * &pw[j - i] * sys.b();
            phi.view_mut((n + i * l, m + j * m), (l, m)).copy_from(&g);
        }
    }
    phi
}

/// Rank test on `Phi_(n-1)`; computed for every system, with warnings when
/// the system falls outside the setting where the test is meaningful.
pub fn zeros_rank_test(sys: &StateSpaceSystem, tol: RankTolerance) -> ZeroRankTest {
    let (n, m, l) = (sys.n(), sys.m(), sys.l());
    let phi = phi_matrix(sys, n - 1);
    let phi_rank = rank_of(&phi, tol);
    let required_rank = n + (n - 1) * l;
    let mut warnings = Vec::new();
    let minimal =
        rank_of(&controllability_matrix(sys, n), tol) == n && rank_of(&observability_matrix(sys, n), tol) == n;
    if !minimal {
        warnings.push(PreconditionWarning::NotMinimal);
    }
    if compute_delay(sys, tol).map(|d| d.delay) != Ok(1) {
        warnings.push(PreconditionWarning::DelayNotOne);
    }
    if !(l < m || (l == m && m == n)) {
        warnings.push(PreconditionWarning::UnsupportedShape);
    }
    ZeroRankTest { phi_rank, required_rank, full: phi_rank == required_rank, warnings }
}

/// The six properties that place a system in the diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropertyTuple {
    pub state_controllable: bool,
    pub state_observable: bool,
    pub minimal: bool,
    pub output_controllable: bool,
    pub iso: bool,
    pub trackable: bool,
}

const fn tuple(sc: bool, so: bool, oc: bool, iso: bool, trk: bool) -> PropertyTuple {
    PropertyTuple {
        state_controllable: sc,
        state_observable: so,
        minimal: sc && so,
        output_controllable: oc,
        iso,
        trackable: trk,
    }
}

/// Region `i + 1` is the property tuple of reference example `i + 1`.
pub const VENN_REGIONS: [PropertyTuple; 17] = [
    tuple(false, false, false, false, false),
    tuple(true, false, false, false, false),
    tuple(true, true, false, false, false),
    tuple(false, true, false, false, false),
    tuple(false, false, true, false, false),
    tuple(false, false, true, false, true),
    tuple(true, false, true, false, false),
    tuple(true, false, true, false, true),
    tuple(true, true, true, false, false),
    tuple(true, true, true, false, true),
    tuple(true, true, true, true, false),
    tuple(true, true, true, true, true),
    tuple(true, true, false, true, false),
    tuple(false, true, false, true, false),
    tuple(false, true, true, true, false),
    tuple(false, true, true, false, true),
    tuple(false, true, true, false, false),
];

/// Region id `1..=17`, or `None` for a tuple outside the diagram.
pub fn venn_region(t: &PropertyTuple) -> Option<u8> {
    VENN_REGIONS.iter().position(|r| r == t).map(|i| i as u8 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropertyRanks {
    pub controllability: usize,
    pub observability: usize,
    pub output_controllability: usize,
    /// `None` when the delay is undefined.
    pub iso: Option<usize>,
    /// `n + r m` columns of `Psi_n`.
    pub iso_required: usize,
    pub phi: usize,
    pub c: usize,
    pub first_markov: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropertyProfile {
    pub state_controllable: bool,
    pub state_observable: bool,
    pub minimal: bool,
    pub output_controllable: bool,
    pub iso: bool,
    /// `None` when no input reaches the output (delay undefined).
    pub trackable: Option<bool>,
    pub delay: Option<usize>,
    pub venn_region: Option<u8>,
    pub ranks: PropertyRanks,
}

impl PropertyProfile {
    /// Boolean tuple with an undefined trackability placed outside the trackable set.
    pub fn tuple(&self) -> PropertyTuple {
        PropertyTuple {
            state_controllable: self.state_controllable,
            state_observable: self.state_observable,
            minimal: self.minimal,
            output_controllable: self.output_controllable,
            iso: self.iso,
            trackable: self.trackable.unwrap_or(false),
        }
    }
}

pub fn classify(sys: &StateSpaceSystem, tol: RankTolerance) -> PropertyProfile {
    let (n, m, l) = (sys.n(), sys.m(), sys.l());
    let q_sc = controllability_matrix(sys, n);
    let rank_sc = rank_of(&q_sc, tol);
    let rank_so = rank_of(&observability_matrix(sys, n), tol);
    let rank_oc = rank_of(&(sys.c() * &q_sc), tol);
    let delay = compute_delay(sys, tol).ok();

    let (iso_rank, first_markov) = match &delay {
        Some(d) => {
            let psi = iso_matrix_with_delay(sys, d, n).expect("L <= n by construction");
            let g = {
                let pw = powers(sys.a(), d.delay - 1);
                sys.c() * &pw[d.delay - 1] * sys.b()
            };
            (Some(rank_of(&psi, tol)), Some(rank_of(&g, tol)))
        }
        None => (None, None),
    };
    let iso_required = n + n * m;
    let phi = rank_of(&phi_matrix(sys, n - 1), tol);

    let state_controllable = rank_sc == n;
    let state_observable = rank_so == n;
    let mut profile = PropertyProfile {
        state_controllable,
        state_observable,
        minimal: state_controllable && state_observable,
        output_controllable: rank_oc == l,
        iso: iso_rank == Some(iso_required),
        trackable: first_markov.map(|r| r == l),
        delay: delay.as_ref().map(|d| d.delay),
        venn_region: None,
        ranks: PropertyRanks {
            controllability: rank_sc,
            observability: rank_so,
            output_controllability: rank_oc,
            iso: iso_rank,
            iso_required,
            phi,
            c: rank_of(sys.c(), tol),
            first_markov,
        },
    };
    profile.venn_region = venn_region(&profile.tuple());
    profile
}
