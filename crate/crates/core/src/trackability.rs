//! Trackability verdict, trackable-set membership, projection of references
//! onto the trackable space, and the three trackability indices.
//!
//! A system with delay `L` is trackable iff `rank(C A^(L-1) B) = l`. For
//! `x0 = 0` the trackable space is the column space `R(M_r)`; references
//! outside it are split into a projected part in `R(M_r)` and a residual in
//! `N(M_r^T)`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{project_onto_columnspace_with, pseudoinverse_with, rank_of, Matrix, RankTolerance, Vector};
use crate::markov::{build_stacks, build_stacks_with_delay, compute_delay, default_horizon, MarkovStack};
use crate::system::{InputTrajectory, ReferenceTrajectory, StateSpaceSystem, Trajectory};

/// Relative residual `||resid|| / max(||Y_ref||, 1)` below which a reference
/// is considered reachable.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-8;

/// How the scalar system index aggregates the component-wise index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ThetaVariant {
    /// `sum(vartheta) / l`
    #[default]
    Linear,
    /// `vartheta . vartheta / l`
    Quadratic,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackabilityReport {
    pub trackable: bool,
    pub delay: usize,
    pub channel_delays: Vec<Option<usize>>,
    /// `rank(C A^(L-1) B)`.
    pub first_markov_rank: usize,
    pub outputs: usize,
    pub inputs: usize,
    pub horizon: usize,
    pub rank_m_r: usize,
    /// `rank(M_r) == (r - L + 1) l` at the report horizon.
    pub m_r_full_row_rank: bool,
    pub rank_m_tilde: usize,
    /// Component-wise index, one entry per output.
    pub vartheta: Vec<f64>,
    /// Scalar system index, linear form.
    pub system_index: f64,
    /// Scalar system index, quadratic form.
    pub system_index_quadratic: f64,
}

impl TrackabilityReport {
    /// The rank test on `C A^(L-1) B` and the full-row-rank test on `M_r` agree.
    pub fn is_consistent(&self) -> bool {
        self.trackable == self.m_r_full_row_rank && self.rank_m_r == self.rank_m_tilde
    }

    pub fn system_index_for(&self, variant: ThetaVariant) -> f64 {
        match variant {
            ThetaVariant::Linear => self.system_index,
            ThetaVariant::Quadratic => self.system_index_quadratic,
        }
    }
}

/// Trackability report at the default horizon `r = L + n`.
pub fn is_trackable(sys: &StateSpaceSystem, tol: RankTolerance) -> Result<TrackabilityReport> {
    analyze(sys, None, tol)
}

/// Trackability report at horizon `r` (default `L + n`).
pub fn analyze(sys: &StateSpaceSystem, horizon: Option<usize>, tol: RankTolerance) -> Result<TrackabilityReport> {
    let delay = compute_delay(sys, tol)?;
    let r = horizon.unwrap_or_else(|| default_horizon(sys, &delay));
    let stack = build_stacks_with_delay(sys, delay, r)?;
    Ok(report_from_stack(&stack, tol))
}

pub fn report_from_stack(stack: &MarkovStack, tol: RankTolerance) -> TrackabilityReport {
    let l = stack.output_dim();
    let g = stack.first_markov_parameter();
    let first_markov_rank = rank_of(g, tol);
    let vartheta = vartheta_from(g, tol);
    let tilde = stack.tilde_rank_check(tol);
    TrackabilityReport {
        trackable: first_markov_rank == l,
        delay: stack.delay(),
        channel_delays: stack.channel_delays().to_vec(),
        first_markov_rank,
        outputs: l,
        inputs: stack.input_dim(),
        horizon: stack.horizon(),
        rank_m_r: tilde.rank_m,
        m_r_full_row_rank: tilde.rank_m == stack.blocks() * l,
        rank_m_tilde: tilde.rank_m_tilde,
        system_index: aggregate(&vartheta, ThetaVariant::Linear),
        system_index_quadratic: aggregate(&vartheta, ThetaVariant::Quadratic),
        vartheta,
    }
}

/// Result of testing a reference against the trackable set `R(M_r) + {Gamma_r x0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Minimum-norm input reaching the reference; present only for members.
    pub witness: Option<InputTrajectory>,
    /// `||Gamma_r x0 + M_r U - Y_ref||` for the least-squares `U`.
    pub residual_norm: f64,
    pub relative_residual: f64,
}

fn check_reference(stack: &MarkovStack, reference: &ReferenceTrajectory) -> Result<()> {
    if reference.dim() != stack.output_dim() {
        return Err(Error::Dimension(format!(
            "reference has {} components, system has l = {}",
            reference.dim(),
            stack.output_dim()
        )));
    }
    if reference.start_index() != stack.delay() {
        return Err(Error::Dimension(format!(
            "reference starts at sample {}, but outputs are first influenced at L = {}",
            reference.start_index(),
            stack.delay()
        )));
    }
    Ok(())
}

/// Stacks sized to a reference spanning `L..=r`.
pub fn stacks_for_reference(
    sys: &StateSpaceSystem,
    reference: &ReferenceTrajectory,
    tol: RankTolerance,
) -> Result<MarkovStack> {
    let stack = build_stacks(sys, reference.end_index().max(1), tol)?;
    check_reference(&stack, reference)?;
    Ok(stack)
}

pub fn membership(
    sys: &StateSpaceSystem,
    reference: &ReferenceTrajectory,
    x0: &Vector,
    tol: RankTolerance,
) -> Result<Membership> {
    let stack = stacks_for_reference(sys, reference, tol)?;
    membership_with_stack(&stack, reference, x0, tol)
}

pub fn membership_with_stack(
    stack: &MarkovStack,
    reference: &ReferenceTrajectory,
    x0: &Vector,
    tol: RankTolerance,
) -> Result<Membership> {
    check_reference(stack, reference)?;
    if x0.len() != stack.state_dim() {
        return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), stack.state_dim())));
    }
    let y = reference.stacked();
    let target = &y - stack.gamma() * x0;
    let u = pseudoinverse_with(stack.m_r(), tol)? * &target;
    let residual_norm = (stack.m_r() * &u - &target).norm();
    let relative_residual = residual_norm / y.norm().max(1.0);
    let member = relative_residual < MEMBERSHIP_TOLERANCE;
    let witness = if member { Some(Trajectory::from_stacked(0, stack.input_dim(), &u)?) } else { None };
    Ok(Membership { member, witness, residual_norm, relative_residual })
}

/// Orthogonal split of a reference (with `x0 = 0`) into `R(M_r)` and `N(M_r^T)` parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDecomposition {
    pub projected: ReferenceTrajectory,
    pub residual: ReferenceTrajectory,
    /// `||projected|| / ||Y_ref||`; `None` for a zero reference.
    pub theta: Option<f64>,
    /// `||residual||`, the least tracking error any input can achieve.
    pub min_error_norm: f64,
}

pub fn decompose(
    sys: &StateSpaceSystem,
    reference: &ReferenceTrajectory,
    tol: RankTolerance,
) -> Result<ReferenceDecomposition> {
    let stack = stacks_for_reference(sys, reference, tol)?;
    decompose_with_stack(&stack, reference, tol)
}

pub fn decompose_with_stack(
    stack: &MarkovStack,
    reference: &ReferenceTrajectory,
    tol: RankTolerance,
) -> Result<ReferenceDecomposition> {
    check_reference(stack, reference)?;
    let y = reference.stacked();
    let p = project_onto_columnspace_with(stack.m_r(), &y, tol)?;
    let resid = &y - &p;
    let y_norm = y.norm();
    let theta = (y_norm > 0.0).then(|| (p.norm() / y_norm).min(1.0));
    Ok(ReferenceDecomposition {
        projected: Trajectory::from_stacked(reference.start_index(), reference.dim(), &p)?,
        residual: Trajectory::from_stacked(reference.start_index(), reference.dim(), &resid)?,
        theta,
        min_error_norm: resid.norm(),
    })
}

/// Reference command trackability index `||Pi Y|| / ||Y||` (with `x0 = 0`).
pub fn theta_index(sys: &StateSpaceSystem, reference: &ReferenceTrajectory, tol: RankTolerance) -> Result<f64> {
    decompose(sys, reference, tol)?.theta.ok_or_else(|| Error::UndefinedIndex("reference has zero norm".into()))
}

/// Least achievable 2-norm tracking error `||Y - Pi Y||` (with `x0 = 0`).
///
/// Equals `sqrt(1 - theta^2) ||Y||`.
pub fn min_error_bound(sys: &StateSpaceSystem, reference: &ReferenceTrajectory, tol: RankTolerance) -> Result<f64> {
    Ok(decompose(sys, reference, tol)?.min_error_norm)
}

/// Relative gain array `G o (G^+)^T`.
pub fn rga(g: &Matrix) -> Result<Matrix> {
    rga_with(g, RankTolerance::default())
}

pub fn rga_with(g: &Matrix, tol: RankTolerance) -> Result<Matrix> {
    let pinv = pseudoinverse_with(g, tol)?;
    Ok(g.component_mul(&pinv.transpose()))
}

fn vartheta_from(g: &Matrix, tol: RankTolerance) -> Vec<f64> {
    let r = rga_with(g, tol).expect("Markov parameters are finite");
    r.row_iter().map(|row| row.sum()).collect()
}

fn aggregate(vartheta: &[f64], variant: ThetaVariant) -> f64 {
    let l = vartheta.len() as f64;
    match variant {
        ThetaVariant::Linear => vartheta.iter().sum::<f64>() / l,
        ThetaVariant::Quadratic => vartheta.iter().map(|v| v * v).sum::<f64>() / l,
    }
}

/// Component-wise system trackability index: row sums of `rga(C A^(L-1) B)`.
pub fn vartheta_index(sys: &StateSpaceSystem, tol: RankTolerance) -> Result<Vec<f64>> {
    let stack = build_stacks(sys, compute_delay(sys, tol)?.delay, tol)?;
    Ok(vartheta_from(stack.first_markov_parameter(), tol))
}

/// Scalar system trackability index.
pub fn system_index(sys: &StateSpaceSystem, variant: ThetaVariant, tol: RankTolerance) -> Result<f64> {
    Ok(aggregate(&vartheta_index(sys, tol)?, variant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    fn untrackable_example() -> StateSpaceSystem {
        StateSpaceSystem::from_rows(
            4,
            2,
            3,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.05, 0.1, 0.15, 0.2],
            &[1.0, 0.0, 0.0, 1.0, 0.0, 8.0, 1.0, 8.0],
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    fn index_example() -> StateSpaceSystem {
        StateSpaceSystem::from_rows(
            4,
            2,
            3,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.05, 0.1, 0.15, 0.2],
            &[1.0, 0.0, 0.0, 0.8, 0.0, 0.3, 0.2, 0.1],
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    fn example_12() -> StateSpaceSystem {
        StateSpaceSystem::from_rows(2, 2, 2, &[0.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0])
            .unwrap()
    }

    fn example_10() -> StateSpaceSystem {
        StateSpaceSystem::from_rows(2, 1, 1, &[0.0, 1.0, 0.0, 0.0], &[-1.0, 1.0], &[1.0, 1.0]).unwrap()
    }

    fn example_11() -> StateSpaceSystem {
        StateSpaceSystem::from_rows(
            3,
            2,
            3,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    fn random_reference(rng: &mut ChaCha8Rng, start: usize, dim: usize, len: usize) -> ReferenceTrajectory {
        Trajectory::new(start, (0..len).map(|_| Vector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))).collect())
            .unwrap()
    }

    /// Oracle: least-squares via normal equations on a column basis of `M_r`
    /// chosen by greedy Gram-Schmidt, independent of the SVD path.
    fn ls_projection(m: &Matrix, y: &Vector) -> Vector {
        let mut basis: Vec<Vector> = Vec::new();
        for j in 0..m.ncols() {
            let mut v = m.column(j).into_owned();
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&v);
                    v -= b * c;
                }
            }
            if v.norm() > 1e-9 * (1.0 + m.column(j).norm()) {
                basis.push(v.normalize());
            }
        }
        let mut p = Vector::zeros(y.len());
        for b in &basis {
            p += b * b.dot(y);
        }
        p
    }

    #[test]
    fn verdicts_for_reference_systems() {
        let r = is_trackable(&untrackable_example(), tol()).unwrap();
        assert!(!r.trackable);
        assert_eq!(r.first_markov_rank, 2);
        assert!(r.is_consistent());
        assert!(is_trackable(&example_12(), tol()).unwrap().trackable);
        assert!(!is_trackable(&example_11(), tol()).unwrap().trackable);
        let r10 = is_trackable(&example_10(), tol()).unwrap();
        assert!(r10.trackable && r10.delay == 2);
        assert!((r10.system_index - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_system_has_no_verdict() {
        let s = StateSpaceSystem::from_rows(
            3,
            2,
            1,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0],
        )
        .unwrap();
        assert_eq!(is_trackable(&s, tol()), Err(Error::NoInputOutputCoupling));
        assert_eq!(vartheta_index(&s, tol()), Err(Error::NoInputOutputCoupling));
    }

    #[test]
    fn membership_for_trackable_system_and_free_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = example_12();
        let y = random_reference(&mut rng, 1, 2, 6);
        let x0 = Vector::from_vec(vec![0.3, -0.7]);
        let mem = membership(&s, &y, &x0, tol()).unwrap();
        assert!(mem.member && mem.residual_norm < 1e-10);
        let w = mem.witness.unwrap();
        let stack = stacks_for_reference(&s, &y, tol()).unwrap();
        let reached = stack.batch_output(&x0, &w).unwrap();
        assert!(reached.distance(&y).unwrap() <= MEMBERSHIP_TOLERANCE * y.norm());

        // free response of an untrackable system is always reachable
        let s = untrackable_example();
        let stack = build_stacks(&s, 6, tol()).unwrap();
        let x0 = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let free = Trajectory::from_stacked(1, 3, &(stack.gamma() * &x0)).unwrap();
        assert!(membership(&s, &free, &x0, tol()).unwrap().member);
    }

    #[test]
    fn membership_residual_equals_nullspace_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = untrackable_example();
        let y = random_reference(&mut rng, 1, 3, 8);
        let stack = stacks_for_reference(&s, &y, tol()).unwrap();
        let oracle = ls_projection(stack.m_r(), &y.stacked());
        let resid_norm = (y.stacked() - oracle).norm();
        assert!(resid_norm > 1e-3);
        let mem = membership(&s, &y, &Vector::zeros(4), tol()).unwrap();
        assert!(!mem.member && mem.witness.is_none());
        assert!((mem.residual_norm - resid_norm).abs() < 1e-10);
    }

    #[test]
    fn reference_must_start_at_delay() {
        let s = example_10();
        let y = Trajectory::zeros(1, 1, 3).unwrap();
        assert!(matches!(decompose(&s, &y, tol()), Err(Error::Dimension(_))));
        let y = Trajectory::zeros(2, 2, 3).unwrap();
        assert!(matches!(decompose(&s, &y, tol()), Err(Error::Dimension(_))));
    }

    #[test]
    fn decomposition_of_sinusoid_matches_oracle() {
        let s = untrackable_example();
        let samples = (1..=50)
            .map(|k| {
                let t = k as f64 * 0.1;
                Vector::from_vec(vec![t.sin(), (2.0 * t).cos(), 0.5 * (3.0 * t + 0.4).sin()])
            })
            .collect();
        let y = Trajectory::new(1, samples).unwrap();
        let d = decompose(&s, &y, tol()).unwrap();
        let stack = stacks_for_reference(&s, &y, tol()).unwrap();
        let oracle = ls_projection(stack.m_r(), &y.stacked());
        assert!((d.projected.stacked() - &oracle).amax() < 1e-9);
        let (yn, pn, rn) = (y.norm(), d.projected.norm(), d.residual.norm());
        assert!((yn * yn - pn * pn - rn * rn).abs() < 1e-9 * yn * yn);
        assert!(d.projected.stacked().dot(&d.residual.stacked()).abs() < 1e-9 * yn * yn);
        assert!((stack.m_r().transpose() * d.residual.stacked()).amax() < 1e-9);
        let theta = d.theta.unwrap();
        assert!(theta > 0.0 && theta < 1.0);
        assert!((d.min_error_norm - (1.0 - theta * theta).sqrt() * yn).abs() < 1e-9);
    }

    #[test]
    fn trackable_system_projection_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = example_10();
        let y = random_reference(&mut rng, 2, 1, 7);
        let d = decompose(&s, &y, tol()).unwrap();
        assert!(d.residual.norm() < 1e-12);
        assert!((theta_index(&s, &y, tol()).unwrap() - 1.0).abs() < 1e-12);
        assert!(min_error_bound(&s, &y, tol()).unwrap() < 1e-12);
    }

    #[test]
    fn nullspace_reference_has_zero_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = untrackable_example();
        let y = random_reference(&mut rng, 1, 3, 5);
        let d = decompose(&s, &y, tol()).unwrap();
        let null_ref = d.residual.clone();
        assert!(theta_index(&s, &null_ref, tol()).unwrap() < 1e-9);
        let dn = decompose(&s, &null_ref, tol()).unwrap();
        assert!(dn.projected.norm() < 1e-9);
        assert!((min_error_bound(&s, &null_ref, tol()).unwrap() - null_ref.norm()).abs() < 1e-9);
    }

    #[test]
    fn theta_is_scale_invariant_and_undefined_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = untrackable_example();
        let y = random_reference(&mut rng, 1, 3, 6);
        let a = theta_index(&s, &y, tol()).unwrap();
        let b = theta_index(&s, &y.scaled(-3.7), tol()).unwrap();
        assert!((a - b).abs() < 1e-12);
        let z = Trajectory::zeros(1, 3, 6).unwrap();
        assert!(matches!(theta_index(&s, &z, tol()), Err(Error::UndefinedIndex(_))));
    }

    #[test]
    fn rga_properties() {
        let i = Matrix::identity(3, 3);
        assert!((rga(&i).unwrap() - &i).amax() < 1e-15);
        let g = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let r = rga(&g).unwrap();
        for row in r.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        // Oracle for a non-square G: row sums are diag(G G^+), which equals
        // the squared row norms of an orthonormal basis of R(G).
        let g = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 8.0, 1.0, 8.0]);
        let r = rga(&g).unwrap();
        let q = g.clone().qr().q();
        let sums: Vec<f64> = r.row_iter().map(|row| row.sum()).collect();
        for (i, s) in sums.iter().enumerate() {
            let expected = q.row(i).norm_squared();
            assert!((s - expected).abs() < 1e-12);
            assert!(*s >= -1e-12 && *s <= 1.0 + 1e-12);
        }
        assert!((sums.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn component_and_system_indices() {
        let v = vartheta_index(&example_12(), tol()).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-12));

        let v = vartheta_index(&untrackable_example(), tol()).unwrap();
        // diag of the projector onto span{[1,0,1],[0,8,8]}: [1/2+... ] computed by hand
        // basis q1 = [1,0,1]/sqrt2, q2 = [-1,2,1]/sqrt6 spans the same plane
        let expected = [0.5 + 1.0 / 6.0, 4.0 / 6.0, 0.5 + 1.0 / 6.0];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let theta = system_index(&untrackable_example(), ThetaVariant::Linear, tol()).unwrap();
        assert!((theta - 2.0 / 3.0).abs() < 1e-12);

        let v = vartheta_index(&index_example(), tol()).unwrap();
        assert!((v.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(v.iter().any(|x| (x - 1.0).abs() > 1e-3));

        let q = system_index(&example_12(), ThetaVariant::Quadratic, tol()).unwrap();
        assert!((q - 1.0).abs() < 1e-12);
    }
}
