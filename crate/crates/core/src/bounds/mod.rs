//! Executable forms of the trace-norm lower bound, the equilibration bounds
//! and the pointwise decoherence bound.

pub mod matching;

use nalgebra::DMatrix;
use serde::Serialize;

pub use matching::{
    blossom_pairing, check_weights, enumerate_pairings, greedy_pairing, max_pairing,
    subset_pairing, PairingMethod, PairingResult,
};

use crate::bipartite::{reduce_to_b, reduce_to_s, BipartiteSystem};
use crate::dynamics::{
    dephase, effective_dimension, evaluate_speed, offdiag_pairs, time_average, time_average_values,
    Trajectory, TrajectoryField, TrajectoryRecord, TrajectorySampler,
};
use crate::ensembles::{haar_subspace_vector, seeded_rng, trial_seed};
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, ensure_same_dim, hermitian_commutator, op_norm, trace, trace_norm, ComplexMatrix,
    DensityMatrix, HermitianOperator, SpectralDecomposition, C64, PIPELINE_TOL,
};

/// Tolerance for the trace-norm lower bound.
pub const LEMMA_TOL: f64 = 1e-10;
/// Tolerance for the pointwise decoherence bound.
pub const POINTWISE_TOL: f64 = PIPELINE_TOL;
/// Number of standard errors allowed on Monte Carlo estimates.
pub const SIGMA_FACTOR: f64 = 3.0;

const STREAM_SUBSPACE: u64 = 7;

/// The tail constant `ln(2)^2 / (72 pi^3)`.
pub fn tail_constant() -> f64 {
    std::f64::consts::LN_2.powi(2) / (72.0 * std::f64::consts::PI.powi(3))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    LhsAtLeastRhs,
    LhsAtMostRhs,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundContext {
    pub bound: String,
    pub tolerance: f64,
    pub dims: Vec<usize>,
    /// The weaker of two displayed right-hand sides, when there is one.
    pub secondary_rhs: Option<f64>,
    pub std_error: Option<f64>,
    pub sample_count: Option<usize>,
}

impl BoundContext {
    fn new(bound: &str, tolerance: f64, dims: Vec<usize>) -> Self {
        Self {
            bound: bound.to_string(),
            tolerance,
            dims,
            secondary_rhs: None,
            std_error: None,
            sample_count: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub direction: BoundDirection,
    pub satisfied: bool,
    /// Positive when the inequality holds with room to spare.
    pub slack: f64,
    pub context: BoundContext,
}

impl BoundReport {
    pub fn new(lhs: f64, rhs: f64, direction: BoundDirection, context: BoundContext) -> Self {
        let slack = match direction {
            BoundDirection::LhsAtLeastRhs => lhs - rhs,
            BoundDirection::LhsAtMostRhs => rhs - lhs,
        };
        Self {
            lhs,
            rhs,
            direction,
            satisfied: slack >= -context.tolerance,
            slack,
            context,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.context.tolerance
    }
}

/// `w_kl = |a_k - a_l| |m_kl|` for a matrix already in the eigenbasis.
pub fn gap_weights(eigenvalues: &[f64], m: &ComplexMatrix) -> DMatrix<f64> {
    let d = eigenvalues.len();
    DMatrix::from_fn(d, d, |k, l| {
        if k == l {
            0.0
        } else {
            // symmetric by construction even when m is only Hermitian to rounding
            let (i, j) = if k < l { (k, l) } else { (l, k) };
            (eigenvalues[i] - eigenvalues[j]).abs() * m[(i, j)].norm()
        }
    })
}

fn max_weight(w: &DMatrix<f64>) -> f64 {
    w.iter().copied().fold(0.0, f64::max)
}

/// `|i[rho, A]|_1 >= 2 max_pairing(w) >= 2 max w_kl`.
///
/// The report carries the pairing bound as `rhs` and the single-pair bound as
/// the secondary value.
pub fn lemma1_lower_bound(
    rho: &DensityMatrix,
    a_sd: &SpectralDecomposition,
) -> Result<BoundReport> {
    Ok(lemma1_with_pairing(rho, a_sd)?.0)
}

/// As [`lemma1_lower_bound`], also returning the optimal pairing.
pub fn lemma1_with_pairing(
    rho: &DensityMatrix,
    a_sd: &SpectralDecomposition,
) -> Result<(BoundReport, PairingResult)> {
    ensure_same_dim(a_sd.dim(), rho.dim())?;
    let a = HermitianOperator::from_matrix_unchecked(a_sd.reconstruct());
    let lhs = trace_norm(&hermitian_commutator(rho, &a)?)?;
    let weights = gap_weights(a_sd.eigenvalues(), &rho.in_basis(a_sd.eigenvectors())?);
    let pairing = max_pairing(&weights)?;
    let mut ctx = BoundContext::new("lemma1", LEMMA_TOL, vec![rho.dim()]);
    ctx.secondary_rhs = Some(2.0 * max_weight(&weights));
    Ok((
        BoundReport::new(lhs, 2.0 * pairing.value, BoundDirection::LhsAtLeastRhs, ctx),
        pairing,
    ))
}

/// `2 Tr[Pi i[rho, A]]` for the projector built from `pairing`, with the
/// phase of each pair chosen to make its contribution `|a_k - a_l| |rho_kl|`.
pub fn projector_witness(
    rho: &DensityMatrix,
    a_sd: &SpectralDecomposition,
    pairing: &PairingResult,
) -> Result<f64> {
    let d = a_sd.dim();
    ensure_same_dim(d, rho.dim())?;
    let mut used = vec![false; d];
    for &(k, l) in &pairing.pairs {
        if k >= d || l >= d || k == l || used[k] || used[l] {
            return Err(Error::InvalidPairing(format!(
                "pair ({k}, {l}) invalid for dimension {d}"
            )));
        }
        used[k] = true;
        used[l] = true;
    }
    let a = HermitianOperator::from_matrix_unchecked(a_sd.reconstruct());
    let b = hermitian_commutator(rho, &a)?;
    let b_eigen = a_sd.eigenvectors().adjoint() * b.matrix() * a_sd.eigenvectors();
    let mut pi = ComplexMatrix::zeros(d, d);
    for &(k, l) in &pairing.pairs {
        let phase = C64::from_polar(1.0, -b_eigen[(k, l)].arg());
        let pk = a_sd.eigenvector(k);
        let pl = a_sd.eigenvector(l);
        let v = (pk + pl * phase).unscale(std::f64::consts::SQRT_2);
        pi += &v * v.adjoint();
    }
    Ok(2.0 * trace(&(pi * b.matrix())).re)
}

/// Right-hand side of the pointwise bound for a subsystem state: the pairing functional
/// over `|E_k - E_l| |rho_kl|` in the eigenbasis of `H_S`, and the best single pair.
pub fn pointwise_rhs(local_sd: &SpectralDecomposition, offdiag: &[f64]) -> Result<(f64, f64)> {
    let d = local_sd.dim();
    let e = local_sd.eigenvalues();
    let pairs = offdiag_pairs(d);
    if pairs.len() != offdiag.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            found: offdiag.len(),
        });
    }
    let mut w = DMatrix::zeros(d, d);
    for (&(k, l), &m) in pairs.iter().zip(offdiag) {
        let v = (e[k] - e[l]).abs() * m;
        w[(k, l)] = v;
        w[(l, k)] = v;
    }
    Ok((max_pairing(&w)?.value, max_weight(&w)))
}

/// `|H_SB| + v_S(t) >= max_pairing(|E_k - E_l| |rho^S_kl|)` at one instant.
pub fn theorem4_check(sys: &BipartiteSystem, rho_t: &DensityMatrix) -> Result<BoundReport> {
    ensure_same_dim(sys.dim(), rho_t.dim())?;
    let local_sd = eigh(sys.h_s())?;
    let speed = evaluate_speed(sys, &crate::bipartite::assemble(sys), rho_t)?.speed;
    let rho_s = reduce_to_s(rho_t, sys.d_s(), sys.d_b())?;
    let offdiag = crate::dynamics::offdiag_moduli(&rho_s, local_sd.eigenvectors())?;
    theorem4_from_parts(
        op_norm(sys.h_sb())?,
        speed,
        &local_sd,
        &offdiag,
        vec![sys.d_s(), sys.d_b()],
    )
}

/// [`theorem4_check`] on an already computed trajectory record.
pub fn theorem4_from_record(
    h_sb_norm: f64,
    local_sd: &SpectralDecomposition,
    record: &TrajectoryRecord,
    dims: Vec<usize>,
) -> Result<BoundReport> {
    theorem4_from_parts(h_sb_norm, record.speed, local_sd, &record.offdiag, dims)
}

fn theorem4_from_parts(
    h_sb_norm: f64,
    speed: f64,
    local_sd: &SpectralDecomposition,
    offdiag: &[f64],
    dims: Vec<usize>,
) -> Result<BoundReport> {
    let (pairing, single) = pointwise_rhs(local_sd, offdiag)?;
    let mut ctx = BoundContext::new("theorem4", POINTWISE_TOL, dims);
    ctx.secondary_rhs = Some(single);
    Ok(BoundReport::new(
        h_sb_norm + speed,
        pairing,
        BoundDirection::LhsAtLeastRhs,
        ctx,
    ))
}

/// Horizon and sample count for time averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingParams {
    /// Explicit horizon; the default is `horizon_factor * 2 pi / min spacing`.
    pub horizon: Option<f64>,
    pub horizon_factor: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            horizon: None,
            horizon_factor: crate::dynamics::DEFAULT_HORIZON_FACTOR,
            n_samples: crate::dynamics::DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

impl SamplingParams {
    pub fn sample(&self, sampler: &TrajectorySampler) -> Result<Trajectory> {
        let horizon = self
            .horizon
            .unwrap_or_else(|| sampler.default_horizon(self.horizon_factor));
        sampler.sample(horizon, self.n_samples, self.seed)
    }
}

fn upper_bound_report(
    name: &str,
    estimate: crate::dynamics::TimeAverageEstimate,
    rhs: f64,
    dims: Vec<usize>,
) -> BoundReport {
    let mut ctx = BoundContext::new(name, SIGMA_FACTOR * estimate.std_error, dims);
    ctx.std_error = Some(estimate.std_error);
    ctx.sample_count = Some(estimate.sample_count);
    BoundReport::new(estimate.mean, rhs, BoundDirection::LhsAtMostRhs, ctx)
}

/// `<D(rho^S_t, omega^S)>_t <= 1/2 sqrt(d_S / d_eff(omega^B))`, with the
/// weaker `1/2 sqrt(d_S^2 / d_eff(omega))` as secondary value.
pub fn theorem1_from_trajectory(
    sampler: &TrajectorySampler,
    trajectory: &Trajectory,
) -> Result<BoundReport> {
    let sys = sampler.system();
    let d_s = sys.d_s() as f64;
    let omega_b = reduce_to_b(sampler.omega(), sys.d_s(), sys.d_b())?;
    let rhs = 0.5 * (d_s / effective_dimension(&omega_b)).sqrt();
    let weaker = 0.5 * (d_s * d_s / effective_dimension(sampler.omega())).sqrt();
    let estimate = time_average(trajectory, TrajectoryField::DistanceToOmega)?;
    let mut report = upper_bound_report("theorem1", estimate, rhs, vec![sys.d_s(), sys.d_b()]);
    report.context.secondary_rhs = Some(weaker);
    Ok(report)
}

pub fn theorem1_check(
    sys: &BipartiteSystem,
    rho0: &DensityMatrix,
    params: &SamplingParams,
) -> Result<BoundReport> {
    require_pure(rho0)?;
    let sampler = TrajectorySampler::new(sys, rho0)?;
    theorem1_from_trajectory(&sampler, &params.sample(&sampler)?)
}

/// `<v_S>_t <= |H_S (x) 1 + H_SB| sqrt(d_S^3 / d_eff(omega))`.
pub fn theorem3_from_trajectory(
    sampler: &TrajectorySampler,
    trajectory: &Trajectory,
) -> Result<BoundReport> {
    let sys = sampler.system();
    let d_s = sys.d_s() as f64;
    let prefactor = op_norm(&sys.local_plus_interaction())?;
    let rhs = prefactor * (d_s.powi(3) / effective_dimension(sampler.omega())).sqrt();
    let estimate = time_average(trajectory, TrajectoryField::Speed)?;
    Ok(upper_bound_report(
        "theorem3",
        estimate,
        rhs,
        vec![sys.d_s(), sys.d_b()],
    ))
}

pub fn theorem3_check(
    sys: &BipartiteSystem,
    rho0: &DensityMatrix,
    params: &SamplingParams,
) -> Result<BoundReport> {
    let sampler = TrajectorySampler::new(sys, rho0)?;
    theorem3_from_trajectory(&sampler, &params.sample(&sampler)?)
}

/// Time-averaged consequence of the pointwise bound for one pair `(k, l)`:
/// `<|rho^S_kl|> <= (|H_SB| + <v_S>) / |E_k - E_l|`.
///
/// The tolerance is three standard errors of the paired per-sample difference.
pub fn offdiag_ceiling(
    sampler: &TrajectorySampler,
    trajectory: &Trajectory,
    pair: (usize, usize),
) -> Result<BoundReport> {
    let sys = sampler.system();
    let pairs = offdiag_pairs(sys.d_s());
    let (k, l) = if pair.0 < pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    };
    let idx = pairs
        .iter()
        .position(|&p| p == (k, l))
        .ok_or(Error::IndexOutOfRange {
            index: l,
            dim: sys.d_s(),
        })?;
    let e = sampler.local_spectrum().eigenvalues();
    let gap = e[l] - e[k];
    if gap <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "levels {k} and {l} are degenerate"
        )));
    }
    let h_sb_norm = op_norm(sys.h_sb())?;
    let horizon = trajectory.horizon;
    let offdiag = time_average(trajectory, TrajectoryField::Offdiag(idx))?;
    let speed = time_average(trajectory, TrajectoryField::Speed)?;
    let diffs: Vec<f64> = trajectory
        .records
        .iter()
        .map(|r| r.offdiag[idx] - r.speed / gap)
        .collect();
    let se = time_average_values(&diffs, horizon)?.std_error;
    let mut ctx = BoundContext::new(
        "offdiag_ceiling",
        SIGMA_FACTOR * se,
        vec![sys.d_s(), sys.d_b()],
    );
    ctx.std_error = Some(se);
    ctx.sample_count = Some(offdiag.sample_count);
    Ok(BoundReport::new(
        offdiag.mean,
        (h_sb_norm + speed.mean) / gap,
        BoundDirection::LhsAtMostRhs,
        ctx,
    ))
}

fn require_pure(rho: &DensityMatrix) -> Result<()> {
    let purity = rho.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(Error::NotPure { purity });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub d_r: usize,
    pub embed_dim: usize,
    pub n_trials: usize,
    pub mean_deff: f64,
    pub std_error: f64,
    pub frac_below_quarter: f64,
    pub constant_c: f64,
    /// `2 exp(-C sqrt(d_R))`; above one the tail statement is vacuous.
    pub bound_prob: f64,
    pub tail_vacuous: bool,
    pub mean_satisfied: bool,
    pub tail_satisfied: bool,
    pub deffs: Vec<f64>,
}

/// Effective dimensions of Haar states on the span of the lowest `d_r`
/// energy eigenvectors of `embed`.
pub fn theorem2_check(
    d_r: usize,
    embed: &SpectralDecomposition,
    n_trials: usize,
    seed: u64,
) -> Result<Theorem2Report> {
    let dim = embed.dim();
    if d_r > dim {
        return Err(Error::SubspaceTooLarge {
            dim_r: d_r,
            embed_dim: dim,
        });
    }
    if n_trials < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            found: n_trials,
        });
    }
    let deffs = (0..n_trials)
        .map(|i| haar_subspace_deff(d_r, embed, trial_seed(seed, i as u64)))
        .collect::<Result<Vec<f64>>>()?;
    theorem2_summary(d_r, dim, deffs)
}

/// `d_eff` of the dephased state of one Haar draw on the lowest `d_r` levels.
pub fn haar_subspace_deff(d_r: usize, embed: &SpectralDecomposition, seed: u64) -> Result<f64> {
    let mut rng = seeded_rng(seed, STREAM_SUBSPACE);
    let psi = haar_subspace_vector(d_r, embed.dim(), Some(embed), &mut rng)?;
    Ok(effective_dimension(&dephase(
        embed,
        &DensityMatrix::pure(&psi)?,
    )?))
}

/// Summary statistics and assertions for a list of effective dimensions.
pub fn theorem2_summary(d_r: usize, embed_dim: usize, deffs: Vec<f64>) -> Result<Theorem2Report> {
    let n = deffs.len();
    let est = time_average_values(&deffs, 1.0)?;
    let quarter = d_r as f64 / 4.0;
    let below: Vec<f64> = deffs
        .iter()
        .map(|&x| if x < quarter { 1.0 } else { 0.0 })
        .collect();
    let frac = below.iter().sum::<f64>() / n as f64;
    let frac_se = time_average_values(&below, 1.0)?.std_error;
    let c = tail_constant();
    let bound_prob = 2.0 * (-c * (d_r as f64).sqrt()).exp();
    Ok(Theorem2Report {
        d_r,
        embed_dim,
        n_trials: n,
        mean_deff: est.mean,
        std_error: est.std_error,
        frac_below_quarter: frac,
        constant_c: c,
        bound_prob,
        tail_vacuous: bound_prob > 1.0,
        mean_satisfied: est.mean >= d_r as f64 / 2.0 - SIGMA_FACTOR * est.std_error,
        tail_satisfied: frac <= bound_prob.min(1.0) + SIGMA_FACTOR * frac_se,
        deffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{haar_pure_state, random_bipartite};
    use crate::linalg::ComplexVector;

    fn plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&ComplexVector::from_vec(vec![
            C64::new(s, 0.0),
            C64::new(s, 0.0),
        ]))
        .unwrap()
    }

    #[test]
    fn tail_constant_value() {
        let c = tail_constant();
        assert!((c - 2.152e-4).abs() < 5e-8, "{c}");
    }

    #[test]
    fn trace_norm_bound_tight_on_plus_state() {
        let a = eigh(&HermitianOperator::from_real_diagonal(&[0.0, 1.0])).unwrap();
        let (r, p) = lemma1_with_pairing(&plus(), &a).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-10 && (r.rhs - 1.0).abs() < 1e-10);
        assert!(r.satisfied);
        assert!((projector_witness(&plus(), &a, &p).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_norm_bound_commuting_is_zero() {
        let rho = DensityMatrix::from_probabilities(&[0.2, 0.3, 0.5]).unwrap();
        let a = eigh(&HermitianOperator::from_real_diagonal(&[1.0, -2.0, 0.5])).unwrap();
        let (r, p) = lemma1_with_pairing(&rho, &a).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        assert!(projector_witness(&rho, &a, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn trace_norm_bound_dimension_mismatch() {
        let a = eigh(&HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0])).unwrap();
        assert!(matches!(
            lemma1_lower_bound(&plus(), &a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn witness_rejects_bad_pairing() {
        let a = eigh(&HermitianOperator::from_real_diagonal(&[0.0, 1.0])).unwrap();
        let bad = PairingResult {
            pairs: vec![(0, 0)],
            value: 0.0,
            method: PairingMethod::Greedy,
        };
        assert!(matches!(
            projector_witness(&plus(), &a, &bad),
            Err(Error::InvalidPairing(_))
        ));
    }

    #[test]
    fn report_direction_and_slack() {
        let ctx = BoundContext::new("x", 0.1, vec![]);
        let r = BoundReport::new(1.0, 1.05, BoundDirection::LhsAtLeastRhs, ctx.clone());
        assert!(r.satisfied && (r.slack + 0.05).abs() < 1e-15);
        let r = BoundReport::new(1.2, 1.0, BoundDirection::LhsAtMostRhs, ctx);
        assert!(!r.satisfied);
    }

    #[test]
    fn pointwise_uncoupled_diagonal() {
        let h_s = HermitianOperator::from_real_diagonal(&[-0.5, 0.5]);
        let h_b = HermitianOperator::from_real_diagonal(&[-1.0, 0.0, 1.0]);
        let sys = BipartiteSystem::uncoupled(h_s, h_b).unwrap();
        let rho = DensityMatrix::from_probabilities(&[0.1, 0.2, 0.1, 0.3, 0.2, 0.1]).unwrap();
        let r = theorem4_check(&sys, &rho).unwrap();
        assert!(r.rhs.abs() < 1e-14 && r.satisfied);
    }

    #[test]
    fn pointwise_random_instant() {
        let sys = random_bipartite(2, 8, 0.1, 3).unwrap();
        let rho = haar_pure_state(16, 4).unwrap();
        let r = theorem4_check(&sys, &rho).unwrap();
        assert!(r.satisfied, "{r:?}");
        assert!(r.rhs >= r.context.secondary_rhs.unwrap() - 1e-15);
    }

    #[test]
    fn equilibration_bounds_on_eigenstate() {
        let sys = random_bipartite(2, 4, 0.05, 11).unwrap();
        let sd = eigh(&crate::bipartite::assemble(&sys)).unwrap();
        let rho0 = DensityMatrix::pure(&sd.eigenvector(3)).unwrap();
        let params = SamplingParams {
            n_samples: 20,
            seed: 1,
            ..Default::default()
        };
        let r1 = theorem1_check(&sys, &rho0, &params).unwrap();
        assert!(r1.lhs < 1e-9 && r1.satisfied);
        let r3 = theorem3_check(&sys, &rho0, &params).unwrap();
        assert!(r3.lhs < 1e-9 && r3.satisfied);
    }

    #[test]
    fn equilibration_requires_pure() {
        let sys = random_bipartite(2, 2, 0.05, 1).unwrap();
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            theorem1_check(&sys, &rho, &SamplingParams::default()),
            Err(Error::NotPure { .. })
        ));
    }

    #[test]
    fn deff_trivial_subspace() {
        let sd = eigh(&HermitianOperator::from_real_diagonal(&[
            0.0, 1.0, 2.0, 3.0,
        ]))
        .unwrap();
        let r = theorem2_check(1, &sd, 10, 5).unwrap();
        assert!(r.deffs.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(r.mean_satisfied && r.frac_below_quarter == 0.0);
        assert!(matches!(
            theorem2_check(5, &sd, 10, 5),
            Err(Error::SubspaceTooLarge { .. })
        ));
    }
}
