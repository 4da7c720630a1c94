//! Block-diagonal "pointer state" Hamiltonians `H = sum_p |p><p| (x) H^(p)`.
//!
//! For a product initial state `rho^S_0 (x) |psi><psi|` the reduced state has
//! the closed form `rho^S_t,pp' = rho^S_0,pp' <psi| U^(p')_t^dagger U^(p)_t |psi>`
//! in the pointer basis.

use serde::Serialize;

use crate::bipartite::{assemble, kron_matrix, kron_states, reduce_to_s, BipartiteSystem};
use crate::bounds::{offdiag_ceiling, theorem4_from_record, BoundReport, SamplingParams};
use crate::dynamics::{
    default_horizon, offdiag_moduli, offdiag_pairs, sample_times, time_average_values, TimeAverageEstimate,
    TrajectorySampler,
};
use crate::ensembles::{
    coherent_product_state, gue_with, haar_unitary, haar_vector, normalize_op_norm,
    random_bipartite_unit_gap, seeded_rng,
};
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, ensure_same_dim, max_abs_diff, op_norm, symmetrize, ComplexMatrix, ComplexVector,
    DensityMatrix, HermitianOperator, SpectralDecomposition, C64, IDENTITY_TOL,
};

const STREAM_BLOCKS: u64 = 8;
const STREAM_PIPELINE_TIMES: u64 = 0x70_1e;
/// Number and window of the times at which closed form and pipeline are compared.
pub const PIPELINE_TIMES: usize = 50;
pub const PIPELINE_WINDOW: f64 = 1e3;
const STREAM_POINTER_BASIS: u64 = 9;
const STREAM_POINTER_STATE: u64 = 10;

#[derive(Clone, Debug)]
pub struct PointerModel {
    d_s: usize,
    d_b: usize,
    pointer_basis: ComplexMatrix,
    blocks: Vec<HermitianOperator>,
    spectra: Vec<SpectralDecomposition>,
}

impl PointerModel {
    /// `pointer_basis` columns are the states `|p>`; `blocks[p]` acts on the bath.
    pub fn new(pointer_basis: ComplexMatrix, blocks: Vec<HermitianOperator>) -> Result<Self> {
        let d_s = blocks.len();
        if d_s == 0 {
            return Err(Error::InvalidParameter(
                "pointer model needs at least one block".into(),
            ));
        }
        if pointer_basis.nrows() != pointer_basis.ncols() {
            return Err(Error::NotSquare {
                rows: pointer_basis.nrows(),
                cols: pointer_basis.ncols(),
            });
        }
        ensure_same_dim(d_s, pointer_basis.nrows())?;
        let identity = ComplexMatrix::identity(d_s, d_s);
        if max_abs_diff(&(pointer_basis.adjoint() * &pointer_basis), &identity) > IDENTITY_TOL {
            return Err(Error::InvalidParameter(
                "pointer basis is not unitary".into(),
            ));
        }
        let d_b = blocks[0].dim();
        for b in &blocks {
            ensure_same_dim(d_b, b.dim())?;
        }
        let spectra = blocks.iter().map(eigh).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d_s,
            d_b,
            pointer_basis,
            blocks,
            spectra,
        })
    }

    /// Pointer states are the computational basis.
    pub fn computational(blocks: Vec<HermitianOperator>) -> Result<Self> {
        let d_s = blocks.len();
        Self::new(ComplexMatrix::identity(d_s, d_s), blocks)
    }

    /// Independent unit-norm GUE blocks; with `rotate` the pointer basis is a
    /// Haar-random unitary instead of the computational basis.
    pub fn random(d_s: usize, d_b: usize, seed: u64, rotate: bool) -> Result<Self> {
        let mut rng = seeded_rng(seed, STREAM_BLOCKS);
        let blocks = (0..d_s)
            .map(|_| normalize_op_norm(&gue_with(d_b, &mut rng)?))
            .collect::<Result<Vec<_>>>()?;
        let basis = if rotate {
            haar_unitary(d_s, &mut seeded_rng(seed, STREAM_POINTER_BASIS))
        } else {
            ComplexMatrix::identity(d_s, d_s)
        };
        Self::new(basis, blocks)
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn pointer_basis(&self) -> &ComplexMatrix {
        &self.pointer_basis
    }

    pub fn blocks(&self) -> &[HermitianOperator] {
        &self.blocks
    }

    fn check_index(&self, p: usize) -> Result<()> {
        if p >= self.d_s {
            return Err(Error::IndexOutOfRange {
                index: p,
                dim: self.d_s,
            });
        }
        Ok(())
    }

    /// `U^(p)_t |psi>`.
    fn evolved_bath(&self, p: usize, psi: &ComplexVector, t: f64) -> ComplexVector {
        let sd = &self.spectra[p];
        let v = sd.eigenvectors();
        let coeffs = v.adjoint() * psi;
        let rotated = ComplexVector::from_fn(self.d_b, |n, _| {
            coeffs[n] * C64::from_polar(1.0, -sd.eigenvalues()[n] * t)
        });
        v * rotated
    }
}

/// `sum_p |p><p| (x) H^(p)` on the composite space.
pub fn pointer_hamiltonian(model: &PointerModel) -> HermitianOperator {
    let (d_s, d_b) = (model.d_s, model.d_b);
    let mut blockdiag = ComplexMatrix::zeros(d_s * d_b, d_s * d_b);
    for (p, h) in model.blocks.iter().enumerate() {
        blockdiag
            .view_mut((p * d_b, p * d_b), (d_b, d_b))
            .copy_from(h.matrix());
    }
    let w = kron_matrix(&model.pointer_basis, &ComplexMatrix::identity(d_b, d_b));
    HermitianOperator::new(&w * blockdiag * w.adjoint())
        .expect("conjugated block Hamiltonian is Hermitian")
}

fn bath_vector(model: &PointerModel, psi_b0: &DensityMatrix) -> Result<ComplexVector> {
    ensure_same_dim(model.d_b, psi_b0.dim())?;
    psi_b0.pure_vector()
}

/// `<psi| U^(p')_t^dagger U^(p)_t |psi>`.
pub fn suppression_factor(
    model: &PointerModel,
    psi_b0: &DensityMatrix,
    p: usize,
    p_prime: usize,
    t: f64,
) -> Result<C64> {
    model.check_index(p)?;
    model.check_index(p_prime)?;
    if p == p_prime {
        return Ok(C64::new(1.0, 0.0));
    }
    let psi = bath_vector(model, psi_b0)?;
    let a = model.evolved_bath(p, &psi, t);
    let b = model.evolved_bath(p_prime, &psi, t);
    Ok(b.dotc(&a))
}

/// Long-time average of `|suppression_factor|^2` for blocks whose combined
/// gaps `E'_m - E_n` are non-degenerate:
/// `sum_{m,n} |<e'_m|psi>|^2 |<e_n|psi>|^2 |<e'_m|e_n>|^2`.
pub fn suppression_mean_square(
    model: &PointerModel,
    psi_b0: &DensityMatrix,
    p: usize,
    p_prime: usize,
) -> Result<f64> {
    model.check_index(p)?;
    model.check_index(p_prime)?;
    let psi = bath_vector(model, psi_b0)?;
    let e = model.spectra[p].eigenvectors();
    let f = model.spectra[p_prime].eigenvectors();
    let b = e.adjoint() * &psi;
    let a = f.adjoint() * &psi;
    let overlap = f.adjoint() * e;
    let mut total = 0.0;
    for m in 0..model.d_b {
        for n in 0..model.d_b {
            total += a[m].norm_sqr() * b[n].norm_sqr() * overlap[(m, n)].norm_sqr();
        }
    }
    Ok(total)
}

/// Reduced state at time `t`, from the closed form.
pub fn pointer_evolve(
    model: &PointerModel,
    rho_s0: &DensityMatrix,
    psi_b0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    ensure_same_dim(model.d_s, rho_s0.dim())?;
    let psi = bath_vector(model, psi_b0)?;
    let w = &model.pointer_basis;
    let in_pointer = w.adjoint() * rho_s0.matrix() * w;
    let evolved: Vec<ComplexVector> = (0..model.d_s)
        .map(|p| model.evolved_bath(p, &psi, t))
        .collect();
    let mut m = in_pointer.clone();
    for p in 0..model.d_s {
        for q in 0..model.d_s {
            if p != q {
                m[(p, q)] *= evolved[q].dotc(&evolved[p]);
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(symmetrize(
        w * m * w.adjoint(),
    )))
}

/// The same reduced state via assemble, exact evolution and partial trace.
pub struct PointerReference {
    sampler: TrajectorySampler,
}

impl PointerReference {
    pub fn new(
        model: &PointerModel,
        rho_s0: &DensityMatrix,
        psi_b0: &DensityMatrix,
    ) -> Result<Self> {
        ensure_same_dim(model.d_s, rho_s0.dim())?;
        ensure_same_dim(model.d_b, psi_b0.dim())?;
        let h = pointer_hamiltonian(model);
        let sys = crate::bipartite::decompose(&h, model.d_s, model.d_b)?;
        let spectrum = eigh(&h)?;
        let rho0 = kron_states(rho_s0, psi_b0);
        Ok(Self {
            sampler: TrajectorySampler::with_spectrum(&sys, assemble(&sys), spectrum, &rho0)?,
        })
    }

    pub fn reduced_state(&self, t: f64) -> Result<DensityMatrix> {
        let sys = self.sampler.system();
        reduce_to_s(&self.sampler.state_at(t), sys.d_s(), sys.d_b())
    }

    pub fn sampler(&self) -> &TrajectorySampler {
        &self.sampler
    }
}

/// Largest change of a pointer-basis diagonal entry between two reduced states.
pub fn diagonal_drift(
    model: &PointerModel,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
) -> Result<f64> {
    let a = rho_a.in_basis(&model.pointer_basis)?;
    let b = rho_b.in_basis(&model.pointer_basis)?;
    Ok((0..model.d_s)
        .map(|p| (a[(p, p)] - b[(p, p)]).norm())
        .fold(0.0, f64::max))
}

/// Uniform superposition of all pointer states.
pub fn coherent_pointer_state(model: &PointerModel) -> Result<DensityMatrix> {
    let ones = ComplexVector::from_element(model.d_s, C64::new(1.0, 0.0));
    DensityMatrix::pure(&(&model.pointer_basis * ones))
}

/// One sampled time of the pointer arm; moduli ordered as [`offdiag_pairs`].
#[derive(Clone, Debug, PartialEq)]
pub struct PointerSample {
    pub time: f64,
    pub diagonal_drift: f64,
    pub suppression: Vec<f64>,
    pub offdiag: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointerArm {
    /// Time averages of `|rho^S_kl|` in the pointer basis, `k < l`.
    pub offdiag: Vec<TimeAverageEstimate>,
    pub max_diagonal_drift: f64,
    /// Largest deviation of the closed form from the full pipeline.
    pub max_pipeline_difference: f64,
    pub min_suppression_modulus: f64,
    pub max_suppression_modulus: f64,
    #[serde(skip)]
    pub samples: Vec<PointerSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericArm {
    pub coupling_scale: f64,
    /// Time averages of `|rho^S_kl|` in the eigenbasis of `H_S`, `k < l`.
    pub offdiag: Vec<TimeAverageEstimate>,
    /// Time-averaged pointwise ceiling for the largest-gap pair.
    pub ceiling: BoundReport,
    pub min_pointwise_slack: f64,
    pub pointwise_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastReport {
    pub seed: u64,
    pub d_s: usize,
    pub d_b: usize,
    pub pointer: PointerArm,
    pub generic: GenericArm,
}

fn averages(rows: &[Vec<f64>], horizon: f64) -> Result<Vec<TimeAverageEstimate>> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|i| time_average_values(&rows.iter().map(|r| r[i]).collect::<Vec<_>>(), horizon))
        .collect()
}

/// Runs a pointer model and a generic unit-gap instance of the same size and
/// seed, each from a state maximally coherent in its preferred basis.
pub fn contrast_experiment(
    d_s: usize,
    d_b: usize,
    seed: u64,
    coupling_scale: f64,
    sampling: &SamplingParams,
) -> Result<ContrastReport> {
    if d_s < 2 {
        return Err(Error::InvalidParameter("contrast needs d_S >= 2".into()));
    }
    let model = PointerModel::random(d_s, d_b, seed, true)?;
    let rho_s0 = coherent_pointer_state(&model)?;
    let bath = haar_vector(d_b, &mut seeded_rng(seed, STREAM_POINTER_STATE));
    let psi_b0 = DensityMatrix::pure(&bath)?;
    let reference = PointerReference::new(&model, &rho_s0, &psi_b0)?;
    let horizon = sampling.horizon.unwrap_or_else(|| {
        default_horizon(reference.sampler().spectrum(), sampling.horizon_factor)
    });
    let times = sample_times(horizon, sampling.n_samples, sampling.seed);

    let mut rows = Vec::with_capacity(times.len());
    let mut samples = Vec::with_capacity(times.len());
    let mut drift: f64 = 0.0;
    let mut pipeline: f64 = 0.0;
    let (mut smin, mut smax) = (f64::INFINITY, 0.0f64);
    for &t in &times {
        let closed = pointer_evolve(&model, &rho_s0, &psi_b0, t)?;
        let d = diagonal_drift(&model, &closed, &rho_s0)?;
        drift = drift.max(d);
        let offdiag = offdiag_moduli(&closed, &model.pointer_basis)?;
        let suppression = offdiag_pairs(d_s)
            .into_iter()
            .map(|(p, q)| Ok(suppression_factor(&model, &psi_b0, p, q, t)?.norm()))
            .collect::<Result<Vec<f64>>>()?;
        for &s in &suppression {
            smin = smin.min(s);
            smax = smax.max(s);
        }
        rows.push(offdiag.clone());
        samples.push(PointerSample {
            time: t,
            diagonal_drift: d,
            suppression,
            offdiag,
        });
    }
    // Phase errors grow like eigenvalue error times t, so the comparison with
    // the full pipeline uses its own times on a bounded window.
    let window = horizon.min(PIPELINE_WINDOW);
    for t in sample_times(
        window,
        PIPELINE_TIMES,
        sampling.seed ^ STREAM_PIPELINE_TIMES,
    ) {
        let closed = pointer_evolve(&model, &rho_s0, &psi_b0, t)?;
        pipeline = pipeline.max(max_abs_diff(
            closed.matrix(),
            reference.reduced_state(t)?.matrix(),
        ));
    }
    let pointer = PointerArm {
        offdiag: averages(&rows, horizon)?,
        max_diagonal_drift: drift,
        max_pipeline_difference: pipeline,
        min_suppression_modulus: smin,
        max_suppression_modulus: smax,
        samples,
    };

    let sys = random_bipartite_unit_gap(d_s, d_b, coupling_scale, seed)?;
    let generic = generic_arm(&sys, seed, coupling_scale, sampling)?;
    Ok(ContrastReport {
        seed,
        d_s,
        d_b,
        pointer,
        generic,
    })
}

fn generic_arm(
    sys: &BipartiteSystem,
    seed: u64,
    coupling_scale: f64,
    sampling: &SamplingParams,
) -> Result<GenericArm> {
    let rho0 = coherent_product_state(sys, seed)?;
    let sampler = TrajectorySampler::new(sys, &rho0)?;
    let trajectory = sampling.sample(&sampler)?;
    let h_sb_norm = op_norm(sys.h_sb())?;
    let dims = vec![sys.d_s(), sys.d_b()];
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    for r in &trajectory.records {
        let rep = theorem4_from_record(h_sb_norm, sampler.local_spectrum(), r, dims.clone())?;
        min_slack = min_slack.min(rep.slack);
        if !rep.satisfied {
            violations += 1;
        }
    }
    let rows: Vec<Vec<f64>> = trajectory
        .records
        .iter()
        .map(|r| r.offdiag.clone())
        .collect();
    Ok(GenericArm {
        coupling_scale,
        offdiag: averages(&rows, trajectory.horizon)?,
        ceiling: offdiag_ceiling(&sampler, &trajectory, (0, sys.d_s() - 1))?,
        min_pointwise_slack: min_slack,
        pointwise_violations: violations,
    })
}
