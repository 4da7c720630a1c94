//! Exact time evolution and subsystem observables.
//!
//! Evolution is spectral: a state is expanded in the energy eigenbasis once
//! and each sampled time only costs a phase rotation and a change of basis.

use rand::Rng;
use serde::Serialize;

use crate::bipartite::{assemble, partial_trace_b_of_commutator, reduce_to_s, BipartiteSystem};
use crate::ensembles::seeded_rng;
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, ensure_same_dim, hermitian_commutator, matrix_exp_unitary, max_abs_diff, trace_distance,
    trace_norm, ComplexMatrix, ComplexVector, DensityMatrix, HermitianOperator,
    SpectralDecomposition, C64, I, IDENTITY_TOL,
};

/// Eigenvalues closer than this are treated as one level when dephasing.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Agreement required between the two speed formulas.
pub const SPEED_ROUTE_TOL: f64 = 1e-10;
/// Default horizon in units of `2 pi / min level spacing`.
pub const DEFAULT_HORIZON_FACTOR: f64 = 1e3;
pub const DEFAULT_SAMPLES: usize = 200;

const STREAM_TIMES: u64 = 6;

/// `U_t rho0 U_t^dagger`.
pub fn evolve(h_sd: &SpectralDecomposition, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    ensure_same_dim(h_sd.dim(), rho0.dim())?;
    let u = matrix_exp_unitary(h_sd, t);
    Ok(DensityMatrix::from_matrix_unchecked(
        &u * rho0.matrix() * u.adjoint(),
    ))
}

/// Reported when dephasing had to merge numerically close eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegenerateSpectrumWarning {
    pub degenerate_levels: usize,
    pub largest_group: usize,
}

#[derive(Clone, Debug)]
pub struct DephaseOutcome {
    pub state: DensityMatrix,
    pub warning: Option<DegenerateSpectrumWarning>,
}

/// Groups of consecutive eigenvalue indices within [`DEGENERACY_TOL`].
pub fn level_groups(sd: &SpectralDecomposition) -> Vec<std::ops::Range<usize>> {
    let e = sd.eigenvalues();
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=e.len() {
        if k == e.len() || e[k] - e[k - 1] > DEGENERACY_TOL {
            groups.push(start..k);
            start = k;
        }
    }
    groups
}

/// Projects onto the eigenspaces of the Hamiltonian and reports merged levels.
pub fn dephase_with_report(
    h_sd: &SpectralDecomposition,
    rho0: &DensityMatrix,
) -> Result<DephaseOutcome> {
    ensure_same_dim(h_sd.dim(), rho0.dim())?;
    let v = h_sd.eigenvectors();
    let n = h_sd.dim();
    let in_eigen = rho0.in_basis(v)?;
    let groups = level_groups(h_sd);
    let mut blocked = ComplexMatrix::zeros(n, n);
    for g in &groups {
        for k in g.clone() {
            for l in g.clone() {
                blocked[(k, l)] = in_eigen[(k, l)];
            }
        }
    }
    let state = DensityMatrix::from_matrix_unchecked(v * blocked * v.adjoint());
    let merged: Vec<_> = groups.iter().filter(|g| g.len() > 1).collect();
    let warning = (!merged.is_empty()).then(|| DegenerateSpectrumWarning {
        degenerate_levels: merged.len(),
        largest_group: merged.iter().map(|g| g.len()).max().unwrap_or(1),
    });
    Ok(DephaseOutcome { state, warning })
}

/// Infinite-time average of `rho0` under the Hamiltonian.
pub fn dephase(h_sd: &SpectralDecomposition, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let outcome = dephase_with_report(h_sd, rho0)?;
    if let Some(w) = &outcome.warning {
        log::warn!(
            "dephasing merged {} degenerate level group(s)",
            w.degenerate_levels
        );
    }
    Ok(outcome.state)
}

/// `1 / Tr[omega^2]`.
pub fn effective_dimension(omega: &DensityMatrix) -> f64 {
    1.0 / omega.purity()
}

/// Both evaluations of `d rho^S / dt` and their agreement.
#[derive(Clone, Debug)]
pub struct SpeedEvaluation {
    pub derivative: HermitianOperator,
    pub speed: f64,
    pub route_difference: f64,
}

/// `i Tr_B[rho, H]` with the assembled Hamiltonian.
pub fn subsystem_derivative(
    sys: &BipartiteSystem,
    rho_t: &DensityMatrix,
) -> Result<HermitianOperator> {
    subsystem_derivative_with(sys, &assemble(sys), rho_t)
}

fn subsystem_derivative_with(
    sys: &BipartiteSystem,
    hamiltonian: &HermitianOperator,
    rho_t: &DensityMatrix,
) -> Result<HermitianOperator> {
    let comm = partial_trace_b_of_commutator(rho_t, hamiltonian, sys.d_s(), sys.d_b())?;
    Ok(HermitianOperator::from_matrix_unchecked(comm * I))
}

/// `i [rho^S, H_S] + i Tr_B[rho, H_SB]`; the bath Hamiltonian drops out.
pub fn subsystem_derivative_local(
    sys: &BipartiteSystem,
    rho_t: &DensityMatrix,
) -> Result<HermitianOperator> {
    let rho_s = reduce_to_s(rho_t, sys.d_s(), sys.d_b())?;
    let local = hermitian_commutator(&rho_s, sys.h_s())?;
    let coupling = partial_trace_b_of_commutator(rho_t, sys.h_sb(), sys.d_s(), sys.d_b())? * I;
    Ok(HermitianOperator::from_matrix_unchecked(
        local.matrix() + coupling,
    ))
}

/// Evaluates both formulas and fails if they disagree beyond [`SPEED_ROUTE_TOL`].
pub fn evaluate_speed(
    sys: &BipartiteSystem,
    hamiltonian: &HermitianOperator,
    rho_t: &DensityMatrix,
) -> Result<SpeedEvaluation> {
    ensure_same_dim(sys.dim(), rho_t.dim())?;
    let full = subsystem_derivative_with(sys, hamiltonian, rho_t)?;
    let local = subsystem_derivative_local(sys, rho_t)?;
    let speed = 0.5 * trace_norm(&full)?;
    let speed_local = 0.5 * trace_norm(&local)?;
    let route_difference =
        max_abs_diff(full.matrix(), local.matrix()).max((speed - speed_local).abs());
    if route_difference > SPEED_ROUTE_TOL {
        return Err(Error::SpeedRouteMismatch {
            difference: route_difference,
            tolerance: SPEED_ROUTE_TOL,
        });
    }
    Ok(SpeedEvaluation {
        derivative: full,
        speed,
        route_difference,
    })
}

/// `v_S = 1/2 |d rho^S/dt|_1`.
pub fn subsystem_speed(sys: &BipartiteSystem, rho_t: &DensityMatrix) -> Result<f64> {
    Ok(evaluate_speed(sys, &assemble(sys), rho_t)?.speed)
}

/// Index pairs `(k, l)`, `k < l`, in the order used for off-diagonal columns.
pub fn offdiag_pairs(d_s: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for k in 0..d_s {
        for l in (k + 1)..d_s {
            pairs.push((k, l));
        }
    }
    pairs
}

/// Moduli `|rho_kl|`, `k < l`, of `rho` expressed in the columns of `basis`.
pub fn offdiag_moduli(rho: &DensityMatrix, basis: &ComplexMatrix) -> Result<Vec<f64>> {
    let m = rho.in_basis(basis)?;
    Ok(offdiag_pairs(m.nrows())
        .into_iter()
        .map(|(k, l)| m[(k, l)].norm())
        .collect())
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub rho_s: DensityMatrix,
    pub speed: f64,
    pub distance_to_omega_s: f64,
    /// `|rho^S_kl|` in the eigenbasis of `H_S`, ordered as [`offdiag_pairs`].
    pub offdiag: Vec<f64>,
    pub speed_route_difference: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub horizon: f64,
    pub seed: u64,
    pub records: Vec<TrajectoryRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajectoryField {
    Speed,
    DistanceToOmega,
    /// Position in [`offdiag_pairs`].
    Offdiag(usize),
}

impl TrajectoryField {
    pub fn value(&self, record: &TrajectoryRecord) -> f64 {
        match *self {
            TrajectoryField::Speed => record.speed,
            TrajectoryField::DistanceToOmega => record.distance_to_omega_s,
            TrajectoryField::Offdiag(i) => record.offdiag[i],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeAverageEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub sample_count: usize,
    pub horizon: f64,
}

/// Sample mean and standard error of the mean.
pub fn time_average_values(values: &[f64], horizon: f64) -> Result<TimeAverageEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            found: n,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(TimeAverageEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        sample_count: n,
        horizon,
    })
}

pub fn time_average(
    trajectory: &Trajectory,
    field: TrajectoryField,
) -> Result<TimeAverageEstimate> {
    if let TrajectoryField::Offdiag(i) = field {
        if let Some(r) = trajectory.records.first() {
            if i >= r.offdiag.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: r.offdiag.len(),
                });
            }
        }
    }
    let values: Vec<f64> = trajectory.records.iter().map(|r| field.value(r)).collect();
    time_average_values(&values, trajectory.horizon)
}

/// `factor * 2 pi / (smallest level spacing)`, or `factor * 2 pi` when the
/// spectrum has a single level or a (numerically) degenerate one.
pub fn default_horizon(h_sd: &SpectralDecomposition, factor: f64) -> f64 {
    let period = match h_sd.min_level_spacing() {
        Some(gap) if gap > DEGENERACY_TOL => 2.0 * std::f64::consts::PI / gap,
        _ => 2.0 * std::f64::consts::PI,
    };
    factor * period
}

/// Sorted, uniformly distributed times in `[0, horizon]`.
pub fn sample_times(horizon: f64, n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed, STREAM_TIMES);
    let mut times: Vec<f64> = (0..n_samples)
        .map(|_| rng.random::<f64>() * horizon)
        .collect();
    times.sort_by(f64::total_cmp);
    times
}

/// A bipartite system and initial state prepared for repeated evaluation at
/// arbitrary times.
#[derive(Clone, Debug)]
pub struct TrajectorySampler {
    sys: BipartiteSystem,
    hamiltonian: HermitianOperator,
    spectrum: SpectralDecomposition,
    local_spectrum: SpectralDecomposition,
    /// Weights and energy-basis coefficients of the pure components of `rho0`.
    components: Vec<(f64, ComplexVector)>,
    omega: DensityMatrix,
    omega_s: DensityMatrix,
    dephase_warning: Option<DegenerateSpectrumWarning>,
}

impl TrajectorySampler {
    pub fn new(sys: &BipartiteSystem, rho0: &DensityMatrix) -> Result<Self> {
        let hamiltonian = assemble(sys);
        let spectrum = eigh(&hamiltonian)?;
        Self::with_spectrum(sys, hamiltonian, spectrum, rho0)
    }

    pub fn with_spectrum(
        sys: &BipartiteSystem,
        hamiltonian: HermitianOperator,
        spectrum: SpectralDecomposition,
        rho0: &DensityMatrix,
    ) -> Result<Self> {
        ensure_same_dim(sys.dim(), rho0.dim())?;
        ensure_same_dim(sys.dim(), spectrum.dim())?;
        let v = spectrum.eigenvectors();
        let pure = match rho0.pure_vector() {
            Ok(psi) if (rho0.purity() - 1.0).abs() <= 1e-12 => Some(psi),
            _ => None,
        };
        let components: Vec<(f64, ComplexVector)> = match pure {
            Some(psi) => vec![(1.0, v.adjoint() * psi)],
            None => {
                let sd = eigh(&rho0.to_operator())?;
                sd.eigenvalues()
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 1e-15)
                    .map(|(j, &p)| (p, v.adjoint() * sd.eigenvector(j)))
                    .collect()
            }
        };
        let outcome = dephase_with_report(&spectrum, rho0)?;
        let omega_s = reduce_to_s(&outcome.state, sys.d_s(), sys.d_b())?;
        Ok(Self {
            sys: sys.clone(),
            hamiltonian,
            spectrum,
            local_spectrum: eigh(sys.h_s())?,
            components,
            omega: outcome.state,
            omega_s,
            dephase_warning: outcome.warning,
        })
    }

    pub fn system(&self) -> &BipartiteSystem {
        &self.sys
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn local_spectrum(&self) -> &SpectralDecomposition {
        &self.local_spectrum
    }

    pub fn omega(&self) -> &DensityMatrix {
        &self.omega
    }

    pub fn omega_s(&self) -> &DensityMatrix {
        &self.omega_s
    }

    pub fn dephase_warning(&self) -> Option<&DegenerateSpectrumWarning> {
        self.dephase_warning.as_ref()
    }

    pub fn default_horizon(&self, factor: f64) -> f64 {
        default_horizon(&self.spectrum, factor)
    }

    /// The composite state at time `t`.
    pub fn state_at(&self, t: f64) -> DensityMatrix {
        let v = self.spectrum.eigenvectors();
        let e = self.spectrum.eigenvalues();
        let d = self.spectrum.dim();
        let mut rho = ComplexMatrix::zeros(d, d);
        for (p, c) in &self.components {
            let rotated = ComplexVector::from_fn(d, |k, _| c[k] * C64::from_polar(1.0, -e[k] * t));
            let psi = v * rotated;
            rho += (&psi * psi.adjoint()).scale(*p);
        }
        DensityMatrix::from_matrix_unchecked(rho)
    }

    /// Subsystem observables of a given composite state.
    pub fn record_for(&self, time: f64, rho_t: &DensityMatrix) -> Result<TrajectoryRecord> {
        let speed = evaluate_speed(&self.sys, &self.hamiltonian, rho_t)?;
        let rho_s = reduce_to_s(rho_t, self.sys.d_s(), self.sys.d_b())?;
        let distance_to_omega_s = trace_distance(&rho_s, &self.omega_s)?.clamp(0.0, 1.0);
        let offdiag = offdiag_moduli(&rho_s, self.local_spectrum.eigenvectors())?;
        Ok(TrajectoryRecord {
            time,
            rho_s,
            speed: speed.speed,
            distance_to_omega_s,
            offdiag,
            speed_route_difference: speed.route_difference,
        })
    }

    pub fn record_at(&self, t: f64) -> Result<TrajectoryRecord> {
        self.record_for(t, &self.state_at(t))
    }

    pub fn sample(&self, horizon: f64, n_samples: usize, seed: u64) -> Result<Trajectory> {
        check_sampling(horizon, n_samples)?;
        let records = sample_times(horizon, n_samples, seed)
            .into_iter()
            .map(|t| self.record_at(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            horizon,
            seed,
            records,
        })
    }
}

pub(crate) fn check_sampling(horizon: f64, n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            found: n_samples,
        });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    Ok(())
}

/// Records at `n_samples` uniformly random times in `[0, horizon]`.
pub fn sample_trajectory(
    sys: &BipartiteSystem,
    rho0: &DensityMatrix,
    horizon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Trajectory> {
    check_sampling(horizon, n_samples)?;
    TrajectorySampler::new(sys, rho0)?.sample(horizon, n_samples, seed)
}

/// Checks `U U^dagger = 1` within the identity tolerance.
pub fn is_unitary(u: &ComplexMatrix) -> bool {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &ComplexMatrix::identity(n, n)) <= IDENTITY_TOL
}
