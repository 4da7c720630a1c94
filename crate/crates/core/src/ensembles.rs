//! Seeded random Hamiltonians and states.
//!
//! Every generator is a pure function of its seed. Independent components of
//! one draw use separate ChaCha streams of the same key, and trials use the
//! key `base_seed ^ trial_index`, so results never depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bipartite::{assemble, decompose, kron_states, BipartiteSystem};
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, ensure_same_dim, op_norm, ComplexMatrix, ComplexVector, DensityMatrix, HermitianOperator,
    SpectralDecomposition, C64,
};

const STREAM_LOCAL: u64 = 1;
const STREAM_BATH: u64 = 2;
const STREAM_INTERACTION: u64 = 3;
const STREAM_STATE: u64 = 4;
const STREAM_STATE_BATH: u64 = 5;

/// A ChaCha20 generator keyed by `seed` on the given stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    base_seed ^ trial_index
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Rescales to unit spectral norm; the zero operator is returned unchanged.
pub fn normalize_op_norm(op: &HermitianOperator) -> Result<HermitianOperator> {
    let norm = op_norm(op)?;
    if norm <= f64::MIN_POSITIVE {
        return Ok(op.clone());
    }
    Ok(op.scaled(1.0 / norm))
}

pub fn gue_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<HermitianOperator> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "GUE dimension must be positive".into(),
        ));
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        m[(i, i)] = C64::new(d, 0.0);
        for j in (i + 1)..dim {
            let z = complex_normal(rng) * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    normalize_op_norm(&HermitianOperator::new(m)?)
}

/// GUE draw rescaled to unit operator norm.
pub fn gue(dim: usize, seed: u64) -> Result<HermitianOperator> {
    gue_with(dim, &mut seeded_rng(seed, 0))
}

/// Uniformly distributed unit vector in `C^dim`.
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(dim, |_, _| complex_normal(rng));
        let norm = v.norm();
        if norm > 0.0 {
            return v.unscale(norm);
        }
    }
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for z in q.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    q
}

pub fn haar_subspace_vector<R: Rng + ?Sized>(
    dim_r: usize,
    embed_dim: usize,
    basis: Option<&SpectralDecomposition>,
    rng: &mut R,
) -> Result<ComplexVector> {
    if dim_r == 0 {
        return Err(Error::InvalidParameter(
            "subspace dimension must be positive".into(),
        ));
    }
    if dim_r > embed_dim {
        return Err(Error::SubspaceTooLarge { dim_r, embed_dim });
    }
    let coeffs = haar_vector(dim_r, rng);
    match basis {
        None => {
            let mut psi = ComplexVector::zeros(embed_dim);
            psi.rows_mut(0, dim_r).copy_from(&coeffs);
            Ok(psi)
        }
        Some(sd) => {
            ensure_same_dim(embed_dim, sd.dim())?;
            let cols = sd.eigenvectors().columns(0, dim_r);
            Ok(cols * coeffs)
        }
    }
}

/// Haar-random pure state on the span of the first `dim_r` basis vectors
/// (the computational basis when `basis` is `None`).
pub fn haar_state(
    dim_r: usize,
    embed_dim: usize,
    basis: Option<&SpectralDecomposition>,
    seed: u64,
) -> Result<DensityMatrix> {
    let psi = haar_subspace_vector(dim_r, embed_dim, basis, &mut seeded_rng(seed, STREAM_STATE))?;
    DensityMatrix::pure(&psi)
}

/// `G G^dagger / Tr` for a `dim x rank` complex Gaussian `G` (induced measure).
pub fn random_density_with<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} invalid for dimension {dim}"
        )));
    }
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| complex_normal(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.unscale(tr))
}

/// A random density matrix whose rank is itself uniform on `1..=dim`.
pub fn random_density(dim: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = seeded_rng(seed, STREAM_STATE);
    let rank = rng.random_range(1..=dim.max(1));
    random_density_with(dim, rank, &mut rng)
}

/// Haar-random pure state on the whole space of a bipartite system.
pub fn haar_pure_state(dim: usize, seed: u64) -> Result<DensityMatrix> {
    haar_state(dim, dim, None, seed)
}

/// Independent Haar pure states on `S` and `B`, combined as a product.
pub fn product_state(d_s: usize, d_b: usize, seed: u64) -> Result<DensityMatrix> {
    let s = DensityMatrix::pure(&haar_vector(d_s, &mut seeded_rng(seed, STREAM_STATE)))?;
    let b = DensityMatrix::pure(&haar_vector(d_b, &mut seeded_rng(seed, STREAM_STATE_BATH)))?;
    Ok(kron_states(&s, &b))
}

/// Traceless parts of independent GUE draws with unit-norm local terms and
/// an interaction of operator norm `coupling_scale`.
pub fn random_bipartite(
    d_s: usize,
    d_b: usize,
    coupling_scale: f64,
    seed: u64,
) -> Result<BipartiteSystem> {
    if d_s == 0 || d_b == 0 {
        return Err(Error::InvalidParameter(
            "subsystem dimensions must be positive".into(),
        ));
    }
    if !(coupling_scale >= 0.0 && coupling_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "coupling scale must be nonnegative, got {coupling_scale}"
        )));
    }
    let h_s =
        normalize_op_norm(&gue_with(d_s, &mut seeded_rng(seed, STREAM_LOCAL))?.traceless_part())?;
    let h_b =
        normalize_op_norm(&gue_with(d_b, &mut seeded_rng(seed, STREAM_BATH))?.traceless_part())?;
    let full = gue_with(d_s * d_b, &mut seeded_rng(seed, STREAM_INTERACTION))?;
    let h_sb = normalize_op_norm(decompose(&full, d_s, d_b)?.h_sb())?.scaled(coupling_scale);
    BipartiteSystem::new(0.0, h_s, h_b, h_sb)
}

/// [`random_bipartite`] with `H_S` rescaled so its largest energy gap is 1.
/// The coupling scale is then the interaction strength relative to that gap.
pub fn random_bipartite_unit_gap(
    d_s: usize,
    d_b: usize,
    coupling_scale: f64,
    seed: u64,
) -> Result<BipartiteSystem> {
    let sys = random_bipartite(d_s, d_b, coupling_scale, seed)?;
    let range = eigh(sys.h_s())?.spectral_range();
    if d_s < 2 || range <= 0.0 {
        return Ok(sys);
    }
    let h_s = sys.h_s().scaled(1.0 / range);
    sys.with_local_hamiltonian(h_s)
}

/// `(|E_0> + |E_max>)/sqrt(2)` of `H_S`, maximally coherent across the
/// largest gap, times a Haar-random bath state.
pub fn coherent_product_state(sys: &BipartiteSystem, seed: u64) -> Result<DensityMatrix> {
    let local = eigh(sys.h_s())?;
    let d_s = sys.d_s();
    let psi_s = if d_s == 1 {
        local.eigenvector(0)
    } else {
        (local.eigenvector(0) + local.eigenvector(d_s - 1)).unscale(std::f64::consts::SQRT_2)
    };
    let bath = haar_vector(sys.d_b(), &mut seeded_rng(seed, STREAM_STATE_BATH));
    Ok(kron_states(
        &DensityMatrix::pure(&psi_s)?,
        &DensityMatrix::pure(&bath)?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    GueHamiltonian,
    HaarState,
    ProductState,
}

/// A self-contained description of one random draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub kind: RandomKind,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub coupling_scale: f64,
}

#[derive(Clone, Debug)]
pub enum RandomDraw {
    Hamiltonian(HermitianOperator),
    System(BipartiteSystem),
    State(DensityMatrix),
}

impl RandomSpec {
    /// `GueHamiltonian` with one dimension draws a bare GUE matrix, with two
    /// dimensions a weakly coupled system. `HaarState` takes `[d]` or
    /// `[d_r, embed_dim]`; `ProductState` takes `[d_s, d_b]`.
    pub fn generate(&self) -> Result<RandomDraw> {
        if self.dims.contains(&0) || self.coupling_scale.is_nan() || self.coupling_scale < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "invalid random spec {self:?}"
            )));
        }
        match (self.kind, self.dims.as_slice()) {
            (RandomKind::GueHamiltonian, &[d]) => Ok(RandomDraw::Hamiltonian(gue(d, self.seed)?)),
            (RandomKind::GueHamiltonian, &[d_s, d_b]) => Ok(RandomDraw::System(random_bipartite(
                d_s,
                d_b,
                self.coupling_scale,
                self.seed,
            )?)),
            (RandomKind::HaarState, &[d]) => Ok(RandomDraw::State(haar_pure_state(d, self.seed)?)),
            (RandomKind::HaarState, &[d_r, embed]) => {
                Ok(RandomDraw::State(haar_state(d_r, embed, None, self.seed)?))
            }
            (RandomKind::ProductState, &[d_s, d_b]) => {
                Ok(RandomDraw::State(product_state(d_s, d_b, self.seed)?))
            }
            _ => Err(Error::InvalidParameter(format!(
                "dimensions {:?} do not fit {:?}",
                self.dims, self.kind
            ))),
        }
    }
}

/// Assembled Hamiltonian of [`random_bipartite`].
pub fn random_bipartite_hamiltonian(
    d_s: usize,
    d_b: usize,
    coupling_scale: f64,
    seed: u64,
) -> Result<HermitianOperator> {
    Ok(assemble(&random_bipartite(d_s, d_b, coupling_scale, seed)?))
}
