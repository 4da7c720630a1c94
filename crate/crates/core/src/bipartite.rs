//! Tensor-product structure of a subsystem `S` and a bath `B`.
//!
//! Composite indices are subsystem-major: `(s, b) -> s * d_b + b`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_same_dim, AsMatrix, ComplexMatrix, DensityMatrix, HermitianOperator,
    SpectralDecomposition, C64, ZERO,
};

/// Tolerance on the traceless and partial-traceless conditions.
pub const SPLIT_TOL: f64 = 1e-10;

/// Relative factor of the default gap tolerance (times the spectral range).
pub const GAP_TOL_FACTOR: f64 = 1e-9;

type Pair = (usize, usize);

/// `H = h0 * 1 + H_S (x) 1 + 1 (x) H_B + H_SB` with traceless parts and an
/// interaction whose partial traces over either factor vanish.
#[derive(Clone, Debug)]
pub struct BipartiteSystem {
    d_s: usize,
    d_b: usize,
    h0_coeff: f64,
    h_s: HermitianOperator,
    h_b: HermitianOperator,
    h_sb: HermitianOperator,
}

impl BipartiteSystem {
    pub fn new(
        h0_coeff: f64,
        h_s: HermitianOperator,
        h_b: HermitianOperator,
        h_sb: HermitianOperator,
    ) -> Result<Self> {
        let (d_s, d_b) = (h_s.dim(), h_b.dim());
        ensure_same_dim(d_s * d_b, h_sb.dim())?;
        for (name, op) in [("H_S", &h_s), ("H_B", &h_b), ("H_SB", &h_sb)] {
            let tr = op.trace();
            if tr.abs() > SPLIT_TOL {
                return Err(Error::InvalidSplit(format!("{name} has trace {tr:.3e}")));
            }
        }
        let over_b = max_abs(&partial_trace_b(&h_sb, d_s, d_b)?);
        let over_s = max_abs(&partial_trace_s(&h_sb, d_s, d_b)?);
        if over_b > SPLIT_TOL || over_s > SPLIT_TOL {
            return Err(Error::InvalidSplit(format!(
                "H_SB partial traces do not vanish ({over_b:.3e}, {over_s:.3e})"
            )));
        }
        Ok(Self {
            d_s,
            d_b,
            h0_coeff,
            h_s,
            h_b,
            h_sb,
        })
    }

    /// A system without interaction.
    pub fn uncoupled(h_s: HermitianOperator, h_b: HermitianOperator) -> Result<Self> {
        let d = h_s.dim() * h_b.dim();
        Self::new(0.0, h_s, h_b, HermitianOperator::zeros(d))
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dim(&self) -> usize {
        self.d_s * self.d_b
    }

    pub fn h0_coeff(&self) -> f64 {
        self.h0_coeff
    }

    pub fn h_s(&self) -> &HermitianOperator {
        &self.h_s
    }

    pub fn h_b(&self) -> &HermitianOperator {
        &self.h_b
    }

    pub fn h_sb(&self) -> &HermitianOperator {
        &self.h_sb
    }

    /// `H_S (x) 1 + H_SB`, the operator whose norm sets the speed scale.
    pub fn local_plus_interaction(&self) -> HermitianOperator {
        let lifted = kron(&self.h_s, &HermitianOperator::identity(self.d_b));
        HermitianOperator::from_matrix_unchecked(lifted.matrix() + self.h_sb.matrix())
    }

    /// Same system with the interaction multiplied by `factor`.
    pub fn with_interaction_scaled(&self, factor: f64) -> Self {
        Self {
            h_sb: self.h_sb.scaled(factor),
            ..self.clone()
        }
    }

    /// Same system with `H_S` replaced; the replacement must be traceless.
    pub fn with_local_hamiltonian(&self, h_s: HermitianOperator) -> Result<Self> {
        Self::new(self.h0_coeff, h_s, self.h_b.clone(), self.h_sb.clone())
    }
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product with composite index `i * dim(b) + j`.
pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_matrix_unchecked(a.matrix().kronecker(b.matrix()))
}

/// Product state `a (x) b`.
pub fn kron_states(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(a.matrix().kronecker(b.matrix()))
}

fn check_split<M: AsMatrix + ?Sized>(m: &M, d_s: usize, d_b: usize) -> Result<()> {
    let mat = m.as_matrix();
    if d_s == 0 || d_b == 0 {
        return Err(Error::InvalidSplit(
            "subsystem dimensions must be positive".into(),
        ));
    }
    if mat.nrows() != mat.ncols() {
        return Err(Error::NotSquare {
            rows: mat.nrows(),
            cols: mat.ncols(),
        });
    }
    ensure_same_dim(d_s * d_b, mat.nrows())
}

/// `Tr_B[m]`, a `d_s x d_s` matrix.
pub fn partial_trace_b<M: AsMatrix + ?Sized>(
    m: &M,
    d_s: usize,
    d_b: usize,
) -> Result<ComplexMatrix> {
    check_split(m, d_s, d_b)?;
    let m = m.as_matrix();
    Ok(ComplexMatrix::from_fn(d_s, d_s, |s, t| {
        (0..d_b).map(|b| m[(s * d_b + b, t * d_b + b)]).sum()
    }))
}

/// `Tr_S[m]`, a `d_b x d_b` matrix.
pub fn partial_trace_s<M: AsMatrix + ?Sized>(
    m: &M,
    d_s: usize,
    d_b: usize,
) -> Result<ComplexMatrix> {
    check_split(m, d_s, d_b)?;
    let m = m.as_matrix();
    Ok(ComplexMatrix::from_fn(d_b, d_b, |b, c| {
        (0..d_s).map(|s| m[(s * d_b + b, s * d_b + c)]).sum()
    }))
}

/// `Tr_B[a b]` without forming the full product; costs `d_s^2 d_b d`.
pub fn partial_trace_b_of_product<A, B>(
    a: &A,
    b: &B,
    d_s: usize,
    d_b: usize,
) -> Result<ComplexMatrix>
where
    A: AsMatrix + ?Sized,
    B: AsMatrix + ?Sized,
{
    check_split(a, d_s, d_b)?;
    check_split(b, d_s, d_b)?;
    let (a, b) = (a.as_matrix(), b.as_matrix());
    let d = d_s * d_b;
    let mut out = ComplexMatrix::zeros(d_s, d_s);
    for s in 0..d_s {
        for t in 0..d_s {
            let mut acc = ZERO;
            for beta in 0..d_b {
                let row = s * d_b + beta;
                let col = t * d_b + beta;
                let bcol = b.column(col);
                for j in 0..d {
                    acc += a[(row, j)] * bcol[j];
                }
            }
            out[(s, t)] = acc;
        }
    }
    Ok(out)
}

/// `Tr_B[rho, h] = Tr_B[rho h] - Tr_B[rho h]^dagger` for Hermitian `rho`, `h`.
pub fn partial_trace_b_of_commutator<A, B>(
    rho: &A,
    h: &B,
    d_s: usize,
    d_b: usize,
) -> Result<ComplexMatrix>
where
    A: AsMatrix + ?Sized,
    B: AsMatrix + ?Sized,
{
    let x = partial_trace_b_of_product(rho, h, d_s, d_b)?;
    let adj = x.adjoint();
    Ok(x - adj)
}

/// Reduced state on `S`.
pub fn reduce_to_s(rho: &DensityMatrix, d_s: usize, d_b: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_matrix_unchecked(partial_trace_b(
        rho, d_s, d_b,
    )?))
}

/// Reduced state on `B`.
pub fn reduce_to_b(rho: &DensityMatrix, d_s: usize, d_b: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_matrix_unchecked(partial_trace_s(
        rho, d_s, d_b,
    )?))
}

pub fn assemble(sys: &BipartiteSystem) -> HermitianOperator {
    let (d_s, d_b) = (sys.d_s, sys.d_b);
    let d = d_s * d_b;
    let mut m = sys.h_sb.matrix().clone();
    let hs = sys.h_s.matrix();
    let hb = sys.h_b.matrix();
    for s in 0..d_s {
        for t in 0..d_s {
            let v = hs[(s, t)];
            for b in 0..d_b {
                m[(s * d_b + b, t * d_b + b)] += v;
            }
        }
        for b in 0..d_b {
            for c in 0..d_b {
                m[(s * d_b + b, s * d_b + c)] += hb[(b, c)];
            }
        }
    }
    for i in 0..d {
        m[(i, i)] += C64::new(sys.h0_coeff, 0.0);
    }
    HermitianOperator::from_matrix_unchecked(m)
}

/// The unique split of `h` into identity, local and interaction parts.
pub fn decompose(h: &HermitianOperator, d_s: usize, d_b: usize) -> Result<BipartiteSystem> {
    check_split(h, d_s, d_b)?;
    let d = (d_s * d_b) as f64;
    let h0 = h.trace() / d;
    let shift = |m: ComplexMatrix, by: f64| {
        let mut m = m;
        for i in 0..m.nrows() {
            m[(i, i)] -= C64::new(by, 0.0);
        }
        HermitianOperator::from_matrix_unchecked(m)
    };
    let h_s = shift(partial_trace_b(h, d_s, d_b)?.unscale(d_b as f64), h0);
    let h_b = shift(partial_trace_s(h, d_s, d_b)?.unscale(d_s as f64), h0);
    let partial = BipartiteSystem {
        d_s,
        d_b,
        h0_coeff: h0,
        h_s,
        h_b,
        h_sb: HermitianOperator::zeros(d_s * d_b),
    };
    if d_s == 1 || d_b == 1 {
        // no operator on a one-dimensional factor can couple; keep H_SB exactly zero
        return Ok(partial);
    }
    let without_interaction = assemble(&partial);
    let h_sb = HermitianOperator::from_matrix_unchecked(h.matrix() - without_interaction.matrix());
    Ok(BipartiteSystem { h_sb, ..partial })
}

/// Outcome of the non-degenerate gap check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub ok: bool,
    /// The two index pairs `(k, l)`, `(m, n)` whose gaps are closest. A pair
    /// `(k, k)` stands for the zero gap, i.e. a degenerate level.
    pub worst_pair: Option<((usize, usize), (usize, usize))>,
    pub min_gap_difference: f64,
    pub tolerance: f64,
}

/// `1e-9` times the spectral range (at least `1e-9` times unit energy).
pub fn default_gap_tolerance(sd: &SpectralDecomposition) -> f64 {
    GAP_TOL_FACTOR * sd.spectral_range().max(f64::MIN_POSITIVE)
}

/// Checks that no two distinct gaps `E_k - E_l` coincide within `tol`.
///
/// Every coincidence of signed gaps outside the trivial cases reduces to a
/// coincidence between two nonnegative gaps `E_k - E_l`, `k > l`, or between
/// such a gap and zero. Sorting those and comparing neighbours is therefore
/// exhaustive.
pub fn validate_gaps(sd: &SpectralDecomposition, tol: f64) -> GapReport {
    let e = sd.eigenvalues();
    let n = e.len();
    let mut gaps: Vec<(f64, (usize, usize))> =
        Vec::with_capacity(n * (n.saturating_sub(1)) / 2 + 1);
    gaps.push((0.0, (0, 0)));
    for k in 0..n {
        for l in 0..k {
            gaps.push((e[k] - e[l], (k, l)));
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, Pair, Pair)> = None;
    for w in gaps.windows(2) {
        let diff = w[1].0 - w[0].0;
        if best.is_none_or(|(d, _, _)| diff < d) {
            best = Some((diff, w[0].1, w[1].1));
        }
    }
    match best {
        None => GapReport {
            ok: true,
            worst_pair: None,
            min_gap_difference: f64::INFINITY,
            tolerance: tol,
        },
        Some((diff, a, b)) => GapReport {
            ok: diff > tol,
            worst_pair: Some((a, b)),
            min_gap_difference: diff,
            tolerance: tol,
        },
    }
}

/// Checks the reconstruction invariant of a decomposition against its source.
pub fn reconstruction_error(sd: &SpectralDecomposition, op: &HermitianOperator) -> f64 {
    let diff = sd.reconstruct() - op.matrix();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, max_abs_diff, ComplexVector};

    fn pauli_z() -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&[1.0, -1.0])
    }

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = ComplexVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        DensityMatrix::pure(&v).unwrap()
    }

    #[test]
    fn kron_examples() {
        let id6 = kron(
            &HermitianOperator::identity(2),
            &HermitianOperator::identity(3),
        );
        assert_eq!(id6, HermitianOperator::identity(6));
        let zi = kron(&pauli_z(), &HermitianOperator::identity(2));
        assert_eq!(
            zi,
            HermitianOperator::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0])
        );
    }

    #[test]
    fn partial_traces_of_entangled_pair() {
        let half = DensityMatrix::maximally_mixed(2);
        let rs = reduce_to_s(&bell(), 2, 2).unwrap();
        let rb = reduce_to_b(&bell(), 2, 2).unwrap();
        assert!(max_abs_diff(rs.matrix(), half.matrix()) < 1e-15);
        assert!(max_abs_diff(rb.matrix(), half.matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_split() {
        let rho = DensityMatrix::maximally_mixed(6);
        assert!(matches!(
            partial_trace_b(&rho, 4, 2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(partial_trace_s(&rho, 0, 6).is_err());
    }

    #[test]
    fn bath_term_invisible_to_subsystem() {
        let hb = HermitianOperator::from_real_diagonal(&[0.3, -0.1, -0.2]);
        let lifted = kron(&HermitianOperator::identity(2), &hb);
        let mut psi = ComplexVector::zeros(6);
        for (i, z) in psi.iter_mut().enumerate() {
            *z = C64::new(1.0 + i as f64, 0.5 * i as f64);
        }
        let rho = DensityMatrix::pure(&psi).unwrap();
        let comm = crate::linalg::commutator(&rho, &lifted).unwrap();
        let reduced = partial_trace_b(&comm, 2, 3).unwrap();
        assert!(max_abs(&reduced) < 1e-12);
        let fast = partial_trace_b_of_commutator(&rho, &lifted, 2, 3).unwrap();
        assert!(max_abs(&fast) < 1e-12);
    }

    #[test]
    fn decompose_local_and_interaction_terms() {
        let a = HermitianOperator::new(ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5, 0.0),
                C64::new(0.1, -0.2),
                C64::new(0.1, 0.2),
                C64::new(-0.5, 0.0),
            ],
        ))
        .unwrap();
        let h = kron(&a, &HermitianOperator::identity(3));
        let sys = decompose(&h, 2, 3).unwrap();
        assert!(max_abs_diff(sys.h_s().matrix(), a.matrix()) < 1e-15);
        assert!(max_abs(sys.h_b().matrix()) < 1e-15);
        assert!(max_abs(sys.h_sb().matrix()) < 1e-15);

        let zz = kron(&pauli_z(), &pauli_z());
        let sys = decompose(&zz, 2, 2).unwrap();
        assert!(max_abs(sys.h_s().matrix()) == 0.0);
        assert!(max_abs(sys.h_b().matrix()) == 0.0);
        assert!(max_abs_diff(sys.h_sb().matrix(), zz.matrix()) == 0.0);
    }

    #[test]
    fn assemble_constant_part() {
        let mut sys =
            BipartiteSystem::uncoupled(HermitianOperator::zeros(2), HermitianOperator::zeros(2))
                .unwrap();
        sys.h0_coeff = 2.0;
        let h = assemble(&sys);
        assert_eq!(h, HermitianOperator::identity(4).scaled(2.0));
    }

    #[test]
    fn new_rejects_invalid_parts() {
        let traced = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            BipartiteSystem::uncoupled(traced, HermitianOperator::zeros(2)),
            Err(Error::InvalidSplit(_))
        ));
        let local = kron(&pauli_z(), &HermitianOperator::identity(2));
        assert!(matches!(
            BipartiteSystem::new(0.0, pauli_z(), pauli_z(), local),
            Err(Error::InvalidSplit(_))
        ));
        assert!(matches!(
            BipartiteSystem::new(0.0, pauli_z(), pauli_z(), HermitianOperator::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gap_examples() {
        let sd = |e: &[f64]| eigh(&HermitianOperator::from_real_diagonal(e)).unwrap();
        let r = validate_gaps(&sd(&[0.0, 1.0, 2.0]), 1e-9);
        assert!(!r.ok);
        assert_eq!(r.min_gap_difference, 0.0);
        let r = validate_gaps(&sd(&[0.0, 1.0, 3.0, 7.0]), 1e-9);
        assert!(r.ok);
        assert_eq!(r.min_gap_difference, 1.0);
        let r = validate_gaps(&sd(&[0.5, 0.5, 2.0]), 1e-9);
        assert!(!r.ok);
        assert_eq!(r.worst_pair, Some(((0, 0), (1, 0))));
        let r = validate_gaps(&sd(&[4.0]), 1e-9);
        assert!(r.ok && r.worst_pair.is_none());
    }
}
