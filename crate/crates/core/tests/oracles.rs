use nalgebra::DMatrix;
use rand::Rng;

use einsel::bipartite::{assemble, partial_trace_b, partial_trace_b_of_commutator};
use einsel::bounds::{blossom_pairing, max_pairing, PairingMethod};
use einsel::dynamics::{dephase, evolve, subsystem_derivative, subsystem_derivative_local};
use einsel::ensembles::{
    gue, haar_pure_state, haar_vector, random_bipartite, random_density, seeded_rng,
};
use einsel::linalg::{commutator, eigh, max_abs_diff, ComplexMatrix, DensityMatrix, C64};
use einsel::pointer::{suppression_factor, suppression_mean_square, PointerModel};

/// Best matching by dynamic programming over subsets of unmatched vertices.
fn subset_oracle(w: &DMatrix<f64>) -> f64 {
    let d = w.nrows();
    let full = 1usize << d;
    let mut best = vec![0.0f64; full];
    for mask in 1..full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut b = best[rest];
        let mut m = rest;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            b = b.max(w[(i, j)] + best[rest & !(1 << j)]);
        }
        best[mask] = b;
    }
    best[full - 1]
}

fn random_table(d: usize, rng: &mut impl Rng, integer: bool) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(d, d);
    for k in 0..d {
        for l in (k + 1)..d {
            let x: f64 = if integer {
                rng.random_range(0..6) as f64
            } else {
                rng.random()
            };
            w[(k, l)] = x;
            w[(l, k)] = x;
        }
    }
    w
}

#[test]
fn blossom_matches_subset_oracle() {
    let mut rng = seeded_rng(31, 0);
    for d in 2..=14 {
        for rep in 0..12 {
            let w = random_table(d, &mut rng, rep % 3 == 0);
            let expected = subset_oracle(&w);
            let got = blossom_pairing(&w).unwrap();
            got.validate(&w).unwrap();
            assert!(
                (got.value - expected).abs() < 1e-12,
                "d={d}: {} vs {expected}",
                got.value
            );
        }
    }
}

#[test]
fn large_tables_use_blossom() {
    let mut rng = seeded_rng(32, 0);
    for d in [11, 12, 13, 14] {
        let w = random_table(d, &mut rng, false);
        let p = max_pairing(&w).unwrap();
        assert_eq!(p.method, PairingMethod::Blossom);
        assert!((p.value - subset_oracle(&w)).abs() < 1e-12);
    }
}

#[test]
fn dephasing_is_the_long_time_average() {
    let dim = 4;
    let sd = eigh(&gue(dim, 5).unwrap()).unwrap();
    let rho = haar_pure_state(dim, 5).unwrap();
    let omega = dephase(&sd, &rho).unwrap();
    let mut rng = seeded_rng(5, 1);
    let n = 20000;
    let mut avg = ComplexMatrix::zeros(dim, dim);
    for _ in 0..n {
        let t = rng.random::<f64>() * 1e5;
        avg += evolve(&sd, &rho, t).unwrap().matrix();
    }
    avg /= C64::new(n as f64, 0.0);
    // Monte Carlo error of order 1/sqrt(n)
    assert!(max_abs_diff(&avg, omega.matrix()) < 0.03);
}

#[test]
fn suppression_long_time_mean_square() {
    let model = PointerModel::random(2, 6, 3, false).unwrap();
    let psi = DensityMatrix::pure(&haar_vector(6, &mut seeded_rng(3, 1))).unwrap();
    let expected = suppression_mean_square(&model, &psi, 0, 1).unwrap();
    let mut rng = seeded_rng(3, 2);
    let n = 20000;
    let mean = (0..n)
        .map(|_| {
            let t = rng.random::<f64>() * 1e5;
            suppression_factor(&model, &psi, 0, 1, t)
                .unwrap()
                .norm_sqr()
        })
        .sum::<f64>()
        / n as f64;
    assert!((mean - expected).abs() < 0.02, "{mean} vs {expected}");
}

#[test]
fn speed_routes_and_bath_commutator() {
    for seed in 0..5 {
        let (d_s, d_b) = (3, 5);
        let sys = random_bipartite(d_s, d_b, 0.3, seed).unwrap();
        let h = assemble(&sys);
        let rho = random_density(d_s * d_b, seed).unwrap();
        let full = subsystem_derivative(&sys, &rho).unwrap();
        let local = subsystem_derivative_local(&sys, &rho).unwrap();
        assert!(max_abs_diff(full.matrix(), local.matrix()) < 1e-10);
        // brute force: full commutator, then partial trace
        let brute =
            partial_trace_b(&commutator(&rho, &h).unwrap(), d_s, d_b).unwrap() * C64::new(0.0, 1.0);
        assert!(max_abs_diff(&brute, full.matrix()) < 1e-12);
        let direct =
            partial_trace_b_of_commutator(&rho, &h, d_s, d_b).unwrap() * C64::new(0.0, 1.0);
        assert!(max_abs_diff(&direct, &brute) < 1e-12);
    }
}
