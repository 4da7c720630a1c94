//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use einsel::bipartite::{
    assemble, kron, partial_trace_b, partial_trace_b_of_commutator, reduce_to_b,
};
use einsel::bounds::{
    lemma1_with_pairing, max_pairing, offdiag_ceiling, projector_witness, tail_constant,
    theorem1_from_trajectory, theorem2_check, theorem3_from_trajectory, theorem4_from_record,
    SamplingParams,
};
use einsel::dynamics::{effective_dimension, evaluate_speed, TrajectorySampler};
use einsel::ensembles::{
    coherent_product_state, gue, haar_pure_state, random_bipartite, random_bipartite_unit_gap,
    random_density, seeded_rng,
};
use einsel::experiments::{replay, run_in, ConfigOverrides, ExperimentKind, OneOrMany};
use einsel::linalg::{
    commutator, eigh, max_abs_diff, op_norm, trace_norm_svd, ComplexVector, DensityMatrix,
    HermitianOperator, C64,
};
use einsel::pointer::{
    coherent_pointer_state, diagonal_drift, pointer_evolve, suppression_factor, PointerModel,
    PointerReference,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn trace_norm_bound() -> Outcome {
    let mut min_slack = f64::INFINITY;
    let mut min_order = f64::INFINITY;
    let mut failures = 0;
    for i in 0..500u64 {
        let dim = 2 + (i % 7) as usize;
        let rho = random_density(dim, i).unwrap();
        let a = eigh(&gue(dim, i ^ 0xa5a5).unwrap()).unwrap();
        let (rep, pairing) = lemma1_with_pairing(&rho, &a).unwrap();
        let single = rep.context.secondary_rhs.unwrap();
        let a_op = HermitianOperator::new(a.reconstruct()).unwrap();
        let b = commutator(&rho, &a_op).unwrap();
        let lhs_svd = trace_norm_svd(&b).unwrap();
        let witness = projector_witness(&rho, &a, &pairing).unwrap();
        min_slack = min_slack.min(rep.slack);
        min_order = min_order.min(rep.rhs - single);
        if rep.slack < -1e-10
            || rep.rhs - single < -1e-10
            || (lhs_svd - rep.lhs).abs() > 1e-10
            || (witness - rep.rhs).abs() > 1e-10
        {
            failures += 1;
        }
    }
    let plus = ComplexVector::from_element(2, C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let rho = DensityMatrix::pure(&plus).unwrap();
    let a = eigh(&HermitianOperator::from_real_diagonal(&[0.0, 1.0])).unwrap();
    let (eq, _) = lemma1_with_pairing(&rho, &a).unwrap();
    let equality = (eq.lhs - 1.0).abs() <= 1e-10 && (eq.rhs - 1.0).abs() <= 1e-10;
    outcome(
        failures == 0 && min_slack >= -1e-10 && equality,
        format!(
            "500 instances, min slack {min_slack:.3e}, min pairing-single {min_order:.3e}, \
             equality case lhs {:.12} rhs {:.12}",
            eq.lhs, eq.rhs
        ),
    )
}

fn brute_force_matching(w: &DMatrix<f64>, free: &mut Vec<usize>) -> f64 {
    let Some(first) = free.pop() else {
        return 0.0;
    };
    // first left unmatched
    let mut best = brute_force_matching(w, free);
    for i in 0..free.len() {
        let partner = free.remove(i);
        best = best.max(w[(first, partner)] + brute_force_matching(w, free));
        free.insert(i, partner);
    }
    free.push(first);
    best
}

fn matching_oracle() -> Outcome {
    let mut rng = seeded_rng(2024, 0);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let d = 2 + i % 7;
        let mut w = DMatrix::zeros(d, d);
        for k in 0..d {
            for l in (k + 1)..d {
                let x: f64 = rng.random();
                w[(k, l)] = x;
                w[(l, k)] = x;
            }
        }
        let got = max_pairing(&w).unwrap();
        got.validate(&w).unwrap();
        let expected = brute_force_matching(&w, &mut (0..d).collect());
        worst = worst.max((got.value - expected).abs());
    }
    outcome(
        worst <= 1e-12,
        format!("200 tables d=2..8, max deviation {worst:.3e}"),
    )
}

fn pointwise() -> Outcome {
    let mut violations = 0;
    let mut records = 0;
    let mut min_slack = f64::INFINITY;
    let mut route: f64 = 0.0;
    let mut case = 0u64;
    for d_s in [2usize, 3] {
        for d_b in [16usize, 32, 64] {
            for scale in [1.0, 0.1, 0.01] {
                let seed = 100 + case;
                case += 1;
                let sys = random_bipartite(d_s, d_b, scale, seed).unwrap();
                let rho0 = haar_pure_state(d_s * d_b, seed).unwrap();
                let sampler = TrajectorySampler::new(&sys, &rho0).unwrap();
                let params = SamplingParams {
                    n_samples: 200,
                    seed,
                    ..Default::default()
                };
                let traj = params.sample(&sampler).unwrap();
                let h_sb = op_norm(sys.h_sb()).unwrap();
                for r in &traj.records {
                    let rep =
                        theorem4_from_record(h_sb, sampler.local_spectrum(), r, vec![d_s, d_b])
                            .unwrap();
                    records += 1;
                    min_slack = min_slack.min(rep.slack);
                    route = route.max(r.speed_route_difference);
                    if rep.slack < -1e-9 {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{records} records over 18 cases, min slack {min_slack:.3e}, {violations} violations, max route difference {route:.3e}"),
    )
}

fn decoherence() -> (Outcome, String) {
    let d_s = 2;
    let d_b = 64;
    let scales = [1.0, 0.3, 0.1, 0.03, 0.01];
    let instances = 4u64;
    let mut means = vec![0.0; scales.len()];
    let mut detail = String::new();
    let mut passed = true;
    for i in 0..instances {
        for (j, &scale) in scales.iter().enumerate() {
            let sys = random_bipartite_unit_gap(d_s, d_b, scale, i).unwrap();
            let rho0 = coherent_product_state(&sys, i).unwrap();
            let sampler = TrajectorySampler::new(&sys, &rho0).unwrap();
            let params = SamplingParams {
                seed: i,
                ..Default::default()
            };
            let traj = params.sample(&sampler).unwrap();
            let rep = offdiag_ceiling(&sampler, &traj, (0, 1)).unwrap();
            means[j] += rep.lhs / instances as f64;
            if scale == 0.01 {
                passed &= rep.satisfied;
                detail.push_str(&format!(
                    "instance {i}: <|rho_01|> {:.4e} vs ceiling {:.4e} + {:.1e}; ",
                    rep.lhs,
                    rep.rhs,
                    rep.tolerance()
                ));
            }
        }
    }
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    let trend =
        format!(
        "mean largest-gap coherence over scales {scales:?}: [{}], monotone decreasing: {monotone}",
        means.iter().map(|m| format!("{m:.4e}")).collect::<Vec<_>>().join(", ")
    );
    (
        outcome(passed, detail.trim_end_matches("; ").to_string()),
        trend,
    )
}

fn equilibration() -> (Outcome, Outcome) {
    let (d_s, d_b) = (2usize, 32usize);
    let mut t1_fail = 0;
    let mut order_fail = 0;
    let mut t3_fail = 0;
    let mut t1_worst = f64::INFINITY;
    let mut t3_worst = f64::INFINITY;
    for i in 0..100u64 {
        let sys = random_bipartite(d_s, d_b, 0.05, i).unwrap();
        let rho0 = haar_pure_state(d_s * d_b, i).unwrap();
        let sampler = TrajectorySampler::new(&sys, &rho0).unwrap();
        let params = SamplingParams {
            seed: i,
            ..Default::default()
        };
        let traj = params.sample(&sampler).unwrap();
        let t1 = theorem1_from_trajectory(&sampler, &traj).unwrap();
        let t3 = theorem3_from_trajectory(&sampler, &traj).unwrap();
        // rhs recomputed here from the dephased state
        let omega_b = reduce_to_b(sampler.omega(), d_s, d_b).unwrap();
        let rhs1 = 0.5 * (d_s as f64 / effective_dimension(&omega_b)).sqrt();
        let weaker = 0.5 * ((d_s * d_s) as f64 / effective_dimension(sampler.omega())).sqrt();
        let norm = op_norm(&sys.local_plus_interaction()).unwrap();
        let rhs3 = norm * ((d_s.pow(3)) as f64 / effective_dimension(sampler.omega())).sqrt();
        if (t1.rhs - rhs1).abs() > 1e-12 || (t3.rhs - rhs3).abs() > 1e-12 {
            t1_fail += 1;
        }
        let se1 = t1.context.std_error.unwrap();
        let se3 = t3.context.std_error.unwrap();
        if t1.lhs > rhs1 + 3.0 * se1 {
            t1_fail += 1;
        }
        if rhs1 > weaker + 1e-12 {
            order_fail += 1;
        }
        if t3.lhs > rhs3 + 3.0 * se3 {
            t3_fail += 1;
        }
        t1_worst = t1_worst.min(rhs1 + 3.0 * se1 - t1.lhs);
        t3_worst = t3_worst.min(rhs3 + 3.0 * se3 - t3.lhs);
    }
    (
        outcome(
            t1_fail == 0 && order_fail == 0,
            format!("100 instances, min margin {t1_worst:.3e}, {t1_fail} exceed, {order_fail} misordered"),
        ),
        outcome(t3_fail == 0, format!("100 instances, min margin {t3_worst:.3e}, {t3_fail} exceed")),
    )
}

fn deff() -> Outcome {
    let embed = eigh(&assemble(&random_bipartite(2, 32, 0.05, 0).unwrap())).unwrap();
    let rep = theorem2_check(32, &embed, 1000, 0).unwrap();
    let c = tail_constant();
    let c4 = format!("{c:.3e}");
    let passed = rep.mean_deff >= 16.0 - 3.0 * rep.std_error
        && rep.frac_below_quarter == 0.0
        && c4 == "2.152e-4"
        && rep.tail_vacuous;
    outcome(
        passed,
        format!(
            "mean d_eff {:.3} (se {:.3}), fraction below 8: {}, C = {c4}, tail bound {:.4} (vacuous: {})",
            rep.mean_deff, rep.std_error, rep.frac_below_quarter, rep.bound_prob, rep.tail_vacuous
        ),
    )
}

fn speed_identity() -> Outcome {
    let mut worst_route: f64 = 0.0;
    let mut worst_bath: f64 = 0.0;
    for i in 0..20u64 {
        let d_s = 2 + (i % 2) as usize;
        let d_b = [16usize, 32][(i / 2 % 2) as usize];
        let sys = random_bipartite(d_s, d_b, 0.1, i).unwrap();
        let h = assemble(&sys);
        let rho0 = haar_pure_state(d_s * d_b, i).unwrap();
        let sampler = TrajectorySampler::new(&sys, &rho0).unwrap();
        let traj = SamplingParams {
            n_samples: 50,
            seed: i,
            ..Default::default()
        }
        .sample(&sampler)
        .unwrap();
        let one_hb = kron(&HermitianOperator::identity(d_s), sys.h_b());
        for r in &traj.records {
            worst_route = worst_route.max(r.speed_route_difference);
            let rho = sampler.state_at(r.time);
            worst_route = worst_route.max(evaluate_speed(&sys, &h, &rho).unwrap().route_difference);
            let direct = partial_trace_b_of_commutator(&rho, &one_hb, d_s, d_b).unwrap();
            let full = partial_trace_b(&commutator(&rho, &one_hb).unwrap(), d_s, d_b).unwrap();
            worst_bath = worst_bath.max(
                direct
                    .iter()
                    .chain(full.iter())
                    .map(|z| z.norm())
                    .fold(0.0, f64::max),
            );
        }
    }
    outcome(
        worst_route <= 1e-10 && worst_bath <= 1e-10,
        format!("1000 times, max route difference {worst_route:.3e}, max |Tr_B[rho, 1 (x) H_B]| {worst_bath:.3e}"),
    )
}

fn pointer_suite() -> Outcome {
    let mut drift: f64 = 0.0;
    let mut pipeline: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    for (i, (d_s, d_b)) in [(2usize, 16usize), (3, 16), (2, 32)]
        .into_iter()
        .enumerate()
    {
        let seed = 500 + i as u64;
        let model = PointerModel::random(d_s, d_b, seed, true).unwrap();
        let rho_s0 = coherent_pointer_state(&model).unwrap();
        let psi = DensityMatrix::pure(&einsel::ensembles::haar_vector(
            d_b,
            &mut seeded_rng(seed, 1),
        ))
        .unwrap();
        let reference = PointerReference::new(&model, &rho_s0, &psi).unwrap();
        let mut rng = seeded_rng(seed, 2);
        for _ in 0..50 {
            let t: f64 = rng.random::<f64>() * 1e3;
            let closed = pointer_evolve(&model, &rho_s0, &psi, t).unwrap();
            pipeline = pipeline.max(max_abs_diff(
                closed.matrix(),
                reference.reduced_state(t).unwrap().matrix(),
            ));
        }
        for k in 0..200 {
            let t = if k < 100 {
                rng.random::<f64>() * 1e3
            } else {
                rng.random::<f64>() * 1e7
            };
            let closed = pointer_evolve(&model, &rho_s0, &psi, t).unwrap();
            drift = drift.max(diagonal_drift(&model, &closed, &rho_s0).unwrap());
            for p in 0..d_s {
                for q in 0..d_s {
                    modulus =
                        modulus.max(suppression_factor(&model, &psi, p, q, t).unwrap().norm());
                }
            }
        }
    }
    let hb = gue(16, 9).unwrap();
    let same = PointerModel::new(
        einsel::ensembles::haar_unitary(3, &mut seeded_rng(9, 3)),
        vec![hb.clone(), hb.clone(), hb],
    )
    .unwrap();
    let rho_s0 = random_density(3, 9).unwrap();
    let psi = haar_pure_state(16, 9).unwrap();
    let reference = PointerReference::new(&same, &rho_s0, &psi).unwrap();
    let mut preserved: f64 = 0.0;
    let mut preserved_pipeline: f64 = 0.0;
    for t in [0.5, 3.0, 40.0, 700.0] {
        let closed = pointer_evolve(&same, &rho_s0, &psi, t).unwrap();
        preserved = preserved.max(max_abs_diff(closed.matrix(), rho_s0.matrix()));
        preserved_pipeline = preserved_pipeline.max(max_abs_diff(
            reference.reduced_state(t).unwrap().matrix(),
            rho_s0.matrix(),
        ));
    }
    outcome(
        drift <= 1e-12 && pipeline <= 1e-10 && modulus <= 1.0 + 1e-12 && preserved <= 1e-12 && preserved_pipeline <= 1e-10,
        format!(
            "diagonal drift {drift:.3e}, closed form vs pipeline {pipeline:.3e} (50 times per model), \
             max suppression modulus {modulus:.15}, identical blocks change {preserved:.3e} (pipeline {preserved_pipeline:.3e})"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<(ExperimentKind, ConfigOverrides)> = vec![
        (
            ExperimentKind::VerifyThm4,
            ConfigOverrides {
                d_b: Some(OneOrMany::Many(vec![8, 16])),
                n_samples: Some(40),
                ..Default::default()
            },
        ),
        (
            ExperimentKind::CouplingSweep,
            ConfigOverrides {
                d_b: Some(OneOrMany::One(16)),
                trials: Some(3),
                n_samples: Some(40),
                ..Default::default()
            },
        ),
        (
            ExperimentKind::VerifyLemma1,
            ConfigOverrides {
                trials: Some(60),
                ..Default::default()
            },
        ),
        (
            ExperimentKind::VerifyThm2,
            ConfigOverrides {
                trials: Some(50),
                ..Default::default()
            },
        ),
    ];
    let mut files = 0;
    let mut bad = Vec::new();
    for (kind, o) in runs {
        let cfg = ConfigOverrides {
            experiment: Some(kind),
            seed: Some(77),
            ..o
        }
        .resolve()
        .unwrap();
        for (first, second) in [(1, 8), (8, 1)] {
            let out = dir.path().join(format!("{}_{first}", kind.name()));
            let rec = run_in(&cfg, &out, Some(first)).unwrap();
            let rep = replay(&rec.manifest_path, Some(&out.join("replay")), Some(second)).unwrap();
            files += rep.run.files.len();
            if !rep.identical() {
                bad.push(format!(
                    "{} {first}->{second}: {:?}",
                    kind.name(),
                    rep.differing
                ));
            }
        }
    }
    let passed = bad.is_empty() && files > 0;
    outcome(
        passed,
        format!("{files} CSV files replayed across worker counts 1 and 8; differing: {bad:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn print(name: &str, o: &Outcome, secs: f64) -> bool {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    println!("{tag} {name}: {} [{secs:.1}s]", o.detail);
    o.passed
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let single: [Criterion; 7] = [
        ("trace-norm lower bound", trace_norm_bound),
        ("matching oracle", matching_oracle),
        ("pointwise decoherence bound", pointwise),
        ("effective dimension of random states", deff),
        ("speed identity", speed_identity),
        ("pointer model", pointer_suite),
        ("determinism", determinism),
    ];
    for (name, f) in single {
        let start = Instant::now();
        let o = f();
        results.push(print(name, &o, start.elapsed().as_secs_f64()));
    }
    let start = Instant::now();
    let (deco, trend) = decoherence();
    results.push(print(
        "decoherence demonstration",
        &deco,
        start.elapsed().as_secs_f64(),
    ));
    println!("INFO {trend}");
    let start = Instant::now();
    let (t1, t3) = equilibration();
    let secs = start.elapsed().as_secs_f64();
    results.push(print("subsystem equilibration bound", &t1, secs));
    results.push(print("subsystem speed bound", &t3, secs));
    let failed = results.iter().filter(|p| !**p).count();
    if failed == 0 {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}
