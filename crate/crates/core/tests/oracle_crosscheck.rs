use facloc::ads::build_exact_sketches;
use facloc::bsp::RunMetrics;
use facloc::facloc::{solve_with_sketches, CountMode, Instance, SolveConfig};
use facloc::graph::{assign_uniform_weights, generate_forest_fire, Graph};
use facloc::oracle::{
    all_pairs, brute_force_opt, evaluate_cost, local_search_baseline, pram_facility_location,
    pram_facility_location_traced, DistanceMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A connected weighted graph with a random facility subset of size ≤ 12.
fn small_instance(seed: u64) -> (Graph, Instance) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(8..40);
    let g = generate_forest_fire(n, 0.35, 0.3, seed, false).unwrap();
    let g = assign_uniform_weights(&g, 0.5, 3.0, seed ^ 0x55).unwrap();
    let nf = rng.random_range(1..=12.min(n));
    let mut is_facility = vec![false; n];
    let mut picked = 0;
    while picked < nf {
        let v = rng.random_range(0..n);
        if !is_facility[v] {
            is_facility[v] = true;
            picked += 1;
        }
    }
    let cost = (0..n).map(|_| rng.random_range(0.5..8.0)).collect();
    let inst = Instance::new(is_facility, vec![true; n], cost).unwrap();
    (g, inst)
}

fn exact_solve(g: &Graph, inst: &Instance, epsilon: f64, seed: u64) -> facloc::facloc::Solution {
    let cfg = SolveConfig {
        epsilon,
        seed,
        mode: CountMode::ExactCount,
        ..SolveConfig::default()
    };
    solve_with_sketches(g, inst, &build_exact_sketches(g), &cfg, RunMetrics::default()).unwrap()
}

#[test]
fn both_solvers_stay_within_three_plus_eps_of_optimum() {
    let eps = 0.1;
    for seed in 0..50 {
        let (g, inst) = small_instance(seed);
        let m = DistanceMatrix::for_instance(&g, &inst, 10_000).unwrap();
        let opt = brute_force_opt(&m, &inst).unwrap().objective;
        let bound = (3.0 + eps) * opt + 1e-9;
        let pram = pram_facility_location(&m, &inst, eps, seed).unwrap();
        assert!(
            pram.objective <= bound,
            "pram seed {seed}: {} vs opt {opt}",
            pram.objective
        );
        let ours = exact_solve(&g, &inst, eps, seed).result;
        assert!(
            ours.objective <= bound,
            "solve seed {seed}: {} vs opt {opt}",
            ours.objective
        );
    }
}

#[test]
fn local_search_is_close_to_optimum() {
    for seed in 100..150 {
        let (g, inst) = small_instance(seed);
        let m = DistanceMatrix::for_instance(&g, &inst, 10_000).unwrap();
        let opt = brute_force_opt(&m, &inst).unwrap().objective;
        let ls = local_search_baseline(&m, &inst).unwrap();
        assert!(ls.objective >= opt - 1e-9 * opt);
        assert!(
            ls.objective <= 2.5 * opt + 1e-9,
            "seed {seed}: {} vs {opt}",
            ls.objective
        );
    }
}

#[test]
fn exact_count_tracks_the_matrix_reference() {
    let eps = 0.1;
    for seed in 0..6 {
        let g = generate_forest_fire(200, 0.3, 0.4, seed, false).unwrap();
        let inst = Instance::with_default_costs(&g).unwrap();
        let m = all_pairs(&g, 1000).unwrap();
        let pram = pram_facility_location(&m, &inst, eps, seed).unwrap();
        let ours = exact_solve(&g, &inst, eps, seed).result;
        let band = (1.0 + eps) * (1.0 + eps);
        let r = ours.objective / pram.objective;
        assert!((1.0 / band..=band).contains(&r), "seed {seed}: ratio {r}");
    }
}

#[test]
fn first_openings_never_precede_the_reference() {
    // Sketch-free opening may lag the reference ladder, never lead it; when
    // both open at the same step the solver opens a subset.
    for seed in 0..20u64 {
        let n = 60 + (seed as usize * 7) % 40;
        let g = generate_forest_fire(n, 0.35, 0.3, seed, false).unwrap();
        let inst = Instance::uniform(n, 2.0 + (seed % 5) as f64).unwrap();
        let m = all_pairs(&g, 1000).unwrap();
        let (_, trace) = pram_facility_location_traced(&m, &inst, 0.1, seed).unwrap();
        let s = exact_solve(&g, &inst, 0.1, seed);
        let first_ref = trace.open_round.iter().flatten().min().copied().unwrap();
        let first = s.opening.open_step.iter().flatten().min().copied().unwrap();
        assert!(first >= first_ref, "seed {seed}");
        if first == first_ref {
            for f in 0..n {
                if s.opening.open_step[f] == Some(first) {
                    assert_eq!(trace.open_round[f], Some(first), "seed {seed} facility {f}");
                }
            }
        }
    }
}

#[test]
fn reference_results_pass_the_audit() {
    for seed in 0..10 {
        let (g, inst) = small_instance(seed + 500);
        let m = DistanceMatrix::for_instance(&g, &inst, 10_000).unwrap();
        for r in [
            pram_facility_location(&m, &inst, 0.2, seed).unwrap(),
            local_search_baseline(&m, &inst).unwrap(),
            exact_solve(&g, &inst, 0.2, seed).result,
        ] {
            let audit = evaluate_cost(&g, &inst, &r.facilities, &r.assignments).unwrap();
            assert!(audit.mismatched.is_empty());
            assert!((audit.objective - r.objective).abs() <= 1e-9 * r.objective);
        }
    }
}
