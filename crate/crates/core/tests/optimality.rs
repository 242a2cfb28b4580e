use impulse_ctmdp::epidemic::{
    build_epidemic_model, reference_params, solve_carrier_equation, threshold_policy, HdPolicy,
};
use impulse_ctmdp::intervention::{analyze_chains, sample_chain};
use impulse_ctmdp::random::{random_model, RandomModelConfig};
use impulse_ctmdp::{bellman_residual, evaluate_policy, extract_policy, solve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-11;

#[test]
fn optimal_value_passes_through_chains() {
    let cfg = RandomModelConfig {
        n_states: 30,
        ..RandomModelConfig::default()
    };
    for seed in 0..8 {
        let m = random_model(seed, &cfg);
        let v = solve(&m, TOL).unwrap().value;
        assert!(bellman_residual(&m, &v) < 1e-9);
        let policy = extract_policy(&m, &v, 1e-8).unwrap();
        let chains = analyze_chains(&m, &policy, 1e-13).unwrap();
        for x in policy.impulsive_states() {
            let through = chains.through_chain(x, &v);
            assert!(
                (through - v[x]).abs() < 1e-7,
                "seed {seed} state {x}: {through} vs {}",
                v[x]
            );
        }
        let evaluated = evaluate_policy(&m, &policy, TOL, 1_000_000).unwrap();
        assert!(evaluated.sup_distance(&v) < 1e-7, "seed {seed}");
    }
}

#[test]
fn sampled_chains_agree_with_expected_cost() {
    let cfg = RandomModelConfig {
        n_states: 25,
        impulse_prob: 0.8,
        ..RandomModelConfig::default()
    };
    let mut checked = 0;
    for seed in 0..6 {
        let m = random_model(seed, &cfg);
        let v = solve(&m, TOL).unwrap().value;
        let policy = extract_policy(&m, &v, 1e-8).unwrap();
        let chains = analyze_chains(&m, &policy, 1e-13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in policy.impulsive_states() {
            let n = 4000;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let chain = sample_chain(&m, &policy, x, &mut rng).unwrap();
                // Each impulse costs at least c_lower.
                assert!(chain.len() as f64 * m.c_lower() <= chain.total_cost + 1e-12);
                assert!(!policy.is_impulsive(chain.landing));
                sum += chain.total_cost;
                sum_sq += chain.total_cost * chain.total_cost;
            }
            let mean = sum / n as f64;
            let se = ((sum_sq / n as f64 - mean * mean).max(0.0) / (n - 1) as f64).sqrt();
            assert!(
                (mean - chains.expected_cost[x]).abs() <= 4.0 * se + 1e-12,
                "seed {seed} state {x}: {mean} vs {}",
                chains.expected_cost[x]
            );
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn epidemic_threshold_matches_solved_partition() {
    for lambda in [0.15, 0.3, 0.5] {
        let params = reference_params(lambda);
        let epidemic = build_epidemic_model(&params, HdPolicy::Audit).unwrap();
        let cv = solve_carrier_equation(&params, 1e-12).unwrap();
        let threshold = threshold_policy(&epidemic, &cv);
        let v = solve(&epidemic.ctmdp, 1e-10).unwrap().value;
        let solved = extract_policy(&epidemic.ctmdp, &v, 1e-6).unwrap();
        for x in 0..epidemic.n_states() {
            let (_, c, _) = epidemic.coords(x);
            if c <= params.c_max / 2 {
                assert_eq!(
                    threshold.is_impulsive(x),
                    solved.is_impulsive(x),
                    "lambda {lambda} state {}",
                    epidemic.ctmdp.states().label(x)
                );
            }
        }
    }
}
