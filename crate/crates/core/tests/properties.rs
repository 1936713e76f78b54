use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use supaq_core::ball::minimax_ball;
use supaq_core::capacity::{
    coherent_information, holevo_capacity, holevo_difference, holevo_quantity, private_info, OptimizerConfig,
};
use supaq_core::channels::{erasure, identity, AffineQubitMap, KrausChannel};
use supaq_core::coreset::{bicriteria, build_coreset, MuSimilarDomain};
use supaq_core::linalg::{c, CMatrix};
use supaq_core::qstate::{
    bregman_divergence, density_to_bloch, mix, relative_entropy, von_neumann_entropy, DensityMatrix, Ensemble,
};
use supaq_core::random;
use supaq_core::superactivation::{linear_grid, sweep, SweepConfig};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kraus operators cut from a random isometry C^{d_in} → C^{d_out ⊗ r}.
fn random_channel(g: &mut ChaCha8Rng, d_in: usize, d_out: usize, r: usize) -> KrausChannel {
    let r = r.max(d_in.div_ceil(d_out));
    let rows = d_out * r;
    let v = CMatrix::from_fn(rows, d_in, |_, _| c(g.sample(StandardNormal), g.sample(StandardNormal)));
    let q = v.qr().q();
    let kraus = (0..r).map(|k| q.rows(k * d_out, d_out).into_owned()).collect();
    KrausChannel::new(d_in, d_out, kraus).unwrap()
}

fn ensemble(g: &mut ChaCha8Rng, dim: usize, size: usize, pure: bool) -> Ensemble {
    let states = (0..size)
        .map(|_| if pure { random::pure_state(g, dim) } else { random::mixed_state(g, dim) })
        .collect();
    let raw: Vec<f64> = (0..size).map(|_| g.random::<f64>() + 0.01).collect();
    let total: f64 = raw.iter().sum();
    Ensemble::new(states, raw.iter().map(|p| p / total).collect()).unwrap()
}

fn min_eig(m: &CMatrix) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn klein_and_spectral_agreement(seed in any::<u64>(), dim in 2usize..5) {
        let mut g = rng(seed);
        let a = random::mixed_state(&mut g, dim);
        let b = random::mixed_state(&mut g, dim);
        let d = relative_entropy(&a, &b).unwrap();
        prop_assert!(d >= -1e-12);
        prop_assert!((bregman_divergence(&a, &b).unwrap() - d).abs() <= 1e-9);
        prop_assert!(relative_entropy(&a, &a).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn channels_preserve_trace_and_positivity(seed in any::<u64>(), d_in in 2usize..4, d_out in 2usize..4, r in 1usize..4) {
        let mut g = rng(seed);
        let ch = random_channel(&mut g, d_in, d_out, r);
        prop_assert!(ch.completeness_residual() <= 1e-9);
        let rho = random::mixed_state(&mut g, d_in);
        let out = ch.apply(&rho).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-9);
        let wide = ch.tensor(&identity(2));
        let joint = random::mixed_state(&mut g, 2 * d_in);
        prop_assert!(min_eig(&wide.apply_matrix(joint.matrix())) >= -1e-10);
    }

    #[test]
    fn half_erasure_is_symmetric(seed in any::<u64>(), dim in 2usize..4) {
        let mut g = rng(seed);
        let e = erasure(0.5, dim).unwrap();
        let env = e.complementary();
        let rho = random::mixed_state(&mut g, dim);
        let sb = von_neumann_entropy(&e.apply(&rho).unwrap());
        let se = von_neumann_entropy(&env.apply(&rho).unwrap());
        prop_assert!((sb - se).abs() <= 1e-9);
        prop_assert!(coherent_information(&e, &rho).unwrap().abs() <= 1e-12);
        let ens = ensemble(&mut g, dim, 3, seed % 2 == 0);
        prop_assert!(holevo_difference(&e, &ens).unwrap().abs() <= 1e-12);
        prop_assert!(private_info(&e, &ens).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn affine_map_matches_kraus_action(seed in any::<u64>(), r in 1usize..5) {
        let mut g = rng(seed);
        let ch = random_channel(&mut g, 2, 2, r);
        let map = AffineQubitMap::from_channel(&ch).unwrap();
        let rho = random::mixed_state(&mut g, 2);
        let via_map = map.apply(density_to_bloch(&rho).unwrap()).to_array();
        let via_kraus = density_to_bloch(&ch.apply(&rho).unwrap()).unwrap().to_array();
        for i in 0..3 {
            prop_assert!((via_map[i] - via_kraus[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn holevo_bounds_and_identity(seed in any::<u64>(), size in 1usize..5) {
        let mut g = rng(seed);
        let ch = random_channel(&mut g, 2, 3, 2);
        let ens = ensemble(&mut g, 2, size, seed % 3 == 0);
        let chi = holevo_quantity(&ch, &ens).unwrap();
        prop_assert!(chi >= -1e-12 && chi <= 3f64.log2() + 1e-12);
        let outputs: Vec<DensityMatrix> = ens.states().iter().map(|s| ch.apply(s).unwrap()).collect();
        let out_ens = Ensemble::new(outputs, ens.probs().to_vec()).unwrap();
        let avg = mix(&out_ens);
        let via_d: f64 = out_ens.iter().map(|(p, s)| p * relative_entropy(s, &avg).unwrap()).sum();
        let via_s = von_neumann_entropy(&avg) - out_ens.iter().map(|(p, s)| p * von_neumann_entropy(s)).sum::<f64>();
        prop_assert!((via_d - via_s).abs() <= 1e-9);
        prop_assert!((via_d - chi).abs() <= 1e-9);
    }

    #[test]
    fn mu_similarity_sandwich(seed in any::<u64>(), lambda in 0.01f64..0.2) {
        let dom = MuSimilarDomain::new(lambda, 1.0 - lambda).unwrap();
        let mut g = rng(seed);
        for _ in 0..16 {
            let a = dom.clamp(&random::mixed_state(&mut g, 2)).unwrap();
            let b = dom.clamp(&random::mixed_state(&mut g, 2)).unwrap();
            let d = relative_entropy(&a, &b).unwrap();
            let da = dom.quadratic_divergence(&a, &b);
            prop_assert!(dom.mu() * da <= d + 1e-12 && d <= da + 1e-12, "mu D_A {} D {} D_A {}", dom.mu() * da, d, da);
        }
    }

    #[test]
    fn clamp_is_idempotent(seed in any::<u64>(), dim in 2usize..5) {
        let dom = MuSimilarDomain::new(0.02, 0.9).unwrap();
        let mut g = rng(seed);
        let once = dom.clamp(&random::pure_state(&mut g, dim)).unwrap();
        let twice = dom.clamp(&once).unwrap();
        prop_assert!(once.distance_max(&twice) <= 1e-12);
        for e in once.eigenvalues() {
            prop_assert!(e >= 0.02 - 1e-12 && e <= 0.9 + 1e-12);
        }
    }

    #[test]
    fn coreset_conserves_weight_and_is_deterministic(seed in any::<u64>(), n in 4usize..30, m in 1usize..6) {
        let mut g = rng(seed);
        let states: Vec<DensityMatrix> = (0..n).map(|_| random::mixed_state(&mut g, 2)).collect();
        let (med, idx) = bicriteria(&states, 2, 1.5, seed).unwrap();
        let (med2, idx2) = bicriteria(&states, 2, 1.5, seed).unwrap();
        prop_assert_eq!(&idx, &idx2);
        prop_assert!(med.len() <= 3);
        let a = build_coreset(&states, &med, m, 2.0, seed).unwrap();
        let b = build_coreset(&states, &med2, m, 2.0, seed).unwrap();
        prop_assert!((a.set.total_weight() - n as f64).abs() <= 1e-6);
        prop_assert_eq!(a.origin, b.origin);
    }

    #[test]
    fn ball_encloses_inputs(seed in any::<u64>(), n in 1usize..6, dim in 2usize..4) {
        let mut g = rng(seed);
        let states: Vec<DensityMatrix> = (0..n).map(|_| random::mixed_state(&mut g, dim)).collect();
        let ball = minimax_ball(&states, 1e-9, 4000).unwrap();
        for s in &states {
            prop_assert!(relative_entropy(s, &ball.center).unwrap() <= ball.radius + 1e-6);
        }
        prop_assert!(ball.lower_bound <= ball.radius + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn more_restarts_never_lower_the_value(seed in any::<u64>()) {
        let mut g = rng(seed);
        let ch = random_channel(&mut g, 2, 2, 2);
        let cfg = |restarts| OptimizerConfig { restarts, max_evals: 1500, seed, ..OptimizerConfig::default() };
        let few = holevo_capacity(&ch, &cfg(2)).unwrap().value;
        let many = holevo_capacity(&ch, &cfg(5)).unwrap().value;
        prop_assert!(many >= few);
    }

    #[test]
    fn sweep_rows_recompose(start in 0.0f64..0.5, step in 1e-3f64..0.05) {
        let report = sweep(&SweepConfig::paper_constants(linear_grid(start, start + 0.2, step).unwrap())).unwrap();
        prop_assert!(report.max_recomposition_residual() <= 1e-12);
        for r in &report.rows {
            prop_assert!(r.r_super >= 0.0);
        }
    }
}
