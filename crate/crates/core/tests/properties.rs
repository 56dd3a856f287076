use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use tmqi::basis::{
    hermite_gaussian_basis, inner_product, make_grid, superpose, support_half_width, to_time_domain, ModeBasis,
};
use tmqi::fusion::{fusion_distribution, MultiQubitState};
use tmqi::gates::{compile_gate, compile_qudit_unitary, evaluate, green_leakage, phase_distance, GateName};
use tmqi::linalg::{basis_vector, haar_unitary, max_abs_diff, random_density, random_state, unitarity_residual, CMatrix};
use tmqi::mub::mub_bases;
use tmqi::pdc::{schmidt_decompose, JointSpectralAmplitude};
use tmqi::qkd::{bb84_run, qber_theory, Eve};
use tmqi::qpg::{complement_basis, drop_cascade, qpg_operator, selectivity, two_stage, QpgSpec};
use tmqi::rng::{substream, StreamRng};
use tmqi::states::{herald_qpg, herald_unfiltered, pdc_state, purity, DensityMatrix, DensityTensor, RegisterState};
use tmqi::tomography::{simulate_biphoton, single_probability, single_ratio_formula, Analyzer};

fn rng(seed: u64) -> StreamRng {
    substream(seed, "properties", 0)
}

fn hg_basis(count: usize, width: f64) -> ModeBasis {
    let half = support_half_width(9, width);
    let grid = make_grid(0.0, 2.5 * half, 1024).unwrap();
    hermite_gaussian_basis(count, 0.0, width, &grid).unwrap()
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_jsa(n: usize, r: &mut StreamRng) -> JointSpectralAmplitude {
    let grid = make_grid(0.0, 4.0, n).unwrap();
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
    JointSpectralAmplitude::new(grid, grid, m).unwrap()
}

/// Two distinct indices below `n`.
fn pair(n: usize, a: usize, shift: usize) -> (usize, usize) {
    let a = a % n;
    (a, (a + 1 + (shift - 1) % (n - 1)) % n)
}

fn random_weights(d: usize, r: &mut StreamRng) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| r.random::<f64>() + 1e-3).collect();
    let n = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
    raw.iter().map(|w| w / n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hg_gram_is_identity(count in 1usize..=10, width in 0.5f64..2.0) {
        let gram = hg_basis(count, width).gram_matrix().unwrap();
        prop_assert!(max_abs_diff(&gram, &CMatrix::identity(count, count)) < 1e-6);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(seed: u64, count in 1usize..=6) {
        let basis = hg_basis(count, 1.0);
        let mut r = rng(seed);
        let f = superpose(&random_state(count, &mut r), &basis).unwrap();
        let g = superpose(&random_state(count, &mut r), &basis).unwrap();
        prop_assert_eq!(inner_product(&f, &g).unwrap(), inner_product(&g, &f).unwrap().conj());
    }

    #[test]
    fn superpose_then_project(seed: u64, count in 1usize..=8) {
        let basis = hg_basis(count, 1.0);
        let c = random_state(count, &mut rng(seed));
        let back = basis.project(&superpose(&c, &basis).unwrap()).unwrap();
        prop_assert!(dist(&c, &back) < 1e-6);
    }

    #[test]
    fn time_transform_preserves_inner_products(seed: u64, count in 1usize..=6) {
        let basis = hg_basis(count, 1.0);
        let mut r = rng(seed);
        let f = superpose(&random_state(count, &mut r), &basis).unwrap();
        let g = superpose(&random_state(count, &mut r), &basis).unwrap();
        let before = inner_product(&f, &g).unwrap();
        let after = inner_product(&to_time_domain(&f).unwrap(), &to_time_domain(&g).unwrap()).unwrap();
        prop_assert!((before - after).norm() < 1e-9);
    }

    #[test]
    fn full_rank_schmidt_reconstructs(seed: u64, n in 4usize..=20) {
        let jsa = random_jsa(n, &mut rng(seed));
        let dec = schmidt_decompose(&jsa, Some(n)).unwrap();
        let err = (dec.reconstruct() - jsa.amplitude()).norm() / jsa.amplitude().norm();
        prop_assert!(err < 1e-6, "relative error {err:e}");
        prop_assert!(dec.discarded_weight() < 1e-12);
    }

    #[test]
    fn schmidt_weights_ignore_global_phase(seed: u64, phi in 0.0f64..2.0 * PI) {
        let jsa = random_jsa(12, &mut rng(seed));
        let a = schmidt_decompose(&jsa, Some(12)).unwrap();
        let b = schmidt_decompose(&jsa.scaled(Complex64::from_polar(1.0, phi)).unwrap(), Some(12)).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_photons_swaps_modes(seed: u64) {
        let jsa = random_jsa(12, &mut rng(seed));
        let a = schmidt_decompose(&jsa, Some(4)).unwrap();
        let b = schmidt_decompose(&jsa.transposed(), Some(4)).unwrap();
        for k in 0..4 {
            prop_assert!((a.weights[k] - b.weights[k]).abs() < 1e-10);
            let s = inner_product(&a.signal_modes.modes()[k], &b.idler_modes.modes()[k]).unwrap();
            let i = inner_product(&a.idler_modes.modes()[k], &b.signal_modes.modes()[k]).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-8 && (i.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn unfiltered_herald_spectrum_is_lambda(seed: u64, d in 1usize..=8) {
        let w = random_weights(d, &mut rng(seed));
        let rho = herald_unfiltered(&pdc_state(&w, d, false).unwrap()).unwrap();
        let mut eig = rho.eigenvalues();
        eig.sort_by(|a, b| b.total_cmp(a));
        let mut lambdas: Vec<f64> = w.iter().map(|x| x * x).collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        for (e, l) in eig.iter().zip(&lambdas) {
            prop_assert!((e - l).abs() < 1e-12);
        }
    }

    #[test]
    fn qpg_herald_is_pure_and_rates_sum(seed: u64, d in 1usize..=8, eta in 0.0f64..=1.0) {
        let state = pdc_state(&random_weights(d, &mut rng(seed)), d, false).unwrap();
        let mut total = 0.0;
        for i in 0..d {
            let (rho, rate) = herald_qpg(&state, i, eta).unwrap();
            prop_assert!((purity(&rho) - 1.0).abs() < 1e-12);
            total += rate;
        }
        prop_assert!((total - eta).abs() < 1e-12);
    }

    #[test]
    fn two_stage_without_phase_is_full_conversion(seed: u64, d in 2usize..=6) {
        let target = random_state(d, &mut rng(seed));
        let full = qpg_operator(&QpgSpec::new(target.clone(), FRAC_PI_2).unwrap(), d).unwrap();
        let split = two_stage(&target, 0.0, d).unwrap();
        prop_assert!(max_abs_diff(full.matrix(), split.matrix()) < 1e-12);
    }

    #[test]
    fn selectivity_drops_with_any_residual(
        thetas in prop::collection::vec(0.0f64..FRAC_PI_2, 2..6),
        extra in 0.01f64..FRAC_PI_2,
    ) {
        let mut base = thetas.clone();
        base[0] = base[0].max(0.1);
        base[1] = 0.0;
        let mut more = base.clone();
        more[1] = extra;
        prop_assert!(selectivity(&more, 0).unwrap() < selectivity(&base, 0).unwrap());
    }

    #[test]
    fn drop_cascade_conserves_power(seed: u64, d in 2usize..=8, take in 0usize..=8) {
        let mut r = rng(seed);
        let state = RegisterState::new(random_state(d, &mut r), false).unwrap();
        let mut order: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            order.swap(i, r.random_range(0..=i));
        }
        order.truncate(take.min(d));
        let out = drop_cascade(&state, &order).unwrap();
        prop_assert!((out.total_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compiled_unitaries_round_trip(seed: u64, d in 2usize..=4) {
        let mut r = rng(seed);
        let u = haar_unitary(d, &mut r);
        let seq = compile_qudit_unitary(&u).unwrap();
        prop_assert!(seq.len() <= 3 * d * d);
        let reg = evaluate(&seq).unwrap();
        prop_assert!(phase_distance(&reg.red_block(), &u) < 1e-10);
        prop_assert!(green_leakage(&reg) < 1e-12);
        let mut input = random_state(d, &mut r);
        input.push(Complex64::from(0.0));
        let out = reg.apply_vec(&input).unwrap();
        prop_assert!(out[d..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn named_gates_leave_green_empty(seed: u64, which in 0usize..7, phi in -PI..PI) {
        let gate = [GateName::H, GateName::X1, GateName::X2, GateName::Y1, GateName::Y2, GateName::Z, GateName::Phase(phi)][which];
        let reg = evaluate(&compile_gate(gate)).unwrap();
        let mut input = random_state(2, &mut rng(seed));
        input.push(Complex64::from(0.0));
        let out = reg.apply_vec(&input).unwrap();
        prop_assert!(out[2..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn mub_bases_are_orthonormal_and_unbiased(d in prop::sample::select(vec![2usize, 3, 4, 5]), extra in 0usize..6) {
        let count = 1 + extra % (d + 1);
        let set = mub_bases(d, count).unwrap();
        prop_assert_eq!(set.len(), count);
        prop_assert!(set.defect() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn qpg_operator_is_unitary(
        seed: u64,
        d in 2usize..=6,
        theta in 0.0f64..=FRAC_PI_2,
        residuals in prop::option::of(prop::collection::vec(0.0f64..=FRAC_PI_2, 5)),
    ) {
        let mut spec = QpgSpec::new(random_state(d, &mut rng(seed)), theta).unwrap();
        if let Some(res) = residuals {
            spec = spec.with_residuals(res[..d - 1].to_vec()).unwrap();
        }
        let u = qpg_operator(&spec, d).unwrap();
        prop_assert!(unitarity_residual(u.matrix()) < 1e-12);
    }

    #[test]
    fn qpg_is_identity_off_target(seed: u64, d in 2usize..=6, theta in 0.0f64..=FRAC_PI_2) {
        let target = random_state(d, &mut rng(seed));
        let u = qpg_operator(&QpgSpec::new(target.clone(), theta).unwrap(), d).unwrap();
        for v in complement_basis(&target) {
            let mut input = v.clone();
            input.push(Complex64::from(0.0));
            prop_assert!(dist(&u.apply_vec(&input).unwrap(), &input) < 1e-13);
        }
    }

    #[test]
    fn single_rates_match_projector(
        seed: u64,
        d in 2usize..=5,
        k in 0usize..5,
        shift in 1usize..5,
        zeta in 0.0f64..=1.0,
        phi in -PI..PI,
    ) {
        let (k, l) = pair(d, k, shift);
        let rho = DensityMatrix::new(random_density(d, &mut rng(seed))).unwrap();
        let a = Analyzer::new(k, l, zeta, phi).unwrap();
        let p = single_probability(&rho, &a).unwrap();
        let proj = (rho.matrix() * a.projector(d).unwrap()).trace();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - proj.re).abs() < 1e-14);
        prop_assert!((single_ratio_formula(&rho, &a).unwrap() - proj.re).abs() < 1e-12);
    }

    #[test]
    fn biphoton_rates_sum_to_total(seed: u64, da in 2usize..=3, db in 2usize..=3, z in (0.0f64..=1.0, 0.0f64..=1.0), phi in (-PI..PI, -PI..PI)) {
        let rho = random_density(da * db, &mut rng(seed));
        let tensor = DensityTensor::from_matrix(da, db, &rho).unwrap();
        let a = Analyzer::new(0, 1, z.0, phi.0).unwrap();
        let b = Analyzer::new(1, 0, z.1, phi.1).unwrap();
        let rates = simulate_biphoton(&tensor, &a, &b).unwrap().rates;
        prop_assert!((rates.total() - 1.0).abs() < 1e-12);
        let expected = (rho * tmqi::linalg::kron(&a.projector(da).unwrap(), &b.projector(db).unwrap())).trace().re;
        prop_assert!((rates.ca_cb - expected).abs() < 1e-12);
    }

    #[test]
    fn fusion_probabilities_sum_to_one(seed: u64, n in 2usize..=4, a in 0usize..4, shift in 1usize..4) {
        let (a, b) = pair(n, a, shift);
        let state = MultiQubitState::new(n, random_state(1 << n, &mut rng(seed))).unwrap();
        let total: f64 = fusion_distribution(&state, a, b).unwrap().iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fusion_commutes_with_spectator_unitaries(seed: u64) {
        let mut r = rng(seed);
        let state = MultiQubitState::new(3, random_state(8, &mut r)).unwrap();
        let u = haar_unitary(2, &mut r);
        let direct = fusion_distribution(&state.apply_single(2, &u).unwrap(), 0, 1).unwrap();
        let later = fusion_distribution(&state, 0, 1).unwrap();
        for (x, y) in direct.iter().zip(&later) {
            prop_assert_eq!(x.detector, y.detector);
            prop_assert!((x.probability - y.probability).abs() < 1e-12);
            if let (Some(p), Some(q)) = (&x.post_state, &y.post_state) {
                let spectator = if q.n() == 3 { 2 } else { 1 };
                let q = q.apply_single(spectator, &u).unwrap();
                prop_assert!((p.fidelity(&q) - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn mub_sets_for_every_count() {
    for d in [2, 3, 4, 5] {
        for count in 1..=d + 1 {
            assert!(mub_bases(d, count).unwrap().defect() <= 1e-12, "d={d} count={count}");
        }
        assert!(mub_bases(d, d + 2).is_err());
    }
}

#[test]
fn qkd_statistics_match_theory() {
    let n_rounds = 40_000;
    for d in [2usize, 3, 4, 5] {
        for m in 2..=d + 1 {
            let rec = bb84_run(d, n_rounds, m, Eve::InterceptResend, 7 + d as u64 * 10 + m as u64, false).unwrap();
            let p = 1.0 / m as f64;
            let sift_sigma = (p * (1.0 - p) / n_rounds as f64).sqrt();
            assert!((rec.sifting_rate() - p).abs() < 3.0 * sift_sigma, "d={d} M={m} sifting {}", rec.sifting_rate());
            let q = qber_theory(d, m, Eve::InterceptResend).unwrap();
            assert!((rec.qber - q).abs() < 3.0 * rec.qber_sigma(q), "d={d} M={m} qber {} vs {q}", rec.qber);

            let clean = bb84_run(d, n_rounds / 4, m, Eve::None, 1 + d as u64 * 10 + m as u64, false).unwrap();
            assert_eq!(clean.errors, 0, "d={d} M={m}");
        }
    }
}

#[test]
fn basis_vector_qpg_converts_only_target() {
    for d in 2..=5 {
        for t in 0..d {
            let u = qpg_operator(&QpgSpec::mode(d, t, FRAC_PI_2).unwrap(), d).unwrap();
            for k in 0..d {
                let mut v = basis_vector(d, k);
                v.push(Complex64::from(0.0));
                let out = u.apply_vec(&v).unwrap();
                let expected = if k == t { 1.0 } else { 0.0 };
                assert!((out[d].norm() - expected).abs() < 1e-14);
            }
        }
    }
}
