mod common;

use std::f64::consts::{LN_2, SQRT_2};
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setmatch::bounds::{
    exact_rademacher_rkhs, margin_bound, marginal_rademacher, optimal_alpha,
    optimal_negative_ratio, rademacher_from_gram, rkhs_deviation_bound, rkhs_sup_correlation,
    rkhs_tail_probability, sup_attaining_coefficients, BoundVariant, ComplexityKind, Side,
};
use setmatch::kernels::{pair_kernel, BaseKernel, GramMatrix, PairKernel, RkhsScoreFunction};
use setmatch::learner::{evaluate_model, random_in_ball, train, ErmObjective, TrainConfig};
use setmatch::losses::{
    empirical_margin_risk, empirical_ranking_error, empirical_risk, mc_expected_risk, McSample,
    Surrogate,
};
use setmatch::sampling::{
    assemble_with_ratio, generate_positives, negative_sampling, seeded_rng, GeneratorSpec,
    MatchingDataset, SyntheticGenerator,
};
use setmatch::set_core::{check_permutation_invariance, check_symmetry, ItemSet, SetPair};
use setmatch::{ItemSet32, RkhsScoreFunction32, SetPair32};

use common::{gauss, random_pairs};

fn rbf(gamma: f64) -> PairKernel<f64> {
    PairKernel::new(BaseKernel::rbf(gamma).unwrap()).unwrap()
}

fn identity_gram(m: usize) -> GramMatrix<f64> {
    let mut e = vec![0.0; m * m];
    for i in 0..m {
        e[i * m + i] = 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    GramMatrix::from_raw(e, random_pairs(&mut rng, m, 1, 1).into()).unwrap()
}

/// Brute force over every sign vector with an explicit double loop for `σᵀGσ`.
fn enumerate_rademacher(g: &GramMatrix<f64>, r: f64) -> f64 {
    let m = g.size();
    let mut total = 0.0;
    for bits in 0..1u32 << m {
        let s: Vec<f64> = (0..m)
            .map(|k| if bits >> k & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut q = 0.0;
        for i in 0..m {
            for j in 0..m {
                q += s[i] * s[j] * g.get(i, j);
            }
        }
        total += r / m as f64 * q.max(0.0).sqrt();
    }
    total / f64::from(1u32 << m)
}

#[test]
fn rademacher_identity_two_by_two() {
    let g = identity_gram(2);
    let est =
        rademacher_from_gram(&g, 1.0, 500, ComplexityKind::Joint, &mut seeded_rng(3)).unwrap();
    assert_abs_diff_eq!(est.value, SQRT_2 / 2.0, epsilon = 1e-15);
    assert_eq!(est.std_error, 0.0);
    assert_abs_diff_eq!(
        exact_rademacher_rkhs(&g, 1.0).unwrap(),
        SQRT_2 / 2.0,
        epsilon = 1e-15
    );
}

#[test]
fn rademacher_single_anchor() {
    let mut rng = seeded_rng(4);
    let pk = rbf(0.6);
    let z = random_pairs(&mut rng, 1, 2, 4);
    let g = GramMatrix::new(z.clone().into(), &pk).unwrap();
    let r = 1.7;
    let est = rademacher_from_gram(&g, r, 100, ComplexityKind::Joint, &mut rng).unwrap();
    let expect = r * pair_kernel(&z[0], &z[0], &pk).unwrap().sqrt();
    assert_abs_diff_eq!(est.value, expect, epsilon = 1e-14);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn exact_enumeration_matches_brute_force_and_mc() {
    let mut rng = seeded_rng(5);
    let pk = rbf(0.4);
    for m in [3, 6, 10] {
        let g = GramMatrix::new(random_pairs(&mut rng, m, 2, 4).into(), &pk).unwrap();
        let exact = exact_rademacher_rkhs(&g, 1.3).unwrap();
        assert_abs_diff_eq!(exact, enumerate_rademacher(&g, 1.3), epsilon = 1e-12);
        let mc = rademacher_from_gram(&g, 1.3, 2000, ComplexityKind::Joint, &mut rng).unwrap();
        assert!(
            (mc.value - exact).abs() <= 5.0 * mc.std_error + 1e-12,
            "m={m}"
        );
    }
    let big = GramMatrix::new(random_pairs(&mut rng, 25, 2, 2).into(), &pk).unwrap();
    assert!(exact_rademacher_rkhs(&big, 1.0).is_err());
}

#[test]
fn rademacher_homogeneous_and_monotone_in_r() {
    let mut rng = seeded_rng(6);
    let g = GramMatrix::new(random_pairs(&mut rng, 15, 2, 4).into(), &rbf(0.5)).unwrap();
    let est = |r: f64| {
        rademacher_from_gram(&g, r, 300, ComplexityKind::Joint, &mut seeded_rng(77))
            .unwrap()
            .value
    };
    let (a, b) = (est(1.0), est(2.0));
    assert_abs_diff_eq!(b, 2.0 * a, epsilon = 1e-12);
    let mut prev = 0.0;
    for r in [0.1, 0.5, 1.0, 3.0] {
        let v = est(r);
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn rademacher_reindexing_invariance() {
    let mut rng = seeded_rng(7);
    let pk = rbf(0.5);
    let anchors = random_pairs(&mut rng, 12, 2, 4);
    let g = GramMatrix::new(anchors.clone().into(), &pk).unwrap();
    let perm: Vec<usize> = {
        let p = setmatch::set_core::Permutation::random(12, &mut rng);
        p.as_slice().to_vec()
    };
    let reordered: Vec<SetPair<f64>> = perm.iter().map(|&k| anchors[k].clone()).collect();
    let g2 = GramMatrix::new(reordered.into(), &pk).unwrap();
    for _ in 0..50 {
        let sigma: Vec<f64> = (0..12)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let sigma2: Vec<f64> = perm.iter().map(|&k| sigma[k]).collect();
        assert_abs_diff_eq!(
            rkhs_sup_correlation(&g, &sigma, 1.0),
            rkhs_sup_correlation(&g2, &sigma2, 1.0),
            epsilon = 1e-12
        );
    }
    assert_abs_diff_eq!(
        exact_rademacher_rkhs(&g, 1.0).unwrap(),
        exact_rademacher_rkhs(&g2, 1.0).unwrap(),
        epsilon = 1e-12
    );
}

#[test]
fn closed_form_sup_dominates_and_is_attained() {
    let mut rng = seeded_rng(8);
    let pk = rbf(0.5);
    for m in [5, 20, 40] {
        let anchors: Arc<[SetPair<f64>]> = random_pairs(&mut rng, m, 2, 4).into();
        let g = GramMatrix::new(anchors.clone(), &pk).unwrap();
        let r = 1.5;
        let sigma: Vec<f64> = (0..m)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let sup = rkhs_sup_correlation(&g, &sigma, r);
        let corr = |f: &RkhsScoreFunction<f64>| {
            let scores = f.evaluate_batch(&anchors).unwrap();
            scores.iter().zip(&sigma).map(|(s, x)| s * x).sum::<f64>() / m as f64
        };
        for _ in 0..200 {
            let f = random_in_ball(&g, &pk, r, &mut rng).unwrap();
            assert!(corr(&f) <= sup + 1e-9);
        }
        let c = sup_attaining_coefficients(&g, &sigma, r);
        let best = RkhsScoreFunction::new(c, anchors.clone(), pk).unwrap();
        assert_abs_diff_eq!(best.norm(), r, epsilon = 1e-9);
        assert_abs_diff_eq!(corr(&best), sup, epsilon = 1e-9);
    }
}

#[test]
fn marginal_complexities() {
    let mut rng = seeded_rng(9);
    let pk = rbf(0.5);
    let pairs = random_pairs(&mut rng, 8, 2, 4);
    let s = MatchingDataset::new(pairs.clone(), pairs).unwrap();
    let a = marginal_rademacher(&s, Side::Positives, &pk, 1.0, 400, &mut seeded_rng(1)).unwrap();
    let b = marginal_rademacher(&s, Side::Negatives, &pk, 1.0, 400, &mut seeded_rng(1)).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.which, ComplexityKind::Marginal1);
    assert_eq!(b.which, ComplexityKind::Marginal2);

    let single = random_pairs(&mut rng, 1, 2, 4);
    let negs = random_pairs(&mut rng, 3, 2, 4);
    let s = MatchingDataset::new(single.clone(), negs).unwrap();
    let v = marginal_rademacher(&s, Side::Positives, &pk, 2.0, 10, &mut rng).unwrap();
    assert_abs_diff_eq!(
        v.value,
        2.0 * pair_kernel(&single[0], &single[0], &pk).unwrap().sqrt(),
        epsilon = 1e-14
    );
    let w = marginal_rademacher(&s, Side::Negatives, &pk, 2.0, 10, &mut rng).unwrap();
    assert!(w.value >= 0.0);
}

// Independent evaluation of the deviation bound, written out from the formula.
fn deviation_oracle(m: f64, alpha: f64, delta: f64, l: f64, kappa: f64, r: f64) -> f64 {
    let scale = l * kappa * r / (alpha * (1.0 - alpha));
    scale * (2.0 * (2.0 / delta).ln() / m).sqrt()
}

#[test]
fn deviation_bound_hand_values() {
    let b = rkhs_deviation_bound(100, 0.5, 0.05, 1.0, 1.0, 1.0).unwrap();
    assert_abs_diff_eq!(
        b.bound_value,
        4.0 * (2.0 * 40f64.ln() / 100.0).sqrt(),
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(b.bound_value, 1.0865, epsilon = 1e-4);
    assert_abs_diff_eq!(b.reassemble(), b.bound_value, epsilon = 1e-12);
    for (m, a, d, l, k, r) in [
        (37, 0.21, 0.003, 2.0, SQRT_2, 0.7),
        (5000, 0.9, 0.5, 0.3, 1.0, 4.0),
    ] {
        let v = rkhs_deviation_bound(m, a, d, l, k, r).unwrap().bound_value;
        assert_abs_diff_eq!(
            v,
            deviation_oracle(m as f64, a, d, l, k, r),
            epsilon = 1e-12 * v
        );
    }
}

#[test]
fn tail_and_deviation_are_inverse_on_grid() {
    let mut count = 0;
    for &m in &[10usize, 100, 1000, 10_000, 37] {
        for &alpha in &[0.1, 0.3, 0.5, 0.8] {
            for &delta in &[0.01, 0.05, 0.2, 0.5, 0.9] {
                let (l, kappa, r) = (1.0, SQRT_2, 1.0);
                let eps = rkhs_deviation_bound(m, alpha, delta, l, kappa, r)
                    .unwrap()
                    .bound_value;
                let p = rkhs_tail_probability(eps, m, alpha, l, kappa, r).unwrap();
                assert!(
                    (p - delta).abs() <= 1e-10,
                    "m={m} a={alpha} d={delta} p={p}"
                );
                count += 1;
            }
        }
    }
    assert_eq!(count, 100);
}

#[test]
fn tail_probability_shape() {
    let (l, k, r) = (1.0, SQRT_2, 1.0);
    let (m, alpha) = (200usize, 0.3);
    let a = alpha * (1.0 - alpha);
    let eps = (2.0 * l * l * k * k * r * r / (a * a * m as f64)).sqrt();
    assert_abs_diff_eq!(
        rkhs_tail_probability(eps, m, alpha, l, k, r).unwrap(),
        2.0 * (-1.0f64).exp(),
        epsilon = 1e-12
    );
    assert_eq!(rkhs_tail_probability(0.0, m, alpha, l, k, r).unwrap(), 2.0);
    let mut prev = 3.0;
    for e in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let p = rkhs_tail_probability(e, m, alpha, l, k, r).unwrap();
        assert!(p < prev);
        prev = p;
    }
    let best = (1..100)
        .map(|i| i as f64 / 100.0)
        .min_by(|x, y| {
            let px = rkhs_tail_probability(3.0, m, *x, l, k, r).unwrap();
            let py = rkhs_tail_probability(3.0, m, *y, l, k, r).unwrap();
            px.partial_cmp(&py).unwrap()
        })
        .unwrap();
    assert_abs_diff_eq!(best, 0.5, epsilon = 1e-12);
    assert!(rkhs_tail_probability(1.0, m, 1.2, l, k, r).is_err());
}

#[test]
fn deviation_surface_shape() {
    let ms: Vec<usize> = (0..20)
        .map(|i| (10f64 * 1000f64.powf(i as f64 / 19.0)).round() as usize)
        .collect();
    let alphas: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    for &m in &ms {
        let vals: Vec<f64> = alphas
            .iter()
            .map(|&a| {
                rkhs_deviation_bound(m, a, 0.05, 1.0, SQRT_2, 1.0)
                    .unwrap()
                    .bound_value
            })
            .collect();
        let kmin = (0..vals.len())
            .min_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap())
            .unwrap();
        assert_eq!(alphas[kmin], 0.5);
        for k in 0..kmin {
            assert!(vals[k] > vals[k + 1]);
        }
        for k in kmin..vals.len() - 1 {
            assert!(vals[k] < vals[k + 1]);
        }
    }
    for &a in &alphas {
        for w in ms.windows(2) {
            let b0 = rkhs_deviation_bound(w[0], a, 0.05, 1.0, SQRT_2, 1.0)
                .unwrap()
                .bound_value;
            let b1 = rkhs_deviation_bound(w[1], a, 0.05, 1.0, SQRT_2, 1.0)
                .unwrap()
                .bound_value;
            assert!(b1 < b0);
        }
    }
}

#[test]
fn optimal_ratios() {
    let o = optimal_alpha(300, 1.0, SQRT_2, 1.0, 0.05).unwrap();
    assert_eq!(o.analytic, 0.5);
    assert!((o.grid - 0.5).abs() <= 0.01);
    let at = |a: f64| {
        rkhs_deviation_bound(300, a, 0.05, 1.0, SQRT_2, 1.0)
            .unwrap()
            .bound_value
    };
    assert!(at(0.5) < at(0.3) && at(0.3) < at(0.1));

    // oracle: maximise sqrt(a)(1-a) directly
    let oracle = (1..100)
        .map(|k| k as f64 / 100.0)
        .max_by(|x, y| {
            (x.sqrt() * (1.0 - x))
                .partial_cmp(&(y.sqrt() * (1.0 - y)))
                .unwrap()
        })
        .unwrap();
    for m_pos in [1, 50, 1000] {
        let n = optimal_negative_ratio(m_pos, 1.0, SQRT_2, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(n.negative_fraction, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n.grid_alpha, oracle, epsilon = 1e-12);
        assert!((0.31..=0.35).contains(&n.grid_alpha));
        assert_eq!(n.recommended_negatives, 2 * m_pos);
    }
}

#[test]
fn margin_bound_components() {
    let b = margin_bound(
        0.1,
        0.05,
        0.05,
        1.0,
        100,
        (-2.0f64).exp(),
        BoundVariant::Expected,
    )
    .unwrap();
    assert_abs_diff_eq!(b.bound_value, 0.4, epsilon = 1e-12);
    assert_abs_diff_eq!(b.reassemble(), b.bound_value, epsilon = 1e-12);
    let b2 = margin_bound(
        0.1,
        0.05,
        0.05,
        2.0,
        100,
        (-2.0f64).exp(),
        BoundVariant::Expected,
    )
    .unwrap();
    assert_abs_diff_eq!(b2.component("complexity").unwrap(), 0.1, epsilon = 1e-15);
    assert_eq!(b2.component("confidence"), b.component("confidence"));
    assert_eq!(
        b2.component("empirical_margin_risk"),
        b.component("empirical_margin_risk")
    );
    let far = margin_bound(
        0.1,
        0.05,
        0.05,
        1e12,
        100,
        (-2.0f64).exp(),
        BoundVariant::Expected,
    )
    .unwrap();
    assert_abs_diff_eq!(far.bound_value, 0.2, epsilon = 1e-12);
    let emp = margin_bound(0.0, 0.0, 0.0, 1.0, 10, 0.05, BoundVariant::Empirical).unwrap();
    assert!(emp.bound_value >= 0.0);
}

fn small_problem(seed: u64, m: usize) -> (GramMatrix<f64>, usize, usize) {
    let gen = SyntheticGenerator::<f64>::new(GeneratorSpec::default()).unwrap();
    let s = assemble_with_ratio(&gen, m, 0.5, &mut seeded_rng(seed)).unwrap();
    let g = GramMatrix::new(s.all_pairs().into(), &rbf(0.1)).unwrap();
    (g, s.m_pos(), s.m_neg())
}

fn finite_difference(obj: &ErmObjective<f64>, c: &[f64], h: f64) -> Vec<f64> {
    (0..c.len())
        .map(|k| {
            let mut up = c.to_vec();
            let mut dn = c.to_vec();
            up[k] += h;
            dn[k] -= h;
            (obj.value(&up) - obj.value(&dn)) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

#[test]
fn gradient_matches_finite_differences() {
    let (g, mp, mn) = small_problem(10, 20);
    let obj = ErmObjective::new(&g, mp, mn, Surrogate::Logistic).unwrap();
    let zero = vec![0.0; 20];
    assert!(relative_error(&obj.gradient(&zero), &finite_difference(&obj, &zero, 1e-5)) <= 1e-5);
    let mut rng = seeded_rng(11);
    for _ in 0..5 {
        let c: Vec<f64> = (0..20).map(|_| 0.5 * gauss(&mut rng)).collect();
        let err = relative_error(&obj.gradient(&c), &finite_difference(&obj, &c, 1e-5));
        assert!(err <= 1e-4, "relative error {err}");
    }
}

#[test]
fn training_on_separated_clusters() {
    let spec = GeneratorSpec {
        cluster_std: 5.0,
        within_pair_std: 0.3,
        ..Default::default()
    };
    let gen = SyntheticGenerator::<f64>::new(spec).unwrap();
    let s = assemble_with_ratio(&gen, 80, 0.5, &mut seeded_rng(12)).unwrap();
    let pk = rbf(0.1);
    let cfg = TrainConfig::default();
    let (f, trace) = train(&s, &pk, &cfg).unwrap();
    assert_eq!(trace.risks.len(), cfg.steps + 1);
    assert!(*trace.risks.last().unwrap() < LN_2);
    assert!(trace.risks.iter().all(|&r| r >= 0.0));
    assert!(trace.norms.iter().all(|&n| n <= cfg.r + 1e-9));
    for w in trace.risks[..11].windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "risk rose: {} -> {}", w[0], w[1]);
    }
    assert!(empirical_ranking_error(&f, &s).unwrap().value < 0.5);
    let z = &s.positives()[0];
    assert!(check_permutation_invariance(&f, z, 5, &mut seeded_rng(1)).holds);
    assert!(check_symmetry(&f, z).holds);

    let margin_cfg = TrainConfig {
        surrogate: Surrogate::margin(1.0).unwrap(),
        ..Default::default()
    };
    let (g, t2) = train(&s, &pk, &margin_cfg).unwrap();
    assert!(t2.final_norm <= 1.0 + 1e-9);
    assert!(empirical_margin_risk(&g, &s, 1.0).unwrap().value <= 1.0);
}

#[test]
fn mc_estimates() {
    let gen = SyntheticGenerator::<f64>::new(GeneratorSpec::default()).unwrap();
    let s = assemble_with_ratio(&gen, 40, 0.5, &mut seeded_rng(13)).unwrap();
    let pk = rbf(0.1);
    let zero = RkhsScoreFunction::zero(s.all_pairs().into(), pk).unwrap();
    let r = mc_expected_risk(
        &zero,
        &gen,
        30,
        30,
        &Surrogate::Logistic,
        &mut seeded_rng(1),
    )
    .unwrap();
    assert_abs_diff_eq!(r.value, LN_2, epsilon = 1e-15);
    assert!(r.std_error.unwrap() <= 1e-15);

    let (f, _) = train(&s, &pk, &TrainConfig::default()).unwrap();
    let se = |n: usize| {
        McSample::draw(&f, &gen, n, n, &mut seeded_rng(2))
            .unwrap()
            .surrogate_risk(&Surrogate::Logistic)
            .std_error
            .unwrap()
    };
    assert!(se(800) < se(50));

    let sample = McSample::draw(&f, &gen, 400, 400, &mut seeded_rng(3)).unwrap();
    let err = sample.ranking_error().value;
    for rho in [0.01, 0.1, 1.0] {
        assert!(
            err <= sample
                .surrogate_risk(&Surrogate::margin(rho).unwrap())
                .value
                + 1e-15
        );
    }
}

#[test]
fn evaluate_model_reports() {
    let gen = SyntheticGenerator::<f64>::new(GeneratorSpec::default()).unwrap();
    let s = assemble_with_ratio(&gen, 40, 0.5, &mut seeded_rng(14)).unwrap();
    let test = assemble_with_ratio(&gen, 40, 0.5, &mut seeded_rng(15)).unwrap();
    let pk = rbf(0.1);
    let zero = RkhsScoreFunction::zero(s.all_pairs().into(), pk).unwrap();
    let rep = evaluate_model(
        &zero,
        &test,
        &gen,
        &Surrogate::Logistic,
        1.0,
        50,
        &mut seeded_rng(1),
    )
    .unwrap();
    assert_abs_diff_eq!(rep.empirical_surrogate.value, LN_2, epsilon = 1e-15);
    assert_eq!(rep.mc_ranking_error.value, 1.0);
    assert_eq!(rep.norm, 0.0);

    let (f, _) = train(&s, &pk, &TrainConfig::default()).unwrap();
    let a = evaluate_model(
        &f,
        &test,
        &gen,
        &Surrogate::Logistic,
        1.0,
        300,
        &mut seeded_rng(100),
    )
    .unwrap();
    let b = evaluate_model(
        &f,
        &test,
        &gen,
        &Surrogate::Logistic,
        1.0,
        300,
        &mut seeded_rng(200),
    )
    .unwrap();
    assert!(a.norm <= 1.0 + 1e-9);
    for (x, y) in [
        (&a.mc_surrogate, &b.mc_surrogate),
        (&a.mc_ranking_error, &b.mc_ranking_error),
    ] {
        let se = (x.std_error.unwrap().powi(2) + y.std_error.unwrap().powi(2)).sqrt();
        assert!(
            (x.value - y.value).abs() < 5.0 * se,
            "{} vs {} (se {se})",
            x.value,
            y.value
        );
    }
    let again = evaluate_model(
        &f,
        &test,
        &gen,
        &Surrogate::Logistic,
        1.0,
        300,
        &mut seeded_rng(100),
    )
    .unwrap();
    assert_eq!(a, again);
}

#[test]
fn generator_contracts() {
    let spec = GeneratorSpec {
        seed: 42,
        ..Default::default()
    };
    let a: Vec<SetPair<f64>> = generate_positives(&spec, 10).unwrap();
    let b: Vec<SetPair<f64>> = generate_positives(&spec, 10).unwrap();
    assert_eq!(a, b);
    for z in &a {
        assert!((2..=5).contains(&z.first.len()) && (2..=5).contains(&z.second.len()));
    }
    assert!(generate_positives::<f64>(&spec, 0).is_err());

    let tight = GeneratorSpec {
        within_pair_std: 1e-12,
        ..spec.clone()
    };
    let pk = rbf(0.5);
    for z in generate_positives::<f64>(&tight, 5).unwrap() {
        assert_abs_diff_eq!(pair_kernel(&z, &z, &pk).unwrap(), 2.0, epsilon = 1e-9);
        let first = &z.first.items()[0];
        assert!(z.second.iter().all(|y| first.squared_distance(y) < 1e-18));
    }
}

#[test]
fn negative_sampling_contracts() {
    let pos: Vec<SetPair<f64>> = generate_positives(&GeneratorSpec::default(), 2).unwrap();
    let negs = negative_sampling(&pos, 50, &mut seeded_rng(1)).unwrap();
    let admissible = [
        SetPair::new(pos[0].first.clone(), pos[1].second.clone()).unwrap(),
        SetPair::new(pos[1].first.clone(), pos[0].second.clone()).unwrap(),
    ];
    assert!(negs.iter().all(|n| admissible.contains(n)));
    assert!(negs.contains(&admissible[0]) && negs.contains(&admissible[1]));

    let pos: Vec<SetPair<f64>> = generate_positives(&GeneratorSpec::default(), 10).unwrap();
    let negs = negative_sampling(&pos, 200, &mut seeded_rng(2)).unwrap();
    let again = negative_sampling(&pos, 200, &mut seeded_rng(2)).unwrap();
    assert_eq!(negs, again);
    for n in &negs {
        let i = pos
            .iter()
            .position(|p| p.first == n.first)
            .expect("first from a positive");
        let j = pos
            .iter()
            .position(|p| p.second == n.second)
            .expect("second from a positive");
        assert_ne!(i, j);
    }
    assert!(negative_sampling(&pos[..1], 3, &mut seeded_rng(3)).is_err());
}

#[test]
fn dataset_ratios() {
    let gen = SyntheticGenerator::<f64>::new(GeneratorSpec::default()).unwrap();
    let s = assemble_with_ratio(&gen, 100, 0.5, &mut seeded_rng(1)).unwrap();
    assert_eq!((s.m_pos(), s.m_neg()), (50, 50));
    let s = assemble_with_ratio(&gen, 10, 1.0 / 3.0, &mut seeded_rng(1)).unwrap();
    assert_eq!((s.m_pos(), s.m_neg()), (3, 7));
    assert_abs_diff_eq!(s.alpha(), 0.3);
    assert!(assemble_with_ratio(&gen, 10, 0.999, &mut seeded_rng(1)).is_err());
    let t = assemble_with_ratio(&gen, 10, 1.0 / 3.0, &mut seeded_rng(1)).unwrap();
    assert_eq!(s, t);
}

#[test]
fn empirical_risk_matches_explicit_double_loop() {
    let mut rng = seeded_rng(16);
    let pk = rbf(0.3);
    let anchors = random_pairs(&mut rng, 6, 2, 3);
    let c: Vec<f64> = (0..6).map(|_| gauss(&mut rng)).collect();
    let f = RkhsScoreFunction::new(c, anchors.into(), pk).unwrap();
    let s = MatchingDataset::new(
        random_pairs(&mut rng, 5, 2, 3),
        random_pairs(&mut rng, 7, 2, 3),
    )
    .unwrap();
    let mut total = 0.0;
    for p in s.positives() {
        for n in s.negatives() {
            let t = f.evaluate(p).unwrap() - f.evaluate(n).unwrap();
            total += (1.0 + (-t).exp()).ln();
        }
    }
    let got = empirical_risk(&f, &s, &Surrogate::Logistic).unwrap().value;
    assert_abs_diff_eq!(got, total / 35.0, epsilon = 1e-12);
}

#[test]
fn single_precision_smoke() {
    let x = ItemSet32::from_rows(vec![vec![0.0f32, 1.0], vec![1.0, 0.0]]).unwrap();
    let y = ItemSet::from_rows(vec![vec![0.5f32, 0.5]]).unwrap();
    let z: SetPair32 = SetPair::new(x, y).unwrap();
    let pk = PairKernel::new(BaseKernel::rbf(0.5f32).unwrap()).unwrap();
    let f: RkhsScoreFunction32 =
        RkhsScoreFunction::new(vec![0.7f32], vec![z.clone()].into(), pk).unwrap();
    assert!(check_symmetry(&f, &z).holds);
    assert!(check_permutation_invariance(&f, &z, 4, &mut seeded_rng(1)).holds);
    let v = f.evaluate(&z).unwrap();
    let v64 = {
        let x = ItemSet::from_rows(vec![vec![0.0f64, 1.0], vec![1.0, 0.0]]).unwrap();
        let y = ItemSet::from_rows(vec![vec![0.5f64, 0.5]]).unwrap();
        let z = SetPair::new(x, y).unwrap();
        0.7 * pair_kernel(&z, &z, &rbf(0.5)).unwrap()
    };
    assert!((f64::from(v) - v64).abs() < 1e-5);
}
