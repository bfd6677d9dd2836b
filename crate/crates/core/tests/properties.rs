use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seal_core::align::{align_detailed, realize_labels, AlignConfig, AlignMode};
use seal_core::bench::{evaluate_image, mf_ods, BenchConfig, BenchMode};
use seal_core::grid::{clamp_probs, extract_class};
use seal_core::loss::{loss_gradient, sigmoid_ce_loss};
use seal_core::train::{seal_step, FeatureImage, PredictorAdapter, SealConfig, ToyPredictor};
use seal_core::{
    solve_assignment, AssignError, CostArc, EdgeLabelMap, MultiLabelMap, PixelCoord, ProbMap,
    SparseCostGraph,
};

fn px(r: usize, c: usize) -> PixelCoord {
    PixelCoord::new(r, c)
}

/// Minimum over all injective left-to-right maps using only present arcs.
fn brute_min(n_left: usize, n_right: usize, cost: &[Option<i64>]) -> Option<i64> {
    fn go(
        i: usize,
        n_left: usize,
        n_right: usize,
        cost: &[Option<i64>],
        used: &mut Vec<bool>,
    ) -> Option<i64> {
        if i == n_left {
            return Some(0);
        }
        let mut best: Option<i64> = None;
        for j in 0..n_right {
            if used[j] {
                continue;
            }
            if let Some(c) = cost[i * n_right + j] {
                used[j] = true;
                if let Some(rest) = go(i + 1, n_left, n_right, cost, used) {
                    best = Some(best.map_or(c + rest, |b| b.min(c + rest)));
                }
                used[j] = false;
            }
        }
        best
    }
    go(0, n_left, n_right, cost, &mut vec![false; n_right])
}

fn graph(
    n_left: usize,
    n_right: usize,
    cost: &[Option<i64>],
    shift: i64,
) -> Result<SparseCostGraph, AssignError> {
    let arcs = (0..n_left)
        .flat_map(|i| (0..n_right).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            cost[i * n_right + j].map(|c| CostArc {
                left: i,
                right: j,
                cost: (c + shift) as f64,
            })
        })
        .collect();
    SparseCostGraph::new(n_left, n_right, arcs)
}

fn random_prob(rng: &mut ChaCha8Rng, h: usize, w: usize, k: usize) -> ProbMap {
    let v = (0..h * w * k)
        .map(|_| rng.gen_range(0.01f32..0.99))
        .collect();
    ProbMap::from_values(h, w, k, v).unwrap()
}

fn random_labels(
    rng: &mut ChaCha8Rng,
    h: usize,
    w: usize,
    k: usize,
    density: f64,
) -> MultiLabelMap {
    let mut m = MultiLabelMap::new(h, w, k).unwrap();
    for r in 0..h {
        for c in 0..w {
            for class in 0..k {
                if rng.gen_bool(density) {
                    m.set(px(r, c), class, true);
                }
            }
        }
    }
    m
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn assignment_is_optimal(
        n_left in 1usize..=5,
        extra in 0usize..=3,
        raw in proptest::collection::vec(proptest::option::weighted(0.7, 0i64..20), 40),
    ) {
        let n_right = n_left + extra;
        let cost: Vec<Option<i64>> = raw.into_iter().cycle().take(n_left * n_right).collect();
        // A left node without arcs is rejected when the graph is built.
        let solved = graph(n_left, n_right, &cost, 0).and_then(|g| solve_assignment(&g));
        match (brute_min(n_left, n_right, &cost), solved) {
            (Some(best), Ok(m)) => {
                prop_assert_eq!(m.total_cost, best as f64);
                let again = solve_assignment(&graph(n_left, n_right, &cost, 0).unwrap()).unwrap();
                prop_assert_eq!(again, m);
            }
            (None, Err(_)) => {}
            (b, s) => prop_assert!(false, "brute force {:?} vs solver {:?}", b, s),
        }
    }

    #[test]
    fn constant_shift_keeps_argmin(
        n_left in 1usize..=5,
        extra in 0usize..=3,
        raw in proptest::collection::vec(0i64..6, 40),
        shift in -5i64..=5,
    ) {
        let n_right = n_left + extra;
        let cost: Vec<Option<i64>> = raw.into_iter().cycle().take(n_left * n_right).map(Some).collect();
        let a = solve_assignment(&graph(n_left, n_right, &cost, 0).unwrap()).unwrap();
        let b = solve_assignment(&graph(n_left, n_right, &cost, shift).unwrap()).unwrap();
        prop_assert_eq!(&a.assignment, &b.assignment);
        prop_assert_eq!(b.total_cost, a.total_cost + (n_left as i64 * shift) as f64);
    }

    #[test]
    fn equal_bandwidths_reduce_to_isotropic(seed in any::<u64>(), sigma in 0.7f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w) = (7, 7);
        let prob = random_prob(&mut rng, h, w, 1);
        let y = extract_class(&random_labels(&mut rng, h, w, 1, 0.2), 0).unwrap();
        let cfg = AlignConfig {
            sigma,
            sigma_x: sigma,
            sigma_y: sigma,
            lambda: 0.0,
            window_radius: 2,
            ..AlignConfig::default()
        };
        let iso = align_detailed(&y, &prob, &cfg, AlignMode::Isotropic).unwrap();
        let bg = align_detailed(&y, &prob, &cfg, AlignMode::BiasedMrf).unwrap();
        prop_assert!((iso.total_cost - bg.total_cost).abs() < 1e-9);
        prop_assert_eq!(iso.mapping, bg.mapping);
    }

    #[test]
    fn alignment_conserves_counts(seed in any::<u64>(), biased in any::<bool>(), lambda in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w) = (9, 11);
        let prob = random_prob(&mut rng, h, w, 1);
        let y = extract_class(&random_labels(&mut rng, h, w, 1, 0.3), 0).unwrap();
        let mode = if biased { AlignMode::BiasedMrf } else { AlignMode::Isotropic };
        let cfg = AlignConfig { lambda, window_radius: 2, ..AlignConfig::default() };
        let out = align_detailed(&y, &prob, &cfg, mode).unwrap();
        prop_assert_eq!(realize_labels(&y, &out.mapping).unwrap().edge_count(), y.edge_count());
    }

    #[test]
    fn alignment_is_translation_covariant(
        seed in any::<u64>(),
        dr in 0usize..6,
        dc in 0usize..6,
        biased in any::<bool>(),
    ) {
        // Everything stays at least one window away from the border, so
        // only the shifted probabilities are ever candidates.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w, radius) = (18, 18, 2);
        let base = random_prob(&mut rng, h, w, 1);
        let mut y = EdgeLabelMap::new(h, w, 0).unwrap();
        let mut y2 = y.clone();
        for r in 2..8 {
            for c in 2..8 {
                if rng.gen_bool(0.3) {
                    y.set(px(r, c), true);
                    y2.set(px(r + dr, c + dc), true);
                }
            }
        }
        let mut shifted = random_prob(&mut rng, h, w, 1);
        for r in 0..h - dr {
            for c in 0..w - dc {
                shifted.set(px(r + dr, c + dc), 0, base.get(px(r, c), 0));
            }
        }
        let mode = if biased { AlignMode::BiasedMrf } else { AlignMode::Isotropic };
        let cfg = AlignConfig { window_radius: radius, lambda: 0.3, ..AlignConfig::default() };
        let a = align_detailed(&y, &base, &cfg, mode).unwrap();
        let b = align_detailed(&y2, &shifted, &cfg, mode).unwrap();
        let moved: Vec<_> = a
            .mapping
            .pairs()
            .iter()
            .map(|(s, t)| (px(s.row + dr, s.col + dc), px(t.row + dr, t.col + dc)))
            .collect();
        prop_assert_eq!(moved.as_slice(), b.mapping.pairs());
        prop_assert_eq!(a.scaled_cost, b.scaled_cost);
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w, k) = (4, 4, 2);
        let z: Vec<f64> = (0..h * w * k).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let labels = random_labels(&mut rng, h, w, k, 0.3);
        let prob = ProbMap::from_values(h, w, k, z.iter().map(|&v| sigmoid(v) as f32).collect()).unwrap();
        let g = loss_gradient(&prob, &labels, None).unwrap();
        let hstep = 1e-5;
        for (i, &zi) in z.iter().enumerate() {
            let y = if labels.fields()[i % (h * w)] >> (i / (h * w)) & 1 == 1 { 1.0 } else { 0.0 };
            let l = |v: f64| -(y * sigmoid(v).ln() + (1.0 - y) * (1.0 - sigmoid(v)).ln());
            let fd = (l(zi + hstep) - l(zi - hstep)) / (2.0 * hstep);
            prop_assert!((g.values()[i] - fd).abs() / fd.abs().max(1e-12) < 1e-4);
        }
    }

    #[test]
    fn seal_step_keeps_class_counts(seed in any::<u64>(), steps in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w, k) = (12, 12, 2);
        let img = FeatureImage::new(h, w, (0..h * w).map(|_| rng.gen_range(0.0f32..1.0)).collect()).unwrap();
        let noisy = random_labels(&mut rng, h, w, k, 0.1);
        let mut predictor = ToyPredictor::new(k, seed);
        let cfg = SealConfig {
            align: AlignConfig { window_radius: 3, ..AlignConfig::default() },
            ..SealConfig::default()
        };
        let mut latent = noisy.clone();
        for _ in 0..steps {
            latent = seal_step(&img, &noisy, &latent, &mut predictor, &cfg, 0.5).unwrap().latent;
            for c in 0..k {
                prop_assert_eq!(latent.class_count(c), noisy.class_count(c));
            }
        }
    }

    #[test]
    fn disabled_alignment_is_plain_training(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w, k) = (10, 9, 3);
        let img = FeatureImage::new(h, w, (0..h * w).map(|_| rng.gen_range(0.0f32..1.0)).collect()).unwrap();
        let noisy = random_labels(&mut rng, h, w, k, 0.15);
        let cfg = SealConfig { align_enabled: false, ..SealConfig::default() };
        let mut a = ToyPredictor::new(k, seed);
        let mut b = a.clone();
        let out = seal_step(&img, &noisy, &noisy, &mut a, &cfg, 0.3).unwrap();

        let prob = clamp_probs(&b.forward(&img), cfg.align.epsilon).unwrap();
        let loss = sigmoid_ce_loss(&prob, &noisy).unwrap();
        b.backward(&img, &loss_gradient(&prob, &noisy, None).unwrap(), 0.3).unwrap();
        prop_assert_eq!(out.latent, noisy);
        prop_assert_eq!(out.loss, loss);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn accumulator_merge_is_associative_and_commutative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = BenchConfig { thresholds: vec![0.25, 0.5, 0.75], border_ignore: 1, ..BenchConfig::default() };
        let acc: Vec<_> = (0..3)
            .map(|_| {
                let gt = random_labels(&mut rng, 12, 12, 2, 0.1);
                evaluate_image(&random_prob(&mut rng, 12, 12, 2), &gt, &cfg).unwrap()
            })
            .collect();
        let left = acc[0].merge(&acc[1]).unwrap().merge(&acc[2]).unwrap();
        let right = acc[0].merge(&acc[1].merge(&acc[2]).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(acc[0].merge(&acc[1]).unwrap(), acc[1].merge(&acc[0]).unwrap());
    }

    #[test]
    fn raw_recall_never_rises_with_threshold(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = BenchConfig { mode: BenchMode::Raw, border_ignore: 2, ..BenchConfig::default() };
        let gt = random_labels(&mut rng, 16, 16, 2, 0.15);
        let acc = evaluate_image(&random_prob(&mut rng, 16, 16, 2), &gt, &cfg).unwrap();
        for k in 0..2 {
            let r = acc.curve(k).recall;
            prop_assert!(r.windows(2).all(|p| p[1] <= p[0]));
        }
    }

    #[test]
    fn ground_truth_scores_perfectly(seed in any::<u64>(), raw in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w) = (20, 20);
        let mut gt = MultiLabelMap::new(h, w, 2).unwrap();
        for k in 0..2 {
            let r = rng.gen_range(6..14);
            for c in rng.gen_range(6..9)..rng.gen_range(11..15) {
                gt.set(px(r, c), k, true);
            }
        }
        let mode = if raw { BenchMode::Raw } else { BenchMode::Thin };
        let cfg = BenchConfig { mode, ..BenchConfig::default() };
        let pred = seal_core::bench::dilate_gt(&extract_class(&gt, 0).unwrap(), if raw { cfg.raw_gt_dilation } else { 0 });
        let pred1 = seal_core::bench::dilate_gt(&extract_class(&gt, 1).unwrap(), if raw { cfg.raw_gt_dilation } else { 0 });
        let mut v = vec![0.0f32; 2 * h * w];
        for (i, (&a, &b)) in pred.bits().iter().zip(pred1.bits()).enumerate() {
            v[i] = if a { 1.0 } else { 0.0 };
            v[h * w + i] = if b { 1.0 } else { 0.0 };
        }
        let prob = ProbMap::from_values(h, w, 2, v).unwrap();
        let report = mf_ods(&evaluate_image(&prob, &gt, &cfg).unwrap());
        prop_assert_eq!(report.mean, 1.0);
    }
}
