//! Property tests over the density, blending, sampling and evaluation
//! surfaces.

use pmlda::features::{extract_intensity_entropy, GrayImage};
use pmlda::model::{
    blend_topics, clamp_simplex, corpus_log_posterior, dirichlet_log_pdf, doc_log_joint,
    gaussian_log_pdf, word_log_likelihood, DiagGaussian, DocState, Document, Hyperparams,
    ModelState, TopicParams,
};
use pmlda::roc::roc_curve;
use proptest::prelude::*;

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-3..1.0f64, k).prop_map(|mut v| {
        let sum: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= sum);
        clamp_simplex(&mut v);
        v
    })
}

fn diag_topics(k: usize, dim: usize) -> impl Strategy<Value = Vec<DiagGaussian>> {
    proptest::collection::vec(
        (
            proptest::collection::vec(-8.0..8.0f64, dim),
            proptest::collection::vec(0.2..4.0f64, dim),
        ),
        k,
    )
    .prop_map(|ts| {
        ts.into_iter().map(|(mean, cov_diag)| DiagGaussian { mean, cov_diag }).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The z-weighted product of topic densities divided by the blended
    /// density is constant in x.
    #[test]
    fn blend_ratio_is_constant_in_x(
        z in simplex(3),
        topics in diag_topics(3, 2),
        probes in proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, 2), 20),
    ) {
        let blended = blend_topics(&z, &topics).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in &probes {
            let mut weighted = 0.0;
            for (zk, t) in z.iter().zip(&topics) {
                weighted += zk * gaussian_log_pdf(x, &t.mean, &t.cov_diag).unwrap();
            }
            let r = weighted - gaussian_log_pdf(x, &blended.mean, &blended.cov_diag).unwrap();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        prop_assert!(hi - lo < 1e-8, "ratio drift {}", hi - lo);
    }

    /// Identical covariances blend to the linear mean combination with the
    /// covariance unchanged.
    #[test]
    fn shared_covariance_blends_linearly(
        z in simplex(3),
        means in proptest::collection::vec(proptest::collection::vec(-8.0..8.0f64, 2), 3),
        cov in proptest::collection::vec(0.2..4.0f64, 2),
    ) {
        let topics: Vec<DiagGaussian> = means
            .iter()
            .map(|m| DiagGaussian { mean: m.clone(), cov_diag: cov.clone() })
            .collect();
        let blended = blend_topics(&z, &topics).unwrap();
        prop_assert_eq!(&blended.cov_diag, &cov);
        for j in 0..2 {
            let linear: f64 = z.iter().zip(&means).map(|(zk, m)| zk * m[j]).sum();
            prop_assert!((blended.mean[j] - linear).abs() <= 1e-14 * linear.abs().max(1.0));
        }
    }

    /// Log densities stay finite on clamped inputs.
    #[test]
    fn log_densities_are_finite(
        x in simplex(3),
        conc in proptest::collection::vec(1e-6..50.0f64, 3),
        point in proptest::collection::vec(-50.0..50.0f64, 2),
        mean in proptest::collection::vec(-50.0..50.0f64, 2),
        cov in proptest::collection::vec(1e-6..100.0f64, 2),
    ) {
        prop_assert!(dirichlet_log_pdf(&x, &conc).unwrap().is_finite());
        prop_assert!(gaussian_log_pdf(&point, &mean, &cov).unwrap().is_finite());
    }

    /// The per-document joint is finite on arbitrary clamped states and
    /// decomposes into the composition oracle per word.
    #[test]
    fn doc_joint_finite_and_word_ll_composes(
        pi in simplex(2),
        scale in 0.05..20.0f64,
        zs in proptest::collection::vec(simplex(2), 4),
        words in proptest::collection::vec(proptest::collection::vec(-6.0..6.0f64, 2), 4),
        sigma2 in 0.2..4.0f64,
    ) {
        let topics = TopicParams::new(vec![vec![-4.0, -4.0], vec![6.0, 6.0]], sigma2).unwrap();
        let doc = Document::new(words.clone(), None).unwrap();
        let state = DocState { proportions: pi, scale, memberships: zs.clone() };
        let hp = Hyperparams::new(vec![1.0, 2.0], 0.7, 1.0, 1, 0).unwrap();
        let lj = doc_log_joint(&doc, &state, &hp, &topics).unwrap();
        prop_assert!(lj.is_finite());

        for (x, z) in words.iter().zip(&zs) {
            let direct = word_log_likelihood(x, z, &topics).unwrap();
            let blended = blend_topics(z, &topics.to_diag()).unwrap();
            let two_step = gaussian_log_pdf(x, &blended.mean, &blended.cov_diag).unwrap();
            prop_assert!((direct - two_step).abs() < 1e-12);
        }
    }

    /// Corpus posterior is additive over documents.
    #[test]
    fn corpus_posterior_is_additive(
        pi in simplex(2),
        scale in 0.05..20.0f64,
        words in proptest::collection::vec(proptest::collection::vec(-6.0..6.0f64, 2), 3),
    ) {
        let topics = TopicParams::new(vec![vec![-4.0, -4.0], vec![6.0, 6.0]], 1.0).unwrap();
        let hp = Hyperparams::new(vec![1.0, 1.0], 1.0, 1.0, 1, 0).unwrap();
        let doc = Document::new(words, None).unwrap();
        let ds = DocState {
            proportions: pi.clone(),
            scale,
            memberships: vec![pi; doc.len()],
        };
        let single = ModelState { docs: vec![ds.clone()], topics: topics.clone(), log_joint: 0.0 };
        let double = ModelState { docs: vec![ds.clone(), ds], topics, log_joint: 0.0 };
        let one = corpus_log_posterior(&single, std::slice::from_ref(&doc), &hp).unwrap();
        let two = corpus_log_posterior(&double, &[doc.clone(), doc], &hp).unwrap();
        prop_assert_eq!(two, 2.0 * one);
    }

    /// Trapezoidal AUC equals half-credit pair counting.
    #[test]
    fn auc_equals_pair_counting(
        raw in proptest::collection::vec((0u8..8, proptest::bool::ANY), 4..40),
    ) {
        let scores: Vec<f64> = raw.iter().map(|&(s, _)| s as f64 / 7.0).collect();
        let truth: Vec<bool> = raw.iter().map(|&(_, t)| t).collect();
        prop_assume!(truth.iter().any(|&t| t) && truth.iter().any(|&t| !t));
        let curve = roc_curve(&scores, &truth).unwrap();

        let mut concordant = 0.0;
        let mut pairs = 0.0;
        for (i, &ti) in truth.iter().enumerate() {
            if !ti { continue; }
            for (j, &tj) in truth.iter().enumerate() {
                if tj { continue; }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    concordant += 1.0;
                } else if scores[i] == scores[j] {
                    concordant += 0.5;
                }
            }
        }
        prop_assert!((curve.auc - concordant / pairs).abs() < 1e-12);
    }

    /// Windowed extraction commutes with translation away from the margin.
    #[test]
    fn entropy_extractor_translates(
        pixels in proptest::collection::vec(0u8..=255, 144),
    ) {
        let img = GrayImage::new(12, 12, pixels.clone()).unwrap();
        let mut shifted = vec![0u8; 144];
        for r in 1..12 {
            for c in 1..12 {
                shifted[r * 12 + c] = pixels[(r - 1) * 12 + (c - 1)];
            }
        }
        let shifted = GrayImage::new(12, 12, shifted).unwrap();
        let a = extract_intensity_entropy(&img, 3, 10.0).unwrap();
        let b = extract_intensity_entropy(&shifted, 3, 10.0).unwrap();
        for r in 2..11 {
            for c in 2..11 {
                prop_assert_eq!(b.at(r, c), a.at(r - 1, c - 1));
            }
        }
    }
}
