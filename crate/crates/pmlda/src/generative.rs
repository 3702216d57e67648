//! Forward simulation of the partial-membership generative process.
//!
//! Latents are always returned alongside the data; parameter-recovery
//! testing against the sampler is this module's primary purpose. Proportions
//! and the scaling factor can be pinned to fixed values to reproduce
//! fixed-proportion protocols.

use crate::error::{invalid, Result};
use crate::model::{
    blend_topics, clamp_simplex, corpus_log_posterior, DiagGaussian, DocState, Document,
    Hyperparams, ModelState, TopicParams,
};
use crate::stream::{substream, Domain};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};

/// Concentrations below this are lifted before sampling; smaller values make
/// the gamma-draw logarithms overflow toward minus infinity.
pub const CONCENTRATION_FLOOR: f64 = 1e-8;

/// One gamma draw returned in log space. Shapes below 0.1 use the boost
/// identity `Gamma(a) = Gamma(a + 1) * U^(1/a)`, which never underflows in
/// log space.
fn ln_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 0.1 {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).unwrap().sample(rng);
        let u: f64 = rng.random();
        g.max(f64::MIN_POSITIVE).ln() + u.max(f64::MIN_POSITIVE).ln() / shape
    } else {
        let g: f64 = Gamma::new(shape, 1.0).unwrap().sample(rng);
        g.max(f64::MIN_POSITIVE).ln()
    }
}

/// Draws from a Dirichlet distribution with arbitrary positive
/// concentrations. The normalization happens in log space so that tiny
/// concentrations (near-vertex draws) keep their relative magnitudes; the
/// result is clamped into the simplex interior.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Vec<f64> {
    debug_assert!(concentration.iter().all(|&c| c > 0.0));
    let logs: Vec<f64> = concentration.iter().map(|&c| ln_gamma_draw(c, rng)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z: Vec<f64> = if max.is_finite() {
        logs.iter().map(|&l| (l - max).exp()).collect()
    } else {
        vec![1.0; concentration.len()]
    };
    let sum: f64 = z.iter().sum();
    for x in &mut z {
        *x /= sum;
    }
    clamp_simplex(&mut z);
    z
}

/// Draws one membership vector from `Dir(scale * proportions)`.
pub fn sample_membership<R: Rng + ?Sized>(
    proportions: &[f64],
    scale: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if proportions.len() < 2 {
        return Err(invalid("need at least two topics"));
    }
    if proportions.iter().any(|&p| p.is_nan() || p <= 0.0 || p >= 1.0) {
        return Err(invalid("proportions must lie in (0, 1)"));
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(invalid("scale must be positive and finite"));
    }
    let conc: Vec<f64> = proportions
        .iter()
        .map(|&p| {
            let c = scale * p;
            if c < CONCENTRATION_FLOOR {
                eprintln!(
                    "warning: membership concentration {c:.3e} underflowed, \
                     clamping to {CONCENTRATION_FLOOR:.0e}"
                );
                CONCENTRATION_FLOOR
            } else {
                c
            }
        })
        .collect();
    Ok(sample_dirichlet(&conc, rng))
}

/// Draws one word from the blended topic density at membership `z`.
pub fn sample_word<R: Rng + ?Sized>(
    z: &[f64],
    topics: &[DiagGaussian],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let blended = blend_topics(z, topics)?;
    Ok(blended
        .mean
        .iter()
        .zip(&blended.cov_diag)
        .map(|(&m, &c)| Normal::new(m, c.sqrt()).unwrap().sample(rng))
        .collect())
}

/// Specification of a synthetic corpus.
#[derive(Debug, Clone)]
pub struct GenSpec {
    /// Dirichlet concentration on per-document proportions (ignored when
    /// `fixed_proportions` is set).
    pub alpha: Vec<f64>,
    /// Exponential rate for the scaling factor (ignored when `fixed_scale`
    /// is set).
    pub lambda: f64,
    /// Pin every document's proportions to this simplex point.
    pub fixed_proportions: Option<Vec<f64>>,
    /// Pin every document's scaling factor.
    pub fixed_scale: Option<f64>,
    pub topics: Vec<DiagGaussian>,
    pub docs: usize,
    pub words_per_doc: usize,
    pub seed: u64,
}

impl GenSpec {
    /// Isotropic-topic spec, the common case.
    pub fn isotropic(
        alpha: Vec<f64>,
        lambda: f64,
        topics: &TopicParams,
        docs: usize,
        words_per_doc: usize,
        seed: u64,
    ) -> Self {
        Self {
            alpha,
            lambda,
            fixed_proportions: None,
            fixed_scale: None,
            topics: topics.to_diag(),
            docs,
            words_per_doc,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.topics.len();
        if k < 2 {
            return Err(invalid("need at least two topics"));
        }
        if self.alpha.len() != k {
            return Err(invalid("alpha length must equal topic count"));
        }
        if self.alpha.iter().any(|&a| a.is_nan() || a <= 0.0) {
            return Err(invalid("alpha components must be positive"));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(invalid("lambda must be positive"));
        }
        if let Some(p) = &self.fixed_proportions {
            if p.len() != k {
                return Err(invalid("fixed proportions length must equal topic count"));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || p.iter().any(|&x| x.is_nan() || x <= 0.0 || x >= 1.0) {
                return Err(invalid("fixed proportions must lie on the simplex"));
            }
        }
        if let Some(s) = self.fixed_scale {
            if !s.is_finite() || s <= 0.0 {
                return Err(invalid("fixed scale must be positive and finite"));
            }
        }
        if self.docs < 1 || self.words_per_doc < 1 {
            return Err(invalid("need at least one document and one word"));
        }
        let dim = self.topics[0].mean.len();
        if self.topics.iter().any(|t| t.mean.len() != dim || t.cov_diag.len() != dim) {
            return Err(invalid("topic dimensions must match"));
        }
        Ok(())
    }

    /// The shared isotropic view of the topics, if they have one.
    fn isotropic_topics(&self) -> Option<TopicParams> {
        let first = self.topics[0].cov_diag[0];
        let all_equal = self
            .topics
            .iter()
            .all(|t| t.cov_diag.iter().all(|&c| c == first));
        if !all_equal {
            return None;
        }
        let means = self.topics.iter().map(|t| t.mean.clone()).collect();
        TopicParams::new(means, first).ok()
    }
}

/// Samples one document plus its true latent state.
pub fn sample_document<R: Rng + ?Sized>(spec: &GenSpec, rng: &mut R) -> Result<(Document, DocState)> {
    spec.validate()?;
    let mut proportions = match &spec.fixed_proportions {
        Some(p) => p.clone(),
        None => sample_dirichlet(&spec.alpha, rng),
    };
    clamp_simplex(&mut proportions);
    let scale = match spec.fixed_scale {
        Some(s) => s,
        None => {
            let s: f64 = Exp::new(spec.lambda).unwrap().sample(rng);
            s.max(f64::MIN_POSITIVE)
        }
    };
    let mut memberships = Vec::with_capacity(spec.words_per_doc);
    let mut words = Vec::with_capacity(spec.words_per_doc);
    for _ in 0..spec.words_per_doc {
        let z = sample_membership(&proportions, scale, rng)?;
        words.push(sample_word(&z, &spec.topics, rng)?);
        memberships.push(z);
    }
    let doc = Document::new(words, None)?;
    Ok((doc, DocState { proportions, scale, memberships }))
}

/// Samples a corpus of independent documents, one RNG substream per
/// document, plus the ground-truth model state with its cached log joint.
///
/// The truth state requires a shared isotropic topic covariance; general
/// diagonal topics are supported at the document level only.
pub fn sample_corpus(spec: &GenSpec) -> Result<(Vec<Document>, ModelState)> {
    spec.validate()?;
    let topics = spec
        .isotropic_topics()
        .ok_or_else(|| invalid("ground-truth state requires shared isotropic topic covariance"))?;
    let mut corpus = Vec::with_capacity(spec.docs);
    let mut docs = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let mut rng = substream(spec.seed, Domain::Generate, 0, d as u64);
        let (doc, state) = sample_document(spec, &mut rng)?;
        corpus.push(doc);
        docs.push(state);
    }
    let hp = Hyperparams::new(spec.alpha.clone(), spec.lambda, 1.0, 1, spec.seed)?;
    let mut truth = ModelState { docs, topics, log_joint: 0.0 };
    truth.log_joint = corpus_log_posterior(&truth, &corpus, &hp)?;
    Ok((corpus, truth))
}
