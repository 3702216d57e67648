//! Densities and joint log-probabilities of the partial-membership topic model.
//!
//! Topics are Gaussians over feature vectors. A word carries a simplex-valued
//! membership vector `z`, and its emission density is the z-weighted blend of
//! the topic densities through their natural parameters: the renormalized
//! product of Gaussian densities raised to the powers `z_k` is itself a
//! Gaussian whose precision (and precision-weighted mean) is the z-weighted
//! sum of the topics'. All probability arithmetic is in log space.

use crate::error::{invalid, Result};
use statrs::function::gamma::ln_gamma;

/// Lower clamp for simplex components before any `ln z` evaluation; the
/// membership log-density contains `(c_k - 1) ln z_k` terms that diverge at
/// the boundary.
pub const SIMPLEX_EPS: f64 = 1e-10;

/// Tolerance for accepting an input vector as lying on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

const LN_2PI: f64 = 1.8378770664093453;

/// Clamps every component into `[SIMPLEX_EPS, 1 - SIMPLEX_EPS]` and
/// renormalizes the vector to sum to one.
pub fn clamp_simplex(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.clamp(SIMPLEX_EPS, 1.0 - SIMPLEX_EPS);
    }
    let sum: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= sum;
    }
    // Renormalization can push a component marginally outside the band
    // again; the second clamp moves it by at most eps^2, which keeps the
    // row sum within k * eps^2 of one.
    for x in v.iter_mut() {
        *x = x.clamp(SIMPLEX_EPS, 1.0 - SIMPLEX_EPS);
    }
}

fn check_simplex(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(format!("{what}: empty vector")));
    }
    let sum: f64 = v.iter().sum();
    if !(sum - 1.0).abs().is_finite() || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(invalid(format!("{what}: components sum to {sum}, not 1")));
    }
    if v.iter().any(|&x| x.is_nan() || x <= 0.0 || x >= 1.0) {
        return Err(invalid(format!("{what}: components must lie in (0, 1)")));
    }
    Ok(())
}

/// Model hyperparameters shared by the generative process and the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Dirichlet concentration on per-document topic proportions; its length
    /// is the topic count.
    pub alpha: Vec<f64>,
    /// Rate of the exponential prior on the per-document scaling factor.
    pub lambda: f64,
    /// Covariance multiplier of the topic-mean proposal distribution.
    pub proposal_scale: f64,
    /// Number of full sampling sweeps.
    pub sweeps: usize,
    /// Root RNG seed; every substream is derived from it.
    pub seed: u64,
}

impl Hyperparams {
    pub fn new(
        alpha: Vec<f64>,
        lambda: f64,
        proposal_scale: f64,
        sweeps: usize,
        seed: u64,
    ) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(invalid("alpha must have at least two components"));
        }
        if alpha.iter().any(|&a| !a.is_finite() || a <= 0.0) {
            return Err(invalid("alpha components must be positive and finite"));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(invalid("lambda must be positive and finite"));
        }
        if !proposal_scale.is_finite() || proposal_scale <= 0.0 {
            return Err(invalid("proposal scale must be positive and finite"));
        }
        if sweeps < 1 {
            return Err(invalid("sweep count must be at least 1"));
        }
        Ok(Self { alpha, lambda, proposal_scale, sweeps, seed })
    }

    /// Topic count.
    pub fn k(&self) -> usize {
        self.alpha.len()
    }
}

/// Per-topic Gaussian means with a single shared isotropic variance.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicParams {
    /// One mean vector per topic, all of the same dimension.
    pub means: Vec<Vec<f64>>,
    /// Shared isotropic variance (the covariance is `sigma2 * I`).
    pub sigma2: f64,
}

impl TopicParams {
    pub fn new(means: Vec<Vec<f64>>, sigma2: f64) -> Result<Self> {
        if means.len() < 2 {
            return Err(invalid("need at least two topics"));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(invalid("topic means must be non-empty"));
        }
        if means.iter().any(|m| m.len() != dim) {
            return Err(invalid("topic means must share one dimension"));
        }
        if means.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("topic means must be finite"));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(invalid("sigma2 must be positive and finite"));
        }
        Ok(Self { means, sigma2 })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// View as general diagonal-covariance topics.
    pub fn to_diag(&self) -> Vec<DiagGaussian> {
        self.means
            .iter()
            .map(|m| DiagGaussian { mean: m.clone(), cov_diag: vec![self.sigma2; m.len()] })
            .collect()
    }
}

/// A Gaussian with diagonal covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    pub cov_diag: Vec<f64>,
}

/// One document: a bag of feature-vector words, optionally with the pixel
/// coordinate each word came from so maps can be reassembled.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub words: Vec<Vec<f64>>,
    pub geometry: Option<Vec<(usize, usize)>>,
}

impl Document {
    pub fn new(words: Vec<Vec<f64>>, geometry: Option<Vec<(usize, usize)>>) -> Result<Self> {
        if words.is_empty() {
            return Err(invalid("document must contain at least one word"));
        }
        let dim = words[0].len();
        if dim == 0 || words.iter().any(|w| w.len() != dim) {
            return Err(invalid("words must share one non-zero dimension"));
        }
        if words.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("word features must be finite"));
        }
        if let Some(g) = &geometry {
            if g.len() != words.len() {
                return Err(invalid("geometry length must match word count"));
            }
        }
        Ok(Self { words, geometry })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.words[0].len()
    }
}

/// Per-document latent state: topic proportions, scaling factor and one
/// membership row per word.
#[derive(Debug, Clone, PartialEq)]
pub struct DocState {
    /// Topic proportions on the simplex.
    pub proportions: Vec<f64>,
    /// Scaling factor; the membership Dirichlet concentration is
    /// `scale * proportions`.
    pub scale: f64,
    /// One simplex row per word.
    pub memberships: Vec<Vec<f64>>,
}

impl DocState {
    pub fn validate(&self, k: usize, n_words: usize) -> Result<()> {
        if self.proportions.len() != k {
            return Err(invalid("proportions length must equal topic count"));
        }
        check_simplex_strict(&self.proportions, "proportions", 1e-12)?;
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return Err(invalid("scale must be positive and finite"));
        }
        if self.memberships.len() != n_words {
            return Err(invalid("membership row count must equal word count"));
        }
        for row in &self.memberships {
            if row.len() != k {
                return Err(invalid("membership rows must have topic-count length"));
            }
            check_simplex_strict(row, "membership row", 1e-12)?;
        }
        Ok(())
    }
}

fn check_simplex_strict(v: &[f64], what: &str, tol: f64) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(invalid(format!("{what}: sums to {sum}, not 1")));
    }
    // Clamping can leave a component a hair inside eps after renormalizing.
    let lo = SIMPLEX_EPS * 0.5;
    if v.iter().any(|&x| x.is_nan() || x < lo || x > 1.0 - lo) {
        return Err(invalid(format!("{what}: component outside the clamped band")));
    }
    Ok(())
}

/// Full latent state of the model over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub docs: Vec<DocState>,
    pub topics: TopicParams,
    /// Cached corpus log joint at this state.
    pub log_joint: f64,
}

/// Empirical mean and per-dimension variance of all words in a corpus; used
/// by the topic-mean proposal and the variance initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct DataStats {
    pub mean: Vec<f64>,
    pub cov_diag: Vec<f64>,
}

impl DataStats {
    pub fn from_corpus(corpus: &[Document]) -> Result<Self> {
        let total: usize = corpus.iter().map(|d| d.len()).sum();
        if total == 0 {
            return Err(invalid("corpus contains no words"));
        }
        let dim = corpus[0].dim();
        let mut mean = vec![0.0; dim];
        for doc in corpus {
            if doc.dim() != dim {
                return Err(invalid("documents must share one feature dimension"));
            }
            for w in &doc.words {
                for (m, x) in mean.iter_mut().zip(w) {
                    *m += x;
                }
            }
        }
        for m in &mut mean {
            *m /= total as f64;
        }
        let mut cov_diag = vec![0.0; dim];
        for doc in corpus {
            for w in &doc.words {
                for (c, (x, m)) in cov_diag.iter_mut().zip(w.iter().zip(&mean)) {
                    let d = x - m;
                    *c += d * d;
                }
            }
        }
        for c in &mut cov_diag {
            *c /= total as f64;
        }
        Ok(Self { mean, cov_diag })
    }
}

/// Log-density of a Dirichlet distribution at a simplex point.
pub fn dirichlet_log_pdf(x: &[f64], concentration: &[f64]) -> Result<f64> {
    if x.len() != concentration.len() {
        return Err(invalid("dirichlet: dimension mismatch"));
    }
    if concentration.iter().any(|&a| !a.is_finite() || a <= 0.0) {
        return Err(invalid("dirichlet: concentration must be positive"));
    }
    check_simplex(x, "dirichlet point")?;
    Ok(dirichlet_log_pdf_unchecked(x, concentration))
}

pub(crate) fn dirichlet_log_pdf_unchecked(x: &[f64], concentration: &[f64]) -> f64 {
    let total: f64 = concentration.iter().sum();
    let mut v = ln_gamma(total);
    for (&xk, &ak) in x.iter().zip(concentration) {
        v -= ln_gamma(ak);
        v += (ak - 1.0) * xk.ln();
    }
    v
}

/// Log-density of a Gaussian with diagonal covariance.
pub fn gaussian_log_pdf(x: &[f64], mean: &[f64], cov_diag: &[f64]) -> Result<f64> {
    if x.len() != mean.len() || x.len() != cov_diag.len() {
        return Err(invalid("gaussian: dimension mismatch"));
    }
    if cov_diag.iter().any(|&c| !c.is_finite() || c <= 0.0) {
        return Err(invalid("gaussian: variances must be positive"));
    }
    let mut v = 0.0;
    for ((&xj, &mj), &cj) in x.iter().zip(mean).zip(cov_diag) {
        let d = xj - mj;
        v -= 0.5 * (LN_2PI + cj.ln() + d * d / cj);
    }
    Ok(v)
}

/// Blends diagonal-covariance Gaussian topics through their natural
/// parameters: the blended precision is the z-weighted sum of topic
/// precisions and the blended mean is the matching precision-weighted
/// average. With identical covariances this reduces exactly to the linear
/// mean blend with the covariance unchanged.
pub fn blend_topics(z: &[f64], topics: &[DiagGaussian]) -> Result<DiagGaussian> {
    if z.len() != topics.len() {
        return Err(invalid("blend: membership/topic count mismatch"));
    }
    if topics.is_empty() {
        return Err(invalid("blend: no topics"));
    }
    check_simplex(z, "membership")?;
    let dim = topics[0].mean.len();
    for t in topics {
        if t.mean.len() != dim || t.cov_diag.len() != dim {
            return Err(invalid("blend: topic dimension mismatch"));
        }
        if t.cov_diag.iter().any(|&c| !c.is_finite() || c <= 0.0) {
            return Err(invalid("blend: topic variances must be positive"));
        }
    }

    let shared = topics.windows(2).all(|w| w[0].cov_diag == w[1].cov_diag);
    if shared {
        let mut mean = vec![0.0; dim];
        for (j, m) in mean.iter_mut().enumerate() {
            *m = z.iter().zip(topics).map(|(&zk, t)| zk * t.mean[j]).sum();
        }
        return Ok(DiagGaussian { mean, cov_diag: topics[0].cov_diag.clone() });
    }

    let mut mean = vec![0.0; dim];
    let mut cov_diag = vec![0.0; dim];
    for j in 0..dim {
        let precision: f64 = z.iter().zip(topics).map(|(&zk, t)| zk / t.cov_diag[j]).sum();
        let weighted: f64 =
            z.iter().zip(topics).map(|(&zk, t)| zk * t.mean[j] / t.cov_diag[j]).sum();
        mean[j] = weighted / precision;
        cov_diag[j] = 1.0 / precision;
    }
    Ok(DiagGaussian { mean, cov_diag })
}

/// Log-likelihood of one word under the blended topic density.
pub fn word_log_likelihood(x: &[f64], z: &[f64], topics: &TopicParams) -> Result<f64> {
    if x.len() != topics.dim() {
        return Err(invalid("word/topic dimension mismatch"));
    }
    let blended = blend_topics(z, &topics.to_diag())?;
    gaussian_log_pdf(x, &blended.mean, &blended.cov_diag)
}

/// Shared-isotropic fast path for the sampler's inner loops; `log_norm` must
/// be `gaussian_log_norm(dim, sigma2)`.
#[inline]
pub(crate) fn word_ll_isotropic(
    x: &[f64],
    z: &[f64],
    means: &[Vec<f64>],
    sigma2: f64,
    log_norm: f64,
) -> f64 {
    let mut ssq = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        let m: f64 = z.iter().zip(means).map(|(&zk, mu)| zk * mu[j]).sum();
        let d = xj - m;
        ssq += d * d;
    }
    log_norm - 0.5 * ssq / sigma2
}

#[inline]
pub(crate) fn gaussian_log_norm(dim: usize, sigma2: f64) -> f64 {
    -0.5 * dim as f64 * (LN_2PI + sigma2.ln())
}

/// The four addends of the per-document log joint, exposed so callers can
/// recompute only the parts a sampler step actually changes.
pub mod terms {
    use super::*;

    /// Log-density of the topic-proportion prior.
    pub fn proportion_prior(proportions: &[f64], alpha: &[f64]) -> Result<f64> {
        dirichlet_log_pdf(proportions, alpha)
    }

    /// Log-density of the exponential prior on the scaling factor.
    pub fn scale_prior(scale: f64, lambda: f64) -> Result<f64> {
        if scale.is_nan() || scale <= 0.0 || lambda.is_nan() || lambda <= 0.0 {
            return Err(invalid("scale and lambda must be positive"));
        }
        Ok(lambda.ln() - lambda * scale)
    }

    /// Sum of the per-word blended Gaussian log-likelihoods.
    pub fn emission(doc: &Document, memberships: &[Vec<f64>], topics: &TopicParams) -> Result<f64> {
        if memberships.len() != doc.len() {
            return Err(invalid("membership row count must equal word count"));
        }
        let log_norm = gaussian_log_norm(topics.dim(), topics.sigma2);
        let mut v = 0.0;
        for (x, z) in doc.words.iter().zip(memberships) {
            if z.len() != topics.k() {
                return Err(invalid("membership rows must have topic-count length"));
            }
            v += word_ll_isotropic(x, z, &topics.means, topics.sigma2, log_norm);
        }
        Ok(v)
    }

    /// Sum over words of the membership Dirichlet log-density with
    /// concentration `scale * proportions`. The normalizer is shared by all
    /// words of a document, so it is factored out of the per-word loop.
    pub fn membership(memberships: &[Vec<f64>], scale: f64, proportions: &[f64]) -> Result<f64> {
        if scale.is_nan() || scale <= 0.0 {
            return Err(invalid("scale must be positive"));
        }
        let k = proportions.len();
        let conc: Vec<f64> = proportions.iter().map(|&p| scale * p).collect();
        if conc.iter().any(|&c| !c.is_finite() || c <= 0.0) {
            return Err(invalid("membership concentration must be positive"));
        }
        let total: f64 = conc.iter().sum();
        let mut log_norm = ln_gamma(total);
        for &c in &conc {
            log_norm -= ln_gamma(c);
        }
        let n = memberships.len() as f64;
        let mut v = n * log_norm;
        for row in memberships {
            if row.len() != k {
                return Err(invalid("membership rows must have topic-count length"));
            }
            for (&c, &z) in conc.iter().zip(row) {
                v += (c - 1.0) * z.ln();
            }
        }
        Ok(v)
    }
}

/// Per-document log joint: proportion prior + scale prior + word emissions +
/// membership densities.
pub fn doc_log_joint(
    doc: &Document,
    state: &DocState,
    hp: &Hyperparams,
    topics: &TopicParams,
) -> Result<f64> {
    state.validate(hp.k(), doc.len())?;
    if topics.k() != hp.k() {
        return Err(invalid("topic count mismatch between topics and hyperparams"));
    }
    if topics.dim() != doc.dim() {
        return Err(invalid("topic/word dimension mismatch"));
    }
    let a = terms::proportion_prior(&state.proportions, &hp.alpha)?;
    let b = terms::scale_prior(state.scale, hp.lambda)?;
    let c = terms::emission(doc, &state.memberships, topics)?;
    let m = terms::membership(&state.memberships, state.scale, &state.proportions)?;
    Ok(a + b + c + m)
}

/// Corpus log posterior (up to the constant of proportionality): the sum of
/// the per-document log joints at the state's topic parameters.
pub fn corpus_log_posterior(state: &ModelState, corpus: &[Document], hp: &Hyperparams) -> Result<f64> {
    if state.docs.len() != corpus.len() {
        return Err(invalid("state/corpus document count mismatch"));
    }
    let mut total = 0.0;
    for (doc, ds) in corpus.iter().zip(&state.docs) {
        total += doc_log_joint(doc, ds, hp, &state.topics)?;
    }
    Ok(total)
}
