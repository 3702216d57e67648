//! Metropolis-within-Gibbs MAP inference.
//!
//! Each sweep updates, in order: per-document proportions, scaling factor
//! and per-word memberships (independence proposals from their priors, or
//! the flat simplex for memberships), then each topic mean (data-envelope
//! proposal), then the shared variance (uniform proposal on a data-derived
//! interval). The state with the largest log joint seen at a sweep boundary
//! is kept as the MAP estimate.
//!
//! Per-document updates within one sweep depend only on the sweep-start
//! topic parameters and their own RNG substream, so they may run in
//! parallel; results are identical under any schedule.

use crate::error::{invalid, numerical, Result};
use crate::generative::sample_dirichlet;
use crate::model::{
    clamp_simplex, corpus_log_posterior, dirichlet_log_pdf, doc_log_joint, gaussian_log_norm,
    gaussian_log_pdf, terms, word_ll_isotropic, DataStats, DiagGaussian, DocState, Document,
    Hyperparams, ModelState, TopicParams,
};
use crate::stream::{substream, Domain};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;

/// Sampler configuration on top of the model hyperparameters.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub hp: Hyperparams,
    /// Keep a snapshot of the state every `thin` sweeps (0 = best-only).
    pub thin: usize,
    /// Smallest variance candidate, and the floor applied to degenerate
    /// data covariances.
    pub sigma_floor: f64,
    /// Pin every document's proportions; the proportion step is skipped.
    pub fixed_proportions: Option<Vec<f64>>,
    /// Pin every document's scaling factor; the scale step is skipped.
    pub fixed_scale: Option<f64>,
    /// Diagnostic hook: every step proposes the current value, which makes
    /// the chain stationary.
    pub pin_proposals: bool,
}

impl SamplerConfig {
    pub fn new(hp: Hyperparams) -> Self {
        Self {
            hp,
            thin: 0,
            sigma_floor: 1e-6,
            fixed_proportions: None,
            fixed_scale: None,
            pin_proposals: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma_floor.is_finite() || self.sigma_floor <= 0.0 {
            return Err(invalid("sigma floor must be positive and finite"));
        }
        if let Some(p) = &self.fixed_proportions {
            if p.len() != self.hp.k() {
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
        Ok(())
    }
}

/// Cumulative acceptance ratios per proposal block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRates {
    pub proportions: f64,
    pub scale: f64,
    pub membership: f64,
    pub mean: f64,
    pub sigma: f64,
}

const BLOCK_PROPORTIONS: usize = 0;
const BLOCK_SCALE: usize = 1;
const BLOCK_MEMBERSHIP: usize = 2;
const BLOCK_MEAN: usize = 3;
const BLOCK_SIGMA: usize = 4;

fn rates(accepted: &[u64; 5], attempted: &[u64; 5]) -> BlockRates {
    let ratio = |i: usize| {
        if attempted[i] == 0 {
            0.0
        } else {
            accepted[i] as f64 / attempted[i] as f64
        }
    };
    BlockRates {
        proportions: ratio(BLOCK_PROPORTIONS),
        scale: ratio(BLOCK_SCALE),
        membership: ratio(BLOCK_MEMBERSHIP),
        mean: ratio(BLOCK_MEAN),
        sigma: ratio(BLOCK_SIGMA),
    }
}

/// Output of a sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// The retained state with the largest log joint.
    pub best_state: ModelState,
    pub best_log_joint: f64,
    /// Corpus log joint at the end of each sweep.
    pub log_joint_series: Vec<f64>,
    /// Cumulative per-block acceptance ratios after each sweep.
    pub acceptance_rates: Vec<BlockRates>,
    /// Snapshots every `thin` sweeps when thinning is enabled.
    pub thinned_samples: Option<Vec<ModelState>>,
    /// Upper end of the variance proposal interval, for auditability.
    pub sigma_bound: f64,
}

impl Trace {
    pub fn final_rates(&self) -> BlockRates {
        *self.acceptance_rates.last().expect("at least one sweep")
    }
}

/// Initializes the latent state: proportions at the prior mean, scale at the
/// prior mean, memberships equal to the proportions, topic means drawn from
/// the data envelope, and the shared variance at the mean per-dimension data
/// variance.
pub fn init_state<R: Rng + ?Sized>(
    corpus: &[Document],
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ModelState> {
    if corpus.is_empty() {
        return Err(invalid("corpus must contain at least one document"));
    }
    config.validate()?;
    let hp = &config.hp;
    let stats = DataStats::from_corpus(corpus)?;
    let dim = stats.mean.len();

    let mut proportions = match &config.fixed_proportions {
        Some(p) => p.clone(),
        None => {
            let total: f64 = hp.alpha.iter().sum();
            hp.alpha.iter().map(|a| a / total).collect()
        }
    };
    clamp_simplex(&mut proportions);
    let scale = config.fixed_scale.unwrap_or(1.0 / hp.lambda);

    let floored: Vec<f64> = stats.cov_diag.iter().map(|&c| c.max(config.sigma_floor)).collect();
    let means: Vec<Vec<f64>> = (0..hp.k())
        .map(|_| {
            stats
                .mean
                .iter()
                .zip(&floored)
                .map(|(&m, &c)| Normal::new(m, c.sqrt()).unwrap().sample(rng))
                .collect()
        })
        .collect();
    let sigma2 = (stats.cov_diag.iter().sum::<f64>() / dim as f64).max(config.sigma_floor);
    let topics = TopicParams::new(means, sigma2)?;

    let docs: Vec<DocState> = corpus
        .iter()
        .map(|doc| DocState {
            proportions: proportions.clone(),
            scale,
            memberships: vec![proportions.clone(); doc.len()],
        })
        .collect();
    let mut state = ModelState { docs, topics, log_joint: 0.0 };
    state.log_joint = corpus_log_posterior(&state, corpus, hp)?;
    Ok(state)
}

/// The topic-mean proposal distribution: the data mean with the data
/// covariance diagonal (floored, then scaled by the proposal scale).
pub fn mean_proposal(stats: &DataStats, proposal_scale: f64, sigma_floor: f64) -> DiagGaussian {
    DiagGaussian {
        mean: stats.mean.clone(),
        cov_diag: stats
            .cov_diag
            .iter()
            .map(|&c| proposal_scale * c.max(sigma_floor))
            .collect(),
    }
}

/// Upper end of the variance proposal interval: half the spread between the
/// largest and smallest squared distance from a word to the data mean.
pub fn sigma_candidate_bound(corpus: &[Document], stats: &DataStats) -> f64 {
    let mut max_d2 = f64::NEG_INFINITY;
    let mut min_d2 = f64::INFINITY;
    for doc in corpus {
        for w in &doc.words {
            let d2: f64 = w.iter().zip(&stats.mean).map(|(x, m)| (x - m) * (x - m)).sum();
            max_d2 = max_d2.max(d2);
            min_d2 = min_d2.min(d2);
        }
    }
    0.5 * (max_d2 - min_d2)
}

/// Log acceptance ratio for a proportions candidate drawn from the prior,
/// including the independence-proposal correction. Only the proportion
/// prior and the membership densities depend on the proportions; the other
/// joint terms cancel.
pub fn proportions_log_ratio(candidate: &[f64], doc: &DocState, alpha: &[f64]) -> Result<f64> {
    let cand = terms::proportion_prior(candidate, alpha)?
        + terms::membership(&doc.memberships, doc.scale, candidate)?;
    let cur = terms::proportion_prior(&doc.proportions, alpha)?
        + terms::membership(&doc.memberships, doc.scale, &doc.proportions)?;
    let correction =
        dirichlet_log_pdf(&doc.proportions, alpha)? - dirichlet_log_pdf(candidate, alpha)?;
    Ok(cand - cur + correction)
}

/// Log acceptance ratio for a scale candidate drawn from the exponential
/// prior, including the independence-proposal correction.
pub fn scale_log_ratio(candidate: f64, doc: &DocState, lambda: f64) -> Result<f64> {
    let cand = terms::scale_prior(candidate, lambda)?
        + terms::membership(&doc.memberships, candidate, &doc.proportions)?;
    let cur = terms::scale_prior(doc.scale, lambda)?
        + terms::membership(&doc.memberships, doc.scale, &doc.proportions)?;
    let correction = terms::scale_prior(doc.scale, lambda)? - terms::scale_prior(candidate, lambda)?;
    Ok(cand - cur + correction)
}

/// Log acceptance ratio for one word's membership candidate drawn from the
/// flat simplex (a symmetric proposal, so no correction). Only this word's
/// emission and membership densities change; the shared membership
/// normalizer cancels in the ratio.
///
/// Inputs are assumed clamped into the simplex interior.
pub fn membership_log_ratio(
    word: &[f64],
    candidate: &[f64],
    current: &[f64],
    scale: f64,
    proportions: &[f64],
    topics: &TopicParams,
) -> Result<f64> {
    let k = topics.k();
    if candidate.len() != k || current.len() != k || proportions.len() != k {
        return Err(invalid("membership ratio: topic count mismatch"));
    }
    if word.len() != topics.dim() {
        return Err(invalid("membership ratio: word dimension mismatch"));
    }
    let log_norm = gaussian_log_norm(topics.dim(), topics.sigma2);
    let cand_ll = word_ll_isotropic(word, candidate, &topics.means, topics.sigma2, log_norm);
    let cur_ll = word_ll_isotropic(word, current, &topics.means, topics.sigma2, log_norm);
    let mut density = 0.0;
    for ((&p, &zc), &z0) in proportions.iter().zip(candidate).zip(current) {
        density += (scale * p - 1.0) * (zc.ln() - z0.ln());
    }
    Ok(cand_ll - cur_ll + density)
}

/// Sum of per-word emission log-likelihoods over the whole corpus, with
/// per-document partials accumulated in document order so the value is
/// independent of the parallel schedule.
pub fn emission_total(
    corpus: &[Document],
    docs: &[DocState],
    topics: &TopicParams,
) -> Result<f64> {
    if corpus.len() != docs.len() {
        return Err(invalid("state/corpus document count mismatch"));
    }
    let partials: Result<Vec<f64>> = corpus
        .par_iter()
        .zip(docs.par_iter())
        .map(|(doc, ds)| terms::emission(doc, &ds.memberships, topics))
        .collect();
    Ok(partials?.iter().sum())
}

/// Log acceptance ratio for a topic-mean candidate, with the Hastings
/// correction evaluated under the actual proposal distribution.
pub fn mean_log_ratio(
    corpus: &[Document],
    docs: &[DocState],
    topics: &TopicParams,
    topic_index: usize,
    candidate: &[f64],
    proposal: &DiagGaussian,
) -> Result<f64> {
    if topic_index >= topics.k() {
        return Err(invalid("topic index out of range"));
    }
    let mut cand_topics = topics.clone();
    cand_topics.means[topic_index] = candidate.to_vec();
    let cand = emission_total(corpus, docs, &cand_topics)?;
    let cur = emission_total(corpus, docs, topics)?;
    let correction = gaussian_log_pdf(&topics.means[topic_index], &proposal.mean, &proposal.cov_diag)?
        - gaussian_log_pdf(candidate, &proposal.mean, &proposal.cov_diag)?;
    Ok(cand - cur + correction)
}

/// Log acceptance ratio for a shared-variance candidate drawn uniformly on
/// the data-derived interval; the proposal does not depend on the state, so
/// there is no correction.
pub fn sigma_log_ratio(
    corpus: &[Document],
    docs: &[DocState],
    topics: &TopicParams,
    candidate_sigma2: f64,
) -> Result<f64> {
    if candidate_sigma2.is_nan() || candidate_sigma2 <= 0.0 {
        return Err(invalid("variance candidate must be positive"));
    }
    let mut cand_topics = topics.clone();
    cand_topics.sigma2 = candidate_sigma2;
    Ok(emission_total(corpus, docs, &cand_topics)? - emission_total(corpus, docs, topics)?)
}

#[inline]
fn accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64) -> bool {
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Runs the full sampler and returns the trace with the MAP state.
/// Deterministic given the seed, configuration and corpus, independent of
/// the rayon thread count.
pub fn run_inference(corpus: &[Document], config: &SamplerConfig) -> Result<Trace> {
    config.validate()?;
    let hp = &config.hp;
    let k = hp.k();
    if corpus.is_empty() {
        return Err(invalid("corpus must contain at least one document"));
    }
    if corpus.len() >= 1 << 28 {
        return Err(invalid("document count exceeds the RNG substream capacity"));
    }
    if hp.sweeps as u64 >= 1 << 32 {
        return Err(invalid("sweep count exceeds the RNG substream capacity"));
    }

    let stats = DataStats::from_corpus(corpus)?;
    let proposal = mean_proposal(&stats, hp.proposal_scale, config.sigma_floor);
    let sigma_bound = sigma_candidate_bound(corpus, &stats);

    let mut init_rng = substream(hp.seed, Domain::Init, 0, 0);
    let mut state = init_state(corpus, config, &mut init_rng)?;

    let flat = vec![1.0; k];
    let mut accepted = [0u64; 5];
    let mut attempted = [0u64; 5];
    let mut best_state = state.clone();
    let mut best_log_joint = f64::NEG_INFINITY;
    let mut log_joint_series = Vec::with_capacity(hp.sweeps);
    let mut acceptance_rates = Vec::with_capacity(hp.sweeps);
    let mut thinned_samples = if config.thin > 0 { Some(Vec::new()) } else { None };

    for sweep in 1..=hp.sweeps as u64 {
        // Per-document block against the sweep-start topics.
        let topics = state.topics.clone();
        let doc_results: Result<Vec<(DocState, [u64; 3], [u64; 3])>> = corpus
            .par_iter()
            .enumerate()
            .map(|(d, doc)| {
                let mut rng = substream(hp.seed, Domain::Doc, sweep, d as u64);
                let mut ds = state.docs[d].clone();
                let mut acc = [0u64; 3];
                let mut att = [0u64; 3];

                if config.fixed_proportions.is_none() {
                    let candidate = if config.pin_proposals {
                        ds.proportions.clone()
                    } else {
                        sample_dirichlet(&hp.alpha, &mut rng)
                    };
                    let ratio = proportions_log_ratio(&candidate, &ds, &hp.alpha)?;
                    att[0] += 1;
                    if accept(&mut rng, ratio) {
                        ds.proportions = candidate;
                        acc[0] += 1;
                    }
                }

                if config.fixed_scale.is_none() {
                    let candidate = if config.pin_proposals {
                        ds.scale
                    } else {
                        let s: f64 = Exp::new(hp.lambda).unwrap().sample(&mut rng);
                        s.max(f64::MIN_POSITIVE)
                    };
                    let ratio = scale_log_ratio(candidate, &ds, hp.lambda)?;
                    att[1] += 1;
                    if accept(&mut rng, ratio) {
                        ds.scale = candidate;
                        acc[1] += 1;
                    }
                }

                for n in 0..doc.len() {
                    let candidate = if config.pin_proposals {
                        ds.memberships[n].clone()
                    } else {
                        sample_dirichlet(&flat, &mut rng)
                    };
                    let ratio = membership_log_ratio(
                        &doc.words[n],
                        &candidate,
                        &ds.memberships[n],
                        ds.scale,
                        &ds.proportions,
                        &topics,
                    )?;
                    att[2] += 1;
                    if accept(&mut rng, ratio) {
                        ds.memberships[n] = candidate;
                        acc[2] += 1;
                    }
                }
                Ok((ds, acc, att))
            })
            .collect();
        for (d, (ds, acc, att)) in doc_results?.into_iter().enumerate() {
            state.docs[d] = ds;
            for i in 0..3 {
                accepted[i] += acc[i];
                attempted[i] += att[i];
            }
        }

        // Global block: topic means, then the shared variance.
        let mut rng = substream(hp.seed, Domain::Global, sweep, 0);
        for topic in 0..k {
            let candidate: Vec<f64> = if config.pin_proposals {
                state.topics.means[topic].clone()
            } else {
                proposal
                    .mean
                    .iter()
                    .zip(&proposal.cov_diag)
                    .map(|(&m, &c)| Normal::new(m, c.sqrt()).unwrap().sample(&mut rng))
                    .collect()
            };
            let ratio =
                mean_log_ratio(corpus, &state.docs, &state.topics, topic, &candidate, &proposal)?;
            attempted[BLOCK_MEAN] += 1;
            if accept(&mut rng, ratio) {
                state.topics.means[topic] = candidate;
                accepted[BLOCK_MEAN] += 1;
            }
        }

        attempted[BLOCK_SIGMA] += 1;
        if sigma_bound > config.sigma_floor {
            let candidate = if config.pin_proposals {
                state.topics.sigma2
            } else {
                let u: f64 = rng.random();
                sigma_bound - (sigma_bound - config.sigma_floor) * u
            };
            let ratio = sigma_log_ratio(corpus, &state.docs, &state.topics, candidate)?;
            if accept(&mut rng, ratio) {
                state.topics.sigma2 = candidate;
                accepted[BLOCK_SIGMA] += 1;
            }
        }
        // A degenerate interval records an attempted-but-rejected update.

        let partials: Result<Vec<f64>> = corpus
            .par_iter()
            .zip(state.docs.par_iter())
            .map(|(doc, ds)| doc_log_joint(doc, ds, hp, &state.topics))
            .collect();
        let log_joint: f64 = partials?.iter().sum();
        if !log_joint.is_finite() {
            return Err(numerical(format!(
                "log joint became non-finite ({log_joint}) at sweep {sweep}"
            )));
        }
        state.log_joint = log_joint;
        log_joint_series.push(log_joint);
        acceptance_rates.push(rates(&accepted, &attempted));
        if log_joint > best_log_joint {
            best_log_joint = log_joint;
            best_state = state.clone();
        }
        if let Some(samples) = &mut thinned_samples {
            if sweep as usize % config.thin == 0 {
                samples.push(state.clone());
            }
        }
    }

    Ok(Trace {
        best_state,
        best_log_joint,
        log_joint_series,
        acceptance_rates,
        thinned_samples,
        sigma_bound,
    })
}
