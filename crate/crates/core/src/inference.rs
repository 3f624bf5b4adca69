//! Posterior scoring of classifier logits.
//!
//! A [`BayesScorer`] replaces softmax with scores built from empirical
//! CDFs: per-class likelihoods come from Gaussian KDE CDFs of the
//! training logits, optional per-class priors from normalized histogram
//! CDFs, and a small additive constant keeps the normalization defined
//! when every density term vanishes.

use serde::{Deserialize, Serialize};

use crate::density::{KdeModel, NhModel};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One classifier output row: an identifier, one logit per class, and an
/// optional ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitSample<T> {
    pub id: String,
    pub logits: Vec<T>,
    pub label: Option<usize>,
}

impl<T> LogitSample<T> {
    pub fn new(id: impl Into<String>, logits: Vec<T>, label: Option<usize>) -> Self {
        LogitSample {
            id: id.into(),
            logits,
            label,
        }
    }
}

/// Which density models a scorer carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Likelihoods only.
    Ml,
    /// Likelihoods and histogram priors.
    Map,
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Mode::Ml => "ml",
            Mode::Map => "map",
        })
    }
}

/// Scoring rule applied to a logit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// Plain softmax of the logits; needs no fitted models.
    Softmax,
    /// Normalized smoothed likelihoods.
    Ml,
    /// Normalized smoothed likelihood-prior products.
    Map,
}

impl core::fmt::Display for Rule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Rule::Softmax => "softmax",
            Rule::Ml => "ml",
            Rule::Map => "map",
        })
    }
}

/// How training samples are assigned to the class whose densities they feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitCondition {
    /// Group by the annotated label. The default; requires labels.
    GroundTruth,
    /// Group by the argmax of each sample's own logits. Works on
    /// unlabeled data.
    Predicted,
}

/// Index of the largest score; the lowest index wins ties.
///
/// # Panics
///
/// If `scores` is empty.
pub fn argmax_class<T: Real>(scores: &[T]) -> usize {
    assert!(!scores.is_empty(), "argmax of an empty score vector");
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax: shifts by the maximum logit before
/// exponentiating, so equal logits map to an exactly uniform vector.
pub fn softmax<T: Real>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::data("softmax of an empty logit vector"));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("softmax input contains a non-finite logit"));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Add the smoothing constant to each density term and normalize.
///
/// When every smoothed term is identical the exact uniform vector
/// `1/nc` is returned directly; dividing equal floating-point terms by
/// their sum would not reliably produce it.
pub(crate) fn smoothed_normalize<T: Real>(terms: &[T], lambda: T) -> Vec<T> {
    let smoothed: Vec<T> = terms.iter().map(|&t| t + lambda).collect();
    let first = smoothed[0];
    if smoothed.iter().all(|&t| t == first) {
        let nc = T::from_usize(smoothed.len()).expect("class count fits scalar");
        return vec![T::one() / nc; smoothed.len()];
    }
    let total: T = smoothed.iter().copied().sum();
    smoothed.into_iter().map(|t| t / total).collect()
}

/// Per-class density models for scoring logit vectors.
///
/// Fitting estimates, for each class `c`, the distribution of the `c`-th
/// logit over training samples assigned to class `c`. Scoring a new logit
/// vector evaluates each class's CDFs at the vector's own `c`-th entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesScorer<T> {
    mode: Mode,
    lambda: T,
    likelihoods: Vec<KdeModel<T>>,
    priors: Option<Vec<NhModel<T>>>,
}

impl<T: Real> BayesScorer<T> {
    /// Fit with ground-truth conditioning. See [`BayesScorer::fit_with`].
    pub fn fit(
        train: &[LogitSample<T>],
        bandwidths: &[T],
        nbins: &[usize],
        lambda: T,
        mode: Mode,
    ) -> Result<Self> {
        Self::fit_with(train, bandwidths, nbins, lambda, mode, FitCondition::GroundTruth)
    }

    /// Fit per-class density models on `train`.
    ///
    /// `bandwidths` holds one KDE bandwidth per class and fixes the class
    /// count. In [`Mode::Map`], `nbins` holds one histogram bin count per
    /// class; in [`Mode::Ml`] it must be empty. Every class must receive at
    /// least two training samples under the chosen conditioning.
    pub fn fit_with(
        train: &[LogitSample<T>],
        bandwidths: &[T],
        nbins: &[usize],
        lambda: T,
        mode: Mode,
        condition: FitCondition,
    ) -> Result<Self> {
        let nc = bandwidths.len();
        if nc < 2 {
            return Err(Error::parameter(format!(
                "need at least two classes, got {nc} bandwidths"
            )));
        }
        match mode {
            Mode::Ml if !nbins.is_empty() => {
                return Err(Error::parameter(
                    "likelihood-only mode takes no prior bin counts",
                ));
            }
            Mode::Map if nbins.len() != nc => {
                return Err(Error::parameter(format!(
                    "need one bin count per class: got {} for {nc} classes",
                    nbins.len()
                )));
            }
            _ => {}
        }
        if !lambda.is_finite() || lambda <= T::zero() {
            return Err(Error::parameter(format!(
                "smoothing constant must be positive and finite, got {lambda}"
            )));
        }
        if train.is_empty() {
            return Err(Error::data("cannot fit a scorer to zero samples"));
        }

        let mut grouped: Vec<Vec<T>> = vec![Vec::new(); nc];
        for sample in train {
            if sample.logits.len() != nc {
                return Err(Error::data(format!(
                    "sample {:?} has {} logits, expected {nc}",
                    sample.id,
                    sample.logits.len()
                )));
            }
            if sample.logits.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(format!(
                    "sample {:?} has a non-finite logit",
                    sample.id
                )));
            }
            let class = match condition {
                FitCondition::GroundTruth => sample.label.ok_or_else(|| {
                    Error::data(format!(
                        "sample {:?} has no label; ground-truth conditioning needs one",
                        sample.id
                    ))
                })?,
                FitCondition::Predicted => argmax_class(&sample.logits),
            };
            if class >= nc {
                return Err(Error::data(format!(
                    "sample {:?} has label {class}, outside 0..{nc}",
                    sample.id
                )));
            }
            grouped[class].push(sample.logits[class]);
        }

        let mut likelihoods = Vec::with_capacity(nc);
        let mut priors = if mode == Mode::Map {
            Some(Vec::with_capacity(nc))
        } else {
            None
        };
        for (c, values) in grouped.iter().enumerate() {
            if values.len() < 2 {
                return Err(Error::data(format!(
                    "class {c} has {} training samples under the chosen \
                     conditioning; at least 2 are required",
                    values.len()
                )));
            }
            likelihoods.push(KdeModel::fit(values, bandwidths[c])?);
            if let Some(priors) = priors.as_mut() {
                priors.push(NhModel::fit(values, nbins[c])?);
            }
        }
        Ok(BayesScorer {
            mode,
            lambda,
            likelihoods,
            priors,
        })
    }

    /// Reassemble a scorer from stored models, revalidating shape
    /// consistency between the parts.
    pub fn from_parts(
        mode: Mode,
        lambda: T,
        likelihoods: Vec<KdeModel<T>>,
        priors: Option<Vec<NhModel<T>>>,
    ) -> Result<Self> {
        if likelihoods.len() < 2 {
            return Err(Error::data(format!(
                "scorer needs at least two class models, got {}",
                likelihoods.len()
            )));
        }
        if !lambda.is_finite() || lambda <= T::zero() {
            return Err(Error::parameter(format!(
                "smoothing constant must be positive and finite, got {lambda}"
            )));
        }
        match (mode, &priors) {
            (Mode::Ml, None) => {}
            (Mode::Map, Some(p)) if p.len() == likelihoods.len() => {}
            (Mode::Ml, Some(_)) => {
                return Err(Error::data("likelihood-only scorer carries priors"));
            }
            (Mode::Map, _) => {
                return Err(Error::data(
                    "posterior scorer needs exactly one prior model per class",
                ));
            }
        }
        Ok(BayesScorer {
            mode,
            lambda,
            likelihoods,
            priors,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn num_classes(&self) -> usize {
        self.likelihoods.len()
    }

    pub fn likelihoods(&self) -> &[KdeModel<T>] {
        &self.likelihoods
    }

    pub fn priors(&self) -> Option<&[NhModel<T>]> {
        self.priors.as_deref()
    }

    fn check_query(&self, logits: &[T]) -> Result<()> {
        if logits.len() != self.num_classes() {
            return Err(Error::data(format!(
                "logit vector has {} entries, scorer expects {}",
                logits.len(),
                self.num_classes()
            )));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("logit vector contains a non-finite value"));
        }
        Ok(())
    }

    /// Normalized smoothed likelihoods: `(L_c + lambda) / sum_j (L_j + lambda)`
    /// where `L_c` is class `c`'s KDE CDF at the vector's `c`-th logit.
    pub fn ml_score(&self, logits: &[T]) -> Result<Vec<T>> {
        self.check_query(logits)?;
        let terms: Vec<T> = self
            .likelihoods
            .iter()
            .zip(logits)
            .map(|(kde, &d)| kde.cdf(d))
            .collect();
        Ok(smoothed_normalize(&terms, self.lambda))
    }

    /// Normalized smoothed likelihood-prior products:
    /// `(L_c * P_c + lambda) / sum_j (L_j * P_j + lambda)`, with `P_c` the
    /// histogram CDF at the vector's `c`-th logit.
    ///
    /// Fails on a scorer fitted without priors.
    pub fn map_score(&self, logits: &[T]) -> Result<Vec<T>> {
        self.check_query(logits)?;
        let priors = self.priors.as_ref().ok_or_else(|| {
            Error::parameter("posterior scoring requested on a likelihood-only scorer")
        })?;
        let terms: Vec<T> = self
            .likelihoods
            .iter()
            .zip(priors)
            .zip(logits)
            .map(|((kde, nh), &d)| kde.cdf(d) * nh.cdf(d))
            .collect();
        Ok(smoothed_normalize(&terms, self.lambda))
    }

    /// Score under the given rule. [`Rule::Softmax`] ignores the fitted
    /// models apart from validating the vector width.
    pub fn score(&self, logits: &[T], rule: Rule) -> Result<Vec<T>> {
        match rule {
            Rule::Softmax => {
                self.check_query(logits)?;
                softmax(logits)
            }
            Rule::Ml => self.ml_score(logits),
            Rule::Map => self.map_score(logits),
        }
    }

    /// Predicted class (ties break to the lowest index) plus the scores.
    pub fn predict(&self, logits: &[T], rule: Rule) -> Result<(usize, Vec<T>)> {
        let scores = self.score(logits, rule)?;
        Ok((argmax_class(&scores), scores))
    }
}
