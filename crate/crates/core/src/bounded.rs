//! Bounded conditioning: propagate only the retained cutset instances and
//! bound every instance posterior.
//!
//! Retention is decided once, from the instance weights at the start of the
//! episode. With base weights `w`, accumulated likelihoods `ℓ` of the
//! evidence absorbed since then, `m_i = ℓ_i w_i`, `S = Σ_retained m_i` and
//! `W_e = Σ_eliminated w_j`:
//!
//! * retained `i`: `[m_i / (S + W_e), m_i / S]`
//! * eliminated `j`: `[0, w_j / (S + w_j)]`
//!
//! Both follow from `0 ≤ ℓ_j ≤ 1` for the instances that were not propagated.

use crate::ad::{CutsetEnsemble, PropagationSummary};
use crate::error::{InferenceError, Result};
use crate::network::Evidence;
use crate::scalar::Probability;

/// Threshold used when no policy is given.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetentionPolicy {
    /// Keep the `k` heaviest instances (ties to the earlier instance).
    TopK(usize),
    /// Keep instances with weight at least `τ`.
    Threshold(f64),
}

impl Default for RetentionPolicy {
    fn default() -> Self {
        RetentionPolicy::Threshold(DEFAULT_THRESHOLD)
    }
}

impl RetentionPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RetentionPolicy::TopK(0) => Err(InferenceError::InvalidPolicy("k must be at least 1".into())),
            RetentionPolicy::Threshold(t) if !(0.0..1.0).contains(&t) => {
                Err(InferenceError::InvalidPolicy(format!("threshold {t} is outside [0, 1)")))
            }
            _ => Ok(()),
        }
    }

    pub fn retained<T: Probability>(&self, weights: &[T]) -> Result<Vec<bool>> {
        self.validate()?;
        let keep = match *self {
            RetentionPolicy::TopK(k) => {
                let mut order: Vec<usize> = (0..weights.len()).collect();
                order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
                let mut keep = vec![false; weights.len()];
                order.into_iter().take(k).for_each(|i| keep[i] = true);
                keep
            }
            RetentionPolicy::Threshold(t) => weights.iter().map(|w| w.as_f64() >= t).collect(),
        };
        if !keep.iter().any(|k| *k) {
            return Err(InferenceError::InvalidPolicy("policy retains no instance".into()));
        }
        Ok(keep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceBounds<T> {
    pub lower: T,
    pub upper: T,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPosterior<T> {
    pub bounds: Vec<InstanceBounds<T>>,
    /// Some eliminated instance could outrank every retained one.
    pub rank_uncertain: bool,
}

impl<T: Probability> IntervalPosterior<T> {
    pub fn contains(&self, exact: &[T], tolerance: f64) -> bool {
        self.bounds.iter().zip(exact).all(|(b, &p)| {
            let p = p.as_f64();
            b.lower.as_f64() - tolerance <= p && p <= b.upper.as_f64() + tolerance
        })
    }

    /// True when every interval of `self` lies inside the matching one of
    /// `outer`.
    pub fn nested_in(&self, outer: &IntervalPosterior<T>, tolerance: f64) -> bool {
        self.bounds.iter().zip(&outer.bounds).all(|(inner, outer)| {
            outer.lower.as_f64() - tolerance <= inner.lower.as_f64()
                && inner.lower <= inner.upper
                && inner.upper.as_f64() <= outer.upper.as_f64() + tolerance
        })
    }

    pub fn max_width(&self) -> f64 {
        self.bounds
            .iter()
            .map(|b| (b.upper - b.lower).as_f64())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct BoundedConditioner<T> {
    ensemble: CutsetEnsemble<T>,
    base_weights: Vec<T>,
    log_likelihood: Vec<T>,
    retained: Vec<bool>,
    episode_evidence: Evidence,
    last_summary: Option<PropagationSummary>,
}

impl<T: Probability> BoundedConditioner<T> {
    /// Starts an episode, choosing the retained instances from the current
    /// weights of `ensemble`.
    pub fn new(ensemble: CutsetEnsemble<T>, policy: RetentionPolicy) -> Result<Self> {
        let base_weights = ensemble.cutset_posterior();
        let retained = policy.retained(&base_weights)?;
        Ok(Self {
            log_likelihood: vec![T::zero(); base_weights.len()],
            base_weights,
            retained,
            ensemble,
            episode_evidence: Evidence::new(),
            last_summary: None,
        })
    }

    pub fn ensemble(&self) -> &CutsetEnsemble<T> {
        &self.ensemble
    }

    pub fn retained(&self) -> &[bool] {
        &self.retained
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().filter(|r| **r).count()
    }

    /// Evidence absorbed during this episode.
    pub fn episode_evidence(&self) -> &Evidence {
        &self.episode_evidence
    }

    pub fn propagation_summary(&self) -> Option<&PropagationSummary> {
        self.last_summary.as_ref()
    }

    /// Absorbs evidence into the retained instances only.
    pub fn bounded_absorb(&mut self, new: &Evidence) -> Result<IntervalPosterior<T>> {
        let fresh = self.ensemble.fresh_evidence(new)?;
        if fresh.is_empty() {
            self.last_summary = Some(PropagationSummary::default());
            return self.intervals();
        }
        let batch = self.ensemble.propagate_batch(&fresh, &self.retained)?;
        let mut log_likelihood = self.log_likelihood.clone();
        for (acc, l) in log_likelihood.iter_mut().zip(&batch.likelihoods) {
            if let Some(l) = l {
                *acc = *acc + l.ln();
            }
        }
        let (s, w_e) = self.masses(&log_likelihood);
        if s == T::zero() && w_e == T::zero() {
            self.ensemble.rollback(batch);
            return Err(InferenceError::ImpossibleEvidence);
        }
        self.log_likelihood = log_likelihood;
        for (node, value) in fresh.iter() {
            self.episode_evidence.observe(node, value);
        }
        self.last_summary = Some(batch.summary.clone());
        self.ensemble.record_evidence(&fresh, batch.summary);
        self.intervals()
    }

    /// Moves previously eliminated instances into the retained set,
    /// propagating the episode's evidence through them.
    pub fn refine(&mut self, additional: &[usize]) -> Result<IntervalPosterior<T>> {
        let n = self.retained.len();
        let mut selected = vec![false; n];
        for &i in additional {
            if i >= n {
                return Err(InferenceError::InvalidPolicy(format!("no instance {i}")));
            }
            selected[i] = !self.retained[i];
        }
        if selected.iter().any(|s| *s) && !self.episode_evidence.is_empty() {
            let evidence = self.episode_evidence.clone();
            let batch = self.ensemble.propagate_batch(&evidence, &selected)?;
            for (acc, l) in self.log_likelihood.iter_mut().zip(&batch.likelihoods) {
                if let Some(l) = l {
                    *acc = l.ln();
                }
            }
            self.last_summary = Some(batch.summary);
        }
        for (r, s) in self.retained.iter_mut().zip(&selected) {
            *r |= *s;
        }
        self.intervals()
    }

    fn retained_mass(&self, i: usize, log_likelihood: &[T]) -> T {
        self.base_weights[i] * log_likelihood[i].exp()
    }

    fn masses(&self, log_likelihood: &[T]) -> (T, T) {
        let mut s = T::zero();
        let mut w_e = T::zero();
        for i in 0..self.retained.len() {
            if self.retained[i] {
                s = s + self.retained_mass(i, log_likelihood);
            } else {
                w_e = w_e + self.base_weights[i];
            }
        }
        (s, w_e)
    }

    /// Current bounds for every instance.
    pub fn intervals(&self) -> Result<IntervalPosterior<T>> {
        let (s, w_e) = self.masses(&self.log_likelihood);
        if s == T::zero() && w_e == T::zero() {
            return Err(InferenceError::ImpossibleEvidence);
        }
        let bounds: Vec<InstanceBounds<T>> = (0..self.retained.len())
            .map(|i| {
                if self.retained[i] {
                    let m = self.retained_mass(i, &self.log_likelihood);
                    InstanceBounds {
                        lower: m / (s + w_e),
                        upper: T::safe_div(m, s).min(T::one()),
                        retained: true,
                    }
                } else {
                    let w = self.base_weights[i];
                    InstanceBounds {
                        lower: T::zero(),
                        upper: T::safe_div(w, s + w),
                        retained: false,
                    }
                }
            })
            .collect();
        let max_lower = bounds
            .iter()
            .filter(|b| b.retained)
            .map(|b| b.lower)
            .fold(T::zero(), T::max);
        let rank_uncertain = bounds.iter().any(|b| !b.retained && b.upper > max_lower);
        Ok(IntervalPosterior { bounds, rank_uncertain })
    }

    /// Exact posterior over instances once every instance is retained.
    pub fn exact_posterior(&self) -> Option<Vec<T>> {
        if !self.retained.iter().all(|r| *r) {
            return None;
        }
        let (s, _) = self.masses(&self.log_likelihood);
        Some(
            (0..self.retained.len())
                .map(|i| T::safe_div(self.retained_mass(i, &self.log_likelihood), s))
                .collect(),
        )
    }
}
