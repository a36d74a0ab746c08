use std::hint::black_box;
use std::time::Instant;

use adinfer::ad::{select_cutset, CutsetStrategy};
use adinfer::scalar::max_abs_diff;
use adinfer::{Ensemble, Evidence, Forest, InferenceError, NodeId};

use crate::cases::CaseSample;
use crate::error::BenchError;
use crate::report::{BenchReport, CaseResult};
use crate::spec::{SyntheticNetwork, DISEASE_ID};

/// Largest allowed gap between the two engines' disease posteriors.
pub const GATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Timed repetitions per engine and case; the median is reported.
    pub repeat: usize,
    /// Let the AD engine propagate instances on the rayon pool.
    pub parallel: bool,
    /// Each timed sample repeats the absorption on fresh copies until it
    /// covers roughly this long, so short cases are not lost in timer noise.
    pub min_sample_seconds: f64,
    /// Also time a case that touches every portion.
    pub worst_case: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            repeat: 5,
            parallel: false,
            min_sample_seconds: 2e-3,
            worst_case: true,
        }
    }
}

/// Absorption work whose starting state is built once and cloned per run.
trait Engine {
    type State: Clone;
    fn fresh(&self) -> Self::State;
    /// Disease posterior and the number of messages passed.
    fn run(&self, state: &mut Self::State, evidence: &Evidence) -> Result<(Vec<f64>, usize), InferenceError>;
}

/// Plain clique-tree propagation over the whole network.
pub struct CtpEngine {
    base: Forest,
    disease: NodeId,
}

impl CtpEngine {
    pub fn new(bench: &SyntheticNetwork) -> Result<Self, BenchError> {
        Ok(CtpEngine {
            base: Forest::from_network(&bench.network)?,
            disease: bench.disease,
        })
    }

    /// Disease posterior after absorbing `evidence` into a fresh forest.
    pub fn posterior(&self, evidence: &Evidence) -> Result<Vec<f64>, InferenceError> {
        self.run(&mut self.fresh(), evidence).map(|(p, _)| p)
    }
}

impl Engine for CtpEngine {
    type State = Forest;

    fn fresh(&self) -> Forest {
        self.base.clone()
    }

    fn run(&self, state: &mut Forest, evidence: &Evidence) -> Result<(Vec<f64>, usize), InferenceError> {
        let report = state.absorb(evidence)?;
        Ok((state.node_posterior(self.disease)?, report.messages_passed()))
    }
}

/// Aggregation after decomposition with the disease node as the cutset.
pub struct AdEngine {
    base: Ensemble,
}

impl AdEngine {
    pub fn new(bench: &SyntheticNetwork, parallel: bool) -> Result<Self, BenchError> {
        let cutset = select_cutset(&*bench.network, &CutsetStrategy::Explicit(vec![DISEASE_ID.into()]))?;
        let mut base = Ensemble::new(bench.network.clone(), cutset)?;
        base.set_parallel(parallel);
        Ok(AdEngine { base })
    }

    pub fn fresh_ensemble(&self) -> Ensemble {
        self.base.clone()
    }

    pub fn posterior(&self, evidence: &Evidence) -> Result<Vec<f64>, InferenceError> {
        self.run(&mut self.fresh(), evidence).map(|(p, _)| p)
    }
}

impl Engine for AdEngine {
    type State = Ensemble;

    fn fresh(&self) -> Ensemble {
        self.base.clone()
    }

    fn run(&self, state: &mut Ensemble, evidence: &Evidence) -> Result<(Vec<f64>, usize), InferenceError> {
        state.absorb_evidence(evidence)?;
        let messages = state.propagation_summary().map_or(0, |s| s.messages_passed);
        Ok((state.cutset_posterior(), messages))
    }
}

struct Checked {
    posterior: Vec<f64>,
    ctp_messages: usize,
    ad_messages: usize,
    ctp_once: f64,
}

fn gate(ctp: &CtpEngine, ad: &AdEngine, case: &CaseSample) -> Result<Checked, BenchError> {
    let wrap = |source| BenchError::Case { case: case.id, source };
    let mut forest = ctp.fresh();
    let start = Instant::now();
    let (expected, ctp_messages) = ctp.run(&mut forest, &case.evidence).map_err(wrap)?;
    let ctp_once = start.elapsed().as_secs_f64();
    let (got, ad_messages) = ad.run(&mut ad.fresh(), &case.evidence).map_err(wrap)?;
    let difference = max_abs_diff(&expected, &got);
    if difference > GATE_TOLERANCE {
        return Err(BenchError::PosteriorMismatch { case: case.id, difference });
    }
    Ok(Checked {
        posterior: got,
        ctp_messages,
        ad_messages,
        ctp_once,
    })
}

/// Mean seconds per absorption over `batch` fresh copies.
fn time_batch<E: Engine>(engine: &E, evidence: &Evidence, batch: usize) -> f64 {
    let mut states: Vec<E::State> = (0..batch).map(|_| engine.fresh()).collect();
    let start = Instant::now();
    for s in states.iter_mut() {
        black_box(engine.run(s, evidence).ok());
    }
    let elapsed = start.elapsed().as_secs_f64();
    drop(states);
    elapsed / batch as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn measure(
    bench: &SyntheticNetwork,
    ctp: &CtpEngine,
    ad: &AdEngine,
    case: &CaseSample,
    config: &SuiteConfig,
) -> Result<CaseResult, BenchError> {
    let checked = gate(ctp, ad, case)?;
    let batch = ((config.min_sample_seconds / checked.ctp_once.max(1e-7)).ceil() as usize).clamp(1, 256);
    // Warm both engines before the timed repetitions.
    time_batch(ctp, &case.evidence, 1);
    time_batch(ad, &case.evidence, 1);
    let mut ctp_times = Vec::with_capacity(config.repeat);
    let mut ad_times = Vec::with_capacity(config.repeat);
    for r in 0..config.repeat {
        // Alternate which engine goes first to cancel drift.
        if r % 2 == 0 {
            ctp_times.push(time_batch(ctp, &case.evidence, batch));
            ad_times.push(time_batch(ad, &case.evidence, batch));
        } else {
            ad_times.push(time_batch(ad, &case.evidence, batch));
            ctp_times.push(time_batch(ctp, &case.evidence, batch));
        }
    }
    let ctp_seconds = median(ctp_times);
    let ad_seconds = median(ad_times);
    let touched = bench.portions_touched(case.evidence.nodes());
    Ok(CaseResult {
        id: case.id,
        feature_count: case.feature_count(),
        ctp_seconds,
        ad_seconds,
        ratio: ad_seconds / ctp_seconds,
        touched_largest_portion: touched.contains(&bench.largest_portion),
        touched_portions: touched.iter().map(|&p| bench.portions[p].label.clone()).collect(),
        posterior: checked.posterior,
        ctp_messages: checked.ctp_messages,
        ad_messages: checked.ad_messages,
    })
}

/// Checks and times every case. Fails on the first case where the two
/// engines disagree, before any timing is reported.
pub fn run_suite(
    bench: &SyntheticNetwork,
    cases: &[CaseSample],
    config: &SuiteConfig,
) -> Result<BenchReport, BenchError> {
    if config.repeat < 5 {
        return Err(BenchError::Spec(format!("repeat must be at least 5, got {}", config.repeat)));
    }
    let ctp = CtpEngine::new(bench)?;
    let ad = AdEngine::new(bench, config.parallel)?;
    // Correctness first: no timing runs until every case passes the gate.
    for case in cases {
        gate(&ctp, &ad, case)?;
    }
    let results = cases
        .iter()
        .map(|c| measure(bench, &ctp, &ad, c, config))
        .collect::<Result<Vec<_>, _>>()?;
    let worst = if config.worst_case {
        let case = crate::cases::worst_case(bench, cases.len(), bench.spec.seed);
        Some(measure(bench, &ctp, &ad, &case, config)?)
    } else {
        None
    };
    Ok(BenchReport::new(results, worst, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::sample_cases;
    use crate::spec::{generate, SyntheticSpec};

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn engines_agree_on_default_cases() {
        let bench = generate(&SyntheticSpec::default()).unwrap();
        let ctp = CtpEngine::new(&bench).unwrap();
        let ad = AdEngine::new(&bench, false).unwrap();
        for case in sample_cases(&bench, 5, 1) {
            let a = ctp.posterior(&case.evidence).unwrap();
            let b = ad.posterior(&case.evidence).unwrap();
            assert!(max_abs_diff(&a, &b) < GATE_TOLERANCE);
        }
    }

    #[test]
    fn short_repeat_is_rejected() {
        let bench = generate(&SyntheticSpec::default()).unwrap();
        let config = SuiteConfig { repeat: 3, ..SuiteConfig::default() };
        assert!(run_suite(&bench, &[], &config).is_err());
    }
}
