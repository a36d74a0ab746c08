//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Built without the libtest harness so the lines always print.

use std::process::ExitCode;

use adinfer::ad::{init_ensemble, select_cutset, CutsetStrategy, LoopCutset, PropagationScope};
use adinfer::network::random::{random_evidence, random_network, sample_assignment, RandomNetworkConfig};
use adinfer::network::{enumerate_all_posteriors, enumerate_posterior, evidence_likelihood_oracle};
use adinfer::scalar::max_abs_diff;
use adinfer::{forest_likelihood, Bounded, Ensemble, Evidence, Forest, Network, NodeId, RetentionPolicy};
use adinfer_bench::{
    generate, run_suite, sample_cases, scatter_without_timing, AdEngine, BenchReport, SuiteConfig, SyntheticSpec,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn root_cutset(net: &Network, rng: &mut ChaCha8Rng) -> LoopCutset {
    let roots: Vec<NodeId> = net.node_ids().filter(|&n| net.is_root(n)).collect();
    let root = *roots.choose(rng).expect("every DAG has a root");
    select_cutset(net, &CutsetStrategy::Explicit(vec![net.node(root).id.clone()])).unwrap()
}

fn outside(net: &Network, cutset: &LoopCutset) -> Vec<NodeId> {
    net.node_ids().filter(|&n| !cutset.contains(n)).collect()
}

fn worst(acc: &mut f64, v: f64) {
    *acc = acc.max(v);
}

fn ctp_oracle() -> Outcome {
    let config = RandomNetworkConfig::default();
    let mut err: f64 = 0.0;
    for seed in 0..200 {
        let mut rng = rng(seed);
        let net = random_network(&mut rng, &config);
        let base = Forest::from_network(&net).map_err(|e| format!("network {seed}: {e}"))?;
        let nodes: Vec<NodeId> = net.node_ids().collect();
        for _ in 0..3 {
            let ev = random_evidence(&net, &mut rng, &nodes, 4);
            let mut forest = base.clone();
            let report = forest.absorb(&ev).map_err(|e| format!("network {seed}: {e}"))?;
            let expected = enumerate_all_posteriors(&net, &ev).unwrap();
            for n in &nodes {
                worst(&mut err, max_abs_diff(&forest.node_posterior(*n).unwrap(), &expected[n.0]));
            }
            let pe = evidence_likelihood_oracle(&net, &ev).unwrap();
            worst(&mut err, (forest_likelihood(&report) - pe).abs());
        }
    }
    if err < 1e-9 {
        Ok(format!("600 evidence sets, max error {err:.1e}"))
    } else {
        Err(format!("max error {err:.1e}"))
    }
}

fn ad_oracle() -> Outcome {
    let config = RandomNetworkConfig::default();
    let mut err: f64 = 0.0;
    for seed in 0..200 {
        let mut rng = rng(1000 + seed);
        let net = random_network(&mut rng, &config);
        let cutset = root_cutset(&net, &mut rng);
        let root = cutset.members()[0];
        let candidates = outside(&net, &cutset);
        let base = init_ensemble(&net, cutset.clone()).map_err(|e| format!("network {seed}: {e}"))?;
        for _ in 0..3 {
            let ev = random_evidence(&net, &mut rng, &candidates, 4);
            let mut ensemble = base.clone();
            let prior = ensemble.cutset_posterior();
            let record = ensemble.absorb_evidence(&ev).map_err(|e| format!("network {seed}: {e}"))?;
            worst(
                &mut err,
                max_abs_diff(&ensemble.cutset_posterior(), &enumerate_posterior(&net, root, &ev).unwrap()),
            );
            for &n in &candidates {
                let expected = enumerate_posterior(&net, n, &ev).unwrap();
                worst(&mut err, max_abs_diff(&ensemble.feature_posterior(n).unwrap(), &expected));
            }
            let pe: f64 = prior.iter().zip(&record.likelihoods).map(|(w, l)| w * l).sum();
            worst(&mut err, (pe - evidence_likelihood_oracle(&net, &ev).unwrap()).abs());
        }
    }
    if err < 1e-9 {
        Ok(format!("600 evidence sets, max error {err:.1e}"))
    } else {
        Err(format!("max error {err:.1e}"))
    }
}

fn selective_propagation() -> Outcome {
    let bench = generate(&SyntheticSpec::default()).unwrap();
    let ad = AdEngine::new(&bench, false).unwrap();
    let singletons: Vec<NodeId> = bench
        .portions
        .iter()
        .filter(|p| !p.independent && p.features.len() == 1)
        .map(|p| p.features[0])
        .collect();
    let largest = ad.fresh_ensemble().structure().largest_component().unwrap();
    let mut err: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = rng(seed);
        let sample = sample_assignment(&bench.network, &mut rng);
        let k = rng.gen_range(1..=4);
        let ev: Evidence = singletons.choose_multiple(&mut rng, k).map(|&n| (n, sample[n.0])).collect();

        let mut selective = ad.fresh_ensemble();
        selective.absorb_evidence(&ev).map_err(|e| e.to_string())?;
        let summary = selective.propagation_summary().unwrap();
        if summary.instances_propagated != 63 || summary.messages_in(largest) != 0 {
            return Err(format!(
                "case {seed}: {} instances, {} messages in the largest component",
                summary.instances_propagated,
                summary.messages_in(largest)
            ));
        }
        let mut forced: Ensemble = ad.fresh_ensemble();
        forced.set_scope(PropagationScope::AllComponents);
        forced.absorb_evidence(&ev).map_err(|e| e.to_string())?;
        worst(&mut err, max_abs_diff(&selective.cutset_posterior(), &forced.cutset_posterior()));
        for n in bench.features() {
            let a = selective.feature_posterior(n).unwrap();
            let b = forced.feature_posterior(n).unwrap();
            worst(&mut err, max_abs_diff(&a, &b));
        }
    }
    if err < 1e-12 {
        Ok(format!("20 singleton-only cases, 0 messages in the largest component, max diff {err:.1e}"))
    } else {
        Err(format!("selective and forced differ by {err:.1e}"))
    }
}

fn bench_report() -> BenchReport {
    let bench = generate(&SyntheticSpec::default()).unwrap();
    let cases = sample_cases(&bench, 20, 0);
    run_suite(&bench, &cases, &SuiteConfig::default()).unwrap()
}

fn bimodality(report: &BenchReport) -> Outcome {
    let (Some(away), Some(touching)) = (report.away_from_largest.mean_ratio, report.touching_largest.mean_ratio) else {
        return Err("one of the clusters is empty".into());
    };
    let max = report.max_ratio();
    let detail = format!(
        "away {away:.3} ({} cases), touching {touching:.3} ({} cases), max case ratio {max:.3}",
        report.away_from_largest.count, report.touching_largest.count
    );
    if away <= touching / 3.0 && max <= 1.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism(first: &BenchReport) -> Outcome {
    let second = bench_report();
    if first.posteriors() != second.posteriors() {
        return Err("posteriors differ between runs".into());
    }
    if scatter_without_timing(first) != scatter_without_timing(&second) {
        return Err("CSV differs outside the timing column".into());
    }
    Ok(format!("{} cases, identical posteriors and CSV", first.cases.len()))
}

fn bounded_conditioning() -> Outcome {
    let config = RandomNetworkConfig {
        min_nodes: 3,
        ..Default::default()
    };
    for trial in 0..100 {
        let fail = |what: &str| Err(format!("trial {trial}: {what}"));
        let mut rng = rng(5000 + trial);
        let net = random_network(&mut rng, &config);
        let cutset = root_cutset(&net, &mut rng);
        let n = cutset.instance_count();
        let candidates = outside(&net, &cutset);
        let all = random_evidence(&net, &mut rng, &candidates, 4);
        let cut = rng.gen_range(0..=all.len());
        let steps: [Evidence; 2] = [all.iter().take(cut).collect(), all.iter().skip(cut).collect()];

        let base = init_ensemble(&net, cutset).unwrap();
        let mut exact = base.clone();
        for s in &steps {
            exact.absorb_evidence(s).unwrap();
        }
        let truth = exact.cutset_posterior();

        // Containment, then nesting as instances are added back.
        let k = rng.gen_range(1..=n);
        let mut bounded = Bounded::new(base.clone(), RetentionPolicy::TopK(k)).unwrap();
        let mut current = bounded.intervals().unwrap();
        for s in &steps {
            current = bounded.bounded_absorb(s).unwrap();
        }
        if !current.contains(&truth, 1e-12) {
            return fail("exact posterior outside the bounds");
        }
        let mut rest: Vec<usize> = (0..n).filter(|&i| !bounded.retained()[i]).collect();
        rest.shuffle(&mut rng);
        for chunk in rest.chunks(2) {
            let next = bounded.refine(chunk).unwrap();
            if !next.nested_in(&current, 1e-12) || !next.contains(&truth, 1e-12) {
                return fail("refined bounds not nested");
            }
            current = next;
        }
        if max_abs_diff(&bounded.exact_posterior().unwrap(), &truth) >= 1e-12 {
            return fail("full refinement is not exact");
        }

        // Retaining everything is exact from the start.
        let mut all_in = Bounded::new(base.clone(), RetentionPolicy::Threshold(0.0)).unwrap();
        let mut iv = all_in.intervals().unwrap();
        for s in &steps {
            iv = all_in.bounded_absorb(s).unwrap();
        }
        let lower: Vec<f64> = iv.bounds.iter().map(|b| b.lower).collect();
        if iv.max_width() >= 1e-12 || max_abs_diff(&lower, &truth) >= 1e-12 {
            return fail("retain-all differs from exact");
        }

        // Work is proportional to the number of retained instances.
        if !all.is_empty() {
            let mut full = base.clone();
            full.absorb_evidence(&all).unwrap();
            let per_instance = full.propagation_summary().unwrap().messages_passed / n;
            for k in 1..=n {
                let mut b = Bounded::new(base.clone(), RetentionPolicy::TopK(k)).unwrap();
                b.bounded_absorb(&all).unwrap();
                if b.propagation_summary().unwrap().messages_passed != k * per_instance {
                    return fail("message count not proportional to retained instances");
                }
            }
        }
    }
    Ok("100 trials: containment, nesting, retain-all exact, messages proportional".into())
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn order_invariance() -> Outcome {
    let config = RandomNetworkConfig::default();
    let mut err: f64 = 0.0;
    for pair in 0..50 {
        let mut rng = rng(9000 + pair);
        let net = random_network(&mut rng, &config);
        let cutset = root_cutset(&net, &mut rng);
        let candidates = outside(&net, &cutset);
        let ev = random_evidence(&net, &mut rng, &candidates, 4);
        let observations: Vec<(NodeId, usize)> = ev.iter().collect();
        let forest = Forest::from_network(&net).unwrap();
        let ensemble = init_ensemble(&net, cutset).unwrap();
        let mut reference: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;
        for order in permutations(&observations) {
            let mut f = forest.clone();
            let mut e = ensemble.clone();
            for &(n, v) in &order {
                let single = Evidence::new().with(n, v);
                f.absorb(&single).map_err(|e| e.to_string())?;
                e.absorb_evidence(&single).map_err(|e| e.to_string())?;
            }
            let ctp: Vec<Vec<f64>> = net.node_ids().map(|n| f.node_posterior(n).unwrap()).collect();
            let mut ad = vec![e.cutset_posterior()];
            ad.extend(candidates.iter().map(|&n| e.feature_posterior(n).unwrap()));
            match &reference {
                None => reference = Some((ctp, ad)),
                Some((c0, a0)) => {
                    for (a, b) in c0.iter().zip(&ctp).chain(a0.iter().zip(&ad)) {
                        worst(&mut err, max_abs_diff(a, b));
                    }
                }
            }
        }
    }
    if err <= 1e-10 {
        Ok(format!("50 pairs, all orders agree to {err:.1e}"))
    } else {
        Err(format!("orders differ by {err:.1e}"))
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    };
    report("ctp matches enumeration", ctp_oracle());
    report("ad matches enumeration", ad_oracle());
    report("selective propagation", selective_propagation());
    let suite = bench_report();
    report("runtime bimodality", bimodality(&suite));
    report("bounded conditioning", bounded_conditioning());
    report("observation order invariance", order_invariance());
    report("bench determinism", determinism(&suite));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
