//! End-to-end acceptance suite. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits nonzero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use cart_core::bits::BitVector;
use cart_core::data::{sample_dataset, FeatureDistribution, NoiseModel, SparseTarget};
use cart_core::oracle::{population_breiman, population_level_split, PopulationProblem, SplitSet};
use cart_core::seed::SeedSpec;
use cart_core::tree::{empirical_v, empirical_v_leaf};
use cart_experiments::{run_with_threads, ExperimentKind, Output};
use common::brute;
use rand::seq::index::sample;
use rand::Rng;
use serde_json::Value;

const MASTER: u64 = 20240611;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn all_subsets(d: usize, max: usize) -> Vec<Vec<usize>> {
    (0u32..1 << d)
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..d).filter(|&i| (m >> i) & 1 == 1).collect())
        .collect()
}

fn oracle_matches_enumeration() -> Verdict {
    let mut worst = 0.0f64;
    let mut checks = 0usize;
    for trial in 0..50 {
        let mut rng = common::rng(MASTER ^ trial);
        let d = rng.random_range(2..=10);
        let p = common::random_problem(&mut rng, d, 4);
        let pts = brute::points(p.distribution(), p.target());
        let mut track = |a: f64, b: f64| {
            worst = worst.max((a - b).abs());
            checks += 1;
        };
        for s in all_subsets(d, 4) {
            let splits = SplitSet::new(s.clone()).unwrap();
            track(p.vbar(&splits).unwrap(), brute::vbar(&pts, d, &s));
        }
        for _ in 0..5 {
            let cuts = rng.random_range(0..8);
            let part = common::random_partition(&mut rng, d, cuts);
            track(
                p.lbar_partition(&part).unwrap(),
                brute::lbar_partition(&pts, &part),
            );
            for cell in part.cells() {
                track(
                    p.value_diameter(cell).unwrap(),
                    brute::value_diameter(&pts, cell),
                );
                if p.mass(cell).unwrap() == 0.0 {
                    continue;
                }
                let free: Vec<usize> = (0..d).filter(|&i| !cell.is_fixed(i)).collect();
                let k = rng.random_range(0..=free.len().min(3));
                let dirs: Vec<usize> = sample(&mut rng, free.len(), k)
                    .into_iter()
                    .map(|j| free[j])
                    .collect();
                track(
                    p.vbar_leaf(cell, &dirs).unwrap(),
                    brute::vbar_leaf(&pts, cell, &dirs),
                );
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("{checks} values on 50 problems, max |diff| = {worst:.2e} (tol 1e-10)"),
    )
}

fn population_recovers_targets() -> Verdict {
    let d = 12;
    let mut failures = 0;
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = common::rng(MASTER.wrapping_add(1000 + trial));
        let r = rng.random_range(1..=3);
        let mut relevant = sample(&mut rng, d, r).into_vec();
        relevant.sort_unstable();
        let table: Vec<f64> = (0..1 << r).map(|_| rng.random_range(-0.5..=0.5)).collect();
        let probs: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..0.8)).collect();
        let p = PopulationProblem::new(
            FeatureDistribution::product(probs).unwrap(),
            SparseTarget::new(d, relevant, table).unwrap(),
        )
        .unwrap();
        let seed = SeedSpec::new(trial);
        let level = population_level_split(&p, r, seed).unwrap();
        let breiman = population_breiman(&p, 1 << r, seed).unwrap();
        let mut ok = true;
        for idx in 0..1u64 << d {
            let x = BitVector::from_index(d, idx);
            let m = p.target().eval(&x).unwrap();
            for est in [level.estimator.eval(x.words()), breiman.eval(x.words())] {
                match est {
                    Some(v) => {
                        worst = worst.max((v - m).abs());
                        ok &= (v - m).abs() <= 1e-12;
                    }
                    None => ok = false,
                }
            }
        }
        failures += usize::from(!ok);
    }
    verdict(
        failures == 0,
        format!("100 targets, d=12, r<=3: {failures} failures, max |m_bar - m| = {worst:.1e}"),
    )
}

fn empirical_criteria_exact() -> Verdict {
    let d = 6;
    let mut mismatches = 0;
    let mut checks = 0;
    for trial in 0..20u64 {
        let mut rng = common::rng(MASTER.wrapping_add(2000 + trial));
        let n = rng.random_range(1..=64);
        let p = common::random_problem(&mut rng, d, 3);
        let noise = NoiseModel::uniform(0.5).unwrap();
        let data = sample_dataset(
            p.distribution(),
            p.target(),
            &noise,
            n,
            SeedSpec::new(trial),
        )
        .unwrap();
        for s in all_subsets(4, 4) {
            let fast = empirical_v(&SplitSet::new(s.clone()).unwrap(), &data).unwrap();
            mismatches += usize::from(fast.to_bits() != brute::empirical_v(&data, &s).to_bits());
            checks += 1;
        }
        for _ in 0..10 {
            let part = common::random_partition(&mut rng, 4, 3);
            for cell in part.cells() {
                let cell =
                    cart_core::oracle::Cell::new(d, cell.constraints().iter().copied()).unwrap();
                for i in (0..d).filter(|&i| !cell.is_fixed(i)) {
                    let Ok(fast) = empirical_v_leaf(&cell, i, &data) else {
                        continue;
                    };
                    let slow = brute::empirical_v_leaf(&data, &cell, i);
                    mismatches += usize::from(fast.to_bits() != slow.to_bits());
                    checks += 1;
                }
            }
        }
    }
    verdict(
        mismatches == 0,
        format!("{checks} grouped vs per-definition values on 20 datasets: {mismatches} differ"),
    )
}

fn decomposition_identities() -> Verdict {
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = common::rng(MASTER.wrapping_add(3000 + trial));
        let d = rng.random_range(2..=10);
        let p = common::random_problem(&mut rng, d, 4);
        let cuts = rng.random_range(0..10);
        let part = common::random_partition(&mut rng, d, cuts);
        let live: Vec<_> = part
            .cells()
            .iter()
            .filter(|a| p.mass(a).unwrap() > 0.0)
            .collect();
        let v: f64 = live
            .iter()
            .map(|a| p.mass(a).unwrap() * p.vbar_leaf(a, &[]).unwrap())
            .sum();
        let l: f64 = live
            .iter()
            .map(|a| p.mass(a).unwrap() * p.lbar_leaf(a, &[]).unwrap())
            .sum();
        worst = worst.max((p.vbar_partition(&part).unwrap() - v).abs());
        worst = worst.max((p.lbar_partition(&part).unwrap() - l).abs());
        for (idx, cell) in part.cells().iter().enumerate() {
            if p.mass(cell).unwrap() == 0.0 {
                continue;
            }
            for i in (0..d).filter(|&i| !cell.is_fixed(i)) {
                let finer = part.split_cell(idx, i).unwrap();
                let gain = p.vbar_partition(&finer).unwrap() - p.vbar_partition(&part).unwrap();
                let local = p.vbar_leaf(cell, &[i]).unwrap() - p.vbar_leaf(cell, &[]).unwrap();
                worst = worst.max((gain - p.mass(cell).unwrap() * local).abs());
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("100 partitions, items 1-3: max |diff| = {worst:.2e} (tol 1e-10)"),
    )
}

fn concentration() -> Verdict {
    let (d, q, t, n) = (8usize, 3usize, 3.0f64, 10_000usize);
    let bound =
        10.0 * ((1u64 << q) as f64 * (q as f64 * ((d * q) as f64).ln() + t) / n as f64).sqrt();
    let p = PopulationProblem::new(
        FeatureDistribution::uniform(d),
        SparseTarget::new(
            d,
            vec![0, 1, 2],
            vec![-0.5, 0.1, 0.3, -0.2, 0.5, 0.0, -0.1, 0.25],
        )
        .unwrap(),
    )
    .unwrap();
    let noise = NoiseModel::uniform(0.5).unwrap();
    let sets: Vec<SplitSet> = all_subsets(d, q)
        .into_iter()
        .map(|s| SplitSet::new(s).unwrap())
        .collect();
    let vbars: Vec<f64> = sets.iter().map(|s| p.vbar(s).unwrap()).collect();
    let seed = SeedSpec::new(MASTER);
    let mut violations = 0;
    let mut largest = 0.0f64;
    for trial in 0..200 {
        let data = sample_dataset(
            p.distribution(),
            p.target(),
            &noise,
            n,
            seed.derive("concentration", trial),
        )
        .unwrap();
        let sup = sets
            .iter()
            .zip(&vbars)
            .map(|(s, &v)| (empirical_v(s, &data).unwrap() - v).abs())
            .fold(0.0, f64::max);
        largest = largest.max(sup);
        violations += usize::from(sup >= bound);
    }
    verdict(
        violations <= 10,
        format!(
            "bound {bound:.4}, {violations}/200 violations (max 10), largest sup deviation {largest:.4}"
        ),
    )
}

fn summary_f64(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "infinity" => f64::INFINITY,
        Value::String(s) if s == "-infinity" => f64::NEG_INFINITY,
        other => other.as_f64().expect("numeric summary field"),
    }
}

fn slope_in(out: &Output, lo: f64, hi: f64) -> (bool, f64) {
    let slope = out.summary["slope"].as_f64().unwrap_or(f64::NAN);
    (slope >= lo && slope <= hi, slope)
}

fn strong_rate(level: &Output, breiman: &Output) -> Verdict {
    let (a, sa) = slope_in(level, -1.25, -0.75);
    let (b, sb) = slope_in(breiman, -1.25, -0.75);
    verdict(
        a && b,
        format!("slope level-split {sa:.3}, Breiman {sb:.3} (band [-1.25, -0.75])"),
    )
}

fn weak_rate(out: &Output) -> Verdict {
    let (ok, s) = slope_in(out, -0.75, -0.3);
    verdict(ok, format!("slope {s:.3} (band [-0.75, -0.3])"))
}

fn forest_consistency(out: &Output) -> Verdict {
    let means: Vec<f64> = out.summary["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["mean_mse"].as_f64().unwrap())
        .collect();
    let steps = (means.len() - 1) as f64;
    let factor = (means[0] / means[means.len() - 1]).powf(1.0 / steps);
    verdict(
        factor >= 1.6,
        format!(
            "mean MSE {:?}, average factor per doubling {factor:.3} (min 1.6)",
            means.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn coverage(out: &Output) -> Verdict {
    let s = &out.summary;
    let cov = s["coverage"].as_f64().unwrap();
    let skew = s["residual_skewness"].as_f64().unwrap_or(f64::NAN);
    let kurt = s["residual_excess_kurtosis"].as_f64().unwrap_or(f64::NAN);
    verdict(
        (0.85..=0.99).contains(&cov) && skew.abs() < 0.5 && kurt.abs() < 1.0,
        format!(
            "coverage {cov:.3} (band [0.85, 0.99]), skewness {skew:.3}, excess kurtosis {kurt:.3}, \
             {} degenerate rows",
            s["degenerate_rows"]
        ),
    )
}

fn xor_bound(out: &Output) -> Verdict {
    let dims = out.summary["dimensions"].as_array().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut previous = 0.0;
    for dim in dims {
        let d = dim["d"].as_f64().unwrap();
        let emp = dim["miss_probability"].as_f64().unwrap();
        let exact = dim["miss_probability_exact"].as_f64().unwrap();
        ok &= (emp - exact).abs() <= 0.02 && emp >= previous;
        if d >= 64.0 {
            ok &= emp >= 1.0 - 4.0 / d.sqrt();
        }
        previous = emp;
        parts.push(format!("d={d}: {emp:.4} vs exact {exact:.4}"));
    }
    verdict(ok, parts.join(", "))
}

fn diagnostics(interaction: &Output, xor: &Output, one_sparse: &Output) -> Verdict {
    let c_inter = summary_f64(&interaction.summary["C_submodular"]);
    let c_xor = summary_f64(&xor.summary["C_submodular"]);
    let beta_xor = summary_f64(&xor.summary["beta_split"]);
    let beta_one = summary_f64(&one_sparse.summary["beta_split"]);
    let zeta_one = summary_f64(&one_sparse.summary["zeta"]);
    verdict(
        (c_inter - 2.0).abs() <= 1e-9
            && c_xor == f64::INFINITY
            && beta_xor <= 0.0
            && (beta_one - 0.25).abs() <= 1e-12
            && (zeta_one - 1.0).abs() <= 1e-12,
        format!(
            "interaction C={c_inter}, xor C={c_xor} beta={beta_xor}, one-sparse beta={beta_one} zeta={zeta_one}"
        ),
    )
}

struct Run {
    name: &'static str,
    kind: ExperimentKind,
    text: &'static str,
}

const RUNS: [Run; 10] = [
    Run {
        name: "rate_strong_level",
        kind: ExperimentKind::Rate,
        text: include_str!("../../../configs/rate_strong_level.json"),
    },
    Run {
        name: "rate_strong_breiman",
        kind: ExperimentKind::Rate,
        text: include_str!("../../../configs/rate_strong_breiman.json"),
    },
    Run {
        name: "rate_weak",
        kind: ExperimentKind::Rate,
        text: include_str!("../../../configs/rate_weak.json"),
    },
    Run {
        name: "rate_forest",
        kind: ExperimentKind::Rate,
        text: include_str!("../../../configs/rate_forest.json"),
    },
    Run {
        name: "coverage",
        kind: ExperimentKind::Coverage,
        text: include_str!("../../../configs/coverage.json"),
    },
    Run {
        name: "xor",
        kind: ExperimentKind::Xor,
        text: include_str!("../../../configs/xor.json"),
    },
    Run {
        name: "diagnose_interaction",
        kind: ExperimentKind::Diagnose,
        text: include_str!("../../../configs/diagnose_interaction.json"),
    },
    Run {
        name: "diagnose_xor",
        kind: ExperimentKind::Diagnose,
        text: include_str!("../../../configs/diagnose_xor.json"),
    },
    Run {
        name: "diagnose_one_sparse",
        kind: ExperimentKind::Diagnose,
        text: include_str!("../../../configs/diagnose_one_sparse.json"),
    },
    Run {
        name: "oracle_table",
        kind: ExperimentKind::OracleTable,
        text: include_str!("../../../configs/oracle_table.json"),
    },
];

fn report(id: usize, title: &str, started: Instant, v: Verdict) -> bool {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] {id:>2} {title}: {} ({:.1}s)",
        v.detail,
        started.elapsed().as_secs_f64()
    );
    v.pass
}

fn main() -> ExitCode {
    let mut ok = true;

    let t = Instant::now();
    ok &= report(
        1,
        "oracle vs brute-force enumeration",
        t,
        oracle_matches_enumeration(),
    );
    let t = Instant::now();
    ok &= report(
        2,
        "population exact recovery",
        t,
        population_recovers_targets(),
    );
    let t = Instant::now();
    ok &= report(
        3,
        "empirical criteria vs definitions",
        t,
        empirical_criteria_exact(),
    );
    let t = Instant::now();
    ok &= report(4, "decomposition identities", t, decomposition_identities());
    let t = Instant::now();
    ok &= report(5, "concentration sanity", t, concentration());

    let mut outputs = Vec::new();
    let mut timings = Vec::new();
    for run in &RUNS {
        let t = Instant::now();
        let out = run_with_threads(run.kind, run.text, None, Some(1))
            .unwrap_or_else(|e| panic!("{}: {e}", run.name));
        timings.push(t.elapsed());
        outputs.push(out);
    }
    let secs = |idx: &[usize]| idx.iter().map(|&i| timings[i].as_secs_f64()).sum::<f64>();
    let line = |id: usize, title: &str, idx: &[usize], v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2} {title}: {} ({:.1}s)", v.detail, secs(idx));
        v.pass
    };
    ok &= line(
        6,
        "strong-sparsity rate",
        &[0, 1],
        strong_rate(&outputs[0], &outputs[1]),
    );
    ok &= line(7, "weak-relevance rate", &[2], weak_rate(&outputs[2]));
    ok &= line(
        8,
        "honest forest consistency",
        &[3],
        forest_consistency(&outputs[3]),
    );
    ok &= line(
        9,
        "confidence interval coverage",
        &[4],
        coverage(&outputs[4]),
    );
    ok &= line(10, "xor lower bound", &[5], xor_bound(&outputs[5]));
    ok &= line(
        11,
        "assumption diagnostics",
        &[6, 7, 8],
        diagnostics(&outputs[6], &outputs[7], &outputs[8]),
    );

    let t = Instant::now();
    let mut differing = Vec::new();
    for (run, base) in RUNS.iter().zip(&outputs) {
        for threads in [4, 8] {
            let other = run_with_threads(run.kind, run.text, None, Some(threads))
                .unwrap_or_else(|e| panic!("{}: {e}", run.name));
            if other.rows != base.rows {
                differing.push(format!("{} at {threads} threads", run.name));
            }
        }
    }
    let detail = if differing.is_empty() {
        format!("{} runs byte-identical at 1, 4 and 8 threads", RUNS.len())
    } else {
        format!("rows.csv differs: {}", differing.join(", "))
    };
    ok &= report(
        12,
        "determinism across thread counts",
        t,
        verdict(differing.is_empty(), detail),
    );

    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
