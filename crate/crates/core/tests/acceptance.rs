// SPDX-License-Identifier: Apache-2.0
//! Acceptance suite. Every criterion prints one PASS/FAIL line to stderr
//! (bypassing output capture) and the test fails if any criterion fails.

use std::io::Write;
use std::time::Instant;

use dagsmooth::rng::{derive_seed, stream};
use dagsmooth::selection::{select_bh, select_fdr_dagger, water_fill_weights};
use dagsmooth::simulation::{
    gen_graph, gen_pvalues, gen_truth, run_benchmark, run_benchmark_detailed, AlternativeScheme, BenchmarkConfig,
    CellTrials, GraphRecipe, NullModel, Selector, STANDARD_ALPHAS,
};
use dagsmooth::validation::{assess, check_superuniformity, reference_equivalence, ErrorTarget, DEFAULT_GRID};
use dagsmooth::{Dag, Method, PValues, Result, SmoothingSpec};
use rand::Rng;

type Outcome = Result<(bool, String)>;

fn line(text: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

fn binary_tree(depth: usize) -> Dag {
    gen_graph(&GraphRecipe::DeepTree { depth, branching: 2 }, 0).unwrap()
}

fn chain(n: usize) -> Dag {
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    Dag::new(n, &edges).unwrap()
}

fn cell<'a>(cells: &'a [CellTrials], recipe: &str, smoothing: &str, method: Method, alpha: f64) -> &'a CellTrials {
    cells
        .iter()
        .find(|c| {
            c.key.recipe == recipe && c.key.smoothing == smoothing && c.key.method == method && c.key.alpha == alpha
        })
        .unwrap_or_else(|| panic!("no cell {recipe}/{smoothing}/{method}/{alpha}"))
}

/// Mean and standard error of `a - b` over paired trials.
fn paired(a: &CellTrials, b: &CellTrials) -> (f64, f64) {
    let d: Vec<f64> = a.trials.iter().zip(&b.trials).map(|(x, y)| x.power - y.power).collect();
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn mean_power(c: &CellTrials) -> f64 {
    c.trials.iter().map(|t| t.power).sum::<f64>() / c.trials.len() as f64
}

fn superuniformity() -> Outcome {
    let specs = [
        SmoothingSpec::fisher(),
        SmoothingSpec::Stouffer,
        SmoothingSpec::Tippett,
        SmoothingSpec::Ruger { k: 2 },
        SmoothingSpec::generalized_mean(1.0),
        SmoothingSpec::generalized_mean(0.5).with_monte_carlo(2_000_000, 17),
    ];
    let graphs = [("chain5", chain(5)), ("tree3", binary_tree(3))];
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut failures = Vec::new();
    for (gi, (name, dag)) in graphs.iter().enumerate() {
        for (si, spec) in specs.iter().enumerate() {
            let seed = derive_seed(101, &[gi as u64, si as u64]);
            let rep = check_superuniformity(dag, spec, NullModel::Independent, 200_000, seed, &DEFAULT_GRID)?;
            if let Some(w) = rep.worst() {
                if w.frequency - w.bound > worst.0 {
                    let z = (w.frequency - w.c) / (w.c * (1.0 - w.c) / 200_000.0).sqrt();
                    let what = format!("{spec} on {name}, node {} (leaf: {}), c {}, z {z:.2}", w.node, dag.is_leaf(w.node), w.c);
                    worst = (w.frequency - w.bound, what);
                }
            }
            if !rep.pass {
                failures.push(format!("{spec} on {name}"));
            }
        }
    }
    Ok((failures.is_empty(), format!("12 reports, worst excess over bound {:.2e} at {}; failing {failures:?}", worst.0, worst.1)))
}

fn tree5_config() -> BenchmarkConfig {
    BenchmarkConfig {
        recipes: vec![GraphRecipe::DeepTree { depth: 5, branching: 2 }],
        schemes: vec![AlternativeScheme::global_normal()],
        null_model: NullModel::Independent,
        smoothings: vec![SmoothingSpec::fisher(), SmoothingSpec::Stouffer],
        selectors: vec![Selector::new(Method::FwerMg), Selector::new(Method::Fdx), Selector::new(Method::FdrDagger)],
        alphas: vec![0.05, 0.1, 0.2],
        trials: 500,
        seed: 202,
        resample_graph: false,
    }
}

fn error_criterion(target: ErrorTarget, keep: impl Fn(&str, Method) -> bool) -> Outcome {
    let summaries = run_benchmark(&tree5_config())?;
    let chosen: Vec<_> = summaries.into_iter().filter(|s| keep(&s.key.smoothing, s.key.method)).collect();
    let rep = assess(&chosen, target);
    let detail = rep
        .cells
        .iter()
        .map(|c| format!("{}+{}@{}: {:.4} <= {:.4}", c.key.method, c.key.smoothing, c.key.alpha, c.estimate, c.bound))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((rep.pass && !rep.cells.is_empty(), detail))
}

fn power_sweep() -> Result<Vec<CellTrials>> {
    run_benchmark_detailed(&BenchmarkConfig {
        recipes: vec![
            GraphRecipe::DeepTree { depth: 6, branching: 2 },
            GraphRecipe::bipartite(),
            GraphRecipe::hourglass(),
        ],
        schemes: vec![AlternativeScheme::global_normal()],
        null_model: NullModel::Independent,
        smoothings: vec![SmoothingSpec::None, SmoothingSpec::fisher()],
        selectors: vec![
            Selector::new(Method::FwerMg),
            Selector::new(Method::Fdx),
            Selector::new(Method::FdrDagger),
            Selector::new(Method::Bh),
        ],
        alphas: STANDARD_ALPHAS.to_vec(),
        trials: 100,
        seed: 505,
        resample_graph: false,
    })
}

const SWEEP_RECIPES: [&str; 3] = ["deep_tree:6:2", "bipartite:100:100:20", "hourglass:30:10:30:0.2"];

fn power_gains(cells: &[CellTrials]) -> Outcome {
    let mut failures = Vec::new();
    let mut ci = Vec::new();
    for recipe in SWEEP_RECIPES {
        for method in [Method::FwerMg, Method::Fdx, Method::FdrDagger] {
            for &alpha in &STANDARD_ALPHAS {
                let s = cell(cells, recipe, "fisher", method, alpha);
                let u = cell(cells, recipe, "none", method, alpha);
                let (ps, pu) = (mean_power(s), mean_power(u));
                if ps <= pu {
                    failures.push(format!("{recipe}/{method}@{alpha}: {ps:.4} vs {pu:.4}"));
                }
                if alpha == 0.1 {
                    let (d, se) = paired(s, u);
                    let lo = d - 1.96 * se;
                    ci.push(format!("{recipe}/{method} diff {d:.3} lo {lo:.3}"));
                    if lo <= 0.0 {
                        failures.push(format!("{recipe}/{method}@0.1 CI [{lo:.4}, {:.4}] touches 0", d + 1.96 * se));
                    }
                }
            }
        }
    }
    Ok((failures.is_empty(), format!("alpha 0.1: {}; failing {failures:?}", ci.join(", "))))
}

fn dagger_vs_bh(cells: &[CellTrials]) -> Outcome {
    let mut failures = Vec::new();
    let mut closest = f64::INFINITY;
    for recipe in SWEEP_RECIPES {
        for &alpha in &STANDARD_ALPHAS {
            let d = cell(cells, recipe, "fisher", Method::FdrDagger, alpha);
            let b = cell(cells, recipe, "none", Method::Bh, alpha);
            let (diff, se) = paired(d, b);
            closest = closest.min(diff + se);
            if diff < -se {
                failures.push(format!("{recipe}@{alpha}: diff {diff:.4}, se {se:.4}"));
            }
        }
    }
    Ok((failures.is_empty(), format!("min (diff + se) {closest:.4}; failing {failures:?}")))
}

fn edgeless_equivalence() -> Outcome {
    let dag = Dag::new(50, &[])?;
    let scheme = AlternativeScheme::global_normal().with_nonnull_prob(0.3);
    let mut mismatches = 0;
    for i in 0..100u64 {
        let mut rng = stream(707, &[i]);
        let truth = gen_truth(&dag, &scheme, &mut rng);
        let p = gen_pvalues(&dag, &truth, &scheme, NullModel::Independent, &mut rng);
        for &alpha in &STANDARD_ALPHAS {
            if select_fdr_dagger(&dag, &p, alpha)?.rejected != select_bh(&p, alpha)?.rejected {
                mismatches += 1;
            }
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches over 100 instances x {} alphas", STANDARD_ALPHAS.len())))
}

fn random_small_graph(rng: &mut impl Rng, seed: u64) -> Result<Dag> {
    let recipe = match rng.random_range(0..5) {
        0 => GraphRecipe::DeepTree { depth: rng.random_range(1..6), branching: rng.random_range(1..4) },
        1 => GraphRecipe::Bipartite { roots: rng.random_range(1..8), leaves: 10, fan_out: rng.random_range(1..5) },
        2 => GraphRecipe::Hourglass { roots: 6, middle: 3, leaves: 6, edge_prob: 0.3 },
        3 => GraphRecipe::LayeredRandom { layers: rng.random_range(1..5), width: 6, parents: rng.random_range(1..4) },
        _ => {
            let n = rng.random_range(1..20);
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|_| rng.random_bool(0.2))
                .collect();
            return Dag::new(n, &edges);
        }
    };
    gen_graph(&recipe, seed)
}

fn water_fill_conservation() -> Outcome {
    let mut rng = stream(808, &[]);
    let mut done = 0;
    let mut worst = 0.0f64;
    let mut attempt = 0u64;
    while done < 1000 {
        attempt += 1;
        let dag = random_small_graph(&mut rng, derive_seed(808, &[attempt]))?;
        let n = dag.node_count();
        let prob: f64 = rng.random_range(0.0..0.6);
        let mut r: Vec<bool> = (0..n).map(|_| rng.random_bool(prob)).collect();
        for &v in dag.topological_order().iter().rev() {
            if r[v] {
                for &q in dag.parents(v) {
                    r[q] = true;
                }
            }
        }
        if dag.leaves().iter().all(|&l| r[l]) {
            continue;
        }
        let g = water_fill_weights(&dag, &r)?;
        worst = worst.max((g.iter().sum::<f64>() - 1.0).abs());
        done += 1;
    }
    Ok((worst <= 1e-12, format!("max |sum g - 1| = {worst:.2e} over 1000 pairs")))
}

fn dependence() -> Outcome {
    let config = BenchmarkConfig {
        recipes: vec![GraphRecipe::layered_random()],
        schemes: vec![AlternativeScheme::global_beta(), AlternativeScheme::incremental_beta()],
        null_model: NullModel::GaussianCopula,
        smoothings: vec![SmoothingSpec::conservative_stouffer(), SmoothingSpec::fisher()],
        selectors: vec![Selector::new(Method::FdrDagger), Selector::new(Method::Fdx)],
        alphas: vec![0.05, 0.1, 0.2],
        trials: 100,
        seed: 909,
        resample_graph: false,
    };
    config.validate()?;
    let summaries = run_benchmark(&config)?;
    let pick = |smoothing: &str, method: Method| -> Vec<_> {
        summaries.iter().filter(|s| s.key.smoothing == smoothing && s.key.method == method).cloned().collect()
    };
    let cs = SmoothingSpec::conservative_stouffer().to_string();
    let fdr = assess(&pick(&cs, Method::FdrDagger), ErrorTarget::Fdr);
    let fdx = assess(&pick(&cs, Method::Fdx), ErrorTarget::Fdx);
    let fisher_fdr = assess(&pick("fisher", Method::FdrDagger), ErrorTarget::Fdr);
    let fisher_fdx = assess(&pick("fisher", Method::Fdx), ErrorTarget::Fdx);
    let worst = |r: &dagsmooth::validation::ErrorControlReport| {
        r.cells.iter().map(|c| c.estimate - c.key.alpha).fold(f64::NEG_INFINITY, f64::max)
    };
    let detail = format!(
        "cons-stouffer fdr {} (max excess {:.3}), fdx {} (max excess {:.3}); fisher report: fdr {}, fdx {} (max excess {:.3})",
        fdr.pass,
        worst(&fdr),
        fdx.pass,
        worst(&fdx),
        fisher_fdr.pass,
        fisher_fdx.pass,
        worst(&fisher_fdx)
    );
    Ok((fdr.pass && fdx.pass, detail))
}

fn reference_equivalence_criterion() -> Outcome {
    let mut rng = stream(1010, &[]);
    let mut unequal = Vec::new();
    let mut rejected = 0usize;
    for i in 0..100u64 {
        let dag = random_small_graph(&mut rng, derive_seed(1010, &[i]))?;
        let n = dag.node_count();
        let p: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..0.01) } else { rng.random::<f64>() })
            .collect();
        let alpha = rng.random_range(0.01..0.3);
        let gamma = rng.random_range(0.0..0.3);
        let p = PValues::new(p)?;
        let rep = reference_equivalence(&dag, &p, alpha, gamma)?;
        rejected += select_fdr_dagger(&dag, &p, alpha)?.len();
        if !rep.equal {
            unequal.push(format!("instance {i}: {:?}", rep.diffs));
        }
    }
    Ok((unequal.is_empty(), format!("100 instances, {rejected} DAGGER rejections in total; unequal {unequal:?}")))
}

fn layers_sweep() -> Outcome {
    let config = BenchmarkConfig {
        recipes: vec![GraphRecipe::layered_random()],
        schemes: (1..=4).map(AlternativeScheme::depth_layers).collect(),
        null_model: NullModel::Independent,
        smoothings: vec![
            SmoothingSpec::None,
            SmoothingSpec::Fisher { support: dagsmooth::Support::SelfPlusChildren },
            SmoothingSpec::fisher(),
        ],
        selectors: vec![Selector::new(Method::FdrDagger), Selector::new(Method::Fdx)],
        alphas: vec![0.05],
        trials: 100,
        seed: 1111,
        resample_graph: false,
    };
    let summaries = run_benchmark(&config)?;
    let power = |scheme: &str, smoothing: &str, method: Method| {
        summaries
            .iter()
            .find(|s| s.key.scheme == scheme && s.key.smoothing == smoothing && s.key.method == method)
            .map(|s| s.power)
            .unwrap()
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for method in [Method::FdrDagger, Method::Fdx] {
        let diffs: Vec<f64> = (1..=4)
            .map(|k| {
                let scheme = format!("layers:{k}");
                power(&scheme, "fisher", method) - power(&scheme, "none", method)
            })
            .collect();
        let ranks: Vec<usize> = (1..=4)
            .map(|k| {
                let scheme = format!("layers:{k}");
                let me = power(&scheme, "fisher", method);
                1 + ["none", "fisher:children"].iter().filter(|s| power(&scheme, s, method) > me).count()
            })
            .collect();
        pass &= diffs.windows(2).all(|w| w[1] >= w[0]);
        detail.push(format!(
            "{method}: descendants - none = [{}], rank among 3 = {ranks:?}",
            diffs.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok((pass, detail.join("; ")))
}

#[test]
fn acceptance_criteria() {
    line("");
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let status = match &out {
            Ok((true, _)) => "PASS",
            _ => "FAIL",
        };
        let detail = match &out {
            Ok((_, d)) => d.clone(),
            Err(e) => format!("error: {e}"),
        };
        line(&format!("[{status}] criterion {id:>2} {name} ({secs:.1}s): {detail}"));
        results.push((id, name, out));
    };

    run(1, "super-uniformity of smoothed nulls", &superuniformity);
    run(2, "FWER control, MG + Fisher", &|| {
        error_criterion(ErrorTarget::Fwer, |s, m| s == "fisher" && m == Method::FwerMg)
    });
    run(3, "FDR control, DAGGER + Fisher/Stouffer", &|| {
        error_criterion(ErrorTarget::Fdr, |_, m| m == Method::FdrDagger)
    });
    run(4, "FDX control at gamma 0.1", &|| error_criterion(ErrorTarget::Fdx, |s, m| s == "fisher" && m == Method::Fdx));
    let sweep = power_sweep().expect("power sweep");
    run(5, "power gains from Fisher smoothing", &|| power_gains(&sweep));
    run(6, "smoothed DAGGER vs BH", &|| dagger_vs_bh(&sweep));
    run(7, "edgeless DAGGER equals BH", &edgeless_equivalence);
    run(8, "water-filling conservation", &water_fill_conservation);
    run(9, "dependent nulls, conservative Stouffer", &dependence);
    run(10, "reference equivalence", &reference_equivalence_criterion);
    run(11, "smoothing scope vs nonnull depth", &layers_sweep);

    let failed: Vec<String> = results
        .iter()
        .filter(|(_, _, o)| !matches!(o, Ok((true, _))))
        .map(|(id, name, _)| format!("{id} ({name})"))
        .collect();
    line(&format!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len()));
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
