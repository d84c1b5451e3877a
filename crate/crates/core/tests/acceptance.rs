//! Acceptance suite: one PASS/FAIL line per criterion, then a non-zero exit
//! status if any criterion failed.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use causal_rules::causal::experiment::Trial;
use causal_rules::causal::{
    fig4_preset, random_admissible_scm, run_mse_experiment, run_recovery_experiment, Condition,
    ExperimentConfig, NodeRole,
};
use causal_rules::data::ColumnData;
use causal_rules::score::{tau, tight_oest_stratum, wracc};
use causal_rules::{
    discover_topk, ingest_csv, Dataset, Pool, Role, RoleSpec, Rule, ScoreParams, Scorer,
    SearchConfig, StratumCounts, StratumIndex,
};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn titanic() -> (Dataset, Pool, StratumIndex) {
    let roles = RoleSpec::new().target("survived").actionable([
        "class", "pname", "sex", "age", "sib_sp", "par_ch", "embarked",
    ]);
    let ds = ingest_csv(titanic_path(), &roles).unwrap();
    let pool = Pool::from_dataset(&ds, 8).unwrap();
    let idx = StratumIndex::build(&ds).unwrap();
    (ds, pool, idx)
}

fn titanic_reproduction() -> Outcome {
    let (ds, pool, idx) = titanic();
    let tp = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let cfg = SearchConfig::new(ScoreParams::new("1").beta(2.0))
        .k(3)
        .gamma(1.0);
    let top = tp
        .install(|| discover_topk(&ds, &idx, &pool, &cfg))
        .map_err(|e| e.to_string())?
        .top;
    let want = [
        ("class <= 2 && sex = female", 0.576, 0.1907),
        ("class <= 2 && sex = female && par_ch <= 2", 0.573, 0.1885),
        ("class <= 2 && sex = female && sib_sp <= 2", 0.572, 0.1874),
    ];
    let summary: Vec<String> = top
        .iter()
        .map(|s| {
            format!(
                "{} r={:.5} cov={:.4}",
                s.description, s.reliable, s.coverage
            )
        })
        .collect();
    let ok = top.len() == 3
        && top.iter().zip(want).all(|(s, (d, r, c))| {
            s.description == d && (s.reliable - r).abs() <= 0.01 && (s.coverage - c).abs() <= 0.003
        });
    check(ok, summary.join("; "), summary.join("; "))
}

fn tight_bound_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let betas = [0.0, 1.0, 2.0, 2.58];
    let tables = 5000;
    for i in 0..tables {
        let [a, b, c, d] = [(); 4].map(|_| rng.gen_range(0..=12u64));
        let beta = betas[i % betas.len()];
        let got = tight_oest_stratum(&StratumCounts::new(a, b, c, d), beta);
        let want = grid_max_ref(a, b, c, d, beta);
        if got != want {
            return Err(format!("({a},{b},{c},{d}) beta={beta}: {got} != {want}"));
        }
    }
    Ok(format!("{tables} tables, exact equality"))
}

fn bound_and_search_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let datasets = 60;
    let mut pairs = 0usize;
    for n in 0..datasets {
        let (ds, pool) = random_small_problem(&mut rng, 60, 8);
        let idx = StratumIndex::build(&ds).unwrap();
        let scorer = Scorer::new(&ds, &idx, &ScoreParams::new("1")).unwrap();
        let mut rules = all_rules(&pool, 6);
        rules.push(Vec::new());
        let scores: Vec<f64> = rules
            .iter()
            .map(|p| {
                let ext = pool.extension(&pool.rule(p).unwrap());
                reliable_ref(&ds, |r| ext.contains(r), "1", 2.0)
            })
            .collect();
        for r in &rules {
            let bound = scorer.oest(&pool.extension(&pool.rule(r).unwrap()));
            for (phi, &s) in rules.iter().zip(&scores) {
                if r.iter().all(|i| phi.contains(i)) {
                    pairs += 1;
                    if bound < s {
                        return Err(format!(
                            "dataset {n}: oest{r:?} = {bound} < r({phi:?}) = {s}"
                        ));
                    }
                }
            }
        }
        for k in [1, 3] {
            let cfg = SearchConfig::new(ScoreParams::new("1")).k(k);
            let got = discover_topk(&ds, &idx, &pool, &cfg).unwrap().top;
            let want = brute_topk(&ds, &pool, 6, k, |ext| {
                reliable_ref(&ds, |r| ext[r], "1", 2.0)
            });
            let same = got.len() == want.len()
                && got.iter().zip(&want).all(|(g, (w, ws))| {
                    g.rule.props() == w.as_slice()
                        && g.reliable == scorer.reliable(&pool.extension(&g.rule)).unwrap()
                        && (g.reliable - ws).abs() < 1e-12
                });
            if !same {
                return Err(format!(
                    "dataset {n}, k={k}: search and brute force disagree"
                ));
            }
        }
    }
    Ok(format!(
        "{datasets} datasets, {pairs} rule/descendant pairs"
    ))
}

fn adjustment_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    let mut rules = 0;
    for m in 0..100 {
        let scm = random_admissible_scm(&mut rng);
        let g = scm.graph();
        let xs = g.with_role(NodeRole::Actionable);
        if xs.len() > 3 || g.with_role(NodeRole::Control).len() > 2 {
            return Err(format!("model {m} exceeds the size limits"));
        }
        for bits in 1u32..1 << xs.len() {
            let rule: Vec<Condition> = xs
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, &v)| Condition::eq(g.name(v), scm.domain(v)[rng.gen_range(0..2)].clone()))
                .collect();
            match (
                scm.population_effect(&rule),
                scm.interventional_effect(&rule),
            ) {
                (Ok(p), Ok(i)) => {
                    worst = worst.max((p - i).abs());
                    rules += 1;
                }
                (Err(_), Err(_)) => {}
                _ => return Err(format!("model {m}: only one side is defined")),
            }
        }
    }
    let fig4 = fig4_preset()
        .population_effect(&[Condition::eq("X1", "1")])
        .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-10 && (fig4 - 0.19).abs() <= 1e-12,
        format!("100 models, {rules} rules, max gap {worst:.1e}; fig4 X1=1 effect {fig4}"),
        format!("max gap {worst:e}, fig4 X1=1 effect {fig4}"),
    )
}

fn fast_grid() -> ExperimentConfig {
    ExperimentConfig::fast().repetitions(100)
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

fn consistency_and_dominance() -> Outcome {
    let scm = fig4_preset();
    let cfg = fast_grid();
    let (best, effect) = scm.best_rule(cfg.max_depth).map_err(|e| e.to_string())?;
    let errors_at = |n: usize| -> Result<f64, String> {
        let errs = (0..cfg.repetitions)
            .map(|rep| {
                let trial = Trial::draw(&scm, n, cfg.seed, rep).map_err(|e| e.to_string())?;
                let scorer = trial.scorer(cfg.beta, true).map_err(|e| e.to_string())?;
                let rule = trial.find_rule(&best).ok_or("true rule not in the pool")?;
                let r = scorer
                    .reliable(&trial.pool.extension(&rule))
                    .map_err(|e| e.to_string())?;
                Ok((r - effect).abs())
            })
            .collect::<Result<Vec<f64>, String>>()?;
        Ok(median(errs))
    };
    let (small, large) = (cfg.n_grid[0], *cfg.n_grid.last().unwrap());
    let (err_small, err_large) = (errors_at(small)?, errors_at(large)?);
    let mse = run_mse_experiment(&scm, &cfg).map_err(|e| e.to_string())?;
    let reliable = mse.series("reliable");
    let plugin = mse.series("plugin");
    let dominated = reliable.len() == cfg.n_grid.len()
        && reliable
            .iter()
            .zip(&plugin)
            .all(|(r, p)| r.n == p.n && r.value <= p.value);
    let table: Vec<String> = reliable
        .iter()
        .zip(&plugin)
        .map(|(r, p)| format!("N={} {:.4}/{:.4}", r.n, r.value, p.value))
        .collect();
    let msg = format!(
        "median |error| {err_small:.4} at N={small} vs {err_large:.4} at N={large}; MSE reliable/plugin {}",
        table.join(", ")
    );
    check(err_large < err_small && dominated, msg.clone(), msg)
}

fn recovery() -> Outcome {
    let scm = fig4_preset();
    let cfg = fast_grid();
    let report = run_recovery_experiment(&scm, &cfg).map_err(|e| e.to_string())?;
    let reliable = report.series("reliable");
    let wracc = report.series("wracc");
    let plain = report.series("plugin_no_controls");
    let last = reliable.last().ok_or("empty report")?;
    let mut ok = last.n == 3000 && last.value * cfg.repetitions as f64 >= 90.0 - 1e-9;
    let mut table = Vec::new();
    for ((r, w), p) in reliable.iter().zip(&wracc).zip(&plain) {
        ok &= r.value >= w.value && r.value >= p.value;
        table.push(format!(
            "N={} {:.2}/{:.2}/{:.2}",
            r.n, r.value, w.value, p.value
        ));
    }
    let msg = format!("reliable/wracc/plugin_no_controls {}", table.join(", "));
    check(ok, msg.clone(), msg)
}

fn effort_monotonicity() -> Outcome {
    let (ds, pool, idx) = titanic();
    let expanded = |k: usize, gamma: f64| {
        let cfg = SearchConfig::new(ScoreParams::new("1")).k(k).gamma(gamma);
        discover_topk(&ds, &idx, &pool, &cfg).unwrap().stats
    };
    let by_gamma: Vec<u64> = [1.0, 0.8, 0.5]
        .map(|g| expanded(1, g).nodes_expanded)
        .to_vec();
    let by_k: Vec<u64> = [1, 10, 100]
        .map(|k| expanded(k, 1.0).nodes_expanded)
        .to_vec();
    let ok = by_gamma.windows(2).all(|w| w[0] >= w[1]) && by_k.windows(2).all(|w| w[0] <= w[1]);
    let msg = format!("expanded by gamma 1/0.8/0.5: {by_gamma:?}; by k 1/10/100: {by_k:?}");
    check(ok, msg.clone(), msg)
}

/// Eight rows in two strata of four, with the rule `x = 1`.
fn two_strata() -> (Dataset, Pool, StratumIndex) {
    let x = ["1", "1", "0", "0", "1", "1", "0", "0"];
    let z = ["z0", "z0", "z0", "z0", "z1", "z1", "z1", "z1"];
    let y = ["1", "0", "0", "0", "1", "1", "1", "0"];
    let col =
        |v: &[&str]| ColumnData::categorical_from_strings(&v.iter().map(Some).collect::<Vec<_>>());
    let ds = Dataset::from_columns(vec![
        ("x".into(), Role::Actionable, col(&x)),
        ("z".into(), Role::Control, col(&z)),
        ("y".into(), Role::Target, col(&y)),
    ])
    .unwrap();
    let pool = Pool::from_dataset(&ds, 8).unwrap();
    let idx = StratumIndex::build(&ds).unwrap();
    (ds, pool, idx)
}

fn degenerate_inputs() -> Outcome {
    let mut failures = Vec::new();
    let mut expect = |name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol || got.is_nan() {
            failures.push(format!("{name}: {got} vs {want}"));
        }
    };
    let t = |a, b, c, d, beta| tau(&StratumCounts::new(a, b, c, d), beta, true).unwrap();
    expect("tau(9,1,1,9)", t(9, 1, 1, 9, 2.0), 0.08932, 5e-6);
    expect(
        "tau symmetric",
        t(2, 2, 2, 2, 2.0),
        -2.0 / 6f64.sqrt(),
        1e-12,
    );
    expect("tau beta=0", t(1, 0, 0, 1, 0.0), 1.0 / 3.0, 1e-12);
    expect(
        "wracc",
        wracc(&StratumCounts::new(3, 1, 1, 3), false),
        0.125,
        1e-12,
    );
    expect(
        "wracc empty rule",
        wracc(&StratumCounts::new(0, 0, 4, 4), true),
        0.0,
        0.0,
    );
    expect(
        "oest n=4",
        tight_oest_stratum(&StratumCounts::new(2, 1, 0, 1), 2.0),
        -0.5,
        1e-12,
    );
    expect(
        "oest empty",
        tight_oest_stratum(&StratumCounts::new(0, 0, 0, 0), 2.0),
        -2f64.sqrt(),
        1e-12,
    );

    let (ds, pool, idx) = two_strata();
    let x1 = pool
        .props()
        .iter()
        .find(|p| p.to_string() == "x = 1")
        .unwrap()
        .index;
    let ext = pool.extension(&pool.rule(&[x1]).unwrap());
    let plain = Scorer::new(&ds, &idx, &ScoreParams::new("1").beta(0.0).laplace(false)).unwrap();
    expect(
        "stratified plug-in",
        plain.plugin(&ext).unwrap(),
        0.5,
        1e-12,
    );
    expect(
        "beta=0 uncorrected reliable",
        plain.reliable(&ext).unwrap(),
        plain.plugin(&ext).unwrap(),
        0.0,
    );
    let root = pool.extension(&Rule::root());
    if plain.plugin(&root).is_ok() || plain.reliable(&root).is_ok() {
        failures.push("root rule without correction should be undefined".into());
    }

    let corrected = Scorer::new(&ds, &idx, &ScoreParams::new("1")).unwrap();
    let empty = causal_rules::RowSet::empty(ds.n_rows());
    let bound = corrected.oest(&empty);
    if !(bound.is_finite() && bound < 0.0) {
        failures.push(format!("empty extension oest {bound}"));
    }

    // uncorrected, penalty-free reliable equals plug-in on every titanic rule of length <= 2
    let (ds, pool, idx) = titanic();
    let plain = Scorer::new(&ds, &idx, &ScoreParams::new("1").beta(0.0).laplace(false)).unwrap();
    let mut compared = 0;
    for rule in pool.enumerate(2).into_iter().skip(1) {
        let ext = pool.extension(&rule);
        match (plain.reliable(&ext), plain.plugin(&ext)) {
            (Ok(r), Ok(p)) if r == p => compared += 1,
            (Err(_), Err(_)) => {}
            (r, p) => failures.push(format!("{}: {r:?} vs {p:?}", pool.render(&rule, false))),
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "worked examples hold; {compared} titanic rules with reliable == plug-in"
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("titanic reproduction", titanic_reproduction),
        ("tight-bound oracle", tight_bound_oracle),
        (
            "bound admissibility and search exactness",
            bound_and_search_exactness,
        ),
        ("adjustment equals intervention", adjustment_oracle),
        ("consistency and MSE dominance", consistency_and_dominance),
        ("recovery of X1 = 1", recovery),
        ("gamma and k monotonicity", effort_monotonicity),
        ("degenerate inputs", degenerate_inputs),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
