mod common;

use causal_rules::search::SearchStats;
use causal_rules::{
    discover_topk, ingest_csv, Dataset, Pool, RoleSpec, ScoreParams, Scorer, SearchConfig,
    StratumIndex,
};

const ACTIONABLE: [&str; 7] = [
    "class", "pname", "sex", "age", "sib_sp", "par_ch", "embarked",
];

fn load() -> (Dataset, Pool, StratumIndex) {
    let roles = RoleSpec::new().target("survived").actionable(ACTIONABLE);
    let ds = ingest_csv(common::titanic_path(), &roles).unwrap();
    let pool = Pool::from_dataset(&ds, 8).unwrap();
    let idx = StratumIndex::build(&ds).unwrap();
    (ds, pool, idx)
}

fn stats(ds: &Dataset, pool: &Pool, idx: &StratumIndex, k: usize, gamma: f64) -> SearchStats {
    let cfg = SearchConfig::new(ScoreParams::new("1")).k(k).gamma(gamma);
    discover_topk(ds, idx, pool, &cfg).unwrap().stats
}

#[test]
fn ingests_every_passenger() {
    let (ds, _, idx) = load();
    assert_eq!(ds.n_rows(), 891);
    assert_eq!(idx.observed_strata_count(), 1);
    let age = ds.column_by_name("age").unwrap();
    assert_eq!((0..891).filter(|&r| age.is_missing(r)).count(), 177);
}

#[test]
fn top_rule_counts() {
    let (ds, pool, idx) = load();
    let class = pool
        .props()
        .iter()
        .find(|p| p.to_string() == "class <= 2")
        .unwrap()
        .index;
    let female = pool
        .props()
        .iter()
        .find(|p| p.to_string() == "sex = female")
        .unwrap()
        .index;
    let rule = pool.rule(&[class, female]).unwrap();
    let scorer = Scorer::new(&ds, &idx, &ScoreParams::new("1")).unwrap();
    let t = scorer.total_counts(&pool.extension(&rule));
    assert_eq!((t.a, t.n_sigma(), t.n1(), t.n()), (161, 170, 342, 891));
    // single stratum with corrected weight 1
    let by_hand = 162.0 / 172.0 - 182.0 / 723.0 - 1.0 / 172f64.sqrt() - 1.0 / 723f64.sqrt();
    assert!((scorer.reliable(&pool.extension(&rule)).unwrap() - by_hand).abs() < 1e-12);
}

#[test]
fn reproduces_the_published_top_three() {
    let (ds, pool, idx) = load();
    let cfg = SearchConfig::new(ScoreParams::new("1")).k(3);
    let top = discover_topk(&ds, &idx, &pool, &cfg).unwrap().top;
    let got: Vec<(&str, f64, f64)> = top
        .iter()
        .map(|s| (s.description.as_str(), s.reliable, s.coverage))
        .collect();
    let want = [
        ("class <= 2 && sex = female", 0.576, 0.1907),
        ("class <= 2 && sex = female && par_ch <= 2", 0.573, 0.1885),
        ("class <= 2 && sex = female && sib_sp <= 2", 0.572, 0.1874),
    ];
    for ((d, r, c), (wd, wr, wc)) in got.iter().zip(want) {
        assert_eq!(*d, wd);
        assert!((r - wr).abs() <= 0.01, "{d}: {r}");
        assert!((c - wc).abs() <= 0.003, "{d}: {c}");
    }
}

#[test]
fn effort_follows_k_and_gamma() {
    let (ds, pool, idx) = load();
    let by_k: Vec<u64> = [1, 10, 100]
        .iter()
        .map(|&k| stats(&ds, &pool, &idx, k, 1.0).nodes_expanded)
        .collect();
    assert!(by_k.windows(2).all(|w| w[0] <= w[1]), "{by_k:?}");
    let by_gamma: Vec<u64> = [1.0, 0.8, 0.5]
        .iter()
        .map(|&g| stats(&ds, &pool, &idx, 1, g).nodes_expanded)
        .collect();
    assert!(by_gamma.windows(2).all(|w| w[0] >= w[1]), "{by_gamma:?}");
}
