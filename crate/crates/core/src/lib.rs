//! Discovery of conjunctive rules whose causal effect on a target outcome
//! is large and reliably estimated.
//!
//! Rows are split into strata by the values of control variables, the
//! effect of a rule is estimated per stratum with a confidence penalty,
//! and a best-first branch-and-bound search returns the top-k rules.
//!
//! ```
//! use causal_rules::{ingest_reader, discover_topk, Pool, RoleSpec, ScoreParams,
//!                    SearchConfig, StratumIndex};
//!
//! let csv = "treated,age,recovered\n\
//!            yes,30,1\nyes,40,1\nyes,50,1\nno,30,0\nno,40,0\nno,50,1\n";
//! let roles = RoleSpec::new().target("recovered").actionable(["treated", "age"]);
//! let ds = ingest_reader(csv.as_bytes(), &roles).unwrap();
//! let pool = Pool::from_dataset(&ds, 8).unwrap();
//! let idx = StratumIndex::build(&ds).unwrap();
//! let cfg = SearchConfig::new(ScoreParams::new("1").beta(0.5)).k(1);
//! let result = discover_topk(&ds, &idx, &pool, &cfg).unwrap();
//! assert_eq!(result.top[0].description, "treated = yes");
//! ```

pub mod causal;
pub mod data;
mod error;
pub mod lang;
mod rowset;
pub mod score;
pub mod search;

pub use data::{ingest_csv, ingest_reader, Dataset, Role, RoleSpec, StratumIndex};
pub use error::{Error, Result};
pub use lang::{Pool, Proposition, Relation, Rule};
pub use rowset::RowSet;
pub use score::{ScoreParams, ScoredRule, Scorer, StratumCounts};
pub use search::{discover_topk, SearchConfig, SearchResult};

// The guide's snippets run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    pub mod data {}
    #[doc = include_str!("../../../book/src/rules.md")]
    pub mod rules {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    pub mod scoring {}
    #[doc = include_str!("../../../book/src/causal.md")]
    pub mod causal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
