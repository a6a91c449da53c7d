//! Named query strategies behind one interface.
//!
//! Every strategy answers the same question and must return the same
//! answer; they differ in how they get there.  The command-line layer picks
//! one by name, and the test suites run them against each other.

use std::time::Instant;

use super::{rknnt, rknnt_divide_conquer, QueryOptions, QueryStats};
use crate::index::{RrTree, TrTree};
use crate::model::{QueryRoute, RknntResult, Route, RouteId, Semantics, Transition};
use crate::oracle::rknnt_bruteforce;
use crate::Error;

/// Everything a strategy may consult.
pub struct QueryContext<'a> {
    pub routes: &'a [Route],
    pub rr: &'a RrTree,
    pub tr: &'a TrTree,
    /// Route to evaluate against as if it did not exist.
    pub masked_route: Option<RouteId>,
}

impl QueryContext<'_> {
    fn options(&self, voronoi: bool) -> QueryOptions {
        QueryOptions { voronoi, masked_route: self.masked_route }
    }
}

/// A reverse-k-nearest-neighbor strategy selectable by name.
pub trait QueryMethod: Send + Sync {
    fn name(&self) -> &'static str;
    /// One line for listings.
    fn describe(&self) -> &'static str;
    fn run(
        &self,
        ctx: &QueryContext<'_>,
        query: &QueryRoute,
        k: u32,
        semantics: Semantics,
    ) -> (RknntResult, QueryStats);
}

struct FilterRefine;

impl QueryMethod for FilterRefine {
    fn name(&self) -> &'static str {
        "filter-refine"
    }

    fn describe(&self) -> &'static str {
        "index pipeline, filtering on individual stops only"
    }

    fn run(
        &self,
        ctx: &QueryContext<'_>,
        query: &QueryRoute,
        k: u32,
        semantics: Semantics,
    ) -> (RknntResult, QueryStats) {
        rknnt(ctx.rr, ctx.tr, query, k, semantics, &ctx.options(false))
    }
}

struct Coverage;

impl QueryMethod for Coverage {
    fn name(&self) -> &'static str {
        "voronoi"
    }

    fn describe(&self) -> &'static str {
        "index pipeline plus joint stop-coverage filtering (the default)"
    }

    fn run(
        &self,
        ctx: &QueryContext<'_>,
        query: &QueryRoute,
        k: u32,
        semantics: Semantics,
    ) -> (RknntResult, QueryStats) {
        rknnt(ctx.rr, ctx.tr, query, k, semantics, &ctx.options(true))
    }
}

struct DivideConquer;

impl QueryMethod for DivideConquer {
    fn name(&self) -> &'static str {
        "divide-conquer"
    }

    fn describe(&self) -> &'static str {
        "one single-stop subquery per query stop, in parallel, results unioned"
    }

    fn run(
        &self,
        ctx: &QueryContext<'_>,
        query: &QueryRoute,
        k: u32,
        semantics: Semantics,
    ) -> (RknntResult, QueryStats) {
        rknnt_divide_conquer(ctx.rr, ctx.tr, query, k, semantics, &ctx.options(true))
    }
}

struct OracleScan;

impl QueryMethod for OracleScan {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn describe(&self) -> &'static str {
        "exhaustive scan, no indexes; the reference the others are checked against"
    }

    fn run(
        &self,
        ctx: &QueryContext<'_>,
        query: &QueryRoute,
        k: u32,
        semantics: Semantics,
    ) -> (RknntResult, QueryStats) {
        let started = Instant::now();
        let routes: Vec<Route> = match ctx.masked_route {
            None => ctx.routes.to_vec(),
            Some(m) => ctx.routes.iter().filter(|r| r.id != m).cloned().collect(),
        };
        // Read transitions back from the live index so dynamic updates are
        // reflected, exactly as the pipeline sees them.
        let transitions: Vec<Transition> = ctx.tr.transitions().cloned().collect();
        let result = rknnt_bruteforce(&routes, &transitions, query, k, semantics);
        let stats = QueryStats {
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            result_size: result.transitions.len(),
            candidates: transitions.len() * 2,
            ..QueryStats::default()
        };
        (result, stats)
    }
}

static METHODS: [&dyn QueryMethod; 4] = [&Coverage, &FilterRefine, &DivideConquer, &OracleScan];

/// Every registered strategy, the default first.
pub fn all() -> &'static [&'static dyn QueryMethod] {
    &METHODS
}

/// Look a strategy up by its registered name.
pub fn by_name(name: &str) -> Result<&'static dyn QueryMethod, Error> {
    all()
        .iter()
        .find(|m| m.name() == name)
        .copied()
        .ok_or_else(|| Error::UnknownMethod(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::crossing_routes;
    use crate::index::{RrTree, TrTree};

    #[test]
    fn every_method_is_reachable_by_its_name() {
        for m in all() {
            assert_eq!(by_name(m.name()).unwrap().name(), m.name());
            assert!(!m.describe().is_empty());
        }
        assert!(matches!(by_name("no-such"), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn all_methods_agree_on_the_crossing_scenario() {
        let fx = crossing_routes();
        let rr = RrTree::build(&fx.routes).unwrap();
        let tr = TrTree::build(&fx.transitions).unwrap();
        let ctx = QueryContext { routes: &fx.routes, rr: &rr, tr: &tr, masked_route: None };
        for k in [1, 2, 4] {
            for semantics in [Semantics::Exists, Semantics::ForAll] {
                let (want, _) = by_name("oracle").unwrap().run(&ctx, &fx.query, k, semantics);
                for m in all() {
                    let (got, stats) = m.run(&ctx, &fx.query, k, semantics);
                    assert_eq!(got.transitions, want.transitions, "{} k={k}", m.name());
                    assert_eq!(got.endpoint_hits, want.endpoint_hits, "{} k={k}", m.name());
                    assert_eq!(stats.result_size, got.transitions.len());
                }
            }
        }
    }

    #[test]
    fn masking_reaches_every_method() {
        let fx = crossing_routes();
        let rr = RrTree::build(&fx.routes).unwrap();
        let tr = TrTree::build(&fx.transitions).unwrap();
        let ctx = QueryContext {
            routes: &fx.routes,
            rr: &rr,
            tr: &tr,
            masked_route: Some(RouteId(1)),
        };
        let (want, _) = by_name("oracle").unwrap().run(&ctx, &fx.query, 2, Semantics::Exists);
        for m in all() {
            let (got, _) = m.run(&ctx, &fx.query, 2, Semantics::Exists);
            assert_eq!(got.transitions, want.transitions, "{}", m.name());
        }
    }
}
