//! Named planning strategies behind one interface.
//!
//! Both strategies honor the same preference rule (objective count, then
//! travel distance, then stop sequence), so their answers are comparable
//! vertex for vertex.  The exhaustive one exists as the reference the
//! search is checked against; it is exponential in the budget and only
//! suitable for small networks.

use super::{
    plan, PlanOptions, PlanStats, PlannedRoute, Precomputed, TransitGraph, VertexId,
};
use crate::oracle::maxrknnt_bruteforce;
use crate::Error;

/// Everything a planning strategy may consult.
pub struct PlanContext<'a> {
    pub graph: &'a TransitGraph,
    pub pre: &'a Precomputed,
}

/// A budget-bounded route-planning strategy selectable by name.
pub trait PlanMethod: Send + Sync {
    fn name(&self) -> &'static str;
    /// One line for listings.
    fn describe(&self) -> &'static str;
    fn run(
        &self,
        ctx: &PlanContext<'_>,
        origin: VertexId,
        dest: VertexId,
        tau: f64,
        opts: &PlanOptions,
    ) -> Result<(Option<PlannedRoute>, PlanStats), Error>;
}

struct LabelSearch;

impl PlanMethod for LabelSearch {
    fn name(&self) -> &'static str {
        "search"
    }

    fn describe(&self) -> &'static str {
        "best-first label search over the precomputation (the default; also answers to `pre`)"
    }

    fn run(
        &self,
        ctx: &PlanContext<'_>,
        origin: VertexId,
        dest: VertexId,
        tau: f64,
        opts: &PlanOptions,
    ) -> Result<(Option<PlannedRoute>, PlanStats), Error> {
        plan(ctx.graph, ctx.pre, origin, dest, tau, opts)
    }
}

struct Exhaustive;

impl PlanMethod for Exhaustive {
    fn name(&self) -> &'static str {
        "bruteforce"
    }

    fn describe(&self) -> &'static str {
        "enumerate every feasible simple path; reference answer, small networks only"
    }

    fn run(
        &self,
        ctx: &PlanContext<'_>,
        origin: VertexId,
        dest: VertexId,
        tau: f64,
        opts: &PlanOptions,
    ) -> Result<(Option<PlannedRoute>, PlanStats), Error> {
        // Mirror the search's input validation so callers can swap methods
        // without the error contract changing.
        let n = ctx.graph.vertex_count();
        if origin as usize >= n || dest as usize >= n {
            return Err(Error::UnknownVertex(origin.max(dest)));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::BadBudget(tau));
        }
        if ctx.pre.sets.len() != n || ctx.pre.m_psi.n() != n {
            return Err(Error::Mismatch(format!(
                "precomputation covers {} vertices, graph has {n}",
                ctx.pre.sets.len()
            )));
        }
        let best = maxrknnt_bruteforce(
            ctx.graph,
            ctx.pre,
            origin,
            dest,
            tau,
            opts.objective,
            opts.semantics,
        );
        Ok((best, PlanStats::default()))
    }
}

static METHODS: [&dyn PlanMethod; 2] = [&LabelSearch, &Exhaustive];

/// Every registered strategy, the default first.
pub fn all() -> &'static [&'static dyn PlanMethod] {
    &METHODS
}

/// Look a strategy up by its registered name.  `pre` is an accepted alias
/// for the label search: tooling often names the strategy after the
/// precomputation it runs on.
pub fn by_name(name: &str) -> Result<&'static dyn PlanMethod, Error> {
    let canonical = if name == "pre" { "search" } else { name };
    all()
        .iter()
        .find(|m| m.name() == canonical)
        .copied()
        .ok_or_else(|| Error::UnknownMethod(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::corridor_network;
    use crate::model::Semantics;
    use crate::planner::Objective;

    #[test]
    fn every_method_is_reachable_by_its_name() {
        for m in all() {
            assert_eq!(by_name(m.name()).unwrap().name(), m.name());
            assert!(!m.describe().is_empty());
        }
        assert_eq!(by_name("pre").unwrap().name(), "search");
        assert!(matches!(by_name("no-such"), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn methods_agree_on_the_corridor_scenario() {
        let fx = corridor_network();
        let ctx = PlanContext { graph: &fx.graph, pre: &fx.pre };
        for objective in [Objective::Max, Objective::Min] {
            for semantics in [Semantics::Exists, Semantics::ForAll] {
                let opts = PlanOptions::new(objective, semantics);
                let mut answers = Vec::new();
                for m in all() {
                    let (route, _) =
                        m.run(&ctx, fx.origin, fx.dest, fx.budget, &opts).unwrap();
                    answers.push((m.name(), route.expect("corridor is feasible")));
                }
                let (_, first) = &answers[0];
                for (name, route) in &answers[1..] {
                    assert_eq!(route.vertices, first.vertices, "{name}");
                    assert_eq!(route.omega_ids(semantics), first.omega_ids(semantics), "{name}");
                }
            }
        }
    }

    #[test]
    fn methods_share_the_error_contract() {
        let fx = corridor_network();
        let ctx = PlanContext { graph: &fx.graph, pre: &fx.pre };
        let opts = PlanOptions::new(Objective::Max, Semantics::Exists);
        for m in all() {
            assert!(matches!(
                m.run(&ctx, 99, fx.dest, fx.budget, &opts),
                Err(Error::UnknownVertex(99))
            ));
            assert!(matches!(
                m.run(&ctx, fx.origin, fx.dest, -1.0, &opts),
                Err(Error::BadBudget(_))
            ));
        }
    }
}
