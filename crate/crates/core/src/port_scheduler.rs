//! Throughput lower bound: optimal fractional assignment of µ-ops to
//! eligible ports.
//!
//! The bound minimizes the maximum per-port load over all divisible
//! assignments. By max-flow/min-cut duality, a load vector with makespan
//! `T` is feasible iff for every port subset `S` the µ-ops eligible only
//! within `S` have total occupancy at most `T·|S|`, so the optimum is
//!
//! ```text
//! T_port = max over S of occ(µ-ops with eligibility ⊆ S) / |S|
//! ```
//!
//! and the maximizing `S` can be taken as a union of eligibility sets, of
//! which a kernel has only a handful of distinct ones. That makes the
//! computation exact in rational arithmetic — no binary search tolerance.
//! A single exact max-flow at the optimum then recovers the witness
//! assignment.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::asm_frontend::KernelIR;
use crate::machine_model::{MachineModel, ModelError, PortId, PortSet};
use crate::rat::Rat;

/// Optimal fractional µ-op-to-port assignment for one kernel iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PortPressureResult {
    /// Cycles of work assigned to each port (indexed by `PortId`).
    pub per_port_load: Vec<Rat>,
    /// Per (instruction index, µ-op index): the ports it runs on with the
    /// fraction of its occupancy routed there. Fractions sum to 1.
    pub assignment: BTreeMap<(usize, usize), Vec<(PortId, Rat)>>,
    /// Max per-port load: the throughput bound in cycles/iteration.
    pub t_port: Rat,
}

/// Exact minimum makespan of µ-ops `(eligible ports, occupancy)` over
/// `port_count` ports.
pub fn min_makespan(uops: &[(PortSet, Rat)], port_count: usize) -> Rat {
    makespan_and_bottleneck(uops, port_count).0
}

/// Minimum makespan plus the maximal bottleneck port set: the union of
/// every subset achieving the optimum (maximizers are closed under union,
/// so this is itself a maximizer).
fn makespan_and_bottleneck(uops: &[(PortSet, Rat)], port_count: usize) -> (Rat, PortSet) {
    assert!(port_count <= 32);
    let mut distinct: Vec<PortSet> = Vec::new();
    for (ports, _) in uops {
        assert!(!ports.is_empty(), "µ-op with empty port set");
        if !distinct.contains(ports) {
            distinct.push(*ports);
        }
    }
    if distinct.is_empty() {
        return (Rat::zero(), PortSet::empty());
    }
    // The maximizing subset is a union of eligibility sets: shrinking any
    // candidate S to the union of the eligibility sets it contains keeps
    // the numerator and can only shrink |S|.
    debug_assert!(distinct.len() <= 24, "unexpected eligibility-set explosion");
    let mut best = Rat::zero();
    let mut bottleneck = PortSet::empty();
    for mask in 1u64..(1u64 << distinct.len()) {
        let mut union = PortSet::empty();
        for (i, s) in distinct.iter().enumerate() {
            if mask & (1 << i) != 0 {
                union = union.union(*s);
            }
        }
        let mut occ = Rat::zero();
        for (ports, o) in uops {
            if ports.is_subset_of(union) {
                occ += *o;
            }
        }
        let bound = occ / Rat::from_integer(i64::from(union.len()));
        if bound > best {
            best = bound;
            bottleneck = union;
        } else if bound == best && !best.is_zero() {
            bottleneck = bottleneck.union(union);
        }
    }
    (best, bottleneck)
}

/// Compute the port-pressure bound for a kernel under a model.
pub fn port_pressure(
    kernel: &KernelIR,
    model: &MachineModel,
) -> Result<PortPressureResult, ModelError> {
    let mut uops: Vec<(usize, usize, PortSet, Rat)> = Vec::new();
    for (i, instr) in kernel.instructions.iter().enumerate() {
        let desc = model.lookup(instr)?;
        for (u, micro) in desc.uops.iter().enumerate() {
            uops.push((i, u, micro.ports, micro.occupancy));
        }
    }
    Ok(pressure_of_uops(&uops, model.port_count()))
}

/// Port pressure of a raw µ-op list (used by synthetic tests and model
/// validation).
///
/// The witness assignment is canonical: the level decomposition peels off
/// the saturated bottleneck port set at its exact level and recurses on
/// the rest, yielding the unique lexicographically minimal per-port load
/// vector. That makes per-port loads independent of instruction order.
pub fn pressure_of_uops(
    uops: &[(usize, usize, PortSet, Rat)],
    port_count: usize,
) -> PortPressureResult {
    let mut per_port_load = vec![Rat::zero(); port_count];
    let mut assignment: BTreeMap<(usize, usize), Vec<(PortId, Rat)>> = BTreeMap::new();
    let mut t_port = Rat::zero();

    let mut remaining: Vec<usize> = (0..uops.len()).collect();
    let mut active = PortSet(((1u64 << port_count) - 1) as u32);
    let mut first_level = true;

    while !remaining.is_empty() {
        // Eligibility restricted to ports still unassigned. Jobs left over
        // from previous levels always keep a port here: only jobs fully
        // inside the removed bottleneck were assigned.
        let restricted: Vec<(PortSet, Rat)> = remaining
            .iter()
            .map(|&i| (PortSet(uops[i].2 .0 & active.0), uops[i].3))
            .collect();
        let (level, bottleneck) = makespan_and_bottleneck(&restricted, port_count);
        if first_level {
            t_port = level;
            first_level = false;
        }
        if level.is_zero() {
            break;
        }

        // Jobs constrained inside the bottleneck saturate it exactly:
        // occ(jobs ⊆ bottleneck) == level · |bottleneck|.
        let (level_jobs, rest): (Vec<usize>, Vec<usize>) = remaining
            .iter()
            .partition(|&&i| PortSet(uops[i].2 .0 & active.0).is_subset_of(bottleneck));
        debug_assert!(!level_jobs.is_empty());

        route_level(
            &level_jobs,
            uops,
            active,
            bottleneck,
            level,
            &mut per_port_load,
            &mut assignment,
        );

        active = PortSet(active.0 & !bottleneck.0);
        remaining = rest;
    }

    for (instr, uop, _, _) in uops {
        assignment.entry((*instr, *uop)).or_default();
    }
    PortPressureResult {
        per_port_load,
        assignment,
        t_port,
    }
}

/// Route one saturation level's jobs over its bottleneck ports with an
/// exact max-flow; every bottleneck port ends up loaded at exactly
/// `level`.
fn route_level(
    jobs: &[usize],
    uops: &[(usize, usize, PortSet, Rat)],
    active: PortSet,
    bottleneck: PortSet,
    level: Rat,
    per_port_load: &mut [Rat],
    assignment: &mut BTreeMap<(usize, usize), Vec<(PortId, Rat)>>,
) {
    let ports: Vec<PortId> = bottleneck.iter().collect();
    let n = jobs.len();
    let nodes = 2 + n + ports.len();
    let source = 0usize;
    let sink = nodes - 1;
    let uop_node = |i: usize| 1 + i;
    let port_node = |p: usize| 1 + n + p;

    let mut flow = FlowNet::new(nodes);
    for (k, &i) in jobs.iter().enumerate() {
        let (_, _, elig, occ) = &uops[i];
        flow.add_edge(source, uop_node(k), *occ);
        for (pi, p) in ports.iter().enumerate() {
            if elig.contains(*p) && active.contains(*p) {
                flow.add_edge(uop_node(k), port_node(pi), *occ);
            }
        }
    }
    for pi in 0..ports.len() {
        flow.add_edge(port_node(pi), sink, level);
    }
    let total: Rat = jobs.iter().map(|&i| uops[i].3).sum();
    let pushed = flow.max_flow(source, sink);
    debug_assert_eq!(pushed, total, "bottleneck level must be exactly routable");

    for (k, &i) in jobs.iter().enumerate() {
        let (instr, uop, _, occ) = &uops[i];
        let parts = assignment.entry((*instr, *uop)).or_default();
        for (pi, p) in ports.iter().enumerate() {
            let f = flow.flow_on(uop_node(k), port_node(pi));
            if !f.is_zero() {
                per_port_load[p.0 as usize] += f;
                parts.push((*p, f / occ));
            }
        }
        parts.sort_by_key(|(p, _)| *p);
    }
}

/// Issue-width bound: total µ-ops per iteration over the global issue
/// width, as an exact rational.
pub fn issue_bound(kernel: &KernelIR, model: &MachineModel) -> Result<Rat, ModelError> {
    let mut total = 0i64;
    for instr in &kernel.instructions {
        total += model.lookup(instr)?.uops.len() as i64;
    }
    Ok(Rat::new(total, i64::from(model.issue_width)))
}

/// Dense-ish max flow with exact rational capacities (Edmonds-Karp).
struct FlowNet {
    n: usize,
    cap: Vec<Vec<Rat>>,
    flow: Vec<Vec<Rat>>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            n,
            cap: vec![vec![Rat::zero(); n]; n],
            flow: vec![vec![Rat::zero(); n]; n],
            adj: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: Rat) {
        if self.cap[u][v].is_zero() && self.cap[v][u].is_zero() {
            self.adj[u].push(v);
            self.adj[v].push(u);
        }
        self.cap[u][v] += cap;
    }

    fn max_flow(&mut self, s: usize, t: usize) -> Rat {
        let mut total = Rat::zero();
        loop {
            // BFS for a shortest augmenting path.
            let mut parent = vec![usize::MAX; self.n];
            parent[s] = s;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &v in &self.adj[u] {
                    if parent[v] == usize::MAX && self.residual(u, v) > Rat::zero() {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if parent[t] == usize::MAX {
                return total;
            }
            let mut bottleneck: Option<Rat> = None;
            let mut v = t;
            while v != s {
                let u = parent[v];
                let r = self.residual(u, v);
                bottleneck = Some(match bottleneck {
                    None => r,
                    Some(b) if r < b => r,
                    Some(b) => b,
                });
                v = u;
            }
            let push = bottleneck.expect("path implies bottleneck");
            let mut v = t;
            while v != s {
                let u = parent[v];
                self.flow[u][v] += push;
                self.flow[v][u] -= push;
                v = u;
            }
            total += push;
        }
    }

    fn residual(&self, u: usize, v: usize) -> Rat {
        self.cap[u][v] - self.flow[u][v]
    }

    fn flow_on(&self, u: usize, v: usize) -> Rat {
        if self.flow[u][v] > Rat::zero() {
            self.flow[u][v]
        } else {
            Rat::zero()
        }
    }
}
