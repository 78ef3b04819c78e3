//! Register dependency graph of one loop iteration, with cross-iteration
//! back edges; critical path and loop-carried dependency (LCD) bounds.
//!
//! Only true (RAW) dependencies create edges — WAR/WAW are assumed
//! eliminated by register renaming. A register read before any writer in
//! program order takes its value from the previous iteration's last
//! writer, which closes the cross-iteration edges that bound steady-state
//! throughput.

use std::collections::BTreeMap;

use crate::asm_frontend::{self, KernelIR};
use crate::machine_model::{InstrClass, MachineModel, ModelError};

/// Number of elementary cycles enumerated before giving up and reporting
/// a partial maximum.
pub const DEFAULT_CYCLE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub latency: u32,
}

/// Dependency graph over instruction indices of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    pub node_count: usize,
    /// Producer index < consumer index; same-iteration dependencies.
    pub intra_edges: Vec<Edge>,
    /// Producer in iteration k, consumer in iteration k+1.
    pub cross_edges: Vec<Edge>,
    /// Own latency contribution of each node as a chain terminator
    /// (stores retire off the critical path and contribute 0).
    pub node_latency: Vec<u32>,
}

/// Critical-path and LCD summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyResult {
    pub critical_path: u32,
    /// Max total latency around any dependency cycle, cycles/iteration.
    pub lcd: u32,
    /// All elementary cycles (as instruction-index lists, starting at
    /// their smallest node) realizing the maximum, lexicographic order.
    pub lcd_cycles: Vec<Vec<usize>>,
    pub cycles_enumerated: usize,
    /// Enumeration hit the cycle cap; `lcd` is a partial maximum.
    pub truncated: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum DepError {
    #[error("cycle in intra-iteration dependency graph (frontend bug)")]
    CycleInIntraGraph,
}

/// Build the RAW dependency graph for a kernel under a model.
pub fn build_graph(kernel: &KernelIR, model: &MachineModel) -> Result<DependencyGraph, ModelError> {
    let ir = asm_frontend::normalize(kernel);
    let n = ir.instructions.len();

    let mut latencies = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    for instr in &ir.instructions {
        let desc = model.lookup(instr)?;
        latencies.push(desc.latency);
        classes.push(desc.class);
    }

    // Max-latency edge per (producer, consumer) pair.
    let mut edges: BTreeMap<(usize, usize, bool), u32> = BTreeMap::new();
    let mut add = |from: usize, to: usize, cross: bool, lat: u32| {
        let e = edges.entry((from, to, cross)).or_insert(0);
        *e = (*e).max(lat);
    };

    let mut last_writer: BTreeMap<String, usize> = BTreeMap::new();
    let mut live_in_reads: Vec<(usize, String)> = Vec::new();
    for (j, instr) in ir.instructions.iter().enumerate() {
        for r in instr.read_regs() {
            match last_writer.get(&r) {
                Some(&i) => add(i, j, false, latencies[i]),
                None => live_in_reads.push((j, r)),
            }
        }
        for w in instr.written_regs() {
            last_writer.insert(w, j);
        }
    }
    // A live-in read takes the previous iteration's value from the last
    // writer in program order.
    for (j, r) in live_in_reads {
        if let Some(&i) = last_writer.get(&r) {
            add(i, j, true, latencies[i]);
        }
    }

    // Store-to-load forwarding: a store and a later load conflict only
    // when base, index, scale, and displacement are syntactically equal.
    for (i, st) in ir.instructions.iter().enumerate() {
        if !st.is_store() {
            continue;
        }
        let Some(st_mem) = st.mem_operand() else {
            continue;
        };
        for (j, ld) in ir.instructions.iter().enumerate().skip(i + 1) {
            if ld.is_store() {
                continue;
            }
            let Some(ld_mem) = ld.mem_operand() else {
                continue;
            };
            if st_mem.address_key() == ld_mem.address_key() {
                let lat = model.store_to_load_latency.unwrap_or(latencies[j]);
                add(i, j, false, lat);
            }
        }
    }

    let mut intra_edges = Vec::new();
    let mut cross_edges = Vec::new();
    for ((from, to, cross), latency) in edges {
        let e = Edge { from, to, latency };
        if cross {
            cross_edges.push(e);
        } else {
            intra_edges.push(e);
        }
    }

    let node_latency = (0..n)
        .map(|i| {
            if classes[i] == InstrClass::Store {
                0
            } else {
                latencies[i]
            }
        })
        .collect();

    Ok(DependencyGraph {
        node_count: n,
        intra_edges,
        cross_edges,
        node_latency,
    })
}

/// Longest intra-iteration latency chain: summed edge latencies plus the
/// final node's own latency.
pub fn critical_path(graph: &DependencyGraph) -> Result<u32, DepError> {
    if graph.intra_edges.iter().any(|e| e.from >= e.to) {
        return Err(DepError::CycleInIntraGraph);
    }
    if graph.node_count == 0 {
        return Ok(0);
    }
    let mut dp = vec![0u32; graph.node_count];
    // Intra edges always point forward, so index order is topological.
    for e in &graph.intra_edges {
        dp[e.to] = dp[e.to].max(dp[e.from] + e.latency);
    }
    Ok((0..graph.node_count)
        .map(|i| dp[i] + graph.node_latency[i])
        .max()
        .unwrap_or(0))
}

/// Loop-carried dependency bound with the default cycle cap.
pub fn loop_carried(graph: &DependencyGraph) -> Result<LatencyResult, DepError> {
    loop_carried_with_limit(graph, DEFAULT_CYCLE_LIMIT)
}

/// Enumerate elementary cycles (cross edges close them) and take the
/// heaviest. If more than `limit` cycles exist the result is flagged as a
/// partial maximum.
pub fn loop_carried_with_limit(
    graph: &DependencyGraph,
    limit: usize,
) -> Result<LatencyResult, DepError> {
    let critical_path = critical_path(graph)?;
    let n = graph.node_count;

    // Adjacency with max edge latency per pair.
    let mut lat: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for e in graph.intra_edges.iter().chain(&graph.cross_edges) {
        let v = lat.entry((e.from, e.to)).or_insert(0);
        *v = (*v).max(e.latency);
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in lat.keys() {
        adj[u].push(v);
    }
    for a in &mut adj {
        a.sort_unstable();
    }

    let mut best: Option<u32> = None;
    let mut lcd_cycles: Vec<Vec<usize>> = Vec::new();
    let mut count = 0usize;
    let mut truncated = false;

    // Each elementary cycle is discovered exactly once, rooted at its
    // smallest node: the DFS from root s only visits nodes >= s.
    let mut path: Vec<usize> = Vec::new();
    let mut on_path = vec![false; n];
    'roots: for s in 0..n {
        path.clear();
        on_path.fill(false);
        // Iterative DFS with explicit neighbor cursors.
        let mut cursors: Vec<usize> = vec![0];
        path.push(s);
        on_path[s] = true;
        while let Some(&u) = path.last() {
            let cursor = cursors.last_mut().expect("parallel stacks");
            if *cursor < adj[u].len() {
                let v = adj[u][*cursor];
                *cursor += 1;
                if v == s {
                    count += 1;
                    let weight: u32 =
                        path.windows(2).map(|w| lat[&(w[0], w[1])]).sum::<u32>() + lat[&(u, s)];
                    match best {
                        None => {
                            best = Some(weight);
                            lcd_cycles = vec![path.clone()];
                        }
                        Some(b) if weight > b => {
                            best = Some(weight);
                            lcd_cycles = vec![path.clone()];
                        }
                        Some(b) if weight == b => lcd_cycles.push(path.clone()),
                        _ => {}
                    }
                    if count >= limit {
                        truncated = true;
                        break 'roots;
                    }
                } else if v > s && !on_path[v] {
                    path.push(v);
                    on_path[v] = true;
                    cursors.push(0);
                }
            } else {
                path.pop();
                on_path[u] = false;
                cursors.pop();
            }
        }
    }

    lcd_cycles.sort();
    lcd_cycles.dedup();

    Ok(LatencyResult {
        critical_path,
        lcd: best.unwrap_or(0),
        lcd_cycles,
        cycles_enumerated: count,
        truncated,
    })
}

/// Stable `i -> j : lat` dump for golden tests (`--dump-deps`).
pub fn dump_deps(graph: &DependencyGraph) -> String {
    let mut out = String::from("# intra\n");
    let mut intra = graph.intra_edges.clone();
    intra.sort_by_key(|e| (e.from, e.to));
    for e in &intra {
        out.push_str(&format!("{} -> {} : {}\n", e.from, e.to, e.latency));
    }
    out.push_str("# cross\n");
    let mut cross = graph.cross_edges.clone();
    cross.sort_by_key(|e| (e.from, e.to));
    for e in &cross {
        out.push_str(&format!("{} -> {} : {}\n", e.from, e.to, e.latency));
    }
    out
}
