//! Property tests for the port scheduler against two independent oracles:
//!
//! * a float binary search on the makespan with an augmenting-path
//!   max-flow feasibility test (a completely different algorithm), and
//! * the exhaustive all-subsets density bound (15 subsets at 4 ports).

use incore::machine_model::PortSet;
use incore::port_scheduler::{min_makespan, pressure_of_uops};
use incore::rat::{self, Rat};
use proptest::prelude::*;

fn ps(bits: u32) -> PortSet {
    PortSet(bits)
}

/// Float max-flow feasibility: can the µ-ops be fractionally packed so no
/// port exceeds load `t`?
fn feasible(uops: &[(u32, f64)], ports: usize, t: f64) -> bool {
    let n = uops.len();
    let nodes = n + ports + 2;
    let (src, sink) = (0, nodes - 1);
    let mut cap = vec![vec![0.0f64; nodes]; nodes];
    for (i, (mask, occ)) in uops.iter().enumerate() {
        cap[src][1 + i] += occ;
        for p in 0..ports {
            if mask & (1 << p) != 0 {
                cap[1 + i][1 + n + p] = f64::INFINITY;
            }
        }
    }
    for p in 0..ports {
        cap[1 + n + p][sink] = t;
    }
    let total: f64 = uops.iter().map(|(_, o)| o).sum();
    let mut flow = 0.0;
    loop {
        // DFS augmenting path on the residual graph.
        let mut parent = vec![usize::MAX; nodes];
        let mut stack = vec![src];
        parent[src] = src;
        while let Some(u) = stack.pop() {
            for v in 0..nodes {
                if parent[v] == usize::MAX && cap[u][v] > 1e-12 {
                    parent[v] = u;
                    stack.push(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != src {
            push = push.min(cap[parent[v]][v]);
            v = parent[v];
        }
        let mut v = sink;
        while v != src {
            cap[parent[v]][v] -= push;
            cap[v][parent[v]] += push;
            v = parent[v];
        }
        flow += push;
    }
    flow >= total - 1e-9
}

fn oracle_binary_search(uops: &[(u32, f64)], ports: usize) -> f64 {
    let total: f64 = uops.iter().map(|(_, o)| o).sum();
    if uops.is_empty() {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, total);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(uops, ports, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Brute force over every nonempty port subset.
fn oracle_all_subsets(uops: &[(u32, f64)], ports: usize) -> f64 {
    let mut best = 0.0f64;
    for s in 1u32..(1 << ports) {
        let occ: f64 = uops
            .iter()
            .filter(|(m, _)| m & !s == 0)
            .map(|(_, o)| o)
            .sum();
        best = best.max(occ / s.count_ones() as f64);
    }
    best
}

fn occupancy() -> impl Strategy<Value = Rat> {
    prop_oneof![
        Just(rat::ratio(1, 2)),
        Just(rat::rat(1)),
        Just(rat::rat(2)),
        Just(rat::rat(5)),
    ]
}

fn uop(ports: u32) -> impl Strategy<Value = (PortSet, Rat)> {
    (1u32..(1 << ports), occupancy()).prop_map(|(mask, occ)| (ps(mask), occ))
}

fn instance() -> impl Strategy<Value = (u32, Vec<(PortSet, Rat)>)> {
    (1u32..=4).prop_flat_map(|ports| {
        proptest::collection::vec(uop(ports), 0..=6).prop_map(move |uops| (ports, uops))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn matches_both_oracles((ports, uops) in instance()) {
        let t = rat::to_f64(min_makespan(&uops, ports as usize));
        let float_uops: Vec<(u32, f64)> =
            uops.iter().map(|(m, o)| (m.0, rat::to_f64(*o))).collect();
        let flow = oracle_binary_search(&float_uops, ports as usize);
        let subsets = oracle_all_subsets(&float_uops, ports as usize);
        prop_assert!((t - flow).abs() < 1e-6, "makespan {t} vs flow oracle {flow}");
        prop_assert!((t - subsets).abs() < 1e-9, "makespan {t} vs subset oracle {subsets}");
    }

    #[test]
    fn appending_a_uop_never_decreases_t((ports, uops) in instance(), extra in uop(4)) {
        let before = min_makespan(&uops, ports as usize);
        let mut more = uops.clone();
        // Clamp the extra µ-op's ports into range.
        let mask = (extra.0.0 % (1 << ports)).max(1);
        more.push((ps(mask), extra.1));
        let after = min_makespan(&more, ports as usize);
        prop_assert!(after >= before);
    }

    #[test]
    fn scaling_occupancies_scales_t((ports, uops) in instance(), k in 1i64..=7) {
        let t = min_makespan(&uops, ports as usize);
        let scaled: Vec<(PortSet, Rat)> =
            uops.iter().map(|(m, o)| (*m, *o * rat::rat(k))).collect();
        let ts = min_makespan(&scaled, ports as usize);
        prop_assert_eq!(ts, t * rat::rat(k));
    }

    #[test]
    fn permutation_invariance((ports, uops) in instance(), seed in any::<u64>()) {
        let t = min_makespan(&uops, ports as usize);
        let mut shuffled = uops.clone();
        // Cheap deterministic shuffle.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(min_makespan(&shuffled, ports as usize), t);

        // Per-port load multiset is preserved too.
        let tag = |v: &[(PortSet, Rat)]| {
            let uops: Vec<(usize, usize, PortSet, Rat)> =
                v.iter().enumerate().map(|(i, (m, o))| (i, 0, *m, *o)).collect();
            let mut loads = pressure_of_uops(&uops, ports as usize).per_port_load;
            loads.sort();
            loads
        };
        prop_assert_eq!(tag(&shuffled), tag(&uops));
    }

    #[test]
    fn density_lower_bound_holds((ports, uops) in instance()) {
        let r = {
            let tagged: Vec<(usize, usize, PortSet, Rat)> =
                uops.iter().enumerate().map(|(i, (m, o))| (i, 0, *m, *o)).collect();
            pressure_of_uops(&tagged, ports as usize)
        };
        for s in 1u32..(1 << ports) {
            let occ: Rat = uops
                .iter()
                .filter(|(m, _)| m.is_subset_of(ps(s)))
                .map(|(_, o)| *o)
                .sum();
            let bound = occ / rat::rat(i64::from(s.count_ones()));
            prop_assert!(r.t_port >= bound);
        }
        // And the result is achieved: max per-port load equals t_port,
        // no port exceeds it.
        if !uops.is_empty() {
            let max = r.per_port_load.iter().cloned().fold(rat::rat(0), rat::max);
            prop_assert_eq!(max, r.t_port);
        }
    }
}
