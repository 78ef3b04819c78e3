//! Peak DP flops/cycle of a model's floating-point pipes.
//!
//! Solved as a small LP: pick fractional per-cycle rates for every FP
//! ADD/MUL/FMA descriptor, routed over eligible ports, maximizing flops
//! (FMA = 2 flops/element, ADD/MUL = 1) under unit port capacity. Each
//! descriptor is expanded into its port-routing patterns (one port choice
//! per µ-op) so the LP has only the port-capacity constraints and a
//! feasible origin.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{InstrClass, MachineModel, PortId};
use crate::simplex;

pub fn peak_flops_per_cycle(model: &MachineModel) -> f64 {
    let mut columns: Vec<(Vec<(PortId, BigRational)>, BigRational)> = Vec::new();

    for desc in &model.instructions {
        let flops_per_elem = match desc.class {
            InstrClass::FpFma => 2i64,
            InstrClass::FpAdd | InstrClass::FpMul => 1,
            _ => continue,
        };
        let weight = BigRational::from(BigInt::from(flops_per_elem * i64::from(desc.dp_elems)));

        // Enumerate port choices across the descriptor's µ-ops.
        let mut patterns: Vec<Vec<(PortId, BigRational)>> = vec![Vec::new()];
        for u in &desc.uops {
            let occ = BigRational::new(
                BigInt::from(*u.occupancy.numer()),
                BigInt::from(*u.occupancy.denom()),
            );
            let mut next = Vec::new();
            for pat in &patterns {
                for port in u.ports.iter() {
                    let mut p = pat.clone();
                    p.push((port, occ.clone()));
                    next.push(p);
                }
            }
            patterns = next;
        }
        for pat in patterns {
            columns.push((pat, weight.clone()));
        }
    }

    if columns.is_empty() {
        return 0.0;
    }

    let ports = model.port_count();
    let n = columns.len();
    let mut a = vec![vec![BigRational::zero(); n]; ports];
    let mut c = Vec::with_capacity(n);
    for (j, (pat, weight)) in columns.iter().enumerate() {
        for (port, occ) in pat {
            a[port.0 as usize][j] += occ.clone();
        }
        c.push(weight.clone());
    }
    let b = vec![BigRational::from(BigInt::from(1)); ports];

    simplex::maximize(&c, &a, &b).to_f64().unwrap_or(0.0)
}
