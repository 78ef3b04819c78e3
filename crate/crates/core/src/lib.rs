//! Static in-core performance analysis of assembly loop kernels.
//!
//! Predicts a lower bound on cycles per loop iteration for a kernel on a
//! given microarchitecture, described by a declarative machine-model file:
//! scheduler ports, per-instruction µ-op decompositions, latencies,
//! sustained-frequency curves, and memory bandwidth.
//!
//! The prediction combines three steady-state bounds:
//!
//! * port pressure — the optimal fractional assignment of µ-ops to their
//!   eligible ports, minimizing the maximum per-port load,
//! * issue width — total µ-ops per iteration over the global issue width,
//! * loop-carried dependencies — the heaviest latency cycle closed by
//!   cross-iteration register reads.
//!
//! [`wa_traffic`] models write-allocate memory traffic for store streams,
//! and [`predictor`] turns cycle bounds into time and Roofline estimates.

pub mod asm_frontend;
pub mod dep_graph;
pub mod machine_model;
pub mod port_scheduler;
pub mod predictor;
pub mod rat;
pub mod simplex;
pub mod synth;
pub mod wa_traffic;

pub use asm_frontend::{Dialect, InstructionInstance, KernelIR, Operand};
pub use dep_graph::{DependencyGraph, LatencyResult};
pub use machine_model::{InstructionDescriptor, MachineModel, VectorClass};
pub use port_scheduler::PortPressureResult;
pub use predictor::{PredictionReport, RooflineEstimate};
pub use rat::Rat;
pub use wa_traffic::{RatioCurve, TrafficSpec, WaMode};
