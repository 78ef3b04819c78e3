//! Combine port, issue, and dependency bounds into the final in-core
//! prediction; convert cycles to time via the sustained-frequency model;
//! compute relative prediction error; combine with memory bandwidth into a
//! Roofline estimate.

use std::fmt;

use crate::asm_frontend::{self, FrontendError, KernelIR};
use crate::dep_graph::{self, DepError, LatencyResult};
use crate::machine_model::{InstrClass, MachineModel, ModelError, VectorClass};
use crate::port_scheduler::{self, PortPressureResult};
use crate::rat::{self, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bottleneck {
    Port,
    Issue,
    Lcd,
}

impl fmt::Display for Bottleneck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bottleneck::Port => "port",
            Bottleneck::Issue => "issue",
            Bottleneck::Lcd => "lcd",
        })
    }
}

/// Full in-core prediction for one kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub t_port: Rat,
    pub t_issue: Rat,
    pub lcd: Rat,
    /// Intra-iteration critical path; informational only, never part of
    /// the prediction (steady-state pipelining hides it).
    pub critical_path: Rat,
    /// `max(t_port, t_issue, lcd)`, cycles/iteration.
    pub prediction: Rat,
    pub bottleneck: Bottleneck,
    pub vclass: VectorClass,
    pub port_pressure: PortPressureResult,
    pub latency: LatencyResult,
    pub diagnostics: Vec<String>,
}

/// Roofline combination of the in-core bound with memory bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct RooflineEstimate {
    pub flops_per_iter: f64,
    /// Effective traffic including write-allocate accounting.
    pub bytes_per_iter: f64,
    /// Arithmetic intensity, flops/byte.
    pub intensity: f64,
    /// In-core performance ceiling at the given core count, flops/s.
    pub p_core: f64,
    /// Bandwidth ceiling: intensity × memory bandwidth, flops/s.
    pub p_mem: f64,
    /// `min(p_core, p_mem)`.
    pub p_roof: f64,
}

impl RooflineEstimate {
    pub fn memory_bound(&self) -> bool {
        self.p_mem < self.p_core
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Dep(#[from] DepError),
    #[error("measured cycles must be positive")]
    NonPositiveMeasurement,
    #[error("bytes per iteration must be positive")]
    ZeroBytes,
}

/// Vector class from the widest register operand in the kernel.
pub fn infer_vclass(kernel: &KernelIR) -> VectorClass {
    match asm_frontend::widest_vector_bytes(kernel) {
        w if w >= 64 => VectorClass::WideVector512,
        w if w >= 16 => VectorClass::NarrowVector,
        _ => VectorClass::Scalar,
    }
}

/// Run the whole in-core analysis for one kernel.
pub fn predict(kernel: &KernelIR, model: &MachineModel) -> Result<PredictionReport, PredictError> {
    let ir = asm_frontend::normalize(kernel);
    let port_pressure = port_scheduler::port_pressure(&ir, model)?;
    let t_issue = port_scheduler::issue_bound(&ir, model)?;
    let graph = dep_graph::build_graph(&ir, model)?;
    let latency = dep_graph::loop_carried(&graph)?;

    let t_port = port_pressure.t_port;
    let lcd = Rat::from_integer(i64::from(latency.lcd));
    let prediction = rat::max(rat::max(t_port, t_issue), lcd);
    // Ties break in the order port < issue < lcd.
    let bottleneck = if prediction == t_port {
        Bottleneck::Port
    } else if prediction == t_issue {
        Bottleneck::Issue
    } else {
        Bottleneck::Lcd
    };

    let mut diagnostics = Vec::new();
    if ir.instructions.is_empty() {
        diagnostics
            .push("empty kernel: no instructions between loop markers survived filtering".into());
    }
    if latency.truncated {
        diagnostics.push(format!(
            "dependency cycle enumeration capped at {} cycles; lcd is a partial maximum",
            latency.cycles_enumerated
        ));
    }
    if bottleneck == Bottleneck::Lcd {
        diagnostics.push(
            "bound by a loop-carried register dependency; if the recurrence only reuses a \
             register name, hardware renaming can run faster than this bound"
                .into(),
        );
    }

    Ok(PredictionReport {
        t_port,
        t_issue,
        lcd,
        critical_path: Rat::from_integer(i64::from(latency.critical_path)),
        prediction,
        bottleneck,
        vclass: infer_vclass(&ir),
        port_pressure,
        latency,
        diagnostics,
    })
}

/// Seconds per iteration at the sustained frequency for `vclass` and
/// `active_cores`.
pub fn cycles_to_time(
    cy_per_iter: Rat,
    model: &MachineModel,
    vclass: VectorClass,
    active_cores: u32,
) -> Result<f64, PredictError> {
    let f = model.sustained_frequency(vclass, active_cores)?;
    Ok(rat::to_f64(cy_per_iter) / f)
}

/// Relative prediction error: `(measured − predicted) / measured`.
/// Positive means the prediction is faster than the measurement.
pub fn relative_prediction_error(predicted: f64, measured: f64) -> Result<f64, PredictError> {
    if measured <= 0.0 {
        return Err(PredictError::NonPositiveMeasurement);
    }
    Ok((measured - predicted) / measured)
}

/// Roofline estimate for the kernel across `active_cores`.
pub fn roofline(
    report: &PredictionReport,
    flops_per_iter: f64,
    bytes_per_iter: f64,
    model: &MachineModel,
    active_cores: u32,
) -> Result<RooflineEstimate, PredictError> {
    if bytes_per_iter <= 0.0 {
        return Err(PredictError::ZeroBytes);
    }
    let time_per_iter = cycles_to_time(report.prediction, model, report.vclass, active_cores)?;
    let p_core = if time_per_iter > 0.0 {
        flops_per_iter * f64::from(active_cores) / time_per_iter
    } else {
        f64::INFINITY
    };
    let intensity = flops_per_iter / bytes_per_iter;
    let p_mem = intensity * model.mem_bandwidth;
    Ok(RooflineEstimate {
        flops_per_iter,
        bytes_per_iter,
        intensity,
        p_core,
        p_mem,
        p_roof: p_core.min(p_mem),
    })
}

/// Per-iteration work of a kernel: (flops, bytes loaded, bytes stored),
/// derived from descriptor classes and memory operand widths.
pub fn work_per_iteration(
    kernel: &KernelIR,
    model: &MachineModel,
) -> Result<(f64, f64, f64), ModelError> {
    let ir = asm_frontend::normalize(kernel);
    let mut flops = 0.0;
    let mut loaded = 0.0;
    let mut stored = 0.0;
    for instr in &ir.instructions {
        let desc = model.lookup(instr)?;
        let elems = f64::from(desc.dp_elems);
        flops += match desc.class {
            InstrClass::FpFma => 2.0 * elems,
            InstrClass::FpAdd | InstrClass::FpMul | InstrClass::FpDiv => elems,
            _ => 0.0,
        };
        if let Some(mem) = instr.mem_operand() {
            if instr.is_store() {
                stored += f64::from(mem.width);
            } else {
                loaded += f64::from(mem.width);
            }
        }
    }
    Ok((flops, loaded, stored))
}
