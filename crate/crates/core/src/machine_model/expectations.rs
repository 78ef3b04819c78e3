//! Embedded throughput/latency expectations for the shipped models.
//!
//! These are the measured reciprocal-throughput and latency values the
//! shipped model files must reproduce. `validate` re-derives each value
//! through the port scheduler on a single-instruction loop and reports any
//! mismatch, so a model edit that breaks a known number is caught
//! immediately.

use super::{Diagnostic, InstructionForm, MachineModel, OperandClass};
use crate::rat::{self, Rat};

/// Unit the expected throughput is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThroughputUnit {
    /// Double-precision elements per cycle.
    DpElementsPerCycle,
    /// Cache lines per cycle (gathers; one descriptor covers one line).
    CacheLinesPerCycle,
}

/// One expected (instruction, machine) data point.
#[derive(Debug, Clone)]
pub struct ExpectedRow {
    pub label: &'static str,
    pub form: InstructionForm,
    pub unit: ThroughputUnit,
    pub throughput: Rat,
    pub latency: u32,
}

fn form(mnemonic: &str, operands: &[OperandClass]) -> InstructionForm {
    InstructionForm {
        mnemonic: mnemonic.to_string(),
        operands: operands.to_vec(),
    }
}

const V16: OperandClass = OperandClass::Vector(16);
const V32: OperandClass = OperandClass::Vector(32);
const V64: OperandClass = OperandClass::Vector(64);
const F8: OperandClass = OperandClass::ScalarFp(8);
const P: OperandClass = OperandClass::Predicate;
const G16: OperandClass = OperandClass::Memory {
    width: 16,
    gathered: true,
};
const G32: OperandClass = OperandClass::Memory {
    width: 32,
    gathered: true,
};
const G64: OperandClass = OperandClass::Memory {
    width: 64,
    gathered: true,
};

/// Expectations for a shipped model, selected by model name. Unknown
/// names get an empty table (nothing to check).
pub fn expectations_for(name: &str) -> Vec<ExpectedRow> {
    use ThroughputUnit::*;
    let r = rat::ratio;
    match name {
        "gcs" => vec![
            row(
                "gather",
                form("ld1d", &[P, G16, V16]),
                CacheLinesPerCycle,
                r(1, 4),
                9,
            ),
            row(
                "vec add",
                form("fadd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(8, 1),
                2,
            ),
            row(
                "vec mul",
                form("fmul", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(8, 1),
                3,
            ),
            row(
                "vec fma",
                form("fmla", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(8, 1),
                4,
            ),
            row(
                "vec fp div",
                form("fdiv", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(2, 5),
                5,
            ),
            row(
                "scalar add",
                form("fadd", &[F8, F8, F8]),
                DpElementsPerCycle,
                r(4, 1),
                2,
            ),
            row(
                "scalar mul",
                form("fmul", &[F8, F8, F8]),
                DpElementsPerCycle,
                r(4, 1),
                3,
            ),
            row(
                "scalar fma",
                form("fmadd", &[F8, F8, F8, F8]),
                DpElementsPerCycle,
                r(4, 1),
                4,
            ),
            row(
                "scalar div",
                form("fdiv", &[F8, F8, F8]),
                DpElementsPerCycle,
                r(2, 5),
                12,
            ),
        ],
        "spr" => vec![
            row(
                "gather",
                form("vgatherdpd", &[G64, P, V64]),
                CacheLinesPerCycle,
                r(1, 3),
                20,
            ),
            row(
                "vec add",
                form("vaddpd", &[V64, V64, V64]),
                DpElementsPerCycle,
                r(16, 1),
                2,
            ),
            row(
                "vec mul",
                form("vmulpd", &[V64, V64, V64]),
                DpElementsPerCycle,
                r(16, 1),
                4,
            ),
            row(
                "vec fma",
                form("vfmadd231pd", &[V64, V64, V64]),
                DpElementsPerCycle,
                r(16, 1),
                4,
            ),
            row(
                "vec fp div",
                form("vdivpd", &[V64, V64, V64]),
                DpElementsPerCycle,
                r(1, 2),
                14,
            ),
            row(
                "scalar add",
                form("vaddsd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(2, 1),
                2,
            ),
            row(
                "scalar mul",
                form("vmulsd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(2, 1),
                4,
            ),
            row(
                "scalar fma",
                form("vfmadd231sd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(2, 1),
                5,
            ),
            row(
                "scalar div",
                form("vdivsd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(1, 4),
                14,
            ),
        ],
        "genoa" => vec![
            row(
                "gather",
                form("vgatherdpd", &[G32, P, V32]),
                CacheLinesPerCycle,
                r(1, 8),
                13,
            ),
            row(
                "vec add",
                form("vaddpd", &[V32, V32, V32]),
                DpElementsPerCycle,
                r(8, 1),
                3,
            ),
            row(
                "vec mul",
                form("vmulpd", &[V32, V32, V32]),
                DpElementsPerCycle,
                r(8, 1),
                3,
            ),
            row(
                "vec fma",
                form("vfmadd231pd", &[V32, V32, V32]),
                DpElementsPerCycle,
                r(8, 1),
                4,
            ),
            row(
                "vec fp div",
                form("vdivpd", &[V32, V32, V32]),
                DpElementsPerCycle,
                r(4, 5),
                13,
            ),
            row(
                "scalar add",
                form("vaddsd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(2, 1),
                3,
            ),
            row(
                "scalar mul",
                form("vmulsd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(2, 1),
                3,
            ),
            row(
                "scalar fma",
                form("vfmadd231sd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(2, 1),
                4,
            ),
            row(
                "scalar div",
                form("vdivsd", &[V16, V16, V16]),
                DpElementsPerCycle,
                r(1, 5),
                13,
            ),
        ],
        _ => Vec::new(),
    }
}

fn row(
    label: &'static str,
    form: InstructionForm,
    unit: ThroughputUnit,
    throughput: Rat,
    latency: u32,
) -> ExpectedRow {
    ExpectedRow {
        label,
        form,
        unit,
        throughput,
        latency,
    }
}

/// Compare the model against its expectations table.
pub fn validate(model: &MachineModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for row in expectations_for(&model.name) {
        let desc = match model.lookup_form(&row.form) {
            Ok(d) => d,
            Err(_) => {
                diags.push(Diagnostic {
                    form: row.form.to_string(),
                    kind: "presence",
                    expected: "descriptor present".into(),
                    actual: "missing".into(),
                });
                continue;
            }
        };
        let t = match model.reciprocal_throughput(&row.form) {
            Ok(t) => t,
            Err(e) => {
                diags.push(Diagnostic {
                    form: row.form.to_string(),
                    kind: "throughput",
                    expected: rat::display(row.throughput),
                    actual: format!("error: {e}"),
                });
                continue;
            }
        };
        let actual_tp = match row.unit {
            ThroughputUnit::DpElementsPerCycle => Rat::from_integer(i64::from(desc.dp_elems)) / t,
            ThroughputUnit::CacheLinesPerCycle => Rat::from_integer(1) / t,
        };
        if actual_tp != row.throughput {
            diags.push(Diagnostic {
                form: row.form.to_string(),
                kind: "throughput",
                expected: rat::display(row.throughput),
                actual: rat::display(actual_tp),
            });
        }
        if desc.latency != row.latency {
            diags.push(Diagnostic {
                form: row.form.to_string(),
                kind: "latency",
                expected: row.latency.to_string(),
                actual: desc.latency.to_string(),
            });
        }
    }
    diags
}
