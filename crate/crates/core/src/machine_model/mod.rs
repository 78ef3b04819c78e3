//! Declarative machine models: ports, instruction descriptors, frequency
//! curves, and chip-level metadata for one microarchitecture.
//!
//! Models are loaded from line-oriented `.mm` files (see
//! `docs/model_format.md` in the repository root) and are immutable after
//! load, so they can be shared freely across threads.

mod expectations;
mod parse;
mod peak;

pub use expectations::{expectations_for, ExpectedRow, ThroughputUnit};
pub use parse::{load_model, parse_str};

use std::fmt;

use crate::asm_frontend::{Dialect, InstructionInstance};
use crate::rat::{self, Rat};

/// Index into [`MachineModel::ports`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub u8);

/// Set of ports, as a bitmask over port indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PortSet(pub u32);

impl PortSet {
    pub fn empty() -> Self {
        PortSet(0)
    }

    pub fn insert(&mut self, p: PortId) {
        self.0 |= 1 << p.0;
    }

    pub fn contains(&self, p: PortId) -> bool {
        self.0 & (1 << p.0) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_subset_of(&self, other: PortSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(&self, other: PortSet) -> PortSet {
        PortSet(self.0 | other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = PortId> + '_ {
        (0..32u8).filter(|i| self.0 & (1 << i) != 0).map(PortId)
    }
}

/// One µ-op of an instruction: the ports it may issue to and how many
/// cycles it occupies whichever port it lands on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroOp {
    pub ports: PortSet,
    pub occupancy: Rat,
}

/// Operand shape used for instruction-form matching.
///
/// Widths are in bytes. `Memory.gathered` distinguishes vector-indexed
/// (gather) addressing from ordinary scalar-indexed access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperandClass {
    ScalarInt(u16),
    ScalarFp(u16),
    Vector(u16),
    Predicate,
    Memory { width: u16, gathered: bool },
    Immediate,
    Label,
}

impl fmt::Display for OperandClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperandClass::ScalarInt(w) => write!(f, "r{w}"),
            OperandClass::ScalarFp(w) => write!(f, "f{w}"),
            OperandClass::Vector(w) => write!(f, "v{w}"),
            OperandClass::Predicate => write!(f, "p"),
            OperandClass::Memory {
                width,
                gathered: false,
            } => write!(f, "m{width}"),
            OperandClass::Memory {
                width,
                gathered: true,
            } => write!(f, "g{width}"),
            OperandClass::Immediate => write!(f, "i"),
            OperandClass::Label => write!(f, "l"),
        }
    }
}

/// Instruction form: mnemonic plus ordered operand classes, destination
/// last (the frontend's canonical internal order).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstructionForm {
    pub mnemonic: String,
    pub operands: Vec<OperandClass>,
}

impl fmt::Display for InstructionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mnemonic)?;
        for op in &self.operands {
            write!(f, " {op}")?;
        }
        Ok(())
    }
}

/// Semantic class of a descriptor, used for flop and byte accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstrClass {
    FpAdd,
    FpMul,
    FpFma,
    FpDiv,
    Load,
    Store,
    Gather,
    Int,
    Other,
}

impl InstrClass {
    pub fn token(&self) -> &'static str {
        match self {
            InstrClass::FpAdd => "fp-add",
            InstrClass::FpMul => "fp-mul",
            InstrClass::FpFma => "fp-fma",
            InstrClass::FpDiv => "fp-div",
            InstrClass::Load => "load",
            InstrClass::Store => "store",
            InstrClass::Gather => "gather",
            InstrClass::Int => "int",
            InstrClass::Other => "other",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "fp-add" => InstrClass::FpAdd,
            "fp-mul" => InstrClass::FpMul,
            "fp-fma" => InstrClass::FpFma,
            "fp-div" => InstrClass::FpDiv,
            "load" => InstrClass::Load,
            "store" => InstrClass::Store,
            "gather" => InstrClass::Gather,
            "int" => InstrClass::Int,
            "other" => InstrClass::Other,
            _ => return None,
        })
    }
}

/// Performance data for one instruction form.
#[derive(Debug, Clone, PartialEq)]
pub struct InstructionDescriptor {
    pub form: InstructionForm,
    pub uops: Vec<MicroOp>,
    pub latency: u32,
    pub class: InstrClass,
    /// Double-precision elements processed per instruction (flop and
    /// throughput accounting). Defaults from operand widths; scalar SSE/AVX
    /// forms on 16 B registers override it to 1 in the model file.
    pub dp_elems: u32,
    pub notes: String,
}

impl InstructionDescriptor {
    /// Default element count: widest vector operand / 8, else 1.
    pub fn default_dp_elems(form: &InstructionForm) -> u32 {
        form.operands
            .iter()
            .filter_map(|c| match c {
                OperandClass::Vector(w) => Some(u32::from(*w) / 8),
                _ => None,
            })
            .max()
            .unwrap_or(1)
            .max(1)
    }
}

/// Register-width class of a kernel, selecting a frequency curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VectorClass {
    Scalar,
    NarrowVector,
    WideVector512,
}

impl VectorClass {
    pub fn token(&self) -> &'static str {
        match self {
            VectorClass::Scalar => "scalar",
            VectorClass::NarrowVector => "narrow-vector",
            VectorClass::WideVector512 => "wide-vector-512",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "scalar" => VectorClass::Scalar,
            "narrow-vector" => VectorClass::NarrowVector,
            "wide-vector-512" => VectorClass::WideVector512,
            _ => return None,
        })
    }

    fn next_lower(&self) -> Option<VectorClass> {
        match self {
            VectorClass::WideVector512 => Some(VectorClass::NarrowVector),
            VectorClass::NarrowVector => Some(VectorClass::Scalar),
            VectorClass::Scalar => None,
        }
    }
}

/// Sustained frequency as a function of active core count.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCurve {
    /// (active cores, Hz), strictly increasing in cores.
    pub points: Vec<(u32, f64)>,
}

impl FrequencyCurve {
    /// Piecewise-linear interpolation, clamped at the endpoints.
    pub fn at(&self, active_cores: u32) -> f64 {
        let pts = &self.points;
        if active_cores <= pts[0].0 {
            return pts[0].1;
        }
        if active_cores >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        for w in pts.windows(2) {
            let (c0, f0) = w[0];
            let (c1, f1) = w[1];
            if active_cores >= c0 && active_cores <= c1 {
                let t = f64::from(active_cores - c0) / f64::from(c1 - c0);
                return f0 + t * (f1 - f0);
            }
        }
        pts[pts.len() - 1].1
    }
}

/// Full machine description for one microarchitecture.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineModel {
    pub name: String,
    pub isa: Dialect,
    pub ports: Vec<String>,
    /// Global µ-ops issued per cycle.
    pub issue_width: u32,
    pub simd_bytes: u32,
    /// (units, bytes per unit per cycle).
    pub load_units: (u32, u32),
    pub store_units: (u32, u32),
    pub instructions: Vec<InstructionDescriptor>,
    pub freq_curves: std::collections::BTreeMap<VectorClass, FrequencyCurve>,
    /// Measured main-memory bandwidth, bytes/s.
    pub mem_bandwidth: f64,
    pub cores_per_chip: u32,
    pub ccnuma_domains: u32,
    pub base_freq: f64,
    pub max_freq: f64,
    /// Store-to-load forward latency; defaults to the consuming load's
    /// latency when absent.
    pub store_to_load_latency: Option<u32>,
}

/// Errors raised while loading or querying a machine model.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("model invariant violated ({field}): {msg}")]
    Invariant { field: &'static str, msg: String },
    #[error("unknown instruction `{form}`{}", nearest_note(.nearest))]
    UnknownInstruction { form: String, nearest: Vec<String> },
    #[error("ambiguous instruction form `{form}`")]
    AmbiguousForm { form: String },
    #[error("no frequency curve for {0:?} or any lower vector class")]
    NoFrequencyCurve(VectorClass),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn nearest_note(nearest: &[String]) -> String {
    if nearest.is_empty() {
        String::new()
    } else {
        format!(" (nearest: {})", nearest.join(", "))
    }
}

/// One mismatch found by [`MachineModel::validate_against_expectations`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub form: String,
    pub kind: &'static str,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} expected {}, model yields {}",
            self.form, self.kind, self.expected, self.actual
        )
    }
}

impl MachineModel {
    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn port_id(&self, name: &str) -> Option<PortId> {
        self.ports
            .iter()
            .position(|p| p == name)
            .map(|i| PortId(i as u8))
    }

    pub fn port_name(&self, id: PortId) -> &str {
        &self.ports[id.0 as usize]
    }

    /// Exact-match descriptor lookup for a normalized instruction instance.
    ///
    /// Width variants must match exactly; there is no substitution of a
    /// "better" width.
    pub fn lookup(
        &self,
        instr: &InstructionInstance,
    ) -> Result<&InstructionDescriptor, ModelError> {
        let form = InstructionForm {
            mnemonic: instr.mnemonic.clone(),
            operands: instr.operand_classes(),
        };
        self.lookup_form(&form)
    }

    /// Exact-match lookup by form. Descriptor lists are small, so a scan
    /// beats maintaining an index that could go stale if `instructions`
    /// is edited after load.
    pub fn lookup_form(
        &self,
        form: &InstructionForm,
    ) -> Result<&InstructionDescriptor, ModelError> {
        let mut hits = self.instructions.iter().filter(|d| d.form == *form);
        match (hits.next(), hits.next()) {
            (Some(d), None) => Ok(d),
            (Some(_), Some(_)) => Err(ModelError::AmbiguousForm {
                form: form.to_string(),
            }),
            _ => Err(ModelError::UnknownInstruction {
                form: form.to_string(),
                nearest: self.nearest_mnemonics(&form.mnemonic),
            }),
        }
    }

    /// Suggestions for an unknown mnemonic: same-mnemonic width variants
    /// first, then closest names by edit distance.
    fn nearest_mnemonics(&self, mnemonic: &str) -> Vec<String> {
        let mut same: Vec<String> = self
            .instructions
            .iter()
            .filter(|d| d.form.mnemonic == mnemonic)
            .map(|d| d.form.to_string())
            .collect();
        same.sort();
        same.dedup();
        if !same.is_empty() {
            same.truncate(3);
            return same;
        }
        let mut names: Vec<&str> = self
            .instructions
            .iter()
            .map(|d| d.form.mnemonic.as_str())
            .collect();
        names.sort_unstable();
        names.dedup();
        let mut scored: Vec<(usize, &str)> = names
            .into_iter()
            .map(|n| (edit_distance(mnemonic, n), n))
            .filter(|(d, _)| *d <= 3)
            .collect();
        scored.sort();
        scored
            .into_iter()
            .take(3)
            .map(|(_, n)| n.to_string())
            .collect()
    }

    /// Sustained frequency for a vector class at a core count, falling back
    /// to the next-lower class when no curve is shipped for `vclass`.
    pub fn sustained_frequency(
        &self,
        vclass: VectorClass,
        active_cores: u32,
    ) -> Result<f64, ModelError> {
        let mut cls = Some(vclass);
        while let Some(c) = cls {
            if let Some(curve) = self.freq_curves.get(&c) {
                return Ok(curve.at(active_cores));
            }
            cls = c.next_lower();
        }
        Err(ModelError::NoFrequencyCurve(vclass))
    }

    /// Optimal DP flops per cycle over fractional mixes of the model's FP
    /// arithmetic instructions (FMA counts 2 flops/element, ADD/MUL 1),
    /// multiplied out to chip flops/s.
    pub fn theoretical_peak_flops(&self, freq_hz: f64, cores: u32) -> f64 {
        let per_cycle = peak::peak_flops_per_cycle(self);
        per_cycle * freq_hz * f64::from(cores)
    }

    /// Re-derive the reciprocal throughput of every descriptor covered by
    /// the embedded expectations table (transcribed measurement data for
    /// the shipped models) and report mismatches.
    pub fn validate_against_expectations(&self) -> Vec<Diagnostic> {
        expectations::validate(self)
    }

    /// Render the model back into the `.mm` file format.
    pub fn serialize(&self) -> String {
        parse::serialize(self)
    }

    /// Load-time structural checks shared by the parser.
    pub(crate) fn check_invariants(&self) -> Result<(), ModelError> {
        if self.ports.is_empty() {
            return Err(ModelError::Invariant {
                field: "ports",
                msg: "no ports declared".into(),
            });
        }
        if self.issue_width == 0 {
            return Err(ModelError::Invariant {
                field: "issue_width",
                msg: "must be positive".into(),
            });
        }
        let max_uops = self
            .instructions
            .iter()
            .map(|d| d.uops.len() as u32)
            .max()
            .unwrap_or(0);
        if self.issue_width < max_uops {
            return Err(ModelError::Invariant {
                field: "issue_width",
                msg: format!(
                    "issue width {} below max descriptor µ-op count {max_uops}",
                    self.issue_width
                ),
            });
        }
        for d in &self.instructions {
            for u in &d.uops {
                if u.occupancy <= Rat::from_integer(0) {
                    return Err(ModelError::Invariant {
                        field: "uops",
                        msg: format!("{}: non-positive occupancy", d.form),
                    });
                }
                if !u.occupancy.is_integer() && u.occupancy < Rat::from_integer(1) {
                    return Err(ModelError::Invariant {
                        field: "uops",
                        msg: format!("{}: fractional occupancy below 1", d.form),
                    });
                }
                if u.ports.is_empty() {
                    return Err(ModelError::Invariant {
                        field: "uops",
                        msg: format!("{}: empty port set", d.form),
                    });
                }
            }
        }
        for (cls, curve) in &self.freq_curves {
            if curve.points.is_empty() {
                return Err(ModelError::Invariant {
                    field: "freq_curve",
                    msg: format!("{}: empty curve", cls.token()),
                });
            }
            if !curve.points.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(ModelError::Invariant {
                    field: "freq_curve",
                    msg: format!("{}: core counts not strictly increasing", cls.token()),
                });
            }
            for (c, f) in &curve.points {
                if *f < 0.5 * self.base_freq || *f > self.max_freq {
                    return Err(ModelError::Invariant {
                        field: "freq_curve",
                        msg: format!(
                            "{}: {f} Hz at {c} cores outside [half base, max] = [{}, {}]",
                            cls.token(),
                            0.5 * self.base_freq,
                            self.max_freq
                        ),
                    });
                }
            }
        }
        if self.cores_per_chip == 0 || self.ccnuma_domains == 0 {
            return Err(ModelError::Invariant {
                field: "cores_per_chip",
                msg: "cores and ccNUMA domains must be positive".into(),
            });
        }
        if !self.cores_per_chip.is_multiple_of(self.ccnuma_domains) {
            return Err(ModelError::Invariant {
                field: "ccnuma_domains",
                msg: "must evenly divide cores_per_chip".into(),
            });
        }
        Ok(())
    }

    /// Reciprocal throughput of a single-instruction loop of this form,
    /// in cycles/instruction. Convenience over the port scheduler.
    pub fn reciprocal_throughput(&self, form: &InstructionForm) -> Result<Rat, ModelError> {
        let desc = self.lookup_form(form)?;
        let uops: Vec<(PortSet, Rat)> = desc.uops.iter().map(|u| (u.ports, u.occupancy)).collect();
        Ok(crate::port_scheduler::min_makespan(
            &uops,
            self.port_count(),
        ))
    }

    /// Cores per ccNUMA domain.
    pub fn domain_cores(&self) -> u32 {
        self.cores_per_chip / self.ccnuma_domains
    }
}

pub(crate) fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Occupancy-weighted throughput helper used in a few reports: DP
/// elements per cycle for a single-instruction loop.
pub fn elements_per_cycle(model: &MachineModel, form: &InstructionForm) -> Result<Rat, ModelError> {
    let desc = model.lookup_form(form)?;
    let t = model.reciprocal_throughput(form)?;
    if rat::is_zero(t) {
        return Ok(Rat::from_integer(0));
    }
    Ok(Rat::from_integer(i64::from(desc.dp_elems)) / t)
}
