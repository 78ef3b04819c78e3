//! Assembly frontend: extract a marked loop body and normalize it into a
//! kernel IR for the AArch64 (A64 + SVE subset) and x86-64 (AT&T syntax)
//! dialects.
//!
//! The IR keeps operands in a canonical destination-last order regardless
//! of source syntax, so the rest of the pipeline never needs to know which
//! dialect an instruction came from.

mod aarch64;
mod x86att;

use std::fmt;

use crate::machine_model::OperandClass;

/// Supported assembly dialects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    Aarch64,
    X86Att,
}

impl Dialect {
    pub fn token(&self) -> &'static str {
        match self {
            Dialect::Aarch64 => "aarch64",
            Dialect::X86Att => "x86-att",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "aarch64" => Some(Dialect::Aarch64),
            "x86-att" => Some(Dialect::X86Att),
            _ => None,
        }
    }
}

/// Register class for dependency and form matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegClass {
    ScalarInt,
    ScalarFp,
    Vector,
    Predicate,
}

/// One architectural register as written, with its canonical identity for
/// dependency analysis (filled by [`normalize`]; sub-register aliases map
/// to full-register names, zero registers map to the empty string).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    /// Lowercased base name without decorations, e.g. `x8`, `z0`, `zmm1`.
    pub name: String,
    /// AArch64 arrangement suffix (`2d`, `d`, ...), kept for printing.
    pub arrangement: Option<String>,
    pub class: RegClass,
    pub width_bytes: u16,
    pub canonical: String,
}

/// Register operand with its dialect decorations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegOperand {
    pub reg: Register,
    /// x86 EVEX write mask (`%zmm1{%k1}`).
    pub mask: Option<Register>,
    /// Written inside `{ ... }` (SVE load/store register list).
    pub sve_list: bool,
    /// SVE predicate qualifier: `z` (zeroing) or `m` (merging).
    pub pred_qualifier: Option<char>,
    /// Trailing shift modifier (`lsl #3`) on a source register.
    pub shift: Option<(String, u8)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Writeback {
    None,
    /// `[x1, #16]!`
    Pre,
    /// `[x1], #16`
    Post,
}

/// Memory reference; base and index are always exposed for dependency
/// analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemRef {
    pub base: Option<Register>,
    pub index: Option<Register>,
    /// Byte multiplier applied to the index (x86 scale, AArch64 `lsl`).
    pub scale: u8,
    pub disp: i64,
    /// AArch64 SVE `mul vl` displacement units.
    pub mul_vl: bool,
    /// Access width in bytes, set from the data operand.
    pub width: u16,
    pub writeback: Writeback,
}

impl MemRef {
    /// Syntactic address identity used for store-to-load matching.
    pub fn address_key(&self) -> (Option<String>, Option<String>, u8, i64, bool) {
        let canon = |r: &Option<Register>| r.as_ref().map(|r| r.canonical.clone());
        (
            canon(&self.base),
            canon(&self.index),
            self.scale,
            self.disp,
            self.mul_vl,
        )
    }

    pub fn gathered(&self) -> bool {
        matches!(&self.index, Some(r) if r.class == RegClass::Vector)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Reg(RegOperand),
    Imm(i64),
    Mem(MemRef),
    Label(String),
}

/// One parsed instruction in canonical destination-last operand order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionInstance {
    pub mnemonic: String,
    pub operands: Vec<Operand>,
    pub source_line: usize,
    /// The last operand is a written register destination.
    pub has_reg_dest: bool,
    /// The destination is also read (accumulating forms, 2-operand x86).
    pub reads_dest: bool,
    /// Sets the dialect's flags register.
    pub writes_flags: bool,
}

/// Loop back edge, recorded as metadata rather than an IR instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackBranch {
    pub mnemonic: String,
    pub target: String,
    pub source_line: usize,
}

/// Normalized loop body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelIR {
    pub dialect: Dialect,
    pub instructions: Vec<InstructionInstance>,
    pub back_branch: Option<BackBranch>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("no {0} marker found (or markers out of order)")]
    MissingMarker(&'static str),
    #[error("multiple {0} markers found")]
    MultipleMarkers(&'static str),
    #[error("empty region between loop markers")]
    EmptyRegion,
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
}

const BEGIN: &str = "LOOP-BEGIN";
const END: &str = "LOOP-END";

fn is_marker(line: &str, word: &str) -> bool {
    let t = line.trim();
    for leader in ["#", "//"] {
        if let Some(rest) = t.strip_prefix(leader) {
            if rest.trim() == word {
                return true;
            }
        }
    }
    false
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#') || t.starts_with("//")
}

/// Extract the lines strictly between the `LOOP-BEGIN`/`LOOP-END` markers,
/// with blank and pure-comment lines removed. Returned lines carry their
/// 1-based source line numbers.
pub fn extract_marked_region(text: &str) -> Result<Vec<(usize, String)>, FrontendError> {
    let lines: Vec<&str> = text.lines().collect();
    let begins: Vec<usize> = (0..lines.len())
        .filter(|&i| is_marker(lines[i], BEGIN))
        .collect();
    let ends: Vec<usize> = (0..lines.len())
        .filter(|&i| is_marker(lines[i], END))
        .collect();
    if begins.len() > 1 {
        return Err(FrontendError::MultipleMarkers(BEGIN));
    }
    if ends.len() > 1 {
        return Err(FrontendError::MultipleMarkers(END));
    }
    let (&b, &e) = match (begins.first(), ends.first()) {
        (Some(b), Some(e)) => (b, e),
        (None, _) => return Err(FrontendError::MissingMarker(BEGIN)),
        (_, None) => return Err(FrontendError::MissingMarker(END)),
    };
    if e < b {
        return Err(FrontendError::MissingMarker(END));
    }
    let region: Vec<(usize, String)> = lines[b + 1..e]
        .iter()
        .enumerate()
        .filter(|(_, l)| !is_comment_or_blank(l))
        .map(|(i, l)| (b + 2 + i, l.to_string()))
        .collect();
    if region.is_empty() {
        return Err(FrontendError::EmptyRegion);
    }
    Ok(region)
}

pub(crate) enum ParsedLine {
    Instruction(InstructionInstance),
    Branch(BackBranch),
}

/// Parse extracted lines into a kernel IR.
///
/// Assembler directives and labels are skipped; branch instructions are
/// recorded as the loop back edge instead of IR instructions. Unknown but
/// well-formed instructions parse fine — descriptor lookup happens later.
pub fn parse_kernel(
    lines: &[(usize, String)],
    dialect: Dialect,
) -> Result<KernelIR, FrontendError> {
    let mut instructions = Vec::new();
    let mut back_branch = None;
    for (line_no, raw) in lines {
        let text = strip_trailing_comment(raw, dialect);
        let t = text.trim();
        if t.is_empty() || t.starts_with('.') && t.ends_with(':') {
            continue;
        }
        if t.ends_with(':') && !t.contains(char::is_whitespace) {
            continue; // label
        }
        if t.starts_with('.') {
            continue; // directive
        }
        let parsed = match dialect {
            Dialect::Aarch64 => aarch64::parse_line(t, *line_no)?,
            Dialect::X86Att => x86att::parse_line(t, *line_no)?,
        };
        match parsed {
            ParsedLine::Instruction(i) => instructions.push(i),
            ParsedLine::Branch(b) => back_branch = Some(b),
        }
    }
    Ok(KernelIR {
        dialect,
        instructions,
        back_branch,
    })
}

fn strip_trailing_comment(line: &str, dialect: Dialect) -> String {
    // `#` introduces immediates on AArch64, so only `//` comments there.
    let cut = match dialect {
        Dialect::Aarch64 => line.find("//"),
        Dialect::X86Att => line.find('#'),
    };
    match cut {
        Some(i) => line[..i].to_string(),
        None => line.to_string(),
    }
}

/// Convenience: extract + parse + normalize a whole listing.
pub fn parse_listing(text: &str, dialect: Dialect) -> Result<KernelIR, FrontendError> {
    let lines = extract_marked_region(text)?;
    Ok(normalize(&parse_kernel(&lines, dialect)?))
}

/// Canonicalize register identities (sub-register aliases collapse to one
/// full-register name per dialect). Idempotent.
pub fn normalize(ir: &KernelIR) -> KernelIR {
    let mut out = ir.clone();
    for instr in &mut out.instructions {
        for op in &mut instr.operands {
            match op {
                Operand::Reg(r) => {
                    canonicalize(&mut r.reg, ir.dialect);
                    if let Some(m) = &mut r.mask {
                        canonicalize(m, ir.dialect);
                    }
                }
                Operand::Mem(m) => {
                    if let Some(b) = &mut m.base {
                        canonicalize(b, ir.dialect);
                    }
                    if let Some(i) = &mut m.index {
                        canonicalize(i, ir.dialect);
                    }
                }
                _ => {}
            }
        }
    }
    out
}

fn canonicalize(reg: &mut Register, dialect: Dialect) {
    reg.canonical = match dialect {
        Dialect::Aarch64 => aarch64::canonical_name(&reg.name),
        Dialect::X86Att => x86att::canonical_name(&reg.name),
    };
}

impl InstructionInstance {
    /// Operand classes in canonical order, for descriptor lookup. A write
    /// mask contributes a predicate class before its register.
    pub fn operand_classes(&self) -> Vec<OperandClass> {
        let mut out = Vec::with_capacity(self.operands.len());
        for op in &self.operands {
            match op {
                Operand::Reg(r) => {
                    if r.mask.is_some() {
                        out.push(OperandClass::Predicate);
                    }
                    out.push(match r.reg.class {
                        RegClass::ScalarInt => OperandClass::ScalarInt(r.reg.width_bytes),
                        RegClass::ScalarFp => OperandClass::ScalarFp(r.reg.width_bytes),
                        RegClass::Vector => OperandClass::Vector(r.reg.width_bytes),
                        RegClass::Predicate => OperandClass::Predicate,
                    });
                }
                Operand::Imm(_) => out.push(OperandClass::Immediate),
                Operand::Mem(m) => out.push(OperandClass::Memory {
                    width: m.width,
                    gathered: m.gathered(),
                }),
                Operand::Label(_) => out.push(OperandClass::Label),
            }
        }
        out
    }

    /// Canonical names of registers read by this instruction. Requires a
    /// normalized IR; zero registers are excluded.
    pub fn read_regs(&self) -> Vec<String> {
        let mut out = Vec::new();
        let dest_idx = if self.has_reg_dest {
            self.operands.len().checked_sub(1)
        } else {
            None
        };
        for (i, op) in self.operands.iter().enumerate() {
            let is_dest = Some(i) == dest_idx;
            match op {
                Operand::Reg(r) => {
                    if !is_dest || self.reads_dest {
                        push_reg(&mut out, &r.reg);
                    }
                    if let Some(m) = &r.mask {
                        push_reg(&mut out, m);
                    }
                }
                Operand::Mem(m) => {
                    if let Some(b) = &m.base {
                        push_reg(&mut out, b);
                    }
                    if let Some(ix) = &m.index {
                        push_reg(&mut out, ix);
                    }
                }
                _ => {}
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Canonical names of registers written by this instruction, including
    /// the flags pseudo-register and writeback address updates.
    pub fn written_regs(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.has_reg_dest {
            if let Some(Operand::Reg(r)) = self.operands.last() {
                push_reg(&mut out, &r.reg);
            }
        }
        for op in &self.operands {
            if let Operand::Mem(m) = op {
                if m.writeback != Writeback::None {
                    if let Some(b) = &m.base {
                        push_reg(&mut out, b);
                    }
                }
            }
        }
        if self.writes_flags {
            out.push("_flags".to_string());
        }
        out.sort();
        out.dedup();
        out
    }

    /// True if this instruction stores to memory (its memory operand is a
    /// destination rather than a source).
    pub fn is_store(&self) -> bool {
        !self.has_reg_dest && self.operands.iter().any(|o| matches!(o, Operand::Mem(_)))
    }

    /// The memory operand, if any.
    pub fn mem_operand(&self) -> Option<&MemRef> {
        self.operands.iter().find_map(|o| match o {
            Operand::Mem(m) => Some(m),
            _ => None,
        })
    }
}

fn push_reg(out: &mut Vec<String>, reg: &Register) {
    assert!(
        !reg.canonical.is_empty() || reg_is_zero(reg),
        "IR must be normalized first"
    );
    if !reg.canonical.is_empty() {
        out.push(reg.canonical.clone());
    }
}

fn reg_is_zero(reg: &Register) -> bool {
    matches!(reg.name.as_str(), "xzr" | "wzr" | "rip")
}

/// Widest vector register width in bytes appearing in the kernel, for
/// vector-class inference. Zero when the kernel is scalar-only.
pub fn widest_vector_bytes(ir: &KernelIR) -> u16 {
    let mut widest = 0;
    for instr in &ir.instructions {
        for op in &instr.operands {
            if let Operand::Reg(r) = op {
                if r.reg.class == RegClass::Vector {
                    widest = widest.max(r.reg.width_bytes);
                }
            }
            if let Operand::Mem(m) = op {
                if let Some(ix) = &m.index {
                    if ix.class == RegClass::Vector {
                        widest = widest.max(ix.width_bytes);
                    }
                }
            }
        }
    }
    widest
}

/// Render the IR back into dialect syntax. The output reparses to an IR
/// equal to the input (modulo dropped labels/directives).
pub fn pretty_print(ir: &KernelIR) -> String {
    let mut out = String::new();
    for instr in &ir.instructions {
        let line = match ir.dialect {
            Dialect::Aarch64 => aarch64::print_instruction(instr),
            Dialect::X86Att => x86att::print_instruction(instr),
        };
        out.push_str(&line);
        out.push('\n');
    }
    if let Some(b) = &ir.back_branch {
        out.push_str(&format!("{} {}\n", b.mnemonic, b.target));
    }
    out
}

/// Stable one-line-per-instruction dump of the canonical IR, for golden
/// tests (`--dump-ir`).
pub fn dump_ir(ir: &KernelIR) -> String {
    let mut out = String::new();
    for (i, instr) in ir.instructions.iter().enumerate() {
        let classes: Vec<String> = instr
            .operand_classes()
            .iter()
            .map(|c| c.to_string())
            .collect();
        let reads = instr.read_regs().join(",");
        let writes = instr.written_regs().join(",");
        out.push_str(&format!(
            "{i}: {} [{}] reads={{{reads}}} writes={{{writes}}}\n",
            instr.mnemonic,
            classes.join(" "),
        ));
    }
    out
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}
