//! A64 + SVE subset parser (GNU assembler syntax).
//!
//! Destination-first source syntax is rotated into the IR's
//! destination-last order. SVE `z` registers are fixed at the 128-bit
//! vector length of the modeled core.

use super::{
    BackBranch, FrontendError, InstructionInstance, MemRef, Operand, ParsedLine, RegClass,
    RegOperand, Register, Writeback,
};

/// Vector length of the modeled SVE implementation, in bytes.
const SVE_VL_BYTES: u16 = 16;

fn syntax(line: usize, msg: impl Into<String>) -> FrontendError {
    FrontendError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn is_branch(m: &str) -> bool {
    matches!(
        m,
        "b" | "br" | "bl" | "blr" | "ret" | "cbz" | "cbnz" | "tbz" | "tbnz"
    ) || m.starts_with("b.")
}

fn is_store(m: &str) -> bool {
    matches!(m, "str" | "stur" | "stp" | "stnt1d")
        || (m.starts_with("st1") || m.starts_with("st2") || m.starts_with("st3"))
}

fn is_load(m: &str) -> bool {
    matches!(m, "ldr" | "ldur" | "ldp" | "ldnt1d") || m.starts_with("ld1") || m.starts_with("ld2")
}

/// Instructions with no register destination (all operands are sources).
fn has_no_dest(m: &str) -> bool {
    matches!(m, "cmp" | "cmn" | "tst" | "fcmp" | "fcmpe" | "prfm" | "nop") || is_store(m)
}

/// Destination-also-read (accumulating) forms.
fn reads_dest(m: &str) -> bool {
    matches!(
        m,
        "fmla" | "fmls" | "fmad" | "fmsb" | "mla" | "mls" | "incd" | "incw" | "inch" | "incb"
    )
}

fn writes_flags(m: &str) -> bool {
    matches!(
        m,
        "cmp" | "cmn" | "tst" | "fcmp" | "fcmpe" | "adds" | "subs" | "ands" | "negs"
    ) || m.starts_with("while")
}

pub(super) fn parse_line(text: &str, line_no: usize) -> Result<ParsedLine, FrontendError> {
    let (mnemonic, rest) = split_mnemonic(text);
    let mnemonic = mnemonic.to_ascii_lowercase();
    if is_branch(&mnemonic) {
        return Ok(ParsedLine::Branch(BackBranch {
            mnemonic,
            target: rest.trim().to_string(),
            source_line: line_no,
        }));
    }

    let pieces = split_operands(rest);
    let mut operands: Vec<Operand> = Vec::with_capacity(pieces.len());
    for piece in &pieces {
        let piece = piece.trim();
        if piece.is_empty() {
            return Err(syntax(line_no, "empty operand"));
        }
        // Trailing shift modifier attaches to the previous register.
        if let Some((kind, amount)) = parse_shift(piece) {
            match operands.last_mut() {
                Some(Operand::Reg(r)) if r.shift.is_none() => {
                    r.shift = Some((kind, amount));
                    continue;
                }
                _ => return Err(syntax(line_no, format!("dangling shift `{piece}`"))),
            }
        }
        operands.push(parse_operand(piece, line_no)?);
    }

    // Post-index writeback arrives as a trailing immediate after the
    // memory operand: `ldr q0, [x1], #16`.
    if (is_load(&mnemonic) || is_store(&mnemonic)) && operands.len() >= 2 {
        if let (Some(Operand::Imm(disp)), Some(Operand::Mem(_))) =
            (operands.last().cloned(), operands.get(operands.len() - 2))
        {
            let len = operands.len();
            if let Operand::Mem(m) = &mut operands[len - 2] {
                m.writeback = Writeback::Post;
                m.disp = disp;
            }
            operands.pop();
        }
    }

    let no_dest = has_no_dest(&mnemonic);
    let mut has_reg_dest = false;
    if !no_dest && matches!(operands.first(), Some(Operand::Reg(_))) {
        let dest = operands.remove(0);
        operands.push(dest);
        has_reg_dest = true;
    }

    assign_mem_width(&mut operands, &mnemonic);

    Ok(ParsedLine::Instruction(InstructionInstance {
        reads_dest: has_reg_dest && reads_dest(&mnemonic),
        writes_flags: writes_flags(&mnemonic),
        mnemonic,
        operands,
        source_line: line_no,
        has_reg_dest,
    }))
}

fn split_mnemonic(text: &str) -> (&str, &str) {
    match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], &text[i..]),
        None => (text, ""),
    }
}

/// Split on top-level commas, respecting `[]` and `{}`.
fn split_operands(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '[' | '{' | '(' => depth += 1,
            ']' | '}' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out.retain(|s| !s.is_empty());
    out
}

fn parse_shift(piece: &str) -> Option<(String, u8)> {
    let mut it = piece.split_whitespace();
    let kind = it.next()?.to_ascii_lowercase();
    if !matches!(
        kind.as_str(),
        "lsl" | "lsr" | "asr" | "uxtw" | "sxtw" | "uxtx" | "sxtx"
    ) {
        return None;
    }
    match it.next() {
        None => Some((kind, 0)),
        Some(amt) => {
            let amt = amt.strip_prefix('#')?;
            Some((kind, amt.parse().ok()?))
        }
    }
}

fn parse_operand(piece: &str, line_no: usize) -> Result<Operand, FrontendError> {
    if let Some(imm) = piece.strip_prefix('#') {
        let v =
            parse_int(imm).ok_or_else(|| syntax(line_no, format!("bad immediate `{piece}`")))?;
        return Ok(Operand::Imm(v));
    }
    if piece.starts_with('[') {
        return parse_mem(piece, line_no).map(Operand::Mem);
    }
    if piece.starts_with('{') {
        let inner = piece
            .strip_prefix('{')
            .and_then(|p| p.strip_suffix('}'))
            .ok_or_else(|| syntax(line_no, format!("unbalanced braces in `{piece}`")))?;
        let reg = parse_register(inner.trim())
            .ok_or_else(|| syntax(line_no, format!("bad register list `{piece}`")))?;
        return Ok(Operand::Reg(RegOperand {
            reg,
            mask: None,
            sve_list: true,
            pred_qualifier: None,
            shift: None,
        }));
    }
    // Predicate with qualifier: p0/z, p0/m.
    if let Some((reg, qual)) = piece.split_once('/') {
        if let Some(r) = parse_register(reg.trim()) {
            if r.class == RegClass::Predicate {
                let q = qual.trim().to_ascii_lowercase();
                if q == "z" || q == "m" {
                    return Ok(Operand::Reg(RegOperand {
                        reg: r,
                        mask: None,
                        sve_list: false,
                        pred_qualifier: q.chars().next(),
                        shift: None,
                    }));
                }
            }
        }
        return Err(syntax(line_no, format!("bad predicate operand `{piece}`")));
    }
    if let Some(reg) = parse_register(piece) {
        return Ok(Operand::Reg(RegOperand {
            reg,
            mask: None,
            sve_list: false,
            pred_qualifier: None,
            shift: None,
        }));
    }
    // Anything else (`.L3`, symbols) is a label reference.
    if piece
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || "._$".contains(c))
    {
        return Ok(Operand::Label(piece.to_string()));
    }
    Err(syntax(line_no, format!("unrecognized operand `{piece}`")))
}

fn parse_int(s: &str) -> Option<i64> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = if let Some(hex) = body.strip_prefix("0x") {
        i64::from_str_radix(hex, 16).ok()?
    } else {
        body.parse().ok()?
    };
    Some(if neg { -v } else { v })
}

fn parse_mem(piece: &str, line_no: usize) -> Result<MemRef, FrontendError> {
    let (inner, writeback) = match piece.strip_suffix('!') {
        Some(p) => (p, Writeback::Pre),
        None => (piece, Writeback::None),
    };
    let inner = inner
        .strip_prefix('[')
        .and_then(|p| p.strip_suffix(']'))
        .ok_or_else(|| syntax(line_no, format!("unbalanced brackets in `{piece}`")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.is_empty() || parts[0].is_empty() {
        return Err(syntax(line_no, "empty memory operand"));
    }
    let base = parse_register(parts[0])
        .ok_or_else(|| syntax(line_no, format!("bad base register `{}`", parts[0])))?;
    let mut mem = MemRef {
        base: Some(base),
        index: None,
        scale: 1,
        disp: 0,
        mul_vl: false,
        width: 0,
        writeback,
    };
    let mut i = 1;
    while i < parts.len() {
        let p = parts[i];
        if let Some(imm) = p.strip_prefix('#') {
            mem.disp =
                parse_int(imm).ok_or_else(|| syntax(line_no, format!("bad displacement `{p}`")))?;
            // `#1, mul vl` — SVE vector-length-scaled displacement.
            if parts
                .get(i + 1)
                .map(|n| n.eq_ignore_ascii_case("mul vl"))
                .unwrap_or(false)
            {
                mem.mul_vl = true;
                i += 1;
            }
        } else if let Some((_kind, amount)) = parse_shift(p) {
            if mem.index.is_none() {
                return Err(syntax(line_no, format!("shift without index in `{piece}`")));
            }
            if amount > 6 {
                return Err(syntax(
                    line_no,
                    format!("shift amount too large in `{piece}`"),
                ));
            }
            mem.scale = 1u8 << amount;
        } else if let Some(reg) = parse_register(p) {
            mem.index = Some(reg);
        } else {
            return Err(syntax(line_no, format!("bad memory operand part `{p}`")));
        }
        i += 1;
    }
    Ok(mem)
}

/// Parse one register token (with optional arrangement suffix).
fn parse_register(s: &str) -> Option<Register> {
    let s = s.trim().to_ascii_lowercase();
    let (name, arrangement) = match s.split_once('.') {
        Some((n, a)) => (n.to_string(), Some(a.to_string())),
        None => (s.clone(), None),
    };
    if matches!(name.as_str(), "sp" | "wsp") {
        return Some(Register {
            name,
            arrangement: None,
            class: RegClass::ScalarInt,
            width_bytes: 8,
            canonical: String::new(),
        });
    }
    if matches!(name.as_str(), "xzr" | "wzr") {
        return Some(Register {
            name,
            arrangement: None,
            class: RegClass::ScalarInt,
            width_bytes: 8,
            canonical: String::new(),
        });
    }
    if name.len() < 2 || !name.is_ascii() {
        return None;
    }
    let (prefix, num) = name.split_at(1);
    let n: u32 = num.parse().ok()?;
    let (class, width) = match prefix {
        "x" if n <= 30 => (RegClass::ScalarInt, 8),
        "w" if n <= 30 => (RegClass::ScalarInt, 4),
        "q" if n <= 31 => (RegClass::Vector, 16),
        "d" if n <= 31 => (RegClass::ScalarFp, 8),
        "s" if n <= 31 => (RegClass::ScalarFp, 4),
        "h" if n <= 31 => (RegClass::ScalarFp, 2),
        "b" if n <= 31 => (RegClass::ScalarFp, 1),
        "v" if n <= 31 => (RegClass::Vector, neon_width(arrangement.as_deref())),
        "z" if n <= 31 => (RegClass::Vector, SVE_VL_BYTES),
        "p" if n <= 15 => (RegClass::Predicate, 0),
        _ => return None,
    };
    Some(Register {
        name,
        arrangement,
        class,
        width_bytes: width,
        canonical: String::new(),
    })
}

fn neon_width(arrangement: Option<&str>) -> u16 {
    match arrangement {
        Some("8b" | "4h" | "2s" | "1d") => 8,
        _ => 16,
    }
}

/// Full-register identity for dependency analysis: sub-registers collapse,
/// SVE `z` overlays the SIMD `v` file, zero registers vanish.
pub(super) fn canonical_name(name: &str) -> String {
    if matches!(name, "xzr" | "wzr") {
        return String::new();
    }
    if matches!(name, "sp" | "wsp") {
        return "sp".to_string();
    }
    let (prefix, num) = name.split_at(1);
    match prefix {
        "x" | "w" => format!("x{num}"),
        "b" | "h" | "s" | "d" | "q" | "v" | "z" => format!("v{num}"),
        "p" => format!("p{num}"),
        _ => name.to_string(),
    }
}

fn mem_data_width(operands: &[Operand]) -> u16 {
    let mut fp_or_vec = 0u16;
    let mut int_w = 0u16;
    for op in operands {
        if let Operand::Reg(r) = op {
            match r.reg.class {
                RegClass::Vector | RegClass::ScalarFp => {
                    fp_or_vec = fp_or_vec.max(r.reg.width_bytes)
                }
                RegClass::ScalarInt => int_w = int_w.max(r.reg.width_bytes),
                RegClass::Predicate => {}
            }
        }
    }
    if fp_or_vec > 0 {
        fp_or_vec
    } else if int_w > 0 {
        int_w
    } else {
        8
    }
}

fn assign_mem_width(operands: &mut [Operand], _mnemonic: &str) {
    let width = mem_data_width(operands);
    for op in operands.iter_mut() {
        if let Operand::Mem(m) = op {
            m.width = width;
        }
    }
}

pub(super) fn print_instruction(instr: &InstructionInstance) -> String {
    let mut ops: Vec<&Operand> = instr.operands.iter().collect();
    if instr.has_reg_dest {
        let dest = ops.pop().expect("has_reg_dest implies an operand");
        ops.insert(0, dest);
    }
    let rendered: Vec<String> = ops.iter().map(|o| print_operand(o)).collect();
    if rendered.is_empty() {
        instr.mnemonic.clone()
    } else {
        format!("{} {}", instr.mnemonic, rendered.join(", "))
    }
}

fn print_operand(op: &Operand) -> String {
    match op {
        Operand::Imm(v) => format!("#{v}"),
        Operand::Label(l) => l.clone(),
        Operand::Reg(r) => {
            let mut s = print_reg(&r.reg);
            if let Some(q) = r.pred_qualifier {
                s = format!("{s}/{q}");
            }
            if r.sve_list {
                s = format!("{{ {s} }}");
            }
            if let Some((kind, amount)) = &r.shift {
                s = format!("{s}, {kind} #{amount}");
            }
            s
        }
        Operand::Mem(m) => print_mem(m),
    }
}

fn print_reg(r: &Register) -> String {
    match &r.arrangement {
        Some(a) => format!("{}.{a}", r.name),
        None => r.name.clone(),
    }
}

fn print_mem(m: &MemRef) -> String {
    let base = m.base.as_ref().map(print_reg).unwrap_or_default();
    let core = if let Some(ix) = &m.index {
        if m.scale > 1 {
            format!(
                "[{base}, {}, lsl #{}]",
                print_reg(ix),
                m.scale.trailing_zeros()
            )
        } else {
            format!("[{base}, {}]", print_reg(ix))
        }
    } else if m.mul_vl {
        format!("[{base}, #{}, mul vl]", m.disp)
    } else if m.disp != 0 && m.writeback != Writeback::Post {
        format!("[{base}, #{}]", m.disp)
    } else {
        format!("[{base}]")
    };
    match m.writeback {
        Writeback::None => core,
        Writeback::Pre => format!("{core}!"),
        Writeback::Post => format!("{core}, #{}", m.disp),
    }
}
