//! x86-64 AT&T-syntax subset parser.
//!
//! AT&T order is already destination-last, so operands pass through
//! unchanged. EVEX write masks (`%zmm1{%k1}`) are kept as a decoration on
//! the register operand and contribute a predicate class to the form.

use super::{
    BackBranch, FrontendError, InstructionInstance, MemRef, Operand, ParsedLine, RegClass,
    RegOperand, Register, Writeback,
};

fn syntax(line: usize, msg: impl Into<String>) -> FrontendError {
    FrontendError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn is_branch(m: &str) -> bool {
    m.starts_with('j') || matches!(m, "call" | "ret" | "loop" | "loope" | "loopne")
}

fn is_compare(m: &str) -> bool {
    m.starts_with("cmp")
        || m.starts_with("test")
        || m.starts_with("ucomis")
        || m.starts_with("comis")
}

fn is_fma(m: &str) -> bool {
    m.starts_with("vfmadd")
        || m.starts_with("vfmsub")
        || m.starts_with("vfnmadd")
        || m.starts_with("vfnmsub")
}

/// Two-operand read-modify-write arithmetic families (plus one-operand
/// inc/dec/neg/not). The `v`-prefixed AVX forms are three-operand and not
/// RMW, except the FMA family.
fn is_rmw_family(m: &str) -> bool {
    if is_fma(m) {
        return true;
    }
    if m.starts_with('v') {
        return false;
    }
    const PREFIXES: [&str; 17] = [
        "add", "sub", "imul", "mul", "div", "and", "or", "xor", "shl", "shr", "sar", "rol", "ror",
        "inc", "dec", "neg", "not",
    ];
    PREFIXES.iter().any(|p| m.starts_with(p))
}

fn writes_flags(m: &str) -> bool {
    if m.starts_with('v') || m.starts_with("mov") {
        return false;
    }
    // SSE scalar/packed FP math (addsd etc.) does not touch RFLAGS.
    if matches!(
        m,
        "addsd" | "subsd" | "mulsd" | "divsd" | "addpd" | "subpd" | "mulpd" | "divpd"
    ) {
        return false;
    }
    const PREFIXES: [&str; 14] = [
        "add", "sub", "imul", "and", "or", "xor", "shl", "shr", "sar", "inc", "dec", "neg", "cmp",
        "test",
    ];
    PREFIXES.iter().any(|p| m.starts_with(p))
}

pub(super) fn parse_line(text: &str, line_no: usize) -> Result<ParsedLine, FrontendError> {
    let (mnemonic, rest) = match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], &text[i..]),
        None => (text, ""),
    };
    let mnemonic = mnemonic.to_ascii_lowercase();
    if is_branch(&mnemonic) {
        return Ok(ParsedLine::Branch(BackBranch {
            mnemonic,
            target: rest.trim().to_string(),
            source_line: line_no,
        }));
    }

    let pieces = split_operands(rest);
    let mut operands = Vec::with_capacity(pieces.len());
    for piece in &pieces {
        operands.push(parse_operand(piece.trim(), line_no)?);
    }

    let has_reg_dest = !is_compare(&mnemonic) && matches!(operands.last(), Some(Operand::Reg(_)));
    let reads_dest =
        has_reg_dest && (is_fma(&mnemonic) || (is_rmw_family(&mnemonic) && operands.len() <= 2));

    assign_mem_width(&mut operands, &mnemonic);

    Ok(ParsedLine::Instruction(InstructionInstance {
        writes_flags: writes_flags(&mnemonic),
        mnemonic,
        operands,
        source_line: line_no,
        has_reg_dest,
        reads_dest,
    }))
}

/// Split on top-level commas; parentheses guard SIB memory operands.
fn split_operands(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
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

fn parse_operand(piece: &str, line_no: usize) -> Result<Operand, FrontendError> {
    if let Some(imm) = piece.strip_prefix('$') {
        let v =
            parse_int(imm).ok_or_else(|| syntax(line_no, format!("bad immediate `{piece}`")))?;
        return Ok(Operand::Imm(v));
    }
    if piece.starts_with('%') {
        return parse_reg_operand(piece, line_no).map(Operand::Reg);
    }
    if piece.contains('(') {
        return parse_mem(piece, line_no).map(Operand::Mem);
    }
    if piece
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || "._$".contains(c))
        && !piece.is_empty()
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

/// `%zmm1` or `%zmm1{%k1}`.
fn parse_reg_operand(piece: &str, line_no: usize) -> Result<RegOperand, FrontendError> {
    let (reg_text, mask) = match piece.find('{') {
        Some(i) => {
            let mask_text = piece[i..]
                .strip_prefix('{')
                .and_then(|m| m.strip_suffix('}'))
                .ok_or_else(|| syntax(line_no, format!("bad mask in `{piece}`")))?;
            let mask = parse_register(mask_text.trim())
                .filter(|r| r.class == RegClass::Predicate)
                .ok_or_else(|| syntax(line_no, format!("bad mask register in `{piece}`")))?;
            (&piece[..i], Some(mask))
        }
        None => (piece, None),
    };
    let reg = parse_register(reg_text.trim())
        .ok_or_else(|| syntax(line_no, format!("unknown register `{reg_text}`")))?;
    Ok(RegOperand {
        reg,
        mask,
        sve_list: false,
        pred_qualifier: None,
        shift: None,
    })
}

fn parse_mem(piece: &str, line_no: usize) -> Result<MemRef, FrontendError> {
    let open = piece.find('(').expect("checked by caller");
    let disp_text = &piece[..open];
    let inner = piece[open..]
        .strip_prefix('(')
        .and_then(|p| p.strip_suffix(')'))
        .ok_or_else(|| syntax(line_no, format!("unbalanced parens in `{piece}`")))?;
    let disp = if disp_text.is_empty() {
        0
    } else {
        parse_int(disp_text)
            .ok_or_else(|| syntax(line_no, format!("bad displacement `{disp_text}`")))?
    };
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() > 3 {
        return Err(syntax(
            line_no,
            format!("too many memory components in `{piece}`"),
        ));
    }
    let base = match parts.first() {
        Some(&"") | None => None,
        Some(p) => {
            Some(parse_register(p).ok_or_else(|| syntax(line_no, format!("bad base `{p}`")))?)
        }
    };
    let index = match parts.get(1) {
        Some(&"") | None => None,
        Some(p) => {
            Some(parse_register(p).ok_or_else(|| syntax(line_no, format!("bad index `{p}`")))?)
        }
    };
    let scale: u8 = match parts.get(2) {
        Some(&"") | None => 1,
        Some(p) => p
            .parse()
            .ok()
            .filter(|s| matches!(s, 1 | 2 | 4 | 8))
            .ok_or_else(|| syntax(line_no, format!("bad scale `{p}`")))?,
    };
    if base.is_none() && index.is_none() {
        return Err(syntax(
            line_no,
            format!("memory operand without registers `{piece}`"),
        ));
    }
    Ok(MemRef {
        base,
        index,
        scale,
        disp,
        mul_vl: false,
        width: 0,
        writeback: Writeback::None,
    })
}

fn parse_register(s: &str) -> Option<Register> {
    let name = s.strip_prefix('%')?.to_ascii_lowercase();
    let (class, width) = classify(&name)?;
    Some(Register {
        name,
        arrangement: None,
        class,
        width_bytes: width,
        canonical: String::new(),
    })
}

fn classify(name: &str) -> Option<(RegClass, u16)> {
    if let Some(rest) = name.strip_prefix("zmm") {
        rest.parse::<u8>().ok().filter(|n| *n < 32)?;
        return Some((RegClass::Vector, 64));
    }
    if let Some(rest) = name.strip_prefix("ymm") {
        rest.parse::<u8>().ok().filter(|n| *n < 32)?;
        return Some((RegClass::Vector, 32));
    }
    if let Some(rest) = name.strip_prefix("xmm") {
        rest.parse::<u8>().ok().filter(|n| *n < 32)?;
        return Some((RegClass::Vector, 16));
    }
    if let Some(rest) = name.strip_prefix('k') {
        if rest.parse::<u8>().ok().filter(|n| *n < 8).is_some() {
            return Some((RegClass::Predicate, 0));
        }
    }
    if name == "rip" {
        return Some((RegClass::ScalarInt, 8));
    }
    if gpr_family(name).is_some() {
        let width = match name {
            n if n.starts_with('r')
                && !n.ends_with('d')
                && !n.ends_with('w')
                && !n.ends_with('b') =>
            {
                8
            }
            n if n.starts_with('e') => 4,
            n if n.ends_with('d') => 4,
            n if n.ends_with('w') => 2,
            _ => 2, // 16/8-bit legacy names; width rarely matters
        };
        return Some((RegClass::ScalarInt, width));
    }
    None
}

/// Map any GPR alias to its 64-bit family name; `None` if not a GPR.
fn gpr_family(name: &str) -> Option<&'static str> {
    const FAMILIES: [(&str, [&str; 4]); 16] = [
        ("rax", ["rax", "eax", "ax", "al"]),
        ("rbx", ["rbx", "ebx", "bx", "bl"]),
        ("rcx", ["rcx", "ecx", "cx", "cl"]),
        ("rdx", ["rdx", "edx", "dx", "dl"]),
        ("rsi", ["rsi", "esi", "si", "sil"]),
        ("rdi", ["rdi", "edi", "di", "dil"]),
        ("rbp", ["rbp", "ebp", "bp", "bpl"]),
        ("rsp", ["rsp", "esp", "sp", "spl"]),
        ("r8", ["r8", "r8d", "r8w", "r8b"]),
        ("r9", ["r9", "r9d", "r9w", "r9b"]),
        ("r10", ["r10", "r10d", "r10w", "r10b"]),
        ("r11", ["r11", "r11d", "r11w", "r11b"]),
        ("r12", ["r12", "r12d", "r12w", "r12b"]),
        ("r13", ["r13", "r13d", "r13w", "r13b"]),
        ("r14", ["r14", "r14d", "r14w", "r14b"]),
        ("r15", ["r15", "r15d", "r15w", "r15b"]),
    ];
    for (family, aliases) in FAMILIES {
        if aliases.contains(&name)
            || (family == "rax" && matches!(name, "ah"))
            || (family == "rbx" && matches!(name, "bh"))
            || (family == "rcx" && matches!(name, "ch"))
            || (family == "rdx" && matches!(name, "dh"))
        {
            return Some(family);
        }
    }
    None
}

/// Full-register identity: GPR aliases collapse to the 64-bit name, all
/// SIMD widths collapse to the `zmm` name, `rip` vanishes.
pub(super) fn canonical_name(name: &str) -> String {
    if name == "rip" {
        return String::new();
    }
    if let Some(rest) = name
        .strip_prefix("xmm")
        .or_else(|| name.strip_prefix("ymm"))
        .or_else(|| name.strip_prefix("zmm"))
    {
        return format!("zmm{rest}");
    }
    if name.starts_with('k') && name[1..].parse::<u8>().is_ok() {
        return name.to_string();
    }
    gpr_family(name)
        .map(str::to_string)
        .unwrap_or_else(|| name.to_string())
}

fn assign_mem_width(operands: &mut [Operand], mnemonic: &str) {
    let mut fp_or_vec = 0u16;
    let mut int_w = 0u16;
    for op in operands.iter() {
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
    // Scalar SSE/AVX forms move 8 bytes even though xmm registers are 16.
    let scalar_fp = mnemonic.ends_with("sd") || mnemonic.ends_with("2sd");
    let width = if scalar_fp {
        8
    } else if fp_or_vec > 0 {
        fp_or_vec
    } else if int_w > 0 {
        int_w
    } else {
        8
    };
    for op in operands.iter_mut() {
        if let Operand::Mem(m) = op {
            m.width = width;
        }
    }
}

pub(super) fn print_instruction(instr: &InstructionInstance) -> String {
    let rendered: Vec<String> = instr.operands.iter().map(print_operand).collect();
    if rendered.is_empty() {
        instr.mnemonic.clone()
    } else {
        format!("{} {}", instr.mnemonic, rendered.join(", "))
    }
}

fn print_operand(op: &Operand) -> String {
    match op {
        Operand::Imm(v) => format!("${v}"),
        Operand::Label(l) => l.clone(),
        Operand::Reg(r) => match &r.mask {
            Some(m) => format!("%{}{{%{}}}", r.reg.name, m.name),
            None => format!("%{}", r.reg.name),
        },
        Operand::Mem(m) => {
            let disp = if m.disp != 0 {
                m.disp.to_string()
            } else {
                String::new()
            };
            let base = m
                .base
                .as_ref()
                .map(|r| format!("%{}", r.name))
                .unwrap_or_default();
            match &m.index {
                Some(ix) => format!("{disp}({base},%{},{})", ix.name, m.scale),
                None => format!("{disp}({base})"),
            }
        }
    }
}
