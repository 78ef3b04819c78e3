//! Parser and serializer for the line-oriented `.mm` machine-model format.
//!
//! The format is documented in `docs/model_format.md`. Unknown keys are
//! rejected; all errors carry the offending line number.

use std::collections::BTreeMap;
use std::path::Path;

use super::{
    FrequencyCurve, InstrClass, InstructionDescriptor, InstructionForm, MachineModel, MicroOp,
    ModelError, OperandClass, PortSet, VectorClass,
};
use crate::asm_frontend::Dialect;
use crate::rat;

/// Load and fully validate a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<MachineModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text, &path.display().to_string())
}

/// Parse model text; `origin` labels error messages.
pub fn parse_str(text: &str, origin: &str) -> Result<MachineModel, ModelError> {
    Parser { origin, line_no: 0 }.parse(text)
}

struct Parser<'a> {
    origin: &'a str,
    line_no: usize,
}

#[derive(Default)]
struct MachineSection {
    name: Option<String>,
    isa: Option<Dialect>,
    ports: Option<Vec<String>>,
    issue_width: Option<u32>,
    simd_bytes: Option<u32>,
    load_units: Option<(u32, u32)>,
    store_units: Option<(u32, u32)>,
    mem_bandwidth: Option<f64>,
    cores_per_chip: Option<u32>,
    ccnuma_domains: Option<u32>,
    base_freq: Option<f64>,
    max_freq: Option<f64>,
    store_to_load_latency: Option<u32>,
    freq_curves: BTreeMap<VectorClass, FrequencyCurve>,
}

#[derive(Default)]
struct InstructionSection {
    line: usize,
    form: Option<InstructionForm>,
    class: Option<InstrClass>,
    uops: Option<Vec<(Vec<String>, rat::Rat)>>,
    latency: Option<u32>,
    dp_elems: Option<u32>,
    notes: Option<String>,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ModelError {
        ModelError::Parse {
            path: self.origin.to_string(),
            line: self.line_no,
            msg: msg.into(),
        }
    }

    fn err_at(&self, line: usize, msg: impl Into<String>) -> ModelError {
        ModelError::Parse {
            path: self.origin.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn parse(mut self, text: &str) -> Result<MachineModel, ModelError> {
        let mut machine: Option<MachineSection> = None;
        let mut current_instr: Option<InstructionSection> = None;
        let mut instrs: Vec<InstructionSection> = Vec::new();
        let mut in_machine = false;

        for (idx, raw) in text.lines().enumerate() {
            self.line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if line == "[machine]" {
                if machine.is_some() {
                    return Err(self.err("duplicate [machine] section"));
                }
                machine = Some(MachineSection::default());
                in_machine = true;
                continue;
            }
            if line == "[instruction]" {
                if machine.is_none() {
                    return Err(self.err("[instruction] before [machine]"));
                }
                if let Some(sec) = current_instr.take() {
                    instrs.push(sec);
                }
                current_instr = Some(InstructionSection {
                    line: self.line_no,
                    ..Default::default()
                });
                in_machine = false;
                continue;
            }
            if line.starts_with('[') {
                return Err(self.err(format!("unknown section header `{line}`")));
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(self.err(format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if let Some(sec) = current_instr.as_mut() {
                self.instruction_key(sec, key, value)?;
            } else if in_machine {
                self.machine_key(
                    machine.as_mut().expect("in_machine implies section"),
                    key,
                    value,
                )?;
            } else {
                return Err(self.err(format!("`{key}` outside any section")));
            }
        }
        if let Some(sec) = current_instr.take() {
            instrs.push(sec);
        }

        let Some(m) = machine else {
            self.line_no = text.lines().count();
            return Err(self.err("missing [machine] section"));
        };
        self.finish(m, instrs)
    }

    fn machine_key(
        &self,
        sec: &mut MachineSection,
        key: &str,
        value: &str,
    ) -> Result<(), ModelError> {
        macro_rules! once {
            ($field:expr, $parsed:expr) => {{
                if $field.is_some() {
                    return Err(self.err(format!("duplicate key `{key}`")));
                }
                $field = Some($parsed);
            }};
        }
        match key {
            "name" => once!(sec.name, value.to_string()),
            "isa" => once!(
                sec.isa,
                match value {
                    "aarch64" => Dialect::Aarch64,
                    "x86-att" => Dialect::X86Att,
                    other => return Err(self.err(format!("unknown isa `{other}`"))),
                }
            ),
            "ports" => {
                let ports: Vec<String> = value.split_whitespace().map(str::to_string).collect();
                if ports.len() > 32 {
                    return Err(self.err("at most 32 ports supported"));
                }
                let mut seen = std::collections::HashSet::new();
                for p in &ports {
                    if !seen.insert(p) {
                        return Err(self.err(format!("duplicate port `{p}`")));
                    }
                }
                once!(sec.ports, ports)
            }
            "issue_width" => once!(sec.issue_width, self.parse_u32(value)?),
            "simd_bytes" => once!(sec.simd_bytes, self.parse_u32(value)?),
            "load_units" => once!(sec.load_units, self.parse_units(value)?),
            "store_units" => once!(sec.store_units, self.parse_units(value)?),
            "mem_bandwidth" => once!(sec.mem_bandwidth, self.parse_f64(value)?),
            "cores_per_chip" => once!(sec.cores_per_chip, self.parse_u32(value)?),
            "ccnuma_domains" => once!(sec.ccnuma_domains, self.parse_u32(value)?),
            "base_freq" => once!(sec.base_freq, self.parse_f64(value)?),
            "max_freq" => once!(sec.max_freq, self.parse_f64(value)?),
            "store_to_load_latency" => once!(sec.store_to_load_latency, self.parse_u32(value)?),
            "freq_curve" => {
                let mut parts = value.split_whitespace();
                let cls = parts
                    .next()
                    .and_then(VectorClass::from_token)
                    .ok_or_else(|| self.err("freq_curve needs a vector class token first"))?;
                let mut points = Vec::new();
                for p in parts {
                    let (c, f) = p
                        .split_once(':')
                        .ok_or_else(|| self.err(format!("bad freq point `{p}`, want cores:hz")))?;
                    points.push((self.parse_u32(c)?, self.parse_f64(f)?));
                }
                if points.is_empty() {
                    return Err(self.err("freq_curve needs at least one cores:hz point"));
                }
                if sec
                    .freq_curves
                    .insert(cls, FrequencyCurve { points })
                    .is_some()
                {
                    return Err(self.err(format!("duplicate freq_curve for {}", cls.token())));
                }
            }
            other => return Err(self.err(format!("unknown machine key `{other}`"))),
        }
        Ok(())
    }

    fn instruction_key(
        &self,
        sec: &mut InstructionSection,
        key: &str,
        value: &str,
    ) -> Result<(), ModelError> {
        macro_rules! once {
            ($field:expr, $parsed:expr) => {{
                if $field.is_some() {
                    return Err(self.err(format!("duplicate key `{key}`")));
                }
                $field = Some($parsed);
            }};
        }
        match key {
            "form" => once!(sec.form, self.parse_form(value)?),
            "class" => once!(
                sec.class,
                InstrClass::from_token(value)
                    .ok_or_else(|| self.err(format!("unknown class `{value}`")))?
            ),
            "uops" => once!(sec.uops, self.parse_uops(value)?),
            "latency" => once!(sec.latency, self.parse_u32(value)?),
            "dp_elems" => once!(sec.dp_elems, self.parse_u32(value)?),
            "notes" => once!(sec.notes, value.to_string()),
            other => return Err(self.err(format!("unknown instruction key `{other}`"))),
        }
        Ok(())
    }

    fn parse_u32(&self, s: &str) -> Result<u32, ModelError> {
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("expected integer, got `{s}`")))
    }

    fn parse_f64(&self, s: &str) -> Result<f64, ModelError> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| self.err(format!("expected number, got `{s}`")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(self.err(format!("expected non-negative finite number, got `{s}`")));
        }
        Ok(v)
    }

    fn parse_units(&self, s: &str) -> Result<(u32, u32), ModelError> {
        let (n, w) = s
            .split_once('x')
            .ok_or_else(|| self.err(format!("expected `<count>x<bytes>`, got `{s}`")))?;
        Ok((self.parse_u32(n)?, self.parse_u32(w)?))
    }

    fn parse_form(&self, s: &str) -> Result<InstructionForm, ModelError> {
        let mut parts = s.split_whitespace();
        let mnemonic = parts
            .next()
            .ok_or_else(|| self.err("empty form"))?
            .to_ascii_lowercase();
        let mut operands = Vec::new();
        for tok in parts {
            operands.push(self.parse_operand_class(tok)?);
        }
        Ok(InstructionForm { mnemonic, operands })
    }

    fn parse_operand_class(&self, tok: &str) -> Result<OperandClass, ModelError> {
        let width = |rest: &str| -> Result<u16, ModelError> {
            rest.parse()
                .map_err(|_| self.err(format!("bad operand width in `{tok}`")))
        };
        Ok(match tok.as_bytes() {
            [b'r', ..] => OperandClass::ScalarInt(width(&tok[1..])?),
            [b'f', ..] => OperandClass::ScalarFp(width(&tok[1..])?),
            [b'v', ..] => OperandClass::Vector(width(&tok[1..])?),
            [b'p'] => OperandClass::Predicate,
            [b'm', ..] => OperandClass::Memory {
                width: width(&tok[1..])?,
                gathered: false,
            },
            [b'g', ..] => OperandClass::Memory {
                width: width(&tok[1..])?,
                gathered: true,
            },
            [b'i'] => OperandClass::Immediate,
            [b'l'] => OperandClass::Label,
            _ => return Err(self.err(format!("unknown operand class `{tok}`"))),
        })
    }

    fn parse_uops(&self, s: &str) -> Result<Vec<(Vec<String>, rat::Rat)>, ModelError> {
        let mut out = Vec::new();
        for spec in s.split_whitespace() {
            let (ports, occ) = spec
                .rsplit_once(':')
                .ok_or_else(|| self.err(format!("µ-op `{spec}` missing `:occupancy`")))?;
            let ports = ports
                .strip_prefix('{')
                .and_then(|p| p.strip_suffix('}'))
                .ok_or_else(|| self.err(format!("µ-op ports must be braced, got `{spec}`")))?;
            let names: Vec<String> = ports.split('|').map(|p| p.trim().to_string()).collect();
            if names.iter().any(String::is_empty) {
                return Err(self.err(format!("empty port name in `{spec}`")));
            }
            let occ = rat::parse_decimal(occ)
                .ok_or_else(|| self.err(format!("bad occupancy in `{spec}`")))?;
            out.push((names, occ));
        }
        Ok(out)
    }

    fn finish(
        &self,
        m: MachineSection,
        instrs: Vec<InstructionSection>,
    ) -> Result<MachineModel, ModelError> {
        macro_rules! require {
            ($field:expr, $name:literal) => {
                $field
                    .ok_or_else(|| self.err_at(0, concat!("missing machine key `", $name, "`")))?
            };
        }
        let ports = require!(m.ports, "ports");

        let mut instructions = Vec::with_capacity(instrs.len());
        let mut forms = std::collections::HashSet::new();
        for sec in instrs {
            let form = sec
                .form
                .ok_or_else(|| self.err_at(sec.line, "instruction missing `form`"))?;
            if !forms.insert(form.clone()) {
                return Err(self.err_at(sec.line, format!("duplicate instruction form `{form}`")));
            }
            let raw_uops = sec
                .uops
                .ok_or_else(|| self.err_at(sec.line, format!("{form}: missing `uops`")))?;
            let mut uops = Vec::with_capacity(raw_uops.len());
            for (names, occupancy) in raw_uops {
                let mut set = PortSet::empty();
                for n in names {
                    let id = ports.iter().position(|p| *p == n).ok_or_else(|| {
                        self.err_at(sec.line, format!("{form}: unknown port `{n}`"))
                    })?;
                    set.insert(super::PortId(id as u8));
                }
                uops.push(MicroOp {
                    ports: set,
                    occupancy,
                });
            }
            let latency = sec
                .latency
                .ok_or_else(|| self.err_at(sec.line, format!("{form}: missing `latency`")))?;
            let dp_elems = sec
                .dp_elems
                .unwrap_or_else(|| InstructionDescriptor::default_dp_elems(&form));
            instructions.push(InstructionDescriptor {
                form,
                uops,
                latency,
                class: sec.class.unwrap_or(InstrClass::Other),
                dp_elems,
                notes: sec.notes.unwrap_or_default(),
            });
        }

        let model = MachineModel {
            name: require!(m.name, "name"),
            isa: require!(m.isa, "isa"),
            ports,
            issue_width: require!(m.issue_width, "issue_width"),
            simd_bytes: require!(m.simd_bytes, "simd_bytes"),
            load_units: require!(m.load_units, "load_units"),
            store_units: require!(m.store_units, "store_units"),
            instructions,
            freq_curves: m.freq_curves,
            mem_bandwidth: require!(m.mem_bandwidth, "mem_bandwidth"),
            cores_per_chip: require!(m.cores_per_chip, "cores_per_chip"),
            ccnuma_domains: require!(m.ccnuma_domains, "ccnuma_domains"),
            base_freq: require!(m.base_freq, "base_freq"),
            max_freq: require!(m.max_freq, "max_freq"),
            store_to_load_latency: m.store_to_load_latency,
        };
        model.check_invariants()?;
        Ok(model)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Render a model back into `.mm` text; `parse_str(serialize(m))` yields an
/// equal model.
pub fn serialize(model: &MachineModel) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "[machine]");
    let _ = writeln!(s, "name = {}", model.name);
    let isa = match model.isa {
        Dialect::Aarch64 => "aarch64",
        Dialect::X86Att => "x86-att",
    };
    let _ = writeln!(s, "isa = {isa}");
    let _ = writeln!(s, "ports = {}", model.ports.join(" "));
    let _ = writeln!(s, "issue_width = {}", model.issue_width);
    let _ = writeln!(s, "simd_bytes = {}", model.simd_bytes);
    let _ = writeln!(
        s,
        "load_units = {}x{}",
        model.load_units.0, model.load_units.1
    );
    let _ = writeln!(
        s,
        "store_units = {}x{}",
        model.store_units.0, model.store_units.1
    );
    let _ = writeln!(s, "mem_bandwidth = {}", model.mem_bandwidth);
    let _ = writeln!(s, "cores_per_chip = {}", model.cores_per_chip);
    let _ = writeln!(s, "ccnuma_domains = {}", model.ccnuma_domains);
    let _ = writeln!(s, "base_freq = {}", model.base_freq);
    let _ = writeln!(s, "max_freq = {}", model.max_freq);
    if let Some(l) = model.store_to_load_latency {
        let _ = writeln!(s, "store_to_load_latency = {l}");
    }
    for (cls, curve) in &model.freq_curves {
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|(c, f)| format!("{c}:{f}"))
            .collect();
        let _ = writeln!(s, "freq_curve = {} {}", cls.token(), pts.join(" "));
    }
    for d in &model.instructions {
        let _ = writeln!(s);
        let _ = writeln!(s, "[instruction]");
        let _ = writeln!(s, "form = {}", d.form);
        let _ = writeln!(s, "class = {}", d.class.token());
        let uops: Vec<String> = d
            .uops
            .iter()
            .map(|u| {
                let names: Vec<&str> = u.ports.iter().map(|p| model.port_name(p)).collect();
                format!("{{{}}}:{}", names.join("|"), rat::display(u.occupancy))
            })
            .collect();
        let _ = writeln!(s, "uops = {}", uops.join(" "));
        let _ = writeln!(s, "latency = {}", d.latency);
        if d.dp_elems != InstructionDescriptor::default_dp_elems(&d.form) {
            let _ = writeln!(s, "dp_elems = {}", d.dp_elems);
        }
        if !d.notes.is_empty() {
            let _ = writeln!(s, "notes = {}", d.notes);
        }
    }
    s
}
