//! Synthetic kernel construction from instruction forms.
//!
//! Builds register-disjoint instruction instances for a descriptor form,
//! which is how single-instruction throughput loops and steady-state FP
//! mixes are fed to the analyzer without an assembly fixture.

use crate::asm_frontend::{
    Dialect, InstructionInstance, KernelIR, MemRef, Operand, RegClass, RegOperand, Register,
    Writeback,
};
use crate::machine_model::{InstructionForm, MachineModel, OperandClass};

/// Allocates dialect-appropriate register names so consecutive instances
/// stay independent.
pub struct RegAlloc {
    dialect: Dialect,
    vec: usize,
    int: usize,
    pred: usize,
}

const X86_INT: [&str; 9] = ["rax", "rbx", "rcx", "rdx", "rsi", "rdi", "r9", "r10", "r11"];

impl RegAlloc {
    pub fn new(dialect: Dialect) -> Self {
        RegAlloc {
            dialect,
            vec: 0,
            int: 0,
            pred: 0,
        }
    }

    fn vector(&mut self, width: u16) -> Register {
        let n = self.vec % 32;
        self.vec += 1;
        match self.dialect {
            Dialect::Aarch64 => Register {
                name: format!("v{n}"),
                arrangement: Some("2d".into()),
                class: RegClass::Vector,
                width_bytes: 16,
                canonical: String::new(),
            },
            Dialect::X86Att => {
                let prefix = match width {
                    64 => "zmm",
                    32 => "ymm",
                    _ => "xmm",
                };
                Register {
                    name: format!("{prefix}{n}"),
                    arrangement: None,
                    class: RegClass::Vector,
                    width_bytes: width,
                    canonical: String::new(),
                }
            }
        }
    }

    fn scalar_fp(&mut self, width: u16) -> Register {
        let n = self.vec % 32;
        self.vec += 1;
        match self.dialect {
            Dialect::Aarch64 => Register {
                name: format!("{}{n}", if width == 4 { "s" } else { "d" }),
                arrangement: None,
                class: RegClass::ScalarFp,
                width_bytes: width,
                canonical: String::new(),
            },
            Dialect::X86Att => Register {
                name: format!("xmm{n}"),
                arrangement: None,
                class: RegClass::Vector,
                width_bytes: 16,
                canonical: String::new(),
            },
        }
    }

    fn scalar_int(&mut self) -> Register {
        let i = self.int;
        self.int += 1;
        let name = match self.dialect {
            Dialect::Aarch64 => format!("x{}", i % 29),
            Dialect::X86Att => X86_INT[i % X86_INT.len()].to_string(),
        };
        Register {
            name,
            arrangement: None,
            class: RegClass::ScalarInt,
            width_bytes: 8,
            canonical: String::new(),
        }
    }

    fn predicate(&mut self) -> Register {
        let n = self.pred % 8;
        self.pred += 1;
        let name = match self.dialect {
            Dialect::Aarch64 => format!("p{n}"),
            Dialect::X86Att => format!("k{}", (n % 7) + 1),
        };
        Register {
            name,
            arrangement: (self.dialect == Dialect::Aarch64).then(|| "d".into()),
            class: RegClass::Predicate,
            width_bytes: 0,
            canonical: String::new(),
        }
    }
}

/// Build one instance of `form` with fresh registers from `alloc`.
///
/// `reads_dest` controls whether the written register also counts as a
/// source (an accumulating instruction); pass `false` to build
/// dependency-free steady-state kernels.
pub fn instance(
    form: &InstructionForm,
    dialect: Dialect,
    alloc: &mut RegAlloc,
    reads_dest: bool,
) -> InstructionInstance {
    let mut operands = Vec::with_capacity(form.operands.len());
    let mut pending_mask: Option<Register> = None;
    for (i, class) in form.operands.iter().enumerate() {
        // An x86 predicate immediately before a register is a write mask.
        if dialect == Dialect::X86Att
            && *class == OperandClass::Predicate
            && matches!(form.operands.get(i + 1), Some(OperandClass::Vector(_)))
        {
            pending_mask = Some(alloc.predicate());
            continue;
        }
        let op = match class {
            OperandClass::Vector(w) => Operand::Reg(RegOperand {
                reg: alloc.vector(*w),
                mask: pending_mask.take(),
                sve_list: false,
                pred_qualifier: None,
                shift: None,
            }),
            OperandClass::ScalarFp(w) => Operand::Reg(RegOperand {
                reg: alloc.scalar_fp(*w),
                mask: None,
                sve_list: false,
                pred_qualifier: None,
                shift: None,
            }),
            OperandClass::ScalarInt(_) => Operand::Reg(RegOperand {
                reg: alloc.scalar_int(),
                mask: None,
                sve_list: false,
                pred_qualifier: None,
                shift: None,
            }),
            OperandClass::Predicate => Operand::Reg(RegOperand {
                reg: alloc.predicate(),
                mask: None,
                sve_list: false,
                pred_qualifier: None,
                shift: None,
            }),
            OperandClass::Memory { width, gathered } => Operand::Mem(MemRef {
                base: Some(alloc.scalar_int()),
                index: gathered.then(|| {
                    alloc.vector(match dialect {
                        Dialect::Aarch64 => 16,
                        Dialect::X86Att => *width,
                    })
                }),
                scale: 8,
                disp: 0,
                mul_vl: false,
                width: *width,
                writeback: Writeback::None,
            }),
            OperandClass::Immediate => Operand::Imm(1),
            OperandClass::Label => Operand::Label(".L0".into()),
        };
        operands.push(op);
    }
    let has_reg_dest = matches!(operands.last(), Some(Operand::Reg(r)) if r.reg.class != RegClass::Predicate)
        || matches!(
            (form.operands.last(), operands.last()),
            (Some(OperandClass::Predicate), Some(Operand::Reg(_)))
        );
    InstructionInstance {
        mnemonic: form.mnemonic.clone(),
        operands,
        source_line: 0,
        has_reg_dest,
        reads_dest: reads_dest && has_reg_dest,
        writes_flags: false,
    }
}

/// A loop of `count` independent instances of `form`.
pub fn kernel_of(model: &MachineModel, form: &InstructionForm, count: usize) -> KernelIR {
    let mut alloc = RegAlloc::new(model.isa);
    let instructions = (0..count)
        .map(|_| instance(form, model.isa, &mut alloc, false))
        .collect();
    crate::asm_frontend::normalize(&KernelIR {
        dialect: model.isa,
        instructions,
        back_branch: None,
    })
}

/// A single-instruction loop where the instruction accumulates into its
/// own destination (a cross-iteration recurrence).
pub fn self_recurrent_kernel(model: &MachineModel, form: &InstructionForm) -> KernelIR {
    let mut alloc = RegAlloc::new(model.isa);
    let instructions = vec![instance(form, model.isa, &mut alloc, true)];
    crate::asm_frontend::normalize(&KernelIR {
        dialect: model.isa,
        instructions,
        back_branch: None,
    })
}
