//! Streamed instruction IR.
//!
//! Every quantum action the toolchain performs is expressed as a [`QInstr`].
//! Host code issues instructions one request at a time, the controller
//! expands routine calls into instruction sequences, and the backend executes
//! the flat primitives ([`Gate`] and [`Perm`]). Structured variants
//! ([`QInstr::Compute`], [`QInstr::Ctrl`], [`QInstr::Block`]) only exist
//! before [`expand_compute`] flattens a sequence.

mod dump;
mod transform;

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

pub use dump::{dump_ir, write_instr};
pub use transform::{control, dagger, expand_compute, invert_flat, normalize};

/// A qubit address on the QPU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qubit(pub u32);

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Identifier of an allocated quantum region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionId(pub u32);

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QirError {
    #[error("{0} cannot be inverted")]
    NotInvertible(&'static str),
    #[error("{0} cannot be controlled")]
    NotControllable(&'static str),
    #[error("control qubit {0} is also a target of the controlled instruction")]
    ControlOverlap(Qubit),
    #[error("measurement of {0} would invalidate a pending compute block")]
    MeasureInCompute(Qubit),
    #[error("gate {gate} expects {expected} target(s), got {got}")]
    Arity {
        gate: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("duplicate address {0} within one instruction")]
    DuplicateAddress(Qubit),
    #[error("gate {0} requires an angle parameter")]
    MissingAngle(&'static str),
    #[error("bijection {0} is not invertible")]
    NotBijective(String),
}

/// Native gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    S,
    T,
    RX,
    RY,
    RZ,
    PH,
    CNOT,
    CCNOT,
    SWAP,
}

impl GateKind {
    pub const ALL: [GateKind; 14] = [
        GateKind::I,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::T,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::PH,
        GateKind::CNOT,
        GateKind::CCNOT,
        GateKind::SWAP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "I",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::T => "T",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::PH => "PH",
            GateKind::CNOT => "CNOT",
            GateKind::CCNOT => "CCNOT",
            GateKind::SWAP => "SWAP",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|g| g.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::CNOT | GateKind::SWAP => 2,
            GateKind::CCNOT => 3,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }

    pub fn takes_angle(self) -> bool {
        self.is_rotation() || self == GateKind::PH
    }

    pub fn is_self_inverse(self) -> bool {
        matches!(
            self,
            GateKind::I
                | GateKind::X
                | GateKind::Y
                | GateKind::Z
                | GateKind::H
                | GateKind::CNOT
                | GateKind::CCNOT
                | GateKind::SWAP
        )
    }

    /// Period of the angle parameter. Rotations `exp(-iθP/2)` repeat after 4π,
    /// the phase gate after 2π.
    fn angle_period(self) -> f64 {
        if self.is_rotation() {
            4.0 * PI
        } else {
            2.0 * PI
        }
    }
}

/// Reduces `angle` into `(-period/2, period/2]`. Values already in range are
/// returned bit-for-bit so that negation stays an exact involution.
pub fn normalize_angle(angle: f64, period: f64) -> f64 {
    let half = period / 2.0;
    if angle > -half && angle <= half {
        return angle;
    }
    let r = angle.rem_euclid(period);
    if r > half {
        r - period
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub angle: Option<f64>,
    pub targets: Vec<Qubit>,
    pub ctrls: Vec<Qubit>,
    pub dagger: bool,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<Qubit>) -> Result<Gate, QirError> {
        if kind.takes_angle() {
            return Err(QirError::MissingAngle(kind.name()));
        }
        Gate::build(kind, None, targets)
    }

    pub fn with_angle(kind: GateKind, angle: f64, targets: Vec<Qubit>) -> Result<Gate, QirError> {
        let angle = kind
            .takes_angle()
            .then(|| normalize_angle(angle, kind.angle_period()));
        Gate::build(kind, angle, targets)
    }

    fn build(kind: GateKind, angle: Option<f64>, targets: Vec<Qubit>) -> Result<Gate, QirError> {
        if targets.len() != kind.arity() {
            return Err(QirError::Arity {
                gate: kind.name(),
                expected: kind.arity(),
                got: targets.len(),
            });
        }
        check_distinct(&targets)?;
        Ok(Gate {
            kind,
            angle,
            targets,
            ctrls: Vec::new(),
            dagger: false,
        })
    }

    /// Shorthand for single-qubit unparameterized gates.
    pub fn one(kind: GateKind, q: Qubit) -> Gate {
        Gate::new(kind, vec![q]).expect("single-qubit gate")
    }

    pub fn controlled(mut self, ctrls: &[Qubit]) -> Gate {
        self.ctrls.extend_from_slice(ctrls);
        self
    }

    pub fn inverse(&self) -> Gate {
        let mut g = self.clone();
        if self.kind.takes_angle() {
            let a = self.angle.unwrap_or(0.0);
            g.angle = Some(normalize_angle(-a, self.kind.angle_period()));
        } else if !self.kind.is_self_inverse() {
            g.dagger = !g.dagger;
        }
        g
    }
}

/// A classical bijection on basis indices, applied by [`Perm`].
#[derive(Clone, Debug, PartialEq)]
pub enum Bijection {
    /// `v ↦ v + c mod 2^w`
    AddConst(u64),
    /// `v ↦ v - c mod 2^w`
    SubConst(u64),
    /// `v ↦ v ^ c`
    XorConst(u64),
    /// `(x, y) ↦ (x, y ^ (base^x mod modulus))`, `x` being the low
    /// `exp_width` target qubits.
    PowModEmbed {
        base: u64,
        modulus: u64,
        exp_width: u32,
    },
    /// Explicit lookup table over the full target width.
    Custom(Vec<u64>),
}

pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut result: u128 = 1;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    result as u64
}

fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Bijection {
    pub fn name(&self) -> &'static str {
        match self {
            Bijection::AddConst(_) => "add_const",
            Bijection::SubConst(_) => "sub_const",
            Bijection::XorConst(_) => "xor_const",
            Bijection::PowModEmbed { .. } => "pow_mod_embed",
            Bijection::Custom(_) => "custom",
        }
    }

    pub fn constants(&self) -> Vec<u64> {
        match self {
            Bijection::AddConst(c) | Bijection::SubConst(c) | Bijection::XorConst(c) => vec![*c],
            Bijection::PowModEmbed {
                base,
                modulus,
                exp_width,
            } => vec![*base, *modulus, *exp_width as u64],
            Bijection::Custom(t) => t.clone(),
        }
    }

    pub fn from_parts(name: &str, consts: &[u64]) -> Option<Bijection> {
        Some(match (name, consts) {
            ("add_const", [c]) => Bijection::AddConst(*c),
            ("sub_const", [c]) => Bijection::SubConst(*c),
            ("xor_const", [c]) => Bijection::XorConst(*c),
            ("pow_mod_embed", [b, m, w]) => Bijection::PowModEmbed {
                base: *b,
                modulus: *m,
                exp_width: u32::try_from(*w).ok()?,
            },
            ("custom", t) => Bijection::Custom(t.to_vec()),
            _ => return None,
        })
    }

    /// Checks that the function is a bijection on `width`-bit indices.
    pub fn validate(&self, width: u32) -> Result<(), QirError> {
        match self {
            Bijection::PowModEmbed {
                modulus, exp_width, ..
            } => {
                let out_width = width.saturating_sub(*exp_width);
                if *modulus == 0 || *exp_width > width || (modulus - 1) > width_mask(out_width) {
                    return Err(QirError::NotBijective(format!(
                        "pow_mod_embed modulus {modulus} over {out_width} output qubits"
                    )));
                }
                Ok(())
            }
            Bijection::Custom(table) => {
                let n = 1usize << width;
                let mut seen = vec![false; n];
                if table.len() != n {
                    return Err(QirError::NotBijective(format!(
                        "custom table of length {} over width {width}",
                        table.len()
                    )));
                }
                for &v in table {
                    let slot = seen.get_mut(v as usize).ok_or_else(|| {
                        QirError::NotBijective(format!("custom value {v} out of range"))
                    })?;
                    if *slot {
                        return Err(QirError::NotBijective(format!("custom value {v} repeated")));
                    }
                    *slot = true;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, v: u64, width: u32) -> u64 {
        let mask = width_mask(width);
        match self {
            Bijection::AddConst(c) => v.wrapping_add(*c) & mask,
            Bijection::SubConst(c) => v.wrapping_sub(*c) & mask,
            Bijection::XorConst(c) => (v ^ c) & mask,
            Bijection::PowModEmbed {
                base,
                modulus,
                exp_width,
            } => {
                let x = v & width_mask(*exp_width);
                let y = v >> exp_width;
                let y = y ^ mod_pow(*base, x, *modulus);
                x | (y << exp_width)
            }
            Bijection::Custom(t) => t[v as usize],
        }
    }

    pub fn apply_inverse(&self, v: u64, width: u32) -> u64 {
        let mask = width_mask(width);
        match self {
            Bijection::AddConst(c) => v.wrapping_sub(*c) & mask,
            Bijection::SubConst(c) => v.wrapping_add(*c) & mask,
            Bijection::XorConst(_) | Bijection::PowModEmbed { .. } => self.apply(v, width),
            Bijection::Custom(t) => t.iter().position(|&w| w == v).unwrap_or(0) as u64,
        }
    }
}

/// Reversible permutation of basis states over `targets`. Target `k` carries
/// bit `k` of the permuted index.
#[derive(Clone, Debug, PartialEq)]
pub struct Perm {
    pub func: Bijection,
    pub targets: Vec<Qubit>,
    pub ctrls: Vec<Qubit>,
    pub dagger: bool,
}

impl Perm {
    pub fn new(func: Bijection, targets: Vec<Qubit>) -> Result<Perm, QirError> {
        check_distinct(&targets)?;
        func.validate(targets.len() as u32)?;
        Ok(Perm {
            func,
            targets,
            ctrls: Vec::new(),
            dagger: false,
        })
    }

    pub fn map(&self, v: u64) -> u64 {
        let w = self.targets.len() as u32;
        if self.dagger {
            self.func.apply_inverse(v, w)
        } else {
            self.func.apply(v, w)
        }
    }
}

/// A classical value bound into a parameterized routine call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    UInt(u64),
    Double(f64),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::UInt(v) => write!(f, "{v}u"),
            Scalar::Double(v) => write!(f, "{v:.10}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoutineCall {
    pub name: String,
    pub size_args: Vec<u64>,
    pub bound: Vec<Scalar>,
    pub targets: Vec<Qubit>,
    pub ctrls: Vec<Qubit>,
    pub dagger: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveDir {
    ToDevice,
    ToHost,
}

impl MoveDir {
    pub fn keyword(self) -> &'static str {
        match self {
            MoveDir::ToDevice => "toDevice",
            MoveDir::ToHost => "toHost",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QInstr {
    /// Fresh qubits in |0…0⟩ followed by `init`.
    Alloc {
        region: RegionId,
        qubits: Vec<Qubit>,
        init: Vec<QInstr>,
    },
    /// Applies the inverse of `init`, then releases the qubits.
    Free {
        region: RegionId,
        qubits: Vec<Qubit>,
        init: Vec<QInstr>,
    },
    Gate(Gate),
    Perm(Perm),
    Measure {
        targets: Vec<Qubit>,
        reset: bool,
    },
    Reset {
        targets: Vec<Qubit>,
    },
    /// Undone automatically at the end of the enclosing scope; never controlled.
    Compute(Vec<QInstr>),
    Ctrl {
        ctrls: Vec<Qubit>,
        body: Vec<QInstr>,
    },
    /// A lexical scope: compute blocks inside it are undone at its end.
    Block(Vec<QInstr>),
    ScopeBegin {
        with: Vec<String>,
    },
    ScopeEnd,
    Move {
        dir: MoveDir,
        var: String,
    },
    Call(RoutineCall),
}

impl QInstr {
    pub fn gate(g: Gate) -> QInstr {
        QInstr::Gate(g)
    }

    pub fn x(q: Qubit) -> QInstr {
        QInstr::Gate(Gate::one(GateKind::X, q))
    }

    pub fn h(q: Qubit) -> QInstr {
        QInstr::Gate(Gate::one(GateKind::H, q))
    }

    pub fn cnot(c: Qubit, t: Qubit) -> QInstr {
        QInstr::Gate(Gate::one(GateKind::X, t).controlled(&[c]))
    }

    pub fn ph(angle: f64, q: Qubit) -> QInstr {
        QInstr::Gate(Gate::with_angle(GateKind::PH, angle, vec![q]).expect("one target"))
    }

    /// Every qubit address the instruction reads or writes, including nested bodies.
    pub fn qubits(&self, out: &mut Vec<Qubit>) {
        match self {
            QInstr::Alloc { qubits, init, .. } | QInstr::Free { qubits, init, .. } => {
                out.extend_from_slice(qubits);
                init.iter().for_each(|i| i.qubits(out));
            }
            QInstr::Gate(g) => {
                out.extend_from_slice(&g.targets);
                out.extend_from_slice(&g.ctrls);
            }
            QInstr::Perm(p) => {
                out.extend_from_slice(&p.targets);
                out.extend_from_slice(&p.ctrls);
            }
            QInstr::Call(c) => {
                out.extend_from_slice(&c.targets);
                out.extend_from_slice(&c.ctrls);
            }
            QInstr::Measure { targets, .. } | QInstr::Reset { targets } => {
                out.extend_from_slice(targets)
            }
            QInstr::Compute(body) | QInstr::Block(body) => body.iter().for_each(|i| i.qubits(out)),
            QInstr::Ctrl { ctrls, body } => {
                out.extend_from_slice(ctrls);
                body.iter().for_each(|i| i.qubits(out));
            }
            QInstr::ScopeBegin { .. } | QInstr::ScopeEnd | QInstr::Move { .. } => {}
        }
    }

    /// Qubits whose state the instruction may change (targets, not controls).
    pub fn written(&self, out: &mut Vec<Qubit>) {
        match self {
            QInstr::Gate(g) => out.extend_from_slice(&g.targets),
            QInstr::Perm(p) => out.extend_from_slice(&p.targets),
            QInstr::Call(c) => out.extend_from_slice(&c.targets),
            QInstr::Alloc { qubits, .. } | QInstr::Free { qubits, .. } => {
                out.extend_from_slice(qubits)
            }
            QInstr::Measure { targets, .. } | QInstr::Reset { targets } => {
                out.extend_from_slice(targets)
            }
            QInstr::Compute(body) | QInstr::Block(body) | QInstr::Ctrl { body, .. } => {
                body.iter().for_each(|i| i.written(out))
            }
            QInstr::ScopeBegin { .. } | QInstr::ScopeEnd | QInstr::Move { .. } => {}
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            QInstr::Alloc { .. } => "ALLOC",
            QInstr::Free { .. } => "FREE",
            QInstr::Gate(_) => "GATE",
            QInstr::Perm(_) => "PERM",
            QInstr::Measure { .. } => "MEASURE",
            QInstr::Reset { .. } => "RESET",
            QInstr::Compute(_) => "COMPUTE",
            QInstr::Ctrl { .. } => "CTRL",
            QInstr::Block(_) => "BLOCK",
            QInstr::ScopeBegin { .. } => "SCOPE_BEGIN",
            QInstr::ScopeEnd => "SCOPE_END",
            QInstr::Move { .. } => "MOVE",
            QInstr::Call(_) => "CALL",
        }
    }
}

pub(crate) fn check_distinct(qs: &[Qubit]) -> Result<(), QirError> {
    for (i, q) in qs.iter().enumerate() {
        if qs[..i].contains(q) {
            return Err(QirError::DuplicateAddress(*q));
        }
    }
    Ok(())
}

/// Number of primitive gate/permutation sites in a sequence, counting nested
/// bodies once (compute blocks are not doubled).
pub fn gate_sites(seq: &[QInstr]) -> usize {
    seq.iter()
        .map(|i| match i {
            QInstr::Gate(_) | QInstr::Perm(_) => 1,
            QInstr::Compute(b) | QInstr::Block(b) | QInstr::Ctrl { body: b, .. } => gate_sites(b),
            _ => 0,
        })
        .sum()
}
