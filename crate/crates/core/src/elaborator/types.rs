//! Static types and compile-time integer evaluation.

use std::collections::HashMap;
use std::fmt;

use crate::frontend::ast::{BinOp, Expr, ExprKind, TypeExpr, UnOp};
use crate::stdlib::{QKind, QuantumType};

#[derive(Clone, Debug, PartialEq)]
pub enum Ty {
    Void,
    Bool,
    Int,
    UInt,
    Double,
    Str,
    Q(QuantumType),
    Array(Box<Ty>, usize),
    /// Produced after an error so that one mistake reports once.
    Unknown,
}

impl Ty {
    pub fn is_quantum(&self) -> bool {
        matches!(self, Ty::Q(_))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Bool | Ty::Int | Ty::UInt | Ty::Double | Ty::Unknown)
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, Ty::Bool | Ty::Int | Ty::UInt | Ty::Unknown)
    }

    pub fn quantum(&self) -> Option<QuantumType> {
        match self {
            Ty::Q(q) => Some(*q),
            _ => None,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Void => write!(f, "void"),
            Ty::Bool => write!(f, "bool"),
            Ty::Int => write!(f, "int64"),
            Ty::UInt => write!(f, "uint64"),
            Ty::Double => write!(f, "double"),
            Ty::Str => write!(f, "string"),
            Ty::Q(q) => write!(f, "{q}"),
            Ty::Array(elem, n) => write!(f, "{elem}[{n}]"),
            Ty::Unknown => write!(f, "<error>"),
        }
    }
}

/// Compile-time bindings of size parameters.
pub type Sizes = HashMap<String, u64>;

/// Integer constant folding over literals and size parameters.
pub fn const_eval(e: &Expr, sizes: &Sizes) -> Option<i128> {
    Some(match &e.kind {
        ExprKind::Int { value, .. } => *value as i128,
        ExprKind::Bool(b) => *b as i128,
        ExprKind::Ident(n) => *sizes.get(n)? as i128,
        ExprKind::Cast(ty, inner) => {
            let v = const_eval(inner, sizes)?;
            match ty {
                TypeExpr::Bool => (v != 0) as i128,
                TypeExpr::Int | TypeExpr::Int64 => v as i64 as i128,
                TypeExpr::UInt64 => v as u64 as i128,
                _ => return None,
            }
        }
        ExprKind::Unary(op, inner) => {
            let v = const_eval(inner, sizes)?;
            match op {
                UnOp::Neg => -v,
                UnOp::Not => (v == 0) as i128,
                UnOp::BitNot => !v,
                _ => return None,
            }
        }
        ExprKind::Binary(op, a, b) => {
            let (a, b) = (const_eval(a, sizes)?, const_eval(b, sizes)?);
            match op {
                BinOp::Add => a.checked_add(b)?,
                BinOp::Sub => a.checked_sub(b)?,
                BinOp::Mul => a.checked_mul(b)?,
                BinOp::Div => a.checked_div(b)?,
                BinOp::Rem => a.checked_rem(b)?,
                BinOp::Shl => a.checked_shl(u32::try_from(b).ok().filter(|s| *s < 64)?)?,
                BinOp::Shr => a >> u32::try_from(b).ok().filter(|s| *s < 128)?,
                BinOp::Lt => (a < b) as i128,
                BinOp::Le => (a <= b) as i128,
                BinOp::Gt => (a > b) as i128,
                BinOp::Ge => (a >= b) as i128,
                BinOp::Eq => (a == b) as i128,
                BinOp::Ne => (a != b) as i128,
                BinOp::BitAnd => a & b,
                BinOp::BitOr => a | b,
                BinOp::BitXor => a ^ b,
                BinOp::And => (a != 0 && b != 0) as i128,
                BinOp::Or => (a != 0 || b != 0) as i128,
            }
        }
        _ => return None,
    })
}

/// Resolution of a written type. `Err` carries a message for the span of
/// the type.
pub fn resolve_type(t: &TypeExpr, sizes: &Sizes) -> Result<Ty, String> {
    let width = |w: &Expr, what: &str| -> Result<u32, String> {
        let v = const_eval(w, sizes)
            .ok_or_else(|| format!("width of {what} must be a compile-time constant"))?;
        if !(1..=64).contains(&v) {
            return Err(format!("width of {what} must be between 1 and 64, got {v}"));
        }
        Ok(v as u32)
    };
    Ok(match t {
        TypeExpr::Bool => Ty::Bool,
        TypeExpr::Int | TypeExpr::Int64 => Ty::Int,
        TypeExpr::UInt64 => Ty::UInt,
        TypeExpr::Double => Ty::Double,
        TypeExpr::Void => Ty::Void,
        TypeExpr::Auto => Ty::Unknown,
        TypeExpr::QBool => Ty::Q(QuantumType::QBOOL),
        TypeExpr::QUInt(w) => Ty::Q(QuantumType::quint(width(w, "quint")?)),
        TypeExpr::QInt(w) => Ty::Q(QuantumType::qint(width(w, "qint")?)),
        TypeExpr::QVector => Ty::Q(QuantumType::qvector(0)),
        TypeExpr::Array(elem, n) => {
            let len = const_eval(n, sizes)
                .ok_or_else(|| "array length must be a compile-time constant".to_string())?;
            if !(0..=1 << 20).contains(&len) {
                return Err(format!("array length {len} out of range"));
            }
            array_of(resolve_type(elem, sizes)?, len as usize)?
        }
    })
}

/// `elem[len]`; arrays of qbool are quantum arrays.
pub fn array_of(elem: Ty, len: usize) -> Result<Ty, String> {
    match elem {
        Ty::Q(QuantumType {
            kind: QKind::Bool, ..
        }) => Ok(Ty::Q(QuantumType::qarray(len as u32))),
        Ty::Q(q) => Err(format!("arrays of {q} are not supported; use qbool arrays")),
        Ty::Void | Ty::Unknown => Err("invalid array element type".into()),
        other => Ok(Ty::Array(Box::new(other), len)),
    }
}

/// Type of an arithmetic result under the usual promotions.
pub fn promote(a: &Ty, b: &Ty) -> Ty {
    match (a, b) {
        (Ty::Unknown, _) | (_, Ty::Unknown) => Ty::Unknown,
        (Ty::Double, _) | (_, Ty::Double) => Ty::Double,
        (Ty::UInt, _) | (_, Ty::UInt) => Ty::UInt,
        _ => Ty::Int,
    }
}

/// Whether two quantum types match under typed-routine rules.
pub fn same_quantum_type(a: QuantumType, b: QuantumType) -> bool {
    if a.kind == QKind::Vector || b.kind == QKind::Vector {
        return a.kind == b.kind;
    }
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::frontend::ast::{Item, StmtKind};

    fn expr(src: &str) -> Expr {
        let p = parse_source(&format!("void f() {{ x = {src}; }}")).unwrap();
        let Item::Func(f) = &p.items[0] else { panic!() };
        let StmtKind::Expr(Expr {
            kind: ExprKind::Assign(_, _, rhs),
            ..
        }) = &f.body[0].kind
        else {
            panic!()
        };
        (**rhs).clone()
    }

    #[test]
    fn folds_size_arithmetic() {
        let mut sizes = Sizes::new();
        sizes.insert("LOG".into(), 3);
        assert_eq!(const_eval(&expr("1 << LOG"), &sizes), Some(8));
        assert_eq!(const_eval(&expr("LOG - 1 > 1UL"), &sizes), Some(1));
        assert_eq!(const_eval(&expr("LOG * 2 + 1"), &sizes), Some(7));
        assert_eq!(const_eval(&expr("N + 1"), &sizes), None);
        assert_eq!(const_eval(&expr("1 / 0"), &sizes), None);
    }

    #[test]
    fn resolves_quantum_types() {
        let sizes = Sizes::new();
        let p = parse_source("void f(quint<8> a, qint<2> b, qbool c[3], qvector d) {}").unwrap();
        let Item::Func(f) = &p.items[0] else { panic!() };
        let tys: Vec<Ty> = f.params.iter().map(|p| resolve_type(&p.ty, &sizes).unwrap()).collect();
        assert_eq!(
            tys,
            vec![
                Ty::Q(QuantumType::quint(8)),
                Ty::Q(QuantumType::qint(2)),
                Ty::Q(QuantumType::qarray(3)),
                Ty::Q(QuantumType::qvector(0)),
            ]
        );
        let p = parse_source("void f(quint<0> a) {}").unwrap();
        let Item::Func(f) = &p.items[0] else { panic!() };
        assert!(resolve_type(&f.params[0].ty, &sizes).is_err());
    }

    #[test]
    fn promotion_rules() {
        assert_eq!(promote(&Ty::Bool, &Ty::Int), Ty::Int);
        assert_eq!(promote(&Ty::Int, &Ty::UInt), Ty::UInt);
        assert_eq!(promote(&Ty::UInt, &Ty::Double), Ty::Double);
        assert!(same_quantum_type(QuantumType::qvector(3), QuantumType::qvector(12)));
        assert!(!same_quantum_type(QuantumType::qint(2), QuantumType::quint(2)));
    }
}
