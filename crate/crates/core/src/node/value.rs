//! Runtime values and classical arithmetic.

use std::fmt;

use crate::frontend::ast::{BinOp, UnOp};
use crate::qir::{Qubit, Scalar};
use crate::stdlib::{Classical, QExpr, QuantumType};

use super::RunError;

/// A handle to live qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QView {
    pub qubits: Vec<Qubit>,
    pub ty: QuantumType,
}

impl QView {
    pub fn expr(&self) -> QExpr {
        QExpr::reg(self.qubits.clone(), self.ty.signed())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Void,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Double(f64),
    Str(String),
    Array(Vec<Value>),
    Quantum(QView),
    /// An unevaluated quantum expression.
    Expr(QExpr),
}

impl Value {
    pub fn is_quantum(&self) -> bool {
        matches!(self, Value::Quantum(_) | Value::Expr(_))
    }

    pub fn as_i128(&self) -> Result<i128, RunError> {
        Ok(match self {
            Value::Bool(b) => *b as i128,
            Value::Int(v) => *v as i128,
            Value::UInt(v) => *v as i128,
            Value::Double(v) => *v as i128,
            other => return Err(RunError::new(format!("expected a number, found {}", other.kind()))),
        })
    }

    pub fn as_f64(&self) -> Result<f64, RunError> {
        Ok(match self {
            Value::Double(v) => *v,
            Value::UInt(v) => *v as f64,
            other => other.as_i128()? as f64,
        })
    }

    pub fn truthy(&self) -> Result<bool, RunError> {
        Ok(match self {
            Value::Double(v) => *v != 0.0,
            other => other.as_i128()? != 0,
        })
    }

    /// The value as a quantum expression operand.
    pub fn qexpr(&self) -> Result<QExpr, RunError> {
        Ok(match self {
            Value::Quantum(v) => v.expr(),
            Value::Expr(e) => e.clone(),
            Value::Double(_) => return Err(RunError::new("a double cannot take part in a quantum expression")),
            other => QExpr::Const(other.as_i128()?),
        })
    }

    pub fn scalar(&self) -> Result<Scalar, RunError> {
        Ok(match self {
            Value::Bool(b) => Scalar::Bool(*b),
            Value::Int(v) => Scalar::Int(*v),
            Value::UInt(v) => Scalar::UInt(*v),
            Value::Double(v) => Scalar::Double(*v),
            other => return Err(RunError::new(format!("cannot bind a {} to a routine", other.kind()))),
        })
    }

    pub fn from_scalar(s: Scalar) -> Value {
        match s {
            Scalar::Bool(b) => Value::Bool(b),
            Scalar::Int(v) => Value::Int(v),
            Scalar::UInt(v) => Value::UInt(v),
            Scalar::Double(v) => Value::Double(v),
        }
    }

    pub fn from_measurement(c: Classical) -> Value {
        match c {
            Classical::Bool(b) => Value::Bool(b),
            Classical::UInt(v) => Value::UInt(v),
            Classical::Int(v) => Value::Int(v),
            Classical::Bits(bits) => Value::Array(bits.into_iter().map(Value::Bool).collect()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Void => "void",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::UInt(_) => "uint64",
            Value::Double(_) => "double",
            Value::Str(_) => "string",
            Value::Array(_) => "array",
            Value::Quantum(_) | Value::Expr(_) => "quantum value",
        }
    }

    /// Converts `v` to the representation of `self`, as an assignment to a
    /// variable currently holding `self` would.
    pub fn coerce(&self, v: Value) -> Result<Value, RunError> {
        Ok(match (self, &v) {
            (Value::Bool(_), _) => Value::Bool(v.truthy()?),
            (Value::Int(_), Value::Double(d)) => Value::Int(*d as i64),
            (Value::Int(_), _) => Value::Int(v.as_i128()? as i64),
            (Value::UInt(_), Value::Double(d)) => Value::UInt(*d as u64),
            (Value::UInt(_), _) => Value::UInt(v.as_i128()? as u64),
            (Value::Double(_), _) => Value::Double(v.as_f64()?),
            _ => v,
        })
    }

    /// Zero value of a declared classical type.
    pub fn zero_of(ty: &crate::elaborator::Ty) -> Value {
        use crate::elaborator::Ty;
        match ty {
            Ty::Bool => Value::Bool(false),
            Ty::Int => Value::Int(0),
            Ty::UInt => Value::UInt(0),
            Ty::Double => Value::Double(0.0),
            Ty::Str => Value::Str(String::new()),
            Ty::Array(elem, n) => Value::Array(vec![Value::zero_of(elem); *n]),
            _ => Value::Void,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Void => Ok(()),
            Value::Bool(b) => write!(f, "{}", *b as u8),
            Value::Int(v) => write!(f, "{v}"),
            Value::UInt(v) => write!(f, "{v}"),
            Value::Double(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(Value::to_string).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Value::Quantum(v) => write!(f, "<{}>", v.ty),
            Value::Expr(_) => f.write_str("<quantum expression>"),
        }
    }
}

enum Num {
    I(i64),
    U(u64),
    F(f64),
}

fn num(v: &Value) -> Result<Num, RunError> {
    Ok(match v {
        Value::Bool(b) => Num::I(*b as i64),
        Value::Int(i) => Num::I(*i),
        Value::UInt(u) => Num::U(*u),
        Value::Double(d) => Num::F(*d),
        other => return Err(RunError::new(format!("expected a number, found {}", other.kind()))),
    })
}

fn div_zero() -> RunError {
    RunError::new("division by zero")
}

/// Classical binary operator under the usual promotions.
pub fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, RunError> {
    if let (BinOp::Add, Value::Str(x), Value::Str(y)) = (op, a, b) {
        return Ok(Value::Str(format!("{x}{y}")));
    }
    match op {
        BinOp::And => return Ok(Value::Bool(a.truthy()? && b.truthy()?)),
        BinOp::Or => return Ok(Value::Bool(a.truthy()? || b.truthy()?)),
        BinOp::Shl | BinOp::Shr => {
            let s = b.as_i128()?;
            if !(0..64).contains(&s) {
                return Err(RunError::new(format!("shift amount {s} is out of range")));
            }
            let s = s as u32;
            return Ok(match num(a)? {
                Num::U(x) => Value::UInt(if op == BinOp::Shl { x << s } else { x >> s }),
                Num::I(x) => Value::Int(if op == BinOp::Shl { x.wrapping_shl(s) } else { x >> s }),
                Num::F(_) => return Err(RunError::new("shift of a double")),
            });
        }
        _ => {}
    }
    let (x, y) = (num(a)?, num(b)?);
    if op.is_comparison() {
        let ord = match (&x, &y) {
            (Num::F(_), _) | (_, Num::F(_)) => a.as_f64()?.partial_cmp(&b.as_f64()?),
            _ => Some(a.as_i128()?.cmp(&b.as_i128()?)),
        };
        use std::cmp::Ordering::*;
        let r = match (op, ord) {
            (BinOp::Ne, None) => true,
            (_, None) => false,
            (BinOp::Lt, Some(o)) => o == Less,
            (BinOp::Le, Some(o)) => o != Greater,
            (BinOp::Gt, Some(o)) => o == Greater,
            (BinOp::Ge, Some(o)) => o != Less,
            (BinOp::Eq, Some(o)) => o == Equal,
            (BinOp::Ne, Some(o)) => o != Equal,
            _ => unreachable!(),
        };
        return Ok(Value::Bool(r));
    }
    Ok(match (x, y) {
        (Num::F(_), _) | (_, Num::F(_)) => {
            let (p, q) = (a.as_f64()?, b.as_f64()?);
            Value::Double(match op {
                BinOp::Add => p + q,
                BinOp::Sub => p - q,
                BinOp::Mul => p * q,
                BinOp::Div => p / q,
                BinOp::Rem => p % q,
                _ => return Err(RunError::new(format!("operator `{}` needs integers", op.symbol()))),
            })
        }
        (Num::U(_), _) | (_, Num::U(_)) => {
            let (p, q) = (a.as_i128()? as u64, b.as_i128()? as u64);
            Value::UInt(match op {
                BinOp::Add => p.wrapping_add(q),
                BinOp::Sub => p.wrapping_sub(q),
                BinOp::Mul => p.wrapping_mul(q),
                BinOp::Div => p.checked_div(q).ok_or_else(div_zero)?,
                BinOp::Rem => p.checked_rem(q).ok_or_else(div_zero)?,
                BinOp::BitAnd => p & q,
                BinOp::BitOr => p | q,
                BinOp::BitXor => p ^ q,
                _ => unreachable!(),
            })
        }
        (Num::I(p), Num::I(q)) => Value::Int(match op {
            BinOp::Add => p.wrapping_add(q),
            BinOp::Sub => p.wrapping_sub(q),
            BinOp::Mul => p.wrapping_mul(q),
            BinOp::Div => p.checked_div(q).ok_or_else(div_zero)?,
            BinOp::Rem => p.checked_rem(q).ok_or_else(div_zero)?,
            BinOp::BitAnd => p & q,
            BinOp::BitOr => p | q,
            BinOp::BitXor => p ^ q,
            _ => unreachable!(),
        }),
    })
}

pub fn unary(op: UnOp, a: &Value) -> Result<Value, RunError> {
    Ok(match (op, num(a)?) {
        (UnOp::Not, _) => Value::Bool(!a.truthy()?),
        (UnOp::Neg, Num::I(v)) => Value::Int(v.wrapping_neg()),
        (UnOp::Neg, Num::U(v)) => Value::UInt(v.wrapping_neg()),
        (UnOp::Neg, Num::F(v)) => Value::Double(-v),
        (UnOp::BitNot, Num::I(v)) => Value::Int(!v),
        (UnOp::BitNot, Num::U(v)) => Value::UInt(!v),
        (UnOp::PreInc | UnOp::PostInc, _) => binary(BinOp::Add, a, &Value::Int(1))?,
        (UnOp::PreDec | UnOp::PostDec, _) => binary(BinOp::Sub, a, &Value::Int(1))?,
        (_, _) => return Err(RunError::new("invalid operand")),
    })
}
