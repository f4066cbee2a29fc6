//! Routine instances: size substitution, constant folding, argument binding.

use crate::diag::Span;
use crate::frontend::ast::{
    walk_func, Expr, ExprKind, FuncDef, RoutineFlag, Stmt, StmtKind, VisitMut,
};
use crate::qir::Qubit;
use crate::stdlib::{QKind, QuantumType};

use super::types::{const_eval, resolve_type, same_quantum_type, Sizes, Ty};

/// Routine name plus its complete size arguments.
pub type RoutineKey = (String, Vec<u64>);

/// A routine with every size parameter substituted.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcreteRoutine {
    pub name: String,
    pub size_args: Vec<u64>,
    pub flag: RoutineFlag,
    pub bound: Vec<(String, Ty)>,
    pub params: Vec<(String, QuantumType)>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl ConcreteRoutine {
    pub fn key(&self) -> RoutineKey {
        (self.name.clone(), self.size_args.clone())
    }

    pub fn is_dynamic(&self) -> bool {
        self.params.iter().any(|(_, t)| t.kind == QKind::Vector)
    }

    /// Sum of parameter widths; `None` when a parameter is runtime-sized.
    pub fn total_width(&self) -> Option<usize> {
        if self.is_dynamic() {
            return None;
        }
        Some(self.params.iter().map(|(_, t)| t.width as usize).sum())
    }
}

/// Completes `given` with parameter defaults, evaluated left to right.
pub fn fill_sizes(def: &FuncDef, given: &[u64]) -> Result<Vec<u64>, String> {
    if given.len() > def.size_params.len() {
        return Err(format!(
            "`{}` takes {} size argument(s), got {}",
            def.name,
            def.size_params.len(),
            given.len()
        ));
    }
    let mut sizes = Sizes::new();
    let mut out = Vec::with_capacity(def.size_params.len());
    for (i, sp) in def.size_params.iter().enumerate() {
        let v = match given.get(i) {
            Some(v) => *v,
            None => {
                let Some(d) = &sp.default else {
                    return Err(format!("missing size argument `{}` for `{}`", sp.name, def.name));
                };
                let v = const_eval(d, &sizes).ok_or_else(|| {
                    format!("default of `{}` is not a compile-time constant", sp.name)
                })?;
                u64::try_from(v).map_err(|_| format!("size `{}` is negative", sp.name))?
            }
        };
        sizes.insert(sp.name.clone(), v);
        out.push(v);
    }
    Ok(out)
}

struct Substitute<'a>(&'a Sizes);

impl VisitMut for Substitute<'_> {
    fn expr(&mut self, e: &mut Expr) {
        if let ExprKind::Ident(n) = &e.kind {
            if let Some(v) = self.0.get(n) {
                e.kind = ExprKind::Int {
                    value: *v,
                    unsigned: true,
                };
            }
        }
    }
}

fn fold_constexpr(stmts: Vec<Stmt>) -> Result<Vec<Stmt>, (Span, String)> {
    stmts.into_iter().map(fold_stmt).collect()
}

fn fold_box(s: Box<Stmt>) -> Result<Box<Stmt>, (Span, String)> {
    Ok(Box::new(fold_stmt(*s)?))
}

fn fold_stmt(s: Stmt) -> Result<Stmt, (Span, String)> {
    let Stmt { id, span, kind } = s;
    let kind = match kind {
        StmtKind::If {
            cond,
            then,
            els,
            constexpr: true,
        } => {
            let v = const_eval(&cond, &Sizes::new()).ok_or_else(|| {
                (cond.span, "`if constexpr` condition is not a compile-time constant".to_string())
            })?;
            let chosen = if v != 0 { Some(then) } else { els };
            match chosen {
                Some(b) => return fold_stmt(*b),
                None => StmtKind::Empty,
            }
        }
        StmtKind::If {
            cond,
            then,
            els,
            constexpr: false,
        } => StmtKind::If {
            cond,
            then: fold_box(then)?,
            els: els.map(fold_box).transpose()?,
            constexpr: false,
        },
        StmtKind::Block(b) => StmtKind::Block(fold_constexpr(b)?),
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => StmtKind::For {
            init,
            cond,
            step,
            body: fold_box(body)?,
        },
        StmtKind::ForEach { ty, var, iter, body } => StmtKind::ForEach {
            ty,
            var,
            iter,
            body: fold_box(body)?,
        },
        StmtKind::While { cond, body } => StmtKind::While {
            cond,
            body: fold_box(body)?,
        },
        StmtKind::DoWhile { body, cond } => StmtKind::DoWhile {
            body: fold_box(body)?,
            cond,
        },
        StmtKind::Pragma { pragma, body } => StmtKind::Pragma {
            pragma,
            body: fold_box(body)?,
        },
        other => other,
    };
    Ok(Stmt { id, span, kind })
}

/// Instantiates `def` at complete size arguments `sizes`.
pub fn monomorphize(def: &FuncDef, sizes: &[u64]) -> Result<ConcreteRoutine, (Span, String)> {
    let Some((flag, bound)) = def.routine_info() else {
        return Err((def.span, format!("`{}` is not a quantum routine", def.name)));
    };
    if sizes.len() != def.size_params.len() {
        return Err((def.span, format!("`{}` expects {} size argument(s)", def.name, def.size_params.len())));
    }
    let bindings: Sizes = def
        .size_params
        .iter()
        .zip(sizes)
        .map(|(p, v)| (p.name.clone(), *v))
        .collect();
    let mut f = def.clone();
    walk_func(&mut Substitute(&bindings), &mut f);
    let mut params = Vec::with_capacity(f.params.len());
    for p in &f.params {
        let ty = match resolve_type(&p.ty, &Sizes::new()) {
            Ok(Ty::Q(q)) => q,
            Ok(other) => {
                return Err((
                    p.span,
                    format!(
                        "routine parameter `{}` has classical type {other}; bind classical values in the routine directive",
                        p.name
                    ),
                ))
            }
            Err(m) => return Err((p.span, m)),
        };
        if ty.kind == QKind::Vector && flag != RoutineFlag::Dynamic {
            return Err((
                p.span,
                format!("parameter `{}` is a qvector; only dynamic routines accept runtime-sized registers", p.name),
            ));
        }
        params.push((p.name.clone(), ty));
    }
    let mut bound_vars = Vec::with_capacity(bound.len());
    for b in bound {
        match resolve_type(&b.ty, &Sizes::new()) {
            Ok(t) if !t.is_quantum() && t != Ty::Void => bound_vars.push((b.name.name.clone(), t)),
            _ => {
                return Err((
                    b.name.span,
                    format!("bound variable `{}` must have a classical type", b.name.name),
                ))
            }
        }
    }
    Ok(ConcreteRoutine {
        name: def.name.clone(),
        size_args: sizes.to_vec(),
        flag,
        bound: bound_vars,
        params,
        body: fold_constexpr(f.body)?,
        span: def.span,
    })
}

/// Argument compatibility: untyped routines compare total widths, typed and
/// dynamic routines compare each type exactly.
pub fn check_call_compat(routine: &ConcreteRoutine, args: &[QuantumType]) -> Result<(), String> {
    match routine.flag {
        RoutineFlag::None => {
            if let Some(v) = args.iter().find(|a| a.kind == QKind::Vector) {
                return Err(format!(
                    "{v} argument passed to `{}`, which is not a dynamic routine",
                    routine.name
                ));
            }
            let got: usize = args.iter().map(|a| a.width as usize).sum();
            let expected = routine.total_width().unwrap_or(0);
            if got != expected {
                return Err(format!(
                    "`{}` acts on {expected} qubit(s) but the arguments hold {got}",
                    routine.name
                ));
            }
            Ok(())
        }
        RoutineFlag::Typed | RoutineFlag::Dynamic => {
            let expected: Vec<String> = routine.params.iter().map(|(_, t)| t.to_string()).collect();
            let given: Vec<String> = args.iter().map(|t| t.to_string()).collect();
            let ok = args.len() == routine.params.len()
                && args
                    .iter()
                    .zip(&routine.params)
                    .all(|(a, (_, p))| same_quantum_type(*a, *p));
            if ok {
                Ok(())
            } else {
                Err(format!(
                    "typed routine `{}` expects ({}) but was called with ({})",
                    routine.name,
                    expected.join(", "),
                    given.join(", ")
                ))
            }
        }
    }
}

/// Splits concrete argument registers across the routine parameters.
pub fn bind_arguments(
    routine: &ConcreteRoutine,
    args: &[(Vec<Qubit>, QuantumType)],
) -> Result<Vec<Vec<Qubit>>, String> {
    let types: Vec<QuantumType> = args.iter().map(|(_, t)| *t).collect();
    check_call_compat(routine, &types)?;
    if routine.flag != RoutineFlag::None {
        return Ok(args.iter().map(|(q, _)| q.clone()).collect());
    }
    let all: Vec<Qubit> = args.iter().flat_map(|(q, _)| q.iter().copied()).collect();
    let mut out = Vec::with_capacity(routine.params.len());
    let mut at = 0;
    for (_, t) in &routine.params {
        let w = t.width as usize;
        out.push(all[at..at + w].to_vec());
        at += w;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::Item;
    use crate::frontend::parse_source;

    fn def(src: &str) -> FuncDef {
        let p = parse_source(src).unwrap();
        p.items
            .into_iter()
            .find_map(|i| match i {
                Item::Func(f) if f.is_routine() => Some(f),
                _ => None,
            })
            .unwrap()
    }

    const D2: &str = r#"
        #pragma quantum routine
        void solve<uint64 SIZE>(qbool most[SIZE - 1], const qbool& tail) {
            if constexpr (SIZE > 1UL) {
                wall::H<SIZE - 1>.ctrl(tail, most);
                solve<SIZE - 1>.ctrl((qbool) not tail, most);
            }
        }
    "#;

    #[test]
    fn base_case_folds_to_nothing() {
        let r = monomorphize(&def(D2), &[1]).unwrap();
        assert_eq!(r.body.len(), 1);
        assert!(matches!(r.body[0].kind, StmtKind::Empty));
        assert_eq!(r.params[0].1, QuantumType::qarray(0));
        assert_eq!(r.total_width(), Some(1));
    }

    fn stmt_expr(s: &Stmt) -> &Expr {
        match &s.kind {
            StmtKind::Expr(e) => e,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn recursive_case_keeps_the_call() {
        let r = monomorphize(&def(D2), &[3]).unwrap();
        let StmtKind::Block(b) = &r.body[0].kind else { panic!("{:?}", r.body[0]) };
        assert_eq!(b.len(), 2);
        let printed = crate::frontend::pretty::expr(stmt_expr(&b[1]));
        assert!(printed.contains("solve<(3u - 1)>.ctrl"), "{printed}");
        let printed = crate::frontend::pretty::expr(stmt_expr(&b[0]));
        assert!(printed.contains("wall::H<(3u - 1)>.ctrl(tail, most)"), "{printed}");
        assert_eq!(r.total_width(), Some(3));
    }

    #[test]
    fn instantiation_is_idempotent() {
        let d = def(D2);
        assert_eq!(monomorphize(&d, &[3]).unwrap(), monomorphize(&d, &[3]).unwrap());
    }

    #[test]
    fn defaults_follow_earlier_parameters() {
        let d = def(
            "#pragma quantum routine\nvoid solve<uint64 LOG, uint64 SIZE = (1 << LOG)>(const quint<SIZE>& q) {}",
        );
        assert_eq!(fill_sizes(&d, &[3]).unwrap(), vec![3, 8]);
        assert_eq!(fill_sizes(&d, &[3, 5]).unwrap(), vec![3, 5]);
        assert!(fill_sizes(&d, &[]).is_err());
        let r = monomorphize(&d, &[2, 4]).unwrap();
        assert_eq!(r.params[0].1, QuantumType::quint(4));
    }

    fn bell(flag: &str) -> ConcreteRoutine {
        let src = format!(
            "#pragma quantum routine {flag}\nvoid bell_pair(const qbool& q0, const qbool& q1) {{ H(q0); CNOT(q0, q1); }}"
        );
        monomorphize(&def(&src), &[]).unwrap()
    }

    #[test]
    fn untyped_calls_compare_widths() {
        let r = bell("");
        assert!(check_call_compat(&r, &[QuantumType::QBOOL, QuantumType::QBOOL]).is_ok());
        assert!(check_call_compat(&r, &[QuantumType::qarray(2)]).is_ok());
        assert!(check_call_compat(&r, &[QuantumType::qint(2)]).is_ok());
        assert!(check_call_compat(&r, &[QuantumType::quint(3)]).is_err());
        assert!(check_call_compat(&r, &[QuantumType::qvector(2)]).is_err());
        let three = monomorphize(
            &def("#pragma quantum routine\nvoid f(qbool a, qbool b, qbool c) {}"),
            &[],
        )
        .unwrap();
        let err = check_call_compat(&three, &[QuantumType::quint(2)]).unwrap_err();
        assert!(err.contains("3 qubit(s)") && err.contains("hold 2"), "{err}");
    }

    #[test]
    fn typed_calls_compare_types() {
        let r = bell("typed");
        assert!(check_call_compat(&r, &[QuantumType::QBOOL, QuantumType::QBOOL]).is_ok());
        assert!(check_call_compat(&r, &[QuantumType::qarray(2)]).is_err());
        assert!(check_call_compat(&r, &[QuantumType::qint(2)]).is_err());
    }

    #[test]
    fn split_follows_declaration_order() {
        let d = def("#pragma quantum routine\nvoid f<uint64 N>(const qbool& head, const quint<N>& tail) {}");
        let r = monomorphize(&d, &[3]).unwrap();
        let reg: Vec<Qubit> = (0..4).map(Qubit).collect();
        let parts = bind_arguments(&r, &[(reg, QuantumType::quint(4))]).unwrap();
        assert_eq!(parts, vec![vec![Qubit(0)], vec![Qubit(1), Qubit(2), Qubit(3)]]);
    }

    #[test]
    fn classical_parameters_are_rejected() {
        let d = def("#pragma quantum routine\nvoid f(double a) {}");
        assert!(monomorphize(&d, &[]).unwrap_err().1.contains("classical type"));
        let d = def("#pragma quantum routine\nvoid f(qvector v) {}");
        assert!(monomorphize(&d, &[]).is_err());
        let d = def("#pragma quantum routine dynamic\nvoid f(qvector v) {}");
        assert!(monomorphize(&d, &[]).unwrap().is_dynamic());
    }
}
