//! Source printer. Output re-parses to the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, item) in p.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            Item::Func(f) => func(&mut out, f),
            Item::Global(s) => stmt(&mut out, s, 0),
        }
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn func(out: &mut String, f: &FuncDef) {
    if let Some(p) = &f.pragma {
        out.push_str(&pragma(p));
        out.push('\n');
    }
    let _ = write!(out, "{} {}", ty(&f.ret), f.name);
    if !f.size_params.is_empty() {
        let params: Vec<String> = f
            .size_params
            .iter()
            .map(|sp| {
                let mut s = String::new();
                if let Some(t) = &sp.ty {
                    s.push_str(&ty(t));
                    s.push(' ');
                }
                s.push_str(&sp.name);
                if let Some(d) = &sp.default {
                    s.push_str(" = ");
                    s.push_str(&expr(d));
                }
                s
            })
            .collect();
        let _ = write!(out, "<{}>", params.join(", "));
    }
    let params: Vec<String> = f.params.iter().map(|p| declared(&p.ty, &p.name)).collect();
    let _ = writeln!(out, "({}) {{", params.join(", "));
    for s in &f.body {
        stmt(out, s, 1);
    }
    out.push_str("}\n");
}

/// `type name` with array suffixes moved after the name.
fn declared(t: &TypeExpr, name: &str) -> String {
    match t {
        TypeExpr::Array(elem, n) => format!("{}[{}]", declared(elem, name), expr(n)),
        _ => format!("{} {}", ty(t), name),
    }
}

pub fn ty(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Bool => "bool".into(),
        TypeExpr::Int => "int".into(),
        TypeExpr::Int64 => "int64".into(),
        TypeExpr::UInt64 => "uint64".into(),
        TypeExpr::Double => "double".into(),
        TypeExpr::Void => "void".into(),
        TypeExpr::Auto => "auto".into(),
        TypeExpr::QBool => "qbool".into(),
        TypeExpr::QVector => "qvector".into(),
        TypeExpr::QUInt(w) => format!("quint<{}>", expr(w)),
        TypeExpr::QInt(w) => format!("qint<{}>", expr(w)),
        TypeExpr::Array(elem, n) => format!("{}[{}]", ty(elem), expr(n)),
    }
}

fn names(ids: &[Ident]) -> String {
    ids.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
}

pub fn pragma(p: &Pragma) -> String {
    let mut s = String::from("#pragma quantum ");
    match &p.kind {
        PragmaKind::Scope { with } => {
            s.push_str("scope");
            if !with.is_empty() {
                let _ = write!(s, " with ({})", names(with));
            }
        }
        PragmaKind::Move { clauses } => {
            s.push_str("move");
            for c in clauses {
                let _ = write!(s, " {}({})", c.dir.keyword(), names(&c.vars));
            }
        }
        PragmaKind::Ctrl { arg } => {
            let _ = write!(s, "ctrl ({})", expr(arg));
        }
        PragmaKind::Routine { flag, bound } => {
            s.push_str("routine");
            match flag {
                RoutineFlag::None => {}
                RoutineFlag::Typed => s.push_str(" typed"),
                RoutineFlag::Dynamic => s.push_str(" dynamic"),
            }
            if !bound.is_empty() {
                let vars: Vec<String> = bound
                    .iter()
                    .map(|b| format!("{} {}", ty(&b.ty), b.name.name))
                    .collect();
                let _ = write!(s, " ({})", vars.join(", "));
            }
        }
        PragmaKind::Compute => s.push_str("compute"),
    }
    s
}

fn decl(t: &TypeExpr, vars: &[Declarator]) -> String {
    let ds: Vec<String> = vars
        .iter()
        .map(|d| {
            let mut s = d.name.clone();
            if let Some(n) = &d.array {
                let _ = write!(s, "[{}]", expr(n));
            }
            match &d.init {
                Some(Init::Assign(e)) => {
                    let _ = write!(s, " = {}", expr(e));
                }
                Some(Init::Ctor(args)) => {
                    let _ = write!(s, "({})", exprs(args));
                }
                None => {}
            }
            s
        })
        .collect();
    format!("{} {};", ty(t), ds.join(", "))
}

fn body(out: &mut String, s: &Stmt, depth: usize) {
    if let StmtKind::Block(_) = s.kind {
        stmt(out, s, depth);
    } else {
        stmt(out, s, depth + 1);
    }
}

pub fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Decl { ty: t, vars } => {
            out.push_str(&decl(t, vars));
            out.push('\n');
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{};", expr(e));
        }
        StmtKind::Block(stmts) => {
            out.push_str("{\n");
            for s in stmts {
                stmt(out, s, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::If {
            cond,
            then,
            els,
            constexpr,
        } => {
            let _ = writeln!(
                out,
                "if {}({})",
                if *constexpr { "constexpr " } else { "" },
                expr(cond)
            );
            body(out, then, depth);
            if let Some(e) = els {
                indent(out, depth);
                out.push_str("else\n");
                body(out, e, depth);
            }
        }
        StmtKind::For {
            init,
            cond,
            step,
            body: b,
        } => {
            let init = match init.as_deref() {
                None => ";".to_string(),
                Some(Stmt {
                    kind: StmtKind::Decl { ty: t, vars },
                    ..
                }) => decl(t, vars),
                Some(Stmt {
                    kind: StmtKind::Expr(e),
                    ..
                }) => format!("{};", expr(e)),
                Some(_) => ";".to_string(),
            };
            let cond = cond.as_ref().map(expr).unwrap_or_default();
            let step = step.as_ref().map(expr).unwrap_or_default();
            let _ = writeln!(out, "for ({init} {cond}; {step})");
            body(out, b, depth);
        }
        StmtKind::ForEach {
            ty: t,
            var,
            iter,
            body: b,
        } => {
            let _ = writeln!(out, "for ({} {} : {})", ty(t), var.name, expr(iter));
            body(out, b, depth);
        }
        StmtKind::While { cond, body: b } => {
            let _ = writeln!(out, "while ({})", expr(cond));
            body(out, b, depth);
        }
        StmtKind::DoWhile { body: b, cond } => {
            out.push_str("do\n");
            body(out, b, depth);
            indent(out, depth);
            let _ = writeln!(out, "while ({});", expr(cond));
        }
        StmtKind::Break => out.push_str("break;\n"),
        StmtKind::Continue => out.push_str("continue;\n"),
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", expr(e));
        }
        StmtKind::Pragma { pragma: p, body: b } => {
            out.push_str(&pragma(p));
            out.push('\n');
            stmt(out, b, depth);
        }
        StmtKind::Move(p) => {
            out.push_str(&pragma(p));
            out.push('\n');
        }
        StmtKind::Empty => out.push_str(";\n"),
    }
}

fn exprs(es: &[Expr]) -> String {
    es.iter().map(expr).collect::<Vec<_>>().join(", ")
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int { value, unsigned } => {
            format!("{value}{}", if *unsigned { "u" } else { "" })
        }
        ExprKind::Float(v) => {
            let s = format!("{v:?}");
            if s.contains(['.', 'e', 'E']) {
                s
            } else {
                format!("{s}.0")
            }
        }
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Str(s) => format!(
            "\"{}\"",
            s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
        ),
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Unary(op, a) => match op {
            UnOp::Neg => format!("(-{})", expr(a)),
            UnOp::Not => format!("(!{})", expr(a)),
            UnOp::BitNot => format!("(~{})", expr(a)),
            UnOp::PreInc => format!("(++{})", expr(a)),
            UnOp::PreDec => format!("(--{})", expr(a)),
            UnOp::PostInc => format!("({}++)", expr(a)),
            UnOp::PostDec => format!("({}--)", expr(a)),
        },
        ExprKind::Binary(op, a, b) => format!("({} {} {})", expr(a), op.symbol(), expr(b)),
        ExprKind::Assign(op, a, b) => format!("{} {} {}", expr(a), op.symbol(), expr(b)),
        ExprKind::Index(a, i) => format!("{}[{}]", expr(a), expr(i)),
        ExprKind::Call(c, args) => format!("{}({})", expr(c), exprs(args)),
        ExprKind::Template(n, args) => format!("{n}<{}>", exprs(args)),
        ExprKind::Method(t, sel) => format!("{}.{}", expr(t), sel.name()),
        ExprKind::Cast(t, a) => format!("(({}) {})", ty(t), expr(a)),
    }
}
