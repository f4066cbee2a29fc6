//! Static checking of a parsed program.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::diag::{Diagnostic, Span};
use crate::frontend::ast::{
    AssignOp, BinOp, Expr, ExprKind, FuncDef, Init, Item, NodeId, PragmaKind, Program, Selector,
    Stmt, StmtKind, TypeExpr, UnOp,
};
use crate::qir::{GateKind, MoveDir};
use crate::stdlib::{encode, QKind, QuantumType};

use super::locality::{LocalityMap, LocalityTag, Place, Residency};
use super::routine::{check_call_compat, fill_sizes, monomorphize, ConcreteRoutine, RoutineKey};
use super::types::{array_of, const_eval, promote, resolve_type, Sizes, Ty};
use super::{DeclInfo, InitSource};

pub const BUILTINS: [&str; 6] = ["measure_and_reset", "measure", "reset", "print", "snapshot", "pow_mod"];
pub const MAX_DEPTH: usize = 64;

const QUANTUM_AS_CLASSICAL: &str = "quantum value used where a classical value is required";

#[derive(Clone, Debug)]
struct Var {
    ty: Ty,
    home: Residency,
    at: Residency,
}

#[derive(Clone, Debug)]
struct Ctx {
    place: Place,
    ctrl: u32,
    compute: u32,
    loops: u32,
    ret: Ty,
    global: bool,
}

impl Ctx {
    fn new(place: Place, ret: Ty) -> Ctx {
        Ctx {
            place,
            ctrl: 0,
            compute: 0,
            loops: 0,
            ret,
            global: false,
        }
    }
}

enum Target {
    Gate(GateKind),
    Wall(GateKind, u64),
    Routine(RoutineKey),
    Function(String),
    Builtin(&'static str),
}

struct Resolved<'a> {
    target: Target,
    name: String,
    bound: Option<&'a [Expr]>,
    sel: Option<Selector>,
}

pub(super) struct Checker<'p> {
    defs: HashMap<String, &'p FuncDef>,
    pub diags: Vec<Diagnostic>,
    pub routines: HashMap<RoutineKey, Arc<ConcreteRoutine>>,
    failed: HashSet<RoutineKey>,
    depth: usize,
    scopes: Vec<HashMap<String, Var>>,
    ctx: Ctx,
    pub locality: LocalityMap,
    pub decls: HashMap<(NodeId, usize), DeclInfo>,
    pub remote: HashSet<NodeId>,
}

impl<'p> Checker<'p> {
    pub fn run(program: &'p Program) -> Checker<'p> {
        let mut c = Checker {
            defs: HashMap::new(),
            diags: Vec::new(),
            routines: HashMap::new(),
            failed: HashSet::new(),
            depth: 0,
            scopes: vec![HashMap::new()],
            ctx: Ctx::new(Place::Host, Ty::Void),
            locality: LocalityMap::new(),
            decls: HashMap::new(),
            remote: HashSet::new(),
        };
        for item in &program.items {
            if let Item::Func(f) = item {
                if GateKind::from_name(&f.name).is_some() || BUILTINS.contains(&f.name.as_str()) {
                    c.err(f.span, format!("`{}` redefines a built-in operation", f.name));
                } else if c.defs.insert(f.name.clone(), f).is_some() {
                    c.err(f.span, format!("`{}` is defined more than once", f.name));
                }
            }
        }
        for item in &program.items {
            match item {
                Item::Global(s) => {
                    c.ctx = Ctx::new(Place::Host, Ty::Void);
                    c.ctx.global = true;
                    c.check_stmt(s);
                }
                Item::Func(f) if f.is_routine() => c.check_routine_def(f),
                Item::Func(f) => c.check_function(f),
            }
        }
        if !c.defs.contains_key("main") {
            c.err(Span::new(1, 1), "program has no `main` function");
        }
        c.dedup();
        c
    }

    fn err(&mut self, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(span, msg));
    }

    /// Generic routines can report the same error from several instances.
    fn dedup(&mut self) {
        let mut seen = HashSet::new();
        self.diags.retain(|d| seen.insert((d.span, d.message.clone())));
        self.diags.sort_by_key(|d| d.span);
    }

    // ----- environments -----

    fn lookup(&self, name: &str) -> Option<&Var> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn lookup_mut(&mut self, name: &str) -> Option<&mut Var> {
        self.scopes.iter_mut().rev().find_map(|s| s.get_mut(name))
    }

    fn declare(&mut self, name: &str, ty: Ty, span: Span) {
        let home = match self.ctx.place {
            Place::Host => Residency::Host,
            Place::Qpu | Place::Routine => Residency::Device,
        };
        let scope = self.scopes.last_mut().expect("scope stack is never empty");
        if scope.contains_key(name) {
            self.err(span, format!("`{name}` is already declared in this scope"));
            return;
        }
        scope.insert(name.to_string(), Var { ty, home, at: home });
    }

    fn residency(&self) -> Vec<Residency> {
        self.scopes
            .iter()
            .flat_map(|s| {
                let mut names: Vec<_> = s.iter().collect();
                names.sort_by(|a, b| a.0.cmp(b.0));
                names.into_iter().map(|(_, v)| v.at)
            })
            .collect()
    }

    fn restore_residency(&mut self, saved: &[Residency]) {
        let mut it = saved.iter();
        for s in &mut self.scopes {
            let mut names: Vec<_> = s.keys().cloned().collect();
            names.sort();
            for n in names {
                if let Some(r) = it.next() {
                    s.get_mut(&n).unwrap().at = *r;
                }
            }
        }
    }

    fn moved(&self) -> Vec<String> {
        let set: BTreeSet<String> = self
            .scopes
            .iter()
            .flat_map(|s| s.iter())
            .filter(|(_, v)| v.at != v.home)
            .map(|(n, _)| n.clone())
            .collect();
        set.into_iter().collect()
    }

    fn in_scope<T>(&mut self, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scopes.push(HashMap::new());
        let out = f(self);
        self.scopes.pop();
        out
    }

    // ----- items -----

    fn check_function(&mut self, f: &FuncDef) {
        if !f.size_params.is_empty() {
            self.err(f.span, format!("`{}` has size parameters but is not a quantum routine", f.name));
        }
        let ret = match resolve_type(&f.ret, &Sizes::new()) {
            Ok(t) if t.is_quantum() => {
                self.err(f.span, "functions cannot return quantum values");
                Ty::Unknown
            }
            Ok(t) => t,
            Err(m) => {
                self.err(f.span, m);
                Ty::Unknown
            }
        };
        let globals = self.scopes[0].clone();
        let saved_scopes = std::mem::replace(&mut self.scopes, vec![globals, HashMap::new()]);
        let saved_ctx = std::mem::replace(&mut self.ctx, Ctx::new(Place::Host, ret));
        for p in &f.params {
            let ty = resolve_type(&p.ty, &Sizes::new()).unwrap_or_else(|m| {
                self.err(p.span, m);
                Ty::Unknown
            });
            self.declare(&p.name, ty, p.span);
        }
        for s in &f.body {
            self.check_stmt(s);
        }
        self.scopes = saved_scopes;
        self.ctx = saved_ctx;
    }

    fn check_routine_def(&mut self, f: &FuncDef) {
        if f.ret != TypeExpr::Void {
            self.err(f.span, format!("quantum routine `{}` must return void", f.name));
        }
        for sp in &f.size_params {
            if !matches!(sp.ty, None | Some(TypeExpr::UInt64 | TypeExpr::Int | TypeExpr::Int64)) {
                self.err(sp.span, format!("size parameter `{}` must be an integer", sp.name));
            }
        }
        let generic = f.size_params.iter().any(|p| p.default.is_none());
        if !generic {
            self.instantiate(&f.name, &[], f.span);
        }
    }

    fn instantiate(&mut self, name: &str, given: &[u64], span: Span) -> Option<RoutineKey> {
        let def = *self.defs.get(name)?;
        let sizes = match fill_sizes(def, given) {
            Ok(s) => s,
            Err(m) => {
                self.err(span, m);
                return None;
            }
        };
        let key = (name.to_string(), sizes);
        if self.routines.contains_key(&key) {
            return Some(key);
        }
        if self.failed.contains(&key) {
            return None;
        }
        if self.depth >= MAX_DEPTH {
            self.err(span, format!("instantiating `{name}` exceeds the depth limit of {MAX_DEPTH}"));
            self.failed.insert(key);
            return None;
        }
        let r = match monomorphize(def, &key.1) {
            Ok(r) => Arc::new(r),
            Err((sp, m)) => {
                self.err(sp, m);
                self.failed.insert(key);
                return None;
            }
        };
        self.routines.insert(key.clone(), r.clone());
        self.depth += 1;
        self.check_instance(&r);
        self.depth -= 1;
        Some(key)
    }

    fn check_instance(&mut self, r: &ConcreteRoutine) {
        let saved_scopes = std::mem::replace(&mut self.scopes, vec![HashMap::new()]);
        let saved_ctx = std::mem::replace(&mut self.ctx, Ctx::new(Place::Routine, Ty::Void));
        for (n, t) in &r.bound {
            self.declare(n, t.clone(), r.span);
        }
        for (n, t) in &r.params {
            self.declare(n, Ty::Q(*t), r.span);
        }
        for s in &r.body {
            self.check_stmt(s);
        }
        self.scopes = saved_scopes;
        self.ctx = saved_ctx;
    }

    // ----- statements -----

    fn check_stmt(&mut self, s: &Stmt) {
        self.locality.insert(
            s.id,
            LocalityTag {
                place: self.ctx.place,
                moved: self.moved(),
            },
        );
        match &s.kind {
            StmtKind::Decl { ty, vars } => {
                for (i, d) in vars.iter().enumerate() {
                    self.check_declarator(s.id, i, ty, d);
                }
            }
            StmtKind::Expr(e) => {
                self.check_expr(e);
            }
            StmtKind::Block(b) => self.in_scope(|c| b.iter().for_each(|s| c.check_stmt(s))),
            StmtKind::If {
                cond,
                then,
                els,
                constexpr,
            } => {
                if *constexpr {
                    if const_eval(cond, &Sizes::new()).is_none() {
                        self.err(cond.span, "`if constexpr` condition is not a compile-time constant");
                    }
                } else {
                    self.check_condition(cond);
                }
                let before = self.residency();
                self.in_scope(|c| c.check_stmt(then));
                let after_then = self.residency();
                self.restore_residency(&before);
                if let Some(e) = els {
                    self.in_scope(|c| c.check_stmt(e));
                }
                if self.residency() != after_then {
                    self.err(s.span, "the branches of this `if` leave variables on different devices");
                }
                self.restore_residency(&after_then);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => self.in_scope(|c| {
                if let Some(i) = init {
                    c.check_stmt(i);
                }
                if let Some(e) = cond {
                    c.check_condition(e);
                }
                if let Some(e) = step {
                    c.check_expr(e);
                }
                c.check_loop_body(s.span, body);
            }),
            StmtKind::ForEach { ty, var, iter, body } => {
                let elem = match self.check_expr(iter) {
                    Ty::Q(q) if q.kind != QKind::Bool => Ty::Q(QuantumType::QBOOL),
                    Ty::Array(elem, _) => *elem,
                    Ty::Unknown => Ty::Unknown,
                    other => {
                        self.err(iter.span, format!("cannot iterate over a value of type {other}"));
                        Ty::Unknown
                    }
                };
                let declared = match resolve_type(ty, &Sizes::new()) {
                    Ok(Ty::Unknown) => elem,
                    Ok(t) => {
                        if elem != Ty::Unknown && t.is_quantum() != elem.is_quantum() {
                            self.err(var.span, format!("loop variable of type {t} cannot range over {elem}"));
                        }
                        t
                    }
                    Err(m) => {
                        self.err(var.span, m);
                        Ty::Unknown
                    }
                };
                self.in_scope(|c| {
                    c.declare(&var.name, declared, var.span);
                    c.check_loop_body(s.span, body);
                });
            }
            StmtKind::While { cond, body } => {
                self.check_condition(cond);
                self.check_loop_body(s.span, body);
            }
            StmtKind::DoWhile { body, cond } => {
                self.check_loop_body(s.span, body);
                self.check_condition(cond);
            }
            StmtKind::Break | StmtKind::Continue => {
                if self.ctx.loops == 0 {
                    let w = if matches!(s.kind, StmtKind::Break) { "break" } else { "continue" };
                    self.err(s.span, format!("`{w}` outside of a loop"));
                }
            }
            StmtKind::Return(value) => {
                if let Some(v) = value {
                    let t = self.check_expr(v);
                    if self.ctx.place == Place::Routine || self.ctx.ret == Ty::Void {
                        self.err(v.span, "a void function cannot return a value");
                    } else if t.is_quantum() {
                        self.err(v.span, QUANTUM_AS_CLASSICAL);
                    }
                }
            }
            StmtKind::Pragma { pragma, body } => match &pragma.kind {
                PragmaKind::Scope { with } => self.check_scope(pragma.span, with, body),
                PragmaKind::Ctrl { arg } => {
                    let t = self.check_expr(arg);
                    if !t.is_quantum() && !t.is_integral() {
                        self.err(arg.span, format!("ctrl condition must be quantum or integral, found {t}"));
                    }
                    self.ctx.ctrl += 1;
                    self.check_stmt(body);
                    self.ctx.ctrl -= 1;
                }
                PragmaKind::Compute => {
                    self.ctx.compute += 1;
                    self.check_stmt(body);
                    self.ctx.compute -= 1;
                }
                PragmaKind::Routine { .. } | PragmaKind::Move { .. } => {
                    self.err(
                        pragma.span,
                        format!("the {} directive cannot be applied to a statement", pragma.name()),
                    );
                    self.check_stmt(body);
                }
            },
            StmtKind::Move(p) => {
                if self.ctx.place == Place::Routine {
                    self.err(p.span, "move directives are not allowed inside a quantum routine");
                    return;
                }
                let PragmaKind::Move { clauses } = &p.kind else { return };
                for clause in clauses {
                    for v in &clause.vars {
                        let Some(var) = self.lookup_mut(&v.name) else {
                            self.err(v.span, format!("cannot move undeclared variable `{}`", v.name));
                            continue;
                        };
                        let msg = match (clause.dir, var.at) {
                            (MoveDir::ToDevice, Residency::Device) => {
                                Some(format!("`{}` is already resident on the device", v.name))
                            }
                            (MoveDir::ToHost, Residency::Host) => {
                                Some(format!("`{}` is not resident on the device", v.name))
                            }
                            (MoveDir::ToDevice, _) => {
                                var.at = Residency::Device;
                                None
                            }
                            (MoveDir::ToHost, _) => {
                                var.at = Residency::Host;
                                None
                            }
                        };
                        if let Some(m) = msg {
                            self.err(v.span, m);
                        }
                    }
                }
            }
            StmtKind::Empty => {}
        }
    }

    fn check_loop_body(&mut self, span: Span, body: &Stmt) {
        let before = self.residency();
        self.ctx.loops += 1;
        self.in_scope(|c| c.check_stmt(body));
        self.ctx.loops -= 1;
        if self.residency() != before {
            self.err(span, "this loop body changes where variables reside");
            self.restore_residency(&before);
        }
    }

    fn check_scope(&mut self, span: Span, with: &[crate::frontend::ast::Ident], body: &Stmt) {
        let problem = match self.ctx.place {
            Place::Qpu => Some("quantum scopes cannot be nested"),
            Place::Routine => Some("a quantum scope cannot appear inside a quantum routine"),
            Place::Host if self.ctx.ctrl + self.ctx.compute > 0 => {
                Some("a quantum scope cannot appear under a ctrl or compute directive")
            }
            Place::Host => None,
        };
        if let Some(p) = problem {
            self.err(span, p);
            self.check_stmt(body);
            return;
        }
        let mut moved = Vec::new();
        for w in with {
            if moved.contains(&w.name) {
                self.err(w.span, format!("`{}` appears twice in the with clause", w.name));
                continue;
            }
            match self.lookup_mut(&w.name) {
                None => self.err(w.span, format!("unknown identifier `{}`", w.name)),
                Some(v) if v.at == Residency::Device => {
                    self.err(w.span, format!("`{}` is already resident on the device", w.name))
                }
                Some(v) => {
                    v.at = Residency::Device;
                    moved.push(w.name.clone());
                }
            }
        }
        self.ctx.place = Place::Qpu;
        self.check_stmt(body);
        self.ctx.place = Place::Host;
        for n in moved {
            if let Some(v) = self.lookup_mut(&n) {
                v.at = Residency::Host;
            }
        }
    }

    fn check_declarator(&mut self, id: NodeId, index: usize, ty: &TypeExpr, d: &crate::frontend::ast::Declarator) {
        let mut t = resolve_type(ty, &Sizes::new()).unwrap_or_else(|m| {
            self.err(d.span, m);
            Ty::Unknown
        });
        let auto = *ty == TypeExpr::Auto;
        if let Some(n) = &d.array {
            t = match const_eval(n, &Sizes::new()) {
                Some(len) if (0..=1 << 20).contains(&len) => array_of(t, len as usize).unwrap_or_else(|m| {
                    self.err(d.span, m);
                    Ty::Unknown
                }),
                _ => {
                    self.err(n.span, "array length must be a non-negative compile-time constant");
                    Ty::Unknown
                }
            };
        }
        if t == Ty::Void {
            self.err(d.span, format!("variable `{}` cannot have type void", d.name));
            t = Ty::Unknown;
        }
        let is_vector = matches!(t, Ty::Q(QuantumType { kind: QKind::Vector, .. }));
        let init_expr = match &d.init {
            None => None,
            Some(Init::Assign(e)) if !is_vector => Some(e),
            Some(Init::Ctor(args)) if !is_vector && args.len() == 1 => Some(&args[0]),
            Some(Init::Ctor(args)) if is_vector && args.len() == 1 => {
                let n = self.check_expr(&args[0]);
                if !n.is_integral() {
                    self.err(args[0].span, format!("qvector size must be an integer, found {n}"));
                }
                if let Some(w) = const_eval(&args[0], &Sizes::new()) {
                    if !(0..=64).contains(&w) {
                        self.err(args[0].span, format!("qvector size {w} is out of range"));
                    }
                    t = Ty::Q(QuantumType::qvector(w.clamp(0, 64) as u32));
                }
                None
            }
            Some(_) => {
                let what = if is_vector {
                    "a qvector is initialised with its size, as in `qvector v(4)`"
                } else {
                    "constructor initialisers take exactly one value"
                };
                self.err(d.span, what);
                None
            }
        };
        if is_vector && d.init.is_none() {
            self.err(d.span, "a qvector needs a size, as in `qvector v(4)`");
        }
        let init_ty = init_expr.map(|e| self.check_expr(e));
        if auto {
            match &init_ty {
                None => self.err(d.span, "`auto` declarations need an initialiser"),
                Some(it) if it.is_quantum() => {
                    self.err(d.span, "`auto` cannot declare a quantum variable");
                }
                Some(it) => t = it.clone(),
            }
        }
        if t.is_quantum() && self.ctx.global {
            self.err(d.span, "quantum variables cannot be global");
        }
        let init = match (&t, init_expr, &init_ty) {
            (_, None, _) => InitSource::Zero,
            (_, Some(_), Some(Ty::Unknown)) | (Ty::Unknown, ..) => InitSource::ClassicalExpr,
            (Ty::Q(q), Some(e), Some(it)) => {
                if it.is_quantum() {
                    InitSource::QuantumExpr
                } else if !it.is_integral() {
                    self.err(e.span, format!("cannot initialise {q} from a value of type {it}"));
                    InitSource::ClassicalExpr
                } else if let Some(v) = const_eval(e, &Sizes::new()) {
                    if encode(*q, v).is_err() {
                        self.err(e.span, format!("initial value {v} is out of range for {q}"));
                    }
                    InitSource::ClassicalConst(v)
                } else {
                    InitSource::ClassicalExpr
                }
            }
            (_, Some(e), Some(it)) => {
                if it.is_quantum() {
                    self.err(e.span, QUANTUM_AS_CLASSICAL);
                } else if matches!(t, Ty::Array(..)) {
                    self.err(e.span, "array initialisers are not supported");
                } else if !assignable(&t, it) {
                    self.err(e.span, format!("cannot initialise {t} from a value of type {it}"));
                }
                InitSource::ClassicalExpr
            }
            (_, Some(_), None) => InitSource::ClassicalExpr,
        };
        self.decls.insert((id, index), DeclInfo { ty: t.clone(), init });
        self.declare(&d.name, t, d.span);
    }

    // ----- expressions -----

    fn check_condition(&mut self, e: &Expr) {
        let t = self.check_expr(e);
        if t.is_quantum() {
            self.err(e.span, format!("{QUANTUM_AS_CLASSICAL}; measure it or use a ctrl directive"));
        } else if !t.is_numeric() {
            self.err(e.span, format!("condition must be a boolean or number, found {t}"));
        }
    }

    fn classical(&mut self, e: &Expr, what: &str) -> Ty {
        let t = self.check_expr(e);
        if t.is_quantum() {
            self.err(e.span, QUANTUM_AS_CLASSICAL);
            Ty::Unknown
        } else if !t.is_numeric() {
            self.err(e.span, format!("{what} must be numeric, found {t}"));
            Ty::Unknown
        } else {
            t
        }
    }

    fn is_register(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Ident(n) => self.lookup(n).is_some_and(|v| v.ty.is_quantum()),
            ExprKind::Index(a, _) => self.is_register(a),
            _ => false,
        }
    }

    fn is_lvalue(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Ident(n) => self.lookup(n).is_some(),
            ExprKind::Index(a, _) => self.is_lvalue(a),
            _ => false,
        }
    }

    pub(super) fn check_expr(&mut self, e: &Expr) -> Ty {
        match &e.kind {
            ExprKind::Int { unsigned, .. } => {
                if *unsigned {
                    Ty::UInt
                } else {
                    Ty::Int
                }
            }
            ExprKind::Float(_) => Ty::Double,
            ExprKind::Bool(_) => Ty::Bool,
            ExprKind::Str(_) => Ty::Str,
            ExprKind::Ident(n) => self.check_ident(e, n),
            ExprKind::Unary(op, a) => self.check_unary(e, *op, a),
            ExprKind::Binary(op, a, b) => self.check_binary(e, *op, a, b),
            ExprKind::Assign(op, lhs, rhs) => self.check_assign(e, *op, lhs, rhs),
            ExprKind::Index(a, i) => {
                let ta = self.check_expr(a);
                let ti = self.check_expr(i);
                if ti.is_quantum() {
                    self.err(i.span, QUANTUM_AS_CLASSICAL);
                } else if !ti.is_integral() {
                    self.err(i.span, format!("index must be an integer, found {ti}"));
                }
                let k = const_eval(i, &Sizes::new());
                match ta {
                    Ty::Q(q) if q.kind == QKind::Bool => {
                        self.err(e.span, "cannot index a qbool");
                        Ty::Unknown
                    }
                    Ty::Q(q) => {
                        if let Some(k) = k {
                            if q.kind != QKind::Vector && !(0..q.width as i128).contains(&k) {
                                self.err(i.span, format!("index {k} is out of range for {q}"));
                            }
                        }
                        Ty::Q(QuantumType::QBOOL)
                    }
                    Ty::Array(elem, n) => {
                        if let Some(k) = k {
                            if !(0..n as i128).contains(&k) {
                                self.err(i.span, format!("index {k} is out of range for an array of {n}"));
                            }
                        }
                        *elem
                    }
                    Ty::Unknown => Ty::Unknown,
                    other => {
                        self.err(e.span, format!("cannot index a value of type {other}"));
                        Ty::Unknown
                    }
                }
            }
            ExprKind::Call(callee, args) => self.check_call(e, callee, args),
            ExprKind::Template(n, _) => {
                self.err(e.span, format!("`{n}<...>` must be called with its quantum arguments"));
                Ty::Unknown
            }
            ExprKind::Method(_, sel) => {
                self.err(e.span, format!("`.{}` must be called with its quantum arguments", sel.name()));
                Ty::Unknown
            }
            ExprKind::Cast(ty, a) => {
                let ta = self.check_expr(a);
                match resolve_type(ty, &Sizes::new()) {
                    Ok(Ty::Q(q)) if q.kind == QKind::Bool => {
                        if !ta.is_quantum() && ta != Ty::Unknown {
                            self.err(e.span, format!("cannot cast {ta} to qbool"));
                        }
                        Ty::Q(q)
                    }
                    Ok(Ty::Q(q)) => {
                        self.err(e.span, format!("casts to {q} are not supported"));
                        Ty::Unknown
                    }
                    Ok(t) => {
                        if ta.is_quantum() {
                            self.err(a.span, format!("{QUANTUM_AS_CLASSICAL}; measure it first"));
                        } else if !ta.is_numeric() {
                            self.err(e.span, format!("cannot cast {ta} to {t}"));
                        }
                        t
                    }
                    Err(m) => {
                        self.err(e.span, m);
                        Ty::Unknown
                    }
                }
            }
        }
    }

    fn check_ident(&mut self, e: &Expr, n: &str) -> Ty {
        if let Some(v) = self.lookup(n) {
            let t = v.ty.clone();
            if self.ctx.place == Place::Qpu && v.at == Residency::Host {
                self.remote.insert(e.id);
            }
            return t;
        }
        if n == "M_PI" {
            return Ty::Double;
        }
        if self.defs.contains_key(n) || GateKind::from_name(n).is_some() || BUILTINS.contains(&n) {
            self.err(e.span, format!("`{n}` is an operation and cannot be used as a value"));
        } else {
            self.err(e.span, format!("unknown identifier `{n}`"));
        }
        Ty::Unknown
    }

    fn check_unary(&mut self, e: &Expr, op: UnOp, a: &Expr) -> Ty {
        let t = self.check_expr(a);
        match (op, &t) {
            (_, Ty::Unknown) => Ty::Unknown,
            (UnOp::Not, Ty::Q(_)) => Ty::Q(QuantumType::QBOOL),
            (UnOp::BitNot, Ty::Q(q)) => Ty::Q(*q),
            (_, Ty::Q(_)) => {
                let hint = match op {
                    UnOp::Neg => "; subtract from a register instead",
                    _ => "; use `+= 1` or `-= 1`",
                };
                self.err(e.span, format!("this operator is not supported on quantum values{hint}"));
                Ty::Unknown
            }
            (UnOp::Not, t) if t.is_numeric() => Ty::Bool,
            (UnOp::Neg, Ty::Bool) | (UnOp::BitNot, Ty::Bool) => Ty::Int,
            (UnOp::Neg, t) if t.is_numeric() => t.clone(),
            (UnOp::BitNot, t) if t.is_integral() => t.clone(),
            (UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec, t) if t.is_numeric() => {
                if !self.is_lvalue(a) {
                    self.err(a.span, "operand of `++`/`--` must be a variable");
                }
                t.clone()
            }
            (_, t) => {
                self.err(e.span, format!("invalid operand of type {t}"));
                Ty::Unknown
            }
        }
    }

    fn check_binary(&mut self, e: &Expr, op: BinOp, a: &Expr, b: &Expr) -> Ty {
        let ta = self.check_expr(a);
        let tb = self.check_expr(b);
        if ta == Ty::Unknown || tb == Ty::Unknown {
            return Ty::Unknown;
        }
        if ta.is_quantum() || tb.is_quantum() {
            return self.quantum_binary(e, op, &ta, &tb);
        }
        if !ta.is_numeric() || !tb.is_numeric() {
            self.err(e.span, format!("operator `{}` cannot combine {ta} and {tb}", op.symbol()));
            return Ty::Unknown;
        }
        match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => promote(&ta, &tb),
            BinOp::Shl | BinOp::Shr | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor => {
                if !ta.is_integral() || !tb.is_integral() {
                    self.err(e.span, format!("operator `{}` needs integer operands", op.symbol()));
                    return Ty::Unknown;
                }
                if matches!(op, BinOp::Shl | BinOp::Shr) {
                    promote(&ta, &Ty::Int)
                } else {
                    promote(&ta, &tb)
                }
            }
            _ => Ty::Bool,
        }
    }

    fn quantum_binary(&mut self, e: &Expr, op: BinOp, ta: &Ty, tb: &Ty) -> Ty {
        for t in [ta, tb] {
            if !t.is_quantum() && !t.is_integral() {
                self.err(e.span, format!("operator `{}` cannot combine a quantum value with {t}", op.symbol()));
                return Ty::Unknown;
            }
        }
        match op {
            BinOp::Mul | BinOp::Div | BinOp::Rem | BinOp::Shl | BinOp::Shr => {
                self.err(e.span, format!("operator `{}` is not supported on quantum values", op.symbol()));
                Ty::Unknown
            }
            op if op.is_comparison() => Ty::Q(QuantumType::QBOOL),
            BinOp::And | BinOp::Or => Ty::Q(QuantumType::QBOOL),
            _ => {
                let width = |t: &Ty| t.quantum().map_or(0, |q| q.width);
                let w = width(ta).max(width(tb));
                let signed = ta.quantum().is_some_and(|q| q.signed()) || tb.quantum().is_some_and(|q| q.signed());
                let bool_like = |t: &Ty| !t.is_quantum() || t.quantum().is_some_and(|q| q.kind == QKind::Bool);
                if w <= 1 && bool_like(ta) && bool_like(tb) && op != BinOp::Add && op != BinOp::Sub {
                    Ty::Q(QuantumType::QBOOL)
                } else if signed {
                    Ty::Q(QuantumType::qint(w))
                } else {
                    Ty::Q(QuantumType::quint(w))
                }
            }
        }
    }

    fn check_assign(&mut self, e: &Expr, op: AssignOp, lhs: &Expr, rhs: &Expr) -> Ty {
        let tl = self.check_expr(lhs);
        if !self.is_lvalue(lhs) {
            self.err(lhs.span, "left side of the assignment is not assignable");
        }
        let tr = self.check_expr(rhs);
        if tl == Ty::Unknown || tr == Ty::Unknown {
            return Ty::Unknown;
        }
        if tl.is_quantum() {
            match op {
                AssignOp::Xor | AssignOp::Add | AssignOp::Sub => {}
                AssignOp::Assign => {
                    self.err(e.span, "cannot assign to a quantum register with `=`; use `^=` to xor a value in");
                    return Ty::Void;
                }
                _ => {
                    self.err(
                        e.span,
                        format!("operator `{}` is not supported on quantum registers", op.symbol()),
                    );
                    return Ty::Void;
                }
            }
            if !tr.is_quantum() && !tr.is_integral() {
                self.err(rhs.span, format!("cannot apply {} to a quantum register", tr));
            }
            return Ty::Void;
        }
        if tr.is_quantum() {
            self.err(rhs.span, format!("{QUANTUM_AS_CLASSICAL}; measure it first"));
            return Ty::Unknown;
        }
        if op == AssignOp::Assign {
            if !assignable(&tl, &tr) {
                self.err(e.span, format!("cannot assign {tr} to {tl}"));
            }
        } else if !tl.is_numeric() || !tr.is_numeric() {
            self.err(e.span, format!("operator `{}` needs numeric operands", op.symbol()));
        } else if matches!(
            op,
            AssignOp::Rem | AssignOp::Xor | AssignOp::Or | AssignOp::And | AssignOp::Shl | AssignOp::Shr
        ) && (!tl.is_integral() || !tr.is_integral())
        {
            self.err(e.span, format!("operator `{}` needs integer operands", op.symbol()));
        }
        tl
    }

    // ----- calls -----

    fn resolve_callee<'a>(&mut self, c: &'a Expr) -> Option<Resolved<'a>> {
        match &c.kind {
            ExprKind::Ident(n) => {
                let name = n.clone();
                if self.lookup(n).is_some() {
                    self.err(c.span, format!("`{n}` is a variable, not an operation"));
                    return None;
                }
                let target = if let Some(k) = GateKind::from_name(n) {
                    Target::Gate(k)
                } else if let Some(b) = BUILTINS.iter().find(|b| **b == n.as_str()) {
                    Target::Builtin(b)
                } else if let Some(def) = self.defs.get(n.as_str()) {
                    if def.is_routine() {
                        Target::Routine(self.instantiate(n, &[], c.span)?)
                    } else {
                        Target::Function(name.clone())
                    }
                } else if n.starts_with("wall::") {
                    self.err(c.span, format!("`{n}` needs a width, as in `{n}<4>`"));
                    return None;
                } else {
                    self.err(c.span, format!("unknown identifier `{n}`"));
                    return None;
                };
                Some(Resolved {
                    target,
                    name,
                    bound: None,
                    sel: None,
                })
            }
            ExprKind::Template(n, args) => {
                let mut sizes = Vec::with_capacity(args.len());
                for a in args {
                    if self.lookup_quantum_in(a) {
                        self.err(a.span, QUANTUM_AS_CLASSICAL);
                        return None;
                    }
                    match const_eval(a, &Sizes::new()).and_then(|v| u64::try_from(v).ok()) {
                        Some(v) => sizes.push(v),
                        None => {
                            self.err(a.span, "size argument must be a non-negative compile-time constant");
                            return None;
                        }
                    }
                }
                let target = if let Some(g) = n.strip_prefix("wall::") {
                    match GateKind::from_name(g) {
                        Some(k) if k.arity() == 1 && sizes.len() == 1 => Target::Wall(k, sizes[0]),
                        Some(k) if k.arity() == 1 => {
                            self.err(c.span, "a wall takes exactly one width");
                            return None;
                        }
                        _ => {
                            self.err(c.span, format!("`{g}` is not a single-qubit gate"));
                            return None;
                        }
                    }
                } else {
                    match self.defs.get(n.as_str()) {
                        Some(def) if def.is_routine() => Target::Routine(self.instantiate(n, &sizes, c.span)?),
                        Some(_) => {
                            self.err(c.span, format!("`{n}` is not a quantum routine and takes no size arguments"));
                            return None;
                        }
                        None => {
                            self.err(c.span, format!("unknown identifier `{n}`"));
                            return None;
                        }
                    }
                };
                Some(Resolved {
                    target,
                    name: n.clone(),
                    bound: None,
                    sel: None,
                })
            }
            ExprKind::Call(inner, bound) => {
                let mut r = self.resolve_callee(inner)?;
                if r.bound.is_some() || r.sel.is_some() {
                    self.err(c.span, format!("unexpected argument list for `{}`", r.name));
                    return None;
                }
                r.bound = Some(bound);
                Some(r)
            }
            ExprKind::Method(inner, sel) => {
                let mut r = self.resolve_callee(inner)?;
                if r.sel.is_some() {
                    self.err(c.span, "only one of `.dag`, `.ctrl`, `.ctrl_dag` may be applied");
                    return None;
                }
                if matches!(r.target, Target::Function(_) | Target::Builtin(_)) {
                    self.err(c.span, format!("`.{}` applies only to gates and quantum routines", sel.name()));
                    return None;
                }
                r.sel = Some(*sel);
                Some(r)
            }
            _ => {
                self.check_expr(c);
                self.err(c.span, "expression is not callable");
                None
            }
        }
    }

    fn lookup_quantum_in(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Ident(n) => self.lookup(n).is_some_and(|v| v.ty.is_quantum()),
            ExprKind::Unary(_, a) | ExprKind::Cast(_, a) => self.lookup_quantum_in(a),
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => self.lookup_quantum_in(a) || self.lookup_quantum_in(b),
            _ => false,
        }
    }

    fn check_call(&mut self, e: &Expr, callee: &Expr, args: &[Expr]) -> Ty {
        let Some(r) = self.resolve_callee(callee) else {
            for a in args {
                self.check_expr(a);
            }
            return Ty::Unknown;
        };
        match r.target {
            Target::Builtin(name) => {
                if r.bound.is_some() {
                    self.err(callee.span, format!("unexpected argument list for `{name}`"));
                }
                self.check_builtin(e, name, args)
            }
            Target::Function(name) => {
                if r.bound.is_some() {
                    self.err(callee.span, format!("`{name}` takes a single argument list"));
                }
                self.check_function_call(e, &name, args)
            }
            Target::Gate(kind) => {
                self.check_angle(callee.span, kind, r.bound);
                if let Some(types) = self.quantum_args(e.span, args, r.sel) {
                    if types.iter().all(|t| t.kind != QKind::Vector) {
                        let got: u32 = types.iter().map(|t| t.width).sum();
                        if got as usize != kind.arity() {
                            self.err(
                                e.span,
                                format!("`{}` acts on {} qubit(s) but the arguments hold {got}", kind.name(), kind.arity()),
                            );
                        }
                    }
                }
                Ty::Void
            }
            Target::Wall(kind, k) => {
                self.check_angle(callee.span, kind, r.bound);
                if let Some(types) = self.quantum_args(e.span, args, r.sel) {
                    match types.as_slice() {
                        [t] if t.kind != QKind::Vector && k > t.width as u64 => {
                            self.err(e.span, format!("wall of width {k} exceeds the register width {}", t.width))
                        }
                        [_] => {}
                        _ => self.err(e.span, "a wall applies to exactly one register"),
                    }
                }
                Ty::Void
            }
            Target::Routine(key) => {
                let routine = self.routines[&key].clone();
                let given = r.bound.map_or(0, |b| b.len());
                if given != routine.bound.len() {
                    self.err(
                        callee.span,
                        format!("`{}` binds {} classical value(s), got {given}", routine.name, routine.bound.len()),
                    );
                }
                for b in r.bound.unwrap_or(&[]) {
                    self.classical(b, "bound argument");
                }
                if let Some(types) = self.quantum_args(e.span, args, r.sel) {
                    if let Err(m) = check_call_compat(&routine, &types) {
                        self.err(e.span, m);
                    }
                }
                Ty::Void
            }
        }
    }

    fn check_angle(&mut self, span: Span, kind: GateKind, bound: Option<&[Expr]>) {
        match (kind.takes_angle(), bound) {
            (true, None) => self.err(
                span,
                format!("gate `{0}` needs an angle, as in `{0}(theta)(q)`", kind.name()),
            ),
            (true, Some(b)) => {
                if b.len() != 1 {
                    self.err(span, format!("gate `{}` takes one angle", kind.name()));
                }
                for a in b {
                    self.classical(a, "angle");
                }
            }
            (false, Some(_)) => self.err(span, format!("gate `{}` takes no angle", kind.name())),
            (false, None) => {}
        }
    }

    fn quantum_args(&mut self, span: Span, args: &[Expr], sel: Option<Selector>) -> Option<Vec<QuantumType>> {
        let mut rest = args;
        let mut ok = true;
        if sel.is_some_and(|s| s.controlled()) {
            let Some(first) = args.first() else {
                self.err(span, "`.ctrl` needs a control register as its first argument");
                return None;
            };
            let t = self.check_expr(first);
            if !t.is_quantum() && t != Ty::Unknown {
                self.err(first.span, format!("control must be a quantum value, found {t}"));
            }
            ok &= t != Ty::Unknown;
            rest = &args[1..];
        }
        let mut out = Vec::with_capacity(rest.len());
        for a in rest {
            match self.check_expr(a) {
                Ty::Q(q) if self.is_register(a) => out.push(q),
                Ty::Q(_) => {
                    self.err(a.span, "quantum arguments must be registers, not expressions");
                    ok = false;
                }
                Ty::Unknown => ok = false,
                other => {
                    self.err(a.span, format!("expected a quantum register, found {other}"));
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn forbid_measurement(&mut self, span: Span, what: &str) {
        let problem = if self.ctx.place == Place::Routine {
            "inside a quantum routine"
        } else if self.ctx.ctrl > 0 {
            "under a ctrl directive"
        } else if self.ctx.compute > 0 {
            "inside a compute block"
        } else {
            return;
        };
        self.err(span, format!("`{what}` is not allowed {problem}"));
    }

    fn check_builtin(&mut self, e: &Expr, name: &str, args: &[Expr]) -> Ty {
        match name {
            "measure_and_reset" | "measure" | "reset" => {
                self.forbid_measurement(e.span, name);
                if args.len() != 1 {
                    self.err(e.span, format!("`{name}` takes one quantum register"));
                    args.iter().for_each(|a| {
                        self.check_expr(a);
                    });
                    return Ty::Unknown;
                }
                let q = match self.check_expr(&args[0]) {
                    Ty::Q(q) if self.is_register(&args[0]) => q,
                    Ty::Unknown => return Ty::Unknown,
                    other => {
                        self.err(args[0].span, format!("`{name}` needs a quantum register, found {other}"));
                        return Ty::Unknown;
                    }
                };
                if name == "reset" {
                    return Ty::Void;
                }
                match q.kind {
                    QKind::Bool => Ty::Bool,
                    QKind::UInt => Ty::UInt,
                    QKind::Int => Ty::Int,
                    QKind::Array | QKind::Vector => Ty::Array(Box::new(Ty::Bool), q.width as usize),
                }
            }
            "print" => {
                if self.ctx.place == Place::Routine {
                    self.err(e.span, "`print` is not allowed inside a quantum routine");
                }
                for a in args {
                    if self.check_expr(a).is_quantum() {
                        self.err(a.span, format!("{QUANTUM_AS_CLASSICAL}; measure it first"));
                    }
                }
                Ty::Void
            }
            "snapshot" => {
                self.forbid_measurement(e.span, name);
                if !args.is_empty() {
                    self.err(e.span, "`snapshot` takes no arguments");
                }
                Ty::Void
            }
            "pow_mod" => {
                if args.len() != 3 {
                    self.err(e.span, "`pow_mod` takes a base, a quantum exponent and a modulus");
                    return Ty::Unknown;
                }
                for i in [0, 2] {
                    let t = self.classical(&args[i], "pow_mod base and modulus");
                    if !t.is_integral() {
                        self.err(args[i].span, "pow_mod base and modulus must be integers");
                    }
                }
                match self.check_expr(&args[1]) {
                    Ty::Q(_) if self.is_register(&args[1]) => {}
                    Ty::Unknown => {}
                    other => self.err(args[1].span, format!("pow_mod exponent must be a quantum register, found {other}")),
                }
                let width = const_eval(&args[2], &Sizes::new())
                    .filter(|m| *m > 1)
                    .map_or(64, |m| 128 - (m - 1).leading_zeros());
                Ty::Q(QuantumType::quint(width.clamp(1, 64)))
            }
            _ => unreachable!("unknown builtin {name}"),
        }
    }

    fn check_function_call(&mut self, e: &Expr, name: &str, args: &[Expr]) -> Ty {
        if self.ctx.place == Place::Routine {
            self.err(e.span, format!("`{name}` is not a quantum routine and cannot be called from one"));
        } else if self.ctx.ctrl + self.ctx.compute > 0 {
            self.err(e.span, format!("`{name}` is not a quantum routine and cannot be called under ctrl or compute"));
        }
        let def = self.defs[name];
        if def.params.len() != args.len() {
            self.err(
                e.span,
                format!("`{name}` takes {} argument(s), got {}", def.params.len(), args.len()),
            );
        }
        for (a, p) in args.iter().zip(&def.params) {
            let ta = self.check_expr(a);
            let tp = resolve_type(&p.ty, &Sizes::new()).unwrap_or(Ty::Unknown);
            if tp.is_quantum() {
                if ta != Ty::Unknown && !(ta.is_quantum() && self.is_register(a)) {
                    self.err(a.span, format!("parameter `{}` needs a quantum register", p.name));
                }
            } else if ta.is_quantum() {
                self.err(a.span, QUANTUM_AS_CLASSICAL);
            } else if !assignable(&tp, &ta) {
                self.err(a.span, format!("cannot pass {ta} as {tp}"));
            }
        }
        resolve_type(&def.ret, &Sizes::new()).unwrap_or(Ty::Unknown)
    }
}

fn assignable(target: &Ty, value: &Ty) -> bool {
    match (target, value) {
        (Ty::Unknown, _) | (_, Ty::Unknown) => true,
        (a, b) if a.is_numeric() && b.is_numeric() => true,
        (Ty::Str, Ty::Str) => true,
        (Ty::Array(a, n), Ty::Array(b, m)) => a == b && (n == m || *m == 0),
        _ => false,
    }
}
