//! Host executor: walks the program, issues requests and evaluates classical
//! code. Routine, ctrl and compute bodies are emitted rather than executed.

use crate::elaborator::{bind_arguments, const_eval, fill_sizes, resolve_type, ConcreteRoutine, Elaborated, Sizes, Ty};
use crate::frontend::ast::{
    AssignOp, BinOp, Declarator, Expr, ExprKind, Init, Item, PragmaKind, Selector, Stmt, StmtKind, TypeExpr, UnOp,
};
use crate::qir::{control, dagger, expand_compute, Gate, GateKind, QInstr, Qubit, RegionId, RoutineCall};
use crate::stdlib::qft::wall;
use crate::stdlib::{
    Ancillas,
    add_into, cast_measure, display_bits, eval_condition, get_init, xor_into, CmpOp, QBinOp, QExpr, QKind,
    QuantumType,
};

use super::controller::{Controller, TraceEntry};
use super::value::{binary, unary, QView, Value};
use super::{RunError, ShotRecord, StateDump};

struct Region {
    name: String,
    id: RegionId,
    qubits: Vec<Qubit>,
    init: Vec<QInstr>,
}

#[derive(Default)]
struct Scope {
    vars: Vec<(String, Value)>,
    regions: Vec<Region>,
    /// Host-executed compute blocks awaiting their undo.
    pending: Vec<Vec<QInstr>>,
    emitting: bool,
}

#[derive(Default)]
struct Frame {
    scopes: Vec<Scope>,
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

enum Callee {
    Gate(GateKind),
    Wall(GateKind, usize),
    Routine(String, Vec<u64>),
    Function(String),
    Builtin(String),
}

/// A control register, with the compute body that prepares it when it is
/// derived from an expression.
enum Control {
    Classical(bool),
    Qubits(Vec<Qubit>, Vec<QInstr>),
}

pub(super) struct Interp<'e> {
    elab: &'e Elaborated,
    pub ctl: Controller,
    host: bool,
    emit: Vec<Vec<QInstr>>,
    frames: Vec<Frame>,
    globals: Scope,
    pub record: ShotRecord,
    pub snapshot: Option<StateDump>,
    capture: bool,
}

fn err(msg: impl Into<String>) -> RunError {
    RunError::new(msg)
}

fn truth(e: QExpr) -> QExpr {
    if e.width() == 1 && !e.signed() {
        e
    } else {
        QExpr::cmp(CmpOp::Ne, e, QExpr::Const(0))
    }
}

fn with_prep(prep: Vec<QInstr>, body: Vec<QInstr>) -> Vec<QInstr> {
    if prep.is_empty() {
        return body;
    }
    let mut out = vec![QInstr::Compute(prep)];
    out.extend(body);
    vec![QInstr::Block(out)]
}

impl<'e> Interp<'e> {
    pub fn new(elab: &'e Elaborated, ctl: Controller) -> Interp<'e> {
        Interp {
            elab,
            ctl,
            host: true,
            emit: Vec::new(),
            frames: Vec::new(),
            globals: Scope::default(),
            record: ShotRecord::default(),
            snapshot: None,
            capture: false,
        }
    }

    pub fn begin_shot(&mut self, trace: bool, capture: bool) {
        self.ctl.reset_shot(trace);
        self.host = true;
        self.emit.clear();
        self.frames.clear();
        self.globals = Scope::default();
        self.record = ShotRecord::default();
        self.snapshot = None;
        self.capture = capture;
    }

    pub fn run_shot(&mut self) -> Result<(), RunError> {
        self.frames.push(Frame {
            scopes: vec![Scope::default()],
        });
        for item in &self.elab.program.items {
            if let Item::Global(s) = item {
                self.exec(s)?;
            }
        }
        let mut frame = self.frames.pop().expect("global frame");
        self.globals = frame.scopes.pop().expect("global scope");
        self.call_function("main", Vec::new(), true)?;
        Ok(())
    }

    // ----- environment -----

    fn frame(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("an active frame")
    }

    fn push_scope(&mut self) {
        let emitting = !self.emit.is_empty();
        if emitting {
            self.emit.push(Vec::new());
        }
        self.frame().scopes.push(Scope {
            emitting,
            ..Scope::default()
        });
    }

    fn pop_scope(&mut self) -> Result<(), RunError> {
        let scope = self.frame().scopes.pop().expect("open scope");
        if scope.emitting {
            let mut buf = self.emit.pop().expect("scope buffer");
            for r in scope.regions.into_iter().rev() {
                buf.push(QInstr::Free {
                    region: r.id,
                    qubits: r.qubits,
                    init: r.init,
                });
            }
            if !buf.is_empty() {
                self.emit.last_mut().expect("parent buffer").push(QInstr::Block(buf));
            }
            return Ok(());
        }
        for undo in scope.pending.iter().rev() {
            let inverse = crate::qir::invert_flat(undo)?;
            if self.host {
                self.ctl.stats.requests += 1;
            }
            self.ctl.record(TraceEntry::Instr(QInstr::Block(inverse.clone())));
            self.ctl.run_flat(&inverse)?;
        }
        for r in scope.regions.iter().rev() {
            self.ctl.free(&r.name, r.id, &r.qubits, &r.init)?;
        }
        Ok(())
    }

    fn bind(&mut self, name: &str, v: Value) {
        self.frame()
            .scopes
            .last_mut()
            .expect("open scope")
            .vars
            .push((name.to_string(), v));
    }

    fn slot(&mut self, name: &str) -> Option<&mut Value> {
        let frame = self.frames.last_mut()?;
        for s in frame.scopes.iter_mut().rev() {
            if let Some((_, v)) = s.vars.iter_mut().rev().find(|(n, _)| n == name) {
                return Some(v);
            }
        }
        self.globals.vars.iter_mut().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn read(&mut self, e: &Expr, name: &str) -> Result<Value, RunError> {
        if self.elab.remote.contains(&e.id) {
            self.ctl.stats.remote_reads += 1;
        }
        match self.slot(name) {
            Some(v) => Ok(v.clone()),
            None if name == "M_PI" => Ok(Value::Double(std::f64::consts::PI)),
            None => Err(err(format!("unknown identifier `{name}`"))),
        }
    }

    fn live_variables(&self) -> Vec<(String, Vec<Qubit>)> {
        let scopes = self.globals_and_frames();
        let mut out = Vec::new();
        for s in scopes {
            for (n, v) in &s.vars {
                if let Value::Quantum(view) = v {
                    out.push((n.clone(), view.qubits.clone()));
                }
            }
        }
        out
    }

    fn globals_and_frames(&self) -> Vec<&Scope> {
        let mut all = vec![&self.globals];
        for f in &self.frames {
            all.extend(f.scopes.iter());
        }
        all
    }

    fn take_snapshot(&mut self) {
        self.snapshot = Some(StateDump {
            qubits: self.ctl.state.qubits().to_vec(),
            amplitudes: self.ctl.state.amplitudes().to_vec(),
            variables: self.live_variables(),
        });
    }

    // ----- requests -----

    fn submit(&mut self, payload: Vec<QInstr>) -> Result<(), RunError> {
        if let Some(buf) = self.emit.last_mut() {
            buf.extend(payload);
            return Ok(());
        }
        if self.host {
            self.ctl.stats.requests += 1;
        }
        for i in &payload {
            self.ctl.record(TraceEntry::Instr(i.clone()));
        }
        self.ctl.run(&payload)
    }

    fn forbid_emitting(&self, what: &str) -> Result<(), RunError> {
        if self.emit.is_empty() {
            Ok(())
        } else {
            Err(err(format!("`{what}` cannot run inside a routine, ctrl or compute body")))
        }
    }

    // ----- statements -----

    fn exec(&mut self, s: &Stmt) -> Result<Flow, RunError> {
        self.exec_inner(s).map_err(|e| e.at(s.span))
    }

    fn sub(&mut self, s: &Stmt) -> Result<Flow, RunError> {
        match &s.kind {
            StmtKind::Block(b) => self.block(b),
            _ => {
                self.push_scope();
                let f = self.exec(s)?;
                self.pop_scope()?;
                Ok(f)
            }
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Flow, RunError> {
        self.push_scope();
        let mut flow = Flow::Normal;
        for s in stmts {
            flow = self.exec(s)?;
            if !matches!(flow, Flow::Normal) {
                break;
            }
        }
        self.pop_scope()?;
        Ok(flow)
    }

    fn exec_inner(&mut self, s: &Stmt) -> Result<Flow, RunError> {
        match &s.kind {
            StmtKind::Decl { ty, vars } => {
                for d in vars {
                    self.declare(ty, d)?;
                }
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::Block(b) => return self.block(b),
            StmtKind::If { cond, then, els, .. } => {
                if self.eval(cond)?.truthy()? {
                    return self.sub(then);
                } else if let Some(e) = els {
                    return self.sub(e);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.push_scope();
                if let Some(i) = init {
                    self.exec(i)?;
                }
                let mut out = Flow::Normal;
                loop {
                    if let Some(c) = cond {
                        if !self.eval(c)?.truthy()? {
                            break;
                        }
                    }
                    match self.sub(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => {
                            out = Flow::Return(v);
                            break;
                        }
                        Flow::Normal | Flow::Continue => {}
                    }
                    if let Some(st) = step {
                        self.eval(st)?;
                    }
                }
                self.pop_scope()?;
                return Ok(out);
            }
            StmtKind::ForEach { var, iter, body, .. } => {
                let items = match self.eval(iter)? {
                    Value::Quantum(v) => v
                        .qubits
                        .iter()
                        .map(|q| {
                            Value::Quantum(QView {
                                qubits: vec![*q],
                                ty: QuantumType::QBOOL,
                            })
                        })
                        .collect(),
                    Value::Array(items) => items,
                    other => return Err(err(format!("cannot iterate over a {}", other.kind()))),
                };
                for item in items {
                    self.push_scope();
                    self.bind(&var.name, item);
                    let f = self.sub(body)?;
                    self.pop_scope()?;
                    match f {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval(cond)?.truthy()? {
                    match self.sub(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::DoWhile { body, cond } => loop {
                match self.sub(body)? {
                    Flow::Break => break,
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Normal | Flow::Continue => {}
                }
                if !self.eval(cond)?.truthy()? {
                    break;
                }
            },
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => self.eval(e)?,
                    None => Value::Void,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Pragma { pragma, body } => match &pragma.kind {
                PragmaKind::Scope { with } => {
                    self.forbid_emitting("quantum scope")?;
                    let names: Vec<String> = with.iter().map(|w| w.name.clone()).collect();
                    self.ctl.stats.requests += 1;
                    self.ctl.stats.transfers += 2 * names.len() as u64;
                    self.ctl.record(TraceEntry::Instr(QInstr::ScopeBegin { with: names }));
                    let was_host = std::mem::replace(&mut self.host, false);
                    let f = self.sub(body);
                    self.host = was_host;
                    self.ctl.record(TraceEntry::Instr(QInstr::ScopeEnd));
                    return f;
                }
                PragmaKind::Ctrl { arg } => return self.ctrl(arg, body),
                PragmaKind::Compute => return self.compute(body),
                PragmaKind::Routine { .. } | PragmaKind::Move { .. } => {
                    return Err(err(format!("misplaced {} directive", pragma.name())))
                }
            },
            StmtKind::Move(p) => {
                if let PragmaKind::Move { clauses } = &p.kind {
                    for c in clauses {
                        for v in &c.vars {
                            self.ctl.stats.transfers += 1;
                            self.ctl.record(TraceEntry::Instr(QInstr::Move {
                                dir: c.dir,
                                var: v.name.clone(),
                            }));
                        }
                    }
                }
            }
            StmtKind::Empty => {}
        }
        Ok(Flow::Normal)
    }

    fn ctrl(&mut self, arg: &Expr, body: &Stmt) -> Result<Flow, RunError> {
        match self.control_of(arg)? {
            Control::Classical(true) => self.sub(body),
            Control::Classical(false) => Ok(Flow::Normal),
            Control::Qubits(ctrls, prep) => {
                self.emit.push(Vec::new());
                let flow = self.sub(body)?;
                let inner = self.emit.pop().expect("ctrl buffer");
                let ctrl = vec![QInstr::Ctrl { ctrls, body: inner }];
                self.submit(with_prep(prep, ctrl))?;
                Ok(flow)
            }
        }
    }

    fn compute(&mut self, body: &Stmt) -> Result<Flow, RunError> {
        self.emit.push(Vec::new());
        let flow = self.sub(body)?;
        let inner = self.emit.pop().expect("compute buffer");
        if let Some(buf) = self.emit.last_mut() {
            buf.push(QInstr::Compute(inner));
            return Ok(flow);
        }
        let flat = expand_compute(&inner)?;
        if self.host {
            self.ctl.stats.requests += 1;
        }
        self.ctl.record(TraceEntry::Instr(QInstr::Compute(inner)));
        self.ctl.run_flat(&flat)?;
        self.frame().scopes.last_mut().expect("open scope").pending.push(flat);
        Ok(flow)
    }

    fn control_of(&mut self, arg: &Expr) -> Result<Control, RunError> {
        Ok(match self.eval(arg)? {
            Value::Quantum(v) => Control::Qubits(v.qubits, Vec::new()),
            Value::Expr(e) => {
                let (t, prep) = eval_condition(&mut self.ctl, &e)?;
                Control::Qubits(vec![t], prep)
            }
            other => Control::Classical(other.truthy()?),
        })
    }

    fn declared_type(&mut self, ty: &TypeExpr, d: &Declarator) -> Result<Ty, RunError> {
        let mut t = resolve_type(ty, &Sizes::new()).map_err(err)?;
        if let Some(n) = &d.array {
            let len = match const_eval(n, &Sizes::new()) {
                Some(v) => v,
                None => self.eval(n)?.as_i128()?,
            };
            t = crate::elaborator::types::array_of(t, len.max(0) as usize).map_err(err)?;
        }
        Ok(t)
    }

    fn declare(&mut self, ty: &TypeExpr, d: &Declarator) -> Result<(), RunError> {
        let t = self.declared_type(ty, d)?;
        let init = match &d.init {
            Some(Init::Assign(e)) => Some(e),
            Some(Init::Ctor(args)) if args.len() == 1 => Some(&args[0]),
            Some(Init::Ctor(_)) => return Err(err("constructor initialisers take exactly one value")),
            None => None,
        };
        let Ty::Q(mut q) = t else {
            let v = match init {
                Some(e) => {
                    let v = self.eval(e)?;
                    if *ty == TypeExpr::Auto {
                        v
                    } else {
                        Value::zero_of(&t).coerce(v)?
                    }
                }
                None => Value::zero_of(&t),
            };
            self.bind(&d.name, v);
            return Ok(());
        };
        let mut init_expr = init;
        if q.kind == QKind::Vector {
            let n = match init {
                Some(e) => self.eval(e)?.as_i128()?,
                None => return Err(err("a qvector needs a size")),
            };
            if !(0..=64).contains(&n) {
                return Err(err(format!("qvector size {n} is out of range")));
            }
            q = QuantumType::qvector(n as u32);
            init_expr = None;
        }
        let (region, qubits) = self.ctl.fresh(q.width as usize);
        let init_seq = match init_expr {
            None => Vec::new(),
            Some(e) => {
                let v = self.eval(e)?;
                if v.is_quantum() {
                    xor_into(&mut self.ctl, &qubits, &v.qexpr()?)?
                } else {
                    get_init(q, v.as_i128()?, &qubits)?
                }
            }
        };
        self.submit(vec![QInstr::Alloc {
            region,
            qubits: qubits.clone(),
            init: init_seq.clone(),
        }])?;
        let emitting = !self.emit.is_empty();
        let stored = if emitting { init_seq } else { expand_compute(&init_seq)? };
        let scope = self.frame().scopes.last_mut().expect("open scope");
        scope.regions.push(Region {
            name: d.name.clone(),
            id: region,
            qubits: qubits.clone(),
            init: stored,
        });
        self.bind(&d.name, Value::Quantum(QView { qubits, ty: q }));
        Ok(())
    }

    // ----- expressions -----

    fn eval(&mut self, e: &Expr) -> Result<Value, RunError> {
        Ok(match &e.kind {
            ExprKind::Int { value, unsigned } => {
                if *unsigned {
                    Value::UInt(*value)
                } else {
                    Value::Int(*value as i64)
                }
            }
            ExprKind::Float(v) => Value::Double(*v),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Str(s) => Value::Str(s.clone()),
            ExprKind::Ident(n) => self.read(e, n)?,
            ExprKind::Unary(op, a) => match op {
                UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec => {
                    let old = self.eval(a)?;
                    let new = old.coerce(unary(*op, &old)?)?;
                    self.store(a, new.clone())?;
                    if matches!(op, UnOp::PreInc | UnOp::PreDec) {
                        new
                    } else {
                        old
                    }
                }
                _ => {
                    let v = self.eval(a)?;
                    if v.is_quantum() {
                        let x = v.qexpr()?;
                        match op {
                            UnOp::Not => Value::Expr(QExpr::Not(Box::new(x))),
                            UnOp::BitNot => Value::Expr(QExpr::BitNot(Box::new(x))),
                            _ => return Err(err("unsupported operator on a quantum value")),
                        }
                    } else {
                        unary(*op, &v)?
                    }
                }
            },
            ExprKind::Binary(op, a, b) => {
                let va = self.eval(a)?;
                if !va.is_quantum() {
                    match op {
                        BinOp::And if !va.truthy()? => return Ok(Value::Bool(false)),
                        BinOp::Or if va.truthy()? => return Ok(Value::Bool(true)),
                        _ => {}
                    }
                }
                let vb = self.eval(b)?;
                if va.is_quantum() || vb.is_quantum() {
                    Value::Expr(quantum_binary(*op, &va, &vb)?)
                } else {
                    binary(*op, &va, &vb)?
                }
            }
            ExprKind::Assign(op, lhs, rhs) => self.assign(*op, lhs, rhs)?,
            ExprKind::Index(a, i) => {
                let va = self.eval(a)?;
                let k = self.eval(i)?.as_i128()?;
                index(va, k)?
            }
            ExprKind::Call(callee, args) => self.call(callee, args)?,
            ExprKind::Cast(t, a) => {
                let v = self.eval(a)?;
                match resolve_type(t, &Sizes::new()).map_err(err)? {
                    Ty::Q(_) => match v {
                        Value::Quantum(view) if view.qubits.len() == 1 => Value::Quantum(QView {
                            qubits: view.qubits,
                            ty: QuantumType::QBOOL,
                        }),
                        other => Value::Expr(truth(other.qexpr()?)),
                    },
                    ty => Value::zero_of(&ty).coerce(v)?,
                }
            }
            ExprKind::Template(..) | ExprKind::Method(..) => {
                return Err(err("routine references must be called"))
            }
        })
    }

    /// Root variable and index chain of an assignable expression.
    fn lvalue<'a>(&mut self, e: &'a Expr) -> Result<(&'a Expr, String, Vec<i128>), RunError> {
        match &e.kind {
            ExprKind::Ident(n) => Ok((e, n.clone(), Vec::new())),
            ExprKind::Index(a, i) => {
                let (root, name, mut path) = self.lvalue(a)?;
                path.push(self.eval(i)?.as_i128()?);
                Ok((root, name, path))
            }
            _ => Err(err("expression is not assignable")),
        }
    }

    fn store(&mut self, target: &Expr, v: Value) -> Result<(), RunError> {
        let (root, name, path) = self.lvalue(target)?;
        if self.elab.remote.contains(&root.id) {
            self.ctl.stats.remote_writes += 1;
        }
        let mut slot = self.slot(&name).ok_or_else(|| err(format!("unknown identifier `{name}`")))?;
        for k in path {
            let Value::Array(items) = slot else {
                return Err(err(format!("`{name}` is not an array")));
            };
            let len = items.len();
            slot = items
                .get_mut(usize::try_from(k).unwrap_or(usize::MAX))
                .ok_or_else(|| err(format!("index {k} is out of range for an array of {len}")))?;
        }
        *slot = v;
        Ok(())
    }

    fn assign(&mut self, op: AssignOp, lhs: &Expr, rhs: &Expr) -> Result<Value, RunError> {
        let rv = self.eval(rhs)?;
        let current = if op == AssignOp::Assign {
            // fetched without counting a remote read
            let (_, name, path) = self.lvalue(lhs)?;
            let mut v = self.slot(&name).cloned().ok_or_else(|| err(format!("unknown identifier `{name}`")))?;
            for k in path {
                v = index(v, k)?;
            }
            v
        } else {
            self.eval(lhs)?
        };
        if let Value::Quantum(view) = &current {
            let e = rv.qexpr()?;
            let seq = match op {
                AssignOp::Xor => xor_into(&mut self.ctl, &view.qubits, &e)?,
                AssignOp::Add => add_into(&mut self.ctl, &view.qubits, &e, false)?,
                AssignOp::Sub => add_into(&mut self.ctl, &view.qubits, &e, true)?,
                _ => return Err(err(format!("`{}` is not supported on quantum registers", op.symbol()))),
            };
            let (root, ..) = self.lvalue(lhs)?;
            if self.elab.remote.contains(&root.id) {
                self.ctl.stats.remote_writes += 1;
            }
            self.submit(seq)?;
            return Ok(Value::Void);
        }
        let new = match op.binop() {
            None => rv,
            Some(b) => binary(b, &current, &rv)?,
        };
        let new = current.coerce(new)?;
        self.store(lhs, new.clone())?;
        Ok(new)
    }

    // ----- calls -----

    fn resolve(&mut self, c: &Expr) -> Result<(Callee, Option<Vec<Value>>, Option<Selector>), RunError> {
        match &c.kind {
            ExprKind::Ident(n) => {
                let callee = if let Some(k) = GateKind::from_name(n) {
                    Callee::Gate(k)
                } else if crate::elaborator::BUILTINS.contains(&n.as_str()) {
                    Callee::Builtin(n.clone())
                } else if self.elab.functions.contains_key(n) {
                    Callee::Function(n.clone())
                } else if let Some(def) = self.elab.generic.get(n) {
                    Callee::Routine(n.clone(), fill_sizes(def, &[]).map_err(err)?)
                } else {
                    return Err(err(format!("unknown operation `{n}`")));
                };
                Ok((callee, None, None))
            }
            ExprKind::Template(n, args) => {
                let mut sizes = Vec::with_capacity(args.len());
                for a in args {
                    let v = match const_eval(a, &Sizes::new()) {
                        Some(v) => v,
                        None => self.eval(a)?.as_i128()?,
                    };
                    sizes.push(u64::try_from(v).map_err(|_| err("negative size argument"))?);
                }
                if let Some(g) = n.strip_prefix("wall::") {
                    let k = GateKind::from_name(g).ok_or_else(|| err(format!("unknown gate `{g}`")))?;
                    return Ok((Callee::Wall(k, sizes.first().copied().unwrap_or(0) as usize), None, None));
                }
                let def = self.elab.generic.get(n).ok_or_else(|| err(format!("unknown routine `{n}`")))?;
                Ok((Callee::Routine(n.clone(), fill_sizes(def, &sizes).map_err(err)?), None, None))
            }
            ExprKind::Call(inner, bound) => {
                let (callee, _, sel) = self.resolve(inner)?;
                let values = bound.iter().map(|b| self.eval(b)).collect::<Result<Vec<_>, _>>()?;
                Ok((callee, Some(values), sel))
            }
            ExprKind::Method(inner, sel) => {
                let (callee, bound, _) = self.resolve(inner)?;
                Ok((callee, bound, Some(*sel)))
            }
            _ => Err(err("expression is not callable")),
        }
    }

    fn views(&mut self, args: &[Expr]) -> Result<Vec<QView>, RunError> {
        args.iter()
            .map(|a| match self.eval(a)? {
                Value::Quantum(v) => Ok(v),
                other => Err(err(format!("expected a quantum register, found {}", other.kind()))),
            })
            .collect()
    }

    fn call(&mut self, callee: &Expr, args: &[Expr]) -> Result<Value, RunError> {
        let (target, bound, sel) = self.resolve(callee)?;
        match &target {
            Callee::Builtin(n) => return self.builtin(n, args),
            Callee::Function(n) => {
                let values = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                return self.call_function(n, values, false);
            }
            _ => {}
        }
        let (prep, ctrls, rest) = match sel {
            Some(s) if s.controlled() => {
                let first = args.first().ok_or_else(|| err("`.ctrl` needs a control register"))?;
                match self.control_of(first)? {
                    Control::Classical(false) => return Ok(Value::Void),
                    Control::Classical(true) => (Vec::new(), Vec::new(), &args[1..]),
                    Control::Qubits(q, prep) => (prep, q, &args[1..]),
                }
            }
            _ => (Vec::new(), Vec::new(), args),
        };
        let dag = sel.is_some_and(|s| s.dagger());
        let views = self.views(rest)?;
        let targets: Vec<Qubit> = views.iter().flat_map(|v| v.qubits.iter().copied()).collect();
        let angle = match &bound {
            Some(b) if !b.is_empty() => Some(b[0].as_f64()?),
            _ => None,
        };
        match target {
            Callee::Gate(kind) => {
                let g = match angle {
                    Some(a) => Gate::with_angle(kind, a, targets)?,
                    None => Gate::new(kind, targets)?,
                };
                let g = if dag { g.inverse() } else { g };
                self.submit(with_prep(prep, vec![QInstr::Gate(g.controlled(&ctrls))]))?;
            }
            Callee::Wall(kind, k) => {
                let mut seq = wall(kind, angle, k, &targets)?;
                if dag {
                    seq = dagger(&seq)?;
                }
                if !ctrls.is_empty() {
                    seq = control(&seq, &ctrls)?;
                }
                self.submit(with_prep(prep, seq))?;
            }
            Callee::Routine(name, sizes) => {
                let routine = self
                    .elab
                    .routine(&name, &sizes)
                    .cloned()
                    .ok_or_else(|| err(format!("routine `{name}` was not instantiated")))?;
                let bound = bound.unwrap_or_default();
                let scalars = bound.iter().map(Value::scalar).collect::<Result<Vec<_>, _>>()?;
                let body = self.expand(&routine, &bound, &views, dag, &ctrls)?;
                let body = with_prep(prep, body);
                if let Some(buf) = self.emit.last_mut() {
                    buf.extend(body);
                } else {
                    if self.host {
                        self.ctl.stats.requests += 1;
                    }
                    let call = QInstr::Call(RoutineCall {
                        name,
                        size_args: sizes,
                        bound: scalars,
                        targets,
                        ctrls,
                        dagger: dag,
                    });
                    self.ctl.record(TraceEntry::Call {
                        call,
                        body: body.clone(),
                    });
                    self.ctl.run(&body)?;
                }
            }
            Callee::Builtin(_) | Callee::Function(_) => unreachable!("handled above"),
        }
        Ok(Value::Void)
    }

    /// Instantiates a routine body over concrete registers.
    pub fn expand(
        &mut self,
        routine: &ConcreteRoutine,
        bound: &[Value],
        args: &[QView],
        dag: bool,
        ctrls: &[Qubit],
    ) -> Result<Vec<QInstr>, RunError> {
        if bound.len() != routine.bound.len() {
            return Err(err(format!(
                "`{}` binds {} classical value(s), got {}",
                routine.name,
                routine.bound.len(),
                bound.len()
            )));
        }
        let typed: Vec<(Vec<Qubit>, QuantumType)> = args.iter().map(|v| (v.qubits.clone(), v.ty)).collect();
        let parts = bind_arguments(routine, &typed).map_err(err)?;
        self.frames.push(Frame::default());
        self.emit.push(Vec::new());
        self.push_scope();
        for ((n, t), v) in routine.bound.iter().zip(bound) {
            let v = Value::zero_of(t).coerce(v.clone())?;
            self.bind(n, v);
        }
        for ((n, t), qubits) in routine.params.iter().zip(parts) {
            let ty = if t.kind == QKind::Vector {
                QuantumType::qvector(qubits.len() as u32)
            } else {
                *t
            };
            self.bind(n, Value::Quantum(QView { qubits, ty }));
        }
        for s in &routine.body {
            if let Flow::Return(_) = self.exec(s)? {
                break;
            }
        }
        self.pop_scope()?;
        let mut seq = self.emit.pop().expect("routine buffer");
        self.frames.pop();
        if dag {
            seq = dagger(&seq)?;
        }
        if !ctrls.is_empty() {
            seq = control(&seq, ctrls)?;
        }
        Ok(seq)
    }

    fn call_function(&mut self, name: &str, args: Vec<Value>, is_main: bool) -> Result<Value, RunError> {
        let def = self
            .elab
            .functions
            .get(name)
            .ok_or_else(|| err(format!("unknown function `{name}`")))?;
        if def.params.len() != args.len() {
            return Err(err(format!("`{name}` takes {} argument(s)", def.params.len())));
        }
        let ret = resolve_type(&def.ret, &Sizes::new()).map_err(err)?;
        self.frames.push(Frame::default());
        let was_host = std::mem::replace(&mut self.host, true);
        self.push_scope();
        for (p, v) in def.params.iter().zip(args) {
            let t = resolve_type(&p.ty, &Sizes::new()).map_err(err)?;
            let v = if t.is_quantum() { v } else { Value::zero_of(&t).coerce(v)? };
            self.bind(&p.name, v);
        }
        let mut result = Value::Void;
        for s in &def.body {
            if let Flow::Return(v) = self.exec(s)? {
                result = v;
                break;
            }
        }
        if is_main && self.capture && self.snapshot.is_none() {
            self.take_snapshot();
        }
        self.pop_scope()?;
        self.frames.pop();
        self.host = was_host;
        Ok(match (ret, result) {
            (Ty::Void | Ty::Unknown, _) => Value::Void,
            (t, Value::Void) => Value::zero_of(&t),
            (t, v) => Value::zero_of(&t).coerce(v)?,
        })
    }

    fn builtin(&mut self, name: &str, args: &[Expr]) -> Result<Value, RunError> {
        match name {
            "measure_and_reset" | "measure" | "reset" => {
                self.forbid_emitting(name)?;
                let [arg] = args else {
                    return Err(err(format!("`{name}` takes one register")));
                };
                let view = match self.eval(arg)? {
                    Value::Quantum(v) => v,
                    other => return Err(err(format!("`{name}` needs a quantum register, found {}", other.kind()))),
                };
                if self.host {
                    self.ctl.stats.requests += 1;
                }
                let targets = view.qubits.clone();
                if name == "reset" {
                    self.ctl.record(TraceEntry::Instr(QInstr::Reset { targets }));
                    self.ctl.reset(&view.qubits)?;
                    return Ok(Value::Void);
                }
                let reset = name == "measure_and_reset";
                self.ctl.record(TraceEntry::Instr(QInstr::Measure { targets, reset }));
                let bits = self.ctl.measure(&view.qubits, reset)?;
                self.record.measurements.push(display_bits(&bits));
                Ok(Value::from_measurement(cast_measure(view.ty, &bits)))
            }
            "print" => {
                let mut line = String::new();
                for a in args {
                    line.push_str(&self.eval(a)?.to_string());
                }
                self.record.prints.push(line);
                Ok(Value::Void)
            }
            "snapshot" => {
                self.forbid_emitting(name)?;
                self.take_snapshot();
                Ok(Value::Void)
            }
            "pow_mod" => {
                let [base, exp, modulus] = args else {
                    return Err(err("`pow_mod` takes a base, an exponent register and a modulus"));
                };
                let base = self.eval(base)?.as_i128()?;
                let exp = self.eval(exp)?.qexpr()?;
                let modulus = self.eval(modulus)?.as_i128()?;
                if base < 0 || modulus < 2 {
                    return Err(err(format!("invalid pow_mod parameters {base}, {modulus}")));
                }
                Ok(Value::Expr(QExpr::PowMod {
                    base: base as u64,
                    exp: Box::new(exp),
                    modulus: modulus as u64,
                }))
            }
            _ => Err(err(format!("unknown builtin `{name}`"))),
        }
    }
}

fn index(v: Value, k: i128) -> Result<Value, RunError> {
    match v {
        Value::Quantum(view) => {
            let q = usize::try_from(k)
                .ok()
                .and_then(|k| view.qubits.get(k).copied())
                .ok_or_else(|| err(format!("index {k} is out of range for {}", view.ty)))?;
            Ok(Value::Quantum(QView {
                qubits: vec![q],
                ty: QuantumType::QBOOL,
            }))
        }
        Value::Array(items) => {
            let len = items.len();
            usize::try_from(k)
                .ok()
                .and_then(|k| items.into_iter().nth(k))
                .ok_or_else(|| err(format!("index {k} is out of range for an array of {len}")))
        }
        other => Err(err(format!("cannot index a {}", other.kind()))),
    }
}

fn quantum_binary(op: BinOp, a: &Value, b: &Value) -> Result<QExpr, RunError> {
    let (x, y) = (a.qexpr()?, b.qexpr()?);
    let cmp = |c: CmpOp| Ok(QExpr::cmp(c, x.clone(), y.clone()));
    match op {
        BinOp::Add => Ok(QExpr::bin(QBinOp::Add, x, y)),
        BinOp::Sub => Ok(QExpr::bin(QBinOp::Sub, x, y)),
        BinOp::BitAnd => Ok(QExpr::bin(QBinOp::And, x, y)),
        BinOp::BitOr => Ok(QExpr::bin(QBinOp::Or, x, y)),
        BinOp::BitXor => Ok(QExpr::bin(QBinOp::Xor, x, y)),
        BinOp::And => Ok(QExpr::bin(QBinOp::And, truth(x), truth(y))),
        BinOp::Or => Ok(QExpr::bin(QBinOp::Or, truth(x), truth(y))),
        BinOp::Lt => cmp(CmpOp::Lt),
        BinOp::Le => cmp(CmpOp::Le),
        BinOp::Gt => cmp(CmpOp::Gt),
        BinOp::Ge => cmp(CmpOp::Ge),
        BinOp::Eq => cmp(CmpOp::Eq),
        BinOp::Ne => cmp(CmpOp::Ne),
        BinOp::Mul | BinOp::Div | BinOp::Rem | BinOp::Shl | BinOp::Shr => Err(err(format!(
            "operator `{}` is not supported on quantum values",
            op.symbol()
        ))),
    }
}
