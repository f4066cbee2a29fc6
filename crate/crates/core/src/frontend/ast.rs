//! Program syntax tree.

use crate::diag::Span;
use crate::qir::MoveDir;

pub type NodeId = u32;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Func(FuncDef),
    Global(Stmt),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuncDef {
    pub id: NodeId,
    pub span: Span,
    pub pragma: Option<Pragma>,
    pub ret: TypeExpr,
    pub name: String,
    pub size_params: Vec<SizeParam>,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
}

impl FuncDef {
    pub fn is_routine(&self) -> bool {
        matches!(
            self.pragma,
            Some(Pragma {
                kind: PragmaKind::Routine { .. },
                ..
            })
        )
    }

    pub fn routine_info(&self) -> Option<(RoutineFlag, &[BoundVar])> {
        match &self.pragma {
            Some(Pragma {
                kind: PragmaKind::Routine { flag, bound },
                ..
            }) => Some((*flag, bound)),
            _ => None,
        }
    }
}

/// Compile-time size parameter, `<uint64 N = 4>`.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeParam {
    pub span: Span,
    pub ty: Option<TypeExpr>,
    pub name: String,
    pub default: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub span: Span,
    pub ty: TypeExpr,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypeExpr {
    Bool,
    Int,
    Int64,
    UInt64,
    Double,
    Void,
    Auto,
    QBool,
    QUInt(Box<Expr>),
    QInt(Box<Expr>),
    QVector,
    /// Fixed-size array written with a declarator suffix, `qbool r[8]`.
    Array(Box<TypeExpr>, Box<Expr>),
}

impl TypeExpr {
    pub fn is_quantum(&self) -> bool {
        match self {
            TypeExpr::QBool | TypeExpr::QUInt(_) | TypeExpr::QInt(_) | TypeExpr::QVector => true,
            TypeExpr::Array(elem, _) => elem.is_quantum(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub span: Span,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoutineFlag {
    None,
    Typed,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundVar {
    pub ty: TypeExpr,
    pub name: Ident,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoveClause {
    pub dir: MoveDir,
    pub vars: Vec<Ident>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PragmaKind {
    Scope { with: Vec<Ident> },
    Move { clauses: Vec<MoveClause> },
    /// A variable name or a quantum condition.
    Ctrl { arg: Expr },
    Routine { flag: RoutineFlag, bound: Vec<BoundVar> },
    Compute,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pragma {
    pub span: Span,
    pub kind: PragmaKind,
}

impl Pragma {
    pub fn name(&self) -> &'static str {
        match self.kind {
            PragmaKind::Scope { .. } => "scope",
            PragmaKind::Move { .. } => "move",
            PragmaKind::Ctrl { .. } => "ctrl",
            PragmaKind::Routine { .. } => "routine",
            PragmaKind::Compute => "compute",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub id: NodeId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl {
        ty: TypeExpr,
        vars: Vec<Declarator>,
    },
    Expr(Expr),
    Block(Vec<Stmt>),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
        constexpr: bool,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
    },
    ForEach {
        ty: TypeExpr,
        var: Ident,
        iter: Expr,
        body: Box<Stmt>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    DoWhile {
        body: Box<Stmt>,
        cond: Expr,
    },
    Break,
    Continue,
    Return(Option<Expr>),
    /// scope, ctrl or compute directive applied to the next statement.
    Pragma {
        pragma: Pragma,
        body: Box<Stmt>,
    },
    /// Standalone move directive.
    Move(Pragma),
    Empty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Declarator {
    pub span: Span,
    pub name: String,
    pub array: Option<Expr>,
    pub init: Option<Init>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Assign(Expr),
    Ctor(Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitOr,
    BitXor,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Xor,
    Or,
    And,
    Shl,
    Shr,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Rem => "%=",
            AssignOp::Xor => "^=",
            AssignOp::Or => "|=",
            AssignOp::And => "&=",
            AssignOp::Shl => "<<=",
            AssignOp::Shr => ">>=",
        }
    }

    /// The binary operator a compound assignment applies.
    pub fn binop(self) -> Option<BinOp> {
        Some(match self {
            AssignOp::Assign => return None,
            AssignOp::Add => BinOp::Add,
            AssignOp::Sub => BinOp::Sub,
            AssignOp::Mul => BinOp::Mul,
            AssignOp::Div => BinOp::Div,
            AssignOp::Rem => BinOp::Rem,
            AssignOp::Xor => BinOp::BitXor,
            AssignOp::Or => BinOp::BitOr,
            AssignOp::And => BinOp::BitAnd,
            AssignOp::Shl => BinOp::Shl,
            AssignOp::Shr => BinOp::Shr,
        })
    }
}

/// Routine method selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    Dag,
    Ctrl,
    CtrlDag,
}

impl Selector {
    pub fn name(self) -> &'static str {
        match self {
            Selector::Dag => "dag",
            Selector::Ctrl => "ctrl",
            Selector::CtrlDag => "ctrl_dag",
        }
    }

    pub fn from_name(s: &str) -> Option<Selector> {
        match s {
            "dag" => Some(Selector::Dag),
            "ctrl" => Some(Selector::Ctrl),
            "ctrl_dag" => Some(Selector::CtrlDag),
            _ => None,
        }
    }

    pub fn controlled(self) -> bool {
        self != Selector::Dag
    }

    pub fn dagger(self) -> bool {
        self != Selector::Ctrl
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int { value: u64, unsigned: bool },
    Float(f64),
    Bool(bool),
    Str(String),
    /// Possibly namespaced, `wall::H`.
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Assign(AssignOp, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    /// Size-argument instantiation, `qft<8>`.
    Template(String, Vec<Expr>),
    Method(Box<Expr>, Selector),
    Cast(TypeExpr, Box<Expr>),
}

impl Expr {
    pub fn as_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            _ => None,
        }
    }
}

/// Mutable traversal over every expression and statement in a program.
pub trait VisitMut {
    fn expr(&mut self, _e: &mut Expr) {}
    fn stmt(&mut self, _s: &mut Stmt) {}
    fn span(&mut self, _s: &mut Span) {}
}

pub fn walk_program<V: VisitMut>(v: &mut V, p: &mut Program) {
    for item in &mut p.items {
        match item {
            Item::Func(f) => walk_func(v, f),
            Item::Global(s) => walk_stmt(v, s),
        }
    }
}

pub fn walk_func<V: VisitMut>(v: &mut V, f: &mut FuncDef) {
    v.span(&mut f.span);
    if let Some(p) = &mut f.pragma {
        walk_pragma(v, p);
    }
    walk_type(v, &mut f.ret);
    for sp in &mut f.size_params {
        v.span(&mut sp.span);
        if let Some(t) = &mut sp.ty {
            walk_type(v, t);
        }
        if let Some(d) = &mut sp.default {
            walk_expr(v, d);
        }
    }
    for p in &mut f.params {
        v.span(&mut p.span);
        walk_type(v, &mut p.ty);
    }
    for s in &mut f.body {
        walk_stmt(v, s);
    }
}

fn walk_pragma<V: VisitMut>(v: &mut V, p: &mut Pragma) {
    v.span(&mut p.span);
    match &mut p.kind {
        PragmaKind::Scope { with } => with.iter_mut().for_each(|i| v.span(&mut i.span)),
        PragmaKind::Move { clauses } => clauses
            .iter_mut()
            .flat_map(|c| c.vars.iter_mut())
            .for_each(|i| v.span(&mut i.span)),
        PragmaKind::Ctrl { arg } => walk_expr(v, arg),
        PragmaKind::Routine { bound, .. } => {
            for b in bound {
                walk_type(v, &mut b.ty);
                v.span(&mut b.name.span);
            }
        }
        PragmaKind::Compute => {}
    }
}

pub fn walk_type<V: VisitMut>(v: &mut V, t: &mut TypeExpr) {
    match t {
        TypeExpr::QUInt(e) | TypeExpr::QInt(e) => walk_expr(v, e),
        TypeExpr::Array(elem, n) => {
            walk_type(v, elem);
            walk_expr(v, n);
        }
        _ => {}
    }
}

pub fn walk_stmt<V: VisitMut>(v: &mut V, s: &mut Stmt) {
    v.span(&mut s.span);
    match &mut s.kind {
        StmtKind::Decl { ty, vars } => {
            walk_type(v, ty);
            for d in vars {
                v.span(&mut d.span);
                if let Some(a) = &mut d.array {
                    walk_expr(v, a);
                }
                match &mut d.init {
                    Some(Init::Assign(e)) => walk_expr(v, e),
                    Some(Init::Ctor(args)) => args.iter_mut().for_each(|e| walk_expr(v, e)),
                    None => {}
                }
            }
        }
        StmtKind::Expr(e) => walk_expr(v, e),
        StmtKind::Block(b) => b.iter_mut().for_each(|s| walk_stmt(v, s)),
        StmtKind::If {
            cond, then, els, ..
        } => {
            walk_expr(v, cond);
            walk_stmt(v, then);
            if let Some(e) = els {
                walk_stmt(v, e);
            }
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            if let Some(i) = init {
                walk_stmt(v, i);
            }
            if let Some(c) = cond {
                walk_expr(v, c);
            }
            if let Some(st) = step {
                walk_expr(v, st);
            }
            walk_stmt(v, body);
        }
        StmtKind::ForEach { ty, var, iter, body } => {
            walk_type(v, ty);
            v.span(&mut var.span);
            walk_expr(v, iter);
            walk_stmt(v, body);
        }
        StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
            walk_expr(v, cond);
            walk_stmt(v, body);
        }
        StmtKind::Return(Some(e)) => walk_expr(v, e),
        StmtKind::Pragma { pragma, body } => {
            walk_pragma(v, pragma);
            walk_stmt(v, body);
        }
        StmtKind::Move(p) => walk_pragma(v, p),
        StmtKind::Break | StmtKind::Continue | StmtKind::Return(None) | StmtKind::Empty => {}
    }
    v.stmt(s);
}

pub fn walk_expr<V: VisitMut>(v: &mut V, e: &mut Expr) {
    v.span(&mut e.span);
    match &mut e.kind {
        ExprKind::Unary(_, a) | ExprKind::Method(a, _) => walk_expr(v, a),
        ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) | ExprKind::Index(a, b) => {
            walk_expr(v, a);
            walk_expr(v, b);
        }
        ExprKind::Call(c, args) => {
            walk_expr(v, c);
            args.iter_mut().for_each(|a| walk_expr(v, a));
        }
        ExprKind::Template(_, args) => args.iter_mut().for_each(|a| walk_expr(v, a)),
        ExprKind::Cast(t, a) => {
            walk_type(v, t);
            walk_expr(v, a);
        }
        ExprKind::Int { .. }
        | ExprKind::Float(_)
        | ExprKind::Bool(_)
        | ExprKind::Str(_)
        | ExprKind::Ident(_) => {}
    }
    v.expr(e);
}

/// Clears node ids and source locations so that trees can be compared
/// structurally.
pub fn erase_locations(p: &mut Program) {
    struct Eraser;
    impl VisitMut for Eraser {
        fn expr(&mut self, e: &mut Expr) {
            e.id = 0;
        }
        fn stmt(&mut self, s: &mut Stmt) {
            s.id = 0;
        }
        fn span(&mut self, s: &mut Span) {
            *s = Span::default();
        }
    }
    for item in &mut p.items {
        if let Item::Func(f) = item {
            f.id = 0;
        }
    }
    walk_program(&mut Eraser, p);
}
