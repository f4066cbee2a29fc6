//! Recursive-descent parser.

use crate::diag::{Diagnostic, Span};
use crate::qir::MoveDir;

use super::ast::*;
use super::token::{tokenize, Token, TokenKind};

const PRAGMA_SCOPE: &str = "pragma_scope ::= #pragma quantum scope (with var_list)?";
const PRAGMA_MOVE: &str = "pragma_move ::= #pragma quantum move (move_dir var_list)+";
const PRAGMA_CTRL: &str = "pragma_ctrl ::= #pragma quantum ctrl ( var_name | quantum_condition )";
const PRAGMA_ROUTINE: &str = "prag_routine ::= #pragma quantum routine flag? bound_vars?";
const PRAGMA_COMPUTE: &str = "pragma_compute ::= #pragma quantum compute";

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    next_id: NodeId,
    end_span: Span,
}

impl<'t> Parser<'t> {
    fn new(toks: &'t [Token], next_id: NodeId) -> Parser<'t> {
        let end_span = toks
            .last()
            .map(|t| Span::new(t.line, t.column + t.text.chars().count() as u32))
            .unwrap_or(Span::new(1, 1));
        Parser {
            toks,
            pos: 0,
            next_id,
            end_span,
        }
    }

    fn id(&mut self) -> NodeId {
        self.next_id += 1;
        self.next_id
    }

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_n(&self, n: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + n)
    }

    fn span(&self) -> Span {
        self.peek().map(Token::span).unwrap_or(self.end_span)
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, text))
    }

    fn at_punct(&self, text: &str) -> bool {
        self.at(TokenKind::Punctuation, text)
    }

    fn at_op(&self, text: &str) -> bool {
        self.at(TokenKind::Operator, text)
    }

    fn eat(&mut self, kind: TokenKind, text: &str) -> bool {
        if self.at(kind, text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("found {t}"),
            None => "found end of input".to_string(),
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(
            self.span(),
            format!("{}, {}", msg.into(), self.found()),
        ))
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> PResult<Span> {
        let span = self.span();
        if self.eat(kind, text) {
            Ok(span)
        } else {
            self.error(format!("expected `{text}`"))
        }
    }

    fn expect_punct(&mut self, text: &str) -> PResult<Span> {
        self.expect(TokenKind::Punctuation, text)
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(Ident {
                    span: t.span(),
                    name: t.text.clone(),
                })
            }
            _ => self.error("expected identifier"),
        }
    }

    // ---- directives ----

    /// Tokens of the directive line starting at the current pragma-intro.
    fn directive_end(&self) -> usize {
        let line = self.toks[self.pos].line;
        let mut end = self.pos + 1;
        while end < self.toks.len() && self.toks[end].line == line {
            end += 1;
        }
        end
    }

    fn directive(&mut self) -> PResult<Pragma> {
        let end = self.directive_end();
        let mut sub = Parser::new(&self.toks[self.pos..end], self.next_id);
        let pragma = sub.pragma()?;
        self.next_id = sub.next_id;
        self.pos = end;
        Ok(pragma)
    }

    fn var_list(&mut self, production: &str) -> PResult<Vec<Ident>> {
        if !self.eat(TokenKind::Punctuation, "(") {
            return self.error(format!("expected `(` ({production})"));
        }
        let mut vars = vec![self.ident()?];
        while self.eat(TokenKind::Punctuation, ",") {
            vars.push(self.ident()?);
        }
        if !self.eat(TokenKind::Punctuation, ")") {
            return self.error(format!("expected `,` or `)` ({production})"));
        }
        Ok(vars)
    }

    fn pragma(&mut self) -> PResult<Pragma> {
        let span = self.expect(TokenKind::PragmaIntro, "#pragma")?;
        if !self.eat(TokenKind::Keyword, "quantum") {
            return self.error("expected `quantum` after `#pragma`");
        }
        let kind = if self.eat(TokenKind::Keyword, "scope") {
            let with = if self.eat(TokenKind::Keyword, "with") {
                self.var_list(PRAGMA_SCOPE)?
            } else {
                Vec::new()
            };
            PragmaKind::Scope { with }
        } else if self.eat(TokenKind::Keyword, "move") {
            let mut clauses = Vec::new();
            loop {
                let dir = if self.eat(TokenKind::Keyword, "toDevice") {
                    MoveDir::ToDevice
                } else if self.eat(TokenKind::Keyword, "toHost") {
                    MoveDir::ToHost
                } else {
                    break;
                };
                clauses.push(MoveClause {
                    dir,
                    vars: self.var_list(PRAGMA_MOVE)?,
                });
            }
            if clauses.is_empty() {
                return self.error(format!(
                    "expected move direction `toDevice` or `toHost` ({PRAGMA_MOVE})"
                ));
            }
            PragmaKind::Move { clauses }
        } else if self.eat(TokenKind::Keyword, "ctrl") {
            if !self.eat(TokenKind::Punctuation, "(") {
                return self.error(format!("expected `(` ({PRAGMA_CTRL})"));
            }
            if self.at_punct(")") {
                return self.error(format!("expected control variable or condition ({PRAGMA_CTRL})"));
            }
            let arg = self.expr()?;
            if !self.eat(TokenKind::Punctuation, ")") {
                return self.error(format!("expected `)` ({PRAGMA_CTRL})"));
            }
            PragmaKind::Ctrl { arg }
        } else if self.eat(TokenKind::Keyword, "routine") {
            let flag = if self.eat(TokenKind::Keyword, "typed") {
                RoutineFlag::Typed
            } else if self.eat(TokenKind::Keyword, "dynamic") {
                RoutineFlag::Dynamic
            } else {
                RoutineFlag::None
            };
            let mut bound = Vec::new();
            if self.eat(TokenKind::Punctuation, "(") {
                loop {
                    if !self.at_type_start() {
                        return self.error(format!("expected a classical type ({PRAGMA_ROUTINE})"));
                    }
                    let ty = self.type_expr()?;
                    if ty.is_quantum() {
                        return Err(Diagnostic::error(
                            self.toks[self.pos - 1].span(),
                            "bound routine variables must have a classical type",
                        ));
                    }
                    bound.push(BoundVar {
                        ty,
                        name: self.ident()?,
                    });
                    if !self.eat(TokenKind::Punctuation, ",") {
                        break;
                    }
                }
                if !self.eat(TokenKind::Punctuation, ")") {
                    return self.error(format!("expected `,` or `)` ({PRAGMA_ROUTINE})"));
                }
            }
            PragmaKind::Routine { flag, bound }
        } else if self.eat(TokenKind::Keyword, "compute") {
            PragmaKind::Compute
        } else {
            return self.error("expected one of `scope`, `move`, `ctrl`, `routine`, `compute`");
        };
        if self.peek().is_some() {
            let production = match kind {
                PragmaKind::Scope { .. } => PRAGMA_SCOPE,
                PragmaKind::Move { .. } => PRAGMA_MOVE,
                PragmaKind::Ctrl { .. } => PRAGMA_CTRL,
                PragmaKind::Routine { .. } => PRAGMA_ROUTINE,
                PragmaKind::Compute => PRAGMA_COMPUTE,
            };
            return self.error(format!("unexpected token at end of directive ({production})"));
        }
        Ok(Pragma { span, kind })
    }

    // ---- types ----

    fn at_type_start(&self) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && matches!(
            t.text.as_str(),
            "const" | "bool" | "int" | "int64" | "uint64" | "double" | "void" | "auto"
                | "qbool" | "quint" | "qint" | "qvector"
        ))
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        while self.eat(TokenKind::Keyword, "const") {}
        let Some(t) = self.peek() else {
            return self.error("expected type");
        };
        if t.kind != TokenKind::Keyword {
            return self.error("expected type");
        }
        self.pos += 1;
        let ty = match t.text.as_str() {
            "bool" => TypeExpr::Bool,
            "int" => TypeExpr::Int,
            "int64" => TypeExpr::Int64,
            "uint64" => TypeExpr::UInt64,
            "double" => TypeExpr::Double,
            "void" => TypeExpr::Void,
            "auto" => TypeExpr::Auto,
            "qbool" => TypeExpr::QBool,
            "qvector" => TypeExpr::QVector,
            "quint" | "qint" => {
                self.expect(TokenKind::Operator, "<")?;
                let width = self.binary(SHIFT_LEVEL)?;
                self.expect(TokenKind::Operator, ">")?;
                if t.text == "quint" {
                    TypeExpr::QUInt(Box::new(width))
                } else {
                    TypeExpr::QInt(Box::new(width))
                }
            }
            _ => {
                self.pos -= 1;
                return self.error("expected type");
            }
        };
        self.eat(TokenKind::Operator, "&");
        Ok(ty)
    }

    // ---- items ----

    fn program(&mut self) -> PResult<Program> {
        let mut items = Vec::new();
        while self.peek().is_some() {
            items.push(self.item()?);
        }
        Ok(Program { items })
    }

    fn item(&mut self) -> PResult<Item> {
        let mut pragma = None;
        if self.at(TokenKind::PragmaIntro, "#pragma") {
            let p = self.directive()?;
            if !matches!(p.kind, PragmaKind::Routine { .. }) {
                return Err(Diagnostic::error(
                    p.span,
                    format!(
                        "`{}` directive must annotate a statement inside a function",
                        p.name()
                    ),
                ));
            }
            if self.peek().is_none() {
                return Err(Diagnostic::error(p.span, "directive is not followed by a function definition"));
            }
            pragma = Some(p);
        }
        let span = self.span();
        let start = self.pos;
        if !self.at_type_start() {
            return self.error("expected a function definition or a global declaration");
        }
        let ret = self.type_expr()?;
        let name = self.ident()?;
        let is_func = self.at_op("<")
            || (self.at_punct("(")
                && self.peek_n(1).is_some_and(|t| {
                    t.is(TokenKind::Punctuation, ")")
                        || (t.kind == TokenKind::Keyword
                            && matches!(
                                t.text.as_str(),
                                "const" | "bool" | "int" | "int64" | "uint64" | "double"
                                    | "qbool" | "quint" | "qint" | "qvector" | "auto"
                            ))
                }));
        if !is_func {
            if let Some(p) = pragma {
                return Err(Diagnostic::error(
                    p.span,
                    "routine directive must precede a function definition",
                ));
            }
            self.pos = start;
            let stmt = self.decl_stmt()?;
            return Ok(Item::Global(stmt));
        }
        let mut size_params = Vec::new();
        if self.eat(TokenKind::Operator, "<") {
            loop {
                let span = self.span();
                let ty = if self.at_type_start() {
                    Some(self.type_expr()?)
                } else {
                    None
                };
                let name = self.ident()?.name;
                let default = if self.eat(TokenKind::Operator, "=") {
                    Some(self.binary(SHIFT_LEVEL)?)
                } else {
                    None
                };
                size_params.push(SizeParam {
                    span,
                    ty,
                    name,
                    default,
                });
                if !self.eat(TokenKind::Punctuation, ",") {
                    break;
                }
            }
            self.expect(TokenKind::Operator, ">")?;
        }
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                let span = self.span();
                let mut ty = self.type_expr()?;
                let name = self.ident()?.name;
                if self.eat(TokenKind::Punctuation, "[") {
                    let len = self.expr()?;
                    self.expect_punct("]")?;
                    ty = TypeExpr::Array(Box::new(ty), Box::new(len));
                }
                params.push(Param { span, ty, name });
                if !self.eat(TokenKind::Punctuation, ",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        if !self.at_punct("{") {
            return self.error("expected function body");
        }
        let body = self.block()?;
        Ok(Item::Func(FuncDef {
            id: self.id(),
            span,
            pragma,
            ret,
            name: name.name,
            size_params,
            params,
            body,
        }))
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return self.error("expected `}`");
            }
            stmts.push(self.stmt()?);
        }
        self.pos += 1;
        Ok(stmts)
    }

    fn mk(&mut self, span: Span, kind: StmtKind) -> Stmt {
        Stmt {
            id: self.id(),
            span,
            kind,
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        if self.at(TokenKind::PragmaIntro, "#pragma") {
            let pragma = self.directive()?;
            return match pragma.kind {
                PragmaKind::Move { .. } => Ok(self.mk(span, StmtKind::Move(pragma))),
                PragmaKind::Routine { .. } => Err(Diagnostic::error(
                    pragma.span,
                    "routine directive must precede a function definition",
                )),
                _ => {
                    if self.peek().is_none() {
                        return Err(Diagnostic::error(
                            pragma.span,
                            format!("`{}` directive is not followed by a statement", pragma.name()),
                        ));
                    }
                    if self.at_punct("}") {
                        return Err(Diagnostic::error(
                            pragma.span,
                            format!("`{}` directive is not followed by a statement", pragma.name()),
                        ));
                    }
                    let body = Box::new(self.stmt()?);
                    Ok(self.mk(span, StmtKind::Pragma { pragma, body }))
                }
            };
        }
        if self.at_punct("{") {
            let b = self.block()?;
            return Ok(self.mk(span, StmtKind::Block(b)));
        }
        if self.eat(TokenKind::Punctuation, ";") {
            return Ok(self.mk(span, StmtKind::Empty));
        }
        if self.eat(TokenKind::Keyword, "if") {
            let constexpr = self.eat(TokenKind::Keyword, "constexpr");
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then = Box::new(self.stmt()?);
            let els = if self.eat(TokenKind::Keyword, "else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(self.mk(
                span,
                StmtKind::If {
                    cond,
                    then,
                    els,
                    constexpr,
                },
            ));
        }
        if self.eat(TokenKind::Keyword, "for") {
            return self.for_stmt(span);
        }
        if self.eat(TokenKind::Keyword, "while") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(self.mk(span, StmtKind::While { cond, body }));
        }
        if self.eat(TokenKind::Keyword, "do") {
            let body = Box::new(self.stmt()?);
            self.expect(TokenKind::Keyword, "while")?;
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(self.mk(span, StmtKind::DoWhile { body, cond }));
        }
        if self.eat(TokenKind::Keyword, "break") {
            self.expect_punct(";")?;
            return Ok(self.mk(span, StmtKind::Break));
        }
        if self.eat(TokenKind::Keyword, "continue") {
            self.expect_punct(";")?;
            return Ok(self.mk(span, StmtKind::Continue));
        }
        if self.eat(TokenKind::Keyword, "return") {
            let value = if self.at_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            return Ok(self.mk(span, StmtKind::Return(value)));
        }
        if self.at_type_start() {
            return self.decl_stmt();
        }
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(self.mk(span, StmtKind::Expr(e)))
    }

    fn for_stmt(&mut self, span: Span) -> PResult<Stmt> {
        self.expect_punct("(")?;
        let init = if self.at_type_start() {
            let save = self.pos;
            let ty = self.type_expr()?;
            let var = self.ident()?;
            if self.eat(TokenKind::Operator, ":") {
                let iter = self.expr()?;
                self.expect_punct(")")?;
                let body = Box::new(self.stmt()?);
                return Ok(self.mk(
                    span,
                    StmtKind::ForEach {
                        ty,
                        var,
                        iter,
                        body,
                    },
                ));
            }
            self.pos = save;
            Some(Box::new(self.decl_stmt()?))
        } else if self.eat(TokenKind::Punctuation, ";") {
            None
        } else {
            let s = self.span();
            let e = self.expr()?;
            self.expect_punct(";")?;
            Some(Box::new(self.mk(s, StmtKind::Expr(e))))
        };
        let cond = if self.at_punct(";") {
            None
        } else {
            Some(self.expr()?)
        };
        self.expect_punct(";")?;
        let step = if self.at_punct(")") {
            None
        } else {
            Some(self.expr()?)
        };
        self.expect_punct(")")?;
        let body = Box::new(self.stmt()?);
        Ok(self.mk(
            span,
            StmtKind::For {
                init,
                cond,
                step,
                body,
            },
        ))
    }

    fn decl_stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let ty = self.type_expr()?;
        let mut vars = Vec::new();
        loop {
            let name = self.ident()?;
            let array = if self.eat(TokenKind::Punctuation, "[") {
                let n = self.expr()?;
                self.expect_punct("]")?;
                Some(n)
            } else {
                None
            };
            let init = if self.eat(TokenKind::Operator, "=") {
                Some(Init::Assign(self.assign()?))
            } else if self.eat(TokenKind::Punctuation, "(") {
                let args = self.args_until_close()?;
                Some(Init::Ctor(args))
            } else {
                None
            };
            vars.push(Declarator {
                span: name.span,
                name: name.name,
                array,
                init,
            });
            if !self.eat(TokenKind::Punctuation, ",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(self.mk(span, StmtKind::Decl { ty, vars }))
    }

    // ---- expressions ----

    fn mk_expr(&mut self, span: Span, kind: ExprKind) -> Expr {
        Expr {
            id: self.id(),
            span,
            kind,
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.assign()
    }

    fn assign(&mut self) -> PResult<Expr> {
        let lhs = self.binary(0)?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.text.as_str() {
                "=" => AssignOp::Assign,
                "+=" => AssignOp::Add,
                "-=" => AssignOp::Sub,
                "*=" => AssignOp::Mul,
                "/=" => AssignOp::Div,
                "%=" => AssignOp::Rem,
                "^=" => AssignOp::Xor,
                "|=" => AssignOp::Or,
                "&=" => AssignOp::And,
                "<<=" => AssignOp::Shl,
                ">>=" => AssignOp::Shr,
                _ => return Ok(lhs),
            },
            _ => return Ok(lhs),
        };
        let span = self.span();
        self.pos += 1;
        let rhs = self.assign()?;
        Ok(self.mk_expr(span, ExprKind::Assign(op, Box::new(lhs), Box::new(rhs))))
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let Some(op) = self.peek().and_then(|t| {
                (t.kind == TokenKind::Operator)
                    .then(|| LEVELS[level].iter().find(|op| op.symbol() == t.text))
                    .flatten()
            }) else {
                return Ok(lhs);
            };
            let span = self.span();
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = self.mk_expr(span, ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.text.as_str() {
                "-" => Some(UnOp::Neg),
                "!" => Some(UnOp::Not),
                "~" => Some(UnOp::BitNot),
                "++" => Some(UnOp::PreInc),
                "--" => Some(UnOp::PreDec),
                "+" => {
                    self.pos += 1;
                    return self.unary();
                }
                _ => None,
            },
            Some(t) if t.is(TokenKind::Keyword, "not") => Some(UnOp::Not),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(self.mk_expr(span, ExprKind::Unary(op, Box::new(operand))));
        }
        if self.at_punct("(")
            && self.peek_n(1).is_some_and(|t| {
                t.kind == TokenKind::Keyword
                    && matches!(
                        t.text.as_str(),
                        "bool" | "int" | "int64" | "uint64" | "double" | "qbool" | "quint"
                            | "qint"
                    )
            })
        {
            self.pos += 1;
            let ty = self.type_expr()?;
            self.expect_punct(")")?;
            let operand = self.unary()?;
            return Ok(self.mk_expr(span, ExprKind::Cast(ty, Box::new(operand))));
        }
        self.postfix()
    }

    fn args_until_close(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat(TokenKind::Punctuation, ",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat(TokenKind::Punctuation, "(") {
                let args = self.args_until_close()?;
                e = self.mk_expr(span, ExprKind::Call(Box::new(e), args));
            } else if self.eat(TokenKind::Punctuation, "[") {
                let idx = self.expr()?;
                self.expect_punct("]")?;
                e = self.mk_expr(span, ExprKind::Index(Box::new(e), Box::new(idx)));
            } else if self.eat(TokenKind::Operator, ".") {
                let name = self.ident()?;
                let Some(sel) = Selector::from_name(&name.name) else {
                    return Err(Diagnostic::error(
                        name.span,
                        format!(
                            "unknown routine method `{}`, expected `dag`, `ctrl` or `ctrl_dag`",
                            name.name
                        ),
                    ));
                };
                e = self.mk_expr(span, ExprKind::Method(Box::new(e), sel));
            } else if self.eat(TokenKind::Operator, "++") {
                e = self.mk_expr(span, ExprKind::Unary(UnOp::PostInc, Box::new(e)));
            } else if self.eat(TokenKind::Operator, "--") {
                e = self.mk_expr(span, ExprKind::Unary(UnOp::PostDec, Box::new(e)));
            } else {
                return Ok(e);
            }
        }
    }

    /// `<args>` after an identifier, accepted only when followed by `(` or `.`.
    fn template_args(&mut self) -> Option<Vec<Expr>> {
        let (save_pos, save_id) = (self.pos, self.next_id);
        let attempt = (|| -> PResult<Vec<Expr>> {
            self.expect(TokenKind::Operator, "<")?;
            let mut args = vec![self.binary(SHIFT_LEVEL)?];
            while self.eat(TokenKind::Punctuation, ",") {
                args.push(self.binary(SHIFT_LEVEL)?);
            }
            self.expect(TokenKind::Operator, ">")?;
            Ok(args)
        })();
        match attempt {
            Ok(args) if self.at_punct("(") || self.at_op(".") => Some(args),
            _ => {
                self.pos = save_pos;
                self.next_id = save_id;
                None
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let Some(t) = self.peek() else {
            return self.error("expected expression");
        };
        match t.kind {
            TokenKind::IntLiteral => {
                self.pos += 1;
                let digits = t.text.trim_end_matches(['u', 'U', 'l', 'L']);
                let unsigned = t.text[digits.len()..].contains(['u', 'U']);
                let value = digits.parse::<u64>().map_err(|_| {
                    Diagnostic::error(span, format!("integer literal `{}` is out of range", t.text))
                })?;
                Ok(self.mk_expr(span, ExprKind::Int { value, unsigned }))
            }
            TokenKind::FloatLiteral => {
                self.pos += 1;
                let v = t.text.parse::<f64>().map_err(|_| {
                    Diagnostic::error(span, format!("invalid float literal `{}`", t.text))
                })?;
                Ok(self.mk_expr(span, ExprKind::Float(v)))
            }
            TokenKind::StringLiteral => {
                self.pos += 1;
                let inner = &t.text[1..t.text.len() - 1];
                let s = inner.replace("\\n", "\n").replace("\\\"", "\"").replace("\\\\", "\\");
                Ok(self.mk_expr(span, ExprKind::Str(s)))
            }
            TokenKind::Keyword if t.text == "true" || t.text == "false" => {
                self.pos += 1;
                Ok(self.mk_expr(span, ExprKind::Bool(t.text == "true")))
            }
            TokenKind::Identifier => {
                self.pos += 1;
                let mut name = t.text.clone();
                while self.eat(TokenKind::Operator, "::") {
                    name.push_str("::");
                    name.push_str(&self.ident()?.name);
                }
                if self.at_op("<") {
                    if let Some(args) = self.template_args() {
                        return Ok(self.mk_expr(span, ExprKind::Template(name, args)));
                    }
                }
                Ok(self.mk_expr(span, ExprKind::Ident(name)))
            }
            TokenKind::Punctuation if t.text == "(" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.error("expected expression"),
        }
    }
}

const LEVELS: [&[BinOp]; 10] = [
    &[BinOp::Or],
    &[BinOp::And],
    &[BinOp::BitOr],
    &[BinOp::BitXor],
    &[BinOp::BitAnd],
    &[BinOp::Eq, BinOp::Ne],
    &[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge],
    &[BinOp::Shl, BinOp::Shr],
    &[BinOp::Add, BinOp::Sub],
    &[BinOp::Mul, BinOp::Div, BinOp::Rem],
];

/// Template arguments and widths stop above relational operators.
const SHIFT_LEVEL: usize = 7;

/// Parses one directive line. The slice must begin at the pragma-intro token
/// and may extend past the line; only the intro's line is consumed.
pub fn parse_pragma(tokens: &[Token]) -> Result<Pragma, Diagnostic> {
    let Some(first) = tokens.first() else {
        return Err(Diagnostic::error(Span::new(1, 1), "expected `#pragma`"));
    };
    let end = tokens
        .iter()
        .position(|t| t.line != first.line)
        .unwrap_or(tokens.len());
    Parser::new(&tokens[..end], 0).pragma()
}

pub fn parse_program(tokens: &[Token]) -> Result<Program, Diagnostic> {
    Parser::new(tokens, 0).program()
}

/// Tokenizes and parses a source string.
pub fn parse_source(source: &str) -> Result<Program, Diagnostic> {
    parse_program(&tokenize(source)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pragma(src: &str) -> Result<Pragma, Diagnostic> {
        parse_pragma(&tokenize(src).unwrap())
    }

    fn names(ids: &[Ident]) -> Vec<&str> {
        ids.iter().map(|i| i.name.as_str()).collect()
    }

    #[test]
    fn scope_with() {
        let p = pragma("#pragma quantum scope with (my_int)").unwrap();
        let PragmaKind::Scope { with } = p.kind else { panic!() };
        assert_eq!(names(&with), ["my_int"]);
        let p = pragma("#pragma quantum scope").unwrap();
        assert_eq!(p.kind, PragmaKind::Scope { with: vec![] });
    }

    #[test]
    fn move_clauses() {
        let p = pragma("#pragma quantum move toDevice(qreg) toHost(x,y)").unwrap();
        let PragmaKind::Move { clauses } = p.kind else { panic!() };
        assert_eq!(clauses.len(), 2);
        assert_eq!(clauses[0].dir, MoveDir::ToDevice);
        assert_eq!(names(&clauses[0].vars), ["qreg"]);
        assert_eq!(clauses[1].dir, MoveDir::ToHost);
        assert_eq!(names(&clauses[1].vars), ["x", "y"]);
    }

    #[test]
    fn move_without_direction_is_rejected() {
        let e = pragma("#pragma quantum move (qreg)").unwrap_err();
        assert!(e.message.contains("move_dir"), "{}", e.message);
    }

    #[test]
    fn routine_dynamic_with_bound_vars() {
        let p = pragma("#pragma quantum routine dynamic (double angle)").unwrap();
        let PragmaKind::Routine { flag, bound } = p.kind else { panic!() };
        assert_eq!(flag, RoutineFlag::Dynamic);
        assert_eq!(bound.len(), 1);
        assert_eq!(bound[0].ty, TypeExpr::Double);
        assert_eq!(bound[0].name.name, "angle");
    }

    #[test]
    fn ctrl_arguments() {
        let p = pragma("#pragma quantum ctrl (head)").unwrap();
        let PragmaKind::Ctrl { arg } = p.kind else { panic!() };
        assert_eq!(arg.as_ident(), Some("head"));
        let p = pragma("#pragma quantum ctrl(quantum_int >= 200)").unwrap();
        let PragmaKind::Ctrl { arg } = p.kind else { panic!() };
        assert!(matches!(arg.kind, ExprKind::Binary(BinOp::Ge, _, _)));
        assert!(pragma("#pragma quantum ctrl").is_err());
        assert!(pragma("#pragma quantum ctrl ()").is_err());
    }

    #[test]
    fn directive_ends_at_end_of_line() {
        assert!(pragma("#pragma quantum compute extra").is_err());
        let toks = tokenize("#pragma quantum compute\n{ }").unwrap();
        assert_eq!(parse_pragma(&toks).unwrap().kind, PragmaKind::Compute);
        // the argument list may not continue on the next line
        assert!(parse_source("void f() {\n#pragma quantum scope with\n(a)\n{}\n}").is_err());
    }

    #[test]
    fn empty_file() {
        assert_eq!(parse_source("").unwrap(), Program::default());
        assert_eq!(parse_source("  // only a comment\n").unwrap(), Program::default());
    }

    #[test]
    fn pragma_at_end_of_file_is_an_error() {
        assert!(parse_source("void main() {\n#pragma quantum compute\n}").is_err());
        assert!(parse_source("#pragma quantum routine\n").is_err());
    }

    #[test]
    fn template_call_and_comparison_disambiguate() {
        let p = parse_source("void main() { qft<8UL>(q); bool b = i < n; x = a < b > (c); }").unwrap();
        let Item::Func(f) = &p.items[0] else { panic!() };
        let StmtKind::Expr(e) = &f.body[0].kind else { panic!() };
        let ExprKind::Call(callee, _) = &e.kind else { panic!() };
        assert!(matches!(&callee.kind, ExprKind::Template(n, a) if n == "qft" && a.len() == 1));
        let StmtKind::Decl { vars, .. } = &f.body[1].kind else { panic!() };
        let Some(Init::Assign(init)) = &vars[0].init else { panic!() };
        assert!(matches!(init.kind, ExprKind::Binary(BinOp::Lt, _, _)));
    }

    #[test]
    fn method_and_binding_forms() {
        let src = "void main() { solve<SIZE - 1>.ctrl((qbool) not tail, most); r(1.0)(q); PH(a).ctrl(c, t); }";
        let p = parse_source(src).unwrap();
        let Item::Func(f) = &p.items[0] else { panic!() };
        let StmtKind::Expr(e) = &f.body[0].kind else { panic!() };
        let ExprKind::Call(callee, args) = &e.kind else { panic!() };
        assert!(matches!(callee.kind, ExprKind::Method(_, Selector::Ctrl)));
        assert!(matches!(&args[0].kind, ExprKind::Cast(TypeExpr::QBool, inner)
            if matches!(inner.kind, ExprKind::Unary(UnOp::Not, _))));
        let StmtKind::Expr(e) = &f.body[1].kind else { panic!() };
        let ExprKind::Call(callee, _) = &e.kind else { panic!() };
        assert!(matches!(callee.kind, ExprKind::Call(_, _)));
    }

    #[test]
    fn routine_pragma_attaches_to_function() {
        let src = "#pragma quantum routine\nvoid bell(qbool a, qbool b) { H(a); CNOT(a, b); }\nvoid main() { }";
        let p = parse_source(src).unwrap();
        let Item::Func(f) = &p.items[0] else { panic!() };
        assert!(f.is_routine());
        let Item::Func(m) = &p.items[1] else { panic!() };
        assert!(!m.is_routine());
        assert!(parse_source("#pragma quantum routine\nint x;").is_err());
        assert!(parse_source("#pragma quantum scope\nvoid f() {}").is_err());
        assert!(parse_source("void f() {\n#pragma quantum routine\nH(q);\n}").is_err());
    }

    #[test]
    fn statement_forms() {
        let src = r#"
            uint64 g = 3;
            void main() {
                int64 counters[4];
                qvector v(12);
                for (int i = 0; i < 10; ++i) { continue; }
                for (auto q : v) { H(q); }
                do { x += 1; } while (measure_and_reset(a));
                while (false) break;
                if constexpr (N > 1) { } else ;
                #pragma quantum move toDevice(v)
                return;
            }
        "#;
        let p = parse_source(src).unwrap();
        assert_eq!(p.items.len(), 2);
        let Item::Func(f) = &p.items[1] else { panic!() };
        assert!(matches!(f.body[3].kind, StmtKind::ForEach { .. }));
        assert!(matches!(f.body[4].kind, StmtKind::DoWhile { .. }));
        assert!(matches!(f.body[6].kind, StmtKind::If { constexpr: true, .. }));
        assert!(matches!(f.body[7].kind, StmtKind::Move(_)));
    }

    #[test]
    fn syntax_errors_have_locations() {
        let e = parse_source("void main() {\n  H(q0)\n}").unwrap_err();
        assert_eq!(e.span.line, 3);
        assert!(e.message.contains("expected `;`"));
    }
}
