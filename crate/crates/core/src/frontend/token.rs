//! Lexer.

use std::fmt;

use crate::diag::{Diagnostic, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLiteral,
    FloatLiteral,
    StringLiteral,
    Operator,
    Punctuation,
    PragmaIntro,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn span(&self) -> Span {
        Span::new(self.line, self.column)
    }

    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", self.text)
    }
}

pub const KEYWORDS: &[&str] = &[
    "bool", "int", "int64", "uint64", "double", "void", "auto", "qbool", "quint", "qint",
    "qvector", "const", "if", "else", "for", "while", "do", "break", "continue", "return",
    "true", "false", "constexpr", "not",
];

/// Words that are keywords only inside a directive line.
pub const PRAGMA_WORDS: &[&str] = &[
    "quantum", "scope", "with", "move", "toDevice", "toHost", "ctrl", "routine", "dynamic",
    "typed", "compute",
];

const OPERATORS: &[&str] = &[
    "<<=", ">>=", "::", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "^=", "|=", "&=", "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|",
    "^", "=", ".", "?", ":",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ',', ';'];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    directive_line: Option<u32>,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: u32, column: u32) {
        self.out.push(Token {
            kind,
            text: self.src[start..self.pos].to_string(),
            line,
            column,
        });
    }

    fn skip_trivia(&mut self) -> Result<(), Diagnostic> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let span = Span::new(self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => return Err(Diagnostic::error(span, "unterminated comment")),
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            _ => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self, line: u32, column: u32) -> Result<(), Diagnostic> {
        let start = self.pos;
        let mut float = false;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && !self.peek_at(1).is_some_and(|c| c.is_alphabetic()) {
            float = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E'))
            && (self.peek_at(1).is_some_and(|c| c.is_ascii_digit())
                || (matches!(self.peek_at(1), Some('+' | '-'))
                    && self.peek_at(2).is_some_and(|c| c.is_ascii_digit())))
        {
            float = true;
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if !float {
            while matches!(self.peek(), Some('u' | 'U' | 'l' | 'L')) {
                self.bump();
            }
        }
        if self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            return Err(Diagnostic::error(
                Span::new(self.line, self.col),
                format!("invalid suffix on numeric literal `{}`", &self.src[start..self.pos]),
            ));
        }
        let kind = if float {
            TokenKind::FloatLiteral
        } else {
            TokenKind::IntLiteral
        };
        self.push(kind, start, line, column);
        Ok(())
    }

    fn run(mut self) -> Result<Vec<Token>, Diagnostic> {
        loop {
            self.skip_trivia()?;
            if self.directive_line.is_some_and(|l| l != self.line) {
                self.directive_line = None;
            }
            let (line, column, start) = (self.line, self.col, self.pos);
            let Some(c) = self.peek() else { break };
            if c == '#' {
                self.bump();
                while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                    self.bump();
                }
                if &self.src[start..self.pos] != "#pragma" {
                    return Err(Diagnostic::error(
                        Span::new(line, column),
                        format!(
                            "unsupported preprocessor directive `{}`",
                            &self.src[start..self.pos]
                        ),
                    ));
                }
                self.push(TokenKind::PragmaIntro, start, line, column);
                self.directive_line = Some(line);
            } else if c.is_ascii_alphabetic() || c == '_' {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let word = &self.src[start..self.pos];
                let kind = if KEYWORDS.contains(&word)
                    || (self.directive_line.is_some() && PRAGMA_WORDS.contains(&word))
                {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, start, line, column);
            } else if c.is_ascii_digit()
                || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
            {
                self.number(line, column)?;
            } else if c == '"' {
                self.bump();
                loop {
                    match self.bump() {
                        None | Some('\n') => {
                            return Err(Diagnostic::error(
                                Span::new(line, column),
                                "unterminated string literal",
                            ))
                        }
                        Some('\\') => {
                            self.bump();
                        }
                        Some('"') => break,
                        _ => {}
                    }
                }
                self.push(TokenKind::StringLiteral, start, line, column);
            } else if PUNCTUATION.contains(&c) {
                self.bump();
                self.push(TokenKind::Punctuation, start, line, column);
            } else if let Some(op) = OPERATORS.iter().find(|op| self.src[self.pos..].starts_with(**op)) {
                for _ in 0..op.len() {
                    self.bump();
                }
                self.push(TokenKind::Operator, start, line, column);
            } else {
                return Err(Diagnostic::error(
                    Span::new(line, column),
                    format!("unrecognized character `{c}`"),
                ));
            }
        }
        Ok(self.out)
    }
}

/// Splits source text into tokens. Directive lines start with a pragma-intro
/// token and end at the end of the line.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    Lexer {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
        directive_line: None,
        out: Vec::new(),
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn gate_call() {
        let k = kinds("H(q0);");
        assert_eq!(
            k,
            vec![
                (Identifier, "H".into()),
                (Punctuation, "(".into()),
                (Identifier, "q0".into()),
                (Punctuation, ")".into()),
                (Punctuation, ";".into()),
            ]
        );
    }

    #[test]
    fn directive_words_are_keywords_only_on_the_directive_line() {
        let k = kinds("#pragma quantum compute\ncompute = 1;");
        assert_eq!(k[0], (PragmaIntro, "#pragma".into()));
        assert_eq!(k[1], (Keyword, "quantum".into()));
        assert_eq!(k[2], (Keyword, "compute".into()));
        assert_eq!(k[3], (Identifier, "compute".into()));
    }

    #[test]
    fn whitespace_splits_identifiers() {
        let k = kinds("qu int");
        assert_eq!(k, vec![(Identifier, "qu".into()), (Keyword, "int".into())]);
        let k = kinds("qu intx");
        assert_eq!(k, vec![(Identifier, "qu".into()), (Identifier, "intx".into())]);
    }

    #[test]
    fn positions_point_at_token_text() {
        let src = "int a;\n  // note\n  a += 42UL; /* c */ x = 4.;";
        let lines: Vec<&str> = src.lines().collect();
        for t in tokenize(src).unwrap() {
            let line = lines[t.line as usize - 1];
            assert!(line[t.column as usize - 1..].starts_with(&t.text), "{t:?}");
        }
    }

    #[test]
    fn literals() {
        let k = kinds("8UL 3.0 4. 1e-3 .5 M_PI");
        assert_eq!(k[0], (IntLiteral, "8UL".into()));
        assert_eq!(k[1], (FloatLiteral, "3.0".into()));
        assert_eq!(k[2], (FloatLiteral, "4.".into()));
        assert_eq!(k[3], (FloatLiteral, "1e-3".into()));
        assert_eq!(k[4], (FloatLiteral, ".5".into()));
        assert_eq!(k[5], (Identifier, "M_PI".into()));
    }

    #[test]
    fn errors_carry_location() {
        let e = tokenize("int a;\n  a = $;").unwrap_err();
        assert_eq!(e.span, Span::new(2, 7));
        assert!(tokenize("#define X 1").is_err());
        assert!(tokenize("/* open").is_err());
    }
}
