//! Lexing, parsing and printing of `.qpc` sources.

pub mod ast;
mod parser;
pub mod pretty;
pub mod token;

pub use parser::{parse_pragma, parse_program, parse_source};
pub use pretty::pretty_program;
pub use token::{tokenize, Token, TokenKind};
