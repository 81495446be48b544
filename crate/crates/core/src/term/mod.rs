//! Typed lambda terms: parsing with type inference, normalization, printing.

mod ast;
mod infer;
mod lexer;
mod parser;
mod print;
mod symbols;
mod types;

pub use ast::{Term, TermKind};
pub use infer::numeral;
pub use print::{canonical_print, hashing_print, normalize_term_tyvars, print_term, PrintOptions, VarMode};
pub use symbols::{Assoc, Candidate, Fixity, Surface, SymbolTable};
pub use types::{canonical_tyvar_name, normalize_type, print_type, Name, Type};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("type error at offset {offset}: {message}")]
    Type { offset: usize, message: String },
    #[error("unknown symbol {name:?} at offset {offset}")]
    UnknownSymbol { name: String, offset: usize },
}

impl TermError {
    pub fn offset(&self) -> usize {
        match self {
            TermError::Parse { offset, .. }
            | TermError::Type { offset, .. }
            | TermError::UnknownSymbol { offset, .. } => *offset,
        }
    }
}

/// Parse and typecheck a formula. The result always has type `bool`.
pub fn parse_term(text: &str, symbols: &SymbolTable) -> Result<Term, TermError> {
    let pre = parser::Parser::new(text, symbols)?.parse_whole_term()?;
    infer::elaborate(&pre, symbols, Some(&Type::bool()))
}

/// Parse and typecheck a term of any type, optionally constrained to `want`.
pub fn parse_expr(text: &str, symbols: &SymbolTable, want: Option<&Type>) -> Result<Term, TermError> {
    let pre = parser::Parser::new(text, symbols)?.parse_whole_term()?;
    infer::elaborate(&pre, symbols, want)
}

/// Parse a type in surface syntax, e.g. `real^N->bool` or `'a#num`.
pub fn parse_type(text: &str, symbols: &SymbolTable) -> Result<Type, TermError> {
    parser::Parser::new(text, symbols)?.parse_whole_type()
}

/// All subterms of `t` (see [`Term::subterms`]).
pub fn subterms(t: &Term) -> Vec<Term> {
    t.subterms()
}
