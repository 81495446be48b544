use super::symbols::SymbolTable;
use super::TermError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Numeral(String),
    TyVar(String),
    Sym(String),
    LParen,
    RParen,
    Colon,
    Dot,
    Comma,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub offset: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn is_symbol_char(c: char) -> bool {
    "!#$%&*+-/<=>?@\\^|~".contains(c)
}

/// Symbol tokens known to the lexer regardless of the constant table.
const STRUCTURAL: [&str; 4] = ["\\", "->", "#", "^"];

pub fn lex(text: &str, symbols: &SymbolTable) -> Result<Vec<Token>, TermError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            '.' => Some(Tok::Dot),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, offset: off });
            i += 1;
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i].1) {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|p| p.1).collect();
            out.push(Token { tok: Tok::Ident(s), offset: off });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|p| p.1).collect();
            out.push(Token { tok: Tok::Numeral(s), offset: off });
        } else if c == '\'' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && is_ident_char(chars[i].1) {
                i += 1;
            }
            if i == start {
                return Err(TermError::Parse { offset: off, message: "expected a type variable name after '".into() });
            }
            let s: String = chars[start..i].iter().map(|p| p.1).collect();
            out.push(Token { tok: Tok::TyVar(s), offset: off });
        } else if is_symbol_char(c) {
            let start = i;
            let mut end = i;
            while end < chars.len() && is_symbol_char(chars[end].1) {
                end += 1;
            }
            let run: String = chars[start..end].iter().map(|p| p.1).collect();
            // longest known prefix of the maximal run, so `~~p` reads as two negations
            let known = (1..=run.chars().count()).rev().find_map(|n| {
                let cand: String = run.chars().take(n).collect();
                (symbols.is_surface_symbol(&cand) || STRUCTURAL.contains(&cand.as_str())).then_some((cand, n))
            });
            match known {
                Some((sym, n)) => {
                    out.push(Token { tok: Tok::Sym(sym), offset: off });
                    i = start + n;
                }
                None => return Err(TermError::UnknownSymbol { name: run, offset: off }),
            }
        } else {
            return Err(TermError::Parse { offset: off, message: format!("unexpected character {:?}", c) });
        }
    }
    out.push(Token { tok: Tok::Eof, offset: text.len() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s, &SymbolTable::prelude()).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn splits_binders_and_operators() {
        assert_eq!(
            toks("!x:'a. x ==> ~~y"),
            vec![
                Tok::Sym("!".into()),
                Tok::Ident("x".into()),
                Tok::Colon,
                Tok::TyVar("a".into()),
                Tok::Dot,
                Tok::Ident("x".into()),
                Tok::Sym("==>".into()),
                Tok::Sym("~".into()),
                Tok::Sym("~".into()),
                Tok::Ident("y".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("\\/")[0], Tok::Sym("\\/".into()));
        assert_eq!(toks("\\x")[0], Tok::Sym("\\".into()));
        assert_eq!(toks("?!x")[0], Tok::Sym("?!".into()));
    }

    #[test]
    fn unknown_operator_is_reported() {
        let err = lex("a |-> b", &SymbolTable::prelude()).unwrap_err();
        assert!(matches!(err, TermError::UnknownSymbol { offset: 2, .. }));
    }
}
