use super::lexer::{lex, Tok, Token};
use super::symbols::{Assoc, Fixity, SymbolTable};
use super::types::Type;
use super::TermError;

/// Untyped parse tree handed to type inference.
#[derive(Clone, Debug)]
pub(crate) enum Pre {
    /// Identifier: a bound variable, a constant, or a free variable.
    Ident {
        name: String,
        offset: usize,
    },
    /// Operator token used as a constant (infix, prefix or binder surface).
    Op {
        token: String,
        offset: usize,
    },
    Num {
        value: u128,
        offset: usize,
    },
    App {
        fun: Box<Pre>,
        arg: Box<Pre>,
        offset: usize,
    },
    Abs {
        var: String,
        ann: Option<Type>,
        body: Box<Pre>,
        offset: usize,
    },
    Ann {
        term: Box<Pre>,
        ty: Type,
        offset: usize,
    },
}

impl Pre {
    pub(crate) fn offset(&self) -> usize {
        match self {
            Pre::Ident { offset, .. }
            | Pre::Op { offset, .. }
            | Pre::Num { offset, .. }
            | Pre::App { offset, .. }
            | Pre::Abs { offset, .. }
            | Pre::Ann { offset, .. } => *offset,
        }
    }
}

pub(crate) struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    symbols: &'a SymbolTable,
}

fn app(fun: Pre, arg: Pre, offset: usize) -> Pre {
    Pre::App { fun: Box::new(fun), arg: Box::new(arg), offset }
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &str, symbols: &'a SymbolTable) -> Result<Parser<'a>, TermError> {
        Ok(Parser { toks: lex(text, symbols)?, pos: 0, symbols })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, TermError> {
        Err(TermError::Parse { offset: self.peek().offset, message: message.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TermError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}", what))
        }
    }

    pub(crate) fn parse_whole_term(mut self) -> Result<Pre, TermError> {
        let t = self.expr(0)?;
        if self.peek().tok != Tok::Eof {
            return self.error("unexpected token after end of term");
        }
        Ok(t)
    }

    pub(crate) fn parse_whole_type(mut self) -> Result<Type, TermError> {
        let t = self.ty()?;
        if self.peek().tok != Tok::Eof {
            return self.error("unexpected token after end of type");
        }
        Ok(t)
    }

    fn fixity_of(&self, tok: &Tok) -> Option<(String, Fixity)> {
        let name = match tok {
            Tok::Sym(s) | Tok::Ident(s) => s.as_str(),
            Tok::Comma => ",",
            _ => return None,
        };
        if name == "\\" {
            return Some((name.to_string(), Fixity::Binder));
        }
        let s = self.symbols.surface(name)?;
        Some((name.to_string(), s.fixity))
    }

    fn infix_at(&self, tok: &Tok) -> Option<(String, u8, Assoc)> {
        match self.fixity_of(tok)? {
            (name, Fixity::Infix { prec, assoc }) => Some((name, prec, assoc)),
            _ => None,
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Pre, TermError> {
        let mut lhs = self.unary()?;
        while let Some((op, prec, assoc)) = self.infix_at(&self.peek().tok.clone()) {
            if prec < min_prec {
                break;
            }
            let offset = self.bump().offset;
            let next = if assoc == Assoc::Right { prec } else { prec + 1 };
            let rhs = self.expr(next)?;
            lhs = app(app(Pre::Op { token: op, offset }, lhs, offset), rhs, offset);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Pre, TermError> {
        match self.fixity_of(&self.peek().tok.clone()) {
            Some((op, Fixity::Binder)) if matches!(self.peek().tok, Tok::Sym(_)) => self.binder(op),
            Some((op, Fixity::Prefix)) => {
                let offset = self.bump().offset;
                let operand = match self.fixity_of(&self.peek().tok.clone()) {
                    Some((_, Fixity::Prefix)) | Some((_, Fixity::Binder)) => self.unary()?,
                    _ => self.application()?,
                };
                Ok(app(Pre::Op { token: op, offset }, operand, offset))
            }
            _ => self.application(),
        }
    }

    fn binder(&mut self, op: String) -> Result<Pre, TermError> {
        let offset = self.bump().offset;
        let mut vars = Vec::new();
        loop {
            match self.peek().tok.clone() {
                Tok::Dot => {
                    self.bump();
                    break;
                }
                Tok::Ident(name) if self.is_variable_name(&name) => {
                    let voff = self.bump().offset;
                    let ann = if self.peek().tok == Tok::Colon {
                        self.bump();
                        Some(self.ty()?)
                    } else {
                        None
                    };
                    vars.push((name, ann, voff));
                }
                Tok::LParen => {
                    self.bump();
                    let voff = self.peek().offset;
                    let name = match self.bump().tok {
                        Tok::Ident(n) if self.is_variable_name(&n) => n,
                        _ => {
                            return Err(TermError::Parse { offset: voff, message: "expected a bound variable".into() })
                        }
                    };
                    self.expect(Tok::Colon, "':' in bound variable annotation")?;
                    let ty = self.ty()?;
                    self.expect(Tok::RParen, "')'")?;
                    vars.push((name, Some(ty), voff));
                }
                _ => return self.error("expected a bound variable or '.'"),
            }
        }
        if vars.is_empty() {
            return Err(TermError::Parse { offset, message: "binder without variables".into() });
        }
        let mut body = self.expr(0)?;
        for (name, ann, voff) in vars.into_iter().rev() {
            let abs = Pre::Abs { var: name, ann, body: Box::new(body), offset: voff };
            body = if op == "\\" { abs } else { app(Pre::Op { token: op.clone(), offset }, abs, offset) };
        }
        Ok(body)
    }

    fn is_variable_name(&self, name: &str) -> bool {
        !matches!(self.symbols.surface(name).map(|s| s.fixity), Some(Fixity::Infix { .. }))
    }

    fn starts_atom(&self) -> bool {
        match &self.peek().tok {
            Tok::Ident(n) => self.is_variable_name(n),
            Tok::Numeral(_) | Tok::LParen => true,
            _ => false,
        }
    }

    fn application(&mut self) -> Result<Pre, TermError> {
        let mut f = self.atom()?;
        while self.starts_atom() {
            let offset = self.peek().offset;
            let a = self.atom()?;
            f = app(f, a, offset);
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<Pre, TermError> {
        let tok = self.peek().clone();
        let base = match tok.tok {
            Tok::Ident(ref name) if self.is_variable_name(name) => {
                self.bump();
                Pre::Ident { name: name.clone(), offset: tok.offset }
            }
            Tok::Numeral(ref digits) => {
                self.bump();
                let value = digits
                    .parse::<u128>()
                    .map_err(|_| TermError::Parse { offset: tok.offset, message: "numeral too large".into() })?;
                Pre::Num { value, offset: tok.offset }
            }
            Tok::LParen => {
                self.bump();
                // `(op)` names an operator as an ordinary constant
                if let Some((op, fixity)) = self.fixity_of(&self.peek().tok.clone()) {
                    if *self.peek_at(1) == Tok::RParen && op != "\\" && fixity != Fixity::Ident {
                        let offset = self.bump().offset;
                        self.bump();
                        return self.annotated(Pre::Op { token: op, offset });
                    }
                }
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, "')'")?;
                inner
            }
            Tok::Eof => return self.error("unexpected end of input"),
            _ => return self.error("expected a term"),
        };
        self.annotated(base)
    }

    fn annotated(&mut self, base: Pre) -> Result<Pre, TermError> {
        if self.peek().tok == Tok::Colon {
            let offset = self.bump().offset;
            let ty = self.ty()?;
            return Ok(Pre::Ann { term: Box::new(base), ty, offset });
        }
        Ok(base)
    }

    // ---- types ----

    fn ty(&mut self) -> Result<Type, TermError> {
        let dom = self.ty_prod()?;
        if self.peek().tok == Tok::Sym("->".into()) {
            self.bump();
            let cod = self.ty()?;
            return Ok(Type::fun(dom, cod));
        }
        Ok(dom)
    }

    fn ty_prod(&mut self) -> Result<Type, TermError> {
        let l = self.ty_cart()?;
        if self.peek().tok == Tok::Sym("#".into()) {
            self.bump();
            let r = self.ty_prod()?;
            return Ok(Type::con("prod", vec![l, r]));
        }
        Ok(l)
    }

    fn ty_cart(&mut self) -> Result<Type, TermError> {
        let mut l = self.ty_postfix()?;
        while self.peek().tok == Tok::Sym("^".into()) {
            self.bump();
            let r = self.ty_postfix()?;
            l = Type::con("cart", vec![l, r]);
        }
        Ok(l)
    }

    fn ty_postfix(&mut self) -> Result<Type, TermError> {
        let mut t = self.ty_atom()?;
        while let Tok::Ident(name) = &self.peek().tok {
            if self.symbols.tycon_arity(name) != Some(1) {
                break;
            }
            let name = name.clone();
            self.bump();
            t = Type::con(&name, vec![t]);
        }
        Ok(t)
    }

    fn ty_atom(&mut self) -> Result<Type, TermError> {
        let tok = self.bump();
        match tok.tok {
            Tok::TyVar(v) => Ok(Type::var(&v)),
            Tok::Numeral(n) => Ok(Type::base(&n)),
            Tok::Ident(name) => match self.symbols.tycon_arity(&name) {
                Some(0) => Ok(Type::base(&name)),
                Some(n) => Err(TermError::Parse {
                    offset: tok.offset,
                    message: format!("type constructor {} expects {} arguments", name, n),
                }),
                // unknown type names are type variables
                None => Ok(Type::var(&name)),
            },
            Tok::LParen => {
                let mut args = vec![self.ty()?];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    args.push(self.ty()?);
                }
                self.expect(Tok::RParen, "')' in type")?;
                if args.len() == 1 {
                    return Ok(args.pop().expect("one argument"));
                }
                let ctok = self.bump();
                match ctok.tok {
                    Tok::Ident(name) => match self.symbols.tycon_arity(&name) {
                        Some(n) if n == args.len() => Ok(Type::con(&name, args)),
                        Some(n) => Err(TermError::Parse {
                            offset: ctok.offset,
                            message: format!("type constructor {} expects {} arguments", name, n),
                        }),
                        None => Err(TermError::UnknownSymbol { name, offset: ctok.offset }),
                    },
                    _ => Err(TermError::Parse { offset: ctok.offset, message: "expected a type constructor".into() }),
                }
            }
            _ => Err(TermError::Parse { offset: tok.offset, message: "expected a type".into() }),
        }
    }
}
