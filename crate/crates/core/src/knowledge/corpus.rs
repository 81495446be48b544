//! The corpus exchange format: one JSON record per line, in processing order.
//!
//! ```text
//! {"kind":"type","name":"list","arity":1}
//! {"kind":"const","name":"NIL","type":"'a list"}
//! {"kind":"def","symbol":"I","type":"'a->'a","body":"\\x. x"}
//! {"kind":"thm","name":"I_THM","statement":"!x. I x = x","deps":[]}
//! ```

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::KnowledgeError;
use crate::learners::split_conjuncts;
use crate::term::{parse_expr, parse_term, parse_type, SymbolTable, Term, Type};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    Type {
        name: String,
        arity: usize,
    },
    Const {
        name: String,
        #[serde(rename = "type")]
        ty: String,
    },
    Def {
        symbol: String,
        #[serde(rename = "type")]
        ty: String,
        body: String,
    },
    Thm {
        name: String,
        statement: String,
        #[serde(default)]
        deps: Vec<String>,
    },
}

/// Where a record came from, for error messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Position {
    pub file: String,
    pub line: usize,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Clone, Debug)]
pub struct Definition {
    pub symbol: String,
    pub ty: Type,
    pub body: Term,
}

#[derive(Clone, Debug)]
pub struct Conjunct {
    pub label: String,
    pub statement: Term,
}

#[derive(Clone, Debug)]
pub struct Theorem {
    pub name: String,
    pub statement: Term,
    pub deps: Vec<String>,
    pub conjuncts: Vec<Conjunct>,
}

#[derive(Clone, Debug)]
pub enum Item {
    Primitive(String),
    Definition(Definition),
    Theorem(Theorem),
}

/// A parsed, typechecked corpus in chronological order.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub symbols: SymbolTable,
    pub items: Vec<Item>,
}

impl Corpus {
    pub fn theorems(&self) -> impl Iterator<Item = &Theorem> {
        self.items.iter().filter_map(|i| match i {
            Item::Theorem(t) => Some(t),
            _ => None,
        })
    }

    pub fn definitions(&self) -> impl Iterator<Item = &Definition> {
        self.items.iter().filter_map(|i| match i {
            Item::Definition(d) => Some(d),
            _ => None,
        })
    }
}

fn bad(pos: &Position, message: impl Into<String>) -> KnowledgeError {
    KnowledgeError::Corpus { position: pos.to_string(), message: message.into() }
}

/// Parse records from `(file name, text)` pairs, concatenated in order.
pub fn read_records(files: &[(String, String)]) -> Result<Vec<(Position, Record)>, KnowledgeError> {
    let mut out = Vec::new();
    for (file, text) in files {
        for (i, line) in text.lines().enumerate() {
            let pos = Position { file: file.clone(), line: i + 1 };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rec: Record = serde_json::from_str(line).map_err(|e| bad(&pos, e.to_string()))?;
            out.push((pos, rec));
        }
    }
    Ok(out)
}

/// Typecheck records against the prelude, extending the symbol table as
/// definitions appear. Dependencies must name earlier theorems.
pub fn check_records(records: &[(Position, Record)]) -> Result<Corpus, KnowledgeError> {
    let mut symbols = SymbolTable::prelude();
    let mut items = Vec::new();
    let mut theorems: HashMap<String, usize> = HashMap::new();
    let term_err = |pos: &Position, what: &str, e: crate::term::TermError| bad(pos, format!("{}: {}", what, e));
    for (pos, rec) in records {
        match rec {
            Record::Type { name, arity } => {
                if symbols.tycon_arity(name).is_some() {
                    return Err(bad(pos, format!("type {} declared twice", name)));
                }
                symbols.add_tycon(name, *arity);
            }
            Record::Const { name, ty } => {
                if symbols.is_const(name) {
                    return Err(bad(pos, format!("constant {} declared twice", name)));
                }
                let ty = parse_type(ty, &symbols).map_err(|e| term_err(pos, "type", e))?;
                symbols.add_const(name, ty);
                items.push(Item::Primitive(name.clone()));
            }
            Record::Def { symbol, ty, body } => {
                if symbols.is_const(symbol) {
                    return Err(bad(pos, format!("constant {} declared twice", symbol)));
                }
                let ty = parse_type(ty, &symbols).map_err(|e| term_err(pos, "type", e))?;
                let body = parse_expr(body, &symbols, Some(&ty)).map_err(|e| term_err(pos, "body", e))?;
                symbols.add_const(symbol, ty.clone());
                items.push(Item::Definition(Definition { symbol: symbol.clone(), ty, body }));
            }
            Record::Thm { name, statement, deps } => {
                if theorems.contains_key(name) {
                    return Err(bad(pos, format!("theorem {} given twice", name)));
                }
                for d in deps {
                    if !theorems.contains_key(d) {
                        return Err(bad(pos, format!("theorem {} depends on {}, which does not precede it", name, d)));
                    }
                }
                let statement = parse_term(statement, &symbols).map_err(|e| term_err(pos, "statement", e))?;
                let conjuncts = split_conjuncts(name, &statement)
                    .into_iter()
                    .map(|(label, statement)| Conjunct { label, statement })
                    .collect();
                theorems.insert(name.clone(), items.len());
                items.push(Item::Theorem(Theorem { name: name.clone(), statement, deps: deps.clone(), conjuncts }));
            }
        }
    }
    Ok(Corpus { symbols, items })
}

pub fn parse_corpus(files: &[(String, String)]) -> Result<Corpus, KnowledgeError> {
    check_records(&read_records(files)?)
}
