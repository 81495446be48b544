//! Content names: hashes of hashing-form prints after replacing defined
//! symbols by their own content names.

use std::collections::HashMap;

use md5::Md5;
use sha2::{Digest, Sha256};

use crate::term::{hashing_print, normalize_term_tyvars, Term};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HashAlgorithm {
    #[default]
    Md5,
    Sha256,
}

impl HashAlgorithm {
    pub fn digest(self, text: &str) -> String {
        match self {
            HashAlgorithm::Md5 => hex::encode(Md5::digest(text.as_bytes())),
            HashAlgorithm::Sha256 => hex::encode(Sha256::digest(text.as_bytes())),
        }
    }
}

/// Content names of defined symbols, filled in chronological order.
#[derive(Clone, Debug, Default)]
pub struct ContentNamer {
    pub algorithm: HashAlgorithm,
    symbols: HashMap<String, String>,
}

impl ContentNamer {
    pub fn new(algorithm: HashAlgorithm) -> ContentNamer {
        ContentNamer { algorithm, symbols: HashMap::new() }
    }

    /// Hashing-form print of `t` with defined symbols replaced.
    pub fn normalized(&self, t: &Term) -> String {
        hashing_print(&normalize_term_tyvars(t), &self.symbols)
    }

    pub fn name_of(&self, t: &Term) -> String {
        self.algorithm.digest(&self.normalized(t))
    }

    /// Name a definition body and remember it for later records.
    pub fn define(&mut self, symbol: &str, body: &Term) -> String {
        let name = self.name_of(body);
        self.symbols.insert(symbol.to_string(), name.clone());
        name
    }

    pub fn symbol(&self, symbol: &str) -> Option<&str> {
        self.symbols.get(symbol).map(String::as_str)
    }
}
