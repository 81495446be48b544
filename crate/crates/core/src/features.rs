//! Feature extraction and stable string/serial interning.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::term::{normalize_term_tyvars, print_term, PrintOptions, SymbolTable, Term, TermKind, VarMode};

/// How variables are rendered in subterm features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMethod {
    Standard,
    AllVarsSame,
    AllVarsDiff,
}

impl ExtractionMethod {
    pub const ALL: [ExtractionMethod; 3] =
        [ExtractionMethod::Standard, ExtractionMethod::AllVarsSame, ExtractionMethod::AllVarsDiff];

    pub fn name(self) -> &'static str {
        match self {
            ExtractionMethod::Standard => "standard",
            ExtractionMethod::AllVarsSame => "all-vars-same",
            ExtractionMethod::AllVarsDiff => "all-vars-diff",
        }
    }

    fn var_mode(self) -> VarMode {
        match self {
            ExtractionMethod::Standard => VarMode::Typed,
            ExtractionMethod::AllVarsSame => VarMode::Same,
            ExtractionMethod::AllVarsDiff => VarMode::Diff,
        }
    }
}

impl fmt::Display for ExtractionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtractionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "standard" => Ok(ExtractionMethod::Standard),
            "all-vars-same" | "same" => Ok(ExtractionMethod::AllVarsSame),
            "all-vars-diff" | "diff" => Ok(ExtractionMethod::AllVarsDiff),
            other => Err(format!("unknown feature method {:?}", other)),
        }
    }
}

pub type FeatureSet = BTreeSet<String>;

/// Quantifiers and connectives carry no information about the subject matter.
const LOGICAL: [&str; 7] = ["!", "?", "?!", "/\\", "\\/", "==>", "~"];

/// Features of a formula: its constant names (minus the logical skeleton),
/// the type constructors of its subterms, and the printed forms of its
/// variables and non-function applications whose head is not logical.
pub fn extract_features(t: &Term, method: ExtractionMethod, symbols: &SymbolTable) -> FeatureSet {
    let mut out = FeatureSet::new();
    let opts = PrintOptions { mode: method.var_mode(), annotate: false };
    for s in t.subterms() {
        let mut cons = Vec::new();
        s.ty().constructors(&mut cons);
        out.extend(cons.iter().map(|c| c.to_string()));
        let printable = match s.kind() {
            TermKind::Const { name, .. } => {
                if !LOGICAL.contains(&&**name) {
                    out.insert(name.to_string());
                }
                false
            }
            TermKind::Var { .. } => true,
            TermKind::App { .. } => {
                let head = s.strip_comb().0;
                !s.ty().is_fun() && !head.const_name().is_some_and(|n| n == "=" || LOGICAL.contains(&n))
            }
            TermKind::Abs { .. } => false,
        };
        if printable {
            let p = print_term(&normalize_term_tyvars(&s), opts, symbols);
            let p = p.trim();
            if !p.is_empty() {
                out.insert(p.to_string());
            }
        }
    }
    out
}

/// Append-only bijection between strings and serial numbers starting at 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureTable {
    strings: Vec<String>,
    index: HashMap<String, u32>,
}

impl FeatureTable {
    pub fn new() -> FeatureTable {
        FeatureTable::default()
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn serial(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn string(&self, serial: u32) -> Option<&str> {
        self.strings.get(serial as usize).map(String::as_str)
    }

    pub fn strings(&self) -> &[String] {
        &self.strings
    }

    /// Serial of `s`, assigning the next free one if unseen.
    pub fn insert(&mut self, s: &str) -> u32 {
        if let Some(&n) = self.index.get(s) {
            return n;
        }
        let n = self.strings.len() as u32;
        self.strings.push(s.to_string());
        self.index.insert(s.to_string(), n);
        n
    }

    /// Training-time interning: unseen features get fresh serials.
    pub fn intern<'a>(&mut self, fs: impl IntoIterator<Item = &'a String>) -> Vec<u32> {
        let mut v: Vec<u32> = fs.into_iter().map(|s| self.insert(s)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Query-time lookup: unseen features are dropped.
    pub fn lookup<'a>(&self, fs: impl IntoIterator<Item = &'a String>) -> Vec<u32> {
        let mut v = Vec::new();
        for s in fs {
            match self.serial(s) {
                Some(n) => v.push(n),
                None => tracing::debug!(feature = %s, "dropping unseen feature"),
            }
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `serial<TAB>string` lines; tabs, newlines and backslashes are escaped.
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for (i, s) in self.strings.iter().enumerate() {
            writeln!(w, "{}\t{}", i, escape(s))?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> io::Result<FeatureTable> {
        let mut t = FeatureTable::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = || io::Error::new(io::ErrorKind::InvalidData, format!("bad table line {}", lineno + 1));
            let (num, s) = line.split_once('\t').ok_or_else(bad)?;
            let num: u32 = num.parse().map_err(|_| bad())?;
            if num as usize != t.len() {
                return Err(bad());
            }
            t.insert(&unescape(s));
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)
    }

    pub fn load(path: &Path) -> io::Result<FeatureTable> {
        FeatureTable::read_from(io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// One line per record: `label_serial: f1,f2,...` with sorted serials.
pub fn write_feature_lines(mut w: impl Write, records: &[(u32, Vec<u32>)]) -> io::Result<()> {
    for (label, fs) in records {
        let joined: Vec<String> = fs.iter().map(u32::to_string).collect();
        writeln!(w, "{}: {}", label, joined.join(","))?;
    }
    Ok(())
}

pub fn read_feature_lines(r: impl BufRead) -> io::Result<Vec<(u32, Vec<u32>)>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || io::Error::new(io::ErrorKind::InvalidData, format!("bad record on line {}", lineno + 1));
        let (label, rest) = line.split_once(':').ok_or_else(bad)?;
        let label = label.trim().parse().map_err(|_| bad())?;
        let fs = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| bad()))
            .collect::<Result<Vec<u32>, _>>()?;
        out.push((label, fs));
    }
    Ok(out)
}
