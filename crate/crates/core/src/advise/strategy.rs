use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AdviseError;
use crate::features::ExtractionMethod;
use crate::learners::LearnerKind;

pub const DEFAULT_LIMIT_S: f64 = 30.0;

/// Which proof-dependency data a learner is trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DepChannel {
    Hol,
    Atp,
    /// ATP dependencies where available, HOL ones otherwise.
    Combined,
}

impl DepChannel {
    pub const ALL: [DepChannel; 3] = [DepChannel::Hol, DepChannel::Atp, DepChannel::Combined];

    pub fn name(self) -> &'static str {
        match self {
            DepChannel::Hol => "hol",
            DepChannel::Atp => "atp",
            DepChannel::Combined => "combined",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    /// Neighbour count for k-NN; ignored for naive Bayes.
    pub k: usize,
}

impl LearnerSpec {
    pub const NAIVE_BAYES: LearnerSpec = LearnerSpec { kind: LearnerKind::NaiveBayes, k: 0 };

    pub fn knn(k: usize) -> LearnerSpec {
        LearnerSpec { kind: LearnerKind::Knn, k }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LearnerKind::NaiveBayes => f.write_str("nbayes"),
            LearnerKind::Knn => write!(f, "knn{}", self.k),
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = AdviseError;

    /// `nbayes`, `bayes`, `knn40`, `40-NN`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let l = s.trim().to_ascii_lowercase();
        if l == "nbayes" || l == "bayes" {
            return Ok(LearnerSpec::NAIVE_BAYES);
        }
        let k = l.strip_prefix("knn").or_else(|| l.strip_suffix("-nn")).and_then(|k| k.parse::<usize>().ok());
        match k {
            Some(k) if k > 0 => Ok(LearnerSpec::knn(k)),
            _ => Err(AdviseError::Config(format!("unknown learner {:?}", s))),
        }
    }
}

/// One portfolio entry: learner, dependency data, premise count, features, prover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyInstance {
    pub learner: LearnerSpec,
    pub deps: DepChannel,
    /// Free-form tag of the dependency data version, e.g. `2` or `1_V_pref`.
    pub variant: String,
    pub premises: usize,
    pub features: ExtractionMethod,
    pub prover: String,
    pub limit_s: f64,
}

impl StrategyInstance {
    pub fn new(
        learner: LearnerSpec,
        deps: DepChannel,
        premises: usize,
        features: ExtractionMethod,
        prover: &str,
    ) -> Self {
        StrategyInstance {
            learner,
            deps,
            variant: String::new(),
            premises,
            features,
            prover: prover.to_string(),
            limit_s: DEFAULT_LIMIT_S,
        }
    }

    /// Identifier used in transcripts, e.g. `nbayes-atp2-128-standard-E`.
    pub fn id(&self) -> String {
        format!(
            "{}-{}{}-{}-{}-{}",
            self.learner,
            self.deps.name(),
            self.variant,
            self.premises,
            self.features.name(),
            self.prover
        )
    }

    /// Parse `learner,depsource,N,features,prover[,limit]`.
    pub fn parse(line: &str) -> Result<StrategyInstance, AdviseError> {
        let bad = |m: String| AdviseError::Config(format!("{}: {:?}", m, line));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !(5..=6).contains(&fields.len()) {
            return Err(bad("expected 5 or 6 comma-separated fields".into()));
        }
        let learner = fields[0].parse()?;
        let (deps, variant) =
            parse_deps(fields[1]).ok_or_else(|| bad(format!("unknown dependency source {}", fields[1])))?;
        let premises: usize = fields[2].parse().map_err(|_| bad("bad premise count".into()))?;
        if premises == 0 {
            return Err(bad("premise count must be positive".into()));
        }
        let features = fields[3].parse().map_err(|_| bad(format!("unknown feature method {}", fields[3])))?;
        if fields[4].is_empty() {
            return Err(bad("missing prover".into()));
        }
        let limit_s = match fields.get(5) {
            Some(l) => l.parse::<f64>().ok().filter(|l| *l > 0.0).ok_or_else(|| bad("bad limit".into()))?,
            None => DEFAULT_LIMIT_S,
        };
        Ok(StrategyInstance { learner, deps, variant, premises, features, prover: fields[4].to_string(), limit_s })
    }
}

/// `hol`, `atp`, `combined`, or tagged forms such as `ATP2`, `ATP1_V_pref`, `HOL0+ATP0`.
fn parse_deps(s: &str) -> Option<(DepChannel, String)> {
    let l = s.to_ascii_lowercase();
    if l == "combined" {
        return Some((DepChannel::Combined, String::new()));
    }
    if let Some((h, a)) = s.split_once('+') {
        let hv = h.strip_prefix("HOL").or_else(|| h.strip_prefix("hol"))?;
        let av = a.strip_prefix("ATP").or_else(|| a.strip_prefix("atp"))?;
        let variant = if hv == av { hv.to_string() } else { format!("{}_{}", hv, av) };
        return Some((DepChannel::Combined, variant));
    }
    for (prefix, ch) in [("hol", DepChannel::Hol), ("atp", DepChannel::Atp)] {
        if l.starts_with(prefix) {
            return Some((ch, s[prefix.len()..].to_string()));
        }
    }
    None
}

/// Parse a strategy file: one instance per line, `#` comments and blank lines ignored.
pub fn parse_strategies(text: &str) -> Result<Vec<StrategyInstance>, AdviseError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(StrategyInstance::parse)
        .collect()
}

/// The 25 combinations of the original Flyspeck service, with provers named
/// `Vampire`, `Epar` and `Z3`.
pub const SAMPLE_PORTFOLIO: &str = "\
nbayes,ATP2,92,standard,Vampire
nbayes,ATP2,128,standard,Epar
nbayes,ATP2,154,standard,Epar
nbayes,ATP2,1024,standard,Epar
nbayes,HOL0+ATP0,512,all-vars-same,Epar
nbayes,HOL0+ATP0,128,all-vars-diff,Vampire
nbayes,ATP1,32,standard,Z3
nbayes,ATP1_V_pref,128,all-vars-diff,Epar
nbayes,ATP1_V_pref,128,standard,Z3
nbayes,HOL0+ATP0,32,standard,Z3
nbayes,HOL0+ATP0,154,all-vars-same,Epar
nbayes,HOL0+ATP0,128,standard,Epar
nbayes,HOL0+ATP0,128,standard,Vampire
nbayes,ATP1_E_pref,128,standard,Z3
nbayes,ATP0_V_pref,154,standard,Vampire
40-NN,ATP1,32,standard,Epar
160-NN,ATP1,512,standard,Z3
nbayes,HOL3+ATP3,92,standard,Vampire
nbayes,HOL3+ATP3,128,standard,Epar
nbayes,HOL3+ATP3,154,standard,Epar
nbayes,HOL3+ATP3,1024,standard,Epar
nbayes,ATP3,92,standard,Vampire
nbayes,ATP3,128,standard,Epar
nbayes,ATP3,154,standard,Epar
nbayes,ATP3,1024,standard,Epar
";

pub fn sample_portfolio() -> Vec<StrategyInstance> {
    parse_strategies(SAMPLE_PORTFOLIO).expect("sample portfolio parses")
}

/// Number of instances run per query by default.
pub const DEFAULT_PORTFOLIO_SIZE: usize = 7;

/// Greedy set cover: repeatedly pick the instance solving the most problems
/// not yet solved, up to `size` instances. Ties go to the earlier instance;
/// instances adding nothing are never picked.
pub fn greedy_cover(solved: &[BTreeSet<String>], size: usize) -> Vec<usize> {
    let mut covered: BTreeSet<&String> = BTreeSet::new();
    let mut chosen = Vec::new();
    while chosen.len() < size {
        let best = solved
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, s)| (i, s.iter().filter(|p| !covered.contains(p)).count()))
            .filter(|(_, gain)| *gain > 0)
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((i, _)) = best else {
            break;
        };
        covered.extend(solved[i].iter());
        chosen.push(i);
    }
    chosen
}

/// Portfolio used when no solved-problem record is available: the first
/// seven sample rows, retargeted at a generic prover name.
pub fn default_portfolio(prover: &str) -> Vec<StrategyInstance> {
    let mut out = Vec::new();
    for (learner, deps, n, features) in [
        (LearnerSpec::NAIVE_BAYES, DepChannel::Combined, 128, ExtractionMethod::Standard),
        (LearnerSpec::NAIVE_BAYES, DepChannel::Atp, 32, ExtractionMethod::Standard),
        (LearnerSpec::NAIVE_BAYES, DepChannel::Combined, 512, ExtractionMethod::AllVarsSame),
        (LearnerSpec::NAIVE_BAYES, DepChannel::Combined, 128, ExtractionMethod::AllVarsDiff),
        (LearnerSpec::NAIVE_BAYES, DepChannel::Hol, 92, ExtractionMethod::Standard),
        (LearnerSpec::knn(40), DepChannel::Atp, 32, ExtractionMethod::Standard),
        (LearnerSpec::knn(160), DepChannel::Combined, 512, ExtractionMethod::Standard),
    ] {
        out.push(StrategyInstance::new(learner, deps, n, features, prover));
    }
    out
}
