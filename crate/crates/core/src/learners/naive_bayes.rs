use std::collections::{BTreeMap, HashMap};

use super::{sorted_unique, NbParams, Ranking, TrainingExample};

/// Sparse naive Bayes counts.
///
/// `label_count[l]` is the number of examples in which `l` was used (T_l);
/// `cooc[l][f]` counts how many of those examples had feature `f` (t_{l,f}).
#[derive(Clone, Debug)]
pub struct NbModel {
    pub params: NbParams,
    pub(crate) label_count: BTreeMap<u32, u32>,
    pub(crate) cooc: BTreeMap<u32, BTreeMap<u32, u32>>,
    /// feature -> [(label, t_{l,f})], rebuilt from `cooc`
    index: HashMap<u32, HashMap<u32, u32>>,
}

impl PartialEq for NbModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.label_count == other.label_count && self.cooc == other.cooc
    }
}

impl NbModel {
    pub fn new(params: NbParams) -> NbModel {
        NbModel { params, label_count: BTreeMap::new(), cooc: BTreeMap::new(), index: HashMap::new() }
    }

    pub(crate) fn from_counts(
        params: NbParams,
        label_count: BTreeMap<u32, u32>,
        cooc: BTreeMap<u32, BTreeMap<u32, u32>>,
    ) -> NbModel {
        let mut m = NbModel { params, label_count, cooc, index: HashMap::new() };
        m.reindex();
        m
    }

    fn reindex(&mut self) {
        self.index.clear();
        for (&l, fs) in &self.cooc {
            for (&f, &t) in fs {
                self.index.entry(f).or_default().insert(l, t);
            }
        }
    }

    /// Count one example: its label (self-dependency) and each of its
    /// dependencies see the example's features once.
    pub fn add_example(&mut self, ex: &TrainingExample) {
        let features = sorted_unique(&ex.features);
        let mut users = sorted_unique(&ex.deps);
        if !users.contains(&ex.label) {
            users.push(ex.label);
        }
        for d in users {
            *self.label_count.entry(d).or_insert(0) += 1;
            if features.is_empty() {
                continue;
            }
            let row = self.cooc.entry(d).or_default();
            for &f in &features {
                *row.entry(f).or_insert(0) += 1;
                *self.index.entry(f).or_default().entry(d).or_insert(0) += 1;
            }
        }
    }

    pub fn label_count(&self, label: u32) -> u32 {
        self.label_count.get(&label).copied().unwrap_or(0)
    }

    pub fn cooccurrence(&self, label: u32, feature: u32) -> u32 {
        self.cooc.get(&label).and_then(|r| r.get(&feature)).copied().unwrap_or(0)
    }

    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.label_count.keys().copied()
    }

    pub fn rank(&self, query: &[u32]) -> Ranking {
        let q = sorted_unique(query);
        let p = self.params;
        let miss = p.w_miss * p.miss_penalty;
        // (sum of hit terms, number of hits) per label
        let mut hits: HashMap<u32, (f64, usize)> = HashMap::new();
        for f in &q {
            if let Some(posting) = self.index.get(f) {
                for (&l, &t) in posting {
                    let tl = self.label_count[&l] as f64;
                    let h = hits.entry(l).or_insert((0.0, 0));
                    h.0 += p.w_hit * (t as f64 / tl).ln();
                    h.1 += 1;
                }
            }
        }
        let scores = self
            .label_count
            .iter()
            .map(|(&l, &tl)| {
                let (h, n) = hits.get(&l).copied().unwrap_or((0.0, 0));
                let s = p.w_prior * (tl as f64).ln() + h + (q.len() - n) as f64 * miss;
                (l, s)
            })
            .collect();
        Ranking::from_scores(scores)
    }
}
