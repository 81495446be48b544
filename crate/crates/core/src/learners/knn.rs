use std::collections::{BTreeMap, HashMap};

use super::{sorted_unique, KnnParams, Ranking, TrainingExample};

/// k-nearest neighbours over idf-weighted feature overlap.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnModel {
    pub params: KnnParams,
    pub(crate) examples: Vec<TrainingExample>,
    /// Number of examples containing each feature.
    pub(crate) df: BTreeMap<u32, u32>,
    index: HashMap<u32, Vec<usize>>,
}

impl KnnModel {
    pub fn new(params: KnnParams) -> KnnModel {
        KnnModel { params, examples: Vec::new(), df: BTreeMap::new(), index: HashMap::new() }
    }

    pub fn add_example(&mut self, ex: &TrainingExample) {
        let features = sorted_unique(&ex.features);
        let mut deps = sorted_unique(&ex.deps);
        deps.retain(|&d| d != ex.label);
        let i = self.examples.len();
        for &f in &features {
            *self.df.entry(f).or_insert(0) += 1;
            self.index.entry(f).or_default().push(i);
        }
        self.examples.push(TrainingExample { label: ex.label, features, deps });
    }

    pub fn examples(&self) -> &[TrainingExample] {
        &self.examples
    }

    pub fn idf(&self, feature: u32) -> f64 {
        match self.df.get(&feature) {
            Some(&n) if n > 0 => (self.examples.len() as f64 / n as f64).ln(),
            _ => 0.0,
        }
    }

    /// Similarity of the query to every example that shares a feature with it.
    fn similarities(&self, q: &[u32]) -> Vec<f64> {
        let mut sims = vec![0.0; self.examples.len()];
        for &f in q {
            if let Some(posting) = self.index.get(&f) {
                let w = self.idf(f).powi(2);
                for &i in posting {
                    sims[i] += w;
                }
            }
        }
        sims
    }

    pub fn rank(&self, query: &[u32]) -> Ranking {
        let q = sorted_unique(query);
        let sims = self.similarities(&q);
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
        order.truncate(self.params.k.max(1));

        let mut scores: BTreeMap<u32, f64> = BTreeMap::new();
        for ex in &self.examples {
            scores.entry(ex.label).or_insert(0.0);
            for &d in &ex.deps {
                scores.entry(d).or_insert(0.0);
            }
        }
        let s1 = order.first().map(|&i| sims[i]).unwrap_or(0.0);
        let sk = order.last().map(|&i| sims[i]).unwrap_or(0.0);
        for &i in &order {
            let w = if self.params.dudani {
                if s1 > sk {
                    (sims[i] - sk) / (s1 - sk)
                } else {
                    1.0
                }
            } else {
                sims[i]
            };
            let ex = &self.examples[i];
            *scores.get_mut(&ex.label).expect("label registered") += w * self.params.self_weight;
            for d in &ex.deps {
                *scores.get_mut(d).expect("dep registered") += w;
            }
        }
        Ranking::from_scores(scores.into_iter().collect())
    }
}
