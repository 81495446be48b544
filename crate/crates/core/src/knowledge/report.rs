use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::project::Project;

/// Reuse of conjuncts and ATP proofs between a project and an earlier version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReuseReport {
    pub project: String,
    pub previous: String,
    /// Distinct conjunct content names in the project.
    pub unique: usize,
    pub previous_unique: usize,
    /// Project conjuncts that also occur in the previous version.
    pub in_previous: usize,
    /// Project conjuncts with at least one ATP proof.
    pub atp_proved: usize,
    /// Distinct ATP proofs in the project.
    pub atp_proofs: usize,
    /// Proofs of the previous version that are valid in the project.
    pub reusable: usize,
}

fn pct(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| 100.0 * n as f64 / d as f64)
}

impl ReuseReport {
    /// Share of the previous version's conjuncts still present.
    pub fn in_previous_pct(&self) -> Option<f64> {
        pct(self.in_previous, self.previous_unique)
    }

    pub fn atp_proved_pct(&self) -> Option<f64> {
        pct(self.atp_proved, self.unique)
    }

    /// Reusable proofs relative to the project's own ATP proofs.
    pub fn reusable_pct(&self) -> Option<f64> {
        pct(self.reusable, self.atp_proofs)
    }

    pub fn header() -> &'static str {
        "Project\tUnique thms\tIn previous (%)\tATP-proved (%)\tATP proofs\tReusable proofs (%)"
    }

    pub fn row(&self) -> String {
        let show = |n: usize, p: Option<f64>| match p {
            Some(p) => format!("{} ({:.0}%)", n, p),
            None => format!("{} (N/A)", n),
        };
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.project,
            self.unique,
            show(self.in_previous, self.in_previous_pct()),
            show(self.atp_proved, self.atp_proved_pct()),
            self.atp_proofs,
            show(self.reusable, self.reusable_pct())
        )
    }
}

/// First and last chronological position of every conjunct content name.
fn positions(p: &Project) -> HashMap<&str, (usize, usize)> {
    let mut m: HashMap<&str, (usize, usize)> = HashMap::new();
    for (i, l) in p.labels.iter().enumerate() {
        m.entry(l.content.as_str()).and_modify(|e| e.1 = i).or_insert((i, i));
    }
    m
}

pub fn reuse_report(project: &Project, previous: &Project) -> ReuseReport {
    let here = positions(project);
    let before = positions(previous);
    let ours: BTreeMap<String, Vec<BTreeSet<String>>> = project.content_proofs();
    let theirs = previous.content_proofs();
    let reusable = theirs
        .iter()
        .filter_map(|(c, ps)| here.get(c.as_str()).map(|(_, last)| (*last, ps)))
        .map(|(pos, ps)| {
            ps.iter().filter(|p| p.iter().all(|d| here.get(d.as_str()).is_some_and(|q| q.0 < pos))).count()
        })
        .sum();
    ReuseReport {
        project: project.name.clone(),
        previous: previous.name.clone(),
        unique: here.len(),
        previous_unique: before.len(),
        in_previous: here.keys().filter(|c| before.contains_key(*c)).count(),
        atp_proved: ours.values().filter(|ps| !ps.is_empty()).count(),
        atp_proofs: ours.values().map(Vec::len).sum(),
        reusable,
    }
}

/// Groups of defined symbols with the same content name, in definition order.
pub fn duplicate_definitions(project: &Project) -> Vec<Vec<String>> {
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for (symbol, content) in &project.definition_content {
        match groups.iter_mut().find(|(c, _)| c == content) {
            Some((_, g)) => g.push(symbol.clone()),
            None => groups.push((content.clone(), vec![symbol.clone()])),
        }
    }
    groups.into_iter().map(|(_, g)| g).filter(|g| g.len() > 1).collect()
}
