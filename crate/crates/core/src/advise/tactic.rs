use super::AdviseError;

/// `MESON_TAC[...]` over the parent theorems of `labels`, deduplicated in order.
pub fn emit_tactic<'a, F>(labels: &[String], parent: F) -> Result<String, AdviseError>
where
    F: Fn(&str) -> Option<&'a str>,
{
    let names = parent_names(labels, parent)?;
    Ok(format!("MESON_TAC[{}]", names.join(";")))
}

/// Parent theorem names of conjunct labels, deduplicated, order preserved.
pub fn parent_names<'a, F>(labels: &[String], parent: F) -> Result<Vec<String>, AdviseError>
where
    F: Fn(&str) -> Option<&'a str>,
{
    let mut out: Vec<String> = Vec::new();
    for l in labels {
        let p = parent(l).ok_or_else(|| AdviseError::UnknownLabel(l.clone()))?;
        if !out.iter().any(|x| x == p) {
            out.push(p.to_string());
        }
    }
    Ok(out)
}
