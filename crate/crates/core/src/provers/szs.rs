use std::collections::BTreeSet;

use super::ProofStatus;

/// The status word of the first `SZS status <S>` line, if any.
pub fn szs_status(output: &str) -> Option<&str> {
    output.lines().find_map(|line| {
        let rest = &line[line.find("SZS status")? + "SZS status".len()..];
        rest.split_whitespace().next()
    })
}

/// Classify an SZS status word.
pub fn classify(status: &str) -> ProofStatus {
    match status {
        "Theorem" | "Unsatisfiable" | "ContradictoryAxioms" | "Equivalent" | "Tautology" => ProofStatus::Proved,
        "CounterSatisfiable" | "Satisfiable" | "CounterTheorem" => ProofStatus::CounterSatisfiable,
        "Timeout" | "ResourceOut" | "MemoryOut" => ProofStatus::Timeout,
        "Error" | "OSError" | "InputError" | "SyntaxError" | "SemanticError" | "TypeError" => ProofStatus::Error,
        _ => ProofStatus::GaveUp,
    }
}

/// The proof object between `SZS output start` and `SZS output end`, if printed.
pub fn proof_block(output: &str) -> Option<&str> {
    let start = output.find("SZS output start")?;
    let body_start = start + output[start..].find('\n').map_or(output.len() - start, |i| i + 1);
    let end = output[body_start..].find("SZS output end").map_or(output.len(), |i| body_start + i);
    Some(&output[body_start..end])
}

/// Identifiers in `text` that belong to `known`, in order of first occurrence.
pub fn mentioned<'k>(text: &str, known: &'k BTreeSet<String>) -> Vec<&'k str> {
    let mut out: Vec<&'k str> = Vec::new();
    for word in text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
        if let Some(k) = known.get(word) {
            if !out.contains(&k.as_str()) {
                out.push(k);
            }
        }
    }
    out
}

/// Status and used axiom identifiers of a prover run. The proof object is
/// searched when present, otherwise the whole output.
pub fn parse_output<'k>(output: &str, axioms: &'k BTreeSet<String>) -> (ProofStatus, Vec<&'k str>) {
    let Some(word) = szs_status(output) else {
        return (ProofStatus::Error, Vec::new());
    };
    let status = classify(word);
    if status != ProofStatus::Proved {
        return (status, Vec::new());
    }
    let used = mentioned(proof_block(output).unwrap_or(output), axioms);
    (status, used)
}
