use serde::{Deserialize, Serialize};

pub const REPLAY_SUGGESTED: &str = "SUGGESTED";
pub const REPLAY_SUCCESS: &str = "SUCCESS";

/// One step of a query transcript. Every variant except `Progress` renders
/// as a `* ...` line and is recorded in the cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Progress,
    ReadOk,
    Theorem {
        time_s: f64,
        prover: String,
        hints: usize,
        strategy: String,
    },
    Minimizing {
        current: usize,
    },
    /// Parent theorem names of the minimized premises.
    Result {
        names: Vec<String>,
    },
    Replaying {
        time_s: f64,
        token: String,
        tactic: String,
    },
    Error {
        message: String,
    },
    NoProof,
}

impl Event {
    pub fn error(message: impl Into<String>) -> Event {
        let m: String = message.into();
        Event::Error { message: m.split_whitespace().collect::<Vec<_>>().join(" ") }
    }

    pub fn is_progress(&self) -> bool {
        matches!(self, Event::Progress)
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Event::Replaying { .. } | Event::Error { .. } | Event::NoProof)
    }

    /// The protocol line without its newline; `.` for progress.
    pub fn line(&self) -> String {
        match self {
            Event::Progress => ".".to_string(),
            Event::ReadOk => "* Read OK".to_string(),
            Event::Theorem { time_s, prover, hints, strategy } => {
                format!("* Theorem! Time: {:.2}s Prover: {} Hints: {} Str: {}", time_s, prover, hints, strategy)
            }
            Event::Minimizing { current } => format!("* Minimizing, current no: {}", current),
            Event::Result { names } => {
                let mut s = "* Result:".to_string();
                for n in names {
                    s.push(' ');
                    s.push_str(n);
                }
                s
            }
            Event::Replaying { time_s, token, tactic } => {
                format!("* Replaying: {} ({:.2}s): {}", token, time_s, tactic)
            }
            Event::Error { message } => format!("* Error: {}", message),
            Event::NoProof => "* NoProof".to_string(),
        }
    }

    /// Structured form with the rendered line, as served over HTTP.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("events serialize");
        v["line"] = serde_json::Value::String(self.line());
        v
    }
}

/// Render a transcript the way the TCP protocol sends it: progress dots
/// run inline in front of the next line.
pub fn render_transcript(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        match e {
            Event::Progress => out.push('.'),
            e => {
                out.push_str(&e.line());
                out.push('\n');
            }
        }
    }
    out
}

/// Whether `line` (without newline) belongs to the transcript grammar.
pub fn is_transcript_line(line: &str) -> bool {
    let body = line.trim_start_matches('.');
    let Some(rest) = body.strip_prefix("* ") else {
        return false;
    };
    let word = |s: &str| !s.is_empty() && !s.contains(char::is_whitespace);
    let seconds = |s: &str| {
        s.strip_suffix('s').and_then(|n| n.split_once('.')).is_some_and(|(a, b)| {
            !a.is_empty()
                && a.bytes().all(|c| c.is_ascii_digit())
                && b.len() == 2
                && b.bytes().all(|c| c.is_ascii_digit())
        })
    };
    if rest == "Read OK" || rest == "NoProof" {
        return true;
    }
    if let Some(m) = rest.strip_prefix("Error: ") {
        return !m.is_empty() && !m.contains(['\n', '\r']);
    }
    if let Some(m) = rest.strip_prefix("Loadavg: ") {
        return !m.is_empty() && !m.contains(['\n', '\r']);
    }
    if let Some(n) = rest.strip_prefix("Minimizing, current no: ") {
        return !n.is_empty() && n.bytes().all(|c| c.is_ascii_digit());
    }
    if let Some(names) = rest.strip_prefix("Result:") {
        return names.is_empty() || (names.starts_with(' ') && names[1..].split(' ').all(word));
    }
    if let Some(t) = rest.strip_prefix("Theorem! Time: ") {
        let f: Vec<&str> = t.split(' ').collect();
        return f.len() == 7
            && seconds(f[0])
            && f[1] == "Prover:"
            && word(f[2])
            && f[3] == "Hints:"
            && !f[4].is_empty()
            && f[4].bytes().all(|c| c.is_ascii_digit())
            && f[5] == "Str:"
            && word(f[6]);
    }
    if let Some(t) = rest.strip_prefix("Replaying: ") {
        let Some((token, rest)) = t.split_once(" (") else {
            return false;
        };
        let Some((time, tactic)) = rest.split_once("): ") else {
            return false;
        };
        return (token == REPLAY_SUGGESTED || token == REPLAY_SUCCESS) && seconds(time) && !tactic.is_empty();
    }
    false
}
