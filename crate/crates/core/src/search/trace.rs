use serde::{Deserialize, Serialize};

use crate::conic::SolveStatus;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub edges: Vec<String>,
    pub status: SolveStatus,
    pub objective: Option<f64>,
}

/// One line of the search trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Step {
        iteration: usize,
        depth: usize,
        vertex: String,
        candidates: Vec<CandidateTrace>,
        chosen: Option<Vec<String>>,
    },
    Backtrack {
        iteration: usize,
        from_depth: usize,
        to_depth: usize,
        /// Candidate whose first step is taken instead.
        edges: Vec<String>,
    },
    Done {
        cost: f64,
        #[serde(rename = "K")]
        k: usize,
    },
    Failed {
        reason: String,
    },
}

impl TraceEvent {
    /// The trace as JSON lines.
    pub fn to_json_lines(events: &[TraceEvent]) -> String {
        let mut s = String::new();
        for e in events {
            s.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            s.push('\n');
        }
        s
    }
}
