use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UB_ID: &str = "UB";

/// One (scenario, planner) outcome as written to the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub planner: String,
    pub utility: Option<f64>,
    pub obs_used: Option<u32>,
    pub ub_utility: f64,
    pub wall_ms: f64,
    /// Why the planner did not run, for skipped pairs.
    pub note: String,
}

impl ResultRow {
    pub fn skipped(&self) -> bool {
        self.utility.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub planner: String,
    pub scenarios: usize,
    pub total_utility: f64,
    pub total_ub: f64,
    pub percent_ub: f64,
}

/// Per planner: total utility and its share of the total upper bound, over
/// the scenarios the planner ran on. Planners keep their first-seen order and
/// an upper-bound row closes the table. Every planner must cover the same
/// scenarios; skipped rows are left out before that check.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<AggregateRow>> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_planner: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    let mut ub: BTreeMap<&str, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.skipped()) {
        if !by_planner.contains_key(r.planner.as_str()) {
            order.push(&r.planner);
        }
        by_planner.entry(&r.planner).or_default().push(r);
        match ub.insert(&r.scenario_id, r.ub_utility) {
            Some(prev) if prev != r.ub_utility => {
                return Err(Error::Aggregation(format!(
                    "scenario {} has conflicting upper bounds",
                    r.scenario_id
                )))
            }
            _ => {}
        }
    }
    let all: BTreeSet<&str> = ub.keys().copied().collect();
    let total_ub: f64 = ub.values().sum();
    let mut out = Vec::with_capacity(order.len() + 1);
    for planner in order {
        let rs = &by_planner[planner];
        let seen: BTreeSet<&str> = rs.iter().map(|r| r.scenario_id.as_str()).collect();
        if seen != all || seen.len() != rs.len() {
            return Err(Error::Aggregation(format!(
                "planner {planner} covers {} of {} scenarios ({} rows)",
                seen.len(),
                all.len(),
                rs.len()
            )));
        }
        let total: f64 = rs.iter().filter_map(|r| r.utility).sum();
        out.push(AggregateRow {
            planner: planner.to_string(),
            scenarios: rs.len(),
            total_utility: total,
            total_ub,
            percent_ub: percent(total, total_ub),
        });
    }
    if !all.is_empty() {
        out.push(AggregateRow {
            planner: UB_ID.to_string(),
            scenarios: all.len(),
            total_utility: total_ub,
            total_ub,
            percent_ub: 100.0,
        });
    }
    Ok(out)
}

fn percent(x: f64, of: f64) -> f64 {
    if of > 0.0 {
        100.0 * x / of
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: &str, p: &str, u: f64, ub: f64) -> ResultRow {
        ResultRow {
            scenario_id: s.into(),
            planner: p.into(),
            utility: Some(u),
            obs_used: Some(1),
            ub_utility: ub,
            wall_ms: 0.0,
            note: String::new(),
        }
    }

    #[test]
    fn percent_of_total_bound() {
        let rows = vec![
            row("a", "G", 50.0, 100.0),
            row("a", "NO", 20.0, 100.0),
            row("b", "G", 150.0, 300.0),
            row("b", "NO", 100.0, 300.0),
        ];
        let t = aggregate(&rows).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[0].planner, "G");
        assert_eq!(t[0].percent_ub, 50.0);
        assert_eq!(t[1].percent_ub, 30.0);
        assert_eq!(t[2].planner, UB_ID);
        assert_eq!(t[2].percent_ub, 100.0);
    }

    #[test]
    fn ub_surrogate_is_full_score() {
        let rows = vec![row("a", "X", 7.0, 7.0), row("b", "X", 3.0, 3.0)];
        assert_eq!(aggregate(&rows).unwrap()[0].percent_ub, 100.0);
    }

    #[test]
    fn mismatched_sets_rejected() {
        let rows = vec![row("a", "G", 1.0, 2.0), row("b", "NO", 1.0, 2.0)];
        assert!(matches!(aggregate(&rows), Err(Error::Aggregation(_))));
        let dup = vec![row("a", "G", 1.0, 2.0), row("a", "G", 1.0, 2.0)];
        assert!(aggregate(&dup).is_err());
    }

    #[test]
    fn skipped_rows_ignored() {
        let mut skip = row("a", "P", 0.0, 2.0);
        skip.utility = None;
        let rows = vec![row("a", "G", 1.0, 2.0), skip];
        let t = aggregate(&rows).unwrap();
        assert_eq!(t.len(), 2);
    }
}
