use std::fmt;

use serde::{Deserialize, Serialize};

use crate::index::TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Satisfied,
    Violated,
    Boundary,
}

/// Three-way comparison of `lhs` against `rhs` under [`TOL`]: `-1`, `0`
/// (tied within tolerance) or `1`. Infinite values compare exactly.
fn compare(lhs: f64, rhs: f64) -> i8 {
    if lhs.is_infinite() || rhs.is_infinite() {
        return if lhs == rhs {
            0
        } else if lhs < rhs {
            -1
        } else {
            1
        };
    }
    let scale = 1f64.max(lhs.abs()).max(rhs.abs());
    let d = lhs - rhs;
    if d.abs() <= TOL * scale {
        0
    } else if d < 0.0 {
        -1
    } else {
        1
    }
}

/// Status of `lhs <relation> rhs`; finite equality in a strict relation is
/// a boundary, not a violation. `∞ < ∞` is a plain violation.
pub fn status_of(relation: Relation, lhs: f64, rhs: f64) -> Status {
    let c = compare(lhs, rhs);
    let ok = match relation {
        Relation::Lt => c < 0,
        Relation::Le => c <= 0,
        Relation::Eq => c == 0,
        Relation::Gt => c > 0,
        Relation::Ge => c >= 0,
    };
    if ok {
        Status::Satisfied
    } else if relation.is_strict() && c == 0 && lhs.is_finite() {
        Status::Boundary
    } else {
        Status::Violated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub description: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub status: Status,
}

impl Constraint {
    pub fn new(id: &str, description: &str, lhs: f64, relation: Relation, rhs: f64) -> Self {
        Constraint {
            id: id.to_string(),
            description: description.to_string(),
            relation,
            lhs,
            rhs,
            status: status_of(relation, lhs, rhs),
        }
    }

    /// `lhs - rhs`, the signed slack of the constraint.
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Pass,
    Fail,
    Boundary,
}

impl Overall {
    pub fn as_char(self) -> char {
        match self {
            Overall::Pass => 'P',
            Overall::Fail => 'F',
            Overall::Boundary => 'B',
        }
    }
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Overall::Pass => "pass",
            Overall::Fail => "fail",
            Overall::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem_id: String,
    pub overall: Overall,
    pub constraints: Vec<Constraint>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn from_constraints(theorem_id: &str, constraints: Vec<Constraint>, notes: Vec<String>) -> Self {
        let overall = if constraints.iter().any(|c| c.status == Status::Violated) {
            Overall::Fail
        } else if constraints.iter().any(|c| c.status == Status::Boundary) {
            Overall::Boundary
        } else {
            Overall::Pass
        };
        Verdict {
            theorem_id: theorem_id.to_string(),
            overall,
            constraints,
            notes,
        }
    }

    pub fn constraint(&self, id: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    pub fn violated(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| c.status == Status::Violated)
    }
}

/// Accumulates constraints in definition order.
#[derive(Default)]
pub(crate) struct Builder {
    constraints: Vec<Constraint>,
    notes: Vec<String>,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: &str, description: &str, lhs: f64, relation: Relation, rhs: f64) -> Status {
        let c = Constraint::new(id, description, lhs, relation, rhs);
        let s = c.status;
        self.constraints.push(c);
        s
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish(self, theorem_id: &str) -> Verdict {
        Verdict::from_constraints(theorem_id, self.constraints, self.notes)
    }
}
