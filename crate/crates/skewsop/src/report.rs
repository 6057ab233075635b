use serde::Serialize;

/// One bounded-residual check: `pass` iff `residual < tolerance` (and finite),
/// or `residual > tolerance` for lower bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub invariant_id: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip)]
    pub lower_bound: bool,
}

impl InvariantReport {
    pub fn new(id: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        InvariantReport {
            invariant_id: id.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual < tolerance,
            lower_bound: false,
        }
    }

    /// A check that must exceed a threshold (negative controls).
    pub fn above(id: impl Into<String>, value: f64, threshold: f64) -> Self {
        InvariantReport {
            invariant_id: id.into(),
            residual: value,
            tolerance: threshold,
            pass: value.is_finite() && value > threshold,
            lower_bound: true,
        }
    }

    /// The same check against another bound.
    pub fn with_tolerance(&self, tolerance: f64) -> Self {
        if self.lower_bound {
            Self::above(self.invariant_id.clone(), self.residual, tolerance)
        } else {
            Self::new(self.invariant_id.clone(), self.residual, tolerance)
        }
    }
}

pub fn all_pass(reports: &[InvariantReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
