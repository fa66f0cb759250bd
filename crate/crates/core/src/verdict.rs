use crate::factor::FactorParams;

/// The violated inequality behind a negative membership verdict: flipping
/// the sign of `edge` produces a matrix with negative determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub edge: (usize, usize),
    pub det_sigma: f64,
    pub det_flipped: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVerdict {
    pub member: bool,
    /// Slack within the tolerance band; such matrices count as members.
    pub boundary: bool,
    pub slack: f64,
    pub certificate: Option<FactorParams>,
    pub violation: Option<Violation>,
}

impl MembershipVerdict {
    pub fn member(slack: f64, boundary: bool, certificate: Option<FactorParams>) -> Self {
        MembershipVerdict {
            member: true,
            boundary,
            slack,
            certificate,
            violation: None,
        }
    }

    pub fn non_member(slack: f64, violation: Option<Violation>) -> Self {
        MembershipVerdict {
            member: false,
            boundary: false,
            slack,
            certificate: None,
            violation,
        }
    }
}
