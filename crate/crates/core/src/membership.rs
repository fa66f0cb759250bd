//! Exact membership in `im φ_Δ` where an exact test is known: `Δ` the clique
//! complex of a chordal graph, or `Δ` the edge complex of a chordless cycle.

use std::sync::Arc;

use crate::chordal::{chordal_fiber, is_chordal, is_surjective, PATTERN_TOL};
use crate::complex::SimplicialComplex;
use crate::cycle::{cycle_edge_complex, cycle_fiber, cycle_membership, flip_determinants, CycleMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::Structure;
use crate::linalg::is_psd;
use crate::matrix::SymmetricMatrix;
use crate::param::phi;
use crate::verdict::{MembershipVerdict, Violation};

/// Certificates must reproduce `Σ` to this relative accuracy.
pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Chordal,
    Cycle,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Chordal => "chordal",
            Route::Cycle => "cycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipOutcome {
    pub route: Route,
    /// False when `Σ` failed the semidefiniteness check.
    pub psd: bool,
    pub verdict: MembershipVerdict,
    /// Determinants after flipping each cycle edge, for the cycle route.
    pub flip_determinants: Vec<((usize, usize), f64)>,
}

/// Chooses the exact test for `structure`, or fails with
/// [`Error::Undecidable`].
pub fn route_for(structure: &Structure) -> Result<(Route, Graph)> {
    match structure {
        Structure::Graph(g) => {
            if is_chordal(g).is_chordal() {
                Ok((Route::Chordal, g.clone()))
            } else if g.cycle_order().is_some() {
                Ok((Route::Cycle, g.clone()))
            } else {
                Err(Error::Undecidable("graph is neither chordal nor a chordless cycle".into()))
            }
        }
        Structure::Complex(delta) => {
            let g = delta.underlying_graph();
            if is_surjective(delta) {
                Ok((Route::Chordal, g))
            } else if g.cycle_order().is_some() && *delta == SimplicialComplex::edge_complex(&g)? {
                Ok((Route::Cycle, g))
            } else {
                Err(Error::Undecidable(
                    "complex is neither the clique complex of a chordal graph nor the edge complex of a cycle".into(),
                ))
            }
        }
    }
}

/// Decides `Σ ∈ im φ_Δ`. A non-PSD `Σ` is reported as a non-member.
pub fn decide_membership(sigma: &SymmetricMatrix, structure: &Structure, tol: f64) -> Result<MembershipOutcome> {
    let (route, g) = route_for(structure)?;
    if sigma.dim() != g.vertex_count() {
        return Err(Error::InvalidInput(format!(
            "matrix has dimension {}, structure has {} vertices",
            sigma.dim(),
            g.vertex_count()
        )));
    }
    match route {
        Route::Chordal => chordal_route(sigma, &g, tol),
        Route::Cycle => cycle_route(sigma, &g, tol),
    }
}

fn check_certificate(sigma: &SymmetricMatrix, cert: &crate::factor::FactorParams) -> Result<()> {
    let err = phi(cert).max_rel_diff(sigma);
    if err > CERTIFICATE_TOL {
        return Err(Error::Inconsistent(format!("certificate reproduces Σ only to {err:e}")));
    }
    Ok(())
}

fn chordal_route(sigma: &SymmetricMatrix, g: &Graph, tol: f64) -> Result<MembershipOutcome> {
    let mut psd = true;
    let verdict = match chordal_fiber(g, sigma, tol) {
        Ok((_, params)) => {
            check_certificate(sigma, &params)?;
            let r = is_psd(sigma, tol)?;
            MembershipVerdict::member(r.min_eigenvalue, r.min_eigenvalue.abs() <= r.tolerance_used, Some(params))
        }
        Err(Error::NotPsd { min_eigenvalue }) => {
            psd = false;
            MembershipVerdict::non_member(min_eigenvalue, None)
        }
        Err(e) => return Err(e),
    };
    Ok(MembershipOutcome {
        route: Route::Chordal,
        psd,
        verdict,
        flip_determinants: Vec::new(),
    })
}

fn cycle_route(sigma: &SymmetricMatrix, g: &Graph, tol: f64) -> Result<MembershipOutcome> {
    let order = g.cycle_order().expect("routed as a cycle");
    sigma.check_finite()?;
    if let Some((i, j, value)) = sigma.pattern_violation(g, PATTERN_TOL) {
        return Err(Error::PatternViolation { i, j, value });
    }
    let s = CycleMatrix::from_symmetric(&sigma.project_pattern(g).permuted(&order))?;
    let back = |(a, b): (usize, usize)| (order[a], order[b]);
    let flips = flip_determinants(&s).into_iter().map(|(e, d)| (back(e), d)).collect();

    let mut psd = true;
    let verdict = match cycle_membership(&s, tol) {
        Ok(mut v) => {
            if let Some(viol) = v.violation.take() {
                v.violation = Some(Violation {
                    edge: back(viol.edge),
                    ..viol
                });
            }
            if v.member {
                v.certificate = cycle_certificate(&s, g, &order, tol)?;
                if let Some(c) = &v.certificate {
                    check_certificate(sigma, c)?;
                }
            }
            v
        }
        Err(Error::NotPsd { min_eigenvalue }) => {
            psd = false;
            MembershipVerdict::non_member(min_eigenvalue, None)
        }
        Err(e) => return Err(e),
    };
    Ok(MembershipOutcome {
        route: Route::Cycle,
        psd,
        verdict,
        flip_determinants: flips,
    })
}

/// A fiber point mapped back to the original labels, when `Σ` is positive
/// definite.
fn cycle_certificate(
    s: &CycleMatrix,
    g: &Graph,
    order: &[usize],
    tol: f64,
) -> Result<Option<crate::factor::FactorParams>> {
    let fiber = match cycle_fiber(s, tol) {
        Ok(f) => f,
        Err(Error::Degenerate) => return Ok(None),
        Err(e) => return Err(e),
    };
    let Some(rep) = fiber.representatives.first() else {
        return Ok(None);
    };
    debug_assert_eq!(**rep.complex(), *cycle_edge_complex(order.len())?);
    let mut inverse = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        inverse[v] = k;
    }
    let target = Arc::new(SimplicialComplex::edge_complex(g)?);
    Ok(Some(rep.relabel(target, &inverse)?))
}
