//! Chordless cycles: the exact membership test for the image of `φ` on the
//! edge complex of `C_m`, the family of PSD non-members, and the fiber
//! solver.
//!
//! Vertices are `0..m` and edge `i` joins `i` and `i+1 mod m`. On edge `i`
//! the parameter of its first vertex is `p_i` and that of its second is
//! `q_i`. With all singleton parameters zero, `φ(γ) = Σ` reads
//!
//! ```text
//! p_i q_i = σ_{i,i+1},    q_{i-1}² + p_i² = σ_ii.
//! ```

use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::complex::{SimplicialComplex, VertexSet};
use crate::error::{Error, Result};
use crate::factor::FactorParams;
use crate::graph::Graph;
use crate::linalg::{determinant, is_psd, sign_flip, tridiagonal_det};
use crate::matrix::SymmetricMatrix;
use crate::verdict::{MembershipVerdict, Violation};

/// Largest cycle accepted by [`CycleFiber::expand_signs`]; it enumerates
/// `4^m` sign patterns per representative.
pub const MAX_SIGN_EXPANSION: usize = 10;

/// Newton steps used to polish each quartic root against the closure
/// condition of the propagation.
const POLISH_STEPS: usize = 6;
const REFINE_STEPS: usize = 30;

/// A symmetric matrix supported on the diagonal and the edges of `C_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMatrix {
    diag: Vec<f64>,
    cyc: Vec<f64>,
}

impl CycleMatrix {
    /// `cyc[i]` is the entry on edge `{i, i+1 mod m}`.
    pub fn new(diag: Vec<f64>, cyc: Vec<f64>) -> Result<Self> {
        if diag.len() < 3 || diag.len() != cyc.len() {
            return Err(Error::InvalidInput(format!(
                "cycle matrix needs m >= 3 diagonal and m cycle entries, got {} and {}",
                diag.len(),
                cyc.len()
            )));
        }
        if let Some(i) = diag.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: i });
        }
        if let Some(i) = cyc.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i,
                col: (i + 1) % diag.len(),
            });
        }
        Ok(CycleMatrix { diag, cyc })
    }

    /// Reads a matrix whose entries off the cycle pattern vanish to within
    /// `1e-12` of its scale.
    pub fn from_symmetric(sigma: &SymmetricMatrix) -> Result<Self> {
        let m = sigma.dim();
        if m < 3 {
            return Err(Error::InvalidInput(format!("cycle matrix needs m >= 3, got {m}")));
        }
        sigma.check_finite()?;
        let g = Graph::cycle(m)?;
        if let Some((i, j, value)) = sigma.pattern_violation(&g, crate::chordal::PATTERN_TOL) {
            return Err(Error::PatternViolation { i, j, value });
        }
        Self::new(
            (0..m).map(|i| sigma.get(i, i)).collect(),
            (0..m).map(|i| sigma.get(i, (i + 1) % m)).collect(),
        )
    }

    pub fn to_symmetric(&self) -> SymmetricMatrix {
        let m = self.m();
        let mut s = SymmetricMatrix::from_diagonal(&self.diag);
        for i in 0..m {
            s.set(i, (i + 1) % m, self.cyc[i]);
        }
        s
    }

    pub fn m(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn cyc(&self) -> &[f64] {
        &self.cyc
    }

    pub fn max_abs(&self) -> f64 {
        self.diag.iter().chain(&self.cyc).fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Relabels so that new vertex `i` is old vertex `i + r mod m`.
    pub fn rotated(&self, r: usize) -> CycleMatrix {
        let m = self.m();
        CycleMatrix {
            diag: (0..m).map(|i| self.diag[(i + r) % m]).collect(),
            cyc: (0..m).map(|i| self.cyc[(i + r) % m]).collect(),
        }
    }

    /// The matrix with the entry on edge `k` negated.
    pub fn flipped(&self, k: usize) -> CycleMatrix {
        let mut out = self.clone();
        out.cyc[k] = -out.cyc[k];
        out
    }

    /// Determinant of the principal submatrix on the path
    /// `start, start+1, .., start+len-1` (no wrap-around).
    fn path_det(&self, start: usize, len: usize) -> f64 {
        if len == 0 {
            return 1.0;
        }
        tridiagonal_det(&self.diag[start..start + len], &self.cyc[start..start + len - 1])
    }

    fn cycle_product(&self) -> f64 {
        self.cyc.iter().product()
    }
}

/// The sum over all matchings `M` of `C_m` of
/// `(-1)^|M| Π_{ij∈M} σ_ij² Π_{i∉M} σ_ii`.
///
/// Matchings avoiding the closing edge `{m-1, 0}` are those of the path,
/// counted by its tridiagonal determinant; those using it leave a path on
/// `1..m-2`.
pub fn matching_sum(s: &CycleMatrix) -> f64 {
    let m = s.m();
    s.path_det(0, m) - s.cyc[m - 1] * s.cyc[m - 1] * s.path_det(1, m - 2)
}

/// `det Σ` via the matching expansion plus the term of the whole cycle.
pub fn determinant_expansion(s: &CycleMatrix) -> f64 {
    let m = s.m();
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    matching_sum(s) + sign * 2.0 * s.cycle_product()
}

/// Determinant of every single-edge sign flip, computed densely, keyed by
/// edge.
pub fn flip_determinants(s: &CycleMatrix) -> Vec<((usize, usize), f64)> {
    let m = s.m();
    (0..m)
        .map(|k| ((k, (k + 1) % m), determinant(&s.flipped(k).to_symmetric())))
        .collect()
}

/// Decides `Σ ∈ im φ` for the edge complex of `C_m`.
///
/// The operational test is `min(det Σ, det Σ^{(01)}) ≥ 0` with dense
/// determinants; the matching inequality is evaluated independently and
/// the two must agree. Both slacks are divided by `max|σ_ij|^m`, which
/// makes them invariant under positive scaling of `Σ`.
pub fn cycle_membership(s: &CycleMatrix, tol: f64) -> Result<MembershipVerdict> {
    let sigma = s.to_symmetric();
    let report = is_psd(&sigma, tol)?;
    if !report.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let m = s.m();
    let norm = s.max_abs();
    let unit = if norm == 0.0 { 1.0 } else { norm.powi(m as i32) };
    let abs_product: f64 = s.cyc.iter().map(|v| v.abs()).product();
    let matching_slack = (matching_sum(s) - 2.0 * abs_product) / unit;

    let det_sigma = determinant(&sigma);
    let det_flipped = determinant(&sign_flip(&sigma, 0, 1)?);
    let dense_slack = det_sigma.min(det_flipped) / unit;

    if (matching_slack > tol && dense_slack < -tol) || (matching_slack < -tol && dense_slack > tol) {
        return Err(Error::Inconsistent(format!(
            "matching slack {matching_slack:e} and determinant slack {dense_slack:e} disagree"
        )));
    }
    if dense_slack >= -tol {
        let boundary = dense_slack.abs() <= tol || matching_slack.abs() <= tol;
        return Ok(MembershipVerdict::member(matching_slack, boundary, None));
    }
    Ok(MembershipVerdict::non_member(
        matching_slack,
        Some(Violation {
            edge: (0, 1),
            det_sigma,
            det_flipped,
        }),
    ))
}

/// The three equivalent membership conditions for a PSD cycle matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipConditions {
    pub matching_inequality: bool,
    pub every_edge_flip_psd: bool,
    pub some_edge_flip_psd: bool,
    /// Some condition was decided within the tolerance band.
    pub boundary: bool,
}

impl FlipConditions {
    pub fn agree(&self) -> bool {
        self.matching_inequality == self.every_edge_flip_psd
            && self.every_edge_flip_psd == self.some_edge_flip_psd
    }
}

pub fn flip_conditions(s: &CycleMatrix, tol: f64) -> Result<FlipConditions> {
    let sigma = s.to_symmetric();
    let m = s.m();
    let norm = s.max_abs();
    let unit = if norm == 0.0 { 1.0 } else { norm.powi(m as i32) };
    let abs_product: f64 = s.cyc.iter().map(|v| v.abs()).product();
    let slack = (matching_sum(s) - 2.0 * abs_product) / unit;
    let mut boundary = slack.abs() <= tol;
    let mut flips = Vec::with_capacity(m);
    for k in 0..m {
        let r = is_psd(&sign_flip(&sigma, k, (k + 1) % m)?, tol)?;
        boundary |= r.min_eigenvalue.abs() <= r.tolerance_used;
        flips.push(r.is_psd);
    }
    Ok(FlipConditions {
        matching_inequality: slack >= -tol,
        every_edge_flip_psd: flips.iter().all(|&b| b),
        some_edge_flip_psd: flips.iter().any(|&b| b),
        boundary,
    })
}

/// `Σ(ρ)`: unit diagonal, `1/2` on every cycle edge except `σ_{0,m-1} = ρ/2`.
pub fn counterexample_sigma(m: usize, rho: f64) -> Result<CycleMatrix> {
    if m < 3 {
        return Err(Error::InvalidInput(format!("counterexample needs m >= 3, got {m}")));
    }
    let mut cyc = vec![0.5; m];
    cyc[m - 1] = 0.5 * rho;
    CycleMatrix::new(vec![1.0; m], cyc)
}

/// Closed form of `det Σ(ρ)`.
pub fn counterexample_det(m: usize, rho: f64) -> f64 {
    let mf = m as f64;
    let scale = 0.5f64.powi(m as i32);
    if m % 2 == 1 {
        scale * (mf + 1.0 - (mf - 1.0) * rho) * (1.0 + rho)
    } else {
        scale * (mf + 1.0 + (mf - 1.0) * rho) * (1.0 - rho)
    }
}

/// Open interval of `ρ` for which `Σ(ρ)` is PSD but not in the image.
pub fn counterexample_rho_range(m: usize) -> (f64, f64) {
    let w = 2.0 / (m as f64 - 1.0);
    if m % 2 == 1 {
        (1.0, 1.0 + w)
    } else {
        (-1.0 - w, -1.0)
    }
}

/// Coefficients `(a, b, c)` of `a t² + b t + c = 0` satisfied by
/// `t = p_0²`, the squared parameter of vertex 0 on edge `{0, 1}`.
///
/// All minors are tridiagonal: deleting vertex 0, vertices `{0, 1}`, or
/// vertex 1 leaves the paths `1..m-1`, `2..m-1`, and `2, .., m-1, 0`.
pub fn quartic_coefficients(s: &CycleMatrix) -> (f64, f64, f64) {
    let m = s.m();
    let s01 = s.cyc[0] * s.cyc[0];
    let a = -s.path_det(1, m - 1);
    // det Σ + (-1)^m 2 Π σ is the matching sum
    let b = matching_sum(s) + 2.0 * s01 * s.path_det(2, m - 2);
    let mut diag: Vec<f64> = s.diag[2..].to_vec();
    diag.push(s.diag[0]);
    let c = -s01 * tridiagonal_det(&diag, &s.cyc[2..]);
    (a, b, c)
}

/// The closure polynomial of the propagation `t ↦ σ_ii - s_{i-1}/t`
/// composed around the cycle, where `s_i` stands for `σ_{i,i+1}²`
/// (it may be any real number).
///
/// Each step is the linear fractional map `[[σ_ii, -s_{i-1}], [1, 0]]`;
/// if the composite is `[[A, B], [C, D]]` the fixed points solve
/// `C t² + (D - A) t - B = 0`, returned as `(C, D - A, -B)`.
pub fn closure_polynomial(diag: &[f64], cyc_sq: &[f64]) -> (f64, f64, f64) {
    let m = diag.len();
    assert_eq!(m, cyc_sq.len());
    let mut acc = [[1.0, 0.0], [0.0, 1.0]];
    for step in (1..m).chain(std::iter::once(0)) {
        let prev = (step + m - 1) % m;
        let f = [[diag[step], -cyc_sq[prev]], [1.0, 0.0]];
        acc = [
            [
                f[0][0] * acc[0][0] + f[0][1] * acc[1][0],
                f[0][0] * acc[0][1] + f[0][1] * acc[1][1],
            ],
            [
                f[1][0] * acc[0][0] + f[1][1] * acc[1][0],
                f[1][0] * acc[0][1] + f[1][1] * acc[1][1],
            ],
        ];
    }
    let [[a, b], [c, d]] = acc;
    (c, d - a, -b)
}

/// Both sides of the tridiagonal identity behind the discriminant formula:
/// with `P` the path `1..m-1`,
///
/// ```text
/// σ01² σ0m² det P(1..m-1) det P(2..m-2)
///     = σ01² σ0m² det P(2..m-1) det P(1..m-2) - Π σ_{i,i+1}².
/// ```
pub fn tridiagonal_identity_sides(s: &CycleMatrix) -> (f64, f64) {
    let m = s.m();
    let w = s.cyc[0] * s.cyc[0] * s.cyc[m - 1] * s.cyc[m - 1];
    let all: f64 = s.cyc.iter().map(|v| v * v).product();
    let lhs = w * s.path_det(1, m - 1) * s.path_det(2, m.saturating_sub(3));
    let rhs = w * s.path_det(2, m - 2) * s.path_det(1, m - 2) - all;
    (lhs, rhs)
}

/// Parameters on the edge complex of `C_m` with singleton parameters zero
/// and `φ(γ) = Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleFiber {
    pub sigma: CycleMatrix,
    /// Two solutions not related by per-edge sign changes.
    pub representatives: Vec<FactorParams>,
    /// Size of the full fiber, counting sign changes: `2^{m+1}`.
    pub count_total: usize,
}

impl CycleFiber {
    /// Every sign pattern of every representative that still solves the
    /// edge equations, without duplicates.
    pub fn expand_signs(&self, tol: f64) -> Result<Vec<FactorParams>> {
        let m = self.sigma.m();
        if m > MAX_SIGN_EXPANSION {
            return Err(Error::InvalidInput(format!(
                "sign expansion limited to m <= {MAX_SIGN_EXPANSION}, got {m}"
            )));
        }
        let limit = tol * self.sigma.max_abs().max(1.0);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for rep in &self.representatives {
            let (p, q) = edge_parameters(rep);
            for mask in 0u32..(1 << (2 * m)) {
                let sp: Vec<f64> = (0..m).map(|i| if mask >> (2 * i) & 1 == 1 { -p[i] } else { p[i] }).collect();
                let sq: Vec<f64> = (0..m).map(|i| if mask >> (2 * i + 1) & 1 == 1 { -q[i] } else { q[i] }).collect();
                if (0..m).any(|i| (sp[i] * sq[i] - self.sigma.cyc[i]).abs() > limit) {
                    continue;
                }
                let key: Vec<u64> = sp.iter().chain(&sq).map(|v| (v + 0.0).to_bits()).collect();
                if seen.insert(key) {
                    out.push(params_from_edges(rep.complex().clone(), &sp, &sq, 0));
                }
            }
        }
        Ok(out)
    }
}

/// `(p, q)` read from parameters on the edge complex of `C_m`.
pub fn edge_parameters(params: &FactorParams) -> (Vec<f64>, Vec<f64>) {
    let m = params.complex().ground_size();
    (0..m)
        .map(|i| {
            let j = (i + 1) % m;
            (params.edge(i, j), params.edge(j, i))
        })
        .unzip()
}

pub fn cycle_edge_complex(m: usize) -> Result<Arc<SimplicialComplex>> {
    Ok(Arc::new(SimplicialComplex::edge_complex(&Graph::cycle(m)?)?))
}

/// All points of the fiber with zero singleton parameters, up to sign.
///
/// With every cycle entry nonzero, `p_0²` is a root of the quadratic in
/// [`quartic_coefficients`]; each root is propagated around the cycle by
/// `p_i² = σ_ii - σ_{i-1,i}²/p_{i-1}²`. With a zero entry the system
/// splits into the branches `q = 0` and `p = 0` on that edge, each solved
/// by a single sweep.
pub fn cycle_fiber(s: &CycleMatrix, tol: f64) -> Result<CycleFiber> {
    let verdict = cycle_membership(s, tol)?;
    if !verdict.member {
        return Err(Error::NotMember { slack: verdict.slack });
    }
    let report = is_psd(&s.to_symmetric(), tol)?;
    if report.min_eigenvalue <= report.tolerance_used {
        return Err(Error::Degenerate);
    }
    let m = s.m();
    let complex = cycle_edge_complex(m)?;
    let solutions = match s.cyc.iter().position(|&v| v == 0.0) {
        Some(r) => solve_with_zero(&s.rotated(r), tol)?
            .into_iter()
            .map(|(p, q)| (p, q, r))
            .collect::<Vec<_>>(),
        None => {
            // start from the largest entry; other rotations only when a
            // propagation passes through a near-zero t_i and loses a root
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| s.cyc[b].abs().total_cmp(&s.cyc[a].abs()).then(a.cmp(&b)));
            let mut found: Vec<(Vec<f64>, Vec<f64>, usize)> = Vec::new();
            let mut wanted = 2;
            for r in order {
                let (solutions, distinct_roots) = solve_generic(&s.rotated(r), tol)?;
                if !distinct_roots {
                    wanted = 1;
                }
                for (p, q) in solutions {
                    let candidate = params_from_edges(complex.clone(), &p, &q, r);
                    let known = found
                        .iter()
                        .any(|(fp, fq, fr)| same_up_to_signs(&params_from_edges(complex.clone(), fp, fq, *fr), &candidate));
                    if !known {
                        found.push((p, q, r));
                    }
                }
                if found.len() >= wanted {
                    break;
                }
            }
            found
        }
    };
    if solutions.is_empty() {
        return Err(Error::Degenerate);
    }
    let representatives = solutions
        .into_iter()
        .map(|(p, q, r)| params_from_edges(complex.clone(), &p, &q, r))
        .collect();
    Ok(CycleFiber {
        sigma: s.clone(),
        representatives,
        count_total: 1 << (m + 1),
    })
}

type EdgeSolution = (Vec<f64>, Vec<f64>);

/// Solutions from the two roots of the quadratic in `t_0`, and whether the
/// roots are distinct.
fn solve_generic(s: &CycleMatrix, tol: f64) -> Result<(Vec<EdgeSolution>, bool)> {
    let scale = s.max_abs();
    let (a, b, c) = quartic_coefficients(s);
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc < -tol * (b * b + (4.0 * a * c).abs()) {
            return Err(Error::Inconsistent(format!("negative discriminant {disc:e}")));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let half = -0.5 * (b + if b >= 0.0 { root } else { -root });
    if a == 0.0 || half == 0.0 {
        return Err(Error::Degenerate);
    }
    let mut roots = vec![half / a, c / half];
    let distinct = (roots[0] - roots[1]).abs() > 1e-12 * scale;
    if !distinct {
        roots.truncate(1);
    }
    let mut out = Vec::new();
    for t0 in roots {
        let t = polish(s, t0).unwrap_or_else(|| propagate_clamped(s, t0));
        let p: Vec<f64> = t.iter().map(|v| v.sqrt()).collect();
        let q: Vec<f64> = (0..s.m()).map(|i| s.cyc[i] / p[i]).collect();
        let (p, q) = refine(s, p, q);
        let residual = edge_residuals(s, &p, &q).amax();
        if !(residual <= tol * scale.max(1.0)) {
            log::debug!("rejecting quartic root {t0:e} (edge residual {residual:e})");
            continue;
        }
        out.push((p, q));
    }
    Ok((out, distinct))
}

/// [`propagate`] with every `t_i` kept at least `ε σ_ii`, as a starting
/// point for [`refine`] when exact propagation breaks down.
fn propagate_clamped(s: &CycleMatrix, t0: f64) -> Vec<f64> {
    let m = s.m();
    let floor = |i: usize| f64::EPSILON * s.diag[i].max(f64::MIN_POSITIVE);
    let mut t = Vec::with_capacity(m);
    t.push(t0.max(floor(0)));
    for i in 1..m {
        let next = s.diag[i] - s.cyc[i - 1] * s.cyc[i - 1] / t[i - 1];
        t.push(next.max(floor(i)));
    }
    t
}

/// Equal `|γ|` entrywise to `1e-6` relative.
fn same_up_to_signs(a: &FactorParams, b: &FactorParams) -> bool {
    a.values()
        .iter()
        .zip(b.values())
        .all(|(x, y)| (x.abs() - y.abs()).abs() <= 1e-6 * y.abs().max(1.0))
}

/// `t_i = p_i²` propagated from `t_0`; `None` once a value is not positive.
fn propagate(s: &CycleMatrix, t0: f64) -> Option<Vec<f64>> {
    let m = s.m();
    let mut t = Vec::with_capacity(m);
    t.push(t0);
    for i in 1..m {
        let prev = t[i - 1];
        if prev <= 0.0 {
            return None;
        }
        t.push(s.diag[i] - s.cyc[i - 1] * s.cyc[i - 1] / prev);
    }
    Some(t)
}

/// Closure residual `σ_00 - σ_{m-1,0}²/t_{m-1} - t_0` and its derivative
/// in `t_0`.
fn closure(s: &CycleMatrix, t: &Option<Vec<f64>>) -> (f64, f64) {
    let Some(t) = t else {
        return (f64::INFINITY, 0.0);
    };
    let m = s.m();
    let last = t[m - 1];
    if last <= 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let mut dt = 1.0;
    for i in 1..m {
        dt *= s.cyc[i - 1] * s.cyc[i - 1] / (t[i - 1] * t[i - 1]);
    }
    let w = s.cyc[m - 1] * s.cyc[m - 1];
    (s.diag[0] - w / last - t[0], w / (last * last) * dt - 1.0)
}

fn polish(s: &CycleMatrix, mut t0: f64) -> Option<Vec<f64>> {
    let mut best = closure(s, &propagate(s, t0)).0.abs();
    for _ in 0..POLISH_STEPS {
        let (g, dg) = closure(s, &propagate(s, t0));
        if !g.is_finite() || dg == 0.0 || g == 0.0 {
            break;
        }
        let next = t0 - g / dg;
        let r = closure(s, &propagate(s, next)).0.abs();
        if !(r < best) {
            break;
        }
        best = r;
        t0 = next;
    }
    let t = propagate(s, t0)?;
    (t[s.m() - 1] > 0.0).then_some(t)
}

/// Residuals `p_i q_i - σ_{i,i+1}` followed by `p_i² + q_{i-1}² - σ_ii`.
fn edge_residuals(s: &CycleMatrix, p: &[f64], q: &[f64]) -> DVector<f64> {
    let m = s.m();
    DVector::from_fn(2 * m, |k, _| {
        if k < m {
            p[k] * q[k] - s.cyc[k]
        } else {
            let i = k - m;
            p[i] * p[i] + q[(i + m - 1) % m] * q[(i + m - 1) % m] - s.diag[i]
        }
    })
}

/// Newton steps on the full edge system, kept while the residual shrinks.
/// Propagating `t_0` around the cycle can amplify its rounding error by
/// the product of the `σ_{i,i+1}²/t_i²`.
fn refine(s: &CycleMatrix, mut p: Vec<f64>, mut q: Vec<f64>) -> EdgeSolution {
    let m = s.m();
    let mut r = edge_residuals(s, &p, &q);
    for _ in 0..REFINE_STEPS {
        let norm = r.amax();
        if norm == 0.0 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for i in 0..m {
            jac[(i, i)] = q[i];
            jac[(i, m + i)] = p[i];
            jac[(m + i, i)] = 2.0 * p[i];
            let prev = (i + m - 1) % m;
            jac[(m + i, m + prev)] = 2.0 * q[prev];
        }
        let Some(step) = jac.lu().solve(&r) else { break };
        let np: Vec<f64> = (0..m).map(|i| p[i] - step[i]).collect();
        let nq: Vec<f64> = (0..m).map(|i| q[i] - step[m + i]).collect();
        let nr = edge_residuals(s, &np, &nq);
        if !(nr.amax() < norm) {
            break;
        }
        (p, q, r) = (np, nq, nr);
    }
    (p, q)
}

/// Both branches for `σ_01 = 0`: `q_0 = 0` solved forward from vertex 1,
/// `p_0 = 0` solved backward from vertex 0.
fn solve_with_zero(s: &CycleMatrix, tol: f64) -> Result<Vec<EdgeSolution>> {
    let m = s.m();
    let floor = tol * s.max_abs().max(1.0);
    let root = |v: f64| -> Result<f64> {
        if v <= floor {
            return Err(Error::Degenerate);
        }
        Ok(v.sqrt())
    };

    let mut p = vec![0.0; m];
    let mut q = vec![0.0; m];
    for i in 1..m {
        p[i] = root(s.diag[i] - q[i - 1] * q[i - 1])?;
        q[i] = s.cyc[i] / p[i];
    }
    p[0] = root(s.diag[0] - q[m - 1] * q[m - 1])?;
    let forward = (p, q);

    let mut p = vec![0.0; m];
    let mut q = vec![0.0; m];
    q[m - 1] = root(s.diag[0])?;
    for i in (1..m).rev() {
        p[i] = s.cyc[i] / q[i];
        q[i - 1] = root(s.diag[i] - p[i] * p[i])?;
    }
    let backward = (p, q);

    Ok(vec![refine(s, forward.0, forward.1), refine(s, backward.0, backward.1)])
}

/// Writes `(p, q)` given on a cycle rotated by `r` back onto the original
/// labels.
fn params_from_edges(complex: Arc<SimplicialComplex>, p: &[f64], q: &[f64], r: usize) -> FactorParams {
    let m = p.len();
    let mut out = FactorParams::zeros(complex);
    for i in 0..m {
        let a = (i + r) % m;
        let b = (i + 1 + r) % m;
        let e = VertexSet::from_vertices([a, b]);
        out.set_gamma(e, a, p[i]).expect("cycle edge");
        out.set_gamma(e, b, q[i]).expect("cycle edge");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::phi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_matching_sum(s: &CycleMatrix) -> f64 {
        let m = s.m();
        let mut total = 0.0;
        for mask in 0u32..(1 << m) {
            // edge k uses vertices k and k+1 mod m
            let mut used = 0u64;
            let mut ok = true;
            for k in (0..m).filter(|k| mask >> k & 1 == 1) {
                let bits = (1u64 << k) | (1u64 << ((k + 1) % m));
                if used & bits != 0 {
                    ok = false;
                    break;
                }
                used |= bits;
            }
            if !ok {
                continue;
            }
            let mut term = if mask.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            for k in (0..m).filter(|k| mask >> k & 1 == 1) {
                term *= s.cyc[k] * s.cyc[k];
            }
            for i in (0..m).filter(|i| used >> i & 1 == 0) {
                term *= s.diag[i];
            }
            total += term;
        }
        total
    }

    fn random_cycle(m: usize, rng: &mut ChaCha8Rng) -> CycleMatrix {
        CycleMatrix::new(
            (0..m).map(|_| rng.random_range(0.5..2.0)).collect(),
            (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn random_member(m: usize, rng: &mut ChaCha8Rng) -> (FactorParams, CycleMatrix) {
        let c = cycle_edge_complex(m).unwrap();
        let p = FactorParams::from_fn(c, |f, _| if f.len() == 1 { 0.0 } else { rng.random_range(-1.0..1.0) });
        let s = CycleMatrix::from_symmetric(&phi(&p)).unwrap();
        (p, s)
    }

    #[test]
    fn matching_sum_examples() {
        for m in 3..8 {
            let id = CycleMatrix::new(vec![1.0; m], vec![0.0; m]).unwrap();
            assert_eq!(matching_sum(&id), 1.0);
        }
        let (r12, r23, r13) = (0.3, -0.2, 0.5);
        let s = CycleMatrix::new(vec![1.0; 3], vec![r12, r23, r13]).unwrap();
        let want = 1.0 - r12 * r12 - r13 * r13 - r23 * r23;
        assert!((matching_sum(&s) - want).abs() < 1e-15);
    }

    #[test]
    fn matching_sum_against_enumeration_and_dense_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 3..=10 {
            for _ in 0..20 {
                let s = random_cycle(m, &mut rng);
                let brute = brute_matching_sum(&s);
                assert!((matching_sum(&s) - brute).abs() <= 1e-12 * brute.abs().max(1.0));
                let dense = determinant(&s.to_symmetric());
                assert!((determinant_expansion(&s) - dense).abs() <= 1e-10 * dense.abs().max(1.0));
            }
        }
    }

    #[test]
    fn membership_examples() {
        for m in 3..7 {
            let v = cycle_membership(&CycleMatrix::new(vec![1.0; m], vec![0.0; m]).unwrap(), 1e-9).unwrap();
            assert!(v.member && !v.boundary);
            assert!((v.slack - 1.0).abs() < 1e-15);
        }
        let corr = CycleMatrix::new(vec![1.0; 3], vec![0.9; 3]).unwrap();
        let v = cycle_membership(&corr, 1e-9).unwrap();
        assert!(!v.member);
        assert!(v.violation.unwrap().det_flipped < 0.0);

        let s = counterexample_sigma(4, -1.4).unwrap();
        assert!(is_psd(&s.to_symmetric(), 1e-9).unwrap().is_psd);
        assert!(!cycle_membership(&s, 1e-9).unwrap().member);

        let indefinite = CycleMatrix::new(vec![1.0, -1.0, 1.0], vec![0.0; 3]).unwrap();
        assert!(matches!(cycle_membership(&indefinite, 1e-9), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn pattern_violation_rejected() {
        let mut s = SymmetricMatrix::identity(4);
        s.set(0, 2, 0.1);
        assert!(matches!(
            CycleMatrix::from_symmetric(&s),
            Err(Error::PatternViolation { i: 0, j: 2, .. })
        ));
    }

    #[test]
    fn counterexample_closed_form() {
        assert!((counterexample_det(3, 1.5) - 0.3125).abs() < 1e-15);
        assert!(counterexample_det(3, -1.5) < 0.0);
        for m in 3..9 {
            for rho in [-1.7, -0.3, 0.0, 0.8, 1.2] {
                let s = counterexample_sigma(m, rho).unwrap();
                let dense = determinant(&s.to_symmetric());
                assert!((counterexample_det(m, rho) - dense).abs() < 1e-13, "m={m} rho={rho}");
            }
            let path = tridiagonal_det(&vec![1.0; m], &vec![0.5; m - 1]);
            assert!((counterexample_det(m, 0.0) - path).abs() < 1e-15);
        }
        let s = counterexample_sigma(3, 1.5).unwrap();
        let flipped = sign_flip(&s.to_symmetric(), 0, 2).unwrap();
        assert_eq!(flipped, counterexample_sigma(3, -1.5).unwrap().to_symmetric());
    }

    #[test]
    fn counterexample_at_rho_one_is_member() {
        // Σ(1) is the circulant with 1/2 on the cycle; its slack is positive
        // for m = 3 and vanishes for even m
        let v = cycle_membership(&counterexample_sigma(3, 1.0).unwrap(), 1e-9).unwrap();
        assert!(v.member);
        let s = counterexample_sigma(3, 1.0).unwrap();
        let want = matching_sum(&s) - 2.0 * 0.125;
        assert!((v.slack - want).abs() < 1e-15);
    }

    #[test]
    fn quartic_of_identity() {
        let id = CycleMatrix::new(vec![1.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(quartic_coefficients(&id), (-1.0, 1.0, 0.0));
    }

    #[test]
    fn quartic_matches_dense_minors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for m in 3..=8 {
            let s = random_cycle(m, &mut rng);
            let sigma = s.to_symmetric();
            let minor = |drop: &[usize]| {
                let keep: Vec<usize> = (0..m).filter(|i| !drop.contains(i)).collect();
                determinant(&sigma.principal_submatrix(&keep))
            };
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let a = -minor(&[0]);
            let b = determinant(&sigma) + 2.0 * s.cyc[0].powi(2) * minor(&[0, 1]) + sign * 2.0 * s.cycle_product();
            let c = -s.cyc[0].powi(2) * minor(&[1]);
            let (qa, qb, qc) = quartic_coefficients(&s);
            assert!((qa - a).abs() < 1e-12 && (qb - b).abs() < 1e-12 && (qc - c).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn closure_polynomial_is_proportional_to_quartic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 3..=8 {
            let s = random_cycle(m, &mut rng);
            let sq: Vec<f64> = s.cyc.iter().map(|v| v * v).collect();
            let (c2, c1, c0) = closure_polynomial(&s.diag, &sq);
            let (a, b, c) = quartic_coefficients(&s);
            let k = a / c2;
            assert!((k * c1 - b).abs() < 1e-10 * b.abs().max(1.0), "m={m}");
            assert!((k * c0 - c).abs() < 1e-10 * c.abs().max(1.0), "m={m}");
        }
    }

    #[test]
    fn fibonacci_specialization() {
        let fib = |n: usize| {
            let (mut a, mut b) = (0.0f64, 1.0f64);
            for _ in 0..n {
                (a, b) = (b, a + b);
            }
            a
        };
        for m in 3..=12 {
            let (c2, c1, c0) = closure_polynomial(&vec![1.0; m], &vec![-1.0; m]);
            assert_eq!((c2, c1, c0), (fib(m), -fib(m), -fib(m)), "m={m}");
        }
    }

    #[test]
    fn fiber_of_identity() {
        let s = CycleMatrix::new(vec![1.0; 3], vec![0.0; 3]).unwrap();
        let fiber = cycle_fiber(&s, 1e-9).unwrap();
        assert_eq!(fiber.representatives.len(), 2);
        let (p, q) = edge_parameters(&fiber.representatives[0]);
        assert_eq!((p, q), (vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 0.0]));
        let (p, q) = edge_parameters(&fiber.representatives[1]);
        assert_eq!((p, q), (vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]));
        for r in &fiber.representatives {
            assert_eq!(phi(r), s.to_symmetric());
        }
        assert_eq!(fiber.expand_signs(1e-9).unwrap().len(), 16);
    }

    #[test]
    fn fiber_round_trip_and_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for m in 3..=6 {
            for _ in 0..20 {
                let (p0, s) = random_member(m, &mut rng);
                let fiber = cycle_fiber(&s, 1e-9).unwrap();
                assert_eq!(fiber.representatives.len(), 2);
                for r in &fiber.representatives {
                    assert!(phi(r).max_rel_diff(&s.to_symmetric()) < 1e-9);
                }
                let (pa, qa) = edge_parameters(&p0);
                let found = fiber.representatives.iter().any(|r| {
                    let (pb, qb) = edge_parameters(r);
                    (0..m).all(|i| (pa[i].abs() - pb[i].abs()).abs() < 1e-6 && (qa[i].abs() - qb[i].abs()).abs() < 1e-6)
                });
                assert!(found);
                if m <= 5 {
                    assert_eq!(fiber.expand_signs(1e-9).unwrap().len(), 1 << (m + 1));
                }
            }
        }
    }

    #[test]
    fn fiber_with_a_zero_edge() {
        let s = CycleMatrix::new(vec![2.0, 1.5, 1.8, 2.2], vec![0.4, 0.0, -0.6, 0.3]).unwrap();
        let fiber = cycle_fiber(&s, 1e-9).unwrap();
        assert_eq!(fiber.representatives.len(), 2);
        for r in &fiber.representatives {
            assert!(phi(r).max_rel_diff(&s.to_symmetric()) < 1e-12);
        }
        assert_eq!(fiber.expand_signs(1e-9).unwrap().len(), 32);
    }

    #[test]
    fn fiber_errors() {
        let s = counterexample_sigma(4, -1.4).unwrap();
        assert!(matches!(cycle_fiber(&s, 1e-9), Err(Error::NotMember { .. })));
        let singular = CycleMatrix::new(vec![1.0, 1.0, 0.0], vec![0.0; 3]).unwrap();
        assert!(matches!(cycle_fiber(&singular, 1e-9), Err(Error::Degenerate)));
    }

    #[test]
    fn tridiagonal_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for m in 3..=10 {
            let s = random_cycle(m, &mut rng);
            let (l, r) = tridiagonal_identity_sides(&s);
            assert!((l - r).abs() < 1e-10 * l.abs().max(r.abs()).max(1e-300), "m={m}: {l} vs {r}");
        }
    }

    #[test]
    fn flip_determinants_are_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_cycle(6, &mut rng);
        let dets = flip_determinants(&s);
        let abs_product: f64 = s.cyc.iter().map(|v| v.abs()).product();
        let expansion = matching_sum(&s) + 2.0 * s.cycle_product();
        for (_, d) in &dets {
            assert!((d - dets[0].1).abs() < 1e-12);
            assert!((d - expansion).abs() < 1e-12);
        }
        assert!(abs_product > 0.0);
    }
}
