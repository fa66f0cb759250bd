//! Quick randomized consistency checks, run by `facecone selftest`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complex::VertexSet;
use crate::cycle::{cycle_fiber, determinant_expansion, edge_parameters, quartic_coefficients};
use crate::error::{Error, Result};
use crate::linalg::{determinant, schur_complement, sign_flip};
use crate::param::phi;
use crate::quotient::schur_witness;
use crate::random::{random_complex, random_cycle_matrix, random_cycle_member, random_params};

pub const DEFAULT_INSTANCES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    DeterminantExpansion,
    Discriminant,
    SchurIdentity,
    RoundTrip,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::DeterminantExpansion,
        Suite::Discriminant,
        Suite::SchurIdentity,
        Suite::RoundTrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::DeterminantExpansion => "determinant-expansion",
            Suite::Discriminant => "discriminant",
            Suite::SchurIdentity => "schur-identity",
            Suite::RoundTrip => "round-trip",
        }
    }

    pub fn group(self) -> &'static str {
        match self {
            Suite::SchurIdentity => "quotient",
            _ => "cycle",
        }
    }
}

/// Suites matching `selector`: `all`, a group (`cycle`, `quotient`) or a
/// suite name.
pub fn select_suites(selector: &str) -> Result<Vec<Suite>> {
    let picked: Vec<Suite> = Suite::ALL
        .into_iter()
        .filter(|s| selector == "all" || s.group() == selector || s.name() == selector)
        .collect();
    if picked.is_empty() {
        return Err(Error::InvalidInput(format!("unknown suite {selector:?}")));
    }
    Ok(picked)
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    pub instances: usize,
    pub seed: u64,
    pub tol: f64,
    /// Scales the determinant expansion by `1 + 1e-6` so that its suite
    /// must fail.
    pub perturb: bool,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            instances: DEFAULT_INSTANCES,
            seed: 0,
            tol: crate::linalg::DEFAULT_TOL,
            perturb: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub instances: usize,
    pub failures: usize,
    pub max_error: f64,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    report: SuiteReport,
}

impl Tally {
    fn new(suite: Suite, instances: usize) -> Self {
        Tally {
            report: SuiteReport {
                suite: suite.name(),
                instances,
                failures: 0,
                max_error: 0.0,
                first_failure: None,
            },
        }
    }

    fn check(&mut self, k: usize, error: f64, limit: f64, what: impl FnOnce() -> String) {
        if error > self.report.max_error || error.is_nan() {
            self.report.max_error = error;
        }
        if !(error <= limit) {
            self.fail(k, what());
        }
    }

    fn fail(&mut self, k: usize, what: String) {
        self.report.failures += 1;
        if self.report.first_failure.is_none() {
            self.report.first_failure = Some(format!("instance {k}: {what}"));
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn run_suite(suite: Suite, opts: &SelftestOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(Suite::ALL.iter().position(|&s| s == suite).unwrap() as u64);
    let mut t = Tally::new(suite, opts.instances);
    for k in 0..opts.instances {
        match suite {
            Suite::DeterminantExpansion => {
                let m = 3 + k % 8;
                let s = random_cycle_matrix(m, &mut rng);
                let factor = if opts.perturb { 1.0 + 1e-6 } else { 1.0 };
                let dense = determinant(&s.to_symmetric());
                let e = rel(determinant_expansion(&s) * factor, dense);
                t.check(k, e, 1e-10, || format!("m={m}: expansion off by {e:e}"));
            }
            Suite::Discriminant => {
                let m = 3 + k % 6;
                let (_, s) = random_cycle_member(m, &mut rng);
                let sigma = s.to_symmetric();
                let (a, b, c) = quartic_coefficients(&s);
                let rhs = determinant(&sigma) * determinant(&sign_flip(&sigma, 0, 1).expect("valid edge"));
                let e = rel(b * b - 4.0 * a * c, rhs);
                t.check(k, e, 1e-10, || format!("m={m}: discriminant off by {e:e}"));
                if !(a < 0.0 && b > 0.0 && c <= 0.0) {
                    t.fail(k, format!("m={m}: coefficient signs a={a:e} b={b:e} c={c:e}"));
                }
            }
            Suite::SchurIdentity => {
                let m = 2 + k % 7;
                let delta = Arc::new(random_complex(m, 4, &mut rng));
                let params = random_params(&delta, &mut rng);
                let u = rng.random_range(0..m);
                let direct = schur_complement(&phi(&params), VertexSet::singleton(u));
                match (schur_witness(&params, u, opts.tol), direct) {
                    (Ok(w), Ok(d)) => {
                        let e = phi(&w.params).max_rel_diff(&d);
                        t.check(k, e, 1e-10, || format!("m={m}, u={u}: witness off by {e:e}"));
                    }
                    (Err(e), _) | (_, Err(e)) => t.fail(k, format!("m={m}, u={u}: {e}")),
                }
            }
            Suite::RoundTrip => {
                let m = 3 + k % 6;
                let (p0, s) = random_cycle_member(m, &mut rng);
                let fiber = match cycle_fiber(&s, opts.tol) {
                    Ok(f) => f,
                    Err(e) => {
                        t.fail(k, format!("m={m}: {e}"));
                        continue;
                    }
                };
                let sigma = s.to_symmetric();
                let e = fiber
                    .representatives
                    .iter()
                    .map(|r| phi(r).max_rel_diff(&sigma))
                    .fold(0.0, f64::max);
                t.check(k, e, 1e-9, || format!("m={m}: representative off by {e:e}"));
                let (pa, qa) = edge_parameters(&p0);
                let found = fiber.representatives.iter().any(|r| {
                    let (pb, qb) = edge_parameters(r);
                    (0..m).all(|i| (pa[i].abs() - pb[i].abs()).abs() < 1e-6 && (qa[i].abs() - qb[i].abs()).abs() < 1e-6)
                });
                if !found {
                    t.fail(k, format!("m={m}: generating parameters not recovered"));
                }
            }
        }
    }
    t.report
}

pub fn run_selftest(suites: &[Suite], opts: &SelftestOptions) -> Vec<SuiteReport> {
    suites.iter().map(|&s| run_suite(s, opts)).collect()
}
