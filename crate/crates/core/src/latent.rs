//! Gaussian latent-variable models whose observed covariance is `φ(γ)`.
//!
//! Each face `F` with `|F| ≥ 2` carries a hidden standard normal `H_F`, and
//! `Y_i = Σ_{F ∋ i} γ_{i,F} H_F + ε_i` with `ε_i ~ N(0, γ_{i,{i}}²)`.
//! Writing `Γ₂` for the columns of `Γ(γ)` on these faces, `(Y, H)` solves
//! `Λ (Y, H)ᵀ = (ε, H)ᵀ` with `Λ = [[I, -Γ₂], [0, I]]`, and `(ε, H)` has
//! covariance `Ω = diag(γ_{i,{i}}², 1, .., 1)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::complex::{Face, SimplicialComplex, VertexSet};
use crate::error::{Error, Result};
use crate::factor::FactorParams;
use crate::matrix::SymmetricMatrix;
use crate::param::phi;

/// Relative tolerance for the covariance identity.
pub const COVARIANCE_TOL: f64 = 1e-10;
/// Relative tolerance for the conditional precision identity.
pub const PRECISION_TOL: f64 = 1e-9;

const SIMULATION_CHUNK: usize = 10_000;

/// The bipartite digraph with an edge `F → {i}` for every `i ∈ F`,
/// `|F| ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentDigraph {
    /// Singletons by vertex, then larger faces in face order.
    pub nodes: Vec<Face>,
    /// `(F, i)` for the edge `F → {i}`.
    pub edges: Vec<(Face, usize)>,
}

impl LatentDigraph {
    /// DOT text with 1-based vertex labels.
    pub fn to_dot(&self) -> String {
        let label = |f: &Face| {
            let inner: Vec<String> = f.iter().map(|v| (v + 1).to_string()).collect();
            format!("\"{{{}}}\"", inner.join(","))
        };
        let mut out = String::from("digraph D {\n");
        for n in &self.nodes {
            out += &format!("  {};\n", label(n));
        }
        for (f, i) in &self.edges {
            out += &format!("  {} -> {};\n", label(f), label(&VertexSet::singleton(*i)));
        }
        out += "}\n";
        out
    }
}

pub fn build_digraph(delta: &SimplicialComplex) -> LatentDigraph {
    let m = delta.ground_size();
    let mut nodes: Vec<Face> = (0..m).map(VertexSet::singleton).collect();
    let mut edges = Vec::new();
    for f in delta.faces().iter().filter(|f| f.len() >= 2) {
        nodes.push(*f);
        edges.extend(f.iter().map(|i| (*f, i)));
    }
    LatentDigraph { nodes, edges }
}

#[derive(Debug, Clone)]
pub struct LatentSystem {
    pub complex: Arc<SimplicialComplex>,
    pub params: FactorParams,
    /// Faces of size at least two, in face order; they index `H`.
    pub hidden: Vec<Face>,
    /// `Γ₂`, an `m × |hidden|` matrix.
    pub gamma2: DMatrix<f64>,
    /// Diagonal of `Ω`.
    pub omega: Vec<f64>,
    pub lambda: DMatrix<f64>,
}

impl LatentSystem {
    pub fn new(params: &FactorParams) -> Self {
        let complex = params.complex().clone();
        let m = complex.ground_size();
        let hidden_idx: Vec<usize> = (0..complex.face_count()).filter(|&k| complex.faces()[k].len() >= 2).collect();
        let k = hidden_idx.len();
        let mut gamma2 = DMatrix::zeros(m, k);
        for (c, &fi) in hidden_idx.iter().enumerate() {
            for (v, &g) in complex.faces()[fi].iter().zip(params.face_values(fi)) {
                gamma2[(v, c)] = g;
            }
        }
        let mut omega: Vec<f64> = (0..m).map(|i| params.singleton(i).powi(2)).collect();
        omega.extend(std::iter::repeat_n(1.0, k));
        let lambda = block_upper(&(-&gamma2));
        LatentSystem {
            hidden: hidden_idx.iter().map(|&fi| complex.faces()[fi]).collect(),
            complex,
            params: params.clone(),
            gamma2,
            omega,
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// `Λ⁻¹`, which is `Λ` with its upper right block negated.
    pub fn lambda_inverse(&self) -> DMatrix<f64> {
        block_upper(&self.gamma2)
    }
}

/// `[[I, b], [0, I]]`.
fn block_upper(b: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, k) = b.shape();
    let mut out = DMatrix::identity(m + k, m + k);
    out.view_mut((0, m), (m, k)).copy_from(b);
    out
}

/// Top-left `m × m` block of `Λ⁻¹ Ω Λ⁻ᵀ`, checked against `φ(γ)`.
pub fn covariance_identity(params: &FactorParams) -> Result<SymmetricMatrix> {
    let sys = LatentSystem::new(params);
    let inv = sys.lambda_inverse();
    if &sys.lambda * &inv != DMatrix::identity(sys.dim(), sys.dim()) {
        return Err(Error::Inconsistent("negated block is not the inverse of Λ".into()));
    }
    let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sys.omega.clone()));
    let joint = &inv * omega * inv.transpose();
    let m = sys.complex.ground_size();
    let block = SymmetricMatrix::from_lower_fn(m, |i, j| 0.5 * (joint[(i, j)] + joint[(j, i)]));
    let err = block.max_rel_diff(&phi(params));
    if err > COVARIANCE_TOL {
        return Err(Error::Inconsistent(format!("latent covariance differs from φ by {err:e}")));
    }
    Ok(block)
}

/// Inverse of the conditional covariance of `Ȳ` given `H̄` in the dual
/// model `H̄_F = Σ_{i ∈ F} γ_{i,F} Ȳ_i + ν_F`, `Ȳ_i ~ N(0, 1/γ_{i,{i}}²)`.
///
/// The joint covariance is `Λ⁻ᵀ Ω⁻¹ Λ⁻¹`; the conditional covariance is
/// the Schur complement of its `H̄` block.
pub fn conditional_precision(params: &FactorParams) -> Result<SymmetricMatrix> {
    let m = params.complex().ground_size();
    if let Some(vertex) = (0..m).find(|&i| params.singleton(i) == 0.0) {
        return Err(Error::ZeroDiagonalParam { vertex });
    }
    let sys = LatentSystem::new(params);
    let n = sys.dim();
    let inv = sys.lambda_inverse();
    let omega_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, sys.omega.iter().map(|w| 1.0 / w)));
    let joint = inv.transpose() * omega_inv * &inv;

    for i in 0..m {
        for j in 0..m {
            let want = if i == j { 1.0 / sys.omega[i] } else { 0.0 };
            if joint[(i, j)] != want {
                return Err(Error::Inconsistent(format!(
                    "joint covariance block ({i}, {j}) is {:e}, expected {want:e}",
                    joint[(i, j)]
                )));
            }
        }
    }
    let k = n - m;
    let a = joint.view((0, 0), (m, m)).into_owned();
    let b = joint.view((0, m), (m, k)).into_owned();
    let c = joint.view((m, m), (k, k)).into_owned();
    let cond_cov = if k == 0 {
        a
    } else {
        let c_inv_bt = c
            .cholesky()
            .ok_or(Error::SingularBlock { condition: f64::INFINITY })?
            .solve(&b.transpose());
        a - &b * c_inv_bt
    };
    let precision = cond_cov
        .cholesky()
        .ok_or(Error::SingularBlock { condition: f64::INFINITY })?
        .inverse();
    let out = SymmetricMatrix::from_lower_fn(m, |i, j| 0.5 * (precision[(i, j)] + precision[(j, i)]));
    let err = out.max_rel_diff(&phi(params));
    if err > PRECISION_TOL {
        return Err(Error::Inconsistent(format!("conditional precision differs from φ by {err:e}")));
    }
    Ok(out)
}

/// Empirical covariance (denominator `n - 1`) of `n` draws of `Y`.
///
/// Draws come in chunks of 10⁴; chunk `c` uses ChaCha8 seeded with `seed`
/// on stream `c`, and chunk sums are combined in chunk order, so the result
/// is bit-identical for any thread count.
pub fn simulate_y(params: &FactorParams, n: usize, seed: u64) -> Result<SymmetricMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {n}")));
    }
    let sys = LatentSystem::new(params);
    let m = sys.complex.ground_size();
    let k = sys.hidden.len();
    let sd: Vec<f64> = (0..m).map(|i| params.singleton(i).abs()).collect();
    let chunks = n.div_ceil(SIMULATION_CHUNK);
    let partial: Vec<(Vec<f64>, DMatrix<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = SIMULATION_CHUNK.min(n - c * SIMULATION_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut sum = vec![0.0; m];
            let mut prod = DMatrix::<f64>::zeros(m, m);
            let mut h = vec![0.0; k];
            let mut y = vec![0.0; m];
            for _ in 0..count {
                for hf in h.iter_mut() {
                    *hf = StandardNormal.sample(&mut rng);
                }
                for i in 0..m {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    let mut v = sd[i] * e;
                    for (f, hf) in h.iter().enumerate() {
                        v += sys.gamma2[(i, f)] * hf;
                    }
                    y[i] = v;
                }
                for i in 0..m {
                    sum[i] += y[i];
                    for j in 0..=i {
                        prod[(i, j)] += y[i] * y[j];
                    }
                }
            }
            (sum, prod)
        })
        .collect();
    let mut sum = vec![0.0; m];
    let mut prod = DMatrix::<f64>::zeros(m, m);
    for (s, p) in partial {
        for i in 0..m {
            sum[i] += s[i];
        }
        prod += p;
    }
    let nf = n as f64;
    Ok(SymmetricMatrix::from_lower_fn(m, |i, j| {
        (prod[(i, j)] - sum[i] * sum[j] / nf) / (nf - 1.0)
    }))
}

/// Standard error of each entry of an `n`-sample covariance estimate under
/// normality: `√((σ_ii σ_jj + σ_ij²) / n)`.
pub fn covariance_standard_errors(sigma: &SymmetricMatrix, n: usize) -> SymmetricMatrix {
    SymmetricMatrix::from_lower_fn(sigma.dim(), |i, j| {
        ((sigma.get(i, i) * sigma.get(j, j) + sigma.get(i, j).powi(2)) / n as f64).sqrt()
    })
}
