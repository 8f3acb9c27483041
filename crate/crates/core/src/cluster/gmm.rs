//! Gaussian mixture with full covariances, fitted by EM from a k-means start.
//!
//! When the dimension is at least the number of vectors, the data are first
//! expressed in an orthonormal basis of their centered span. With covariance
//! `S + reg I`, the density factorizes into the in-span part and a term that is
//! identical for every component, so responsibilities are unchanged and the
//! log-likelihood only shifts by a known constant, which is added back.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{check_k, kmeans_fit, ClusterAssignment, ClusterConfig, ClusterWarning};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_substitute, symmetric_eigen};

/// Regularization is escalated tenfold up to this value before giving up.
const MAX_REG: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub assignment: ClusterAssignment,
    pub weights: Vec<f64>,
    /// Component means in the original coordinates.
    pub means: Vec<Vec<f64>>,
    /// Total log-likelihood after each E-step.
    pub log_likelihood: Vec<f64>,
    /// Regularization actually used.
    pub reg: f64,
}

pub fn gmm_full(vectors: &[Vec<f64>], k: usize, cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    gmm_fit(vectors, k, cfg).map(|fit| fit.assignment)
}

pub fn gmm_fit(vectors: &[Vec<f64>], k: usize, cfg: &ClusterConfig) -> Result<GmmFit> {
    cfg.validate()?;
    let n = vectors.len();
    check_k(k, n)?;
    let init = kmeans_fit(vectors, k, cfg)?;
    let space = Space::new(vectors);

    let mut reg = cfg.gmm_reg;
    loop {
        match em(&space, init.assignment.labels(), k, reg, cfg) {
            Ok(state) => {
                let mut assignment = ClusterAssignment::new(state.labels, k)?;
                if reg != cfg.gmm_reg {
                    assignment = assignment.with_warning(ClusterWarning::RegularizationRaised { reg });
                }
                let means = state.means.iter().map(|m| space.lift(m)).collect();
                return Ok(GmmFit {
                    assignment,
                    weights: state.weights,
                    means,
                    log_likelihood: state.log_likelihood,
                    reg,
                });
            }
            Err(component) => {
                let next = if reg > 0.0 { reg * 10.0 } else { 1e-6 };
                if next > MAX_REG * (1.0 + 1e-9) {
                    return Err(Error::SingularCovariance { component, reg });
                }
                reg = next;
            }
        }
    }
}

/// Coordinates the mixture is fitted in.
struct Space {
    points: Vec<Vec<f64>>,
    /// Dimensions dropped by the projection; zero when none.
    dropped: usize,
    /// Mean and basis used to map fitted means back, when projected.
    center: Vec<f64>,
    basis: Option<Vec<Vec<f64>>>,
}

impl Space {
    fn new(vectors: &[Vec<f64>]) -> Self {
        let n = vectors.len();
        let dim = vectors[0].len();
        if dim < n {
            return Self {
                points: vectors.to_vec(),
                dropped: 0,
                center: Vec::new(),
                basis: None,
            };
        }
        let mut center = alloc::vec![0.0; dim];
        for v in vectors {
            for (c, x) in center.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let centered: Vec<Vec<f64>> = vectors
            .iter()
            .map(|v| v.iter().zip(&center).map(|(x, c)| x - c).collect())
            .collect();
        let mut gram = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let g: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                gram[i * n + j] = g;
                gram[j * n + i] = g;
            }
        }
        let (vals, vecs) = symmetric_eigen(&gram, n);
        let top = vals.last().copied().unwrap_or(0.0).max(0.0);
        let kept: Vec<usize> = (0..n).filter(|&c| vals[c] > top * 1e-12 && vals[c] > 0.0).collect();
        let points = (0..n)
            .map(|i| kept.iter().map(|&c| vecs[i * n + c] * libm::sqrt(vals[c])).collect())
            .collect();
        let basis = kept
            .iter()
            .map(|&c| {
                let s = libm::sqrt(vals[c]);
                (0..dim)
                    .map(|d| (0..n).map(|i| centered[i][d] * vecs[i * n + c]).sum::<f64>() / s)
                    .collect()
            })
            .collect();
        Self {
            points,
            dropped: dim - kept.len(),
            center,
            basis: Some(basis),
        }
    }

    fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn lift(&self, mean: &[f64]) -> Vec<f64> {
        match &self.basis {
            None => mean.to_vec(),
            Some(basis) => {
                let mut out = self.center.clone();
                for (coef, b) in mean.iter().zip(basis) {
                    for (o, x) in out.iter_mut().zip(b) {
                        *o += coef * x;
                    }
                }
                out
            }
        }
    }
}

struct EmState {
    labels: Vec<usize>,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    log_likelihood: Vec<f64>,
}

struct Component {
    log_weight: f64,
    mean: Vec<f64>,
    chol: Vec<f64>,
    log_det: f64,
}

/// Runs EM; on a failed factorization returns the offending component.
fn em(space: &Space, init_labels: &[usize], k: usize, reg: f64, cfg: &ClusterConfig) -> core::result::Result<EmState, usize> {
    let n = space.points.len();
    let mut resp = alloc::vec![0.0; n * k];
    for (i, &l) in init_labels.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    // per-point constant from the dimensions outside the data span
    let outside = if space.dropped > 0 {
        -0.5 * space.dropped as f64 * libm::log(2.0 * PI * reg)
    } else {
        0.0
    };
    if space.dropped > 0 && !(reg > 0.0) {
        return Err(0);
    }

    let mut trace = Vec::new();
    let mut components = m_step(space, &resp, k, reg)?;
    for _ in 0..cfg.max_iter {
        let ll = e_step(space, &components, &mut resp) + n as f64 * outside;
        let converged = trace.last().is_some_and(|&prev: &f64| (ll - prev).abs() / n as f64 <= cfg.tol);
        trace.push(ll);
        if converged {
            break;
        }
        components = m_step(space, &resp, k, reg)?;
    }

    let labels = (0..n)
        .map(|i| {
            let row = &resp[i * k..(i + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(EmState {
        labels,
        weights: components.iter().map(|c| libm::exp(c.log_weight)).collect(),
        means: components.into_iter().map(|c| c.mean).collect(),
        log_likelihood: trace,
    })
}

fn m_step(space: &Space, resp: &[f64], k: usize, reg: f64) -> core::result::Result<Vec<Component>, usize> {
    let n = space.points.len();
    let dim = space.dim();
    let mut components = Vec::with_capacity(k);
    for c in 0..k {
        let nk = (0..n).map(|i| resp[i * k + c]).sum::<f64>().max(10.0 * f64::EPSILON);
        let mut mean = alloc::vec![0.0; dim];
        for (i, p) in space.points.iter().enumerate() {
            let r = resp[i * k + c];
            for (m, x) in mean.iter_mut().zip(p) {
                *m += r * x;
            }
        }
        for m in &mut mean {
            *m /= nk;
        }
        let mut cov = alloc::vec![0.0; dim * dim];
        for (i, p) in space.points.iter().enumerate() {
            let r = resp[i * k + c];
            if r == 0.0 {
                continue;
            }
            for a in 0..dim {
                let da = p[a] - mean[a];
                for b in 0..=a {
                    cov[a * dim + b] += r * da * (p[b] - mean[b]);
                }
            }
        }
        for a in 0..dim {
            for b in 0..=a {
                let v = cov[a * dim + b] / nk;
                cov[a * dim + b] = v;
                cov[b * dim + a] = v;
            }
            cov[a * dim + a] += reg;
        }
        let chol = cholesky(&cov, dim).ok_or(c)?;
        let log_det = 2.0 * (0..dim).map(|a| libm::log(chol[a * dim + a])).sum::<f64>();
        components.push(Component {
            log_weight: libm::log(nk / n as f64),
            mean,
            chol,
            log_det,
        });
    }
    Ok(components)
}

/// Fills responsibilities and returns the in-space log-likelihood.
fn e_step(space: &Space, components: &[Component], resp: &mut [f64]) -> f64 {
    let k = components.len();
    let dim = space.dim();
    let norm = -0.5 * dim as f64 * libm::log(2.0 * PI);
    let mut total = 0.0;
    let mut buf = alloc::vec![0.0; dim];
    for (i, p) in space.points.iter().enumerate() {
        let row = &mut resp[i * k..(i + 1) * k];
        for (c, comp) in components.iter().enumerate() {
            for ((b, x), m) in buf.iter_mut().zip(p).zip(&comp.mean) {
                *b = x - m;
            }
            forward_substitute(&comp.chol, dim, &mut buf);
            let maha: f64 = buf.iter().map(|x| x * x).sum();
            row[c] = comp.log_weight + norm - 0.5 * comp.log_det - 0.5 * maha;
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&x| libm::exp(x - max)).sum();
        let lse = max + libm::log(sum);
        for x in row.iter_mut() {
            *x = libm::exp(*x - lse);
        }
        total += lse;
    }
    total
}
