//! Exact simulation of a Brown–Resnick process on finitely many points by the
//! extremal-functions method.
//!
//! The process is specified by its variogram matrix `gamma[i][j]`. A Gaussian
//! `W` with these increments is realised once by anchoring `W(p0) = 0` and
//! factorising `C(s, t) = gamma(s, p0) + gamma(t, p0) - gamma(s, t)`; the
//! spectral function seen from any point `p` is then
//! `exp(W(s) - W(p) - gamma(s, p))`.
//!
//! Points are processed in index order. Rows of the triangular factor are
//! evaluated lazily: a candidate is first checked against the points already
//! processed (nearest index first) and only completed if it survives.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Diagonal jitter added before factorisation.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ExtremalSimulator {
    n: usize,
    gamma: Vec<f64>,
    /// Packed lower-triangular factor for points `1..n`; row `r` holds `r + 1` entries.
    chol: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

impl ExtremalSimulator {
    /// `gamma` is the row-major `n x n` variogram matrix.
    pub fn new(n: usize, gamma: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("no points to simulate".into()));
        }
        if gamma.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: gamma.len() });
        }
        if gamma.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Numerical("variogram matrix has negative or non-finite entries".into()));
        }
        let m = n - 1;
        let mut chol = Vec::with_capacity(m * (m + 1) / 2);
        if m > 0 {
            let cov = DMatrix::from_fn(m, m, |i, j| {
                let (s, t) = (i + 1, j + 1);
                let c = gamma[s * n] + gamma[t * n] - gamma[s * n + t];
                if i == j {
                    c + JITTER
                } else {
                    c
                }
            });
            let l = cov
                .cholesky()
                .ok_or_else(|| Error::Numerical("covariance is not positive definite after jitter".into()))?
                .unpack();
            for r in 0..m {
                for k in 0..=r {
                    chol.push(l[(r, k)]);
                }
            }
        }
        Ok(Self { n, gamma, chol })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn row(&self, p: usize) -> &[f64] {
        let r = p - 1;
        let start = r * (r + 1) / 2;
        &self.chol[start..start + r + 1]
    }

    /// One field with unit Fréchet margins, written into `y`.
    pub fn simulate_into<R: Rng + ?Sized>(&self, rng: &mut R, y: &mut [f64]) {
        let n = self.n;
        y[..n].fill(0.0);
        let mut g: Vec<f64> = Vec::with_capacity(n);
        let draw_upto = |g: &mut Vec<f64>, len: usize, rng: &mut R| {
            while g.len() < len {
                g.push(StandardNormal.sample(rng));
            }
        };
        for p in 0..n {
            let mut arrivals: f64 = Exp1.sample(rng);
            let gamma_p = &self.gamma[p * n..(p + 1) * n];
            loop {
                let zeta = 1.0 / arrivals;
                if !(zeta > y[p]) {
                    break;
                }
                g.clear();
                draw_upto(&mut g, p, rng);
                let wp = if p == 0 { 0.0 } else { dot(self.row(p), &g) };
                let mut dominated = false;
                for s in (0..p).rev() {
                    let ws = if s == 0 { 0.0 } else { dot(self.row(s), &g) };
                    if zeta * (ws - wp - gamma_p[s]).exp() >= y[s] {
                        dominated = true;
                        break;
                    }
                }
                if !dominated {
                    draw_upto(&mut g, n - 1, rng);
                    for s in p..n {
                        let ws = if s == 0 { 0.0 } else if s == p { wp } else { dot(self.row(s), &g) };
                        let v = zeta * (ws - wp - gamma_p[s]).exp();
                        if v > y[s] {
                            y[s] = v;
                        }
                    }
                }
                let e: f64 = Exp1.sample(rng);
                arrivals += e;
            }
        }
    }
}
