//! Singular spectrum analysis.
//!
//! A series of length `T` is embedded into the `W x K` trajectory (Hankel) matrix with
//! `K = T - W + 1`. Its singular triples give rank-one elementary matrices, each of which
//! is mapped back to a length-`T` series by anti-diagonal averaging. Components are
//! ordered by singular value. When fewer components are requested than the rank, the
//! last component holds everything that was left out, so the components always add up
//! to the input.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const DEFAULT_WINDOW_CAP: usize = 120;
pub const DEFAULT_COMPONENTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsaConfig {
    /// Embedding window `W`. `None` picks `min(T / 2, 120)`.
    pub window: Option<usize>,
    /// Number of components `M`, clipped to `min(W, T - W + 1)`.
    pub num_components: usize,
}

impl Default for SsaConfig {
    fn default() -> Self {
        Self {
            window: None,
            num_components: DEFAULT_COMPONENTS,
        }
    }
}

impl SsaConfig {
    pub fn with_components(num_components: usize) -> Self {
        Self {
            num_components,
            ..Self::default()
        }
    }

    /// Window and component count actually used for a series of length `len`.
    pub fn resolve(&self, len: usize) -> Result<(usize, usize)> {
        if len < 4 {
            return Err(Error::Dimension(format!(
                "SSA needs at least 4 samples, got {len}"
            )));
        }
        let window = self
            .window
            .unwrap_or_else(|| (len / 2).min(DEFAULT_WINDOW_CAP));
        if window < 2 || window > len - 1 {
            return Err(Error::Dimension(format!(
                "window {window} outside [2, {}] for series of length {len}",
                len - 1
            )));
        }
        if self.num_components == 0 {
            return Err(Error::invalid("number of components must be >= 1"));
        }
        let k = len - window + 1;
        Ok((window, self.num_components.min(window.min(k))))
    }
}

/// Ordered additive components of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    components: Vec<Vec<f64>>,
    singular_values: Vec<f64>,
    window: usize,
    dt: f64,
    origin: f64,
}

impl Decomposition {
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// One value per component, non-increasing. The grouped last component reports
    /// the largest singular value among the ranks it absorbed.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn original_length(&self) -> usize {
        self.components[0].len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Sum of the first `k` components (`1 <= k <= M`).
    pub fn reconstruct_cumulative(&self, k: usize) -> Result<TimeSeries> {
        let m = self.num_components();
        if k < 1 || k > m {
            return Err(Error::IndexOutOfRange {
                index: k,
                min: 1,
                max: m,
            });
        }
        let mut acc = vec![0.0; self.original_length()];
        for comp in &self.components[..k] {
            for (a, c) in acc.iter_mut().zip(comp) {
                *a += c;
            }
        }
        TimeSeries::with_timing(acc, self.dt, self.origin)
    }

    /// All cumulative reconstructions `Y^1..=Y^M`, built incrementally.
    pub fn cumulative_all(&self) -> Vec<TimeSeries> {
        let mut acc = vec![0.0; self.original_length()];
        self.components
            .iter()
            .map(|comp| {
                for (a, c) in acc.iter_mut().zip(comp) {
                    *a += c;
                }
                TimeSeries::with_timing(acc.clone(), self.dt, self.origin)
                    .expect("sums of finite components are finite")
            })
            .collect()
    }
}

pub fn decompose(series: &TimeSeries, config: &SsaConfig) -> Result<Decomposition> {
    let x = series.values();
    let n = x.len();
    let (window, m) = config.resolve(n)?;
    let k = n - window + 1;

    // Gram matrix of the shorter side of the trajectory matrix; the Hankel structure
    // makes both sides share the same index arithmetic.
    let (rows, cols) = (window.min(k), window.max(k));
    let gram = DMatrix::from_fn(rows, rows, |i, j| {
        (0..cols).map(|c| x[i + c] * x[j + c]).sum::<f64>()
    });
    let eig = SymmetricEigen::new(gram);

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let counts: Vec<f64> = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(cols - 1);
            let hi = t.min(rows - 1);
            (hi - lo + 1) as f64
        })
        .collect();

    let mut components = Vec::with_capacity(m);
    let mut singular_values = Vec::with_capacity(m);
    let mut explained = vec![0.0; n];
    // a truncated decomposition keeps the remainder as its last component
    let truncated = m < rows;
    let projected = if truncated { m - 1 } else { m };
    for &idx in order.iter().take(projected) {
        let basis = eig.eigenvectors.column(idx);
        // projection of each lagged vector onto the basis vector
        let proj: Vec<f64> = (0..cols)
            .map(|c| (0..rows).map(|r| basis[r] * x[r + c]).sum::<f64>())
            .collect();
        let mut comp = vec![0.0; n];
        for (r, &b) in basis.iter().enumerate() {
            for (c, &p) in proj.iter().enumerate() {
                comp[r + c] += b * p;
            }
        }
        for (v, cnt) in comp.iter_mut().zip(&counts) {
            *v /= cnt;
        }
        for (e, v) in explained.iter_mut().zip(&comp) {
            *e += v;
        }
        components.push(comp);
        singular_values.push(eig.eigenvalues[idx].max(0.0).sqrt());
    }
    if truncated {
        let residual: Vec<f64> = x.iter().zip(&explained).map(|(a, b)| a - b).collect();
        components.push(residual);
        singular_values.push(eig.eigenvalues[order[m - 1]].max(0.0).sqrt());
    }

    Ok(Decomposition {
        components,
        singular_values,
        window,
        dt: series.dt(),
        origin: series.origin(),
    })
}
