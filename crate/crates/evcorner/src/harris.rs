//! Event-based Harris corner scoring on normalized surface patches.
//!
//! Gradients come from separable Sobel kernels (binomial smoothing row times
//! a central-difference derivative row), evaluated only at fully-overlapping
//! ("valid") positions of the patch. The gradient outer products are blended
//! with a normalized Gaussian window into the structure tensor
//! `M = sum g(u) * grad(u) * grad(u)^T`, scored as `det(M) - k * trace(M)^2`.
//!
//! Two conventions keep scores on the scale the default thresholds expect
//! (16 for 7x7 kernels, 8 for 5x5), matching established event-based Harris
//! practice: kernel coefficients are scaled to unit maximum, and the Gaussian
//! window sums to one over the valid grid. A unit step then produces
//! gradients of a few units, corners score in the tens, and straight edges
//! score at or below zero.

use crate::error::{Error, Result};
use crate::event::Event;
use crate::normalize::{normalize_aed, normalize_binary, AedLookupTable, NormalizedPatch};
use crate::surface::TimeSurface;

/// Scoring parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisParams {
    /// Sobel kernel side; 5 or 7.
    pub sobel_size: usize,
    /// Corner decision threshold on the score.
    pub score_threshold: f64,
    /// Trace weight in the score.
    pub k: f64,
    /// Standard deviation of the Gaussian window, in patch cells.
    pub gaussian_sigma: f64,
    /// Patch radius; the patch side is `2R + 1`.
    pub patch_radius: u32,
}

/// Default score threshold for a given Sobel size.
pub fn default_threshold(sobel_size: usize) -> f64 {
    match sobel_size {
        5 => 8.0,
        _ => 16.0,
    }
}

impl Default for HarrisParams {
    fn default() -> Self {
        HarrisParams {
            sobel_size: 7,
            score_threshold: 16.0,
            k: 0.04,
            gaussian_sigma: 2.0,
            patch_radius: 4,
        }
    }
}

impl HarrisParams {
    pub fn validate(&self) -> Result<()> {
        if self.sobel_size != 5 && self.sobel_size != 7 {
            return Err(Error::Config(format!(
                "harris.sobel_size must be 5 or 7, got {}",
                self.sobel_size
            )));
        }
        let side = 2 * self.patch_radius as usize + 1;
        if self.sobel_size > side {
            return Err(Error::Config(format!(
                "harris.sobel_size {} exceeds patch side {side}",
                self.sobel_size
            )));
        }
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::Config(format!("harris.k must be positive, got {}", self.k)));
        }
        if !(self.gaussian_sigma > 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(Error::Config(format!(
                "harris.sigma must be positive, got {}",
                self.gaussian_sigma
            )));
        }
        Ok(())
    }
}

/// Binomial smoothing row of the given kernel size (Pascal row `size - 1`).
pub fn smoothing_row(size: usize) -> Vec<i64> {
    let mut row = vec![1i64];
    for _ in 1..size {
        let mut next = vec![1i64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// Central-difference derivative row: the order `size - 3` binomial row
/// convolved with `[-1, 0, 1]`. Antisymmetric, sums to zero.
pub fn derivative_row(size: usize) -> Vec<i64> {
    let base = smoothing_row(size - 2); // length size - 2
    let diff = [-1i64, 0, 1];
    let mut out = vec![0i64; size];
    for (i, &b) in base.iter().enumerate() {
        for (j, &d) in diff.iter().enumerate() {
            out[i + j] += b * d;
        }
    }
    out
}

/// Integer Sobel derivative kernels, row-major `size x size`, as
/// `(x_kernel, y_kernel)`. The x kernel is the outer product of the smoothing
/// column and the derivative row; the y kernel is its transpose.
pub fn sobel_kernels(size: usize) -> Result<(Vec<i64>, Vec<i64>)> {
    if size < 3 || size.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "sobel kernel size must be odd and >= 3, got {size}"
        )));
    }
    let smooth = smoothing_row(size);
    let deriv = derivative_row(size);
    let mut kx = vec![0i64; size * size];
    let mut ky = vec![0i64; size * size];
    for i in 0..size {
        for j in 0..size {
            kx[i * size + j] = smooth[i] * deriv[j];
            ky[i * size + j] = deriv[i] * smooth[j];
        }
    }
    Ok((kx, ky))
}

/// Precomputed scoring state: scaled kernels plus the Gaussian window over
/// the valid-position grid.
#[derive(Debug, Clone)]
pub struct HarrisContext {
    params: HarrisParams,
    /// Kernel coefficients scaled to unit maximum magnitude.
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// Valid-grid side: `patch_side - sobel_size + 1`.
    valid: usize,
    /// Gaussian weights over the valid grid, normalized to sum 1.
    window: Vec<f64>,
}

impl HarrisContext {
    pub fn new(params: HarrisParams) -> Result<Self> {
        params.validate()?;
        let size = params.sobel_size;
        let (kx_i, ky_i) = sobel_kernels(size)?;
        let max_coeff = kx_i.iter().map(|v| v.abs()).max().unwrap() as f64;
        let kx: Vec<f64> = kx_i.iter().map(|&v| v as f64 / max_coeff).collect();
        let ky: Vec<f64> = ky_i.iter().map(|&v| v as f64 / max_coeff).collect();
        let side = 2 * params.patch_radius as usize + 1;
        let valid = side - size + 1;
        let center = (valid as f64 - 1.0) / 2.0;
        let two_sigma_sq = 2.0 * params.gaussian_sigma * params.gaussian_sigma;
        let mut window = Vec::with_capacity(valid * valid);
        for i in 0..valid {
            for j in 0..valid {
                let dy = i as f64 - center;
                let dx = j as f64 - center;
                window.push((-(dx * dx + dy * dy) / two_sigma_sq).exp());
            }
        }
        let sum: f64 = window.iter().sum();
        for w in &mut window {
            *w /= sum;
        }
        Ok(HarrisContext {
            params,
            kx,
            ky,
            valid,
            window,
        })
    }

    pub fn params(&self) -> &HarrisParams {
        &self.params
    }
}

/// Symmetric 2x2 structure tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Gaussian-weighted structure tensor of a normalized patch, gradients taken
/// at valid convolution positions only.
pub fn harris_matrix(patch: &NormalizedPatch, ctx: &HarrisContext) -> Result<StructureTensor> {
    let side = patch.side();
    let size = ctx.params.sobel_size;
    if side < size {
        return Err(Error::Invalid(format!(
            "patch side {side} smaller than sobel size {size}"
        )));
    }
    let values = patch.values();
    let mut m = StructureTensor { xx: 0.0, xy: 0.0, yy: 0.0 };
    for vy in 0..ctx.valid {
        for vx in 0..ctx.valid {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for ky_i in 0..size {
                let row = (vy + ky_i) * side + vx;
                let krow = ky_i * size;
                for kx_i in 0..size {
                    let v = values[row + kx_i];
                    gx += ctx.kx[krow + kx_i] * v;
                    gy += ctx.ky[krow + kx_i] * v;
                }
            }
            let w = ctx.window[vy * ctx.valid + vx];
            m.xx += w * gx * gx;
            m.xy += w * gx * gy;
            m.yy += w * gy * gy;
        }
    }
    Ok(m)
}

/// Harris response `det(M) - k * trace(M)^2`.
pub fn harris_score(m: &StructureTensor, k: f64) -> f64 {
    let det = m.xx * m.yy - m.xy * m.xy;
    let trace = m.xx + m.yy;
    det - k * trace * trace
}

/// Scores a normalized patch; returns `(is_corner, score)`.
pub fn score_patch(norm: &NormalizedPatch, ctx: &HarrisContext) -> Result<(bool, f64)> {
    let m = harris_matrix(norm, ctx)?;
    let h = harris_score(&m, ctx.params.k);
    Ok((h > ctx.params.score_threshold, h))
}

/// Scores the event's surface patch under adaptive-exponential-decay
/// normalization. The event must already be applied to the surface.
pub fn aed_eharris_detect(
    e: &Event,
    surface: &TimeSurface,
    tgf_us: f64,
    table: &AedLookupTable,
    ctx: &HarrisContext,
) -> Result<(bool, f64)> {
    let patch = surface.local_patch(e, ctx.params.patch_radius);
    let norm = normalize_aed(&patch, tgf_us, table)?;
    score_patch(&norm, ctx)
}

/// Scores the event's surface patch under binary (n-newest) normalization.
/// The event must already be applied to the surface.
pub fn g_eharris_detect(
    e: &Event,
    surface: &TimeSurface,
    n_latest: usize,
    ctx: &HarrisContext,
) -> Result<(bool, f64)> {
    let patch = surface.local_patch(e, ctx.params.patch_radius);
    let norm = normalize_binary(&patch, n_latest);
    score_patch(&norm, ctx)
}
