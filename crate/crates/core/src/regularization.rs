//! Tikhonov parameter selection on the small projected problems
//! `min |B y - beta e1|^2 + lambda |y|^2` with `B` the `(m+1) x m`
//! Hessenberg or bidiagonal projection.
//!
//! `lambda` multiplies `|y|^2` directly. In the GMRES formulation this is
//! `mu^2`; in the LSQR normal equations it is `mu`.

use crate::error::{Error, Result};
use crate::linalg::{svd, Mat};

const GCV_GRID: usize = 200;
const GOLDEN_ITERS: usize = 60;
const DISCREPANCY_ITERS: usize = 200;

/// Safety factor of the discrepancy principle.
pub const DISCREPANCY_ETA: f64 = 1.01;

/// Singular values of the projected matrix and the projected right-hand
/// side in its left singular basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GcvSpectrum {
    /// Descending, nonnegative.
    pub sigma: Vec<f64>,
    /// `beta · U^T e1`, one entry per singular value.
    pub gtilde: Vec<f64>,
    /// Squared norm of the part of `beta e1` outside the range of `B`.
    pub outside2: f64,
}

impl GcvSpectrum {
    pub fn new(sigma: Vec<f64>, gtilde: Vec<f64>) -> Result<Self> {
        if sigma.len() != gtilde.len() {
            return Err(Error::DimensionMismatch {
                context: "GcvSpectrum",
                expected: sigma.len(),
                found: gtilde.len(),
            });
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) || sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidArgument(
                "singular values must be nonnegative and descending".into(),
            ));
        }
        Ok(GcvSpectrum {
            sigma,
            gtilde,
            outside2: 0.0,
        })
    }

    pub fn from_projected(projected: &Mat, beta: f64) -> Result<Self> {
        let d = svd(projected)?;
        let gtilde: Vec<f64> = (0..d.s.len()).map(|i| beta * d.u[(0, i)]).collect();
        let inside2: f64 = gtilde.iter().map(|g| g * g).sum();
        Ok(GcvSpectrum {
            sigma: d.s,
            gtilde,
            outside2: (beta * beta - inside2).max(0.0),
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.last().copied().unwrap_or(0.0)
    }

    /// `|B y_lambda - beta e1|`, including the component outside the range.
    pub fn residual(&self, lambda: f64) -> f64 {
        let inside: f64 = self
            .sigma
            .iter()
            .zip(&self.gtilde)
            .map(|(s, g)| {
                let f = lambda / (s * s + lambda);
                (f * g) * (f * g)
            })
            .sum();
        (inside + self.outside2).sqrt()
    }
}

/// `sum_i (g_i / (s_i^2 + lambda))^2 / (sum_i 1 / (s_i^2 + lambda))^2`.
pub fn gcv_value(spec: &GcvSpectrum, lambda: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, g) in spec.sigma.iter().zip(&spec.gtilde) {
        let d = s * s + lambda;
        num += (g / d) * (g / d);
        den += 1.0 / d;
    }
    num / (den * den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcvChoice {
    pub lambda: f64,
    pub value: f64,
}

/// Search interval `[max(s_min^2, 1e-16 s_max^2), s_max^2]`.
pub fn gcv_bounds(spec: &GcvSpectrum) -> (f64, f64) {
    let smax2 = spec.sigma_max().powi(2);
    let smin2 = spec.sigma_min().powi(2);
    (smin2.max(1e-16 * smax2), smax2)
}

/// Minimizes the GCV function over a 200-point log grid, then refines the
/// best grid cell by golden-section search in `log lambda`.
pub fn gcv_minimize(projected: &Mat, beta: f64) -> Result<GcvChoice> {
    let spec = GcvSpectrum::from_projected(projected, beta)?;
    gcv_minimize_spectrum(&spec)
}

pub fn gcv_minimize_spectrum(spec: &GcvSpectrum) -> Result<GcvChoice> {
    if spec.sigma_max() == 0.0 {
        return Err(Error::InvalidArgument(
            "GCV on an all-zero projected matrix".into(),
        ));
    }
    let (lo, hi) = gcv_bounds(spec);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let at = |i: usize| llo + (lhi - llo) * i as f64 / (GCV_GRID - 1) as f64;
    let f = |log_l: f64| gcv_value(spec, log_l.exp());

    let mut best_i = 0;
    let mut best_v = f(at(0));
    for i in 1..GCV_GRID {
        let v = f(at(i));
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let mut best = GcvChoice {
        lambda: at(best_i).exp(),
        value: best_v,
    };
    if lhi <= llo {
        return Ok(best);
    }

    let mut a = at(best_i.saturating_sub(1));
    let mut b = at((best_i + 1).min(GCV_GRID - 1));
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    let (xr, vr) = if fc < fd { (c, fc) } else { (d, fd) };
    if vr < best.value {
        best = GcvChoice {
            lambda: xr.exp(),
            value: vr,
        };
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyChoice {
    pub lambda: f64,
    /// False when the target residual lies outside the searchable range and
    /// `lambda` is the nearer bound.
    pub attained: bool,
}

/// Search interval of the discrepancy principle, `[1e-16, 1e4] · s_max^2`.
pub fn discrepancy_bounds(spec: &GcvSpectrum) -> (f64, f64) {
    let smax2 = spec.sigma_max().powi(2);
    (1e-16 * smax2, 1e4 * smax2)
}

/// Chooses `lambda` so that the projected residual equals
/// `DISCREPANCY_ETA · noise_level · beta`, by bisection in `log lambda`.
pub fn discrepancy_select(
    projected: &Mat,
    beta: f64,
    noise_level: f64,
) -> Result<DiscrepancyChoice> {
    let spec = GcvSpectrum::from_projected(projected, beta)?;
    discrepancy_select_spectrum(&spec, beta, noise_level)
}

pub fn discrepancy_select_spectrum(
    spec: &GcvSpectrum,
    beta: f64,
    noise_level: f64,
) -> Result<DiscrepancyChoice> {
    if !(noise_level > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be positive, got {noise_level}"
        )));
    }
    if spec.sigma_max() == 0.0 {
        return Err(Error::InvalidArgument(
            "discrepancy principle on an all-zero projected matrix".into(),
        ));
    }
    let target = DISCREPANCY_ETA * noise_level * beta;
    let (lo, hi) = discrepancy_bounds(spec);
    if spec.residual(hi) <= target {
        return Ok(DiscrepancyChoice {
            lambda: hi,
            attained: false,
        });
    }
    if spec.residual(lo) >= target {
        return Ok(DiscrepancyChoice {
            lambda: lo,
            attained: false,
        });
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut prev = (a, spec.residual(lo));
    for _ in 0..DISCREPANCY_ITERS {
        let mid = 0.5 * (a + b);
        let r = spec.residual(mid.exp());
        debug_assert!(
            (mid - prev.0) * (r - prev.1) >= -1e-12 * (1.0 + prev.1.abs()),
            "projected residual must be non-decreasing in lambda"
        );
        prev = (mid, r);
        if r < target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    Ok(DiscrepancyChoice {
        lambda: (0.5 * (a + b)).exp(),
        attained: true,
    })
}
