//! Weighted Lebesgue norms `L^a_alpha`, the E-norm, and decay estimators.
//!
//! Two decay notions are measured separately:
//! - [`decay_rate_estimate`]: shell-averaged L² rate from the masses
//!   `int_{R <= |x| <= 2R} |f|^2`, whose log-log slope `s` gives
//!   `eta = (d - s) / 2`;
//! - [`envelope_exponent`]: pointwise rate, the log-log slope of
//!   `max |f|` over geometric radial bins.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::par;

/// Shells whose mass falls below this are treated as numerical noise.
pub const MASS_FLOOR: f64 = 1e-28;
/// Pointwise counterpart of [`MASS_FLOOR`].
pub const VALUE_FLOOR: f64 = 1e-14;
/// Fitted rates above this are reported as super-polynomial.
pub const SUPER_POLYNOMIAL: f64 = 8.0;
/// Minimum number of shells (or bins) for a fit.
pub const MIN_SHELLS: usize = 4;

/// Pointwise magnitude access shared by scalar and vector fields.
pub trait Sampled: Sync {
    fn grid(&self) -> &GridSpec;
    fn abs_at(&self, i: usize) -> f64;
}

impl Sampled for ScalarField {
    fn grid(&self) -> &GridSpec {
        ScalarField::grid(self)
    }

    #[inline]
    fn abs_at(&self, i: usize) -> f64 {
        self.values()[i].abs()
    }
}

impl Sampled for VectorField {
    fn grid(&self) -> &GridSpec {
        VectorField::grid(self)
    }

    #[inline]
    fn abs_at(&self, i: usize) -> f64 {
        self.components()
            .iter()
            .map(|c| c.values()[i].powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Exponent pair `(a, alpha)` of `L^a_alpha`; `a` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedIndex {
    pub a: f64,
    pub alpha: f64,
}

impl WeightedIndex {
    pub fn new(a: f64, alpha: f64) -> Result<Self> {
        if !(a >= 1.0) || !(alpha >= 0.0) || alpha.is_infinite() {
            return Err(Error::InvalidArgument(format!(
                "weighted index needs a >= 1, alpha >= 0 (got a={a}, alpha={alpha})"
            )));
        }
        Ok(Self { a, alpha })
    }

    /// `alpha + d/a`.
    pub fn localization(&self, d: usize) -> f64 {
        self.alpha + d as f64 / self.a
    }
}

/// `(int |f|^a (1+|x|)^{a alpha})^{1/a}`, or `max |f| (1+|x|)^alpha` for
/// `a = inf`, by the midpoint rule on grid points.
pub fn weighted_norm<F: Sampled>(f: &F, idx: WeightedIndex) -> f64 {
    let g = *f.grid();
    if idx.a.is_infinite() {
        return par::max(g.len(), |i| {
            f.abs_at(i) * (1.0 + g.radius(i)).powf(idx.alpha)
        });
    }
    let a = idx.a;
    let s = par::sum(g.len(), |i| {
        let v = f.abs_at(i);
        if v == 0.0 {
            0.0
        } else {
            (v * (1.0 + g.radius(i)).powf(idx.alpha)).powf(a)
        }
    });
    (s * g.cell_volume()).powf(1.0 / a)
}

/// Components of the E-norm on a truncated box.
#[derive(Debug, Clone, PartialEq)]
pub struct ENorm {
    /// `int_{|x| <= 1} |f|`.
    pub ball: f64,
    /// `(R, R int_{R <= |x| <= L/2} |f|)` for dyadic `R` in `[1, L/2]`.
    pub tail: Vec<(f64, f64)>,
}

impl ENorm {
    pub fn tail_sup(&self) -> f64 {
        self.tail.iter().map(|t| t.1).fold(0.0, f64::max)
    }

    pub fn value(&self) -> f64 {
        self.ball + self.tail_sup()
    }
}

/// E-norm with the tail supremum taken over `R = 1, 2, 4, ... <= L/2`.
pub fn e_norm<F: Sampled>(f: &F) -> ENorm {
    let g = *f.grid();
    let outer = g.half_extent() / 2.0;
    let hd = g.cell_volume();
    let ball = hd
        * par::sum(
            g.len(),
            |i| {
                if g.radius(i) <= 1.0 {
                    f.abs_at(i)
                } else {
                    0.0
                }
            },
        );
    let mut tail = Vec::new();
    let mut r = 1.0;
    while r <= outer {
        let mass = hd
            * par::sum(g.len(), |i| {
                let x = g.radius(i);
                if x >= r && x <= outer {
                    f.abs_at(i)
                } else {
                    0.0
                }
            });
        tail.push((r, r * mass));
        r *= 2.0;
    }
    ENorm { ball, tail }
}

/// Shell masses `int_{R <= |x| <= 2R} |f|^2` at `R_k = R_min 2^{k/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellProfile {
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
}

impl ShellProfile {
    pub fn measure<F: Sampled>(f: &F, r_min: f64, r_max: f64) -> Result<Self> {
        let g = *f.grid();
        check_range(&g, r_min, r_max)?;
        let radii = geometric_radii(r_min, r_max, 2f64.sqrt());
        if radii.len() < MIN_SHELLS {
            return Err(Error::InsufficientShells {
                found: radii.len(),
                needed: MIN_SHELLS,
            });
        }
        let hd = g.cell_volume();
        let masses = radii
            .iter()
            .map(|&r| {
                hd * par::sum(g.len(), |i| {
                    let x = g.radius(i);
                    if x >= r && x <= 2.0 * r {
                        f.abs_at(i).powi(2)
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        Ok(Self { radii, masses })
    }

    /// CSV with columns `R,mass,log_mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,mass,log_mass\n");
        for (r, m) in self.radii.iter().zip(&self.masses) {
            let _ = writeln!(s, "{r},{m},{}", m.ln());
        }
        s
    }
}

/// Result of a log-log fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    /// Fitted decay exponent.
    pub eta: f64,
    /// Standard error of `eta`.
    pub half_width: f64,
    /// Number of shells or bins in the fit.
    pub used: usize,
    /// Number excluded by the noise floor.
    pub excluded: usize,
    /// The floor was reached or the rate exceeds [`SUPER_POLYNOMIAL`].
    pub super_polynomial: bool,
}

/// Shell-averaged L² decay rate over `R in [r_min, r_max]`.
///
/// Requires `r_min >= 4h`, `r_max <= L/2` and at least four shells above the
/// noise floor, unless the floor itself is reached, in which case the result
/// is flagged super-polynomial.
pub fn decay_rate_estimate<F: Sampled>(f: &F, r_min: f64, r_max: f64) -> Result<DecayEstimate> {
    let d = f.grid().d() as f64;
    let profile = ShellProfile::measure(f, r_min, r_max)?;
    let pts: Vec<(f64, f64)> = profile
        .radii
        .iter()
        .zip(&profile.masses)
        .filter(|(_, &m)| m >= MASS_FLOOR)
        .map(|(&r, &m)| (r.ln(), m.ln()))
        .collect();
    let excluded = profile.radii.len() - pts.len();
    finish_fit(&pts, excluded, |slope| (d - slope) / 2.0, 0.5)
}

/// Pointwise decay exponent: regression of `log max |f|` over geometric
/// bins `[R_k, R_k 2^{1/4})` against `log R_k`.
pub fn envelope_exponent<F: Sampled>(f: &F, r_min: f64, r_max: f64) -> Result<DecayEstimate> {
    let g = *f.grid();
    check_range(&g, r_min, r_max)?;
    let ratio = 2f64.powf(0.25);
    let edges = geometric_radii(r_min, r_max, ratio);
    if edges.len() < MIN_SHELLS + 1 {
        return Err(Error::InsufficientShells {
            found: edges.len().saturating_sub(1),
            needed: MIN_SHELLS,
        });
    }
    let bins = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[bins];
    let log_ratio = ratio.ln();
    let chunk_max = par::map_collect(g.len().div_ceil(par::REDUCE_CHUNK), |c| {
        let mut m = vec![0.0f64; bins];
        let start = c * par::REDUCE_CHUNK;
        for i in start..(start + par::REDUCE_CHUNK).min(g.len()) {
            let r = g.radius(i);
            if r < lo || r >= hi {
                continue;
            }
            let b = (((r / lo).ln() / log_ratio) as usize).min(bins - 1);
            m[b] = m[b].max(f.abs_at(i));
        }
        m
    });
    let mut maxima = vec![0.0f64; bins];
    for m in chunk_max {
        for (a, b) in maxima.iter_mut().zip(m) {
            *a = a.max(b);
        }
    }
    let pts: Vec<(f64, f64)> = maxima
        .iter()
        .enumerate()
        .filter(|(_, &m)| m >= VALUE_FLOOR)
        .map(|(b, &m)| ((edges[b] * edges[b + 1]).sqrt().ln(), m.ln()))
        .collect();
    let excluded = bins - pts.len();
    finish_fit(&pts, excluded, |slope| -slope, 1.0)
}

/// Ratio `||f||_to / ||f||_from` for an inclusion `L^a_alpha -> L^b_beta`.
///
/// Requires `b <= a` and `beta + d/b < alpha + d/a`; identical indices give
/// the identity embedding.
pub fn embedding_check<F: Sampled>(f: &F, from: WeightedIndex, to: WeightedIndex) -> Result<f64> {
    let d = f.grid().d();
    if from != to && !(to.a <= from.a && to.localization(d) < from.localization(d)) {
        return Err(Error::InvalidArgument(format!(
            "no inclusion L^{}_{} -> L^{}_{} in d={d}",
            from.a, from.alpha, to.a, to.alpha
        )));
    }
    let den = weighted_norm(f, from);
    if den == 0.0 {
        return Ok(if from == to { 1.0 } else { 0.0 });
    }
    Ok(weighted_norm(f, to) / den)
}

/// CSV with columns `a,alpha,norm`.
pub fn norms_csv(rows: &[(WeightedIndex, f64)]) -> String {
    let mut s = String::from("a,alpha,norm\n");
    for (idx, v) in rows {
        let _ = writeln!(
            s,
            "{},{},{v}",
            crate::report::fmt_exponent(idx.a),
            idx.alpha
        );
    }
    s
}

fn check_range(g: &GridSpec, r_min: f64, r_max: f64) -> Result<()> {
    let h = g.spacing();
    let outer = g.half_extent() / 2.0;
    if r_min < 4.0 * h * (1.0 - 1e-12) || r_max > outer * (1.0 + 1e-12) || r_min >= r_max {
        return Err(Error::InvalidArgument(format!(
            "radial range [{r_min}, {r_max}] must satisfy 4h={} <= R_min < R_max <= L/2={outer}",
            4.0 * h
        )));
    }
    Ok(())
}

fn geometric_radii(r_min: f64, r_max: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let r = r_min * ratio.powi(k);
        if r > r_max * (1.0 + 1e-12) {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}

/// Least-squares line `y = c + s x`; returns `(s, standard error of s)`.
pub fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let se = if pts.len() > 2 {
        (rss / (m - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, se)
}

fn finish_fit(
    pts: &[(f64, f64)],
    excluded: usize,
    eta_of_slope: impl Fn(f64) -> f64,
    se_scale: f64,
) -> Result<DecayEstimate> {
    if pts.len() < MIN_SHELLS {
        if excluded > 0 {
            return Ok(DecayEstimate {
                eta: f64::INFINITY,
                half_width: 0.0,
                used: pts.len(),
                excluded,
                super_polynomial: true,
            });
        }
        return Err(Error::InsufficientShells {
            found: pts.len(),
            needed: MIN_SHELLS,
        });
    }
    let (slope, se) = fit_line(pts);
    let eta = eta_of_slope(slope);
    Ok(DecayEstimate {
        eta,
        half_width: se * se_scale,
        used: pts.len(),
        excluded,
        super_polynomial: excluded > 0 || eta > SUPER_POLYNOMIAL,
    })
}
