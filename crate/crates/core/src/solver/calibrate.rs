//! Measured contraction constants `C_T` of `U(u, u)` and the calibrated
//! constant of the lifetime bound.

use num_complex::Complex64;

use super::engine::{Engine, Spectra};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::field::{leray_project, VectorField};
use crate::grid::GridSpec;
use crate::indices::{lifetime_lower_bound, MhdIndices};
use crate::kernels::heat_exponent;
use crate::par;
use crate::weighted::{fit_line, weighted_norm, WeightedIndex};

/// `C_T` measured at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionSample {
    pub t: f64,
    /// `sup ||U(f, f)(T)|| / ||f||^2` over the probe family.
    pub c_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub samples: Vec<ContractionSample>,
    /// Fitted `kappa` in `C_T ~ C T^kappa`.
    pub exponent: f64,
    pub exponent_se: f64,
    pub prefactor: f64,
    /// Horizons are capped here.
    pub t_max: f64,
    /// `(data norm, horizon)` ladder used for the fit of `c`.
    pub ladder: Vec<(f64, f64)>,
    /// Largest `c` with `lifetime_lower_bound(A, c) <= horizon(A)` on the
    /// ladder.
    pub c: f64,
}

impl Calibration {
    /// Largest `T` with `4 C_T A < 1`: log-interpolated between samples,
    /// extrapolated with the fitted power law outside them, capped at
    /// `t_max`.
    pub fn horizon(&self, norm: f64) -> f64 {
        if norm <= 0.0 {
            return self.t_max;
        }
        let g = |s: &ContractionSample| 4.0 * s.c_t * norm;
        let fit = || (4.0 * self.prefactor * norm).powf(-1.0 / self.exponent);
        let s = &self.samples;
        let t = if g(&s[0]) >= 1.0 || g(&s[s.len() - 1]) < 1.0 {
            fit()
        } else {
            let i = s.windows(2).position(|w| g(&w[0]) < 1.0 && g(&w[1]) >= 1.0);
            match i {
                Some(i) => {
                    let (a, b) = (&s[i], &s[i + 1]);
                    let (la, lb) = (g(a).ln(), g(b).ln());
                    let f = -la / (lb - la);
                    (a.t.ln() + f * (b.t.ln() - a.t.ln())).exp()
                }
                None => fit(),
            }
        };
        t.min(self.t_max)
    }
}

/// `U(f, f)(T)` for a time-independent `f`: the nonlinear spectrum times
/// `(1 - e^{-T |xi|^2}) / |xi|^2`, on the base grid.
pub(crate) fn stationary_u(engine: &Engine, f: &Spectra, t: f64) -> VectorField {
    let g = *engine.grid();
    let (n, _) = engine.nonlinear(f, None);
    let out: Spectra = n
        .iter()
        .map(|c| {
            par::map_collect(g.len(), |i| {
                let k2 = heat_exponent(&g, i);
                let factor = if k2 > 0.0 {
                    -(-t * k2).exp_m1() / k2
                } else {
                    t
                };
                c[i] * Complex64::new(factor, 0.0)
            })
        })
        .collect();
    engine.lower(&out)
}

/// Divergence-free probes at scale `l`: a Gaussian vortex and a projected
/// Gaussian jet along the first axis.
fn probes(grid: &GridSpec, l: f64) -> Vec<VectorField> {
    let d = grid.d();
    let gauss = move |x: [f64; 3]| {
        let r2: f64 = x[..d].iter().map(|v| v * v).sum();
        (-0.5 * r2 / (l * l)).exp()
    };
    let vortex = VectorField::from_fn(*grid, move |x| {
        let e = gauss(x) / l;
        [-x[1] * e, x[0] * e, 0.0]
    });
    let jet = leray_project(&VectorField::from_fn(*grid, move |x| {
        [gauss([x[0] / 2.0, x[1], x[2]]), 0.0, 0.0]
    }));
    vec![vortex, jet]
}

/// Measures `C_T = sup ||U(f, f)(T)||_X / ||f||_X^2` over probes at scales
/// `sqrt(T)` and `2 sqrt(T)`, with `X = L^{p0}_{theta0}`.
pub fn measure_contraction(
    grid: &GridSpec,
    idx: &MhdIndices,
    times: &[f64],
) -> Result<Vec<ContractionSample>> {
    if idx.d() != grid.d() {
        return Err(Error::InvalidArgument(format!(
            "indices are for d = {}, grid has d = {}",
            idx.d(),
            grid.d()
        )));
    }
    let norm_idx = WeightedIndex::new(idx.p0(), idx.theta0())?;
    let engine = Engine::new(grid, &SolverConfig::default())?;
    times
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::NegativeTime(t));
            }
            let mut c_t: f64 = 0.0;
            for scale in [1.0, 2.0] {
                for f in probes(grid, scale * t.sqrt()) {
                    let nf = weighted_norm(&f, norm_idx);
                    let spec = engine.lift(&f)?;
                    let out = stationary_u(&engine, &spec, t);
                    c_t = c_t.max(weighted_norm(&out, norm_idx) / (nf * nf));
                }
            }
            Ok(ContractionSample { t, c_t })
        })
        .collect()
}

/// Horizon ladder `T in {0.025, 0.05, 0.1, 0.2}` of `C_T`, its power-law
/// fit, and the constant `c` of the lifetime bound fitted on a ladder of
/// data norms.
pub fn contraction_calibrate(grid: &GridSpec, idx: &MhdIndices, t_max: f64) -> Result<Calibration> {
    let samples = measure_contraction(grid, idx, &[0.025, 0.05, 0.1, 0.2])?;
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.t.ln(), s.c_t.ln())).collect();
    let (exponent, exponent_se) = fit_line(&pts);
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let prefactor = (mean_y - exponent * mean_x).exp();
    if !(exponent > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "measured C_T does not vanish as T -> 0 (fitted exponent {exponent:.3})"
        )));
    }
    let mut cal = Calibration {
        samples,
        exponent,
        exponent_se,
        prefactor,
        t_max,
        ladder: Vec::new(),
        c: 0.0,
    };
    let mid = cal.samples[cal.samples.len() / 2].c_t;
    let a_ref = 1.0 / (4.0 * mid);
    let mut c = f64::INFINITY;
    for k in -3..=3 {
        let a = a_ref * 2f64.powi(k);
        let h = cal.horizon(a);
        cal.ladder.push((a, h));
        if h < t_max {
            c = c.min(h / lifetime_lower_bound(a, idx, 1.0)?);
        }
    }
    cal.c = if c.is_finite() { c } else { t_max };
    Ok(cal)
}
