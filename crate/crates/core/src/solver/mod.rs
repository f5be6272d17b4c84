//! Duhamel time stepping of the integral equations
//! `u = e^{t Delta} u0 - int e^{(t-s) Delta} P div(u (x) u - S B (x) B)`,
//! `B = e^{t Delta} B0 - int e^{(t-s) Delta} div(u (x) B - B (x) u)`,
//! with Picard iteration inside each macro step.
//!
//! Fields live on the zero-padding grid of the base grid while they evolve.
//! Quadratic products are formed from 2/3-truncated spectra and multiplied
//! by a radial window supported in the base box before they are
//! transformed back, so every source term sits in `|x| < L` and the
//! periodic convolution on the `4L` box agrees with the free-space one on
//! the base box up to the folded kernel tail.
//!
//! The time integral over a macro step `[t, t + dt]` is exponential
//! collocation at Gauss-Legendre nodes: the nonlinear term is interpolated
//! by the Lagrange polynomial through its node values and the integral
//! against `e^{-nu (c dt - s)|xi|^2}` is evaluated exactly, mode by mode.

mod bilinear;
mod calibrate;
mod engine;
pub mod quadrature;

pub use bilinear::{bilinear_bop, bilinear_u, v2_magnetic, NodeHistory};
pub use calibrate::{contraction_calibrate, measure_contraction, Calibration, ContractionSample};
pub use engine::{picard_solve, step_duhamel, Engine};

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::GridSpec;

/// Initial guess for the Picard iterates of a macro step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardSeed {
    /// Node values start from the heat flow of the step's initial value.
    Heat,
    /// Node values start from zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Coupling constant of the Lorentz force.
    pub s: f64,
    /// Reynolds number; the velocity diffuses with `1/re`.
    pub re: f64,
    /// Magnetic Reynolds number; `B` diffuses with `1/rm`.
    pub rm: f64,
    /// Macro time step.
    pub dt: f64,
    /// Collocation nodes per macro step.
    pub quad_nodes: usize,
    /// Final time.
    pub horizon: f64,
    pub picard_max: usize,
    /// Relative L^2 tolerance on successive Picard iterates.
    pub tol: f64,
    pub seed: PicardSeed,
    /// With `false` the magnetic field is held at zero (Navier-Stokes).
    pub magnetic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            re: 1.0,
            rm: 1.0,
            dt: 0.05,
            quad_nodes: 4,
            horizon: 0.5,
            picard_max: 60,
            tol: 1e-10,
            seed: PicardSeed::Heat,
            magnetic: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("S", self.s),
            ("Re", self.re),
            ("Rm", self.rm),
            ("dt", self.dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} > 0 (got {v})"));
            }
        }
        if self.quad_nodes < 3 {
            bad.push(format!("quad_nodes >= 3 (got {})", self.quad_nodes));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            bad.push(format!("T >= 0 (got {})", self.horizon));
        }
        if self.picard_max == 0 {
            bad.push("picard_max >= 1".into());
        }
        if !(self.tol > 0.0) {
            bad.push(format!("tol > 0 (got {})", self.tol));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "solver config: {}",
                bad.join(", ")
            )))
        }
    }

    /// Macro step count and the step actually used (`horizon / steps`).
    pub fn steps(&self) -> (usize, f64) {
        if self.horizon == 0.0 {
            return (0, self.dt);
        }
        let k = (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize;
        (k, self.horizon / k as f64)
    }
}

/// Velocity and magnetic field at time `t`, on the base grid.
#[derive(Debug, Clone)]
pub struct MhdState {
    pub u: VectorField,
    pub b: VectorField,
    pub t: f64,
}

impl MhdState {
    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }
}

/// Picard record of one macro step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Relative residual after each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Geometric mean of successive residual ratios.
    pub contraction: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at the macro times, starting with the initial data.
    pub states: Vec<MhdState>,
    /// One record per macro step.
    pub steps: Vec<StepRecord>,
    /// `1/2 int |u|^2 + S |B|^2` at each macro time (padded grid).
    pub energy: Vec<f64>,
    /// `||div u|| / (||u|| + ||B||)` at each macro time.
    pub div_u: Vec<f64>,
    pub div_b: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &MhdState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// Final residual of each step, `0` before the first step.
    pub fn residual_history(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(
                self.steps
                    .iter()
                    .map(|s| s.residuals.last().copied().unwrap_or(0.0)),
            )
            .collect()
    }

    /// Largest final residual over all steps.
    pub fn max_residual(&self) -> f64 {
        self.residual_history().into_iter().fold(0.0, f64::max)
    }

    /// State closest to time `t`.
    pub fn at(&self, t: f64) -> &MhdState {
        self.states
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("trajectory holds the initial state")
    }
}
