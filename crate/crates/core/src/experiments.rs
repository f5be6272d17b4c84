//! Initial data, moment matrices, and the decay experiments: spreading of
//! anisotropic data, decay of cyclic-symmetric data, and the magnetic
//! ceiling for slowly decaying `B`.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{leray_project, perp_gradient, ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::indices::MhdIndices;
use crate::par;
use crate::report::Table;
use crate::snapshot;
use crate::solver::{Engine, MhdState, SolverConfig, Trajectory};
use crate::weighted::{decay_rate_estimate, e_norm, envelope_exponent, DecayEstimate};

/// Report times of every experiment.
pub const SAMPLE_TIMES: [f64; 5] = [0.0, 0.0625, 0.125, 0.25, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Stream function `(1 + |x|^2)^{-(s-1)/2}` (Gaussian for `s = inf`).
    StreamBump,
    /// Seeded sum of Gaussian vortices and jets.
    RandomDivfree,
    /// Stream function `x_1 e^{-|x|^2/2}`: anisotropic Gaussian data.
    Dipole,
    /// `rho(r) cos(n phi)` plus a radial swirl.
    Cyclic,
    /// Snapshot file holding `u` (kind `u`) or `u` and `B` (kind `uB`).
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub generator: Generator,
    /// Pointwise decay target `|u| ~ |x|^{-s}`.
    pub decay: f64,
    /// Symmetry order of cyclic data.
    pub order: usize,
    pub seed: u64,
    pub amplitude: f64,
    /// Stretch of the second axis in the stream-bump profile.
    pub aspect: f64,
    /// Core width of the stream-bump profile.
    pub width: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            generator: Generator::StreamBump,
            decay: f64::INFINITY,
            order: 3,
            seed: 0,
            amplitude: 1.0,
            aspect: 1.0,
            width: 1.0,
        }
    }
}

impl DataSpec {
    pub fn stream_bump(decay: f64, amplitude: f64) -> Self {
        Self {
            decay,
            amplitude,
            ..Self::default()
        }
    }

    pub fn dipole(amplitude: f64) -> Self {
        Self {
            generator: Generator::Dipole,
            amplitude,
            ..Self::default()
        }
    }

    pub fn cyclic(order: usize, amplitude: f64) -> Self {
        Self {
            generator: Generator::Cyclic,
            order,
            amplitude,
            ..Self::default()
        }
    }

    /// Parses `kind[:key=value,...]`; `kind` is `stream-bump`,
    /// `random-divfree`, `cyclic` or a path to a snapshot file.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut spec = Self::default();
        spec.generator = match kind {
            "stream-bump" => Generator::StreamBump,
            "random-divfree" => Generator::RandomDivfree,
            "dipole" => Generator::Dipole,
            "cyclic" => Generator::Cyclic,
            path => {
                return Ok(Self {
                    generator: Generator::File(PathBuf::from(path)),
                    ..spec
                })
            }
        };
        for kv in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("data option {kv:?} is not key=value"))
            })?;
            let bad = || Error::InvalidArgument(format!("bad value for data option {k}: {v:?}"));
            match k.trim() {
                "s" => spec.decay = crate::report::parse_exponent(v)?,
                "n" => spec.order = v.trim().parse().map_err(|_| bad())?,
                "seed" => spec.seed = v.trim().parse().map_err(|_| bad())?,
                "amp" => spec.amplitude = v.trim().parse().map_err(|_| bad())?,
                "aspect" => spec.aspect = v.trim().parse().map_err(|_| bad())?,
                "width" => spec.width = v.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown data option {other:?}"
                    )))
                }
            }
        }
        Ok(spec)
    }

    /// Canonical text form accepted by [`DataSpec::parse`].
    pub fn render(&self) -> String {
        let s = crate::report::fmt_exponent(self.decay);
        match &self.generator {
            Generator::StreamBump => format!(
                "stream-bump:s={s},amp={},aspect={},width={}",
                self.amplitude, self.aspect, self.width
            ),
            Generator::Dipole => format!("dipole:amp={}", self.amplitude),
            Generator::RandomDivfree => {
                format!("random-divfree:seed={},amp={}", self.seed, self.amplitude)
            }
            Generator::Cyclic => format!("cyclic:n={},amp={}", self.order, self.amplitude),
            Generator::File(p) => p.display().to_string(),
        }
    }
}

/// `1` on `|x| <= 0.7 L`, `cos^2` roll-off to `0` at `0.95 L`.
fn edge_taper(r: f64, l: f64) -> f64 {
    let (a, b) = (0.7 * l, 0.95 * l);
    if r <= a {
        1.0
    } else if r >= b {
        0.0
    } else {
        (0.5 * std::f64::consts::PI * (r - a) / (b - a))
            .cos()
            .powi(2)
    }
}

fn radius2(x: [f64; 3], d: usize) -> f64 {
    x[..d].iter().map(|v| v * v).sum()
}

/// Smallest core width, in grid spacings, of resolvable algebraic and
/// Gaussian profiles (spectral tail below `1e-10` at the Nyquist mode).
const MIN_ALGEBRAIC_WIDTH: f64 = 7.5;
const MIN_GAUSSIAN_WIDTH: f64 = 2.5;

/// Stream function for [`Generator::StreamBump`], tapered near the box edge.
fn bump_stream(grid: &GridSpec, decay: f64, aspect: f64, width: f64) -> ScalarField {
    let l = grid.half_extent();
    let d = grid.d();
    ScalarField::from_fn(*grid, move |x| {
        let (y0, y1, y2) = (x[0] / width, aspect * x[1] / width, x[2] / width);
        let r2 = y0 * y0 + y1 * y1 + if d == 3 { y2 * y2 } else { 0.0 };
        let core = if decay.is_infinite() {
            (-0.5 * r2).exp()
        } else {
            (1.0 + r2).powf(-(decay - 1.0) / 2.0)
        };
        core * edge_taper(radius2(x, d).sqrt(), l)
    })
}

fn dipole_stream(grid: &GridSpec) -> ScalarField {
    let d = grid.d();
    ScalarField::from_fn(*grid, move |x| x[0] * (-0.5 * radius2(x, d)).exp())
}

fn random_stream(grid: &GridSpec, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.d();
    let terms: Vec<([f64; 3], f64, f64)> = (0..6)
        .map(|_| {
            let mut c = [0.0; 3];
            for v in c.iter_mut().take(d) {
                *v = rng.gen_range(-1.5..1.5);
            }
            (c, rng.gen_range(0.5..1.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    ScalarField::from_fn(*grid, move |x| {
        terms
            .iter()
            .map(|(c, s, a)| {
                let r2: f64 = (0..d).map(|k| (x[k] - c[k]).powi(2)).sum();
                a * (-0.5 * r2 / (s * s)).exp()
            })
            .sum()
    })
}

/// `(-d_2 psi, d_1 psi, 0)` computed spectrally; divergence-free in any `d`.
fn rotated_gradient(psi: &ScalarField) -> Result<VectorField> {
    if psi.grid().d() == 2 {
        return perp_gradient(psi);
    }
    let g = crate::field::gradient(psi).into_components();
    VectorField::new(vec![
        g[1].scale(-1.0),
        g[0].clone(),
        ScalarField::zeros(*psi.grid()),
    ])
}

/// Divergence-free data from a generated stream function.
pub fn make_divfree(grid: &GridSpec, spec: &DataSpec) -> Result<VectorField> {
    if !spec.amplitude.is_finite() {
        return Err(Error::InvalidArgument(
            "data amplitude must be finite".into(),
        ));
    }
    let psi = match &spec.generator {
        Generator::StreamBump => {
            if !(spec.decay > 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "decay target s = {} needs s > 1 for a decaying stream function",
                    spec.decay
                )));
            }
            if !(spec.aspect > 0.0 && spec.aspect.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "aspect {} must be positive",
                    spec.aspect
                )));
            }
            let min = if spec.decay.is_infinite() {
                MIN_GAUSSIAN_WIDTH
            } else {
                MIN_ALGEBRAIC_WIDTH
            } * grid.spacing();
            if !(spec.width / spec.aspect.max(1.0) >= min) {
                return Err(Error::InvalidArgument(format!(
                    "stream-bump core width {} (aspect {}) is unresolvable; needs >= {min}",
                    spec.width, spec.aspect
                )));
            }
            bump_stream(grid, spec.decay, spec.aspect, spec.width)
        }
        Generator::Dipole => dipole_stream(grid),
        Generator::RandomDivfree if grid.d() == 3 => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let amps: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let base = random_stream(grid, spec.seed);
            let raw = VectorField::new(amps.iter().map(|a| base.scale(*a)).collect())?;
            return Ok(leray_project(&raw).scale(spec.amplitude));
        }
        Generator::RandomDivfree => random_stream(grid, spec.seed),
        Generator::Cyclic => {
            return make_cyclic(grid, spec.order, CYCLIC_SWIRL).map(|u| u.scale(spec.amplitude))
        }
        Generator::File(p) => {
            return Err(Error::InvalidArgument(format!(
                "{} is a data file; use load_data",
                p.display()
            )))
        }
    };
    Ok(rotated_gradient(&psi)?.scale(spec.amplitude))
}

/// Reads `(u0, B0)` from a snapshot of kind `u` (then `B0 = 0`) or `uB`.
pub fn load_data(path: &std::path::Path) -> Result<(VectorField, VectorField)> {
    let snap = snapshot::read(path)?;
    let g = snap.grid;
    let d = g.d();
    let comps = |vs: &[ScalarField]| VectorField::new(vs.to_vec());
    match (snap.kind.as_str(), snap.components.len()) {
        ("u", n) if n == d => Ok((comps(&snap.components)?, VectorField::zeros(g))),
        ("uB", n) if n == 2 * d => {
            Ok((comps(&snap.components[..d])?, comps(&snap.components[d..])?))
        }
        (k, n) => Err(Error::Format(format!(
            "{}: snapshot kind {k:?} with {n} components is not velocity data",
            path.display()
        ))),
    }
}

/// Swirl amplitude added to cyclic data.
pub const CYCLIC_SWIRL: f64 = 0.5;

/// `Re((x_1 + i x_2)^n) e^{-r^2/2} / max + swirl e^{-r^2/2}`.
pub fn cyclic_stream(x: [f64; 3], n: usize, swirl: f64) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let g = (-0.5 * r2).exp();
    let peak = (n as f64).powf(n as f64 / 2.0) * (-(n as f64) / 2.0).exp();
    let (re, _) = complex_pow(x[0], x[1], n);
    re * g / peak + swirl * g
}

/// Closed-form `grad^perp` of [`cyclic_stream`].
pub fn cyclic_velocity(x: [f64; 3], n: usize, swirl: f64) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let g = (-0.5 * r2).exp();
    let peak = (n as f64).powf(n as f64 / 2.0) * (-(n as f64) / 2.0).exp();
    let (re, _) = complex_pow(x[0], x[1], n);
    let (re1, im1) = complex_pow(x[0], x[1], n - 1);
    let nf = n as f64;
    let dx = (nf * re1 - x[0] * re) * g / peak - swirl * x[0] * g;
    let dy = (-nf * im1 - x[1] * re) * g / peak - swirl * x[1] * g;
    [-dy, dx]
}

fn complex_pow(a: f64, b: f64, n: usize) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..n {
        (re, im) = (re * a - im * b, re * b + im * a);
    }
    (re, im)
}

/// Cyclic-symmetric velocity of order `n` (d = 2), equivariant under the
/// rotation by `2 pi / n`.
pub fn make_cyclic(grid: &GridSpec, n: usize, swirl: f64) -> Result<VectorField> {
    if grid.d() != 2 {
        return Err(Error::InvalidArgument("cyclic data requires d = 2".into()));
    }
    if n < 2 || (n as f64) >= std::f64::consts::PI * grid.n() as f64 / 8.0 {
        return Err(Error::InvalidArgument(format!(
            "symmetry order {n} is outside 2 <= n < pi n_grid / 8"
        )));
    }
    let psi = ScalarField::from_fn(*grid, move |x| cyclic_stream(x, n, swirl));
    perp_gradient(&psi)
}

/// `M_jk = int (u^j u^k - B^j B^k) dx` and its isotropy defect.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub d: usize,
    pub m: [[f64; 3]; 3],
    /// `int |u|^2 + |B|^2`.
    pub norm: f64,
    /// `max(|off-diagonal|, diagonal spread) / norm`.
    pub defect: f64,
    /// Set when the fields carry more than `1e-10` relative mass at
    /// `|x| >= L/2`, where truncated moments are unreliable.
    pub warning: Option<String>,
}

impl MomentMatrix {
    /// Mean diagonal entry, the common value when the defect vanishes.
    pub fn diagonal_mean(&self) -> f64 {
        (0..self.d).map(|j| self.m[j][j]).sum::<f64>() / self.d as f64
    }
}

fn far_fraction(f: &VectorField, r: f64) -> f64 {
    let g = *f.grid();
    let total = par::sum(g.len(), |i| f.component_sq_at(i));
    if total == 0.0 {
        return 0.0;
    }
    par::sum(g.len(), |i| {
        if g.radius(i) >= r {
            f.component_sq_at(i)
        } else {
            0.0
        }
    }) / total
}

trait SquareAt {
    fn component_sq_at(&self, i: usize) -> f64;
}

impl SquareAt for VectorField {
    fn component_sq_at(&self, i: usize) -> f64 {
        self.components()
            .iter()
            .map(|c| c.values()[i].powi(2))
            .sum()
    }
}

pub fn moment_matrix(state: &MhdState) -> MomentMatrix {
    let g = *state.grid();
    let d = g.d();
    let hd = g.cell_volume();
    let (u, b) = (&state.u, &state.b);
    let mut m = [[0.0; 3]; 3];
    for j in 0..d {
        for k in j..d {
            let (uj, uk) = (u.component(j).values(), u.component(k).values());
            let (bj, bk) = (b.component(j).values(), b.component(k).values());
            let v = hd * par::sum(g.len(), |i| uj[i] * uk[i] - bj[i] * bk[i]);
            m[j][k] = v;
            m[k][j] = v;
        }
    }
    let norm = hd * par::sum(g.len(), |i| u.component_sq_at(i) + b.component_sq_at(i));
    let mut off: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..d {
        lo = lo.min(m[j][j]);
        hi = hi.max(m[j][j]);
        for k in j + 1..d {
            off = off.max(m[j][k].abs());
        }
    }
    let defect = if norm > 0.0 {
        off.max(hi - lo) / norm
    } else {
        0.0
    };
    let r = 0.5 * g.half_extent();
    let far = far_fraction(u, r).max(far_fraction(b, r));
    let warning = (far > 1e-10).then(|| {
        format!(
            "support guard: relative mass {far:.3e} at |x| >= L/2 at t = {}",
            state.t
        )
    });
    MomentMatrix {
        d,
        m,
        norm,
        defect,
        warning,
    }
}

/// `R int_{R <= |x| <= 2R} |f|` at `R = 1, 2, 4, ... <= L/4`.
pub fn tail_indicator(f: &VectorField) -> Vec<(f64, f64)> {
    let g = *f.grid();
    let hd = g.cell_volume();
    let mut out = Vec::new();
    let mut r = 1.0;
    while r <= 0.25 * g.half_extent() {
        let mass = hd
            * par::sum(g.len(), |i| {
                let x = g.radius(i);
                if x >= r && x <= 2.0 * r {
                    f.component_sq_at(i).sqrt()
                } else {
                    0.0
                }
            });
        out.push((r, r * mass));
        r *= 2.0;
    }
    out
}

/// Whether the last indicator value has fallen below a quarter of the
/// largest.
pub fn tail_trends_to_zero(ind: &[(f64, f64)]) -> bool {
    let max = ind.iter().map(|p| p.1).fold(0.0, f64::max);
    match ind.last() {
        Some(&(_, v)) => max == 0.0 || v < 0.25 * max,
        None => true,
    }
}

/// Shell mass `int_{R <= |x| <= 2R} |f|^2` at `R = L/4`.
pub fn far_shell_mass(f: &VectorField) -> f64 {
    let g = *f.grid();
    let r = 0.25 * g.half_extent();
    g.cell_volume()
        * par::sum(g.len(), |i| {
            let x = g.radius(i);
            if x >= r && x <= 2.0 * r {
                f.component_sq_at(i)
            } else {
                0.0
            }
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub solver: SolverConfig,
    /// Report times; each must be a macro time of the solver.
    pub times: Vec<f64>,
    /// Radius range of the decay fits.
    pub fit_range: (f64, f64),
}

impl ExperimentConfig {
    /// Report times [`SAMPLE_TIMES`], step `1/32`, fits over `[L/8, L/2]`.
    pub fn new(grid: GridSpec) -> Self {
        let l = grid.half_extent();
        Self {
            grid,
            solver: SolverConfig {
                dt: 0.03125,
                horizon: 0.5,
                ..SolverConfig::default()
            },
            times: SAMPLE_TIMES.to_vec(),
            fit_range: (l / 8.0, l / 2.0),
        }
    }
}

/// Measurements at one report time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub t: f64,
    /// Shell-L² decay rate of `u` (`inf` when super-polynomial).
    pub eta_u: f64,
    pub eta_b: f64,
    /// `min{d + 1; 2 eta1 - delta}` with `eta1` the envelope rate of the
    /// initial `B`.
    pub ceiling: f64,
    pub defect: f64,
    pub c_of_t: f64,
    pub e_norm_u: f64,
    pub e_norm_sq: f64,
    /// Shell mass of `u` at `R = L/4`.
    pub far_mass: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub label: String,
    pub rows: Vec<ExperimentRow>,
    pub warnings: Vec<String>,
    pub trajectory: Trajectory,
}

impl ExperimentReport {
    /// Columns `t,eta_u,eta_B,ceiling,defect,c_of_t,E_norm_u,E_norm_sq`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "t",
            "eta_u",
            "eta_B",
            "ceiling",
            "defect",
            "c_of_t",
            "E_norm_u",
            "E_norm_sq",
        ]);
        for r in &self.rows {
            t.push_f64(&[
                r.t,
                r.eta_u,
                r.eta_b,
                r.ceiling,
                r.defect,
                r.c_of_t,
                r.e_norm_u,
                r.e_norm_sq,
            ]);
        }
        t
    }

    pub fn row_at(&self, t: f64) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| (r.t - t).abs() < 1e-9)
    }
}

fn rate(est: &DecayEstimate) -> f64 {
    if est.super_polynomial {
        f64::INFINITY
    } else {
        est.eta
    }
}

/// Pointwise envelope rate over the configured range.
pub fn measured_envelope(f: &VectorField, range: (f64, f64)) -> Result<f64> {
    Ok(rate(&envelope_exponent(f, range.0, range.1)?))
}

/// Shell-L² rate over the configured range.
pub fn measured_rate(f: &VectorField, range: (f64, f64)) -> Result<f64> {
    Ok(rate(&decay_rate_estimate(f, range.0, range.1)?))
}

/// `min{d + 1; 2 eta1 - delta}` with `B0 in L^inf_{eta1}` (so `delta = 0`).
pub fn ceiling(d: usize, eta1: f64) -> Result<f64> {
    let cap = d as f64 + 1.0;
    if eta1.is_infinite() {
        return Ok(cap);
    }
    let idx = MhdIndices::new(d, f64::INFINITY, 0.0, f64::INFINITY, eta1)?;
    Ok(cap.min(2.0 * idx.eta1() - idx.delta()))
}

fn check_times(cfg: &ExperimentConfig) -> Result<()> {
    for &t in &cfg.times {
        let k = t / cfg.solver.dt;
        if (k - k.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "report time {t} is not a multiple of the macro step"
            )));
        }
    }
    Ok(())
}

/// Evolves `(u0, b0)` and measures every report time.
pub fn run_experiment(
    label: &str,
    u0: &VectorField,
    b0: &VectorField,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let horizon = cfg.times.iter().copied().fold(0.0, f64::max);
    let solver = SolverConfig {
        horizon,
        ..cfg.solver
    };
    check_times(cfg)?;
    let traj = Engine::new(&cfg.grid, &solver)?.solve(u0, b0)?;
    let d = cfg.grid.d();
    let eta1 = measured_envelope(b0, cfg.fit_range)?;
    let cap = ceiling(d, eta1)?;
    let mut warnings = traj.warnings.clone();
    let mut rows = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let s = traj.at(t);
        let mm = moment_matrix(s);
        if let Some(w) = &mm.warning {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        let sq =
            s.u.magnitude()
                .mul(&s.u.magnitude())
                .add(&s.b.magnitude().mul(&s.b.magnitude()));
        rows.push(ExperimentRow {
            t,
            eta_u: measured_rate(&s.u, cfg.fit_range)?,
            eta_b: measured_rate(&s.b, cfg.fit_range)?,
            ceiling: cap,
            defect: mm.defect,
            c_of_t: mm.diagonal_mean(),
            e_norm_u: e_norm(&s.u).value(),
            e_norm_sq: e_norm(&sq).value(),
            far_mass: far_shell_mass(&s.u),
        });
    }
    Ok(ExperimentReport {
        label: label.to_string(),
        rows,
        warnings,
        trajectory: traj,
    })
}

/// Evolves generated `u0` with `B0 = 0`.
pub fn spreading_experiment(spec: &DataSpec, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let u0 = make_divfree(&cfg.grid, spec)?;
    run_experiment("spread", &u0, &VectorField::zeros(cfg.grid), cfg)
}

/// Rapidly decaying anisotropic `u0` with `B0` decaying like `|x|^{-eta1}`
/// outside the narrowest core width the grid resolves.
pub fn slow_field_experiment(
    eta1: f64,
    amplitude: f64,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let u0 = make_divfree(&cfg.grid, &DataSpec::dipole(amplitude))?;
    let aspect = 1.5;
    let b_spec = DataSpec {
        aspect,
        width: (MIN_ALGEBRAIC_WIDTH * cfg.grid.spacing() * aspect).max(1.0),
        ..DataSpec::stream_bump(eta1, amplitude)
    };
    let b0 = make_divfree(&cfg.grid, &b_spec)?;
    run_experiment("slow-B", &u0, &b0, cfg)
}

/// Fitted pointwise exponents of `u(t)` for cyclic data.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub order: usize,
    /// Amplitude of the asymmetric perturbation relative to `max |u0|`.
    pub perturbation: f64,
    /// `(t, exponent)` at `t = 0.25` and `t = 0.5`.
    pub exponents: Vec<(f64, DecayEstimate)>,
    pub report: ExperimentReport,
}

/// Evolves cyclic data of order `n` (plus an asymmetric dipole of relative
/// size `perturbation`) with `B0 = 0` and fits the pointwise envelope of
/// `u(t)` over the configured range.
pub fn symmetry_decay_experiment(
    n: usize,
    amplitude: f64,
    perturbation: f64,
    cfg: &ExperimentConfig,
) -> Result<SymmetryReport> {
    let g = cfg.grid;
    let mut u0 = make_cyclic(&g, n, CYCLIC_SWIRL)?.scale(amplitude);
    if perturbation != 0.0 {
        let bump = make_divfree(&g, &DataSpec::dipole(1.0))?;
        let s = perturbation * u0.max_abs() / bump.max_abs();
        let shifted = shift_field(&bump, [0.7, 0.3]);
        u0 = u0.add(&shifted.scale(s));
    }
    let report = run_experiment(&format!("symmetry-{n}"), &u0, &VectorField::zeros(g), cfg)?;
    let mut exponents = Vec::new();
    for t in [0.25, 0.5] {
        if cfg.times.iter().any(|&s| (s - t).abs() < 1e-9) {
            let s = report.trajectory.at(t);
            exponents.push((
                t,
                envelope_exponent(&s.u, cfg.fit_range.0, cfg.fit_range.1)?,
            ));
        }
    }
    Ok(SymmetryReport {
        order: n,
        perturbation,
        exponents,
        report,
    })
}

/// `f(x - c)` for a shift by whole grid cells nearest to `c`.
fn shift_field(f: &VectorField, c: [f64; 2]) -> VectorField {
    let g = *f.grid();
    let h = g.spacing();
    let (s0, s1) = ((c[0] / h).round() as i64, (c[1] / h).round() as i64);
    let n = g.n() as i64;
    let comps = f
        .components()
        .iter()
        .map(|comp| {
            let v = comp.values();
            ScalarField::from_raw(
                g,
                par::map_collect(g.len(), |i| {
                    let idx = g.unravel(i);
                    let (a, b) = (idx[0] as i64 - s0, idx[1] as i64 - s1);
                    if a < 0 || b < 0 || a >= n || b >= n {
                        0.0
                    } else {
                        v[g.ravel([a as usize, b as usize, 0])]
                    }
                }),
            )
        })
        .collect();
    VectorField::new(comps).expect("components share the grid")
}

/// E-norms of `u` and of `|u|^2 + |B|^2` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EMembership {
    /// `(t, E(u), E(|u|^2 + |B|^2))`.
    pub rows: Vec<(f64, f64, f64)>,
    pub sup_u: f64,
    pub sup_sq: f64,
    /// Tail indicator of `u` at the last time.
    pub tail: Vec<(f64, f64)>,
    pub tail_to_zero: bool,
}

pub fn e_membership_report(traj: &Trajectory) -> EMembership {
    let rows: Vec<(f64, f64, f64)> = traj
        .states
        .iter()
        .map(|s| {
            let mu = s.u.magnitude();
            let mb = s.b.magnitude();
            let sq = mu.mul(&mu).add(&mb.mul(&mb));
            (s.t, e_norm(&s.u).value(), e_norm(&sq).value())
        })
        .collect();
    let tail = tail_indicator(&traj.last().u);
    EMembership {
        sup_u: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        sup_sq: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        tail_to_zero: tail_trends_to_zero(&tail),
        tail,
        rows,
    }
}
