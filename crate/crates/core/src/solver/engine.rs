use num_complex::Complex64;

use super::quadrature::{collocation_weights, gauss_legendre, lagrange_monomials};
use super::{MhdState, PicardSeed, SolverConfig, StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::field::{
    dealias_keep, divergence, forward_many, inverse_many, leray_project_spectra, VectorField,
};
use crate::grid::GridSpec;
use crate::kernels::heat_exponent;
use crate::par;

pub(crate) type Spectra = Vec<Vec<Complex64>>;

/// Relative residual below which a growing residual is rounding noise.
const ROUNDING_FLOOR: f64 = 1e-13;

/// Per-mode heat factors `e^{-c_r z}` and collocation weights
/// `dt W_m(c_r, z)`, rows `r` = nodes then the step end.
#[derive(Debug, Clone)]
struct Tables {
    rows: usize,
    q: usize,
    heat: Vec<f64>,
    weights: Vec<f64>,
}

impl Tables {
    fn new(grid: &GridSpec, nodes: &[f64], dt: f64, nu: f64) -> Self {
        let q = nodes.len();
        let rows = q + 1;
        let coef = lagrange_monomials(nodes);
        let cs: Vec<f64> = nodes.iter().copied().chain(std::iter::once(1.0)).collect();
        let g = *grid;
        let mut heat = vec![0.0; g.len() * rows];
        par::for_each_chunk_mut(&mut heat, rows, |i, c| {
            let z = nu * dt * heat_exponent(&g, i);
            for (r, v) in c.iter_mut().enumerate() {
                *v = (-cs[r] * z).exp();
            }
        });
        let mut weights = vec![0.0; g.len() * rows * q];
        par::for_each_chunk_mut(&mut weights, rows * q, |i, c| {
            let z = nu * dt * heat_exponent(&g, i);
            for r in 0..rows {
                let w = collocation_weights(&coef, cs[r], z);
                for m in 0..q {
                    c[r * q + m] = dt * w[m];
                }
            }
        });
        Self {
            rows,
            q,
            heat,
            weights,
        }
    }

    /// `e^{-c_r z} s0 - sum_m dt W_m(c_r, z) n_m`.
    fn combine(&self, s0: &Spectra, nl: &[&Spectra], r: usize) -> Spectra {
        let (rows, q) = (self.rows, self.q);
        (0..s0.len())
            .map(|c| {
                par::map_collect(s0[c].len(), |i| {
                    let mut v = s0[c][i] * self.heat[i * rows + r];
                    let w = &self.weights[i * rows * q + r * q..i * rows * q + (r + 1) * q];
                    for m in 0..q {
                        v -= nl[m][c][i] * w[m];
                    }
                    v
                })
            })
            .collect()
    }

    fn heat_row(&self, s0: &Spectra, r: usize) -> Spectra {
        let rows = self.rows;
        s0.iter()
            .map(|s| par::map_collect(s.len(), |i| s[i] * self.heat[i * rows + r]))
            .collect()
    }
}

/// Macro-step integrator on the padded grid of a base grid.
#[derive(Debug, Clone)]
pub struct Engine {
    base: GridSpec,
    grid: GridSpec,
    cfg: SolverConfig,
    dt: f64,
    steps: usize,
    window: Vec<f64>,
    keep: Vec<bool>,
    tab_u: Tables,
    tab_b: Option<Tables>,
}

/// `1` for `r <= 0.8 L`, `cos^2` roll-off to `0` at `r = L`.
fn window(r: f64, half_extent: f64) -> f64 {
    let inner = 0.8 * half_extent;
    if r <= inner {
        1.0
    } else if r >= half_extent {
        0.0
    } else {
        let s = (r - inner) / (half_extent - inner);
        (0.5 * std::f64::consts::PI * s).cos().powi(2)
    }
}

impl Engine {
    pub fn new(base: &GridSpec, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = base.padded();
        let (steps, dt) = cfg.steps();
        let (nodes, _) = gauss_legendre(cfg.quad_nodes);
        let nu_u = 1.0 / cfg.re;
        let nu_b = 1.0 / cfg.rm;
        let tab_u = Tables::new(&grid, &nodes, dt, nu_u);
        let tab_b = (nu_b != nu_u).then(|| Tables::new(&grid, &nodes, dt, nu_b));
        let l = base.half_extent();
        let window = par::map_collect(grid.len(), |i| window(grid.radius(i), l));
        let keep = par::map_collect(grid.len(), |i| dealias_keep(&grid, i));
        Ok(Self {
            base: *base,
            grid,
            cfg: *cfg,
            dt,
            steps,
            window,
            keep,
            tab_u,
            tab_b,
        })
    }

    pub fn base_grid(&self) -> &GridSpec {
        &self.base
    }

    /// The padded grid the fields evolve on.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Step actually taken and the number of steps to the horizon.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn tab_b(&self) -> &Tables {
        self.tab_b.as_ref().unwrap_or(&self.tab_u)
    }

    /// Pads a base-grid field and projects it onto divergence-free fields of
    /// the padded box.
    pub(crate) fn lift(&self, f: &VectorField) -> Result<Spectra> {
        if f.grid() != &self.base {
            return Err(Error::GridMismatch(
                "field is not on the solver's base grid".into(),
            ));
        }
        let mut s = f.pad().spectra();
        leray_project_spectra(&self.grid, &mut s);
        Ok(s)
    }

    pub(crate) fn lower(&self, s: &Spectra) -> VectorField {
        VectorField::from_spectra(self.grid, s)
            .restrict(&self.base)
            .expect("padded grid of the base grid")
    }

    pub(crate) fn padded_field(&self, s: &Spectra) -> VectorField {
        VectorField::from_spectra(self.grid, s)
    }

    fn truncated(&self, s: &Spectra) -> Spectra {
        s.iter()
            .map(|c| {
                par::map_collect(c.len(), |i| {
                    if self.keep[i] {
                        c[i]
                    } else {
                        Complex64::default()
                    }
                })
            })
            .collect()
    }

    /// Spectra of `P div(u (x) u - S B (x) B)` and, with `b`, of
    /// `div(u (x) B - B (x) u)`, from 2/3-truncated factors, windowed.
    pub(crate) fn nonlinear(&self, u: &Spectra, b: Option<&Spectra>) -> (Spectra, Option<Spectra>) {
        let g = self.grid;
        let d = g.d();
        let len = g.len();
        let s = self.cfg.s;
        let w = &self.window;
        let keep = &self.keep;
        let uph = inverse_many(&g, &self.truncated(u));
        let bph = b.map(|b| inverse_many(&g, &self.truncated(b)));

        let mut pairs = Vec::new();
        for j in 0..d {
            for h in j..d {
                pairs.push((j, h));
            }
        }
        let sym: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(j, h)| {
                par::map_collect(len, |i| {
                    let mut v = uph[j][i] * uph[h][i];
                    if let Some(bp) = &bph {
                        v -= s * bp[j][i] * bp[h][i];
                    }
                    v * w[i]
                })
            })
            .collect();
        let sym_hat = forward_many(&g, sym.iter().map(|v| v.as_slice()).collect());
        let slot = |j: usize, h: usize| {
            let (a, b) = if j <= h { (j, h) } else { (h, j) };
            pairs
                .iter()
                .position(|&p| p == (a, b))
                .expect("pair listed")
        };
        let mut nu: Spectra = (0..d)
            .map(|j| {
                let slots: Vec<usize> = (0..d).map(|h| slot(j, h)).collect();
                par::map_collect(len, |i| {
                    if !keep[i] {
                        return Complex64::default();
                    }
                    let xi = g.derivative_frequency(i);
                    let mut acc = Complex64::default();
                    for h in 0..d {
                        acc += Complex64::new(0.0, xi[h]) * sym_hat[slots[h]][i];
                    }
                    acc
                })
            })
            .collect();
        leray_project_spectra(&g, &mut nu);

        let nb = bph.map(|bp| {
            let mut anti_pairs = Vec::new();
            for j in 0..d {
                for k in j + 1..d {
                    anti_pairs.push((j, k));
                }
            }
            let anti: Vec<Vec<f64>> = anti_pairs
                .iter()
                .map(|&(j, k)| {
                    par::map_collect(len, |i| {
                        (uph[j][i] * bp[k][i] - bp[j][i] * uph[k][i]) * w[i]
                    })
                })
                .collect();
            let anti_hat = forward_many(&g, anti.iter().map(|v| v.as_slice()).collect());
            (0..d)
                .map(|k| {
                    par::map_collect(len, |i| {
                        if !keep[i] {
                            return Complex64::default();
                        }
                        let xi = g.derivative_frequency(i);
                        let mut acc = Complex64::default();
                        for (a, &(j, kk)) in anti_pairs.iter().enumerate() {
                            if kk == k {
                                acc += Complex64::new(0.0, xi[j]) * anti_hat[a][i];
                            } else if j == k {
                                acc -= Complex64::new(0.0, xi[kk]) * anti_hat[a][i];
                            }
                        }
                        acc
                    })
                })
                .collect()
        });
        (nu, nb)
    }
}

fn sq_norm(s: &Spectra) -> f64 {
    s.iter()
        .map(|c| par::sum(c.len(), |i| c[i].norm_sqr()))
        .sum()
}

fn sq_diff(a: &Spectra, b: &Spectra) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| par::sum(x.len(), |i| (x[i] - y[i]).norm_sqr()))
        .sum()
}

fn zeros_like(s: &Spectra) -> Spectra {
    s.iter()
        .map(|c| vec![Complex64::default(); c.len()])
        .collect()
}

impl Engine {
    /// One macro step from `(u0, b0)` at time `t`.
    pub(crate) fn step_spectra(
        &self,
        u0: &Spectra,
        b0: &Spectra,
        t: f64,
    ) -> Result<(Spectra, Spectra, StepRecord)> {
        let q = self.tab_u.q;
        let mag = self.cfg.magnetic;
        let tab_b = self.tab_b();
        let (mut un, mut bn): (Vec<Spectra>, Vec<Spectra>) = match self.cfg.seed {
            PicardSeed::Heat => (
                (0..q).map(|r| self.tab_u.heat_row(u0, r)).collect(),
                (0..q).map(|r| tab_b.heat_row(b0, r)).collect(),
            ),
            PicardSeed::Zero => (vec![zeros_like(u0); q], vec![zeros_like(b0); q]),
        };
        let mut residuals = Vec::new();
        let mut converged = false;
        let mut nl_u: Vec<Spectra> = Vec::new();
        let mut nl_b: Vec<Spectra> = Vec::new();
        for _ in 0..self.cfg.picard_max {
            let nl: Vec<(Spectra, Option<Spectra>)> = (0..q)
                .map(|m| self.nonlinear(&un[m], mag.then_some(&bn[m])))
                .collect();
            nl_u = nl.iter().map(|p| p.0.clone()).collect();
            nl_b = nl
                .into_iter()
                .map(|p| p.1.unwrap_or_else(|| zeros_like(b0)))
                .collect();
            let ru: Vec<&Spectra> = nl_u.iter().collect();
            let rb: Vec<&Spectra> = nl_b.iter().collect();
            let new_u: Vec<Spectra> = (0..q).map(|r| self.tab_u.combine(u0, &ru, r)).collect();
            let new_b: Vec<Spectra> = if mag {
                (0..q).map(|r| tab_b.combine(b0, &rb, r)).collect()
            } else {
                bn.clone()
            };
            let mut diff = 0.0;
            let mut norm = 0.0;
            for r in 0..q {
                diff += sq_diff(&new_u[r], &un[r]) + sq_diff(&new_b[r], &bn[r]);
                norm += sq_norm(&new_u[r]) + sq_norm(&new_b[r]);
            }
            let res = if norm > 0.0 {
                (diff / norm).sqrt()
            } else {
                diff.sqrt()
            };
            un = new_u;
            bn = new_b;
            residuals.push(res);
            if res <= self.cfg.tol {
                converged = true;
                break;
            }
            if residuals.len() >= 2 {
                let ratio = res / residuals[residuals.len() - 2];
                if ratio >= 1.0 && res > ROUNDING_FLOOR {
                    return Err(Error::NonContraction { t, ratio });
                }
            }
        }
        let ru: Vec<&Spectra> = nl_u.iter().collect();
        let rb: Vec<&Spectra> = nl_b.iter().collect();
        let u1 = self.tab_u.combine(u0, &ru, q);
        let b1 = if mag {
            tab_b.combine(b0, &rb, q)
        } else {
            b0.clone()
        };
        let contraction = contraction_factor(&residuals);
        Ok((
            u1,
            b1,
            StepRecord {
                residuals,
                converged,
                contraction,
            },
        ))
    }

    /// `1/2 int |u|^2 + S |B|^2` over the padded box.
    pub(crate) fn energy(&self, u: &Spectra, b: &Spectra) -> f64 {
        let g = self.grid;
        let scale = g.cell_volume() / g.len() as f64;
        0.5 * scale * (sq_norm(u) + self.cfg.s * sq_norm(b))
    }

    /// `||div f||` on the padded box, in the units of `||f||`.
    pub(crate) fn div_norm(&self, s: &Spectra) -> f64 {
        let g = self.grid;
        let d = g.d();
        let total = par::sum(g.len(), |i| {
            let xi = g.derivative_frequency(i);
            let mut acc = Complex64::default();
            for j in 0..d {
                acc += Complex64::new(0.0, xi[j]) * s[j][i];
            }
            acc.norm_sqr()
        });
        (total * g.cell_volume() / g.len() as f64).sqrt()
    }

    pub(crate) fn l2_norm(&self, s: &Spectra) -> f64 {
        let g = self.grid;
        (sq_norm(s) * g.cell_volume() / g.len() as f64).sqrt()
    }

    /// Advances a base-grid state by one macro step.
    pub fn advance(&self, state: &MhdState) -> Result<(MhdState, StepRecord)> {
        let u0 = self.lift(&state.u)?;
        let b0 = self.lift(&state.b)?;
        let (u1, b1, rec) = self.step_spectra(&u0, &b0, state.t)?;
        Ok((
            MhdState {
                u: self.lower(&u1),
                b: self.lower(&b1),
                t: state.t + self.dt,
            },
            rec,
        ))
    }
}

/// Geometric mean of successive residual ratios above the rounding floor.
fn contraction_factor(res: &[f64]) -> f64 {
    let ratios: Vec<f64> = res
        .windows(2)
        .filter(|w| w[0] > ROUNDING_FLOOR && w[1] > 0.0)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    if ratios.is_empty() {
        0.0
    } else {
        (ratios.iter().sum::<f64>() / ratios.len() as f64).exp()
    }
}

/// Fraction of the L^1 mass of `f` inside `|x| <= r`.
fn l1_fraction_inside(f: &VectorField, r: f64) -> f64 {
    let g = *f.grid();
    let m = f.magnitude();
    let v = m.values();
    let total = par::sum(g.len(), |i| v[i]);
    if total == 0.0 {
        return 1.0;
    }
    par::sum(g.len(), |i| if g.radius(i) <= r { v[i] } else { 0.0 }) / total
}

/// Fraction of the squared L^2 mass of `f` at `|x| >= r`.
fn l2_fraction_outside(f: &VectorField, r: f64) -> f64 {
    let g = *f.grid();
    let m = f.magnitude();
    let v = m.values();
    let total = par::sum(g.len(), |i| v[i] * v[i]);
    if total == 0.0 {
        return 0.0;
    }
    par::sum(
        g.len(),
        |i| if g.radius(i) >= r { v[i] * v[i] } else { 0.0 },
    ) / total
}

impl Engine {
    /// Evolves `(u0, b0)` to the configured horizon.
    pub fn solve(&self, u0: &VectorField, b0: &VectorField) -> Result<Trajectory> {
        let base = self.base;
        if b0.grid() != &base {
            return Err(Error::GridMismatch(
                "u0 and B0 live on different grids".into(),
            ));
        }
        let scale = u0.l2_norm() + b0.l2_norm();
        for (name, f) in [("u0", u0), ("B0", b0)] {
            let div = divergence(f).l2_norm();
            if div > 1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidArgument(format!(
                    "div {name} = {div:.3e} exceeds 1e-8 (||u0|| + ||B0||)"
                )));
            }
        }
        let mut warnings = Vec::new();
        let l = base.half_extent();
        for (name, f) in [("u0", u0), ("B0", b0)] {
            let inside = l1_fraction_inside(f, 0.25 * l);
            if inside < 0.9999 {
                warnings.push(format!(
                    "support guard: {name} has {:.4}% of its L1 mass outside |x| <= L/4",
                    100.0 * (1.0 - inside)
                ));
            }
        }
        let mut u = self.lift(u0)?;
        let mut b = if self.cfg.magnetic {
            self.lift(b0)?
        } else {
            zeros_like(&u)
        };
        let mut t = 0.0;
        let mut traj = Trajectory {
            states: Vec::with_capacity(self.steps + 1),
            steps: Vec::with_capacity(self.steps),
            energy: Vec::new(),
            div_u: Vec::new(),
            div_b: Vec::new(),
            warnings,
        };
        let mut far_warned = false;
        for k in 0..=self.steps {
            if k > 0 {
                let (u1, b1, rec) = self.step_spectra(&u, &b, t)?;
                u = u1;
                b = b1;
                t = k as f64 * self.dt;
                traj.steps.push(rec);
            }
            let norm = self.l2_norm(&u) + self.l2_norm(&b);
            let rel = |x: f64| if norm > 0.0 { x / norm } else { x };
            traj.energy.push(self.energy(&u, &b));
            traj.div_u.push(rel(self.div_norm(&u)));
            traj.div_b.push(rel(self.div_norm(&b)));
            let state = MhdState {
                u: self.lower(&u),
                b: self.lower(&b),
                t,
            };
            if k > 0 && !far_warned {
                let far = l2_fraction_outside(&self.padded_field(&u), 0.5 * l)
                    .max(l2_fraction_outside(&self.padded_field(&b), 0.5 * l));
                if far > 1e-8 {
                    traj.warnings.push(format!(
                        "support guard: relative mass {far:.3e} at |x| >= L/2 at t = {t}"
                    ));
                    far_warned = true;
                }
            }
            traj.states.push(state);
        }
        Ok(traj)
    }
}

/// Evolves `(u0, b0)` with Picard iteration inside each macro step.
pub fn picard_solve(u0: &VectorField, b0: &VectorField, cfg: &SolverConfig) -> Result<Trajectory> {
    Engine::new(u0.grid(), cfg)?.solve(u0, b0)
}

/// One macro step of length `dt` from a base-grid state.
pub fn step_duhamel(
    state: &MhdState,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(MhdState, StepRecord)> {
    let cfg = SolverConfig {
        dt,
        horizon: dt,
        ..*cfg
    };
    Engine::new(state.grid(), &cfg)?.advance(state)
}
