//! Sampled fields, spectral transforms, differential operators, the Leray
//! projector and the heat semigroup.
//!
//! Fourier convention: `f^(xi) = \int f(x) e^{-i x.xi} dx`, so a derivative
//! `d_h` is the multiplier `i xi_h`. All spectral operators here are
//! periodic on the grid's box; free-space behaviour is recovered by the
//! zero-padded routines in [`crate::convolution`] and [`crate::solver`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::GridSpec;
use crate::par;

/// Real samples of a scalar function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

/// `d` scalar components sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<ScalarField>,
}

/// Fourier coefficients in FFT index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
}

impl ScalarField {
    /// Checked constructor: length must match and every value be finite.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    /// Sample `f(x)` at every grid point.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let values = par::map_collect(grid.len(), |i| f(grid.point(i)));
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64 + Sync + Send>(&self, f: F) -> Self {
        let v = &self.values;
        Self::from_raw(self.grid, par::map_collect(v.len(), |i| f(v[i])))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (&self.values, &other.values);
        Self::from_raw(self.grid, par::map_collect(a.len(), |i| a[i] + b[i]))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (a, b) = (&self.values, &other.values);
        Self::from_raw(self.grid, par::map_collect(a.len(), |i| a[i] - b[i]))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (&self.values, &other.values);
        Self::from_raw(self.grid, par::map_collect(a.len(), |i| a[i] * b[i]))
    }

    /// Grid inner product `h^d sum f g`.
    pub fn inner(&self, other: &Self) -> f64 {
        let (a, b) = (&self.values, &other.values);
        par::sum(a.len(), |i| a[i] * b[i]) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let v = &self.values;
        par::max(v.len(), |i| v[i].abs())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Embed into the padded grid (same spacing, twice the extent), zero
    /// outside the original box.
    pub fn pad(&self) -> ScalarField {
        let p = self.grid.padded();
        let mut out = vec![0.0; p.len()];
        for (i, v) in self.values.iter().enumerate() {
            out[self.grid.to_padded_index(i)] = *v;
        }
        ScalarField::from_raw(p, out)
    }

    /// Restrict a padded-grid field back to `base` (inverse of [`pad`]).
    ///
    /// [`pad`]: ScalarField::pad
    pub fn restrict(&self, base: &GridSpec) -> Result<ScalarField> {
        if base.padded() != self.grid {
            return Err(Error::GridMismatch(
                "field is not on the padded grid of the requested base".into(),
            ));
        }
        let v = &self.values;
        Ok(ScalarField::from_raw(
            *base,
            par::map_collect(base.len(), |i| v[base.to_padded_index(i)]),
        ))
    }

    pub fn spectrum(&self) -> SpectralField {
        SpectralField::from_real(self)
    }
}

impl SpectralField {
    pub fn from_real(f: &ScalarField) -> Self {
        let plan = fft::plan(f.grid.d(), f.grid.n());
        Self {
            grid: f.grid,
            coefficients: plan.forward_real(&f.values),
        }
    }

    pub fn from_coefficients(grid: GridSpec, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::GridMismatch(
                "coefficient count does not match grid".into(),
            ));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Real part of the inverse transform.
    pub fn to_real(&self) -> ScalarField {
        let plan = fft::plan(self.grid.d(), self.grid.n());
        ScalarField::from_raw(self.grid, plan.inverse_real(&self.coefficients))
    }

    /// Multiply every coefficient by `e^{-t|xi|^2}`.
    pub fn heat(&self, t: f64) -> Result<Self> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let mut out = self.clone();
        if t == 0.0 {
            return Ok(out);
        }
        let g = self.grid;
        par::for_each_indexed_mut(&mut out.coefficients, |i, c| {
            let xi = g.frequency(i);
            *c *= (-t * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])).exp();
        });
        Ok(out)
    }
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidArgument(
                "vector field needs components".into(),
            ));
        };
        let grid = first.grid;
        if components.len() != grid.d() {
            return Err(Error::GridMismatch(format!(
                "{} components for dimension {}",
                components.len(),
                grid.d()
            )));
        }
        if components.iter().any(|c| c.grid != grid) {
            return Err(Error::GridMismatch("components on different grids".into()));
        }
        Ok(Self { grid, components })
    }

    pub(crate) fn from_raw(grid: GridSpec, comps: Vec<Vec<f64>>) -> Self {
        Self {
            grid,
            components: comps
                .into_iter()
                .map(|v| ScalarField::from_raw(grid, v))
                .collect(),
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            components: (0..grid.d()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync + Send,
    {
        let comps = (0..grid.d())
            .map(|k| ScalarField::from_fn(grid, |x| f(x)[k]))
            .collect();
        Self {
            grid,
            components: comps,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &ScalarField {
        &self.components[k]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            grid: self.grid,
            components: self
                .components
                .iter()
                .zip(&o.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            grid: self.grid,
            components: self
                .components
                .iter()
                .zip(&o.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let comps = &self.components;
        ScalarField::from_raw(
            self.grid,
            par::map_collect(self.grid.len(), |i| {
                comps
                    .iter()
                    .map(|c| c.values[i] * c.values[i])
                    .sum::<f64>()
                    .sqrt()
            }),
        )
    }

    pub fn inner(&self, o: &Self) -> f64 {
        self.components
            .iter()
            .zip(&o.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn pad(&self) -> VectorField {
        VectorField {
            grid: self.grid.padded(),
            components: self.components.iter().map(|c| c.pad()).collect(),
        }
    }

    pub fn restrict(&self, base: &GridSpec) -> Result<VectorField> {
        Ok(VectorField {
            grid: *base,
            components: self
                .components
                .iter()
                .map(|c| c.restrict(base))
                .collect::<Result<_>>()?,
        })
    }

    /// Spectra of all components (pairs share one complex transform).
    pub fn spectra(&self) -> Vec<Vec<Complex64>> {
        forward_many(
            &self.grid,
            self.components.iter().map(|c| c.values()).collect(),
        )
    }

    /// Rebuild a real vector field from Hermitian component spectra.
    pub fn from_spectra(grid: GridSpec, spectra: &[Vec<Complex64>]) -> Self {
        Self::from_raw(grid, inverse_many(&grid, spectra))
    }
}

/// Forward transforms of several real arrays, two per complex FFT.
pub fn forward_many(grid: &GridSpec, fields: Vec<&[f64]>) -> Vec<Vec<Complex64>> {
    let plan = fft::plan(grid.d(), grid.n());
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        if pair.len() == 2 {
            let (a, b) = plan.forward_real_pair(pair[0], pair[1]);
            out.push(a);
            out.push(b);
        } else {
            out.push(plan.forward_real(pair[0]));
        }
    }
    out
}

/// Inverse transforms of several Hermitian spectra, two per complex FFT.
pub fn inverse_many(grid: &GridSpec, spectra: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    let plan = fft::plan(grid.d(), grid.n());
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        if pair.len() == 2 {
            let (a, b) = plan.inverse_real_pair(&pair[0], &pair[1]);
            out.push(a);
            out.push(b);
        } else {
            out.push(plan.inverse_real(&pair[0]));
        }
    }
    out
}

/// Spectral divergence `sum_j i xi_j f^_j`.
pub fn divergence(f: &VectorField) -> ScalarField {
    let g = *f.grid();
    let spectra = f.spectra();
    let div = par::map_collect(g.len(), |i| {
        let xi = g.derivative_frequency(i);
        let mut acc = Complex64::default();
        for (j, s) in spectra.iter().enumerate() {
            acc += Complex64::new(0.0, xi[j]) * s[i];
        }
        acc
    });
    ScalarField::from_raw(g, fft::plan(g.d(), g.n()).inverse_real(&div))
}

/// Spectral gradient of a scalar field.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let s = f.spectrum();
    let spectra: Vec<Vec<Complex64>> = (0..g.d())
        .map(|j| {
            par::map_collect(g.len(), |i| {
                Complex64::new(0.0, g.derivative_frequency(i)[j]) * s.coefficients[i]
            })
        })
        .collect();
    VectorField::from_spectra(g, &spectra)
}

/// Rotated gradient `(-d_2 psi, d_1 psi)` of a stream function (d = 2).
pub fn perp_gradient(psi: &ScalarField) -> Result<VectorField> {
    if psi.grid().d() != 2 {
        return Err(Error::InvalidArgument(
            "perp_gradient requires d = 2".into(),
        ));
    }
    let grad = gradient(psi);
    let mut comps = grad.into_components();
    let d2 = comps.pop().expect("two components");
    let d1 = comps.pop().expect("two components");
    VectorField::new(vec![d2.scale(-1.0), d1])
}

/// In-place Leray projection of component spectra:
/// `v^ <- v^ - xi (xi . v^) / |xi|^2`, zero frequency untouched.
pub fn leray_project_spectra(grid: &GridSpec, spectra: &mut [Vec<Complex64>]) {
    let d = grid.d();
    let g = *grid;
    let len = g.len();
    // Work column-wise: gather the d components of each mode.
    let projected: Vec<[Complex64; 3]> = {
        let s: &[Vec<Complex64>] = spectra;
        par::map_collect(len, |i| {
            let xi = g.derivative_frequency(i);
            let k2: f64 = xi[..d].iter().map(|x| x * x).sum();
            let mut v = [Complex64::default(); 3];
            for j in 0..d {
                v[j] = s[j][i];
            }
            if k2 > 0.0 {
                let mut dot = Complex64::default();
                for j in 0..d {
                    dot += v[j] * xi[j];
                }
                for j in 0..d {
                    v[j] -= dot * (xi[j] / k2);
                }
            }
            v
        })
    };
    for (j, s) in spectra.iter_mut().enumerate() {
        for (i, c) in s.iter_mut().enumerate() {
            *c = projected[i][j];
        }
    }
}

/// Leray-Hopf projection onto divergence-free fields.
pub fn leray_project(f: &VectorField) -> VectorField {
    let mut spectra = f.spectra();
    leray_project_spectra(f.grid(), &mut spectra);
    VectorField::from_spectra(*f.grid(), &spectra)
}

/// Fields the heat semigroup acts on.
pub trait HeatFlow: Sized {
    /// Apply `e^{t Delta}` (periodic on the field's box).
    fn heat_semigroup(&self, t: f64) -> Result<Self>;
}

impl HeatFlow for ScalarField {
    fn heat_semigroup(&self, t: f64) -> Result<Self> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.spectrum().heat(t)?.to_real())
    }
}

impl HeatFlow for VectorField {
    fn heat_semigroup(&self, t: f64) -> Result<Self> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        let g = *self.grid();
        let mut spectra = self.spectra();
        for s in spectra.iter_mut() {
            par::for_each_indexed_mut(s, |i, c| {
                let xi = g.frequency(i);
                *c *= (-t * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])).exp();
            });
        }
        Ok(VectorField::from_spectra(g, &spectra))
    }
}

impl HeatFlow for SpectralField {
    fn heat_semigroup(&self, t: f64) -> Result<Self> {
        self.heat(t)
    }
}

/// Whether mode `flat` survives 2/3-rule truncation (every axis
/// `|k| <= n/3`).
#[inline]
pub fn dealias_keep(grid: &GridSpec, flat: usize) -> bool {
    let idx = grid.unravel(flat);
    let cut = (grid.n() / 3) as i64;
    (0..grid.d()).all(|a| grid.signed_mode(idx[a]).abs() <= cut)
}

/// Zero the top third of modes in place.
pub fn dealias(grid: &GridSpec, spectrum: &mut [Complex64]) {
    let g = *grid;
    par::for_each_indexed_mut(spectrum, |i, c| {
        if !dealias_keep(&g, i) {
            *c = Complex64::default();
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid2(n: usize, l: f64) -> GridSpec {
        GridSpec::new(2, n, l).unwrap()
    }

    fn smooth_random(g: GridSpec, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<([f64; 3], [f64; 3])> = (0..6)
            .map(|_| {
                (
                    [
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ],
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ],
                )
            })
            .collect();
        VectorField::from_fn(g, move |x| {
            let mut v = [0.0; 3];
            for (c, a) in &centers {
                let r2: f64 = (0..3).map(|k| (x[k] - c[k]).powi(2)).sum();
                let w = (-r2).exp();
                for k in 0..3 {
                    v[k] += a[k] * w;
                }
            }
            v
        })
    }

    #[test]
    fn round_trip_is_exact_to_rounding() {
        let g = grid2(64, 4.0);
        let f = smooth_random(g, 1);
        let c = f.component(0);
        let back = c.spectrum().to_real();
        let err = c.sub(&back).max_abs();
        assert!(err <= 1e-12 * c.max_abs());
    }

    #[test]
    fn divergence_of_constant_and_perp_gradient_vanish() {
        let g = grid2(64, 8.0);
        let c = VectorField::from_fn(g, |_| [2.0, -1.0, 0.0]);
        assert!(divergence(&c).max_abs() < 1e-12);
        let psi = ScalarField::from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() * x[0]);
        let u = perp_gradient(&psi).unwrap();
        assert!(divergence(&u).max_abs() < 1e-10);
    }

    #[test]
    fn divergence_matches_closed_form() {
        // f = (x1 w, 0), w = exp(-|x|^2) => div f = w + x1 d1 w = w (1 - 2 x1^2)
        let g = grid2(128, 8.0);
        let f = VectorField::from_fn(g, |x| {
            let w = (-(x[0] * x[0] + x[1] * x[1])).exp();
            [x[0] * w, 0.0, 0.0]
        });
        let div = divergence(&f);
        let exact = ScalarField::from_fn(g, |x| {
            let w = (-(x[0] * x[0] + x[1] * x[1])).exp();
            w * (1.0 - 2.0 * x[0] * x[0])
        });
        for i in 0..g.len() {
            if g.radius(i) < 4.0 {
                assert!((div.values()[i] - exact.values()[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn leray_kills_gradients_and_fixes_solenoidal_fields() {
        let g = grid2(64, 8.0);
        let q = ScalarField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp());
        let grad = gradient(&q);
        assert!(leray_project(&grad).l2_norm() <= 1e-10 * grad.l2_norm());

        let psi = ScalarField::from_fn(g, |x| (-(x[0] - 0.5).powi(2) - x[1] * x[1]).exp());
        let u = perp_gradient(&psi).unwrap();
        assert!(leray_project(&u).sub(&u).l2_norm() <= 1e-10 * u.l2_norm());
    }

    #[test]
    fn leray_is_idempotent_self_adjoint_and_solenoidal() {
        let g = GridSpec::new(3, 16, 4.0).unwrap();
        let f = smooth_random(g, 2);
        let w = smooth_random(g, 3);
        let pf = leray_project(&f);
        let ppf = leray_project(&pf);
        assert!(ppf.sub(&pf).l2_norm() <= 1e-12 * pf.l2_norm());
        let lhs = pf.inner(&w);
        let rhs = f.inner(&leray_project(&w));
        assert!((lhs - rhs).abs() <= 1e-10 * f.l2_norm() * w.l2_norm());
        assert!(divergence(&pf).l2_norm() <= 1e-10 * f.l2_norm());
    }

    #[test]
    fn heat_identity_mean_and_semigroup() {
        let g = grid2(64, 8.0);
        let f = smooth_random(g, 4).component(0).clone();
        let s = f.spectrum();
        assert_eq!(s.heat(0.0).unwrap(), s);
        let h = s.heat(0.7).unwrap();
        assert_eq!(h.coefficients()[0], s.coefficients()[0]);
        let two = s.heat(0.3).unwrap().heat(0.4).unwrap();
        for (a, b) in two.coefficients().iter().zip(h.coefficients()) {
            assert!((a - b).norm() <= 1e-15 * (1.0 + b.norm()));
        }
        assert!(f.heat_semigroup(-1.0).is_err());
    }

    #[test]
    fn heat_spreads_gaussian_variance() {
        let g = grid2(128, 16.0);
        let gauss = |var: f64| {
            ScalarField::from_fn(g, move |x| {
                (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * var)).exp()
                    / (2.0 * std::f64::consts::PI * var)
            })
        };
        let t = 0.75;
        let out = gauss(1.0).heat_semigroup(t).unwrap();
        let exact = gauss(1.0 + 2.0 * t);
        assert!(out.sub(&exact).l2_norm() / exact.l2_norm() < 1e-6);
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let g = grid2(48usize.next_power_of_two(), 1.0);
        assert!(dealias_keep(&g, 0));
        let idx = g.ravel([g.n() / 2, 0, 0]);
        assert!(!dealias_keep(&g, idx));
    }
}
