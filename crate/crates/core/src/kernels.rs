//! Kernels of the operators `e^{t Delta} P grad` (family F) and
//! `e^{t Delta} grad` (family G), sampled by inverse DFT of the exact symbol
//! on the zero-padding grid, and the pointwise bound measurements.
//!
//! Index convention (0-based `j, h, k`): the bilinear operators contract
//! kernel component `(j, h, k)` with the product `f^j g^h` and produce
//! output component `k`.
//!
//! - F: `i xi_h e^{-t|xi|^2} (delta_jk - xi_j xi_k / |xi|^2)`, so that
//!   `U(f, g) = P div(g (x) f)` integrated against the heat flow.
//! - G: `i xi_j e^{-t|xi|^2} delta_hk`, so that `B^k(f, g) = d_j (f^j g^k)`
//!   and `B(u, B) - B(B, u)` is the induction nonlinearity of the
//!   integral equations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{inverse_many, ScalarField};
use crate::grid::GridSpec;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// Oseen-type kernel of `e^{t Delta} P grad`.
    F,
    /// Heat-gradient kernel of `e^{t Delta} grad`.
    G,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::F => "kernelF",
            KernelFamily::G => "kernelG",
        }
    }
}

/// `i xi_h e^{-t|xi|^2} (delta_jk - xi_j xi_k |xi|^{-2})`, zero at `xi = 0`.
pub fn oseen_symbol(xi: &[f64], t: f64, j: usize, h: usize, k: usize) -> Complex64 {
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    if k2 == 0.0 {
        return Complex64::default();
    }
    let proj = if j == k { 1.0 } else { 0.0 } - xi[j] * xi[k] / k2;
    Complex64::new(0.0, xi[h] * (-t * k2).exp() * proj)
}

/// `i xi_j e^{-t|xi|^2} delta_hk`.
pub fn heat_gradient_symbol(xi: &[f64], t: f64, j: usize, h: usize, k: usize) -> Complex64 {
    if h != k {
        return Complex64::default();
    }
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    Complex64::new(0.0, xi[j] * (-t * k2).exp())
}

/// Multiplier of kernel component `(j, h, k)` at FFT index `flat` of `grid`,
/// without the heat factor.
///
/// Odd factors use the Nyquist-zeroed frequency so the multiplier is
/// Hermitian and real fields stay real.
#[inline]
pub fn multiplier(
    family: KernelFamily,
    grid: &GridSpec,
    flat: usize,
    j: usize,
    h: usize,
    k: usize,
) -> Complex64 {
    let xi = grid.derivative_frequency(flat);
    let d = grid.d();
    match family {
        KernelFamily::F => oseen_symbol(&xi[..d], 0.0, j, h, k),
        KernelFamily::G => heat_gradient_symbol(&xi[..d], 0.0, j, h, k),
    }
}

/// `|xi|^2` used by the heat factor at FFT index `flat`.
#[inline]
pub fn heat_exponent(grid: &GridSpec, flat: usize) -> f64 {
    let xi = grid.frequency(flat);
    xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
}

/// Sampled kernel components `K^k_{j,h}(t, x)` on the padded grid of a
/// base grid, in centered (physical) layout.
#[derive(Debug, Clone)]
pub struct KernelTensor {
    base: GridSpec,
    t: f64,
    family: KernelFamily,
    components: Vec<ScalarField>,
    imag_residue: f64,
}

impl KernelTensor {
    pub fn base_grid(&self) -> &GridSpec {
        &self.base
    }

    /// Grid the samples live on (the padded grid of the base).
    pub fn grid(&self) -> GridSpec {
        self.base.padded()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn component(&self, j: usize, h: usize, k: usize) -> &ScalarField {
        let d = self.base.d();
        &self.components[(j * d + h) * d + k]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    /// Largest imaginary part left by the inverse transform, relative to the
    /// largest real sample.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    /// Pointwise max over components of `|K^k_{j,h}|`.
    pub fn max_component(&self) -> ScalarField {
        let g = self.grid();
        let comps = &self.components;
        ScalarField::from_raw(
            g,
            par::map_collect(g.len(), |i| {
                comps
                    .iter()
                    .map(|c| c.values()[i].abs())
                    .fold(0.0, f64::max)
            }),
        )
    }

    /// `sup_{|x| <= L/2} max_c |K_c(x)| (sqrt(t) + |x|)^order`, `L` the base
    /// half-extent.
    pub fn bound_constant(&self, order: f64) -> f64 {
        bound_constant(
            &self.max_component(),
            self.t.sqrt(),
            order,
            self.base.half_extent() / 2.0,
        )
    }
}

/// Sample a kernel family at time `t` for fields on `grid`.
///
/// Samples live on the padded grid in centered layout and are scaled by
/// `1/h^d`, so that `free_convolve` with them approximates the free-space
/// operator. G is the inverse DFT of its symbol. F is split at
/// `T = max(t, L^2/36)` into a part whose symbol carries
/// `e^{-t|xi|^2} - e^{-T|xi|^2}` (Gaussian-localized, inverse DFT) and the
/// far field `int_T^inf d_h d_j d_k H_s ds`, evaluated in closed form.
/// The far field carries the algebraic tail, which periodization of the
/// full symbol would fold back onto the box.
pub fn sample_kernel(family: KernelFamily, t: f64, grid: &GridSpec) -> Result<KernelTensor> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let h = grid.spacing();
    if t.sqrt() < 2.0 * h {
        return Err(Error::Unresolvable {
            t,
            scale: t.sqrt(),
            min: 2.0 * h,
        });
    }
    let p = grid.padded();
    let d = grid.d();
    let split = t.max(grid.half_extent().powi(2) / 36.0);
    let heat: Vec<f64> = par::map_collect(p.len(), |i| (-t * heat_exponent(&p, i)).exp());
    let heat_split: Vec<f64> = par::map_collect(p.len(), |i| (-split * heat_exponent(&p, i)).exp());
    let mut spectra = Vec::with_capacity(d * d * d);
    for j in 0..d {
        for hh in 0..d {
            for k in 0..d {
                spectra.push(par::map_collect(p.len(), |i| match family {
                    KernelFamily::G => multiplier(family, &p, i, j, hh, k) * heat[i],
                    KernelFamily::F => near_symbol(&p, i, j, hh, k, heat[i], heat_split[i]),
                }));
            }
        }
    }
    let residue = {
        let mut z = spectra[d * d * d - 1].clone();
        crate::fft::plan(d, p.n()).inverse(&mut z);
        let re = z.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let im = z.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if re > 0.0 {
            im / re
        } else {
            im
        }
    };
    let scale = 1.0 / grid.cell_volume();
    let mut components: Vec<ScalarField> = inverse_many(&p, &spectra)
        .into_iter()
        .map(|wrapped| {
            let centered = centered_from_wrapped(&p, &wrapped);
            ScalarField::from_raw(p, centered.into_iter().map(|v| v * scale).collect())
        })
        .collect();
    if family == KernelFamily::F {
        let far: Vec<[f64; 2]> = par::map_collect(p.len(), |i| far_moments(d, split, p.point(i)));
        for j in 0..d {
            for hh in 0..d {
                for k in 0..d {
                    let c = &mut components[(j * d + hh) * d + k];
                    let vals = far_component(&p, &far, j, hh, k);
                    *c = c.add(&ScalarField::from_raw(p, vals));
                }
            }
        }
    }
    Ok(KernelTensor {
        base: *grid,
        t,
        family,
        components,
        imag_residue: residue,
    })
}

fn near_symbol(
    grid: &GridSpec,
    flat: usize,
    j: usize,
    h: usize,
    k: usize,
    heat: f64,
    heat_split: f64,
) -> Complex64 {
    let xi = grid.derivative_frequency(flat);
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    if k2 == 0.0 {
        return Complex64::default();
    }
    let delta = if j == k { heat } else { 0.0 };
    Complex64::new(
        0.0,
        xi[h] * (delta - xi[j] * xi[k] / k2 * (heat - heat_split)),
    )
}

/// `(4 pi)^{-d/2} int_T^inf s^{-d/2-p} e^{-|x|^2/4s} ds` for `p = 2, 3`.
fn far_moments(d: usize, split: f64, x: [f64; 3]) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let a = r2 / (4.0 * split);
    let norm = (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
    let mut out = [0.0; 2];
    for (slot, p) in [2.0, 3.0].into_iter().enumerate() {
        let alpha = d as f64 / 2.0 + p - 1.0;
        out[slot] = norm * split.powf(-alpha) * scaled_lower_gamma(alpha, a);
    }
    out
}

fn far_component(grid: &GridSpec, far: &[[f64; 2]], j: usize, h: usize, k: usize) -> Vec<f64> {
    let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    par::map_collect(grid.len(), |i| {
        let x = grid.point(i);
        let [i2, i3] = far[i];
        -x[h] * x[j] * x[k] / 8.0 * i3
            + (dl(j, k) * x[h] + dl(h, k) * x[j] + dl(h, j) * x[k]) / 4.0 * i2
    })
}

/// `a^{-alpha} gamma(alpha, a)` (lower incomplete gamma), by its
/// everywhere-convergent series of positive terms.
pub fn scaled_lower_gamma(alpha: f64, a: f64) -> f64 {
    let mut term = 1.0 / alpha;
    let mut sum = term;
    let mut k = 1.0;
    while term > sum * 1e-17 || k < a {
        term *= a / (alpha + k);
        sum += term;
        k += 1.0;
        if k > 10_000.0 {
            break;
        }
    }
    sum * (-a).exp()
}

/// Reorder samples from FFT (wrap-around) order to centered order.
pub fn centered_from_wrapped(grid: &GridSpec, wrapped: &[f64]) -> Vec<f64> {
    let half = grid.n() / 2;
    let n = grid.n();
    par::map_collect(grid.len(), |i| {
        let idx = grid.unravel(i);
        let mut w = [0; 3];
        for a in 0..grid.d() {
            w[a] = (idx[a] + half) % n;
        }
        wrapped[grid.ravel(w)]
    })
}

/// Reorder samples from centered order to FFT (wrap-around) order.
pub fn wrapped_from_centered(grid: &GridSpec, centered: &[f64]) -> Vec<f64> {
    // The shift by n/2 is an involution.
    centered_from_wrapped(grid, centered)
}

/// `sup_{|x| <= radius} |f(x)| (sqrt_t + |x|)^order` over grid points.
pub fn bound_constant(f: &ScalarField, sqrt_t: f64, order: f64, radius: f64) -> f64 {
    let g = *f.grid();
    let v = f.values();
    par::max(g.len(), |i| {
        let r = g.radius(i);
        if r <= radius {
            v[i].abs() * (sqrt_t + r).powf(order)
        } else {
            0.0
        }
    })
}

/// Closed-form heat kernel `(4 pi t)^{-d/2} e^{-|x|^2/4t}`.
pub fn heat_kernel(d: usize, t: f64, x: [f64; 3]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    (4.0 * std::f64::consts::PI * t).powf(-(d as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

/// Closed-form `d_j` of the heat kernel.
pub fn heat_kernel_gradient(d: usize, t: f64, x: [f64; 3], j: usize) -> f64 {
    -x[j] / (2.0 * t) * heat_kernel(d, t, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symbol_examples() {
        let z = Complex64::default();
        // Parallel part is killed: xi = |xi| e_j, j = k.
        for h in 0..2 {
            assert_eq!(oseen_symbol(&[2.0, 0.0], 0.3, 0, h, 0), z);
        }
        assert_eq!(oseen_symbol(&[0.0, 0.0], 0.0, 0, 1, 1), z);
        assert_eq!(
            oseen_symbol(&[1.0, 0.0], 0.0, 1, 0, 1),
            Complex64::new(0.0, 1.0)
        );
        assert_eq!(oseen_symbol(&[1.0, 0.0], 0.0, 0, 1, 1), z);
    }

    proptest! {
        #[test]
        fn oseen_symbol_is_divergence_free(
            x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0,
            t in 0.0f64..2.0, j in 0usize..3, h in 0usize..3,
        ) {
            let xi = [x, y, z];
            let mut s = Complex64::default();
            for k in 0..3 {
                s += oseen_symbol(&xi, t, j, h, k) * xi[k];
            }
            prop_assert!(s.norm() <= 1e-14 * (1.0 + x.abs() + y.abs() + z.abs()).powi(2));
        }
    }

    #[test]
    fn rejects_unresolvable_times() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        assert!(matches!(
            sample_kernel(KernelFamily::F, 0.01, &g),
            Err(Error::Unresolvable { .. })
        ));
        assert!(sample_kernel(KernelFamily::F, -1.0, &g).is_err());
    }

    #[test]
    fn g_family_matches_heat_kernel_gradient() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let t = 0.8;
        let kt = sample_kernel(KernelFamily::G, t, &g).unwrap();
        assert!(kt.imag_residue() < 1e-10);
        let p = kt.grid();
        for j in 0..2 {
            for hh in 0..2 {
                for k in 0..2 {
                    let c = kt.component(j, hh, k);
                    let exact = ScalarField::from_fn(p, |x| {
                        if hh == k {
                            heat_kernel_gradient(2, t, x, j)
                        } else {
                            0.0
                        }
                    });
                    let err = c.sub(&exact).l2_norm();
                    let scale = exact.l2_norm().max(1e-300);
                    if hh == k {
                        assert!(err / scale < 1e-6, "({j},{hh},{k}) err {err}");
                    } else {
                        assert!(err < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn lower_gamma_series() {
        // gamma(2, a) = 1 - (1 + a) e^{-a}
        for a in [0.5f64, 3.0, 40.0] {
            let exact = (1.0 - (1.0 + a) * (-a).exp()) / (a * a);
            assert!((scaled_lower_gamma(2.0, a) / exact - 1.0).abs() < 1e-13);
        }
        let a = 1e-4;
        let taylor = 0.5 - a / 3.0 + a * a / 8.0;
        assert!((scaled_lower_gamma(2.0, a) / taylor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_trace_over_h_vanishes() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let kt = sample_kernel(KernelFamily::F, 0.5, &g).unwrap();
        let p = kt.grid();
        let top = kt.max_component().max_abs();
        for k in 0..2 {
            let tr = kt.component(0, 0, k).add(kt.component(1, 1, k));
            assert!(tr.max_abs() < 1e-10 * top, "trace {}", tr.max_abs() / top);
        }
        assert_eq!(p.n(), 128);
    }

    #[test]
    fn gaussian_bound_at_origin() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let f = ScalarField::from_fn(g, |x| heat_kernel(2, 1.0, x));
        let c = bound_constant(&f, 1.0, 0.0, 4.0);
        assert!((c - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-8);
    }

    #[test]
    fn f_family_is_self_similar() {
        let g = GridSpec::new(2, 128, 8.0).unwrap();
        let phi = sample_kernel(KernelFamily::F, 1.0, &g).unwrap();
        let quarter = sample_kernel(KernelFamily::F, 0.25, &g).unwrap();
        let p = phi.grid();
        let n = p.n() as i64;
        let half = n / 2;
        let scale = 0.25f64.powf(-1.5);
        for (c_phi, c_q) in phi.components().iter().zip(quarter.components()) {
            let (mut err, mut norm) = (0.0, 0.0);
            for i in 0..p.len() {
                if p.radius(i) > g.half_extent() / 2.0 {
                    continue;
                }
                let idx = p.unravel(i);
                // x/sqrt(t) = 2x lands on index 2*idx - n/2
                let j0 = 2 * idx[0] as i64 - half;
                let j1 = 2 * idx[1] as i64 - half;
                let v = c_phi.values()[p.ravel([j0 as usize, j1 as usize, 0])];
                let expect = scale * v;
                err += (c_q.values()[i] - expect).powi(2);
                norm += expect * expect;
            }
            if norm > 0.0 {
                assert!(
                    (err / norm).sqrt() < 1e-6,
                    "relative error {}",
                    (err / norm).sqrt()
                );
            }
        }
    }
}
