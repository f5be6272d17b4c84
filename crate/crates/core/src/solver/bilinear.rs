//! Bilinear operators evaluated directly from sampled kernels: Gauss
//! quadrature in time, one free-space tensor convolution per node.

use super::quadrature::gauss_legendre;
use crate::convolution::free_convolve_tensor;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::kernels::{sample_kernel, KernelFamily};

/// A field sampled at the Gauss-Legendre nodes of `[0, t]`.
#[derive(Debug, Clone)]
pub struct NodeHistory {
    t: f64,
    weights: Vec<f64>,
    times: Vec<f64>,
    fields: Vec<VectorField>,
}

impl NodeHistory {
    /// Samples `f(s)` at the `q` Gauss nodes of `[0, t]`.
    pub fn sample<F>(t: f64, q: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<VectorField>,
    {
        if !(t > 0.0) || q == 0 {
            return Err(Error::InvalidArgument(format!(
                "history needs t > 0 and at least one node (t = {t}, q = {q})"
            )));
        }
        let (nodes, w) = gauss_legendre(q);
        let times: Vec<f64> = nodes.iter().map(|c| c * t).collect();
        let fields = times.iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t,
            weights: w.iter().map(|w| w * t).collect(),
            times,
            fields,
        })
    }

    /// A time-independent history.
    pub fn constant(f: &VectorField, t: f64, q: usize) -> Result<Self> {
        Self::sample(t, q, |_| Ok(f.clone()))
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }
}

fn check_pair(f: &NodeHistory, g: &NodeHistory) -> Result<()> {
    if f.times != g.times {
        return Err(Error::InvalidArgument(
            "histories are sampled at different times".into(),
        ));
    }
    if f.fields
        .iter()
        .chain(&g.fields)
        .any(|x| x.grid() != f.fields[0].grid())
    {
        return Err(Error::GridMismatch(
            "history fields live on different grids".into(),
        ));
    }
    Ok(())
}

/// `sum_{j,h} int_0^t K^k_{j,h}(t - s) * (f^j g^h)(s) ds` by Gauss quadrature.
fn bilinear(family: KernelFamily, f: &NodeHistory, g: &NodeHistory) -> Result<VectorField> {
    check_pair(f, g)?;
    let grid = *f.fields[0].grid();
    let d = grid.d();
    let mut acc = VectorField::zeros(grid);
    for (m, &s) in f.times.iter().enumerate() {
        let kernel = sample_kernel(family, f.t - s, &grid)?;
        let (fm, gm) = (&f.fields[m], &g.fields[m]);
        let mut tensor: Vec<ScalarField> = Vec::with_capacity(d * d);
        for j in 0..d {
            for h in 0..d {
                tensor.push(fm.component(j).mul(gm.component(h)));
            }
        }
        let term = free_convolve_tensor(&kernel, &tensor)?;
        acc = acc.add(&term.scale(f.weights[m]));
    }
    Ok(acc)
}

/// `U^k(f, g)(t) = sum_{j,h} int_0^t F^k_{j,h}(t - s) * (f^j g^h)(s) ds`.
///
/// Fails with [`Error::Unresolvable`] when `t - s` at the last node is
/// below the kernel's resolution on the grid.
pub fn bilinear_u(f: &NodeHistory, g: &NodeHistory) -> Result<VectorField> {
    bilinear(KernelFamily::F, f, g)
}

/// `B^k(f, g)(t) = sum_{j,h} int_0^t G^k_{j,h}(t - s) * (f^j g^h)(s) ds`.
pub fn bilinear_bop(f: &NodeHistory, g: &NodeHistory) -> Result<VectorField> {
    bilinear(KernelFamily::G, f, g)
}

/// Magnetic part `B(u, B) - B(B, u)` of the nonlinearity.
pub fn v2_magnetic(u: &NodeHistory, b: &NodeHistory) -> Result<VectorField> {
    Ok(bilinear_bop(u, b)?.sub(&bilinear_bop(b, u)?))
}
