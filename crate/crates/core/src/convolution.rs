//! Zero-padded free-space convolution and the weighted convolution
//! inequalities for the kernels `Gamma_lambda^N(x) = (lambda + |x|)^{-N}`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::indices::{inv, le_eps, lt, GUARD};
use crate::kernels::{wrapped_from_centered, KernelTensor};
use crate::par;
use crate::report::Table;
use crate::weighted::{weighted_norm, WeightedIndex};

/// `(lambda + |x|)^{-N}` sampled on the padded grid of `base`, centered.
#[derive(Debug, Clone)]
pub struct GammaKernel {
    lambda: f64,
    order: f64,
    base: GridSpec,
    samples: ScalarField,
}

impl GammaKernel {
    pub fn new(lambda: f64, order: f64, base: &GridSpec) -> Result<Self> {
        if !(lambda > 0.0) || !(order >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Gamma kernel needs lambda > 0 and N >= 1 (got {lambda}, {order})"
            )));
        }
        let p = base.padded();
        let samples = ScalarField::from_fn(p, |x| gamma(lambda, order, x));
        Ok(Self {
            lambda,
            order,
            base: *base,
            samples,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn base_grid(&self) -> &GridSpec {
        &self.base
    }

    pub fn samples(&self) -> &ScalarField {
        &self.samples
    }
}

#[inline]
pub fn gamma(lambda: f64, order: f64, x: [f64; 3]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    (lambda + r).powf(-order)
}

/// Spectrum of a kernel, ready to convolve fields on `base`.
#[derive(Debug, Clone)]
pub struct Convolver {
    base: GridSpec,
    spectrum: Vec<Complex64>,
}

impl Convolver {
    /// `kernel` lives either on the padded grid of `base` (centered) or on
    /// `base` itself, in which case it is zero-padded.
    pub fn new(kernel: &ScalarField, base: &GridSpec) -> Result<Self> {
        let p = base.padded();
        let centered = if *kernel.grid() == p {
            kernel.values().to_vec()
        } else if kernel.grid() == base {
            kernel.pad().into_values()
        } else {
            return Err(Error::GridMismatch(format!(
                "kernel grid {:?} matches neither {:?} nor its padding",
                kernel.grid(),
                base
            )));
        };
        let wrapped = wrapped_from_centered(&p, &centered);
        let scale = base.cell_volume();
        let mut spectrum = fft::plan(p.d(), p.n()).forward_real(&wrapped);
        for c in spectrum.iter_mut() {
            *c *= scale;
        }
        Ok(Self {
            base: *base,
            spectrum,
        })
    }

    pub fn base_grid(&self) -> &GridSpec {
        &self.base
    }

    /// Spectrum on the padded grid (including the `h^d` quadrature weight).
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        let fh = self.padded_spectrum(f)?;
        Ok(self.apply_spectrum(&fh))
    }

    /// Padded spectrum of `f`, reusable across kernels on the same grid.
    pub fn padded_spectrum(&self, f: &ScalarField) -> Result<Vec<Complex64>> {
        if *f.grid() != self.base {
            return Err(Error::GridMismatch(
                "field grid differs from convolver base".into(),
            ));
        }
        let p = self.base.padded();
        Ok(fft::plan(p.d(), p.n()).forward_real(f.pad().values()))
    }

    pub fn apply_spectrum(&self, fh: &[Complex64]) -> ScalarField {
        let p = self.base.padded();
        let k = &self.spectrum;
        let prod: Vec<Complex64> = par::map_collect(p.len(), |i| k[i] * fh[i]);
        let out = fft::plan(p.d(), p.n()).inverse_real(&prod);
        ScalarField::from_raw(p, out)
            .restrict(&self.base)
            .expect("padded grid of base")
    }
}

/// Linear convolution `h^d sum_y K(x - y) f(y)` restricted to the base grid.
///
/// `K` is either sampled on the padded grid (centered) or is a field on the
/// same grid as `f`.
pub fn free_convolve(kernel: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    Convolver::new(kernel, f.grid())?.apply(f)
}

/// `out^k = sum_{j,h} K^k_{j,h} * T_{jh}` for a kernel tensor and a tensor
/// field `T` given as `d^2` components in row-major `(j, h)` order.
pub fn free_convolve_tensor(kernel: &KernelTensor, tensor: &[ScalarField]) -> Result<VectorField> {
    let base = *kernel.base_grid();
    let d = base.d();
    if tensor.len() != d * d {
        return Err(Error::GridMismatch(format!(
            "tensor has {} components, expected {}",
            tensor.len(),
            d * d
        )));
    }
    let p = base.padded();
    let plan = fft::plan(d, p.n());
    let mut tensor_hat = Vec::with_capacity(d * d);
    for t in tensor {
        if *t.grid() != base {
            return Err(Error::GridMismatch("tensor component grid differs".into()));
        }
        tensor_hat.push(plan.forward_real(t.pad().values()));
    }
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let mut acc = vec![Complex64::default(); p.len()];
        for j in 0..d {
            for h in 0..d {
                let conv = Convolver::new(kernel.component(j, h, k), &base)?;
                let ks = conv.spectrum();
                let th = &tensor_hat[j * d + h];
                par::for_each_indexed_mut(&mut acc, |i, a| *a += ks[i] * th[i]);
            }
        }
        let v = plan.inverse_real(&acc);
        out.push(ScalarField::from_raw(p, v).restrict(&base)?);
    }
    VectorField::new(out)
}

/// Whether `N = d(1 + 1/p - 1/a)`, where the bounds carry `1 + |log lambda|`.
pub fn is_log_case(d: usize, order: f64, a: f64, p: f64) -> bool {
    (order - d as f64 * (1.0 + inv(p) - inv(a))).abs() <= GUARD
}

/// Checks the hypotheses of the weighted convolution bounds. With
/// `second` the extra condition `1/a < 1/p + 1/d` of the refined bound is
/// included. Returns the violated conditions.
pub fn prop1_conditions(
    d: usize,
    order: f64,
    input: WeightedIndex,
    output: WeightedIndex,
    second: bool,
) -> Vec<String> {
    let df = d as f64;
    let (a, alpha, p, theta) = (input.a, input.alpha, output.a, output.alpha);
    let mut bad = Vec::new();
    if !(order > df) {
        bad.push("N > d".to_string());
    }
    if !(theta <= alpha + GUARD) {
        bad.push("theta <= alpha".to_string());
    }
    let lhs = theta + df * inv(p);
    if !le_eps(lhs, order, inv(p)) {
        bad.push("theta + d/p <= N - eps_(1/p)".to_string());
    }
    if !le_eps(lhs, alpha + df * inv(a), alpha - theta) {
        bad.push("theta + d/p <= alpha + d/a - eps_(alpha - theta)".to_string());
    }
    if second && !lt(inv(a), inv(p) + 1.0 / df) {
        bad.push("1/a < 1/p + 1/d".to_string());
    }
    bad
}

/// `epsilon = min{d/p - d/a + 1; (N - d + 1)/2}` and
/// `m = max{N - d + 1 - 2 epsilon; -N + d(1/p - 1/a + 1)}`.
pub fn remark_constants(d: usize, order: f64, a: f64, p: f64) -> (f64, f64) {
    let df = d as f64;
    let eps = (df * inv(p) - df * inv(a) + 1.0).min((order - df + 1.0) / 2.0);
    let m = (order - df + 1.0 - 2.0 * eps).max(-order + df * (inv(p) - inv(a) + 1.0));
    (eps, m)
}

/// Measured norms of `Gamma_lambda^N * f` against the two envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Report {
    pub d: usize,
    pub order: f64,
    pub input: WeightedIndex,
    pub output: WeightedIndex,
    pub epsilon: f64,
    pub m: f64,
    pub log_case: bool,
    pub lambdas: Vec<f64>,
    /// Requested values below the resolvable scale `4h`.
    pub skipped: Vec<f64>,
    pub measured: Vec<f64>,
    /// `C lambda^{-N} (1 + lambda)^N`, times `1 + |log lambda|` in the log case.
    pub envelope1: Vec<f64>,
    /// `C lambda^{-N+d-1+epsilon} (1 + lambda)^m`, likewise.
    pub envelope2: Vec<f64>,
    pub ratio1: Vec<f64>,
    pub ratio2: Vec<f64>,
}

impl Prop1Report {
    /// CSV columns `lambda,measured,envelope1,envelope2,ratio1,ratio2,flag_log_case`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "lambda",
            "measured",
            "envelope1",
            "envelope2",
            "ratio1",
            "ratio2",
            "flag_log_case",
        ]);
        for i in 0..self.lambdas.len() {
            t.push(vec![
                format!("{}", self.lambdas[i]),
                format!("{}", self.measured[i]),
                format!("{}", self.envelope1[i]),
                format!("{}", self.envelope2[i]),
                format!("{}", self.ratio1[i]),
                format!("{}", self.ratio2[i]),
                format!("{}", u8::from(self.log_case)),
            ]);
        }
        t
    }

    /// `ratio2` at `lambda = 1` (or the largest swept value).
    pub fn reference_ratio2(&self) -> f64 {
        self.ratio2[self.reference_index()]
    }

    fn reference_index(&self) -> usize {
        self.lambdas
            .iter()
            .position(|&l| (l - 1.0).abs() < 1e-12)
            .unwrap_or_else(|| {
                let mut best = 0;
                for (i, &l) in self.lambdas.iter().enumerate() {
                    if l > self.lambdas[best] {
                        best = i;
                    }
                }
                best
            })
    }
}

fn raw_envelopes(
    d: usize,
    order: f64,
    eps: f64,
    m: f64,
    log_case: bool,
    lambda: f64,
) -> (f64, f64) {
    let log = if log_case {
        1.0 + lambda.ln().abs()
    } else {
        1.0
    };
    let e1 = lambda.powf(-order) * (1.0 + lambda).powf(order) * log;
    let e2 = lambda.powf(-order + d as f64 - 1.0 + eps) * (1.0 + lambda).powf(m) * log;
    (e1, e2)
}

/// Sweeps `lambda`, measuring `||Gamma_lambda^N * f||_{L^p_theta}`.
///
/// The envelope constants are fixed by the measurement at `lambda = 1`
/// (or the largest swept value), so ratios there equal 1 and uniformity in
/// `lambda` is a ratio test.
pub fn prop1_sweep(
    f: &ScalarField,
    order: f64,
    input: WeightedIndex,
    output: WeightedIndex,
    lambdas: &[f64],
) -> Result<Prop1Report> {
    let g = *f.grid();
    let d = g.d();
    let bad = prop1_conditions(d, order, input, output, true);
    if !bad.is_empty() {
        return Err(Error::Inadmissible(bad));
    }
    let log_case = is_log_case(d, order, input.a, output.a);
    let (epsilon, m) = remark_constants(d, order, input.a, output.a);
    let min_lambda = 4.0 * g.spacing();
    let (kept, skipped): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .partition(|&&l| l >= min_lambda * (1.0 - 1e-12));
    if kept.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no lambda above the resolvable scale 4h = {min_lambda}"
        )));
    }
    let abs_f = f.map(f64::abs);
    let mut fh: Option<Vec<Complex64>> = None;
    let mut measured = Vec::with_capacity(kept.len());
    for &lambda in &kept {
        let k = GammaKernel::new(lambda, order, &g)?;
        let conv = Convolver::new(k.samples(), &g)?;
        if fh.is_none() {
            fh = Some(conv.padded_spectrum(&abs_f)?);
        }
        let out = conv.apply_spectrum(fh.as_ref().expect("spectrum computed"));
        measured.push(weighted_norm(&out, output));
    }
    let mut report = Prop1Report {
        d,
        order,
        input,
        output,
        epsilon,
        m,
        log_case,
        lambdas: kept,
        skipped,
        measured,
        envelope1: Vec::new(),
        envelope2: Vec::new(),
        ratio1: Vec::new(),
        ratio2: Vec::new(),
    };
    let r = report.reference_index();
    let (e1_ref, e2_ref) = raw_envelopes(d, order, epsilon, m, log_case, report.lambdas[r]);
    let c1 = report.measured[r] / e1_ref;
    let c2 = report.measured[r] / e2_ref;
    for (i, &lambda) in report.lambdas.iter().enumerate() {
        let (e1, e2) = raw_envelopes(d, order, epsilon, m, log_case, lambda);
        let (e1, e2) = (c1 * e1, c2 * e2);
        report.envelope1.push(e1);
        report.envelope2.push(e2);
        report.ratio1.push(report.measured[i] / e1);
        report.ratio2.push(report.measured[i] / e2);
    }
    Ok(report)
}

/// The three pieces of `(1 + |x|)^theta (Gamma_lambda^N * |f|)(x)`: `y` far
/// from the origin relative to `x` (`I`), and `|y| <= |x|/2` split by
/// `|x| < 1` (`J`) and `|x| >= 1` (`K`).
#[derive(Debug, Clone)]
pub struct IjkDecomposition {
    pub i: ScalarField,
    pub j: ScalarField,
    pub k: ScalarField,
}

impl IjkDecomposition {
    /// `(||I||_{L^p}, ||J||_{L^p}, ||K||_{L^p})`.
    pub fn norms(&self, p: f64) -> (f64, f64, f64) {
        let w = WeightedIndex { a: p, alpha: 0.0 };
        (
            weighted_norm(&self.i, w),
            weighted_norm(&self.j, w),
            weighted_norm(&self.k, w),
        )
    }

    pub fn sum(&self) -> ScalarField {
        self.i.add(&self.j).add(&self.k)
    }
}

/// Direct masked quadrature of the I/J/K pieces, `O(n^d |supp f|)`.
pub fn ijk_decompose(
    f: &ScalarField,
    lambda: f64,
    order: f64,
    theta: f64,
) -> Result<IjkDecomposition> {
    if !(lambda > 0.0) || !(order >= 1.0) || !(theta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need lambda > 0, N >= 1, theta >= 0 (got {lambda}, {order}, {theta})"
        )));
    }
    let g = *f.grid();
    let hd = g.cell_volume();
    let support: Vec<([f64; 3], f64, f64)> = (0..g.len())
        .filter(|&i| f.values()[i] != 0.0)
        .map(|i| (g.point(i), g.radius(i), f.values()[i].abs() * hd))
        .collect();
    let parts: Vec<[f64; 3]> = par::map_collect(g.len(), |i| {
        let x = g.point(i);
        let rx = g.radius(i);
        let (mut near, mut far) = (0.0, 0.0);
        for (y, ry, fy) in &support {
            let dx = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            let v = gamma(lambda, order, dx) * fy;
            if *ry >= rx / 2.0 {
                far += v;
            } else {
                near += v;
            }
        }
        let w = (1.0 + rx).powf(theta);
        if rx < 1.0 {
            [far * w, near * w, 0.0]
        } else {
            [far * w, 0.0, near * w]
        }
    });
    let take = |k: usize| ScalarField::from_raw(g, parts.iter().map(|p| p[k]).collect());
    Ok(IjkDecomposition {
        i: take(0),
        j: take(1),
        k: take(2),
    })
}

/// Indices of a weighted convolution estimate `L^a_alpha x L^b_beta -> L^p_theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaIndices {
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub beta: f64,
    pub p: f64,
    pub theta: f64,
}

/// Violated conditions for the intermediate exponent `s`.
pub fn lemma1_conditions(d: usize, ix: &LemmaIndices, s: f64) -> Vec<String> {
    let df = d as f64;
    let ds = df * inv(s);
    let mut bad = Vec::new();
    if !(ix.theta <= ix.alpha + GUARD) {
        bad.push("theta <= alpha".to_string());
    }
    if !(ds <= df * inv(ix.a) + GUARD) {
        bad.push("d/s <= d/a".to_string());
    }
    let gap = (ix.alpha + df * inv(ix.a)) - (ix.theta + df * inv(ix.p));
    if !le_eps(ds, gap, ix.alpha - ix.theta) {
        bad.push("d/s <= (alpha + d/a) - (theta + d/p) - eps_(alpha - theta)".to_string());
    }
    if !(ds <= df * (1.0 - inv(ix.b)) + GUARD) {
        bad.push("d/s <= d(1 - 1/b)".to_string());
    }
    if !(ds >= df * inv(ix.a) - df * inv(ix.p) - GUARD) {
        bad.push("d/s >= d/a - d/p".to_string());
    }
    let v = df - (ix.beta + df * inv(ix.b));
    if !(v < -GUARD || le_eps(v, ds, ix.beta)) {
        bad.push("d/s >= [d - (beta + d/b) + eps_beta]^+".to_string());
    }
    bad
}

/// `||I_theta||_{L^p} / (||f||_{L^a_alpha} ||g||_{L^b_beta})` with
/// `I_theta = (1 + |x|)^{theta - alpha} (F * g)` and `F = (1 + |x|)^alpha |f|`.
pub fn lemma1_check(f: &ScalarField, g: &ScalarField, ix: &LemmaIndices, s: f64) -> Result<f64> {
    let grid = *f.grid();
    let bad = lemma1_conditions(grid.d(), ix, s);
    if !bad.is_empty() {
        return Err(Error::Inadmissible(bad));
    }
    if g.grid() != f.grid() {
        return Err(Error::GridMismatch("f and g must share a grid".into()));
    }
    let big_f = ScalarField::from_raw(
        grid,
        par::map_collect(grid.len(), |i| {
            (1.0 + grid.radius(i)).powf(ix.alpha) * f.values()[i].abs()
        }),
    );
    let conv = free_convolve(g, &big_f)?;
    let it = ScalarField::from_raw(
        grid,
        par::map_collect(grid.len(), |i| {
            (1.0 + grid.radius(i)).powf(ix.theta - ix.alpha) * conv.values()[i]
        }),
    );
    let num = weighted_norm(
        &it,
        WeightedIndex {
            a: ix.p,
            alpha: 0.0,
        },
    );
    let den = weighted_norm(
        f,
        WeightedIndex {
            a: ix.a,
            alpha: ix.alpha,
        },
    ) * weighted_norm(
        g,
        WeightedIndex {
            a: ix.b,
            alpha: ix.beta,
        },
    );
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Test functions spanning fast, slow and irregular decay: a Gaussian,
/// `(1 + |x|^2)^{-s/2}` for `s = 1.5, 2, 3`, an anisotropic compact bump
/// and a seeded random sum of Gaussian blobs.
pub fn stress_family(grid: &GridSpec, seed: u64) -> Vec<(String, ScalarField)> {
    let l = grid.half_extent();
    let mut out = vec![(
        "gaussian".to_string(),
        ScalarField::from_fn(*grid, |x| {
            (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
        }),
    )];
    for s in [1.5, 2.0, 3.0] {
        out.push((
            format!("algebraic_s{s}"),
            ScalarField::from_fn(*grid, move |x| {
                (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powf(-s / 2.0)
            }),
        ));
    }
    let (ax, ay) = (0.6 * l.min(2.0), 0.25 * l.min(2.0));
    out.push((
        "anisotropic_bump".to_string(),
        ScalarField::from_fn(*grid, move |x| {
            let q = (x[0] / ax).powi(2) + (x[1] / ay).powi(2) + (x[2] / ay).powi(2);
            if q < 1.0 {
                (-1.0 / (1.0 - q)).exp() * std::f64::consts::E
            } else {
                0.0
            }
        }),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<([f64; 3], f64, f64)> = (0..8)
        .map(|_| {
            let mut c = [0.0; 3];
            for v in c.iter_mut().take(grid.d()) {
                *v = rng.gen_range(-0.5..0.5) * l.min(4.0);
            }
            (
                c,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.1..0.4) * l.min(4.0),
            )
        })
        .collect();
    out.push((
        "random_smooth".to_string(),
        ScalarField::from_fn(*grid, move |x| {
            blobs
                .iter()
                .map(|(c, amp, w)| {
                    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
                    amp * (-r2 / (w * w)).exp()
                })
                .sum()
        }),
    ));
    out
}

/// Weighted Hölder product check: `|| |u| |v| ||_{L^r_{a+b}}` against
/// `||u||_{L^p_a} ||v||_{L^q_b}` with `1/r = 1/p + 1/q`. Returns
/// `(lhs, rhs)`.
pub fn holder_product(
    u: &VectorField,
    v: &VectorField,
    pu: WeightedIndex,
    pv: WeightedIndex,
) -> (f64, f64) {
    let g = *u.grid();
    let prod = ScalarField::from_raw(
        g,
        par::map_collect(g.len(), |i| {
            use crate::weighted::Sampled;
            u.abs_at(i) * v.abs_at(i)
        }),
    );
    let r = crate::indices::holder_exponent(pu.a, pv.a);
    let lhs = weighted_norm(
        &prod,
        WeightedIndex {
            a: r,
            alpha: pu.alpha + pv.alpha,
        },
    );
    (lhs, weighted_norm(u, pu) * weighted_norm(v, pv))
}
