//! Gauss-Legendre collocation on `(0, 1)` and the exponential weights of
//! the Duhamel integral `int_0^c e^{-z(c - s)} p(s) ds`.

/// Gauss-Legendre nodes and weights mapped to `(0, 1)`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `P_q(x)` and `P_q'(x)`.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, q as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Monomial coefficients of the Lagrange basis: `coef[m][k]` is the
/// coefficient of `s^k` in `l_m(s)`.
pub fn lagrange_monomials(nodes: &[f64]) -> Vec<Vec<f64>> {
    let q = nodes.len();
    (0..q)
        .map(|m| {
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for (n, &c) in nodes.iter().enumerate() {
                if n == m {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (k, &a) in poly.iter().enumerate() {
                    next[k + 1] += a;
                    next[k] -= c * a;
                }
                poly = next;
                denom *= nodes[m] - c;
            }
            poly.iter().map(|a| a / denom).collect()
        })
        .collect()
}

/// `I_m(c, z) = int_0^c e^{-z(c - s)} s^m ds` for `m < count`.
pub fn exp_moments(c: f64, z: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if z * c <= 2.0 {
        for m in 0..count {
            let mut term = c.powi(m as i32 + 1) / (m as f64 + 1.0);
            let mut sum = term;
            let mut j = 0;
            while term.abs() > 1e-18 * sum.abs() {
                term *= -z * c / (j as f64 + m as f64 + 2.0);
                sum += term;
                j += 1;
            }
            out.push(sum);
        }
    } else {
        let mut prev = (1.0 - (-c * z).exp()) / z;
        out.push(prev);
        for m in 1..count {
            prev = (c.powi(m as i32) - m as f64 * prev) / z;
            out.push(prev);
        }
    }
    out
}

/// Collocation weights `W_m(c, z) = sum_k coef[m][k] I_k(c, z)`, so that
/// `int_0^c e^{-z(c-s)} p(s) ds = sum_m W_m p(c_m)` for polynomials of
/// degree below the node count.
pub fn collocation_weights(coef: &[Vec<f64>], c: f64, z: f64) -> Vec<f64> {
    let q = coef.len();
    let moments = exp_moments(c, z, q);
    coef.iter()
        .map(|row| row.iter().zip(&moments).map(|(a, i)| a * i).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for q in 1..=8 {
            let (x, w) = gauss_legendre(q);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..2 * q {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "q={q} k={k}");
            }
            assert!(x.iter().all(|&c| c > 0.0 && c < 1.0));
        }
    }

    #[test]
    fn lagrange_basis_is_cardinal() {
        let (x, _) = gauss_legendre(5);
        let coef = lagrange_monomials(&x);
        for (m, row) in coef.iter().enumerate() {
            for (n, &c) in x.iter().enumerate() {
                let v: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * c.powi(k as i32))
                    .sum();
                assert!((v - if m == n { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exp_moments_match_quadrature_on_both_branches() {
        let (gx, gw) = gauss_legendre(40);
        for &(c, z) in &[(0.3, 0.5), (1.0, 1.9), (1.0, 2.1), (0.7, 30.0), (1.0, 0.0)] {
            let m = exp_moments(c, z, 5);
            for (k, &v) in m.iter().enumerate() {
                let oracle: f64 = gx
                    .iter()
                    .zip(&gw)
                    .map(|(x, w)| {
                        let s = c * x;
                        c * w * (-z * (c - s)).exp() * s.powi(k as i32)
                    })
                    .sum();
                assert!(
                    (v - oracle).abs() < 1e-12 * oracle.abs().max(1e-3),
                    "c={c} z={z} k={k}"
                );
            }
        }
    }

    #[test]
    fn weights_reproduce_exponential_integral_of_polynomial() {
        let (x, _) = gauss_legendre(4);
        let coef = lagrange_monomials(&x);
        let p = |s: f64| 1.0 + 2.0 * s - s * s * s;
        let (c, z) = (1.0, 3.0);
        let w = collocation_weights(&coef, c, z);
        let approx: f64 = w.iter().zip(&x).map(|(w, &s)| w * p(s)).sum();
        let m = exp_moments(c, z, 4);
        let exact = m[0] + 2.0 * m[1] - m[3];
        assert!((approx - exact).abs() < 1e-12);
    }
}
