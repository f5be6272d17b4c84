//! Exponent arithmetic: admissibility of index tuples, the region
//! classifier, embedding barriers, σ-exponents and the lifetime bound.
//!
//! Strictness follows the ε-convention: `A <= B - eps_x` means `A <= B`
//! when `x = 0` and `A < B` otherwise (see [`le_eps`]). Infinite exponents
//! are `f64::INFINITY` with `1/inf = 0`. Comparisons carry a `1e-12` guard
//! so points on exact boundary lines are not misclassified by rounding.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Comparison guard for exponent arithmetic.
pub const GUARD: f64 = 1e-12;

/// `1/p`, with `1/inf = 0`.
#[inline]
pub fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Positive part.
#[inline]
pub fn pos(x: f64) -> f64 {
    x.max(0.0)
}

#[inline]
fn is_zero(x: f64) -> bool {
    x.abs() <= GUARD
}

/// `A <= B - eps_param`: non-strict when `param = 0`, strict otherwise.
pub fn le_eps(a: f64, b: f64, param: f64) -> bool {
    if is_zero(param) {
        a <= b + GUARD
    } else {
        a < b - GUARD
    }
}

/// Non-strict `A <= B` with the guard.
#[inline]
pub fn le(a: f64, b: f64) -> bool {
    a <= b + GUARD
}

/// Strict `A < B` with the guard.
#[inline]
pub fn lt(a: f64, b: f64) -> bool {
    a < b - GUARD
}

/// Hölder exponent `H` with `1/H = 1/p + 1/q` (`inf` when both are).
pub fn holder_exponent(p: f64, q: f64) -> f64 {
    let s = inv(p) + inv(q);
    if s == 0.0 {
        f64::INFINITY
    } else {
        1.0 / s
    }
}

/// Young exponent `Y` with `1/Y = 1/a - 1/s`; requires `1/a >= 1/s`.
pub fn young_exponent(a: f64, s: f64) -> Result<f64> {
    let r = inv(a) - inv(s);
    if r < -GUARD {
        return Err(Error::InvalidArgument(format!(
            "Young exponent needs 1/a >= 1/s (a={a}, s={s})"
        )));
    }
    Ok(if r <= GUARD { f64::INFINITY } else { 1.0 / r })
}

/// A value that may only be approached from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    /// The value itself is excluded.
    pub strict: bool,
}

/// Index tuple `(d, p0, theta0, p1, theta1)` of the data spaces
/// `L^{p0}_{theta0} x L^{p1}_{theta1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhdIndices {
    d: usize,
    p0: f64,
    theta0: f64,
    p1: f64,
    theta1: f64,
}

impl MhdIndices {
    /// Validates only representability (`d >= 2`, `p >= 1`, finite
    /// `theta`); the theorem hypotheses are checked by the predicates.
    pub fn new(d: usize, p0: f64, theta0: f64, p1: f64, theta1: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("dimension {d} < 2")));
        }
        for (name, p) in [("p0", p0), ("p1", p1)] {
            if !(p >= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {p} is not in [1, inf]"
                )));
            }
        }
        for (name, t) in [("theta0", theta0), ("theta1", theta1)] {
            if !t.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {t} is not finite"
                )));
            }
        }
        Ok(Self {
            d,
            p0,
            theta0,
            p1,
            theta1,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn p0(&self) -> f64 {
        self.p0
    }
    pub fn theta0(&self) -> f64 {
        self.theta0
    }
    pub fn p1(&self) -> f64 {
        self.p1
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    fn df(&self) -> f64 {
        self.d as f64
    }

    /// `theta0 + d/p0`.
    pub fn eta0(&self) -> f64 {
        self.theta0 + self.df() * inv(self.p0)
    }

    /// `theta1 + d/p1`.
    pub fn eta1(&self) -> f64 {
        self.theta1 + self.df() * inv(self.p1)
    }

    /// `(2d/p1 - 1)^+`.
    pub fn delta(&self) -> f64 {
        pos(2.0 * self.df() * inv(self.p1) - 1.0)
    }

    /// `min{p0; d/delta - eps_delta}`.
    pub fn p0_star(&self) -> Bound {
        let delta = self.delta();
        if is_zero(delta) {
            return Bound {
                value: self.p0,
                strict: false,
            };
        }
        let cap = self.df() / delta;
        if self.p0 < cap - GUARD {
            Bound {
                value: self.p0,
                strict: false,
            }
        } else {
            Bound {
                value: cap,
                strict: true,
            }
        }
    }

    /// Hölder exponent of `u (x) B`: `1/H = 1/p0 + 1/p1`.
    pub fn holder(&self) -> f64 {
        holder_exponent(self.p0, self.p1)
    }

    /// Whether `B` decays fast enough not to constrain `u`:
    /// `eta1 >= (d + 1 + delta)/2`.
    pub fn fast_b(&self) -> bool {
        le((self.df() + 1.0 + self.delta()) / 2.0, self.eta1())
    }
}

/// Outcome of an admissibility check.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdict {
    pub admissible: bool,
    /// Violated clauses, empty iff admissible.
    pub failed: Vec<String>,
    /// Clauses whose inequality was strict.
    pub strict: Vec<String>,
}

#[derive(Default)]
struct Checker {
    failed: Vec<String>,
    strict: Vec<String>,
}

impl Checker {
    fn check(&mut self, ok: bool, clause: &str) {
        if !ok {
            self.failed.push(clause.to_string());
        }
    }

    /// `a <= b - eps_param`, noting strictness.
    fn eps(&mut self, a: f64, b: f64, param: f64, clause: &str) {
        if !is_zero(param) {
            self.strict.push(clause.to_string());
        }
        self.check(le_eps(a, b, param), clause);
    }

    fn finish(self) -> Verdict {
        Verdict {
            admissible: self.failed.is_empty(),
            failed: self.failed,
            strict: self.strict,
        }
    }
}

fn common_u(c: &mut Checker, idx: &MhdIndices, suffix: &str) {
    let d = idx.df();
    c.check(idx.theta0 >= 0.0, &format!("theta0{suffix} >= 0"));
    c.check(idx.p0 > d + GUARD, &format!("d < p0{suffix}"));
}

/// Hypotheses of the weak-sense stability theorem:
/// `theta0, theta1 >= 0`, `d < p0, p1 <= inf` and
/// `delta + eps_delta <= eta0 <= min{d + 1; 2 eta1 - delta}`.
pub fn thm1_admissible(idx: &MhdIndices) -> Verdict {
    let mut c = Checker::default();
    let d = idx.df();
    common_u(&mut c, idx, "");
    c.check(idx.theta1 >= 0.0, "theta1 >= 0");
    c.check(idx.p1 > d + GUARD, "d < p1");
    let (eta0, eta1, delta) = (idx.eta0(), idx.eta1(), idx.delta());
    c.eps(delta, eta0, delta, "delta + eps_delta <= eta0");
    c.check(le(eta0, d + 1.0), "eta0 <= d + 1");
    c.check(le(eta0, 2.0 * eta1 - delta), "eta0 <= 2 eta1 - delta");
    c.finish()
}

fn local_clauses(c: &mut Checker, idx: &MhdIndices, suffix: &str) {
    let d = idx.df();
    let (eta0, eta1) = (idx.eta0(), idx.eta1());
    c.eps(
        eta0,
        d + 1.0,
        inv(idx.p0),
        &format!("eta0{suffix} <= d + 1 - eps_(1/p0{suffix})"),
    );
    c.eps(
        eta0,
        2.0 * eta1,
        2.0 * idx.theta1 - idx.theta0,
        &format!("eta0{suffix} <= 2 eta1 - eps_(2 theta1 - theta0{suffix})"),
    );
    c.check(
        le(eta0, 2.0 * eta1 + d * inv(idx.p0) - 2.0 * d * inv(idx.p1)),
        &format!("eta0{suffix} <= 2 eta1 + d/p0{suffix} - 2d/p1"),
    );
}

fn scaling_clause(c: &mut Checker, idx: &MhdIndices, suffix: &str) {
    let d = idx.df();
    c.check(
        lt(2.0 * inv(idx.p1), inv(idx.p0) + 1.0 / d),
        &format!("2/p1 < 1/p0{suffix} + 1/d"),
    );
}

/// Hypotheses of the strong (weighted-space) persistence theorem:
/// `theta0, theta1 >= 0`, `d < p0 <= inf`, `2/p1 < 1/p0 + 1/d` and
/// `eta0 <= min{d+1-eps_(1/p0); 2 eta1 - eps_(2theta1-theta0); 2 eta1 + d/p0 - 2d/p1}`.
pub fn thm3_admissible(idx: &MhdIndices) -> Verdict {
    let mut c = Checker::default();
    common_u(&mut c, idx, "");
    c.check(idx.theta1 >= 0.0, "theta1 >= 0");
    scaling_clause(&mut c, idx, "");
    local_clauses(&mut c, idx, "");
    c.finish()
}

/// Joint hypotheses for two index tuples sharing either the `B` pair
/// `(p1, theta1)` or the `u` pair `(p0, theta0)`.
pub fn prop2_admissible(idx: &MhdIndices, other: &MhdIndices) -> Result<Verdict> {
    if idx.d != other.d {
        return Err(Error::InvalidArgument(
            "index tuples differ in dimension".into(),
        ));
    }
    let share_b = idx.p1 == other.p1 && idx.theta1 == other.theta1;
    let share_u = idx.p0 == other.p0 && idx.theta0 == other.theta0;
    let mut c = Checker::default();
    if share_b {
        common_u(&mut c, idx, "");
        common_u(&mut c, other, "~");
        c.check(idx.theta1 >= 0.0, "theta1 >= 0");
        scaling_clause(&mut c, idx, "");
        scaling_clause(&mut c, other, "~");
        local_clauses(&mut c, idx, "");
        local_clauses(&mut c, other, "~");
    } else if share_u {
        let d = idx.df();
        common_u(&mut c, idx, "");
        c.check(idx.theta1 >= 0.0, "theta1 >= 0");
        c.check(other.theta1 >= 0.0, "theta1~ >= 0");
        c.check(
            lt(2.0 * inv(idx.p1).max(inv(other.p1)), inv(idx.p0) + 1.0 / d),
            "max{2/p1; 2/p1~} < 1/p0 + 1/d",
        );
        let eta0 = idx.eta0();
        c.eps(eta0, d + 1.0, inv(idx.p0), "eta0 <= d + 1 - eps_(1/p0)");
        for (b, sfx) in [(idx, ""), (other, "~")] {
            c.eps(
                eta0,
                2.0 * b.eta1(),
                2.0 * b.theta1 - idx.theta0,
                &format!("eta0 <= 2 eta1{sfx} - eps_(2 theta1{sfx} - theta0)"),
            );
            c.check(
                le(eta0, 2.0 * b.eta1() + d * inv(idx.p0) - 2.0 * d * inv(b.p1)),
                &format!("eta0 <= 2 eta1{sfx} + d/p0 - 2d/p1{sfx}"),
            );
        }
    } else {
        return Err(Error::InvalidArgument(
            "index tuples must share (p1, theta1) or (p0, theta0)".into(),
        ));
    }
    Ok(c.finish())
}

/// Classification of a `(p0, theta0)` point for fixed `(p1, theta1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Persistence in the weighted space itself.
    DarkGray,
    /// Persistence of the L² decay rate only.
    LightGray,
    Outside,
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Region::DarkGray => "dark_gray",
            Region::LightGray => "light_gray",
            Region::Outside => "outside",
        }
    }
}

pub fn region_classify(idx: &MhdIndices) -> Region {
    if thm3_admissible(idx).admissible {
        Region::DarkGray
    } else if thm1_admissible(idx).admissible {
        Region::LightGray
    } else {
        Region::Outside
    }
}

/// Relaxed index pair `(q, mu)` with `L^{p0}_{theta0} ⊂ L^q_mu`,
/// `mu + d/q = eta0 - eps`, and `(q, mu, p1, theta1)` strongly admissible.
///
/// Uses the case-by-case barrier (fast `B`; `theta0 > 2 theta1`;
/// `theta0 <= 2 theta1`; `d < p1 < 2d` via `kappa`). When a case formula
/// does not land in the admissible set, `d/q` is taken at the midpoint of
/// the feasible interval instead.
pub fn embedding_barrier(idx: &MhdIndices, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation eps = {eps} must be > 0"
        )));
    }
    let v = thm1_admissible(idx);
    if !v.admissible {
        return Err(Error::Inadmissible(v.failed));
    }
    let d = idx.df();
    let (eta0, eta1, delta) = (idx.eta0(), idx.eta1(), idx.delta());
    let (p0, theta0, p1, theta1) = (idx.p0, idx.theta0, idx.p1, idx.theta1);
    let from_x = |x: f64| -> (f64, f64) {
        let q = if x <= GUARD { f64::INFINITY } else { d / x };
        (q, eta0 - eps - x)
    };
    let candidate = if idx.fast_b() {
        (p0, theta0 - eps)
    } else if p1 >= 2.0 * d - GUARD {
        if theta0 > 2.0 * theta1 + GUARD {
            from_x(theta0 - 2.0 * theta1 + d * inv(p0) - eps)
        } else {
            (p0, theta0 - eps)
        }
    } else {
        let kappa = 1.0 - (eta0 - delta - eps) / (2.0 * (eta1 - delta));
        let x = 1.0 - (1.0 - delta) * kappa;
        (
            if x <= GUARD { f64::INFINITY } else { d / x },
            2.0 * theta1 * (1.0 - kappa),
        )
    };
    let lands = |(q, mu): (f64, f64)| -> bool {
        if !(mu >= -GUARD) || !(q >= 1.0) || q > p0 * (1.0 + GUARD) {
            return false;
        }
        match MhdIndices::new(idx.d, q, mu.max(0.0), p1, theta1) {
            Ok(j) => thm3_admissible(&j).admissible,
            Err(_) => false,
        }
    };
    if lands(candidate) {
        return Ok((candidate.0, candidate.1.max(0.0)));
    }
    // Feasible interval for x = d/q.
    let lo_strict = 2.0 * d * inv(p1) - 1.0;
    let lo = (d * inv(p0)).max(eta0 - eps - 2.0 * eta1 + 2.0 * d * inv(p1));
    let hi = (eta0 - eps).min(1.0);
    let lo_eff = lo.max(lo_strict);
    if lo_eff < hi - GUARD || (lo_eff <= hi + GUARD && lo_strict < lo - GUARD && hi < 1.0 - GUARD) {
        let x = 0.5 * (lo_eff + hi);
        let c = from_x(x);
        if lands(c) {
            return Ok((c.0, c.1.max(0.0)));
        }
        if lands(from_x(lo)) {
            return Ok(from_x(lo));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no admissible barrier for eps = {eps}; reduce the relaxation"
    )))
}

/// Time exponents of the bilinear estimates and the kernel order used for
/// the `u (x) B` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaExponents {
    pub sigma0: f64,
    pub sigma0_prime: f64,
    pub sigma1: f64,
    pub order: f64,
}

/// `sigma0 = -1 - d/p0`, `sigma0' = -1 - (2d/p1 - d/p0)^+`,
/// `sigma1 = -N + d - d/p0` with `N = max{d + 1; theta1 + d/p1}`, bumped by
/// `1/2` when `p1 < inf` to make the order condition strict.
pub fn sigma_exponents(idx: &MhdIndices) -> Result<SigmaExponents> {
    let v = thm3_admissible(idx);
    if !v.admissible {
        return Err(Error::Inadmissible(v.failed));
    }
    let d = idx.df();
    let sigma0 = -1.0 - d * inv(idx.p0);
    let sigma0_prime = -1.0 - pos(2.0 * d * inv(idx.p1) - d * inv(idx.p0));
    let bump = if idx.p1.is_infinite() { 0.0 } else { 0.5 };
    let order = (d + 1.0).max(idx.eta1()) + bump;
    let sigma1 = -order + d - d * inv(idx.p0);
    let s = SigmaExponents {
        sigma0,
        sigma0_prime,
        sigma1,
        order,
    };
    let mut bad = Vec::new();
    if !(sigma0 > -2.0) {
        bad.push("sigma0 > -2".to_string());
    }
    if !(sigma0_prime > -2.0) {
        bad.push("sigma0' > -2".to_string());
    }
    if !(sigma1 > -order + d - 1.0) {
        bad.push("sigma1 > -N + d - 1".to_string());
    }
    if bad.is_empty() {
        Ok(s)
    } else {
        Err(Error::Inadmissible(bad))
    }
}

/// `c min{1; A^{-2/(1-d/p0)}; A^{-2/(1-[2d/p1-d/p0]^+)}}` for data norm `A`.
pub fn lifetime_lower_bound(data_norm: f64, idx: &MhdIndices, c: f64) -> Result<f64> {
    let v = thm3_admissible(idx);
    if !v.admissible {
        return Err(Error::Inadmissible(v.failed));
    }
    if !(data_norm >= 0.0) {
        return Err(Error::InvalidArgument(format!("data norm {data_norm} < 0")));
    }
    let d = idx.df();
    if data_norm == 0.0 {
        return Ok(c);
    }
    let e1 = -2.0 / (1.0 - d * inv(idx.p0));
    let e2 = -2.0 / (1.0 - pos(2.0 * d * inv(idx.p1) - d * inv(idx.p0)));
    Ok(c * 1f64.min(data_norm.powf(e1)).min(data_norm.powf(e2)))
}

/// The three `(p1, theta1)` panels drawn for `d = 2`: fast-decaying `B`,
/// slow `B` with `p1 >= 2d`, slow `B` with `d < p1 < 2d`.
pub const FIGURE_PANELS: [(f64, f64); 3] = [(f64::INFINITY, 1.5), (8.0, 0.5), (3.0, 0.6)];

/// One raster cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterCell {
    pub inv_p0: f64,
    pub theta0: f64,
    pub region: Region,
}

/// Classifies a `res x res` raster over `1/p0 in [0, 1/d)` and
/// `theta0 in [0, theta_max]`.
pub fn region_raster(
    d: usize,
    p1: f64,
    theta1: f64,
    res: usize,
    theta_max: f64,
) -> Result<Vec<RasterCell>> {
    if res < 2 {
        return Err(Error::InvalidArgument(
            "raster needs at least 2 cells per axis".into(),
        ));
    }
    MhdIndices::new(d, f64::INFINITY, 0.0, p1, theta1)?;
    let df = d as f64;
    let mut out = Vec::with_capacity(res * res);
    for j in 0..res {
        let theta0 = theta_max * j as f64 / (res - 1) as f64;
        for i in 0..res {
            let inv_p0 = i as f64 / (res as f64 * df);
            let p0 = if i == 0 { f64::INFINITY } else { 1.0 / inv_p0 };
            let idx = MhdIndices::new(d, p0, theta0, p1, theta1)?;
            out.push(RasterCell {
                inv_p0,
                theta0,
                region: region_classify(&idx),
            });
        }
    }
    Ok(out)
}

/// Three-colour SVG of a raster produced by [`region_raster`].
pub fn raster_svg(cells: &[RasterCell], res: usize, title: &str) -> String {
    let cell = 4usize;
    let margin = 40usize;
    let size = res * cell;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = size + 2 * margin,
        h = size + 2 * margin
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, c) in cells.iter().enumerate() {
        let fill = match c.region {
            Region::DarkGray => "#555555",
            Region::LightGray => "#bbbbbb",
            Region::Outside => continue,
        };
        let (i, j) = (k % res, k / res);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="{fill}"/>"#,
            margin + i * cell,
            margin + size - (j + 1) * cell
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">1/p0</text>"#,
        margin + size / 2,
        size + margin + 25
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})" text-anchor="middle">theta0</text>"#,
        margin + size / 2,
        margin + size / 2
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-size="12" text-anchor="middle">{}</text>"#,
        margin + size / 2,
        xml_escape(title)
    );
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
