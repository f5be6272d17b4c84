use proptest::prelude::*;

use mhdlab::convolution::{gamma, holder_product};
use mhdlab::experiments::{moment_matrix, DataSpec};
use mhdlab::field::{divergence, leray_project};
use mhdlab::indices::{embedding_barrier, region_classify, thm1_admissible, MhdIndices, Region};
use mhdlab::kernels::oseen_symbol;
use mhdlab::report::{fmt_exponent, parse_exponent, parse_key_values, Manifest};
use mhdlab::solver::MhdState;
use mhdlab::weighted::{weighted_norm, WeightedIndex};
use mhdlab::{snapshot, GridSpec, ScalarField, VectorField};

/// `(x, y, amplitude, width)` of one Gaussian bump.
type Bump = (f64, f64, f64, f64);

fn bumps() -> impl Strategy<Value = Vec<Bump>> {
    prop::collection::vec(
        (-3.0..3.0f64, -3.0..3.0f64, -1.0..1.0f64, 0.7..1.5f64),
        1..4,
    )
}

fn scalar(g: GridSpec, bs: &[Bump]) -> ScalarField {
    let bs = bs.to_vec();
    ScalarField::from_fn(g, move |x| {
        bs.iter()
            .map(|&(cx, cy, a, w)| {
                a * (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / (w * w)).exp()
            })
            .sum()
    })
}

fn vector(g: GridSpec, a: &[Bump], b: &[Bump]) -> VectorField {
    VectorField::new(vec![scalar(g, a), scalar(g, b)]).unwrap()
}

fn grid() -> GridSpec {
    GridSpec::new(2, 32, 8.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(bs in bumps()) {
        let f = scalar(grid(), &bs);
        let back = f.spectrum().to_real();
        prop_assert!(back.sub(&f).max_abs() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn leray_is_an_orthogonal_projection(a in bumps(), b in bumps(), c in bumps(), d in bumps()) {
        let f = vector(grid(), &a, &b);
        let g = vector(grid(), &c, &d);
        let pf = leray_project(&f);
        let ppf = leray_project(&pf);
        prop_assert!(ppf.sub(&pf).l2_norm() <= 1e-10 * pf.l2_norm().max(1e-300));
        let lhs = pf.inner(&g);
        let rhs = f.inner(&leray_project(&g));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * f.l2_norm() * g.l2_norm());
        prop_assert!(divergence(&pf).l2_norm() <= 1e-10 * f.l2_norm());
    }

    #[test]
    fn heat_semigroup_composes(bs in bumps(), s in 0.0..0.5f64, t in 0.0..0.5f64) {
        let f = scalar(grid(), &bs).spectrum();
        let two = f.heat(s).unwrap().heat(t).unwrap();
        let one = f.heat(s + t).unwrap();
        for (x, y) in two.coefficients().iter().zip(one.coefficients()) {
            prop_assert!((x - y).norm() <= 1e-14 * f.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
    }

    #[test]
    fn oseen_symbol_is_divergence_free(
        xi in prop::array::uniform3(-20.0..20.0f64),
        t in 0.0..2.0f64,
        d in 2usize..4,
        j in 0usize..3,
        h in 0usize..3,
    ) {
        prop_assume!(j < d && h < d);
        let xi = &xi[..d];
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        let mut scale = 0.0f64;
        for (k, &x) in xi.iter().enumerate() {
            let v = oseen_symbol(xi, t, j, h, k) * x;
            s += v;
            scale = scale.max(v.norm());
        }
        prop_assert!(s.norm() <= 1e-14 * scale.max(1.0));
    }

    #[test]
    fn gamma_scaling(
        lambda in 0.05..4.0f64,
        order in 1.0..5.0f64,
        x in prop::array::uniform3(-5.0..5.0f64),
    ) {
        let y = [x[0] / lambda, x[1] / lambda, x[2] / lambda];
        let lhs = gamma(lambda, order, x);
        let rhs = lambda.powf(-order) * gamma(1.0, order, y);
        prop_assert!(rel(lhs, rhs) <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn weighted_norm_monotone_in_alpha(bs in bumps(), a in 1.0..6.0f64, alpha in 0.0..3.0f64, step in 0.0..2.0f64) {
        let f = scalar(grid(), &bs);
        let lo = weighted_norm(&f, WeightedIndex::new(a, alpha).unwrap());
        let hi = weighted_norm(&f, WeightedIndex::new(a, alpha + step).unwrap());
        prop_assert!(hi >= lo);
    }

    #[test]
    fn holder_products_hold_on_the_grid(
        a in bumps(), b in bumps(), c in bumps(), d in bumps(),
        p in 1.0..8.0f64, q in 1.0..8.0f64,
        al in 0.0..2.0f64, be in 0.0..2.0f64,
    ) {
        prop_assume!(1.0 / p + 1.0 / q <= 1.0);
        let u = vector(grid(), &a, &b);
        let v = vector(grid(), &c, &d);
        let (lhs, rhs) = holder_product(
            &u,
            &v,
            WeightedIndex::new(p, al).unwrap(),
            WeightedIndex::new(q, be).unwrap(),
        );
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    #[test]
    fn moments_symmetric_and_rotation_invariant(a in bumps(), b in bumps(), c in bumps(), d in bumps()) {
        let g = grid();
        let u = leray_project(&vector(g, &a, &b));
        let bf = leray_project(&vector(g, &c, &d)).scale(0.5);
        let mm = moment_matrix(&MhdState { u: u.clone(), b: bf.clone(), t: 0.0 });
        for j in 0..3 {
            for k in 0..3 {
                prop_assert_eq!(mm.m[j][k], mm.m[k][j]);
            }
        }
        let rot = |f: &VectorField| {
            let n = g.n();
            let (fx, fy) = (f.component(0).values(), f.component(1).values());
            let mut rx = vec![0.0; g.len()];
            let mut ry = vec![0.0; g.len()];
            for flat in 0..g.len() {
                let [i, j, _] = g.unravel(flat);
                let src = g.ravel([j, (n - i) % n, 0]);
                rx[flat] = -fy[src];
                ry[flat] = fx[src];
            }
            VectorField::new(vec![ScalarField::new(g, rx).unwrap(), ScalarField::new(g, ry).unwrap()]).unwrap()
        };
        let mr = moment_matrix(&MhdState { u: rot(&u), b: rot(&bf), t: 0.0 });
        prop_assert!((mr.defect - mm.defect).abs() <= 1e-12 * mm.defect.max(1e-300) + 1e-15);
        prop_assert!(rel(mr.m[0][0], mm.m[1][1]) <= 1e-12);
    }

    #[test]
    fn indices_are_reproducible_and_barrier_lands_dark_gray(
        inv_p0 in 0.0..0.49f64,
        theta0 in 0.0..3.0f64,
        inv_p1 in 0.0..0.49f64,
        theta1 in 0.0..3.0f64,
    ) {
        let p = |x: f64| if x == 0.0 { f64::INFINITY } else { 1.0 / x };
        let i = MhdIndices::new(2, p(inv_p0), theta0, p(inv_p1), theta1);
        prop_assume!(i.is_ok());
        let i = i.unwrap();
        let j = MhdIndices::new(2, p(inv_p0), theta0, p(inv_p1), theta1).unwrap();
        prop_assert_eq!(i.delta().to_bits(), j.delta().to_bits());
        prop_assert_eq!(i.holder().to_bits(), j.holder().to_bits());
        prop_assert_eq!(i.p0_star(), j.p0_star());
        prop_assume!(thm1_admissible(&i).admissible);
        let (q, mu) = embedding_barrier(&i, 0.01).unwrap();
        let k = MhdIndices::new(2, q, mu, i.p1(), i.theta1()).unwrap();
        prop_assert_eq!(region_classify(&k), Region::DarkGray);
    }

    #[test]
    fn exponent_text_round_trips(x in prop_oneof![Just(f64::INFINITY), 1.0..100.0f64]) {
        prop_assert_eq!(parse_exponent(&fmt_exponent(x)).unwrap(), x);
    }

    #[test]
    fn manifest_round_trips(
        entries in prop::collection::btree_map("[a-z][a-z_0-9]{0,8}", "[A-Za-z0-9.:,=/_-]{0,12}", 0..6)
    ) {
        let mut m = Manifest::new();
        for (k, v) in &entries {
            m.set(k, v);
        }
        let parsed = parse_key_values(&m.render()).unwrap();
        let expected: Vec<(String, String)> = entries.into_iter().collect();
        let mut got = parsed;
        got.sort();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn data_spec_round_trips(
        s in 1.5..6.0f64,
        amp in 0.01..3.0f64,
        aspect in 0.5..2.0f64,
        width in 1.0..5.0f64,
        seed in any::<u64>(),
        n in 2usize..8,
    ) {
        for text in [
            format!("stream-bump:s={s},amp={amp},aspect={aspect},width={width}"),
            format!("random-divfree:seed={seed},amp={amp}"),
            format!("cyclic:n={n},amp={amp}"),
            format!("dipole:amp={amp}"),
        ] {
            let spec = DataSpec::parse(&text).unwrap();
            prop_assert_eq!(DataSpec::parse(&spec.render()).unwrap(), spec);
        }
    }

    #[test]
    fn snapshot_round_trips(a in bumps(), b in bumps(), kind in "[a-zA-Z]{1,8}") {
        let g = grid();
        let u = vector(g, &a, &b);
        let comps: Vec<&[f64]> = u.components().iter().map(|c| c.values()).collect();
        let bytes = snapshot::encode(&g, &kind, &comps).unwrap();
        let back = snapshot::decode(&bytes).unwrap();
        prop_assert_eq!(back.grid, g);
        prop_assert_eq!(back.kind, kind);
        for (x, y) in back.components.iter().zip(u.components()) {
            prop_assert_eq!(x.values(), y.values());
        }
    }
}

#[test]
fn generated_data_is_seed_deterministic() {
    let g = grid();
    let make = |seed: u64| {
        let spec = DataSpec::parse(&format!("random-divfree:seed={seed},amp=1")).unwrap();
        mhdlab::experiments::make_divfree(&g, &spec).unwrap()
    };
    let bits = |f: &VectorField| -> Vec<u64> {
        f.components()
            .iter()
            .flat_map(|c| c.values().iter().map(|v| v.to_bits()))
            .collect()
    };
    assert_eq!(bits(&make(5)), bits(&make(5)));
    assert_ne!(bits(&make(5)), bits(&make(6)));
}
