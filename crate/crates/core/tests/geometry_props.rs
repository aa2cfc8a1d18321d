use hkbounds::geometry::*;
use proptest::prelude::*;

const MODELS: [ModelId; 7] = [
    ModelId::Heat(2),
    ModelId::Heisenberg,
    ModelId::Kolmogorov,
    ModelId::IteratedKolmogorov(3),
    ModelId::IteratedKolmogorov(5),
    ModelId::QuadraticLifted,
    ModelId::Asian,
];

fn point(model: ModelId, raw: &[f64]) -> SpacetimePoint {
    let n = model.spatial_dim();
    let mut x = raw[..n].to_vec();
    if model == ModelId::Asian {
        x[0] = x[0].abs() + 0.2;
    }
    SpacetimePoint::new(x, raw[n])
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 6)
}

fn scale(z: &SpacetimePoint) -> f64 {
    z.x.iter().fold(z.t.abs(), |m, v| m.max(v.abs())).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn group_axioms(m in 0..MODELS.len(), a in coords(), b in coords(), c in coords()) {
        let model = MODELS[m];
        let (p, q, r) = (point(model, &a), point(model, &b), point(model, &c));
        let lhs = group_compose(model, &group_compose(model, &p, &q).unwrap(), &r).unwrap();
        let rhs = group_compose(model, &p, &group_compose(model, &q, &r).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale(&lhs).powi(2), "{lhs:?} {rhs:?}");
        let e = SpacetimePoint::origin(model);
        prop_assert!(group_compose(model, &e, &p).unwrap().max_abs_diff(&p) == 0.0);
        prop_assert!(group_compose(model, &p, &e).unwrap().max_abs_diff(&p) <= 1e-15 * scale(&p));
        let inv = group_inverse(model, &p).unwrap();
        let id = group_compose(model, &inv, &p).unwrap();
        prop_assert!(id.max_abs_diff(&e) <= 1e-12 * scale(&inv).powi(2), "{id:?}");
        let id = group_compose(model, &p, &inv).unwrap();
        prop_assert!(id.max_abs_diff(&e) <= 1e-12 * scale(&inv).powi(2), "{id:?}");
    }

    #[test]
    fn dilations_form_a_group(m in 0..MODELS.len() - 1, a in coords(), rho in 0.2..5.0f64, sigma in 0.2..5.0f64) {
        let model = MODELS[m];
        let z = point(model, &a);
        let lhs = dilate(model, rho, &dilate(model, sigma, &z).unwrap()).unwrap();
        let rhs = dilate(model, rho * sigma, &z).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale(&rhs));
        prop_assert_eq!(dilate(model, 1.0, &z).unwrap(), z);
    }

    #[test]
    fn dilation_is_a_group_automorphism(m in 0..MODELS.len() - 1, a in coords(), b in coords(), rho in 0.3..3.0f64) {
        let model = MODELS[m];
        let (p, q) = (point(model, &a), point(model, &b));
        let lhs = dilate(model, rho, &group_compose(model, &p, &q).unwrap()).unwrap();
        let rhs = group_compose(model, &dilate(model, rho, &p).unwrap(), &dilate(model, rho, &q).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-11 * scale(&lhs).powi(2));
    }
}

fn controls(model: ModelId, raw: &[f64]) -> ControlPath {
    let m = model.controls();
    let values = raw.chunks(m).take(4).map(|c| c.to_vec()).collect();
    ControlPath::uniform(values, 0.8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_are_left_invariant(m in 0..MODELS.len(), a in coords(), b in coords(), w in prop::collection::vec(-1.5..1.5f64, 8)) {
        let model = MODELS[m];
        let (z0, z) = (point(model, &a), point(model, &b));
        let omega = controls(model, &w);
        let step = 1e-3;
        let direct = integrate_path(model, &group_compose(model, &z0, &z).unwrap(), &omega, step).unwrap();
        let base = integrate_path(model, &z, &omega, step).unwrap();
        prop_assert_eq!(direct.samples.len(), base.samples.len());
        for (d, s) in direct.samples.iter().zip(&base.samples) {
            let moved = group_compose(model, &z0, s).unwrap();
            prop_assert!(d.max_abs_diff(&moved) <= 1e-9 * scale(&moved).powi(2), "{d:?} {moved:?}");
        }
    }

    #[test]
    fn paths_are_dilation_covariant(m in 0..MODELS.len() - 1, a in coords(), w in prop::collection::vec(-1.5..1.5f64, 8), rho in 0.5..2.0f64) {
        let model = MODELS[m];
        let z0 = point(model, &a);
        let omega = controls(model, &w);
        let step = 1e-3;
        let orig = integrate_path(model, &z0, &omega, step).unwrap();
        let small = integrate_path(model, &dilate(model, 1.0 / rho, &z0).unwrap(), &omega.rescaled(rho), step / (rho * rho)).unwrap();
        prop_assert_eq!(orig.samples.len(), small.samples.len());
        for (o, s) in orig.samples.iter().zip(&small.samples) {
            let expect = dilate(model, 1.0 / rho, o).unwrap();
            prop_assert!(s.max_abs_diff(&expect) <= 1e-9 * scale(&expect).powi(2), "{s:?} {expect:?}");
        }
    }

    #[test]
    fn cost_and_length_cauchy_schwarz(w in prop::collection::vec(-3.0..3.0f64, 8), horizon in 0.1..4.0f64) {
        let values: Vec<Vec<f64>> = w.chunks(2).map(|c| c.to_vec()).collect();
        let omega = ControlPath::uniform(values, horizon).unwrap();
        let (l, phi) = (path_length(&omega), path_cost(&omega));
        prop_assert!(l * l <= phi * horizon * (1.0 + 1e-12));
        let norm = w[0].hypot(w[1]);
        let flat = ControlPath::constant(vec![w[0], w[1]], horizon).unwrap();
        prop_assert!((path_length(&flat).powi(2) - path_cost(&flat) * horizon).abs() <= 1e-12 * (1.0 + norm * norm * horizon * horizon));
    }
}

#[test]
fn lifted_quadratic_projects_onto_the_unlifted_dynamics() {
    let omega = ControlPath::uniform(vec![vec![1.0], vec![-2.0], vec![0.5]], 0.9).unwrap();
    let z0 = SpacetimePoint::new(vec![0.3, -0.2, 0.7], 1.0);
    let path = integrate_path(ModelId::QuadraticLifted, &z0, &omega, 1e-3).unwrap();
    // exact unlifted flow x' = ω, y' = x²
    let (mut x, mut y) = (0.3, -0.2);
    let mut s = 0.0;
    for (k, v) in [1.0, -2.0, 0.5].iter().enumerate() {
        let h = 0.3;
        y += x * x * h + x * v * h * h + v * v * h * h * h / 3.0;
        x += v * h;
        s += h;
        let i = ((k + 1) as f64 * 0.3 / 1e-3).round() as usize;
        let p = &path.samples[i];
        assert!((p.x[0] - x).abs() < 1e-12 && (p.x[1] - y).abs() < 1e-12, "{s}: {p:?}");
    }
}
