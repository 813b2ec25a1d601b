use elastic_bie::assembly::{Context, Formulation, Side};
use elastic_bie::driver::{
    evaluate_field, scatter, solve, solve_detailed, unit_strengths, IncidentField, PlaneWave,
    PointSource, SolveConfig,
};
use elastic_bie::kernels::ElasticParams;
use elastic_bie::Error;
use num_complex::Complex64;

const D1: [f64; 9] = [
    1.0 / 280.0,
    -4.0 / 105.0,
    0.2,
    -0.8,
    0.0,
    0.8,
    -0.2,
    4.0 / 105.0,
    -1.0 / 280.0,
];
const D2: [f64; 9] = [
    -1.0 / 560.0,
    8.0 / 315.0,
    -0.2,
    1.6,
    -205.0 / 72.0,
    1.6,
    -0.2,
    8.0 / 315.0,
    -1.0 / 560.0,
];

/// μΔu + (λ+μ)∇(∇·u) + ρω²u by eighth-order central differences, relative to ρω²|u|.
fn navier_residual(
    u: &dyn Fn([f64; 2]) -> [Complex64; 2],
    x: [f64; 2],
    h: f64,
    p: &ElasticParams,
) -> f64 {
    let at = |a: i32, b: i32| u([x[0] + a as f64 * h, x[1] + b as f64 * h]);
    let mut dxx = [Complex64::default(); 2];
    let mut dyy = [Complex64::default(); 2];
    let mut dxy = [Complex64::default(); 2];
    for (i, (c1, c2)) in D1.iter().zip(&D2).enumerate() {
        let a = i as i32 - 4;
        let (ux, uy) = (at(a, 0), at(0, a));
        for c in 0..2 {
            dxx[c] += ux[c] * (c2 / (h * h));
            dyy[c] += uy[c] * (c2 / (h * h));
        }
        for (j, c1b) in D1.iter().enumerate() {
            let v = at(a, j as i32 - 4);
            for c in 0..2 {
                dxy[c] += v[c] * (c1 * c1b / (h * h));
            }
        }
    }
    let u0 = u(x);
    let k2 = p.rho * p.omega * p.omega;
    let lap = [dxx[0] + dyy[0], dxx[1] + dyy[1]];
    let grad_div = [dxx[0] + dxy[1], dxy[0] + dyy[1]];
    let res: f64 = (0..2)
        .map(|c| (lap[c] * p.mu + grad_div[c] * (p.lambda + p.mu) + u0[c] * k2).norm())
        .fold(0.0, f64::max);
    res / (k2 * u0[0].norm().hypot(u0[1].norm()))
}

#[test]
fn incident_fields_solve_navier() {
    let p = ElasticParams::default();
    for w in [PlaneWave::compressional(0.3), PlaneWave::shear(1.1)] {
        for x in [[0.4, -0.7], [2.0, 1.5]] {
            let r = navier_residual(&|y| w.displacement(y, &p), x, 0.05, &p);
            assert!(r < 1e-10, "{w:?} at {x:?}: {r:.3e}");
        }
    }
    for q in unit_strengths() {
        let src = PointSource::new([0.5, 0.0], q, p);
        for x in [[2.0, 1.0], [-1.5, 3.0]] {
            let r = navier_residual(&|y| src.field(y).unwrap(), x, 0.02, &p);
            assert!(r < 1e-8, "{x:?}: {r:.3e}");
        }
    }
}

#[test]
fn zero_strength_gives_zero_field() {
    let p = ElasticParams::default();
    let src = PointSource::new([0.5, 0.0], [Complex64::default(); 2], p);
    let u = src.field([3.0, 1.0]).unwrap();
    let t = src.traction([3.0, 1.0], [0.6, 0.8], &p);
    assert!(u.iter().chain(&t).all(|z| *z == Complex64::default()));
}

#[test]
fn field_evaluation_is_linear() {
    let cfg = SolveConfig::new("droplet", Formulation::Dnd, Side::Exterior);
    let s = solve_detailed(&cfg).unwrap();
    let n = s.mesh.n_dofs();
    let ctx = Context::new(ElasticParams::default(), 16).unwrap();
    let a: Vec<Complex64> = (0..n).map(|i| s.density[(i, 0)]).collect();
    let b: Vec<Complex64> = (0..n).map(|i| s.density[(i, 1)]).collect();
    let (ca, cb) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
    let mix: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| ca * x + cb * y).collect();
    let pts = [[12.1, 5.2], [1.5, 0.4], [-0.3, -0.1]];
    for f in [
        Formulation::Dnd,
        Formulation::Snn,
        Formulation::CombinedDirichlet,
    ] {
        let ua = evaluate_field(&s.mesh, &a, f, &pts, &ctx).unwrap();
        let ub = evaluate_field(&s.mesh, &b, f, &pts, &ctx).unwrap();
        let um = evaluate_field(&s.mesh, &mix, f, &pts, &ctx).unwrap();
        let zero = evaluate_field(&s.mesh, &vec![Complex64::default(); n], f, &pts, &ctx).unwrap();
        for k in 0..pts.len() {
            for c in 0..2 {
                let want = ca * ua[k][c] + cb * ub[k][c];
                assert!((um[k][c] - want).norm() <= 1e-14 * want.norm().max(1.0));
                assert_eq!(zero[k][c], Complex64::default());
            }
        }
    }
}

#[test]
fn combined_and_double_layer_fields_agree() {
    let w = PlaneWave::shear(0.4);
    for (g, n_sub) in [("circle", 0), ("droplet", 40)] {
        let mut a = SolveConfig::new(g, Formulation::Dnd, Side::Exterior);
        a.n_sub = n_sub;
        a.targets = vec![[12.1, 5.2], [-3.0, 2.5]];
        let mut b = a.clone();
        b.formulation = Formulation::CombinedDirichlet;
        let (ua, ub) = (scatter(&a, &w).unwrap(), scatter(&b, &w).unwrap());
        for (x, y) in ua.iter().zip(&ub) {
            for c in 0..2 {
                assert!((x[c] - y[c]).norm() < 1e-11, "{g}: {} vs {}", x[c], y[c]);
            }
        }
    }
}

#[test]
fn all_formulations_nonsingular_at_default_frequency() {
    for g in ["circle", "droplet"] {
        for (f, side) in [
            (Formulation::Dnd, Side::Exterior),
            (Formulation::Dnd, Side::Interior),
            (Formulation::Snn, Side::Exterior),
            (Formulation::Snn, Side::Interior),
        ] {
            let mut cfg = SolveConfig::new(g, f, side);
            cfg.n_sub = 20;
            let r = solve(&cfg).unwrap();
            assert!(
                r.condition.is_finite() && r.condition < 1e8,
                "{g} {f:?} {side:?}: {:.3e}",
                r.condition
            );
            assert!(
                r.errors.iter().all(|e| *e >= 0.0 && *e < 1e-8),
                "{g} {f:?} {side:?}: {:?}",
                r.errors
            );
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let mut cfg = SolveConfig::new("sector", Formulation::Snn, Side::Interior);
    cfg.panels = 8;
    cfg.n_sub = 10;
    let (a, b) = (solve_detailed(&cfg).unwrap(), solve_detailed(&cfg).unwrap());
    assert_eq!(a.report.errors, b.report.errors);
    assert!((0..a.density.nrows()).all(|i| a.density[(i, 0)] == b.density[(i, 0)]));
}

#[test]
fn misplaced_points_are_rejected() {
    let mut cfg = SolveConfig::new("circle", Formulation::Dnd, Side::Exterior);
    cfg.source = [5.0, 0.0];
    assert!(matches!(solve(&cfg), Err(Error::Domain(_))));
    let mut cfg = SolveConfig::new("circle", Formulation::Dnd, Side::Exterior);
    cfg.targets = vec![[0.1, 0.2]];
    assert!(matches!(solve(&cfg), Err(Error::Domain(_))));
    let cfg = SolveConfig::new("circle", Formulation::CombinedDirichlet, Side::Interior);
    assert!(matches!(solve(&cfg), Err(Error::Config(_))));
}
