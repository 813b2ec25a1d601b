mod common;

use elastic_bie::assembly::{assemble, Context, Formulation, Side};
use elastic_bie::driver::{solve, solve_detailed, CornerMethod, SolveConfig};
use elastic_bie::geometry::{build_coarse_mesh, make_geometry, Mesh};
use elastic_bie::kernels::{ElasticParams, KernelKind};
use elastic_bie::linalg::{inverse, max_abs, select};
use elastic_bie::rcip::{compute_r, fine_corner_mesh, split_k};
use faer::Mat;
use num_complex::Complex64;

fn ctx() -> Context {
    Context::new(ElasticParams::default(), 16).unwrap()
}

fn coarse(g: &str, n: usize) -> Mesh {
    let geom = make_geometry(g, None).unwrap();
    let counts = vec![n; geom.n_components()];
    build_coarse_mesh(&geom, &counts).unwrap()
}

fn corner_dofs(mesh: &Mesh, c: usize) -> Vec<usize> {
    mesh.nodes_of_panels(&mesh.corner_neighborhoods[c])
        .into_iter()
        .flat_map(|i| [2 * i, 2 * i + 1])
        .collect()
}

#[test]
fn unrefined_r_is_local_inverse() {
    let ctx = ctx();
    let mesh = coarse("droplet", 12);
    let sigma = -0.5;
    let k = assemble(&mesh, KernelKind::AdjointDouble, &ctx).unwrap();
    let dofs = corner_dofs(&mesh, 0);
    let local = select(k.as_ref(), &dofs, &dofs);
    let m = Mat::<Complex64>::from_fn(dofs.len(), dofs.len(), |i, j| {
        local[(i, j)] / sigma
            + if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
    });
    let want = inverse(m.as_ref()).unwrap();
    let r = compute_r(&mesh, 0, 0, KernelKind::AdjointDouble, sigma, &ctx)
        .unwrap()
        .r;
    let d = max_abs((&r - &want).as_ref()) / max_abs(want.as_ref());
    assert!(d < 1e-10, "{d:.3e}");
}

#[test]
fn recursion_reaches_a_fixed_point() {
    // successive differences shrink like 2^(-ν k) with ν ≈ 0.61 at this corner
    let ctx = ctx();
    let mesh = coarse("droplet", 12);
    let r = |k| {
        compute_r(&mesh, 0, k, KernelKind::Double, 0.5, &ctx)
            .unwrap()
            .r
    };
    let step = |k| max_abs((&r(k) - &r(k - 1)).as_ref());
    let (s40, s60, s80) = (step(40), step(60), step(80));
    assert!(
        s60 < 1e-3 * s40 && s80 < 1e-3 * s60,
        "{s40:.3e} {s60:.3e} {s80:.3e}"
    );
    assert!(s80 < 1e-14, "{s80:.3e}");
}

#[test]
fn compressed_inverse_matches_fine_mesh_inverse() {
    let e = common::rcip_direct_error(6);
    assert!(e < 1e-9, "{e:.3e}");
}

fn paired(g: &str, f: Formulation, side: Side, panels: usize, n_sub: usize) -> f64 {
    let mut cfg = SolveConfig::new(g, f, side);
    cfg.panels = panels;
    cfg.n_sub = n_sub;
    let rc = solve_detailed(&cfg).unwrap();
    cfg.method = CornerMethod::Direct;
    let di = solve_detailed(&cfg).unwrap();
    let skip: Vec<usize> = rc
        .mesh
        .corner_neighborhoods
        .iter()
        .flat_map(|nb| rc.mesh.nodes_of_panels(nb))
        .collect();
    let mut worst = 0.0f64;
    for (i, nd) in rc.mesh.nodes.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        let j = di
            .mesh
            .nodes
            .iter()
            .position(|m| m.pos == nd.pos)
            .expect("coarse node kept by refinement");
        for col in 0..2 {
            for c in 0..2 {
                let (a, b) = (rc.density[(2 * i + c, col)], di.density[(2 * j + c, col)]);
                worst = common::worse(worst, (a - b).norm() / b.norm().max(1e-3));
            }
        }
    }
    worst
}

#[test]
fn compressed_solve_matches_direct_refined_solve() {
    for n_sub in [1, 3, 6] {
        let d = paired("droplet", Formulation::Snn, Side::Exterior, 12, n_sub);
        assert!(d < 1e-9, "droplet n_sub {n_sub}: {d:.3e}");
        let d = paired(
            "sector",
            Formulation::CombinedDirichlet,
            Side::Exterior,
            8,
            n_sub,
        );
        assert!(d < 1e-9, "sector n_sub {n_sub}: {d:.3e}");
    }
}

#[test]
fn reconstruction_matches_direct_refined_solve() {
    let n_sub = 5;
    let mut cfg = SolveConfig::new("droplet", Formulation::Dnd, Side::Interior);
    cfg.panels = 12;
    cfg.n_sub = n_sub;
    let rc = solve_detailed(&cfg).unwrap();
    cfg.method = CornerMethod::Direct;
    let di = solve_detailed(&cfg).unwrap();
    let ctx = ctx();
    let comp = rc.compressed.as_ref().unwrap();
    let ci = &comp.corners[0];
    let local: Vec<Complex64> = ci.dofs.iter().map(|&d| comp.phi_tilde[(d, 0)]).collect();
    let fine_vals = ci.reconstruct_fine(&local, &ctx).unwrap();
    let fine = fine_corner_mesh(&rc.mesh, 0, n_sub).unwrap();
    let apex = rc.mesh.geom.corner_point(0);
    let mut worst = 0.0f64;
    for (q, nd) in fine.nodes.iter().enumerate() {
        let pos = [apex[0] + nd.pos[0], apex[1] + nd.pos[1]];
        let (j, dist) = di
            .mesh
            .nodes
            .iter()
            .enumerate()
            .map(|(j, m)| (j, (m.pos[0] - pos[0]).hypot(m.pos[1] - pos[1])))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!(dist < 1e-12, "no fine node near local node {q}");
        for c in 0..2 {
            let (a, b) = (fine_vals[2 * q + c], di.density[(2 * j + c, 0)]);
            worst = common::worse(worst, (a - b).norm() / b.norm().max(1e-3));
        }
    }
    assert!(worst < 1e-9, "{worst:.3e}");
}

#[test]
fn conditioning_is_bounded_in_refinement() {
    let cond = |n_sub| {
        let mut cfg = SolveConfig::new("droplet", Formulation::Snn, Side::Exterior);
        cfg.panels = 24;
        cfg.n_sub = n_sub;
        solve(&cfg).unwrap().condition
    };
    let (c10, c80) = (cond(10), cond(80));
    assert!(c80 / c10 < 2.0 && c10 / c80 < 2.0, "{c10:.3e} {c80:.3e}");
}

#[test]
fn operator_split_is_exact_and_local() {
    let ctx = ctx();
    let mesh = coarse("sector", 8);
    let k = assemble(&mesh, KernelKind::Double, &ctx).unwrap();
    let (star, rest) = split_k(&k, &mesh);
    assert_eq!(max_abs((&(&star + &rest) - &k).as_ref()), 0.0);
    let inside: Vec<usize> = (0..mesh.corner_neighborhoods.len())
        .flat_map(|c| corner_dofs(&mesh, c))
        .collect();
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            if !(inside.contains(&i) && inside.contains(&j)) {
                assert_eq!(star[(i, j)], Complex64::default());
            }
        }
    }
}

#[test]
fn smooth_geometry_skips_compression() {
    let cfg = SolveConfig::new("ellipse", Formulation::Dnd, Side::Exterior);
    let s = solve_detailed(&cfg).unwrap();
    assert!(s.compressed.is_none());
}
