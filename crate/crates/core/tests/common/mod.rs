//! Independent oracles shared by the property tests and the acceptance run.
#![allow(dead_code)]

use elastic_bie::assembly::{assemble, jump_check, Context};
use elastic_bie::driver::{IncidentField, PointSource};
use elastic_bie::geometry::{
    build_coarse_mesh, gauss_legendre, make_geometry, BoundaryGeometry, Node,
};
use elastic_bie::kernels::{ElasticParams, KernelEvaluator, KernelKind};
use elastic_bie::quadrature::{cauchy_table, legendre_values, log_table};
use elastic_bie::rcip::{compute_r, compute_r_direct};
use elastic_bie::special::{bessel_j, bessel_y, hankel1};
use num_complex::Complex64;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use std::f64::consts::PI;

/// Reproducible uniform samples.
pub struct Sampler(TestRunner);

impl Sampler {
    pub fn new() -> Self {
        Sampler(TestRunner::deterministic())
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (lo..hi)
            .new_tree(&mut self.0)
            .expect("range strategy")
            .current()
    }
}

/// Running maximum that treats NaN as the worst possible value.
pub fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// ∫_a^b f on geometrically graded subintervals accumulating at c ∈ [a, b].
pub fn graded(f: &dyn Fn(f64) -> f64, a: f64, b: f64, c: f64) -> f64 {
    let (x, w) = gauss_legendre(16).unwrap();
    let mut acc = 0.0;
    for (lo_end, hi_end) in [(c, b), (c, a)] {
        let span = hi_end - lo_end;
        if span == 0.0 {
            continue;
        }
        for k in 0..60 {
            let (u, v) = (
                lo_end + span * 0.5f64.powi(k + 1),
                lo_end + span * 0.5f64.powi(k),
            );
            if u == lo_end || u == v {
                break;
            }
            let h = 0.5 * (v - u);
            for (xi, wi) in x.iter().zip(&w) {
                acc += wi * h.abs() * f(u + h * (xi + 1.0));
            }
        }
    }
    acc
}

/// Worst relative deviation of J_n, Y_n, H_n^(1) (n ≤ 3) from the reference library,
/// measured against |H_n^(1)| which has no zeros.
pub fn special_function_error(samples: usize) -> f64 {
    let mut s = Sampler::new();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let z = 10f64.powf(s.uniform(-3.0, 2.5));
        let n = (s.uniform(0.0, 4.0) as usize).min(3);
        let zc = Complex64::new(z, 0.0);
        let h_ref = complex_bessel::hankel1(n as f64, zc).unwrap();
        let j_ref = complex_bessel::besselj(n as f64, zc).unwrap().re;
        let y_ref = complex_bessel::bessely(n as f64, zc).unwrap().re;
        let scale = h_ref.norm();
        let h = hankel1(n, z).unwrap();
        for err in [
            (h - h_ref).norm(),
            (bessel_j(n, z).unwrap() - j_ref).abs(),
            (bessel_y(n, z).unwrap() - y_ref).abs(),
        ] {
            worst = worse(worst, err / scale);
        }
    }
    worst
}

/// Worst error of the Cauchy and log product-integration tables against direct
/// quadrature, over `targets` chart points inside and outside [-1, 1].
pub fn table_error(targets: usize, n: usize) -> f64 {
    let (gx, gw) = gauss_legendre(64).unwrap();
    let mut s = Sampler::new();
    let mut worst = 0.0f64;
    for i in 0..targets {
        let t = if i % 5 == 4 {
            let m = s.uniform(1.001, 3.0);
            if i % 2 == 0 {
                m
            } else {
                -m
            }
        } else {
            s.uniform(-0.999, 0.999)
        };
        let c = cauchy_table(t, n).unwrap();
        let l = log_table(t, n).unwrap();
        let pt = legendre_values(n, t);
        for j in 0..n {
            // inside: p.v. ∫ P_j/(t-s) = P_j(t) ln|(t+1)/(t-1)| + ∫ (P_j(s) - P_j(t))/(t-s)
            let c_ref = if t.abs() < 1.0 {
                let smooth: f64 = gx
                    .iter()
                    .zip(&gw)
                    .map(|(x, w)| w * (legendre_values(n, *x)[j] - pt[j]) / (t - x))
                    .sum();
                pt[j] * ((t + 1.0) / (t - 1.0)).abs().ln() + smooth
            } else {
                graded(
                    &|x| legendre_values(n, x)[j] / (t - x),
                    -1.0,
                    1.0,
                    t.signum(),
                )
            };
            let l_ref = graded(
                &|x| (t - x).abs().ln() * legendre_values(n, x)[j],
                -1.0,
                1.0,
                t.clamp(-1.0, 1.0),
            );
            worst = worse(worst, (c[j] - c_ref).abs() / c_ref.abs().max(1.0));
            worst = worse(worst, (l[j] - l_ref).abs() / l_ref.abs().max(1.0));
        }
    }
    worst
}

pub const ALL_KINDS: [KernelKind; 4] = [
    KernelKind::Single,
    KernelKind::Double,
    KernelKind::AdjointDouble,
    KernelKind::Combined,
];

fn node_at(geom: &BoundaryGeometry, s: f64) -> Node {
    Node::new(s, geom.eval(0, s), 0.0)
}

/// Worst relative mismatch between the chart split ln|t-s| K1 + K2/(t-s) + K3 and the
/// kernel itself, over `pairs` random node pairs (own panel and chart continuation).
pub fn split_error(pairs: usize) -> f64 {
    let p = ElasticParams::default();
    let ev = KernelEvaluator::new(p);
    let geom = make_geometry("ellipse", None).unwrap();
    let mut s = Sampler::new();
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let half = s.uniform(0.01, 0.3);
        let centre = s.uniform(0.0, 2.0 * PI);
        let tr = if i % 4 == 3 { 3.0 } else { 1.0 };
        let (t, u) = (s.uniform(-tr, tr), s.uniform(-1.0, 1.0));
        if (t - u).abs() < 1e-8 {
            continue;
        }
        let x = node_at(&geom, centre + half * t);
        let y = node_at(&geom, centre + half * u);
        for kind in ALL_KINDS {
            let ks = ev.param_split(kind, &x, t, &y, u, half);
            let dt = t - u;
            let k = ev.kernel(kind, x.pos, x.normal, &y).unwrap();
            let scale = (ks.k1 * dt.abs().ln())
                .max_abs()
                .max((ks.k2 * (1.0 / dt)).max_abs())
                .max(ks.k3.max_abs())
                .max(k.max_abs());
            worst = worse(worst, (ks.value(dt) - k).max_abs() / scale);
        }
    }
    worst
}

/// Circle of radius 2: y - x for parameters s0 + delta and s0, free of cancellation.
fn circle_offset(delta: f64, s0: f64) -> [f64; 2] {
    let (h, m) = (0.5 * delta, s0 + 0.5 * delta);
    [-4.0 * m.sin() * h.sin(), 4.0 * m.cos() * h.sin()]
}

/// Symmetric (principal value) dyadic integration around parameter s0 on the circle of
/// ∫ f(node, y - x) ds.
fn circle_pv<const M: usize>(
    s0: f64,
    f: &dyn Fn(&Node, [f64; 2]) -> [Complex64; M],
) -> [Complex64; M] {
    let geom = make_geometry("circle", None).unwrap();
    let (gx, gw) = gauss_legendre(16).unwrap();
    let mut acc = [Complex64::default(); M];
    for side in [-1.0, 1.0] {
        let mut hi = PI;
        for _ in 0..55 {
            let lo = 0.5 * hi;
            for (x, w) in gx.iter().zip(&gw) {
                let d = lo + (hi - lo) * 0.5 * (x + 1.0);
                let s = s0 + side * d;
                let nd = node_at(&geom, s);
                let v = f(&nd, circle_offset(side * d, s0));
                for c in 0..M {
                    acc[c] += v[c] * (w * 0.5 * (hi - lo) * nd.speed);
                }
            }
            hi = lo;
        }
    }
    acc
}

/// Deviation of the principal value ∫ (T_y E)^T ds_y from -I/2 at points of the circle.
pub fn static_gauss_error() -> f64 {
    let ev = KernelEvaluator::new(ElasticParams::default());
    let mut worst = 0.0f64;
    for s0 in [0.0, 0.7, 2.1, 4.4] {
        let v = circle_pv::<4>(s0, &|y, off| {
            let k = ev
                .traction_ty_e([0.0, 0.0], off, y.normal, y.tangent)
                .unwrap()
                .transpose();
            [k.0[0][0], k.0[0][1], k.0[1][0], k.0[1][1]]
        });
        let want = [-0.5, 0.0, 0.0, -0.5];
        for c in 0..4 {
            worst = worse(worst, (v[c] - want[c]).norm());
        }
    }
    worst
}

/// Worst relative difference between rows of the assembled operators on the circle and
/// an adaptive principal-value evaluation of the same integrals.
pub fn operator_row_error() -> f64 {
    let p = ElasticParams::default();
    let ctx = Context::new(p, 16).unwrap();
    let ev = KernelEvaluator::new(p);
    let geom = make_geometry("circle", None).unwrap();
    let mesh = build_coarse_mesh(&geom, &[12]).unwrap();
    let src = PointSource::new(
        [0.5, 0.0],
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        p,
    );
    let mut worst = 0.0f64;
    for kind in ALL_KINDS {
        let density = |nd: &Node| {
            if kind == KernelKind::Single {
                src.traction(nd.pos, nd.normal, &p)
            } else {
                src.displacement(nd.pos, &p)
            }
        };
        let k = assemble(&mesh, kind, &ctx).unwrap();
        let v: Vec<Complex64> = mesh.nodes.iter().flat_map(&density).collect();
        for i in [0usize, 3, 7, 15, 40, 101] {
            let xi = mesh.nodes[i];
            let o = circle_pv::<2>(xi.param, &|y, off| {
                let rel = Node { pos: off, ..*y };
                ev.kernel(kind, [0.0, 0.0], xi.normal, &rel)
                    .unwrap()
                    .apply(density(y))
            });
            for c in 0..2 {
                let a: Complex64 = (0..mesh.n_dofs()).map(|j| k[(2 * i + c, j)] * v[j]).sum();
                worst = worse(worst, (a - o[c]).norm() / o[c].norm().max(1.0));
            }
        }
    }
    worst
}

/// For each ε, the worst deviation over sample nodes of the double-layer jump from φ and
/// of the single-layer traction jump from -φ on the circle.
pub fn jump_errors(eps: &[f64]) -> Vec<f64> {
    let p = ElasticParams::default();
    let ctx = Context::new(p, 16).unwrap();
    let geom = make_geometry("circle", None).unwrap();
    let mesh = build_coarse_mesh(&geom, &[12]).unwrap();
    let src = PointSource::new(
        [0.5, 0.3],
        [Complex64::new(1.0, 0.0), Complex64::new(0.5, -0.2)],
        p,
    );
    let phi: Vec<Complex64> = mesh
        .nodes
        .iter()
        .flat_map(|nd| src.displacement(nd.pos, &p))
        .collect();
    let mut worst = vec![0.0f64; eps.len()];
    for node in [0usize, 37, 95, 150] {
        for (k, (_, dj, tj)) in jump_check(&mesh, &phi, node, eps, &ctx)
            .unwrap()
            .into_iter()
            .enumerate()
        {
            for c in 0..2 {
                let want = phi[2 * node + c];
                worst[k] = worse(
                    worse(worst[k], (dj[c] - want).norm()),
                    (tj[c] + want).norm(),
                );
            }
        }
    }
    worst
}

/// Worst entrywise difference between the recursive compressed inverse and the one
/// built on the explicit fine mesh, for n_sub = 1..=max_sub on the droplet and sector.
pub fn rcip_direct_error(max_sub: usize) -> f64 {
    let ctx = Context::new(ElasticParams::default(), 16).unwrap();
    let mut worst = 0.0f64;
    for (g, n) in [("droplet", 12), ("sector", 8)] {
        let geom = make_geometry(g, None).unwrap();
        let counts = vec![n; geom.n_components()];
        let mesh = build_coarse_mesh(&geom, &counts).unwrap();
        for (kind, sigma) in [(KernelKind::Double, 0.5), (KernelKind::AdjointDouble, -0.5)] {
            for n_sub in 1..=max_sub {
                let r = compute_r(&mesh, 0, n_sub, kind, sigma, &ctx).unwrap().r;
                let d = compute_r_direct(&mesh, 0, n_sub, kind, sigma, &ctx).unwrap();
                let scale = elastic_bie::linalg::max_abs(d.as_ref()).max(1.0);
                worst = worse(
                    worst,
                    elastic_bie::linalg::max_abs((&r - &d).as_ref()) / scale,
                );
            }
        }
    }
    worst
}
