//! Incident fields, manufactured solutions, solve orchestration and corner analysis.

use crate::assembly::{
    build_system, evaluate_layer, is_inside, Context, Formulation, Side, System, Target,
};
use crate::error::{Error, Result};
use crate::geometry::{
    build_coarse_mesh, gauss_legendre, make_geometry, refine_dyadic, Mesh, Node,
};
use crate::kernels::{
    tangent_of, traction_of_field, ElasticParams, FieldSample, KernelEvaluator, KernelKind,
};
use crate::linalg::{CMat, Lu, SINGULAR_CONDITION};
use crate::rcip::{fine_corner_mesh, solve_compressed, CompressedSolution};
use faer::Mat;
use num_complex::Complex64;
use std::time::Instant;

/// Panel order used throughout.
pub const ORDER: usize = 16;

/// Incoming field u^inc with its traction on a boundary.
pub trait IncidentField: Sync {
    fn displacement(&self, x: [f64; 2], p: &ElasticParams) -> [Complex64; 2];
    fn traction(&self, x: [f64; 2], normal: [f64; 2], p: &ElasticParams) -> [Complex64; 2];
}

/// Plane wave d e^{i k_p d·x} (compressional) or d⊥ e^{i k_s d·x} (shear).
#[derive(Clone, Copy, Debug)]
pub struct PlaneWave {
    pub direction: [f64; 2],
    pub shear: bool,
}

impl PlaneWave {
    pub fn compressional(angle: f64) -> Self {
        PlaneWave {
            direction: [angle.cos(), angle.sin()],
            shear: false,
        }
    }

    pub fn shear(angle: f64) -> Self {
        PlaneWave {
            direction: [angle.cos(), angle.sin()],
            shear: true,
        }
    }

    pub fn sample(&self, x: [f64; 2], p: &ElasticParams) -> FieldSample {
        let d = self.direction;
        let (k, pol) = if self.shear {
            (p.ks(), [-d[1], d[0]])
        } else {
            (p.kp(), d)
        };
        let e = Complex64::new(0.0, k * (d[0] * x[0] + d[1] * x[1])).exp();
        let u = [e * pol[0], e * pol[1]];
        let ik = Complex64::new(0.0, k);
        let grad = std::array::from_fn(|i| std::array::from_fn(|j| u[i] * ik * d[j]));
        FieldSample { u, grad }
    }
}

impl IncidentField for PlaneWave {
    fn displacement(&self, x: [f64; 2], p: &ElasticParams) -> [Complex64; 2] {
        self.sample(x, p).u
    }

    fn traction(&self, x: [f64; 2], normal: [f64; 2], p: &ElasticParams) -> [Complex64; 2] {
        traction_of_field(&self.sample(x, p), normal, tangent_of(normal), p)
    }
}

/// Field G(x, y₀) q radiated by a point source of strength q at y₀.
pub struct PointSource {
    pub y0: [f64; 2],
    pub q: [Complex64; 2],
    eval: KernelEvaluator,
    node: Node,
}

impl PointSource {
    pub fn new(y0: [f64; 2], q: [Complex64; 2], params: ElasticParams) -> Self {
        let node = Node {
            param: 0.0,
            pos: y0,
            d1: [1.0, 0.0],
            d2: [0.0, 0.0],
            speed: 1.0,
            normal: [0.0, -1.0],
            tangent: [1.0, 0.0],
            weight: 0.0,
        };
        PointSource {
            y0,
            q,
            eval: KernelEvaluator::new(params),
            node,
        }
    }

    /// Exact field at x; fails at the source point.
    pub fn field(&self, x: [f64; 2]) -> Result<[Complex64; 2]> {
        Ok(self.eval.green(x, self.y0)?.apply(self.q))
    }
}

impl IncidentField for PointSource {
    fn displacement(&self, x: [f64; 2], _p: &ElasticParams) -> [Complex64; 2] {
        self.field(x).unwrap_or([Complex64::new(f64::NAN, 0.0); 2])
    }

    fn traction(&self, x: [f64; 2], normal: [f64; 2], _p: &ElasticParams) -> [Complex64; 2] {
        match self
            .eval
            .kernel(KernelKind::AdjointDouble, x, normal, &self.node)
        {
            Ok(m) => m.apply(self.q),
            Err(_) => [Complex64::new(f64::NAN, 0.0); 2],
        }
    }
}

/// The two source strengths behind the paired error columns.
pub fn unit_strengths() -> [[Complex64; 2]; 2] {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::default());
    [[o, z], [z, o]]
}

/// Point-source problem whose exact solution is G(·, y₀) q on the solution side.
/// Boundary data are built from `source` as −trace or −traction (see [`crate::assembly::System::rhs`]),
/// and the scattered field must then equal −u^inc, so the exact field is G(x, y₀) q
/// with the sign absorbed: the solver reconstructs u = −(−G q).
pub fn manufactured_problem(
    mesh: &Mesh,
    side: Side,
    y0: [f64; 2],
    q: [Complex64; 2],
    params: ElasticParams,
) -> Result<PointSource> {
    let inside = is_inside(mesh, y0);
    let ok = match side {
        Side::Exterior => inside,
        Side::Interior => !inside,
    };
    if !ok {
        return Err(Error::Domain(format!(
            "source ({}, {}) must lie {} the domain for the {} problem",
            y0[0],
            y0[1],
            if side == Side::Exterior {
                "inside"
            } else {
                "outside"
            },
            if side == Side::Exterior {
                "exterior"
            } else {
                "interior"
            }
        )));
    }
    Ok(PointSource::new(y0, q, params))
}

/// How cornered geometries are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CornerMethod {
    /// Compressed inverse preconditioning on the coarse mesh.
    Rcip,
    /// Explicit dyadic refinement and a dense solve on the fine mesh.
    Direct,
}

/// One solve of a manufactured point-source problem.
#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub geometry: String,
    pub geometry_param: Option<f64>,
    pub formulation: Formulation,
    pub side: Side,
    pub params: ElasticParams,
    /// Panels per smooth component.
    pub panels: usize,
    pub n_sub: usize,
    pub method: CornerMethod,
    pub source: [f64; 2],
    pub targets: Vec<[f64; 2]>,
}

impl SolveConfig {
    /// Exterior circle problem with the default material and the standard source/test point.
    pub fn new(geometry: &str, formulation: Formulation, side: Side) -> Self {
        let (source, target) = default_points(side);
        SolveConfig {
            geometry: geometry.to_string(),
            geometry_param: None,
            formulation,
            side,
            params: ElasticParams::default(),
            panels: 12,
            n_sub: 0,
            method: CornerMethod::Rcip,
            source,
            targets: vec![target],
        }
    }
}

/// Source and test point for each side: (source, target).
pub fn default_points(side: Side) -> ([f64; 2], [f64; 2]) {
    match side {
        Side::Exterior => ([0.5, 0.0], [12.1, 5.2]),
        Side::Interior => ([5.0, 3.0], [0.6, 0.05]),
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Timings {
    pub assembly: f64,
    pub solve: f64,
    pub evaluation: f64,
}

/// Outcome of [`solve`]: one error per source strength (q = e₁, e₂).
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub formulation: Formulation,
    pub side: Side,
    pub geometry: String,
    pub panels: usize,
    pub n_sub: usize,
    pub omega: f64,
    pub unknowns: usize,
    /// max over targets of |u − u_exact| for q = e₁ and q = e₂.
    pub errors: [f64; 2],
    /// Per displacement component, for each strength.
    pub component_errors: [[f64; 2]; 2],
    pub timings: Timings,
    pub condition: f64,
}

/// Densities and meshes behind a report, for post-processing.
pub struct Solved {
    pub report: SolveReport,
    pub mesh: Mesh,
    pub ctx: Context,
    /// Density used for field evaluation (one column per strength).
    pub density: CMat,
    pub compressed: Option<CompressedSolution>,
}

pub fn solve(cfg: &SolveConfig) -> Result<SolveReport> {
    Ok(solve_detailed(cfg)?.report)
}

/// Mesh used for the solve and whether corners go through RCIP.
fn solve_mesh(cfg: &SolveConfig) -> Result<(Mesh, bool)> {
    let geom = make_geometry(&cfg.geometry, cfg.geometry_param)?;
    let counts = vec![cfg.panels; geom.n_components()];
    let coarse = build_coarse_mesh(&geom, &counts)?;
    let has_corners = !geom.corners().is_empty();
    let direct = has_corners && cfg.method == CornerMethod::Direct && cfg.n_sub > 0;
    let mesh = if direct {
        refine_dyadic(&coarse, cfg.n_sub)
    } else {
        coarse
    };
    Ok((mesh, has_corners && !direct))
}

fn check_targets(mesh: &Mesh, cfg: &SolveConfig) -> Result<()> {
    if cfg.targets.is_empty() {
        return Err(Error::Config("no test points".into()));
    }
    for &t in &cfg.targets {
        if is_inside(mesh, t) != (cfg.side == Side::Interior) {
            return Err(Error::Domain(format!(
                "test point ({}, {}) is not in the solution domain",
                t[0], t[1]
            )));
        }
    }
    Ok(())
}

/// Densities for every column of `rhs`, with the condition estimate of the solved system.
fn solve_density(
    mesh: &Mesh,
    system: System,
    rcip: bool,
    n_sub: usize,
    rhs: &CMat,
    ctx: &Context,
) -> Result<(CMat, f64, Option<CompressedSolution>)> {
    if rcip {
        let sol = solve_compressed(mesh, system, n_sub, rhs, ctx)?;
        return Ok((sol.phi_hat.clone(), sol.condition, Some(sol)));
    }
    let a = system.matrix();
    drop(system);
    let lu = Lu::new(a.as_ref())?;
    let cond = lu.condition_estimate();
    if !(cond < SINGULAR_CONDITION) {
        return Err(Error::Singular { cond });
    }
    Ok((lu.solve(rhs.as_ref()), cond, None))
}

/// Scattered field at `cfg.targets` for an arbitrary incident wave.
/// The point source in `cfg` is ignored.
pub fn scatter(cfg: &SolveConfig, incident: &dyn IncidentField) -> Result<Vec<[Complex64; 2]>> {
    let (mesh, rcip) = solve_mesh(cfg)?;
    check_targets(&mesh, cfg)?;
    let ctx = Context::new(cfg.params, ORDER)?;
    let system = build_system(&mesh, cfg.formulation, cfg.side, &ctx)?;
    let data = system.rhs(&mesh, incident, &cfg.params);
    let rhs = Mat::<Complex64>::from_fn(mesh.n_dofs(), 1, |i, _| data[i]);
    let (density, _, _) = solve_density(&mesh, system, rcip, cfg.n_sub, &rhs, &ctx)?;
    let col: Vec<Complex64> = (0..mesh.n_dofs()).map(|i| density[(i, 0)]).collect();
    evaluate_field(&mesh, &col, cfg.formulation, &cfg.targets, &ctx)
}

/// Full solve pipeline: mesh, assembly, (compressed) solve, evaluation, error.
pub fn solve_detailed(cfg: &SolveConfig) -> Result<Solved> {
    let (mesh, rcip) = solve_mesh(cfg)?;
    let ctx = Context::new(cfg.params, ORDER)?;
    let sources: Vec<PointSource> = unit_strengths()
        .iter()
        .map(|&q| manufactured_problem(&mesh, cfg.side, cfg.source, q, cfg.params))
        .collect::<Result<_>>()?;
    check_targets(&mesh, cfg)?;

    let t0 = Instant::now();
    let system = build_system(&mesh, cfg.formulation, cfg.side, &ctx)?;
    let rhs_cols: Vec<Vec<Complex64>> = sources
        .iter()
        .map(|s| system.rhs(&mesh, s, &cfg.params))
        .collect();
    let rhs = Mat::<Complex64>::from_fn(mesh.n_dofs(), 2, |i, j| rhs_cols[j][i]);
    let assembly = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (density, condition, compressed) =
        solve_density(&mesh, system, rcip, cfg.n_sub, &rhs, &ctx)?;
    let solve_time = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut errors = [0.0; 2];
    let mut component_errors = [[0.0; 2]; 2];
    for (j, src) in sources.iter().enumerate() {
        let col: Vec<Complex64> = (0..mesh.n_dofs()).map(|i| density[(i, j)]).collect();
        let u = evaluate_field(&mesh, &col, cfg.formulation, &cfg.targets, &ctx)?;
        for (x, v) in cfg.targets.iter().zip(&u) {
            // data are −u^inc, so the scattered field reproduces −G q
            let exact = src.field(*x)?;
            let d = [v[0] + exact[0], v[1] + exact[1]];
            errors[j] = f64::max(errors[j], d[0].norm().hypot(d[1].norm()));
            for c in 0..2 {
                component_errors[j][c] = f64::max(component_errors[j][c], d[c].norm());
            }
        }
    }
    let evaluation = t2.elapsed().as_secs_f64();

    let report = SolveReport {
        formulation: cfg.formulation,
        side: cfg.side,
        geometry: cfg.geometry.clone(),
        panels: cfg.panels,
        n_sub: cfg.n_sub,
        omega: cfg.params.omega,
        unknowns: mesh.n_dofs(),
        errors,
        component_errors,
        timings: Timings {
            assembly,
            solve: solve_time,
            evaluation,
        },
        condition,
    };
    Ok(Solved {
        report,
        mesh,
        ctx,
        density,
        compressed,
    })
}

/// Representation formula of `formulation` applied to `density` at off-boundary targets.
pub fn evaluate_field(
    mesh: &Mesh,
    density: &[Complex64],
    formulation: Formulation,
    targets: &[[f64; 2]],
    ctx: &Context,
) -> Result<Vec<[Complex64; 2]>> {
    let tol = 1e-12 * mesh.arclength();
    for t in targets {
        let near = mesh
            .nodes
            .iter()
            .any(|n| (n.pos[0] - t[0]).hypot(n.pos[1] - t[1]) < tol);
        if near {
            return Err(Error::TargetOnBoundary);
        }
    }
    let tg: Vec<Target> = targets.iter().map(|&p| p.into()).collect();
    evaluate_layer(mesh, density, formulation.field_kernel(), &tg, ctx)
}

/// Sample of |φ| at distance r from a corner on one dyadic level.
#[derive(Clone, Copy, Debug)]
pub struct DensitySample {
    /// Panel depth: 0 for [h, 2h], ℓ for [h 2^-ℓ, h 2^(1-ℓ)], n_sub+1 for the innermost.
    pub level: usize,
    /// Side of the corner: 0 before, 1 after.
    pub side: usize,
    pub r: f64,
    pub norm: f64,
}

/// Least-squares fit of ln|φ| = α ln r + c.
#[derive(Clone, Copy, Debug)]
pub struct PowerFit {
    pub alpha: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log fit.
    pub rms: f64,
    pub points: usize,
}

/// Fits the exponent on samples whose level lies in `window` (inclusive).
pub fn fit_corner_exponent(samples: &[DensitySample], window: (usize, usize)) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.level >= window.0 && s.level <= window.1 && s.r > 0.0 && s.norm > 0.0)
        .map(|s| (s.r.ln(), s.norm.ln()))
        .collect();
    let levels: std::collections::BTreeSet<usize> = samples
        .iter()
        .filter(|s| s.level >= window.0 && s.level <= window.1)
        .map(|s| s.level)
        .collect();
    if window.0 > window.1 || levels.len() < 2 || pts.len() < 3 {
        return Err(Error::FitWindow(format!(
            "levels {}..={} give {} usable samples",
            window.0,
            window.1,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - alpha * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerFit {
        alpha,
        intercept,
        rms,
        points: pts.len(),
    })
}

/// Default fit window for `n_sub` levels.
pub fn default_window(n_sub: usize) -> (usize, usize) {
    (10, n_sub.saturating_sub(5))
}

/// Arclength from corner `corner` to the point at parameter offset `delta`.
fn arclength_from_corner(mesh: &Mesh, corner: usize, delta: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = 0.5 * delta;
    gl.0.iter()
        .zip(&gl.1)
        .map(|(x, w)| {
            let p = mesh.geom.eval_from_corner(corner, h * (x + 1.0));
            w * p.d1[0].hypot(p.d1[1])
        })
        .sum::<f64>()
        * h.abs()
}

/// Reconstructed fine-mesh density near `corner` for strength column `column`.
pub fn corner_density(solved: &Solved, corner: usize, column: usize) -> Result<Vec<DensitySample>> {
    let comp = solved
        .compressed
        .as_ref()
        .ok_or_else(|| Error::Domain("corner densities need a compressed solve".into()))?;
    let inv = comp
        .corners
        .iter()
        .find(|c| c.corner == corner)
        .ok_or_else(|| Error::Domain(format!("no corner {corner}")))?;
    let tilde: Vec<Complex64> = inv
        .dofs
        .iter()
        .map(|&i| comp.phi_tilde[(i, column)])
        .collect();
    let fine_vals = inv.reconstruct_fine(&tilde, &solved.ctx)?;
    let fine = fine_corner_mesh(&solved.mesh, corner, inv.n_sub)?;
    let gl = gauss_legendre(ORDER)?;
    let per_side = inv.n_sub + 2;
    let mut out = Vec::with_capacity(fine.n_nodes());
    for (p, panel) in fine.panels.iter().enumerate() {
        // minus side is listed far to near, plus side near to far
        let depth = if p < per_side {
            p
        } else {
            2 * per_side - 1 - p
        };
        let level = if depth == 0 { 0 } else { depth };
        for (k, node) in fine.panel_nodes(p).iter().enumerate() {
            let i = panel.first_node + k;
            let v = [fine_vals[2 * i], fine_vals[2 * i + 1]];
            let r = arclength_from_corner(&fine, corner, node.param, &gl);
            out.push(DensitySample {
                level,
                side: panel.component.min(1),
                r,
                norm: v[0].norm().hypot(v[1].norm()),
            });
        }
    }
    Ok(out)
}

/// Boundary condition for the wedge eigenvalue equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WedgeCase {
    Rigid,
    TractionFree,
}

/// Smallest root in (0, 1) of ν² c sin²θ − sin²(νθ) = 0, with c = 1/(3 − 4ξ)² (rigid)
/// or c = 1 (traction free), ξ = λ / (2(λ + μ)).
pub fn transcendental_root(case: WedgeCase, theta: f64, xi: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 2.0 * std::f64::consts::PI)
        || (theta - std::f64::consts::PI).abs() < 1e-12
    {
        return Err(Error::Domain(format!(
            "wedge angle {theta} outside (0, 2π) or equal to π"
        )));
    }
    let c = match case {
        WedgeCase::Rigid => 1.0 / (3.0 - 4.0 * xi).powi(2),
        WedgeCase::TractionFree => 1.0,
    };
    let s2 = theta.sin().powi(2);
    let f = |nu: f64| nu * nu * c * s2 - (nu * theta).sin().powi(2);
    let df = |nu: f64| 2.0 * nu * c * s2 - theta * (2.0 * nu * theta).sin();
    const STEPS: usize = 4000;
    let (lo_edge, hi_edge) = (1e-6, 1.0 - 1e-9);
    let h = (hi_edge - lo_edge) / STEPS as f64;
    let mut a = lo_edge;
    let mut fa = f(a);
    for i in 1..=STEPS {
        let b = lo_edge + h * i as f64;
        let fb = f(b);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            let mut x = 0.5 * (lo + hi);
            for _ in 0..200 {
                let fx = f(x);
                if fx == 0.0 {
                    return Ok(x);
                }
                if (fx < 0.0) == (flo < 0.0) {
                    lo = x;
                    flo = fx;
                } else {
                    hi = x;
                }
                // Newton step, kept inside the bracket
                let d = df(x);
                let newton = if d != 0.0 { x - fx / d } else { f64::NAN };
                x = if newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
                if hi - lo < 1e-15 {
                    break;
                }
            }
            return Ok(x);
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoRoot(format!("{case:?} wedge, θ = {theta}")))
}

/// ξ = λ / (2(λ + μ)).
pub fn xi_of(params: &ElasticParams) -> f64 {
    params.lambda / (2.0 * (params.lambda + params.mu))
}
