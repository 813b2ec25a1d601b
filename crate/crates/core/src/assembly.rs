//! Dense Nyström matrices of the boundary operators, system set-up and layer-potential
//! evaluation off the boundary.

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Node};
use crate::kernels::{dot, norm, sub, ElasticParams, KernelEvaluator, KernelKind, Mat2};
use crate::linalg::CMat;
use crate::quadrature::LegendreTable;
use faer::prelude::*;
use num_complex::Complex64;
use rayon::prelude::*;

/// Kernel evaluator and quadrature tables shared by all assemblies of one configuration.
#[derive(Clone, Debug)]
pub struct Context {
    pub eval: KernelEvaluator,
    pub table: LegendreTable,
}

impl Context {
    pub fn new(params: ElasticParams, order: usize) -> Result<Self> {
        Ok(Context {
            eval: KernelEvaluator::new(params),
            table: LegendreTable::new(order)?,
        })
    }

    pub fn params(&self) -> &ElasticParams {
        &self.eval.params
    }
}

/// Integral-equation formulations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Dirichlet data, double-layer representation.
    Dnd,
    /// Neumann data, single-layer representation.
    Snn,
    /// Dirichlet data, combined representation D − iS (exterior only).
    CombinedDirichlet,
}

/// Side of the boundary where the field is sought.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Interior,
    Exterior,
}

impl Formulation {
    /// Kernel of the boundary operator.
    pub fn operator_kernel(self) -> KernelKind {
        match self {
            Formulation::Dnd => KernelKind::Double,
            Formulation::Snn => KernelKind::AdjointDouble,
            Formulation::CombinedDirichlet => KernelKind::Combined,
        }
    }

    /// Kernel of the representation formula.
    pub fn field_kernel(self) -> KernelKind {
        match self {
            Formulation::Dnd => KernelKind::Double,
            Formulation::Snn => KernelKind::Single,
            Formulation::CombinedDirichlet => KernelKind::Combined,
        }
    }

    /// Coefficient of the identity in the second-kind equation.
    pub fn sigma(self, side: Side) -> Result<f64> {
        match (self, side) {
            (Formulation::Dnd, Side::Exterior) | (Formulation::Snn, Side::Interior) => Ok(0.5),
            (Formulation::Dnd, Side::Interior) | (Formulation::Snn, Side::Exterior) => Ok(-0.5),
            (Formulation::CombinedDirichlet, Side::Exterior) => Ok(0.5),
            (Formulation::CombinedDirichlet, Side::Interior) => Err(Error::Config(
                "the combined formulation is for exterior problems".into(),
            )),
        }
    }

    pub fn is_neumann(self) -> bool {
        self == Formulation::Snn
    }

    pub fn label(self, side: Side) -> &'static str {
        match (self, side) {
            (Formulation::Dnd, Side::Interior) => "DND_in",
            (Formulation::Dnd, Side::Exterior) => "DND_ex",
            (Formulation::Snn, Side::Interior) => "SNN_in",
            (Formulation::Snn, Side::Exterior) => "SNN_ex",
            (Formulation::CombinedDirichlet, _) => "CDD_ex",
        }
    }
}

/// Discretized operator K (no identity term).
pub fn assemble(mesh: &Mesh, kind: KernelKind, ctx: &Context) -> Result<CMat> {
    assemble_filtered(mesh, kind, ctx, |_, _| true)
}

/// As [`assemble`], computing only the (target panel, source panel) blocks accepted by
/// `include`; the rest stay zero.
pub fn assemble_filtered(
    mesh: &Mesh,
    kind: KernelKind,
    ctx: &Context,
    include: impl Fn(usize, usize) -> bool + Sync,
) -> Result<CMat> {
    let n = mesh.order;
    if ctx.table.n != n {
        return Err(Error::Domain(format!(
            "table order {} does not match mesh order {n}",
            ctx.table.n
        )));
    }
    let nd = mesh.n_dofs();
    let mut a = Mat::<Complex64>::zeros(nd, nd);
    a.par_col_chunks_mut(2 * n)
        .enumerate()
        .try_for_each(|(sp, mut cols)| -> Result<()> {
            let snodes = mesh.panel_nodes(sp);
            let half = 0.5 * mesh.panels[sp].len();
            let tab = &ctx.table;
            for tp in 0..mesh.panels.len() {
                if !include(tp, sp) {
                    continue;
                }
                let row0 = 2 * mesh.panels[tp].first_node;
                let tnodes = mesh.panel_nodes(tp);
                if mesh.is_near_pair(tp, sp) {
                    for (i, x) in tnodes.iter().enumerate() {
                        let (t, owned);
                        let (lw, cw): (&[f64], &[f64]) = if tp == sp {
                            t = tab.nodes[i];
                            tab.self_weights(i)
                        } else {
                            t = mesh.chart_coordinate(sp, x.param);
                            owned = tab.weights_at(t)?;
                            (&owned.0, &owned.1)
                        };
                        for (k, y) in snodes.iter().enumerate() {
                            let ks = ctx.eval.param_split(kind, x, t, y, tab.nodes[k], half);
                            let blk = (ks.k1 * lw[k] + ks.k2 * cw[k] + ks.k3 * tab.weights[k])
                                * (y.speed * half);
                            put(&mut cols, row0 + 2 * i, 2 * k, &blk);
                        }
                    }
                } else {
                    let len = panel_arclength(snodes);
                    for (i, x) in tnodes.iter().enumerate() {
                        if min_distance(x.pos, snodes) < len {
                            // close but not adjacent, e.g. across a corner
                            let tg = Target {
                                pos: x.pos,
                                normal: x.normal,
                            };
                            for (k, blk) in
                                near_weights(mesh, sp, kind, &tg, ctx)?.iter().enumerate()
                            {
                                put(&mut cols, row0 + 2 * i, 2 * k, blk);
                            }
                            continue;
                        }
                        for (k, y) in snodes.iter().enumerate() {
                            let blk =
                                ctx.eval.kernel(kind, x.pos, x.normal, y)? * (y.weight * y.speed);
                            put(&mut cols, row0 + 2 * i, 2 * k, &blk);
                        }
                    }
                }
            }
            Ok(())
        })?;
    Ok(a)
}

fn put(m: &mut MatMut<'_, Complex64>, r: usize, c: usize, b: &Mat2) {
    for i in 0..2 {
        for j in 0..2 {
            m[(r + i, c + j)] = b.0[i][j];
        }
    }
}

/// Discretized second-kind system σI + K for one formulation.
pub struct System {
    pub formulation: Formulation,
    pub side: Side,
    pub sigma: f64,
    /// Operator part K.
    pub k: CMat,
}

impl System {
    /// Full matrix σI + K.
    pub fn matrix(&self) -> CMat {
        let mut a = self.k.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += Complex64::new(self.sigma, 0.0);
        }
        a
    }

    /// Discretized data: −u^inc at the nodes (Dirichlet) or −T u^inc (Neumann).
    pub fn rhs(
        &self,
        mesh: &Mesh,
        incident: &dyn crate::driver::IncidentField,
        params: &ElasticParams,
    ) -> Vec<Complex64> {
        let mut g = Vec::with_capacity(mesh.n_dofs());
        for node in &mesh.nodes {
            let v = if self.formulation.is_neumann() {
                incident.traction(node.pos, node.normal, params)
            } else {
                incident.displacement(node.pos, params)
            };
            g.push(-v[0]);
            g.push(-v[1]);
        }
        g
    }
}

/// Assembles the operator and records the identity coefficient.
pub fn build_system(
    mesh: &Mesh,
    formulation: Formulation,
    side: Side,
    ctx: &Context,
) -> Result<System> {
    let sigma = formulation.sigma(side)?;
    let k = assemble(mesh, formulation.operator_kernel(), ctx)?;
    Ok(System {
        formulation,
        side,
        sigma,
        k,
    })
}

/// Maximum bisection depth in near-boundary evaluation.
const MAX_NEAR_DEPTH: usize = 60;

/// Off-boundary target with an optional normal (needed by the adjoint double layer).
#[derive(Clone, Copy, Debug)]
pub struct Target {
    pub pos: [f64; 2],
    pub normal: [f64; 2],
}

impl From<[f64; 2]> for Target {
    fn from(pos: [f64; 2]) -> Self {
        Target {
            pos,
            normal: [0.0, 0.0],
        }
    }
}

/// Layer potential ∫ K(x, y) φ(y) ds_y at off-boundary targets. Sources within one
/// panel length of a target are integrated by adaptive bisection with the density
/// interpolated from its Legendre expansion.
pub fn evaluate_layer(
    mesh: &Mesh,
    density: &[Complex64],
    kind: KernelKind,
    targets: &[Target],
    ctx: &Context,
) -> Result<Vec<[Complex64; 2]>> {
    if density.len() != mesh.n_dofs() {
        return Err(Error::Domain(format!(
            "density has {} entries, mesh has {} unknowns",
            density.len(),
            mesh.n_dofs()
        )));
    }
    targets
        .par_iter()
        .map(|x| {
            let mut acc = [Complex64::default(); 2];
            for p in 0..mesh.panels.len() {
                let v = panel_contribution(mesh, p, density, kind, x, ctx)?;
                acc[0] += v[0];
                acc[1] += v[1];
            }
            Ok(acc)
        })
        .collect()
}

fn panel_arclength(nodes: &[Node]) -> f64 {
    nodes.iter().map(|n| n.weight * n.speed).sum()
}

fn min_distance(x: [f64; 2], nodes: &[Node]) -> f64 {
    nodes
        .iter()
        .map(|n| norm(sub(x, n.pos)))
        .fold(f64::INFINITY, f64::min)
}

fn panel_contribution(
    mesh: &Mesh,
    p: usize,
    density: &[Complex64],
    kind: KernelKind,
    x: &Target,
    ctx: &Context,
) -> Result<[Complex64; 2]> {
    let nodes = mesh.panel_nodes(p);
    let f = mesh.panels[p].first_node;
    let phi = &density[2 * f..2 * f + 2 * mesh.order];
    let len = panel_arclength(nodes);
    let d = min_distance(x.pos, nodes);
    if d < 1e-14 * len.max(1e-300) {
        return Err(Error::TargetOnBoundary);
    }
    let mut acc = [Complex64::default(); 2];
    if d >= len {
        for (k, y) in nodes.iter().enumerate() {
            let w = y.weight * y.speed;
            let v = ctx
                .eval
                .kernel(kind, x.pos, x.normal, y)?
                .apply([phi[2 * k], phi[2 * k + 1]]);
            acc[0] += v[0] * w;
            acc[1] += v[1] * w;
        }
        return Ok(acc);
    }
    for (k, w) in near_weights(mesh, p, kind, x, ctx)?.iter().enumerate() {
        let v = w.apply([phi[2 * k], phi[2 * k + 1]]);
        acc[0] += v[0];
        acc[1] += v[1];
    }
    Ok(acc)
}

/// Weights W_k with ∫ K(x, y) φ(y) ds ≈ Σ_k W_k φ_k over panel `p` for a target close to
/// it, exact for densities interpolated from the panel nodes. The panel is bisected until
/// every piece lies at least its own length from x.
fn near_weights(
    mesh: &Mesh,
    p: usize,
    kind: KernelKind,
    x: &Target,
    ctx: &Context,
) -> Result<Vec<Mat2>> {
    let mut w = vec![Mat2::zero(); mesh.order];
    near_panel(mesh, p, kind, x, ctx, -1.0, 1.0, 0, &mut w)?;
    Ok(w)
}

#[allow(clippy::too_many_arguments)]
fn near_panel(
    mesh: &Mesh,
    p: usize,
    kind: KernelKind,
    x: &Target,
    ctx: &Context,
    lo: f64,
    hi: f64,
    depth: usize,
    acc: &mut [Mat2],
) -> Result<()> {
    let panel = &mesh.panels[p];
    let (a, b) = (panel.a, panel.b);
    let tab = &ctx.table;
    let map = |u: f64| 0.5 * (a + b) + 0.5 * (b - a) * u;
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut pts = Vec::with_capacity(tab.n);
    for (xi, wi) in tab.nodes.iter().zip(&tab.weights) {
        let u = c + h * xi;
        let s = map(u);
        let cp = mesh.curve_point(panel.component, s);
        let speed = cp.d1[0].hypot(cp.d1[1]);
        pts.push((u, cp, speed, wi * h * 0.5 * (b - a)));
    }
    let len: f64 = pts.iter().map(|q| q.2 * q.3).sum();
    let d = pts
        .iter()
        .map(|q| norm(sub(x.pos, q.1.pos)))
        .fold(f64::INFINITY, f64::min);
    if d < 1e-14 * len.max(1e-300) {
        return Err(Error::TargetOnBoundary);
    }
    if d < len && depth < MAX_NEAR_DEPTH {
        near_panel(mesh, p, kind, x, ctx, lo, c, depth + 1, acc)?;
        return near_panel(mesh, p, kind, x, ctx, c, hi, depth + 1, acc);
    }
    for (u, cp, speed, w) in pts {
        let tangent = [cp.d1[0] / speed, cp.d1[1] / speed];
        let y = Node {
            param: map(u),
            pos: cp.pos,
            d1: cp.d1,
            d2: cp.d2,
            speed,
            normal: [tangent[1], -tangent[0]],
            tangent,
            weight: w,
        };
        let kw = ctx.eval.kernel(kind, x.pos, x.normal, &y)? * (w * speed);
        for (k, l) in tab.interp_row(u).into_iter().enumerate() {
            acc[k] = acc[k] + kw * l;
        }
    }
    Ok(())
}

/// Two-sided limits of the double layer (and of the traction of the single layer) at
/// boundary node `node`, from targets x ± ε n for each ε. Each returned entry is
/// (ε, D-jump, traction-jump) where the jump is the outside value minus the inside one,
/// extrapolated to ε → 0 by combining ε and 2ε.
pub fn jump_check(
    mesh: &Mesh,
    density: &[Complex64],
    node: usize,
    eps: &[f64],
    ctx: &Context,
) -> Result<Vec<(f64, [Complex64; 2], [Complex64; 2])>> {
    let nd = &mesh.nodes[node];
    let raw = |e: f64| -> Result<([Complex64; 2], [Complex64; 2])> {
        let out = Target {
            pos: [nd.pos[0] + e * nd.normal[0], nd.pos[1] + e * nd.normal[1]],
            normal: nd.normal,
        };
        let inn = Target {
            pos: [nd.pos[0] - e * nd.normal[0], nd.pos[1] - e * nd.normal[1]],
            normal: nd.normal,
        };
        let d = evaluate_layer(mesh, density, KernelKind::Double, &[out, inn], ctx)?;
        let t = evaluate_layer(mesh, density, KernelKind::AdjointDouble, &[out, inn], ctx)?;
        Ok((
            [d[0][0] - d[1][0], d[0][1] - d[1][1]],
            [t[0][0] - t[1][0], t[0][1] - t[1][1]],
        ))
    };
    eps.iter()
        .map(|&e| {
            let (d1, t1) = raw(e)?;
            let (d2, t2) = raw(2.0 * e)?;
            let ex = |a: [Complex64; 2], b: [Complex64; 2]| [a[0] * 2.0 - b[0], a[1] * 2.0 - b[1]];
            Ok((e, ex(d1, d2), ex(t1, t2)))
        })
        .collect()
}

/// Whether `x` lies strictly inside the region bounded by the mesh (winding number of
/// the node polygon).
pub fn is_inside(mesh: &Mesh, x: [f64; 2]) -> bool {
    let mut wind = 0.0;
    let n = mesh.nodes.len();
    for i in 0..n {
        let a = sub(mesh.nodes[i].pos, x);
        let b = sub(mesh.nodes[(i + 1) % n].pos, x);
        wind += (a[0] * b[1] - a[1] * b[0]).atan2(dot(a, b));
    }
    wind.abs() > std::f64::consts::PI
}
