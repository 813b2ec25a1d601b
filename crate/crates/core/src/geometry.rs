//! Boundary curves, corners, panel meshes and Gauss–Legendre rules.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=64).contains(&n) {
        return Err(Error::Domain(format!(
            "Gauss-Legendre order {n} outside 1..=64"
        )));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// P_n(z) and P_n'(z).
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Built-in boundary shapes. All are traversed counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Ellipse (2 alpha cos s, 2 sin s) with alpha = 1.
    Circle,
    Ellipse {
        alpha: f64,
    },
    /// Teardrop with a right-angle corner at the origin.
    Droplet,
    /// Circular sector of opening 2 arctan(k) with apex at the origin.
    Sector {
        k: f64,
    },
}

/// A corner joining the end of component `before` to the start of component `after`.
#[derive(Clone, Debug)]
pub struct Corner {
    pub param: f64,
    pub angle: f64,
    pub before: usize,
    pub after: usize,
    pub before_end: f64,
    pub after_start: f64,
}

/// Position and first two parameter derivatives of the curve.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub pos: [f64; 2],
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct BoundaryGeometry {
    pub shape: Shape,
    breaks: Vec<f64>,
    periodic: bool,
    corners: Vec<Corner>,
}

/// Parses a shape name with its optional parameter (alpha for ellipse, k for sector).
pub fn make_geometry(kind: &str, param: Option<f64>) -> Result<BoundaryGeometry> {
    let shape = match kind {
        "circle" => Shape::Circle,
        "ellipse" => Shape::Ellipse {
            alpha: param.unwrap_or(2.0),
        },
        "droplet" => Shape::Droplet,
        "sector" => Shape::Sector {
            k: param.unwrap_or(1.0),
        },
        "custom" => {
            return Err(Error::Geometry(
                "custom geometries are not supported".into(),
            ));
        }
        other => return Err(Error::Geometry(format!("unknown geometry kind '{other}'"))),
    };
    BoundaryGeometry::new(shape)
}

impl BoundaryGeometry {
    pub fn new(shape: Shape) -> Result<Self> {
        let (breaks, periodic) = match shape {
            Shape::Circle => (vec![0.0, 2.0 * PI], true),
            Shape::Ellipse { alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Geometry(format!(
                        "ellipse alpha {alpha} must be positive"
                    )));
                }
                (vec![0.0, 2.0 * PI], true)
            }
            Shape::Droplet => (vec![0.0, 1.0], false),
            Shape::Sector { k } => {
                if !(k > 0.0 && k.is_finite()) {
                    return Err(Error::Geometry(format!(
                        "sector opening k {k} must be positive"
                    )));
                }
                (vec![0.0, 1.0, 2.0, 3.0], false)
            }
        };
        let mut g = BoundaryGeometry {
            shape,
            breaks,
            periodic,
            corners: Vec::new(),
        };
        if !periodic {
            let nc = g.breaks.len() - 1;
            for c in 0..nc {
                let before = (c + nc - 1) % nc;
                let before_end = g.breaks[before + 1];
                let after_start = g.breaks[c];
                let t_in = g.eval(before, before_end).d1;
                let t_out = g.eval(c, after_start).d1;
                let cross = t_in[0] * t_out[1] - t_in[1] * t_out[0];
                let dot = t_in[0] * t_out[0] + t_in[1] * t_out[1];
                let angle = PI - cross.atan2(dot);
                g.corners.push(Corner {
                    param: after_start,
                    angle,
                    before,
                    after: c,
                    before_end,
                    after_start,
                });
            }
        }
        Ok(g)
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn n_components(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn component_range(&self, c: usize) -> (f64, f64) {
        (self.breaks[c], self.breaks[c + 1])
    }

    /// Total parameter length.
    pub fn param_length(&self) -> f64 {
        self.breaks[self.breaks.len() - 1] - self.breaks[0]
    }

    /// Period of a closed smooth curve, if any.
    pub fn period(&self) -> Option<f64> {
        self.periodic.then(|| self.param_length())
    }

    /// Whether component `c` starts or ends at a corner.
    pub fn touches_corner(&self, c: usize) -> (bool, bool) {
        let start = self.corners.iter().any(|k| k.after == c);
        let end = self.corners.iter().any(|k| k.before == c);
        (start, end)
    }

    /// Curve point at parameter `s` on component `c`.
    pub fn eval(&self, c: usize, s: f64) -> CurvePoint {
        match self.shape {
            Shape::Circle => ellipse(1.0, s),
            Shape::Ellipse { alpha } => ellipse(alpha, s),
            Shape::Droplet => droplet(s),
            Shape::Sector { k } => self.sector(k, c, s, None),
        }
    }

    /// Point at the given parameter anywhere on the curve.
    pub fn point(&self, s: f64) -> [f64; 2] {
        let c = (0..self.n_components())
            .find(|&c| s < self.breaks[c + 1])
            .unwrap_or(self.n_components() - 1);
        self.eval(c, s).pos
    }

    /// Location of corner `i`.
    pub fn corner_point(&self, i: usize) -> [f64; 2] {
        let k = &self.corners[i];
        self.eval(k.after, k.after_start).pos
    }

    /// Curve point at parameter offset `delta` from corner `i`, with the position taken
    /// relative to the corner. Negative offsets lie on the incoming component.
    /// Differences are formed analytically so tiny offsets keep full relative accuracy.
    pub fn eval_from_corner(&self, i: usize, delta: f64) -> CurvePoint {
        let k = &self.corners[i];
        let (c, s0) = if delta < 0.0 {
            (k.before, k.before_end)
        } else {
            (k.after, k.after_start)
        };
        match self.shape {
            Shape::Droplet => {
                let mut p = droplet(s0 + delta);
                let (sn, v) = if delta < 0.0 {
                    (-(PI * delta).sin(), FRAC_PI_2 * (0.5 + delta))
                } else {
                    ((PI * delta).sin(), FRAC_PI_2 * (delta - 0.5))
                };
                p.pos = [sn * v.cos(), sn * v.sin()];
                p
            }
            Shape::Sector { k } => self.sector(k, c, s0 + delta, Some((s0, delta))),
            Shape::Circle | Shape::Ellipse { .. } => {
                let mut p = self.eval(c, s0 + delta);
                let o = self.eval(c, s0).pos;
                p.pos = [p.pos[0] - o[0], p.pos[1] - o[1]];
                p
            }
        }
    }

    fn sector(&self, k: f64, c: usize, s: f64, rel: Option<(f64, f64)>) -> CurvePoint {
        let beta = 1.0 / (1.0 + k * k).sqrt();
        let theta = k.atan();
        match c {
            0 => {
                let u = rel.map_or(s, |(_, d)| d);
                CurvePoint {
                    pos: [beta * u, -beta * k * u],
                    d1: [beta, -beta * k],
                    d2: [0.0, 0.0],
                }
            }
            1 => {
                let phi = 2.0 * theta * s - 3.0 * theta;
                let (sp, cp) = phi.sin_cos();
                let pos = match rel {
                    None => [cp, sp],
                    Some((s0, d)) => {
                        let a = 2.0 * theta * s0 - 3.0 * theta;
                        let h = theta * d;
                        let sh = h.sin();
                        [-2.0 * (a + h).sin() * sh, 2.0 * (a + h).cos() * sh]
                    }
                };
                let w = 2.0 * theta;
                CurvePoint {
                    pos,
                    d1: [-w * sp, w * cp],
                    d2: [-w * w * cp, -w * w * sp],
                }
            }
            _ => {
                let u = rel.map_or(s - 3.0, |(_, d)| d);
                CurvePoint {
                    pos: [-beta * u, -beta * k * u],
                    d1: [-beta, -beta * k],
                    d2: [0.0, 0.0],
                }
            }
        }
    }
}

fn ellipse(alpha: f64, s: f64) -> CurvePoint {
    let (sn, cs) = s.sin_cos();
    CurvePoint {
        pos: [2.0 * alpha * cs, 2.0 * sn],
        d1: [-2.0 * alpha * sn, 2.0 * cs],
        d2: [-2.0 * alpha * cs, -2.0 * sn],
    }
}

fn droplet(s: f64) -> CurvePoint {
    let (su, cu) = (PI * s).sin_cos();
    let (sv, cv) = (FRAC_PI_2 * (s - 0.5)).sin_cos();
    let e = [cv, sv];
    let f = [-sv, cv];
    let pi2 = PI * PI;
    CurvePoint {
        pos: [su * cv, su * sv],
        d1: [
            PI * cu * e[0] + FRAC_PI_2 * su * f[0],
            PI * cu * e[1] + FRAC_PI_2 * su * f[1],
        ],
        d2: [
            -1.25 * pi2 * su * e[0] + pi2 * cu * f[0],
            -1.25 * pi2 * su * e[1] + pi2 * cu * f[1],
        ],
    }
}

/// Quadrature node with its geometric data.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub param: f64,
    pub pos: [f64; 2],
    pub d1: [f64; 2],
    pub d2: [f64; 2],
    /// |x'(s)|
    pub speed: f64,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    /// Gauss–Legendre weight scaled to the panel's parameter interval.
    pub weight: f64,
}

impl Node {
    pub fn new(param: f64, p: CurvePoint, weight: f64) -> Self {
        let speed = p.d1[0].hypot(p.d1[1]);
        let tangent = [p.d1[0] / speed, p.d1[1] / speed];
        Node {
            param,
            pos: p.pos,
            d1: p.d1,
            d2: p.d2,
            speed,
            normal: [tangent[1], -tangent[0]],
            tangent,
            weight,
        }
    }

    /// Half the signed curvature measured in the parameter chart: n·x'' / (2|x'|^2).
    pub fn half_curvature(&self) -> f64 {
        (self.normal[0] * self.d2[0] + self.normal[1] * self.d2[1])
            / (2.0 * self.speed * self.speed)
    }
}

/// Parameter interval with its quadrature nodes.
#[derive(Clone, Debug)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub component: usize,
    /// Dyadic refinement depth (0 for coarse panels).
    pub level: u32,
    /// Panel has an endpoint at a corner.
    pub corner_adjacent: bool,
    pub first_node: usize,
}

impl Panel {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0.0
    }
}

/// Coordinate frame of a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frame {
    /// Absolute coordinates and global curve parameter.
    Global,
    /// Positions relative to the given corner; parameters are offsets from it and
    /// component 0 / 1 denote the incoming / outgoing side.
    Corner(usize),
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub geom: BoundaryGeometry,
    pub frame: Frame,
    pub order: usize,
    pub panels: Vec<Panel>,
    pub nodes: Vec<Node>,
    pub fine: bool,
    /// Per corner, the two coarse panels on each side (ordered along the curve).
    pub corner_neighborhoods: Vec<[usize; 4]>,
    gl: (Vec<f64>, Vec<f64>),
}

/// Minimum panel count on a component touching a corner.
pub const MIN_CORNER_PANELS: usize = 4;

/// Uniform parameter partition of each smooth component.
/// A single count applies to every component.
pub fn build_coarse_mesh(geom: &BoundaryGeometry, panels_per_component: &[usize]) -> Result<Mesh> {
    build_coarse_mesh_with_order(geom, panels_per_component, 16)
}

pub fn build_coarse_mesh_with_order(
    geom: &BoundaryGeometry,
    panels_per_component: &[usize],
    order: usize,
) -> Result<Mesh> {
    let nc = geom.n_components();
    let counts: Vec<usize> = match panels_per_component.len() {
        1 => vec![panels_per_component[0]; nc],
        l if l == nc => panels_per_component.to_vec(),
        l => {
            return Err(Error::Config(format!(
                "{l} panel counts given for {nc} components"
            )));
        }
    };
    let mut mesh = Mesh::empty(geom.clone(), Frame::Global, order, false)?;
    let mut first_panel = Vec::with_capacity(nc);
    for (c, &count) in counts.iter().enumerate() {
        let (start, end) = geom.touches_corner(c);
        let min = if start || end { MIN_CORNER_PANELS } else { 1 };
        if count < min {
            return Err(Error::MeshTooCoarse {
                component: c,
                count,
                needed: min,
            });
        }
        first_panel.push(mesh.panels.len());
        let (a, b) = geom.component_range(c);
        let h = (b - a) / count as f64;
        for i in 0..count {
            let pa = a + h * i as f64;
            let pb = if i + 1 == count {
                b
            } else {
                a + h * (i + 1) as f64
            };
            let adj = (i == 0 && start) || (i + 1 == count && end);
            mesh.push_panel(c, pa, pb, 0, adj);
        }
    }
    for k in geom.corners() {
        let lb = first_panel[k.before] + counts[k.before];
        let fa = first_panel[k.after];
        mesh.corner_neighborhoods.push([lb - 2, lb - 1, fa, fa + 1]);
    }
    Ok(mesh)
}

/// Dyadically refines every corner-adjacent panel `n_sub` times toward its corner.
pub fn refine_dyadic(mesh: &Mesh, n_sub: usize) -> Mesh {
    if n_sub == 0 {
        return mesh.clone();
    }
    let mut out = Mesh::empty(mesh.geom.clone(), mesh.frame, mesh.order, true)
        .expect("order already validated");
    let corners = mesh.geom.corners();
    for p in &mesh.panels {
        if !p.corner_adjacent {
            out.push_panel(p.component, p.a, p.b, p.level, false);
            continue;
        }
        let at_start = corners
            .iter()
            .any(|k| k.after == p.component && k.after_start == p.a);
        let h = p.len();
        if at_start {
            let mut edges = vec![p.a];
            for j in (0..n_sub).rev() {
                edges.push(p.a + h * 0.5f64.powi(j as i32 + 1));
            }
            edges.push(p.b);
            for (i, w) in edges.windows(2).enumerate() {
                let level = (n_sub - i.min(n_sub)) as u32;
                out.push_panel(p.component, w[0], w[1], level, i == 0);
            }
        } else {
            let mut edges = vec![p.a];
            for j in 0..n_sub {
                edges.push(p.b - h * 0.5f64.powi(j as i32 + 1));
            }
            edges.push(p.b);
            let m = edges.len() - 1;
            for (i, w) in edges.windows(2).enumerate() {
                let level = i.min(n_sub) as u32;
                out.push_panel(p.component, w[0], w[1], level, i + 1 == m);
            }
        }
    }
    out
}

impl Mesh {
    pub(crate) fn empty(
        geom: BoundaryGeometry,
        frame: Frame,
        order: usize,
        fine: bool,
    ) -> Result<Self> {
        let gl = gauss_legendre(order)?;
        Ok(Mesh {
            geom,
            frame,
            order,
            panels: Vec::new(),
            nodes: Vec::new(),
            fine,
            corner_neighborhoods: Vec::new(),
            gl,
        })
    }

    /// Local mesh around corner `corner`; `panels` lists (side, a, b) with offsets from the corner.
    pub fn corner_local(
        geom: &BoundaryGeometry,
        corner: usize,
        order: usize,
        panels: &[(usize, f64, f64)],
    ) -> Result<Self> {
        let mut m = Mesh::empty(geom.clone(), Frame::Corner(corner), order, true)?;
        for &(side, a, b) in panels {
            let touches = a == 0.0 || b == 0.0;
            m.push_panel(side, a, b, 0, touches);
        }
        Ok(m)
    }

    pub(crate) fn push_panel(
        &mut self,
        component: usize,
        a: f64,
        b: f64,
        level: u32,
        corner_adjacent: bool,
    ) {
        let first_node = self.nodes.len();
        let (h, c) = (0.5 * (b - a), 0.5 * (a + b));
        for (x, w) in self.gl.0.iter().zip(&self.gl.1) {
            let s = c + h * x;
            let cp = self.curve_point(component, s);
            self.nodes.push(Node::new(s, cp, w * h));
        }
        self.panels.push(Panel {
            a,
            b,
            component,
            level,
            corner_adjacent,
            first_node,
        });
    }

    /// Curve point at parameter `s` on component `component`, in this mesh's frame.
    pub fn curve_point(&self, component: usize, s: f64) -> CurvePoint {
        match self.frame {
            Frame::Global => self.geom.eval(component, s),
            Frame::Corner(k) => self.geom.eval_from_corner(k, s),
        }
    }

    /// Gauss–Legendre reference rule of this mesh.
    pub fn reference_rule(&self) -> (&[f64], &[f64]) {
        (&self.gl.0, &self.gl.1)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of scalar unknowns (two per node).
    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn panel_nodes(&self, p: usize) -> &[Node] {
        let f = self.panels[p].first_node;
        &self.nodes[f..f + self.order]
    }

    /// Period of the parameter on component `c`, if it closes smoothly.
    fn period(&self, c: usize) -> Option<f64> {
        match self.frame {
            Frame::Global if self.geom.n_components() == 1 => self.geom.period().filter(|_| c == 0),
            _ => None,
        }
    }

    /// Whether the split quadrature is used for targets on panel `target` against
    /// sources on panel `source`: the same panel, or neighbors on one smooth component.
    pub fn is_near_pair(&self, target: usize, source: usize) -> bool {
        if target == source {
            return true;
        }
        let (t, s) = (&self.panels[target], &self.panels[source]);
        if t.component != s.component {
            return false;
        }
        let tol = 1e-12 * (t.len().abs() + s.len().abs());
        if (t.b - s.a).abs() <= tol || (s.b - t.a).abs() <= tol {
            return true;
        }
        if let Some(per) = self.period(t.component) {
            return ((t.b - per) - s.a).abs() <= tol || ((s.b - per) - t.a).abs() <= tol;
        }
        false
    }

    /// Parameter `sigma` expressed in the [-1, 1] chart of panel `p`.
    pub fn chart_coordinate(&self, p: usize, sigma: f64) -> f64 {
        let pn = &self.panels[p];
        let c = 0.5 * (pn.a + pn.b);
        let mut d = sigma - c;
        if let Some(per) = self.period(pn.component) {
            d -= per * (d / per).round();
        }
        2.0 * d / pn.len()
    }

    /// Sum of w J over all nodes: the discrete arclength.
    pub fn arclength(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight * n.speed).sum()
    }

    /// Indices of the nodes of the given panels, in order.
    pub fn nodes_of_panels(&self, panels: &[usize]) -> Vec<usize> {
        panels
            .iter()
            .flat_map(|&p| {
                let f = self.panels[p].first_node;
                f..f + self.order
            })
            .collect()
    }
}
