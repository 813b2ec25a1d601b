//! Recursively compressed inverse preconditioning for corners.
//!
//! Each corner owns a neighborhood Γ* of four coarse panels (two per side). The inverse
//! of the corner-local operator on the fully graded mesh is compressed onto Γ* by a
//! recursion over six-panel meshes, one per dyadic level. All systems are normalized to
//! the form I + K/σ.

use crate::assembly::{assemble, assemble_filtered, Context, System};
use crate::error::{Error, Result};
use crate::geometry::{Frame, Mesh};
use crate::kernels::KernelKind;
use crate::linalg::{select, CMat, Lu, SINGULAR_CONDITION};
use faer::prelude::*;
use num_complex::Complex64;
use rayon::prelude::*;

/// Unknowns on one corner neighborhood for panel order `n`.
pub fn neighborhood_dofs(order: usize) -> usize {
    4 * order * 2
}

/// Stored state of one recursion level, used to reconstruct fine densities.
struct Level {
    r_prev: CMat,
    k_io: CMat,
    k_oi: CMat,
    schur: Lu,
}

/// Compressed inverse of one corner with the recursion state behind it.
pub struct CornerInverse {
    pub corner: usize,
    pub n_sub: usize,
    /// Global coarse unknowns of Γ*, ordered along the curve.
    pub dofs: Vec<usize>,
    /// R, of size (8n) × (8n).
    pub r: CMat,
    /// Parameter lengths of the coarse panels before and after the corner.
    pub h: (f64, f64),
    levels: Vec<Level>,
    r0: CMat,
}

/// Prolongation from the four-panel mesh to the six-panel mesh that halves the two
/// inner panels, and the transposed weighted prolongation P_W^T.
pub fn prolongation(ctx: &Context) -> (CMat, CMat) {
    let tab = &ctx.table;
    let n = tab.n;
    let left: Vec<Vec<f64>> = tab
        .nodes
        .iter()
        .map(|x| tab.interp_row(0.5 * (x - 1.0)))
        .collect();
    let right: Vec<Vec<f64>> = tab
        .nodes
        .iter()
        .map(|x| tab.interp_row(0.5 * (x + 1.0)))
        .collect();
    let mut p = Mat::<Complex64>::zeros(12 * n, 8 * n);
    let mut pwt = Mat::<Complex64>::zeros(8 * n, 12 * n);
    // (fine panel, coarse panel, interpolation rows or identity, weight ratio)
    let map: [(usize, usize, Option<&Vec<Vec<f64>>>); 6] = [
        (0, 0, None),
        (1, 1, Some(&left)),
        (2, 1, Some(&right)),
        (3, 2, Some(&left)),
        (4, 2, Some(&right)),
        (5, 3, None),
    ];
    for (fp, cp, rows) in map {
        for k in 0..n {
            for m in 0..n {
                let (v, ratio) = match rows {
                    None => (if k == m { 1.0 } else { 0.0 }, 1.0),
                    Some(rw) => (rw[k][m], 0.5 * tab.weights[k] / tab.weights[m]),
                };
                for c in 0..2 {
                    let (fi, ci) = (2 * (fp * n + k) + c, 2 * (cp * n + m) + c);
                    p[(fi, ci)] = v.into();
                    pwt[(ci, fi)] = (v * ratio).into();
                }
            }
        }
    }
    (p, pwt)
}

fn side_lengths(mesh: &Mesh, corner: usize) -> Result<(f64, f64)> {
    let nb = mesh
        .corner_neighborhoods
        .get(corner)
        .ok_or_else(|| Error::Domain(format!("no corner {corner}")))?;
    Ok((mesh.panels[nb[1]].len(), mesh.panels[nb[2]].len()))
}

/// Four-panel mesh [-2a,-a], [-a,0], [0,a], [a,2a] around `corner` (scales per side).
pub fn type_c_mesh(mesh: &Mesh, corner: usize, a: (f64, f64)) -> Result<Mesh> {
    Mesh::corner_local(
        &mesh.geom,
        corner,
        mesh.order,
        &[
            (0, -2.0 * a.0, -a.0),
            (0, -a.0, 0.0),
            (1, 0.0, a.1),
            (1, a.1, 2.0 * a.1),
        ],
    )
}

/// Six-panel mesh refining the two inner panels of the four-panel mesh.
pub fn type_b_mesh(mesh: &Mesh, corner: usize, a: (f64, f64)) -> Result<Mesh> {
    Mesh::corner_local(
        &mesh.geom,
        corner,
        mesh.order,
        &[
            (0, -2.0 * a.0, -a.0),
            (0, -a.0, -0.5 * a.0),
            (0, -0.5 * a.0, 0.0),
            (1, 0.0, 0.5 * a.1),
            (1, 0.5 * a.1, a.1),
            (1, a.1, 2.0 * a.1),
        ],
    )
}

/// Local operator I + K/σ.
fn local_system(mesh: &Mesh, kind: KernelKind, sigma: f64, ctx: &Context) -> Result<CMat> {
    let mut k = assemble(mesh, kind, ctx)?;
    normalize(&mut k, sigma);
    Ok(k)
}

fn normalize(k: &mut CMat, sigma: f64) {
    let s = Complex64::new(1.0 / sigma, 0.0);
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            k[(i, j)] *= s;
        }
        k[(j, j)] += Complex64::new(1.0, 0.0);
    }
}

fn check_condition(lu: &Lu) -> Result<()> {
    let cond = lu.condition_estimate();
    if !(cond < SINGULAR_CONDITION) {
        return Err(Error::Singular { cond });
    }
    Ok(())
}

/// Compressed inverse R for `corner` of the coarse `mesh` after `n_sub` levels.
pub fn compute_r(
    mesh: &Mesh,
    corner: usize,
    n_sub: usize,
    kind: KernelKind,
    sigma: f64,
    ctx: &Context,
) -> Result<CornerInverse> {
    if mesh.frame != Frame::Global || mesh.fine {
        return Err(Error::Domain("RCIP needs the global coarse mesh".into()));
    }
    let h = side_lengths(mesh, corner)?;
    let n = mesh.order;
    let dofs: Vec<usize> = mesh
        .nodes_of_panels(&mesh.corner_neighborhoods[corner])
        .into_iter()
        .flat_map(|i| [2 * i, 2 * i + 1])
        .collect();
    let scale = |i: usize| {
        let f = 0.5f64.powi((n_sub - i) as i32);
        (h.0 * f, h.1 * f)
    };
    let m0 = local_system(&type_c_mesh(mesh, corner, scale(0))?, kind, sigma, ctx)?;
    let lu0 = Lu::new(m0.as_ref())?;
    check_condition(&lu0)?;
    let mut r = lu0.solve(Mat::<Complex64>::identity(8 * n, 8 * n).as_ref());
    let r0 = r.clone();
    let (p, pwt) = prolongation(ctx);
    let inner: Vec<usize> = (2 * n..10 * n).collect();
    let outer: Vec<usize> = (0..2 * n).chain(10 * n..12 * n).collect();
    let is_inner = |p: usize| (1..=4).contains(&p);
    let mut levels = Vec::with_capacity(n_sub);
    for i in 1..=n_sub {
        let mb = type_b_mesh(mesh, corner, scale(i))?;
        let mut kb = assemble_filtered(&mb, kind, ctx, |t, s| !(is_inner(t) && is_inner(s)))?;
        let s = Complex64::new(1.0 / sigma, 0.0);
        for j in 0..kb.ncols() {
            for q in 0..kb.nrows() {
                kb[(q, j)] *= s;
            }
        }
        let k_io = select(kb.as_ref(), &inner, &outer);
        let k_oi = select(kb.as_ref(), &outer, &inner);
        let mut s_mat = select(kb.as_ref(), &outer, &outer);
        for d in 0..s_mat.nrows() {
            s_mat[(d, d)] += Complex64::new(1.0, 0.0);
        }
        let rk = &r * &k_io;
        s_mat -= &k_oi * &rk;
        let schur = Lu::new(s_mat.as_ref())?;
        check_condition(&schur)?;
        let p_in = select(p.as_ref(), &inner, &(0..8 * n).collect::<Vec<_>>());
        let p_o = select(p.as_ref(), &outer, &(0..8 * n).collect::<Vec<_>>());
        let rp = &r * &p_in;
        let x_o = schur.solve((&p_o - &k_oi * &rp).as_ref());
        let x_in = &r * &(&p_in - &k_io * &x_o);
        let mut x = Mat::<Complex64>::zeros(12 * n, 8 * n);
        for (row, &g) in inner.iter().enumerate() {
            for c in 0..8 * n {
                x[(g, c)] = x_in[(row, c)];
            }
        }
        for (row, &g) in outer.iter().enumerate() {
            for c in 0..8 * n {
                x[(g, c)] = x_o[(row, c)];
            }
        }
        let r_next = &pwt * &x;
        levels.push(Level {
            r_prev: std::mem::replace(&mut r, r_next),
            k_io,
            k_oi,
            schur,
        });
    }
    Ok(CornerInverse {
        corner,
        n_sub,
        dofs,
        r,
        h,
        levels,
        r0,
    })
}

/// Local mesh around `corner` graded exactly as the recursion assumes: on each side the
/// far coarse panel plus the near one split dyadically `n_sub` times.
pub fn fine_corner_mesh(mesh: &Mesh, corner: usize, n_sub: usize) -> Result<Mesh> {
    let h = side_lengths(mesh, corner)?;
    let mut panels = vec![(0, -2.0 * h.0, -h.0)];
    let mut e = -h.0;
    for _ in 0..n_sub {
        panels.push((0, e, 0.5 * e));
        e *= 0.5;
    }
    panels.push((0, e, 0.0));
    let mut e = h.1 * 0.5f64.powi(n_sub as i32);
    panels.push((1, 0.0, e));
    for _ in 0..n_sub {
        panels.push((1, e, 2.0 * e));
        e *= 2.0;
    }
    panels.push((1, h.1, 2.0 * h.1));
    Mesh::corner_local(&mesh.geom, corner, mesh.order, &panels)
}

/// Interpolation from Γ* to the fine corner mesh and its weighted transpose.
fn fine_prolongation(coarse: &Mesh, fine: &Mesh, ctx: &Context) -> (CMat, CMat) {
    let n = coarse.order;
    let tab = &ctx.table;
    let nf = fine.n_dofs();
    let mut p = Mat::<Complex64>::zeros(nf, 8 * n);
    let mut pwt = Mat::<Complex64>::zeros(8 * n, nf);
    for (fp, panel) in fine.panels.iter().enumerate() {
        let mid = 0.5 * (panel.a + panel.b);
        let cp = coarse
            .panels
            .iter()
            .position(|c| c.component == panel.component && c.a <= mid && mid <= c.b)
            .expect("fine panel inside a coarse panel");
        let c = &coarse.panels[cp];
        for (k, node) in fine.panel_nodes(fp).iter().enumerate() {
            let u = (2.0 * node.param - (c.a + c.b)) / c.len();
            let row = tab.interp_row(u);
            for m in 0..n {
                let ratio = node.weight / coarse.panel_nodes(cp)[m].weight;
                for comp in 0..2 {
                    let (fi, ci) = (2 * (panel.first_node + k) + comp, 2 * (cp * n + m) + comp);
                    p[(fi, ci)] = row[m].into();
                    pwt[(ci, fi)] = (row[m] * ratio).into();
                }
            }
        }
    }
    (p, pwt)
}

/// Reference R = P_W^T (I + K_fine/σ)^{-1} P computed on an explicitly built fine mesh.
pub fn compute_r_direct(
    mesh: &Mesh,
    corner: usize,
    n_sub: usize,
    kind: KernelKind,
    sigma: f64,
    ctx: &Context,
) -> Result<CMat> {
    let h = side_lengths(mesh, corner)?;
    let coarse = type_c_mesh(mesh, corner, h)?;
    let fine = fine_corner_mesh(mesh, corner, n_sub)?;
    let m = local_system(&fine, kind, sigma, ctx)?;
    let (p, pwt) = fine_prolongation(&coarse, &fine, ctx);
    let lu = Lu::new(m.as_ref())?;
    Ok(&pwt * &lu.solve(p.as_ref()))
}

impl CornerInverse {
    /// Density values on every panel of [`fine_corner_mesh`] from the transformed
    /// coarse density on Γ*.
    pub fn reconstruct_fine(
        &self,
        phi_tilde: &[Complex64],
        ctx: &Context,
    ) -> Result<Vec<Complex64>> {
        let n = ctx.table.n;
        if phi_tilde.len() != 8 * n {
            return Err(Error::Domain(format!(
                "expected {} neighborhood values, got {}",
                8 * n,
                phi_tilde.len()
            )));
        }
        if self.levels.len() != self.n_sub {
            return Err(Error::Domain("recursion state incomplete".into()));
        }
        let (p, _) = prolongation(ctx);
        let inner: Vec<usize> = (2 * n..10 * n).collect();
        let outer: Vec<usize> = (0..2 * n).chain(10 * n..12 * n).collect();
        let col = |v: &[Complex64]| Mat::<Complex64>::from_fn(v.len(), 1, |i, _| v[i]);
        let mut cur = col(phi_tilde);
        // fine panels: minus side outward-in, then plus side inward-out
        let per_side = self.n_sub + 2;
        let mut minus: Vec<Vec<Complex64>> = vec![Vec::new(); per_side];
        let mut plus: Vec<Vec<Complex64>> = vec![Vec::new(); per_side];
        for i in (1..=self.n_sub).rev() {
            let lv = &self.levels[i - 1];
            let c = &p * &cur;
            let c_in = select(c.as_ref(), &inner, &[0]);
            let c_o = select(c.as_ref(), &outer, &[0]);
            let x_o = lv
                .schur
                .solve((&c_o - &lv.k_oi * &(&lv.r_prev * &c_in)).as_ref());
            let slot = self.n_sub - i;
            minus[slot] = (0..2 * n).map(|q| x_o[(q, 0)]).collect();
            plus[per_side - 1 - slot] = (2 * n..4 * n).map(|q| x_o[(q, 0)]).collect();
            cur = &c_in - &lv.k_io * &x_o;
        }
        let r0 = if self.n_sub == 0 { &self.r } else { &self.r0 };
        let bottom = r0 * &cur;
        let v: Vec<Complex64> = (0..8 * n).map(|q| bottom[(q, 0)]).collect();
        minus[per_side - 2] = v[..2 * n].to_vec();
        minus[per_side - 1] = v[2 * n..4 * n].to_vec();
        plus[0] = v[4 * n..6 * n].to_vec();
        plus[1] = v[6 * n..].to_vec();
        if self.n_sub == 0 {
            // the four panels are the whole neighborhood
            return Ok(v);
        }
        Ok(minus.into_iter().chain(plus).flatten().collect())
    }
}

/// Splits K into the corner-neighborhood part K* and the rest K°.
pub fn split_k(k: &CMat, mesh: &Mesh) -> (CMat, CMat) {
    let mut star = Mat::<Complex64>::zeros(k.nrows(), k.ncols());
    let mut rest = k.clone();
    for nb in &mesh.corner_neighborhoods {
        let dofs: Vec<usize> = mesh
            .nodes_of_panels(nb)
            .into_iter()
            .flat_map(|i| [2 * i, 2 * i + 1])
            .collect();
        for &j in &dofs {
            for &i in &dofs {
                star[(i, j)] = k[(i, j)];
                rest[(i, j)] = Complex64::default();
            }
        }
    }
    (star, rest)
}

/// Result of the compressed solve.
pub struct CompressedSolution {
    /// Transformed density φ̃ (one column per right-hand side).
    pub phi_tilde: CMat,
    /// Weight-corrected density φ̂ = R φ̃, used for field evaluation.
    pub phi_hat: CMat,
    pub corners: Vec<CornerInverse>,
    pub condition: f64,
}

/// Solves (I + K°R) φ̃ = g/σ for each column of `rhs` (data of σI + K).
/// Consumes the operator to build the compressed matrix in place.
pub fn solve_compressed(
    mesh: &Mesh,
    system: System,
    n_sub: usize,
    rhs: &CMat,
    ctx: &Context,
) -> Result<CompressedSolution> {
    let kind = system.formulation.operator_kernel();
    let sigma = system.sigma;
    let corners: Vec<CornerInverse> = (0..mesh.corner_neighborhoods.len())
        .into_par_iter()
        .map(|c| compute_r(mesh, c, n_sub, kind, sigma, ctx))
        .collect::<Result<_>>()?;
    let mut a = system.k;
    let inv = Complex64::new(1.0 / sigma, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            a[(i, j)] *= inv;
        }
    }
    for c in &corners {
        for &j in &c.dofs {
            for &i in &c.dofs {
                a[(i, j)] = Complex64::default();
            }
        }
        let cols = select(a.as_ref(), &(0..a.nrows()).collect::<Vec<_>>(), &c.dofs);
        let kr = &cols * &c.r;
        for (q, &j) in c.dofs.iter().enumerate() {
            for i in 0..a.nrows() {
                a[(i, j)] = kr[(i, q)];
            }
        }
    }
    for d in 0..a.nrows() {
        a[(d, d)] += Complex64::new(1.0, 0.0);
    }
    let lu = Lu::new(a.as_ref())?;
    let condition = lu.condition_estimate();
    if !(condition < SINGULAR_CONDITION) {
        return Err(Error::Singular { cond: condition });
    }
    let g = Mat::<Complex64>::from_fn(rhs.nrows(), rhs.ncols(), |i, j| rhs[(i, j)] * inv);
    let phi_tilde = lu.solve(g.as_ref());
    let mut phi_hat = phi_tilde.clone();
    for c in &corners {
        let sub = select(
            phi_tilde.as_ref(),
            &c.dofs,
            &(0..rhs.ncols()).collect::<Vec<_>>(),
        );
        let v = &c.r * &sub;
        for (q, &i) in c.dofs.iter().enumerate() {
            for j in 0..rhs.ncols() {
                phi_hat[(i, j)] = v[(q, j)];
            }
        }
    }
    Ok(CompressedSolution {
        phi_tilde,
        phi_hat,
        corners,
        condition,
    })
}
