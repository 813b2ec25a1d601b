//! Command-line front end: configuration, experiment runs and CSV output.
//!
//! Configuration comes from an optional `key = value` file, then from flags, then from
//! repeated `--set key=value` overrides. List-valued keys take comma-separated values
//! and the experiment runs over their cartesian product.

use crate::assembly::{Formulation, Side};
use crate::driver::{
    corner_density, default_points, default_window, fit_corner_exponent, scatter, solve,
    solve_detailed, transcendental_root, xi_of, CornerMethod, PlaneWave, SolveConfig, SolveReport,
    WedgeCase,
};
use crate::error::{Error, Result};
use crate::geometry::make_geometry;
use crate::kernels::ElasticParams;
use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Single solves with detailed diagnostics.
    Solve,
    /// Error table over panel counts, frequencies and geometries.
    Convergence,
    /// Error against the number of dyadic refinement levels.
    RcipSweep,
    /// Power-law exponent of the density at each corner.
    Asymptotics,
}

#[derive(Debug, Parser)]
#[command(
    name = "elastic-bie",
    version,
    about = "Elastic scattering by boundary integral equations with RCIP corner compression"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Geometries, comma separated: circle, ellipse, droplet, sector.
    #[arg(long)]
    pub geometry: Option<String>,
    /// Angular frequencies, comma separated.
    #[arg(long)]
    pub omega: Option<String>,
    /// Refinement levels: a list or a range `a..b:step`.
    #[arg(long)]
    pub nsub: Option<String>,
    /// Panels per smooth component, comma separated.
    #[arg(long)]
    pub panels: Option<String>,
    /// Formulations: dnd, snn, combined.
    #[arg(long)]
    pub formulation: Option<String>,
    /// Sides: ext, int.
    #[arg(long)]
    pub side: Option<String>,
    /// Output CSV path (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Incoming wave of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Incident {
    /// Manufactured point-source problem with a known exact solution.
    PointSource,
    Compressional,
    Shear,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub geometries: Vec<String>,
    pub geometry_param: Option<f64>,
    pub formulations: Vec<Formulation>,
    pub sides: Vec<Side>,
    pub omegas: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
    pub panels: Vec<usize>,
    pub n_sub: Vec<usize>,
    pub method: CornerMethod,
    pub incident: Incident,
    /// Plane-wave direction angle in radians.
    pub angle: f64,
    pub source: Option<[f64; 2]>,
    pub targets: Option<Vec<[f64; 2]>>,
    pub window: Option<(usize, usize)>,
    pub timing: bool,
    pub out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "geometry",
    "geometry_param",
    "formulation",
    "side",
    "omega",
    "lambda",
    "mu",
    "rho",
    "panels",
    "nsub",
    "method",
    "incident",
    "angle",
    "source",
    "targets",
    "window",
    "timing",
    "out",
];

impl RunConfig {
    /// Defaults of each command.
    pub fn defaults(command: Command) -> Self {
        let mut c = RunConfig {
            command,
            geometries: vec!["circle".into()],
            geometry_param: None,
            formulations: vec![Formulation::Dnd],
            sides: vec![Side::Exterior],
            omegas: vec![3.0],
            lambda: 1.0,
            mu: 2.0,
            rho: 1.0,
            panels: vec![12],
            n_sub: vec![0],
            method: CornerMethod::Rcip,
            incident: Incident::PointSource,
            angle: 0.0,
            source: None,
            targets: None,
            window: None,
            timing: false,
            out: None,
        };
        match command {
            Command::Solve => {}
            Command::Convergence => {
                c.geometries = ["circle", "ellipse", "droplet", "sector"]
                    .map(String::from)
                    .to_vec();
                c.formulations = vec![Formulation::Dnd, Formulation::Snn];
                c.panels = vec![12, 24, 36, 48];
            }
            Command::RcipSweep => {
                c.geometries = vec!["droplet".into()];
                c.formulations = vec![Formulation::Dnd, Formulation::Snn];
                c.sides = vec![Side::Exterior, Side::Interior];
                c.panels = vec![24];
                c.n_sub = (0..=80).step_by(4).collect();
            }
            Command::Asymptotics => {
                c.geometries = vec!["sector".into()];
                c.formulations = vec![Formulation::Snn];
                c.sides = vec![Side::Interior, Side::Exterior];
                c.panels = vec![24];
                c.n_sub = vec![30];
            }
        }
        c
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "geometry" => self.geometries = list(value, |s| Ok(s.to_string()))?,
            "geometry_param" => {
                self.geometry_param = if value.is_empty() {
                    None
                } else {
                    Some(number(value)?)
                }
            }
            "formulation" => self.formulations = list(value, parse_formulation)?,
            "side" => self.sides = list(value, parse_side)?,
            "omega" => self.omegas = list(value, number)?,
            "lambda" => self.lambda = number(value)?,
            "mu" => self.mu = number(value)?,
            "rho" => self.rho = number(value)?,
            "panels" => self.panels = list(value, count)?,
            "nsub" => self.n_sub = range_list(value)?,
            "method" => {
                self.method = match value {
                    "rcip" => CornerMethod::Rcip,
                    "direct" => CornerMethod::Direct,
                    _ => {
                        return Err(config(format!(
                            "method must be rcip or direct, got '{value}'"
                        )))
                    }
                }
            }
            "incident" => {
                self.incident = match value {
                    "point" => Incident::PointSource,
                    "compressional" => Incident::Compressional,
                    "shear" => Incident::Shear,
                    _ => {
                        return Err(config(format!(
                            "incident must be point, compressional or shear, got '{value}'"
                        )))
                    }
                }
            }
            "angle" => self.angle = number(value)?,
            "source" => self.source = Some(point(value)?),
            "targets" => self.targets = Some(value.split(';').map(point).collect::<Result<_>>()?),
            "window" => {
                let w: Vec<usize> = list(value, count)?;
                if w.len() != 2 || w[0] >= w[1] {
                    return Err(config(format!(
                        "window needs two increasing levels, got '{value}'"
                    )));
                }
                self.window = Some((w[0], w[1]));
            }
            "timing" => {
                self.timing = value
                    .parse()
                    .map_err(|_| config(format!("timing must be true or false, got '{value}'")))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            other => {
                return Err(config(format!(
                    "unknown key '{other}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Reads a configuration file on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                config(format!(
                    "line {}: expected key = value, got '{}'",
                    no + 1,
                    raw.trim()
                ))
            })?;
            self.set(k, v)
                .map_err(|e| config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let mut c = RunConfig::defaults(cli.command);
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config(format!("cannot read config '{}': {e}", path.display())))?;
            c.apply_text(&text)?;
        }
        let flags = [
            ("geometry", &cli.geometry),
            ("omega", &cli.omega),
            ("nsub", &cli.nsub),
            ("panels", &cli.panels),
            ("formulation", &cli.formulation),
            ("side", &cli.side),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        for o in &cli.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| config(format!("override '{o}' is not key=value")))?;
            c.set(k, v)?;
        }
        if let Some(out) = &cli.out {
            c.out = Some(out.clone());
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("geometry", self.geometries.is_empty()),
            ("formulation", self.formulations.is_empty()),
            ("side", self.sides.is_empty()),
            ("omega", self.omegas.is_empty()),
            ("panels", self.panels.is_empty()),
            ("nsub", self.n_sub.is_empty()),
        ];
        if let Some((k, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(config(format!("'{k}' must list at least one value")));
        }
        for g in &self.geometries {
            make_geometry(g, self.geometry_param)?;
        }
        for &w in &self.omegas {
            self.params(w)?;
        }
        if self.incident != Incident::PointSource && self.command != Command::Solve {
            return Err(config(
                "plane-wave incidence has no exact solution; use it with the solve command".into(),
            ));
        }
        Ok(())
    }

    pub fn params(&self, omega: f64) -> Result<ElasticParams> {
        ElasticParams::new(self.lambda, self.mu, self.rho, omega)
    }

    fn solve_config(&self, cell: &Cell) -> Result<SolveConfig> {
        let mut s = SolveConfig::new(&cell.geometry, cell.formulation, cell.side);
        s.geometry_param = self.geometry_param;
        s.params = self.params(cell.omega)?;
        s.panels = cell.panels;
        s.n_sub = cell.n_sub;
        s.method = self.method;
        let (src, tgt) = default_points(cell.side);
        s.source = self.source.unwrap_or(src);
        s.targets = self.targets.clone().unwrap_or_else(|| vec![tgt]);
        Ok(s)
    }

    /// All (geometry, formulation, side, ω, N, n_sub) combinations in output order.
    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for g in &self.geometries {
            for &formulation in &self.formulations {
                for &side in &self.sides {
                    for &omega in &self.omegas {
                        for &panels in &self.panels {
                            for &n_sub in &self.n_sub {
                                out.push(Cell {
                                    geometry: g.clone(),
                                    formulation,
                                    side,
                                    omega,
                                    panels,
                                    n_sub,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `# key = value` lines describing the resolved configuration.
    pub fn header(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let pt = |p: [f64; 2]| format!("{},{}", p[0], p[1]);
        let mut h = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(h, "# {k} = {v}");
        };
        line("command", format!("{:?}", self.command).to_lowercase());
        line("geometry", self.geometries.join(","));
        line(
            "geometry_param",
            self.geometry_param
                .map(|p| p.to_string())
                .unwrap_or_default(),
        );
        line(
            "formulation",
            join(
                self.formulations
                    .iter()
                    .map(|f| formulation_name(*f).into())
                    .collect(),
            ),
        );
        line(
            "side",
            join(self.sides.iter().map(|s| side_name(*s).into()).collect()),
        );
        line(
            "omega",
            join(self.omegas.iter().map(f64::to_string).collect()),
        );
        line("lambda", self.lambda.to_string());
        line("mu", self.mu.to_string());
        line("rho", self.rho.to_string());
        line(
            "panels",
            join(self.panels.iter().map(usize::to_string).collect()),
        );
        line(
            "nsub",
            join(self.n_sub.iter().map(usize::to_string).collect()),
        );
        line(
            "method",
            if self.method == CornerMethod::Rcip {
                "rcip"
            } else {
                "direct"
            }
            .into(),
        );
        line(
            "incident",
            match self.incident {
                Incident::PointSource => "point",
                Incident::Compressional => "compressional",
                Incident::Shear => "shear",
            }
            .into(),
        );
        line("angle", self.angle.to_string());
        line(
            "source",
            self.source.map(pt).unwrap_or_else(|| "default".into()),
        );
        line(
            "targets",
            self.targets
                .as_ref()
                .map(|t| t.iter().map(|p| pt(*p)).collect::<Vec<_>>().join(";"))
                .unwrap_or_else(|| "default".into()),
        );
        line(
            "window",
            self.window
                .map(|(a, b)| format!("{a},{b}"))
                .unwrap_or_else(|| "default".into()),
        );
        line("timing", self.timing.to_string());
        line("order", crate::driver::ORDER.to_string());
        h
    }
}

#[derive(Clone, Debug)]
struct Cell {
    geometry: String,
    formulation: Formulation,
    side: Side,
    omega: f64,
    panels: usize,
    n_sub: usize,
}

fn config(msg: String) -> Error {
    Error::Config(msg)
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| config(format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(config(format!("'{}' is not finite", s.trim())));
    }
    Ok(v)
}

fn count(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| config(format!("'{}' is not a non-negative integer", s.trim())))
}

fn list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(f)
        .collect()
}

/// Comma list whose items may also be `a..b` or `a..b:step` (inclusive).
fn range_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match item.split_once("..") {
            None => out.push(count(item)?),
            Some((a, rest)) => {
                let (b, step) = match rest.split_once(':') {
                    Some((b, st)) => (count(b)?, count(st)?),
                    None => (count(rest)?, 1),
                };
                let a = count(a)?;
                if step == 0 || b < a {
                    return Err(config(format!("bad range '{item}'")));
                }
                out.extend((a..=b).step_by(step));
            }
        }
    }
    Ok(out)
}

fn point(s: &str) -> Result<[f64; 2]> {
    let v = list(s, number)?;
    match v.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(config(format!("'{}' is not a point x,y", s.trim()))),
    }
}

fn parse_formulation(s: &str) -> Result<Formulation> {
    match s.to_ascii_lowercase().as_str() {
        "dnd" => Ok(Formulation::Dnd),
        "snn" => Ok(Formulation::Snn),
        "combined" => Ok(Formulation::CombinedDirichlet),
        _ => Err(config(format!(
            "formulation must be dnd, snn or combined, got '{s}'"
        ))),
    }
}

fn parse_side(s: &str) -> Result<Side> {
    match s.to_ascii_lowercase().as_str() {
        "exterior" | "ext" => Ok(Side::Exterior),
        "interior" | "int" => Ok(Side::Interior),
        _ => Err(config(format!(
            "side must be exterior or interior, got '{s}'"
        ))),
    }
}

fn formulation_name(f: Formulation) -> &'static str {
    match f {
        Formulation::Dnd => "dnd",
        Formulation::Snn => "snn",
        Formulation::CombinedDirichlet => "combined",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Exterior => "exterior",
        Side::Interior => "interior",
    }
}

fn e(x: f64) -> String {
    format!("{x:.5e}")
}

/// Runs the configured command and returns the CSV text.
pub fn run(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let mut out = cfg.header();
    match cfg.command {
        Command::Solve => run_solve(cfg, &mut out)?,
        Command::Convergence => run_convergence(cfg, &mut out)?,
        Command::RcipSweep => run_rcip_sweep(cfg, &mut out)?,
        Command::Asymptotics => run_asymptotics(cfg, &mut out)?,
    }
    Ok(out)
}

/// Solves every cell concurrently, keeping the cell order.
fn reports(cfg: &RunConfig, cells: &[Cell]) -> Result<Vec<SolveReport>> {
    cells
        .par_iter()
        .map(|c| solve(&cfg.solve_config(c)?))
        .collect()
}

fn cell_prefix(c: &Cell) -> String {
    format!(
        "{},{},{},{},{},{}",
        c.geometry,
        formulation_name(c.formulation),
        side_name(c.side),
        c.omega,
        c.panels,
        c.n_sub
    )
}

fn run_solve(cfg: &RunConfig, out: &mut String) -> Result<()> {
    let cells = cfg.cells();
    if cfg.incident != Incident::PointSource {
        let wave = match cfg.incident {
            Incident::Compressional => PlaneWave::compressional(cfg.angle),
            _ => PlaneWave::shear(cfg.angle),
        };
        out.push_str("geometry,formulation,side,omega,panels,nsub,x,y,re_u1,im_u1,re_u2,im_u2\n");
        let fields: Vec<_> = cells
            .par_iter()
            .map(|c| {
                let s = cfg.solve_config(c)?;
                Ok((s.targets.clone(), scatter(&s, &wave)?))
            })
            .collect::<Result<_>>()?;
        for (c, (targets, u)) in cells.iter().zip(fields) {
            for (x, v) in targets.iter().zip(u) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    cell_prefix(c),
                    x[0],
                    x[1],
                    e(v[0].re),
                    e(v[0].im),
                    e(v[1].re),
                    e(v[1].im)
                );
            }
        }
        return Ok(());
    }
    out.push_str("geometry,formulation,side,omega,panels,nsub,unknowns,err1,err2,err1_u1,err1_u2,err2_u1,err2_u2,condition");
    out.push_str(if cfg.timing {
        ",assembly_s,solve_s,evaluation_s\n"
    } else {
        "\n"
    });
    for (c, r) in cells.iter().zip(reports(cfg, &cells)?) {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            cell_prefix(c),
            r.unknowns,
            e(r.errors[0]),
            e(r.errors[1]),
            e(r.component_errors[0][0]),
            e(r.component_errors[0][1]),
            e(r.component_errors[1][0]),
            e(r.component_errors[1][1]),
            e(r.condition)
        );
        if cfg.timing {
            let t = r.timings;
            let _ = write!(out, ",{:.3},{:.3},{:.3}", t.assembly, t.solve, t.evaluation);
        }
        out.push('\n');
    }
    Ok(())
}

fn run_convergence(cfg: &RunConfig, out: &mut String) -> Result<()> {
    let cells = cfg.cells();
    out.push_str("geometry,formulation,side,omega,panels,nsub,err1,err2");
    out.push_str(if cfg.timing { ",wall_s\n" } else { "\n" });
    for (c, r) in cells.iter().zip(reports(cfg, &cells)?) {
        let _ = write!(
            out,
            "{},{},{}",
            cell_prefix(c),
            e(r.errors[0]),
            e(r.errors[1])
        );
        if cfg.timing {
            let t = r.timings;
            let _ = write!(out, ",{:.3}", t.assembly + t.solve + t.evaluation);
        }
        out.push('\n');
    }
    Ok(())
}

fn run_rcip_sweep(cfg: &RunConfig, out: &mut String) -> Result<()> {
    for g in &cfg.geometries {
        if make_geometry(g, cfg.geometry_param)?.corners().is_empty() {
            return Err(config(format!("geometry '{g}' has no corners to refine")));
        }
    }
    run_convergence(cfg, out)
}

fn run_asymptotics(cfg: &RunConfig, out: &mut String) -> Result<()> {
    out.push_str(
        "geometry,formulation,side,omega,panels,nsub,corner,angle,arm,level_lo,level_hi,points,alpha,rms,nu1,nu2,reference,deviation\n",
    );
    let cells = cfg.cells();
    let rows: Vec<String> = cells
        .par_iter()
        .map(|c| -> Result<String> {
            let geom = make_geometry(&c.geometry, cfg.geometry_param)?;
            if geom.corners().is_empty() {
                return Err(config(format!("geometry '{}' has no corners", c.geometry)));
            }
            let solved = solve_detailed(&cfg.solve_config(c)?)?;
            let window = cfg.window.unwrap_or_else(|| default_window(c.n_sub));
            let xi = xi_of(&cfg.params(c.omega)?);
            let mut text = String::new();
            for (k, corner) in geom.corners().iter().enumerate() {
                let theta = 2.0 * std::f64::consts::PI - corner.angle;
                let nu1 = transcendental_root(WedgeCase::Rigid, theta, xi)?;
                let nu2 = transcendental_root(WedgeCase::TractionFree, theta, xi)?;
                let reference = if c.side == Side::Interior {
                    nu1 - 1.0
                } else {
                    nu2
                };
                let samples = corner_density(&solved, k, 0)?;
                for arm in 0..2 {
                    let sub: Vec<_> = samples.iter().copied().filter(|s| s.side == arm).collect();
                    let fit = fit_corner_exponent(&sub, window)?;
                    let _ = writeln!(
                        text,
                        "{},{k},{},{arm},{},{},{},{:.6},{},{:.14},{:.14},{:.6},{:.6}",
                        cell_prefix(c),
                        corner.angle,
                        window.0,
                        window.1,
                        fit.points,
                        fit.alpha,
                        e(fit.rms),
                        nu1,
                        nu2,
                        reference,
                        (fit.alpha - reference).abs()
                    );
                }
            }
            Ok(text)
        })
        .collect::<Result<_>>()?;
    for r in rows {
        out.push_str(&r);
    }
    Ok(())
}

/// Entry point shared by the binary: parses, runs and writes output. Returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = RunConfig::from_cli(&cli).and_then(|cfg| {
        let text = run(&cfg)?;
        match &cfg.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("elastic-bie: {err}");
            err.exit_code()
        }
    }
}
