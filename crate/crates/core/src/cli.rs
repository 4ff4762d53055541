//! Command-line front end. Every command produces one or more
//! [`ResultRecord`]s, printed as single-line JSON on stdout; human-readable
//! tables go to stderr.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::catalog::{self, CatalogEntry, EntryKind};
use crate::degree::{
    degree_sphere_map_kronecker, degree_sphere_map_simplicial, local_degree_regular, verify_multiplication, BoxDomain,
};
use crate::error::{Error, Result};
use crate::experiment::{self, ExperimentConfig, LinkGrid};
use crate::extension::{self, ExtensionConfig, Mollifier};
use crate::geom;
use crate::linking::{gauss_linking_circles, linking_number, verify_linking_invariance};
use crate::map::MapOracle;
use crate::mesh::{
    iota1_oracle, iota2_oracle, make_sphere_mesh, embed_custom, ProductGrid, SphereMesh, SphereQuadrature,
};
use crate::sobolev::{self, blow_up, good_point_check, unit_ball, w1p_norm, BlowUpSource, GridFunction};

pub const SCHEMA: u32 = 1;
pub const CONFIG_ENV: &str = "LINKDEG_CONFIG";
pub const DEFAULT_CONFIG: &str = "linkdeg-config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub value: Value,
    pub rounded: Option<i64>,
    pub residual: Option<f64>,
    pub provenance: Vec<String>,
    pub wall_time_ms: u64,
    pub config_hash: String,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

/// The orientation choice that makes the base pair of linked spheres link with `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationState {
    pub global_sign: i64,
    pub fixed: bool,
}

impl CalibrationState {
    pub fn load(path: &Path) -> Result<Option<CalibrationState>> {
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path)?;
        let state: CalibrationState =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if state.global_sign.abs() != 1 {
            return Err(Error::Parse(format!("{}: global_sign must be ±1", path.display())));
        }
        Ok(Some(state))
    }

    /// Atomic write: a temporary file in the same directory, then rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(serde_json::to_string_pretty(self).expect("serializable").as_bytes())?;
        tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "linkdeg", version, about = "Degrees and linking numbers of discretized maps")]
pub struct Cli {
    /// Calibration file (default: $LINKDEG_CONFIG, then ./linkdeg-config.json).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fix the global orientation sign from the base pair of linked spheres.
    Calibrate(GridArgs),
    /// Linking number of a catalog pair or of the linked spheres in R^4.
    Link(LinkArgs),
    /// Degree of a catalog map.
    Degree(DegreeArgs),
    /// W^{1,p} distance of a normalized blow-up to its linear limit.
    Blowup(BlowupArgs),
    /// Half-space extension bounds for a scalar field.
    Extend(ExtendArgs),
    /// Good-point verdict of a catalog map at a point.
    Goodpoint(GoodpointArgs),
    /// Property suite: multiplication, invariance, determinant bound, chain rule.
    Checks,
    /// Linking of blown-up images of the linked spheres at shrinking radii.
    Experiment(ExperimentArgs),
    /// List catalog entries and their known facts.
    Catalog(CatalogArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Nodes on the circle factor.
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
    /// Octahedron refinement level of the S² factor.
    #[arg(long, default_value_t = 4)]
    pub refinement: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LinkArgs {
    /// Catalog curve pair.
    #[arg(long, conflicts_with_all = ["iota1", "iota2"])]
    pub pair: Option<String>,
    /// Parameter x ∈ B³ of the first sphere.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub iota1: Option<Vec<f64>>,
    /// Parameter y ∈ B² of the second sphere.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub iota2: Option<Vec<f64>>,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Apply ℛ to the first sphere.
    #[arg(long)]
    pub iota1_reflected: bool,
    /// Apply ℛ to the second sphere.
    #[arg(long)]
    pub iota2_reflected: bool,
    /// Replace the octahedral S² quadrature by a mesh file.
    #[arg(long)]
    pub mesh2: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub refinement: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Simplicial,
    Kronecker,
    Regular,
}

#[derive(Debug, Clone, Args)]
pub struct DegreeArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long, value_enum, default_value_t = Method::Simplicial)]
    pub method: Method,
    /// Mesh refinement (simplicial, Kronecker); default depends on the sphere.
    #[arg(long)]
    pub refinement: Option<usize>,
    /// Target value (regular) or direction (simplicial); default is the catalog probe.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub value: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct BlowupArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Vec<f64>,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 13)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ExtendArgs {
    /// Scalar field (sine, bump, tent, poly, wave).
    #[arg(long)]
    pub f: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub t: f64,
    #[arg(long, default_value_t = 65)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GoodpointArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 161)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0,0")]
    pub point: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.125")]
    pub radii: Vec<f64>,
    /// Retry with seeded random sphere parameters when images intersect.
    #[arg(long)]
    pub jitter: Option<u64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 13)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CatalogArgs {
    /// Show one entry.
    #[arg(long)]
    pub name: Option<String>,
}

/// Exit code for an error: 2 precondition, 3 not converged, 4 internal.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => 3,
        e if e.is_precondition() => 2,
        _ => 4,
    }
}

pub fn config_path(cli_path: Option<&Path>) -> PathBuf {
    cli_path
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG))
}

fn config_hash(command: &str, inputs: &BTreeMap<String, Value>, sign: Option<i64>) -> String {
    let canonical = json!({"command": command, "inputs": inputs, "global_sign": sign});
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

struct Recorder {
    command: &'static str,
    started: Instant,
    sign: Option<i64>,
}

impl Recorder {
    fn new(command: &'static str, sign: Option<i64>) -> Recorder {
        Recorder {
            command,
            started: Instant::now(),
            sign,
        }
    }

    fn record(
        &self,
        inputs: BTreeMap<String, Value>,
        value: Value,
        rounded: Option<i64>,
        residual: Option<f64>,
        provenance: &[&str],
    ) -> ResultRecord {
        ResultRecord {
            schema: SCHEMA,
            command: self.command.to_string(),
            config_hash: config_hash(self.command, &inputs, self.sign),
            inputs,
            value,
            rounded,
            residual,
            provenance: provenance.iter().map(|s| s.to_string()).collect(),
            wall_time_ms: self.started.elapsed().as_millis() as u64,
        }
    }
}

macro_rules! inputs {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = BTreeMap::new();
        $(m.insert($k.to_string(), json!($v));)*
        m
    }};
}

/// Calibrates (and persists) on first use, otherwise loads.
pub fn ensure_calibration(path: &Path, grid: &LinkGrid) -> Result<CalibrationState> {
    if let Some(state) = CalibrationState::load(path)? {
        return Ok(state);
    }
    let (global_sign, _) = experiment::calibrate_sign(grid)?;
    let state = CalibrationState {
        global_sign,
        fixed: true,
    };
    state.save(path)?;
    Ok(state)
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<Vec<ResultRecord>> {
    let path = config_path(cli.config.as_deref());
    match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(&path, a).map(|r| vec![r]),
        Command::Link(a) => cmd_link(&path, a).map(|r| vec![r]),
        Command::Degree(a) => cmd_degree(a).map(|r| vec![r]),
        Command::Blowup(a) => cmd_blowup(a).map(|r| vec![r]),
        Command::Extend(a) => cmd_extend(a).map(|r| vec![r]),
        Command::Goodpoint(a) => cmd_goodpoint(a).map(|r| vec![r]),
        Command::Checks => cmd_checks(),
        Command::Experiment(a) => cmd_experiment(&path, a).map(|r| vec![r]),
        Command::Catalog(a) => cmd_catalog(a),
    }
}

pub fn cmd_calibrate(path: &Path, a: &GridArgs) -> Result<ResultRecord> {
    let mut rec = Recorder::new("calibrate", None);
    let grid = LinkGrid {
        circle_nodes: a.nodes,
        refinement: a.refinement,
    };
    let (sign, base) = experiment::calibrate_sign(&grid)?;
    let state = match CalibrationState::load(path)? {
        Some(existing) if existing.fixed => {
            if existing.global_sign != sign {
                return Err(Error::InvalidArgument(format!(
                    "stored global_sign {} disagrees with the recomputed {sign}; remove {} to recalibrate",
                    existing.global_sign,
                    path.display()
                )));
            }
            existing
        }
        _ => {
            let s = CalibrationState {
                global_sign: sign,
                fixed: true,
            };
            s.save(path)?;
            s
        }
    };
    eprintln!("global_sign = {:+}  (raw base linking {:.6})", state.global_sign, base.value);
    rec.sign = Some(state.global_sign);
    Ok(rec.record(
        inputs!("nodes" => a.nodes, "refinement" => a.refinement),
        json!(base.value * state.global_sign as f64),
        Some(base.rounded * state.global_sign),
        Some(base.residual),
        &["Gauss-map degree of the base linked pair", "global_sign chosen so the base pair links with +1"],
    ))
}

fn circle_nodes_or(n: Option<usize>, default: usize) -> Result<usize> {
    match n {
        Some(0) => Err(Error::InvalidArgument("--nodes must be positive".into())),
        Some(v) => Ok(v),
        None => Ok(default),
    }
}

pub fn cmd_link(path: &Path, a: &LinkArgs) -> Result<ResultRecord> {
    if let Some(name) = &a.pair {
        let e = catalog::get(name)?;
        let Some(partner) = e.partner.as_ref().filter(|_| e.kind == EntryKind::CurvePair) else {
            return Err(Error::InvalidArgument(format!("`{name}` is not a curve pair")));
        };
        if e.oracle.dim_out() == 3 {
            let nodes = circle_nodes_or(a.nodes, 256)?;
            let rec = Recorder::new("link", None);
            let l = gauss_linking_circles(&e.oracle, partner, nodes)?;
            eprintln!("{name}: Gauss integral {:.9} (separation {:.3e})", l.value, l.separation);
            return Ok(rec.record(
                inputs!("pair" => name, "nodes" => nodes),
                json!(l.value),
                Some(l.rounded),
                Some(l.residual),
                &["Gauss double integral, trapezoid on S¹×S¹"],
            ));
        }
    }
    if a.n != 4 {
        return Err(Error::UnsupportedDimension(a.n));
    }
    let x = a.iota1.clone().unwrap_or_else(|| vec![0.0; 3]);
    let y = a.iota2.clone().unwrap_or_else(|| vec![0.0; 2]);
    let nodes = circle_nodes_or(a.nodes, 128)?;
    let second = match &a.mesh2 {
        Some(p) => {
            let mesh = SphereMesh::from_text(&std::fs::read_to_string(p)?)?;
            if mesh.dim != 2 {
                return Err(Error::InvalidMesh(format!("{} is not a mesh of S²", p.display())));
            }
            mesh.quadrature()
        }
        None => SphereQuadrature::for_sphere(2, a.refinement)?,
    };
    let mut rec = Recorder::new("link", None);
    let state = ensure_calibration(path, &LinkGrid::REFERENCE)?;
    rec.sign = Some(state.global_sign);
    let r = MapOracle::reflection(4);
    let mut g1 = iota1_oracle(4, &x)?;
    let mut g2 = iota2_oracle(4, &y)?;
    if a.iota1_reflected {
        g1 = r.compose(&g1);
    }
    if a.iota2_reflected {
        g2 = r.compose(&g2);
    }
    let grid = ProductGrid::new(SphereQuadrature::uniform_circle(nodes), second);
    let l = linking_number(&g1, &g2, &grid)?;
    let s = state.global_sign;
    eprintln!("linking {:+.9} (raw {:+.9}, global_sign {s:+})", l.value * s as f64, l.value);
    Ok(rec.record(
        inputs!(
            "pair" => a.pair.clone().unwrap_or_else(|| "iota".into()),
            "iota1" => x, "iota2" => y, "n" => 4,
            "iota1_reflected" => a.iota1_reflected, "iota2_reflected" => a.iota2_reflected,
            "nodes" => nodes, "refinement" => a.refinement,
            "mesh2" => a.mesh2.as_ref().map(|p| p.display().to_string()),
        ),
        json!(l.value * s as f64),
        Some(l.rounded * s),
        Some(l.residual),
        &["Gauss-map degree on S¹×S²", "calibrated global_sign applied"],
    ))
}

fn sphere_map_of(e: &CatalogEntry) -> Result<MapOracle> {
    let f = &e.oracle;
    if f.dim_in() != f.dim_out() || !(2..=4).contains(&f.dim_in()) {
        return Err(Error::InvalidArgument(format!("`{}` is not a map S^k → R^(k+1)", e.name)));
    }
    Ok(f.clone())
}

fn default_refinement(k: usize) -> usize {
    match k {
        1 => 8,
        2 => 4,
        _ => 2,
    }
}

pub fn cmd_degree(a: &DegreeArgs) -> Result<ResultRecord> {
    let e = catalog::get(&a.map)?;
    let rec = Recorder::new("degree", None);
    let f = sphere_map_of(&e)?;
    let d = f.dim_in();
    let k = d - 1;
    let refinement = a.refinement.unwrap_or_else(|| default_refinement(k));
    let probe = a
        .value
        .clone()
        .or_else(|| e.probe.clone())
        .unwrap_or_else(|| (0..d).map(|i| 0.11 + 0.07 * i as f64).collect());
    if probe.len() != d {
        return Err(Error::DimensionMismatch(format!("--value needs {d} coordinates")));
    }
    let (res, prov) = match a.method {
        Method::Simplicial => {
            let sphere = embed_custom(&make_sphere_mesh(k, refinement)?, &f)?;
            (degree_sphere_map_simplicial(&sphere, &probe)?, "signed covering count of projected image simplices")
        }
        Method::Kronecker => {
            let quad = SphereQuadrature::for_sphere(k, refinement)?;
            (degree_sphere_map_kronecker(&f, &quad, false)?, "Kronecker integral over the sphere")
        }
        Method::Regular => {
            let ext = e.ball_extension.clone().unwrap_or(f);
            let domain = e.domain.clone().unwrap_or_else(|| BoxDomain::cube(d, 1.0));
            (local_degree_regular(&ext, &domain, &probe)?, "signed preimage count at a regular value")
        }
    };
    eprintln!("{}: degree {:.6} ({:?})", a.map, res.value, a.method);
    Ok(rec.record(
        inputs!("map" => a.map, "method" => format!("{:?}", a.method).to_lowercase(), "refinement" => refinement, "value" => probe),
        json!(res.value),
        Some(res.rounded),
        Some(res.residual),
        &[prov],
    ))
}

pub fn cmd_blowup(a: &BlowupArgs) -> Result<ResultRecord> {
    let e = catalog::get(&a.map)?;
    let rec = Recorder::new("blowup", None);
    let n = e.oracle.dim_in();
    if a.point.len() != n || e.oracle.dim_out() != n {
        return Err(Error::DimensionMismatch(format!("`{}` needs a point in R^{n}", a.map)));
    }
    let (m, t) = experiment::normalizing_matrix(&e.oracle, &a.point)?;
    let g = MapOracle::linear(m.clone()).compose(&e.oracle);
    let gr = blow_up(&BlowUpSource::Oracle(&g, None), &a.point, a.r, a.resolution)?;
    let dist = w1p_norm(&gr.minus_oracle(&MapOracle::linear(t.clone())), a.p, &unit_ball(n))?;
    let limit = if t[(n - 1, n - 1)] < 0.0 { "reflection" } else { "identity" };
    eprintln!("‖g_r − {limit}‖_W1,{} (B) = {dist:.6e} at r = {}", a.p, a.r);
    Ok(rec.record(
        inputs!("map" => a.map, "point" => a.point, "r" => a.r, "p" => a.p, "resolution" => a.resolution, "limit" => limit, "det_a" => m.determinant()),
        json!(dist),
        None,
        None,
        &["blow-up of A∘f with A = T·Df(x_o)⁻¹, det A > 0", "trapezoidal W^{1,p} norm on the unit ball"],
    ))
}

fn scalar_grid(name: &str, n: usize, resolution: usize, scale: f64) -> Result<GridFunction> {
    let f = catalog::scalar_field(name, n)?;
    let g = MapOracle::new(n, 1, move |x| f.eval(&geom::scale(x, 1.0 / scale)));
    GridFunction::sample(&g, &vec![-scale; n], &vec![2.0 * scale; n], &vec![resolution; n])
}

pub fn cmd_extend(a: &ExtendArgs) -> Result<ResultRecord> {
    if !(1..=2).contains(&a.n) {
        return Err(Error::UnsupportedDimension(a.n));
    }
    let rec = Recorder::new("extend", None);
    let phi = Mollifier::standard(a.n);
    let f = scalar_grid(&a.f, a.n, a.resolution, 1.0)?;
    let cfg = ExtensionConfig::default();
    let report = extension::verify_extension_bounds(std::slice::from_ref(&f), &phi, a.p, &cfg)?;
    let fd = scalar_grid(&a.f, a.n, a.resolution, 2.0)?;
    let dilated = extension::verify_extension_bounds(std::slice::from_ref(&fd), &phi, a.p, &cfg)?;
    let trace = extension::trace_error(&f, &phi, a.t, a.p) / extension::lp_norm(&f, a.p);
    eprintln!("q = {}", report.q);
    eprintln!("{:>10} {:>14}", "scale", "‖Ef‖_q/‖f‖_p");
    eprintln!("{:>10} {:>14.6}", 1.0, report.ratios[0]);
    eprintln!("{:>10} {:>14.6}", 2.0, dilated.ratios[0]);
    eprintln!("relative trace error at t = {}: {trace:.3e}", a.t);
    Ok(rec.record(
        inputs!("f" => a.f, "p" => a.p, "n" => a.n, "t" => a.t, "resolution" => a.resolution,
            "ratio" => report.ratios[0], "ratio_dilated" => dilated.ratios[0], "trace_error" => trace,
            "gradient_constant" => report.gradient_constant, "gradient_bound" => report.gradient_bound),
        json!(report.q),
        None,
        None,
        &["q = (n+1)p/n", "mollifier extension, trapezoid in t over geometric levels"],
    ))
}

pub fn cmd_goodpoint(a: &GoodpointArgs) -> Result<ResultRecord> {
    let e = catalog::get(&a.map)?;
    let rec = Recorder::new("goodpoint", None);
    let n = e.oracle.dim_in();
    if a.point.len() != n {
        return Err(Error::DimensionMismatch(format!("`{}` needs a point in R^{n}", a.map)));
    }
    let dom = e.domain.clone().unwrap_or_else(|| BoxDomain::cube(n, 1.0));
    let sides: Vec<f64> = dom.lo.iter().zip(&dom.hi).map(|(l, h)| h - l).collect();
    let f = GridFunction::sample(&e.oracle, &dom.lo, &sides, &vec![a.resolution; n])?;
    let r = good_point_check(&f, &a.point, a.p, &a.radii)?;
    eprintln!("{:>8} {:>14} {:>14}", "radius", "oscillation", "remainder");
    for i in 0..r.radii.len() {
        eprintln!("{:>8} {:>14.4e} {:>14.4e}", r.radii[i], r.lebesgue_averages[i], r.cz_averages[i]);
    }
    eprintln!("verdict: {:?}", r.verdict);
    Ok(rec.record(
        inputs!("map" => a.map, "point" => a.point, "p" => a.p, "radii" => a.radii, "resolution" => a.resolution,
            "lebesgue_averages" => r.lebesgue_averages, "cz_averages" => r.cz_averages),
        json!(format!("{:?}", r.verdict).to_lowercase()),
        None,
        None,
        &["derivative oscillation and first-order remainder averages over shrinking balls"],
    ))
}

/// Composed pairs `(φ, ψ, value)` for the multiplication formula on `[−1, 1]²`.
pub fn multiplication_pairs() -> Vec<(&'static str, &'static str, [f64; 2])> {
    vec![
        ("complex-square", "rotation-pi4-2d", [0.13, 0.07]),
        ("rotation-pi4-2d", "complex-square", [0.13, 0.07]),
        ("cubic-diffeo-2d", "complex-square", [0.11, -0.05]),
        ("circle-power-3", "reflection-2d", [0.13, 0.07]),
        ("complex-square", "complex-square", [0.13, 0.07]),
    ]
}

pub fn cmd_checks() -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    let domain = BoxDomain::cube(2, 1.0);
    for (phi, psi, p) in multiplication_pairs() {
        let rec = Recorder::new("checks", None);
        let (f, g) = (catalog::get(phi)?, catalog::get(psi)?);
        let fe = f.ball_extension.unwrap_or(f.oracle);
        let ge = g.ball_extension.unwrap_or(g.oracle);
        let r = verify_multiplication(&fe, &ge, &domain, &p)?;
        eprintln!("multiplication {psi}∘{phi}: lhs {} rhs {} ({})", r.lhs, r.rhs, if r.agree { "ok" } else { "FAIL" });
        out.push(rec.record(
            inputs!("check" => "multiplication", "phi" => phi, "psi" => psi, "value" => p, "rhs" => r.rhs),
            json!(r.agree),
            Some(r.lhs),
            None,
            &["regular-value degrees of ψ∘φ and of the factors"],
        ));
    }
    let hopf = catalog::get("hopf")?;
    let grid = ProductGrid::new(SphereQuadrature::uniform_circle(128), SphereQuadrature::uniform_circle(128));
    for name in catalog::homeomorphisms_3d(1).into_iter().chain(catalog::homeomorphisms_3d(-1)) {
        let rec = Recorder::new("checks", None);
        let h = catalog::get(name)?.oracle;
        let r = verify_linking_invariance(&hopf.oracle, hopf.partner.as_ref().expect("pair"), &h, &grid)?;
        eprintln!("invariance {name}: {} -> {} ({})", r.before.rounded, r.after.rounded, if r.holds { "ok" } else { "FAIL" });
        out.push(rec.record(
            inputs!("check" => "invariance", "h" => name, "sense" => r.sense, "before" => r.before.rounded),
            json!(r.holds),
            Some(r.after.rounded),
            Some(r.after.residual),
            &["Gauss-map degree before and after the homeomorphism"],
        ));
    }
    for n in 2..=4 {
        let rec = Recorder::new("checks", None);
        let r = extension::det_bound_check(n, 10_000, n as u64)?;
        eprintln!("det bound n={n}: max ratio {:.4} <= {:.4} ({})", r.max_ratio, r.bound, r.within_bound);
        out.push(rec.record(
            inputs!("check" => "det_bound", "n" => n, "trials" => r.trials, "bound" => r.bound, "max_ratio" => r.max_ratio),
            json!(r.within_bound),
            None,
            None,
            &["Gaussian random pairs against 2^(n−1) n^(−n/2)"],
        ));
    }
    for name in ["cubic-diffeo-2d", "reversing-affine-4d"] {
        let rec = Recorder::new("checks", None);
        let e = catalog::get(name)?;
        let dom = e.domain.clone().expect("homeomorphisms carry a domain");
        let r = sobolev::chain_rule_check(&e.oracle, e.inverse.as_ref().expect("inverse"), &dom, 200, None)?;
        eprintln!("chain rule {name}: max inverse-Jacobian discrepancy {:.3e}", r.max_inverse_error);
        out.push(rec.record(
            inputs!("check" => "chain_rule", "map" => name, "samples" => r.samples, "excluded" => r.excluded),
            json!(r.max_inverse_error),
            None,
            None,
            &["finite-difference Jacobians of f and f⁻¹"],
        ));
    }
    Ok(out)
}

pub fn cmd_experiment(path: &Path, a: &ExperimentArgs) -> Result<ResultRecord> {
    let e = catalog::get(&a.map)?;
    let mut rec = Recorder::new("experiment", None);
    let state = ensure_calibration(path, &LinkGrid::REFERENCE)?;
    rec.sign = Some(state.global_sign);
    let mut cfg = ExperimentConfig::new(state.global_sign);
    cfg.grid = LinkGrid {
        circle_nodes: a.grid.nodes,
        refinement: a.grid.refinement,
    };
    cfg.resolution = a.resolution;
    cfg.jitter = a.jitter;
    let report = experiment::jacobian_sign_experiment(&e.oracle, &a.point, &a.radii, &cfg)?;
    eprintln!("J_f(x_o) = {:.6}, det A = {:.6}", report.jacobian, report.det_a);
    eprintln!("{:>8} {:>12} {:>8} {:>14}", "r", "linking", "rounded", "W1p distance");
    for r in &report.records {
        match (r.linking, r.rounded) {
            (Some(l), Some(k)) => eprintln!("{:>8} {:>12.6} {:>8} {:>14.4e}", r.r, l, k, r.w1p_distance),
            _ => eprintln!("{:>8} {:>12} {:>8} {:>14.4e}", r.r, "skipped", "-", r.w1p_distance),
        }
    }
    let last = report.records.iter().rev().find_map(|r| r.rounded);
    Ok(rec.record(
        inputs!("map" => a.map, "point" => a.point, "radii" => a.radii, "jitter" => a.jitter,
            "nodes" => a.grid.nodes, "refinement" => a.grid.refinement, "resolution" => a.resolution,
            "records" => report.records, "expected" => report.expected, "det_a" => report.det_a),
        json!(report.records.iter().map(|r| r.rounded).collect::<Vec<_>>()),
        last,
        report.records.iter().filter_map(|r| r.residual).reduce(f64::max),
        &["blow-ups of A∘f at shrinking radii", "Gauss-map degree of the images of the linked spheres", "calibrated global_sign applied"],
    ))
}

pub fn cmd_catalog(a: &CatalogArgs) -> Result<Vec<ResultRecord>> {
    let list: Vec<CatalogEntry> = match &a.name {
        Some(n) => vec![catalog::get(n)?],
        None => catalog::entries().to_vec(),
    };
    let rec = Recorder::new("catalog", None);
    Ok(list
        .iter()
        .map(|e| {
            eprintln!("{:<28} {:?}", e.name, e.kind);
            rec.record(
                inputs!("name" => e.name, "kind" => e.kind),
                json!(e.known_facts),
                None,
                None,
                &["catalog registry"],
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(exit_code(&Error::UnknownEntry("x".into())), 2);
        assert_eq!(exit_code(&Error::ImagesIntersect(0.0)), 2);
        assert_eq!(exit_code(&Error::NotConverged { residual: 0.3, threshold: 0.25 }), 3);
        assert_eq!(exit_code(&Error::Io("disk".into())), 4);
    }

    #[test]
    fn config_hash_is_deterministic() {
        let a = inputs!("map" => "hopf", "nodes" => 256);
        let b = inputs!("nodes" => 256, "map" => "hopf");
        assert_eq!(config_hash("link", &a, Some(1)), config_hash("link", &b, Some(1)));
        assert_ne!(config_hash("link", &a, Some(1)), config_hash("link", &a, Some(-1)));
        assert_eq!(config_hash("link", &a, None).len(), 64);
    }

    #[test]
    fn calibration_state_round_trips_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("cal.json");
        assert_eq!(CalibrationState::load(&path).unwrap(), None);
        let s = CalibrationState { global_sign: -1, fixed: true };
        s.save(&path).unwrap();
        assert_eq!(CalibrationState::load(&path).unwrap(), Some(s));
        std::fs::write(&path, r#"{"global_sign": 3, "fixed": true}"#).unwrap();
        assert!(matches!(CalibrationState::load(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["linkdeg", "link", "--iota1", "0,-0.5,0", "--iota2", "0.1,0", "--iota2-reflected"]).unwrap();
        match cli.command {
            Command::Link(a) => {
                assert_eq!(a.iota1, Some(vec![0.0, -0.5, 0.0]));
                assert!(a.iota2_reflected && !a.iota1_reflected);
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["linkdeg", "degree", "--map", "x", "--method", "bogus"]).is_err());
    }

    #[test]
    fn degree_command_matches_the_catalog() {
        for name in ["circle-power--2", "complex-square", "antipodal-s2"] {
            let want = catalog::get(name).unwrap().known_int("degree");
            for method in [Method::Simplicial, Method::Kronecker, Method::Regular] {
                let a = DegreeArgs { map: name.into(), method, refinement: None, value: None };
                assert_eq!(cmd_degree(&a).unwrap().rounded, want, "{name} {method:?}");
            }
        }
    }
}
