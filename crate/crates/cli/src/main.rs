mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use localproj::femspaces::{MeshLayers, PointField};
use localproj::meshkit::{classify_gamma, gen_cube_mesh, parse_gamma, parse_mesh, GammaOptions, GammaPartition};
use localproj::poincare::{max_constants, poincare_sweep};
use localproj::projections::{commutation_residual, project, stability_constants, InputField, ProjectionOperator};
use localproj::verify::{self, CheckRecord, Tolerances};
use localproj::weights::{weight_set, weight_set_gamma, WeightSet};
use localproj::Point;
use report::{MeshSummary, VerificationReport};

#[derive(Parser, Debug)]
#[command(name = "localproj", version, about = "Local commuting projections for the lowest-order 3D de Rham complex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Mesh file (`mesh3d` format).
    #[arg(long, global = true, conflicts_with = "cube")]
    mesh: Option<PathBuf>,
    /// Kuhn-split unit cube with n subdivisions per axis (default 1).
    #[arg(long, global = true)]
    cube: Option<usize>,
    /// Constrained boundary faces, one vertex triple per line.
    #[arg(long, global = true, conflicts_with_all = ["gamma_all", "gamma_none"])]
    gamma: Option<PathBuf>,
    /// Constrain the whole boundary.
    #[arg(long, global = true, conflicts_with = "gamma_none")]
    gamma_all: bool,
    /// No constrained faces (the default).
    #[arg(long, global = true)]
    gamma_none: bool,
    /// Polynomial degree of the spaces; only 0 is available.
    #[arg(long, global = true, default_value_t = 0)]
    degree: usize,
    /// Polynomial degree of the stability probes.
    #[arg(long, global = true, default_value_t = 2)]
    probe_q: usize,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_coeff: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_quad: f64,
    /// Largest admitted level-to-level growth of bounded quantities.
    #[arg(long, global = true, default_value_t = 1.25)]
    plateau: f64,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write CSV tables into this directory.
    #[arg(long, global = true)]
    csv_dir: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every check suite and report.
    Verify,
    /// Poincaré constants on the extended star of every simplex.
    Poincare,
    /// Build the weights and print their text bundle.
    Weights {
        #[arg(long, value_enum, default_value_t = Mode::Plain)]
        mode: Mode,
        /// Write the bundle here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Project an analytic field and report the commutation residual.
    Project {
        #[arg(long, value_enum, default_value_t = FieldChoice::X1)]
        field: FieldChoice,
        #[arg(long, default_value_t = 0)]
        form_degree: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Plain,
    Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FieldChoice {
    /// `u(x) = x₁` (scalar) or `x₁ e₁` style linear fields.
    X1,
    /// A cubic polynomial field.
    Cubic,
}

#[derive(Debug)]
enum CliError {
    Core(localproj::Error),
    Csv(csv::Error),
    Io(std::io::Error),
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Csv(_) => "Csv",
            CliError::Io(_) => "Io",
            CliError::Usage(_) => "Usage",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Csv(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
        }
    }
}

impl From<localproj::Error> for CliError {
    fn from(e: localproj::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

struct Input {
    source: String,
    cube: Option<usize>,
    layers: MeshLayers,
    partition: GammaPartition,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            coeff: self.tol_coeff,
            quad: self.tol_quad,
            plateau: self.plateau,
            ..Tolerances::default()
        }
    }

    fn load(&self) -> CliResult<Input> {
        if self.degree != 0 {
            return Err(localproj::Error::NotSupported(format!("polynomial degree {}", self.degree)).into());
        }
        let (source, cube, mesh) = match (&self.mesh, self.cube) {
            (Some(path), _) => (path.display().to_string(), None, parse_mesh(&std::fs::read_to_string(path)?)?),
            (None, n) => {
                let n = n.unwrap_or(1);
                if n == 0 {
                    return Err(CliError::Usage("--cube needs at least one subdivision".into()));
                }
                (format!("cube {n}"), Some(n), gen_cube_mesh(n))
            }
        };
        let faces = if let Some(path) = &self.gamma {
            parse_gamma(&std::fs::read_to_string(path)?, &mesh)?
        } else if self.gamma_all {
            mesh.boundary_faces()
        } else {
            Vec::new()
        };
        let partition = classify_gamma(&mesh, &faces, GammaOptions::default())?;
        let layers = MeshLayers::new(mesh)?;
        Ok(Input {
            source,
            cube,
            layers,
            partition,
        })
    }

    fn csv_path(&self, name: &str) -> CliResult<Option<PathBuf>> {
        match &self.csv_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                Ok(Some(dir.join(name)))
            }
            None => Ok(None),
        }
    }
}

fn summary(input: &Input) -> MeshSummary {
    MeshSummary::new(input.source.clone(), &input.layers.base, input.partition.gamma_faces.len())
}

fn finish(opts: &Common, mut report: VerificationReport) -> CliResult<bool> {
    report.finish();
    report.print();
    if let Some(path) = &opts.json {
        report::write_json(path, &report)?;
    }
    Ok(report.pass)
}

fn weights_for(input: &Input) -> CliResult<WeightSet> {
    if input.partition.is_empty() {
        Ok(weight_set(&input.layers)?)
    } else {
        Ok(weight_set_gamma(&input.layers, &input.partition)?)
    }
}

/// Level maxima used by the refinement checks: scaled weight norms,
/// stability constants and Poincaré constants.
fn level_maxima(layers: &MeshLayers, q: usize) -> CliResult<[Vec<f64>; 3]> {
    let ws = weight_set(layers)?;
    let norms = (0..4).map(|l| ws.max_scaled_norm(l)).collect();
    let stab = verify::max_stability(layers, &ws, q)?.to_vec();
    let poinc = max_constants(&poincare_sweep(layers)?).iter().map(|m| m.2).collect();
    Ok([norms, stab, poinc])
}

fn cmd_verify(opts: &Common) -> CliResult<bool> {
    let tol = opts.tolerances();
    let input = opts.load()?;
    let layers = &input.layers;
    let mut report = VerificationReport::new("verify", summary(&input));

    report.phase("incidence", || -> CliResult<Vec<CheckRecord>> {
        let mut out = verify::incidence_checks(&layers.base);
        out.extend(verify::incidence_checks(&layers.alfeld.complex).into_iter().map(|mut r| {
            r.id += "[split]";
            r
        }));
        Ok(out)
    })?;
    report.phase("whitney", || Ok::<_, CliError>(verify::whitney_checks(&layers.base, &tol)?))?;
    report.phase("exactness", || Ok::<_, CliError>(vec![verify::exactness_audit(layers)?]))?;

    let t = Instant::now();
    let plain = weight_set(layers)?;
    report.timings.push(report::Timing {
        phase: "weight construction".into(),
        seconds: t.elapsed().as_secs_f64(),
    });
    if let Some(path) = opts.csv_path("weights.csv")? {
        report::write_weight_csv(&path, &plain)?;
    }
    report.phase("weights", || Ok::<_, CliError>(verify::weight_checks(layers, &plain, &tol)?))?;
    report.phase("projections", || Ok::<_, CliError>(verify::projection_checks(layers, &plain, &tol)?))?;
    report.phase("stability", || -> CliResult<Vec<CheckRecord>> {
        let per_degree = (0..4)
            .map(|l| stability_constants(&ProjectionOperator::new(layers, &plain, l)?, opts.probe_q))
            .collect::<localproj::Result<Vec<_>>>()?;
        if let Some(path) = opts.csv_path("stability.csv")? {
            report::write_stability_csv(&path, &per_degree)?;
        }
        let bad = per_degree.iter().flatten().filter(|r| !r.constant.is_finite()).count();
        Ok(vec![CheckRecord::new(
            "projections.stability_finite",
            "local stability constants are finite",
            bad as f64,
            0.0,
        )])
    })?;
    report.phase("gamma", || -> CliResult<Vec<CheckRecord>> {
        if input.partition.is_empty() {
            return Ok(vec![verify::empty_gamma_check(layers, &plain)?]);
        }
        let gamma = weight_set_gamma(layers, &input.partition)?;
        Ok(verify::gamma_checks(layers, &input.partition, &plain, &gamma, &tol)?)
    })?;
    report.phase("poincare", || -> CliResult<Vec<CheckRecord>> {
        let rows = poincare_sweep(layers)?;
        if let Some(path) = opts.csv_path("poincare.csv")? {
            report::write_poincare_csv(&path, &rows)?;
        }
        let mut out = verify::poincare_checks(&rows, &tol);
        out.push(verify::single_tet_oracle(&tol)?);
        Ok(out)
    })?;
    report.phase("piola", || Ok::<_, CliError>(verify::piola_checks(100, 2024, &tol)?))?;

    if let Some(n) = input.cube.filter(|&n| n >= 2) {
        report.phase("refinement", || -> CliResult<Vec<CheckRecord>> {
            let mut levels = Vec::new();
            for k in 1..n {
                levels.push(level_maxima(&MeshLayers::new(gen_cube_mesh(k))?, opts.probe_q)?);
            }
            levels.push(level_maxima(layers, opts.probe_q)?);
            let column = |i: usize| levels.iter().map(|m| m[i].clone()).collect::<Vec<_>>();
            let mut out = verify::plateau_checks(
                "weights.scaled_norm_plateau",
                "scaled weight norms stay bounded under refinement",
                &column(0),
                &tol,
            );
            out.extend(verify::plateau_checks(
                "projections.stability_plateau",
                "local stability constants stay bounded under refinement",
                &column(1),
                &tol,
            ));
            out.extend(verify::plateau_checks(
                "poincare.max_constant_plateau",
                "largest Poincaré constant stays bounded under refinement",
                &column(2),
                &tol,
            ));
            Ok(out)
        })?;
    }
    finish(opts, report)
}

fn cmd_poincare(opts: &Common) -> CliResult<bool> {
    let tol = opts.tolerances();
    let input = opts.load()?;
    let mut report = VerificationReport::new("poincare", summary(&input));
    let t = Instant::now();
    let rows = poincare_sweep(&input.layers)?;
    report.timings.push(report::Timing {
        phase: "poincare".into(),
        seconds: t.elapsed().as_secs_f64(),
    });
    if let Some(path) = opts.csv_path("poincare.csv")? {
        report::write_poincare_csv(&path, &rows)?;
    }
    for (seq, l, c) in max_constants(&rows) {
        println!("max constant {} l={l}: {c:.6}", seq.name());
    }
    report.records = verify::poincare_checks(&rows, &tol);
    finish(opts, report)
}

fn cmd_weights(opts: &Common, mode: Mode, output: Option<&Path>) -> CliResult<bool> {
    if mode == Mode::Plain && (opts.gamma.is_some() || opts.gamma_all) {
        return Err(CliError::Usage("constrained faces need --mode gamma".into()));
    }
    let input = opts.load()?;
    let ws = match mode {
        Mode::Plain => weight_set(&input.layers)?,
        Mode::Gamma => weight_set_gamma(&input.layers, &input.partition)?,
    };
    let bundle = ws.to_bundle();
    match output {
        Some(path) => std::fs::write(path, bundle)?,
        None => print!("{bundle}"),
    }
    if let Some(path) = opts.csv_path("weights.csv")? {
        report::write_weight_csv(&path, &ws)?;
    }
    if let Some(path) = &opts.json {
        let norms: Vec<f64> = (0..4).map(|l| ws.max_scaled_norm(l)).collect();
        report::write_json(
            path,
            &serde_json::json!({
                "schema_version": report::SCHEMA_VERSION,
                "tool_version": env!("CARGO_PKG_VERSION"),
                "command": "weights",
                "mesh": summary(&input),
                "max_scaled_norm": norms,
                "warnings": ws.warnings,
            }),
        )?;
    }
    Ok(true)
}

fn analytic(field: FieldChoice, l: usize) -> (PointField, PointField) {
    match field {
        FieldChoice::Cubic => {
            if l < 3 {
                verify::cubic_field(l)
            } else {
                (verify::cubic_field(2).1, PointField::scalar(3, 0, |_| 0.0))
            }
        }
        FieldChoice::X1 => match l {
            0 => (
                PointField::scalar(0, 1, |x| x.x),
                PointField::new(1, 0, |_| Point::new(1.0, 0.0, 0.0)),
            ),
            1 => (
                PointField::new(1, 1, |x| Point::new(0.0, x.x, 0.0)),
                PointField::new(2, 0, |_| Point::new(0.0, 0.0, 1.0)),
            ),
            2 => (
                PointField::new(2, 1, |x| Point::new(x.x, 0.0, 0.0)),
                PointField::scalar(3, 0, |_| 1.0),
            ),
            _ => (PointField::scalar(3, 1, |x| x.x), PointField::scalar(3, 0, |_| 0.0)),
        },
    }
}

fn cmd_project(opts: &Common, field: FieldChoice, l: usize) -> CliResult<bool> {
    if l > 3 {
        return Err(localproj::Error::DegreeMismatch { expected: 3, found: l }.into());
    }
    let tol = opts.tolerances();
    let input = opts.load()?;
    let ws = weights_for(&input)?;
    let op = ProjectionOperator::new(&input.layers, &ws, l)?;
    let (u, du) = analytic(field, l);
    let p = project(&op, &InputField::Callback(u.clone()))?;
    println!("projection form_degree {l} field {field:?}");
    for (id, c) in p.dofs.iter().zip(&p.coeffs) {
        println!("coeff {id} {c:?}");
    }
    if l == 3 {
        return Ok(true);
    }
    let next = ProjectionOperator::new(&input.layers, &ws, l + 1)?;
    let residual = commutation_residual(&op, &next, &InputField::Callback(u), &InputField::Callback(du))?;
    let pass = residual <= tol.quad;
    println!("commutation residual {residual:e} (tol {:e}) {}", tol.quad, if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn error_block(e: &CliError) -> serde_json::Value {
    serde_json::json!({ "error": { "kind": e.kind(), "message": e.message() } })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = &cli.opts;
    if let Some(jobs) = opts.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("{}", error_block(&CliError::Usage(e.to_string())));
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Verify => cmd_verify(opts),
        Command::Poincare => cmd_poincare(opts),
        Command::Weights { mode, output } => cmd_weights(opts, *mode, output.as_deref()),
        Command::Project { field, form_degree } => cmd_project(opts, *field, *form_degree),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let block = error_block(&e);
            eprintln!("{}", serde_json::to_string_pretty(&block).expect("json value"));
            if let Some(path) = &opts.json {
                let _ = report::write_json(path, &block);
            }
            ExitCode::from(2)
        }
    }
}
