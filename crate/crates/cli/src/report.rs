use std::path::Path;
use std::time::Instant;

use localproj::meshkit::SimplicialComplex;
use localproj::poincare::PoincareResult;
use localproj::projections::StabilityReport;
use localproj::verify::CheckRecord;
use localproj::weights::WeightSet;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct MeshSummary {
    pub source: String,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub cells: usize,
    /// Largest ratio of cell diameter to inscribed-ball diameter.
    pub shape_regularity: f64,
    pub gamma_faces: usize,
}

impl MeshSummary {
    pub fn new(source: String, mesh: &SimplicialComplex, gamma_faces: usize) -> Self {
        MeshSummary {
            source,
            vertices: mesh.num_vertices(),
            edges: mesh.num_edges(),
            faces: mesh.num_faces(),
            cells: mesh.num_cells(),
            shape_regularity: mesh.shape_regularity(),
            gamma_faces,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub mesh: MeshSummary,
    pub records: Vec<CheckRecord>,
    pub timings: Vec<Timing>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(command: &str, mesh: MeshSummary) -> Self {
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            mesh,
            records: Vec::new(),
            timings: Vec::new(),
            pass: true,
        }
    }

    /// Runs one phase, timing it and appending its records.
    pub fn phase<E>(&mut self, name: &str, f: impl FnOnce() -> Result<Vec<CheckRecord>, E>) -> Result<(), E> {
        let t = Instant::now();
        let records = f()?;
        self.timings.push(Timing {
            phase: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        self.records.extend(records);
        Ok(())
    }

    pub fn finish(&mut self) {
        self.pass = localproj::verify::all_pass(&self.records);
    }

    pub fn print(&self) {
        for r in &self.records {
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            println!("{verdict} {:<48} {:>12.4e} (tol {:e})  {}", r.id, r.max_residual, r.tolerance, r.property);
        }
        let failed = self.records.iter().filter(|r| !r.pass).count();
        println!("{} checks, {} failed", self.records.len(), failed);
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")
}

#[derive(Serialize)]
struct PoincareRow<'a> {
    sigma_dim: Option<usize>,
    sigma_id: Option<usize>,
    sequence: &'a str,
    form_degree: usize,
    h: f64,
    lambda_min: f64,
    constant: f64,
    h_patch: f64,
    constant_patch: f64,
    residual: f64,
    space_dim: usize,
    kernel_dim: usize,
}

pub fn write_poincare_csv(path: &Path, rows: &[PoincareResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(PoincareRow {
            sigma_dim: r.sigma.map(|s| s.0),
            sigma_id: r.sigma.map(|s| s.1),
            sequence: r.sequence.name(),
            form_degree: r.form_degree,
            h: r.h,
            lambda_min: r.lambda_min,
            constant: r.constant,
            h_patch: r.h_patch,
            constant_patch: r.constant_patch,
            residual: r.residual,
            space_dim: r.space_dim,
            kernel_dim: r.kernel_dim,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StabilityRow {
    form_degree: usize,
    cell: usize,
    probe_degree: usize,
    probe_dim: usize,
    constant: f64,
}

pub fn write_stability_csv(path: &Path, per_degree: &[Vec<StabilityReport>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (l, reports) in per_degree.iter().enumerate() {
        for r in reports {
            w.serialize(StabilityRow {
                form_degree: l,
                cell: r.cell,
                probe_degree: r.probe_degree,
                probe_dim: r.probe_dim,
                constant: r.constant,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct WeightRow {
    dim: usize,
    id: usize,
    class: String,
    h: f64,
    l2_norm: f64,
    scaled_norm: f64,
    nonzeros: usize,
}

pub fn write_weight_csv(path: &Path, ws: &WeightSet) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for level in &ws.levels {
        for z in level {
            w.serialize(WeightRow {
                dim: z.dim,
                id: z.id,
                class: format!("{:?}", z.class),
                h: z.h,
                l2_norm: z.l2_norm,
                scaled_norm: z.scaled_norm(),
                nonzeros: z.field.coeffs.iter().filter(|&&c| c != 0.0).count(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
