//! One function per subcommand: run the pipeline step, write its artifacts.

use std::path::Path;

use serde::Serialize;
use wnrefl_core::estimation::{PressureDataset, ReflectionMatrix};
use wnrefl_core::geometry::Mesh;
use wnrefl_core::io::{decode_mesh, decode_wkbm, encode_grid_csv, encode_mesh, encode_pgm, encode_wkbm};
use wnrefl_core::wavespace::WavenumberGrid;
use wnrefl_core::{Complex64, ComplexMatrix, Error, Result};

use crate::artifacts::{ArtifactDir, InputDir, Manifest};
use crate::config::{Reflector, RunConfig};
use crate::pipeline::{self, BoundaryModel, FieldSection, Plane, SectionMetrics};

/// What `mesh` generates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MeshKind {
    Flat,
    Slit,
    Surface,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BemMode {
    Conventional,
    Proposed,
}

fn require_same<T: PartialEq + std::fmt::Debug>(what: &str, ours: &T, theirs: &T, dir: &Path) -> Result<()> {
    if ours != theirs {
        return Err(Error::InvalidInput(format!(
            "{what} differs from the one {} was built with: {ours:?} vs {theirs:?}",
            dir.display()
        )));
    }
    Ok(())
}

fn meta_str<'a>(input: &'a InputDir, key: &str) -> Result<&'a str> {
    input
        .meta(key)?
        .as_str()
        .ok_or_else(|| Error::Format(format!("metadata `{key}` in {} is not a string", input.dir.display())))
}

fn reflector_from(input: &InputDir) -> Result<Reflector> {
    match meta_str(input, "reflector")? {
        "flat" => Ok(Reflector::Flat),
        "slit" => Ok(Reflector::Slit),
        other => Err(Error::Format(format!("unknown reflector {other:?} in {}", input.dir.display()))),
    }
}

fn read_matrix(input: &mut Vec<(String, String)>, dir: &InputDir, name: &str) -> Result<ComplexMatrix> {
    let (bytes, sha) = dir.read(name)?;
    input.push((format!("{}/{name}", dir.manifest.command), sha));
    decode_wkbm(&bytes)
}

fn record_inputs(out: &mut ArtifactDir, inputs: Vec<(String, String)>) {
    for (k, v) in inputs {
        out.input(k, v);
    }
}

pub fn mesh(cfg: &RunConfig, kind: MeshKind, out: &Path) -> Result<Manifest> {
    let m = match kind {
        MeshKind::Flat => cfg.mesh_for(Reflector::Flat)?,
        MeshKind::Slit => cfg.mesh_for(Reflector::Slit)?,
        MeshKind::Surface => cfg.surface_mesh()?,
    };
    let mut dir = ArtifactDir::create(out, "mesh", cfg)?;
    dir.write("mesh.txt", encode_mesh(&m).as_bytes())?;
    dir.meta("kind", format!("{kind:?}").to_lowercase());
    dir.meta("elements", m.len());
    dir.meta("closed", m.closed);
    dir.meta("total_area", m.total_area());
    dir.meta("mean_edge", m.mean_edge());
    dir.finish()
}

pub fn dataset(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let reflector = cfg.geometry.reflector;
    let ds = pipeline::dataset(cfg, reflector)?;
    let mut dir = ArtifactDir::create(out, "dataset", cfg)?;
    dir.write("incident.wkbm", &encode_wkbm(&ds.incident)?)?;
    dir.write("reflected.wkbm", &encode_wkbm(&ds.reflected)?)?;
    dir.meta("reflector", reflector.name());
    dir.meta("elements", cfg.mesh_for(reflector)?.len());
    dir.meta("sources", ds.sources());
    dir.meta("receivers", ds.receivers.len());
    dir.meta("k", ds.medium.k());
    dir.finish()
}

fn load_dataset(cfg: &RunConfig, input: &InputDir, inputs: &mut Vec<(String, String)>) -> Result<PressureDataset> {
    let theirs = &input.manifest.config;
    require_same("medium", &cfg.medium, &theirs.medium, &input.dir)?;
    require_same("receiver grid", &cfg.receivers, &theirs.receivers, &input.dir)?;
    require_same("source layout", &cfg.sources, &theirs.sources, &input.dir)?;
    let incident = read_matrix(inputs, input, "incident.wkbm")?;
    let reflected = read_matrix(inputs, input, "reflected.wkbm")?;
    PressureDataset::from_parts(incident, reflected, cfg.receiver_grid()?, cfg.medium()?)
}

#[derive(Serialize)]
struct ScoreRow {
    lambda: f64,
    mean: f64,
    std_err: f64,
}

#[derive(Serialize)]
struct EstimateReport {
    reflector: String,
    method: String,
    modes: usize,
    sources: usize,
    lambda: Option<f64>,
    lambda_scores: Vec<ScoreRow>,
    unconverged_rows: Vec<usize>,
    spectral_norm: f64,
    diagonal_band: usize,
    diagonal_energy_ratio: f64,
}

fn to_json(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

pub fn estimate(cfg: &RunConfig, dataset_dir: &Path, out: &Path) -> Result<Manifest> {
    let input = InputDir::open(dataset_dir, "dataset")?;
    let mut inputs = Vec::new();
    let ds = load_dataset(cfg, &input, &mut inputs)?;
    let reflector = reflector_from(&input)?;
    let est = pipeline::estimate(cfg, &ds)?;
    let cr = &est.matrix.cr;
    let m = cr.rows();
    let report = EstimateReport {
        reflector: reflector.name().into(),
        method: format!("{:?}", est.method).to_lowercase(),
        modes: m,
        sources: ds.sources(),
        lambda: est.lambda,
        lambda_scores: est
            .lambda_scores
            .iter()
            .map(|s| ScoreRow {
                lambda: s.lambda,
                mean: s.mean,
                std_err: s.std_err,
            })
            .collect(),
        unconverged_rows: est.unconverged_rows.clone(),
        spectral_norm: est.spectral_norm,
        diagonal_band: cfg.estimator.diagonal_band,
        diagonal_energy_ratio: est.diagonal_ratio,
    };
    let mut dir = ArtifactDir::create(out, "estimate", cfg)?;
    record_inputs(&mut dir, inputs);
    dir.write("cr.wkbm", &encode_wkbm(cr)?)?;
    let modulus: Vec<f64> = cr.data().iter().map(|z| z.norm()).collect();
    dir.write("cr.pgm", &encode_pgm(m, m, &modulus)?)?;
    dir.write("grid.csv", encode_grid_csv(&est.matrix.grid).as_bytes())?;
    dir.write("estimate.json", &to_json(&report))?;
    dir.meta("reflector", reflector.name());
    dir.meta("diagonal_energy_ratio", est.diagonal_ratio);
    dir.meta("spectral_norm", est.spectral_norm);
    dir.finish()
}

fn load_estimate(
    cfg: &RunConfig,
    input: &InputDir,
    inputs: &mut Vec<(String, String)>,
) -> Result<ReflectionMatrix> {
    let theirs = &input.manifest.config;
    require_same("medium", &cfg.medium, &theirs.medium, &input.dir)?;
    require_same("estimation grid size", &cfg.grid.modes, &theirs.grid.modes, &input.dir)?;
    let cr = read_matrix(inputs, input, "cr.wkbm")?;
    ReflectionMatrix::new(cr, cfg.estimation_grid()?)
}

/// `|values|` rasterized over the `kx, ky` square, nearest fine mode per
/// pixel, zero outside the propagating disk. Row 0 is the largest `ky`.
fn wavenumber_image(grid: &WavenumberGrid, values: &[Complex64], size: usize) -> Vec<f64> {
    let k = grid.k;
    let mut img = vec![0.0; size * size];
    for row in 0..size {
        let ky = k - 2.0 * k * (row as f64 + 0.5) / size as f64;
        for col in 0..size {
            let kx = -k + 2.0 * k * (col as f64 + 0.5) / size as f64;
            if kx * kx + ky * ky <= k * k {
                img[row * size + col] = values[grid.nearest_mode(kx, ky)].norm();
            }
        }
    }
    img
}

#[derive(Serialize)]
struct MapReport {
    angle_deg: f64,
    incident_mode: usize,
    specular_mode: usize,
    peak_fine: usize,
    peak_coarse: usize,
    peak_is_specular: bool,
    off_specular_fraction: f64,
}

/// Writes nothing when no angles are configured.
pub fn directivity(cfg: &RunConfig, estimate_dir: &Path, out: &Path) -> Result<Option<Manifest>> {
    if cfg.directivity.angles_deg.is_empty() {
        return Ok(None);
    }
    let input = InputDir::open(estimate_dir, "estimate")?;
    let mut inputs = Vec::new();
    let cr = load_estimate(cfg, &input, &mut inputs)?;
    let maps = pipeline::directivity(cfg, &cr)?;
    let mut dir = ArtifactDir::create(out, "directivity", cfg)?;
    record_inputs(&mut dir, inputs);
    let mut reports = Vec::with_capacity(maps.len());
    for (deg, map) in &maps {
        let stem = format!("map_{deg}");
        dir.write(&format!("{stem}.wkbm"), &encode_wkbm(&ComplexMatrix::column_vector(&map.values))?)?;
        let size = cfg.directivity.image_size;
        dir.write(&format!("{stem}.pgm"), &encode_pgm(size, size, &wavenumber_image(&map.fine_grid, &map.values, size))?)?;
        reports.push(MapReport {
            angle_deg: *deg,
            incident_mode: map.incident_mode,
            specular_mode: map.specular_mode,
            peak_fine: map.peak_fine,
            peak_coarse: map.peak_coarse,
            peak_is_specular: map.peak_coarse == map.specular_mode,
            off_specular_fraction: map.off_specular_fraction(),
        });
    }
    dir.write("fine_grid.csv", encode_grid_csv(&maps[0].1.fine_grid).as_bytes())?;
    dir.write("directivity.json", &to_json(&reports))?;
    dir.meta("reflector", meta_str(&input, "reflector")?);
    Ok(Some(dir.finish()?))
}

#[derive(Serialize)]
struct AdmittanceReport {
    surface_elements: usize,
    modes: usize,
    gram_side: String,
    clamped_eigenvalues: usize,
    whitening_defect: f64,
    bhat_norm_times_rho_c: f64,
}

pub fn admittance(cfg: &RunConfig, estimate_dir: &Path, out: &Path) -> Result<Manifest> {
    let input = InputDir::open(estimate_dir, "estimate")?;
    let mut inputs = Vec::new();
    let cr = load_estimate(cfg, &input, &mut inputs)?;
    let (surface, set) = pipeline::admittance(cfg, &cr)?;
    let surface_text = encode_mesh(&surface);
    let grid_csv = encode_grid_csv(&cr.grid);
    let report = AdmittanceReport {
        surface_elements: surface.len(),
        modes: cr.grid.len(),
        gram_side: format!("{:?}", set.basis.side).to_lowercase(),
        clamped_eigenvalues: set.basis.clamped,
        whitening_defect: set.basis.whitening_defect(),
        bhat_norm_times_rho_c: pipeline::normalized_admittance_norm(&set.bhat, cfg)?,
    };
    let mut dir = ArtifactDir::create(out, "admittance", cfg)?;
    record_inputs(&mut dir, inputs);
    dir.write("b.wkbm", &encode_wkbm(&set.b)?)?;
    dir.write("bhat.wkbm", &encode_wkbm(&set.bhat)?)?;
    dir.write("surface.txt", surface_text.as_bytes())?;
    dir.write("grid.csv", grid_csv.as_bytes())?;
    dir.write("admittance.json", &to_json(&report))?;
    dir.meta("reflector", meta_str(&input, "reflector")?);
    dir.meta("frequency", cfg.medium.f);
    dir.meta("surface_sha256", crate::artifacts::sha256_hex(surface_text.as_bytes()));
    dir.meta("grid_sha256", crate::artifacts::sha256_hex(grid_csv.as_bytes()));
    dir.finish()
}

fn section_csv(s: &FieldSection) -> String {
    let mut out = String::from("x,y,z,re,im\n");
    for (p, v) in s.points.iter().zip(&s.values) {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", p[0], p[1], p[2], v.re, v.im));
    }
    out
}

/// `|p|` with the top row at the largest `z`.
fn section_image(s: &FieldSection) -> Vec<f64> {
    (0..s.nz)
        .rev()
        .flat_map(|iz| (0..s.ns).map(move |is| s.values[iz * s.ns + is].norm()))
        .collect()
}

pub fn bem(cfg: &RunConfig, mode: BemMode, admittance_dir: Option<&Path>, out: &Path) -> Result<Manifest> {
    let mut inputs = Vec::new();
    let (mesh, sections, reflector): (Mesh, _, _) = match mode {
        BemMode::Conventional => {
            if admittance_dir.is_some() {
                return Err(Error::InvalidInput("conventional BEM takes no admittance bundle".into()));
            }
            let reflector = cfg.geometry.reflector;
            let mesh = cfg.mesh_for(reflector)?;
            let sections = pipeline::sound_field(cfg, &mesh, BoundaryModel::Conventional)?;
            (mesh, sections, reflector)
        }
        BemMode::Proposed => {
            let adir = admittance_dir
                .ok_or_else(|| Error::InvalidInput("proposed BEM needs --admittance <dir>".into()))?;
            let input = InputDir::open(adir, "admittance")?;
            require_same("medium", &cfg.medium, &input.manifest.config.medium, &input.dir)?;
            let mesh = cfg.surface_mesh()?;
            let (surface_bytes, surface_sha) = input.read("surface.txt")?;
            inputs.push(("admittance/surface.txt".to_string(), surface_sha.clone()));
            if crate::artifacts::sha256_hex(encode_mesh(&mesh).as_bytes()) != surface_sha
                || meta_str(&input, "surface_sha256")? != surface_sha
            {
                return Err(Error::Geometry(format!(
                    "surface mesh of this config does not match the admittance bundle in {}",
                    input.dir.display()
                )));
            }
            let stored = decode_mesh(&String::from_utf8_lossy(&surface_bytes))?;
            let bhat = read_matrix(&mut inputs, &input, "bhat.wkbm")?;
            let sections = pipeline::sound_field(cfg, &stored, BoundaryModel::Proposed(&bhat))?;
            (stored, sections, reflector_from(&input)?)
        }
    };
    let mut dir = ArtifactDir::create(out, "bem", cfg)?;
    record_inputs(&mut dir, inputs);
    for s in &sections {
        let stem = format!("section_{}", s.plane.name());
        let m = ComplexMatrix::from_vec(s.nz, s.ns, s.values.clone())?;
        dir.write(&format!("{stem}.wkbm"), &encode_wkbm(&m)?)?;
        dir.write(&format!("{stem}.csv"), section_csv(s).as_bytes())?;
        dir.write(&format!("{stem}.pgm"), &encode_pgm(s.ns, s.nz, &section_image(s))?)?;
    }
    dir.meta("mode", format!("{mode:?}").to_lowercase());
    dir.meta("reflector", reflector.name());
    dir.meta("elements", mesh.len());
    dir.finish()
}

fn load_sections(input: &InputDir) -> Result<(Vec<FieldSection>, String)> {
    let cfg = &input.manifest.config;
    let mut sections = Vec::new();
    let mut hashes = Vec::new();
    for plane in [Plane::X0, Plane::Y0] {
        let name = format!("section_{}.wkbm", plane.name());
        let (bytes, sha) = input.read(&name)?;
        hashes.push(sha);
        let m = decode_wkbm(&bytes)?;
        let (ns, nz, points) = pipeline::section_points(cfg, plane);
        if m.shape() != (nz, ns) {
            return Err(Error::Dimension(format!(
                "{} is {}x{}, config implies {nz}x{ns}",
                input.dir.join(&name).display(),
                m.rows(),
                m.cols()
            )));
        }
        sections.push(FieldSection {
            plane,
            ns,
            nz,
            points,
            values: m.into_data(),
        });
    }
    Ok((sections, hashes.join(",")))
}

#[derive(Serialize)]
pub struct CompareReport {
    /// Hashes of the reference and candidate sections.
    pub reference: String,
    pub candidate: String,
    pub sections: Vec<MetricRow>,
}

#[derive(Serialize)]
pub struct MetricRow {
    pub section: String,
    pub cosine_similarity: f64,
    pub mse: f64,
}

/// Metrics of `candidate` against `reference`; written to `out` if given.
pub fn compare(reference: &Path, candidate: &Path, out: Option<&Path>) -> Result<(Vec<SectionMetrics>, Option<Manifest>)> {
    let a = InputDir::open(reference, "bem")?;
    let b = InputDir::open(candidate, "bem")?;
    require_same("section layout", &a.manifest.config.bem, &b.manifest.config.bem, &b.dir)?;
    let (sa, ha) = load_sections(&a)?;
    let (sb, hb) = load_sections(&b)?;
    let metrics = pipeline::compare(&sa, &sb)?;
    let Some(out) = out else {
        return Ok((metrics, None));
    };
    let report = CompareReport {
        reference: ha.clone(),
        candidate: hb.clone(),
        sections: metrics
            .iter()
            .map(|m| MetricRow {
                section: m.name.clone(),
                cosine_similarity: m.cosine_similarity,
                mse: m.mse,
            })
            .collect(),
    };
    let mut dir = ArtifactDir::create(out, "compare", &a.manifest.config)?;
    dir.input("reference".into(), ha);
    dir.input("candidate".into(), hb);
    dir.write("compare.json", &to_json(&report))?;
    Ok((metrics, Some(dir.finish()?)))
}
