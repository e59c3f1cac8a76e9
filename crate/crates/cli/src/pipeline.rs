//! The experiments as in-memory steps; the commands wrap these with I/O.

use num_complex::Complex64;
use wnrefl_core::admittance::{admittance_set, AdmittanceSet};
use wnrefl_core::bem::{source_column, BoundaryOperators, FieldEvaluator, NonlocalSolver, RigidSolver};
use wnrefl_core::estimation::{
    build_dataset, diagonal_energy_ratio, directivity_map, estimate_cr_lasso_with, estimate_cr_pinv, select_lambda,
    spectra_pair, DirectivityMap, LambdaScore, LassoSettings, PressureDataset, ReflectionMatrix,
};
use wnrefl_core::geometry::Mesh;
use wnrefl_core::numerics::{cosine_similarity, mse, spectral_norm};
use wnrefl_core::{ComplexMatrix, Error, Result, Vec3};

use crate::config::{Method, Reflector, RunConfig};

pub fn dataset(cfg: &RunConfig, reflector: Reflector) -> Result<PressureDataset> {
    let mesh = cfg.mesh_for(reflector)?;
    log::info!("dataset: {} reflector, {} elements, {} sources", reflector.name(), mesh.len(), cfg.sources.count);
    build_dataset(
        &mesh,
        &cfg.medium()?,
        &cfg.source_layout()?,
        &cfg.receiver_grid()?,
        Complex64::new(1.0, 0.0),
    )
}

#[derive(Clone, Debug)]
pub struct Estimate {
    pub matrix: ReflectionMatrix,
    pub method: Method,
    pub lambda: Option<f64>,
    /// Held-out scores when lambda was selected.
    pub lambda_scores: Vec<LambdaScore>,
    pub unconverged_rows: Vec<usize>,
    pub spectral_norm: f64,
    pub diagonal_ratio: f64,
}

pub fn estimate(cfg: &RunConfig, ds: &PressureDataset) -> Result<Estimate> {
    let grid = cfg.estimation_grid()?;
    let sp = spectra_pair(ds, &grid)?;
    let settings = LassoSettings {
        max_iter: cfg.estimator.max_iter,
        tol: cfg.estimator.tol,
    };
    let (matrix, lambda, lambda_scores, unconverged_rows) = match (cfg.estimator.method, cfg.estimator.lambda) {
        (Method::Pinv, _) => (estimate_cr_pinv(&sp)?, None, Vec::new(), Vec::new()),
        (Method::Lasso, Some(l)) => {
            let e = estimate_cr_lasso_with(&sp, l, settings)?;
            (e.matrix, Some(l), Vec::new(), e.unconverged_rows)
        }
        (Method::Lasso, None) => {
            let sweep = select_lambda(&sp, &cfg.estimator.lambda_fractions, cfg.estimator.lambda_rule.into(), settings)?;
            log::info!("lasso: selected lambda {:.4e}", sweep.best_lambda);
            (
                sweep.estimate.matrix,
                Some(sweep.best_lambda),
                sweep.scores,
                sweep.estimate.unconverged_rows,
            )
        }
    };
    let spectral_norm = spectral_norm(&matrix.cr)?;
    let diagonal_ratio = diagonal_energy_ratio(&matrix.cr, cfg.estimator.diagonal_band);
    Ok(Estimate {
        matrix,
        method: cfg.estimator.method,
        lambda,
        lambda_scores,
        unconverged_rows,
        spectral_norm,
        diagonal_ratio,
    })
}

/// One map per configured angle, incident from the mode nearest to
/// `(theta, phi = 0)`.
pub fn directivity(cfg: &RunConfig, cr: &ReflectionMatrix) -> Result<Vec<(f64, DirectivityMap)>> {
    let fine = cfg.fine_grid()?;
    cfg.directivity
        .angles_deg
        .iter()
        .map(|&deg| {
            let n = cr.grid.mode_for_angle(deg.to_radians())?;
            Ok((deg, directivity_map(cr, n, &fine, cfg.directivity.aperture)?))
        })
        .collect()
}

/// `Bhat` on the configured open surface.
pub fn admittance(cfg: &RunConfig, cr: &ReflectionMatrix) -> Result<(Mesh, AdmittanceSet)> {
    let surface = cfg.surface_mesh()?;
    let set = admittance_set(&cr.cr, &cr.grid, &cfg.medium()?, &surface)?;
    Ok((surface, set))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plane {
    /// Points `(0, s, z)`.
    X0,
    /// Points `(s, 0, z)`.
    Y0,
}

impl Plane {
    pub fn name(self) -> &'static str {
        match self {
            Plane::X0 => "x0",
            Plane::Y0 => "y0",
        }
    }
}

/// Pressures on a vertical section, row-major over `(z, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSection {
    pub plane: Plane,
    pub ns: usize,
    pub nz: usize,
    pub points: Vec<Vec3>,
    pub values: Vec<Complex64>,
}

pub fn section_points(cfg: &RunConfig, plane: Plane) -> (usize, usize, Vec<Vec3>) {
    let b = &cfg.bem;
    let ns = (2.0 * b.half_width / b.spacing).round() as usize + 1;
    let nz = ((b.z_max - b.z_min) / b.spacing).round() as usize + 1;
    let mut pts = Vec::with_capacity(ns * nz);
    for iz in 0..nz {
        let z = b.z_min + iz as f64 * b.spacing;
        for is in 0..ns {
            let s = -b.half_width + is as f64 * b.spacing;
            pts.push(match plane {
                Plane::X0 => [0.0, s, z],
                Plane::Y0 => [s, 0.0, z],
            });
        }
    }
    (ns, nz, pts)
}

/// How the boundary is modelled in a sound-field run.
pub enum BoundaryModel<'a> {
    /// Rigid closed reflector mesh.
    Conventional,
    /// Open surface with the nonlocal condition `v = Bhat p`.
    Proposed(&'a ComplexMatrix),
}

/// Total pressure on both sections for the monopole at `cfg.bem.source`.
pub fn sound_field(cfg: &RunConfig, mesh: &Mesh, model: BoundaryModel) -> Result<Vec<FieldSection>> {
    let medium = cfg.medium()?;
    let rs = cfg.bem.source;
    if rs[2] <= 0.0 {
        return Err(Error::InvalidInput(format!("bem source {rs:?} must lie above z = 0")));
    }
    let g_s = source_column(mesh, &medium, rs)?;
    let one = Complex64::new(1.0, 0.0);
    let sol = match model {
        BoundaryModel::Conventional => {
            let ops = BoundaryOperators::assemble(mesh, &medium, false)?;
            RigidSolver::new(&ops)?.solve(&g_s, one)
        }
        BoundaryModel::Proposed(bhat) => {
            let ops = BoundaryOperators::assemble(mesh, &medium, true)?;
            NonlocalSolver::new(&ops, bhat, &medium)?.solve(&g_s, one)
        }
    };
    [Plane::X0, Plane::Y0]
        .into_iter()
        .map(|plane| {
            let (ns, nz, points) = section_points(cfg, plane);
            let values = FieldEvaluator::new(mesh, &medium, &points)?.evaluate(&sol, rs, one)?;
            Ok(FieldSection {
                plane,
                ns,
                nz,
                points,
                values,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionMetrics {
    pub name: String,
    pub cosine_similarity: f64,
    pub mse: f64,
}

/// Per-section and pooled metrics of `b` against the reference `a`.
pub fn compare(a: &[FieldSection], b: &[FieldSection]) -> Result<Vec<SectionMetrics>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} sections against {}", a.len(), b.len())));
    }
    let mut out = Vec::with_capacity(a.len() + 1);
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    for (sa, sb) in a.iter().zip(b) {
        if sa.plane != sb.plane || sa.points != sb.points {
            return Err(Error::Dimension(format!(
                "section {} and {} are sampled differently",
                sa.plane.name(),
                sb.plane.name()
            )));
        }
        out.push(SectionMetrics {
            name: sa.plane.name().to_string(),
            cosine_similarity: cosine_similarity(&sa.values, &sb.values)?,
            mse: mse(&sa.values, &sb.values)?,
        });
        pa.extend_from_slice(&sa.values);
        pb.extend_from_slice(&sb.values);
    }
    out.push(SectionMetrics {
        name: "pooled".into(),
        cosine_similarity: cosine_similarity(&pa, &pb)?,
        mse: mse(&pa, &pb)?,
    });
    Ok(out)
}

/// `||Bhat||_2 rho c`: zero for a rigid boundary.
pub fn normalized_admittance_norm(bhat: &ComplexMatrix, cfg: &RunConfig) -> Result<f64> {
    Ok(spectral_norm(bhat)? * cfg.medium()?.impedance())
}
