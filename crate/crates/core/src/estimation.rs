//! Simulated incident/reflected datasets and reflection-matrix estimation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bem::{source_column, BoundaryOperators, FieldEvaluator, Medium, RigidSolver};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, ReceiverGrid, SourceLayout};
use crate::numerics::{norm2, pinv_with_rank, spectral_norm, ComplexMatrix, LassoGram, DEFAULT_PINV_RTOL};
use crate::wavespace::{analysis_matrix, argmax_modulus, Direction, WavenumberGrid, Window};

/// Receiver pressures, one column per source.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureDataset {
    pub incident: ComplexMatrix,
    pub reflected: ComplexMatrix,
    /// `incident + reflected`, formed entrywise.
    pub total: ComplexMatrix,
    pub receivers: ReceiverGrid,
    pub medium: Medium,
}

impl PressureDataset {
    /// Builds the total from incident and reflected parts.
    pub fn from_parts(
        incident: ComplexMatrix,
        reflected: ComplexMatrix,
        receivers: ReceiverGrid,
        medium: Medium,
    ) -> Result<Self> {
        if incident.shape() != reflected.shape() || incident.rows() != receivers.len() || incident.cols() == 0 {
            return Err(Error::Dimension(format!(
                "dataset parts {:?} / {:?} for {} receivers",
                incident.shape(),
                reflected.shape(),
                receivers.len()
            )));
        }
        let total = &incident + &reflected;
        Ok(Self {
            incident,
            reflected,
            total,
            receivers,
            medium,
        })
    }

    pub fn sources(&self) -> usize {
        self.incident.cols()
    }

    /// Columns `idx` only.
    pub fn select_sources(&self, idx: &[usize]) -> Result<Self> {
        let pick = |m: &ComplexMatrix| ComplexMatrix::from_fn(m.rows(), idx.len(), |i, j| m[(i, idx[j])]);
        Self::from_parts(pick(&self.incident), pick(&self.reflected), self.receivers.clone(), self.medium)
    }
}

/// Rigid-body BEM for every source; the reflected part is the field radiated
/// by the boundary, the incident part the free field.
pub fn build_dataset(
    mesh: &Mesh,
    medium: &Medium,
    sources: &SourceLayout,
    receivers: &ReceiverGrid,
    amplitude: Complex64,
) -> Result<PressureDataset> {
    sources.validate()?;
    if sources.is_empty() {
        return Err(Error::InvalidInput("dataset needs at least one source".into()));
    }
    let ops = BoundaryOperators::assemble(mesh, medium, false)?;
    let solver = RigidSolver::new(&ops)?;
    let eval = FieldEvaluator::new(mesh, medium, &receivers.positions)?;
    let k = medium.k();
    let n_r = receivers.len();
    let mut incident = ComplexMatrix::zeros(n_r, sources.len());
    let mut reflected = ComplexMatrix::zeros(n_r, sources.len());
    for (q, &rs) in sources.positions.iter().enumerate() {
        let run = || -> Result<(Vec<Complex64>, Vec<Complex64>)> {
            let g_s = source_column(mesh, medium, rs)?;
            let sol = solver.solve(&g_s, amplitude);
            let refl = eval.boundary_contribution(&sol)?;
            let inc = receivers
                .positions
                .iter()
                .map(|&p| crate::bem::greens(p, rs, k).map(|g| g * amplitude))
                .collect::<Result<Vec<_>>>()?;
            Ok((inc, refl))
        };
        let (inc, refl) = run().map_err(|e| e.at_source(q))?;
        incident.set_column(q, &inc);
        reflected.set_column(q, &refl);
        log::debug!("dataset: source {q} done");
    }
    PressureDataset::from_parts(incident, reflected, receivers.clone(), *medium)
}

/// Stacked spectra, one column per source.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectraPair {
    pub p_i: ComplexMatrix,
    pub p_r: ComplexMatrix,
    pub grid: WavenumberGrid,
}

impl SpectraPair {
    pub fn new(p_i: ComplexMatrix, p_r: ComplexMatrix, grid: WavenumberGrid) -> Result<Self> {
        if p_i.shape() != p_r.shape() || p_i.rows() != grid.len() || p_i.cols() == 0 {
            return Err(Error::Dimension(format!(
                "spectra {:?} / {:?} for {} modes",
                p_i.shape(),
                p_r.shape(),
                grid.len()
            )));
        }
        Ok(Self { p_i, p_r, grid })
    }

    fn select(&self, idx: &[usize]) -> Self {
        let pick = |m: &ComplexMatrix| ComplexMatrix::from_fn(m.rows(), idx.len(), |i, j| m[(i, idx[j])]);
        Self {
            p_i: pick(&self.p_i),
            p_r: pick(&self.p_r),
            grid: self.grid.clone(),
        }
    }
}

pub fn spectra_pair(ds: &PressureDataset, grid: &WavenumberGrid) -> Result<SpectraPair> {
    spectra_pair_windowed(ds, grid, Window::Rectangular)
}

pub fn spectra_pair_windowed(ds: &PressureDataset, grid: &WavenumberGrid, window: Window) -> Result<SpectraPair> {
    let k = ds.medium.k();
    if (grid.k - k).abs() > 1e-12 * k {
        return Err(Error::InvalidInput(format!(
            "grid wavenumber {} differs from dataset wavenumber {k}",
            grid.k
        )));
    }
    let ai = analysis_matrix(&ds.receivers, grid, Direction::Incident, window)?;
    let ar = analysis_matrix(&ds.receivers, grid, Direction::Reflected, window)?;
    SpectraPair::new(ai.matmul(&ds.incident), ar.matmul(&ds.reflected), grid.clone())
}

/// `[Cr]_mn = C_r(k_m, k_n) w_n`: maps incident to reflected mode amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionMatrix {
    pub cr: ComplexMatrix,
    pub grid: WavenumberGrid,
}

impl ReflectionMatrix {
    pub fn new(cr: ComplexMatrix, grid: WavenumberGrid) -> Result<Self> {
        if cr.shape() != (grid.len(), grid.len()) {
            return Err(Error::Dimension(format!(
                "reflection matrix {:?} for {} modes",
                cr.shape(),
                grid.len()
            )));
        }
        cr.ensure_finite("reflection matrix")?;
        Ok(Self { cr, grid })
    }

    pub fn identity(grid: &WavenumberGrid) -> Self {
        Self {
            cr: ComplexMatrix::identity(grid.len()),
            grid: grid.clone(),
        }
    }

    /// Spectral norm; warns above `1 + tol`.
    pub fn passivity(&self, tol: f64) -> Result<f64> {
        let s = spectral_norm(&self.cr)?;
        if s > 1.0 + tol {
            log::warn!("estimated reflection matrix has spectral norm {s:.4} > 1 + {tol}");
        }
        Ok(s)
    }
}

pub const PASSIVITY_TOL: f64 = 0.1;

/// `Cr = P_r pinv(P_i)`.
pub fn estimate_cr_pinv(sp: &SpectraPair) -> Result<ReflectionMatrix> {
    let (pi_inv, rank) = pinv_with_rank(&sp.p_i, DEFAULT_PINV_RTOL)?;
    if rank == 0 {
        return Err(Error::RankCollapse(
            "every singular value of the incident spectra was truncated".into(),
        ));
    }
    log::debug!("pinv estimate: incident spectra rank {rank} of {}", sp.p_i.rows().min(sp.p_i.cols()));
    let est = ReflectionMatrix::new(sp.p_r.matmul(&pi_inv), sp.grid.clone())?;
    est.passivity(PASSIVITY_TOL)?;
    Ok(est)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LassoSettings {
    pub max_iter: usize,
    /// Relative to `||b|| / rms column norm`, the natural scale of `x`.
    pub tol: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LassoEstimate {
    pub matrix: ReflectionMatrix,
    pub lambda: f64,
    pub unconverged_rows: Vec<usize>,
    /// Per-row objective values.
    pub objectives: Vec<f64>,
}

/// The regression behind one row of `Cr`: `A = P_i^T`, `b = (row m of P_r)^T`.
struct RowProblem {
    a: ComplexMatrix,
    gram: LassoGram,
    /// RMS column norm of `A`; converts `tol` to the scale of `x`.
    col_rms: f64,
}

impl RowProblem {
    fn new(sp: &SpectraPair) -> Result<Self> {
        let a = sp.p_i.transpose();
        let gram = LassoGram::new(&a)?;
        let diag = gram.gram().diagonal();
        let col_rms = (diag.iter().map(|z| z.re).sum::<f64>() / diag.len() as f64).sqrt();
        Ok(Self { a, gram, col_rms })
    }

    fn solve_rows(
        &self,
        p_r: &ComplexMatrix,
        lambda: f64,
        settings: LassoSettings,
        warm: Option<&ComplexMatrix>,
    ) -> Result<(ComplexMatrix, Vec<usize>, Vec<f64>)> {
        let m = self.gram.dim();
        let rows: Vec<_> = (0..p_r.rows())
            .into_par_iter()
            .map(|r| {
                let b = p_r.row(r);
                let c = self.gram.correlate(&self.a, b);
                let bb = norm2(b).powi(2);
                let scale = (norm2(b) / self.col_rms).max(f64::MIN_POSITIVE);
                self.gram
                    .solve(&c, bb, lambda, settings.max_iter, settings.tol * scale, warm.map(|w| w.row(r)))
            })
            .collect();
        let mut cr = ComplexMatrix::zeros(p_r.rows(), m);
        let mut unconverged = Vec::new();
        let mut objectives = Vec::with_capacity(p_r.rows());
        for (r, res) in rows.into_iter().enumerate() {
            let res = res?;
            cr.row_mut(r).copy_from_slice(&res.x);
            if !res.converged {
                unconverged.push(r);
            }
            objectives.push(res.objective);
        }
        Ok((cr, unconverged, objectives))
    }

    /// Smallest lambda with an all-zero solution, over all rows:
    /// `2 max_{m,j} |a_j^H b_m|`.
    fn lambda_max(&self, p_r: &ComplexMatrix) -> f64 {
        (0..p_r.rows())
            .map(|r| {
                self.gram
                    .correlate(&self.a, p_r.row(r))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
            * 2.0
    }
}

/// Row-wise complex LASSO with absolute penalty `lambda`.
pub fn estimate_cr_lasso(sp: &SpectraPair, lambda: f64) -> Result<ReflectionMatrix> {
    estimate_cr_lasso_with(sp, lambda, LassoSettings::default()).map(|e| e.matrix)
}

pub fn estimate_cr_lasso_with(sp: &SpectraPair, lambda: f64, settings: LassoSettings) -> Result<LassoEstimate> {
    let problem = RowProblem::new(sp)?;
    let (cr, unconverged_rows, objectives) = problem.solve_rows(&sp.p_r, lambda, settings, None)?;
    if !unconverged_rows.is_empty() {
        log::warn!(
            "lasso: {} of {} rows hit max_iter = {}",
            unconverged_rows.len(),
            sp.p_r.rows(),
            settings.max_iter
        );
    }
    let matrix = ReflectionMatrix::new(cr, sp.grid.clone())?;
    matrix.passivity(PASSIVITY_TOL)?;
    Ok(LassoEstimate {
        matrix,
        lambda,
        unconverged_rows,
        objectives,
    })
}

/// `2 max |A^H b|` over rows: the penalty above which every row is zero.
pub fn lasso_lambda_max(sp: &SpectraPair) -> Result<f64> {
    let problem = RowProblem::new(sp)?;
    Ok(problem.lambda_max(&sp.p_r))
}

/// How the held-out scores pick lambda.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LambdaRule {
    /// Smallest mean held-out residual.
    MinResidual,
    /// Largest lambda whose mean held-out residual is within one standard
    /// error of the smallest.
    #[default]
    OneStandardError,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaScore {
    pub lambda: f64,
    /// Mean over held-out sources of `||Cr p_i - p_r|| / ||p_r||`.
    pub mean: f64,
    /// Standard error of that mean.
    pub std_err: f64,
}

#[derive(Clone, Debug)]
pub struct LambdaSweep {
    /// Descending lambda.
    pub scores: Vec<LambdaScore>,
    pub best_lambda: f64,
    pub estimate: LassoEstimate,
}

/// Log-spaced fractions of `lambda_max` between `lo` and `hi`.
pub fn default_lambda_fractions(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    (0..count)
        .map(|i| (hi.ln() + (lo.ln() - hi.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn held_out_score(lambda: f64, cr: &ComplexMatrix, held: &SpectraPair) -> LambdaScore {
    let pred = cr.matmul(&held.p_i);
    let per: Vec<f64> = (0..pred.cols())
        .map(|q| {
            let (p, r) = (pred.column(q), held.p_r.column(q));
            let den = norm2(&r);
            let num = p.iter().zip(&r).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            if den > 0.0 {
                num / den
            } else {
                num
            }
        })
        .collect();
    let n = per.len() as f64;
    let mean = per.iter().sum::<f64>() / n;
    let var = if per.len() > 1 {
        per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    LambdaScore {
        lambda,
        mean,
        std_err: (var / n).sqrt(),
    }
}

/// Picks lambda by held-out fit: every fifth source is held out, the rest
/// trains each candidate (warm-started along the path), `rule` picks from
/// the held-out residuals, and the chosen lambda is refit on all sources.
pub fn select_lambda(
    sp: &SpectraPair,
    fractions: &[f64],
    rule: LambdaRule,
    settings: LassoSettings,
) -> Result<LambdaSweep> {
    let q = sp.p_i.cols();
    if q < 5 {
        return Err(Error::InvalidInput(format!("lambda selection needs at least 5 sources, got {q}")));
    }
    if fractions.is_empty() {
        return Err(Error::InvalidInput("empty lambda candidate list".into()));
    }
    let held: Vec<usize> = (0..q).filter(|i| i % 5 == 4).collect();
    let train: Vec<usize> = (0..q).filter(|i| i % 5 != 4).collect();
    let (sp_train, sp_held) = (sp.select(&train), sp.select(&held));
    let problem = RowProblem::new(&sp_train)?;
    let lambda_max = problem.lambda_max(&sp_train.p_r);

    let mut lambdas: Vec<f64> = fractions.iter().map(|f| f * lambda_max).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let mut warm: Option<ComplexMatrix> = None;
    let mut scores = Vec::with_capacity(lambdas.len());
    for &lam in &lambdas {
        let (cr, _, _) = problem.solve_rows(&sp_train.p_r, lam, settings, warm.as_ref())?;
        let score = held_out_score(lam, &cr, &sp_held);
        log::debug!("lambda {lam:.4e}: held-out residual {:.4e} +- {:.1e}", score.mean, score.std_err);
        scores.push(score);
        warm = Some(cr);
    }
    let best = scores
        .iter()
        .min_by(|a, b| a.mean.total_cmp(&b.mean))
        .copied()
        .expect("at least one candidate");
    let best_lambda = match rule {
        LambdaRule::MinResidual => best.lambda,
        // scores are in descending lambda, so the first admissible is largest
        LambdaRule::OneStandardError => scores
            .iter()
            .find(|s| s.mean <= best.mean + best.std_err)
            .map_or(best.lambda, |s| s.lambda),
    };
    let estimate = estimate_cr_lasso_with(sp, best_lambda, settings)?;
    Ok(LambdaSweep {
        scores,
        best_lambda,
        estimate,
    })
}

/// Energy within `band` of the main diagonal over total energy.
pub fn diagonal_energy_ratio(cr: &ComplexMatrix, band: usize) -> f64 {
    let mut near = 0.0;
    let mut total = 0.0;
    for i in 0..cr.rows() {
        for (j, z) in cr.row(i).iter().enumerate() {
            let e = z.norm_sqr();
            total += e;
            if i.abs_diff(j) <= band {
                near += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        near / total
    }
}

/// Reflected response to a one-hot incident mode, shown on a finer grid.
#[derive(Clone, Debug)]
pub struct DirectivityMap {
    pub incident_mode: usize,
    /// Mode of the estimation grid with the incident in-plane wavenumber.
    pub specular_mode: usize,
    /// `Cr e_n` on the estimation grid.
    pub coarse: Vec<Complex64>,
    /// Values on the display grid.
    pub values: Vec<Complex64>,
    pub fine_grid: WavenumberGrid,
    pub peak_fine: usize,
    /// Estimation-grid mode nearest to the fine-grid peak.
    pub peak_coarse: usize,
}

impl DirectivityMap {
    /// Energy of `Cr e_n` outside the specular mode, as a fraction.
    pub fn off_specular_fraction(&self) -> f64 {
        let total: f64 = self.coarse.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        1.0 - self.coarse[self.specular_mode].norm_sqr() / total
    }
}

pub const DEFAULT_APERTURE: f64 = 0.8;

/// `p_r = Cr e_n`, re-evaluated on `fine_grid` by synthesizing the reflected
/// field over a square aperture of side `aperture` at `z = 0` and analyzing
/// it in closed form:
/// `map_j = sum_m p_m w_m L^2/(4 pi^2) sinc(dkx L/2) sinc(dky L/2)`.
pub fn directivity_map(
    cr: &ReflectionMatrix,
    incident_mode: usize,
    fine_grid: &WavenumberGrid,
    aperture: f64,
) -> Result<DirectivityMap> {
    let m = cr.grid.len();
    if incident_mode >= m {
        return Err(Error::InvalidInput(format!("incident mode {incident_mode} out of range 0..{m}")));
    }
    if !(aperture > 0.0) {
        return Err(Error::InvalidInput(format!("aperture {aperture} must be positive")));
    }
    let coarse = cr.cr.column(incident_mode);
    let half = 0.5 * aperture;
    let scale = aperture * aperture / (4.0 * PI * PI);
    let values: Vec<Complex64> = fine_grid
        .modes
        .iter()
        .map(|fm| {
            cr.grid
                .modes
                .iter()
                .zip(&coarse)
                .map(|(cm, p)| p * (cm.weight * scale * sinc((cm.kx - fm.kx) * half) * sinc((cm.ky - fm.ky) * half)))
                .sum()
        })
        .collect();
    let peak_fine = argmax_modulus(&values);
    let pf = fine_grid.modes[peak_fine];
    let inc = cr.grid.modes[incident_mode];
    Ok(DirectivityMap {
        incident_mode,
        specular_mode: cr.grid.nearest_mode(inc.kx, inc.ky),
        coarse,
        values,
        fine_grid: fine_grid.clone(),
        peak_fine,
        peak_coarse: cr.grid.nearest_mode(pf.kx, pf.ky),
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
