//! Constant-element collocation BEM for the exterior Helmholtz problem.
//!
//! Time dependence `e^{-i omega t}`. With normals pointing into the fluid the
//! boundary equation at a collocation point reads
//! `p/2 = A g_s + G' p - i omega rho G v`, where `G` and `G'` hold element
//! integrals of the free-field Green's function and its normal derivative.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{cross, dist, dot, norm, sub, Element, Mesh, SourceLayout};
use crate::numerics::{ComplexMatrix, LuFactor, MAX_CONDITION};
use crate::Vec3;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Medium {
    /// Sound speed, m/s.
    pub c: f64,
    /// Density, kg/m^3.
    pub rho: f64,
    /// Frequency, Hz.
    pub f: f64,
}

impl Medium {
    pub fn new(c: f64, rho: f64, f: f64) -> Result<Self> {
        let m = Self { c, rho, f };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.c, self.rho, self.f].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "medium needs positive c, rho, f; got {}, {}, {}",
                self.c, self.rho, self.f
            )))
        }
    }

    pub fn k(&self) -> f64 {
        2.0 * PI * self.f / self.c
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f
    }

    pub fn wavelength(&self) -> f64 {
        self.c / self.f
    }

    /// Characteristic impedance `rho c`.
    pub fn impedance(&self) -> f64 {
        self.rho * self.c
    }
}

/// `e^{ikR} / (4 pi R)`.
pub fn greens(r: Vec3, rs: Vec3, k: f64) -> Result<Complex64> {
    let big_r = dist(r, rs);
    if !(big_r > 0.0) {
        return Err(Error::Geometry(format!("Green's function at coincident points {r:?}")));
    }
    Ok(greens_r(big_r, k))
}

#[inline]
fn greens_r(r: f64, k: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (4.0 * PI * r), k * r)
}

/// `G` and `dG/dn_y` at `y` with normal `n`, for collocation point `x`.
#[inline]
fn kernels(x: Vec3, y: Vec3, n: Vec3, k: f64) -> (Complex64, Complex64) {
    let d = sub(y, x);
    let r = norm(d);
    let g = greens_r(r, k);
    let dg = g * Complex64::new(-1.0, k * r) / r * (dot(d, n) / r);
    (g, dg)
}

/// `(e^{ika} - 1)/(2ik)` with `a = sqrt(area/pi)`: the single-layer integral
/// over a disk of the same area, seen from its center.
pub fn self_single_layer(area: f64, k: f64) -> Complex64 {
    let a = (area / PI).sqrt();
    if k * a < 1e-6 {
        return Complex64::new(0.5 * a, 0.25 * k * a * a);
    }
    (Complex64::from_polar(1.0, k * a) - 1.0) / (2.0 * I * k)
}

// Symmetric triangle rules: (barycentric (a, a, 1-2a) orbit, weight).
const RULE3: [(f64, f64); 1] = [(1.0 / 6.0, 1.0 / 3.0)];
const RULE6: [(f64, f64); 2] = [
    (0.445_948_490_915_965, 0.223_381_589_678_011),
    (0.091_576_213_509_771, 0.109_951_743_655_322),
];
const FAR_RATIO: f64 = 3.0;
const NEAR_RATIO: f64 = 1.0;
const MAX_DEPTH: u32 = 8;

fn tri_diameter(t: &[Vec3; 3]) -> f64 {
    dist(t[0], t[1]).max(dist(t[1], t[2])).max(dist(t[2], t[0]))
}

fn tri_centroid(t: &[Vec3; 3]) -> Vec3 {
    [
        (t[0][0] + t[1][0] + t[2][0]) / 3.0,
        (t[0][1] + t[1][1] + t[2][1]) / 3.0,
        (t[0][2] + t[1][2] + t[2][2]) / 3.0,
    ]
}

fn lerp3(t: &[Vec3; 3], b: [f64; 3]) -> Vec3 {
    [
        b[0] * t[0][0] + b[1] * t[1][0] + b[2] * t[2][0],
        b[0] * t[0][1] + b[1] * t[1][1] + b[2] * t[2][1],
        b[0] * t[0][2] + b[1] * t[1][2] + b[2] * t[2][2],
    ]
}

fn midpoint(a: Vec3, b: Vec3) -> Vec3 {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
}

/// Integrals of `G` and `dG/dn_y` over one flat triangle, with the rule
/// chosen by distance and recursive subdivision close to `x`.
fn integrate_triangle(x: Vec3, t: &[Vec3; 3], n: Vec3, k: f64, depth: u32) -> Result<(Complex64, Complex64)> {
    let diam = tri_diameter(t);
    let rel = dist(x, tri_centroid(t)) / diam;
    if rel < NEAR_RATIO && depth < MAX_DEPTH {
        let (m01, m12, m20) = (midpoint(t[0], t[1]), midpoint(t[1], t[2]), midpoint(t[2], t[0]));
        let mut acc = (ZERO, ZERO);
        for sub_t in [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]] {
            let (g, dg) = integrate_triangle(x, &sub_t, n, k, depth + 1)?;
            acc.0 += g;
            acc.1 += dg;
        }
        return Ok(acc);
    }
    let area = 0.5 * norm(cross(sub(t[1], t[0]), sub(t[2], t[0])));
    let rule: &[(f64, f64)] = if rel > FAR_RATIO { &RULE3 } else { &RULE6 };
    let mut acc = (ZERO, ZERO);
    for &(a, w) in rule {
        for b in [[a, a, 1.0 - 2.0 * a], [a, 1.0 - 2.0 * a, a], [1.0 - 2.0 * a, a, a]] {
            let y = lerp3(t, b);
            if dist(x, y) <= 1e-12 * diam {
                return Err(Error::Geometry(format!(
                    "evaluation point {x:?} coincides with a quadrature node; duplicate elements?"
                )));
            }
            let (g, dg) = kernels(x, y, n, k);
            acc.0 += g * (w * area);
            acc.1 += dg * (w * area);
        }
    }
    Ok(acc)
}

/// `(integral G dA, integral dG/dn_y dA)` over an element seen from `x`.
pub fn element_integrals(x: Vec3, e: &Element, k: f64) -> Result<(Complex64, Complex64)> {
    let mut acc = (ZERO, ZERO);
    for t in e.triangles() {
        let (g, dg) = integrate_triangle(x, &t, e.normal, k, 0)?;
        acc.0 += g;
        acc.1 += dg;
    }
    Ok(acc)
}

/// True if `x` lies on the element (within a tiny fraction of its size).
fn on_element(x: Vec3, e: &Element) -> bool {
    let diam = e.diameter();
    let h = dot(sub(x, e.center), e.normal);
    if h.abs() > 1e-9 * diam {
        return false;
    }
    let tol = 1e-9;
    e.triangles().iter().any(|t| {
        let (v0, v1, v2) = (sub(t[1], t[0]), sub(t[2], t[0]), sub(x, t[0]));
        let (d00, d01, d11) = (dot(v0, v0), dot(v0, v1), dot(v1, v1));
        let (d20, d21) = (dot(v2, v0), dot(v2, v1));
        let den = d00 * d11 - d01 * d01;
        let b1 = (d11 * d20 - d01 * d21) / den;
        let b2 = (d00 * d21 - d01 * d20) / den;
        b1 >= -tol && b2 >= -tol && b1 + b2 <= 1.0 + tol
    })
}

/// Row-parallel element integrals from `points` over every element of
/// `mesh`. `special(i, j, e)` overrides entries (self terms). The single
/// layer is left zero when `single_layer` is false.
fn layer_matrices<F>(
    points: &[Vec3],
    mesh: &Mesh,
    k: f64,
    single_layer: bool,
    special: F,
) -> Result<(ComplexMatrix, ComplexMatrix)>
where
    F: Fn(usize, usize, &Element) -> Option<(Complex64, Complex64)> + Sync,
{
    use rayon::prelude::*;
    let (n_p, n_b) = (points.len(), mesh.len());
    let mut g = ComplexMatrix::zeros(if single_layer { n_p } else { 0 }, n_b);
    let mut gp = ComplexMatrix::zeros(n_p, n_b);
    if n_p == 0 || n_b == 0 {
        return Ok((g, gp));
    }
    let fill = |i: usize, g_row: Option<&mut [Complex64]>, gp_row: &mut [Complex64]| -> Result<()> {
        let mut g_row = g_row;
        for (j, e) in mesh.elements.iter().enumerate() {
            let (sl, dl) = match special(i, j, e) {
                Some(v) => v,
                None => element_integrals(points[i], e, k)?,
            };
            gp_row[j] = dl;
            if let Some(row) = g_row.as_deref_mut() {
                row[j] = sl;
            }
        }
        Ok(())
    };
    if single_layer {
        g.data_mut()
            .par_chunks_mut(n_b)
            .zip(gp.data_mut().par_chunks_mut(n_b))
            .enumerate()
            .try_for_each(|(i, (gr, dr))| fill(i, Some(gr), dr))?;
    } else {
        gp.data_mut()
            .par_chunks_mut(n_b)
            .enumerate()
            .try_for_each(|(i, dr)| fill(i, None, dr))?;
    }
    Ok((g, gp))
}

/// Single- and double-layer matrices of a mesh at one frequency.
#[derive(Clone, Debug)]
pub struct BoundaryOperators {
    /// `G[m, n] = integral_n G(c_m, y) dA`; absent when assembled for rigid
    /// solves only.
    pub g: Option<ComplexMatrix>,
    /// `G'[m, n] = integral_n dG/dn_y(c_m, y) dA`, zero diagonal.
    pub gp: ComplexMatrix,
    pub k: f64,
}

impl BoundaryOperators {
    pub fn assemble(mesh: &Mesh, medium: &Medium, single_layer: bool) -> Result<Self> {
        mesh.validate()?;
        medium.validate()?;
        let k = medium.k();
        let elements = &mesh.elements;
        let centers = mesh.centers();
        let (g, gp) = layer_matrices(&centers, mesh, k, single_layer, |m, j, e| {
            (m == j).then(|| (self_single_layer(e.area, k), ZERO))
        })?;
        debug_assert_eq!(gp.rows(), elements.len());
        Ok(Self {
            g: single_layer.then_some(g),
            gp,
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.gp.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.gp.is_empty()
    }

    /// `I/2 - G'`
    pub fn rigid_matrix(&self) -> ComplexMatrix {
        let mut a = self.gp.scale(Complex64::new(-1.0, 0.0));
        for i in 0..a.rows() {
            a[(i, i)] += 0.5;
        }
        a
    }

    fn single_layer(&self) -> Result<&ComplexMatrix> {
        self.g
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("operators were assembled without the single layer".into()))
    }
}

/// `g_s[m] = G(c_m, r_s)`.
pub fn source_column(mesh: &Mesh, medium: &Medium, rs: Vec3) -> Result<Vec<Complex64>> {
    let k = medium.k();
    mesh.elements.iter().map(|e| greens(e.center, rs, k)).collect()
}

/// Operators plus the source column for one source.
#[derive(Clone, Debug)]
pub struct BemSystem {
    pub ops: BoundaryOperators,
    pub g_s: Vec<Complex64>,
}

pub fn assemble(mesh: &Mesh, medium: &Medium, source: &SourceLayout, source_index: usize) -> Result<BemSystem> {
    let rs = *source.positions.get(source_index).ok_or_else(|| {
        Error::InvalidInput(format!("source index {source_index} out of {}", source.len()))
    })?;
    let ops = BoundaryOperators::assemble(mesh, medium, true)?;
    let g_s = source_column(mesh, medium, rs)?;
    Ok(BemSystem { ops, g_s })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySolution {
    pub p: Vec<Complex64>,
    /// Normal particle velocity, positive into the fluid.
    pub v: Vec<Complex64>,
}

impl BoundarySolution {
    pub fn zeros(n: usize) -> Self {
        Self {
            p: vec![ZERO; n],
            v: vec![ZERO; n],
        }
    }
}

fn factor_checked(a: &ComplexMatrix, what: &str) -> Result<LuFactor> {
    let lu = LuFactor::new(a).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!(
            "{what}: {msg}; the frequency may be a fictitious eigenfrequency, perturb it slightly"
        )),
        other => other,
    })?;
    let cond = lu.condition_estimate();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    log::debug!("{what}: 1-norm condition estimate {cond:.3e}");
    Ok(lu)
}

/// Factored rigid system `(I/2 - G') p = A g_s`, reusable across sources.
#[derive(Debug)]
pub struct RigidSolver {
    lu: LuFactor,
}

impl RigidSolver {
    pub fn new(ops: &BoundaryOperators) -> Result<Self> {
        Ok(Self {
            lu: factor_checked(&ops.rigid_matrix(), "rigid BEM system")?,
        })
    }

    pub fn solve(&self, g_s: &[Complex64], amplitude: Complex64) -> BoundarySolution {
        let rhs: Vec<Complex64> = g_s.iter().map(|g| g * amplitude).collect();
        let p = self.lu.solve(&rhs);
        let n = p.len();
        BoundarySolution { p, v: vec![ZERO; n] }
    }
}

pub fn solve_rigid(sys: &BemSystem, amplitude: Complex64) -> Result<BoundarySolution> {
    Ok(RigidSolver::new(&sys.ops)?.solve(&sys.g_s, amplitude))
}

/// Factored system `(I/2 - G' + i omega rho G Bhat) p = A g_s`.
#[derive(Debug)]
pub struct NonlocalSolver {
    lu: LuFactor,
    bhat: ComplexMatrix,
}

impl NonlocalSolver {
    pub fn new(ops: &BoundaryOperators, bhat: &ComplexMatrix, medium: &Medium) -> Result<Self> {
        let n = ops.len();
        if bhat.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "admittance is {}x{}, mesh has {n} elements",
                bhat.rows(),
                bhat.cols()
            )));
        }
        bhat.ensure_finite("spatial admittance")?;
        let g = ops.single_layer()?;
        let coupling = g.matmul(bhat).scale(I * medium.omega() * medium.rho);
        let a = &ops.rigid_matrix() + &coupling;
        Ok(Self {
            lu: factor_checked(&a, "nonlocal BEM system")?,
            bhat: bhat.clone(),
        })
    }

    pub fn solve(&self, g_s: &[Complex64], amplitude: Complex64) -> BoundarySolution {
        let rhs: Vec<Complex64> = g_s.iter().map(|g| g * amplitude).collect();
        let p = self.lu.solve(&rhs);
        let v = self.bhat.mul_vec(&p);
        BoundarySolution { p, v }
    }
}

pub fn solve_nonlocal(
    sys: &BemSystem,
    amplitude: Complex64,
    bhat: &ComplexMatrix,
    medium: &Medium,
) -> Result<BoundarySolution> {
    Ok(NonlocalSolver::new(&sys.ops, bhat, medium)?.solve(&sys.g_s, amplitude))
}

/// Precomputed element integrals from a set of field points, for evaluating
/// many boundary solutions at the same points.
#[derive(Clone, Debug)]
pub struct FieldEvaluator {
    points: Vec<Vec3>,
    /// `[i, n] = integral_n dG/dn_y(r_i, y) dA`
    double: ComplexMatrix,
    /// `[i, n] = integral_n G(r_i, y) dA`
    single: ComplexMatrix,
    medium: Medium,
}

impl FieldEvaluator {
    pub fn new(mesh: &Mesh, medium: &Medium, points: &[Vec3]) -> Result<Self> {
        medium.validate()?;
        for (i, &x) in points.iter().enumerate() {
            if mesh.elements.iter().any(|e| on_element(x, e)) {
                return Err(Error::Geometry(format!("field point {i} at {x:?} lies on the boundary")));
            }
        }
        let (single, double) = layer_matrices(points, mesh, medium.k(), true, |_, _, _| None)?;
        Ok(Self {
            points: points.to_vec(),
            double,
            single,
            medium: *medium,
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// `A G(r, r_s) + sum_n [G'_n p_n - i omega rho G_n v_n]`.
    pub fn evaluate(&self, sol: &BoundarySolution, rs: Vec3, amplitude: Complex64) -> Result<Vec<Complex64>> {
        let scattered = self.boundary_contribution(sol)?;
        let mut field = incident_at(&self.points, rs, amplitude, self.medium.k())?;
        for (f, s) in field.iter_mut().zip(scattered) {
            *f += s;
        }
        Ok(field)
    }

    /// The boundary integral alone: the field radiated by the boundary.
    pub fn boundary_contribution(&self, sol: &BoundarySolution) -> Result<Vec<Complex64>> {
        if sol.p.len() != self.double.cols() || sol.v.len() != self.double.cols() {
            return Err(Error::Dimension(format!(
                "boundary solution has {} entries, mesh has {}",
                sol.p.len(),
                self.double.cols()
            )));
        }
        let mut out = self.double.mul_vec(&sol.p);
        if sol.v.iter().any(|v| *v != ZERO) {
            let coef = -I * self.medium.omega() * self.medium.rho;
            for (o, s) in out.iter_mut().zip(self.single.mul_vec(&sol.v)) {
                *o += coef * s;
            }
        }
        Ok(out)
    }
}

fn incident_at(points: &[Vec3], rs: Vec3, amplitude: Complex64, k: f64) -> Result<Vec<Complex64>> {
    points.iter().map(|&p| greens(p, rs, k).map(|g| amplitude * g)).collect()
}

pub fn evaluate_field(
    sol: &BoundarySolution,
    mesh: &Mesh,
    medium: &Medium,
    source: &SourceLayout,
    source_index: usize,
    amplitude: Complex64,
    points: &[Vec3],
) -> Result<Vec<Complex64>> {
    let rs = *source.positions.get(source_index).ok_or_else(|| {
        Error::InvalidInput(format!("source index {source_index} out of {}", source.len()))
    })?;
    FieldEvaluator::new(mesh, medium, points)?.evaluate(sol, rs, amplitude)
}

/// Free-field term `A G(r, r_s)`.
pub fn incident_field(
    source: &SourceLayout,
    source_index: usize,
    amplitude: Complex64,
    medium: &Medium,
    points: &[Vec3],
) -> Result<Vec<Complex64>> {
    let rs = *source.positions.get(source_index).ok_or_else(|| {
        Error::InvalidInput(format!("source index {source_index} out of {}", source.len()))
    })?;
    incident_at(points, rs, amplitude, medium.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_plate_mesh, make_sphere_mesh, make_surface_mesh};

    #[test]
    fn greens_values() {
        let g = greens([0.0; 3], [1.0, 0.0, 0.0], 1.0).unwrap();
        assert!((g - Complex64::new(1f64.cos(), 1f64.sin()) / (4.0 * PI)).norm() < 1e-15);
        assert!((g.re - 0.042_997).abs() < 1e-5 && (g.im - 0.066_963).abs() < 1e-5);
        let g0 = greens([0.0; 3], [0.0, 1.0, 0.0], 0.0).unwrap();
        assert!((g0.re - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(greens([1.0; 3], [1.0; 3], 1.0).is_err());
        let (a, b) = ([0.1, 0.2, 0.3], [-0.4, 0.5, 1.0]);
        assert_eq!(greens(a, b, 3.0).unwrap(), greens(b, a, 3.0).unwrap());
    }

    #[test]
    fn self_term_static_limit() {
        let area = 0.01;
        let a = (area / PI).sqrt();
        assert!((self_single_layer(area, 1e-9) - Complex64::new(0.5 * a, 0.0)).norm() < 1e-12);
        let k = 20.0;
        let closed = (Complex64::from_polar(1.0, k * a) - 1.0) / (2.0 * I * k);
        assert!((self_single_layer(area, k) - closed).norm() < 1e-15);
    }

    #[test]
    fn double_layer_row_sums_static() {
        // On a closed surface the static double layer sums to -1/2.
        let mesh = make_sphere_mesh(1.0, 2).unwrap();
        let medium = Medium::new(343.0, 1.2, 1e-6).unwrap();
        let ops = BoundaryOperators::assemble(&mesh, &medium, false).unwrap();
        for m in [0, 17, 200] {
            let s: Complex64 = ops.gp.row(m).iter().sum();
            assert!((s.re + 0.5).abs() < 0.02, "{s}");
        }
        assert!(ops.gp.diagonal().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn zero_amplitude_gives_zero_solution() {
        let mesh = make_plate_mesh(0.3, 0.3, 0.05, 0.1).unwrap();
        let medium = Medium::new(343.5, 1.205, 500.0).unwrap();
        let src = SourceLayout::single([0.0, 0.0, 0.4], Complex64::new(1.0, 0.0)).unwrap();
        let sys = assemble(&mesh, &medium, &src, 0).unwrap();
        let sol = solve_rigid(&sys, ZERO).unwrap();
        assert!(sol.p.iter().all(|z| *z == ZERO));
        let pts = [[0.0, 0.1, 0.5]];
        let with_zero = evaluate_field(&BoundarySolution::zeros(mesh.len()), &mesh, &medium, &src, 0, Complex64::new(2.0, 0.0), &pts).unwrap();
        let direct = incident_field(&src, 0, Complex64::new(2.0, 0.0), &medium, &pts).unwrap();
        assert_eq!(with_zero, direct);
    }

    #[test]
    fn nonlocal_with_zero_admittance_is_rigid() {
        let mesh = make_surface_mesh(0.4, 0.4, 0.1).unwrap();
        let medium = Medium::new(343.5, 1.205, 700.0).unwrap();
        let src = SourceLayout::single([0.05, 0.0, 0.3], Complex64::new(1.0, 0.0)).unwrap();
        let sys = assemble(&mesh, &medium, &src, 0).unwrap();
        let rigid = solve_rigid(&sys, Complex64::new(1.0, 0.5)).unwrap();
        let zero = ComplexMatrix::zeros(mesh.len(), mesh.len());
        let nl = solve_nonlocal(&sys, Complex64::new(1.0, 0.5), &zero, &medium).unwrap();
        assert_eq!(rigid, nl);
    }

    #[test]
    fn field_point_on_boundary_rejected() {
        let mesh = make_surface_mesh(0.4, 0.4, 0.1).unwrap();
        let medium = Medium::new(343.5, 1.205, 700.0).unwrap();
        assert!(FieldEvaluator::new(&mesh, &medium, &[[0.01, 0.02, 0.0]]).is_err());
        assert!(FieldEvaluator::new(&mesh, &medium, &[[0.01, 0.02, 0.001]]).is_ok());
    }

    #[test]
    fn bad_medium_rejected() {
        assert!(Medium::new(343.0, 0.0, 100.0).is_err());
        assert!(Medium::new(343.0, 1.2, f64::NAN).is_err());
    }
}
