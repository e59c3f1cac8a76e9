//! Boundary meshes and source/receiver layouts.
//!
//! Normals point out of the body, into the fluid. Boxes have their top face
//! at `z = 0` and extend downward by their thickness.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::Vec3;

pub const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Dimensions thinner than this fraction of a box's largest dimension get at
/// least [`THIN_MIN_DIVISIONS`] divisions, so that thin sides do not collapse
/// into single high-aspect strips.
const THIN_FRACTION: f64 = 0.25;
const THIN_MIN_DIVISIONS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub center: Vec3,
    pub normal: Vec3,
    pub area: f64,
    /// 3 (triangle) or 4 (quadrilateral) corners, counterclockwise seen
    /// from the normal side.
    pub vertices: Vec<Vec3>,
}

impl Element {
    /// Largest corner-to-corner distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }

    /// Quads split along the 0-2 diagonal.
    pub fn triangles(&self) -> Vec<[Vec3; 3]> {
        let v = &self.vertices;
        match v.len() {
            3 => vec![[v[0], v[1], v[2]]],
            _ => vec![[v[0], v[1], v[2]], [v[0], v[2], v[3]]],
        }
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| dist(self.vertices[i], self.vertices[(i + 1) % n]))
            .collect()
    }

    fn from_quad(v: [Vec3; 4]) -> Self {
        let n = cross(sub(v[1], v[0]), sub(v[3], v[0]));
        let area = 0.5 * norm(cross(sub(v[2], v[0]), sub(v[3], v[1])));
        let center = [
            0.25 * (v[0][0] + v[1][0] + v[2][0] + v[3][0]),
            0.25 * (v[0][1] + v[1][1] + v[2][1] + v[3][1]),
            0.25 * (v[0][2] + v[1][2] + v[2][2] + v[3][2]),
        ];
        Self {
            center,
            normal: normalize(n),
            area,
            vertices: v.to_vec(),
        }
    }

    fn from_triangle(v: [Vec3; 3]) -> Self {
        let n = cross(sub(v[1], v[0]), sub(v[2], v[0]));
        let center = [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
            (v[0][2] + v[1][2] + v[2][2]) / 3.0,
        ];
        Self {
            center,
            normal: normalize(n),
            area: 0.5 * norm(n),
            vertices: v.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub elements: Vec<Element>,
    pub closed: bool,
}

impl Mesh {
    /// Wraps elements after checking the mesh invariants.
    pub fn new(elements: Vec<Element>, closed: bool) -> Result<Self> {
        let mesh = Self { elements, closed };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn centers(&self) -> Vec<Vec3> {
        self.elements.iter().map(|e| e.center).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.area).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// `|sum A_n n_n| / sum A_n`, zero for a closed surface.
    pub fn closure_defect(&self) -> f64 {
        let mut s = [0.0; 3];
        for e in &self.elements {
            for (si, ni) in s.iter_mut().zip(e.normal) {
                *si += e.area * ni;
            }
        }
        norm(s) / self.total_area()
    }

    pub fn mean_edge(&self) -> f64 {
        let (sum, count) = self.elements.iter().fold((0.0, 0usize), |(s, c), e| {
            let l = e.edge_lengths();
            (s + l.iter().sum::<f64>(), c + l.len())
        });
        sum / count as f64
    }

    pub fn max_diameter(&self) -> f64 {
        self.elements.iter().map(Element::diameter).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::Geometry("mesh has no elements".into()));
        }
        for (i, e) in self.elements.iter().enumerate() {
            if !(e.vertices.len() == 3 || e.vertices.len() == 4) {
                return Err(Error::Geometry(format!(
                    "element {i} has {} vertices",
                    e.vertices.len()
                )));
            }
            let finite = e
                .center
                .iter()
                .chain(&e.normal)
                .chain(e.vertices.iter().flatten())
                .all(|x| x.is_finite());
            if !finite {
                return Err(Error::Geometry(format!("element {i} has non-finite data")));
            }
            if (norm(e.normal) - 1.0).abs() > 1e-12 {
                return Err(Error::Geometry(format!("element {i} normal is not unit length")));
            }
            if !(e.area > 0.0) {
                return Err(Error::Geometry(format!("element {i} has area {}", e.area)));
            }
        }
        if self.closed {
            let defect = self.closure_defect();
            if defect > 1e-6 {
                return Err(Error::Geometry(format!(
                    "closed mesh fails closure: |sum A n| / A = {defect:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Concatenation of closed components.
    fn union(parts: Vec<Mesh>) -> Self {
        let closed = parts.iter().all(|m| m.closed);
        Self {
            elements: parts.into_iter().flat_map(|m| m.elements).collect(),
            closed,
        }
    }
}

fn divisions(len: f64, edge: f64, largest: f64) -> usize {
    let n = ((len / edge) - 1e-9).ceil().max(1.0) as usize;
    if len < THIN_FRACTION * largest {
        n.max(THIN_MIN_DIVISIONS)
    } else {
        n
    }
}

/// Quads tiling the rectangle `origin + s*u + t*v`, `s,t in [0,1]`, with
/// normal along `u x v`. Ordered with the `u` index fastest.
fn grid_face(origin: Vec3, u: Vec3, v: Vec3, nu: usize, nv: usize) -> Vec<Element> {
    let point = |i: usize, j: usize| {
        let (s, t) = (i as f64 / nu as f64, j as f64 / nv as f64);
        [
            origin[0] + s * u[0] + t * v[0],
            origin[1] + s * u[1] + t * v[1],
            origin[2] + s * u[2] + t * v[2],
        ]
    };
    let mut out = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            out.push(Element::from_quad([
                point(i, j),
                point(i + 1, j),
                point(i + 1, j + 1),
                point(i, j + 1),
            ]));
        }
    }
    out
}

/// Axis-aligned closed box spanning `lo..hi`. The top face comes first,
/// with the same tiling as [`make_surface_mesh`] over the same rectangle.
pub fn make_box_mesh(lo: Vec3, hi: Vec3, target_edge: f64) -> Result<Mesh> {
    let size = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    if size.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::Geometry(format!("degenerate box dimensions {size:?}")));
    }
    if !(target_edge > 0.0) || target_edge >= size[0].min(size[1]) {
        return Err(Error::Geometry(format!(
            "target edge {target_edge} must be positive and below the smallest side {}",
            size[0].min(size[1])
        )));
    }
    let largest = size.iter().cloned().fold(0.0, f64::max);
    let n: Vec<usize> = size.iter().map(|&s| divisions(s, target_edge, largest)).collect();
    let (ex, ey, ez) = ([size[0], 0.0, 0.0], [0.0, size[1], 0.0], [0.0, 0.0, size[2]]);

    let mut elements = Vec::new();
    // Top (+z), bottom (-z), then the four sides.
    elements.extend(grid_face([lo[0], lo[1], hi[2]], ex, ey, n[0], n[1]));
    elements.extend(grid_face(lo, ey, ex, n[1], n[0]));
    elements.extend(grid_face(lo, ex, ez, n[0], n[2]));
    elements.extend(grid_face([lo[0], hi[1], lo[2]], ez, ex, n[2], n[0]));
    elements.extend(grid_face(lo, ez, ey, n[2], n[1]));
    elements.extend(grid_face([hi[0], lo[1], lo[2]], ey, ez, n[1], n[2]));
    Mesh::new(elements, true)
}

/// Closed thin box, top face at `z = 0`, centered on the z axis.
pub fn make_plate_mesh(side_x: f64, side_y: f64, thickness: f64, target_edge: f64) -> Result<Mesh> {
    make_box_mesh(
        [-0.5 * side_x, -0.5 * side_y, -thickness],
        [0.5 * side_x, 0.5 * side_y, 0.0],
        target_edge,
    )
}

/// `bar_count` boxes of width `bar_width` along x, repeated with `pitch`,
/// each `bar_length` long in y.
pub fn make_slit_mesh(
    bar_width: f64,
    pitch: f64,
    bar_count: usize,
    bar_length: f64,
    thickness: f64,
    target_edge: f64,
) -> Result<Mesh> {
    if bar_count == 0 {
        return Err(Error::Geometry("slit needs at least one bar".into()));
    }
    if !(bar_width > 0.0) || bar_width >= pitch {
        return Err(Error::Geometry(format!(
            "bars overlap or vanish: width {bar_width}, pitch {pitch}"
        )));
    }
    let mut parts = Vec::with_capacity(bar_count);
    for i in 0..bar_count {
        let xc = (i as f64 - 0.5 * (bar_count - 1) as f64) * pitch;
        parts.push(make_box_mesh(
            [xc - 0.5 * bar_width, -0.5 * bar_length, -thickness],
            [xc + 0.5 * bar_width, 0.5 * bar_length, 0.0],
            target_edge,
        )?);
    }
    let mesh = Mesh::union(parts);
    mesh.validate()?;
    Ok(mesh)
}

/// Open rectangle at `z = 0` with `+z` normals.
pub fn make_surface_mesh(side_x: f64, side_y: f64, target_edge: f64) -> Result<Mesh> {
    if !(side_x > 0.0 && side_y > 0.0 && target_edge > 0.0) {
        return Err(Error::Geometry(format!(
            "surface {side_x} x {side_y} with edge {target_edge}"
        )));
    }
    let largest = side_x.max(side_y);
    let (nx, ny) = (
        divisions(side_x, target_edge, largest),
        divisions(side_y, target_edge, largest),
    );
    let elements = grid_face(
        [-0.5 * side_x, -0.5 * side_y, 0.0],
        [side_x, 0.0, 0.0],
        [0.0, side_y, 0.0],
        nx,
        ny,
    );
    Mesh::new(elements, false)
}

/// Flat-triangle icosphere centered at the origin with `20 * 4^level`
/// elements, vertices on the sphere of the given radius.
pub fn make_sphere_mesh(radius: f64, level: u32) -> Result<Mesh> {
    if !(radius > 0.0) {
        return Err(Error::Geometry(format!("sphere radius {radius}")));
    }
    if level > 6 {
        return Err(Error::Geometry(format!("icosphere level {level} too fine")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| normalize(*v))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints = std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let scale = |v: Vec3| [radius * v[0], radius * v[1], radius * v[2]];
    let elements = faces
        .iter()
        .map(|&[a, b, c]| Element::from_triangle([scale(verts[a]), scale(verts[b]), scale(verts[c])]))
        .collect();
    Mesh::new(elements, true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceLayout {
    pub positions: Vec<Vec3>,
    pub amplitude: Complex64,
}

impl SourceLayout {
    pub fn single(position: Vec3, amplitude: Complex64) -> Result<Self> {
        let s = Self {
            positions: vec![position],
            amplitude,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, p)) = self.positions.iter().enumerate().find(|(_, p)| !(p[2] > 0.0)) {
            return Err(Error::Geometry(format!("source {i} at z = {} is not above z = 0", p[2])));
        }
        Ok(())
    }
}

/// Unit directions on the upper hemisphere: `z_i = 1 - i/(count - 1/2)`,
/// `phi_i = i * golden angle`. The first point is the apex and the lowest
/// has `z = 1/(2 count - 1)`.
pub fn fibonacci_hemisphere(count: usize) -> Vec<Vec3> {
    (0..count)
        .map(|i| {
            let z = 1.0 - i as f64 / (count as f64 - 0.5);
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = GOLDEN_ANGLE * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

/// Sources on the upper hemisphere of radius `radius` about
/// `(0, 0, center_height)`, unit amplitude.
pub fn fibonacci_source_layout(count: usize, radius: f64, center_height: f64) -> Result<SourceLayout> {
    if count == 0 || !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "source layout needs count >= 1 and radius > 0, got {count}, {radius}"
        )));
    }
    let positions = fibonacci_hemisphere(count)
        .into_iter()
        .map(|d| [radius * d[0], radius * d[1], center_height + radius * d[2]])
        .collect();
    let layout = SourceLayout {
        positions,
        amplitude: Complex64::new(1.0, 0.0),
    };
    layout.validate()?;
    Ok(layout)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReceiverGrid {
    /// Row-major: `index = iy * nx + ix`.
    pub positions: Vec<Vec3>,
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub height: f64,
}

impl ReceiverGrid {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn extent_x(&self) -> f64 {
        (self.nx - 1) as f64 * self.spacing
    }

    pub fn extent_y(&self) -> f64 {
        (self.ny - 1) as f64 * self.spacing
    }
}

pub fn make_receiver_grid(nx: usize, ny: usize, spacing: f64, height: f64) -> Result<ReceiverGrid> {
    if nx == 0 || ny == 0 || !(spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "receiver grid {nx} x {ny} with spacing {spacing}"
        )));
    }
    let mut positions = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            positions.push([
                (ix as f64 - 0.5 * (nx - 1) as f64) * spacing,
                (iy as f64 - 0.5 * (ny - 1) as f64) * spacing,
                height,
            ]);
        }
    }
    Ok(ReceiverGrid {
        positions,
        nx,
        ny,
        spacing,
        height,
    })
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}
