//! Conforming P1 triangulations of the unit square.
//!
//! The family is the diagonal-split uniform grid: every grid square is cut
//! along its lower-left to upper-right diagonal. Uniform refinement of a
//! member reproduces (geometrically) the member with twice the resolution, so
//! shape regularity is exactly level independent.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::sparse::{CooBuilder, CsrMatrix};

const BOUNDARY_TOL: f64 = 1e-14;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_mask: Vec<bool>,
    level: usize,
    h: f64,
}

/// Geometric data of one triangle: vertex coordinates, area and the
/// (constant) gradients of the three barycentric coordinate functions.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub nodes: [usize; 3],
    pub coords: [Point; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl Element {
    /// Physical point for barycentric coordinates `lambda`.
    pub fn point(&self, lambda: [f64; 3]) -> Point {
        let mut p = [0.0; 2];
        for (c, l) in self.coords.iter().zip(lambda) {
            p[0] += l * c[0];
            p[1] += l * c[1];
        }
        p
    }
}

fn on_boundary(p: Point) -> bool {
    p.iter()
        .any(|&c| c.abs() <= BOUNDARY_TOL || (c - 1.0).abs() <= BOUNDARY_TOL)
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl TriMesh {
    /// `n x n` grid of squares, each split along the lower-left/upper-right
    /// diagonal: `2n^2` triangles, `(n+1)^2` vertices, `h = sqrt(2)/n`.
    pub fn build_uniform_unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = idx(i, j);
                let v10 = idx(i + 1, j);
                let v11 = idx(i + 1, j + 1);
                let v01 = idx(i, j + 1);
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Ok(Self::from_parts(vertices, triangles, 0))
    }

    /// Mesh of refinement generation `level`: `build(1)` refined `level` times.
    pub fn unit_square_level(level: usize) -> Self {
        let mut mesh = Self::build_uniform_unit_square(1).expect("n = 1 is valid");
        for _ in 0..level {
            mesh = mesh.refine_uniform();
        }
        mesh
    }

    fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, level: usize) -> Self {
        let boundary_mask = vertices.iter().map(|&p| on_boundary(p)).collect();
        let h = triangles
            .iter()
            .flat_map(|t| {
                [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
                    .map(|(a, b)| dist(vertices[a], vertices[b]))
            })
            .fold(0.0, f64::max);
        Self {
            vertices,
            triangles,
            boundary_mask,
            level,
            h,
        }
    }

    /// Red refinement: every triangle is split into four congruent children
    /// through its edge midpoints. Existing vertices keep their indices.
    pub fn refine_uniform(&self) -> Self {
        self.refine_with_parents().0
    }

    /// Like [`refine_uniform`](Self::refine_uniform), additionally returning
    /// for every vertex of the refined mesh the pair of coarse vertices it
    /// was created from (`[v, v]` for inherited vertices).
    pub fn refine_with_parents(&self) -> (Self, Vec<[usize; 2]>) {
        let mut vertices = self.vertices.clone();
        let mut parents: Vec<[usize; 2]> = (0..vertices.len()).map(|v| [v, v]).collect();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                parents.push([key.0, key.1]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        (
            Self::from_parts(vertices, triangles, self.level + 1),
            parents,
        )
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Meshsize: longest edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn element(&self, t: usize) -> Element {
        let nodes = self.triangles[t];
        let coords = nodes.map(|v| self.vertices[v]);
        let area = signed_area(coords[0], coords[1], coords[2]);
        let inv = 1.0 / (2.0 * area);
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let p = coords[(i + 1) % 3];
            let q = coords[(i + 2) % 3];
            grads[i] = [(p[1] - q[1]) * inv, (q[0] - p[0]) * inv];
        }
        Element {
            nodes,
            coords,
            area,
            grads,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.triangles.len()).map(|t| self.element(t))
    }

    pub fn total_area(&self) -> f64 {
        self.elements().map(|e| e.area).sum()
    }

    /// Largest ratio of longest edge to inradius over all triangles.
    pub fn shape_regularity(&self) -> f64 {
        self.elements()
            .map(|e| {
                let [a, b, c] = e.coords;
                let edges = [dist(a, b), dist(b, c), dist(c, a)];
                let perimeter: f64 = edges.iter().sum();
                let inradius = 2.0 * e.area / perimeter;
                edges.iter().cloned().fold(0.0, f64::max) / inradius
            })
            .fold(0.0, f64::max)
    }

    /// Checks orientation, conformity, area and boundary tagging.
    pub fn check_invariants(&self) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} has out-of-range vertex")));
            }
            let e = self.element(t);
            if !(e.area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {}",
                    e.area
                )));
            }
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                *edge_count.entry((p.min(q), p.max(q))).or_default() += 1;
            }
        }
        for (&(p, q), &count) in &edge_count {
            let boundary_edge = {
                let (a, b) = (self.vertices[p], self.vertices[q]);
                (0..2).any(|d| {
                    (a[d] - b[d]).abs() <= BOUNDARY_TOL
                        && (a[d].abs() <= BOUNDARY_TOL || (a[d] - 1.0).abs() <= BOUNDARY_TOL)
                })
            };
            let expected = if boundary_edge { 1 } else { 2 };
            if count != expected {
                return Err(Error::InvalidMesh(format!(
                    "edge ({p}, {q}) shared by {count} triangles, expected {expected}"
                )));
            }
        }
        let area = self.total_area();
        if (area - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMesh(format!("total area {area} differs from 1")));
        }
        for (v, (&p, &flag)) in self.vertices.iter().zip(&self.boundary_mask).enumerate() {
            if on_boundary(p) != flag {
                return Err(Error::InvalidMesh(format!("boundary flag of vertex {v} is wrong")));
            }
        }
        Ok(())
    }

    /// Plain-text dump: `n_vertices n_triangles`, then `x y boundary_flag`
    /// per vertex, then `i j k` per triangle.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.vertices.len(), self.triangles.len())?;
        for (p, &b) in self.vertices.iter().zip(&self.boundary_mask) {
            writeln!(out, "{:?} {:?} {}", p[0], p[1], b as u8)?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {}", self.vertices.len(), self.triangles.len()).unwrap();
        for (p, &b) in self.vertices.iter().zip(&self.boundary_mask) {
            writeln!(s, "{:?} {:?} {}", p[0], p[1], b as u8).unwrap();
        }
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        s
    }

    /// Parses the plain-text dump format. The refinement level is not part of
    /// the format and is set to 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let parse_err = |msg: &str| Error::Parse(msg.to_string());
        let header = lines.next().ok_or_else(|| parse_err("missing header"))?;
        let mut it = header.split_whitespace();
        let nv: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad vertex count"))?;
        let nt: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad triangle count"))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| parse_err("truncated vertex list"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err("vertex line must have 3 fields"));
            }
            let x: f64 = f[0].parse().map_err(|_| parse_err("bad x"))?;
            let y: f64 = f[1].parse().map_err(|_| parse_err("bad y"))?;
            vertices.push([x, y]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = lines.next().ok_or_else(|| parse_err("truncated triangle list"))?;
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| parse_err("bad vertex index")))
                .collect::<Result<_>>()?;
            if idx.len() != 3 {
                return Err(parse_err("triangle line must have 3 fields"));
            }
            triangles.push([idx[0], idx[1], idx[2]]);
        }
        let mesh = Self::from_parts(vertices, triangles, 0);
        mesh.check_invariants()?;
        Ok(mesh)
    }
}

/// Numbering of the degrees of freedom carried by mesh vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    vertex_to_dof: Vec<Option<usize>>,
    dof_to_vertex: Vec<usize>,
}

impl DofMap {
    /// Interior vertices numbered in increasing vertex index.
    pub fn interior(mesh: &TriMesh) -> Self {
        Self::from_mask(mesh.boundary_mask().iter().map(|&b| !b))
    }

    /// Every vertex is a dof (no boundary condition).
    pub fn all_vertices(mesh: &TriMesh) -> Self {
        Self::from_mask(std::iter::repeat(true).take(mesh.n_vertices()))
    }

    fn from_mask(mask: impl Iterator<Item = bool>) -> Self {
        let mut dof_to_vertex = Vec::new();
        let vertex_to_dof = mask
            .enumerate()
            .map(|(v, active)| {
                active.then(|| {
                    dof_to_vertex.push(v);
                    dof_to_vertex.len() - 1
                })
            })
            .collect();
        Self {
            vertex_to_dof,
            dof_to_vertex,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_to_vertex.len()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.vertex_to_dof[vertex]
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.dof_to_vertex[dof]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_to_dof.len()
    }

    /// Errors unless at least one dof exists.
    pub fn require_nonempty(&self) -> Result<()> {
        if self.n_dofs() == 0 {
            Err(Error::NoInteriorDofs)
        } else {
            Ok(())
        }
    }

    /// Expands dof coefficients to per-vertex nodal values (zero elsewhere).
    pub fn to_nodal(&self, x: &[f64]) -> Vec<f64> {
        let mut nodal = vec![0.0; self.vertex_to_dof.len()];
        for (d, &v) in self.dof_to_vertex.iter().enumerate() {
            nodal[v] = x[d];
        }
        nodal
    }

    /// Restricts per-vertex values to dof coefficients.
    pub fn from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_to_vertex.iter().map(|&v| nodal[v]).collect()
    }
}

/// `interior_dof_map` of the mesh: the homogeneous Dirichlet space.
pub fn interior_dof_map(mesh: &TriMesh) -> DofMap {
    DofMap::interior(mesh)
}

/// Nodal values of `f` at the dofs.
pub fn interpolate(mesh: &TriMesh, dofs: &DofMap, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..dofs.n_dofs())
        .map(|d| {
            let p = mesh.vertices()[dofs.vertex(d)];
            f(p[0], p[1])
        })
        .collect()
}

/// Matrix of P1 interpolation from a coarse space into a fine one: row `i`
/// holds the coarse coefficients' weights at fine dof `i`. For nested meshes
/// this is the exact embedding of the coarse space.
pub fn interpolation_matrix(
    coarse: &TriMesh,
    coarse_dofs: &DofMap,
    fine: &TriMesh,
    fine_dofs: &DofMap,
) -> Result<CsrMatrix> {
    let locator = PointLocator::new(coarse);
    let mut coo = CooBuilder::new(fine_dofs.n_dofs(), coarse_dofs.n_dofs());
    for i in 0..fine_dofs.n_dofs() {
        let p = fine.vertices()[fine_dofs.vertex(i)];
        let (t, lambda) = locator
            .locate(p)
            .ok_or_else(|| Error::InvalidMesh(format!("fine vertex {p:?} outside coarse mesh")))?;
        for (&v, &l) in coarse.triangles()[t].iter().zip(&lambda) {
            if let Some(j) = coarse_dofs.dof(v) {
                if l.abs() > 1e-14 {
                    coo.push(i, j, l);
                }
            }
        }
    }
    Ok(coo.build())
}

/// Bucket grid over the unit square for locating points in triangles.
struct PointLocator<'a> {
    mesh: &'a TriMesh,
    cells: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    fn new(mesh: &'a TriMesh) -> Self {
        let cells = ((mesh.n_triangles() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); cells * cells];
        let cell_of = |c: f64| ((c * cells as f64).floor().max(0.0) as usize).min(cells - 1);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let pts = tri.map(|v| mesh.vertices()[v]);
            let lo = [0, 1].map(|d| pts.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min));
            let hi = [0, 1].map(|d| pts.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max));
            for cj in cell_of(lo[1] - 1e-12)..=cell_of(hi[1] + 1e-12) {
                for ci in cell_of(lo[0] - 1e-12)..=cell_of(hi[0] + 1e-12) {
                    buckets[cj * cells + ci].push(t);
                }
            }
        }
        Self {
            mesh,
            cells,
            buckets,
        }
    }

    fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let cell_of = |c: f64| ((c * self.cells as f64).floor().max(0.0) as usize).min(self.cells - 1);
        let bucket = &self.buckets[cell_of(p[1]) * self.cells + cell_of(p[0])];
        bucket.iter().find_map(|&t| {
            let [a, b, c] = self.mesh.triangles()[t].map(|v| self.mesh.vertices()[v]);
            let area = signed_area(a, b, c);
            let lambda = [
                signed_area(p, b, c) / area,
                signed_area(a, p, c) / area,
                signed_area(a, b, p) / area,
            ];
            lambda.iter().all(|&l| l >= -1e-12).then_some((t, lambda))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn smallest_grid() {
        let m = TriMesh::build_uniform_unit_square(1).unwrap();
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(interior_dof_map(&m).n_dofs(), 0);
        assert_eq!(m.h(), SQRT_2);
        assert!(matches!(
            interior_dof_map(&m).require_nonempty(),
            Err(Error::NoInteriorDofs)
        ));
    }

    #[test]
    fn zero_resolution_rejected() {
        assert_eq!(TriMesh::build_uniform_unit_square(0), Err(Error::EmptyGrid));
    }

    #[test]
    fn counting_n2() {
        let m = TriMesh::build_uniform_unit_square(2).unwrap();
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.n_vertices(), 9);
        let dofs = interior_dof_map(&m);
        assert_eq!(dofs.n_dofs(), 1);
        assert_eq!(m.vertices()[dofs.vertex(0)], [0.5, 0.5]);
        assert_eq!(m.h(), SQRT_2 / 2.0);
    }

    #[test]
    fn dof_count_matches_interior_grid() {
        for n in 1..12 {
            let m = TriMesh::build_uniform_unit_square(n).unwrap();
            assert_eq!(interior_dof_map(&m).n_dofs(), (n - 1) * (n - 1));
        }
    }

    #[test]
    fn area_partitions_unit_square() {
        let m = TriMesh::build_uniform_unit_square(8).unwrap();
        assert!((m.total_area() - 1.0).abs() <= 1e-12);
        m.check_invariants().unwrap();
    }

    fn geometric_key(m: &TriMesh) -> Vec<[[i64; 2]; 3]> {
        let q = |p: Point| [(p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64];
        let mut tris: Vec<[[i64; 2]; 3]> = m
            .triangles()
            .iter()
            .map(|t| {
                let mut pts = t.map(|v| q(m.vertices()[v]));
                pts.sort();
                pts
            })
            .collect();
        tris.sort();
        tris
    }

    #[test]
    fn refinement_of_uniform_is_uniform() {
        let r = TriMesh::build_uniform_unit_square(1).unwrap().refine_uniform();
        let b = TriMesh::build_uniform_unit_square(2).unwrap();
        assert_eq!(r.n_triangles(), 8);
        assert_eq!(r.h(), SQRT_2 / 2.0);
        assert_eq!(r.level(), 1);
        assert_eq!(geometric_key(&r), geometric_key(&b));

        let r4 = TriMesh::build_uniform_unit_square(2).unwrap().refine_uniform().refine_uniform();
        let b8 = TriMesh::build_uniform_unit_square(8).unwrap();
        assert_eq!(geometric_key(&r4), geometric_key(&b8));
        assert_eq!(r4.h(), SQRT_2 / 8.0);
    }

    #[test]
    fn invariants_hold_across_levels() {
        let mut m = TriMesh::build_uniform_unit_square(1).unwrap();
        let shape = m.shape_regularity();
        for level in 0..=6 {
            m.check_invariants().unwrap();
            assert_eq!(m.level(), level);
            assert!((m.shape_regularity() - shape).abs() <= 1e-9 * shape);
            let finer = m.refine_uniform();
            assert_eq!(finer.h(), m.h() / 2.0);
            assert!((finer.total_area() - 1.0).abs() <= 1e-12);
            m = finer;
        }
    }

    #[test]
    fn text_dump_round_trip() {
        let m = TriMesh::build_uniform_unit_square(3).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("16 18\n"));
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
        let back = TriMesh::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert!(TriMesh::from_text("3 1\n0 0 1\n").is_err());
    }

    #[test]
    fn interpolation_between_nested_meshes_is_exact_on_p1() {
        let coarse = TriMesh::unit_square_level(2);
        let fine = coarse.refine_uniform().refine_uniform();
        let (cd, fd) = (DofMap::interior(&coarse), DofMap::interior(&fine));
        let p = interpolation_matrix(&coarse, &cd, &fine, &fd).unwrap();
        assert_eq!((p.n_rows(), p.n_cols()), (fd.n_dofs(), cd.n_dofs()));
        // coarse hat function at the centre, evaluated on the fine grid
        let centre = (0..cd.n_dofs())
            .find(|&d| coarse.vertices()[cd.vertex(d)] == [0.5, 0.5])
            .unwrap();
        let mut x = vec![0.0; cd.n_dofs()];
        x[centre] = 1.0;
        let y = p.matvec(&x);
        for d in 0..fd.n_dofs() {
            let q = fine.vertices()[fd.vertex(d)];
            let hat = |q: Point| {
                // hat of the diagonal mesh with spacing 1/4 centred at (1/2, 1/2)
                let (dx, dy) = ((q[0] - 0.5) * 4.0, (q[1] - 0.5) * 4.0);
                if dx * dy >= 0.0 {
                    (1.0 - dx.abs().max(dy.abs())).max(0.0)
                } else {
                    (1.0 - dx.abs() - dy.abs()).max(0.0)
                }
            };
            assert!((y[d] - hat(q)).abs() < 1e-14, "at {q:?}");
        }
    }
}
