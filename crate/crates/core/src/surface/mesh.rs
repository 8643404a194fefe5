//! Graded triangular meshes of the closed unit disk.
//!
//! Points are generated from a background hexagonal lattice, a march along the
//! boundary circle, and geometric rosettes around marked points, then
//! triangulated with Delaunay.

use super::model::{fnv1a, SurfaceModel};
use crate::{Error, Point, Result};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// Ratio between local spacing and distance inside a rosette.
const RING_RATIO: f64 = 0.15;
/// Minimum point separation as a fraction of the local size.
const SEPARATION: f64 = 0.5;
/// Minimum distance of interior points to the circle, relative to local size.
const BOUNDARY_GAP: f64 = 0.4;
/// Vertex budget.
const MAX_VERTICES: f64 = 4.0e6;

/// A point around which the mesh is refined.
#[derive(Clone, Debug, PartialEq)]
pub struct Mark {
    pub point: Point,
    /// Grading exponent `β ≥ 1`: edges near the mark stay below `h·d^{(β−1)/β}`.
    pub grading: f64,
    /// Radius below which the spacing stops shrinking.
    pub core: f64,
    /// Exponent `α` of an integrable weight `|x − p|^α` carried by integrands.
    pub weight_exponent: f64,
}

impl Mark {
    pub fn new(point: Point, grading: f64) -> Self {
        Mark { point, grading, core: 1e-3, weight_exponent: 0.0 }
    }

    pub fn with_core(mut self, core: f64) -> Self {
        self.core = core;
        self
    }

    pub fn with_weight(mut self, alpha: f64) -> Self {
        self.weight_exponent = alpha;
        self
    }

    fn size(&self, d: f64, h: f64) -> f64 {
        let algebraic = if self.grading > 1.0 { h * d.powf(1.0 - 1.0 / self.grading) } else { h };
        (RING_RATIO * d).min(algebraic).max(RING_RATIO * self.core).min(h)
    }
}

/// Conforming triangulation with boundary data.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub on_boundary: Vec<bool>,
    pub boundary_edges: Vec<[usize; 2]>,
    pub marks: Vec<Mark>,
    /// Vertex index of each mark.
    pub mark_vertices: Vec<usize>,
    pub h: f64,
    /// Circular segments between boundary edges and the circle: `(triangle, a, b)`.
    pub segments: Vec<(usize, usize, usize)>,
    /// Area of the curved extension of each triangle beyond its edges.
    pub extra_area: Vec<f64>,
    neighbors: Vec<[Option<usize>; 3]>,
    grid: TriangleGrid,
}

#[derive(Clone, Debug)]
struct TriangleGrid {
    n: usize,
    cells: Vec<usize>,
}

fn size_at(x: Point, h: f64, marks: &[Mark]) -> f64 {
    marks.iter().fold(h, |s, m| s.min(m.size(dist(x, m.point), h)))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

struct Candidate {
    x: Point,
    size: f64,
}

/// Spatial hash with one grid per size level.
struct Separation {
    cells: HashMap<(i32, i64, i64), Vec<Point>>,
}

impl Separation {
    fn level(s: f64) -> i32 {
        s.log2().floor() as i32
    }

    fn cell(level: i32) -> f64 {
        2f64.powi(level + 1)
    }

    fn key(level: i32, x: Point) -> (i32, i64, i64) {
        let c = Self::cell(level);
        (level, (x[0] / c).floor() as i64, (x[1] / c).floor() as i64)
    }

    fn clear(&self, x: Point, s: f64) -> bool {
        let rho = SEPARATION * s;
        let lvl = Self::level(s);
        for l in (lvl - 2)..=(lvl + 2) {
            let c = Self::cell(l);
            let k = (rho / c).ceil() as i64;
            let (_, i0, j0) = Self::key(l, x);
            for i in (i0 - k)..=(i0 + k) {
                for j in (j0 - k)..=(j0 + k) {
                    if let Some(pts) = self.cells.get(&(l, i, j)) {
                        if pts.iter().any(|p| dist(*p, x) < rho) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn insert(&mut self, x: Point, s: f64) {
        self.cells.entry(Self::key(Self::level(s), x)).or_default().push(x);
    }
}

fn estimate_vertices(h: f64, marks: &[Mark]) -> f64 {
    let mut n = PI / (h * h * 0.75f64.sqrt()) + 2.0 * PI / h;
    for m in marks {
        let per_ring = 2.0 * PI / RING_RATIO;
        let rings = (2.0 / m.core.max(1e-300)).ln() / (1.0 + RING_RATIO).ln();
        n += per_ring * rings.max(0.0) + 4.0 * PI / (RING_RATIO * RING_RATIO);
        if m.grading > 1.0 {
            n += 2.0 * PI * m.grading / (h * h);
        }
    }
    n
}

/// Meshes the model's disk with target edge length `h` and graded marks.
pub fn mesh_model(model: &SurfaceModel, h: f64, marks: &[Mark]) -> Result<Mesh> {
    let _ = model;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Parameter(format!("mesh size must be positive, got {h}")));
    }
    if h > 1.0 {
        return Err(Error::Parameter(format!("mesh size {h} exceeds the disk radius")));
    }
    for m in marks {
        if !(m.grading >= 1.0 && m.grading.is_finite()) {
            return Err(Error::Parameter(format!("grading exponent must be at least 1, got {}", m.grading)));
        }
        if !(m.core > 0.0 && m.core.is_finite()) {
            return Err(Error::Parameter(format!("core radius must be positive, got {}", m.core)));
        }
        if m.point[0].hypot(m.point[1]) > 1.0 + 1e-12 {
            return Err(Error::Domain("mark outside the unit disk".into()));
        }
    }
    let estimate = estimate_vertices(h, marks);
    if estimate > MAX_VERTICES {
        return Err(Error::Resource(format!("mesh would need about {estimate:.0} vertices")));
    }
    let marks: Vec<Mark> = marks
        .iter()
        .map(|m| {
            let r = m.point[0].hypot(m.point[1]);
            let mut m = m.clone();
            if r >= 1.0 - 1e-12 {
                m.point = [m.point[0] / r, m.point[1] / r];
            }
            m
        })
        .collect();
    let size = |x: Point| size_at(x, h, &marks);
    let is_bnd = |p: Point| p[0].hypot(p[1]) >= 1.0 - 1e-12;

    // Boundary candidates: boundary marks, then a march along the circle.
    let mut boundary: Vec<Candidate> = Vec::new();
    for m in marks.iter().filter(|m| is_bnd(m.point)) {
        boundary.push(Candidate { x: m.point, size: 0.0 });
    }
    let theta0 = marks.iter().find(|m| is_bnd(m.point)).map_or(0.0, |m| m.point[1].atan2(m.point[0]));
    let end = theta0 + 2.0 * PI;
    let mut theta = theta0;
    loop {
        let x = [theta.cos(), theta.sin()];
        let s = size(x);
        boundary.push(Candidate { x, size: s });
        theta += s;
        if theta > end - 0.5 * size([end.cos(), end.sin()]) {
            break;
        }
    }

    // Interior candidates: interior marks, rosettes, lattice.
    let mut interior: Vec<Candidate> = Vec::new();
    for m in marks.iter().filter(|m| !is_bnd(m.point)) {
        interior.push(Candidate { x: m.point, size: 0.0 });
    }
    for (k, m) in marks.iter().enumerate() {
        let mut r = m.size(0.0, h);
        let mut ring = 0usize;
        while r < 2.2 {
            let s = m.size(r, h);
            if s >= h * 0.999 {
                break;
            }
            let n = ((2.0 * PI * r / s).ceil() as usize).max(6);
            let phase = 0.5 * ring as f64 * 2.0 * PI / n as f64 + 0.1 * k as f64;
            for j in 0..n {
                let a = phase + 2.0 * PI * j as f64 / n as f64;
                let x = [m.point[0] + r * a.cos(), m.point[1] + r * a.sin()];
                let rx = x[0].hypot(x[1]);
                if rx > 1.0 {
                    continue;
                }
                // Keep only points where this mark dictates the size.
                let own = m.size(r, h);
                if marks.iter().enumerate().any(|(l, o)| l != k && o.size(dist(x, o.point), h) < own) {
                    continue;
                }
                interior.push(Candidate { x, size: own });
            }
            r += s;
            ring += 1;
        }
    }
    let dy = h * 0.75f64.sqrt();
    let rows = (1.0 / dy).ceil() as i64 + 1;
    for j in -rows..=rows {
        let yj = j as f64 * dy;
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        let cols = (1.0 / h).ceil() as i64 + 1;
        for i in -cols..=cols {
            let x = [i as f64 * h + shift, yj];
            if x[0].hypot(x[1]) >= 1.0 {
                continue;
            }
            let s = size(x);
            if s >= h * 0.999 {
                interior.push(Candidate { x, size: h });
            }
        }
    }

    let mut sep = Separation { cells: HashMap::new() };
    let mut points: Vec<Point> = Vec::new();
    let mut flags: Vec<bool> = Vec::new();
    let order = |c: &mut Vec<Candidate>| c.sort_by(|a, b| a.size.total_cmp(&b.size));
    order(&mut boundary);
    for c in &boundary {
        let s = if c.size == 0.0 { size(c.x) } else { c.size };
        if c.size == 0.0 || sep.clear(c.x, s) {
            sep.insert(c.x, s);
            points.push(c.x);
            flags.push(true);
        }
    }
    order(&mut interior);
    for c in &interior {
        let s = if c.size == 0.0 { size(c.x) } else { c.size };
        let gap = 1.0 - c.x[0].hypot(c.x[1]);
        if gap < BOUNDARY_GAP * s {
            continue;
        }
        if c.size == 0.0 || sep.clear(c.x, s) {
            sep.insert(c.x, s);
            points.push(c.x);
            flags.push(false);
        }
    }
    triangulate(points, flags, marks, h)
}

fn triangulate(points: Vec<Point>, on_boundary: Vec<bool>, marks: Vec<Mark>, h: f64) -> Result<Mesh> {
    let dpts: Vec<delaunator::Point> = points.iter().map(|p| delaunator::Point { x: p[0], y: p[1] }).collect();
    let tri = delaunator::triangulate(&dpts);
    if tri.triangles.is_empty() {
        return Err(Error::Mesh("triangulation produced no triangles".into()));
    }
    let mut triangles = Vec::with_capacity(tri.triangles.len() / 3);
    for t in tri.triangles.chunks(3) {
        let (a, b, c) = (t[0], t[1], t[2]);
        let area = signed_area(points[a], points[b], points[c]);
        triangles.push(if area < 0.0 { [a, c, b] } else { [a, b, c] });
    }
    let mut boundary_edges = Vec::with_capacity(tri.hull.len());
    for k in 0..tri.hull.len() {
        let a = tri.hull[k];
        let b = tri.hull[(k + 1) % tri.hull.len()];
        if !on_boundary[a] {
            return Err(Error::Mesh(format!("hull vertex {a} is not on the boundary circle")));
        }
        // Orient boundary edges counter-clockwise.
        let cross = points[a][0] * points[b][1] - points[a][1] * points[b][0];
        boundary_edges.push(if cross >= 0.0 { [a, b] } else { [b, a] });
    }
    Mesh::from_parts(points, triangles, on_boundary, boundary_edges, marks, h)
}

/// Counter-clockwise angle from `a` to `b` on the unit circle.
pub(crate) fn segment_angle(a: Point, b: Point) -> f64 {
    (b[1].atan2(b[0]) - a[1].atan2(a[0])).rem_euclid(2.0 * PI)
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Assembles a mesh from raw data, validating orientation and marks.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        on_boundary: Vec<bool>,
        boundary_edges: Vec<[usize; 2]>,
        marks: Vec<Mark>,
        h: f64,
    ) -> Result<Mesh> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::Mesh("empty mesh".into()));
        }
        if on_boundary.len() != vertices.len() {
            return Err(Error::Mesh("boundary flags do not match vertices".into()));
        }
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {k} references a missing vertex")));
            }
            let a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if !(a > 0.0) {
                return Err(Error::Mesh(format!("triangle {k} has non-positive area {a}")));
            }
        }
        let mut mark_vertices = Vec::with_capacity(marks.len());
        for m in &marks {
            let v = vertices
                .iter()
                .position(|p| dist(*p, m.point) < 1e-14)
                .ok_or_else(|| Error::Mesh("mark is not a mesh vertex".into()))?;
            mark_vertices.push(v);
        }
        let neighbors = build_neighbors(&triangles);
        let grid = TriangleGrid::build(&vertices, &triangles);
        let mut segments = Vec::new();
        let mut extra_area = vec![0.0; triangles.len()];
        for (k, (t, n)) in triangles.iter().zip(&neighbors).enumerate() {
            for e in 0..3 {
                let (a, b) = (t[(e + 1) % 3], t[(e + 2) % 3]);
                let on_circle = |v: usize| on_boundary[v] && (vertices[v][0].hypot(vertices[v][1]) - 1.0).abs() < 1e-9;
                if n[e].is_none() && on_circle(a) && on_circle(b) {
                    let delta = segment_angle(vertices[a], vertices[b]);
                    extra_area[k] += 0.5 * (delta - delta.sin());
                    segments.push((k, a, b));
                }
            }
        }
        Ok(Mesh {
            vertices,
            triangles,
            on_boundary,
            boundary_edges,
            marks,
            mark_vertices,
            h,
            segments,
            extra_area,
            neighbors,
            grid,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Area of triangle `t` in ambient coordinates.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Area of triangle `t` including its circular segments.
    pub fn effective_area(&self, t: usize) -> f64 {
        self.triangle_area(t) + self.extra_area[t]
    }

    /// Shortest edge incident to vertex `v`.
    pub fn min_incident_edge(&self, v: usize) -> f64 {
        let mut best = f64::INFINITY;
        for t in &self.triangles {
            if let Some(k) = t.iter().position(|&w| w == v) {
                for o in [t[(k + 1) % 3], t[(k + 2) % 3]] {
                    best = best.min(dist(self.vertices[v], self.vertices[o]));
                }
            }
        }
        best
    }

    /// Longest edge of each triangle.
    pub fn max_edge(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    /// Barycentric coordinates of `x` in triangle `t`.
    pub fn barycentric(&self, t: usize, x: Point) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Triangle containing `x` with barycentric coordinates.
    ///
    /// Points in the thin segments between the boundary polygon and the circle
    /// are attached to the nearest boundary triangle with extrapolated
    /// coordinates. Points outside the closed disk give `None`.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        if !(x[0].is_finite() && x[1].is_finite()) || x[0].hypot(x[1]) > 1.0 + 1e-9 {
            return None;
        }
        let mut t = self.grid.start(x);
        for _ in 0..(4 * self.triangles.len() + 8) {
            let l = self.barycentric(t, x);
            let (k, min) = l.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
            if min >= -1e-12 {
                return Some((t, l));
            }
            match self.neighbors[t][k] {
                Some(n) => t = n,
                None => return Some((t, l)),
            }
        }
        None
    }

    /// Interpolates nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: Point) -> Option<f64> {
        self.locate(x).map(|(t, l)| {
            let tri = self.triangles[t];
            l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
        })
    }

    /// Stable fingerprint of the vertex set and connectivity.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::with_capacity(16 * self.vertices.len() + 24 * self.triangles.len());
        for p in &self.vertices {
            bytes.extend_from_slice(&p[0].to_le_bytes());
            bytes.extend_from_slice(&p[1].to_le_bytes());
        }
        for t in &self.triangles {
            for v in t {
                bytes.extend_from_slice(&(*v as u64).to_le_bytes());
            }
        }
        fnv1a(&bytes)
    }

    /// Serializes to the plain-text mesh format.
    ///
    /// ```text
    /// mflab-mesh 1
    /// h <target size>
    /// vertices <n>
    /// <x> <y> <boundary flag 0|1>
    /// triangles <m>
    /// <i> <j> <k>
    /// boundary_edges <e>
    /// <i> <j>
    /// marks <k>
    /// <x> <y> <grading> <core> <weight exponent>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mflab-mesh 1\nh {:e}\nvertices {}", self.h, self.vertices.len());
        for (p, b) in self.vertices.iter().zip(&self.on_boundary) {
            let _ = writeln!(s, "{:e} {:e} {}", p[0], p[1], *b as u8);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {}", e[0], e[1]);
        }
        let _ = writeln!(s, "marks {}", self.marks.len());
        for m in &self.marks {
            let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e}", m.point[0], m.point[1], m.grading, m.core, m.weight_exponent);
        }
        s
    }

    /// Parses the plain-text mesh format.
    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            let (i, l) = lines
                .next()
                .ok_or_else(|| Error::Parse { line: 0, col: 0, message: format!("unexpected end of input, expected {what}") })?;
            Ok((i + 1, l.split_whitespace().map(str::to_string).collect()))
        };
        fn num<T: std::str::FromStr>(line: usize, tok: Option<&String>) -> Result<T> {
            tok.and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse { line, col: 0, message: "malformed number".into() })
        }
        fn header(line: usize, toks: &[String], key: &str) -> Result<usize> {
            if toks.first().map(String::as_str) != Some(key) {
                return Err(Error::Parse { line, col: 1, message: format!("expected `{key}`") });
            }
            num(line, toks.get(1))
        }
        let (l, t) = next("header")?;
        if t.first().map(String::as_str) != Some("mflab-mesh") {
            return Err(Error::Parse { line: l, col: 1, message: "missing mflab-mesh header".into() });
        }
        let (l, t) = next("h")?;
        if t.first().map(String::as_str) != Some("h") {
            return Err(Error::Parse { line: l, col: 1, message: "expected `h`".into() });
        }
        let h: f64 = num(l, t.get(1))?;
        let (l, t) = next("vertices")?;
        let nv = header(l, &t, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        let mut flags = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (l, t) = next("vertex")?;
            vertices.push([num(l, t.first())?, num(l, t.get(1))?]);
            flags.push(num::<u8>(l, t.get(2))? == 1);
        }
        let (l, t) = next("triangles")?;
        let nt = header(l, &t, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (l, t) = next("triangle")?;
            triangles.push([num(l, t.first())?, num(l, t.get(1))?, num(l, t.get(2))?]);
        }
        let (l, t) = next("boundary_edges")?;
        let ne = header(l, &t, "boundary_edges")?;
        let mut edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (l, t) = next("edge")?;
            edges.push([num(l, t.first())?, num(l, t.get(1))?]);
        }
        let (l, t) = next("marks")?;
        let nm = header(l, &t, "marks")?;
        let mut marks = Vec::with_capacity(nm);
        for _ in 0..nm {
            let (l, t) = next("mark")?;
            marks.push(Mark {
                point: [num(l, t.first())?, num(l, t.get(1))?],
                grading: num(l, t.get(2))?,
                core: num(l, t.get(3))?,
                weight_exponent: num(l, t.get(4))?,
            });
        }
        Mesh::from_parts(vertices, triangles, flags, edges, marks, h)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Mesh> {
        Mesh::from_text(&std::fs::read_to_string(path)?)
    }
}

fn build_neighbors(triangles: &[[usize; 3]]) -> Vec<[Option<usize>; 3]> {
    let mut edges: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
    for (k, t) in triangles.iter().enumerate() {
        for e in 0..3 {
            edges.insert((t[(e + 1) % 3], t[(e + 2) % 3]), k);
        }
    }
    triangles
        .iter()
        .map(|t| {
            let mut n = [None; 3];
            for (e, slot) in n.iter_mut().enumerate() {
                *slot = edges.get(&(t[(e + 2) % 3], t[(e + 1) % 3])).copied();
            }
            n
        })
        .collect()
}

impl TriangleGrid {
    fn build(vertices: &[Point], triangles: &[[usize; 3]]) -> Self {
        let n = ((triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let mut cells = vec![usize::MAX; n * n];
        for (k, t) in triangles.iter().enumerate() {
            let c = t.iter().fold([0.0, 0.0], |acc, &v| [acc[0] + vertices[v][0] / 3.0, acc[1] + vertices[v][1] / 3.0]);
            let idx = Self::index(n, c);
            if cells[idx] == usize::MAX {
                cells[idx] = k;
            }
        }
        // Fill empty cells from the nearest filled cell in the same row or column sweep.
        let mut last = 0;
        for cell in cells.iter_mut() {
            if *cell == usize::MAX {
                *cell = last;
            } else {
                last = *cell;
            }
        }
        TriangleGrid { n, cells }
    }

    fn index(n: usize, x: Point) -> usize {
        let f = |v: f64| (((v + 1.0) * 0.5 * n as f64).floor().max(0.0) as usize).min(n - 1);
        f(x[1]) * n + f(x[0])
    }

    fn start(&self, x: Point) -> usize {
        self.cells[Self::index(self.n, x)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> SurfaceModel {
        SurfaceModel::flat_disk()
    }

    fn total_area(m: &Mesh) -> f64 {
        (0..m.n_triangles()).map(|t| m.triangle_area(t)).sum()
    }

    #[test]
    fn uniform_disk_mesh() {
        let m = mesh_model(&flat(), 0.1, &[]).unwrap();
        assert!((200..=2000).contains(&m.n_vertices()), "{}", m.n_vertices());
        let n_b = 2.0 * PI / 0.1;
        assert!((m.boundary_edges.len() as f64 - n_b).abs() <= 2.0);
        // Polygon area is just below π; segments restore the disk.
        let a = total_area(&m);
        assert!(a < PI && a > PI - 0.02, "{a}");
        let full: f64 = (0..m.n_triangles()).map(|t| m.effective_area(t)).sum();
        assert!((full - PI).abs() < 1e-12, "{full}");
        for e in &m.boundary_edges {
            assert!(m.on_boundary[e[0]] && m.on_boundary[e[1]]);
        }
    }

    #[test]
    fn graded_mark_refines() {
        let m = mesh_model(&flat(), 0.1, &[Mark::new([0.0, 0.0], 2.0)]).unwrap();
        let v = m.mark_vertices[0];
        assert_eq!(m.vertices[v], [0.0, 0.0]);
        assert!(m.min_incident_edge(v) < 0.1);
        // Local edges respect h·d^{1/2} up to the shape factor of the rosette.
        for t in 0..m.n_triangles() {
            let c = m.triangles[t].iter().fold([0.0, 0.0], |a, &i| [a[0] + m.vertices[i][0] / 3.0, a[1] + m.vertices[i][1] / 3.0]);
            let d = c[0].hypot(c[1]);
            if d > 0.02 && d < 0.8 {
                assert!(m.max_edge(t) <= 2.0 * 0.1 * d.sqrt(), "d={d} e={}", m.max_edge(t));
            }
        }
    }

    #[test]
    fn boundary_and_close_marks() {
        let marks = [
            Mark::new([1.0, 0.0], 1.0).with_core(1e-4),
            Mark::new([0.5, 0.0], 1.0).with_core(1e-3),
            Mark::new([0.52, 0.01], 1.0).with_core(1e-3),
        ];
        let m = mesh_model(&flat(), 0.08, &marks).unwrap();
        assert!(m.on_boundary[m.mark_vertices[0]]);
        assert!(m.min_incident_edge(m.mark_vertices[0]) < 1e-4);
        assert!((total_area(&m) - PI).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mesh_model(&flat(), 0.0, &[]).is_err());
        assert!(mesh_model(&flat(), -1.0, &[]).is_err());
        assert!(mesh_model(&flat(), f64::NAN, &[]).is_err());
        assert!(matches!(mesh_model(&flat(), 1e-5, &[]), Err(Error::Resource(_))));
        assert!(mesh_model(&flat(), 0.1, &[Mark::new([0.0, 0.0], 0.5)]).is_err());
    }

    #[test]
    fn locate_and_interpolate_linear() {
        let m = mesh_model(&flat(), 0.1, &[Mark::new([0.3, 0.2], 1.0)]).unwrap();
        let vals: Vec<f64> = m.vertices.iter().map(|p| 2.0 * p[0] - p[1] + 0.5).collect();
        for x in [[0.0, 0.0], [0.31, 0.2], [-0.7, 0.5], [0.0, -0.99]] {
            let v = m.interpolate(&vals, x).unwrap();
            assert!((v - (2.0 * x[0] - x[1] + 0.5)).abs() < 1e-12);
        }
        assert!(m.locate([1.5, 0.0]).is_none());
    }

    #[test]
    fn text_round_trip() {
        let m = mesh_model(&flat(), 0.2, &[Mark::new([0.1, 0.0], 1.5)]).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        assert_eq!(back.marks, m.marks);
        assert_eq!(back.fingerprint(), m.fingerprint());
        assert!(Mesh::from_text("mflab-mesh 1\nh 0.1\nvertices 2\n0 0 0\n").is_err());
    }
}
