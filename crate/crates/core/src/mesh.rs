//! Closed, consistently oriented triangle surfaces.
//!
//! A [`TriangleMesh`] is validated once at construction and immutable
//! afterwards. Edges are stored sorted by their `(min, max)` vertex pair; that
//! order is the degree-of-freedom order of every downstream operator.
//!
//! Supported inputs are ASCII OFF and Gmsh v2 ASCII (`$Nodes` and `$Elements`
//! blocks, triangles only). Icospheres and a few analytic deformations of
//! geodesic spheres can be generated directly.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Relative area below which a triangle is rejected, in units of `h^2`.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-12;

/// Largest accepted icosphere subdivision level.
pub const MAX_ICOSPHERE_SUBDIVISIONS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    GmshV2,
}

impl MeshFormat {
    /// Guess the format from a file extension (`.off`, `.msh`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "msh" => Some(MeshFormat::GmshV2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// `(plus, minus)` triangles per edge. The plus triangle traverses the
    /// edge from its lower to its higher vertex index.
    edge_triangles: Vec<[usize; 2]>,
    /// Edge opposite local vertex `i` of each triangle.
    triangle_edges: Vec<[usize; 3]>,
    areas: Vec<f64>,
    normals: Vec<Vec3>,
    /// Component id per triangle.
    components: Vec<usize>,
    n_components: usize,
    h: f64,
}

impl TriangleMesh {
    /// Build and validate a mesh from raw arrays.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Topology("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::Topology(format!(
                        "triangle {t} references vertex {v} but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Topology(format!("triangle {t} repeats a vertex")));
            }
        }
        let mut used = vec![false; vertices.len()];
        for tri in &triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::Topology(format!(
                "vertex {v} is not referenced by any triangle"
            )));
        }

        // Directed half-edges keyed by sorted vertex pair.
        let mut half_edges: BTreeMap<(usize, usize), Vec<(usize, bool)>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                half_edges.entry(key).or_default().push((t, a < b));
            }
        }

        let mut edges = Vec::with_capacity(half_edges.len());
        let mut edge_triangles = Vec::with_capacity(half_edges.len());
        let mut edge_index = HashMap::with_capacity(half_edges.len());
        for (&(a, b), uses) in &half_edges {
            match uses.len() {
                1 => {
                    return Err(Error::Topology(format!(
                        "open surface: edge ({a}, {b}) has a single adjacent triangle"
                    )))
                }
                2 => {}
                n => {
                    return Err(Error::Topology(format!(
                        "non-manifold edge ({a}, {b}) shared by {n} triangles"
                    )))
                }
            }
            let (t0, fwd0) = uses[0];
            let (t1, fwd1) = uses[1];
            if fwd0 == fwd1 {
                return Err(Error::Topology(format!(
                    "inconsistent orientation across edge ({a}, {b}) between triangles {t0} and {t1}"
                )));
            }
            let pair = if fwd0 { [t0, t1] } else { [t1, t0] };
            edge_index.insert((a, b), edges.len());
            edges.push([a, b]);
            edge_triangles.push(pair);
        }

        let triangle_edges: Vec<[usize; 3]> = triangles
            .iter()
            .map(|tri| {
                let mut out = [0; 3];
                for (i, slot) in out.iter_mut().enumerate() {
                    let a = tri[(i + 1) % 3];
                    let b = tri[(i + 2) % 3];
                    *slot = edge_index[&(a.min(b), a.max(b))];
                }
                out
            })
            .collect();

        let h = edges
            .iter()
            .map(|&[a, b]| (vertices[a] - vertices[b]).norm())
            .sum::<f64>()
            / edges.len() as f64;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Topology(format!("mean edge length {h} is not positive")));
        }

        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        let threshold = DEGENERATE_AREA_FACTOR * h * h;
        for (t, tri) in triangles.iter().enumerate() {
            let [p0, p1, p2] = tri.map(|v| vertices[v]);
            let c = (p1 - p0).cross(p2 - p0);
            let area = 0.5 * c.norm();
            if !(area >= threshold) {
                return Err(Error::DegenerateElement {
                    index: t,
                    area,
                    threshold,
                });
            }
            areas.push(area);
            normals.push(c / (2.0 * area));
        }

        let (components, n_components) = triangle_components(triangles.len(), &edge_triangles);
        let mut counts = vec![(0usize, 0usize, 0usize); n_components];
        for &c in &components {
            counts[c].2 += 1;
        }
        for pair in &edge_triangles {
            counts[components[pair[0]]].1 += 1;
        }
        let mut vertex_component = vec![usize::MAX; vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                let c = components[t];
                if vertex_component[v] == usize::MAX {
                    vertex_component[v] = c;
                    counts[c].0 += 1;
                } else if vertex_component[v] != c {
                    return Err(Error::Topology(format!(
                        "non-manifold vertex {v} joins two surface components"
                    )));
                }
            }
        }
        for (c, &(nv, ne, nf)) in counts.iter().enumerate() {
            let chi = nv as i64 - ne as i64 + nf as i64;
            if chi != 2 {
                return Err(Error::Topology(format!(
                    "component {c} has Euler characteristic {chi} (V={nv}, E={ne}, F={nf}); only genus-0 surfaces are supported"
                )));
            }
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            edge_triangles,
            triangle_edges,
            areas,
            normals,
            components,
            n_components,
            h,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// `(plus, minus)` triangle pair for every edge.
    pub fn edge_triangles(&self) -> &[[usize; 2]] {
        &self.edge_triangles
    }

    /// Edge index opposite each local vertex of each triangle.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn normal(&self, t: usize) -> Vec3 {
        self.normals[t]
    }

    pub fn triangle_vertices(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle_vertices(t);
        (a + b + c) / 3.0
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Mean edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_components(&self) -> usize {
        self.n_components
    }

    /// Connected-component id of each triangle.
    pub fn triangle_components(&self) -> &[usize] {
        &self.components
    }

    /// `+1` if triangle `t` is the plus triangle of edge `e`, `-1` if it is the
    /// minus triangle.
    pub fn edge_sign(&self, e: usize, t: usize) -> f64 {
        let [p, m] = self.edge_triangles[e];
        if t == p {
            1.0
        } else {
            debug_assert_eq!(t, m);
            -1.0
        }
    }

    /// Signed enclosed volume; positive for outward orientation.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|v| self.vertices[v]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    pub fn to_off(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "OFF");
        let _ = writeln!(s, "{} {} {}", self.vertices.len(), self.triangles.len(), self.edges.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn to_gmsh_v2(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "$MeshFormat\n2.2 0 8\n$EndMeshFormat");
        let _ = writeln!(s, "$Nodes\n{}", self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i + 1, v.x, v.y, v.z);
        }
        let _ = writeln!(s, "$EndNodes\n$Elements\n{}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{} 2 2 0 1 {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1);
        }
        let _ = writeln!(s, "$EndElements");
        s
    }

    pub fn write(&self, path: &Path, format: MeshFormat) -> Result<()> {
        let text = match format {
            MeshFormat::Off => self.to_off(),
            MeshFormat::GmshV2 => self.to_gmsh_v2(),
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn triangle_components(n_tri: usize, edge_triangles: &[[usize; 2]]) -> (Vec<usize>, usize) {
    let mut adj = vec![Vec::new(); n_tri];
    for &[a, b] in edge_triangles {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; n_tri];
    let mut n = 0;
    let mut stack = Vec::new();
    for start in 0..n_tri {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = n;
        stack.push(start);
        while let Some(t) = stack.pop() {
            for &u in &adj[t] {
                if comp[u] == usize::MAX {
                    comp[u] = n;
                    stack.push(u);
                }
            }
        }
        n += 1;
    }
    (comp, n)
}

/// Load and validate a mesh file.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, format)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriangleMesh> {
    let (vertices, triangles) = match format {
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::GmshV2 => parse_gmsh_v2(text)?,
    };
    TriangleMesh::new(vertices, triangles)
}

/// Non-comment, non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{tok}'")))
}

fn parse_off(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut lines = content_lines(text);
    let (ln, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file"))?;
    // The counts may share the header line ("OFF 12 20 30").
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(ln, "missing OFF header"))?
        .trim();
    let (ln, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| Error::parse(ln, "missing counts line"))?
    } else {
        (ln, rest)
    };
    let mut it = counts.split_whitespace();
    let nv: usize = parse_num(it.next(), ln, "vertex count")?;
    let nf: usize = parse_num(it.next(), ln, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(ln, "unexpected end of file in vertex list"))?;
        let mut it = l.split_whitespace();
        let x = parse_num(it.next(), ln, "x coordinate")?;
        let y = parse_num(it.next(), ln, "y coordinate")?;
        let z = parse_num(it.next(), ln, "z coordinate")?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(ln, "unexpected end of file in face list"))?;
        let mut it = l.split_whitespace();
        let k: usize = parse_num(it.next(), ln, "face vertex count")?;
        if k != 3 {
            return Err(Error::parse(ln, format!("only triangles are supported, got {k}-gon")));
        }
        let a = parse_num(it.next(), ln, "vertex index")?;
        let b = parse_num(it.next(), ln, "vertex index")?;
        let c = parse_num(it.next(), ln, "vertex index")?;
        triangles.push([a, b, c]);
    }
    Ok((vertices, triangles))
}

fn parse_gmsh_v2(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut lines = content_lines(text).peekable();
    let mut nodes: Vec<(i64, Vec3)> = Vec::new();
    let mut raw_tris: Vec<[i64; 3]> = Vec::new();
    let mut saw_nodes = false;
    let mut saw_elements = false;
    let mut ignored: BTreeMap<i64, usize> = BTreeMap::new();

    while let Some((ln, l)) = lines.next() {
        match l {
            "$MeshFormat" => {
                let (ln, v) = lines
                    .next()
                    .ok_or_else(|| Error::parse(ln, "truncated $MeshFormat"))?;
                let version: f64 = parse_num(v.split_whitespace().next(), ln, "format version")?;
                if !(2.0..3.0).contains(&version) {
                    return Err(Error::parse(ln, format!("unsupported Gmsh version {version}")));
                }
                let is_ascii: i64 = parse_num(v.split_whitespace().nth(1), ln, "file type")?;
                if is_ascii != 0 {
                    return Err(Error::parse(ln, "binary Gmsh files are not supported"));
                }
                expect_end(&mut lines, "$EndMeshFormat", ln)?;
            }
            "$Nodes" => {
                saw_nodes = true;
                let (ln, c) = lines.next().ok_or_else(|| Error::parse(ln, "truncated $Nodes"))?;
                let n: usize = parse_num(Some(c), ln, "node count")?;
                for _ in 0..n {
                    let (ln, l) = lines
                        .next()
                        .ok_or_else(|| Error::parse(ln, "truncated node list"))?;
                    let mut it = l.split_whitespace();
                    let id = parse_num(it.next(), ln, "node id")?;
                    let x = parse_num(it.next(), ln, "x coordinate")?;
                    let y = parse_num(it.next(), ln, "y coordinate")?;
                    let z = parse_num(it.next(), ln, "z coordinate")?;
                    nodes.push((id, Vec3::new(x, y, z)));
                }
                expect_end(&mut lines, "$EndNodes", ln)?;
            }
            "$Elements" => {
                saw_elements = true;
                let (ln, c) = lines
                    .next()
                    .ok_or_else(|| Error::parse(ln, "truncated $Elements"))?;
                let n: usize = parse_num(Some(c), ln, "element count")?;
                for _ in 0..n {
                    let (ln, l) = lines
                        .next()
                        .ok_or_else(|| Error::parse(ln, "truncated element list"))?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    let ty: i64 = parse_num(toks.get(1).copied(), ln, "element type")?;
                    let ntags: usize = parse_num(toks.get(2).copied(), ln, "tag count")?;
                    if ty != 2 {
                        *ignored.entry(ty).or_default() += 1;
                        continue;
                    }
                    let base = 3 + ntags;
                    let a = parse_num(toks.get(base).copied(), ln, "node reference")?;
                    let b = parse_num(toks.get(base + 1).copied(), ln, "node reference")?;
                    let c = parse_num(toks.get(base + 2).copied(), ln, "node reference")?;
                    raw_tris.push([a, b, c]);
                }
                expect_end(&mut lines, "$EndElements", ln)?;
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                // Skip unknown sections.
                let end = format!("$End{}", &s[1..]);
                for (_, l) in lines.by_ref() {
                    if l == end {
                        break;
                    }
                }
            }
            _ => return Err(Error::parse(ln, format!("unexpected line '{l}'"))),
        }
    }
    if !saw_nodes || !saw_elements {
        return Err(Error::parse(0, "missing $Nodes or $Elements block"));
    }
    for (ty, count) in &ignored {
        warn!("ignored {count} Gmsh elements of type {ty}");
    }

    let id_to_node: HashMap<i64, usize> =
        nodes.iter().enumerate().map(|(i, &(id, _))| (id, i)).collect();
    // Keep only nodes referenced by triangles, in node-list order.
    let mut referenced = vec![false; nodes.len()];
    let mut tris_local = Vec::with_capacity(raw_tris.len());
    for t in &raw_tris {
        let mut out = [0; 3];
        for (slot, id) in out.iter_mut().zip(t) {
            *slot = *id_to_node
                .get(id)
                .ok_or_else(|| Error::parse(0, format!("element references unknown node {id}")))?;
            referenced[*slot] = true;
        }
        tris_local.push(out);
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut vertices = Vec::new();
    for (i, &(_, p)) in nodes.iter().enumerate() {
        if referenced[i] {
            remap[i] = vertices.len();
            vertices.push(p);
        }
    }
    let triangles = tris_local.into_iter().map(|t| t.map(|v| remap[v])).collect();
    Ok((vertices, triangles))
}

fn expect_end<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    tag: &str,
    ln: usize,
) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l == tag => Ok(()),
        Some((ln, l)) => Err(Error::parse(ln, format!("expected {tag}, found '{l}'"))),
        None => Err(Error::parse(ln, format!("missing {tag}"))),
    }
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let vertices = raw.iter().map(|&p| Vec3::from(p).normalized()).collect();
    let triangles = vec![
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
    (vertices, triangles)
}

/// Icosahedron refined `subdivisions` times by edge-midpoint splitting, with
/// every vertex projected onto the sphere of the given radius.
pub fn generate_icosphere(subdivisions: u32, radius: f64) -> Result<TriangleMesh> {
    if subdivisions > MAX_ICOSPHERE_SUBDIVISIONS {
        return Err(Error::Config(format!(
            "icosphere subdivisions {subdivisions} exceeds the limit of {MAX_ICOSPHERE_SUBDIVISIONS}"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {radius}")));
    }
    let (mut vertices, mut triangles) = icosahedron();
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let mut mid = |u: usize, v: usize| -> usize {
                *midpoint.entry((u.min(v), u.max(v))).or_insert_with(|| {
                    vertices.push(((vertices[u] + vertices[v]) * 0.5).normalized());
                    vertices.len() - 1
                })
            };
            let ab = mid(a, b);
            let bc = mid(b, c);
            let ca = mid(c, a);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    for v in &mut vertices {
        *v = *v * radius;
    }
    TriangleMesh::new(vertices, triangles)
}

/// Geodesic sphere with every icosahedron face split into `freq^2`
/// triangles (unit radius). Gives face counts `20 * freq^2`, between the
/// power-of-four steps of [`generate_icosphere`].
pub fn generate_geodesic_sphere(freq: usize) -> Result<TriangleMesh> {
    if freq == 0 {
        return Err(Error::Config("geodesic frequency must be at least 1".into()));
    }
    let (base_v, base_t) = icosahedron();
    let m = freq;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut key_to_index: HashMap<LatticeKey, usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(base_t.len() * m * m);

    // Lattice point (i, j) of face [a, b, c] sits at a + i/m (b - a) + j/m (c - a).
    // Points on shared edges and corners are keyed canonically so neighbouring
    // faces reuse them.
    let mut point_index = |f: usize, [a, b, c]: [usize; 3], i: usize, j: usize| -> usize {
        let k = m - i - j;
        let mut nonzero: Vec<(usize, usize)> =
            [(a, k), (b, i), (c, j)].into_iter().filter(|w| w.1 > 0).collect();
        nonzero.sort_unstable();
        let key = match nonzero.as_slice() {
            [(v, _)] => LatticeKey::Corner(*v),
            [(u, wu), (v, _)] => LatticeKey::Edge(*u, *v, *wu),
            _ => LatticeKey::Interior(f, i, j),
        };
        *key_to_index.entry(key).or_insert_with(|| {
            let p = base_v[a] * (k as f64 / m as f64)
                + base_v[b] * (i as f64 / m as f64)
                + base_v[c] * (j as f64 / m as f64);
            vertices.push(p.normalized());
            vertices.len() - 1
        })
    };

    for (f, &face) in base_t.iter().enumerate() {
        for i in 0..m {
            for j in 0..(m - i) {
                let p00 = point_index(f, face, i, j);
                let p10 = point_index(f, face, i + 1, j);
                let p01 = point_index(f, face, i, j + 1);
                triangles.push([p00, p10, p01]);
                if i + j + 1 < m {
                    let p11 = point_index(f, face, i + 1, j + 1);
                    triangles.push([p10, p11, p01]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum LatticeKey {
    Corner(usize),
    Edge(usize, usize, usize),
    Interior(usize, usize, usize),
}

/// Star-shaped deformation of a geodesic sphere into a closed,
/// non-spherical "fuselage with wings and a tail fin" surface.
///
/// The mapping is radial followed by a linear stretch, so the result stays an
/// embedded genus-0 surface. With `freq = 10` it has 2000 triangles.
pub fn generate_aircraft_like(freq: usize) -> Result<TriangleMesh> {
    let sphere = generate_geodesic_sphere(freq)?;
    let bump = |x: f64, w: f64| (-(x / w).powi(2)).exp();
    let vertices = sphere
        .vertices()
        .iter()
        .map(|&u| {
            let wings = 1.6 * bump(u.z, 0.3) * bump(u.x, 0.35) * bump(u.y.abs() - 1.0, 0.6);
            let fin = 0.7 * bump(u.x + 0.8, 0.25) * bump(u.y, 0.3) / (1.0 + (-8.0 * u.z).exp());
            let r = 1.0 + wings + fin;
            let p = u * r;
            Vec3::new(2.5 * p.x, 1.0 * p.y, 0.5 * p.z)
        })
        .collect();
    TriangleMesh::new(vertices, sphere.triangles().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(m: &TriangleMesh) -> (usize, usize, usize) {
        (m.num_vertices(), m.num_edges(), m.num_triangles())
    }

    #[test]
    fn icosphere_counts() {
        assert_eq!(counts(&generate_icosphere(0, 1.0).unwrap()), (12, 30, 20));
        assert_eq!(counts(&generate_icosphere(1, 1.0).unwrap()), (42, 120, 80));
        let m3 = generate_icosphere(3, 1.0).unwrap();
        assert_eq!(m3.num_triangles(), 20 * 4usize.pow(3));
    }

    #[test]
    fn icosphere_vertices_on_sphere_and_outward() {
        for s in 0..4 {
            let r = 2.5;
            let m = generate_icosphere(s, r).unwrap();
            for v in m.vertices() {
                assert!((v.norm() - r).abs() <= 1e-12 * r);
            }
            for t in 0..m.num_triangles() {
                assert!(m.normal(t).dot(m.centroid(t)) > 0.0);
            }
            assert!(m.signed_volume() > 0.0);
        }
    }

    #[test]
    fn icosphere_subdivision_limit() {
        assert!(generate_icosphere(8, 1.0).is_err());
    }

    #[test]
    fn edges_sorted_and_plus_minus_consistent() {
        let m = generate_icosphere(2, 1.0).unwrap();
        assert!(m.edges().windows(2).all(|w| w[0] < w[1]));
        for (e, &[a, b]) in m.edges().iter().enumerate() {
            assert!(a < b);
            let [p, q] = m.edge_triangles()[e];
            let tp = m.triangles()[p];
            let i = tp.iter().position(|&v| v == a).unwrap();
            assert_eq!(tp[(i + 1) % 3], b, "plus triangle must traverse a->b");
            let tq = m.triangles()[q];
            let j = tq.iter().position(|&v| v == b).unwrap();
            assert_eq!(tq[(j + 1) % 3], a);
        }
    }

    #[test]
    fn off_round_trip_and_open_surface() {
        let m = generate_icosphere(0, 1.0).unwrap();
        let text = m.to_off();
        let back = parse_mesh(&text, MeshFormat::Off).unwrap();
        assert_eq!(counts(&back), (12, 30, 20));
        assert_eq!(back.edges(), m.edges());

        // Drop the last face, fixing the face count.
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        let open = lines.join("\n").replacen("12 20 30", "12 19 30", 1);
        match parse_mesh(&open, MeshFormat::Off) {
            Err(Error::Topology(msg)) => assert!(msg.contains("open surface"), "{msg}"),
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn flipped_face_is_inconsistent() {
        let m = generate_icosphere(0, 1.0).unwrap();
        let mut tris = m.triangles().to_vec();
        tris[3].swap(0, 1);
        match TriangleMesh::new(m.vertices().to_vec(), tris) {
            Err(Error::Topology(msg)) => assert!(msg.contains("inconsistent orientation")),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn torus(nu: usize, nv: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let (rr, r) = (2.0, 0.7);
        let mut verts = Vec::new();
        for i in 0..nu {
            for j in 0..nv {
                let u = i as f64 / nu as f64 * std::f64::consts::TAU;
                let v = j as f64 / nv as f64 * std::f64::consts::TAU;
                verts.push(Vec3::new(
                    (rr + r * v.cos()) * u.cos(),
                    (rr + r * v.cos()) * u.sin(),
                    r * v.sin(),
                ));
            }
        }
        let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
        let mut tris = Vec::new();
        for i in 0..nu {
            for j in 0..nv {
                tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        (verts, tris)
    }

    #[test]
    fn torus_is_rejected() {
        let (v, t) = torus(12, 8);
        match TriangleMesh::new(v, t) {
            Err(Error::Topology(msg)) => assert!(msg.contains("Euler characteristic 0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let m = generate_icosphere(0, 1.0).unwrap();
        let mut v = m.vertices().to_vec();
        // Collapse vertex 5 onto vertex 0: every triangle containing both degenerates.
        v[5] = v[0];
        let res = TriangleMesh::new(v, m.triangles().to_vec());
        assert!(matches!(res, Err(Error::DegenerateElement { .. })), "{res:?}");
    }

    #[test]
    fn gmsh_round_trip_with_ignored_elements() {
        let m = generate_icosphere(1, 1.0).unwrap();
        let text = m.to_gmsh_v2();
        // Insert a point element and a line element, plus a stray node.
        let text = text
            .replace(
                &format!("$Elements\n{}\n", m.num_triangles()),
                &format!("$Elements\n{}\n900 15 2 0 1 1\n901 1 2 0 1 1 2\n", m.num_triangles() + 2),
            )
            .replace(
                &format!("$Nodes\n{}\n", m.num_vertices()),
                &format!("$Nodes\n{}\n999 5.0 5.0 5.0\n", m.num_vertices() + 1),
            );
        let back = parse_mesh(&text, MeshFormat::GmshV2).unwrap();
        assert_eq!(counts(&back), counts(&m));
        assert_eq!(back.edges(), m.edges());
    }

    #[test]
    fn parse_errors_report_line() {
        let err = parse_mesh("OFF\n3 1 0\n0 0 0\n1 0 x\n", MeshFormat::Off).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        assert!(matches!(parse_mesh("", MeshFormat::Off), Err(Error::Parse { .. })));
        let quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(parse_mesh(quad, MeshFormat::Off), Err(Error::Parse { .. })));
    }

    #[test]
    fn geodesic_and_aircraft_meshes_are_closed() {
        let g = generate_geodesic_sphere(3).unwrap();
        assert_eq!(g.num_triangles(), 180);
        let a = generate_aircraft_like(10).unwrap();
        assert_eq!(a.num_triangles(), 2000);
        assert_eq!(2 * a.num_edges(), 3 * a.num_triangles());
        assert!(a.signed_volume() > 0.0);
    }
}
