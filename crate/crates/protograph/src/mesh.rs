//! Triangle mesh type for molecular surfaces, plus the uniform-grid
//! decimator used to shrink meshes to a face budget.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshWarning {
    /// Edge shared by more than two faces. The mesh is kept as-is.
    NonManifoldEdge { a: usize, b: usize, face_count: usize },
    /// Vertex not referenced by any face; its normal defaults to +z.
    IsolatedVertex { vertex: usize },
    /// Face with a repeated vertex or zero area; skipped for normals.
    DegenerateFace { face: usize },
}

impl fmt::Display for MeshWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshWarning::NonManifoldEdge { a, b, face_count } => {
                write!(f, "edge ({a},{b}) shared by {face_count} faces")
            }
            MeshWarning::IsolatedVertex { vertex } => write!(f, "vertex {vertex} is isolated"),
            MeshWarning::DegenerateFace { face } => write!(f, "face {face} is degenerate"),
        }
    }
}

/// Triangulated surface. Vertex normals are unit length, angle-weighted
/// averages of incident face normals.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub normals: Vec<Vector3<f64>>,
    /// Optional map vertex -> atom ordinal, from an annotation sidecar.
    pub vertex_atoms: Option<Vec<usize>>,
    pub warnings: Vec<MeshWarning>,
}

impl TriMesh {
    /// Build from raw vertices and faces, validating indices and
    /// computing normals. Non-manifold edges and degenerate faces are
    /// reported in `warnings`, never dropped silently.
    pub fn from_parts(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<TriMesh> {
        if vertices.is_empty() {
            return Err(Error::EmptyStructure("mesh has no vertices".into()));
        }
        for face in &faces {
            for &v in face {
                if v >= vertices.len() {
                    return Err(Error::IndexOutOfRange { index: v, len: vertices.len() });
                }
            }
        }
        let mut warnings = Vec::new();
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                warnings.push(MeshWarning::DegenerateFace { face: fi });
                continue;
            }
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut nonmanifold: Vec<_> = edge_count
            .iter()
            .filter(|&(_, &c)| c > 2)
            .map(|(&(a, b), &c)| MeshWarning::NonManifoldEdge { a, b, face_count: c })
            .collect();
        nonmanifold.sort_by_key(|w| match w {
            MeshWarning::NonManifoldEdge { a, b, .. } => (*a, *b),
            _ => unreachable!(),
        });
        warnings.extend(nonmanifold);

        let normals = vertex_normals(&vertices, &faces, &mut warnings);
        Ok(TriMesh { vertices, faces, normals, vertex_atoms: None, warnings })
    }

    /// Each undirected edge exactly once, ascending (a < b), sorted.
    pub fn unique_edges(&self) -> Vec<(usize, usize)> {
        unique_edges(&self.faces)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = Point3::new(f64::MAX, f64::MAX, f64::MAX);
        let mut hi = Point3::new(f64::MIN, f64::MIN, f64::MIN);
        for p in &self.vertices {
            lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        (hi - lo).norm()
    }
}

pub fn unique_edges(faces: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])])
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Edge list with per-edge adjacent faces and per-vertex neighbor lists.
pub struct EdgeTopology {
    pub edges: Vec<(usize, usize)>,
    /// Face indices adjacent to `edges[i]`, at most 2 on manifold meshes.
    pub edge_faces: Vec<Vec<usize>>,
    /// One-ring vertex neighbors, ascending, per vertex.
    pub neighbors: Vec<Vec<usize>>,
}

pub fn topology(mesh: &TriMesh) -> EdgeTopology {
    let edges = mesh.unique_edges();
    let index: HashMap<(usize, usize), usize> =
        edges.iter().copied().enumerate().map(|(i, e)| (e, i)).collect();
    let mut edge_faces = vec![Vec::new(); edges.len()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            edge_faces[index[&key]].push(fi);
        }
    }
    let mut neighbors = vec![Vec::new(); mesh.vertices.len()];
    for &(a, b) in &edges {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    for n in &mut neighbors {
        n.sort_unstable();
    }
    EdgeTopology { edges, edge_faces, neighbors }
}

fn vertex_normals(
    vertices: &[Point3<f64>],
    faces: &[[usize; 3]],
    warnings: &mut Vec<MeshWarning>,
) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); vertices.len()];
    for f in faces {
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            continue;
        }
        let [a, b, c] = *f;
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        if n.norm() == 0.0 {
            continue;
        }
        let nf = n.normalize();
        // Angle weighting keeps normals stable under irregular tessellation.
        for (v, prev, next) in [(a, c, b), (b, a, c), (c, b, a)] {
            let u = vertices[prev] - vertices[v];
            let w = vertices[next] - vertices[v];
            let angle = crate::geom::angle_between(&u, &w);
            acc[v] += nf * angle;
        }
    }
    acc.iter()
        .enumerate()
        .map(|(v, n)| {
            if n.norm() < 1e-12 {
                warnings.push(MeshWarning::IsolatedVertex { vertex: v });
                Vector3::new(0.0, 0.0, 1.0)
            } else {
                n.normalize()
            }
        })
        .collect()
}

/// Result of a decimation call. `reached` is false when bisection could
/// not land in the 0.8..1.2 budget band; `mesh` is then the closest found.
pub struct DecimateOutcome {
    pub mesh: TriMesh,
    pub reached: bool,
    pub grid_size: f64,
}

/// Cluster vertices on a uniform world-anchored grid of the given cell
/// size and rebuild the face list. Repeated application at the same cell
/// size is the identity on the clustered mesh.
pub fn cluster_decimate(mesh: &TriMesh, cell: f64) -> Result<TriMesh> {
    assert!(cell > 0.0, "cell size must be positive");
    let key = |p: &Point3<f64>| {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
    };
    let mut cluster_of = Vec::with_capacity(mesh.vertices.len());
    let mut cluster_ids: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (vi, p) in mesh.vertices.iter().enumerate() {
        let k = key(p);
        let id = *cluster_ids.entry(k).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[id].push(vi);
        cluster_of.push(id);
    }
    let vertices: Vec<Point3<f64>> = members
        .iter()
        .map(|m| {
            let sum = m.iter().fold(Vector3::zeros(), |acc, &v| acc + mesh.vertices[v].coords);
            Point3::from(sum / m.len() as f64)
        })
        .collect();
    let mut seen: HashMap<[usize; 3], ()> = HashMap::new();
    let mut faces = Vec::new();
    for f in &mesh.faces {
        let g = [cluster_of[f[0]], cluster_of[f[1]], cluster_of[f[2]]];
        if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
            continue; // face collapsed
        }
        let mut sorted = g;
        sorted.sort_unstable();
        if seen.insert(sorted, ()).is_none() {
            faces.push(g);
        }
    }
    let vertex_atoms = mesh.vertex_atoms.as_ref().map(|atoms| {
        members
            .iter()
            .map(|m| {
                // Majority atom over the cluster, ties to the smallest index.
                let mut counts: HashMap<usize, usize> = HashMap::new();
                for &v in m {
                    *counts.entry(atoms[v]).or_insert(0) += 1;
                }
                let mut best = (0usize, usize::MAX);
                for (&atom, &c) in &counts {
                    if (c, std::cmp::Reverse(atom)) > (best.0, std::cmp::Reverse(best.1)) {
                        best = (c, atom);
                    }
                }
                best.1
            })
            .collect()
    });
    let mut out = TriMesh::from_parts(vertices, faces)?;
    out.vertex_atoms = vertex_atoms;
    Ok(out)
}

/// Decimate to roughly `target_faces` (within 0.8..1.2 of it) by bisecting
/// the clustering cell size. A target at or above the current count
/// returns the mesh unchanged.
pub fn decimate(mesh: &TriMesh, target_faces: usize) -> Result<DecimateOutcome> {
    if target_faces == 0 {
        return Err(Error::InvalidArgument("target face count must be positive".into()));
    }
    if target_faces >= mesh.faces.len() {
        return Ok(DecimateOutcome { mesh: mesh.clone(), reached: true, grid_size: 0.0 });
    }
    let band = (
        (0.8 * target_faces as f64).ceil() as usize,
        (1.2 * target_faces as f64).floor() as usize,
    );
    let mut lo = 1e-9_f64; // effectively no clustering
    let mut hi = mesh.bbox_diagonal().max(1e-6); // everything in few cells
    let mut best: Option<(usize, TriMesh, f64)> = None;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let candidate = cluster_decimate(mesh, mid)?;
        let count = candidate.faces.len();
        let gap = count.abs_diff(target_faces);
        if best.as_ref().map_or(true, |(g, _, _)| gap < *g) {
            best = Some((gap, candidate, mid));
        }
        if count > band.1 {
            lo = mid; // too many faces, coarsen
        } else if count < band.0 {
            hi = mid; // too few, refine
        } else {
            let (_, mesh, grid) = best.unwrap();
            return Ok(DecimateOutcome { mesh, reached: true, grid_size: grid });
        }
    }
    let (_, mesh, grid) = best.unwrap();
    Ok(DecimateOutcome { mesh, reached: false, grid_size: grid })
}
