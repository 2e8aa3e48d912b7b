//! Surface layer: one node per mesh vertex with geometric and chemical
//! features, one graph edge per triangulation edge with 9 features.

use std::fmt;

use nalgebra::{Matrix2, Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{angle_between, SpatialGrid};
use crate::mesh::{topology, TriMesh};
use crate::protein::ProteinStructure;
use crate::tables;

pub const SURFACE_NODE_DIM: usize = 4;
pub const SURFACE_EDGE_DIM: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceNode {
    /// Global residue ordinal this vertex is anchored to.
    pub rid: usize,
    /// [shape index, hydropathy, charge, donor indicator].
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceEdge {
    pub a: usize,
    pub b: usize,
    /// [dihedral, inner angle per face (2), edge/perpendicular per face
    /// (2), perpendicular/edge per face (2), endpoint distance, angle
    /// between vertex normals]. Boundary edges duplicate the single
    /// face's slots.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGraph {
    pub nodes: Vec<SurfaceNode>,
    pub edges: Vec<SurfaceEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceWarning {
    /// Curvature fit was rank-deficient; shape index forced to 0.
    DegenerateNeighborhood { vertex: usize },
}

impl fmt::Display for SurfaceWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceWarning::DegenerateNeighborhood { vertex } => {
                write!(f, "vertex {vertex}: degenerate curvature neighborhood, shape index 0")
            }
        }
    }
}

/// Principal curvatures from a least-squares quadric fit over the
/// one-ring, expressed against the vertex normal. Returns the shape
/// index per vertex plus a flag marking rank-deficient fits (those get
/// index 0). Convention: a sphere with outward normals has index -1.
pub fn compute_shape_index(mesh: &TriMesh) -> (Vec<f64>, Vec<bool>) {
    let topo = topology(mesh);
    let mut values = vec![0.0; mesh.vertices.len()];
    let mut degenerate = vec![false; mesh.vertices.len()];

    for (i, p) in mesh.vertices.iter().enumerate() {
        let n = mesh.normals[i];
        let seed = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let e1 = (seed - n * seed.dot(&n)).normalize();
        let e2 = n.cross(&e1);

        let ring = &topo.neighbors[i];
        if ring.len() < 3 {
            degenerate[i] = true;
            continue;
        }
        // Fit w = a u^2 + b uv + c v^2 by normal equations.
        let mut m = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for &j in ring {
            let d = mesh.vertices[j] - p;
            let (u, v, w) = (d.dot(&e1), d.dot(&e2), d.dot(&n));
            let row = Vector3::new(u * u, u * v, v * v);
            m += row * row.transpose();
            rhs += row * w;
        }
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        if smax <= 0.0 || svd.singular_values.iter().filter(|&&s| s > smax * 1e-9).count() < 3 {
            degenerate[i] = true;
            continue;
        }
        let coeffs = svd.solve(&rhs, smax * 1e-9).expect("svd computed both bases");
        let (a, b, c) = (coeffs[0], coeffs[1], coeffs[2]);
        let hessian = Matrix2::new(2.0 * a, b, b, 2.0 * c);
        let mean = (hessian[(0, 0)] + hessian[(1, 1)]) / 2.0;
        let disc = ((hessian[(0, 0)] - hessian[(1, 1)]) / 2.0).hypot(hessian[(0, 1)]);
        let (k1, k2) = (mean + disc, mean - disc);

        values[i] = if k1 - k2 < 1e-8 {
            // Umbilic point: sphere-like or flat.
            if mean.abs() < 1e-8 {
                0.0
            } else {
                mean.signum()
            }
        } else {
            (2.0 / std::f64::consts::PI * ((k1 + k2) / (k1 - k2)).atan()).clamp(-1.0, 1.0)
        };
    }
    (values, degenerate)
}

fn face_normal_and_area(mesh: &TriMesh, f: usize) -> (Vector3<f64>, f64) {
    let [a, b, c] = mesh.faces[f];
    let cross = (mesh.vertices[b] - mesh.vertices[a]).cross(&(mesh.vertices[c] - mesh.vertices[a]));
    let area = cross.norm() / 2.0;
    (cross, area)
}

/// 9 features per unique mesh edge, in `unique_edges` order.
pub fn compute_mesh_edge_features(mesh: &TriMesh) -> Result<Vec<SurfaceEdge>> {
    for f in 0..mesh.faces.len() {
        if face_normal_and_area(mesh, f).1 < 1e-12 {
            return Err(Error::ZeroAreaFace { face: f });
        }
    }
    let topo = topology(mesh);
    let mut out = Vec::with_capacity(topo.edges.len());
    for (e, &(a, b)) in topo.edges.iter().enumerate() {
        let pa = mesh.vertices[a];
        let pb = mesh.vertices[b];
        let edge_len = (pb - pa).norm();

        // (inner angle at the opposite vertex, edge/perp, perp/edge) per face.
        let per_face: Vec<(f64, f64, f64)> = topo.edge_faces[e]
            .iter()
            .take(2)
            .map(|&f| {
                let c = mesh.faces[f].into_iter().find(|&v| v != a && v != b).unwrap();
                let pc = mesh.vertices[c];
                let inner = angle_between(&(pa - pc), &(pb - pc));
                let perp = 2.0 * face_normal_and_area(mesh, f).1 / edge_len;
                (inner, edge_len / perp, perp / edge_len)
            })
            .collect();
        let first = per_face[0];
        let second = *per_face.get(1).unwrap_or(&first);

        let dihedral = match topo.edge_faces[e].as_slice() {
            [f1, f2, ..] => {
                let n1 = face_normal_and_area(mesh, *f1).0;
                let n2 = face_normal_and_area(mesh, *f2).0;
                std::f64::consts::PI - angle_between(&n1, &n2)
            }
            _ => std::f64::consts::PI,
        };
        let normal_angle = angle_between(&mesh.normals[a], &mesh.normals[b]);

        out.push(SurfaceEdge {
            a,
            b,
            features: vec![
                dihedral, first.0, second.0, first.1, second.1, first.2, second.2, edge_len,
                normal_angle,
            ],
        });
    }
    Ok(out)
}

/// Per-vertex (residue ordinal, atom ordinal) anchors. Uses the mesh's
/// vertex->atom map when present, otherwise the nearest heavy atom;
/// distance ties resolve to the lower residue ordinal.
pub fn assign_vertex_anchors(mesh: &TriMesh, p: &ProteinStructure) -> Vec<(usize, usize)> {
    let all = p.all_atoms();
    assert!(!all.is_empty(), "protein has no atoms");

    if let Some(map) = &mesh.vertex_atoms {
        return map
            .iter()
            .map(|&atom| {
                let atom = atom.min(all.len() - 1);
                (all[atom].0, atom)
            })
            .collect();
    }

    let heavy: Vec<usize> = (0..all.len()).filter(|&i| all[i].1.is_heavy()).collect();
    let pool = if heavy.is_empty() { (0..all.len()).collect() } else { heavy };
    let centers: Vec<Point3<f64>> = pool.iter().map(|&i| all[i].1.pos).collect();
    let grid = SpatialGrid::build(&centers, 5.0);
    mesh.vertices
        .iter()
        .map(|v| {
            let (slot, _) = grid.nearest(v).unwrap();
            (all[pool[slot]].0, pool[slot])
        })
        .collect()
}

pub fn assign_residue_ids(mesh: &TriMesh, p: &ProteinStructure) -> Vec<usize> {
    assign_vertex_anchors(mesh, p).into_iter().map(|(rid, _)| rid).collect()
}

/// Chemical triple per vertex: hydropathy of the anchor residue in
/// [-1,1], sidechain charge, and 1.0 when the anchor atom is a donor
/// nitrogen or oxygen.
pub fn map_chemical_features(p: &ProteinStructure, anchors: &[(usize, usize)]) -> Vec<[f64; 3]> {
    let all = p.all_atoms();
    let names: Vec<&str> = p
        .residues()
        .map(|(_, r)| r.name.as_str())
        .collect();
    anchors
        .iter()
        .map(|&(rid, atom)| {
            let name = names[rid];
            let hydropathy = tables::hydropathy_raw(name).unwrap_or(0.0) / tables::HYDROPATHY_SCALE;
            let charge = tables::sidechain_charge(name);
            let donor = tables::is_donor_atom(name, &all[atom].1.name);
            [hydropathy, charge, if donor { 1.0 } else { 0.0 }]
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct SurfaceConfig {
    /// Per-vertex values replacing the charge column, e.g. precomputed
    /// electrostatics from a sidecar file. Indices outside the mesh are
    /// ignored.
    pub electrostatics: Option<Vec<(usize, f64)>>,
}

pub fn build_surface_graph(
    mesh: &TriMesh,
    p: &ProteinStructure,
    cfg: &SurfaceConfig,
) -> Result<(SurfaceGraph, Vec<SurfaceWarning>)> {
    let (shape, degenerate) = compute_shape_index(mesh);
    let anchors = assign_vertex_anchors(mesh, p);
    let chemistry = map_chemical_features(p, &anchors);

    let mut nodes: Vec<SurfaceNode> = (0..mesh.vertices.len())
        .map(|i| SurfaceNode {
            rid: anchors[i].0,
            features: vec![shape[i], chemistry[i][0], chemistry[i][1], chemistry[i][2]],
        })
        .collect();
    if let Some(overrides) = &cfg.electrostatics {
        for &(i, value) in overrides {
            if i < nodes.len() {
                nodes[i].features[2] = value;
            }
        }
    }
    let edges = compute_mesh_edge_features(mesh)?;
    let warnings = degenerate
        .iter()
        .enumerate()
        .filter(|(_, &d)| d)
        .map(|(vertex, _)| SurfaceWarning::DegenerateNeighborhood { vertex })
        .collect();
    Ok((SurfaceGraph { nodes, edges }, warnings))
}
