//! Synthetic structures for tests and demos: parametric meshes, peptide
//! chains built from internal coordinates, small-molecule MOL blocks, and
//! writers for the on-disk formats the parsers read.
//!
//! Everything here is deterministic given its arguments, so fixtures can
//! be regenerated inside tests instead of being committed as large files.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};

use crate::error::Result;
use crate::geom::place_from_internal;
use crate::mesh::TriMesh;
use crate::protein::{Atom, Chain, ProteinStructure, Residue};

// ---------------------------------------------------------------------------
// Meshes

/// Regular tetrahedron with edge length sqrt(8)/sqrt(3) * r, outward winding.
pub fn tetrahedron() -> TriMesh {
    let v = vec![
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(1.0, -1.0, -1.0),
        Point3::new(-1.0, 1.0, -1.0),
        Point3::new(-1.0, -1.0, 1.0),
    ];
    let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::from_parts(v, f).expect("tetrahedron is valid")
}

/// Icosphere: icosahedron subdivided `subdivisions` times, vertices on a
/// sphere of the given radius. 0 -> 12v/20f, 1 -> 42v/80f, 3 -> 642v/1280f.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut verts = vec![
        Point3::new(-1.0, phi, 0.0),
        Point3::new(1.0, phi, 0.0),
        Point3::new(-1.0, -phi, 0.0),
        Point3::new(1.0, -phi, 0.0),
        Point3::new(0.0, -1.0, phi),
        Point3::new(0.0, 1.0, phi),
        Point3::new(0.0, -1.0, -phi),
        Point3::new(0.0, 1.0, -phi),
        Point3::new(phi, 0.0, -1.0),
        Point3::new(phi, 0.0, 1.0),
        Point3::new(-phi, 0.0, -1.0),
        Point3::new(-phi, 0.0, 1.0),
    ];
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
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for (k, (a, b)) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])].into_iter().enumerate()
            {
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = Point3::from((verts[a].coords + verts[b].coords) / 2.0);
                    verts.push(m);
                    verts.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }
    for v in &mut verts {
        *v = Point3::from(v.coords.normalize() * radius);
    }
    TriMesh::from_parts(verts, faces).expect("icosphere is valid")
}

/// Flat grid in the xy-plane: (nx+1)*(ny+1) vertices, 2*nx*ny triangles.
pub fn planar_grid(nx: usize, ny: usize, spacing: f64) -> TriMesh {
    let mut verts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::from_parts(verts, faces).expect("grid is valid")
}

/// Grid bent into the saddle z = 0.5 (x^2 - y^2), centered on the origin.
pub fn saddle_grid(n: usize, spacing: f64) -> TriMesh {
    let mut mesh = planar_grid(n, n, spacing);
    let half = n as f64 * spacing / 2.0;
    let verts: Vec<Point3<f64>> = mesh
        .vertices
        .iter()
        .map(|p| {
            let x = p.x - half;
            let y = p.y - half;
            Point3::new(x, y, 0.5 * (x * x - y * y))
        })
        .collect();
    mesh = TriMesh::from_parts(verts, mesh.faces).expect("saddle is valid");
    mesh
}

/// Central vertex index of a `saddle_grid(n, ..)` or `planar_grid(n, n, ..)`
/// with even n.
pub fn grid_center(n: usize) -> usize {
    (n / 2) * (n + 1) + n / 2
}

/// Resample a polyline at roughly `step` spacing, keeping both endpoints.
pub fn resample_polyline(points: &[Point3<f64>], step: f64) -> Vec<Point3<f64>> {
    assert!(step > 0.0 && points.len() >= 2);
    let mut total = 0.0;
    for w in points.windows(2) {
        total += (w[1] - w[0]).norm();
    }
    let n = (total / step).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let target = total * k as f64 / n as f64;
        let mut acc = 0.0;
        let mut placed = false;
        for w in points.windows(2) {
            let seg = (w[1] - w[0]).norm();
            if acc + seg >= target - 1e-9 {
                let t = if seg == 0.0 { 0.0 } else { (target - acc) / seg };
                out.push(Point3::from(w[0].coords + (w[1] - w[0]) * t.clamp(0.0, 1.0)));
                placed = true;
                break;
            }
            acc += seg;
        }
        if !placed {
            out.push(*points.last().unwrap());
        }
    }
    out
}

/// Closed tube of the given radius around a polyline: a ring of
/// `ring_vertices` at every polyline point plus two cap poles. Frames are
/// parallel-transported along the curve so rings never flip.
pub fn tube_mesh(points: &[Point3<f64>], radius: f64, ring_vertices: usize) -> TriMesh {
    assert!(points.len() >= 2 && ring_vertices >= 3);
    let m = points.len();
    let tangent = |i: usize| -> Vector3<f64> {
        let a = if i == 0 { points[0] } else { points[i - 1] };
        let b = if i + 1 == m { points[m - 1] } else { points[i + 1] };
        let t = b - a;
        if t.norm() < 1e-12 { Vector3::new(0.0, 0.0, 1.0) } else { t.normalize() }
    };
    let t0 = tangent(0);
    // Seed normal: axis least aligned with the first tangent.
    let seed = if t0.x.abs() <= t0.y.abs() && t0.x.abs() <= t0.z.abs() {
        Vector3::new(1.0, 0.0, 0.0)
    } else if t0.y.abs() <= t0.z.abs() {
        Vector3::new(0.0, 1.0, 0.0)
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    };
    let mut normal = (seed - t0 * seed.dot(&t0)).normalize();
    let mut verts = Vec::with_capacity(m * ring_vertices + 2);
    for i in 0..m {
        let t = tangent(i);
        normal = (normal - t * normal.dot(&t)).normalize();
        let binormal = t.cross(&normal);
        for j in 0..ring_vertices {
            let theta = 2.0 * PI * j as f64 / ring_vertices as f64;
            verts.push(points[i] + (normal * theta.cos() + binormal * theta.sin()) * radius);
        }
    }
    let start_pole = verts.len();
    verts.push(points[0] - tangent(0) * radius);
    let end_pole = verts.len();
    verts.push(points[m - 1] + tangent(m - 1) * radius);

    let ring = |i: usize, j: usize| i * ring_vertices + j % ring_vertices;
    let mut faces = Vec::new();
    for i in 0..m - 1 {
        for j in 0..ring_vertices {
            // (tangent, normal, binormal) is right-handed, so this order
            // winds the quads outward.
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)]);
            faces.push([ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)]);
        }
    }
    for j in 0..ring_vertices {
        faces.push([start_pole, ring(0, j + 1), ring(0, j)]);
        faces.push([end_pole, ring(m - 1, j), ring(m - 1, j + 1)]);
    }
    TriMesh::from_parts(verts, faces).expect("tube is valid")
}

// ---------------------------------------------------------------------------
// Peptides

const LEN_N_CA: f64 = 1.458;
const LEN_CA_C: f64 = 1.525;
const LEN_C_N: f64 = 1.329;
const LEN_C_O: f64 = 1.231;
const ANG_C_N_CA: f64 = 121.7 * PI / 180.0;
const ANG_N_CA_C: f64 = 111.2 * PI / 180.0;
const ANG_CA_C_N: f64 = 116.2 * PI / 180.0;
const ANG_CA_C_O: f64 = 120.8 * PI / 180.0;

/// One residue request for the chain builder: three-letter code plus the
/// backbone torsions in degrees. phi of the first residue and psi of the
/// last are never used.
#[derive(Debug, Clone, Copy)]
pub struct ResidueSpec {
    pub code: &'static str,
    pub phi_deg: f64,
    pub psi_deg: f64,
}

pub fn helix_spec(code: &'static str) -> ResidueSpec {
    ResidueSpec { code, phi_deg: -57.0, psi_deg: -47.0 }
}

pub fn strand_spec(code: &'static str) -> ResidueSpec {
    ResidueSpec { code, phi_deg: -120.0, psi_deg: 130.0 }
}

pub fn coil_spec(code: &'static str) -> ResidueSpec {
    // phi falls in the helix window but psi in the strand window, so the
    // run heuristics never fire and the residue stays coil.
    ResidueSpec { code, phi_deg: -75.0, psi_deg: 150.0 }
}

/// Build one chain from ideal bond geometry and the requested torsions.
/// Atoms per residue: N, CA, C, O, and CB for everything except glycine.
pub fn build_chain(id: char, specs: &[ResidueSpec]) -> Chain {
    assert!(!specs.is_empty());
    let n0 = Point3::new(0.0, 0.0, 0.0);
    let ca0 = Point3::new(LEN_N_CA, 0.0, 0.0);
    let c0 = ca0
        + Vector3::new((PI - ANG_N_CA_C).cos(), (PI - ANG_N_CA_C).sin(), 0.0).normalize()
            * LEN_CA_C;

    let mut backbone: Vec<(Point3<f64>, Point3<f64>, Point3<f64>)> = vec![(n0, ca0, c0)];
    for i in 1..specs.len() {
        let (pn, pca, pc) = backbone[i - 1];
        let psi_prev = specs[i - 1].psi_deg.to_radians();
        let n = place_from_internal(&pn, &pca, &pc, LEN_C_N, ANG_CA_C_N, psi_prev);
        let ca = place_from_internal(&pca, &pc, &n, LEN_N_CA, ANG_C_N_CA, PI);
        let phi = specs[i].phi_deg.to_radians();
        let c = place_from_internal(&pc, &n, &ca, LEN_CA_C, ANG_N_CA_C, phi);
        backbone.push((n, ca, c));
    }

    let mut residues = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let (n, ca, c) = backbone[i];
        let psi = if i + 1 < specs.len() { spec.psi_deg.to_radians() } else { PI };
        let o = place_from_internal(&n, &ca, &c, LEN_C_O, ANG_CA_C_O, psi - PI);
        let mut atoms = vec![
            Atom { name: "N".into(), element: "N".into(), pos: n },
            Atom { name: "CA".into(), element: "C".into(), pos: ca },
            Atom { name: "C".into(), element: "C".into(), pos: c },
            Atom { name: "O".into(), element: "O".into(), pos: o },
        ];
        if spec.code != "GLY" {
            let b = ca - n;
            let cc = c - ca;
            let a = b.cross(&cc);
            let cb = ca + (-0.58273431 * a + 0.56802827 * b - 0.54067466 * cc);
            atoms.push(Atom { name: "CB".into(), element: "C".into(), pos: cb });
        }
        residues.push(Residue {
            name: spec.code.to_string(),
            seq_number: i as i32 + 1,
            insertion_code: None,
            atoms,
        });
    }
    Chain { id, residues }
}

/// Deterministic multi-chain protein. Chains are laid out side by side,
/// `gap` angstroms apart on the y axis.
pub fn build_protein(chains: &[(char, Vec<ResidueSpec>)], gap: f64) -> ProteinStructure {
    let mut out = ProteinStructure::default();
    for (k, (id, specs)) in chains.iter().enumerate() {
        let mut chain = build_chain(*id, specs);
        let shift = Vector3::new(0.0, gap * k as f64, 0.0);
        for r in &mut chain.residues {
            for a in &mut r.atoms {
                a.pos += shift;
            }
        }
        out.chains.push(chain);
    }
    out
}

/// Mostly-extended residue specs with short helix stretches, cycling a
/// varied 12-residue composition. `seed` rotates the composition.
pub fn varied_specs(n: usize, seed: u64) -> Vec<ResidueSpec> {
    const CODES: [&str; 12] = [
        "ALA", "ARG", "ASP", "GLY", "ILE", "LYS", "SER", "THR", "GLU", "PHE", "VAL", "LEU",
    ];
    (0..n)
        .map(|i| {
            let code = CODES[(i + seed as usize) % CODES.len()];
            // Blocks of 8 extended then 6 helix then 2 coil, so the
            // secondary structure heuristic sees all three classes.
            match i % 16 {
                0..=7 => strand_spec(code),
                8..=13 => helix_spec(code),
                _ => coil_spec(code),
            }
        })
        .collect()
}

/// Tube surface that follows each chain's CA trace. `step` controls ring
/// spacing; with ring_vertices = 10 and step 1.27 a residue owns about 30
/// surface vertices.
pub fn protein_tube_mesh(
    protein: &ProteinStructure,
    radius: f64,
    step: f64,
    ring_vertices: usize,
) -> TriMesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for chain in &protein.chains {
        let cas: Vec<Point3<f64>> =
            chain.residues.iter().filter_map(|r| r.ca().map(|a| a.pos)).collect();
        if cas.len() < 2 {
            continue;
        }
        let path = resample_polyline(&cas, step);
        let tube = tube_mesh(&path, radius, ring_vertices);
        let base = vertices.len();
        vertices.extend(tube.vertices);
        faces.extend(tube.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
    }
    TriMesh::from_parts(vertices, faces).expect("tube mesh is valid")
}

// ---------------------------------------------------------------------------
// Text writers

/// Fixed-column PDB v3 text for a structure (ATOM records, single model).
pub fn pdb_text(protein: &ProteinStructure) -> String {
    let mut out = String::new();
    let mut serial = 1usize;
    for chain in &protein.chains {
        for res in &chain.residues {
            for atom in &res.atoms {
                let name = if atom.element.len() == 1 && atom.name.len() <= 3 {
                    format!(" {:<3}", atom.name)
                } else {
                    format!("{:<4}", atom.name)
                };
                let icode = res.insertion_code.unwrap_or(' ');
                out.push_str(&format!(
                    "ATOM  {:>5} {}{}{:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}\n",
                    serial % 100000,
                    name,
                    ' ',
                    res.name,
                    chain.id,
                    res.seq_number,
                    icode,
                    atom.pos.x,
                    atom.pos.y,
                    atom.pos.z,
                    1.00,
                    0.00,
                    atom.element.to_uppercase(),
                ));
                serial += 1;
            }
        }
        out.push_str("TER\n");
    }
    out.push_str("END\n");
    out
}

/// OFF text for a mesh (vertex coordinates and triangle list).
pub fn off_text(mesh: &TriMesh) -> String {
    let mut out = String::from("OFF\n");
    out.push_str(&format!("{} {} 0\n", mesh.vertices.len(), mesh.faces.len()));
    for v in &mesh.vertices {
        out.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    out
}

fn mol_block(name: &str, atoms: &[(f64, f64, f64, &str)], bonds: &[(usize, usize, u8)], charges: &[(usize, i8)]) -> String {
    let mut out = format!("{name}\n  protograph\n\n");
    out.push_str(&format!("{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000\n", atoms.len(), bonds.len()));
    for &(x, y, z, sym) in atoms {
        out.push_str(&format!(
            "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0\n",
            x, y, z, sym
        ));
    }
    for &(a, b, t) in bonds {
        out.push_str(&format!("{:>3}{:>3}{:>3}  0\n", a, b, t));
    }
    for &(idx, q) in charges {
        out.push_str(&format!("M  CHG  1{:>4}{:>4}\n", idx, q));
    }
    out.push_str("M  END\n");
    out
}

/// Single heavy atom, no bonds.
pub fn methane_mol() -> String {
    mol_block("methane", &[(0.0, 0.0, 0.0, "C")], &[], &[])
}

/// Six aromatic carbons in a ring, six order-4 bonds.
pub fn benzene_mol() -> String {
    let mut atoms = Vec::new();
    for k in 0..6 {
        let th = PI / 3.0 * k as f64;
        atoms.push((1.39 * th.cos(), 1.39 * th.sin(), 0.0, "C"));
    }
    let bonds: Vec<(usize, usize, u8)> = (1..=6).map(|i| (i, i % 6 + 1, 4)).collect();
    mol_block("benzene", &atoms, &bonds, &[])
}

/// Acetylsalicylic acid, heavy atoms only: 13 atoms, 13 bonds.
pub fn aspirin_mol() -> String {
    let mut atoms: Vec<(f64, f64, f64, &str)> = Vec::new();
    for k in 0..6 {
        let th = PI / 3.0 * k as f64;
        atoms.push((1.39 * th.cos(), 1.39 * th.sin(), 0.0, "C")); // 1..6 ring
    }
    atoms.push((2.89, 0.0, 0.0, "C")); // 7  carboxyl C on C1
    atoms.push((3.59, 1.04, 0.3, "O")); // 8  carboxyl =O
    atoms.push((3.49, -1.16, -0.3, "O")); // 9  carboxyl -OH
    atoms.push((1.40, 2.41, 0.0, "O")); // 10 ester O on C2
    atoms.push((0.63, 3.55, 0.2, "C")); // 11 acetyl C
    atoms.push((-0.57, 3.52, 0.4, "O")); // 12 acetyl =O
    atoms.push((1.35, 4.85, 0.1, "C")); // 13 acetyl methyl
    let bonds = vec![
        (1, 2, 4),
        (2, 3, 4),
        (3, 4, 4),
        (4, 5, 4),
        (5, 6, 4),
        (6, 1, 4),
        (1, 7, 1),
        (7, 8, 2),
        (7, 9, 1),
        (2, 10, 1),
        (10, 11, 1),
        (11, 12, 2),
        (11, 13, 1),
    ];
    mol_block("aspirin", &atoms, &bonds, &[])
}

/// Ethanol heavy atoms: C-C-O.
pub fn ethanol_mol() -> String {
    mol_block(
        "ethanol",
        &[(0.0, 0.0, 0.0, "C"), (1.52, 0.0, 0.0, "C"), (2.15, 1.25, 0.0, "O")],
        &[(1, 2, 1), (2, 3, 1)],
        &[],
    )
}

/// Acetate anion: CH3-COO(-), with an M CHG record on one oxygen.
pub fn acetate_mol() -> String {
    mol_block(
        "acetate",
        &[
            (0.0, 0.0, 0.0, "C"),
            (1.50, 0.0, 0.0, "C"),
            (2.15, 1.05, 0.0, "O"),
            (2.10, -1.10, 0.0, "O"),
        ],
        &[(1, 2, 1), (2, 3, 2), (2, 4, 1)],
        &[(4, -1)],
    )
}

// ---------------------------------------------------------------------------
// Demo datasets on disk

/// One record of a synthetic protein-ligand dataset.
pub struct DemoComplex {
    pub id: String,
    pub n_residues: usize,
    pub composition_seed: u64,
    pub mol: String,
    pub target: f64,
    pub split: &'static str,
}

/// Write pdb/off/mol files plus an index CSV for the given complexes.
/// Returns the index path. Surfaces are CA-trace tubes.
pub fn write_demo_dataset(dir: &Path, complexes: &[DemoComplex]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut index = String::from("id,pdb,mesh,mol,target,split\n");
    for c in complexes {
        let specs = varied_specs(c.n_residues, c.composition_seed);
        let protein = build_protein(&[('A', specs)], 0.0);
        let mesh = protein_tube_mesh(&protein, 4.0, 1.3, 10);
        let pdb = dir.join(format!("{}.pdb", c.id));
        let off = dir.join(format!("{}.off", c.id));
        let mol = dir.join(format!("{}.mol", c.id));
        std::fs::write(&pdb, pdb_text(&protein))?;
        std::fs::write(&off, off_text(&mesh))?;
        std::fs::write(&mol, &c.mol)?;
        index.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.id,
            pdb.display(),
            off.display(),
            mol.display(),
            c.target,
            c.split
        ));
    }
    let index_path = dir.join("index.csv");
    std::fs::write(&index_path, index)?;
    Ok(index_path)
}
