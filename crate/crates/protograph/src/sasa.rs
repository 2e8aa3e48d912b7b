//! Solvent accessible surface area by the Shrake-Rupley point method.
//! The sample sphere is a deterministic golden spiral, no RNG involved.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geom::SpatialGrid;
use crate::protein::ProteinStructure;
use crate::tables;

pub const DEFAULT_PROBE: f64 = 1.4;
pub const DEFAULT_SPHERE_POINTS: usize = 92;

/// n points on the unit sphere, spiralled by the golden angle. The y
/// coordinates pair as +/-, which keeps mirror symmetry along y exact.
pub fn sphere_points(n: usize) -> Vec<Vector3<f64>> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let phi = golden_angle * i as f64;
            Vector3::new(r * phi.cos(), y, r * phi.sin())
        })
        .collect()
}

/// Per-atom accessible area for spheres of the given van der Waals radii.
pub fn atom_sasa(centers: &[Point3<f64>], radii: &[f64], probe: f64, n_points: usize) -> Vec<f64> {
    assert_eq!(centers.len(), radii.len());
    assert!(probe >= 0.0, "probe radius must be nonnegative");
    assert!(n_points >= 32, "need at least 32 sphere points");
    if centers.is_empty() {
        return Vec::new();
    }
    let points = sphere_points(n_points);
    let max_extended = radii.iter().fold(0.0f64, |a, &r| a.max(r + probe));
    let grid = SpatialGrid::build(centers, (2.0 * max_extended).max(1.0));

    centers
        .iter()
        .zip(radii)
        .enumerate()
        .map(|(i, (c, &r))| {
            let extended = r + probe;
            let occluders: Vec<usize> = grid
                .within(c, extended + max_extended)
                .into_iter()
                .filter(|&j| j != i)
                .collect();
            let exposed = points
                .iter()
                .filter(|s| {
                    let p = c + *s * extended;
                    occluders.iter().all(|&j| {
                        (p - centers[j]).norm() >= radii[j] + probe
                    })
                })
                .count();
            4.0 * std::f64::consts::PI * extended * extended * exposed as f64 / n_points as f64
        })
        .collect()
}

/// Residue-level SASA, indexed by global residue ordinal. Every atom's
/// element must have a tabulated radius.
pub fn compute_sasa(p: &ProteinStructure, probe: f64, n_points: usize) -> Result<Vec<f64>> {
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    let mut owner = Vec::new();
    let mut n_residues = 0;
    for (rid, residue) in p.residues() {
        n_residues = n_residues.max(rid + 1);
        for atom in &residue.atoms {
            let r = tables::vdw_radius(&atom.element)
                .ok_or_else(|| Error::UnknownVdwRadius(atom.element.clone()))?;
            centers.push(atom.pos);
            radii.push(r);
            owner.push(rid);
        }
    }
    let per_atom = atom_sasa(&centers, &radii, probe, n_points);
    let mut per_residue = vec![0.0; n_residues];
    for (area, &rid) in per_atom.iter().zip(&owner) {
        per_residue[rid] += area;
    }
    Ok(per_residue)
}
