//! Versioned graph files. A file always carries the full surface and
//! structure layers plus the vertex-to-residue cross edges; superpixel
//! segmentations are an optional block added after the fact. Readers
//! for coarser modes rebuild the mode-specific graph from this bundle.
//!
//! The stored checksum covers the canonical serialization of the data
//! block, so any edit to features or topology is caught on load.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::multiscale::{build_multiscale, BuildReport, MultiScaleGraph, MultiscaleOptions};
use crate::structure::StructureGraph;
use crate::superpixel::SuperpixelGraph;
use crate::surface::SurfaceGraph;

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// The on-disk unit: one protein, fully preprocessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBundle {
    pub protein_id: String,
    pub structure: StructureGraph,
    pub surface: SurfaceGraph,
    pub cross_edges: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub superpixels: Option<SuperpixelGraph>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    version: u32,
    checksum: String,
    #[serde(flatten)]
    bundle: GraphBundle,
}

fn checksum_of(bundle: &GraphBundle) -> String {
    let bytes = serde_json::to_vec(bundle).expect("graph bundles always serialize");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    format!("{:x}", hasher.finalize())
}

pub fn write_graph(bundle: &GraphBundle) -> Result<String> {
    if bundle.structure.nodes.is_empty() {
        return Err(Error::EmptyStructure(bundle.protein_id.clone()));
    }
    if bundle.surface.nodes.is_empty() {
        return Err(Error::EmptyLayer("surface"));
    }
    let file = GraphFile {
        version: GRAPH_SCHEMA_VERSION,
        checksum: checksum_of(bundle),
        bundle: bundle.clone(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn read_graph(text: &str) -> Result<GraphBundle> {
    let file: GraphFile = serde_json::from_str(text)?;
    if file.version != GRAPH_SCHEMA_VERSION {
        return Err(Error::SchemaVersionMismatch {
            expected: GRAPH_SCHEMA_VERSION,
            found: file.version,
        });
    }
    let computed = checksum_of(&file.bundle);
    if computed != file.checksum {
        return Err(Error::ChecksumMismatch { stored: file.checksum, computed });
    }
    Ok(file.bundle)
}

impl GraphBundle {
    /// Mode-specific assembly; superpixel and summary modes need the
    /// stored segmentation.
    pub fn to_multiscale(&self, opts: &MultiscaleOptions) -> Result<(MultiScaleGraph, BuildReport)> {
        build_multiscale(
            &self.surface,
            self.superpixels.as_ref(),
            &self.structure,
            None,
            opts,
        )
    }
}
