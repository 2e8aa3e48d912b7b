//! Readers and writers for the on-disk formats: PDB structures, OFF
//! meshes, MOL ligands, dataset index CSVs, sidecar annotations, and the
//! versioned graph JSON.

pub mod dataset;
pub mod graph_json;
pub mod mol;
pub mod off;
pub mod pdb;
pub mod sidecar;

pub use dataset::{load_dataset_index, DatasetIndex, DatasetRecord};
pub use graph_json::{read_graph, write_graph, GraphBundle};
pub use mol::{parse_mol, LigandRaw};
pub use off::parse_mesh;
pub use pdb::parse_pdb;
