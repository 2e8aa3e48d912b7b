//! Dataset index CSV: one row per complex with file paths, a numeric
//! target, and an optional split tag. Bad rows are rejected with a
//! reason, not silently dropped; duplicate ids fail the whole load.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const INDEX_COLUMNS: [&str; 6] = ["id", "pdb", "mesh", "mol", "target", "split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Val,
    Test,
    None,
}

impl FromStr for SplitTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(SplitTag::Train),
            "val" => Ok(SplitTag::Val),
            "test" => Ok(SplitTag::Test),
            "" | "none" => Ok(SplitTag::None),
            other => Err(format!("unknown split tag {other:?}")),
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
            SplitTag::None => "none",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub id: String,
    pub pdb: PathBuf,
    pub mesh: Option<PathBuf>,
    pub mol: Option<PathBuf>,
    pub target: Option<f64>,
    pub split: SplitTag,
}

/// A row that failed validation, with the 1-based CSV line it came from.
#[derive(Debug, Clone)]
pub struct Rejection {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct DatasetIndex {
    pub records: Vec<DatasetRecord>,
    pub rejections: Vec<Rejection>,
}

/// Relative paths in the index resolve against the CSV's directory.
fn resolve(base: &Path, cell: &str) -> PathBuf {
    let p = Path::new(cell);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_dataset_index(path: &Path) -> Result<DatasetIndex> {
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;

    let headers = reader.headers()?.clone();
    let mut col = [0usize; 6];
    for (slot, name) in INDEX_COLUMNS.iter().enumerate() {
        col[slot] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::MissingColumn((*name).to_string()))?;
    }

    let mut index = DatasetIndex::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (row_no, row) in reader.records().enumerate() {
        let line = row_no + 2;
        let row = row?;
        let cell = |slot: usize| row.get(col[slot]).unwrap_or("").to_string();
        let id = cell(0);
        if id.is_empty() {
            index.rejections.push(Rejection { line, id, reason: "empty id".into() });
            continue;
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }

        let reject = |reason: String| Rejection { line, id: id.clone(), reason };

        let pdb_cell = cell(1);
        if pdb_cell.is_empty() {
            index.rejections.push(reject("missing pdb path".into()));
            continue;
        }
        let pdb = resolve(&base, &pdb_cell);
        let mesh = Some(cell(2)).filter(|c| !c.is_empty()).map(|c| resolve(&base, &c));
        let mol = Some(cell(3)).filter(|c| !c.is_empty()).map(|c| resolve(&base, &c));

        if let Some(missing) = [Some(&pdb), mesh.as_ref(), mol.as_ref()]
            .into_iter()
            .flatten()
            .find(|p| !p.exists())
        {
            index.rejections.push(reject(format!("file not found: {}", missing.display())));
            continue;
        }

        let target_cell = cell(4);
        let target = if target_cell.is_empty() {
            None
        } else {
            match target_cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => {
                    index.rejections.push(reject(format!("bad target {target_cell:?}")));
                    continue;
                }
            }
        };

        let split = match cell(5).parse::<SplitTag>() {
            Ok(tag) => tag,
            Err(reason) => {
                index.rejections.push(reject(reason));
                continue;
            }
        };

        index.records.push(DatasetRecord { id, pdb, mesh, mol, target, split });
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_records_with_split_tags() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.pdb", "x");
        write(dir.path(), "a.off", "x");
        write(dir.path(), "a.mol", "x");
        let index = write(
            dir.path(),
            "index.csv",
            "id,pdb,mesh,mol,target,split\n\
             c1,a.pdb,a.off,a.mol,5.25,train\n\
             c2,a.pdb,a.off,,6.0,val\n\
             c3,a.pdb,,,2,test\n\
             c4,a.pdb,a.off,a.mol,,\n",
        );
        let idx = load_dataset_index(&index).unwrap();
        assert_eq!(idx.records.len(), 4);
        assert!(idx.rejections.is_empty());
        assert_eq!(idx.records[0].split, SplitTag::Train);
        assert_eq!(idx.records[0].target, Some(5.25));
        assert!(idx.records[1].mol.is_none());
        assert_eq!(idx.records[2].split, SplitTag::Test);
        assert_eq!(idx.records[3].split, SplitTag::None);
        assert_eq!(idx.records[3].target, None);
    }

    #[test]
    fn zero_rows_with_valid_header_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let index = write(dir.path(), "index.csv", "id,pdb,mesh,mol,target,split\n");
        let idx = load_dataset_index(&index).unwrap();
        assert!(idx.records.is_empty());
        assert!(idx.rejections.is_empty());
    }

    #[test]
    fn missing_column_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let index = write(dir.path(), "index.csv", "id,pdb,mesh,target,split\nc1,a,b,1,train\n");
        assert!(matches!(
            load_dataset_index(&index).unwrap_err(),
            Error::MissingColumn(c) if c == "mol"
        ));
    }

    #[test]
    fn duplicate_id_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.pdb", "x");
        let index = write(
            dir.path(),
            "index.csv",
            "id,pdb,mesh,mol,target,split\nc1,a.pdb,,,1,train\nc1,a.pdb,,,2,val\n",
        );
        assert!(matches!(
            load_dataset_index(&index).unwrap_err(),
            Error::DuplicateId(id) if id == "c1"
        ));
    }

    #[test]
    fn bad_rows_land_in_the_rejection_report() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.pdb", "x");
        let index = write(
            dir.path(),
            "index.csv",
            "id,pdb,mesh,mol,target,split\n\
             c1,missing.pdb,,,1,train\n\
             c2,a.pdb,,,abc,train\n\
             c3,a.pdb,,,1,holdout\n\
             c4,a.pdb,,,1,train\n",
        );
        let idx = load_dataset_index(&index).unwrap();
        assert_eq!(idx.records.len(), 1);
        assert_eq!(idx.records[0].id, "c4");
        assert_eq!(idx.rejections.len(), 3);
        assert_eq!(idx.rejections[0].line, 2);
        assert!(idx.rejections[0].reason.contains("not found"));
        assert!(idx.rejections[1].reason.contains("bad target"));
        assert!(idx.rejections[2].reason.contains("holdout"));
    }

    #[test]
    fn demo_dataset_loads_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let complexes = vec![
            crate::synth::DemoComplex {
                id: "d1".into(),
                n_residues: 8,
                composition_seed: 1,
                mol: crate::synth::ethanol_mol(),
                target: 4.5,
                split: "train",
            },
            crate::synth::DemoComplex {
                id: "d2".into(),
                n_residues: 9,
                composition_seed: 2,
                mol: crate::synth::benzene_mol(),
                target: 6.1,
                split: "test",
            },
        ];
        let index = crate::synth::write_demo_dataset(dir.path(), &complexes).unwrap();
        let idx = load_dataset_index(&index).unwrap();
        assert_eq!(idx.records.len(), 2);
        assert!(idx.rejections.is_empty());
        assert!(idx.records.iter().all(|r| r.mesh.is_some() && r.mol.is_some()));
    }
}
