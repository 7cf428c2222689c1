//! Writing and reading generated sets as feature dumps plus provenance.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use super::{GeneratedSample, GeneratedTestSet, GenerationError, Region, Result};
use crate::featureset::{self, load_dataset, FeatureDataset, FeatureSetError, Sample};
use crate::vecmath::euclidean;

pub const PROVENANCE_FILE: &str = "provenance.csv";
pub const NEIGHBORS_FILE: &str = "neighbors.csv";

const PROVENANCE_HEADER: [&str; 6] = ["id", "seed_id", "region", "pair_class", "t", "verified"];

fn sample_id(i: usize) -> String {
    format!("gen-{i:06}")
}

/// The generated points as a plain dataset labeled by oracle labels.
pub fn to_feature_dataset(gen: &GeneratedTestSet) -> FeatureDataset {
    let mut ds = FeatureDataset::new(gen.name.clone(), gen.num_classes, gen.feature_dim);
    ds.samples = gen
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| Sample::new(sample_id(i), s.oracle_label, s.features.clone()))
        .collect();
    ds
}

/// For each generated point, the closest real sample in `reference`.
pub fn nearest_real_neighbors(
    gen: &GeneratedTestSet,
    reference: &FeatureDataset,
) -> Vec<(String, String, f64)> {
    gen.samples
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let (id, d) = reference
                .samples
                .iter()
                .map(|s| (&s.id, euclidean(&g.features, &s.features)))
                .fold((None, f64::INFINITY), |best, (id, d)| {
                    if d < best.1 {
                        (Some(id), d)
                    } else {
                        best
                    }
                });
            (sample_id(i), id.cloned().unwrap_or_default(), d)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvenanceRow {
    pub id: String,
    pub seed_id: String,
    pub region: Region,
    pub pair_class: Option<usize>,
    pub t: f64,
    pub verified: bool,
}

fn io_error(path: &Path, e: impl ToString) -> FeatureSetError {
    FeatureSetError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e.to_string()),
    }
}

/// Writes the dump, `provenance.csv`, and, when `reference` is given,
/// `neighbors.csv` (`id,nearest_id,distance`).
pub fn write_generated(
    gen: &GeneratedTestSet,
    dir: impl AsRef<Path>,
    reference: Option<&FeatureDataset>,
) -> Result<(), FeatureSetError> {
    let dir = dir.as_ref();
    featureset::write_dataset(&to_feature_dataset(gen), dir)?;

    let path = dir.join(PROVENANCE_FILE);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| io_error(&path, e))?;
    w.write_record(PROVENANCE_HEADER)
        .map_err(|e| io_error(&path, e))?;
    for (i, s) in gen.samples.iter().enumerate() {
        w.write_record([
            sample_id(i),
            s.seed_id.clone(),
            s.region.as_str().to_string(),
            s.pair_class.map(|c| c.to_string()).unwrap_or_default(),
            s.t.to_string(),
            s.verified.to_string(),
        ])
        .map_err(|e| io_error(&path, e))?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;

    let npath = dir.join(NEIGHBORS_FILE);
    if let Some(reference) = reference {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&npath)
            .map_err(|e| io_error(&npath, e))?;
        w.write_record(["id", "nearest_id", "distance"])
            .map_err(|e| io_error(&npath, e))?;
        for (id, nearest, d) in nearest_real_neighbors(gen, reference) {
            w.write_record([id, nearest, d.to_string()])
                .map_err(|e| io_error(&npath, e))?;
        }
        w.flush().map_err(|e| io_error(&npath, e))?;
    } else if npath.exists() {
        fs::remove_file(&npath).map_err(|e| io_error(&npath, e))?;
    }
    Ok(())
}

fn malformed(msg: impl Into<String>) -> GenerationError {
    GenerationError::Malformed(msg.into())
}

pub fn parse_provenance(bytes: &[u8]) -> Result<Vec<ProvenanceRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| malformed("provenance.csv: missing header"))?
        .map_err(|e| malformed(e.to_string()))?;
    if header.iter().ne(PROVENANCE_HEADER) {
        return Err(malformed("provenance.csv: unexpected header"));
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        if rec.len() != PROVENANCE_HEADER.len() {
            return Err(malformed("provenance.csv: wrong column count"));
        }
        let region = match &rec[2] {
            "centroid" => Region::Centroid,
            "boundary" => Region::Boundary,
            other => return Err(malformed(format!("unknown region `{other}`"))),
        };
        let pair_class = match &rec[3] {
            "" => None,
            v => Some(
                v.parse()
                    .map_err(|_| malformed(format!("bad pair_class `{v}`")))?,
            ),
        };
        if (region == Region::Centroid) != pair_class.is_none() {
            return Err(malformed(format!(
                "row {}: pair_class must be set exactly for boundary rows",
                &rec[0]
            )));
        }
        let t: f64 = rec[4]
            .parse()
            .map_err(|_| malformed(format!("bad t `{}`", &rec[4])))?;
        if !(0.0..=1.0).contains(&t) {
            return Err(malformed(format!("t = {t} outside [0, 1]")));
        }
        let verified = match &rec[5] {
            "true" => true,
            "false" => false,
            v => return Err(malformed(format!("bad verified flag `{v}`"))),
        };
        out.push(ProvenanceRow {
            id: rec[0].to_string(),
            seed_id: rec[1].to_string(),
            region,
            pair_class,
            t,
            verified,
        });
    }
    Ok(out)
}

/// Reads a directory written by [`write_generated`].
pub fn load_generated(
    dir: impl AsRef<Path>,
) -> std::result::Result<(FeatureDataset, Vec<GeneratedSample>), LoadGeneratedError> {
    let dir = dir.as_ref();
    let ds = load_dataset(dir)?;
    let path = dir.join(PROVENANCE_FILE);
    let bytes = fs::read(&path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            FeatureSetError::MissingFile(path.clone())
        } else {
            FeatureSetError::Io {
                path: path.clone(),
                source: e,
            }
        }
    })?;
    let rows = parse_provenance(&bytes)?;
    let by_id: HashMap<&str, &ProvenanceRow> = rows.iter().map(|r| (r.id.as_str(), r)).collect();
    if by_id.len() != ds.len() || rows.len() != ds.len() {
        return Err(malformed("provenance rows do not match samples").into());
    }
    let samples = ds
        .samples
        .iter()
        .map(|s| {
            let row = by_id
                .get(s.id.as_str())
                .ok_or_else(|| malformed(format!("no provenance for {}", s.id)))?;
            Ok(GeneratedSample {
                features: s.features.clone(),
                oracle_label: s.label,
                region: row.region,
                seed_id: row.seed_id.clone(),
                pair_class: row.pair_class,
                t: row.t,
                verified: row.verified,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ds, samples))
}

#[derive(Debug, thiserror::Error)]
pub enum LoadGeneratedError {
    #[error(transparent)]
    Dataset(#[from] FeatureSetError),
    #[error(transparent)]
    Provenance(#[from] GenerationError),
}
