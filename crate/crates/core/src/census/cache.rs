//! Append-only JSON Lines cache of per-field D4 hits. A line records every
//! raw D4 hit of one field up to a bound Y under one spec (by hash); a
//! line with a larger Y also answers smaller requests.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::localalg::InfType;
use crate::Error;

use super::FieldHit;

#[derive(Serialize, Deserialize)]
struct Line {
    d_k: i64,
    spec: String,
    y: u64,
    /// [N_rel, D_flip, inf]
    hits: Vec<(u64, i64, String)>,
}

pub struct HitCache {
    path: PathBuf,
    entries: Mutex<HashMap<(i64, String), (u64, Vec<FieldHit>)>>,
    pub skipped_lines: usize,
}

impl HitCache {
    pub const FILE: &'static str = "d4hits.jsonl";

    /// Open (creating the directory if needed) and load every valid line.
    /// Corrupt lines are reported on stderr and skipped.
    pub fn open(dir: &Path) -> Result<HitCache, Error> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::InvalidInput(format!("cache dir {}: {e}", dir.display())))?;
        let path = dir.join(Self::FILE);
        let mut entries: HashMap<(i64, String), (u64, Vec<FieldHit>)> = HashMap::new();
        let mut skipped = 0;
        if path.exists() {
            let file = File::open(&path)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let parsed = line
                    .map_err(|e| e.to_string())
                    .and_then(|l| serde_json::from_str::<Line>(&l).map_err(|e| e.to_string()))
                    .and_then(|l| decode(&l).map(|h| (l, h)));
                match parsed {
                    Ok((l, hits)) => {
                        let key = (l.d_k, l.spec);
                        if entries.get(&key).is_none_or(|(y, _)| *y < l.y) {
                            entries.insert(key, (l.y, hits));
                        }
                    }
                    Err(e) => {
                        eprintln!(
                            "warning: {}:{}: skipping corrupt cache line ({e})",
                            path.display(),
                            i + 1
                        );
                        skipped += 1;
                    }
                }
            }
        }
        Ok(HitCache {
            path,
            entries: Mutex::new(entries),
            skipped_lines: skipped,
        })
    }

    /// Hits of D with N_rel <= y, if a covering line exists.
    pub fn get(&self, d_k: i64, spec: &str, y: u64) -> Option<Vec<FieldHit>> {
        let map = self.entries.lock().unwrap();
        let (cy, hits) = map.get(&(d_k, spec.to_string()))?;
        if *cy < y {
            return None;
        }
        Some(hits.iter().filter(|h| h.n_rel <= y).copied().collect())
    }

    pub fn put(&self, d_k: i64, spec: &str, y: u64, hits: &[FieldHit]) -> Result<(), Error> {
        let mut map = self.entries.lock().unwrap();
        let key = (d_k, spec.to_string());
        if map.get(&key).is_some_and(|(cy, _)| *cy >= y) {
            return Ok(());
        }
        let line = Line {
            d_k,
            spec: spec.to_string(),
            y,
            hits: hits
                .iter()
                .map(|h| (h.n_rel, h.d_flip, h.inf.name().to_string()))
                .collect(),
        };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", self.path.display())))?;
        writeln!(
            f,
            "{}",
            serde_json::to_string(&line).expect("cache line serializes")
        )
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", self.path.display())))?;
        map.insert(key, (y, hits.to_vec()));
        Ok(())
    }
}

fn decode(l: &Line) -> Result<Vec<FieldHit>, String> {
    l.hits
        .iter()
        .map(|(n, f, i)| {
            let inf = InfType::parse(i).ok_or_else(|| format!("unknown infinite type {i:?}"))?;
            Ok(FieldHit {
                d_k: l.d_k,
                n_rel: *n,
                d_flip: *f,
                inf,
            })
        })
        .collect()
}
