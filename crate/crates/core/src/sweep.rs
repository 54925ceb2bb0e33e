//! Parallel sweep over a range of `b` with JSONL output and checkpoint/resume.
//!
//! Workers run [`verify_b`] on a rayon pool and hand finished records to a
//! single writer, which appends one complete line per record and then
//! rewrites the checkpoint by atomic rename. When the range is finished
//! the output is rewritten sorted by `b`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::report::{Record, SCHEMA_VERSION};
use crate::verifier::{verify_b, VerifyConfig};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid range {from}..={to}")]
    Range { from: u64, to: u64 },
    #[error("checkpoint {path} does not match this run: {what}")]
    Mismatch { path: PathBuf, what: String },
    #[error("unreadable checkpoint {path}: {source}")]
    BadCheckpoint { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub from: u64,
    pub to: u64,
    /// Worker threads; 0 means rayon's default.
    pub jobs: usize,
    pub out: PathBuf,
    /// Defaults to `<out>.ckpt.json`.
    pub checkpoint: Option<PathBuf>,
    pub config: VerifyConfig,
}

impl SweepOptions {
    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| {
            let mut s = self.out.as_os_str().to_owned();
            s.push(".ckpt.json");
            PathBuf::from(s)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: u32,
    pub from: u64,
    pub to: u64,
    pub fingerprint: String,
    pub out: PathBuf,
    pub completed: BTreeSet<u64>,
}

/// SHA-256 over every setting that can change a record.
pub fn config_fingerprint(config: &VerifyConfig) -> String {
    let fb = &config.factor_budget;
    let canon = format!(
        "schema={};initial_bits={};ceiling_bits={};factor_ms={};rho_steps={};seed={};scan_cap={}",
        SCHEMA_VERSION,
        config.policy.initial_bits,
        config.policy.ceiling_bits,
        fb.time_limit.map(|d| d.as_millis().to_string()).unwrap_or_else(|| "none".into()),
        fb.max_rho_steps,
        fb.seed,
        config.scan_cap,
    );
    hex::encode(Sha256::digest(canon.as_bytes()))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSummary {
    pub from: u64,
    pub to: u64,
    pub records: usize,
    /// Records computed in this invocation (the rest came from a resume).
    pub computed: usize,
    pub status_counts: BTreeMap<String, usize>,
    pub total_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub max_b: Option<u64>,
}

impl SweepSummary {
    fn count(&self, s: &str) -> usize {
        self.status_counts.get(s).copied().unwrap_or(0)
    }

    /// 2 if any pair was found, else 3 if anything is uncertified, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.count("pairs_found") > 0 {
            2
        } else if self.count("not_certified") > 0 {
            3
        } else {
            0
        }
    }

    pub fn line(&self) -> String {
        let counts: Vec<String> = ["unique_certified", "pairs_found", "not_certified"]
            .iter()
            .map(|s| format!("{s}={}", self.count(s)))
            .collect();
        let max_b = self.max_b.map(|b| format!(" (b={b})")).unwrap_or_default();
        format!(
            "sweep {}..={}: {} records ({} computed); {}; total {:.1} ms, mean {:.1} ms, max {:.1} ms{}",
            self.from,
            self.to,
            self.records,
            self.computed,
            counts.join(" "),
            self.total_ms,
            self.mean_ms,
            self.max_ms,
            max_b
        )
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SweepError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), SweepError> {
    let bytes = serde_json::to_vec_pretty(ck).expect("checkpoint serializes");
    write_atomic(path, &bytes)
}

pub fn load_checkpoint(path: &Path) -> Result<Option<Checkpoint>, SweepError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|source| SweepError::BadCheckpoint { path: path.to_path_buf(), source }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(SweepError::Io { path: path.to_path_buf(), source: e }),
    }
}

/// Reads complete records from a JSONL file, truncating a torn final line.
pub fn read_records(path: &Path) -> Result<Vec<Record>, SweepError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(SweepError::Io { path: path.to_path_buf(), source: e }),
    };
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut reader = BufReader::new(file);
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        if !buf.ends_with('\n') {
            break;
        }
        match serde_json::from_str::<Record>(buf.trim_end()) {
            Ok(r) => {
                records.push(r);
                good_len += n as u64;
            }
            Err(_) => break,
        }
    }
    let actual = fs::metadata(path).map_err(io_err(path))?.len();
    if actual != good_len {
        let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
        f.set_len(good_len).map_err(io_err(path))?;
    }
    Ok(records)
}

fn summarize(from: u64, to: u64, records: &[Record], computed: usize) -> SweepSummary {
    let mut s = SweepSummary { from, to, records: records.len(), computed, ..Default::default() };
    for r in records {
        *s.status_counts.entry(r.status.clone()).or_default() += 1;
        let t = r.timings_ms.total;
        s.total_ms += t;
        if s.max_b.is_none() || t > s.max_ms {
            s.max_ms = t;
            s.max_b = Some(r.b);
        }
    }
    if !records.is_empty() {
        s.mean_ms = s.total_ms / records.len() as f64;
    }
    s
}

/// Runs (or resumes) a sweep.
///
/// An existing checkpoint must carry the same range and fingerprint;
/// otherwise the sweep refuses to touch the output. Without a checkpoint
/// the output file is started afresh.
pub fn run_sweep(opts: &SweepOptions) -> Result<SweepSummary, SweepError> {
    let (from, to) = (opts.from, opts.to);
    if from == 0 || from > to {
        return Err(SweepError::Range { from, to });
    }
    let ck_path = opts.checkpoint_path();
    let fingerprint = config_fingerprint(&opts.config);

    let mut done: BTreeMap<u64, Record> = BTreeMap::new();
    let mut ck = match load_checkpoint(&ck_path)? {
        Some(mut ck) => {
            let mismatch = |what: String| SweepError::Mismatch { path: ck_path.clone(), what };
            if ck.schema != SCHEMA_VERSION {
                return Err(mismatch(format!("schema {} vs {}", ck.schema, SCHEMA_VERSION)));
            }
            if (ck.from, ck.to) != (from, to) {
                return Err(mismatch(format!("range {}..={} vs {from}..={to}", ck.from, ck.to)));
            }
            if ck.fingerprint != fingerprint {
                return Err(mismatch("configuration fingerprint differs".into()));
            }
            if ck.out != opts.out {
                return Err(mismatch(format!("output {} vs {}", ck.out.display(), opts.out.display())));
            }
            // the JSONL is authoritative: a record may land after the last checkpoint write
            for r in read_records(&opts.out)? {
                if (from..=to).contains(&r.b) {
                    done.insert(r.b, r);
                }
            }
            ck.completed = done.keys().copied().collect();
            ck
        }
        None => {
            File::create(&opts.out).map_err(io_err(&opts.out))?;
            Checkpoint {
                schema: SCHEMA_VERSION,
                from,
                to,
                fingerprint,
                out: opts.out.clone(),
                completed: BTreeSet::new(),
            }
        }
    };
    save_checkpoint(&ck_path, &ck)?;

    let pending: Vec<u64> = (from..=to).filter(|b| !done.contains_key(b)).collect();
    let computed = pending.len();
    if !pending.is_empty() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| SweepError::Pool(e.to_string()))?;
        let mut out = OpenOptions::new().append(true).open(&opts.out).map_err(io_err(&opts.out))?;
        let (tx, rx) = mpsc::channel::<Record>();
        let config = opts.config.clone();
        let result = std::thread::scope(|scope| -> Result<(), SweepError> {
            scope.spawn(move || {
                pool.install(|| {
                    pending.par_iter().for_each_with(tx, |tx, &b| {
                        let rec = Record::from_report(&verify_b(b, &config));
                        // a closed channel means the writer failed; nothing left to do
                        let _ = tx.send(rec);
                    });
                });
            });
            for rec in rx {
                let mut line = rec.to_json_line();
                line.push('\n');
                out.write_all(line.as_bytes()).map_err(io_err(&opts.out))?;
                out.flush().map_err(io_err(&opts.out))?;
                ck.completed.insert(rec.b);
                save_checkpoint(&ck_path, &ck)?;
                done.insert(rec.b, rec);
            }
            Ok(())
        });
        result?;
    }

    // finished: rewrite sorted so that output is independent of scheduling
    let records: Vec<Record> = done.into_values().collect();
    let mut body = String::new();
    for r in &records {
        body.push_str(&r.to_json_line());
        body.push('\n');
    }
    write_atomic(&opts.out, body.as_bytes())?;
    Ok(summarize(from, to, &records, computed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(dir: &Path, from: u64, to: u64, jobs: usize) -> SweepOptions {
        SweepOptions {
            from,
            to,
            jobs,
            out: dir.join("out.jsonl"),
            checkpoint: None,
            config: VerifyConfig::default(),
        }
    }

    #[test]
    fn small_sweep_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let o = opts(dir.path(), 1, 12, 2);
        let s = run_sweep(&o).unwrap();
        assert_eq!(s.records, 12);
        assert_eq!(s.exit_code(), 0);
        let recs = read_records(&o.out).unwrap();
        assert_eq!(recs.iter().map(|r| r.b).collect::<Vec<_>>(), (1..=12).collect::<Vec<_>>());
        let ck = load_checkpoint(&o.checkpoint_path()).unwrap().unwrap();
        assert_eq!(ck.completed.len(), 12);
        assert!(s.line().contains("unique_certified=12"));
    }

    #[test]
    fn resume_after_torn_write() {
        let dir = tempfile::tempdir().unwrap();
        let o = opts(dir.path(), 2, 9, 1);
        run_sweep(&o).unwrap();
        let full = fs::read_to_string(&o.out).unwrap();
        // keep three records plus half of the fourth
        let lines: Vec<&str> = full.lines().collect();
        let mut torn = lines[..3].join("\n");
        torn.push('\n');
        torn.push_str(&lines[3][..lines[3].len() / 2]);
        fs::write(&o.out, torn).unwrap();
        let s = run_sweep(&o).unwrap();
        assert_eq!(s.computed, 5);
        let strip = |t: &str| -> Vec<Record> {
            t.lines().map(|l| serde_json::from_str::<Record>(l).unwrap().without_timings()).collect()
        };
        let resumed = fs::read_to_string(&o.out).unwrap();
        assert_eq!(strip(&resumed), strip(&full));
    }

    #[test]
    fn mismatched_checkpoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = opts(dir.path(), 2, 4, 1);
        run_sweep(&o).unwrap();
        o.config.scan_cap = 5;
        assert!(matches!(run_sweep(&o), Err(SweepError::Mismatch { .. })));
        o.config.scan_cap = VerifyConfig::default().scan_cap;
        o.to = 5;
        assert!(matches!(run_sweep(&o), Err(SweepError::Mismatch { .. })));
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = VerifyConfig::default();
        let mut b = a.clone();
        assert_eq!(config_fingerprint(&a), config_fingerprint(&b));
        b.factor_budget.seed = 7;
        assert_ne!(config_fingerprint(&a), config_fingerprint(&b));
        assert_eq!(config_fingerprint(&a).len(), 64);
    }
}
