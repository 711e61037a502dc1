//! Box enumeration of coefficient triples, bucketed by the obstruction
//! pipeline and the square class of theta.
//!
//! A run at height T visits every (a0, a1, a2) with 0 < |a_i| <= T, raw and
//! undeduplicated: fourth-power rescalings count as often as they occur in
//! the box, which is the measure the asymptotics are stated in. Work is
//! split into slabs of fixed a0, merged in slab order so the result is
//! independent of the thread count. Each triple is tallied against
//! h = max |a_i|, so a single pass at the largest height yields the report
//! for every smaller height by prefix sums; that is what `count_grid`
//! exposes and what the exponent fit consumes.
//!
//! Undecided triples are split by cause. Square theta and the deliberately
//! conservative demotion of exceptional classes are expected and harmless;
//! anything else means the local machinery gave up, and too much of that
//! poisons the statistics, so those triples are sampled, counted against a
//! flood threshold, and can abort the run.

use crate::arith::SquareClass;
use crate::brauer::{
    has_bm_obstruction_with, ObstructionStatus, PipelineConfig, REASON_EXTRA_CLASSES,
    REASON_THETA_SQUARE,
};
use crate::local::CoefficientTriple;
use num_rational::Ratio;
use serde::Serialize;
use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CountError {
    #[error("m-exponent is defined only away from square theta")]
    ClassUnsupported,
    #[error("exponent fit needs at least 4 strictly increasing heights >= 2 with nonzero counts")]
    DegenerateGrid,
    #[error("count heights must be nonempty, strictly increasing, and at least 1")]
    BadGrid,
    #[error("checkpoint does not match this run: {0}")]
    CheckpointMismatch(String),
    #[error("undecided flood: local machinery gave up on {0:?} (and possibly more)")]
    UndecidedFlood(Vec<[i64; 3]>),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn square_class(theta: i128) -> SquareClass {
    SquareClass::of(theta)
}

/// Exponent of the log factor in the partial-sum growth, by square class.
pub fn m_exponent(class: SquareClass) -> Result<Ratio<i64>, CountError> {
    match class {
        SquareClass::MinusSquare => Ok(Ratio::new(1, 2)),
        SquareClass::NonSquare => Ok(Ratio::new(3, 8)),
        SquareClass::PlusSquare => Err(CountError::ClassUnsupported),
    }
}

/// Smallest odd prime dividing theta exactly once, if any. Since theta is
/// the coefficient product up to sign, valuation 1 forces the prime to
/// divide exactly one coefficient exactly once, which is the hypothesis
/// under which the surface never carries an obstruction from the algebra.
pub fn prefilter(a: &CoefficientTriple) -> Option<u128> {
    a.factored_theta()
        .factors
        .iter()
        .filter(|&&(p, e)| p != 2 && e == 1)
        .map(|&(p, _)| p)
        .min()
}

#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub t: u64,
    pub n_total: u64,
    pub n_els: u64,
    pub n_obstructed_minus_square: u64,
    pub n_obstructed_nonsquare: u64,
    pub n_undecided_plus_square: u64,
    pub n_undecided_other: u64,
    pub n_no_obstruction: u64,
    /// Wall clock of the producing run, not reproducible and therefore kept
    /// out of the CSV.
    pub wall_time: f64,
    /// True when undecided triples not explained by square theta or the
    /// exceptional-class demotion exceed the flood threshold of the
    /// everywhere-locally-soluble population.
    pub tainted: bool,
    /// Up to 16 of the triples behind `tainted`, for diagnosis.
    pub undecided_samples: Vec<[i64; 3]>,
}

impl CountReport {
    pub fn csv_header() -> &'static str {
        "T,n_total,n_els,n_obs_minus_square,n_obs_nonsquare,n_undecided_plus_square,n_undecided_other,n_no_obstruction,seconds"
    }

    /// The seconds column is pinned to 0 so that reruns of the same
    /// configuration produce byte-identical files.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},0",
            self.t,
            self.n_total,
            self.n_els,
            self.n_obstructed_minus_square,
            self.n_obstructed_nonsquare,
            self.n_undecided_plus_square,
            self.n_undecided_other,
            self.n_no_obstruction
        )
    }
}

#[derive(Debug, Clone)]
pub struct CountConfig {
    /// 0 lets the pool pick its own width; any value yields the same output.
    pub threads: usize,
    pub pipeline: PipelineConfig,
    pub checkpoint_path: Option<PathBuf>,
    /// Slabs per parallel chunk; a checkpoint is committed after each chunk.
    pub checkpoint_every_slabs: u64,
    /// One decision record per obstructed triple, appended at each commit.
    pub jsonl_path: Option<PathBuf>,
    pub flood_threshold: f64,
    pub abort_on_flood: bool,
    /// Pause hook for exercising resume: stop once this many slabs are done.
    pub stop_after_slabs: Option<u64>,
}

impl Default for CountConfig {
    fn default() -> CountConfig {
        CountConfig {
            threads: 0,
            pipeline: PipelineConfig::default(),
            checkpoint_path: None,
            checkpoint_every_slabs: 16,
            jsonl_path: None,
            flood_threshold: 1e-3,
            abort_on_flood: false,
            stop_after_slabs: None,
        }
    }
}

#[derive(Debug)]
pub enum CountProgress {
    Complete(Vec<CountReport>),
    Paused { completed_slabs: u64 },
}

const SAMPLE_CAP: usize = 16;
const FLOOD_FLOOR: u64 = 8;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct Buckets {
    not_els: u64,
    obs_minus: u64,
    obs_non: u64,
    und_plus: u64,
    und_other: u64,
    no_obs: u64,
    /// Sub-tally of und_plus/und_other: undecided for machinery reasons.
    machinery: u64,
}

impl Buckets {
    fn absorb(&mut self, o: &Buckets) {
        self.not_els += o.not_els;
        self.obs_minus += o.obs_minus;
        self.obs_non += o.obs_non;
        self.und_plus += o.und_plus;
        self.und_other += o.und_other;
        self.no_obs += o.no_obs;
        self.machinery += o.machinery;
    }

    fn partition_total(&self) -> u64 {
        self.not_els + self.obs_minus + self.obs_non + self.und_plus + self.und_other + self.no_obs
    }
}

struct SlabOut {
    hist: Vec<Buckets>,
    samples: Vec<[i64; 3]>,
    rows: Vec<String>,
}

fn run_slab(idx: u64, tmax: u64, pipe: &PipelineConfig) -> SlabOut {
    let t = tmax as i64;
    let a0 = if idx < tmax {
        idx as i64 - t
    } else {
        idx as i64 - t + 1
    };
    let mut out = SlabOut {
        hist: vec![Buckets::default(); tmax as usize + 1],
        samples: Vec::new(),
        rows: Vec::new(),
    };
    for a1 in -t..=t {
        if a1 == 0 {
            continue;
        }
        for a2 in -t..=t {
            if a2 == 0 {
                continue;
            }
            let a = CoefficientTriple::new([a0, a1, a2]).expect("coordinates are nonzero");
            let d = has_bm_obstruction_with(&a, pipe);
            let h = a0.unsigned_abs().max(a1.unsigned_abs()).max(a2.unsigned_abs()) as usize;
            let b = &mut out.hist[h];
            match d.status {
                ObstructionStatus::NotEverywhereLocallySoluble => b.not_els += 1,
                ObstructionStatus::NoObstructionFromA => b.no_obs += 1,
                ObstructionStatus::ObstructionFromA => {
                    match a.theta_class() {
                        SquareClass::MinusSquare => b.obs_minus += 1,
                        SquareClass::NonSquare => b.obs_non += 1,
                        SquareClass::PlusSquare => {
                            unreachable!("square theta is answered before classification")
                        }
                    }
                    out.rows.push(d.to_json(&a).to_string());
                }
                ObstructionStatus::UndecidedByA => {
                    if a.theta_class() == SquareClass::PlusSquare {
                        b.und_plus += 1;
                    } else {
                        b.und_other += 1;
                    }
                    if d.reason != REASON_THETA_SQUARE && d.reason != REASON_EXTRA_CLASSES {
                        b.machinery += 1;
                        if out.samples.len() < SAMPLE_CAP {
                            out.samples.push([a0, a1, a2]);
                        }
                    }
                }
            }
        }
    }
    out
}

fn config_hash(ts: &[u64], cfg: &CountConfig) -> u64 {
    let mut h = DefaultHasher::new();
    ts.hash(&mut h);
    cfg.pipeline.skip_prefilter.hash(&mut h);
    cfg.pipeline.skip_exceptional_guard.hash(&mut h);
    cfg.pipeline.quadric_height_cap.hash(&mut h);
    cfg.pipeline.max_point_retries.hash(&mut h);
    cfg.pipeline.tree_node_budget.hash(&mut h);
    cfg.flood_threshold.to_bits().hash(&mut h);
    h.finish()
}

struct RunState {
    completed_slabs: u64,
    hist: Vec<Buckets>,
    samples: Vec<[i64; 3]>,
    jsonl_len: u64,
}

fn write_checkpoint(path: &Path, hash: u64, tmax: u64, st: &RunState) -> Result<(), CountError> {
    let mut body = String::new();
    body.push_str("dp2-count v1\n");
    body.push_str(&format!("hash {hash}\n"));
    body.push_str(&format!("tmax {tmax}\n"));
    body.push_str(&format!("slabs {}\n", st.completed_slabs));
    body.push_str(&format!("jsonl {}\n", st.jsonl_len));
    for (h, b) in st.hist.iter().enumerate() {
        if *b == Buckets::default() {
            continue;
        }
        body.push_str(&format!(
            "h {h} {} {} {} {} {} {} {}\n",
            b.not_els, b.obs_minus, b.obs_non, b.und_plus, b.und_other, b.no_obs, b.machinery
        ));
    }
    for s in &st.samples {
        body.push_str(&format!("s {} {} {}\n", s[0], s[1], s[2]));
    }
    body.push_str("end\n");
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn load_checkpoint(path: &Path, hash: u64, tmax: u64) -> Result<Option<RunState>, CountError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let bad = |why: &str| CountError::CheckpointMismatch(format!("{}: {why}", path.display()));
    let mut st = RunState {
        completed_slabs: 0,
        hist: vec![Buckets::default(); tmax as usize + 1],
        samples: Vec::new(),
        jsonl_len: 0,
    };
    let mut lines = text.lines();
    if lines.next() != Some("dp2-count v1") {
        return Err(bad("unknown header"));
    }
    let mut ended = false;
    for line in lines {
        let mut w = line.split_whitespace();
        match w.next() {
            Some("hash") => {
                if w.next() != Some(hash.to_string().as_str()) {
                    return Err(bad("different configuration"));
                }
            }
            Some("tmax") => {
                if w.next() != Some(tmax.to_string().as_str()) {
                    return Err(bad("different height"));
                }
            }
            Some("slabs") => {
                st.completed_slabs = w
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("bad slab count"))?;
            }
            Some("jsonl") => {
                st.jsonl_len = w
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("bad jsonl length"))?;
            }
            Some("h") => {
                let mut f = || -> Result<u64, CountError> {
                    w.next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("bad histogram line"))
                };
                let h = f()? as usize;
                if h > tmax as usize {
                    return Err(bad("histogram height out of range"));
                }
                st.hist[h] = Buckets {
                    not_els: f()?,
                    obs_minus: f()?,
                    obs_non: f()?,
                    und_plus: f()?,
                    und_other: f()?,
                    no_obs: f()?,
                    machinery: f()?,
                };
            }
            Some("s") => {
                let mut f = || -> Result<i64, CountError> {
                    w.next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("bad sample line"))
                };
                st.samples.push([f()?, f()?, f()?]);
            }
            Some("end") => ended = true,
            _ => return Err(bad("unknown line")),
        }
    }
    if !ended {
        return Err(bad("truncated"));
    }
    Ok(Some(st))
}

pub fn count_obstructed(t: u64, cfg: &CountConfig) -> Result<CountProgress, CountError> {
    count_grid(&[t], cfg)
}

/// One pass at the largest height, reported at every height in `ts`.
pub fn count_grid(ts: &[u64], cfg: &CountConfig) -> Result<CountProgress, CountError> {
    if ts.is_empty() || ts[0] < 1 || ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CountError::BadGrid);
    }
    let started = Instant::now();
    let tmax = *ts.last().expect("nonempty");
    let hash = config_hash(ts, cfg);
    let mut st = match &cfg.checkpoint_path {
        Some(p) => load_checkpoint(p, hash, tmax)?.unwrap_or_else(|| RunState {
            completed_slabs: 0,
            hist: vec![Buckets::default(); tmax as usize + 1],
            samples: Vec::new(),
            jsonl_len: 0,
        }),
        None => RunState {
            completed_slabs: 0,
            hist: vec![Buckets::default(); tmax as usize + 1],
            samples: Vec::new(),
            jsonl_len: 0,
        },
    };
    let mut jsonl = match &cfg.jsonl_path {
        Some(p) => {
            let f = fs::OpenOptions::new()
                .create(true)
                .write(true)
                .open(p)?;
            // rewind past anything a crashed run wrote after its last commit
            f.set_len(st.jsonl_len)?;
            Some(f)
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CountError::ThreadPool(e.to_string()))?;
    use rayon::prelude::*;

    let total_slabs = 2 * tmax;
    let chunk = cfg.checkpoint_every_slabs.max(1);
    while st.completed_slabs < total_slabs {
        if let Some(stop) = cfg.stop_after_slabs {
            if st.completed_slabs >= stop {
                return Ok(CountProgress::Paused {
                    completed_slabs: st.completed_slabs,
                });
            }
        }
        let end = (st.completed_slabs + chunk).min(total_slabs);
        let outs: Vec<SlabOut> = pool.install(|| {
            (st.completed_slabs..end)
                .into_par_iter()
                .map(|idx| run_slab(idx, tmax, &cfg.pipeline))
                .collect()
        });
        let mut pending = String::new();
        for o in outs {
            for (h, b) in o.hist.iter().enumerate() {
                st.hist[h].absorb(b);
            }
            for s in o.samples {
                if st.samples.len() < SAMPLE_CAP {
                    st.samples.push(s);
                }
            }
            for r in o.rows {
                pending.push_str(&r);
                pending.push('\n');
            }
        }
        st.completed_slabs = end;
        if let Some(f) = jsonl.as_mut() {
            f.write_all(pending.as_bytes())?;
            f.flush()?;
            st.jsonl_len += pending.len() as u64;
        }
        if let Some(p) = &cfg.checkpoint_path {
            write_checkpoint(p, hash, tmax, &st)?;
        }
        if cfg.abort_on_flood {
            let mut acc = Buckets::default();
            for b in &st.hist {
                acc.absorb(b);
            }
            let els = acc.partition_total() - acc.not_els;
            if acc.machinery >= FLOOD_FLOOR
                && acc.machinery as f64 > cfg.flood_threshold * els as f64
            {
                return Err(CountError::UndecidedFlood(st.samples.clone()));
            }
        }
    }

    let wall = started.elapsed().as_secs_f64();
    let mut reports = Vec::with_capacity(ts.len());
    let mut acc = Buckets::default();
    let mut next = 0usize;
    for h in 1..=tmax {
        acc.absorb(&st.hist[h as usize]);
        if h == ts[next] {
            let n_total = 8 * h * h * h;
            assert_eq!(acc.partition_total(), n_total, "bucket partition broke");
            let n_els = n_total - acc.not_els;
            reports.push(CountReport {
                t: h,
                n_total,
                n_els,
                n_obstructed_minus_square: acc.obs_minus,
                n_obstructed_nonsquare: acc.obs_non,
                n_undecided_plus_square: acc.und_plus,
                n_undecided_other: acc.und_other,
                n_no_obstruction: acc.no_obs,
                wall_time: wall,
                tainted: acc.machinery as f64 > cfg.flood_threshold * n_els as f64,
                undecided_samples: st
                    .samples
                    .iter()
                    .copied()
                    .filter(|s| {
                        s.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) <= h
                    })
                    .collect(),
            });
            next += 1;
            if next == ts.len() {
                break;
            }
        }
    }
    Ok(CountProgress::Complete(reports))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub grid: Vec<(u64, u64)>,
    pub intercept: f64,
    pub log_t_exponent: f64,
    pub log_log_t_exponent: f64,
    pub residuals: Vec<f64>,
}

/// Least squares of log N against (1, log T, log log T). Reported, never
/// asserted: the heights reachable here are far too small to confirm an
/// asymptotic exponent.
pub fn fit_exponents(grid: &[(u64, u64)]) -> Result<ExponentFit, CountError> {
    if grid.len() < 4
        || grid.windows(2).any(|w| w[0].0 >= w[1].0)
        || grid.iter().any(|&(t, n)| t < 2 || n == 0)
    {
        return Err(CountError::DegenerateGrid);
    }
    let rows: Vec<[f64; 3]> = grid
        .iter()
        .map(|&(t, _)| {
            let lt = (t as f64).ln();
            [1.0, lt, lt.ln()]
        })
        .collect();
    let ys: Vec<f64> = grid.iter().map(|&(_, n)| (n as f64).ln()).collect();
    // normal equations, 3 x 3
    let mut m = [[0.0f64; 4]; 3];
    for (r, y) in rows.iter().zip(&ys) {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
            m[i][3] += r[i] * y;
        }
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty range");
        m.swap(col, piv);
        if m[col][col].abs() < 1e-12 {
            return Err(CountError::DegenerateGrid);
        }
        for row in 0..3 {
            if row == col {
                continue;
            }
            let f = m[row][col] / m[col][col];
            for j in col..4 {
                m[row][j] -= f * m[col][j];
            }
        }
    }
    let beta = [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]];
    let residuals = rows
        .iter()
        .zip(&ys)
        .map(|(r, y)| y - (beta[0] * r[0] + beta[1] * r[1] + beta[2] * r[2]))
        .collect();
    Ok(ExponentFit {
        grid: grid.to_vec(),
        intercept: beta[0],
        log_t_exponent: beta[1],
        log_log_t_exponent: beta[2],
        residuals,
    })
}
