//! Seeded conjecture campaigns with an append-only, resumable record file.
//!
//! The file starts with one header line
//!
//! ```text
//! # fermred fuzz seed=42 n_min=1 n_max=4 p=all ensemble=general
//! ```
//!
//! followed by one tab-separated record per trial:
//! `trial seed n p ensemble max_gap verdict scaled_gap`.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Parity;
use crate::error::{argument, validation, Error, Result};
use crate::fock::MAX_MODES;
use crate::particle::{conjecture_trial, Verdict, AGREE_TOL, DISAGREE_FLOOR};
use crate::sample::{rng_from_seed, sample_with, trial_seed, Ensemble};

/// Environment variable holding the worker count; `1` runs sequentially.
pub const THREADS_ENV: &str = "FERMRED_THREADS";

const BATCH: u64 = 256;
const MAX_LISTED: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PChoice {
    All,
    Fixed(usize),
}

impl std::fmt::Display for PChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PChoice::All => f.write_str("all"),
            PChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for PChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(PChoice::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(PChoice::Fixed(k)),
            _ => Err(argument(format!("p must be `all` or a positive integer, got {s:?}"))),
        }
    }
}

/// Ensemble family; the concrete parity or particle number is drawn per trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleFamily {
    General,
    Ssr,
    FixedN,
}

impl std::fmt::Display for EnsembleFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleFamily::General => "general",
            EnsembleFamily::Ssr => "ssr",
            EnsembleFamily::FixedN => "fixed-N",
        })
    }
}

impl FromStr for EnsembleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(EnsembleFamily::General),
            "ssr" => Ok(EnsembleFamily::Ssr),
            "fixed-N" | "fixed-n" => Ok(EnsembleFamily::FixedN),
            _ => Err(argument(format!("unknown ensemble {s:?} (general, ssr, fixed-N)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub p: PChoice,
    pub ensemble: EnsembleFamily,
    pub trials: u64,
    pub agree_tol: f64,
    pub disagree_floor: f64,
}

impl CampaignConfig {
    pub fn new(seed: u64, n_min: usize, n_max: usize, p: PChoice, ensemble: EnsembleFamily, trials: u64) -> Result<Self> {
        if n_min == 0 || n_min > n_max || n_max > MAX_MODES {
            return Err(argument(format!("need 1 ≤ n_min ≤ n_max ≤ {MAX_MODES}, got {n_min}..{n_max}")));
        }
        if let PChoice::Fixed(k) = p {
            if k > n_min {
                return Err(argument(format!("p = {k} exceeds the smallest mode count {n_min}")));
            }
        }
        Ok(Self { seed, n_min, n_max, p, ensemble, trials, agree_tol: AGREE_TOL, disagree_floor: DISAGREE_FLOOR })
    }

    pub fn header(&self) -> String {
        format!(
            "# fermred fuzz seed={} n_min={} n_max={} p={} ensemble={}",
            self.seed, self.n_min, self.n_max, self.p, self.ensemble
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub ensemble: Ensemble,
    pub max_gap: f64,
    pub verdict: Verdict,
    /// Gap after dividing `Φ^p(ρ)` by `p!`.
    pub scaled_gap: f64,
}

impl TrialRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:?}\t{}\t{:?}",
            self.trial, self.seed, self.n, self.p, self.ensemble, self.max_gap, self.verdict, self.scaled_gap
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(validation(format!("expected 8 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| validation(format!("bad integer {s:?}")));
        let float = |s: &str| s.parse::<f64>().map_err(|_| validation(format!("bad number {s:?}")));
        Ok(Self {
            trial: int(f[0])?,
            seed: int(f[1])?,
            n: int(f[2])? as usize,
            p: int(f[3])? as usize,
            ensemble: f[4].parse()?,
            max_gap: float(f[5])?,
            verdict: f[6].parse()?,
            scaled_gap: float(f[7])?,
        })
    }
}

/// The trial at `index`; depends only on the configuration and the index.
pub fn run_trial(config: &CampaignConfig, index: u64) -> Result<TrialRecord> {
    let seed = trial_seed(config.seed, index);
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(config.n_min..=config.n_max);
    let p = match config.p {
        PChoice::All => rng.random_range(1..=n),
        PChoice::Fixed(k) => k,
    };
    let ensemble = match config.ensemble {
        EnsembleFamily::General => Ensemble::General,
        EnsembleFamily::Ssr => Ensemble::Ssr(if rng.random::<bool>() { Parity::Odd } else { Parity::Even }),
        EnsembleFamily::FixedN => Ensemble::FixedN(rng.random_range(p..=n)),
    };
    let psi = sample_with(n, ensemble, &mut rng)?;
    let t = conjecture_trial(&psi, p, config.agree_tol, config.disagree_floor)?;
    Ok(TrialRecord { trial: index, seed, n, p, ensemble, max_gap: t.max_gap, verdict: t.verdict, scaled_gap: t.scaled_gap })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub trials: u64,
    pub resumed_from: u64,
    pub agree: u64,
    pub inconclusive: u64,
    pub disagree: u64,
    pub max_gap: f64,
    pub max_scaled_gap: f64,
    /// First few non-agreeing trials.
    pub flagged: Vec<TrialRecord>,
}

impl CampaignSummary {
    fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        match r.verdict {
            Verdict::Agree => self.agree += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
            Verdict::Disagree => self.disagree += 1,
        }
        self.max_gap = self.max_gap.max(r.max_gap);
        self.max_scaled_gap = self.max_scaled_gap.max(r.scaled_gap);
        if r.verdict != Verdict::Agree && self.flagged.len() < MAX_LISTED {
            self.flagged.push(r.clone());
        }
    }

    pub fn all_agree(&self) -> bool {
        self.agree == self.trials
    }
}

/// Existing records from a resumable file, plus the byte length of its valid prefix.
fn load_existing(path: &Path, config: &CampaignConfig) -> Result<(Vec<TrialRecord>, u64)> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if text.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let corrupt = |offset: usize, msg: String| validation(format!("{}: corrupt record file at byte offset {offset}: {msg}", path.display()));
    let Some(header_end) = text.find('\n') else {
        return Err(corrupt(0, "unterminated header".into()));
    };
    if text[..header_end] != config.header() {
        return Err(corrupt(0, format!("header {:?} does not match {:?}", &text[..header_end], config.header())));
    }
    let mut offset = header_end + 1;
    let mut records = Vec::new();
    while offset < text.len() {
        let Some(len) = text[offset..].find('\n') else {
            // an interrupted write; the partial line is discarded
            break;
        };
        let line = &text[offset..offset + len];
        let record = TrialRecord::parse_line(line).map_err(|e| corrupt(offset, e.to_string()))?;
        if record.trial != records.len() as u64 {
            return Err(corrupt(offset, format!("expected trial {}, found {}", records.len(), record.trial)));
        }
        records.push(record);
        offset += len + 1;
    }
    Ok((records, offset as u64))
}

/// Worker count from `FERMRED_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(argument(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn run_batch(config: &CampaignConfig, range: std::ops::Range<u64>, threads: Option<usize>, pool: Option<&rayon::ThreadPool>) -> Result<Vec<TrialRecord>> {
    if threads == Some(1) {
        return range.map(|i| run_trial(config, i)).collect();
    }
    let work = || range.clone().into_par_iter().map(|i| run_trial(config, i)).collect::<Result<Vec<_>>>();
    match pool {
        Some(pool) => pool.install(work),
        None => work(),
    }
}

/// Runs (or resumes) a campaign writing to `path`, returning the summary over all records.
pub fn run_campaign(config: &CampaignConfig, path: &Path, resume: bool, threads: Option<usize>) -> Result<CampaignSummary> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut summary = CampaignSummary::default();
    let exists = path.exists();
    if exists && !resume {
        return Err(Error::Io(format!("{} already exists; pass --resume to continue it", path.display())));
    }
    let (existing, valid_len) = if exists { load_existing(path, config)? } else { (Vec::new(), 0) };
    for r in &existing {
        summary.add(r);
    }
    summary.resumed_from = existing.len() as u64;

    let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    if exists {
        file.set_len(valid_len).map_err(io)?;
    }
    let mut out = BufWriter::new(file);
    if valid_len == 0 {
        writeln!(out, "{}", config.header()).map_err(io)?;
        out.flush().map_err(io)?;
    }

    let pool = match threads {
        Some(k) if k > 1 => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?,
        ),
        _ => None,
    };
    let mut next = summary.resumed_from;
    while next < config.trials {
        let end = (next + BATCH).min(config.trials);
        let batch = run_batch(config, next..end, threads, pool.as_ref())?;
        for r in &batch {
            writeln!(out, "{}", r.to_line()).map_err(io)?;
            summary.add(r);
        }
        out.flush().map_err(io)?;
        next = end;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(trials: u64) -> CampaignConfig {
        CampaignConfig::new(7, 1, 3, PChoice::All, EnsembleFamily::General, trials).unwrap()
    }

    #[test]
    fn record_lines_round_trip() {
        let r = run_trial(&config(1), 5).unwrap();
        assert_eq!(TrialRecord::parse_line(&r.to_line()).unwrap(), r);
        assert!(TrialRecord::parse_line("1\t2\t3").is_err());
    }

    #[test]
    fn trials_are_deterministic() {
        let c = config(1);
        assert_eq!(run_trial(&c, 3).unwrap(), run_trial(&c, 3).unwrap());
        let fixed = CampaignConfig::new(9, 2, 4, PChoice::Fixed(2), EnsembleFamily::FixedN, 1).unwrap();
        for i in 0..20 {
            let r = run_trial(&fixed, i).unwrap();
            assert_eq!(r.p, 2);
            assert!(matches!(r.ensemble, Ensemble::FixedN(k) if (2..=r.n).contains(&k)));
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
        run_campaign(&config(300), &a, false, Some(1)).unwrap();
        run_campaign(&config(300), &b, false, Some(4)).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn resume_drops_partial_line_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let full = dir.path().join("full.tsv");
        let cut = dir.path().join("cut.tsv");
        run_campaign(&config(40), &full, false, Some(1)).unwrap();
        let bytes = std::fs::read(&full).unwrap();
        // keep the header, 10 records and half of the eleventh
        let ends: Vec<usize> = bytes.iter().enumerate().filter(|(_, &b)| b == b'\n').map(|(i, _)| i).collect();
        std::fs::write(&cut, &bytes[..ends[10] + 5]).unwrap();
        let s = run_campaign(&config(40), &cut, true, Some(1)).unwrap();
        assert_eq!(s.resumed_from, 10);
        assert_eq!(s.trials, 40);
        assert_eq!(std::fs::read(&cut).unwrap(), bytes);
    }

    #[test]
    fn refuses_existing_or_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.tsv");
        run_campaign(&config(5), &path, false, Some(1)).unwrap();
        assert!(run_campaign(&config(5), &path, false, Some(1)).is_err());
        let other = CampaignConfig { seed: 8, ..config(5) };
        assert!(run_campaign(&other, &path, true, Some(1)).unwrap_err().to_string().contains("offset 0"));
        let mut text = std::fs::read_to_string(&path).unwrap();
        let header_len = text.find('\n').unwrap() + 1;
        text.insert_str(header_len, "garbage\n");
        std::fs::write(&path, text).unwrap();
        let err = run_campaign(&config(5), &path, true, Some(1)).unwrap_err().to_string();
        assert!(err.contains(&format!("offset {header_len}")), "{err}");
    }
}
