//! Command-line front end. The binary is a thin wrapper around [`main_with_args`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::campaign::{run_campaign, threads_from_env, CampaignConfig, EnsembleFamily, PChoice};
use crate::density::{parity_classify, Parity};
use crate::error::{argument, Error, Result};
use crate::fock::{FockVector, MAX_MODES};
use crate::mode::{entropy_report, equispectral, reconstruct_locals, reduce_modes, Bipartition, Block};
use crate::particle::{conjecture_trial, natural_occupations, pauli_constraint_check, rdm_matrix, AGREE_TOL, DISAGREE_FLOOR};
use crate::report::{matrix_json, spectrum_json, RunReport, Tolerances};
use crate::sample::{sample_state, Ensemble};
use crate::spectral::SpectrumReport;
use crate::statefile::{read_state, write_state};
use crate::verify::{run_suite, Suite, SuiteConfig};

/// Exit status for a failed mathematical check.
pub const EXIT_FAILED_CHECK: i32 = 1;
/// Exit status for usage and I/O errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "fermred", version, about = "Mode- and particle-reduced states of fermionic systems")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Spectral tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Entrywise tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub entry_tol: f64,
    /// Eigenvalues below this are treated as zero.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub zero_threshold: f64,
    /// Print the machine-readable report on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Suppress the human-readable summary.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Largest accepted mode count (at most 12).
    #[arg(long, global = true, default_value_t = 8)]
    pub max_modes: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct PartitionArgs {
    /// First block is modes 1..=m.
    #[arg(long)]
    pub modes: Option<usize>,
    /// First block is this comma-separated mode list, e.g. `1,3`.
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<usize>>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockArg {
    First,
    Second,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityArg {
    Even,
    Odd,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mode-reduced density matrices of a bipartition.
    Reduce {
        state: PathBuf,
        #[command(flatten)]
        part: PartitionArgs,
        #[arg(long, value_enum, default_value = "both")]
        block: BlockArg,
    },
    /// Run a property suite: car, matrix-units, theorem1, theorem2, prop4, prop5, pauli.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Seeded campaign comparing spectra of ρ_p and Φ^p(|ψ⟩⟨ψ|).
    Fuzz {
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        /// `all` or a fixed p.
        #[arg(long, default_value = "all")]
        p: String,
        #[arg(long)]
        trials: u64,
        /// general, ssr or fixed-N.
        #[arg(long, default_value = "general")]
        ensemble: String,
        /// Record file.
        #[arg(long)]
        out: PathBuf,
        /// Continue an existing record file.
        #[arg(long)]
        resume: bool,
    },
    /// Canonical even state and local unitaries reproducing a state.
    Purify {
        state: PathBuf,
        #[command(flatten)]
        part: PartitionArgs,
    },
    /// Draw a random state.
    Sample {
        #[arg(long)]
        n: usize,
        /// general, ssr or fixed-N.
        #[arg(long, default_value = "general")]
        ensemble: String,
        #[arg(long, value_enum, default_value = "even")]
        parity: ParityArg,
        /// Particle number for the fixed-N ensemble.
        #[arg(long)]
        particles: Option<usize>,
        /// Write the state file here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// p-particle reduced density matrix, Φ^p and the spectral comparison.
    Rdm {
        state: PathBuf,
        #[arg(long)]
        p: usize,
        /// Divide the p-RDM by its trace.
        #[arg(long)]
        normalize: bool,
    },
    /// Natural occupation numbers and parity-induced constraints.
    Occupations { state: PathBuf },
}

/// Result of a command: the report, a text summary and the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub text: String,
    pub exit: i32,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) | Error::Validation(_) | Error::Io(_) => EXIT_USAGE,
        Error::Precondition(_) | Error::Numeric(_) => EXIT_FAILED_CHECK,
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    tolerances: Tolerances,
}

impl Ctx<'_> {
    fn load(&self, path: &Path) -> Result<FockVector> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let psi = read_state(&text).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        self.check_n(psi.n())?;
        Ok(psi)
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.cli.max_modes {
            return Err(argument(format!("{n} modes exceeds --max-modes {}", self.cli.max_modes)));
        }
        Ok(())
    }
}

fn partition(n: usize, args: &PartitionArgs) -> Result<Bipartition> {
    match (&args.modes, &args.subset) {
        (Some(m), None) => Bipartition::contiguous(n, *m),
        (None, Some(s)) => Bipartition::from_subset(n, s),
        _ => Err(argument("give exactly one of --modes or --subset")),
    }
}

fn fmt_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
    format!("[{}]", parts.join(", "))
}

fn spectrum_line(label: &str, s: &SpectrumReport) -> String {
    format!("{label}: {}\n", fmt_values(&s.values))
}

fn family_ensemble(name: &str, parity: ParityArg, particles: Option<usize>) -> Result<Ensemble> {
    match name.parse::<EnsembleFamily>()? {
        EnsembleFamily::General => Ok(Ensemble::General),
        EnsembleFamily::Ssr => Ok(Ensemble::Ssr(match parity {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        })),
        EnsembleFamily::FixedN => particles
            .map(Ensemble::FixedN)
            .ok_or_else(|| argument("the fixed-N ensemble needs --particles")),
    }
}

fn cmd_reduce(ctx: &Ctx, state: &Path, part_args: &PartitionArgs, block: BlockArg) -> Result<(Value, String, i32)> {
    let psi = ctx.load(state)?;
    let part = partition(psi.n(), part_args)?;
    let blocks: &[Block] = match block {
        BlockArg::First => &[Block::First],
        BlockArg::Second => &[Block::Second],
        BlockArg::Both => &[Block::First, Block::Second],
    };
    let mut text = String::new();
    let mut out = Vec::new();
    for &b in blocks {
        let rho = reduce_modes(&psi, &part, b)?;
        let spectrum = rho.spectrum()?;
        let modes = match b {
            Block::First => part.first_modes(),
            Block::Second => part.second_modes(),
        };
        let _ = write!(text, "{}", spectrum_line(&format!("block {modes:?} spectrum"), &spectrum));
        out.push(json!({
            "block": b,
            "modes": modes,
            "matrix": matrix_json(rho.entries()),
            "spectrum": spectrum_json(&spectrum),
        }));
    }
    let mut payload = json!({"n": psi.n(), "first_modes": part.first_modes(), "blocks": out});
    if block == BlockArg::Both {
        let eq = equispectral(&psi, &part, ctx.tolerances.spectrum)?;
        let ent = entropy_report(&psi, &part)?;
        let _ = writeln!(text, "equispectral: {} (max gap {:.3e})", eq.equal, eq.max_gap);
        let _ = writeln!(text, "entropies: S1 = {:.12} bits, S2 = {:.12} bits, |S1 - S2| = {:.12}", ent.s1, ent.s2, ent.violation);
        payload["equispectral"] = json!({"equal": eq.equal, "max_gap": eq.max_gap});
        payload["entropy"] = serde_json::to_value(ent).expect("serializable");
    }
    Ok((payload, text, 0))
}

fn cmd_verify(ctx: &Ctx, suite: &str, trials: Option<usize>, n_max: Option<usize>) -> Result<(Value, String, i32)> {
    let suite: Suite = suite.parse()?;
    let mut cfg = SuiteConfig::defaults(suite, ctx.cli.seed);
    cfg.tol = ctx.tolerances.spectrum;
    cfg.entry_tol = ctx.tolerances.entrywise;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(n) = n_max {
        ctx.check_n(n)?;
        cfg.n_max = n;
    }
    let o = run_suite(suite, &cfg)?;
    let mut text = format!(
        "suite {}: {} ({} checks, {} failures, max gap {:.3e})\n",
        suite,
        if o.passed { "PASS" } else { "FAIL" },
        o.checks,
        o.failures,
        o.max_gap
    );
    if let Some(cx) = &o.first_counterexample {
        let _ = writeln!(text, "first counterexample: {cx}");
    }
    let exit = if o.passed { 0 } else { EXIT_FAILED_CHECK };
    let payload = json!({"config": cfg, "outcome": o});
    Ok((payload, text, exit))
}

#[allow(clippy::too_many_arguments)]
fn cmd_fuzz(
    ctx: &Ctx,
    n_min: usize,
    n_max: usize,
    p: &str,
    trials: u64,
    ensemble: &str,
    out: &Path,
    resume: bool,
) -> Result<(Value, String, i32)> {
    ctx.check_n(n_max)?;
    let config = CampaignConfig::new(ctx.cli.seed, n_min, n_max, p.parse::<PChoice>()?, ensemble.parse()?, trials)?;
    let summary = run_campaign(&config, out, resume, threads_from_env()?)?;
    let mut text = format!(
        "{} trials ({} resumed): {} agree, {} inconclusive, {} disagree; max gap {:.3e}, max gap after 1/p! {:.3e}\n",
        summary.trials, summary.resumed_from, summary.agree, summary.inconclusive, summary.disagree, summary.max_gap, summary.max_scaled_gap
    );
    if summary.disagree > 0 || summary.inconclusive > 0 {
        let _ = writeln!(text, "*** {} trials did not agree; first ones:", summary.disagree + summary.inconclusive);
        for r in &summary.flagged {
            let _ = writeln!(
                text,
                "    trial {} seed {} n={} p={} {}: gap {:.3e} ({}), gap after 1/p! {:.3e}",
                r.trial, r.seed, r.n, r.p, r.ensemble, r.max_gap, r.verdict, r.scaled_gap
            );
        }
    }
    let payload = json!({"config": config, "record_file": out.display().to_string(), "summary": summary});
    Ok((payload, text, 0))
}

fn cmd_purify(ctx: &Ctx, state: &Path, part_args: &PartitionArgs) -> Result<(Value, String, i32)> {
    let psi = ctx.load(state)?;
    let part = partition(psi.n(), part_args)?;
    let tol = ctx.tolerances.spectrum;
    let eq = equispectral(&psi, &part, tol)?;
    if !eq.equal {
        let text = format!(
            "not equispectral (max gap {:.3e})\n{}{}",
            eq.max_gap,
            spectrum_line("first block spectrum", &eq.first),
            spectrum_line("second block spectrum", &eq.second)
        );
        let payload = json!({
            "equispectral": false,
            "max_gap": eq.max_gap,
            "first": spectrum_json(&eq.first),
            "second": spectrum_json(&eq.second),
        });
        return Ok((payload, text, EXIT_FAILED_CHECK));
    }
    let r = reconstruct_locals(&psi, &part, tol)?;
    let locality = r.locality_defect(&part).ok();
    let text = format!(
        "weights: {}\nfidelity: {:.15}\nmarginal gap: {:.3e}\nsimple spectrum: {} (min gap {:.3e})\nrecovered: {}\n",
        fmt_values(&r.weights),
        r.fidelity,
        r.marginal_gap,
        r.simple_spectrum,
        r.min_spectral_gap,
        r.recovered
    );
    let payload = json!({
        "equispectral": true,
        "first_modes": part.first_modes(),
        "parity": r.parity,
        "phi": r.phi.amplitudes().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "u1": matrix_json(r.u1.entries()),
        "u2": matrix_json(r.u2.entries()),
        "u1_parity": r.u1_parity,
        "u2_parity": r.u2_parity,
        "weights": r.weights,
        "fidelity": r.fidelity,
        "marginal_gap": r.marginal_gap,
        "min_spectral_gap": r.min_spectral_gap,
        "simple_spectrum": r.simple_spectrum,
        "recovered": r.recovered,
        "locality_defect": locality,
    });
    Ok((payload, text, 0))
}

fn cmd_sample(ctx: &Ctx, n: usize, ensemble: &str, parity: ParityArg, particles: Option<usize>, out: Option<&Path>) -> Result<(Value, String, i32)> {
    ctx.check_n(n)?;
    let ens = family_ensemble(ensemble, parity, particles)?;
    let psi = sample_state(n, ens, ctx.cli.seed)?;
    let file = write_state(&psi);
    let text = match out {
        Some(path) => {
            std::fs::write(path, &file).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            format!("wrote {}\n", path.display())
        }
        None => file.clone(),
    };
    let payload = json!({"n": n, "ensemble": ens.to_string(), "state_file": file});
    Ok((payload, text, 0))
}

fn cmd_rdm(ctx: &Ctx, state: &Path, p: usize, normalize: bool) -> Result<(Value, String, i32)> {
    let psi = ctx.load(state)?;
    let zt = ctx.tolerances.zero_threshold;
    let mut rdm = rdm_matrix(&psi, p)?;
    let trace = rdm.trace();
    if normalize {
        rdm = rdm.normalized(zt).ok_or_else(|| Error::Precondition(format!("trace {trace:e} is below the zero threshold")))?;
    }
    let rdm_spectrum = rdm.spectrum()?.stripped(zt);
    let t = conjecture_trial(&psi, p, AGREE_TOL, DISAGREE_FLOOR)?;
    let text = format!(
        "trace: {trace:.12}\n{}{}{}verdict: {} (max gap {:.3e}, after 1/p! {:.3e})\n",
        spectrum_line("p-RDM spectrum", &rdm_spectrum),
        spectrum_line("rho_p nonzero spectrum", &t.spectrum_rdm),
        spectrum_line("phi^p nonzero spectrum", &t.spectrum_phi),
        t.verdict,
        t.max_gap,
        t.scaled_gap
    );
    let payload = json!({
        "p": p,
        "tuples": rdm.tuples,
        "trace": trace,
        "normalized": normalize,
        "matrix": matrix_json(&rdm.entries),
        "spectrum": spectrum_json(&rdm_spectrum),
        "rho_p_spectrum": spectrum_json(&t.spectrum_rdm),
        "phi_p_spectrum": spectrum_json(&t.spectrum_phi),
        "max_gap": t.max_gap,
        "verdict": t.verdict,
        "recomputed": t.recomputed,
        "scaled_gap": t.scaled_gap,
        "matrix_operator_gap": t.matrix_operator_gap,
    });
    Ok((payload, text, 0))
}

fn cmd_occupations(ctx: &Ctx, state: &Path) -> Result<(Value, String, i32)> {
    let psi = ctx.load(state)?;
    let occ = natural_occupations(&psi)?;
    let class = parity_classify(&psi, ctx.tolerances.zero_threshold)?;
    let mut text = spectrum_line("natural occupations", &occ);
    let mut exit = 0;
    let pauli = if class.parity().is_some() {
        let r = pauli_constraint_check(&psi, ctx.tolerances.zero_threshold)?;
        if let Some(c) = &r.constraint {
            let _ = writeln!(text, "constraint {c}: residual {:.3e}, {}", r.residual, if r.holds == Some(true) { "holds" } else { "VIOLATED" });
            if r.holds == Some(false) {
                exit = EXIT_FAILED_CHECK;
            }
        }
        Some(serde_json::to_value(r).expect("serializable"))
    } else {
        None
    };
    let payload = json!({"parity": class, "occupations": spectrum_json(&occ), "pauli": pauli});
    Ok((payload, text, exit))
}

/// Runs a parsed command line. `echo` is recorded in the report.
pub fn run(cli: &Cli, echo: &str) -> Result<Outcome> {
    if cli.max_modes == 0 || cli.max_modes > MAX_MODES {
        return Err(argument(format!("--max-modes must lie in 1..={MAX_MODES}")));
    }
    let tolerances = Tolerances { spectrum: cli.tol, entrywise: cli.entry_tol, zero_threshold: cli.zero_threshold };
    if [cli.tol, cli.entry_tol, cli.zero_threshold].iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(argument("tolerances must be finite and non-negative"));
    }
    let ctx = Ctx { cli, tolerances };
    let start = Instant::now();
    let (payload, text, exit) = match &cli.command {
        Command::Reduce { state, part, block } => cmd_reduce(&ctx, state, part, *block)?,
        Command::Verify { suite, trials, n_max } => cmd_verify(&ctx, suite, *trials, *n_max)?,
        Command::Fuzz { n_min, n_max, p, trials, ensemble, out, resume } => {
            cmd_fuzz(&ctx, *n_min, *n_max, p, *trials, ensemble, out, *resume)?
        }
        Command::Purify { state, part } => cmd_purify(&ctx, state, part)?,
        Command::Sample { n, ensemble, parity, particles, out } => {
            cmd_sample(&ctx, *n, ensemble, *parity, *particles, out.as_deref())?
        }
        Command::Rdm { state, p, normalize } => cmd_rdm(&ctx, state, *p, *normalize)?,
        Command::Occupations { state } => cmd_occupations(&ctx, state)?,
    };
    let mut report = RunReport::new(echo, Some(cli.seed), tolerances, payload);
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(Outcome { report, text, exit })
}

/// Parses `args` (including the program name), runs, prints and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match threads_from_env() {
        Ok(Some(k)) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    }
    let echo = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" ");
    match run(&cli, &echo) {
        Ok(outcome) => {
            if cli.json {
                println!("{}", outcome.report.to_json());
            } else if !cli.quiet {
                print!("{}", outcome.text);
            }
            outcome.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
