//! Command-line grammar and command implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use trackkit_core::control::{simulate, Mode};
use trackkit_core::properties::zeros_rank_test;
use trackkit_core::trackability::{decompose_with_stack, membership_with_stack, stacks_for_reference};
use trackkit_core::{analyze, classify, PropertyProfile, RankTolerance, ThetaVariant, Vector};

use crate::corpus;
use crate::error::{Error, Result};
use crate::format::{load_reference, load_system, write_decomposition, write_simulation, NamedSystem};
use crate::report::{AnalyzeReport, ClassifyReport, CorpusReport, CorpusRow, IndexReport, SimulateReport, Verdict};

#[derive(Debug, Parser)]
#[command(name = "trackkit", version, about = "Trackability analysis for discrete-time LTI systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Relative rank tolerance: sigma counts when sigma > tol * sigma_max * max(rows, cols).
    #[arg(long, default_value_t = RankTolerance::DEFAULT_EPSILON)]
    pub tol: f64,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ThetaArg {
    Linear,
    Quadratic,
}

impl From<ThetaArg> for ThetaVariant {
    fn from(v: ThetaArg) -> Self {
        match v {
            ThetaArg::Linear => ThetaVariant::Linear,
            ThetaArg::Quadratic => ThetaVariant::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    OpenLoop,
    ClosedLoop,
    Projected,
}

impl From<ModeArg> for Mode {
    fn from(v: ModeArg) -> Self {
        match v {
            ModeArg::OpenLoop => Mode::OpenLoop,
            ModeArg::ClosedLoop => Mode::ClosedLoop,
            ModeArg::Projected => Mode::Projected,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Delay, trackability verdict and indices of a system.
    Analyze {
        system: PathBuf,
        /// Horizon r (default L + n).
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, value_enum, default_value_t = ThetaArg::Linear)]
        theta_variant: ThetaArg,
        #[command(flatten)]
        common: Common,
    },
    /// Controllability, observability, output controllability, input-and-state
    /// observability, trackability and diagram region.
    Classify {
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Reference command index and least achievable tracking error.
    Index {
        system: PathBuf,
        /// CSV with header k,y1..yl, starting at k = L.
        reference: PathBuf,
        /// Write reference, projection and residual as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate inversion-based tracking of a reference.
    Simulate {
        system: PathBuf,
        /// CSV with header k,y1..yl, starting at k = L.
        reference: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::ClosedLoop)]
        mode: ModeArg,
        /// Initial state "v1,v2,..." (default: from the system file, else zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Write the run as CSV (k,u..,y..,yref..).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify every example_NN.json in a directory (default: bundled set)
    /// and compare against the expected table.
    Corpus {
        dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Mismatch,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Mismatch => 1,
        }
    }
}

/// Exit code for a failed command.
pub const INPUT_ERROR_EXIT: i32 = 2;

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze { system, r, theta_variant, common } => {
            let sys = load_system(system)?;
            let report = analyze_report(&sys, *r, (*theta_variant).into(), tolerance(common)?)?;
            emit(out, common.json, &report, render_analyze)?;
            Ok(Outcome::Success)
        }
        Command::Classify { system, common } => {
            let sys = load_system(system)?;
            let tol = tolerance(common)?;
            let report = ClassifyReport {
                name: sys.name.clone(),
                tolerance: tol.epsilon(),
                profile: classify(&sys.system, tol),
                zero_test: zeros_rank_test(&sys.system, tol),
            };
            emit(out, common.json, &report, render_classify)?;
            Ok(Outcome::Success)
        }
        Command::Index { system, reference, out: csv_out, common } => {
            let sys = load_system(system)?;
            let tol = tolerance(common)?;
            let y = load_reference(reference, sys.system.l())?;
            let stack = stacks_for_reference(&sys.system, &y, tol)?;
            let d = decompose_with_stack(&stack, &y, tol)?;
            let member = membership_with_stack(&stack, &y, sys.system.x0(), tol)?;
            if let Some(path) = csv_out {
                let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
                write_decomposition(file, &y, &d)?;
            }
            let report = IndexReport {
                name: sys.name.clone(),
                delay: stack.delay(),
                horizon: stack.horizon(),
                theta: d.theta,
                min_error_bound: d.min_error_norm,
                reference_norm: y.norm(),
                projected_norm: d.projected.norm(),
                member: member.member,
                relative_residual: member.relative_residual,
            };
            emit(out, common.json, &report, render_index)?;
            Ok(Outcome::Success)
        }
        Command::Simulate { system, reference, mode, x0, out: csv_out, common } => {
            let sys = load_system(system)?;
            let tol = tolerance(common)?;
            let y = load_reference(reference, sys.system.l())?;
            let x0 = match x0 {
                Some(v) if v.len() != sys.system.n() => {
                    return Err(Error::Format(format!("--x0 has {} entries, expected {}", v.len(), sys.system.n())))
                }
                Some(v) => Vector::from_vec(v.clone()),
                None => sys.system.x0().clone(),
            };
            let run = simulate(&sys.system, (*mode).into(), &y, &x0, tol)?;
            if let Some(path) = csv_out {
                let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
                write_simulation(file, &sys.system, &run)?;
            }
            let report = SimulateReport {
                name: sys.name.clone(),
                mode: run.mode,
                delay: y.start_index(),
                horizon: y.end_index(),
                error_norm: run.error_norm,
                reference_error_norm: run.reference_error_norm,
                best_effort: run.best_effort,
            };
            emit(out, common.json, &report, render_simulate)?;
            Ok(Outcome::Success)
        }
        Command::Corpus { dir, common } => {
            let report = corpus_report(dir.as_deref(), tolerance(common)?)?;
            emit(out, common.json, &report, render_corpus)?;
            Ok(if report.all_match { Outcome::Success } else { Outcome::Mismatch })
        }
    }
}

fn tolerance(common: &Common) -> Result<RankTolerance> {
    Ok(RankTolerance::new(common.tol)?)
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    json: bool,
    report: &T,
    render: fn(&T, &mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let res = if json {
        serde_json::to_string_pretty(report).map_err(std::io::Error::other).and_then(|s| writeln!(out, "{s}"))
    } else {
        render(report, out)
    };
    res.map_err(|e| Error::io("<stdout>", e))
}

pub fn analyze_report(
    sys: &NamedSystem,
    r: Option<usize>,
    variant: ThetaVariant,
    tol: RankTolerance,
) -> Result<AnalyzeReport> {
    let s = &sys.system;
    let details = match analyze(s, r, tol) {
        Ok(rep) => Some(rep),
        Err(trackkit_core::Error::NoInputOutputCoupling) => None,
        Err(e) => return Err(e.into()),
    };
    let verdict = match &details {
        Some(d) if d.trackable => Verdict::Trackable,
        Some(_) => Verdict::Untrackable,
        None => Verdict::Undefined,
    };
    Ok(AnalyzeReport {
        name: sys.name.clone(),
        n: s.n(),
        m: s.m(),
        l: s.l(),
        tolerance: tol.epsilon(),
        verdict,
        theta_variant: variant,
        system_index: details.as_ref().map(|d| d.system_index_for(variant)),
        details,
    })
}

/// Short decimal: three places with trailing zeros removed.
pub fn short(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn render_analyze(rep: &AnalyzeReport, out: &mut dyn Write) -> std::io::Result<()> {
    if let Some(name) = &rep.name {
        writeln!(out, "system: {name}")?;
    }
    writeln!(out, "dimensions: n={} m={} l={}", rep.n, rep.m, rep.l)?;
    let Some(d) = &rep.details else {
        return writeln!(out, "L undefined: no input-output coupling");
    };
    let channels: Vec<String> =
        d.channel_delays.iter().map(|c| c.map_or_else(|| "-".to_string(), |v| v.to_string())).collect();
    writeln!(out, "delay: L={} (channels: {})", d.delay, channels.join(", "))?;
    writeln!(out, "rank(CA^(L-1)B): {} of {}", d.first_markov_rank, d.outputs)?;
    writeln!(
        out,
        "horizon r={}: rank(M_r)={} of {}, rank(M~_r)={} ({})",
        d.horizon,
        d.rank_m_r,
        (d.horizon - d.delay + 1) * d.outputs,
        d.rank_m_tilde,
        if d.is_consistent() { "consistent" } else { "INCONSISTENT" }
    )?;
    let vt: Vec<String> = d.vartheta.iter().map(|v| short(*v)).collect();
    writeln!(out, "vartheta: {}", vt.join(", "))?;
    let variant = match rep.theta_variant {
        ThetaVariant::Linear => "",
        ThetaVariant::Quadratic => " (quadratic)",
    };
    let verdict = if d.trackable { "trackable" } else { "untrackable" };
    writeln!(
        out,
        "{verdict}, rank {} of {}, Θ={}{variant}",
        d.first_markov_rank,
        d.outputs,
        short(rep.system_index.unwrap_or(d.system_index))
    )
}

fn render_classify(rep: &ClassifyReport, out: &mut dyn Write) -> std::io::Result<()> {
    let p = &rep.profile;
    if let Some(name) = &rep.name {
        writeln!(out, "system: {name}")?;
    }
    match p.delay {
        Some(l) => writeln!(out, "delay: L={l}")?,
        None => writeln!(out, "L undefined: no input-output coupling")?,
    }
    writeln!(out, "{:<24}{}  (rank {})", "state controllable:", flag(p.state_controllable), p.ranks.controllability)?;
    writeln!(out, "{:<24}{}  (rank {})", "state observable:", flag(p.state_observable), p.ranks.observability)?;
    writeln!(out, "{:<24}{}", "minimal:", flag(p.minimal))?;
    writeln!(
        out,
        "{:<24}{}  (rank {})",
        "output controllable:",
        flag(p.output_controllable),
        p.ranks.output_controllability
    )?;
    let iso_rank = p.ranks.iso.map_or_else(|| "-".to_string(), |r| r.to_string());
    writeln!(out, "{:<24}{}  (rank {} of {})", "input/state observable:", flag(p.iso), iso_rank, p.ranks.iso_required)?;
    let trk = match p.trackable {
        Some(t) => flag(t),
        None => "undefined",
    };
    writeln!(out, "{:<24}{trk}", "trackable:")?;
    let region = p.venn_region.map_or_else(|| "none".to_string(), |r| r.to_string());
    writeln!(out, "region: {region}")?;
    let z = &rep.zero_test;
    write!(
        out,
        "zero rank test: rank(Phi_(n-1)) = {} of {} ({})",
        z.phi_rank,
        z.required_rank,
        if z.full { "full" } else { "deficient" }
    )?;
    if !z.warnings.is_empty() {
        let w: Vec<String> = z.warnings.iter().map(|w| format!("{w:?}")).collect();
        write!(out, " [preconditions not met: {}]", w.join(", "))?;
    }
    writeln!(out)
}

fn render_index(rep: &IndexReport, out: &mut dyn Write) -> std::io::Result<()> {
    if let Some(name) = &rep.name {
        writeln!(out, "system: {name}")?;
    }
    writeln!(out, "samples: k={}..{}", rep.delay, rep.horizon)?;
    match rep.theta {
        Some(t) => writeln!(out, "theta: {t}")?,
        None => writeln!(out, "theta: undefined (zero reference)")?,
    }
    writeln!(out, "least achievable error: {}", rep.min_error_bound)?;
    writeln!(out, "reference norm: {}, projected norm: {}", rep.reference_norm, rep.projected_norm)?;
    writeln!(out, "reachable: {} (relative residual {:e})", flag(rep.member), rep.relative_residual)
}

fn render_simulate(rep: &SimulateReport, out: &mut dyn Write) -> std::io::Result<()> {
    if let Some(name) = &rep.name {
        writeln!(out, "system: {name}")?;
    }
    let mode = match rep.mode {
        Mode::OpenLoop => "open-loop",
        Mode::ClosedLoop => "closed-loop",
        Mode::Projected => "projected",
    };
    writeln!(out, "mode: {mode}, samples k={}..{}", rep.delay, rep.horizon)?;
    writeln!(out, "tracking error: {:e}", rep.error_norm)?;
    writeln!(out, "error against reference: {:e}", rep.reference_error_norm)?;
    if rep.best_effort {
        writeln!(out, "best effort: CA^(L-1)B is not right invertible")?;
    }
    Ok(())
}

fn render_corpus(rep: &CorpusReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "ex  L  sc so mn oc is tk  region  status")?;
    let b = |v: bool| if v { "T " } else { "F " };
    for row in &rep.rows {
        match &row.profile {
            Some(p) => {
                let t = p.tuple();
                let delay = p.delay.map_or_else(|| "-".to_string(), |l| l.to_string());
                let region = p.venn_region.map_or_else(|| "-".to_string(), |r| r.to_string());
                writeln!(
                    out,
                    "{:>2}  {:<2} {}{}{}{}{}{}{:>6}  {}",
                    row.example,
                    delay,
                    b(t.state_controllable),
                    b(t.state_observable),
                    b(t.minimal),
                    b(t.output_controllable),
                    b(t.iso),
                    if p.trackable.is_none() { "- " } else { b(t.trackable) },
                    region,
                    if row.matches { "ok" } else { "MISMATCH" }
                )?;
            }
            None => writeln!(out, "{:>2}  error: {}", row.example, row.error.as_deref().unwrap_or("missing"))?,
        }
    }
    let bad = rep.rows.iter().filter(|r| !r.matches).count();
    writeln!(out, "{} of {} examples match", rep.rows.len() - bad, rep.rows.len())
}

fn corpus_row(example: u8, file: String, loaded: Result<NamedSystem>, tol: RankTolerance) -> Option<CorpusRow> {
    let expected = corpus::expected(example)?;
    let (profile, error) = match loaded {
        Ok(sys) => (Some(classify(&sys.system, tol)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let matches = profile.as_ref().is_some_and(|p: &PropertyProfile| expected.matches(p));
    Some(CorpusRow { example, file, expected: expected.tuple, expected_delay: expected.delay, profile, error, matches })
}

/// Classify the corpus in `dir` (or the bundled one) against the expected table.
/// Missing examples count as mismatches.
pub fn corpus_report(dir: Option<&Path>, tol: RankTolerance) -> Result<CorpusReport> {
    let mut rows: Vec<CorpusRow> = match dir {
        None => corpus::bundled()
            .into_iter()
            .filter_map(|(n, file, sys)| corpus_row(n, file.to_string(), Ok(sys), tol))
            .collect(),
        Some(dir) => corpus::scan_dir(dir)?
            .into_iter()
            .filter_map(|(n, path)| corpus_row(n, path.display().to_string(), load_system(&path), tol))
            .collect(),
    };
    for n in 1..=17u8 {
        if !rows.iter().any(|r| r.example == n) {
            let expected = corpus::expected(n).expect("1..=17 are tabulated");
            rows.push(CorpusRow {
                example: n,
                file: String::new(),
                expected: expected.tuple,
                expected_delay: expected.delay,
                profile: None,
                error: Some("file missing".into()),
                matches: false,
            });
        }
    }
    rows.sort_by_key(|r| r.example);
    let all_match = rows.iter().all(|r| r.matches);
    Ok(CorpusReport { rows, all_match })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::AnalyzeReport;

    #[test]
    fn short_numbers() {
        assert_eq!(short(2.0 / 3.0), "0.667");
        assert_eq!(short(1.0), "1");
        assert_eq!(short(0.5), "0.5");
        assert_eq!(short(-1e-9), "0");
    }

    #[test]
    fn analyze_json_round_trips() {
        for (_, _, sys) in corpus::bundled() {
            let rep = analyze_report(&sys, None, ThetaVariant::Quadratic, RankTolerance::default()).unwrap();
            let text = serde_json::to_string(&rep).unwrap();
            let back: AnalyzeReport = serde_json::from_str(&text).unwrap();
            assert_eq!(back, rep);
        }
    }

    #[test]
    fn corpus_json_round_trips() {
        let rep = corpus_report(None, RankTolerance::default()).unwrap();
        assert!(rep.all_match);
        let back: CorpusReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn analyze_text_for_reference_systems() {
        let (_, _, ex12) = corpus::bundled().remove(11);
        let rep = analyze_report(&ex12, None, ThetaVariant::Linear, RankTolerance::default()).unwrap();
        let mut buf = Vec::new();
        render_analyze(&rep, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("trackable, rank 2 of 2, Θ=1"));
    }
}
