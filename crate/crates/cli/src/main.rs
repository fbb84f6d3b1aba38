mod output;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use star_detect::asymptotics::{self, classify_phase, g_curve, optimal_exponent, ExponentSettings, Region};
use star_detect::montecarlo::{estimate_exponent, simulate, SimulationSpec, EXACT_RISK_MAX_AGENTS};
use star_detect::optimize::{self, OptimizerSettings, PbpoVariant, SweepPoint, DEFAULT_SEED};
use star_detect::prospect::{fit_prelec_minimax, max_gap, prelec, prelec_risk_gap, FitSettings, Q0Strategy};
use star_detect::{CostPair, FusionError, NetworkConfig, ObservationModel};

use output::{g10, Table};

#[derive(Parser)]
#[command(name = "star-detect", version, about = "Exact risk, belief optimization and asymptotics for star detection networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// True prior probability of H=0.
    #[arg(long, global = true, default_value_t = 0.3)]
    pi0: f64,
    /// False-alarm cost.
    #[arg(long, global = true, default_value_t = 1.0)]
    cfa: f64,
    /// Missed-detection cost.
    #[arg(long, global = true, default_value_t = 1.0)]
    cmd: f64,
    /// Gaussian noise standard deviation.
    #[arg(long, global = true, default_value_t = 1.0)]
    sigma: f64,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, env = "STAR_DETECT_THREADS")]
    threads: Option<usize>,
    /// Write the data table as CSV to PATH (`-` for standard output).
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Treat boundary, degenerate and non-converged results as errors (exit 3).
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Exact risk of one belief tuple.
    Risk {
        #[arg(long)]
        q0: f64,
        /// Comma-separated local beliefs.
        #[arg(long, allow_hyphen_values = true)]
        q: String,
    },
    /// Exhaustive lattice search, risk contour or prior sweep.
    Grid {
        /// Number of local agents.
        #[arg(long, default_value_t = 2)]
        agents: usize,
        /// Risk over the (q1, q2) lattice at fixed q0 (two agents).
        #[arg(long, conflicts_with = "sweep_pi0")]
        contour: bool,
        /// Fusion belief for the contour; defaults to the lattice optimum.
        #[arg(long, requires = "contour")]
        q0: Option<f64>,
        /// Lattice spacing of the contour.
        #[arg(long, default_value_t = 0.01)]
        contour_step: f64,
        /// Optimize for each prior in START:STOP:STEP.
        #[arg(long, value_name = "RANGE")]
        sweep_pi0: Option<String>,
        #[arg(long)]
        tie_locals: bool,
        /// Finest lattice spacing of the search.
        #[arg(long, default_value_t = 2e-4)]
        resolution: f64,
    },
    /// Person-by-person optimization.
    Pbpo {
        /// Starting fusion belief.
        #[arg(long, default_value_t = 0.5)]
        q0: f64,
        /// Starting local beliefs, comma-separated.
        #[arg(long, default_value = "0.5,0.5")]
        q: String,
        #[arg(long, default_value_t = 5e-4)]
        delta: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = VariantArg::Step)]
        variant: VariantArg,
        #[arg(long)]
        tie_locals: bool,
        /// Emit one CSV row per sweep instead of the final tuple.
        #[arg(long)]
        trace: bool,
    },
    /// Fit a Prelec curve to a tied prior sweep and report the risk gap.
    Prelec {
        /// CSV written by `grid --sweep-pi0 ... --tie-locals`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::KeepOptimal)]
        q0_strategy: StrategyArg,
    },
    /// Many-agent limit region of identical local beliefs.
    Phase {
        #[arg(long, required_unless_present = "grid")]
        q0: Option<f64>,
        #[arg(long, required_unless_present = "grid")]
        q1: Option<f64>,
        /// Region map over the open unit square with this spacing.
        #[arg(long, conflicts_with_all = ["q0", "q1"])]
        grid: Option<f64>,
    },
    /// Optimal risk exponent and the g curve, or a fitted exponent.
    Exponent {
        /// Spacing of the emitted g curve.
        #[arg(long, default_value_t = 0.01)]
        curve_step: f64,
        /// Fit the decay of the risk over network sizes instead.
        #[arg(long)]
        estimate: bool,
        /// Network sizes START:STOP:STEP for --estimate.
        #[arg(long, default_value = "5:60:5", requires = "estimate")]
        n: String,
        /// Fusion belief for --estimate; defaults to the optimal belief.
        #[arg(long, requires = "estimate")]
        q0: Option<f64>,
        /// Local belief for --estimate; defaults to the optimal belief.
        #[arg(long, requires = "estimate")]
        q1: Option<f64>,
        /// Trials per size beyond the exact-risk limit.
        #[arg(long, default_value_t = 100_000, requires = "estimate")]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED, requires = "estimate")]
        seed: u64,
    },
    /// Monte Carlo estimate of the risk.
    Simulate {
        #[arg(long)]
        q0: f64,
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Step,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    KeepOptimal,
    Reoptimize,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Numeric(String),
    Io(String),
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        CliError::Validation(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}

/// Headline `key=value` lines plus an optional data table.
struct Report {
    lines: Vec<String>,
    table: Table,
}

impl Report {
    fn new(table: Table) -> Self {
        Self { lines: Vec::new(), table }
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    fn emit(&self, csv: Option<&Path>) -> CliResult<()> {
        let to_stdout = csv == Some(Path::new("-"));
        let headline = if to_stdout {
            write_lines(io::stderr().lock(), &self.lines)
        } else {
            write_lines(io::stdout().lock(), &self.lines)
        };
        quiet_pipe(headline).map_err(|e| CliError::Io(e.to_string()))?;
        if let Some(path) = csv {
            quiet_pipe(self.table.write_to(path)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn write_lines(mut sink: impl Write, lines: &[String]) -> io::Result<()> {
    for line in lines {
        writeln!(sink, "{line}")?;
    }
    sink.flush()
}

/// A closed downstream pipe is not an error for a batch tool.
fn quiet_pipe(r: io::Result<()>) -> io::Result<()> {
    match r {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Validation(format!("not a number: {v:?}"))))
        .collect()
}

fn range_parts(s: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return invalid(format!("range must be START:STOP:STEP, got {s:?}"));
    }
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| CliError::Validation(format!("not a number: {v:?}")));
    let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
        return invalid(format!("range {s:?} needs a positive step and STOP >= START"));
    }
    Ok((start, stop, step))
}

/// `START:STOP:STEP`, including STOP when it lies on the lattice.
fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let (start, stop, step) = range_parts(s)?;
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| round12(start + k as f64 * step)).collect())
}

fn parse_size_range(s: &str) -> CliResult<Vec<usize>> {
    let (start, stop, step) = range_parts(s)?;
    if [start, stop, step].iter().any(|v| v.fract() != 0.0) || start < 1.0 {
        return invalid(format!("size range {s:?} must use positive integers"));
    }
    Ok((start as usize..=stop as usize).step_by(step as usize).collect())
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Points `k * step` strictly inside (0, 1).
fn open_unit_lattice(step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && step < 0.5) {
        return invalid(format!("lattice step must be in (0, 0.5), got {step}"));
    }
    let count = (1.0 / step + 1e-9).floor() as usize;
    Ok((1..=count).map(|k| round12(k as f64 * step)).filter(|&q| q < 1.0).collect())
}

impl Common {
    fn costs(&self) -> CliResult<CostPair> {
        Ok(CostPair::new(self.cfa, self.cmd)?)
    }

    fn model(&self) -> CliResult<ObservationModel> {
        Ok(ObservationModel::gaussian(self.sigma)?)
    }

    fn network(&self, q0: f64, q_local: Vec<f64>) -> CliResult<NetworkConfig> {
        Ok(NetworkConfig::new(self.pi0, self.costs()?, self.model()?, q0, q_local)?)
    }
}

fn belief_header(first: &[&str], n: usize, last: &[&str]) -> Vec<String> {
    first
        .iter()
        .map(|s| s.to_string())
        .chain(std::iter::once("q0".to_string()))
        .chain((1..=n).map(|i| format!("q{i}")))
        .chain(last.iter().map(|s| s.to_string()))
        .collect()
}

fn belief_lines(report: &mut Report, beliefs: &[f64]) {
    for (i, q) in beliefs.iter().enumerate() {
        report.line(&format!("q{i}"), f4(*q));
    }
}

fn cmd_risk(common: &Common, q0: f64, q: &str) -> CliResult<Report> {
    let config = common.network(q0, parse_list(q)?)?;
    let risk = config.exact_risk();
    let dist = config.count_distribution();
    let mut report = Report::new(Table::new(&[
        "k", "pmf_h0", "pmf_h1", "updated_belief", "threshold", "p_fa", "p_md", "r0", "p_fa0", "p_md0",
    ]));
    report.line("R0", f4(risk.r0));
    report.line("P_FA0", f4(risk.p_fa0));
    report.line("P_MD0", f4(risk.p_md0));
    for p in &risk.per_count {
        report.lines.push(format!(
            "k={} belief={} threshold={} p_fa={} p_md={}",
            p.k,
            f4(p.updated_belief),
            f4(p.threshold),
            f4(p.p_fa),
            f4(p.p_md)
        ));
        report.table.push(
            std::iter::once(p.k.to_string())
                .chain(
                    [
                        dist.pmf_h0[p.k],
                        dist.pmf_h1[p.k],
                        p.updated_belief,
                        p.threshold,
                        p.p_fa,
                        p.p_md,
                        risk.r0,
                        risk.p_fa0,
                        risk.p_md0,
                    ]
                    .iter()
                    .map(|&x| g10(x)),
                )
                .collect(),
        );
    }
    Ok(report)
}

struct GridArgs {
    agents: usize,
    contour: bool,
    q0: Option<f64>,
    contour_step: f64,
    sweep_pi0: Option<String>,
    tie_locals: bool,
    resolution: f64,
}

fn cmd_grid(common: &Common, args: GridArgs) -> CliResult<Report> {
    let template = common.network(0.5, vec![0.5; args.agents])?;
    let settings =
        OptimizerSettings { grid_resolution: args.resolution, tie_local_beliefs: args.tie_locals, ..Default::default() };
    settings.validate()?;
    let n = args.agents;

    if args.contour {
        if n != 2 {
            return invalid("contour needs exactly two local agents");
        }
        let lattice = open_unit_lattice(args.contour_step)?;
        if let Some(q0) = args.q0 {
            star_detect::observation::validate_belief("q0", q0)?;
        }
        let q0 = match args.q0 {
            Some(q0) => q0,
            None => optimize::grid_search(&template, &settings)?.q0(),
        };
        let surface = optimize::risk_contour(&template, q0, &lattice)?;
        let mut report = Report::new(Table::new(&["q1", "q2", "R0"]));
        report.line("q0", g10(q0));
        let best = surface
            .iter()
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("non-empty lattice");
        report.line("min_q1", f4(best.0));
        report.line("min_q2", f4(best.1));
        report.line("min_R0", f4(best.2));
        for (q1, q2, r) in surface {
            report.table.push_numbers(&[q1, q2, r]);
        }
        return Ok(report);
    }

    let priors = match &args.sweep_pi0 {
        Some(range) => parse_range(range)?,
        None => vec![common.pi0],
    };
    for &pi0 in &priors {
        if !(pi0 > 0.0 && pi0 < 1.0) {
            return Err(FusionError::DegeneratePrior(pi0).into());
        }
    }
    let points = optimize::sweep_prior(&template, &priors, &settings)?;
    let mut report = Report::new(Table::with_header(belief_header(&["pi0"], n, &["R0"])));
    if let [only] = points.as_slice() {
        belief_lines(&mut report, &only.beliefs);
        report.line("R0", f4(only.risk));
    } else {
        report.line("priors", points.len());
        let best = points.iter().max_by(|a, b| a.risk.total_cmp(&b.risk)).expect("non-empty sweep");
        report.line("max_R0", f4(best.risk));
        report.line("max_R0_pi0", g10(best.pi0));
    }
    for p in &points {
        let row: Vec<f64> = std::iter::once(p.pi0).chain(p.beliefs.iter().copied()).chain([p.risk]).collect();
        report.table.push_numbers(&row);
    }
    Ok(report)
}

struct PbpoArgs {
    q0: f64,
    q: String,
    delta: f64,
    eps: f64,
    max_iters: usize,
    restarts: usize,
    seed: u64,
    variant: VariantArg,
    tie_locals: bool,
    trace: bool,
}

fn cmd_pbpo(common: &Common, args: PbpoArgs) -> CliResult<Report> {
    let template = common.network(args.q0, parse_list(&args.q)?)?;
    let settings = OptimizerSettings {
        step: args.delta,
        eps: args.eps,
        max_iters: args.max_iters,
        restarts: args.restarts,
        tie_local_beliefs: args.tie_locals,
        seed: args.seed,
        ..Default::default()
    };
    let variant = match args.variant {
        VariantArg::Step => PbpoVariant::Step,
        VariantArg::Exact => PbpoVariant::Exact,
    };
    let result = optimize::pbpo(&template, &settings, variant)?;
    if common.strict && !result.converged {
        return Err(CliError::Numeric(format!("PBPO did not converge within {} sweeps", args.max_iters)));
    }
    let n = template.n();
    let mut report = Report::new(Table::with_header(belief_header(&["iteration"], n, &["R0"])));
    belief_lines(&mut report, &result.beliefs);
    report.line("R0", f4(result.risk));
    report.line("iterations", result.iterations);
    report.line("converged", result.converged);
    report.line("stationarity_residual", g10(result.stationarity_residual));
    let rows: Vec<(usize, &[f64], f64)> = if args.trace {
        result.trace.iter().map(|r| (r.iteration, r.beliefs.as_slice(), r.risk)).collect()
    } else {
        vec![(result.iterations, result.beliefs.as_slice(), result.risk)]
    };
    for (iteration, beliefs, risk) in rows {
        report.table.push(
            std::iter::once(iteration.to_string())
                .chain(beliefs.iter().chain([&risk]).map(|&x| g10(x)))
                .collect(),
        );
    }
    Ok(report)
}

fn read_sweep(path: &Path) -> CliResult<(usize, Vec<SweepPoint>)> {
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(format!("cannot read sweep input ({e})")))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| header.iter().position(|h| h == name);
    let pi0_col = column("pi0").ok_or_else(|| bad("missing column pi0".into()))?;
    let r_col = column("R0").ok_or_else(|| bad("missing column R0".into()))?;
    let mut belief_cols = vec![column("q0").ok_or_else(|| bad("missing column q0".into()))?];
    while let Some(c) = column(&format!("q{}", belief_cols.len())) {
        belief_cols.push(c);
    }
    let n = belief_cols.len() - 1;
    if n == 0 {
        return Err(bad("missing local belief column q1".into()));
    }
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let value = |c: usize| {
            record
                .get(c)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", line + 2, header.get(c).unwrap_or("?"))))
        };
        let beliefs = belief_cols.iter().map(|&c| value(c)).collect::<CliResult<Vec<f64>>>()?;
        if beliefs[1..].iter().any(|&q| q != beliefs[1]) {
            return Err(bad(format!("row {}: local beliefs are not tied", line + 2)));
        }
        points.push(SweepPoint { pi0: value(pi0_col)?, beliefs, risk: value(r_col)? });
    }
    if points.is_empty() {
        return Err(bad("sweep input has no rows".into()));
    }
    Ok((n, points))
}

fn cmd_prelec(common: &Common, input: &Path, strategy: StrategyArg) -> CliResult<Report> {
    let (n, sweep) = read_sweep(input)?;
    for p in &sweep {
        if !(p.pi0 > 0.0 && p.pi0 < 1.0) {
            return Err(FusionError::DegeneratePrior(p.pi0).into());
        }
    }
    let template = common.network(0.5, vec![0.5; n])?;
    let curve: Vec<(f64, f64)> = sweep.iter().map(|p| (p.pi0, p.beliefs[1])).collect();
    let fit = fit_prelec_minimax(&curve, &FitSettings::default())?;
    let strategy = match strategy {
        StrategyArg::KeepOptimal => Q0Strategy::KeepOptimal,
        StrategyArg::Reoptimize => Q0Strategy::Reoptimize,
    };
    let gaps = prelec_risk_gap(&template, &sweep, fit.params, strategy)?;
    let mut report =
        Report::new(Table::new(&["pi0", "q1_opt", "w", "q0_prelec", "R0_opt", "R0_prelec", "gap"]));
    report.line("alpha", f4(fit.params.alpha));
    report.line("beta", f4(fit.params.beta_w));
    report.line("linf_error", g10(fit.linf_error));
    if let Some(worst) = max_gap(&gaps) {
        report.line("max_gap", f4(worst.gap()));
        report.line("max_gap_pi0", g10(worst.pi0));
    }
    for p in &gaps {
        debug_assert_eq!(p.q_local_prelec, prelec(p.pi0, fit.params));
        report.table.push_numbers(&[p.pi0, p.q_local_opt, p.q_local_prelec, p.q0_prelec, p.risk_opt, p.risk_prelec, p.gap()]);
    }
    Ok(report)
}

fn cmd_phase(common: &Common, q0: Option<f64>, q1: Option<f64>, grid: Option<f64>) -> CliResult<Report> {
    let costs = common.costs()?;
    let model = common.model()?;
    let mut report = Report::new(Table::new(&[
        "q0", "q1", "z1", "z2", "t0", "t1", "drift_h0", "drift_h1", "region",
    ]));
    let push = |report: &mut Report, q0: f64, q1: f64, p: &asymptotics::PhaseClassification| {
        report.table.push(
            [q0, q1, p.z1, p.z2, p.t0, p.t1, p.drift_h0, p.drift_h1]
                .iter()
                .map(|&x| g10(x))
                .chain([p.region.to_string()])
                .collect(),
        );
    };

    let boundaries = if let Some(step) = grid {
        let lattice = open_unit_lattice(step)?;
        let map = asymptotics::region_map(&model, &costs, &lattice);
        for region in [Region::Case1, Region::Case2, Region::Case3, Region::Case4, Region::Boundary] {
            report.line(&format!("count_{region}"), map.iter().filter(|m| m.2.region == region).count());
        }
        for (q0, q1, p) in &map {
            push(&mut report, *q0, *q1, p);
        }
        map.iter().filter(|m| m.2.region == Region::Boundary).count()
    } else {
        let (q0, q1) = (q0.expect("clap requires q0"), q1.expect("clap requires q1"));
        let q0 = star_detect::observation::validate_belief("q0", q0)?;
        let q1 = star_detect::observation::validate_belief("q1", q1)?;
        if !(common.pi0 > 0.0 && common.pi0 < 1.0) {
            return Err(FusionError::DegeneratePrior(common.pi0).into());
        }
        let p = classify_phase(&model, &costs, q0, q1);
        report.line("region", p.region);
        report.line("z1", g10(p.z1));
        report.line("z2", g10(p.z2));
        report.line("t0", g10(p.t0));
        report.line("t1", g10(p.t1));
        report.line("drift_h0", g10(p.drift_h0));
        report.line("drift_h1", g10(p.drift_h1));
        if let Some(limit) = p.limit_risk(&costs, common.pi0) {
            report.line("limit_R0", f4(limit));
        }
        push(&mut report, q0, q1, &p);
        usize::from(p.region == Region::Boundary)
    };
    if common.strict && boundaries > 0 {
        return Err(CliError::Numeric(format!("{boundaries} point(s) lie on a region boundary")));
    }
    Ok(report)
}

struct ExponentArgs {
    curve_step: f64,
    estimate: bool,
    n: String,
    q0: Option<f64>,
    q1: Option<f64>,
    trials: u64,
    seed: u64,
}

fn cmd_exponent(common: &Common, args: ExponentArgs) -> CliResult<Report> {
    let costs = common.costs()?;
    let model = common.model()?;
    let settings = ExponentSettings::default();

    if args.estimate {
        let sizes = parse_size_range(&args.n)?;
        if args.trials == 0 {
            return invalid("trials must be positive");
        }
        let (q0, q1) = match (args.q0, args.q1) {
            (Some(q0), Some(q1)) => (q0, q1),
            (q0, q1) => {
                let q_star = optimal_exponent(&model, &costs, &settings).q_star;
                (q0.unwrap_or(q_star), q1.unwrap_or(q_star))
            }
        };
        let template = common.network(q0, vec![q1])?;
        let est = estimate_exponent(&template, &sizes, args.trials, args.seed).map_err(|e| match e {
            FusionError::InvalidSettings(msg) if !msg.starts_with("N list") => CliError::Numeric(msg),
            other => other.into(),
        })?;
        let mut report = Report::new(Table::new(&["N", "R0", "excess"]));
        report.line("region", est.region);
        report.line("limit_R0", f4(est.limit_risk));
        report.line("beta_hat", f4(est.beta_hat()));
        report.line("log_coefficient", f4(est.log_prefactor.log_coefficient));
        report.line("r_squared", f4(est.log_prefactor.r_squared));
        report.line("beta_hat_linear", f4(est.linear.beta_hat));
        report.line("r_squared_linear", f4(est.linear.r_squared));
        if !est.truncated.is_empty() {
            let sizes: Vec<String> = est.truncated.iter().map(|n| n.to_string()).collect();
            report.line("truncated", sizes.join(","));
        }
        for &(n, r, excess) in &est.points {
            report.table.push(vec![n.to_string(), g10(r), g10(excess)]);
        }
        return Ok(report);
    }

    if !(args.curve_step > 0.0 && args.curve_step.is_finite()) {
        return invalid("curve step must be positive");
    }
    let r = optimal_exponent(&model, &costs, &settings);
    let mut report = Report::new(Table::new(&["lambda", "s_star", "g"]));
    report.line("lambda_star", f4(r.lambda_star));
    report.line("s_star", f4(r.s_star));
    report.line("beta_star", f4(r.beta_star));
    report.line("q_star", f4(r.q_star));
    let span = settings.span_sigmas * model.sigma();
    let lambdas = parse_range(&format!("{}:{}:{}", -span, 1.0 + span, args.curve_step))?;
    for (lambda, s, g) in g_curve(&model, &lambdas, settings.tol) {
        report.table.push_numbers(&[lambda, s, g]);
    }
    Ok(report)
}

fn cmd_simulate(common: &Common, q0: f64, q: &str, trials: u64, seed: u64) -> CliResult<Report> {
    let config = common.network(q0, parse_list(q)?)?;
    if trials == 0 {
        return invalid("trials must be positive");
    }
    let exact = (config.n() <= EXACT_RISK_MAX_AGENTS).then(|| config.exact_risk().r0);
    let r = simulate(&SimulationSpec { config, trials, seed })?;
    let mut report = Report::new(Table::new(&[
        "trials", "seed", "empirical_risk", "std_error", "fa_count", "md_count", "h0_count", "exact_risk",
    ]));
    report.line("empirical_R0", f4(r.empirical_risk));
    report.line("std_error", g10(r.std_error));
    if let Some(exact) = exact {
        report.line("exact_R0", f4(exact));
    }
    report.line("fa_count", r.fa_count);
    report.line("md_count", r.md_count);
    report.line("h0_count", r.h0_count);
    report.table.push(vec![
        r.trials.to_string(),
        seed.to_string(),
        g10(r.empirical_risk),
        g10(r.std_error),
        r.fa_count.to_string(),
        r.md_count.to_string(),
        r.h0_count.to_string(),
        exact.map(g10).unwrap_or_default(),
    ]);
    Ok(report)
}

fn run(cli: Cli) -> CliResult<()> {
    let common = &cli.common;
    if let Some(threads) = common.threads {
        if threads == 0 {
            return invalid("threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let report = match cli.command {
        Command::Risk { q0, q } => cmd_risk(common, q0, &q)?,
        Command::Grid { agents, contour, q0, contour_step, sweep_pi0, tie_locals, resolution } => cmd_grid(
            common,
            GridArgs { agents, contour, q0, contour_step, sweep_pi0, tie_locals, resolution },
        )?,
        Command::Pbpo { q0, q, delta, eps, max_iters, restarts, seed, variant, tie_locals, trace } => cmd_pbpo(
            common,
            PbpoArgs { q0, q, delta, eps, max_iters, restarts, seed, variant, tie_locals, trace },
        )?,
        Command::Prelec { input, q0_strategy } => cmd_prelec(common, &input, q0_strategy)?,
        Command::Phase { q0, q1, grid } => cmd_phase(common, q0, q1, grid)?,
        Command::Exponent { curve_step, estimate, n, q0, q1, trials, seed } => {
            cmd_exponent(common, ExponentArgs { curve_step, estimate, n, q0, q1, trials, seed })?
        }
        Command::Simulate { q0, q, trials, seed } => cmd_simulate(common, q0, &q, trials, seed)?,
    };
    report.emit(common.csv.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
