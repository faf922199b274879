use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use scenario_discard::bounds::{self, BoundError, Formula};
use scenario_discard::experiments::output::{write_csv, write_json, Provenance};
use scenario_discard::experiments::{
    outer_probability_mc, parse_grid, resource_compare, Execution, ExperimentError, Generator, OuterMcConfig,
    RandomSource, ScenarioSampler, Scheme,
};
use scenario_discard::scenario::{
    greedy_removal, run_cascade, verify_compression, CascadeMode, ScenarioError, ScenarioProgram,
};
use scenario_discard::{LpError, Tolerances};

const EXIT_INPUT: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "scenario-discard", version, about = "Cascaded sampling-and-discarding for linear scenario programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate or invert a violation bound.
    Bound(BoundArgs),
    /// Run the discarding cascade on one program.
    Cascade(CascadeArgs),
    /// Run greedy one-at-a-time removal on one program.
    Greedy(GreedyArgs),
    /// Reproduce an experiment, writing CSV and metadata.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FormulaArg {
    Cg11,
    Compression,
    Cascade,
    AnalyticToy,
}

impl From<FormulaArg> for Formula {
    fn from(f: FormulaArg) -> Self {
        match f {
            FormulaArg::Cg11 => Formula::Cg11,
            FormulaArg::Compression => Formula::Compression,
            FormulaArg::Cascade => Formula::Cascade,
            FormulaArg::AnalyticToy => Formula::AnalyticToy,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    FullySupported,
    Regularized,
}

impl From<ModeArg> for CascadeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FullySupported => CascadeMode::FullySupported,
            ModeArg::Regularized => CascadeMode::Regularized,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GeneratorArg {
    Analytic,
    Resource,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeArg {
    Cascade,
    Greedy,
}

#[derive(Debug, Args, Serialize)]
struct BoundArgs {
    #[arg(long, value_enum, default_value = "cascade")]
    formula: FormulaArg,
    #[arg(long)]
    m: u64,
    #[arg(long, default_value_t = 1)]
    d: u64,
    /// Removed scenarios; ignored with --max-r.
    #[arg(long, default_value_t = 0)]
    r: u64,
    /// Compression-set size for `--formula compression` (default r + d).
    #[arg(long)]
    zeta: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Print the smallest ε with bound <= beta.
    #[arg(long)]
    invert: bool,
    /// Print the largest r with bound <= beta, raw and rounded down to a multiple of d.
    #[arg(long)]
    max_r: bool,
}

#[derive(Debug, Args, Serialize)]
struct TolArgs {
    #[arg(long, default_value_t = Tolerances::default().feas)]
    tol_feas: f64,
    #[arg(long, default_value_t = Tolerances::default().active)]
    tol_active: f64,
    #[arg(long, default_value_t = Tolerances::default().x)]
    tol_x: f64,
}

impl TolArgs {
    fn get(&self) -> Tolerances {
        Tolerances {
            feas: self.tol_feas,
            active: self.tol_active,
            x: self.tol_x,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SourceArgs {
    /// Program file (JSON).
    #[arg(long, conflicts_with = "generator")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    generator: Option<GeneratorArg>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Resource rows per scenario.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    seed: u64,
}

impl SourceArgs {
    fn generator(&self) -> Option<Generator> {
        self.generator.map(|g| match g {
            GeneratorArg::Analytic => Generator::Analytic,
            GeneratorArg::Resource => Generator::Resource { d: self.d, n: self.n },
        })
    }

    fn load(&self) -> Result<ScenarioProgram, CliError> {
        if let Some(path) = &self.input {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            return Ok(ScenarioProgram::from_json(&text)?);
        }
        let g = self
            .generator()
            .ok_or_else(|| CliError::input("need --input or --generator"))?;
        let m = self.m.ok_or_else(|| CliError::input("--generator needs --m"))?;
        if m == 0 || g.dim() == 0 || self.n == 0 {
            return Err(CliError::input("--m, --d and --n must be positive"));
        }
        Ok(g.program(m, &mut RandomSource::new(self.seed).stream(0)))
    }
}

#[derive(Debug, Args, Serialize)]
struct CascadeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    ell: usize,
    #[arg(long, value_enum, default_value = "regularized")]
    mode: ModeArg,
    #[arg(long)]
    verify_compression: bool,
    /// Artifact directory (trace.json, stages.csv, metadata.json).
    #[arg(long, env = "SCENARIO_DISCARD_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Debug, Args, Serialize)]
struct GreedyArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    r: usize,
    #[arg(long, env = "SCENARIO_DISCARD_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Subcommand)]
enum Experiment {
    /// Outer probability on the uniform example against its exact law.
    AnalyticTightness(TightnessArgs),
    /// Cost of cascade-bound sizing against classical sizing over an ε grid.
    ResourceCompare(CompareArgs),
    /// Outer probability of any generator and scheme against the cascade bound.
    OuterMc(OuterArgs),
}

#[derive(Debug, Args, Serialize)]
struct RunArgs {
    #[arg(long, default_value_t = 30)]
    seed: u64,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, env = "SCENARIO_DISCARD_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Debug, Args, Serialize)]
struct TightnessArgs {
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    ell: usize,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    m: usize,
    #[arg(long, default_value_t = 1e-6)]
    beta: f64,
    #[arg(long, default_value = "0.01:0.005:0.08")]
    eps_grid: String,
    #[arg(long, value_enum, default_value = "regularized")]
    mode: ModeArg,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args, Serialize)]
struct OuterArgs {
    #[arg(long, value_enum, default_value = "resource")]
    generator: GeneratorArg,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, value_enum, default_value = "cascade")]
    scheme: SchemeArg,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum, default_value = "regularized")]
    mode: ModeArg,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long, default_value_t = 10_000)]
    inner_samples: u64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            msg: msg.into(),
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let code = match &e {
            e if e.is_assumption() => EXIT_ASSUMPTION,
            ScenarioError::NotOptimal { .. } | ScenarioError::Lp(LpError::IterationLimit(_)) => EXIT_SOLVER,
            _ => EXIT_INPUT,
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Scenario(e) => e.into(),
            ExperimentError::ExclusionRate { .. } => Self {
                code: EXIT_ASSUMPTION,
                msg: e.to_string(),
            },
            e => Self::input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Cascade(a) => cmd_cascade(a),
        Command::Greedy(a) => cmd_greedy(a),
        Command::Experiment { which } => match which {
            Experiment::AnalyticTightness(a) => cmd_tightness(a),
            Experiment::ResourceCompare(a) => cmd_compare(a),
            Experiment::OuterMc(a) => cmd_outer(a),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    // a closed pipe downstream is not our failure
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn cmd_bound(a: &BoundArgs) -> Result<(), CliError> {
    let formula = Formula::from(a.formula);
    if a.max_r {
        let (eps, beta) = a
            .eps
            .zip(a.beta)
            .ok_or_else(|| CliError::input("--max-r needs --eps and --beta"))?;
        let raw = bounds::max_removable(a.m, a.d, eps, beta, formula, false)?;
        let batched = bounds::max_removable(a.m, a.d, eps, beta, formula, true)?;
        print_json(&json!({ "formula": formula, "m": a.m, "d": a.d, "epsilon": eps, "beta": beta,
            "max_r": raw, "max_r_batched": batched }));
        return Ok(());
    }
    if a.invert {
        let beta = a.beta.ok_or_else(|| CliError::input("--invert needs --beta"))?;
        let inv = bounds::invert_epsilon(a.m, a.d, a.r, beta, formula)?;
        print_json(&json!({ "formula": formula, "m": a.m, "d": a.d, "r": a.r, "beta": beta,
            "epsilon": inv.epsilon, "boundary": inv.boundary, "tolerance": bounds::INVERSION_TOL }));
        return Ok(());
    }
    let eps = a.eps.ok_or_else(|| CliError::input("need --eps"))?;
    let value = match (formula, a.zeta) {
        (Formula::Compression, Some(zeta)) => bounds::bound_compression(a.m, zeta, eps)?,
        (_, Some(_)) => return Err(CliError::input("--zeta only applies to --formula compression")),
        _ => bounds::evaluate(formula, a.m, a.d, a.r, eps)?,
    };
    print_json(&json!({ "formula": formula, "m": a.m, "d": a.d, "r": a.r, "zeta": a.zeta, "epsilon": eps,
        "value": value.value, "raw": value.raw }));
    Ok(())
}

#[derive(Serialize)]
struct StageRow {
    k: usize,
    objective: f64,
    support: String,
    padding: String,
    degenerate: bool,
    minimizer: String,
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_cascade(a: &CascadeArgs) -> Result<(), CliError> {
    let tol = a.tol.get();
    let program = a.source.load()?;
    let trace = run_cascade(&program, a.ell, a.mode.into(), &tol)?;
    let verified = if a.verify_compression {
        Some(verify_compression(&program, a.ell, &trace, &tol)?)
    } else {
        None
    };
    let summary = json!({
        "m": program.len(), "d": program.dim(), "ell": a.ell, "mode": trace.mode,
        "final_x": trace.final_x, "final_objective": trace.final_objective,
        "objectives": trace.objectives(), "stage_solves": trace.stage_solves,
        "support_solves": trace.support_solves, "compression_candidate": trace.compression_candidate,
        "verify_compression": verified,
    });
    if let Some(dir) = &a.out {
        let rows: Vec<_> = trace
            .stages
            .iter()
            .map(|s| StageRow {
                k: s.k,
                objective: s.objective,
                support: join(&s.support),
                padding: join(&s.padding),
                degenerate: s.degenerate,
                minimizer: join(&s.minimizer),
            })
            .collect();
        write_json(&dir.join("trace.json"), &trace).map_err(CliError::from)?;
        write_csv(&dir.join("stages.csv"), &rows).map_err(CliError::from)?;
        metadata(dir, RandomSource::new(a.source.seed), tol, a)?;
    }
    print_json(&summary);
    Ok(())
}

#[derive(Serialize)]
struct GreedyRow {
    step: usize,
    removed: u64,
    objective: f64,
    candidates: usize,
}

fn cmd_greedy(a: &GreedyArgs) -> Result<(), CliError> {
    let tol = a.tol.get();
    let program = a.source.load()?;
    let trace = greedy_removal(&program, a.r, &tol)?;
    if let Some(dir) = &a.out {
        let rows: Vec<_> = trace
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| GreedyRow {
                step: i + 1,
                removed: s.removed,
                objective: s.objective,
                candidates: s.candidates,
            })
            .collect();
        write_json(&dir.join("trace.json"), &trace).map_err(CliError::from)?;
        write_csv(&dir.join("steps.csv"), &rows).map_err(CliError::from)?;
        metadata(dir, RandomSource::new(a.source.seed), tol, a)?;
    }
    print_json(&json!({
        "m": program.len(), "d": program.dim(), "r": a.r,
        "final_x": trace.final_x(), "final_objective": trace.final_objective(),
        "removed": trace.removed(), "solves": trace.solves,
    }));
    Ok(())
}

fn metadata<C: Serialize>(dir: &Path, rng: RandomSource, tol: Tolerances, config: C) -> Result<(), CliError> {
    metadata_with(dir, Provenance::new(command_line(), rng, tol, config))
}

fn metadata_with<C: Serialize>(dir: &Path, p: Provenance<C>) -> Result<(), CliError> {
    write_json(&dir.join("metadata.json"), &p).map_err(CliError::from)
}

/// Runs `f` with the requested parallelism.
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce(Execution) -> T + Send) -> Result<T, CliError> {
    match jobs {
        Some(0) => Err(CliError::input("--jobs must be positive")),
        Some(1) => Ok(f(Execution::Sequential)),
        #[cfg(feature = "parallel")]
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::input(e.to_string()))?;
            Ok(pool.install(|| f(Execution::Parallel)))
        }
        _ => Ok(f(Execution::Parallel)),
    }
}

#[derive(Serialize)]
struct OuterSummary {
    experiment: &'static str,
    seed: u64,
    m: usize,
    d: usize,
    removed: usize,
    epsilon: f64,
    trials: u64,
    exceed_count: u64,
    excluded: u64,
    ambiguous: u64,
    estimate: f64,
    half_width_95: f64,
    combined_half_width: f64,
    bound: f64,
    /// Estimate within 3 half-widths of the bound (two-sided).
    tight: bool,
    /// Estimate at most bound + 3 combined half-widths.
    within_bound: bool,
}

fn cmd_tightness(a: &TightnessArgs) -> Result<(), CliError> {
    let cfg = OuterMcConfig {
        generator: Generator::Analytic,
        m: a.m,
        scheme: Scheme::Cascade {
            ell: a.ell,
            mode: CascadeMode::FullySupported,
        },
        epsilon: a.eps,
        trials: a.trials,
        inner_samples: 0,
        source: RandomSource::new(a.run.seed),
        tol: a.run.tol.get(),
    };
    let exact = bounds::analytic_violation_cdf(a.m as u64, a.ell as u64, a.eps)?;
    outer_report("analytic-tightness", &cfg, exact, a.run.jobs, a.run.out.as_deref(), a)
}

fn cmd_outer(a: &OuterArgs) -> Result<(), CliError> {
    let generator = match a.generator {
        GeneratorArg::Analytic => Generator::Analytic,
        GeneratorArg::Resource => Generator::Resource { d: a.d, n: a.n },
    };
    let d = generator.dim();
    let scheme = match (a.scheme, a.ell, a.r) {
        (SchemeArg::Cascade, Some(ell), r) => {
            if r.is_some_and(|r| r != ell * d) {
                return Err(CliError::input("--r must equal --ell times d"));
            }
            Scheme::Cascade { ell, mode: a.mode.into() }
        }
        (SchemeArg::Cascade, None, Some(r)) if r % d == 0 => Scheme::Cascade {
            ell: r / d,
            mode: a.mode.into(),
        },
        (SchemeArg::Greedy, ell, Some(r)) if ell.is_none_or(|l| l * d == r) => Scheme::Greedy { r },
        (SchemeArg::Greedy, Some(ell), None) => Scheme::Greedy { r: ell * d },
        _ => return Err(CliError::input("need --ell or --r consistent with d")),
    };
    let removed = scheme.removed(d);
    let cfg = OuterMcConfig {
        generator,
        m: a.m,
        scheme,
        epsilon: a.eps,
        trials: a.trials,
        inner_samples: a.inner_samples,
        source: RandomSource::new(a.run.seed),
        tol: a.run.tol.get(),
    };
    let bound = bounds::evaluate(Formula::Cascade, a.m as u64, d as u64, removed as u64, a.eps)?.value;
    outer_report("outer-mc", &cfg, bound, a.run.jobs, a.run.out.as_deref(), a)
}

fn outer_report<C: Serialize>(
    name: &'static str,
    cfg: &OuterMcConfig,
    bound: f64,
    jobs: Option<usize>,
    out: Option<&Path>,
    args: &C,
) -> Result<(), CliError> {
    let d = cfg.generator.dim();
    if (cfg.scheme.removed(d) + d) >= cfg.m {
        return Err(CliError::input("need m > r + d"));
    }
    let run = with_jobs(jobs, |exec| outer_probability_mc(cfg, exec))??;
    let e = run.estimate;
    let summary = OuterSummary {
        experiment: name,
        seed: cfg.source.seed,
        m: cfg.m,
        d,
        removed: cfg.scheme.removed(d),
        epsilon: e.epsilon,
        trials: e.trials,
        exceed_count: e.exceed_count,
        excluded: e.excluded,
        ambiguous: e.ambiguous,
        estimate: e.point,
        half_width_95: e.half_width_95,
        combined_half_width: e.combined_half_width,
        bound,
        tight: (e.point - bound).abs() <= 3.0 * e.half_width_95,
        within_bound: e.point <= bound + 3.0 * e.combined_half_width,
    };
    if let Some(dir) = out {
        write_csv(&dir.join("trials.csv"), &run.records)?;
        write_csv(&dir.join("summary.csv"), std::slice::from_ref(&summary))?;
        metadata_with(
            dir,
            Provenance::new(command_line(), cfg.source.clone(), cfg.tol, json!({ "args": args, "run": cfg })),
        )?;
    }
    print_json(&serde_json::to_value(&summary).expect("summary serializes"));
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let grid = parse_grid(&a.eps_grid)?;
    let tol = a.run.tol.get();
    let source = RandomSource::new(a.run.seed);
    let generator = Generator::Resource { d: a.d, n: a.n };
    if a.d == 0 || a.n == 0 || a.m <= a.d {
        return Err(CliError::input("need d, n >= 1 and m > d"));
    }
    let program = generator.program(a.m, &mut source.stream(0));
    let rows = resource_compare(&program, &grid, a.beta, a.mode.into(), &tol)?;
    if let Some(dir) = &a.run.out {
        write_csv(&dir.join("compare.csv"), &rows)?;
        let mut p = Provenance::new(command_line(), source, tol, a);
        p.assumptions = vec![
            "resource vector b = all ones",
            "both sizings run the cascade; counts rounded down to multiples of d",
            "greedy arm removes the unrounded classical count",
        ];
        metadata_with(dir, p)?;
    }
    print_json(&serde_json::to_value(&rows).expect("rows serialize"));
    Ok(())
}
