//! The `groupfair` command line.
//!
//! Exit codes: 0 success, 1 operational failure, 2 a violation was found
//! (`witness` only).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::example1;
use crate::fairness::{audit, AuditReport, ConditionalRates, SimulationSpec, DEFAULT_MAX_N};
use crate::population::{load_population, GroupSpec, MeritLabel, Population};
use crate::procedure::{empirical_rates, exact_rates, simulate, Procedure};
use crate::rational::{Probability, Tolerance};
use crate::roc::{
    classify, export_diagram, load_points, to_diamond, DiagramFormat, LabeledPoint, ProcedureClass, RocPoint,
};
use crate::theorem::{construct_witness, exhaustive_search, BipartitionViolation, WitnessReport, WitnessStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

/// Default tolerance when rates come from simulation.
pub const EMPIRICAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "groupfair",
    version,
    about = "Audit decision procedures for group fairness against a moral ground truth"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-group rates, pairwise fairness verdicts and expected convictions.
    Audit(AuditArgs),
    /// Place a procedure (h, k) in the ROC taxonomy.
    Classify(ClassifyArgs),
    /// Build the X=0 / X=1 witness groups for a deterministic procedure.
    Witness(WitnessArgs),
    /// Monte-Carlo outcomes of a randomized procedure.
    Simulate(SimulateArgs),
    /// Reproduce the male/female conviction example.
    Example1(OutputArgs),
    /// Draw procedures on the ROC diamond.
    #[command(name = "roc-export")]
    RocExport(RocExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
    Text,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub population: PathBuf,
    #[arg(long)]
    pub procedure: PathBuf,
    #[arg(long)]
    pub attribute: String,
    /// Defaults to 0 for exact rates and 1e-9 for simulated rates.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Audit simulated rates over this many trials instead of exact rates.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// P(U=0|J=0), as a decimal or a/b.
    #[arg(long, allow_hyphen_values = true)]
    pub h: String,
    /// P(U=0|J=1), as a decimal or a/b.
    #[arg(long, allow_hyphen_values = true)]
    pub k: String,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub population: PathBuf,
    /// Largest population searched exhaustively.
    #[arg(long = "max-n", default_value_t = DEFAULT_MAX_N)]
    pub max_n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub population: PathBuf,
    #[arg(long)]
    pub procedure: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Also report rates per value of this attribute.
    #[arg(long)]
    pub attribute: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RocExportArgs {
    /// CSV with header `label,h,k`.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub body: String,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(body: String) -> Self {
        CommandOutput {
            body,
            warnings: Vec::new(),
            exit_code: EXIT_OK,
        }
    }
}

/// Parses `args`, runs the command and writes its output. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
        }
    };
    match run(&cli).and_then(|out| emit(&cli, out)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn output_args(cli: &Cli) -> &OutputArgs {
    match &cli.command {
        Command::Audit(a) => &a.output,
        Command::Classify(a) => &a.output,
        Command::Witness(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::Example1(a) => a,
        Command::RocExport(a) => &a.output,
    }
}

fn emit(cli: &Cli, out: CommandOutput) -> anyhow::Result<i32> {
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    match &output_args(cli).out {
        Some(path) => fs::write(path, &out.body).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", out.body),
    }
    Ok(out.exit_code)
}

pub fn run(cli: &Cli) -> anyhow::Result<CommandOutput> {
    match &cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Example1(a) => cmd_example1(a),
        Command::RocExport(a) => cmd_roc_export(a),
    }
}

fn pick_format(
    requested: Option<Format>,
    default: Format,
    supported: &[Format],
    command: &str,
) -> anyhow::Result<Format> {
    let f = requested.unwrap_or(default);
    if !supported.contains(&f) {
        bail!("{command} does not support --format {}", format_name(f));
    }
    Ok(f)
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Svg => "svg",
        Format::Text => "text",
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_population(path: &Path) -> anyhow::Result<Population> {
    let file = fs::File::open(path).with_context(|| format!("opening population {}", path.display()))?;
    load_population(file).with_context(|| format!("reading population {}", path.display()))
}

fn read_procedure(path: &Path) -> anyhow::Result<Procedure> {
    let text = fs::read_to_string(path).with_context(|| format!("opening procedure {}", path.display()))?;
    Procedure::from_json_str(&text).with_context(|| format!("reading procedure {}", path.display()))
}

fn csv_rows(header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn merit_name(m: MeritLabel) -> &'static str {
    match m {
        MeritLabel::Guilty => "guilty",
        MeritLabel::Innocent => "innocent",
    }
}

fn opt_string<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn cmd_audit(a: &AuditArgs) -> anyhow::Result<CommandOutput> {
    let format = pick_format(a.output.format, Format::Json, &[Format::Json, Format::Csv], "audit")?;
    let pop = read_population(&a.population)?;
    let proc = read_procedure(&a.procedure)?;
    let simulation = a.trials.map(|trials| SimulationSpec { seed: a.seed, trials });
    let mut warnings = Vec::new();
    let tolerance = match (a.tolerance, simulation) {
        (Some(t), Some(_)) => {
            if t == 0.0 {
                warnings.push(
                    "comparing simulated rates at zero tolerance is degenerate: sampling noise alone will register as unfairness"
                        .to_string(),
                );
            }
            t
        }
        (Some(t), None) => t,
        (None, Some(_)) => EMPIRICAL_TOLERANCE,
        (None, None) => 0.0,
    };
    let tolerance = Tolerance::new(tolerance)?;
    let report = audit(&pop, &proc, &a.attribute, &tolerance, simulation)?;
    let body = match format {
        Format::Json => to_json(&report)?,
        _ => audit_csv(&report)?,
    };
    Ok(CommandOutput {
        body,
        warnings,
        exit_code: EXIT_OK,
    })
}

fn audit_csv(r: &AuditReport) -> anyhow::Result<String> {
    let mut rows = Vec::new();
    for cell in r.contingency.cells.iter().chain(r.contingency.totals.iter()) {
        let rate = if cell.value == "all" {
            r.overall.get(cell.merit).cloned()
        } else {
            r.groups
                .iter()
                .find(|g| matches!(&g.group, GroupSpec::AttributeEquals { value, .. } if *value == cell.value))
                .and_then(|g| g.rates.get(cell.merit).cloned())
        };
        rows.push(vec![
            cell.value.clone(),
            merit_name(cell.merit).to_string(),
            cell.count.to_string(),
            opt_string(rate.as_ref()),
            opt_string(rate.map(|p| format!("{:.8}", p.to_f64()))),
            cell.expected_convictions.to_string(),
            cell.expected_acquittals.to_string(),
        ]);
    }
    csv_rows(
        &[
            "group",
            "merit",
            "count",
            "conviction_rate",
            "conviction_rate_decimal",
            "expected_convictions",
            "expected_acquittals",
        ],
        rows,
    )
}

#[derive(Debug, Serialize)]
struct Classification {
    h: Probability,
    k: Probability,
    eps: f64,
    class: ProcedureClass,
    merit_agnostic: bool,
    x: f64,
    y: f64,
}

pub fn cmd_classify(a: &ClassifyArgs) -> anyhow::Result<CommandOutput> {
    let format = pick_format(
        a.output.format,
        Format::Text,
        &[Format::Text, Format::Json, Format::Csv],
        "classify",
    )?;
    let point = RocPoint::new(a.h.parse()?, a.k.parse()?);
    let class = classify(&point, a.eps)?;
    let (x, y) = to_diamond(&point);
    let body = match format {
        Format::Text => format!("{class}\n"),
        Format::Json => to_json(&Classification {
            h: point.h.clone(),
            k: point.k.clone(),
            eps: a.eps,
            class,
            merit_agnostic: class.is_merit_agnostic(),
            x,
            y,
        })?,
        _ => export_diagram(&[LabeledPoint::new("point", point)], DiagramFormat::Csv)?,
    };
    Ok(CommandOutput::ok(body))
}

#[derive(Debug, Serialize)]
struct WitnessOutput {
    violation: bool,
    witness: WitnessReport,
    /// `None` when the population exceeds `max_n`.
    exhaustive: Option<ExhaustiveOutput>,
}

#[derive(Debug, Serialize)]
struct ExhaustiveOutput {
    max_n: usize,
    violations: Vec<BipartitionViolation>,
    contains_witness: bool,
}

pub fn cmd_witness(a: &WitnessArgs) -> anyhow::Result<CommandOutput> {
    let format = pick_format(a.output.format, Format::Text, &[Format::Text, Format::Json], "witness")?;
    let pop = read_population(&a.population)?;
    let witness = construct_witness(&pop)?;
    let mut warnings = Vec::new();
    let exhaustive = if pop.len() <= a.max_n {
        let violations = exhaustive_search(&pop, a.max_n)?;
        let contains_witness = violations
            .iter()
            .any(|v| v.is_split(&witness.members_x0, &witness.members_x1));
        Some(ExhaustiveOutput {
            max_n: a.max_n,
            violations,
            contains_witness,
        })
    } else {
        warnings.push(format!(
            "population of {} exceeds --max-n {}; skipping exhaustive search",
            pop.len(),
            a.max_n
        ));
        None
    };
    let violation = witness.is_violation() || exhaustive.as_ref().is_some_and(|e| !e.violations.is_empty());
    let out = WitnessOutput {
        violation,
        witness,
        exhaustive,
    };
    let body = match format {
        Format::Json => to_json(&out)?,
        _ => witness_text(&out),
    };
    Ok(CommandOutput {
        body,
        warnings,
        exit_code: if violation { EXIT_VIOLATION } else { EXIT_OK },
    })
}

fn witness_text(out: &WitnessOutput) -> String {
    let w = &out.witness;
    let mut s = String::new();
    match w.status {
        WitnessStatus::Perfect => s.push_str("no violation: the procedure is perfect on this population (X = J for everyone)\n"),
        WitnessStatus::Unwitnessable => s.push_str(
            "no violation: the procedure is imperfect, but no merit class has members on both sides of X in this population\n",
        ),
        WitnessStatus::Witnessed => {
            let classes: Vec<String> = w.violated_merit_classes.iter().map(|m| format!("J={}", m.as_u8())).collect();
            let _ = writeln!(s, "violation: groups X=0 and X=1 are treated unequally for {}", classes.join(", "));
            for c in w.comparisons.iter().filter(|c| c.violated) {
                let _ = writeln!(
                    s,
                    "  J={}: P(U=0 | X=0) = {} over {} member(s), P(U=0 | X=1) = {} over {} member(s)",
                    c.merit.as_u8(),
                    opt_string(c.conviction_x0.as_ref()),
                    c.support_x0,
                    opt_string(c.conviction_x1.as_ref()),
                    c.support_x1
                );
            }
            let _ = writeln!(s, "  X=0: {}", w.members_x0.join(","));
            let _ = writeln!(s, "  X=1: {}", w.members_x1.join(","));
        }
    }
    if let Some(class) = w.procedure_class {
        let _ = writeln!(s, "procedure class: {class}");
    }
    if let Some(e) = &out.exhaustive {
        let _ = writeln!(
            s,
            "exhaustive search: {} violating bipartition(s){}",
            e.violations.len(),
            if e.contains_witness {
                ", including the X split"
            } else {
                ""
            }
        );
    }
    s
}

#[derive(Debug, Serialize)]
struct SimulatedGroup {
    group: String,
    empirical: ConditionalRates,
    exact: Option<ConditionalRates>,
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    seed: u64,
    trials: usize,
    groups: Vec<SimulatedGroup>,
}

pub fn cmd_simulate(a: &SimulateArgs) -> anyhow::Result<CommandOutput> {
    let format = pick_format(a.output.format, Format::Json, &[Format::Json, Format::Csv], "simulate")?;
    let pop = read_population(&a.population)?;
    let Procedure::Randomized(proc) = read_procedure(&a.procedure)? else {
        bail!("simulate requires a randomized procedure");
    };
    let outcomes = simulate(&proc, &pop, a.seed, a.trials)?;
    let wrapped = Procedure::Randomized(proc);
    let mut groups = vec![(
        "all".to_string(),
        GroupSpec::ids(pop.members().iter().map(|m| m.id().to_string())),
    )];
    if let Some(attr) = &a.attribute {
        groups.extend(
            pop.attribute_values(attr)
                .into_iter()
                .map(|v| (format!("{attr}={v}"), GroupSpec::attribute(attr, v))),
        );
    }
    let groups = groups
        .into_iter()
        .map(|(label, g)| {
            Ok(SimulatedGroup {
                empirical: empirical_rates(&pop, &outcomes, &g)?,
                exact: exact_rates(&wrapped, &pop, &g).ok(),
                group: label,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = SimulationReport {
        seed: a.seed,
        trials: a.trials,
        groups,
    };
    let body = match format {
        Format::Json => to_json(&report)?,
        _ => {
            let mut rows = Vec::new();
            for g in &report.groups {
                for m in MeritLabel::ALL {
                    let emp = g.empirical.get(m);
                    let exact = g.exact.as_ref().and_then(|e| e.get(m));
                    rows.push(vec![
                        g.group.clone(),
                        merit_name(m).to_string(),
                        g.empirical.support.get(m).to_string(),
                        opt_string(emp.map(|p| format!("{:.8}", p.to_f64()))),
                        opt_string(exact),
                    ]);
                }
            }
            csv_rows(
                &[
                    "group",
                    "merit",
                    "member_trials",
                    "empirical_conviction_rate",
                    "exact_conviction_rate",
                ],
                rows,
            )?
        }
    };
    Ok(CommandOutput::ok(body))
}

pub fn cmd_example1(a: &OutputArgs) -> anyhow::Result<CommandOutput> {
    let format = pick_format(
        a.format,
        Format::Text,
        &[Format::Text, Format::Json, Format::Csv],
        "example1",
    )?;
    let report = example1::report()?;
    let body = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => example1_csv(&report)?,
        _ => example1_text(&report),
    };
    Ok(CommandOutput::ok(body))
}

fn example1_csv(r: &example1::Example1Report) -> anyhow::Result<String> {
    let mut rows = Vec::new();
    for stage in &r.stages {
        for j in stage.justice.groups.iter().chain(std::iter::once(&stage.justice.total)) {
            let count = |m: MeritLabel| {
                if j.value == "all" {
                    stage.contingency.total(m).count
                } else {
                    stage.contingency.cell(&j.value, m).map(|c| c.count).unwrap_or(0)
                }
            };
            rows.push(vec![
                stage.name.clone(),
                j.value.clone(),
                count(MeritLabel::Guilty).to_string(),
                count(MeritLabel::Innocent).to_string(),
                j.guilty_convicted.to_string(),
                j.mistaken_convictions.to_string(),
                j.convictions.to_string(),
                opt_string(j.guilty_share.as_ref()),
            ]);
        }
    }
    csv_rows(
        &[
            "stage",
            "group",
            "guilty",
            "innocent",
            "guilty_convicted",
            "innocent_convicted",
            "convictions",
            "guilty_share",
        ],
        rows,
    )
}

fn example1_text(r: &example1::Example1Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Population: {} individuals", r.population_size);
    for g in &r.groups {
        let _ = writeln!(
            s,
            "  {:<2} {:>6} total  {:>6} guilty (J=0)  {:>6} not guilty (J=1)",
            g.value,
            g.counts.total(),
            g.counts.guilty,
            g.counts.innocent
        );
    }
    for stage in &r.stages {
        let _ = writeln!(s);
        let _ = writeln!(s, "Stage: {}  procedure {}", stage.name, stage.procedure);
        for g in &stage.rates_by_group {
            let _ = writeln!(
                s,
                "  {}: P(U=0|J=0) = {}, P(U=0|J=1) = {}",
                g.group.label(),
                opt_string(g.rates.h.as_ref()),
                opt_string(g.rates.k.as_ref())
            );
        }
        let _ = writeln!(s, "  class: {}", stage.class);
        let _ = writeln!(
            s,
            "  fair between M and F (tolerance 0): {}",
            if stage.verdict.fair { "yes" } else { "no" }
        );
        let _ = writeln!(
            s,
            "  GUILTY CONVICTED      {}",
            stage.contingency.total(MeritLabel::Guilty).expected_convictions
        );
        let _ = writeln!(
            s,
            "  NOT GUILTY CONVICTED  {}",
            stage.contingency.total(MeritLabel::Innocent).expected_convictions
        );
        for j in &stage.justice.groups {
            let _ = writeln!(
                s,
                "  {}: GUILTY CONVICTED {}, NOT GUILTY CONVICTED {}, convictions {}, guilty share {}",
                j.value,
                j.guilty_convicted,
                j.mistaken_convictions,
                j.convictions,
                j.guilty_share
                    .as_ref()
                    .map(|r| format!("{}/{} ≈ {:.4}", j.guilty_convicted, j.convictions, r.to_f64()))
                    .unwrap_or_else(|| "undefined".into())
            );
        }
    }
    let _ = writeln!(s);
    for note in &r.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

#[derive(Debug, Serialize)]
struct DiagramPoint {
    label: String,
    h: Probability,
    k: Probability,
    x: f64,
    y: f64,
    class: ProcedureClass,
}

pub fn cmd_roc_export(a: &RocExportArgs) -> anyhow::Result<CommandOutput> {
    let format = pick_format(
        a.output.format,
        Format::Svg,
        &[Format::Svg, Format::Csv, Format::Json],
        "roc-export",
    )?;
    let points = match &a.points {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening points {}", path.display()))?;
            load_points(file).with_context(|| format!("reading points {}", path.display()))?
        }
        None => Vec::new(),
    };
    let body = match format {
        Format::Svg => export_diagram(&points, DiagramFormat::Svg)?,
        Format::Csv => export_diagram(&points, DiagramFormat::Csv)?,
        _ => {
            // Validates labels the same way the diagram export does.
            export_diagram(&points, DiagramFormat::Csv)?;
            let rows = points
                .iter()
                .map(|p| {
                    let (x, y) = to_diamond(&p.point);
                    Ok(DiagramPoint {
                        label: p.label.clone(),
                        h: p.point.h.clone(),
                        k: p.point.k.clone(),
                        x,
                        y,
                        class: classify(&p.point, 0.0)?,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            to_json(&rows)?
        }
    };
    Ok(CommandOutput::ok(body))
}
