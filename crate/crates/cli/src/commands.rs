use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mbe_core::csv_io::{read_cohort_file, write_cohort_file};
use mbe_core::diagnostics::{
    dose_transport_check, negative_control_check, positivity_report, write_curve_csv, CalibrationReport,
};
use mbe_core::estimator::{
    bootstrap_att, estimate_att, sensitivity_analysis, BootstrapConfig, BootstrapMode, EffectScale, IntervalKind,
    StudyData,
};
use mbe_core::glm::{fit_records, FitOptions, ModelFit, ModelSpec, Term};
use mbe_core::synth::{generate, GeneratorConfig};
use mbe_core::types::{validate, Cohort, CohortLabel, PatientRecord, SCHEMA_VERSION};
use mbe_core::violations::{run_suite, Scenario, ScenarioKind};
use mbe_core::Execution;

use crate::args::{BootstrapArg, Cli, CohortArgs, Command, IntervalArg, ModelArgs, ScaleArg};
use crate::config::{pick, pick_list, FileConfig};
use crate::report::{
    CohortSummary, DiagnoseReport, Diagnostics, EstimateReport, ModelSource, SensitivityReport, SimulateReport,
    TruthFile, Unavailable,
};
use crate::CliError;

type CmdResult = Result<(), CliError>;

const DEFAULT_SIM_BOOTSTRAP_REPLICATES: usize = 200;
const DEFAULT_VARIANTS: [&str; 3] = ["default", "quadratic", "interactions"];
const MAX_LISTED_VIOLATIONS: usize = 20;

/// Settings shared by all commands after merging flags over the config file.
struct Context<'a> {
    seed: Option<u64>,
    out: PathBuf,
    scales: Vec<EffectScale>,
    bootstrap: Option<BootstrapArg>,
    replicates: Option<usize>,
    quiet: bool,
    file: FileConfig,
    stdout: &'a mut (dyn Write + Send),
    stderr: &'a mut (dyn Write + Send),
}

impl Context<'_> {
    fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::input("--seed is required for this command (flag or config file)"))
    }

    fn progress(&mut self, line: &str) {
        if !self.quiet {
            let _ = writeln!(self.stderr, "{line}");
        }
    }

    fn say(&mut self, line: &str) -> CmdResult {
        writeln!(self.stdout, "{line}")?;
        Ok(())
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        if self.out.exists() && !self.out.is_dir() {
            return Err(CliError::input(format!(
                "--out {} is not a directory",
                self.out.display()
            )));
        }
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", self.out.display())))?;
        Ok(&self.out)
    }
}

fn scale_of(s: ScaleArg) -> EffectScale {
    match s {
        ScaleArg::Rd => EffectScale::RiskDifference,
        ScaleArg::Rr => EffectScale::RiskRatio,
        ScaleArg::Or => EffectScale::OddsRatio,
    }
}

pub(crate) fn dispatch(cli: Cli, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> CmdResult {
    let g = cli.global;
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let threads = pick(g.threads, file.threads);
    let mut scales: Vec<EffectScale> = Vec::new();
    for s in pick_list(g.scales, file.scale.clone()) {
        let s = scale_of(s);
        if !scales.contains(&s) {
            scales.push(s);
        }
    }
    if scales.is_empty() {
        scales.push(EffectScale::RiskDifference);
    }
    let ctx = Context {
        seed: pick(g.seed, file.seed),
        out: pick(g.out, file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
        scales,
        bootstrap: pick(g.bootstrap, file.bootstrap),
        replicates: pick(g.replicates, file.replicates),
        quiet: g.quiet || file.quiet.unwrap_or(false),
        file,
        stdout,
        stderr,
    };
    match threads {
        Some(0) => Err(CliError::input("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::input(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| execute(cli.command, ctx))
        }
        None => execute(cli.command, ctx),
    }
}

fn execute(command: Command, mut ctx: Context<'_>) -> CmdResult {
    match command {
        Command::Generate {
            n_pre,
            n_post,
            threshold,
            scenario,
        } => cmd_generate(&mut ctx, n_pre, n_post, threshold, scenario),
        Command::Fit { pre, spec } => cmd_fit(&mut ctx, pre, spec),
        Command::Estimate {
            cohorts,
            model,
            interval,
        } => cmd_estimate(&mut ctx, cohorts, model, interval),
        Command::Diagnose { cohorts, model } => cmd_diagnose(&mut ctx, cohorts, model),
        Command::Sensitivity { cohorts, variants } => cmd_sensitivity(&mut ctx, cohorts, variants),
        Command::Simulate {
            scenarios,
            bootstrap_replicates,
            n_pre,
            n_post,
        } => cmd_simulate(&mut ctx, scenarios, bootstrap_replicates, n_pre, n_post),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_curve(path: &Path, report: &CalibrationReport) -> CmdResult {
    write_curve_csv(&report.curve, fs::File::create(path)?)?;
    Ok(())
}

fn parse_spec(text: &str) -> Result<ModelSpec, CliError> {
    if let Some(spec) = ModelSpec::preset(text) {
        return Ok(spec);
    }
    let terms = text
        .split([',', '+'])
        .map(|t| t.trim().parse::<Term>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input(format!("invalid spec `{text}`: {e}")))?;
    ModelSpec::new(terms).map_err(|e| CliError::input(format!("invalid spec `{text}`: {e}")))
}

fn existing_file(path: Option<PathBuf>, what: &str, flag: &str) -> Result<PathBuf, CliError> {
    let path = path.ok_or_else(|| CliError::input(format!("{what} is required ({flag} or config file)")))?;
    if !path.is_file() {
        return Err(CliError::input(format!("{what} not found: {}", path.display())));
    }
    Ok(path)
}

fn load_cohort(path: &Path, label: CohortLabel) -> Result<Cohort, CliError> {
    let cohort = read_cohort_file(path, label).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let violations = validate(&cohort);
    if !violations.is_empty() {
        let mut msg = format!(
            "{} violates the cohort schema ({} problems):",
            path.display(),
            violations.len()
        );
        for v in violations.iter().take(MAX_LISTED_VIOLATIONS) {
            msg.push_str(&format!("\n  {v}"));
        }
        if violations.len() > MAX_LISTED_VIOLATIONS {
            msg.push_str("\n  ...");
        }
        return Err(CliError::input(msg));
    }
    Ok(cohort)
}

struct Inputs {
    pre: Cohort,
    post: Cohort,
    treated: Vec<PatientRecord>,
    standard: Vec<PatientRecord>,
}

impl Inputs {
    fn summary(&self) -> CohortSummary {
        CohortSummary {
            n_pre: self.pre.len(),
            n_post: self.post.len(),
            n_treated: self.treated.len(),
            n_standard: self.standard.len(),
        }
    }
}

fn load_inputs(ctx: &Context<'_>, cohorts: CohortArgs) -> Result<Inputs, CliError> {
    let pre = existing_file(pick(cohorts.pre, ctx.file.pre.clone()), "pre cohort", "--pre")?;
    let post = existing_file(pick(cohorts.post, ctx.file.post.clone()), "post cohort", "--post")?;
    ctx.out_dir()?;
    let pre = load_cohort(&pre, CohortLabel::PreIntroduction)?;
    let post = load_cohort(&post, CohortLabel::PostIntroduction)?;
    Ok(Inputs {
        treated: post.treated(),
        standard: post.untreated(),
        pre,
        post,
    })
}

fn spec_arg(ctx: &Context<'_>, flag: Option<String>) -> Result<ModelSpec, CliError> {
    match pick(flag, ctx.file.spec.clone()) {
        Some(s) => parse_spec(&s),
        None => Ok(ModelSpec::default_spec()),
    }
}

fn require_converged(fit: &ModelFit) -> CmdResult {
    if fit.converged {
        Ok(())
    } else {
        Err(CliError::statistical(format!(
            "model did not converge after {} iterations",
            fit.n_iter
        )))
    }
}

fn obtain_model(ctx: &Context<'_>, pre: &Cohort, args: ModelArgs) -> Result<(ModelFit, ModelSource), CliError> {
    let (fit, source) = match pick(args.model, ctx.file.model.clone()) {
        Some(path) => {
            let path = existing_file(Some(path), "model", "--model")?;
            let text = fs::read_to_string(&path)?;
            let fit = ModelFit::from_json(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            (fit, ModelSource::Loaded)
        }
        None => {
            let spec = spec_arg(ctx, args.spec)?;
            (
                fit_records(&pre.records, &spec, &FitOptions::default())?,
                ModelSource::Fitted,
            )
        }
    };
    require_converged(&fit)?;
    Ok((fit, source))
}

fn bootstrap_config(
    ctx: &Context<'_>,
    mode: BootstrapMode,
    interval: IntervalKind,
) -> Result<BootstrapConfig, CliError> {
    let cfg = BootstrapConfig {
        n_replicates: ctx.replicates.unwrap_or(BootstrapConfig::default().n_replicates),
        seed: ctx.require_seed()?,
        mode,
        interval,
        execution: Execution::Parallel,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run_diagnostics(inputs: &Inputs, fit: &ModelFit, nc_bootstrap: Option<&BootstrapConfig>) -> Diagnostics {
    let mut unavailable = Vec::new();
    let mut note = |check: &str, e: mbe_core::Error| {
        unavailable.push(Unavailable {
            check: check.to_string(),
            reason: e.to_string(),
        })
    };
    let positivity = positivity_report(&inputs.pre.records, &inputs.treated)
        .map_err(|e| note("positivity", e))
        .ok();
    let negative_control = negative_control_check(&inputs.standard, fit, nc_bootstrap)
        .map_err(|e| note("negative_control", e))
        .ok();
    let dose_transport = if inputs.treated.iter().all(|r| r.proton_doses.is_some()) {
        dose_transport_check(&inputs.treated, fit, None)
            .map_err(|e| note("dose_transport", e))
            .ok()
    } else {
        note(
            "dose_transport",
            mbe_core::Error::InvalidInput("proton plans missing for some treated patients".into()),
        );
        None
    };
    Diagnostics {
        positivity,
        negative_control,
        dose_transport,
        unavailable,
    }
}

fn write_diagnostic_files(ctx: &mut Context<'_>, diag: &Diagnostics) -> CmdResult {
    let dir = ctx.out_dir()?.to_path_buf();
    if let Some(nc) = &diag.negative_control {
        write_curve(&dir.join("negative_control_curve.csv"), nc)?;
    }
    if let Some(dt) = &diag.dose_transport {
        write_curve(&dir.join("dose_transport_curve.csv"), dt)?;
    }
    Ok(())
}

fn describe_diagnostics(ctx: &mut Context<'_>, diag: &Diagnostics) -> CmdResult {
    if let Some(p) = &diag.positivity {
        let verdict = serde_json::to_value(p.verdict).unwrap_or_default();
        let mut line = format!("positivity: {}", verdict.as_str().unwrap_or("?"));
        if !p.absent_categories.is_empty() {
            line.push_str(&format!(
                " (absent before introduction: {})",
                p.absent_categories.join(", ")
            ));
        }
        ctx.say(&line)?;
    }
    for (name, rep) in [
        ("negative control", &diag.negative_control),
        ("dose transport", &diag.dose_transport),
    ] {
        if let Some(r) = rep {
            let ci = match (r.ci_low, r.ci_high) {
                (Some(lo), Some(hi)) => format!(" 95% CI [{lo:.4}, {hi:.4}]"),
                _ => String::new(),
            };
            let auroc = r.auroc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
            ctx.say(&format!(
                "{name}: observed {:.4} predicted {:.4} difference {:+.4}{ci} (n = {}, AUROC {auroc})",
                r.mean_observed, r.mean_predicted, r.mean_difference, r.n
            ))?;
        }
    }
    for u in &diag.unavailable {
        ctx.say(&format!("{}: unavailable ({})", u.check.replace('_', " "), u.reason))?;
    }
    Ok(())
}

fn cmd_generate(
    ctx: &mut Context<'_>,
    n_pre: Option<usize>,
    n_post: Option<usize>,
    threshold: Option<f64>,
    scenario: Option<String>,
) -> CmdResult {
    let seed = ctx.require_seed()?;
    let defaults = GeneratorConfig::default();
    let scenario = match scenario {
        Some(s) => Some(s),
        None => ctx.file.scenario.clone().and_then(|s| s.into_vec().into_iter().next()),
    };
    let shift = match scenario {
        Some(name) => name.parse::<ScenarioKind>()?.default_shift(),
        None => defaults.shift,
    };
    let config = GeneratorConfig {
        n_pre: pick(n_pre, ctx.file.n_pre).unwrap_or(defaults.n_pre),
        n_post: pick(n_post, ctx.file.n_post).unwrap_or(defaults.n_post),
        selection_threshold: pick(threshold, ctx.file.threshold).unwrap_or(defaults.selection_threshold),
        seed,
        shift,
        ..defaults
    };
    config.validate()?;
    let dir = ctx.out_dir()?.to_path_buf();
    let world = generate(&config)?;
    let (pre_path, post_path, truth_path) = (dir.join("pre.csv"), dir.join("post.csv"), dir.join("truth.json"));
    write_cohort_file(&world.pre, &pre_path)?;
    write_cohort_file(&world.post, &post_path)?;
    let n_treated = world.post.records.iter().filter(|r| r.is_treated()).count();
    write_json(
        &truth_path,
        &TruthFile {
            schema_version: SCHEMA_VERSION.to_string(),
            seed,
            true_att: world.truth,
            n_pre: world.pre.len(),
            n_post: world.post.len(),
            n_treated,
            n_standard: world.post.len() - n_treated,
            config: world.config.clone(),
        },
    )?;
    ctx.say(&format!(
        "generated {} pre-introduction and {} post-introduction patients ({} target, {} standard)",
        world.pre.len(),
        world.post.len(),
        n_treated,
        world.post.len() - n_treated
    ))?;
    match world.truth {
        Some(t) => ctx.say(&format!("true ATT: rd {:+.4}  rr {:.4}  or {:.4}", t.rd, t.rr, t.or))?,
        None => ctx.say("true ATT: undefined (no patient selected for the target treatment)")?,
    }
    ctx.say(&format!(
        "wrote {}, {}, {}",
        pre_path.display(),
        post_path.display(),
        truth_path.display()
    ))
}

fn cmd_fit(ctx: &mut Context<'_>, pre: Option<PathBuf>, spec: Option<String>) -> CmdResult {
    let pre = existing_file(pick(pre, ctx.file.pre.clone()), "pre cohort", "--pre")?;
    let spec = spec_arg(ctx, spec)?;
    let dir = ctx.out_dir()?.to_path_buf();
    let pre = load_cohort(&pre, CohortLabel::PreIntroduction)?;
    let fit = fit_records(&pre.records, &spec, &FitOptions::default())?;
    let path = dir.join("model.json");
    // written even when not converged, so the flagged fit can be inspected
    fs::write(&path, fit.to_json()? + "\n")?;
    require_converged(&fit)?;
    ctx.say(&format!(
        "fitted {} terms on {} patients in {} iterations (deviance {:.4})",
        fit.beta_hat.len(),
        fit.n_obs,
        fit.n_iter,
        fit.deviance
    ))?;
    for (j, name) in fit.spec.column_names().iter().enumerate() {
        let se = fit.cov_hat[j][j].sqrt();
        ctx.say(&format!("  {name:<28} {:>10.5}  (se {se:.5})", fit.beta_hat[j]))?;
    }
    ctx.say(&format!("wrote {}", path.display()))
}

fn cmd_estimate(
    ctx: &mut Context<'_>,
    cohorts: CohortArgs,
    model: ModelArgs,
    interval: Option<IntervalArg>,
) -> CmdResult {
    let mode = ctx.bootstrap.unwrap_or(BootstrapArg::Full);
    let using_model = model.model.is_some() || ctx.file.model.is_some();
    if using_model && mode == BootstrapArg::Full {
        return Err(CliError::input(
            "a full bootstrap refits the model; use --bootstrap fixed (or none) with --model",
        ));
    }
    if mode != BootstrapArg::None {
        ctx.require_seed()?;
    }
    let interval = match pick(interval, ctx.file.interval) {
        Some(IntervalArg::Normal) => IntervalKind::Normal,
        _ => IntervalKind::Percentile,
    };
    let inputs = load_inputs(ctx, cohorts)?;
    let (fit, source) = obtain_model(ctx, &inputs.pre, model)?;
    if inputs.treated.is_empty() {
        return Err(CliError::statistical("estimand undefined: no treated patients"));
    }

    let data = StudyData {
        pre: &inputs.pre.records,
        post_treated: &inputs.treated,
    };
    let scales = ctx.scales.clone();
    let (estimates, nc_bootstrap) = match mode {
        BootstrapArg::None => (
            scales
                .iter()
                .map(|&s| estimate_att(&inputs.treated, &fit, s))
                .collect::<Result<Vec<_>, _>>()?,
            None,
        ),
        BootstrapArg::Fixed | BootstrapArg::Full => {
            let m = if mode == BootstrapArg::Full {
                BootstrapMode::Full
            } else {
                BootstrapMode::FixedModel
            };
            let cfg = bootstrap_config(ctx, m, interval)?;
            ctx.progress(&format!("bootstrapping {} replicates ...", cfg.n_replicates));
            let est = bootstrap_att(&data, &fit, &scales, &cfg, &FitOptions::default())?;
            (
                est,
                Some(BootstrapConfig {
                    mode: BootstrapMode::FixedModel,
                    ..cfg
                }),
            )
        }
    };
    let diagnostics = run_diagnostics(&inputs, &fit, nc_bootstrap.as_ref());

    let report = EstimateReport {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "estimate".into(),
        seed: if mode == BootstrapArg::None { None } else { ctx.seed },
        cohorts: inputs.summary(),
        model_source: source,
        model: fit,
        estimates,
        diagnostics,
    };
    let path = ctx.out_dir()?.join("report.json");
    write_json(&path, &report)?;
    write_diagnostic_files(ctx, &report.diagnostics)?;

    ctx.say(&format!(
        "model: {} ({} terms, {} patients, {} iterations)",
        match report.model_source {
            ModelSource::Fitted => "fitted on the pre-introduction cohort",
            ModelSource::Loaded => "loaded",
        },
        report.model.beta_hat.len(),
        report.model.n_obs,
        report.model.n_iter
    ))?;
    ctx.say(&format!(
        "ATT among {} target-treated patients:",
        report.cohorts.n_treated
    ))?;
    for e in &report.estimates {
        let ci = match (e.ci_low, e.ci_high) {
            (Some(lo), Some(hi)) => format!("  95% CI [{lo:.4}, {hi:.4}]"),
            _ => String::new(),
        };
        let point = match e.scale {
            EffectScale::RiskDifference => format!("{:+.4}", e.point),
            _ => format!("{:.4}", e.point),
        };
        ctx.say(&format!(
            "  {:<2} {point}{ci}  (observed {:.4}, predicted counterfactual {:.4})",
            e.scale, e.mean_observed, e.mean_predicted
        ))?;
    }
    describe_diagnostics(ctx, &report.diagnostics)?;
    ctx.say(&format!("wrote {}", path.display()))
}

fn cmd_diagnose(ctx: &mut Context<'_>, cohorts: CohortArgs, model: ModelArgs) -> CmdResult {
    let mode = ctx.bootstrap.unwrap_or(BootstrapArg::Fixed);
    let inputs = load_inputs(ctx, cohorts)?;
    let (fit, source) = obtain_model(ctx, &inputs.pre, model)?;
    let nc_bootstrap = match mode {
        BootstrapArg::None => None,
        _ => Some(bootstrap_config(
            ctx,
            BootstrapMode::FixedModel,
            IntervalKind::Percentile,
        )?),
    };
    let diagnostics = run_diagnostics(&inputs, &fit, nc_bootstrap.as_ref());
    let report = DiagnoseReport {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "diagnose".into(),
        seed: nc_bootstrap.map(|b| b.seed),
        cohorts: inputs.summary(),
        model_source: source,
        model: fit,
        diagnostics,
    };
    let path = ctx.out_dir()?.join("diagnostics.json");
    write_json(&path, &report)?;
    write_diagnostic_files(ctx, &report.diagnostics)?;
    describe_diagnostics(ctx, &report.diagnostics)?;
    ctx.say(&format!("wrote {}", path.display()))
}

fn cmd_sensitivity(ctx: &mut Context<'_>, cohorts: CohortArgs, variants: Vec<String>) -> CmdResult {
    let mut names = pick_list(variants, ctx.file.variants.clone());
    if names.is_empty() {
        names = DEFAULT_VARIANTS.iter().map(|s| s.to_string()).collect();
    }
    let variants = names
        .iter()
        .map(|n| Ok((n.clone(), parse_spec(n)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mode = ctx.bootstrap.unwrap_or(BootstrapArg::None);
    let bootstrap = match mode {
        BootstrapArg::None => None,
        BootstrapArg::Fixed => Some(bootstrap_config(
            ctx,
            BootstrapMode::FixedModel,
            IntervalKind::Percentile,
        )?),
        BootstrapArg::Full => Some(bootstrap_config(ctx, BootstrapMode::Full, IntervalKind::Percentile)?),
    };
    let inputs = load_inputs(ctx, cohorts)?;
    if inputs.treated.is_empty() {
        return Err(CliError::statistical("estimand undefined: no treated patients"));
    }
    let data = StudyData {
        pre: &inputs.pre.records,
        post_treated: &inputs.treated,
    };
    let tables = ctx
        .scales
        .clone()
        .into_iter()
        .map(|s| sensitivity_analysis(&data, &variants, s, bootstrap.as_ref(), &FitOptions::default()))
        .collect::<Result<Vec<_>, _>>()?;

    let dir = ctx.out_dir()?.to_path_buf();
    let mut csv = String::from("scale,variant,n_terms,point,ci_low,ci_high,error\n");
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for t in &tables {
        for r in &t.rows {
            let e = r.estimate.as_ref();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.scale,
                r.label.replace(',', "+"),
                r.spec.len(),
                opt(e.map(|e| e.point)),
                opt(e.and_then(|e| e.ci_low)),
                opt(e.and_then(|e| e.ci_high)),
                r.error.as_deref().unwrap_or("").replace(['\n', ','], " ")
            ));
        }
    }
    let report = SensitivityReport {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "sensitivity".into(),
        seed: bootstrap.map(|b| b.seed),
        cohorts: inputs.summary(),
        tables,
    };
    let json_path = dir.join("sensitivity.json");
    write_json(&json_path, &report)?;
    fs::write(dir.join("sensitivity.csv"), csv)?;

    for t in &report.tables {
        ctx.say(&format!("scale {}:", t.scale))?;
        for r in &t.rows {
            match (&r.estimate, &r.error) {
                (Some(e), _) => ctx.say(&format!("  {:<16} {:+.4}", r.label, e.point))?,
                (None, Some(err)) => ctx.say(&format!("  {:<16} failed: {err}", r.label))?,
                (None, None) => {}
            }
        }
        match t.spread {
            Some(s) => ctx.say(&format!("  spread {s:.4}"))?,
            None => ctx.say("  spread undefined (no variant succeeded)")?,
        }
    }
    ctx.say(&format!("wrote {}", json_path.display()))
}

fn cmd_simulate(
    ctx: &mut Context<'_>,
    scenarios: Vec<String>,
    bootstrap_replicates: Option<usize>,
    n_pre: Option<usize>,
    n_post: Option<usize>,
) -> CmdResult {
    let mut names = scenarios;
    if names.is_empty() {
        names = ctx.file.scenario.clone().map(|s| s.into_vec()).unwrap_or_default();
    }
    if names.is_empty() {
        let valid: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
        return Err(CliError::input(format!(
            "--scenario is required; valid names: {}, all",
            valid.join(", ")
        )));
    }
    let mut kinds = Vec::new();
    for n in &names {
        if n == "all" {
            kinds.extend(ScenarioKind::ALL);
        } else {
            kinds.push(n.parse::<ScenarioKind>()?);
        }
    }
    let seed = ctx.require_seed()?;
    let bootstrap = match ctx.bootstrap.unwrap_or(BootstrapArg::None) {
        BootstrapArg::None => None,
        m => {
            let cfg = BootstrapConfig {
                n_replicates: pick(bootstrap_replicates, ctx.file.bootstrap_replicates)
                    .unwrap_or(DEFAULT_SIM_BOOTSTRAP_REPLICATES),
                mode: if m == BootstrapArg::Full {
                    BootstrapMode::Full
                } else {
                    BootstrapMode::FixedModel
                },
                ..BootstrapConfig::default()
            };
            cfg.validate()?;
            Some(cfg)
        }
    };
    let mut generator = GeneratorConfig::default();
    generator.n_pre = pick(n_pre, ctx.file.n_pre).unwrap_or(generator.n_pre);
    generator.n_post = pick(n_post, ctx.file.n_post).unwrap_or(generator.n_post);
    let scenarios: Vec<Scenario> = kinds
        .into_iter()
        .map(|k| Scenario {
            n_replicates: ctx.replicates.unwrap_or(500),
            generator: generator.clone(),
            bootstrap,
            ..Scenario::preset(k, seed)
        })
        .collect();
    for s in &scenarios {
        s.validate()?;
    }
    let dir = ctx.out_dir()?.to_path_buf();
    ctx.progress(&format!(
        "running {} scenario(s) x {} replicates",
        scenarios.len(),
        scenarios[0].n_replicates
    ));
    let suite = run_suite(&scenarios, Execution::Parallel)?;
    for s in &suite.scenarios {
        match &s.report {
            Some(r) => ctx.progress(&format!(
                "  {}: {} of {} replicates succeeded",
                s.label, r.n_succeeded, r.n_replicates
            )),
            None => ctx.progress(&format!("  {}: failed", s.label)),
        }
    }
    let report = SimulateReport {
        schema_version: SCHEMA_VERSION.to_string(),
        command: "simulate".into(),
        seed,
        suite,
    };
    let json_path = dir.join("bias_report.json");
    let csv_path = dir.join("bias_report.csv");
    write_json(&json_path, &report)?;
    report.suite.write_csv(fs::File::create(&csv_path)?)?;
    let table = report.suite.comparison_table();
    write!(ctx.stdout, "{table}")?;
    ctx.say(&format!("wrote {}, {}", json_path.display(), csv_path.display()))?;
    if report.suite.scenarios.iter().all(|s| s.report.is_none()) {
        return Err(CliError::statistical("every scenario failed"));
    }
    Ok(())
}
