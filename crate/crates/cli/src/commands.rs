use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use golf_dns::datasets::{citation_like, karate_club, CitationLikeConfig};
use golf_dns::gcn::experiment::{DEFAULT_RUNS, DEFAULT_TEST_SIZE};
use golf_dns::gcn::{
    run_experiment, sensitivity_sweep, train_single, ExperimentConfig, ExperimentReport, SplitMode,
    TrainConfig,
};
use golf_dns::io::{find_dataset, load_container, load_edge_list};
use golf_dns::select::selection_groups;
use golf_dns::{
    brute_force_select, budget_from_rate, compute_aggregated_features, forest_from_features,
    select_labels, Graph, LeadingForest, SelectionConfig,
};
use serde::Serialize;

use crate::config::{
    ConfigFile, DatasetArgs, ForestArgs, ModeArg, Resolved, RunArgs, SelectArgs, TrainArgs,
};
use crate::manifest::{manifest_path, timed, RunManifest};
use crate::{CliError, Command, GlobalArgs};

struct Session {
    file: ConfigFile,
    manifest: RunManifest,
    resolved: Resolved,
    data_dir: Option<PathBuf>,
    jobs: Option<usize>,
}

pub fn run(global: GlobalArgs, command: Command) -> Result<(), CliError> {
    let file = match &global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let jobs = global.jobs.or(file.scalar("jobs")?);
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    }
    let name = subcommand_name(&command);
    let mut session = Session {
        manifest: RunManifest::new(name),
        resolved: Resolved::default(),
        data_dir: global.data_dir.clone(),
        jobs,
        file,
    };
    if let Some(path) = &global.config {
        session.manifest.add_input_file("config", path)?;
    }
    if let Some(jobs) = jobs {
        session.resolved.set("jobs", jobs);
    }

    let started = std::time::Instant::now();
    let primary = match command {
        Command::Info { data, out } => info(&mut session, data, out)?,
        Command::Golf { data, forest, out } => golf(&mut session, data, forest, out)?,
        Command::Select {
            data,
            forest,
            select,
            exact,
            out,
        } => select_cmd(&mut session, data, forest, select, exact, out)?,
        Command::Train {
            data,
            forest,
            select,
            train,
            run,
            out,
            model_out,
        } => train_cmd(
            &mut session,
            data,
            forest,
            select,
            train,
            run,
            out,
            model_out,
        )?,
        Command::Experiment {
            data,
            forest,
            select,
            train,
            run,
            out,
            csv,
        } => experiment(&mut session, data, forest, select, train, run, out, csv)?,
        Command::Sweep {
            data,
            forest,
            select,
            train,
            run,
            sweep,
            out,
            csv,
        } => sweep_cmd(
            &mut session,
            data,
            forest,
            select,
            train,
            run,
            sweep,
            out,
            csv,
        )?,
        Command::Compare {
            data,
            forest,
            select,
            train,
            run,
            out,
        } => compare(&mut session, data, forest, select, train, run, out)?,
    };
    session.manifest.timings.total = started.elapsed().as_secs_f64();
    session.manifest.config = session.resolved.into_map();
    let path = manifest_path(global.manifest.as_deref(), primary.as_deref(), name);
    session.manifest.save(&path)?;
    log::info!("manifest written to {}", path.display());
    Ok(())
}

fn subcommand_name(command: &Command) -> &'static str {
    match command {
        Command::Info { .. } => "info",
        Command::Golf { .. } => "golf",
        Command::Select { .. } => "select",
        Command::Train { .. } => "train",
        Command::Experiment { .. } => "experiment",
        Command::Sweep { .. } => "sweep",
        Command::Compare { .. } => "compare",
    }
}

impl Session {
    fn load_graph(&mut self, flags: DatasetArgs) -> Result<Graph, CliError> {
        let args = flags.merge(self.file.group()?);
        self.resolved.add(&args);
        let spec = args
            .dataset
            .as_deref()
            .ok_or_else(|| CliError::usage("--dataset is required"))?;
        let (graph, load) = timed(|| self.resolve_dataset(spec, args.features.as_deref()));
        self.manifest.timings.load = load;
        let graph = graph?;
        log::info!(
            "loaded {}: {} nodes, {} edges in {load:.3}s",
            graph.name(),
            graph.num_nodes(),
            graph.num_edges()
        );
        Ok(graph)
    }

    fn resolve_dataset(&mut self, spec: &str, features: Option<&Path>) -> Result<Graph, CliError> {
        match spec {
            "karate" => {
                self.manifest.add_builtin("dataset", spec);
                return Ok(karate_club());
            }
            "citation-like" => {
                self.manifest.add_builtin("dataset", spec);
                return Ok(citation_like(&CitationLikeConfig::cora_shaped()));
            }
            _ => {}
        }
        let path = Path::new(spec);
        if path.is_file() {
            self.manifest.add_input_file("dataset", path)?;
            return match features {
                Some(features) => {
                    self.manifest.add_input_file("features", features)?;
                    Ok(load_edge_list(path, features)?)
                }
                None => Ok(load_container(path)?),
            };
        }
        let named = self
            .data_dir
            .as_ref()
            .map(|dir| dir.join(format!("{}.golf", spec.to_ascii_lowercase())))
            .filter(|p| p.is_file())
            .or_else(|| find_dataset(spec))
            .ok_or_else(|| {
                CliError::format(format!(
                    "dataset {spec:?} is not a file, a built-in (karate, citation-like), or <name>.golf in the data directory"
                ))
            })?;
        self.manifest.add_input_file("dataset", &named)?;
        let graph = load_container(&named)?;
        // Named datasets keep their name so depth schedules apply.
        Ok(graph.with_name(spec.to_ascii_lowercase()))
    }

    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<(), CliError> {
        match out {
            Some(path) => self.manifest.write_artifact(path, text),
            None => write_stdout(text),
        }
    }
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn write_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::runtime(format!("stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

/// Resolves selection settings against the graph defaults and writes the
/// resolved values back into the flag groups for the manifest.
fn selection_config(
    graph: &Graph,
    forest: &mut ForestArgs,
    select: &mut SelectArgs,
    budget: usize,
) -> SelectionConfig {
    let defaults = SelectionConfig::for_graph(graph, budget);
    let config = SelectionConfig {
        budget,
        min_per_group: select.k.unwrap_or(defaults.min_per_group),
        alpha: select.alpha.unwrap_or(defaults.alpha),
        sigma: forest.sigma.unwrap_or(defaults.sigma),
        trees: forest.trees.unwrap_or(defaults.trees),
        group_mode: select.groups.map(Into::into).unwrap_or(defaults.group_mode),
    };
    forest.sigma = Some(config.sigma);
    forest.trees = Some(config.trees);
    select.k = Some(config.min_per_group);
    select.alpha = Some(config.alpha);
    select.groups = Some(match config.group_mode {
        golf_dns::GroupMode::TreeProxy => crate::config::GroupsArg::Tree,
        golf_dns::GroupMode::OracleLabels => crate::config::GroupsArg::Oracle,
    });
    config
}

fn info(
    session: &mut Session,
    data: DatasetArgs,
    out: Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    let graph = session.load_graph(data)?;
    let s = graph.stats();
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<16} {:>8} {:>8} {:>8} {:>9}",
        "dataset", "nodes", "edges", "classes", "features"
    );
    let _ = writeln!(
        table,
        "{:<16} {:>8} {:>8} {:>8} {:>9}",
        graph.name(),
        s.nodes,
        s.edges,
        s.classes,
        s.features
    );
    if graph.raw_edge_count() != s.edges {
        let _ = writeln!(
            table,
            "({} edge records before deduplication)",
            graph.raw_edge_count()
        );
    }
    print!("{table}");
    if let Some(path) = &out {
        #[derive(Serialize)]
        struct Info<'a> {
            name: &'a str,
            #[serde(flatten)]
            stats: golf_dns::DatasetStats,
            raw_edges: usize,
            labeled: bool,
        }
        let json = to_json(&Info {
            name: graph.name(),
            stats: s,
            raw_edges: graph.raw_edge_count(),
            labeled: graph.labels().is_some(),
        });
        session.manifest.write_artifact(path, &json)?;
    }
    Ok(out)
}

fn build_forest_timed(
    session: &mut Session,
    graph: &Graph,
    sigma: f64,
    trees: usize,
) -> Result<LeadingForest, CliError> {
    let (features, t_agg) = timed(|| compute_aggregated_features(graph));
    let (forest, t_golf) = timed(|| forest_from_features(graph, &features, sigma, trees));
    session.manifest.timings.aggregation = Some(t_agg);
    session.manifest.timings.golf = Some(t_golf);
    Ok(forest?)
}

fn golf(
    session: &mut Session,
    data: DatasetArgs,
    forest_flags: ForestArgs,
    out: Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    let graph = session.load_graph(data)?;
    let mut forest_args = forest_flags.merge(session.file.group()?);
    let mut unused = SelectArgs::default();
    let cfg = selection_config(&graph, &mut forest_args, &mut unused, 1);
    session.resolved.add(&forest_args);
    let forest = build_forest_timed(session, &graph, cfg.sigma, cfg.trees)?;
    eprintln!(
        "{} nodes, {} trees ({} natural roots), max layer {}",
        forest.num_nodes(),
        forest.num_trees(),
        forest.natural_roots,
        forest.max_layer()
    );
    session.emit(out.as_deref(), &to_json(&forest))?;
    Ok(out)
}

fn select_cmd(
    session: &mut Session,
    data: DatasetArgs,
    forest_flags: ForestArgs,
    select_flags: SelectArgs,
    exact: bool,
    out: Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    let graph = session.load_graph(data)?;
    let mut forest_args = forest_flags.merge(session.file.group()?);
    let mut select_args = select_flags.merge(session.file.group()?);
    let budget = match (select_args.budget, select_args.single_rate()?) {
        (Some(b), _) => b,
        (None, Some(rate)) => budget_from_rate(rate, graph.num_nodes())?,
        (None, None) => return Err(CliError::usage("select needs --budget or --rate")),
    };
    select_args.budget = Some(budget);
    let cfg = selection_config(&graph, &mut forest_args, &mut select_args, budget);
    session.resolved.add(&forest_args);
    session.resolved.add(&select_args);
    let exact = exact || session.file.scalar("exact")?.unwrap_or(false);
    session.resolved.set("exact", exact);

    let forest = build_forest_timed(session, &graph, cfg.sigma, cfg.trees)?;
    let (labels, t_sel) = timed(|| {
        if exact {
            brute_force_select(&forest, &cfg, graph.labels())
        } else {
            select_labels(&forest, &cfg, graph.labels())
        }
    });
    session.manifest.timings.selection = Some(t_sel);
    let labels = labels?;
    let groups = selection_groups(&forest, &cfg, graph.labels())?.len();

    #[derive(Serialize)]
    struct Selection<'a> {
        nodes: Vec<usize>,
        typical: &'a [usize],
        divergent: &'a [usize],
        objective: f64,
        groups: usize,
        config: &'a SelectionConfig,
    }
    let mut nodes = labels.nodes();
    nodes.sort_unstable();
    let json = to_json(&Selection {
        nodes: nodes.clone(),
        typical: &labels.typical,
        divergent: &labels.divergent,
        objective: labels.objective,
        groups,
        config: &cfg,
    });
    if out.is_some() {
        println!("selected {} nodes: {nodes:?}", nodes.len());
    }
    session.emit(out.as_deref(), &json)?;
    Ok(out)
}

struct ExperimentSetup {
    graph: Graph,
    config: ExperimentConfig,
}

/// Resolves everything an experiment-style subcommand needs at one rate.
fn experiment_setup(
    session: &mut Session,
    data: DatasetArgs,
    forest_flags: ForestArgs,
    select_flags: SelectArgs,
    train_flags: TrainArgs,
    run_flags: RunArgs,
    default_mode: ModeArg,
) -> Result<(ExperimentSetup, Vec<f64>), CliError> {
    let graph = session.load_graph(data)?;
    let mut forest_args = forest_flags.merge(session.file.group()?);
    let mut select_args = select_flags.merge(session.file.group()?);
    let mut train_args = train_flags.merge(session.file.group()?);
    let mut run_args = run_flags.merge(session.file.group()?);
    if select_args.budget.is_some() {
        return Err(CliError::usage("experiments take --rate, not --budget"));
    }
    let rates = select_args
        .rate
        .clone()
        .ok_or_else(|| CliError::usage("--rate is required"))?;
    let first_budget = budget_from_rate(rates[0], graph.num_nodes())?;
    let selection = selection_config(&graph, &mut forest_args, &mut select_args, first_budget);

    let defaults = TrainConfig::default();
    let train = TrainConfig {
        learning_rate: train_args.learning_rate.unwrap_or(defaults.learning_rate),
        epochs: train_args.epochs.unwrap_or(defaults.epochs),
        dropout: train_args.dropout.unwrap_or(defaults.dropout),
        weight_decay: train_args.weight_decay.unwrap_or(defaults.weight_decay),
        hidden_units: train_args.hidden.unwrap_or(defaults.hidden_units),
        num_layers: defaults.num_layers,
        seed: run_args.seed.unwrap_or(0),
        row_normalize: !train_args.raw_features.unwrap_or(false),
    };
    train_args.learning_rate = Some(train.learning_rate);
    train_args.epochs = Some(train.epochs);
    train_args.dropout = Some(train.dropout);
    train_args.weight_decay = Some(train.weight_decay);
    train_args.hidden = Some(train.hidden_units);
    train_args.raw_features = Some(!train.row_normalize);

    let mode = run_args.mode.unwrap_or(default_mode);
    let config = ExperimentConfig {
        rate: rates[0],
        mode: mode.into(),
        runs: run_args.runs.unwrap_or(DEFAULT_RUNS),
        base_seed: run_args.seed.unwrap_or(0),
        train,
        num_layers: train_args.layers,
        selection: Some(selection),
        test_size: run_args.test_size.unwrap_or(DEFAULT_TEST_SIZE),
        stratified: run_args.stratified.unwrap_or(false),
        jobs: session.jobs,
    };
    run_args.mode = Some(mode);
    run_args.runs = Some(config.runs);
    run_args.seed = Some(config.base_seed);
    run_args.test_size = Some(config.test_size);
    run_args.stratified = Some(config.stratified);
    for group in [
        serde_json::to_value(&forest_args),
        serde_json::to_value(&select_args),
        serde_json::to_value(&train_args),
        serde_json::to_value(&run_args),
    ]
    .into_iter()
    .flatten()
    {
        session.resolved.add(&group);
    }
    Ok((ExperimentSetup { graph, config }, rates))
}

/// Times the selection stages once, for the manifest.
fn time_selection(
    session: &mut Session,
    setup: &ExperimentSetup,
    rate: f64,
) -> Result<(), CliError> {
    if setup.config.mode != SplitMode::Dns {
        return Ok(());
    }
    let mut cfg = setup
        .config
        .selection
        .clone()
        .expect("selection is resolved");
    cfg.budget = budget_from_rate(rate, setup.graph.num_nodes())?;
    let forest = build_forest_timed(session, &setup.graph, cfg.sigma, cfg.trees)?;
    let (labels, t) = timed(|| select_labels(&forest, &cfg, setup.graph.labels()));
    labels?;
    session.manifest.timings.selection = Some(t);
    Ok(())
}

fn training_seconds(report: &ExperimentReport) -> f64 {
    report.runs.iter().map(|r| r.seconds).sum()
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    session: &mut Session,
    data: DatasetArgs,
    forest: ForestArgs,
    select: SelectArgs,
    train: TrainArgs,
    run: RunArgs,
    out: Option<PathBuf>,
    model_out: Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    let (setup, rates) =
        experiment_setup(session, data, forest, select, train, run, ModeArg::Random)?;
    if rates.len() != 1 {
        return Err(CliError::usage("train takes a single --rate"));
    }
    time_selection(session, &setup, rates[0])?;
    let trained = train_single(&setup.graph, &setup.config)?;
    session.manifest.timings.training = Some(trained.record.seconds);
    println!(
        "{} {} {:.2}%: test accuracy {:.2}% on {} nodes",
        setup.graph.name(),
        setup.config.mode,
        100.0 * setup.config.rate,
        100.0 * trained.record.accuracy,
        trained.record.test_size
    );

    #[derive(Serialize)]
    struct TrainOutput<'a> {
        record: &'a golf_dns::gcn::RunRecord,
        curve: &'a golf_dns::gcn::TrainingCurve,
    }
    let json = to_json(&TrainOutput {
        record: &trained.record,
        curve: &trained.curve,
    });
    if let Some(path) = &model_out {
        session
            .manifest
            .write_artifact(path, &to_json(&trained.model))?;
    }
    if let Some(path) = &out {
        session.manifest.write_artifact(path, &json)?;
    }
    Ok(out.or(model_out))
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    session: &mut Session,
    data: DatasetArgs,
    forest: ForestArgs,
    select: SelectArgs,
    train: TrainArgs,
    run: RunArgs,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    let (setup, rates) =
        experiment_setup(session, data, forest, select, train, run, ModeArg::Random)?;
    if rates.len() != 1 {
        return Err(CliError::usage(
            "experiment takes a single --rate; use compare for several",
        ));
    }
    time_selection(session, &setup, rates[0])?;
    let report = run_experiment(&setup.graph, &setup.config)?;
    let training = training_seconds(&report);
    session.manifest.timings.training = Some(training);
    session
        .manifest
        .warnings
        .extend(report.warnings.iter().cloned());
    println!(
        "{} {} {}%: {:.1} ± {:.1} over {} runs ({} layers, {} labels)",
        report.dataset,
        report.mode,
        100.0 * report.rate,
        100.0 * report.mean,
        100.0 * report.std,
        report.runs.len(),
        report.num_layers,
        report.budget
    );
    if let Some(sel) = session.manifest.timings.selection {
        let golf = session.manifest.timings.aggregation.unwrap_or(0.0)
            + session.manifest.timings.golf.unwrap_or(0.0);
        log::info!("selection {:.3}s vs training {training:.3}s", sel + golf);
    }
    if let Some(path) = &csv {
        session.manifest.write_artifact(path, &report.to_csv())?;
    }
    if let Some(path) = &out {
        session.manifest.write_artifact(path, &to_json(&report))?;
    }
    Ok(out.or(csv))
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    session: &mut Session,
    data: DatasetArgs,
    forest: ForestArgs,
    select: SelectArgs,
    train: TrainArgs,
    run: RunArgs,
    sweep_flags: crate::config::SweepArgs,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    let sweep_args = sweep_flags.merge(session.file.group()?);
    let param = sweep_args.param()?;
    let values = sweep_args
        .values
        .clone()
        .ok_or_else(|| CliError::usage("sweep needs --values"))?;
    session.resolved.add(&sweep_args);
    let (setup, rates) = experiment_setup(session, data, forest, select, train, run, ModeArg::Dns)?;
    if rates.len() != 1 {
        return Err(CliError::usage("sweep takes a single --rate"));
    }
    let result = sensitivity_sweep(&setup.graph, &setup.config, param, &values)?;
    let training: f64 = result
        .entries
        .iter()
        .filter_map(|e| e.report.as_ref())
        .map(training_seconds)
        .sum();
    let selection: f64 = result
        .entries
        .iter()
        .filter_map(|e| e.report.as_ref())
        .map(|r| r.selection_seconds)
        .sum();
    session.manifest.timings.training = Some(training);
    session.manifest.timings.selection = Some(selection);
    for w in result.warnings() {
        eprintln!("warning: {w}");
        session.manifest.warnings.push(w.to_owned());
    }
    let table = result.to_csv();
    match &csv {
        Some(path) => session.manifest.write_artifact(path, &table)?,
        None => write_stdout(&table)?,
    }
    if let Some(path) = &out {
        session.manifest.write_artifact(path, &to_json(&result))?;
    }
    Ok(out.or(csv))
}

#[derive(Serialize)]
struct ComparisonRow {
    rate: f64,
    random: ExperimentReport,
    dns: ExperimentReport,
    delta_mean: f64,
    delta_std: f64,
}

fn percent_label(rate: f64) -> String {
    let p = format!("{:.3}", 100.0 * rate);
    format!("{}%", p.trim_end_matches('0').trim_end_matches('.'))
}

/// Baseline mean ± std per rate, the selected-label row, and the change as
/// `(+Δmean) ± (Δstd)`, all in percentage points.
fn render_comparison(dataset: &str, runs: usize, rows: &[ComparisonRow]) -> String {
    let width = 18;
    let mut out = String::new();
    let _ = writeln!(out, "{dataset}: test accuracy (%) over {runs} runs");
    let _ = write!(out, "{:<14}", "label rate");
    for row in rows {
        let _ = write!(out, "{:>width$}", percent_label(row.rate));
    }
    out.push('\n');
    let mut line = |name: &str, cell: &dyn Fn(&ComparisonRow) -> String| {
        let _ = write!(out, "{name:<14}");
        for row in rows {
            let _ = write!(out, "{:>width$}", cell(row));
        }
        out.push('\n');
    };
    line("GCN (random)", &|r| {
        format!("{:.1} ± {:.1}", 100.0 * r.random.mean, 100.0 * r.random.std)
    });
    line("GCN + DNS", &|r| {
        format!("{:.1} ± {:.1}", 100.0 * r.dns.mean, 100.0 * r.dns.std)
    });
    line("change", &|r| {
        format!(
            "({:+.1}) ± ({:+.1})",
            100.0 * r.delta_mean,
            100.0 * r.delta_std
        )
    });
    out
}

fn compare(
    session: &mut Session,
    data: DatasetArgs,
    forest: ForestArgs,
    select: SelectArgs,
    train: TrainArgs,
    run: RunArgs,
    out: Option<PathBuf>,
) -> Result<Option<PathBuf>, CliError> {
    let (setup, rates) =
        experiment_setup(session, data, forest, select, train, run, ModeArg::Random)?;
    let mut rows = Vec::with_capacity(rates.len());
    let mut training = 0.0;
    for &rate in &rates {
        let base = ExperimentConfig {
            rate,
            ..setup.config.clone()
        };
        let random = run_experiment(
            &setup.graph,
            &ExperimentConfig {
                mode: SplitMode::Random,
                ..base.clone()
            },
        )?;
        let dns = run_experiment(
            &setup.graph,
            &ExperimentConfig {
                mode: SplitMode::Dns,
                ..base
            },
        )?;
        training += training_seconds(&random) + training_seconds(&dns);
        session
            .manifest
            .warnings
            .extend(random.warnings.iter().cloned());
        rows.push(ComparisonRow {
            rate,
            delta_mean: dns.mean - random.mean,
            delta_std: dns.std - random.std,
            random,
            dns,
        });
    }
    let last = *rates.last().expect("at least one rate");
    let selection_setup = ExperimentSetup {
        graph: setup.graph,
        config: ExperimentConfig {
            mode: SplitMode::Dns,
            ..setup.config
        },
    };
    time_selection(session, &selection_setup, last)?;
    session.manifest.timings.training = Some(training);

    print!(
        "{}",
        render_comparison(
            selection_setup.graph.name(),
            selection_setup.config.runs,
            &rows
        )
    );
    if let Some(path) = &out {
        session.manifest.write_artifact(path, &to_json(&rows))?;
    }
    Ok(out)
}
