//! Command implementations. Every writer embeds the run's config so the
//! artifact can be reproduced with `ssvdd rerun`.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;
use ssvdd::data::{
    binarize_majority, load_csv, mean_pairwise_distance, BinaryLabel, LabelColumn,
    OneClassDataset, SplitSpec,
};
use ssvdd::kernel::KernelSpec;
use ssvdd::model_selection::{benchmark, BenchmarkOptions, GridSpec};
use ssvdd::subspace::{train, HyperParams, Mode, SsvddModel, TrainReport};
use ssvdd::svdd::SolverConfig;
use ssvdd::{Error, Result};

use crate::config::{
    csv_prelude, md_prelude, Format, ParamsConfig, RunConfig, VERSION,
};

/// Runs a config. `output_override` redirects where the artifact lands
/// without touching the config that gets embedded in it, which is what
/// keeps reruns byte-identical.
pub fn execute(config: &RunConfig, jobs: Option<usize>, output_override: Option<&str>) -> Result<()> {
    match config {
        RunConfig::Train(c) => cmd_train(config, c, output_override),
        RunConfig::Predict(c) => cmd_predict(config, c, output_override),
        RunConfig::Benchmark(c) => cmd_benchmark(config, c, jobs, output_override),
        RunConfig::Project(c) => cmd_project(config, c, output_override),
    }
}

fn parse_label(s: &str) -> LabelColumn {
    s.parse().expect("label parsing is infallible")
}

fn write_output(path: Option<&str>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn label_str(l: BinaryLabel) -> &'static str {
    match l {
        BinaryLabel::Target => "target",
        BinaryLabel::Outlier => "outlier",
    }
}

/// Turns command-line hyperparameters into a training recipe, resolving
/// `--sigma-scale` against the mean pairwise distance of the given
/// (already standardized) training targets.
fn resolve_params(p: &ParamsConfig, targets: ArrayView2<'_, f64>) -> Result<HyperParams<f64>> {
    let kernel = match p.mode {
        Mode::Linear => {
            if p.sigma.is_some() || p.sigma_scale.is_some() {
                return Err(Error::config(
                    "--sigma and --sigma-scale apply to kernel mode only".to_string(),
                ));
            }
            None
        }
        Mode::Kernel => {
            let sigma = match (p.sigma, p.sigma_scale) {
                (Some(s), None) => s,
                (None, Some(scale)) => scale * mean_pairwise_distance(targets)?,
                (None, None) => {
                    return Err(Error::config(
                        "kernel mode needs --sigma or --sigma-scale".to_string(),
                    ))
                }
                (Some(_), Some(_)) => {
                    return Err(Error::config(
                        "--sigma and --sigma-scale are mutually exclusive".to_string(),
                    ))
                }
            };
            Some(KernelSpec::new(sigma)?)
        }
    };
    let params = HyperParams {
        c: p.c,
        beta: p.beta,
        eta: p.eta,
        d: p.d,
        psi: p.psi,
        k_max: p.k_max,
        seed: p.seed,
        kernel,
    };
    params.validate()?;
    Ok(params)
}

#[derive(Serialize)]
struct ModelDoc<'a> {
    version: &'a str,
    config: &'a RunConfig,
    model: &'a SsvddModel<f64>,
}

#[derive(Serialize)]
struct TrainReportDoc<'a> {
    version: &'a str,
    config: &'a RunConfig,
    target_rows: usize,
    r_squared: f64,
    #[serde(flatten)]
    report: &'a TrainReport<f64>,
}

fn cmd_train(config: &RunConfig, c: &crate::config::TrainConfig, over: Option<&str>) -> Result<()> {
    let ds = load_csv::<f64>(&c.input, &parse_label(&c.label), c.standardize)?;
    let scaler = ds.scaler.clone();
    let one = binarize_majority(ds, c.target.as_deref())?;
    let targets = one.target_rows();
    let params = resolve_params(&c.params, targets.view())?;
    let (mut model, report) = train(targets.view(), &params, &SolverConfig::default())?;
    model.scaler = scaler;

    let model_path = over.unwrap_or(&c.output);
    let doc = ModelDoc { version: VERSION, config, model: &model };
    fs::write(model_path, serde_json::to_string_pretty(&doc)? + "\n")?;

    let report_path = match &c.report {
        Some(p) => p.clone(),
        None => Path::new(model_path).with_extension("report.json").display().to_string(),
    };
    let report_doc = TrainReportDoc {
        version: VERSION,
        config,
        target_rows: targets.nrows(),
        r_squared: model.r_squared,
        report: &report,
    };
    fs::write(&report_path, serde_json::to_string_pretty(&report_doc)? + "\n")?;
    eprintln!("wrote {model_path} and {report_path}");
    Ok(())
}

fn load_model(path: &str) -> Result<SsvddModel<f64>> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let body = value.get("model").cloned().unwrap_or(value);
    let model: SsvddModel<f64> = serde_json::from_value(body)?;
    model.params.validate()?;
    Ok(model)
}

/// Reads query rows, optionally dropping a label column. Mirrors the
/// training loader's header rule: the first row is a header exactly when
/// some feature cell of it does not parse as a number.
fn read_query_csv(path: &str, label: Option<&LabelColumn>) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Ok(Array2::zeros((0, 0)));
    }

    let parses = |cell: &str| cell.trim().parse::<f64>().is_ok();
    let (label_idx, header_rows) = match label {
        Some(LabelColumn::Name(name)) => {
            let idx = records[0].iter().position(|c| c == name).ok_or_else(|| {
                Error::schema(format!("label column \"{name}\" not found in header of {path}"))
            })?;
            (Some(idx), 1)
        }
        Some(LabelColumn::Index(i)) => {
            let is_header =
                records[0].iter().enumerate().any(|(j, cell)| j != *i && !parses(cell));
            (Some(*i), usize::from(is_header))
        }
        None => {
            let is_header = records[0].iter().any(|cell| !parses(cell));
            (None, usize::from(is_header))
        }
    };

    let n = records.len() - header_rows;
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let width = records[header_rows].len();
    if width <= usize::from(label_idx.is_some()) {
        return Err(Error::schema(format!("{path} has no feature columns")));
    }
    if let Some(idx) = label_idx {
        if idx >= width {
            return Err(Error::schema(format!(
                "label column {idx} out of range for {width}-column rows"
            )));
        }
    }
    let mut features = Array2::zeros((n, width - usize::from(label_idx.is_some())));
    for (r, record) in records.iter().enumerate().skip(header_rows) {
        if record.len() != width {
            return Err(Error::malformed(format!(
                "{path}: row {} has {} cells, expected {width}",
                r + 1,
                record.len()
            )));
        }
        let mut feat_j = 0;
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_idx {
                continue;
            }
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::malformed(format!(
                    "{path}: row {} column {} is not a number: \"{cell}\"",
                    r + 1,
                    j + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::malformed(format!(
                    "{path}: row {} column {} is not finite",
                    r + 1,
                    j + 1
                )));
            }
            features[[r - header_rows, feat_j]] = value;
            feat_j += 1;
        }
    }
    Ok(features)
}

fn cmd_predict(config: &RunConfig, c: &crate::config::PredictConfig, over: Option<&str>) -> Result<()> {
    let model = load_model(&c.model)?;
    let label = c.label.as_deref().map(parse_label);
    let queries = read_query_csv(&c.input, label.as_ref())?;

    let mut out = csv_prelude(config)?;
    out.push_str("row_id,dist_sq,r_squared,label\n");
    if queries.nrows() > 0 {
        for (i, pred) in model.predict(queries.view())?.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{}\n",
                pred.dist_sq,
                model.r_squared,
                label_str(pred.label)
            ));
        }
    }
    write_output(over.or(c.output.as_deref()), &out)
}

#[derive(Serialize)]
struct BenchmarkDoc<'a> {
    version: &'a str,
    config: &'a RunConfig,
    report: &'a ssvdd::report::EvalReport<f64>,
}

fn cmd_benchmark(
    config: &RunConfig,
    c: &crate::config::BenchmarkConfig,
    jobs: Option<usize>,
    over: Option<&str>,
) -> Result<()> {
    let ds = load_csv::<f64>(&c.input, &parse_label(&c.label), false)?;
    let one = binarize_majority(ds, c.target.as_deref())?;

    let mut grid = GridSpec::default();
    if let Some(v) = &c.c_grid {
        grid.c_values = v.clone();
    }
    if let Some(v) = &c.beta_exponents {
        grid.beta_exponents = v.clone();
    }
    if let Some(v) = &c.sigma_exponents {
        grid.sigma_exponents = v.clone();
    }
    if c.d_grid.is_some() {
        grid.d_values = c.d_grid.clone();
    }
    if let Some(v) = &c.psi_modes {
        grid.psi_modes = v.clone();
    }
    grid.eta = c.eta;
    grid.k_max = c.k_max;

    let split = SplitSpec::new(c.train_fraction, c.partitions, c.seed)?;
    let dataset = c.dataset_name.clone().unwrap_or_else(|| {
        Path::new(&c.input)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| c.input.clone())
    });
    let opts = BenchmarkOptions {
        folds: c.folds,
        standardize: c.standardize,
        sample_std: c.sample_std,
        dataset,
    };
    let cfg = SolverConfig::default();

    let run = || benchmark(&one, &grid, &c.methods, &split, &opts, &cfg);
    let report = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot build a {n}-thread pool: {e}")))?
            .install(run),
        None => run(),
    }?;

    let text = match c.format {
        Format::Json => {
            let doc = BenchmarkDoc { version: VERSION, config, report: &report };
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Csv => format!("{}{}", csv_prelude(config)?, report.to_csv()?),
        Format::Md => format!("{}{}", md_prelude(config)?, report.to_markdown()),
    };
    write_output(over.or(c.output.as_deref()), &text)
}

fn cmd_project(config: &RunConfig, c: &crate::config::ProjectConfig, over: Option<&str>) -> Result<()> {
    let label = parse_label(&c.label);
    let (model, one): (SsvddModel<f64>, OneClassDataset<f64>) = match (&c.model, &c.params) {
        (Some(path), _) => {
            let model = load_model(path)?;
            if model.projection.nrows() != 2 {
                return Err(Error::config(format!(
                    "projection export needs a d = 2 model, {path} has d = {}",
                    model.projection.nrows()
                )));
            }
            // Raw rows: the model applies its own stored statistics.
            let ds = load_csv::<f64>(&c.input, &label, false)?;
            (model, binarize_majority(ds, c.target.as_deref())?)
        }
        (None, Some(params)) => {
            if params.d != 2 {
                return Err(Error::config(format!(
                    "projection export needs d = 2, got d = {}",
                    params.d
                )));
            }
            let ds = load_csv::<f64>(&c.input, &label, c.standardize)?;
            let one = binarize_majority(ds, c.target.as_deref())?;
            let targets = one.target_rows();
            let resolved = resolve_params(params, targets.view())?;
            let (model, _) = train(targets.view(), &resolved, &SolverConfig::default())?;
            (model, one)
        }
        (None, None) => {
            return Err(Error::config(
                "project needs --model or a training recipe".to_string(),
            ))
        }
    };

    let coords = model.project(one.base.features.view())?;
    let mut out = csv_prelude(config)?;
    out.push_str("x0,x1,label,dist_sq,r_squared\n");
    for (i, row) in coords.rows().into_iter().enumerate() {
        let dx = row[0] - model.center[0];
        let dy = row[1] - model.center[1];
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row[0],
            row[1],
            label_str(one.binary_labels[i]),
            dx * dx + dy * dy,
            model.r_squared
        ));
    }
    write_output(over.or(c.output.as_deref()), &out)
}
