//! One handler per subcommand. Handlers read inputs through the library's
//! validated loaders, do their work, and report a one-line summary on
//! stdout; `tune` additionally streams per-generation progress to stderr.

use std::fs;
use std::path::Path;

use logitbayes::dataio::{
    load_model, read_kitti_calibration, read_logits, read_point_cloud, read_scores,
    render_comparison, render_eval_report, save_model, write_history, write_json,
    write_point_cloud, write_scores, ModelArtifact, Provenance, ScoreRow,
};
use logitbayes::dataio::peek_score_class_names;
use logitbayes::inference::{argmax_class, softmax, BayesScorer, Mode, Rule};
use logitbayes::metrics::{evaluate, EvalReport};
use logitbayes::pointcloud::{cluster_foreground, crop_to_bbox, resample, BBox2D, PointCloud};
use logitbayes::tuner::{tune_with, GaConfig, SearchBounds, TuneEvent};
use logitbayes::{Error, LogitTable, Result};
use serde::Serialize;

use crate::{
    Cli, Command, EvalArgs, FitArgs, PcClusterArgs, PcCropArgs, PcResampleArgs, RuleArg,
    ScoreArgs, TuneArgs,
};

/// Flags shared by every subcommand.
struct Globals {
    seed: u64,
    classes: Vec<String>,
    output: Option<std::path::PathBuf>,
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let globals = Globals {
        seed: cli.seed,
        classes: cli.classes,
        output: cli.output,
    };
    match cli.command {
        Command::Fit(args) => fit(args, &globals),
        Command::Tune(args) => tune(args, &globals),
        Command::Score(args) => score(args, &globals),
        Command::Eval(args) => eval(args, &globals),
        Command::PcCrop(args) => pc_crop(args, &globals),
        Command::PcCluster(args) => pc_cluster(args, &globals),
        Command::PcResample(args) => pc_resample(args, &globals),
    }
}

fn require_output<'a>(globals: &'a Globals, what: &str) -> Result<&'a Path> {
    globals
        .output
        .as_deref()
        .ok_or_else(|| Error::parameter(format!("pass --output to say where {what} goes")))
}

/// Expand a one-element list to one value per class.
fn broadcast<T: Copy>(values: Vec<T>, nc: usize, what: &str) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; nc]),
        n if n == nc => Ok(values),
        n => Err(Error::parameter(format!(
            "expected 1 or {nc} {what} values, got {n}"
        ))),
    }
}

fn fit(args: FitArgs, globals: &Globals) -> Result<()> {
    let output = require_output(globals, "the model file")?;
    let table: LogitTable<f64> = read_logits(&args.train)?;
    let nc = table.num_classes();
    let mode = Mode::from(args.mode);
    let bandwidths = broadcast(args.bandwidths, nc, "bandwidth")?;
    let nbins = match mode {
        Mode::Ml if args.nbins.is_empty() => Vec::new(),
        Mode::Ml => {
            return Err(Error::parameter(
                "--nbins sets prior histograms; use --mode map with it",
            ))
        }
        Mode::Map if args.nbins.is_empty() => {
            return Err(Error::parameter("map mode needs --nbins for its priors"))
        }
        Mode::Map => broadcast(args.nbins, nc, "bin count")?,
    };
    let scorer = BayesScorer::fit_with(
        &table.samples,
        &bandwidths,
        &nbins,
        args.lambda,
        mode,
        args.condition.into(),
    )?;
    let mut provenance = Provenance::stamped(None);
    provenance.add_source(&args.train)?;
    save_model(
        &ModelArtifact {
            scorer,
            class_names: table.class_names,
            provenance,
        },
        output,
    )?;
    println!(
        "fitted a {nc}-class {mode} model on {} samples -> {}",
        table.samples.len(),
        output.display()
    );
    Ok(())
}

fn tune(args: TuneArgs, globals: &Globals) -> Result<()> {
    let outdir = require_output(globals, "the result directory")?;
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let train: LogitTable<f64> = read_logits(&args.train)?;
    let val: LogitTable<f64> = read_logits(&args.val)?;
    if train.class_names != val.class_names {
        return Err(Error::data(format!(
            "training classes {:?} do not match validation classes {:?}",
            train.class_names, val.class_names
        )));
    }
    let mode = Mode::from(args.mode);
    let config = GaConfig {
        population: args.population,
        crossover_fraction: args.crossover_fraction,
        max_generations: args.generations,
        elite_count: args.elite,
        tournament_size: args.tournament,
        mutation_scale: args.mutation_scale,
        stall_generations: args.stall,
        seed: globals.seed,
        bounds: SearchBounds {
            bandwidth: args.bandwidth_range,
            nbins: args.nbins_range,
            lambda: args.lambda_range,
        },
    };
    let result = tune_with(&train.samples, &val.samples, mode, &config, |event| {
        if let TuneEvent::GenerationDone {
            generation,
            best_cost,
            mean_cost,
        } = event
        {
            eprintln!("generation {generation:4}  best {best_cost:.6}  mean {mean_cost:.6}");
        }
    })?;
    let scorer = BayesScorer::fit(
        &train.samples,
        &result.best.bandwidths,
        &result.best.nbins,
        result.best.lambda,
        mode,
    )?;
    let mut provenance = Provenance::stamped(Some(globals.seed));
    provenance.add_source(&args.train)?;
    provenance.add_source(&args.val)?;

    write_json(&result.best, outdir.join("params.json"))?;
    save_model(
        &ModelArtifact {
            scorer,
            class_names: train.class_names,
            provenance,
        },
        outdir.join("model.json"),
    )?;
    write_history(&result.history, outdir.join("history.csv"))?;
    println!(
        "best validation cost {:.6} after {} evaluations -> {}",
        result.best_cost,
        result.evaluations,
        outdir.display()
    );
    Ok(())
}

fn score(args: ScoreArgs, globals: &Globals) -> Result<()> {
    let output = require_output(globals, "the decision file")?;
    let artifact: ModelArtifact<f64> = load_model(&args.model)?;
    let table: LogitTable<f64> = read_logits(&args.logits)?;
    if table.class_names != artifact.class_names {
        return Err(Error::data(format!(
            "logit columns {:?} do not match the model's classes {:?}",
            table.class_names, artifact.class_names
        )));
    }
    let rule = args.rule.map(Rule::from).unwrap_or(match artifact.scorer.mode() {
        Mode::Ml => Rule::Ml,
        Mode::Map => Rule::Map,
    });
    let mut rows = Vec::with_capacity(table.samples.len());
    for sample in &table.samples {
        let (pred, scores) = artifact.scorer.predict(&sample.logits, rule)?;
        rows.push(ScoreRow {
            id: sample.id.clone(),
            label: sample.label,
            pred,
            scores,
        });
    }
    write_scores(&rows, &table.class_names, output)?;
    println!(
        "scored {} samples under the {rule} rule -> {}",
        rows.len(),
        output.display()
    );
    Ok(())
}

/// One rule's evaluation in the machine-readable comparison file.
#[derive(Serialize)]
struct RuleReport {
    rule: String,
    report: EvalReport<f64>,
}

fn eval(args: EvalArgs, globals: &Globals) -> Result<()> {
    match (&args.pred, &args.logits) {
        (Some(pred), None) => eval_decisions(pred, globals),
        (None, Some(logits)) => eval_rules(logits, &args, globals),
        _ => Err(Error::parameter(
            "pass either --pred with a decision file or --logits with scoring rules",
        )),
    }
}

fn eval_decisions(path: &Path, globals: &Globals) -> Result<()> {
    let class_names = match peek_score_class_names(path)? {
        Some(names) => names,
        None if globals.classes.is_empty() => {
            return Err(Error::parameter(
                "this decision file carries no score columns; pass --classes to name the classes",
            ))
        }
        None => globals.classes.clone(),
    };
    let rows: Vec<ScoreRow<f64>> = read_scores(path, &class_names)?;
    let mut labels = Vec::with_capacity(rows.len());
    let mut preds = Vec::with_capacity(rows.len());
    for row in &rows {
        labels.push(row.label.ok_or_else(|| {
            Error::data(format!("row {:?} has no label to evaluate against", row.id))
        })?);
        preds.push(row.pred);
    }
    let report = evaluate::<f64>(&labels, &preds, class_names.len())?;
    print!("{}", render_eval_report(&report, &class_names));
    if let Some(output) = &globals.output {
        write_json(&report, output)?;
        println!("report -> {}", output.display());
    }
    Ok(())
}

fn eval_rules(logits_path: &Path, args: &EvalArgs, globals: &Globals) -> Result<()> {
    if args.rules.is_empty() {
        return Err(Error::parameter(
            "pass at least one --rule (softmax, ml, or map) to score the logits with",
        ));
    }
    let table: LogitTable<f64> = read_logits(logits_path)?;
    let artifact: Option<ModelArtifact<f64>> = match &args.model {
        Some(path) => Some(load_model(path)?),
        None => None,
    };
    if let Some(artifact) = &artifact {
        if table.class_names != artifact.class_names {
            return Err(Error::data(format!(
                "logit columns {:?} do not match the model's classes {:?}",
                table.class_names, artifact.class_names
            )));
        }
    }
    if artifact.is_none() && args.rules.iter().any(|&r| r != RuleArg::Softmax) {
        return Err(Error::parameter(
            "the ml and map rules need --model with a fitted model",
        ));
    }

    let mut labels = Vec::with_capacity(table.samples.len());
    for sample in &table.samples {
        labels.push(sample.label.ok_or_else(|| {
            Error::data(format!(
                "sample {:?} has no label to evaluate against",
                sample.id
            ))
        })?);
    }

    let mut reports = Vec::with_capacity(args.rules.len());
    for &rule_arg in &args.rules {
        let rule = Rule::from(rule_arg);
        let mut preds = Vec::with_capacity(table.samples.len());
        for sample in &table.samples {
            let pred = match &artifact {
                Some(artifact) => artifact.scorer.predict(&sample.logits, rule)?.0,
                None => argmax_class(&softmax(&sample.logits)?),
            };
            preds.push(pred);
        }
        let report = evaluate::<f64>(&labels, &preds, table.num_classes())?;
        reports.push((rule.to_string(), report));
    }

    if let [(_, report)] = reports.as_slice() {
        print!("{}", render_eval_report(report, &table.class_names));
    } else {
        let rows: Vec<(String, &EvalReport<f64>)> = reports
            .iter()
            .map(|(rule, report)| (rule.clone(), report))
            .collect();
        print!("{}", render_comparison(&rows));
    }
    if let Some(output) = &globals.output {
        let file: Vec<RuleReport> = reports
            .into_iter()
            .map(|(rule, report)| RuleReport { rule, report })
            .collect();
        write_json(&file, output)?;
        println!("reports -> {}", output.display());
    }
    Ok(())
}

fn pc_crop(args: PcCropArgs, globals: &Globals) -> Result<()> {
    let output = require_output(globals, "the cropped cloud")?;
    let cloud: PointCloud<f64> = read_point_cloud(&args.cloud)?;
    let calib = read_kitti_calibration(&args.calib, args.camera)?;
    let bbox = BBox2D::new(args.bbox.x_min, args.bbox.y_min, args.bbox.x_max, args.bbox.y_max)?;
    let kept = crop_to_bbox(&cloud, &calib, &bbox, args.near_limit)?;
    write_point_cloud(&kept, output)?;
    println!(
        "kept {} of {} points -> {}",
        kept.len(),
        cloud.len(),
        output.display()
    );
    Ok(())
}

fn pc_cluster(args: PcClusterArgs, globals: &Globals) -> Result<()> {
    let output = require_output(globals, "the foreground cloud")?;
    let cloud: PointCloud<f64> = read_point_cloud(&args.cloud)?;
    let kept = cluster_foreground(&cloud, args.gap, args.confidence)?;
    write_point_cloud(&kept, output)?;
    println!(
        "kept a foreground cluster of {} of {} points -> {}",
        kept.len(),
        cloud.len(),
        output.display()
    );
    Ok(())
}

fn pc_resample(args: PcResampleArgs, globals: &Globals) -> Result<()> {
    let output = require_output(globals, "the resampled cloud")?;
    let cloud: PointCloud<f64> = read_point_cloud(&args.cloud)?;
    let resampled = resample(&cloud, args.target, args.neighbors, globals.seed)?;
    write_point_cloud(&resampled, output)?;
    println!(
        "resampled {} points to {} -> {}",
        cloud.len(),
        resampled.len(),
        output.display()
    );
    Ok(())
}
