use std::path::{Path, PathBuf};

use fsnc_core::graphdata::io::{encode_fsnb, write_atomic};
use fsnc_core::graphdata::{
    generate_sbm, load_bundle, load_dataset, split_label_space, write_bundle, FeatureFormat, GraphBundle, LabelSplit,
    SbmSpec, SplitAssignment,
};
use fsnc_core::pretrain::{embed_all, PretrainedEncoder, Provenance};
use fsnc_core::protocol::{
    evaluate_tasks, mean, run_protocol, train_with_early_stopping, Method, MethodFactory, RunResult, TrainerFactory,
};
use fsnc_core::{gradcheck, seed};
use serde::Serialize;

use crate::config::{parse_config, RunConfig};
use crate::{Cli, CliError, Command, EpisodeArgs, EvaluateArgs, ExportArgs, GenerateArgs, GradcheckArgs, PretrainArgs, SweepArgs};

pub(crate) fn dispatch(cli: &Cli, overrides: &[String]) -> Result<(), CliError> {
    let mut cfg = parse_config(cli.config.as_deref(), overrides)?;
    log::info!("resolved configuration:\n{cfg}");
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate(args) => generate(&cfg, args, out),
        Command::Pretrain(args) => pretrain(&mut cfg, args, out),
        Command::Evaluate(args) => evaluate(&mut cfg, args, out, args.cluster),
        Command::ClusterEval(args) => evaluate(&mut cfg, args, out, true),
        Command::SweepLambda(args) => sweep_lambda(&mut cfg, args, out),
        Command::ExportEmbeddings(args) => export_embeddings(&cfg, args, out),
        Command::Gradcheck(args) => gradcheck(&cfg, args, out),
    }
}

fn require_out(out: Option<&Path>) -> Result<&Path, CliError> {
    out.ok_or_else(|| CliError::Usage("this command needs --out DIR".into()))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Core(fsnc_core::Error::io(dir, e)))
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let text = serde_json::to_string_pretty(value).map_err(fsnc_core::Error::from)?;
    println!("{text}");
    Ok(text)
}

/// Resolve `name` to a bundle directory: an existing directory is used as
/// given, anything else is looked up under the data directory.
pub fn resolve_dataset(cfg: &RunConfig, name: &str) -> Result<(String, PathBuf), CliError> {
    let direct = Path::new(name);
    if direct.is_dir() {
        let label = direct
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name.to_string());
        return Ok((label, direct.to_path_buf()));
    }
    let dir = cfg.data_dir.join(name);
    if !dir.is_dir() {
        return Err(CliError::Failed(format!(
            "dataset `{name}` not found at {} (convert the raw files with scripts/planetoid_to_bundle.py, \
             or point FSNC_DATA_DIR / data_dir at the bundles)",
            dir.display()
        )));
    }
    Ok((name.to_string(), dir))
}

/// Load a bundle and its label split. Without `splits.json`, Cora and
/// CiteSeer fall back to their standard class partition.
pub fn load_dataset_named(cfg: &RunConfig, name: &str) -> Result<(String, GraphBundle, LabelSplit), CliError> {
    let (label, dir) = resolve_dataset(cfg, name)?;
    if dir.join("splits.json").exists() {
        let (g, split) = load_dataset(&dir)?;
        return Ok((label, g, split));
    }
    let assignment = match label.to_ascii_lowercase().as_str() {
        "cora" => SplitAssignment::cora(),
        "citeseer" => SplitAssignment::citeseer(),
        _ => {
            return Err(CliError::Failed(format!(
                "{} has no splits.json and no standard class split",
                dir.display()
            )))
        }
    };
    let g = load_bundle(&dir)?;
    let split = split_label_space(&g, &assignment)?;
    Ok((label, g, split))
}

fn episode_grid(cfg: &RunConfig, args: &EpisodeArgs) -> (Vec<usize>, Vec<usize>) {
    let ns = if args.n.is_empty() { vec![cfg.protocol.spec.n_way] } else { args.n.clone() };
    let ks = if args.k.is_empty() { vec![cfg.protocol.spec.k_shot] } else { args.k.clone() };
    (ns, ks)
}

/// Fold the per-command episode flags into `cfg` and revalidate.
fn apply_episode_args(cfg: &mut RunConfig, args: &EpisodeArgs, n: usize, k: usize) -> Result<(), CliError> {
    let mut pairs = vec![format!("protocol.n_way={n}"), format!("protocol.k_shot={k}")];
    if let Some(m) = args.m {
        pairs.push(format!("protocol.m_query={m}"));
    }
    if let Some(r) = args.repeats {
        pairs.push(format!("protocol.repeats={r}"));
    }
    if let Some(t) = args.tasks {
        pairs.push(format!("protocol.tasks={t}"));
    }
    cfg.apply_overrides(&pairs)?;
    cfg.finish()?;
    Ok(())
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, CliError> {
    names.iter().map(|s| s.trim().parse::<Method>().map_err(CliError::from)).collect()
}

fn generate(cfg: &RunConfig, args: &GenerateArgs, out: Option<&Path>) -> Result<(), CliError> {
    let dir = require_out(out)?;
    let format = match args.format.as_str() {
        "csv" => FeatureFormat::Csv,
        "binary" => FeatureFormat::Binary,
        other => return Err(CliError::Usage(format!("unknown feature format `{other}` (csv or binary)"))),
    };
    let [train, dev, test] = args.split[..] else {
        return Err(CliError::Usage("--split takes three class counts".into()));
    };
    if train + dev + test != args.classes {
        return Err(CliError::Usage(format!(
            "--split {train},{dev},{test} does not cover {} classes",
            args.classes
        )));
    }
    let spec = SbmSpec {
        classes: args.classes,
        nodes_per_class: args.nodes_per_class,
        p_in: args.p_in,
        p_out: args.p_out,
        feature_dim: args.feature_dim,
        class_mean_separation: args.separation,
        noise_std: args.noise,
    };
    let g = generate_sbm(&spec, cfg.seed)?;
    ensure_dir(dir)?;
    write_bundle(dir, &g, Some(&SplitAssignment::contiguous(train, dev, test)), format)?;
    print_json(&serde_json::json!({
        "path": dir.display().to_string(),
        "nodes": g.num_nodes(),
        "edges": g.num_edges(),
        "classes": g.num_classes(),
        "feature_dim": g.feature_dim(),
    }))?;
    Ok(())
}

fn pretrain(cfg: &mut RunConfig, args: &PretrainArgs, out: Option<&Path>) -> Result<(), CliError> {
    let dir = require_out(out)?;
    let method: Method = args.method.parse()?;
    let Some(loss) = method.loss_kind() else {
        return Err(CliError::Usage(format!(
            "`{method}` has no standalone encoder; pretrain accepts ignn and tlp-* methods"
        )));
    };
    let (ns, ks) = episode_grid(cfg, &args.episodes);
    if ns.len() != 1 || ks.len() != 1 {
        return Err(CliError::Usage("pretrain validates on a single N and K".into()));
    }
    apply_episode_args(cfg, &args.episodes, ns[0], ks[0])?;
    let (name, g, split) = load_dataset_named(cfg, &args.episodes.dataset)?;

    let factory = MethodFactory::new(method, cfg.method);
    let visible = g.with_hidden_labels(split.train());
    let p = &cfg.protocol;
    let mut trainer = factory.build(&visible, cfg.seed)?;
    let dev_seed = seed::derive(cfg.seed, &[seed::tag("dev")]);
    let record = train_with_early_stopping(
        trainer.as_mut(),
        p.val_interval,
        p.patience * factory.patience_factor(),
        p.max_epochs,
        |t, pred| {
            let base = if p.resample_validation { seed::derive(dev_seed, &[t as u64]) } else { dev_seed };
            let scores = evaluate_tasks(|ep| pred.predict(ep), &g, split.dev(), &p.spec, p.tasks, base)?;
            Ok(mean(&scores))
        },
    )?;
    let encoder = record
        .predictor
        .encoder()
        .ok_or_else(|| CliError::Failed("trained model exposes no encoder".into()))?;
    let provenance = Provenance {
        loss,
        lambda: (method == Method::TlpJoint).then_some(cfg.method.pretrain.loss.lambda),
        seed: cfg.seed,
        epochs_run: record.epochs_run,
        loss_curve: record.losses.clone(),
    };
    ensure_dir(dir)?;
    let path = dir.join(format!("{name}_{method}.fsnp"));
    PretrainedEncoder::new(encoder, provenance.clone()).save(&path)?;
    print_json(&serde_json::json!({
        "checkpoint": path.display().to_string(),
        "best_dev_acc": record.best_score,
        "provenance": provenance,
    }))?;
    Ok(())
}

fn summary_csv(results: &[RunResult]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut text = String::from("method,dataset,N,K,M,repeats,mean_acc,ci95,nmi,ari\n");
    for r in results {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method,
            r.dataset,
            r.n_way,
            r.k_shot,
            r.m_query,
            r.per_repeat_acc.len(),
            r.mean_acc,
            r.ci95,
            opt(r.nmi),
            opt(r.ari)
        ));
    }
    text
}

fn evaluate(cfg: &mut RunConfig, args: &EvaluateArgs, out: Option<&Path>, cluster: bool) -> Result<(), CliError> {
    let methods = parse_methods(&args.method)?;
    let (ns, ks) = episode_grid(cfg, &args.episodes);
    // Validate the whole grid before any training starts.
    for &n in &ns {
        for &k in &ks {
            apply_episode_args(cfg, &args.episodes, n, k)?;
        }
    }
    let (name, g, split) = load_dataset_named(cfg, &args.episodes.dataset)?;
    let mut results = Vec::new();
    for &method in &methods {
        for &n in &ns {
            for &k in &ks {
                apply_episode_args(cfg, &args.episodes, n, k)?;
                let factory = MethodFactory::new(method, cfg.method);
                let r = run_protocol(&factory, method.as_str(), &name, &g, &split, &cfg.protocol, cluster)?;
                if let Some(dir) = out {
                    ensure_dir(dir)?;
                    let file = dir.join(format!("{name}_{method}_N{n}_K{k}.json"));
                    write_atomic(&file, serde_json::to_string_pretty(&r).map_err(fsnc_core::Error::from)?.as_bytes())?;
                }
                results.push(r);
            }
        }
    }
    if results.len() == 1 {
        print_json(&results[0])?;
    } else {
        print_json(&results)?;
    }
    if let Some(dir) = out {
        write_atomic(&dir.join("summary.csv"), summary_csv(&results).as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepPoint {
    lambda: f64,
    #[serde(flatten)]
    result: RunResult,
}

fn sweep_lambda(cfg: &mut RunConfig, args: &SweepArgs, out: Option<&Path>) -> Result<(), CliError> {
    let lambdas: Vec<f64> = if args.lambdas.is_empty() {
        (0..=10).map(|i| i as f64 / 10.0).collect()
    } else {
        args.lambdas.clone()
    };
    let (ns, ks) = episode_grid(cfg, &args.episodes);
    if ns.len() != 1 || ks.len() != 1 {
        return Err(CliError::Usage("sweep-lambda runs a single N and K".into()));
    }
    for &l in &lambdas {
        cfg.set("contrast.lambda", &l.to_string())?;
        apply_episode_args(cfg, &args.episodes, ns[0], ks[0])?;
    }
    let (name, g, split) = load_dataset_named(cfg, &args.episodes.dataset)?;
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        cfg.set("contrast.lambda", &lambda.to_string())?;
        cfg.finish()?;
        let factory = MethodFactory::new(Method::TlpJoint, cfg.method);
        let result = run_protocol(&factory, Method::TlpJoint.as_str(), &name, &g, &split, &cfg.protocol, false)?;
        log::info!("lambda {lambda}: accuracy {:.4} ± {:.4}", result.mean_acc, result.ci95);
        points.push(SweepPoint { lambda, result });
    }
    let json = print_json(&points)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut csv = String::from("lambda,mean_acc,ci95\n");
        for p in &points {
            csv.push_str(&format!("{},{},{}\n", p.lambda, p.result.mean_acc, p.result.ci95));
        }
        write_atomic(&dir.join("lambda_sweep.csv"), csv.as_bytes())?;
        write_atomic(&dir.join("lambda_sweep.json"), json.as_bytes())?;
    }
    Ok(())
}

fn export_embeddings(cfg: &RunConfig, args: &ExportArgs, out: Option<&Path>) -> Result<(), CliError> {
    let dir = require_out(out)?;
    let (name, dir_in) = resolve_dataset(cfg, &args.dataset)?;
    let g = load_bundle(&dir_in)?;
    let encoder = PretrainedEncoder::load(&args.checkpoint)?;
    let z = embed_all(encoder.params(), &g)?;
    ensure_dir(dir)?;
    write_atomic(&dir.join("embeddings.fsnb"), &encode_fsnb(&z))?;
    let mut csv = String::new();
    for row in z.rows() {
        let cells: Vec<String> = row.iter().map(|&v| (v as f32).to_string()).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    write_atomic(&dir.join("embeddings.csv"), csv.as_bytes())?;
    print_json(&serde_json::json!({
        "dataset": name,
        "nodes": z.nrows(),
        "dim": z.ncols(),
        "path": dir.display().to_string(),
    }))?;
    Ok(())
}

#[derive(Serialize)]
struct CheckLine {
    name: &'static str,
    draws: usize,
    max_rel_error: f64,
    passed: bool,
}

fn gradcheck(cfg: &RunConfig, args: &GradcheckArgs, out: Option<&Path>) -> Result<(), CliError> {
    if args.draws == 0 {
        return Err(CliError::Usage("--draws must be positive".into()));
    }
    let reports = gradcheck::run_gradient_suite(args.draws, cfg.seed)?;
    let lines: Vec<CheckLine> = reports
        .iter()
        .map(|r| CheckLine {
            name: r.name,
            draws: r.draws,
            max_rel_error: r.max_rel_error,
            passed: r.passed(),
        })
        .collect();
    for l in &lines {
        eprintln!(
            "{:<20} {:>5} draws  max rel error {:.3e}  {}",
            l.name,
            l.draws,
            l.max_rel_error,
            if l.passed { "PASS" } else { "FAIL" }
        );
    }
    let json = print_json(&lines)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_atomic(&dir.join("gradcheck.json"), json.as_bytes())?;
    }
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "gradient check failed for {} (tolerance {:e})",
            failed.join(", "),
            gradcheck::GRADIENT_TOLERANCE
        )))
    }
}
