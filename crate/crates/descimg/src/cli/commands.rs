use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use descimg_core::{fuse, validate_matrix, LabelSet, MetricId, ScoreMatrix};
use serde_json::json;

use super::args::*;
use super::Failure;
use crate::error::{Error, Result};
use crate::evaluation::{discover_snapshots, evaluate_dir, sweep};
use crate::fetch::MockProvider;
use crate::fetch::{HttpJsonProvider, ImageProvider, ProviderConfig};
use crate::fetch::{batch_fetch, FetchPolicy, FetchStatus};
use crate::fsutil;
use crate::ingest::{
    language_table, parse_manifest, read_score_document, read_scores_csv, scan_image_sets,
    DatasetManifest, ManifestFormat, ScanOptions,
};
use crate::report::{
    parse_document, render_document, render_report, render_series, Comparison, Document,
    ReportFormat,
};
use crate::scorer::{score_dataset, ExternalConfig, ScoreOptions, ScorerSpec, StubConfig};
use crate::synth::{generate, SynthConfig};

type CmdResult = std::result::Result<(), Failure>;

pub(crate) fn execute(command: Command, cancel: &AtomicBool) -> CmdResult {
    match command {
        Command::Fetch(a) => fetch(a, cancel),
        Command::Score(a) => score(a, cancel),
        Command::Classify(a) => classify(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => run_sweep(a, cancel),
        Command::Stats(a) => stats(a),
        Command::Report(a) => report(a),
        Command::Synth(a) => synth(a, cancel),
    }
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    parse_manifest(path, ManifestFormat::from_path(path), None)
}

fn workers(n: usize) -> usize {
    if n > 0 {
        n
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Writes `text` atomically to `out`, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fsutil::write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn fetch(a: FetchArgs, cancel: &AtomicBool) -> CmdResult {
    let mut policy = FetchPolicy {
        max_images: a.max_images,
        min_edge_px: a.min_edge,
        icon_max_px: a.icon_max,
        request_timeout: Duration::try_from_secs_f64(a.timeout_secs)
            .map_err(|e| Failure::Usage(format!("--timeout-secs: {e}")))?,
        max_concurrent: a.max_concurrent,
        per_host_delay: Duration::from_millis(a.per_host_delay_ms),
        query_mode: a.query_mode,
        ..FetchPolicy::default()
    };
    if !a.allowed_mimes.is_empty() {
        policy.allowed_mimes = a.allowed_mimes.into_iter().collect();
    }
    policy.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let provider: Box<dyn ImageProvider> = match (a.provider, a.mock_seed) {
        (Some(path), _) => Box::new(HttpJsonProvider::new(
            ProviderConfig::load(&path)?,
            policy.request_timeout,
        )?),
        (None, Some(seed)) => Box::new(MockProvider::synthetic(seed)),
        (None, None) => return Err(Failure::Usage("--provider or --mock-seed is required".into())),
    };

    let mut manifest = load_manifest(&a.manifest)?;
    if let Some(split) = a.split {
        manifest.records.retain(|r| r.split == split);
    }
    let report = batch_fetch(&manifest, provider.as_ref(), &policy, &a.out, cancel)?;
    if let Some(path) = &a.report {
        let mut text = serde_json::to_string_pretty(&report).expect("batch reports serialize");
        text.push('\n');
        fsutil::write_atomic(path, text.as_bytes())?;
    }

    let failed = report.count(|s| matches!(s, FetchStatus::Failed { .. }));
    let cancelled = report.count(|s| matches!(s, FetchStatus::Cancelled));
    eprintln!(
        "sites: {}  complete: {}  partial: {}  skipped: {}  failed: {}  cancelled: {}  downloads: {}  query: {:?}",
        report.outcomes.len(),
        report.count(|s| matches!(s, FetchStatus::Complete)),
        report.count(|s| matches!(s, FetchStatus::Partial)),
        report.count(|s| matches!(s, FetchStatus::Skipped)),
        failed,
        cancelled,
        report.downloads(),
        policy.query_mode,
    );
    if cancelled > 0 {
        return Err(Error::Interrupted.into());
    }
    if failed > 0 {
        return Err(Error::Incomplete {
            failed,
            total: report.outcomes.len(),
        }
        .into());
    }
    Ok(())
}

fn score(a: ScoreArgs, cancel: &AtomicBool) -> CmdResult {
    let spec = match a.scorer {
        ScorerKind::Stub => ScorerSpec::Stub(StubConfig {
            concentration: a.concentration,
            class_correct_rate: a.class_p.into_iter().collect(),
            ..StubConfig::new(a.seed, a.p)
        }),
        ScorerKind::Precomputed => ScorerSpec::Precomputed {
            dir: a
                .precomputed
                .ok_or_else(|| Failure::Usage("--scorer precomputed needs --precomputed".into()))?,
        },
        ScorerKind::External => ScorerSpec::External(ExternalConfig {
            command: a
                .adapter
                .ok_or_else(|| Failure::Usage("--scorer external needs --adapter".into()))?,
            args: a.adapter_args,
            granularity: a.granularity.into(),
        }),
    };
    let manifest = load_manifest(&a.manifest)?;
    let options = ScoreOptions {
        split: a.split,
        workers: workers(a.workers),
    };
    let summary = score_dataset(&manifest, &a.images, &spec, &a.out, &options, cancel)?;
    eprintln!(
        "sites scored: {}  images: {}  no evidence: {}  failed: {}",
        summary.sites_scored,
        summary.images_scored,
        summary.no_evidence.len(),
        summary.failures.len()
    );
    for (site, why) in &summary.failures {
        eprintln!("  {site}: {why}");
    }
    if summary.cancelled > 0 {
        return Err(Error::Interrupted.into());
    }
    if !summary.failures.is_empty() {
        return Err(Error::Incomplete {
            failed: summary.failures.len(),
            total: summary.sites_scored + summary.no_evidence.len() + summary.failures.len(),
        }
        .into());
    }
    Ok(())
}

fn load_site_scores(a: &ClassifyArgs) -> Result<(LabelSet, ScoreMatrix)> {
    let manifest_labels = match &a.manifest {
        Some(path) => Some(load_manifest(path)?.labels),
        None => None,
    };
    let is_csv = a.scores.extension().is_some_and(|e| e == "csv");
    if is_csv {
        let labels = manifest_labels
            .ok_or_else(|| Error::Config("CSV scores need --manifest for the labels".into()))?;
        let matrix = read_scores_csv(&a.scores)?
            .remove(&a.site)
            .ok_or_else(|| Error::parse(&a.scores, format!("no rows for site {}", a.site)))?;
        return Ok((labels, matrix));
    }
    let path: PathBuf = if a.scores.is_dir() {
        a.scores.join(format!("{}.json", a.site))
    } else {
        a.scores.clone()
    };
    let doc = read_score_document(&path)?;
    if doc.site_id != a.site {
        return Err(Error::parse(
            &path,
            format!("document is for site {}, not {}", doc.site_id, a.site),
        ));
    }
    let labels = match manifest_labels {
        Some(labels) if labels.names() != doc.labels.as_slice() => {
            return Err(Error::InvalidScores {
                site_id: a.site.clone(),
                reasons: format!("labels {:?} differ from manifest labels {:?}", doc.labels, labels.names()),
            })
        }
        Some(labels) => labels,
        None => LabelSet::new(doc.labels.iter().cloned())?,
    };
    Ok((labels, doc.matrix()))
}

fn classify(a: ClassifyArgs) -> CmdResult {
    let metrics = if a.metrics.is_empty() {
        MetricId::FUSION.to_vec()
    } else {
        a.metrics.clone()
    };
    if metrics.contains(&MetricId::PerImage) {
        return Err(Failure::Usage("PerImage is not a fusion metric".into()));
    }
    let (labels, matrix) = load_site_scores(&a)?;
    if matrix.is_empty() {
        return Err(Error::NoEvidence(a.site.clone()).into());
    }
    let verdict = validate_matrix(&matrix, &labels, a.mode);
    if !verdict.is_valid() {
        return Err(Error::InvalidScores {
            site_id: a.site.clone(),
            reasons: verdict.to_string(),
        }
        .into());
    }

    let mut fused = Vec::with_capacity(metrics.len());
    for metric in metrics {
        fused.push(fuse(&matrix, metric)?);
    }
    let text = match a.format {
        ClassifyFormat::Json => {
            let items: Vec<_> = fused
                .iter()
                .map(|f| {
                    json!({
                        "metric": f.metric,
                        "decision": labels.names()[f.decided],
                        "images_used": f.images_used,
                        "per_class": labels.names().iter().zip(&f.per_class)
                            .map(|(n, v)| (n.clone(), json!(v)))
                            .collect::<serde_json::Map<_, _>>(),
                    })
                })
                .collect();
            let doc = json!({ "site_id": a.site, "images": matrix.len(), "metrics": items });
            let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
            s.push('\n');
            s
        }
        ClassifyFormat::Table => {
            let name_width = labels.names().iter().map(String::len).max().unwrap_or(8).max(8);
            let mut s = format!("site {} ({} images)\n", a.site, matrix.len());
            s.push_str(&format!("{:<8}  {:<name_width$}  {:>6}", "metric", "decision", "images"));
            for n in labels.names() {
                s.push_str(&format!("  {:>12}", n));
            }
            s.push('\n');
            for f in &fused {
                s.push_str(&format!(
                    "{:<8}  {:<name_width$}  {:>6}",
                    f.metric.to_string(),
                    labels.names()[f.decided],
                    f.images_used
                ));
                for v in &f.per_class {
                    s.push_str(&format!("  {v:>12.6}"));
                }
                s.push('\n');
            }
            s
        }
    };
    emit(None, &text)?;
    Ok(())
}

fn with_comparison(
    text: String,
    format: ReportFormat,
    args: &ComparisonArgs,
    best: Option<f64>,
) -> std::result::Result<String, Failure> {
    let Some(path) = &args.baselines else {
        return Ok(text);
    };
    if format != ReportFormat::Table {
        return Err(Failure::Usage("--baselines only applies to --format table".into()));
    }
    let mut table = Comparison::from_csv(&fsutil::read_to_string(path)?)
        .map_err(|e| Error::parse(path, e))?;
    table.set(&args.row, &args.column, best);
    Ok(format!("{text}\n{}", table.render_table()))
}

fn evaluate(a: EvaluateArgs) -> CmdResult {
    let manifest = load_manifest(&a.manifest)?;
    let report = evaluate_dir(&manifest, &a.scores, a.mode, workers(a.workers))?;
    let text = render_report(&report, a.format)?;
    let best = descimg_core::best_metric(&report).map(|(_, acc)| acc);
    let text = with_comparison(text, a.format, &a.comparison, best)?;
    emit(a.out.as_deref(), &text)?;
    Ok(())
}

fn run_sweep(a: SweepArgs, cancel: &AtomicBool) -> CmdResult {
    let manifest = load_manifest(&a.manifest)?;
    let snapshots = discover_snapshots(&a.snapshots)?;
    if snapshots.is_empty() {
        return Err(Error::Config(format!(
            "no epoch_NNN directories under {}",
            a.snapshots.display()
        ))
        .into());
    }
    let series = sweep(&snapshots, &manifest, a.mode, workers(a.workers), cancel)?;
    emit(a.out.as_deref(), &render_series(&series, a.format)?)?;
    Ok(())
}

fn stats(a: StatsArgs) -> CmdResult {
    let manifest = load_manifest(&a.manifest)?;
    let options = ScanOptions {
        max_ratio_percent: a.max_ratio_percent,
        large_edge_px: a.large_edge,
    };
    let stats = scan_image_sets(&a.images, &manifest, options)?;
    let languages = language_table(&manifest);
    let mut doc = serde_json::to_value(&stats).expect("stats serialize");
    doc["languages"] = json!(languages);
    let mut text = serde_json::to_string_pretty(&doc).expect("json values serialize");
    text.push('\n');
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            fsutil::write_atomic(&dir.join("histogram.csv"), stats.histogram_csv().as_bytes())?;
            fsutil::write_atomic(&dir.join("splits.csv"), stats.split_counts_csv().as_bytes())?;
            let mut lang = String::from("language,sites\n");
            for (l, n) in &languages {
                lang.push_str(&format!("{l},{n}\n"));
            }
            fsutil::write_atomic(&dir.join("languages.csv"), lang.as_bytes())?;
            fsutil::write_atomic(&dir.join("stats.json"), text.as_bytes())?;
            eprintln!(
                "images: {}  larger than {} px: {}  corrupt: {}",
                stats.total_images,
                stats.large_edge_px,
                stats.large_image_count,
                stats.corrupt.len()
            );
        }
        None => emit(None, &text)?,
    }
    Ok(())
}

fn report(a: ReportArgs) -> CmdResult {
    let text = fsutil::read_to_string(&a.input)?;
    let doc = parse_document(&text).map_err(|e| Error::parse(&a.input, e))?;
    let best = match &doc {
        Document::Report(r) => descimg_core::best_metric(r).map(|(_, acc)| acc),
        Document::Series(s) => s.best().map(|(_, _, acc)| acc),
    };
    let out = render_document(&doc, a.format)?;
    let out = with_comparison(out, a.format, &a.comparison, best)?;
    emit(a.out.as_deref(), &out)?;
    Ok(())
}

fn synth(a: SynthArgs, cancel: &AtomicBool) -> CmdResult {
    let config = SynthConfig {
        sites: a.sites,
        classes: a.classes,
        images: a.images,
        correct_rate: a.p,
        seed: a.seed,
        concentration: a.concentration,
    };
    let summary = generate(&config, &a.out, cancel)?;
    eprintln!(
        "wrote {} sites, {} images to {}",
        summary.sites_scored,
        summary.images_scored,
        a.out.display()
    );
    Ok(())
}
