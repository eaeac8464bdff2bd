use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use curriculum::competence::{plot_schedules, CompetenceSchedule, ScheduleKind};
use curriculum::corpus::{Corpus, VocabConfig, Vocabulary};
use curriculum::difficulty::{score_corpus, DifficultyMetric};
use curriculum::memory::format_bytes;
use curriculum::sampler::{write_binary, write_jsonl, RunLog, Sampler, SamplerConfig};
use curriculum::toytrain::{
    run_experiment, write_curves_csv, write_summary_csv, ExperimentConfig, LearningRate,
    SyntheticTask, Variant,
};

use crate::{
    MetricArg, SampleArgs, ScheduleArgs, ScheduleParams, ScoreArgs, StreamFormat, TrainArgs, ALLOC,
};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `linear`, `sqrt`, `root` (exponent from `default_p`) or `root-<p>`.
fn parse_kind(name: &str, default_p: f64) -> Result<ScheduleKind> {
    Ok(match name.trim() {
        "linear" => ScheduleKind::Linear,
        "sqrt" => ScheduleKind::Root { p: 2.0 },
        "root" => ScheduleKind::Root { p: default_p },
        other => match other.strip_prefix("root-").map(str::parse::<f64>) {
            Some(Ok(p)) => ScheduleKind::Root { p },
            _ => bail!(curriculum::Error::InvalidParameter(format!(
                "unknown schedule kind `{other}`"
            ))),
        },
    })
}

fn schedule_from(name: &str, params: &ScheduleParams) -> Result<CompetenceSchedule> {
    let kind = parse_kind(name, params.p)?;
    Ok(CompetenceSchedule::new(kind, params.c0, params.duration)?)
}

fn vocab_config(size: usize, min_count: u64) -> VocabConfig {
    VocabConfig {
        max_size: size,
        min_count,
    }
}

pub fn score(args: ScoreArgs) -> Result<()> {
    ALLOC.reset_peak();
    let start = Instant::now();
    let corpus = match (&args.tsv, &args.source, &args.target) {
        (Some(tsv), None, None) => Corpus::ingest_tsv(tsv, args.max_length)?,
        (None, Some(src), Some(tgt)) => Corpus::ingest(src, tgt, args.max_length)?,
        _ => bail!(curriculum::Error::InvalidParameter(
            "give either --tsv or both --source and --target".into()
        )),
    };
    let vocab = vocab_config(args.vocab_size, args.min_count);
    let metric = match args.metric {
        MetricArg::Length => DifficultyMetric::length(),
        MetricArg::Rarity => DifficultyMetric::rarity_with(vocab),
    };
    let scoring = Instant::now();
    let scored = score_corpus(&corpus, &metric)?;
    let finished = Instant::now();
    scored.save(&args.output)?;

    if let Some(path) = &args.vocab_out {
        let vocabulary = Vocabulary::build(&corpus, vocab)?;
        let mut out = create(path)?;
        vocabulary.write_tsv(&mut out)?;
        out.flush()?;
    }

    let m = scored.len() as f64;
    let exclusive = m / (finished - scoring).as_secs_f64();
    let inclusive = m / (finished - start).as_secs_f64();
    println!("M: {}", scored.len());
    println!("metric: {}", scored.metric().name());
    println!("throughput (scoring only): {exclusive:.0} sentences/sec");
    println!("throughput (including parsing): {inclusive:.0} sentences/sec");
    println!("peak memory: {}", format_bytes(ALLOC.peak()));
    Ok(())
}

pub fn schedule(args: ScheduleArgs) -> Result<()> {
    let schedules = args
        .kind
        .iter()
        .map(|k| schedule_from(k, &args.params))
        .collect::<Result<Vec<_>>>()?;
    let mut out = output(args.output.as_deref())?;
    match args.at {
        Some(t) => {
            let names: Vec<String> = schedules.iter().map(CompetenceSchedule::name).collect();
            writeln!(out, "t,{}", names.join(","))?;
            let values: Vec<String> = schedules.iter().map(|s| s.at(t).to_string()).collect();
            writeln!(out, "{t},{}", values.join(","))?;
        }
        None => {
            let t_max = args.t_max.unwrap_or(args.params.duration);
            plot_schedules(&schedules, t_max)?.write_csv(&mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn sample(args: SampleArgs) -> Result<()> {
    let scored = curriculum::difficulty::ScoredCorpus::load(&args.scored)?;
    let config = SamplerConfig::new(schedule_from(&args.kind, &args.params)?)
        .with_seed(args.seed)
        .with_token_budget(args.token_budget)
        .with_min_pool(args.min_pool);
    let mut sampler = Sampler::new(&scored, &config)?;
    let mut out = output(args.output.as_deref())?;
    let mut log = RunLog::default();
    for _ in 0..args.steps {
        let batch = sampler.next_batch()?;
        match args.format {
            StreamFormat::Jsonl => write_jsonl(&batch, &mut out)?,
            StreamFormat::Binary => write_binary(&batch, &mut out)?,
        }
        log.push(&batch, None);
    }
    out.flush()?;
    if let Some(path) = &args.log {
        let mut file = create(path)?;
        log.write_csv(&mut file)?;
        file.flush()?;
    }
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let variants = args
        .variants
        .iter()
        .map(|v| v.trim().parse::<Variant>())
        .collect::<curriculum::Result<Vec<_>>>()?;
    let learning_rate = match args.noam_warmup {
        Some(warmup) => LearningRate::Noam {
            scale: args.lr,
            d_embedding: args.noam_d,
            warmup,
        },
        None => LearningRate::Constant(args.lr),
    };
    let config = ExperimentConfig {
        task: SyntheticTask {
            vocab_size: args.vocab,
            zipf_exponent: args.zipf,
            train_size: args.train_size,
            heldout_size: args.heldout_size,
            seed: args.task_seed,
            ..SyntheticTask::default()
        },
        variants,
        seeds: (args.seed..args.seed + args.seeds).collect(),
        steps: args.steps,
        eval_every: args.eval_every,
        token_budget: args.token_budget,
        initial_competence: args.c0,
        curriculum_length: args.duration,
        select_fraction: args.fraction,
        learning_rate,
        init_scale: args.init_scale,
        record_wall_time: !args.no_timing,
        ..ExperimentConfig::default()
    };
    let result = run_experiment(&config)?;

    let mut curves = create(&args.curves)?;
    write_curves_csv(&result.runs, &mut curves)?;
    curves.flush()?;
    let mut summary = create(&args.summary)?;
    write_summary_csv(&result.summary, &mut summary)?;
    summary.flush()?;

    println!("variant\tfinal_metric\trelative_time");
    for row in &result.summary {
        let rel = row
            .relative_time
            .map_or("NA".to_owned(), |r| format!("{r:.3}"));
        println!("{}\t{:.4}\t{rel}", row.variant, row.final_metric);
    }
    Ok(())
}
