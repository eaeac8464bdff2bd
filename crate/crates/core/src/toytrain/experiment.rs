use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use super::lr::LearningRate;
use super::model::{sgd_step, ToyModel};
use super::task::{generate_task, SyntheticTask, TaskData};
use crate::competence::{CompetenceSchedule, ScheduleKind};
use crate::difficulty::{score_corpus, DifficultyMetric, MetricKind, ScoredCorpus};
use crate::numfmt::format_significant;
use crate::sampler::{Sampler, SamplerConfig};
use crate::{Error, Result, DEFAULT_INITIAL_COMPETENCE, DEFAULT_TOKEN_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Plain,
    Curriculum {
        metric: MetricKind,
        schedule: ScheduleKind,
    },
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Plain,
        Variant::Curriculum {
            metric: MetricKind::SentenceLength,
            schedule: ScheduleKind::Linear,
        },
        Variant::Curriculum {
            metric: MetricKind::SentenceLength,
            schedule: ScheduleKind::Root { p: 2.0 },
        },
        Variant::Curriculum {
            metric: MetricKind::SentenceRarity,
            schedule: ScheduleKind::Linear,
        },
        Variant::Curriculum {
            metric: MetricKind::SentenceRarity,
            schedule: ScheduleKind::Root { p: 2.0 },
        },
    ];

    pub fn name(&self) -> String {
        match *self {
            Variant::Plain => "plain".to_owned(),
            Variant::Curriculum { metric, schedule } => {
                let m = match metric {
                    MetricKind::SentenceLength => "sl",
                    MetricKind::SentenceRarity => "sr",
                };
                let s = match schedule {
                    ScheduleKind::Linear => "linear".to_owned(),
                    ScheduleKind::Root { p: 2.0 } => "sqrt".to_owned(),
                    ScheduleKind::Root { p } => format!("root-{p}"),
                };
                format!("{m}-{s}")
            }
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// `plain`, or `<sl|sr>-<linear|sqrt|root-P>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "plain" {
            return Ok(Variant::Plain);
        }
        let bad = || Error::param(format!("unknown variant `{s}`"));
        let (m, sched) = s.split_once('-').ok_or_else(bad)?;
        let metric = m.parse::<MetricKind>().map_err(|_| bad())?;
        let schedule = match sched {
            "linear" => ScheduleKind::Linear,
            "sqrt" => ScheduleKind::Root { p: 2.0 },
            other => {
                let p = other
                    .strip_prefix("root-")
                    .and_then(|p| p.parse::<f64>().ok())
                    .filter(|p| *p >= 1.0)
                    .ok_or_else(bad)?;
                ScheduleKind::Root { p }
            }
        };
        Ok(Variant::Curriculum { metric, schedule })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: SyntheticTask,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub steps: u64,
    pub eval_every: u64,
    pub token_budget: u32,
    pub initial_competence: f64,
    /// Fixed curriculum length; when `None` it is chosen per seed from the
    /// plain run with [`select_t`].
    pub curriculum_length: Option<u64>,
    pub select_fraction: f64,
    pub learning_rate: LearningRate,
    pub init_scale: f64,
    pub min_pool: usize,
    /// When false every wall time is recorded as zero, making output
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: SyntheticTask::default(),
            variants: Variant::ALL.to_vec(),
            seeds: vec![0],
            steps: 20_000,
            eval_every: 100,
            token_budget: DEFAULT_TOKEN_BUDGET,
            initial_competence: DEFAULT_INITIAL_COMPETENCE,
            curriculum_length: None,
            select_fraction: 0.9,
            learning_rate: LearningRate::Constant(1.0),
            init_scale: 1.0,
            min_pool: 1,
            record_wall_time: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub step: u64,
    pub accuracy: f64,
    pub nll: f64,
    pub wall: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRun {
    pub variant: Variant,
    pub seed: u64,
    pub curriculum_length: Option<u64>,
    pub records: Vec<RunRecord>,
}

impl VariantRun {
    pub fn final_accuracy(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.accuracy)
    }

    /// First evaluated step with accuracy at least `target`.
    pub fn steps_to_reach(&self, target: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.accuracy >= target)
            .map(|r| r.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: String,
    /// Median final held-out accuracy over seeds.
    pub final_metric: f64,
    /// Median over seeds of steps to reach the plain run's final accuracy,
    /// relative to the plain run's own steps; `None` if never reached.
    pub relative_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub runs: Vec<VariantRun>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn runs_of<'a>(
        &'a self,
        variant: &'a Variant,
    ) -> impl Iterator<Item = &'a VariantRun> + 'a {
        self.runs.iter().filter(move |r| r.variant == *variant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub step: u64,
    /// False when no record reached the target and the last step was used.
    pub reached: bool,
}

/// First step whose accuracy is at least `fraction` of the final record's.
pub fn select_t(curve: &[RunRecord], fraction: f64) -> Result<Selection> {
    let last = curve
        .last()
        .ok_or_else(|| Error::param("baseline curve is empty"))?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let target = fraction * last.accuracy;
    Ok(match curve.iter().find(|r| r.accuracy >= target) {
        Some(r) => Selection {
            step: r.step,
            reached: true,
        },
        None => Selection {
            step: last.step,
            reached: false,
        },
    })
}

struct Prepared {
    data: TaskData,
    by_length: ScoredCorpus,
    by_rarity: ScoredCorpus,
}

/// Runs every variant for every seed. Per seed the plain run goes first so
/// its curve can fix the curriculum length; all variants of a seed share the
/// model initialization and the sampler seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.eval_every == 0 || config.steps < config.eval_every {
        return Err(Error::param("need steps >= eval_every >= 1"));
    }
    if config.variants.is_empty() || config.seeds.is_empty() {
        return Err(Error::param("need at least one variant and one seed"));
    }
    let data = generate_task(&config.task)?;
    let prepared = Prepared {
        by_length: score_corpus(&data.train, &DifficultyMetric::length())?,
        by_rarity: score_corpus(&data.train, &DifficultyMetric::rarity())?,
        data,
    };

    let wants_plain = config.variants.contains(&Variant::Plain);
    let mut runs = Vec::new();
    let mut plain_runs = Vec::new();
    for &seed in &config.seeds {
        let plain = if wants_plain || config.curriculum_length.is_none() {
            Some(train_variant(
                &prepared,
                config,
                Variant::Plain,
                None,
                seed,
            )?)
        } else {
            None
        };
        let length = match (config.curriculum_length, &plain) {
            (Some(t), _) => t,
            (None, Some(p)) => select_t(&p.records, config.select_fraction)?.step.max(1),
            (None, None) => unreachable!("plain run exists when length is selected"),
        };
        for &variant in &config.variants {
            if variant == Variant::Plain {
                runs.push(plain.clone().expect("plain requested"));
            } else {
                runs.push(train_variant(
                    &prepared,
                    config,
                    variant,
                    Some(length),
                    seed,
                )?);
            }
        }
        if let Some(p) = plain {
            plain_runs.push(p);
        }
    }

    let summary = summarize(&config.variants, &runs, &plain_runs);
    Ok(ExperimentResult { runs, summary })
}

fn train_variant(
    prepared: &Prepared,
    config: &ExperimentConfig,
    variant: Variant,
    length: Option<u64>,
    seed: u64,
) -> Result<VariantRun> {
    let vocab = config.task.vocab_size;
    let mut model = ToyModel::random(vocab, vocab, 0.0, config.init_scale, seed);
    let sampler_seed = seed ^ 0x5eed_0000_0000_0000;
    let mut sampler = match variant {
        Variant::Plain => Sampler::uniform(&prepared.by_length, config.token_budget, sampler_seed)?,
        Variant::Curriculum { metric, schedule } => {
            let scored = match metric {
                MetricKind::SentenceLength => &prepared.by_length,
                MetricKind::SentenceRarity => &prepared.by_rarity,
            };
            let schedule =
                CompetenceSchedule::new(schedule, config.initial_competence, length.unwrap_or(1))?;
            let cfg = SamplerConfig::new(schedule)
                .with_token_budget(config.token_budget)
                .with_seed(sampler_seed)
                .with_min_pool(config.min_pool);
            Sampler::new(scored, &cfg)?
        }
    };

    let start = Instant::now();
    let wall = |start: Instant| {
        if config.record_wall_time {
            start.elapsed()
        } else {
            Duration::ZERO
        }
    };
    let heldout = &prepared.data.heldout;
    let mut records = Vec::new();
    let eval = model.evaluate(heldout);
    records.push(RunRecord {
        step: 0,
        accuracy: eval.accuracy,
        nll: eval.nll,
        wall: wall(start),
    });
    for step in 1..=config.steps {
        let batch = sampler.next_batch()?;
        model.learning_rate = config.learning_rate.at(step - 1);
        sgd_step(&mut model, &batch, &prepared.data.train);
        if step % config.eval_every == 0 || step == config.steps {
            let eval = model.evaluate(heldout);
            records.push(RunRecord {
                step,
                accuracy: eval.accuracy,
                nll: eval.nll,
                wall: wall(start),
            });
        }
    }
    Ok(VariantRun {
        variant,
        seed,
        curriculum_length: length,
        records,
    })
}

fn summarize(
    variants: &[Variant],
    runs: &[VariantRun],
    plain_runs: &[VariantRun],
) -> Vec<SummaryRow> {
    variants
        .iter()
        .map(|v| {
            let mine: Vec<&VariantRun> = runs.iter().filter(|r| r.variant == *v).collect();
            let finals: Vec<f64> = mine.iter().map(|r| r.final_accuracy()).collect();
            let relative: Vec<f64> = mine
                .iter()
                .filter_map(|r| {
                    let plain = plain_runs.iter().find(|p| p.seed == r.seed)?;
                    let target = plain.final_accuracy();
                    let baseline = plain.steps_to_reach(target)?;
                    let reached = r.steps_to_reach(target)?;
                    (baseline > 0).then(|| reached as f64 / baseline as f64)
                })
                .collect();
            SummaryRow {
                variant: v.name(),
                final_metric: median(&finals).unwrap_or(f64::NAN),
                relative_time: if relative.len() == mine.len() {
                    median(&relative)
                } else {
                    None
                },
            }
        })
        .collect()
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// CSV `variant,seed,step,accuracy,nll,wall_ms`.
pub fn write_curves_csv<W: Write>(runs: &[VariantRun], mut out: W) -> std::io::Result<()> {
    writeln!(out, "variant,seed,step,accuracy,nll,wall_ms")?;
    for run in runs {
        for r in &run.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                run.variant,
                run.seed,
                r.step,
                format_significant(r.accuracy, 9),
                format_significant(r.nll, 9),
                r.wall.as_millis()
            )?;
        }
    }
    Ok(())
}

/// CSV `variant,final_metric,relative_time`; unreachable times print `NA`.
pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "variant,final_metric,relative_time")?;
    for row in summary {
        let rel = row
            .relative_time
            .map(|r| format_significant(r, 6))
            .unwrap_or_else(|| "NA".to_owned());
        writeln!(
            out,
            "{},{},{}",
            row.variant,
            format_significant(row.final_metric, 6),
            rel
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: &[f64]) -> Vec<RunRecord> {
        values
            .iter()
            .enumerate()
            .map(|(i, &accuracy)| RunRecord {
                step: (i as u64 + 1) * 100,
                accuracy,
                nll: 0.0,
                wall: Duration::ZERO,
            })
            .collect()
    }

    #[test]
    fn select_t_examples() {
        let c = curve(&[0.1, 0.5, 0.85, 0.9, 0.91]);
        assert_eq!(
            select_t(&c, 0.9).unwrap(),
            Selection {
                step: 300,
                reached: true
            }
        );
        assert_eq!(select_t(&c, 1.0).unwrap().step, 500);
        assert_eq!(select_t(&curve(&[0.4, 0.4, 0.4]), 0.9).unwrap().step, 100);
        assert!(select_t(&[], 0.9).is_err());
        assert!(select_t(&c, 0.0).is_err());
    }

    #[test]
    fn select_t_flags_unreached_target() {
        let c = curve(&[f64::NAN, f64::NAN]);
        assert_eq!(
            select_t(&c, 0.9).unwrap(),
            Selection {
                step: 200,
                reached: false
            }
        );
    }

    #[test]
    fn variant_names_round_trip() {
        let names: Vec<String> = Variant::ALL.iter().map(Variant::name).collect();
        assert_eq!(
            names,
            ["plain", "sl-linear", "sl-sqrt", "sr-linear", "sr-sqrt"]
        );
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(
            "sr-root-3".parse::<Variant>().unwrap(),
            Variant::Curriculum {
                metric: MetricKind::SentenceRarity,
                schedule: ScheduleKind::Root { p: 3.0 }
            }
        );
        assert!("sl-cubic".parse::<Variant>().is_err());
        assert!("xx-linear".parse::<Variant>().is_err());
    }

    #[test]
    fn relative_time_follows_table_convention() {
        let plain = VariantRun {
            variant: Variant::Plain,
            seed: 0,
            curriculum_length: None,
            records: curve(&[0.2, 0.5, 0.8, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9]),
        };
        let sl = VariantRun {
            variant: Variant::ALL[1],
            seed: 0,
            curriculum_length: Some(100),
            records: curve(&[0.2, 0.5, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.95]),
        };
        let runs = vec![plain.clone(), sl];
        let summary = summarize(&[Variant::Plain, Variant::ALL[1]], &runs, &[plain]);
        assert_eq!(summary[0].relative_time, Some(1.0));
        assert_eq!(summary[1].relative_time, Some(0.75));
        assert_eq!(summary[1].final_metric, 0.95);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn small_experiment_is_reproducible() {
        let config = ExperimentConfig {
            task: SyntheticTask {
                vocab_size: 20,
                train_size: 300,
                heldout_size: 50,
                ..SyntheticTask::default()
            },
            steps: 300,
            eval_every: 50,
            token_budget: 200,
            seeds: vec![1, 2],
            record_wall_time: false,
            ..ExperimentConfig::default()
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 10);
        for run in &a.runs {
            assert!(run.records.windows(2).all(|w| w[0].step < w[1].step));
            assert_eq!(run.records.last().unwrap().step, 300);
        }
        let mut buf = Vec::new();
        write_summary_csv(&a.summary, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("variant,final_metric,relative_time\nplain,"));
    }

    #[test]
    fn fixed_length_skips_plain_when_not_requested() {
        let config = ExperimentConfig {
            task: SyntheticTask {
                vocab_size: 10,
                train_size: 100,
                heldout_size: 10,
                ..SyntheticTask::default()
            },
            variants: vec![Variant::ALL[2]],
            steps: 20,
            eval_every: 10,
            token_budget: 100,
            curriculum_length: Some(10),
            ..ExperimentConfig::default()
        };
        let result = run_experiment(&config).unwrap();
        assert_eq!(result.runs.len(), 1);
        assert_eq!(result.runs[0].curriculum_length, Some(10));
        assert_eq!(result.summary[0].relative_time, None);
    }
}
