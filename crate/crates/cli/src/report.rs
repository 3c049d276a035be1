//! Batch runs over seeds, per-model aggregates and model comparisons.

use std::fmt::Write as _;
use std::thread;
use std::time::Instant;

use cram_core::executive::{EpisodeOutcome, Interpreter, Labels};
use cram_core::knowledge::GenerativeModel;
use cram_core::neem::{Neem, NeemStore, NodeStatus};
use serde::Serialize;

use crate::scenario::{GmKind, ModelInputs, ScenarioSpec};
use crate::stats::{ci95, mann_whitney, mean, median, MannWhitney};
use crate::CliError;

/// Fewer seeds than this make the rank test meaningless.
pub const MIN_COMPARISON_SEEDS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub scenario: String,
    pub gm: String,
    pub seed: u64,
    /// Root status of the episode.
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub goals_met: bool,
    pub success: bool,
    pub repositions: u32,
    pub retries: u32,
    pub projections: u32,
    pub steps: u64,
    pub motions: usize,
    /// Kept out of the machine-readable rows so reports are reproducible.
    #[serde(skip)]
    pub wall_ms: f64,
}

impl RunRow {
    fn new(spec: &ScenarioSpec, seed: u64, out: &EpisodeOutcome, wall_ms: f64) -> Self {
        RunRow {
            scenario: spec.name.clone(),
            gm: spec.gm.to_string(),
            seed,
            outcome: out.status.outcome().to_string(),
            failure: match out.status {
                NodeStatus::Failed(k) => Some(k.to_string()),
                _ => None,
            },
            goals_met: out.goals.iter().all(|g| g.1),
            success: out.success(),
            repositions: out.metrics.repositions,
            retries: out.metrics.retries,
            projections: out.metrics.projections,
            steps: out.metrics.steps,
            motions: out.metrics.motions,
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub gm: String,
    pub runs: usize,
    pub successes: usize,
    pub failures: usize,
    pub success_rate: f64,
    pub mean_repositions: f64,
    pub median_repositions: f64,
    pub ci95_repositions: (f64, f64),
    pub mean_retries: f64,
    pub median_retries: f64,
    pub ci95_retries: (f64, f64),
    pub mean_projections: f64,
}

impl Summary {
    pub fn of(rows: &[RunRow]) -> Option<Summary> {
        let first = rows.first()?;
        let col = |f: fn(&RunRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let rep = col(|r| r.repositions as f64);
        let ret = col(|r| r.retries as f64);
        let successes = rows.iter().filter(|r| r.success).count();
        Some(Summary {
            scenario: first.scenario.clone(),
            gm: first.gm.clone(),
            runs: rows.len(),
            successes,
            failures: rows.iter().filter(|r| r.outcome == "failed").count(),
            success_rate: successes as f64 / rows.len() as f64,
            mean_repositions: mean(&rep)?,
            median_repositions: median(&rep)?,
            ci95_repositions: ci95(&rep)?,
            mean_retries: mean(&ret)?,
            median_retries: median(&ret)?,
            ci95_retries: ci95(&ret)?,
            mean_projections: mean(&col(|r| r.projections as f64))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<RunRow>,
    pub summary: Summary,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Record<'a> {
    Run(&'a RunRow),
    Summary(&'a Summary),
    Test(&'a PairTest),
}

fn ndjson(records: impl IntoIterator<Item = impl Serialize>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("report records serialize"));
        out.push('\n');
    }
    out
}

fn fmt_ci((lo, hi): (f64, f64)) -> String {
    format!("[{lo:.2}, {hi:.2}]")
}

fn summary_table(out: &mut String, summaries: &[&Summary]) {
    let _ = writeln!(
        out,
        "{:<18} {:<12} {:>5} {:>8} {:>9} {:>16} {:>9} {:>16} {:>8}",
        "scenario", "gm", "runs", "success", "repos", "repos 95% CI", "retries", "retries 95% CI", "proj"
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{:<18} {:<12} {:>5} {:>7.1}% {:>9.2} {:>16} {:>9.2} {:>16} {:>8.2}",
            s.scenario,
            s.gm,
            s.runs,
            100.0 * s.success_rate,
            s.mean_repositions,
            fmt_ci(s.ci95_repositions),
            s.mean_retries,
            fmt_ci(s.ci95_retries),
            s.mean_projections
        );
    }
}

impl Report {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.success)
    }

    /// Newline-delimited records: one per run, then the summary.
    pub fn to_ndjson(&self) -> String {
        ndjson(self.rows.iter().map(Record::Run).chain([Record::Summary(&self.summary)]))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6} {:<10} {:<20} {:>6} {:>6} {:>7} {:>5} {:>7} {:>9}",
            "seed", "outcome", "failure", "goals", "repos", "retries", "proj", "motions", "wall ms"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>6} {:<10} {:<20} {:>6} {:>6} {:>7} {:>5} {:>7} {:>9.1}",
                r.seed,
                r.outcome,
                r.failure.as_deref().unwrap_or("-"),
                if r.goals_met { "met" } else { "missed" },
                r.repositions,
                r.retries,
                r.projections,
                r.motions,
                r.wall_ms
            );
        }
        out.push('\n');
        summary_table(&mut out, &[&self.summary]);
        out
    }
}

/// Runs one episode per seed (in parallel over `threads`) and appends the
/// NEEMs to `store` in seed order.
pub fn run_scenario(
    spec: &ScenarioSpec,
    inputs: &ModelInputs,
    store: Option<&mut NeemStore>,
    threads: usize,
) -> Result<Report, CliError> {
    spec.check()?;
    let gm = inputs.model(spec.gm)?;
    let (rows, neems) = run_episodes(spec, &gm, threads);
    if let Some(store) = store {
        for n in neems {
            store.append(n).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    let summary = Summary::of(&rows).expect("at least one seed");
    Ok(Report { rows, summary })
}

fn run_episodes(spec: &ScenarioSpec, gm: &GenerativeModel, threads: usize) -> (Vec<RunRow>, Vec<Neem>) {
    let plan = spec.effective_plan();
    let interp = Interpreter::new(spec.kb.clone());
    let labels = Labels { world: spec.world_label.clone(), plan: spec.name.clone() };
    let run = |seed: u64| {
        let t = Instant::now();
        let out = interp.run(&plan, &spec.world, gm, seed, &labels);
        let row = RunRow::new(spec, seed, &out, t.elapsed().as_secs_f64() * 1e3);
        (row, out.neem)
    };
    let threads = threads.clamp(1, spec.seeds.len().max(1));
    let chunk = spec.seeds.len().div_ceil(threads);
    let results: Vec<(RunRow, Neem)> = if threads == 1 {
        spec.seeds.iter().map(|s| run(*s)).collect()
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = spec
                .seeds
                .chunks(chunk)
                .map(|seeds| scope.spawn(move || seeds.iter().map(|s| run(*s)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("episode thread")).collect()
        })
    };
    results.into_iter().unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTest {
    pub metric: String,
    pub a: String,
    pub b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    #[serde(flatten)]
    pub test: MannWhitney,
}

impl PairTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.test.p < alpha
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reports: Vec<Report>,
    pub tests: Vec<PairTest>,
}

impl Comparison {
    pub fn report(&self, gm: GmKind) -> Option<&Report> {
        self.reports.iter().find(|r| r.summary.gm == gm.as_str())
    }

    pub fn test(&self, metric: &str, a: GmKind, b: GmKind) -> Option<&PairTest> {
        self.tests.iter().find(|t| t.metric == metric && t.a == a.as_str() && t.b == b.as_str())
    }

    /// Models ordered by success rate, then by fewer mean retries.
    pub fn ranking(&self) -> Vec<&Summary> {
        let mut v: Vec<&Summary> = self.reports.iter().map(|r| &r.summary).collect();
        v.sort_by(|x, y| y.success_rate.total_cmp(&x.success_rate).then(x.mean_retries.total_cmp(&y.mean_retries)));
        v
    }

    pub fn to_ndjson(&self) -> String {
        let runs = self.reports.iter().flat_map(|r| r.rows.iter().map(Record::Run));
        let sums = self.reports.iter().map(|r| Record::Summary(&r.summary));
        ndjson(runs.chain(sums).chain(self.tests.iter().map(Record::Test)))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        summary_table(&mut out, &self.ranking());
        out.push('\n');
        let _ = writeln!(out, "{:<12} {:<12} {:<12} {:>9} {:>9} {:>10} {:>8} {:>10}", "metric", "a", "b", "mean a", "mean b", "U", "z", "p");
        for t in &self.tests {
            let _ = writeln!(
                out,
                "{:<12} {:<12} {:<12} {:>9.2} {:>9.2} {:>10.1} {:>8.3} {:>10.2e}",
                t.metric, t.a, t.b, t.mean_a, t.mean_b, t.test.u, t.test.z, t.test.p
            );
        }
        out
    }
}

/// Runs the same scenario under each model on the same seeds and tests
/// every pair on repositions and retries.
pub fn compare_models(
    spec: &ScenarioSpec,
    gms: &[GmKind],
    inputs: &ModelInputs,
    threads: usize,
) -> Result<Comparison, CliError> {
    if gms.len() < 2 {
        return Err(CliError::Usage("compare needs at least two generative models".into()));
    }
    if spec.seeds.len() < MIN_COMPARISON_SEEDS {
        return Err(CliError::InsufficientSeeds { got: spec.seeds.len(), need: MIN_COMPARISON_SEEDS });
    }
    let mut reports = Vec::new();
    for gm in gms {
        let s = ScenarioSpec { gm: *gm, ..spec.clone() };
        reports.push(run_scenario(&s, inputs, None, threads)?);
    }
    let mut tests = Vec::new();
    for metric in ["repositions", "retries"] {
        let column = |r: &Report| -> Vec<f64> {
            r.rows.iter().map(|x| if metric == "repositions" { x.repositions } else { x.retries } as f64).collect()
        };
        for i in 0..reports.len() {
            for j in i + 1..reports.len() {
                let (a, b) = (column(&reports[i]), column(&reports[j]));
                tests.push(PairTest {
                    metric: metric.to_string(),
                    a: reports[i].summary.gm.clone(),
                    b: reports[j].summary.gm.clone(),
                    mean_a: mean(&a).unwrap_or(0.0),
                    mean_b: mean(&b).unwrap_or(0.0),
                    test: mann_whitney(&a, &b).expect("non-empty samples"),
                });
            }
        }
    }
    Ok(Comparison { reports, tests })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(gm: GmKind, seeds: std::ops::Range<u64>) -> ScenarioSpec {
        ScenarioSpec::shipped("milk-from-fridge", gm, seeds.collect()).unwrap()
    }

    #[test]
    fn one_row_per_seed_and_consistent_summary() {
        let r = run_scenario(&spec(GmKind::Epl, 0..6), &ModelInputs::default(), None, 2).unwrap();
        assert_eq!(r.rows.iter().map(|x| x.seed).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
        assert_eq!(Summary::of(&r.rows).unwrap(), r.summary);
        assert_eq!(r.summary.runs, 6);
    }

    #[test]
    fn threads_do_not_change_the_report() {
        let a = run_scenario(&spec(GmKind::Epl, 0..5), &ModelInputs::default(), None, 1).unwrap();
        let b = run_scenario(&spec(GmKind::Epl, 0..5), &ModelInputs::default(), None, 4).unwrap();
        assert_eq!(a.to_ndjson(), b.to_ndjson());
    }

    #[test]
    fn comparison_needs_enough_seeds() {
        let e = compare_models(&spec(GmKind::Epl, 0..10), &[GmKind::Epl, GmKind::Prospective], &ModelInputs::default(), 2);
        assert!(matches!(e, Err(CliError::InsufficientSeeds { got: 10, .. })));
        let e = compare_models(&spec(GmKind::Epl, 0..40), &[GmKind::Epl], &ModelInputs::default(), 2);
        assert!(matches!(e, Err(CliError::Usage(_))));
    }

    /// Null control: the same model twice differs nowhere.
    #[test]
    fn same_model_twice_is_not_significant() {
        let c = compare_models(&spec(GmKind::Epl, 0..30), &[GmKind::Epl, GmKind::Epl], &ModelInputs::default(), 4).unwrap();
        assert!(c.tests.iter().all(|t| !t.significant(0.05)));
    }
}
