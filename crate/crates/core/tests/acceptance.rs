//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or exceeds its time budget.

use futures_util::stream::{self, StreamExt};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};
use swarmlab::metrics::{
    binary_metrics, bootstrap_kappa_seeded, cohen_kappa, cohort_report, cronbach_alpha, Class3,
    RaterLabels, ReportOptions, RowKind, SorLabels, SwarmResult, VoteSet,
};
use swarmlab::server::{
    parse_trace, recorded_outcomes, replay, swarm_outcomes, MemoryTraces, OutcomeResult, Server,
    TracePayload, TraceTarget,
};
use swarmlab::sim::{run_plan, AgentPolicy, AgentSpec, RunStatus, SimPlan};
use swarmlab::swarm::{AgentAlias, DynamicsParams, MagnetInput, Phase, SwarmState, TargetLayout};

const YOUDEN_TOL: f64 = 0.01;
const KAPPA_TOL: f64 = 1e-12;
const ALPHA_TOL: f64 = 1e-12;
const BOOT_MEAN_TOL: f64 = 0.10;
const UNANIMITY_TICKS: u64 = 89;

type TraceMap = MemoryTraces;

/// Traces written by the simulation criteria, checked by the replay criterion.
fn traces() -> &'static TraceMap {
    static TRACES: OnceLock<TraceMap> = OnceLock::new();
    TRACES.get_or_init(Default::default)
}

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap()
}

fn class(i: usize) -> Class3 {
    Class3::ALL[i]
}

// 1 -------------------------------------------------------------------------

fn youden_fixture() -> String {
    let refs: HashMap<String, SorLabels> = ["clinical", "radiological"]
        .iter()
        .map(|n| {
            (
                n.to_string(),
                SorLabels::from_path(&fixture(&format!("{n}.csv"))).unwrap(),
            )
        })
        .collect();
    let mut rdr = csv::Reader::from_path(fixture("binary_expected.csv")).unwrap();
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (row, reference, file) = (&rec[0], &rec[1], &rec[2]);
        let printed: Vec<f64> = (3..6).map(|i| rec[i].parse().unwrap()).collect();
        let pred_file = SorLabels::from_path(&fixture(file)).unwrap();
        let truth_labels = &refs[reference];
        let pred: Vec<Class3> = pred_file.records.iter().map(|(_, c)| *c).collect();
        let truth: Vec<Class3> = pred_file
            .records
            .iter()
            .map(|(e, _)| truth_labels.get(e).unwrap())
            .collect();
        let m = binary_metrics(&pred, &truth).unwrap();
        let (se, sp, j) = (
            m.sensitivity.unwrap(),
            m.specificity.unwrap(),
            m.youden.unwrap(),
        );
        assert_eq!(j, se + sp - 1.0, "{row} vs {reference}: youden identity");
        for (got, want, what) in [
            (se, printed[0], "sensitivity"),
            (sp, printed[1], "specificity"),
            (j, printed[2], "youden"),
        ] {
            let d = (got - want).abs();
            assert!(
                d <= YOUDEN_TOL,
                "{row} vs {reference}: {what} {got:.4}, printed {want}"
            );
            if what == "youden" {
                worst = worst.max(d);
            }
        }
        rows += 1;
    }
    assert_eq!(rows, 17, "10 clinical + 7 radiological rows");
    format!("{rows} rows, max |youden - printed| = {worst:.4}")
}

// 2 -------------------------------------------------------------------------

fn class_balance() -> String {
    let clin = SorLabels::from_path(&fixture("clinical.csv")).unwrap();
    let rad = SorLabels::from_path(&fixture("radiological.csv")).unwrap();
    assert_eq!(clin.records.len(), 36);
    assert_eq!(rad.records.len(), 36);
    assert_eq!(clin.marginals(), [15, 13, 8]);
    assert_eq!(rad.marginals(), [8, 8, 20]);
    format!(
        "clinical {:?}, radiological {:?}",
        clin.marginals(),
        rad.marginals()
    )
}

// 3 -------------------------------------------------------------------------

/// Kappa by counting every cell of the agreement table directly.
fn kappa_oracle(a: &[Class3], b: &[Class3]) -> f64 {
    let n = a.len() as f64;
    let mut table = [[0.0f64; 3]; 3];
    for (i, row) in table.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a
                .iter()
                .zip(b)
                .filter(|(x, y)| **x == class(i) && **y == class(j))
                .count() as f64;
        }
    }
    let po: f64 = (0..3).map(|i| table[i][i]).sum::<f64>() / n;
    let pe: f64 = (0..3)
        .map(|k| {
            let row: f64 = table[k].iter().sum();
            let col: f64 = (0..3).map(|i| table[i][k]).sum();
            row * col
        })
        .sum::<f64>()
        / (n * n);
    if pe == 1.0 {
        // both raters constant on the same class
        return 1.0;
    }
    (po - pe) / (1.0 - pe)
}

fn kappa_oracle_check() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let n = rng.random_range(1..=20);
        let a: Vec<Class3> = (0..n).map(|_| class(rng.random_range(0..3))).collect();
        // mix of independent and mostly agreeing pairs
        let agree = rng.random_bool(0.5);
        let b: Vec<Class3> = a
            .iter()
            .map(|x| {
                if agree && rng.random_bool(0.7) {
                    *x
                } else {
                    class(rng.random_range(0..3))
                }
            })
            .collect();
        let k = cohen_kappa(&a, &b).unwrap().value;
        let want = kappa_oracle(&a, &b);
        assert!(
            (k - want).abs() <= KAPPA_TOL,
            "case {case}: {k} vs oracle {want}"
        );
        let swapped = cohen_kappa(&b, &a).unwrap().value;
        assert!((k - swapped).abs() <= KAPPA_TOL, "case {case}: asymmetric");
        let perfect = cohen_kappa(&a, &a).unwrap().value;
        assert_eq!(perfect, 1.0, "case {case}: perfect agreement");
    }
    "1000 random pairs match oracle, symmetric, self-agreement = 1".into()
}

// 4 -------------------------------------------------------------------------

/// 3x3 table with row sums (15, 13, 8) whose kappa is closest to `target`.
fn table_with_kappa(target: f64) -> [[usize; 3]; 3] {
    let rows = [15usize, 13, 8];
    let splits = |n: usize| -> Vec<[usize; 3]> {
        let mut v = Vec::new();
        for a in 0..=n {
            for b in 0..=n - a {
                v.push([a, b, n - a - b]);
            }
        }
        v
    };
    let (s0, s1, s2) = (splits(rows[0]), splits(rows[1]), splits(rows[2]));
    let mut best = ([[0; 3]; 3], f64::INFINITY);
    for r0 in &s0 {
        for r1 in &s1 {
            for r2 in &s2 {
                let t = [*r0, *r1, *r2];
                let n = 36.0;
                let po = (t[0][0] + t[1][1] + t[2][2]) as f64 / n;
                let pe: f64 = (0..3)
                    .map(|k| rows[k] as f64 * (t[0][k] + t[1][k] + t[2][k]) as f64)
                    .sum::<f64>()
                    / (n * n);
                let k = (po - pe) / (1.0 - pe);
                if (k - target).abs() < best.1 {
                    best = (t, (k - target).abs());
                }
            }
        }
    }
    best.0
}

fn bootstrap_check() -> String {
    let t = table_with_kappa(0.34);
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for (i, row) in t.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            for _ in 0..count {
                truth.push(class(i));
                pred.push(class(j));
            }
        }
    }
    let first = bootstrap_kappa_seeded(&truth, &pred, 100, 7).unwrap();
    let again = bootstrap_kappa_seeded(&truth, &pred, 100, 7).unwrap();
    assert_eq!(first, again, "same seed, same result");
    assert_eq!(
        (
            first.kappa_mean,
            first.kappa_std,
            first.ci_low,
            first.ci_high
        ),
        (
            again.kappa_mean,
            again.kappa_std,
            again.ci_low,
            again.ci_high
        )
    );
    assert_eq!(first.resamples, 100);
    assert_eq!(first.samples.len(), 100);
    assert!(first.min() <= first.kappa_point && first.kappa_point <= first.max());
    assert!(
        (first.kappa_point - 0.34).abs() < 0.01,
        "search found {}",
        first.kappa_point
    );
    assert!(
        (first.kappa_mean - first.kappa_point).abs() <= BOOT_MEAN_TOL,
        "mean {} vs point {}",
        first.kappa_mean,
        first.kappa_point
    );
    format!(
        "point {:.3}, mean {:.3} (std {:.3}), CI [{:.3}, {:.3}], 100 resamples",
        first.kappa_point, first.kappa_mean, first.kappa_std, first.ci_low, first.ci_high
    )
}

// 5 -------------------------------------------------------------------------

fn alpha_check() -> String {
    let same = vec![vec![3.0, 7.0, 5.0, 9.0]; 4];
    assert_eq!(cronbach_alpha(&same).unwrap(), 1.0);
    let a = cronbach_alpha(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 5.0]]).unwrap();
    // k/(k-1) * (1 - (2/3 + 26/9) / (56/9))
    let oracle = 2.0 * (1.0 - (2.0 / 3.0 + 26.0 / 9.0) / (56.0 / 9.0));
    assert!((a - 6.0 / 7.0).abs() <= ALPHA_TOL, "{a}");
    assert!((a - oracle).abs() <= ALPHA_TOL);
    format!("identical raters -> 1.0, 2x3 example -> {a:.12}")
}

// 6 -------------------------------------------------------------------------

async fn run_all(
    plans: &[SimPlan],
    traces: TraceTarget,
    concurrency: usize,
) -> Vec<swarmlab::sim::SimSummary> {
    let running = Server::new(traces).bind("127.0.0.1:0").await.unwrap();
    let endpoint = running.endpoint();
    let summaries: Vec<_> = stream::iter(plans)
        .map(|p| {
            let endpoint = endpoint.clone();
            async move { run_plan(p, &endpoint).await.unwrap() }
        })
        .buffer_unordered(concurrency)
        .collect()
        .await;
    running.shutdown().await;
    summaries
}

fn majority_dominance() -> String {
    let mut plans = Vec::new();
    let mut winners = HashMap::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let major = rng.random_range(0..6u8);
        let minor = (major + rng.random_range(1..6u8)) % 6;
        let mut choices = vec![major, major, major, minor, minor];
        choices.shuffle(&mut rng);
        let mut plan = SimPlan::new(
            format!("split-{seed:03}"),
            choices.into_iter().map(AgentSpec::stubborn).collect(),
        );
        plan.seed = seed;
        plan.time_scale = 100.0;
        winners.insert(plan.session_id(0), major);
        plans.push(plan);
    }
    let stalemates: Vec<SimPlan> = (0..3u8)
        .map(|i| {
            let mut p = SimPlan::new(
                format!("stalemate-{i}"),
                vec![AgentSpec::stubborn(i), AgentSpec::stubborn(i + 3)],
            );
            p.time_scale = 100.0;
            p
        })
        .collect();

    let rt = runtime();
    let summaries = rt.block_on(run_all(&plans, TraceTarget::Memory(traces().clone()), 25));
    let mut slowest = 0;
    for s in &summaries {
        let run = &s.runs[0];
        assert_eq!(
            run.status,
            RunStatus::Completed,
            "{}: {:?}",
            run.session_id,
            run.error
        );
        let o = &run.outcomes[0];
        assert_eq!(o.result, OutcomeResult::Consensus, "{}", run.session_id);
        assert_eq!(
            o.choice_id,
            Some(winners[&run.session_id]),
            "{}",
            run.session_id
        );
        assert!(o.elapsed_ms <= 60_000);
        slowest = slowest.max(o.elapsed_ms);
    }
    assert_eq!(summaries.len(), 100);

    let summaries = rt.block_on(run_all(
        &stalemates,
        TraceTarget::Memory(traces().clone()),
        3,
    ));
    for s in &summaries {
        let run = &s.runs[0];
        assert_eq!(run.status, RunStatus::Completed, "{:?}", run.error);
        let o = &run.outcomes[0];
        assert_eq!(o.result, OutcomeResult::NoConsensus);
        assert_eq!(o.elapsed_ms, 60_000);
        let lines = traces().lock().unwrap()[&run.session_id]
            .lock()
            .unwrap()
            .clone();
        let last_tick = parse_trace(&lines)
            .unwrap()
            .iter()
            .filter_map(|e| match e.payload {
                TracePayload::StateTick { tick, .. } => Some(tick),
                _ => None,
            })
            .max();
        assert_eq!(last_tick, Some(1200));
    }

    // the same stalemate without the network
    let params = DynamicsParams::default();
    let layout = TargetLayout::hexagonal();
    let (a, b) = (AgentAlias::new("a"), AgentAlias::new("b"));
    let mut state = SwarmState::new([a.clone(), b.clone()], &params).unwrap();
    let touch = |c: u8| {
        MagnetInput::placed(layout.target(c).unwrap().center.unit() * (params.puck_radius + 0.01))
    };
    state.apply_input(&a, touch(1)).unwrap();
    state.apply_input(&b, touch(4)).unwrap();
    let mut phase = Phase::Deliberating;
    while phase == Phase::Deliberating {
        phase = state.step(&params).unwrap();
    }
    assert_eq!((phase, state.tick()), (Phase::TimedOut, 1200));

    format!("100/100 majority wins (slowest {slowest} ms simulated), 3 diametric stalemates time out at tick 1200")
}

// 7 -------------------------------------------------------------------------

fn unanimity_bound() -> String {
    let plans: Vec<SimPlan> = (0..6u8)
        .map(|c| {
            let mut p = SimPlan::new(format!("unanimous-{c}"), vec![AgentSpec::stubborn(c); 5]);
            p.time_scale = 100.0;
            p
        })
        .collect();
    let rt = runtime();
    let summaries = rt.block_on(run_all(&plans, TraceTarget::Memory(traces().clone()), 6));
    let mut worst = 0;
    for (s, c) in summaries.iter().zip(0u8..) {
        let run = &s.runs[0];
        assert_eq!(run.status, RunStatus::Completed, "{:?}", run.error);
        let o = &run.outcomes[0];
        assert_eq!(o.result, OutcomeResult::Consensus);
        let lines = traces().lock().unwrap()[&run.session_id]
            .lock()
            .unwrap()
            .clone();
        let report = replay(&parse_trace(&lines).unwrap()).unwrap();
        let ticks = report.trajectories[0].last().unwrap().0;
        // 0.85 / (0.25 * 0.05) = 68 ticks of travel plus 20 dwell ticks, rounded up
        assert!(ticks <= UNANIMITY_TICKS, "target {c}: {ticks} ticks");
        assert_eq!(o.elapsed_ms, ticks * 50);
        worst = worst.max(ticks);
    }
    let _ = summaries
        .iter()
        .map(|s| s.runs[0].outcomes[0].choice_id)
        .collect::<Vec<_>>();
    format!("all six targets decided, slowest {worst} ticks (bound {UNANIMITY_TICKS})")
}

// 8 -------------------------------------------------------------------------

fn replay_equality() -> String {
    let all: Vec<(String, Vec<String>)> = traces()
        .lock()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.lock().unwrap().clone()))
        .collect();
    assert!(
        all.len() >= 109,
        "expected traces from the simulation criteria, found {}",
        all.len()
    );
    for (id, lines) in &all {
        let events = parse_trace(lines).unwrap_or_else(|e| panic!("{id}: {e}"));
        let report = replay(&events).unwrap_or_else(|e| panic!("{id}: {e}"));
        assert_eq!(report.outcomes, recorded_outcomes(&events), "{id}");
        let recorded: Vec<(u64, u64, u64)> = events
            .iter()
            .filter_map(|e| match &e.payload {
                TracePayload::StateTick { tick, puck, .. } => {
                    Some((*tick, puck.x.to_bits(), puck.y.to_bits()))
                }
                _ => None,
            })
            .collect();
        let replayed: Vec<(u64, u64, u64)> = report
            .trajectories
            .iter()
            .flatten()
            .map(|(t, x, y)| (*t, x.to_bits(), y.to_bits()))
            .collect();
        assert_eq!(recorded, replayed, "{id}: trajectory");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ids: Vec<&String> = all.iter().map(|(k, _)| k).collect();
    ids.sort();
    let perturbations = 300;
    for _ in 0..perturbations {
        let id = ids[rng.random_range(0..ids.len())];
        let mut lines = all.iter().find(|(k, _)| k == id).unwrap().1.clone();
        let line = rng.random_range(0..lines.len());
        let mut bytes = lines[line].clone().into_bytes();
        let pos = rng.random_range(0..bytes.len());
        let old = bytes[pos];
        let new = loop {
            let b = rng.random_range(0x20u8..0x7f);
            if b != old {
                break b;
            }
        };
        bytes[pos] = new;
        lines[line] = String::from_utf8(bytes).unwrap();
        let err = parse_trace(&lines)
            .and_then(|ev| replay(&ev).map(|_| ()))
            .expect_err("perturbation undetected");
        assert_eq!(
            err.seq, line as u64,
            "{id}: byte {pos} of line {line}: {err}"
        );
    }
    format!(
        "{} traces replay bit-identically; {perturbations} single-byte edits each pinned to their seq",
        all.len()
    )
}

// 9 -------------------------------------------------------------------------

fn end_to_end() -> String {
    let raters: Vec<RaterLabels> = (1..=5)
        .map(|i| RaterLabels::from_path(&fixture(&format!("cohort/resident{i}.csv"))).unwrap())
        .collect();
    let exams: Vec<String> = raters[0]
        .records
        .iter()
        .map(|r| r.exam_id.clone())
        .collect();
    assert_eq!(exams.len(), 36);
    let agents: Vec<AgentSpec> = raters
        .iter()
        .map(|r| {
            let answers: Vec<u8> = exams
                .iter()
                .map(|e| r.get(e).unwrap().choice.code())
                .collect();
            let mean_conf = r
                .records
                .iter()
                .map(|x| x.confidence.unwrap() as f64)
                .sum::<f64>()
                / 36.0;
            AgentSpec {
                policy: AgentPolicy::Flexible {
                    choice: answers[0],
                    conviction: mean_conf / 10.0,
                    patience_ticks: 10,
                },
                answers: Some(answers),
            }
        })
        .collect();
    let mut plan = SimPlan::new("loopback", agents);
    plan.questions = 36;
    plan.question_ids = Some(exams.clone());
    plan.time_scale = 100.0;
    plan.seed = 11;

    let traces: TraceMap = Default::default();
    let rt = runtime();
    let summary = rt.block_on(run_all(
        std::slice::from_ref(&plan),
        TraceTarget::Memory(traces.clone()),
        1,
    ));
    let run = &summary[0].runs[0];
    assert_eq!(run.status, RunStatus::Completed, "{:?}", run.error);
    assert_eq!(run.outcomes.len(), 36);
    let ids: Vec<&str> = run
        .outcomes
        .iter()
        .map(|o| o.question_id.as_str())
        .collect();
    assert_eq!(ids, exams.iter().map(String::as_str).collect::<Vec<_>>());
    let swarm = run.swarm_outcomes();

    // the trace says the same thing as the clients saw
    let lines = traces.lock().unwrap()[&run.session_id]
        .lock()
        .unwrap()
        .clone();
    let events = parse_trace(&lines).unwrap();
    replay(&events).unwrap();
    let from_trace = swarm_outcomes(
        recorded_outcomes(&events)
            .iter()
            .map(|o| (o.question_id.as_str(), o.result, o.choice_id)),
    );
    assert_eq!(from_trace, swarm);

    let sors = [
        SorLabels::from_path(&fixture("clinical.csv")).unwrap(),
        SorLabels::from_path(&fixture("radiological.csv")).unwrap(),
    ];
    let votes = VoteSet::from_raters("residents", &raters).unwrap();
    let report = cohort_report(&votes, Some(&swarm), &sors, &ReportOptions::default()).unwrap();
    let no_consensus: Vec<String> = swarm
        .records
        .iter()
        .filter(|(_, r)| *r == SwarmResult::NoConsensus)
        .map(|(e, _)| e.clone())
        .collect();
    assert_eq!(report.excluded_exams, no_consensus);
    assert_eq!(report.n_exams, 36 - no_consensus.len());
    assert_eq!(report.references.len(), 2);
    for block in &report.references {
        let kinds: Vec<RowKind> = block.rows.iter().map(|r| r.kind).collect();
        assert_eq!(
            kinds.iter().filter(|k| **k == RowKind::Individual).count(),
            5
        );
        assert!(kinds.contains(&RowKind::Majority));
        assert!(kinds.contains(&RowKind::MostConfident));
        let swarm_row = block.swarm.as_ref().expect("swarm row");
        for row in block.rows.iter().chain([swarm_row]) {
            assert_eq!(
                row.n_exams, report.n_exams,
                "{} vs {}",
                row.label, block.reference
            );
            assert_eq!(row.confusion.total() as usize, report.n_exams);
            assert_eq!(row.resamples, 100);
        }
    }
    let swarm_kappa = |i: usize| report.references[i].swarm.as_ref().unwrap().kappa_point;
    format!(
        "36 questions, {} without consensus excluded; 8 rows x 2 references; swarm kappa {:.2} / {:.2}",
        no_consensus.len(),
        swarm_kappa(0),
        swarm_kappa(1)
    )
}

// ---------------------------------------------------------------------------

type Criterion = (u32, &'static str, Duration, fn() -> String);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "youden fixture", Duration::from_secs(1), youden_fixture),
        (2, "class balance", Duration::from_secs(1), class_balance),
        (
            3,
            "kappa oracle",
            Duration::from_secs(5),
            kappa_oracle_check,
        ),
        (
            4,
            "bootstrap determinism",
            Duration::from_secs(2),
            bootstrap_check,
        ),
        (5, "cronbach alpha", Duration::from_secs(1), alpha_check),
        (
            6,
            "swarm majority dominance",
            Duration::from_secs(60),
            majority_dominance,
        ),
        (
            7,
            "unanimity bound",
            Duration::from_secs(60),
            unanimity_bound,
        ),
        (
            8,
            "replay equality",
            Duration::from_secs(60),
            replay_equality,
        ),
        (
            9,
            "end-to-end loopback",
            Duration::from_secs(120),
            end_to_end,
        ),
    ];
    let mut failed = 0;
    for (n, name, budget, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        match result {
            Ok(detail) if took <= budget => {
                println!(
                    "criterion {n} ({name}): PASS [{:.2}s] {detail}",
                    took.as_secs_f64()
                );
            }
            Ok(detail) => {
                failed += 1;
                println!(
                    "criterion {n} ({name}): FAIL [{:.2}s > {:.0}s budget] {detail}",
                    took.as_secs_f64(),
                    budget.as_secs_f64()
                );
            }
            Err(panic) => {
                failed += 1;
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!(
                    "criterion {n} ({name}): FAIL [{:.2}s] {msg}",
                    took.as_secs_f64()
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
