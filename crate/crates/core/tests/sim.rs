use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use swarmlab::server::{
    parse_trace, replay, MemoryTraces, OutcomeResult, TracePayload, TraceTarget,
};
use swarmlab::sim::{
    run_plan, run_plan_embedded, AgentPolicy, AgentSpec, RunStatus, SimError, SimPlan,
};

fn memory() -> (TraceTarget, MemoryTraces) {
    let map = Arc::new(Mutex::new(HashMap::new()));
    (TraceTarget::Memory(map.clone()), map)
}

#[tokio::test(flavor = "multi_thread")]
async fn three_against_two_decides_for_the_three() {
    let agents = [0, 0, 0, 3, 3].map(AgentSpec::stubborn).to_vec();
    let mut plan = SimPlan::new("split", agents);
    plan.review_ms = 1000;
    plan.repetitions = 4;
    let (target, traces) = memory();
    let summary = run_plan_embedded(&plan, target).await.unwrap();
    assert_eq!(summary.completed, 4);
    for run in &summary.runs {
        assert_eq!(run.status, RunStatus::Completed);
        assert_eq!(run.outcomes[0].result, OutcomeResult::Consensus);
        assert_eq!(run.outcomes[0].choice_id, Some(0));
        let lines = traces.lock().unwrap()[&run.session_id]
            .lock()
            .unwrap()
            .clone();
        let events = parse_trace(&lines).unwrap();
        let report = replay(&events).unwrap();
        assert_eq!(report.outcomes[0].choice_id, Some(0));
    }
}

fn ticks(traces: &MemoryTraces, session: &str) -> Vec<(u64, u64, u64)> {
    let lines = traces.lock().unwrap()[session].lock().unwrap().clone();
    parse_trace(&lines)
        .unwrap()
        .into_iter()
        .filter_map(|e| match e.payload {
            TracePayload::StateTick { tick, puck, .. } => {
                Some((tick, puck.x.to_bits(), puck.y.to_bits()))
            }
            _ => None,
        })
        .collect()
}

fn mixed_plan(seed: u64) -> SimPlan {
    let flexible = |choice, conviction| AgentPolicy::Flexible {
        choice,
        conviction,
        patience_ticks: 10,
    };
    let agents = vec![
        AgentSpec {
            policy: AgentPolicy::Noisy {
                inner: Box::new(flexible(0, 0.3)),
                jitter_sd: 0.02,
            },
            answers: Some(vec![0, 2]),
        },
        AgentSpec {
            policy: flexible(1, 0.6),
            answers: Some(vec![1, 2]),
        },
        AgentSpec {
            policy: AgentPolicy::Noisy {
                inner: Box::new(AgentPolicy::Stubborn {
                    choice: 1,
                    strength: 0.8,
                }),
                jitter_sd: 0.05,
            },
            answers: Some(vec![1, 5]),
        },
    ];
    let mut plan = SimPlan::new("mixed", agents);
    plan.questions = 2;
    plan.repetitions = 2;
    plan.seed = seed;
    plan.review_ms = 0;
    plan
}

#[tokio::test(flavor = "multi_thread")]
async fn same_seed_same_trajectories() {
    let (t1, m1) = memory();
    let (t2, m2) = memory();
    let (t3, m3) = memory();
    let first = run_plan_embedded(&mixed_plan(11), t1).await.unwrap();
    let second = run_plan_embedded(&mixed_plan(11), t2).await.unwrap();
    let other = run_plan_embedded(&mixed_plan(12), t3).await.unwrap();
    assert_eq!(first.completed, 2);
    for run in 0..2 {
        assert_eq!(first.runs[run].outcomes, second.runs[run].outcomes);
        let id = &first.runs[run].session_id;
        assert_eq!(ticks(&m1, id), ticks(&m2, id));
        // a different seed jitters the magnets differently
        assert_ne!(ticks(&m1, id), ticks(&m3, &other.runs[run].session_id));
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn opposite_stubborn_pair_never_decides() {
    let mut plan = SimPlan::new("deadlock", [2, 5].map(AgentSpec::stubborn).to_vec());
    plan.repetitions = 3;
    plan.review_ms = 0;
    let summary = run_plan_embedded(&plan, TraceTarget::Discard)
        .await
        .unwrap();
    assert_eq!(summary.completed, 3);
    for run in &summary.runs {
        let o = &run.outcomes[0];
        assert_eq!(o.result, OutcomeResult::NoConsensus);
        assert_eq!(o.choice_id, None);
        assert_eq!(o.elapsed_ms, 60_000);
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn small_and_large_flexible_groups_both_finish() {
    let group = |n: usize| {
        let agents = (0..n)
            .map(|i| AgentSpec {
                policy: AgentPolicy::Flexible {
                    choice: (i % 3) as u8,
                    conviction: 0.5,
                    patience_ticks: 10,
                },
                answers: None,
            })
            .collect();
        let mut plan = SimPlan::new(format!("flex{n}"), agents);
        plan.questions = 3;
        plan.review_ms = 0;
        plan
    };
    for n in [3, 5] {
        let summary = run_plan_embedded(&group(n), TraceTarget::Discard)
            .await
            .unwrap();
        assert_eq!(summary.completed, 1, "{n} agents");
        let ids: Vec<&str> = summary.runs[0]
            .outcomes
            .iter()
            .map(|o| o.question_id.as_str())
            .collect();
        assert_eq!(ids, ["Q01", "Q02", "Q03"]);
        for o in &summary.runs[0].outcomes {
            assert!(o.elapsed_ms <= 60_000);
            assert_eq!(o.choice_id.is_some(), o.result == OutcomeResult::Consensus);
        }
    }
}

#[tokio::test]
async fn unreachable_server_is_a_connect_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("ws://{}", listener.local_addr().unwrap());
    drop(listener);
    let plan = SimPlan::new("nowhere", [0, 0].map(AgentSpec::stubborn).to_vec());
    let err = run_plan(&plan, &endpoint).await.unwrap_err();
    assert!(matches!(err, SimError::Connect { .. }), "{err}");
}

#[tokio::test]
async fn invalid_plans_are_rejected_before_connecting() {
    let lonely = SimPlan::new("lonely", vec![AgentSpec::stubborn(0)]);
    let err = run_plan(&lonely, "ws://127.0.0.1:1").await.unwrap_err();
    assert!(matches!(err, SimError::InvalidPlan(_)), "{err}");

    let err = SimPlan::from_json("{\"name\": \"x\",\n \"agents\": [}").unwrap_err();
    assert!(matches!(err, SimError::PlanSyntax { line: 2, .. }), "{err}");

    let mut short = SimPlan::new("short", [0, 1].map(AgentSpec::stubborn).to_vec());
    short.questions = 2;
    short.agents[0].answers = Some(vec![0]);
    assert!(matches!(short.validate(), Err(SimError::InvalidPlan(_))));
}
