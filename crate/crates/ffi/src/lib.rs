//! C ABI over the swarm dynamics and the agreement statistics.
//!
//! Every function returns an [`SlStatus`] and writes results through out
//! pointers. Swarms are opaque handles created by [`sl_swarm_new`] and
//! released with [`sl_swarm_free`]. Class labels cross the boundary as
//! bytes 0 (no lesion), 1 (one compartment) and 2 (more than one).

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use swarmlab::metrics::{
    binary_metrics, bootstrap_kappa_seeded, cohen_kappa, cronbach_alpha, Class3, MetricsError,
};
use swarmlab::swarm::{
    AgentAlias, DynamicsParams, MagnetInput, Phase, SwarmError, SwarmState, Vec2,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownAgent = 3,
    QuestionEnded = 4,
    LengthMismatch = 5,
    ZeroVariance = 6,
    RedrawLimit = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlPhase {
    Deliberating = 0,
    Decided = 1,
    TimedOut = 2,
}

/// Mirror of the dynamics parameters; see [`sl_default_params`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlDynamicsParams {
    pub tick_dt: f64,
    pub v_max: f64,
    pub engage_gap: f64,
    pub disengage_gap: f64,
    pub puck_radius: f64,
    pub dwell_required: u32,
    pub deliberation_limit: u32,
}

impl From<DynamicsParams> for SlDynamicsParams {
    fn from(p: DynamicsParams) -> Self {
        SlDynamicsParams {
            tick_dt: p.tick_dt,
            v_max: p.v_max,
            engage_gap: p.engage_gap,
            disengage_gap: p.disengage_gap,
            puck_radius: p.puck_radius,
            dwell_required: p.dwell_required,
            deliberation_limit: p.deliberation_limit,
        }
    }
}

impl From<SlDynamicsParams> for DynamicsParams {
    fn from(p: SlDynamicsParams) -> Self {
        DynamicsParams {
            tick_dt: p.tick_dt,
            v_max: p.v_max,
            engage_gap: p.engage_gap,
            disengage_gap: p.disengage_gap,
            puck_radius: p.puck_radius,
            dwell_required: p.dwell_required,
            deliberation_limit: p.deliberation_limit,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlOutcome {
    pub phase: SlPhase,
    /// Chosen target when `phase` is decided, otherwise -1.
    pub choice: i32,
    pub tick: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlBootstrap {
    pub kappa_point: f64,
    pub kappa_mean: f64,
    pub kappa_std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

/// Undefined rates (no positives or no negatives in the truth) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlBinary {
    pub sensitivity: f64,
    pub specificity: f64,
    pub youden: f64,
}

/// Opaque swarm handle. Agents are addressed by index `0..n_agents`.
pub struct SlSwarm {
    state: SwarmState,
    params: DynamicsParams,
    aliases: Vec<AgentAlias>,
}

fn swarm_status(e: &SwarmError) -> SlStatus {
    match e {
        SwarmError::UnknownAgent(_) => SlStatus::UnknownAgent,
        SwarmError::IllegalTransition(_) => SlStatus::QuestionEnded,
        SwarmError::EmptySwarm
        | SwarmError::DuplicateAgent(_)
        | SwarmError::NonFinite
        | SwarmError::InvalidParams(_) => SlStatus::InvalidArgument,
    }
}

fn metrics_status(e: &MetricsError) -> SlStatus {
    match e {
        MetricsError::LengthMismatch(..) => SlStatus::LengthMismatch,
        MetricsError::ZeroVariance => SlStatus::ZeroVariance,
        MetricsError::RedrawLimit(_) => SlStatus::RedrawLimit,
        _ => SlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> SlStatus) -> SlStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(SlStatus::Panic)
}

fn phase_of(p: Phase) -> (SlPhase, i32) {
    match p {
        Phase::Deliberating => (SlPhase::Deliberating, -1),
        Phase::Decided(c) => (SlPhase::Decided, c as i32),
        Phase::TimedOut => (SlPhase::TimedOut, -1),
    }
}

/// # Safety
/// `ptr` must be null or point to `n` readable bytes.
unsafe fn classes(ptr: *const u8, n: usize) -> Result<Vec<Class3>, SlStatus> {
    if ptr.is_null() {
        return Err(SlStatus::NullPointer);
    }
    std::slice::from_raw_parts(ptr, n)
        .iter()
        .map(|&b| Class3::try_from(b).map_err(|_| SlStatus::InvalidArgument))
        .collect()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn sl_status_message(status: SlStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        SlStatus::Ok => b"ok\0",
        SlStatus::NullPointer => b"null pointer argument\0",
        SlStatus::InvalidArgument => b"invalid argument\0",
        SlStatus::UnknownAgent => b"agent index out of range\0",
        SlStatus::QuestionEnded => b"question already ended\0",
        SlStatus::LengthMismatch => b"input lengths differ\0",
        SlStatus::ZeroVariance => b"total score variance is zero\0",
        SlStatus::RedrawLimit => b"bootstrap could not draw a non-degenerate resample\0",
        SlStatus::Panic => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default dynamics parameters.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_default_params(out: *mut SlDynamicsParams) -> SlStatus {
    if out.is_null() {
        return SlStatus::NullPointer;
    }
    out.write(DynamicsParams::default().into());
    SlStatus::Ok
}

/// Create a swarm of `n_agents` (at least 1) with the puck at the origin.
/// `params` may be null for the defaults.
///
/// # Safety
/// `params` must be null or point to a valid struct; `out` must be valid for
/// writes. The handle must be released with [`sl_swarm_free`].
#[no_mangle]
pub unsafe extern "C" fn sl_swarm_new(
    n_agents: u32,
    params: *const SlDynamicsParams,
    out: *mut *mut SlSwarm,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return SlStatus::NullPointer;
        }
        if n_agents == 0 {
            return swarm_status(&SwarmError::EmptySwarm);
        }
        let params: DynamicsParams = if params.is_null() {
            DynamicsParams::default()
        } else {
            (*params).into()
        };
        if let Err(e) = params.validate() {
            return swarm_status(&e);
        }
        let aliases: Vec<AgentAlias> = (0..n_agents)
            .map(|i| AgentAlias::new(format!("a{i}")))
            .collect();
        match SwarmState::new(aliases.iter().cloned(), &params) {
            Ok(state) => {
                out.write(Box::into_raw(Box::new(SlSwarm {
                    state,
                    params,
                    aliases,
                })));
                SlStatus::Ok
            }
            Err(e) => swarm_status(&e),
        }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `swarm` must be null or a handle from [`sl_swarm_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_swarm_free(swarm: *mut SlSwarm) {
    if !swarm.is_null() {
        drop(Box::from_raw(swarm));
    }
}

unsafe fn with_swarm(swarm: *mut SlSwarm, f: impl FnOnce(&mut SlSwarm) -> SlStatus) -> SlStatus {
    guard(|| match swarm.as_mut() {
        Some(s) => f(s),
        None => SlStatus::NullPointer,
    })
}

unsafe fn set_input(swarm: *mut SlSwarm, agent: u32, input: MagnetInput) -> SlStatus {
    with_swarm(swarm, |s| {
        let Some(alias) = s.aliases.get(agent as usize).cloned() else {
            return SlStatus::UnknownAgent;
        };
        match s.state.apply_input(&alias, input) {
            Ok(()) => SlStatus::Ok,
            Err(e) => swarm_status(&e),
        }
    })
}

/// Place agent `agent`'s magnet at `(x, y)`.
///
/// # Safety
/// `swarm` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_swarm_set_magnet(
    swarm: *mut SlSwarm,
    agent: u32,
    x: f64,
    y: f64,
) -> SlStatus {
    set_input(swarm, agent, MagnetInput::placed(Vec2::new(x, y)))
}

/// Lift agent `agent`'s magnet off the board.
///
/// # Safety
/// `swarm` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_swarm_lift_magnet(swarm: *mut SlSwarm, agent: u32) -> SlStatus {
    set_input(swarm, agent, MagnetInput::Lifted)
}

/// Advance one tick. `out_phase` may be null.
///
/// # Safety
/// `swarm` must be a live handle; `out_phase` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_swarm_step(swarm: *mut SlSwarm, out_phase: *mut SlPhase) -> SlStatus {
    with_swarm(swarm, |s| match s.state.step(&s.params) {
        Ok(p) => {
            if !out_phase.is_null() {
                out_phase.write(phase_of(p).0);
            }
            SlStatus::Ok
        }
        Err(e) => swarm_status(&e),
    })
}

/// Current puck centre.
///
/// # Safety
/// `swarm` must be a live handle; `x` and `y` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_swarm_puck(swarm: *mut SlSwarm, x: *mut f64, y: *mut f64) -> SlStatus {
    with_swarm(swarm, |s| {
        if x.is_null() || y.is_null() {
            return SlStatus::NullPointer;
        }
        let p = s.state.puck_pos();
        x.write(p.x);
        y.write(p.y);
        SlStatus::Ok
    })
}

/// Phase, chosen target and tick count.
///
/// # Safety
/// `swarm` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_swarm_outcome(swarm: *mut SlSwarm, out: *mut SlOutcome) -> SlStatus {
    with_swarm(swarm, |s| {
        if out.is_null() {
            return SlStatus::NullPointer;
        }
        let (phase, choice) = phase_of(s.state.phase());
        out.write(SlOutcome {
            phase,
            choice,
            tick: s.state.tick(),
        });
        SlStatus::Ok
    })
}

/// Cohen's kappa of two class sequences of length `n`.
///
/// # Safety
/// `a` and `b` must point to `n` bytes; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_kappa(a: *const u8, b: *const u8, n: usize, out: *mut f64) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return SlStatus::NullPointer;
        }
        let (a, b) = match (classes(a, n), classes(b, n)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match cohen_kappa(&a, &b) {
            Ok(k) => {
                out.write(k.value);
                SlStatus::Ok
            }
            Err(e) => metrics_status(&e),
        }
    })
}

/// Seeded bootstrap of kappa over `resamples` exam-level resamples.
///
/// # Safety
/// `a` and `b` must point to `n` bytes; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_bootstrap_kappa(
    a: *const u8,
    b: *const u8,
    n: usize,
    resamples: usize,
    seed: u64,
    out: *mut SlBootstrap,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return SlStatus::NullPointer;
        }
        let (a, b) = match (classes(a, n), classes(b, n)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match bootstrap_kappa_seeded(&a, &b, resamples, seed) {
            Ok(r) => {
                out.write(SlBootstrap {
                    kappa_point: r.kappa_point,
                    kappa_mean: r.kappa_mean,
                    kappa_std: r.kappa_std,
                    ci_low: r.ci_low,
                    ci_high: r.ci_high,
                    resamples: r.resamples,
                });
                SlStatus::Ok
            }
            Err(e) => metrics_status(&e),
        }
    })
}

/// Cronbach's alpha of a row-major `raters` x `exams` score matrix.
///
/// # Safety
/// `scores` must point to `raters * exams` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_cronbach_alpha(
    scores: *const f64,
    raters: usize,
    exams: usize,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        if scores.is_null() || out.is_null() {
            return SlStatus::NullPointer;
        }
        let Some(len) = raters.checked_mul(exams) else {
            return SlStatus::InvalidArgument;
        };
        let flat = std::slice::from_raw_parts(scores, len);
        let rows: Vec<Vec<f64>> = if exams == 0 {
            vec![Vec::new(); raters]
        } else {
            flat.chunks(exams).map(<[f64]>::to_vec).collect()
        };
        match cronbach_alpha(&rows) {
            Ok(a) => {
                out.write(a);
                SlStatus::Ok
            }
            Err(e) => metrics_status(&e),
        }
    })
}

/// Lesion-present (class > 0) sensitivity, specificity and Youden index.
///
/// # Safety
/// `pred` and `truth` must point to `n` bytes; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_binary_metrics(
    pred: *const u8,
    truth: *const u8,
    n: usize,
    out: *mut SlBinary,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return SlStatus::NullPointer;
        }
        let (p, t) = match (classes(pred, n), classes(truth, n)) {
            (Ok(p), Ok(t)) => (p, t),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match binary_metrics(&p, &t) {
            Ok(m) => {
                out.write(SlBinary {
                    sensitivity: m.sensitivity.unwrap_or(f64::NAN),
                    specificity: m.specificity.unwrap_or(f64::NAN),
                    youden: m.youden.unwrap_or(f64::NAN),
                });
                SlStatus::Ok
            }
            Err(e) => metrics_status(&e),
        }
    })
}
