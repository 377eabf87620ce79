//! C ABI over `mining_fairness`.
//!
//! Models and reports are opaque handles created by `mf_*` constructors and
//! released with the matching `*_free`. Every fallible call returns an
//! [`MfStatus`]; on failure the message is kept per thread and can be read
//! with [`mf_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mining_fairness::forkscale::impacts;
use mining_fairness::sim::{self, empirical_fairness, SimConfig};
use mining_fairness::{
    baseline_fairness, build_model, model_fairness, two_miner_closed_form, CalcError, DelayMatrix,
    FairnessReport, HarnessError, ModelConfig, ModelError, NetworkModel, TieBreakRule,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidModel = 2,
    InvalidArgument = 3,
    NonConvergence = 4,
    InvalidConfig = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfRule {
    FirstSeen = 0,
    Random = 1,
    LastGenerated = 2,
}

impl From<MfRule> for TieBreakRule {
    fn from(rule: MfRule) -> Self {
        match rule {
            MfRule::FirstSeen => TieBreakRule::FirstSeen,
            MfRule::Random => TieBreakRule::Random,
            MfRule::LastGenerated => TieBreakRule::LastGenerated,
        }
    }
}

/// Opaque network model.
pub struct MfModel(NetworkModel);

/// Opaque fairness report.
pub struct MfReport(FairnessReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MfTwoMiner {
    pub f: f64,
    pub pi_a: f64,
    pub pi_b: f64,
    pub w_ab: f64,
    pub w_ba: f64,
    pub lf1_a: f64,
    pub lf1_b: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MfImpacts {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: MfStatus, message: impl ToString) -> MfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.to_string());
    status
}

fn status_of_calc(err: CalcError) -> MfStatus {
    let status = match err {
        CalcError::NonConvergence { .. } => MfStatus::NonConvergence,
        _ => MfStatus::InvalidArgument,
    };
    fail(status, err)
}

fn status_of_model(err: ModelError) -> MfStatus {
    fail(MfStatus::InvalidModel, err)
}

fn status_of_harness(err: HarnessError) -> MfStatus {
    let status = match err {
        HarnessError::Model(_) => MfStatus::InvalidModel,
        HarnessError::Calc(CalcError::NonConvergence { .. }) => MfStatus::NonConvergence,
        HarnessError::Calc(_) => MfStatus::InvalidArgument,
        _ => MfStatus::InvalidConfig,
    };
    fail(status, err)
}

fn guard(body: impl FnOnce() -> MfStatus) -> MfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == MfStatus::Ok {
                LAST_ERROR.with(|e| e.borrow_mut().clear());
            }
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MfStatus::Panic, msg)
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(MfStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a model from `n` hashrate shares and a row-major `n × n` delay
/// matrix in seconds.
///
/// # Safety
/// `alpha` must hold `n` values, `delays` `n * n` values, and `out` must be
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_model_new(
    n: usize,
    alpha: *const f64,
    delays: *const f64,
    mean_interval: f64,
    rule: MfRule,
    out: *mut *mut MfModel,
) -> MfStatus {
    non_null!(alpha, delays, out);
    guard(|| {
        let alpha = slice::from_raw_parts(alpha, n).to_vec();
        let rows: Vec<Vec<f64>> = slice::from_raw_parts(delays, n * n)
            .chunks(n.max(1))
            .map(<[f64]>::to_vec)
            .collect();
        let model = DelayMatrix::from_rows(&rows)
            .and_then(|d| build_model(n, alpha, d, mean_interval, rule.into()));
        match model {
            Ok(m) => {
                *out = Box::into_raw(Box::new(MfModel(m)));
                MfStatus::Ok
            }
            Err(e) => status_of_model(e),
        }
    })
}

/// Builds a model from the JSON config format used by the `mfair` CLI.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_model_from_json(
    json: *const c_char,
    out: *mut *mut MfModel,
) -> MfStatus {
    non_null!(json, out);
    guard(|| {
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(MfStatus::InvalidConfig, e),
        };
        let model = ModelConfig::from_json(text).and_then(|c| c.build().map_err(Into::into));
        match model {
            Ok(m) => {
                *out = Box::into_raw(Box::new(MfModel(m)));
                MfStatus::Ok
            }
            Err(e) => status_of_harness(e),
        }
    })
}

/// Number of miners, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_model_miners(model: *const MfModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mf_model_free(model: *mut MfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn emit_report(report: FairnessReport, out: *mut *mut MfReport) -> MfStatus {
    *out = Box::into_raw(Box::new(MfReport(report)));
    MfStatus::Ok
}

/// Model-based fairness. Pass `epsilon = 0` and `max_iter = 0` for defaults.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_model_fairness(
    model: *const MfModel,
    epsilon: f64,
    max_iter: u64,
    out: *mut *mut MfReport,
) -> MfStatus {
    non_null!(model, out);
    guard(|| {
        let eps = if epsilon == 0.0 {
            mining_fairness::calc::DEFAULT_EPSILON
        } else {
            epsilon
        };
        let iters = if max_iter == 0 {
            mining_fairness::calc::DEFAULT_MAX_ITER
        } else {
            max_iter
        };
        match model_fairness(&(*model).0, eps, iters) {
            Ok(r) => emit_report(r, out),
            Err(e) => status_of_calc(e),
        }
    })
}

/// Fairness with round start rates taken equal to hashrate shares.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_baseline_fairness(
    model: *const MfModel,
    out: *mut *mut MfReport,
) -> MfStatus {
    non_null!(model, out);
    guard(|| emit_report(baseline_fairness(&(*model).0), out))
}

/// Simulates `rounds` rounds and reports the empirical fairness.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_simulate(
    model: *const MfModel,
    rounds: u64,
    seed: u64,
    out: *mut *mut MfReport,
) -> MfStatus {
    non_null!(model, out);
    if rounds == 0 {
        return fail(MfStatus::InvalidArgument, "rounds must be positive");
    }
    guard(|| {
        let m = &(*model).0;
        let result = sim::run(&SimConfig::new(m.clone(), rounds, seed));
        match empirical_fairness(&result, m.alpha().as_slice()) {
            Ok(r) => emit_report(r, out),
            Err(e) => status_of_calc(e),
        }
    })
}

/// Number of miners covered by a report, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_report_miners(report: *const MfReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.n())
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfField {
    Pi = 0,
    RewardRate = 1,
    Lf1 = 2,
    Lf2 = 3,
}

/// Copies one per-miner column of a report into `buf`, which must hold at
/// least `mf_report_miners(report)` values.
///
/// # Safety
/// `report` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mf_report_get(
    report: *const MfReport,
    field: MfField,
    buf: *mut f64,
    len: usize,
) -> MfStatus {
    non_null!(report, buf);
    let r = &(*report).0;
    let src = match field {
        MfField::Pi => &r.pi,
        MfField::RewardRate => &r.reward_rates,
        MfField::Lf1 => &r.lf1,
        MfField::Lf2 => &r.lf2,
    };
    if len < src.len() {
        return fail(
            MfStatus::BufferTooSmall,
            format!("buffer holds {len} values, report has {}", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    MfStatus::Ok
}

/// Writes the global indicators GF1 and GF2.
///
/// # Safety
/// `report` must be a live handle; `gf1` and `gf2` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_report_global(
    report: *const MfReport,
    gf1: *mut f64,
    gf2: *mut f64,
) -> MfStatus {
    non_null!(report, gf1, gf2);
    *gf1 = (*report).0.gf1;
    *gf2 = (*report).0.gf2;
    MfStatus::Ok
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mf_report_free(report: *mut MfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Closed-form two-miner solution with a common delay.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_two_miner(
    alpha_a: f64,
    d_over_t: f64,
    out: *mut MfTwoMiner,
) -> MfStatus {
    non_null!(out);
    match two_miner_closed_form(alpha_a, d_over_t) {
        Ok(s) => {
            *out = MfTwoMiner {
                f: s.f,
                pi_a: s.pi_a,
                pi_b: s.pi_b,
                w_ab: s.w_ab,
                w_ba: s.w_ba,
                lf1_a: s.lf1_a,
                lf1_b: s.lf1_b,
            };
            MfStatus::Ok
        }
        Err(e) => status_of_calc(e),
    }
}

/// Impacts of one-, two- and three-or-more-block rounds at `d/T`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mf_impacts(d_over_t: f64, out: *mut MfImpacts) -> MfStatus {
    non_null!(out);
    match impacts(d_over_t) {
        Ok(i) => {
            *out = MfImpacts {
                i1: i.i1,
                i2: i.i2,
                i3: i.i3,
            };
            MfStatus::Ok
        }
        Err(e) => status_of_calc(e),
    }
}
