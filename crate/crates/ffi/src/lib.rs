//! C ABI for the composition engine.
//!
//! Objects cross the boundary as opaque handles created by `*_new` / `*_load`
//! style functions and released with the matching `*_free`. Fallible calls
//! return an [`EaasStatus`]; the message for the most recent failure on the
//! calling thread is available from [`eaas_last_error`].
//!
//! Times are minutes since midnight. Energy is in battery-percent units.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eaas_compose::incentive::reward_request;
use eaas_compose::workload::read_fixtures;
use eaas_compose::{
    compose, select_nearby, validate_instance, Algorithm, CompositionPlan, Energy, EnergyRequest,
    EnergyService, Error, Location, ModelConstants, TimeWindow,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Domain = 4,
    BfLimit = 5,
    Parse = 6,
    Io = 7,
    Config = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaasAlgorithm {
    Ib = 0,
    Fcfs = 1,
    Bf = 2,
}

impl From<EaasAlgorithm> for Algorithm {
    fn from(a: EaasAlgorithm) -> Self {
        match a {
            EaasAlgorithm::Ib => Algorithm::Ib,
            EaasAlgorithm::Fcfs => Algorithm::Fcfs,
            EaasAlgorithm::Bf => Algorithm::Bf,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EaasRewardBreakdown {
    pub reward_bl: f64,
    pub reward_re: f64,
    pub reward_st: f64,
    pub reward_tp: f64,
    pub total: f64,
}

/// Incentive model constants.
pub struct EaasConstants(ModelConstants);

/// One service and the requests competing for it.
pub struct EaasInstance {
    service: EnergyService,
    requests: Vec<EnergyRequest>,
}

/// A composed schedule.
pub struct EaasPlan {
    plan: CompositionPlan,
    ids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    let message = CString::new(message).expect("interior NULs were replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

fn status_of(error: &Error) -> EaasStatus {
    match error {
        Error::Domain(_) => EaasStatus::Domain,
        Error::Validation(_) => EaasStatus::Validation,
        Error::Config(_) => EaasStatus::Config,
        Error::BruteForceLimit { .. } => EaasStatus::BfLimit,
        Error::Parse { .. } => EaasStatus::Parse,
        Error::Io { .. } => EaasStatus::Io,
    }
}

fn fail(status: EaasStatus, message: impl Into<String>) -> EaasStatus {
    set_last_error(message);
    status
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (EaasStatus, String)>) -> EaasStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            EaasStatus::Ok
        }
        Ok(Err((status, message))) => fail(status, message),
        Err(_) => fail(EaasStatus::Panic, "internal panic"),
    }
}

fn from_core(error: Error) -> (EaasStatus, String) {
    (status_of(&error), error.to_string())
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, (EaasStatus, String)> {
    if ptr.is_null() {
        return Err((EaasStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| (EaasStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn window(start: u16, end: u16) -> Result<TimeWindow, (EaasStatus, String)> {
    TimeWindow::from_minutes(start, end).map_err(|e| (EaasStatus::InvalidArgument, e.to_string()))
}

fn energy(units: f64, what: &str) -> Result<Energy, (EaasStatus, String)> {
    Energy::from_units(units).ok_or_else(|| {
        (
            EaasStatus::InvalidArgument,
            format!("{what} must be finite and non-negative, got {units}"),
        )
    })
}

fn out_ptr<T>(out: *mut *mut T) -> Result<(), (EaasStatus, String)> {
    if out.is_null() {
        Err((EaasStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

/// Message describing the last failed call on this thread, or an empty
/// string. The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn eaas_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Default constants. Never null; release with [`eaas_constants_free`].
#[no_mangle]
pub extern "C" fn eaas_constants_default() -> *mut EaasConstants {
    Box::into_raw(Box::new(EaasConstants(ModelConstants::default())))
}

/// Loads constants from a TOML or JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eaas_constants_load(
    path: *const c_char,
    out: *mut *mut EaasConstants,
) -> EaasStatus {
    guard(|| {
        out_ptr(out)?;
        let path = read_str(path, "path")?;
        let constants = ModelConstants::load(path).map_err(from_core)?;
        *out = Box::into_raw(Box::new(EaasConstants(constants)));
        Ok(())
    })
}

/// # Safety
/// `constants` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eaas_constants_free(constants: *mut EaasConstants) {
    if !constants.is_null() {
        drop(Box::from_raw(constants));
    }
}

/// Creates an instance for one service with no requests.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn eaas_instance_new(
    service_id: *const c_char,
    owner_id: *const c_char,
    capacity: f64,
    x: f64,
    y: f64,
    start_minute: u16,
    end_minute: u16,
    out: *mut *mut EaasInstance,
) -> EaasStatus {
    guard(|| {
        out_ptr(out)?;
        let service = EnergyService {
            id: read_str(service_id, "service_id")?.to_owned(),
            owner_id: read_str(owner_id, "owner_id")?.to_owned(),
            capacity: energy(capacity, "capacity")?,
            location: Location::new(x, y),
            window: window(start_minute, end_minute)?,
        };
        *out = Box::into_raw(Box::new(EaasInstance {
            service,
            requests: Vec::new(),
        }));
        Ok(())
    })
}

/// Creates an instance from a service JSON document and a JSON-lines fixture
/// text whose request lines become the requests.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eaas_instance_from_json(
    service_json: *const c_char,
    requests_jsonl: *const c_char,
    out: *mut *mut EaasInstance,
) -> EaasStatus {
    guard(|| {
        out_ptr(out)?;
        let service: EnergyService = serde_json::from_str(read_str(service_json, "service_json")?)
            .map_err(|e| (EaasStatus::Parse, format!("service: {e}")))?;
        let (_, requests) =
            read_fixtures(read_str(requests_jsonl, "requests_jsonl")?.as_bytes()).map_err(from_core)?;
        *out = Box::into_raw(Box::new(EaasInstance { service, requests }));
        Ok(())
    })
}

/// Appends a request.
///
/// # Safety
/// `instance` must be a live handle; strings must be NUL-terminated.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn eaas_instance_add_request(
    instance: *mut EaasInstance,
    request_id: *const c_char,
    owner_id: *const c_char,
    battery_level: f64,
    requested_energy: f64,
    start_minute: u16,
    end_minute: u16,
    x: f64,
    y: f64,
) -> EaasStatus {
    guard(|| {
        let instance = instance
            .as_mut()
            .ok_or((EaasStatus::NullPointer, "instance is null".to_owned()))?;
        instance.requests.push(EnergyRequest {
            id: read_str(request_id, "request_id")?.to_owned(),
            owner_id: read_str(owner_id, "owner_id")?.to_owned(),
            battery_level,
            requested_energy: energy(requested_energy, "requested_energy")?,
            window: window(start_minute, end_minute)?,
            location: Location::new(x, y),
        });
        Ok(())
    })
}

/// Number of requests in the instance; zero for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eaas_instance_request_count(instance: *const EaasInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.requests.len())
}

/// Checks the instance. Writes the number of findings to `out_findings`;
/// when non-zero, returns `Validation` and [`eaas_last_error`] lists them.
///
/// # Safety
/// `instance` must be a live handle and `out_findings` valid.
#[no_mangle]
pub unsafe extern "C" fn eaas_instance_validate(
    instance: *const EaasInstance,
    out_findings: *mut usize,
) -> EaasStatus {
    guard(|| {
        let instance = instance
            .as_ref()
            .ok_or((EaasStatus::NullPointer, "instance is null".to_owned()))?;
        if out_findings.is_null() {
            return Err((EaasStatus::NullPointer, "out_findings is null".into()));
        }
        let findings = validate_instance(&instance.service, &instance.requests);
        *out_findings = findings.len();
        if findings.is_empty() {
            Ok(())
        } else {
            let text: Vec<String> = findings.iter().map(ToString::to_string).collect();
            Err((EaasStatus::Validation, text.join("; ")))
        }
    })
}

/// # Safety
/// `instance` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eaas_instance_free(instance: *mut EaasInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Reward breakdown of request `index` against the instance's service.
/// A null `constants` uses the defaults.
///
/// # Safety
/// Handles must be live (or null for `constants`); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eaas_reward_request(
    instance: *const EaasInstance,
    constants: *const EaasConstants,
    index: usize,
    out: *mut EaasRewardBreakdown,
) -> EaasStatus {
    guard(|| {
        let instance = instance
            .as_ref()
            .ok_or((EaasStatus::NullPointer, "instance is null".to_owned()))?;
        let out = out
            .as_mut()
            .ok_or((EaasStatus::NullPointer, "output pointer is null".to_owned()))?;
        let defaults;
        let constants = match constants.as_ref() {
            Some(c) => &c.0,
            None => {
                defaults = ModelConstants::default();
                &defaults
            }
        };
        let request = instance.requests.get(index).ok_or_else(|| {
            (
                EaasStatus::InvalidArgument,
                format!("request index {index} out of range"),
            )
        })?;
        let b = reward_request(request, &instance.service, constants).map_err(from_core)?;
        *out = EaasRewardBreakdown {
            reward_bl: b.reward_bl,
            reward_re: b.reward_re,
            reward_st: b.reward_st,
            reward_tp: b.reward_tp,
            total: b.total,
        };
        Ok(())
    })
}

/// Validates the instance, selects the servable requests and composes them
/// with `algorithm`. A null `constants` uses the defaults. `bf_limit` only
/// applies to brute force.
///
/// # Safety
/// Handles must be live (or null for `constants`); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eaas_compose(
    instance: *const EaasInstance,
    constants: *const EaasConstants,
    algorithm: EaasAlgorithm,
    bf_limit: usize,
    out: *mut *mut EaasPlan,
) -> EaasStatus {
    guard(|| {
        out_ptr(out)?;
        let instance = instance
            .as_ref()
            .ok_or((EaasStatus::NullPointer, "instance is null".to_owned()))?;
        let defaults;
        let constants = match constants.as_ref() {
            Some(c) => &c.0,
            None => {
                defaults = ModelConstants::default();
                &defaults
            }
        };
        let findings = validate_instance(&instance.service, &instance.requests);
        if !findings.is_empty() {
            let text: Vec<String> = findings.iter().map(ToString::to_string).collect();
            return Err((EaasStatus::Validation, text.join("; ")));
        }
        let scored = select_nearby(&instance.service, &instance.requests, constants).map_err(from_core)?;
        let plan = compose(algorithm.into(), &instance.service, &scored, bf_limit).map_err(from_core)?;
        let ids = plan
            .accepted
            .iter()
            .map(|s| CString::new(s.request.id.replace('\0', " ")).expect("NULs replaced"))
            .collect();
        *out = Box::into_raw(Box::new(EaasPlan { plan, ids }));
        Ok(())
    })
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eaas_plan_total_reward(plan: *const EaasPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.plan.total_reward)
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eaas_plan_remaining_energy(plan: *const EaasPlan) -> f64 {
    plan.as_ref()
        .map_or(f64::NAN, |p| p.plan.remaining_energy.as_units())
}

/// Number of accepted requests.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eaas_plan_len(plan: *const EaasPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.ids.len())
}

/// Id of the `index`-th accepted request in start order, or null when out of
/// range. Borrowed from the plan.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eaas_plan_request_id(plan: *const EaasPlan, index: usize) -> *const c_char {
    plan.as_ref()
        .and_then(|p| p.ids.get(index))
        .map_or(ptr::null(), |id| id.as_ptr())
}

/// The plan as a JSON document. Release with [`eaas_string_free`].
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eaas_plan_to_json(plan: *const EaasPlan) -> *mut c_char {
    let Some(plan) = plan.as_ref() else {
        set_last_error("plan is null");
        return ptr::null_mut();
    };
    match serde_json::to_string(&plan.plan.to_document()) {
        Ok(json) => CString::new(json).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            set_last_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `plan` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eaas_plan_free(plan: *mut EaasPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eaas_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
