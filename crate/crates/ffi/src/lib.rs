//! C ABI over `abqc-core`.
//!
//! Every fallible call returns an [`AbqcStatus`]; on failure a description is
//! available from [`abqc_last_error_message`] on the same thread. Graphs and
//! transcripts are opaque handles released with their `_free` function.
//! Strings returned to the caller are released with [`abqc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use abqc_core::bounds;
use abqc_core::harness::ExperimentConfig;
use abqc_core::{
    run_protocol, AliceStrategy, BobStrategy, Error, Graph, Mode, ProtocolParams, RunOptions, Transcript, Verdict,
};

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AbqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    CapacityExceeded = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AbqcVerdict {
    Accepted = 0,
    BobCheating = 1,
    AliceCheating = 2,
    Rejected = 3,
}

impl From<Verdict> for AbqcVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Accepted => AbqcVerdict::Accepted,
            Verdict::BobCheating => AbqcVerdict::BobCheating,
            Verdict::AliceCheating => AbqcVerdict::AliceCheating,
            Verdict::Rejected => AbqcVerdict::Rejected,
        }
    }
}

/// Opaque graph handle.
pub struct AbqcGraph {
    inner: Graph,
}

/// Opaque transcript handle.
pub struct AbqcTranscript {
    inner: Transcript,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(AbqcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => AbqcStatus::Config,
            Error::DenseCapExceeded { .. } => AbqcStatus::CapacityExceeded,
            Error::Io(_) => AbqcStatus::Io,
            _ => AbqcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AbqcStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("interior nul removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

/// Runs `f`, records its error message and converts panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AbqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            AbqcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            AbqcStatus::Panic
        }
    }
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(AbqcStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn abqc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn abqc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a graph on `n` vertices from `edge_count` pairs stored flat in `edges`.
///
/// # Safety
/// `edges` must point to `2 * edge_count` readable values (it may be null when
/// `edge_count` is 0) and `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_graph_new(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    out: *mut *mut AbqcGraph,
) -> AbqcStatus {
    guard(|| {
        let flat: &[usize] = match (edges.is_null(), edge_count) {
            (_, 0) => &[],
            (true, _) => return Err(null("edges")),
            (false, c) => std::slice::from_raw_parts(edges, 2 * c),
        };
        let g = Graph::new(n, flat.chunks_exact(2).map(|p| (p[0], p[1])))?;
        write_out(out, Box::into_raw(Box::new(AbqcGraph { inner: g })), "out")
    })
}

/// Parses the text format: vertex count on the first line, then one `u v` pair per line.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_graph_parse(text: *const c_char, out: *mut *mut AbqcGraph) -> AbqcStatus {
    guard(|| {
        let g: Graph = read_str(text, "text")?.parse()?;
        write_out(out, Box::into_raw(Box::new(AbqcGraph { inner: g })), "out")
    })
}

/// # Safety
/// `g` must be a live graph handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_graph_vertex_count(g: *const AbqcGraph, out: *mut usize) -> AbqcStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        write_out(out, g.inner.n(), "out")
    })
}

/// # Safety
/// `g` must be a live graph handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_graph_edge_count(g: *const AbqcGraph, out: *mut usize) -> AbqcStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        write_out(out, g.inner.edge_count(), "out")
    })
}

/// # Safety
/// `g` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn abqc_graph_free(g: *mut AbqcGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Probability `(1 + F) / 2` that one test passes on a copy of fidelity `F`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_pass_probability(fidelity: f64, out: *mut f64) -> AbqcStatus {
    guard(|| write_out(out, bounds::pass_probability(fidelity)?, "out"))
}

/// Maximiser and maximum of `2 x^k (1 - x)` on `[0, 1]`.
///
/// # Safety
/// `argmax` and `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn abqc_deviation_maximum(k: u64, argmax: *mut f64, value: *mut f64) -> AbqcStatus {
    guard(|| {
        let m = bounds::deviation_maximum(k)?;
        if value.is_null() {
            return Err(null("value"));
        }
        write_out(argmax, m.argmax, "argmax")?;
        write_out(value, m.value, "value")
    })
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_min_k(n: u64, out: *mut u64) -> AbqcStatus {
    guard(|| write_out(out, bounds::min_k(n)?, "out"))
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_min_m(n: u64, k: u64, out: *mut u64) -> AbqcStatus {
    guard(|| write_out(out, bounds::min_m(n, k)?, "out"))
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_definetti_term(k: u64, n: u64, m: u64, out: *mut f64) -> AbqcStatus {
    guard(|| write_out(out, bounds::definetti_term(k, n, m)?, "out"))
}

/// Total soundness error at `(n, k, m)` and whether it is at most `1 / n^2`.
///
/// # Safety
/// `total` and `satisfied` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn abqc_budget(n: u64, k: u64, m: u64, total: *mut f64, satisfied: *mut bool) -> AbqcStatus {
    guard(|| {
        let b = bounds::budget(n, k, m)?;
        if satisfied.is_null() {
            return Err(null("satisfied"));
        }
        write_out(total, b.total, "total")?;
        write_out(satisfied, b.satisfied, "satisfied")
    })
}

fn boxed(t: Transcript) -> *mut AbqcTranscript {
    Box::into_raw(Box::new(AbqcTranscript { inner: t }))
}

/// Runs one protocol execution described by a TOML experiment config.
/// `seed` replaces the config's master seed; relative paths resolve against
/// the working directory.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_run_config(
    config_toml: *const c_char,
    seed: u64,
    out: *mut *mut AbqcTranscript,
) -> AbqcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = ExperimentConfig::from_toml(read_str(config_toml, "config")?, Path::new("."))
            .map_err(|e| Failure(AbqcStatus::Config, e.to_string()))?;
        cfg.master_seed = seed;
        write_out(out, boxed(cfg.run_trial(0)?), "out")
    })
}

/// Honest Bob and honest Alice in arbitrable mode on `g` with the given seed.
/// Parameters below the soundness constraints are accepted as a toy run.
///
/// # Safety
/// `g` must be a live graph handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_run_honest(
    g: *const AbqcGraph,
    k: usize,
    m: usize,
    seed: u64,
    out: *mut *mut AbqcTranscript,
) -> AbqcStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ProtocolParams::new(g.inner.clone(), k, m, Mode::Arbitrable)?;
        let t = run_protocol(&params, &BobStrategy::Honest, AliceStrategy::Honest, &RunOptions::default(), seed)?;
        write_out(out, boxed(t), "out")
    })
}

/// # Safety
/// `t` must be a live transcript handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_transcript_verdict(t: *const AbqcTranscript, out: *mut AbqcVerdict) -> AbqcStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("transcript"))?;
        write_out(out, t.inner.verdict.into(), "out")
    })
}

/// Fidelity of the computation copy; fails when the run ended before Alice computed.
///
/// # Safety
/// `t` must be a live transcript handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_transcript_instrumented_fidelity(t: *const AbqcTranscript, out: *mut f64) -> AbqcStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("transcript"))?;
        let f = t
            .inner
            .instrumented_fidelity
            .ok_or_else(|| Failure(AbqcStatus::InvalidArgument, "run ended before computation".into()))?;
        write_out(out, f, "out")
    })
}

/// Serialises the transcript; free the result with [`abqc_string_free`].
///
/// # Safety
/// `t` must be a live transcript handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn abqc_transcript_to_json(t: *const AbqcTranscript, out: *mut *mut c_char) -> AbqcStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("transcript"))?;
        let json = CString::new(t.inner.to_json()?).map_err(|e| Failure(AbqcStatus::InvalidArgument, e.to_string()))?;
        write_out(out, json.into_raw(), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn abqc_transcript_free(t: *mut AbqcTranscript) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}
