//! C ABI over the dynamic decomposition session: opaque handles,
//! status codes, and caller-freed strings.
//!
//! Every function is safe to call from C as long as the handle and
//! pointer contracts in each `# Safety` section hold. Panics never
//! unwind across the boundary; they surface as `Panicked` and wreck
//! the session, after which only `dyntw_session_free` is useful.
//! Error details for the most recent failing call on a session are
//! kept on the session and read back with `dyntw_last_error`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dyntw::balance::EngineParams;
use dyntw::session::Session;
use dyntw::DyntwError;

/// Result of every call. Anything but `Ok` leaves the out-parameters
/// untouched.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DyntwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Rejected input: bad parameters, vertex out of range, unknown
    /// automaton name.
    InvalidArgument = 3,
    /// The edge to add is already present.
    DuplicateEdge = 4,
    /// The edge to delete is not present.
    MissingEdge = 5,
    /// The structure can no longer be maintained; the promised width
    /// bound did not hold for the update stream.
    PromiseViolated = 6,
    /// An internal invariant audit failed.
    SelfcheckFailed = 7,
    /// A panic was caught at the boundary and the session is wrecked.
    Panicked = 8,
}

/// Opaque session handle; create with `dyntw_session_new*`, destroy
/// with `dyntw_session_free`.
pub struct DyntwSession {
    inner: Session,
    last_error: Option<CString>,
    wrecked: bool,
}

impl DyntwSession {
    fn fail(&mut self, status: DyntwStatus, msg: String) -> DyntwStatus {
        // interior NULs cannot survive the crossing; mark them instead
        self.last_error =
            Some(CString::new(msg).unwrap_or_else(|_| c"error message held a NUL".to_owned()));
        status
    }

    fn ok(&mut self) -> DyntwStatus {
        self.last_error = None;
        DyntwStatus::Ok
    }

    fn fail_dyntw(&mut self, e: DyntwError) -> DyntwStatus {
        let status = match &e {
            DyntwError::InvalidArgument(_) => DyntwStatus::InvalidArgument,
            DyntwError::PromiseViolated(_) => DyntwStatus::PromiseViolated,
        };
        self.fail(status, e.to_string())
    }
}

/// Runs `body` with panics converted to `Panicked`; a caught panic
/// wrecks the session because the structure may be mid-mutation.
fn guarded(
    s: &mut DyntwSession,
    body: impl FnOnce(&mut DyntwSession) -> DyntwStatus,
) -> DyntwStatus {
    if s.wrecked {
        return s.fail(
            DyntwStatus::Panicked,
            "session wrecked by an earlier panic".to_string(),
        );
    }
    match catch_unwind(AssertUnwindSafe(|| body(s))) {
        Ok(status) => status,
        Err(payload) => {
            let msg = if let Some(m) = payload.downcast_ref::<&str>() {
                (*m).to_string()
            } else if let Some(m) = payload.downcast_ref::<String>() {
                m.clone()
            } else {
                "panic with a non-string payload".to_string()
            };
            s.wrecked = true;
            s.fail(DyntwStatus::Panicked, format!("panic: {msg}"))
        }
    }
}

unsafe fn utf8_arg<'a>(p: *const c_char) -> Result<&'a str, DyntwStatus> {
    if p.is_null() {
        return Err(DyntwStatus::NullArgument);
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| DyntwStatus::InvalidUtf8)
}

unsafe fn new_session(
    n: u32,
    params: Result<EngineParams, DyntwError>,
    out: *mut *mut DyntwSession,
) -> DyntwStatus {
    if out.is_null() {
        return DyntwStatus::NullArgument;
    }
    let built = catch_unwind(|| -> Result<Session, DyntwError> { Session::new(n, params?) });
    match built {
        Ok(Ok(inner)) => {
            let handle = Box::new(DyntwSession {
                inner,
                last_error: None,
                wrecked: false,
            });
            *out = Box::into_raw(handle);
            DyntwStatus::Ok
        }
        Ok(Err(DyntwError::InvalidArgument(_))) => DyntwStatus::InvalidArgument,
        Ok(Err(DyntwError::PromiseViolated(_))) => DyntwStatus::PromiseViolated,
        Err(_) => DyntwStatus::Panicked,
    }
}

/// Creates a session over `n` isolated vertices under the promise that
/// the graph's treewidth stays at most `k` (at least 1) at all times.
///
/// # Safety
/// `out` must be a valid pointer to a `DyntwSession*` slot. On `Ok` it
/// receives an owned handle that must be released with
/// `dyntw_session_free`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_session_new(
    n: u32,
    k: u32,
    out: *mut *mut DyntwSession,
) -> DyntwStatus {
    new_session(n, EngineParams::from_treewidth_promise(k), out)
}

/// Creates a session with the internal well-linkedness bound set
/// directly; `dyntw_session_new` is the ordinary entry point.
///
/// # Safety
/// Same contract as `dyntw_session_new`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_session_new_wl(
    n: u32,
    kwl: u32,
    out: *mut *mut DyntwSession,
) -> DyntwStatus {
    new_session(n, Ok(EngineParams::from_wl_bound(kwl)), out)
}

/// Creates a session with explicit degree-cap and balance-distance
/// overrides on top of the well-linkedness bound `kwl`. Rejects
/// combinations the balance argument cannot support (cap below 3, or
/// distance below `2 * (cap - 1)`).
///
/// # Safety
/// Same contract as `dyntw_session_new`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_session_new_with_params(
    n: u32,
    kwl: u32,
    degree_cap: u64,
    balance_dist: u64,
    out: *mut *mut DyntwSession,
) -> DyntwStatus {
    new_session(
        n,
        EngineParams::from_wl_bound(kwl).with_overrides(degree_cap, balance_dist),
        out,
    )
}

/// Releases a session. `s` may be null.
///
/// # Safety
/// `s` must be null or a handle from `dyntw_session_new*` that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn dyntw_session_free(s: *mut DyntwSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Message for the most recent failing call on this session, or null
/// if the last call succeeded.
///
/// # Safety
/// `s` must be a live session handle. The returned pointer belongs to
/// the session and is invalidated by the next call on it.
#[no_mangle]
pub unsafe extern "C" fn dyntw_last_error(s: *const DyntwSession) -> *const c_char {
    if s.is_null() {
        return ptr::null();
    }
    match &(*s).last_error {
        Some(msg) => msg.as_ptr(),
        None => ptr::null(),
    }
}

/// Inserts the edge `u v`, updating the maintained decomposition and
/// every attached automaton.
///
/// # Safety
/// `s` must be a live session handle and must not be used concurrently
/// from another thread.
#[no_mangle]
pub unsafe extern "C" fn dyntw_add_edge(s: *mut DyntwSession, u: u32, v: u32) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    guarded(s, |s| {
        if s.inner.engine().has_edge(u, v) {
            return s.fail(
                DyntwStatus::DuplicateEdge,
                format!("edge {u}-{v} already present"),
            );
        }
        match s.inner.add_edge(u, v) {
            Ok(()) => s.ok(),
            Err(e) => s.fail_dyntw(e),
        }
    })
}

/// Deletes the edge `u v`.
///
/// # Safety
/// Same contract as `dyntw_add_edge`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_delete_edge(s: *mut DyntwSession, u: u32, v: u32) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    guarded(s, |s| {
        if u < s.inner.engine().n_vertices()
            && v < s.inner.engine().n_vertices()
            && u != v
            && !s.inner.engine().has_edge(u, v)
        {
            return s.fail(
                DyntwStatus::MissingEdge,
                format!("edge {u}-{v} not present"),
            );
        }
        match s.inner.delete_edge(u, v) {
            Ok(()) => s.ok(),
            Err(e) => s.fail_dyntw(e),
        }
    })
}

/// Width of the maintained tree decomposition (largest bag size minus
/// one).
///
/// # Safety
/// `s` must be a live session handle; `out` must point to a writable
/// `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_width(s: *mut DyntwSession, out: *mut u64) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    if out.is_null() {
        return DyntwStatus::NullArgument;
    }
    guarded(s, |s| {
        *out = s.inner.width() as u64;
        s.ok()
    })
}

/// Depth of the maintained tree decomposition (nodes on the longest
/// root-to-leaf path).
///
/// # Safety
/// Same contract as `dyntw_width`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_depth(s: *mut DyntwSession, out: *mut u64) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    if out.is_null() {
        return DyntwStatus::NullArgument;
    }
    guarded(s, |s| {
        *out = s.inner.td().depth() as u64;
        s.ok()
    })
}

/// Attaches an automaton by registry name (`mis`, `domset`, `color<q>`
/// with `q >= 2`) so it is maintained from now on. Attaching an
/// already-attached name is a no-op.
///
/// # Safety
/// `s` must be a live session handle; `name` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn dyntw_attach_automaton(
    s: *mut DyntwSession,
    name: *const c_char,
) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    let name = match utf8_arg(name) {
        Ok(n) => n,
        Err(status) => return status,
    };
    guarded(s, |s| match s.inner.attach_automaton(name) {
        Ok(()) => s.ok(),
        Err(e) => s.fail_dyntw(e),
    })
}

fn export_string(out: *mut *mut c_char, text: String) -> DyntwStatus {
    // interior NULs never occur in the exported formats
    let c = CString::new(text).expect("exported text holds no NUL");
    unsafe { *out = c.into_raw() };
    DyntwStatus::Ok
}

/// Current root answer of the named automaton, attaching it first if
/// needed. Counts print in decimal, feasibility as `true`/`false`.
///
/// # Safety
/// `s` must be a live session handle; `name` must be a NUL-terminated
/// string; `out` must point to a writable `char*` slot. On `Ok` the
/// slot receives an owned string to release with `dyntw_string_free`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_query(
    s: *mut DyntwSession,
    name: *const c_char,
    out: *mut *mut c_char,
) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    if out.is_null() {
        return DyntwStatus::NullArgument;
    }
    let name = match utf8_arg(name) {
        Ok(n) => n,
        Err(status) => return status,
    };
    guarded(s, |s| match s.inner.query(name) {
        Ok(ans) => {
            s.ok();
            export_string(out, ans.to_string())
        }
        Err(e) => s.fail_dyntw(e),
    })
}

/// The maintained decomposition in canonical text form, one node per
/// line: `id parentId bag=(v,..) edges=((u,v),..)`, root first with
/// parent `-1`.
///
/// # Safety
/// `s` must be a live session handle; `out` must point to a writable
/// `char*` slot, released with `dyntw_string_free` on `Ok`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_decomposition_text(
    s: *mut DyntwSession,
    out: *mut *mut c_char,
) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    if out.is_null() {
        return DyntwStatus::NullArgument;
    }
    guarded(s, |s| {
        let text = s.inner.td().canonical_text();
        s.ok();
        export_string(out, text)
    })
}

/// Per-operation statistics ledger as a JSON array, one entry per
/// update since the session was created.
///
/// # Safety
/// Same contract as `dyntw_decomposition_text`.
#[no_mangle]
pub unsafe extern "C" fn dyntw_stats_json(
    s: *mut DyntwSession,
    out: *mut *mut c_char,
) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    if out.is_null() {
        return DyntwStatus::NullArgument;
    }
    guarded(s, |s| {
        let text = s.inner.stats_json();
        s.ok();
        export_string(out, text)
    })
}

/// Audits every internal invariant of the session; expensive, meant
/// for debugging bindings.
///
/// # Safety
/// `s` must be a live session handle.
#[no_mangle]
pub unsafe extern "C" fn dyntw_selfcheck(s: *mut DyntwSession) -> DyntwStatus {
    let Some(s) = s.as_mut() else {
        return DyntwStatus::NullArgument;
    };
    guarded(s, |s| match s.inner.selfcheck() {
        Ok(()) => s.ok(),
        Err(msg) => s.fail(DyntwStatus::SelfcheckFailed, msg),
    })
}

/// Releases a string produced by this library. `p` may be null.
///
/// # Safety
/// `p` must be null or an unfreed string from this library.
#[no_mangle]
pub unsafe extern "C" fn dyntw_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}
