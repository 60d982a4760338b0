// SPDX-License-Identifier: Apache-2.0

//! C ABI over the `ipicn` library.
//!
//! Every entry point returns an [`IpicnStatus`]. On failure a message is
//! kept per thread and can be read with [`ipicn_last_error`]. Graphs and
//! rendezvous tables are opaque heap handles released by their `_free`
//! functions; strings returned through out-pointers are released with
//! [`ipicn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::net::Ipv4Addr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ipicn::forwarding::decode_packet;
use ipicn::names::{name_for_ip, parse_name, render_name};
use ipicn::simnet::{compare, simulate, Mode, Scenario, SimConfig};
use ipicn::topology::{load_graph, TopologyDoc};
use ipicn::{ClientId, Locality, NetworkGraph, Rendezvous};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpicnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Simulation = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpicnMode {
    Icn = 0,
    Ip = 1,
    Compare = 2,
}

/// Opaque graph handle.
pub struct IpicnGraph(NetworkGraph);

/// Opaque rendezvous handle.
pub struct IpicnRendezvous(Rendezvous);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(IpicnStatus, String);

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure(IpicnStatus::InvalidInput, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, clearing the last error first and recording it on failure.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IpicnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IpicnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            IpicnStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(IpicnStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(IpicnStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// Copies `s` plus a NUL into `buf`. `out_len` always receives the length
/// without the NUL, so callers can size a retry.
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, out_len: *mut usize) -> Result<(), Failure> {
    if !out_len.is_null() {
        *out_len = s.len();
    }
    if s.len() + 1 > cap {
        return Err(Failure(IpicnStatus::BufferTooSmall, format!("need {} bytes, have {cap}", s.len() + 1)));
    }
    non_null(buf, "buf")?;
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ipicn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ipicn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Topology

/// Parses and validates a topology document and assigns link identifiers
/// from `seed`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipicn_graph_load(json: *const c_char, seed: u64, out: *mut *mut IpicnGraph) -> IpicnStatus {
    guard(|| {
        non_null(out, "out")?;
        let doc = TopologyDoc::from_json(str_arg(json, "json")?).map_err(Failure::input)?;
        let g = load_graph(&doc, seed).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(IpicnGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a live handle from [`ipicn_graph_load`].
#[no_mangle]
pub unsafe extern "C" fn ipicn_graph_free(g: *mut IpicnGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn ipicn_graph_node_count(g: *const IpicnGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.node_count())
}

/// Number of undirected links, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn ipicn_graph_link_count(g: *const IpicnGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.links().len() / 2)
}

/// Node hosting the rendezvous function, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn ipicn_graph_rv_node(g: *const IpicnGraph) -> u32 {
    g.as_ref().map_or(0, |g| g.0.rv_node().0)
}

// ---------------------------------------------------------------------------
// Rendezvous

#[no_mangle]
pub extern "C" fn ipicn_rendezvous_new() -> *mut IpicnRendezvous {
    Box::into_raw(Box::new(IpicnRendezvous(Rendezvous::new())))
}

/// # Safety
/// `rv` must be null or a live handle from [`ipicn_rendezvous_new`].
#[no_mangle]
pub unsafe extern "C" fn ipicn_rendezvous_free(rv: *mut IpicnRendezvous) {
    if !rv.is_null() {
        drop(Box::from_raw(rv));
    }
}

/// Subscribes `client` to `name`. `out_events` (optional) receives the
/// number of publications the subscription matched.
///
/// # Safety
/// `rv` must be a live handle, `name` a NUL-terminated string and
/// `out_events` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ipicn_rendezvous_subscribe(
    rv: *mut IpicnRendezvous,
    client: u32,
    name: *const c_char,
    out_events: *mut usize,
) -> IpicnStatus {
    guard(|| {
        non_null(rv, "rv")?;
        let name = parse_name(str_arg(name, "name")?).map_err(Failure::input)?;
        let events = (*rv).0.subscribe(ClientId(client), name);
        if !out_events.is_null() {
            *out_events = events.len();
        }
        Ok(())
    })
}

/// Removes a subscription. `out_events` (optional) receives the number of
/// affected publications.
///
/// # Safety
/// As for [`ipicn_rendezvous_subscribe`].
#[no_mangle]
pub unsafe extern "C" fn ipicn_rendezvous_unsubscribe(
    rv: *mut IpicnRendezvous,
    client: u32,
    name: *const c_char,
    out_events: *mut usize,
) -> IpicnStatus {
    guard(|| {
        non_null(rv, "rv")?;
        let name = parse_name(str_arg(name, "name")?).map_err(Failure::input)?;
        let events = (*rv).0.unsubscribe(ClientId(client), &name);
        if !out_events.is_null() {
            *out_events = events.len();
        }
        Ok(())
    })
}

/// Publishes availability of an item. `out_subscribers` (optional) receives
/// the size of the matched subscriber set, 0 if nothing matched.
///
/// # Safety
/// `rv` must be a live handle, `name` a NUL-terminated string and
/// `out_subscribers` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ipicn_rendezvous_publish(
    rv: *mut IpicnRendezvous,
    client: u32,
    name: *const c_char,
    out_subscribers: *mut usize,
) -> IpicnStatus {
    guard(|| {
        non_null(rv, "rv")?;
        let name = parse_name(str_arg(name, "name")?).map_err(Failure::input)?;
        let ev = (*rv).0.publish_availability(ClientId(client), name).map_err(Failure::input)?;
        if !out_subscribers.is_null() {
            *out_subscribers = ev.map_or(0, |e| e.subscribers.len());
        }
        Ok(())
    })
}

/// Number of clients whose subscriptions cover the item `name`.
///
/// # Safety
/// `rv` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ipicn_rendezvous_match_count(
    rv: *const IpicnRendezvous,
    name: *const c_char,
    out: *mut usize,
) -> IpicnStatus {
    guard(|| {
        non_null(rv, "rv")?;
        non_null(out, "out")?;
        let name = parse_name(str_arg(name, "name")?).map_err(Failure::input)?;
        *out = (*rv).0.match_set(&name).map_err(Failure::input)?.len();
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Names and packets

/// Parses a textual name and writes its canonical rendering into `buf`.
///
/// # Safety
/// `text` must be NUL-terminated, `buf` writable for `cap` bytes and
/// `out_len` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ipicn_name_normalize(
    text: *const c_char,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> IpicnStatus {
    guard(|| {
        let name = parse_name(str_arg(text, "text")?).map_err(Failure::input)?;
        write_str(&render_name(&name), buf, cap, out_len)
    })
}

/// Writes the name of the item carrying packets for `addr` (host byte
/// order) into `buf`.
///
/// # Safety
/// `buf` must be writable for `cap` bytes and `out_len` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ipicn_name_for_ip(
    addr: u32,
    external: bool,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> IpicnStatus {
    guard(|| {
        let loc = if external { Locality::External } else { Locality::Internal };
        write_str(&render_name(&name_for_ip(Ipv4Addr::from(addr), loc)), buf, cap, out_len)
    })
}

/// Decodes a wire packet. On success `out_payload_len` (optional) receives
/// the payload length.
///
/// # Safety
/// `buf` must be readable for `len` bytes and `out_payload_len` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ipicn_packet_check(buf: *const u8, len: usize, out_payload_len: *mut usize) -> IpicnStatus {
    guard(|| {
        non_null(buf, "buf")?;
        let pkt = decode_packet(std::slice::from_raw_parts(buf, len)).map_err(Failure::input)?;
        if !out_payload_len.is_null() {
            *out_payload_len = pkt.payload.len();
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Simulation

/// Runs a scenario and returns the canonical JSON report through `out`.
/// `seed` of 0 keeps the scenario's own seed.
///
/// # Safety
/// `topology` and `scenario` must be NUL-terminated; `out` must be writable.
/// The returned string is freed with [`ipicn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ipicn_run(
    topology: *const c_char,
    scenario: *const c_char,
    mode: IpicnMode,
    seed: u64,
    out: *mut *mut c_char,
) -> IpicnStatus {
    guard(|| {
        non_null(out, "out")?;
        let mut sc = Scenario::from_json(str_arg(topology, "topology")?, str_arg(scenario, "scenario")?)
            .map_err(Failure::input)?;
        if seed != 0 {
            sc = sc.with_seed(seed);
        }
        let cfg = SimConfig::default();
        let sim_err = |e: ipicn::simnet::SimError| Failure(IpicnStatus::Simulation, e.to_string());
        let json = match mode {
            IpicnMode::Icn => simulate(&sc.with_mode(Mode::Icn), &cfg).map_err(sim_err)?.report.to_canonical_json(),
            IpicnMode::Ip => {
                simulate(&sc.with_mode(Mode::IpBaseline), &cfg).map_err(sim_err)?.report.to_canonical_json()
            }
            IpicnMode::Compare => compare(&sc, &cfg).map_err(sim_err)?.to_canonical_json(),
        };
        *out = CString::new(json).expect("JSON has no NULs").into_raw();
        Ok(())
    })
}
