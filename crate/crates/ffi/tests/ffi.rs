// SPDX-License-Identifier: Apache-2.0

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use ipicn_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn fixture(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    c(&std::fs::read_to_string(p).unwrap())
}

fn last_error() -> String {
    let p = ipicn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn name_for_ip(addr: u32) -> CString {
    let mut buf = vec![0 as c_char; 256];
    let mut len = 0;
    let st = unsafe { ipicn_name_for_ip(addr, false, buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(st, IpicnStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_owned()
}

#[test]
fn graph_handle_round_trip() {
    let mut g = ptr::null_mut();
    let st = unsafe { ipicn_graph_load(fixture("star.json").as_ptr(), 3, &mut g) };
    assert_eq!(st, IpicnStatus::Ok);
    unsafe {
        assert_eq!(ipicn_graph_node_count(g), 6);
        assert_eq!(ipicn_graph_link_count(g), 5);
        assert_eq!(ipicn_graph_rv_node(g), 1);
        ipicn_graph_free(g);
        assert_eq!(ipicn_graph_node_count(ptr::null()), 0);
        ipicn_graph_free(ptr::null_mut());
    }
}

#[test]
fn graph_errors_are_reported() {
    let mut g = ptr::null_mut();
    let st = unsafe { ipicn_graph_load(fixture("disconnected.json").as_ptr(), 1, &mut g) };
    assert_eq!(st, IpicnStatus::InvalidInput);
    assert!(g.is_null());
    assert!(last_error().contains("disconnected"));

    let st = unsafe { ipicn_graph_load(ptr::null(), 1, &mut g) };
    assert_eq!(st, IpicnStatus::NullArgument);

    let bad_utf8 = [0xffu8 as c_char, 0];
    let st = unsafe { ipicn_graph_load(bad_utf8.as_ptr(), 1, &mut g) };
    assert_eq!(st, IpicnStatus::InvalidUtf8);
}

#[test]
fn rendezvous_matches_through_handles() {
    let item = name_for_ip(0x0a01_0005);
    let rv = ipicn_rendezvous_new();
    let mut n = usize::MAX;
    unsafe {
        assert_eq!(ipicn_rendezvous_subscribe(rv, 7, item.as_ptr(), &mut n), IpicnStatus::Ok);
        assert_eq!(n, 0);
        assert_eq!(ipicn_rendezvous_subscribe(rv, 8, item.as_ptr(), ptr::null_mut()), IpicnStatus::Ok);
        assert_eq!(ipicn_rendezvous_publish(rv, 1, item.as_ptr(), &mut n), IpicnStatus::Ok);
        assert_eq!(n, 2);
        assert_eq!(ipicn_rendezvous_match_count(rv, item.as_ptr(), &mut n), IpicnStatus::Ok);
        assert_eq!(n, 2);
        assert_eq!(ipicn_rendezvous_unsubscribe(rv, 8, item.as_ptr(), &mut n), IpicnStatus::Ok);
        assert_eq!(n, 1);
        assert_eq!(ipicn_rendezvous_match_count(rv, item.as_ptr(), &mut n), IpicnStatus::Ok);
        assert_eq!(n, 1);

        // scopes cannot be published
        let mut scope = vec![0 as c_char; 256];
        let item_text = item.to_str().unwrap();
        let parent = &item_text[..item_text.rfind('/').unwrap()];
        assert_eq!(
            ipicn_name_normalize(c(parent).as_ptr(), scope.as_mut_ptr(), scope.len(), ptr::null_mut()),
            IpicnStatus::Ok
        );
        assert_eq!(ipicn_rendezvous_publish(rv, 1, scope.as_ptr(), ptr::null_mut()), IpicnStatus::InvalidInput);
        ipicn_rendezvous_free(rv);
    }
}

#[test]
fn names_normalize_and_size_buffers() {
    let item = name_for_ip(0xc0a8_0101);
    let mut buf = vec![0 as c_char; 256];
    let mut len = 0;
    let st = unsafe { ipicn_name_normalize(item.as_ptr(), buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(st, IpicnStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }, item.as_c_str());
    assert_eq!(len, item.as_bytes().len());

    let st = unsafe { ipicn_name_normalize(item.as_ptr(), buf.as_mut_ptr(), len, &mut len) };
    assert_eq!(st, IpicnStatus::BufferTooSmall);

    let st = unsafe { ipicn_name_normalize(c("/xyz").as_ptr(), buf.as_mut_ptr(), buf.len(), ptr::null_mut()) };
    assert_eq!(st, IpicnStatus::InvalidInput);
}

#[test]
fn packet_check_accepts_encoded_and_rejects_garbage() {
    use ipicn::forwarding::{encode_packet, ForwardingId, IcnPacket};
    use ipicn::names::name_for_ip;
    let name = name_for_ip("10.0.0.1".parse().unwrap(), ipicn::Locality::Internal);
    let wire = encode_packet(&IcnPacket::data(ForwardingId::default(), name, vec![9; 40])).unwrap();
    let mut n = 0;
    assert_eq!(unsafe { ipicn_packet_check(wire.as_ptr(), wire.len(), &mut n) }, IpicnStatus::Ok);
    assert_eq!(n, 40);
    assert_eq!(unsafe { ipicn_packet_check(wire.as_ptr(), 20, &mut n) }, IpicnStatus::InvalidInput);
    assert_eq!(unsafe { ipicn_packet_check(ptr::null(), 0, &mut n) }, IpicnStatus::NullArgument);
}

fn run(sc: &CString, mode: IpicnMode) -> (IpicnStatus, Option<String>) {
    let mut out = ptr::null_mut();
    let st = unsafe { ipicn_run(fixture("star.json").as_ptr(), sc.as_ptr(), mode, 0, &mut out) };
    if out.is_null() {
        return (st, None);
    }
    let s = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { ipicn_string_free(out) };
    (st, Some(s))
}

#[test]
fn run_matches_the_library() {
    let sc = fixture("star_scenario.json");
    let (st, json) = run(&sc, IpicnMode::Compare);
    assert_eq!(st, IpicnStatus::Ok);
    let scenario = ipicn::Scenario::from_json(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/star.json")).unwrap(),
        sc.to_str().unwrap(),
    )
    .unwrap();
    let direct = ipicn::simnet::compare(&scenario, &ipicn::simnet::SimConfig::default()).unwrap();
    assert_eq!(json.unwrap(), direct.to_canonical_json());

    for mode in [IpicnMode::Icn, IpicnMode::Ip] {
        let (st, a) = run(&sc, mode);
        assert_eq!(st, IpicnStatus::Ok);
        assert_eq!(a, run(&sc, mode).1);
    }
}

#[test]
fn run_reports_simulation_errors() {
    let (st, out) = run(&fixture("unknown_client.json"), IpicnMode::Icn);
    assert_eq!(st, IpicnStatus::Simulation);
    assert!(out.is_none());
    assert!(last_error().contains("77"));

    let (st, _) = run(&c("{"), IpicnMode::Icn);
    assert_eq!(st, IpicnStatus::InvalidInput);
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ipicn.h")).unwrap();
    for sym in [
        "ipicn_last_error",
        "ipicn_string_free",
        "ipicn_graph_load",
        "ipicn_graph_free",
        "ipicn_graph_node_count",
        "ipicn_graph_link_count",
        "ipicn_graph_rv_node",
        "ipicn_rendezvous_new",
        "ipicn_rendezvous_free",
        "ipicn_rendezvous_subscribe",
        "ipicn_rendezvous_unsubscribe",
        "ipicn_rendezvous_publish",
        "ipicn_rendezvous_match_count",
        "ipicn_name_normalize",
        "ipicn_name_for_ip",
        "ipicn_packet_check",
        "ipicn_run",
        "typedef struct IpicnGraph IpicnGraph",
        "IPICN_STATUS_BUFFER_TOO_SMALL = 5",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, "#include \"ipicn.h\"\nint main(void) { return ipicn_last_error() != 0; }\n").unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|cc| std::process::Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
