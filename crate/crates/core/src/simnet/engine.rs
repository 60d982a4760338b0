// SPDX-License-Identifier: Apache-2.0

//! Discrete-event execution of a scenario in either mode.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::net::Ipv4Addr;
use std::rc::Rc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::report::{jitter_us, Counters, FlowStats, KpiReport, LinkBytes, MessageCounts, Totals};
use super::scenario::{Mode, Scenario, WorkloadAction, WorkloadOp};
use crate::forwarding::{forward, ControlKind, ForwardingId, IcnPacket};
use crate::gateways::{
    chunk_body, decode_chunk, encode_request, response_body, Border, DataOutcome, DeviceOutput, Effect,
    GatewayCounters, GatewayError, HttpRequest, HttpResponse, IpPacket, Nap, DEFAULT_WINDOW_US, IP_HEADER_LEN,
    MAX_IP_PAYLOAD,
};
use crate::names::{render_name, IcnName};
use crate::rendezvous::{ClientId, MatchEvent, Rendezvous};
use crate::topology::{load_graph, plan_match, DeliveryTree, FidDelivery, LinkIndex, NetworkGraph, NodeId, TopologyError};

/// Source address of `ext_in` packets that do not name one.
pub const DEFAULT_PEER_SRC: Ipv4Addr = Ipv4Addr::new(198, 51, 100, 1);

pub const TRACE_HEADER: &str = "time_us,node,event,link,bytes,name";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    /// HTTP coalescing window at serving NAPs.
    pub window_us: u64,
    /// Deliver control messages instantly and without cost.
    pub ideal_control: bool,
    /// Events scheduled after this time are not processed.
    pub max_time_us: u64,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { window_us: DEFAULT_WINDOW_US, ideal_control: false, max_time_us: 60_000_000, trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("t={t_us}us: unknown client {client}")]
    UnknownClient { t_us: u64, client: u32 },
    #[error("t={t_us}us: client {client} is not a NAP")]
    NotANap { t_us: u64, client: u32 },
    #[error("t={t_us}us: ext_in without a border gateway")]
    NoBorder { t_us: u64 },
    #[error("t={t_us}us: client {client}: {source}")]
    Gateway {
        t_us: u64,
        client: u32,
        #[source]
        source: GatewayError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub time_us: u64,
    pub node: u32,
    pub event: &'static str,
    pub link: Option<String>,
    pub bytes: usize,
    pub name: String,
}

impl TraceRecord {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.time_us,
            self.node,
            self.event,
            self.link.as_deref().unwrap_or("-"),
            self.bytes,
            self.name
        )
    }
}

/// Who received a delivered IP packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Recipient {
    Device(ClientId),
    /// Relayed to a peering network by the border gateway.
    Peer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentPacket {
    pub time_us: u64,
    /// `None` for packets entering from a peer.
    pub from: Option<ClientId>,
    pub packet: IpPacket,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpDelivery {
    pub time_us: u64,
    pub to: Recipient,
    pub packet: IpPacket,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpDelivery {
    pub time_us: u64,
    pub client: ClientId,
    pub response: HttpResponse,
}

/// Everything a run produced, beyond the KPI report.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub report: KpiReport,
    pub trace: Vec<TraceRecord>,
    pub sent: Vec<SentPacket>,
    pub ip_deliveries: Vec<IpDelivery>,
    pub http_deliveries: Vec<HttpDelivery>,
    /// Stopped at the time limit with events outstanding.
    pub truncated: bool,
}

impl SimOutcome {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        for r in &self.trace {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s
    }
}

/// Runs the scenario in its own mode with default settings.
pub fn run(sc: &Scenario) -> Result<KpiReport, SimError> {
    simulate(sc, &SimConfig::default()).map(|o| o.report)
}

pub fn run_ip_baseline(sc: &Scenario) -> Result<KpiReport, SimError> {
    let sc = sc.clone().with_mode(Mode::IpBaseline);
    simulate(&sc, &SimConfig::default()).map(|o| o.report)
}

/// Runs the scenario in both modes.
pub fn compare(sc: &Scenario, cfg: &SimConfig) -> Result<super::ComparisonReport, SimError> {
    let icn = simulate(&sc.clone().with_mode(Mode::Icn), cfg)?;
    let ip = simulate(&sc.clone().with_mode(Mode::IpBaseline), cfg)?;
    Ok(super::ComparisonReport::new(icn.report, ip.report))
}

pub fn simulate(sc: &Scenario, cfg: &SimConfig) -> Result<SimOutcome, SimError> {
    let g = load_graph(&sc.topology, sc.seed)?;
    validate_workload(&g, &sc.workload)?;
    let mut sim = Sim::new(g, sc.mode, sc.seed, cfg);
    let mut ops: Vec<&WorkloadOp> = sc.workload.iter().collect();
    // stable: equal times keep document order
    ops.sort_by_key(|op| op.t_us);
    for op in ops {
        sim.push(op.t_us, Action::Workload(op.action.clone()));
    }
    sim.run()?;
    Ok(sim.finish())
}

fn validate_workload(g: &NetworkGraph, ops: &[WorkloadOp]) -> Result<(), SimError> {
    let naps: BTreeSet<ClientId> = g.naps().iter().map(|n| n.client).collect();
    for op in ops {
        let t_us = op.t_us;
        let client = match &op.action {
            WorkloadAction::Attach { client, .. }
            | WorkloadAction::SendIp { client, .. }
            | WorkloadAction::HttpServe { client, .. }
            | WorkloadAction::HttpGet { client, .. } => *client,
            WorkloadAction::ExtIn { .. } => {
                if g.border().is_none() {
                    return Err(SimError::NoBorder { t_us });
                }
                continue;
            }
        };
        if !naps.contains(&ClientId(client)) {
            return Err(if g.attachment(ClientId(client)).is_some() {
                SimError::NotANap { t_us, client }
            } else {
                SimError::UnknownClient { t_us, client }
            });
        }
    }
    Ok(())
}

/// Deterministic device payload for packet `id`.
pub fn device_payload(seed: u64, id: u64, len: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut v = vec![0; len];
    rng.fill_bytes(&mut v);
    v
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Control {
    Sr { client: ClientId, name: IcnName, subscribe: bool },
    Pr { client: ClientId, name: IcnName, publish: bool },
    Tp(FidDelivery),
}

impl Control {
    fn kind(&self) -> ControlKind {
        match self {
            Control::Sr { .. } => ControlKind::Sr,
            Control::Pr { .. } => ControlKind::Pr,
            Control::Tp(_) => ControlKind::Tp,
        }
    }

    fn packet(&self) -> IcnPacket {
        let (name, payload) = match self {
            Control::Sr { client, name, subscribe: op } | Control::Pr { client, name, publish: op } => {
                let mut p = client.0.to_be_bytes().to_vec();
                p.push(u8::from(*op));
                (name, p)
            }
            Control::Tp(d) => {
                let mut p = d.fid.0.to_be_bytes().to_vec();
                p.push(u8::from(d.local_delivery) | u8::from(d.teardown) << 1);
                (&d.name, p)
            }
        };
        IcnPacket::control(self.kind(), name.clone(), payload)
    }
}

fn rt_packet(ev: &MatchEvent) -> IcnPacket {
    let mut p = ev.publisher.0.to_be_bytes().to_vec();
    p.extend_from_slice(&(ev.subscribers.len().min(usize::from(u16::MAX)) as u16).to_be_bytes());
    for s in &ev.subscribers {
        p.extend_from_slice(&s.0.to_be_bytes());
    }
    IcnPacket::control(ControlKind::Rt, ev.name.clone(), p)
}

#[derive(Debug, Clone)]
enum Routed {
    Control(Control),
    Ip { packet: IpPacket, to: Recipient },
    HttpRequest { requester: ClientId, server: ClientId, req: HttpRequest },
    HttpChunk { client: ClientId, fqdn: String, url: String, chunk: Vec<u8> },
}

#[derive(Debug, Clone)]
enum Action {
    Workload(WorkloadAction),
    /// A data packet finished crossing `link`.
    IcnArrive { link: LinkIndex, pkt: IcnPacket },
    /// `msg` is at the tail of `route[next]`, or at its destination when
    /// `next == route.len()`.
    Routed { route: Rc<[LinkIndex]>, dest: NodeId, next: usize, bytes: usize, msg: Routed },
    Window { client: ClientId, name: IcnName },
}

#[derive(Debug)]
struct Event {
    time: u64,
    seq: u64,
    action: Action,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct TreeRecord {
    tree: DeliveryTree,
    nodes: BTreeSet<NodeId>,
    subscribers: BTreeSet<ClientId>,
}

#[derive(Debug, Default)]
struct FlowAcc {
    first_send: Option<u64>,
    arrivals: Vec<u64>,
    latency_sum: u128,
    payload_bytes: u64,
}

#[derive(Debug, Default)]
struct Assembly {
    total: Option<u32>,
    chunks: BTreeMap<u32, Vec<u8>>,
}

struct Sim<'a> {
    g: NetworkGraph,
    mode: Mode,
    seed: u64,
    cfg: &'a SimConfig,
    now: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Event>>,
    naps: BTreeMap<ClientId, Nap>,
    border: Option<Border>,
    rv: Rendezvous,
    trees: HashMap<(IcnName, ForwardingId), TreeRecord>,
    routes: HashMap<(NodeId, NodeId), Rc<[LinkIndex]>>,
    next_id: u64,
    // baseline state
    addr_owner: BTreeMap<Ipv4Addr, ClientId>,
    services: BTreeMap<String, ClientId>,
    assemblies: BTreeMap<(ClientId, String, String), Assembly>,
    // accounting
    per_link: Vec<LinkBytes>,
    data_bytes: u64,
    control_bytes: u64,
    messages: MessageCounts,
    counters: Counters,
    flows: BTreeMap<String, FlowAcc>,
    ip_sent: HashMap<u64, (u64, String)>,
    http_started: BTreeMap<(ClientId, String, String), u64>,
    trace: Vec<TraceRecord>,
    sent: Vec<SentPacket>,
    ip_deliveries: Vec<IpDelivery>,
    http_deliveries: Vec<HttpDelivery>,
    truncated: bool,
}

fn gw_err(t_us: u64, client: ClientId) -> impl Fn(GatewayError) -> SimError {
    move |source| SimError::Gateway { t_us, client: client.0, source }
}

fn http_key(client: ClientId, fqdn: &str, url: &str) -> String {
    format!("http:{}:{fqdn}{url}", client.0)
}

impl<'a> Sim<'a> {
    fn new(g: NetworkGraph, mode: Mode, seed: u64, cfg: &'a SimConfig) -> Self {
        let ops = g.operator_prefixes();
        let naps = g
            .naps()
            .iter()
            .map(|n| {
                let nap = Nap::new(n.client, n.node, n.prefixes.clone(), ops.clone()).with_window(cfg.window_us);
                (n.client, nap)
            })
            .collect();
        let mut sim = Sim {
            per_link: vec![LinkBytes::default(); g.links().len()],
            g,
            mode,
            seed,
            cfg,
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            naps,
            border: None,
            rv: Rendezvous::new(),
            trees: HashMap::new(),
            routes: HashMap::new(),
            next_id: 1,
            addr_owner: BTreeMap::new(),
            services: BTreeMap::new(),
            assemblies: BTreeMap::new(),
            data_bytes: 0,
            control_bytes: 0,
            messages: MessageCounts::default(),
            counters: Counters::default(),
            flows: BTreeMap::new(),
            ip_sent: HashMap::new(),
            http_started: BTreeMap::new(),
            trace: Vec::new(),
            sent: Vec::new(),
            ip_deliveries: Vec::new(),
            http_deliveries: Vec::new(),
            truncated: false,
        };
        if let Some(b) = sim.g.border().cloned() {
            let (border, effects) = Border::new(b.client, b.node, ops);
            sim.border = Some(border);
            // the standing external-scope subscription is provisioned with the
            // topology, not signalled
            for e in effects {
                if let Effect::Subscribe(name) = e {
                    sim.rv.subscribe(b.client, name);
                }
            }
        }
        sim
    }

    fn push(&mut self, time: u64, action: Action) {
        self.seq += 1;
        self.queue.push(Reverse(Event { time, seq: self.seq, action }));
    }

    fn run(&mut self) -> Result<(), SimError> {
        while let Some(Reverse(ev)) = self.queue.pop() {
            if ev.time > self.cfg.max_time_us {
                self.truncated = true;
                break;
            }
            self.now = ev.time;
            match ev.action {
                Action::Workload(a) => self.workload(a)?,
                Action::IcnArrive { link, pkt } => self.icn_arrive(link, pkt)?,
                Action::Routed { route, dest, next, bytes, msg } => self.routed(route, dest, next, bytes, msg)?,
                Action::Window { client, name } => {
                    let effects = self.nap(client).on_window_expiry(&name);
                    self.apply(client, effects)?;
                }
            }
        }
        Ok(())
    }

    fn nap(&mut self, c: ClientId) -> &mut Nap {
        self.naps.get_mut(&c).expect("workload validated against the NAP list")
    }

    fn node_of(&self, c: ClientId) -> NodeId {
        self.g.attachment(c).expect("simulated clients are attached")
    }

    fn record(
        &mut self,
        node: NodeId,
        event: &'static str,
        link: Option<LinkIndex>,
        bytes: usize,
        name: impl FnOnce() -> String,
    ) {
        if self.cfg.trace {
            let link = link.map(|l| self.g.link(l).label());
            self.trace.push(TraceRecord { time_us: self.now, node: node.0, event, link, bytes, name: name() });
        }
    }

    /// Accounts one link traversal and returns the arrival time.
    fn transmit(&mut self, l: LinkIndex, bytes: usize, control: bool) -> u64 {
        let acc = &mut self.per_link[l.0];
        if control {
            acc.control_bytes += bytes as u64;
        } else {
            acc.data_bytes += bytes as u64;
        }
        self.now + self.g.link(l).traversal_us(bytes)
    }

    fn next_packet_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn note_send(&mut self, from: Option<ClientId>, pkt: &IpPacket) {
        let key = format!("ip:{}->{}", pkt.src, pkt.dst);
        let acc = self.flows.entry(key.clone()).or_default();
        acc.first_send.get_or_insert(self.now);
        self.ip_sent.insert(pkt.id, (self.now, key));
        self.sent.push(SentPacket { time_us: self.now, from, packet: pkt.clone() });
    }

    fn note_arrival(&mut self, key: String, start: u64, payload: usize) {
        let acc = self.flows.entry(key).or_default();
        acc.first_send.get_or_insert(start);
        acc.arrivals.push(self.now);
        acc.latency_sum += u128::from(self.now - start);
        acc.payload_bytes += payload as u64;
    }

    fn deliver_ip(&mut self, to: Recipient, packet: IpPacket) {
        if let Some((start, key)) = self.ip_sent.get(&packet.id).cloned() {
            self.note_arrival(key, start, packet.payload.len());
        }
        self.ip_deliveries.push(IpDelivery { time_us: self.now, to, packet });
    }

    fn deliver_http(&mut self, client: ClientId, response: HttpResponse) {
        let k = (client, response.fqdn.clone(), response.url.clone());
        let start = self.http_started.remove(&k).unwrap_or(self.now);
        self.note_arrival(http_key(client, &response.fqdn, &response.url), start, response.body.len());
        self.http_deliveries.push(HttpDelivery { time_us: self.now, client, response });
    }

    fn workload(&mut self, a: WorkloadAction) -> Result<(), SimError> {
        let t = self.now;
        match a {
            WorkloadAction::Attach { client, addr } => {
                let c = ClientId(client);
                let effects = self.nap(c).attach_device(addr).map_err(gw_err(t, c))?;
                self.addr_owner.insert(addr, c);
                if self.mode == Mode::Icn {
                    self.apply(c, effects)?;
                }
            }
            WorkloadAction::SendIp { client, src, dst, bytes, proto } => {
                let c = ClientId(client);
                let id = self.next_packet_id();
                let pkt = IpPacket { src, dst, proto, id, payload: device_payload(self.seed, id, bytes) };
                match self.mode {
                    Mode::Icn => {
                        self.note_send(Some(c), &pkt);
                        let effects = self.nap(c).send_ip(pkt).map_err(gw_err(t, c))?;
                        self.apply(c, effects)?;
                    }
                    Mode::IpBaseline => {
                        if !self.nap(c).owns(src) {
                            return Err(gw_err(t, c)(GatewayError::UnassignedSource(src)));
                        }
                        if pkt.payload.len() > MAX_IP_PAYLOAD {
                            return Err(gw_err(t, c)(GatewayError::PayloadTooLarge(pkt.payload.len())));
                        }
                        self.note_send(Some(c), &pkt);
                        let from = self.node_of(c);
                        self.baseline_ip(from, pkt, false);
                    }
                }
            }
            WorkloadAction::HttpServe { client, fqdn } => {
                let c = ClientId(client);
                match self.mode {
                    Mode::Icn => {
                        for nap in self.naps.values_mut() {
                            nap.register_service(&fqdn);
                        }
                        let effects = self.nap(c).http_serve(&fqdn);
                        self.apply(c, effects)?;
                    }
                    Mode::IpBaseline => {
                        self.services.insert(fqdn, c);
                    }
                }
            }
            WorkloadAction::HttpGet { client, fqdn, url, resp_bytes } => {
                let c = ClientId(client);
                let req = HttpRequest { fqdn: fqdn.clone(), url: url.clone(), response_size: resp_bytes };
                let k = (c, fqdn, url);
                let already = self.http_started.contains_key(&k);
                match self.mode {
                    Mode::Icn => {
                        self.http_started.entry(k).or_insert(t);
                        let effects = self.nap(c).http_get(req);
                        self.apply(c, effects)?;
                    }
                    Mode::IpBaseline => {
                        let Some(&server) = self.services.get(&req.fqdn) else {
                            self.counters.unroutable += 1;
                            return Ok(());
                        };
                        self.http_started.entry(k).or_insert(t);
                        if already {
                            return Ok(());
                        }
                        let bytes = IP_HEADER_LEN + encode_request(c, &req).len();
                        let (from, to) = (self.node_of(c), self.node_of(server));
                        self.data_bytes += bytes as u64;
                        self.messages.data += 1;
                        self.send_routed(from, to, bytes, Routed::HttpRequest { requester: c, server, req });
                    }
                }
            }
            WorkloadAction::ExtIn { dst, bytes, src } => {
                let id = self.next_packet_id();
                let src = src.unwrap_or(DEFAULT_PEER_SRC);
                let pkt = IpPacket { src, dst, proto: 17, id, payload: device_payload(self.seed, id, bytes) };
                let border = self.border.as_ref().expect("workload validated").client();
                self.note_send(None, &pkt);
                match self.mode {
                    Mode::Icn => {
                        let effects = self
                            .border
                            .as_mut()
                            .expect("present")
                            .border_ingress(pkt)
                            .map_err(gw_err(t, border))?;
                        self.apply(border, effects)?;
                    }
                    Mode::IpBaseline => {
                        if pkt.payload.len() > MAX_IP_PAYLOAD {
                            return Err(gw_err(t, border)(GatewayError::PayloadTooLarge(pkt.payload.len())));
                        }
                        let from = self.node_of(border);
                        self.baseline_ip(from, pkt, true);
                    }
                }
            }
        }
        Ok(())
    }

    // -- ICN side ----------------------------------------------------------

    fn apply(&mut self, client: ClientId, effects: Vec<Effect>) -> Result<(), SimError> {
        let node = self.node_of(client);
        let rv = self.g.rv_node();
        for e in effects {
            match e {
                Effect::Subscribe(name) => self.send_control(node, rv, Control::Sr { client, name, subscribe: true }),
                Effect::Unsubscribe(name) => {
                    self.send_control(node, rv, Control::Sr { client, name, subscribe: false })
                }
                Effect::PublishAvailability(name) => {
                    self.send_control(node, rv, Control::Pr { client, name, publish: true })
                }
                Effect::Unpublish(name) => self.send_control(node, rv, Control::Pr { client, name, publish: false }),
                Effect::Publish(pkt) => self.publish_data(node, pkt)?,
                Effect::ToDevice(DeviceOutput::Ip(p)) => self.deliver_ip(Recipient::Device(client), p),
                Effect::ToDevice(DeviceOutput::HttpResponse(r)) => self.deliver_http(client, r),
                Effect::ToPeer(p) => self.deliver_ip(Recipient::Peer, p),
                Effect::ScheduleWindow { name, deadline_us } => {
                    self.push(deadline_us, Action::Window { client, name })
                }
            }
        }
        Ok(())
    }

    fn send_control(&mut self, from: NodeId, to: NodeId, msg: Control) {
        if self.cfg.ideal_control {
            self.push(self.now, Action::Routed { route: Rc::from([]), dest: to, next: 0, bytes: 0, msg: Routed::Control(msg) });
            return;
        }
        let bytes = msg.packet().wire_len();
        self.count_control(msg.kind(), bytes);
        self.send_routed(from, to, bytes, Routed::Control(msg));
    }

    fn count_control(&mut self, kind: ControlKind, bytes: usize) {
        self.control_bytes += bytes as u64;
        let m = &mut self.messages;
        match kind {
            ControlKind::Pr => m.pr += 1,
            ControlKind::Rt => m.rt += 1,
            ControlKind::Tp => m.tp += 1,
            ControlKind::Sr => m.sr += 1,
        }
    }

    fn send_routed(&mut self, from: NodeId, to: NodeId, bytes: usize, msg: Routed) {
        let g = &self.g;
        let route = self
            .routes
            .entry((from, to))
            .or_insert_with(|| g.unicast_path(from, to).expect("loaded graphs are connected").into())
            .clone();
        self.push(self.now, Action::Routed { route, dest: to, next: 0, bytes, msg });
    }

    fn routed(&mut self, route: Rc<[LinkIndex]>, dest: NodeId, next: usize, bytes: usize, msg: Routed) -> Result<(), SimError> {
        if let Some(&l) = route.get(next) {
            let control = matches!(msg, Routed::Control(_));
            let at = self.transmit(l, bytes, control);
            if self.cfg.trace {
                let (event, name) = match &msg {
                    Routed::Control(c) => ("ctrl", render_name(&c.packet().name)),
                    Routed::Ip { packet, .. } => ("ip", packet.dst.to_string()),
                    Routed::HttpRequest { req, .. } => ("http_req", format!("{}{}", req.fqdn, req.url)),
                    Routed::HttpChunk { fqdn, url, .. } => ("http_chunk", format!("{fqdn}{url}")),
                };
                self.record(self.g.link(l).from, event, Some(l), bytes, || name);
            }
            self.push(at, Action::Routed { route, dest, next: next + 1, bytes, msg });
            return Ok(());
        }
        match msg {
            Routed::Control(c) => self.control_arrive(c)?,
            Routed::Ip { packet, to } => {
                if let Recipient::Device(c) = to {
                    // the owner may have changed under us; nothing does that today
                    debug_assert!(self.naps.get(&c).is_some_and(|n| n.owns(packet.dst)));
                }
                self.record(dest, "deliver", None, packet.wire_len(), || packet.dst.to_string());
                self.deliver_ip(to, packet);
            }
            Routed::HttpRequest { requester, server, req } => {
                let body = response_body(&req.url, req.response_size as usize);
                let (from, to) = (self.node_of(server), self.node_of(requester));
                for chunk in chunk_body(&body) {
                    let bytes = IP_HEADER_LEN + chunk.len();
                    self.data_bytes += bytes as u64;
                    self.messages.data += 1;
                    let msg = Routed::HttpChunk { client: requester, fqdn: req.fqdn.clone(), url: req.url.clone(), chunk };
                    self.send_routed(from, to, bytes, msg);
                }
            }
            Routed::HttpChunk { client, fqdn, url, chunk } => self.baseline_chunk(client, fqdn, url, &chunk),
        }
        Ok(())
    }

    fn control_arrive(&mut self, c: Control) -> Result<(), SimError> {
        match c {
            Control::Sr { client, name, subscribe } => {
                let events = if subscribe {
                    self.rv.subscribe(client, name)
                } else {
                    self.rv.unsubscribe(client, &name)
                };
                for ev in events {
                    self.match_event(&ev)?;
                }
            }
            Control::Pr { client, name, publish: true } => match self.rv.publish_availability(client, name) {
                Ok(Some(ev)) => self.match_event(&ev)?,
                Ok(None) => {}
                Err(e) => {
                    log::warn!("rejected publication from {client}: {e}");
                    self.counters.protocol_violations += 1;
                }
            },
            Control::Pr { client, name, publish: false } => {
                // the publisher already dropped its state; no teardown needed
                let _ = self.rv.unpublish(client, &name);
            }
            Control::Tp(d) => {
                let effects = match self.naps.get_mut(&d.publisher) {
                    Some(nap) => nap.on_fid(&d),
                    None => self.border.as_mut().map(|b| b.on_fid(&d)).unwrap_or_default(),
                };
                self.apply(d.publisher, effects)?;
            }
        }
        Ok(())
    }

    /// Rendezvous hands the match to the co-located topology manager, which
    /// computes the tree and sends the forwarding id to the publisher.
    fn match_event(&mut self, ev: &MatchEvent) -> Result<(), SimError> {
        if !self.cfg.ideal_control {
            let bytes = rt_packet(ev).wire_len();
            self.count_control(ControlKind::Rt, bytes);
        }
        let plan = plan_match(&self.g, ev)?;
        let nodes = plan.tree.nodes(&self.g);
        self.trees.insert(
            (ev.name.clone(), plan.delivery.fid),
            TreeRecord { tree: plan.tree, nodes, subscribers: ev.subscribers.clone() },
        );
        let publisher = self.node_of(ev.publisher);
        self.send_control(self.g.rv_node(), publisher, Control::Tp(plan.delivery));
        Ok(())
    }

    fn publish_data(&mut self, node: NodeId, pkt: IcnPacket) -> Result<(), SimError> {
        let bytes = pkt.wire_len();
        self.data_bytes += bytes as u64;
        self.messages.data += 1;
        self.record(node, "publish", None, bytes, || render_name(&pkt.name));
        let local: Vec<ClientId> = match self.trees.get(&(pkt.name.clone(), pkt.fid)) {
            Some(r) => self.g.clients_at(node).filter(|c| r.subscribers.contains(c)).collect(),
            None => Vec::new(),
        };
        for c in local {
            self.handoff(c, &pkt, true)?;
        }
        self.forward_from(node, &pkt, None);
        Ok(())
    }

    fn forward_from(&mut self, node: NodeId, pkt: &IcnPacket, in_link: Option<LinkIndex>) {
        let decision = forward(&self.g, node, pkt, in_link);
        if pkt.ttl <= 1 {
            let probe = IcnPacket { ttl: 2, ..pkt.clone() };
            if !forward(&self.g, node, &probe, in_link).out_links.is_empty() {
                self.counters.drops += 1;
                self.record(node, "ttl_drop", None, pkt.wire_len(), || render_name(&pkt.name));
            }
            return;
        }
        let bytes = pkt.wire_len();
        let record = self.trees.get(&(pkt.name.clone(), pkt.fid));
        let on_tree: Vec<bool> =
            decision.out_links.iter().map(|l| record.is_some_and(|r| r.tree.edges.contains(l))).collect();
        for (l, on_tree) in decision.out_links.into_iter().zip(on_tree) {
            if !on_tree {
                self.counters.off_tree_forwards += 1;
            }
            let at = self.transmit(l, bytes, false);
            self.record(node, "fwd", Some(l), bytes, || render_name(&pkt.name));
            self.push(at, Action::IcnArrive { link: l, pkt: IcnPacket { ttl: decision.ttl, ..pkt.clone() } });
        }
    }

    fn icn_arrive(&mut self, link: LinkIndex, pkt: IcnPacket) -> Result<(), SimError> {
        let node = self.g.link(link).to;
        let (targets, on_tree): (Vec<ClientId>, bool) = match self.trees.get(&(pkt.name.clone(), pkt.fid)) {
            Some(r) if r.tree.leaves.contains(&node) => {
                (self.g.clients_at(node).filter(|c| r.subscribers.contains(c)).collect(), true)
            }
            Some(r) if r.nodes.contains(&node) => (Vec::new(), true),
            _ => (self.g.clients_at(node).collect(), false),
        };
        for c in targets {
            self.handoff(c, &pkt, on_tree)?;
        }
        self.forward_from(node, &pkt, Some(link));
        Ok(())
    }

    fn handoff(&mut self, c: ClientId, pkt: &IcnPacket, on_tree: bool) -> Result<(), SimError> {
        let now = self.now;
        let (outcome, effects) = match self.naps.get_mut(&c) {
            Some(nap) => nap.on_icn_data(now, pkt),
            None => match self.border.as_mut() {
                Some(b) if b.client() == c => b.border_egress(now, pkt),
                _ => return Ok(()),
            },
        };
        if outcome == DataOutcome::NotMine {
            if on_tree {
                self.counters.protocol_violations += 1;
            } else {
                self.counters.fp_deliveries += 1;
            }
        }
        if on_tree || outcome != DataOutcome::NotMine {
            let node = self.node_of(c);
            self.record(node, "deliver", None, pkt.wire_len(), || render_name(&pkt.name));
        }
        self.apply(c, effects)
    }

    // -- baseline side -----------------------------------------------------

    /// Routes a device or peer packet by destination address. Packets from
    /// peers are only delivered into the operator's space.
    fn baseline_ip(&mut self, from: NodeId, pkt: IpPacket, from_peer: bool) {
        let is_operator = self.g.operator_prefixes().iter().any(|p| p.contains(pkt.dst));
        let to = match self.addr_owner.get(&pkt.dst) {
            Some(&c) => Recipient::Device(c),
            None if !from_peer && !is_operator && self.border.is_some() => Recipient::Peer,
            None => {
                self.counters.unroutable += 1;
                return;
            }
        };
        let dest = match to {
            Recipient::Device(c) => self.node_of(c),
            Recipient::Peer => self.node_of(self.border.as_ref().expect("checked").client()),
        };
        let bytes = pkt.wire_len();
        self.data_bytes += bytes as u64;
        self.messages.data += 1;
        self.send_routed(from, dest, bytes, Routed::Ip { packet: pkt, to });
    }

    fn baseline_chunk(&mut self, client: ClientId, fqdn: String, url: String, chunk: &[u8]) {
        let Some((seq, total, data)) = decode_chunk(chunk) else {
            self.counters.corrupt += 1;
            return;
        };
        let key = (client, fqdn, url);
        let asm = self.assemblies.entry(key.clone()).or_default();
        if *asm.total.get_or_insert(total) != total || seq >= total {
            self.counters.corrupt += 1;
            return;
        }
        if asm.chunks.insert(seq, data.to_vec()).is_some() {
            self.counters.duplicates += 1;
            return;
        }
        if asm.chunks.len() < total as usize {
            return;
        }
        let asm = self.assemblies.remove(&key).expect("present");
        let (client, fqdn, url) = key;
        let body = asm.chunks.into_values().flatten().collect();
        self.deliver_http(client, HttpResponse { fqdn, url, body });
    }

    // -- report ------------------------------------------------------------

    fn finish(self) -> SimOutcome {
        let mut counters = self.counters;
        let gw: Vec<(GatewayCounters, usize)> = self
            .naps
            .values()
            .map(|n| (n.counters(), n.pending_len()))
            .chain(self.border.iter().map(|b| (b.counters(), b.pending_len())))
            .collect();
        for (c, pending) in gw {
            counters.drops += c.queue_drops + pending as u64;
            counters.duplicates += c.duplicates;
            counters.corrupt += c.corrupt;
            counters.unroutable += c.unroutable;
        }
        // the gateway's own view of off-tree data is reported through the
        // engine's per-handoff classification instead
        let per_link = self
            .g
            .link_indices()
            .map(|l| (self.g.link(l).label(), self.per_link[l.0]))
            .collect();
        let flows = self
            .flows
            .into_iter()
            .filter(|(_, acc)| !acc.arrivals.is_empty())
            .map(|(k, acc)| {
                let n = acc.arrivals.len() as u64;
                let first = acc.first_send.unwrap_or(0);
                let last = acc.arrivals.iter().copied().max().unwrap_or(first);
                let span = (last - first).max(1);
                let stats = FlowStats {
                    delivered: n,
                    payload_bytes: acc.payload_bytes,
                    latency_us: (acc.latency_sum / u128::from(n)) as u64,
                    jitter_us: jitter_us(&acc.arrivals),
                    throughput_bps: (u128::from(acc.payload_bytes) * 8 * 1_000_000 / u128::from(span)) as u64,
                };
                (k, stats)
            })
            .collect();
        let report = KpiReport {
            per_link,
            totals: Totals::new(self.data_bytes, self.control_bytes),
            flows,
            counters,
            messages: self.messages,
            end_time_us: self.now,
        };
        SimOutcome {
            report,
            trace: self.trace,
            sent: self.sent,
            ip_deliveries: self.ip_deliveries,
            http_deliveries: self.http_deliveries,
            truncated: self.truncated,
        }
    }
}
