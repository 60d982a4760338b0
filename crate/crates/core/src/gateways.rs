// SPDX-License-Identifier: Apache-2.0

//! Network attachment points and the border gateway.
//!
//! A [`Nap`] terminates legacy devices. Each locally assigned address is
//! subscribed under the internal scope; outgoing IP packets are encapsulated
//! and published to the name of their destination. HTTP requests for the
//! same URL arriving within a coalescing window are answered by a single
//! response publication, which the delivery tree fans out to every
//! requester.
//!
//! The [`Border`] gateway subscribes to the external scope and relays what
//! it receives to the peering network; packets arriving from peers are
//! published under the internal scope.
//!
//! Gateways never touch the network themselves. Every operation returns a
//! list of [`Effect`]s that the caller (normally the simulator) carries out.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forwarding::{ForwardingId, IcnPacket, PacketKind};
use crate::names::{
    external_scope, fnv1a64, http_request_scope, ip_for_name, is_ancestor, name_for_http,
    name_for_ip, HttpRole, IcnName, Ipv4Prefix, Locality, ROOT_HTTP,
};
use crate::rendezvous::ClientId;
use crate::topology::{FidDelivery, NodeId};

/// Per-name capacity of the queue holding IP packets until a forwarding id arrives.
pub const PENDING_CAPACITY: usize = 64;
pub const DEFAULT_WINDOW_US: u64 = 100_000;
pub const MAX_IP_PAYLOAD: usize = 65_507;
/// Encoded IP header: src, dst, proto, id, payload length.
pub const IP_HEADER_LEN: usize = 4 + 4 + 1 + 8 + 2;
/// Response body bytes per data publication.
pub const HTTP_CHUNK: usize = 1_400;
/// seq + total in front of every response chunk.
pub const HTTP_CHUNK_HEADER: usize = 8;

// ---------------------------------------------------------------------------
// Device-facing values
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IpPacket {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub proto: u8,
    /// Simulation-unique packet id.
    pub id: u64,
    pub payload: Vec<u8>,
}

impl IpPacket {
    pub fn encode(&self) -> Result<Vec<u8>, GatewayError> {
        if self.payload.len() > MAX_IP_PAYLOAD {
            return Err(GatewayError::PayloadTooLarge(self.payload.len()));
        }
        let mut out = Vec::with_capacity(IP_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.src.octets());
        out.extend_from_slice(&self.dst.octets());
        out.push(self.proto);
        out.extend_from_slice(&self.id.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Option<IpPacket> {
        if buf.len() < IP_HEADER_LEN {
            return None;
        }
        let addr = |o: usize| Ipv4Addr::new(buf[o], buf[o + 1], buf[o + 2], buf[o + 3]);
        let len = usize::from(u16::from_be_bytes([buf[17], buf[18]]));
        let payload = &buf[IP_HEADER_LEN..];
        if payload.len() != len {
            return None;
        }
        Some(IpPacket {
            src: addr(0),
            dst: addr(4),
            proto: buf[8],
            id: u64::from_be_bytes(buf[9..17].try_into().ok()?),
            payload: payload.to_vec(),
        })
    }

    pub fn wire_len(&self) -> usize {
        IP_HEADER_LEN + self.payload.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpRequest {
    pub fqdn: String,
    pub url: String,
    pub response_size: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub fqdn: String,
    pub url: String,
    pub body: Vec<u8>,
}

/// What a device hands to its NAP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviceInput {
    Ip(IpPacket),
    HttpGet(HttpRequest),
}

/// What a NAP hands to a device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviceOutput {
    Ip(IpPacket),
    HttpResponse(HttpResponse),
}

mod sealed {
    pub trait Sealed {}
}

/// Marker for values allowed across the device boundary: IP and HTTP
/// values only. Sealed; ICN types never implement it.
pub trait LegacyValue: sealed::Sealed {}

macro_rules! legacy_values {
    ($($t:ty),* $(,)?) => {
        $(impl sealed::Sealed for $t {} impl LegacyValue for $t {})*
    };
}

legacy_values!(
    u8, u32, u64, String, Vec<u8>, Ipv4Addr, IpPacket, HttpRequest, HttpResponse, DeviceInput,
    DeviceOutput,
);

/// The interface a legacy device sees. Both directions carry only
/// [`LegacyValue`]s.
pub trait DevicePort {
    type Input: LegacyValue;
    type Output: LegacyValue;

    fn device_input(&mut self, now_us: u64, input: Self::Input) -> Result<Vec<Effect>, GatewayError>;
}

/// Deterministic response body for `url`.
pub fn response_body(url: &str, size: usize) -> Vec<u8> {
    let seed = fnv1a64(url.as_bytes()).to_le_bytes();
    (0..size).map(|i| seed[i % 8] ^ (i as u8).wrapping_mul(31)).collect()
}

// ---------------------------------------------------------------------------
// Effects and errors
// ---------------------------------------------------------------------------

/// An action requested by a gateway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Subscribe(IcnName),
    Unsubscribe(IcnName),
    PublishAvailability(IcnName),
    Unpublish(IcnName),
    /// Send a data packet into the network from the gateway's node.
    Publish(IcnPacket),
    ToDevice(DeviceOutput),
    /// Relay a decapsulated packet over the peering link.
    ToPeer(IpPacket),
    /// Call back [`Nap::on_window_expiry`] at `deadline_us`.
    ScheduleWindow { name: IcnName, deadline_us: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("address {0} lies outside the NAP's prefixes")]
    OutsidePrefixes(Ipv4Addr),
    #[error("address {0} already assigned")]
    DuplicateAddress(Ipv4Addr),
    #[error("source address {0} is not assigned at this NAP")]
    UnassignedSource(Ipv4Addr),
    #[error("IP payload of {0} bytes exceeds {MAX_IP_PAYLOAD}")]
    PayloadTooLarge(usize),
}

/// What happened to a data packet handed to a gateway.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataOutcome {
    /// Passed on to a device or peer.
    Delivered,
    /// Taken in by the gateway itself (HTTP request or partial response).
    Consumed,
    Duplicate,
    /// No local interest in the name.
    NotMine,
    Corrupt,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GatewayCounters {
    pub delivered: u64,
    pub queue_drops: u64,
    pub fp_deliveries: u64,
    pub corrupt: u64,
    pub duplicates: u64,
    pub unroutable: u64,
    pub protocol_violations: u64,
}

// ---------------------------------------------------------------------------
// Publisher side shared by NAPs and the border gateway
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
struct Publisher {
    fid_cache: BTreeMap<IcnName, ForwardingId>,
    pending: BTreeMap<IcnName, VecDeque<Vec<u8>>>,
    awaiting: BTreeSet<IcnName>,
    // withdrawn as soon as their pending payloads are flushed
    one_shot: BTreeSet<IcnName>,
}

impl Publisher {
    /// Publishes now if a forwarding id is cached, otherwise queues and
    /// signals availability once.
    fn publish(
        &mut self,
        name: &IcnName,
        payload: Vec<u8>,
        bounded: bool,
        counters: &mut GatewayCounters,
        effects: &mut Vec<Effect>,
    ) {
        if let Some(&fid) = self.fid_cache.get(name) {
            effects.push(Effect::Publish(IcnPacket::data(fid, name.clone(), payload)));
            return;
        }
        let queue = self.pending.entry(name.clone()).or_default();
        if bounded && queue.len() >= PENDING_CAPACITY {
            counters.queue_drops += 1;
            return;
        }
        queue.push_back(payload);
        if self.awaiting.insert(name.clone()) {
            effects.push(Effect::PublishAvailability(name.clone()));
        }
    }

    fn on_fid(&mut self, d: &FidDelivery, effects: &mut Vec<Effect>) {
        if d.teardown {
            self.fid_cache.remove(&d.name);
            self.awaiting.remove(&d.name);
            return;
        }
        self.fid_cache.insert(d.name.clone(), d.fid);
        self.awaiting.remove(&d.name);
        if let Some(queue) = self.pending.remove(&d.name) {
            effects.extend(
                queue
                    .into_iter()
                    .map(|p| Effect::Publish(IcnPacket::data(d.fid, d.name.clone(), p))),
            );
            if self.one_shot.remove(&d.name) {
                self.fid_cache.remove(&d.name);
                effects.push(Effect::Unpublish(d.name.clone()));
            }
        }
    }

    fn pending_len(&self) -> usize {
        self.pending.values().map(VecDeque::len).sum()
    }
}

// ---------------------------------------------------------------------------
// NAP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
struct PendingGet {
    fqdn: String,
    url: String,
    total: Option<u32>,
    chunks: BTreeMap<u32, Vec<u8>>,
}

/// An open coalescing window at a serving NAP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpExchange {
    pub url: String,
    pub fqdn: String,
    pub requesters: BTreeSet<ClientId>,
    pub window_deadline: u64,
    pub response_size: u32,
}

#[derive(Debug, Clone)]
pub struct Nap {
    client: ClientId,
    node: NodeId,
    prefixes: Vec<Ipv4Prefix>,
    operator_prefixes: Vec<Ipv4Prefix>,
    addresses: BTreeSet<Ipv4Addr>,
    publisher: Publisher,
    seen_ids: HashSet<u64>,
    known_services: BTreeSet<String>,
    gets: BTreeMap<IcnName, PendingGet>,
    served: BTreeMap<u64, String>,
    exchanges: BTreeMap<IcnName, HttpExchange>,
    window_us: u64,
    counters: GatewayCounters,
}

impl Nap {
    pub fn new(
        client: ClientId,
        node: NodeId,
        prefixes: Vec<Ipv4Prefix>,
        operator_prefixes: Vec<Ipv4Prefix>,
    ) -> Self {
        Nap {
            client,
            node,
            prefixes,
            operator_prefixes,
            addresses: BTreeSet::new(),
            publisher: Publisher::default(),
            seen_ids: HashSet::new(),
            known_services: BTreeSet::new(),
            gets: BTreeMap::new(),
            served: BTreeMap::new(),
            exchanges: BTreeMap::new(),
            window_us: DEFAULT_WINDOW_US,
            counters: GatewayCounters::default(),
        }
    }

    pub fn with_window(mut self, window_us: u64) -> Self {
        self.window_us = window_us;
        self
    }

    pub fn client(&self) -> ClientId {
        self.client
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn counters(&self) -> GatewayCounters {
        self.counters
    }

    pub fn addresses(&self) -> &BTreeSet<Ipv4Addr> {
        &self.addresses
    }

    pub fn owns(&self, addr: Ipv4Addr) -> bool {
        self.addresses.contains(&addr)
    }

    pub fn cached_fid(&self, name: &IcnName) -> Option<ForwardingId> {
        self.publisher.fid_cache.get(name).copied()
    }

    pub fn pending_len(&self) -> usize {
        self.publisher.pending_len()
    }

    pub fn open_exchange(&self, response: &IcnName) -> Option<&HttpExchange> {
        self.exchanges.get(response)
    }

    fn is_operator(&self, addr: Ipv4Addr) -> bool {
        self.operator_prefixes.iter().any(|p| p.contains(addr))
    }

    /// Assigns `addr` to a local device and subscribes to its internal name.
    pub fn attach_device(&mut self, addr: Ipv4Addr) -> Result<Vec<Effect>, GatewayError> {
        if !self.prefixes.iter().any(|p| p.contains(addr)) {
            return Err(GatewayError::OutsidePrefixes(addr));
        }
        if !self.addresses.insert(addr) {
            return Err(GatewayError::DuplicateAddress(addr));
        }
        Ok(vec![Effect::Subscribe(name_for_ip(addr, Locality::Internal))])
    }

    /// Encapsulates and publishes a packet from a local device. Traffic
    /// between two local devices is switched locally.
    pub fn send_ip(&mut self, pkt: IpPacket) -> Result<Vec<Effect>, GatewayError> {
        if !self.owns(pkt.src) {
            return Err(GatewayError::UnassignedSource(pkt.src));
        }
        let payload = pkt.encode()?;
        if self.owns(pkt.dst) {
            return Ok(self.deliver_ip(pkt).into_iter().collect());
        }
        let loc = if self.is_operator(pkt.dst) { Locality::Internal } else { Locality::External };
        let name = name_for_ip(pkt.dst, loc);
        let mut effects = Vec::new();
        self.publisher.publish(&name, payload, true, &mut self.counters, &mut effects);
        Ok(effects)
    }

    fn deliver_ip(&mut self, pkt: IpPacket) -> Option<Effect> {
        if !self.seen_ids.insert(pkt.id) {
            self.counters.duplicates += 1;
            return None;
        }
        self.counters.delivered += 1;
        Some(Effect::ToDevice(DeviceOutput::Ip(pkt)))
    }

    pub fn on_fid(&mut self, d: &FidDelivery) -> Vec<Effect> {
        let mut effects = Vec::new();
        self.publisher.on_fid(d, &mut effects);
        effects
    }

    /// Handles a data packet the network delivered to this NAP.
    pub fn on_icn_data(&mut self, now_us: u64, pkt: &IcnPacket) -> (DataOutcome, Vec<Effect>) {
        debug_assert_eq!(pkt.kind, PacketKind::Data);
        if let Some((addr, Locality::Internal)) = ip_for_name(&pkt.name) {
            if !self.owns(addr) {
                self.counters.fp_deliveries += 1;
                return (DataOutcome::NotMine, Vec::new());
            }
            let Some(ip) = IpPacket::decode(&pkt.payload).filter(|ip| ip.dst == addr) else {
                self.counters.corrupt += 1;
                return (DataOutcome::Corrupt, Vec::new());
            };
            return match self.deliver_ip(ip) {
                Some(e) => (DataOutcome::Delivered, vec![e]),
                None => (DataOutcome::Duplicate, Vec::new()),
            };
        }
        if pkt.name.scopes().first() == Some(&ROOT_HTTP) {
            if self.gets.contains_key(&pkt.name) {
                return self.on_response_chunk(pkt);
            }
            let fqdn_hash = pkt.name.scopes().get(1).map(|id| id.0);
            if let Some(fqdn) = fqdn_hash.and_then(|h| self.served.get(&h)).cloned() {
                if is_ancestor(&http_request_scope(&fqdn), &pkt.name).unwrap_or(false) {
                    return self.on_request(now_us, &fqdn, pkt);
                }
            }
        }
        self.counters.fp_deliveries += 1;
        (DataOutcome::NotMine, Vec::new())
    }

    /// Makes `fqdn` known as served somewhere in the network.
    pub fn register_service(&mut self, fqdn: &str) {
        self.known_services.insert(fqdn.to_string());
    }

    /// Subscribes to the response name, then publishes the request.
    pub fn http_get(&mut self, req: HttpRequest) -> Vec<Effect> {
        if !self.known_services.contains(&req.fqdn) {
            self.counters.unroutable += 1;
            return Vec::new();
        }
        let response = name_for_http(&req.fqdn, HttpRole::Response, &req.url);
        if self.gets.contains_key(&response) {
            // already waiting for this URL; the same response will serve both
            return Vec::new();
        }
        self.gets.insert(
            response.clone(),
            PendingGet { fqdn: req.fqdn.clone(), url: req.url.clone(), total: None, chunks: BTreeMap::new() },
        );
        let mut effects = vec![Effect::Subscribe(response)];
        let request = name_for_http(&req.fqdn, HttpRole::Request, &req.url);
        let payload = encode_request(self.client, &req);
        self.publisher.publish(&request, payload, true, &mut self.counters, &mut effects);
        effects
    }

    /// Starts serving `fqdn`: subscribes to its request scope.
    pub fn http_serve(&mut self, fqdn: &str) -> Vec<Effect> {
        self.served.insert(fnv1a64(fqdn.as_bytes()), fqdn.to_string());
        self.register_service(fqdn);
        vec![Effect::Subscribe(http_request_scope(fqdn))]
    }

    fn on_request(&mut self, now_us: u64, fqdn: &str, pkt: &IcnPacket) -> (DataOutcome, Vec<Effect>) {
        let Some((requester, req)) = decode_request(&pkt.payload).filter(|(_, r)| r.fqdn == fqdn) else {
            self.counters.corrupt += 1;
            return (DataOutcome::Corrupt, Vec::new());
        };
        let response = name_for_http(fqdn, HttpRole::Response, &req.url);
        if let Some(ex) = self.exchanges.get_mut(&response) {
            if !ex.requesters.insert(requester) {
                self.counters.duplicates += 1;
                return (DataOutcome::Duplicate, Vec::new());
            }
            ex.response_size = ex.response_size.max(req.response_size);
            return (DataOutcome::Consumed, Vec::new());
        }
        let deadline = now_us + self.window_us;
        self.exchanges.insert(
            response.clone(),
            HttpExchange {
                url: req.url,
                fqdn: fqdn.to_string(),
                requesters: BTreeSet::from([requester]),
                window_deadline: deadline,
                response_size: req.response_size,
            },
        );
        (DataOutcome::Consumed, vec![Effect::ScheduleWindow { name: response, deadline_us: deadline }])
    }

    /// Closes the window for `response` and publishes the response once.
    pub fn on_window_expiry(&mut self, response: &IcnName) -> Vec<Effect> {
        let Some(ex) = self.exchanges.remove(response) else {
            return Vec::new();
        };
        let body = response_body(&ex.url, ex.response_size as usize);
        let chunks = chunk_body(&body);
        // always rendezvous afresh: the requester set may have changed since
        // any earlier publication of this name
        self.publisher.fid_cache.remove(response);
        self.publisher.one_shot.insert(response.clone());
        let mut effects = Vec::new();
        for chunk in chunks {
            self.publisher.publish(response, chunk, false, &mut self.counters, &mut effects);
        }
        effects
    }

    fn on_response_chunk(&mut self, pkt: &IcnPacket) -> (DataOutcome, Vec<Effect>) {
        let Some((seq, total, data)) = decode_chunk(&pkt.payload) else {
            self.counters.corrupt += 1;
            return (DataOutcome::Corrupt, Vec::new());
        };
        let get = self.gets.get_mut(&pkt.name).expect("caller checked");
        if *get.total.get_or_insert(total) != total || seq >= total {
            self.counters.corrupt += 1;
            return (DataOutcome::Corrupt, Vec::new());
        }
        if get.chunks.insert(seq, data.to_vec()).is_some() {
            self.counters.duplicates += 1;
            return (DataOutcome::Duplicate, Vec::new());
        }
        if get.chunks.len() < total as usize {
            return (DataOutcome::Consumed, Vec::new());
        }
        let get = self.gets.remove(&pkt.name).expect("present");
        self.counters.delivered += 1;
        let body = get.chunks.into_values().flatten().collect();
        (
            DataOutcome::Delivered,
            vec![
                Effect::ToDevice(DeviceOutput::HttpResponse(HttpResponse {
                    fqdn: get.fqdn,
                    url: get.url,
                    body,
                })),
                Effect::Unsubscribe(pkt.name.clone()),
            ],
        )
    }
}

impl DevicePort for Nap {
    type Input = DeviceInput;
    type Output = DeviceOutput;

    fn device_input(&mut self, _now_us: u64, input: DeviceInput) -> Result<Vec<Effect>, GatewayError> {
        match input {
            DeviceInput::Ip(pkt) => self.send_ip(pkt),
            DeviceInput::HttpGet(req) => Ok(self.http_get(req)),
        }
    }
}

/// requester (4) | response size (4) | url length (2) | url | fqdn
pub fn encode_request(requester: ClientId, req: &HttpRequest) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + req.url.len() + req.fqdn.len());
    out.extend_from_slice(&requester.0.to_be_bytes());
    out.extend_from_slice(&req.response_size.to_be_bytes());
    out.extend_from_slice(&(req.url.len() as u16).to_be_bytes());
    out.extend_from_slice(req.url.as_bytes());
    out.extend_from_slice(req.fqdn.as_bytes());
    out
}

pub fn decode_request(buf: &[u8]) -> Option<(ClientId, HttpRequest)> {
    let requester = ClientId(u32::from_be_bytes(buf.get(0..4)?.try_into().ok()?));
    let response_size = u32::from_be_bytes(buf.get(4..8)?.try_into().ok()?);
    let url_len = usize::from(u16::from_be_bytes(buf.get(8..10)?.try_into().ok()?));
    let url = std::str::from_utf8(buf.get(10..10 + url_len)?).ok()?;
    let fqdn = std::str::from_utf8(buf.get(10 + url_len..)?).ok()?;
    Some((requester, HttpRequest { fqdn: fqdn.into(), url: url.into(), response_size }))
}

/// Splits a body into `seq | total | data` chunks; an empty body is one empty chunk.
pub fn chunk_body(body: &[u8]) -> Vec<Vec<u8>> {
    let total = body.len().div_ceil(HTTP_CHUNK).max(1) as u32;
    (0..total)
        .map(|seq| {
            let start = seq as usize * HTTP_CHUNK;
            let data = &body[start.min(body.len())..(start + HTTP_CHUNK).min(body.len())];
            let mut out = Vec::with_capacity(HTTP_CHUNK_HEADER + data.len());
            out.extend_from_slice(&seq.to_be_bytes());
            out.extend_from_slice(&total.to_be_bytes());
            out.extend_from_slice(data);
            out
        })
        .collect()
}

pub fn decode_chunk(buf: &[u8]) -> Option<(u32, u32, &[u8])> {
    let seq = u32::from_be_bytes(buf.get(0..4)?.try_into().ok()?);
    let total = u32::from_be_bytes(buf.get(4..8)?.try_into().ok()?);
    Some((seq, total, &buf[8..]))
}

// ---------------------------------------------------------------------------
// Border gateway
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerEmission {
    pub time_us: u64,
    pub packet: IpPacket,
}

#[derive(Debug, Clone)]
pub struct Border {
    client: ClientId,
    node: NodeId,
    operator_prefixes: Vec<Ipv4Prefix>,
    publisher: Publisher,
    seen_ids: HashSet<u64>,
    log: Vec<PeerEmission>,
    counters: GatewayCounters,
}

impl Border {
    /// Creates the gateway together with its standing subscription to the
    /// external scope.
    pub fn new(client: ClientId, node: NodeId, operator_prefixes: Vec<Ipv4Prefix>) -> (Self, Vec<Effect>) {
        let border = Border {
            client,
            node,
            operator_prefixes,
            publisher: Publisher::default(),
            seen_ids: HashSet::new(),
            log: Vec::new(),
            counters: GatewayCounters::default(),
        };
        (border, vec![Effect::Subscribe(external_scope())])
    }

    pub fn client(&self) -> ClientId {
        self.client
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn counters(&self) -> GatewayCounters {
        self.counters
    }

    pub fn emission_log(&self) -> &[PeerEmission] {
        &self.log
    }

    pub fn pending_len(&self) -> usize {
        self.publisher.pending_len()
    }

    /// A packet from a peering network, addressed into the operator's space.
    pub fn border_ingress(&mut self, pkt: IpPacket) -> Result<Vec<Effect>, GatewayError> {
        if !self.operator_prefixes.iter().any(|p| p.contains(pkt.dst)) {
            self.counters.unroutable += 1;
            return Ok(Vec::new());
        }
        let payload = pkt.encode()?;
        let name = name_for_ip(pkt.dst, Locality::Internal);
        let mut effects = Vec::new();
        self.publisher.publish(&name, payload, true, &mut self.counters, &mut effects);
        Ok(effects)
    }

    /// Decapsulates a packet published under the external scope and relays
    /// it to the peers.
    pub fn border_egress(&mut self, now_us: u64, pkt: &IcnPacket) -> (DataOutcome, Vec<Effect>) {
        if !is_ancestor(&external_scope(), &pkt.name).unwrap_or(false) {
            self.counters.protocol_violations += 1;
            return (DataOutcome::NotMine, Vec::new());
        }
        let Some(ip) = IpPacket::decode(&pkt.payload)
            .filter(|ip| ip_for_name(&pkt.name) == Some((ip.dst, Locality::External)))
        else {
            self.counters.corrupt += 1;
            return (DataOutcome::Corrupt, Vec::new());
        };
        if !self.seen_ids.insert(ip.id) {
            self.counters.duplicates += 1;
            return (DataOutcome::Duplicate, Vec::new());
        }
        self.counters.delivered += 1;
        self.log.push(PeerEmission { time_us: now_us, packet: ip.clone() });
        (DataOutcome::Delivered, vec![Effect::ToPeer(ip)])
    }

    pub fn on_fid(&mut self, d: &FidDelivery) -> Vec<Effect> {
        let mut effects = Vec::new();
        self.publisher.on_fid(d, &mut effects);
        effects
    }
}
