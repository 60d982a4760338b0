// SPDX-License-Identifier: Apache-2.0

//! Stateless Bloom-filter forwarding and the ICN packet wire format.
//!
//! Every directed link carries a 256-bit [`LinkId`] with exactly
//! [`LID_BITS`] bits set. A delivery tree is encoded as the OR of its links'
//! identifiers (a [`ForwardingId`]) and placed in the packet. A node forwards
//! a packet on each outgoing link whose identifier is contained in the
//! packet's forwarding id. Links outside the tree may match by chance (a
//! false positive); tree links always match.
//!
//! Wire layout, big-endian:
//!
//! ```text
//! fid (32) | ttl (1) | kind (1) | depth (1) | item flag (1) | path (8 * depth) | payload len (2) | payload
//! ```

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::names::{IcnName, NameError, NsId, MAX_DEPTH};
use crate::topology::{LinkIndex, NetworkGraph, NodeId};

pub const MASK_BITS: usize = 256;
/// Set bits per link identifier.
pub const LID_BITS: u32 = 5;
pub const DEFAULT_TTL: u8 = 32;
pub const MAX_PAYLOAD: usize = u16::MAX as usize;
/// Encoded size of a packet with an empty path and empty payload.
pub const FIXED_HEADER_LEN: usize = 32 + 1 + 1 + 1 + 1 + 2;

/// A 256-bit mask, stored as four little-endian words (word 0 holds bits 0..64).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mask256([u64; 4]);

impl Mask256 {
    pub const ZERO: Mask256 = Mask256([0; 4]);
    pub const ONES: Mask256 = Mask256([u64::MAX; 4]);

    pub fn with_bits(bits: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Mask256::ZERO;
        for b in bits {
            m.set(b);
        }
        m
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < MASK_BITS, "bit {bit} out of range");
        self.0[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < MASK_BITS && self.0[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn or(self, other: Mask256) -> Mask256 {
        Mask256(std::array::from_fn(|i| self.0[i] | other.0[i]))
    }

    pub fn and(self, other: Mask256) -> Mask256 {
        Mask256(std::array::from_fn(|i| self.0[i] & other.0[i]))
    }

    pub fn contains(&self, other: &Mask256) -> bool {
        self.and(*other) == *other
    }

    pub fn to_be_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, w) in self.0.iter().rev().enumerate() {
            out[i * 8..i * 8 + 8].copy_from_slice(&w.to_be_bytes());
        }
        out
    }

    pub fn from_be_bytes(bytes: [u8; 32]) -> Self {
        Mask256(std::array::from_fn(|i| {
            let off = (3 - i) * 8;
            u64::from_be_bytes(bytes[off..off + 8].try_into().expect("8 bytes"))
        }))
    }
}

impl fmt::Debug for Mask256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Mask256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in self.0.iter().rev() {
            write!(f, "{w:016x}")?;
        }
        Ok(())
    }
}

/// Per-link identifier: a 256-bit mask with exactly five bits set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(Mask256);

impl LinkId {
    /// Builds a link id from bit positions; `None` unless exactly five distinct
    /// in-range positions are given.
    pub fn from_bits(bits: &[usize]) -> Option<LinkId> {
        if bits.iter().any(|&b| b >= MASK_BITS) {
            return None;
        }
        let m = Mask256::with_bits(bits.iter().copied());
        (m.count_ones() == LID_BITS).then_some(LinkId(m))
    }

    pub fn mask(&self) -> Mask256 {
        self.0
    }
}

/// In-packet forwarding identifier: the OR of a tree's link identifiers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ForwardingId(pub Mask256);

impl ForwardingId {
    pub const ZERO: ForwardingId = ForwardingId(Mask256::ZERO);

    pub fn with_link(self, lid: LinkId) -> ForwardingId {
        ForwardingId(self.0.or(lid.0))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Fill factor: set bits over mask width.
    pub fn fill(&self) -> f64 {
        f64::from(self.0.count_ones()) / MASK_BITS as f64
    }
}

impl fmt::Display for ForwardingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Draws a uniformly random 5-subset of the 256 bit positions.
pub fn gen_lid<R: Rng + ?Sized>(rng: &mut R) -> LinkId {
    let bits = rand::seq::index::sample(rng, MASK_BITS, LID_BITS as usize);
    LinkId(Mask256::with_bits(bits.iter()))
}

pub fn lid_matches(fid: &ForwardingId, lid: &LinkId) -> bool {
    fid.0.contains(&lid.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControlKind {
    /// Publisher to rendezvous: availability.
    Pr,
    /// Rendezvous to topology manager: match result.
    Rt,
    /// Topology manager to publisher: forwarding id.
    Tp,
    /// Subscriber to rendezvous.
    Sr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketKind {
    Data,
    Control(ControlKind),
}

impl PacketKind {
    fn to_byte(self) -> u8 {
        match self {
            PacketKind::Data => 0,
            PacketKind::Control(ControlKind::Pr) => 1,
            PacketKind::Control(ControlKind::Rt) => 2,
            PacketKind::Control(ControlKind::Tp) => 3,
            PacketKind::Control(ControlKind::Sr) => 4,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => PacketKind::Data,
            1 => PacketKind::Control(ControlKind::Pr),
            2 => PacketKind::Control(ControlKind::Rt),
            3 => PacketKind::Control(ControlKind::Tp),
            4 => PacketKind::Control(ControlKind::Sr),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IcnPacket {
    pub fid: ForwardingId,
    pub ttl: u8,
    pub kind: PacketKind,
    pub name: IcnName,
    pub payload: Vec<u8>,
}

impl IcnPacket {
    pub fn data(fid: ForwardingId, name: IcnName, payload: Vec<u8>) -> Self {
        IcnPacket { fid, ttl: DEFAULT_TTL, kind: PacketKind::Data, name, payload }
    }

    pub fn control(kind: ControlKind, name: IcnName, payload: Vec<u8>) -> Self {
        IcnPacket {
            fid: ForwardingId::ZERO,
            ttl: DEFAULT_TTL,
            kind: PacketKind::Control(kind),
            name,
            payload,
        }
    }

    /// Size of the encoded packet in bytes.
    pub fn wire_len(&self) -> usize {
        FIXED_HEADER_LEN + 8 * self.name.depth() + self.payload.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("buffer truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("name depth {0} exceeds {MAX_DEPTH}")]
    TooDeep(usize),
    #[error("unknown packet kind {0}")]
    BadKind(u8),
    #[error("invalid item flag {0}")]
    BadItemFlag(u8),
    #[error("payload length field says {declared}, {actual} bytes follow")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLarge(usize),
    #[error(transparent)]
    Name(#[from] NameError),
}

pub fn encode_packet(pkt: &IcnPacket) -> Result<Vec<u8>, CodecError> {
    if pkt.payload.len() > MAX_PAYLOAD {
        return Err(CodecError::PayloadTooLarge(pkt.payload.len()));
    }
    let mut out = Vec::with_capacity(pkt.wire_len());
    out.extend_from_slice(&pkt.fid.0.to_be_bytes());
    out.push(pkt.ttl);
    out.push(pkt.kind.to_byte());
    out.push(pkt.name.depth() as u8);
    out.push(u8::from(pkt.name.is_item()));
    for id in pkt.name.elements() {
        out.extend_from_slice(&id.0.to_be_bytes());
    }
    out.extend_from_slice(&(pkt.payload.len() as u16).to_be_bytes());
    out.extend_from_slice(&pkt.payload);
    Ok(out)
}

pub fn decode_packet(buf: &[u8]) -> Result<IcnPacket, CodecError> {
    let need = |n: usize| {
        if buf.len() < n {
            Err(CodecError::Truncated { need: n, have: buf.len() })
        } else {
            Ok(())
        }
    };
    need(36)?;
    let fid = ForwardingId(Mask256::from_be_bytes(buf[..32].try_into().expect("32 bytes")));
    let ttl = buf[32];
    let kind = PacketKind::from_byte(buf[33]).ok_or(CodecError::BadKind(buf[33]))?;
    let depth = usize::from(buf[34]);
    if depth > MAX_DEPTH {
        return Err(CodecError::TooDeep(depth));
    }
    let has_item = match buf[35] {
        0 => false,
        1 => true,
        other => return Err(CodecError::BadItemFlag(other)),
    };
    let path_end = 36 + 8 * depth;
    need(path_end + 2)?;
    let mut path: Vec<NsId> = buf[36..path_end]
        .chunks_exact(8)
        .map(|c| NsId(u64::from_be_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    let item = if has_item { path.pop() } else { None };
    let name = IcnName::new(path, item)?;
    let declared = usize::from(u16::from_be_bytes([buf[path_end], buf[path_end + 1]]));
    let payload = &buf[path_end + 2..];
    if payload.len() != declared {
        return Err(CodecError::LengthMismatch { declared, actual: payload.len() });
    }
    Ok(IcnPacket { fid, ttl, kind, name, payload: payload.to_vec() })
}

/// Forwarding decision at one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardDecision {
    pub out_links: Vec<LinkIndex>,
    /// TTL carried by every emitted copy.
    pub ttl: u8,
}

/// Outgoing links of `node` whose identifiers are contained in the packet's
/// forwarding id, never the reverse of the arrival link. A packet arriving
/// with TTL 1 (or 0) is dropped.
pub fn forward(
    g: &NetworkGraph,
    node: NodeId,
    pkt: &IcnPacket,
    in_link: Option<LinkIndex>,
) -> ForwardDecision {
    if pkt.ttl <= 1 {
        return ForwardDecision { out_links: Vec::new(), ttl: 0 };
    }
    let back = in_link.map(|l| g.reverse(l));
    let out_links = g
        .out_links(node)
        .iter()
        .copied()
        .filter(|&l| Some(l) != back && lid_matches(&pkt.fid, &g.link(l).lid))
        .collect();
    ForwardDecision { out_links, ttl: pkt.ttl - 1 }
}
