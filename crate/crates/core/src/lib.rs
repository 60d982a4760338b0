// SPDX-License-Identifier: Apache-2.0

//! IP-over-ICN: carrying legacy IP and HTTP traffic over a publish/subscribe
//! information-centric core.
//!
//! Network attachment points (NAPs) and a border gateway map IP packets and
//! HTTP exchanges onto named information items. A rendezvous function matches
//! publishers with subscribers, topology management turns each match into a
//! publisher-rooted delivery tree encoded as an in-packet Bloom filter, and
//! stateless forwarding nodes switch packets by mask inclusion.
//!
//! [`simnet`] wires all of it into a deterministic discrete-event simulator
//! that can run the same workload over the ICN core or over a plain unicast
//! IP baseline and report the resulting KPIs.

pub mod cli;
pub mod forwarding;
pub mod gateways;
pub mod names;
pub mod rendezvous;
pub mod simnet;
pub mod topology;

pub use forwarding::{ForwardingId, IcnPacket, LinkId, PacketKind};
pub use names::{IcnName, Locality, NsId};
pub use rendezvous::{ClientId, MatchEvent, Rendezvous};
pub use simnet::{KpiReport, Mode, Scenario};
pub use topology::{DeliveryTree, NetworkGraph, NodeId};
