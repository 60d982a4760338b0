// SPDX-License-Identifier: Apache-2.0

//! Topology management: the network graph, publisher-rooted delivery trees
//! and their encoding as forwarding identifiers.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forwarding::{gen_lid, ForwardingId, LinkId};
use crate::names::{IcnName, Ipv4Prefix};
use crate::rendezvous::{ClientId, MatchEvent};

pub const DEFAULT_DELAY_US: u64 = 1_000;
pub const DEFAULT_CAPACITY_BPS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a directed link within its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkIndex(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub delay_us: u64,
    pub capacity_bps: u64,
    pub lid: LinkId,
}

impl Link {
    /// Time for a `bytes`-long packet to cross the link: propagation plus
    /// serialization, rounded up to whole microseconds.
    pub fn traversal_us(&self, bytes: usize) -> u64 {
        let bits = 8 * bytes as u128 * 1_000_000;
        let ser = bits.div_ceil(u128::from(self.capacity_bps));
        self.delay_us + u64::try_from(ser).unwrap_or(u64::MAX)
    }

    pub fn label(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

/// Distances from a root and each reached node's parent link.
pub type ShortestPaths = (BTreeMap<NodeId, u64>, BTreeMap<NodeId, LinkIndex>);

// ---------------------------------------------------------------------------
// Topology document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDoc {
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub links: Vec<LinkDoc>,
    #[serde(default)]
    pub naps: Vec<NapDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub border: Option<BorderDoc>,
    /// Node hosting rendezvous and topology management; lowest node id if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rv_node: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub a: u32,
    pub b: u32,
    #[serde(default = "default_delay")]
    pub delay_us: u64,
    #[serde(default = "default_capacity")]
    pub capacity_bps: u64,
}

fn default_delay() -> u64 {
    DEFAULT_DELAY_US
}

fn default_capacity() -> u64 {
    DEFAULT_CAPACITY_BPS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NapDoc {
    pub client: u32,
    pub node: u32,
    #[serde(default)]
    pub prefixes: Vec<Ipv4Prefix>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BorderDoc {
    pub client: u32,
    pub node: u32,
}

impl TopologyDoc {
    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        serde_json::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("topology document: {0}")]
    Parse(String),
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("link {a}-{b} references unknown node {node}")]
    UnknownLinkNode { a: u32, b: u32, node: u32 },
    #[error("link {0}-{0} is a self-loop")]
    SelfLoop(u32),
    #[error("link {0}-{1} listed twice")]
    DuplicateLink(u32, u32),
    #[error("link {0}-{1} has zero delay")]
    ZeroDelay(u32, u32),
    #[error("link {0}-{1} has zero capacity")]
    ZeroCapacity(u32, u32),
    #[error("graph is disconnected: node {0} unreachable from node {1}")]
    Disconnected(u32, u32),
    #[error("client {client} attached to unknown node {node}")]
    UnknownAttachment { client: u32, node: u32 },
    #[error("client id {0} used twice")]
    DuplicateClient(u32),
    #[error("rendezvous node {0} does not exist")]
    UnknownRvNode(u32),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unattached client {0}")]
    UnattachedClient(ClientId),
    #[error("node {leaf} unreachable from {root}")]
    Unreachable { root: NodeId, leaf: NodeId },
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NapConfig {
    pub client: ClientId,
    pub node: NodeId,
    pub prefixes: Vec<Ipv4Prefix>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BorderConfig {
    pub client: ClientId,
    pub node: NodeId,
}

/// The network graph. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    nodes: BTreeSet<NodeId>,
    links: Vec<Link>,
    reverse: Vec<LinkIndex>,
    out: BTreeMap<NodeId, Vec<LinkIndex>>,
    attachments: BTreeMap<ClientId, NodeId>,
    naps: Vec<NapConfig>,
    border: Option<BorderConfig>,
    rv_node: NodeId,
}

/// Builds the graph. Each undirected document link yields `a->b` then
/// `b->a`; link identifiers are drawn in that order from a generator seeded
/// with `seed`, redrawing on the (unlikely) collision with an earlier one.
pub fn load_graph(doc: &TopologyDoc, seed: u64) -> Result<NetworkGraph, TopologyError> {
    let mut nodes = BTreeSet::new();
    for n in &doc.nodes {
        if !nodes.insert(NodeId(n.id)) {
            return Err(TopologyError::DuplicateNode(n.id));
        }
    }
    let Some(&first) = nodes.first() else {
        return Err(TopologyError::Empty);
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let mut draw = |rng: &mut ChaCha8Rng| loop {
        let lid = gen_lid(rng);
        if used.insert(lid) {
            break lid;
        }
    };

    let mut links = Vec::with_capacity(doc.links.len() * 2);
    let mut reverse = Vec::with_capacity(doc.links.len() * 2);
    let mut out: BTreeMap<NodeId, Vec<LinkIndex>> = nodes.iter().map(|&n| (n, Vec::new())).collect();
    let mut seen_pairs = BTreeSet::new();
    for l in &doc.links {
        for node in [l.a, l.b] {
            if !nodes.contains(&NodeId(node)) {
                return Err(TopologyError::UnknownLinkNode { a: l.a, b: l.b, node });
            }
        }
        if l.a == l.b {
            return Err(TopologyError::SelfLoop(l.a));
        }
        if !seen_pairs.insert((l.a.min(l.b), l.a.max(l.b))) {
            return Err(TopologyError::DuplicateLink(l.a, l.b));
        }
        if l.delay_us == 0 {
            return Err(TopologyError::ZeroDelay(l.a, l.b));
        }
        if l.capacity_bps == 0 {
            return Err(TopologyError::ZeroCapacity(l.a, l.b));
        }
        let fwd = LinkIndex(links.len());
        let back = LinkIndex(links.len() + 1);
        for (from, to) in [(l.a, l.b), (l.b, l.a)] {
            let idx = LinkIndex(links.len());
            links.push(Link {
                from: NodeId(from),
                to: NodeId(to),
                delay_us: l.delay_us,
                capacity_bps: l.capacity_bps,
                lid: draw(&mut rng),
            });
            out.get_mut(&NodeId(from)).expect("checked above").push(idx);
        }
        reverse.push(back);
        reverse.push(fwd);
    }

    let mut attachments = BTreeMap::new();
    let mut attach = |client: u32, node: u32| {
        if !nodes.contains(&NodeId(node)) {
            return Err(TopologyError::UnknownAttachment { client, node });
        }
        if attachments.insert(ClientId(client), NodeId(node)).is_some() {
            return Err(TopologyError::DuplicateClient(client));
        }
        Ok(())
    };
    let mut naps = Vec::new();
    for nap in &doc.naps {
        attach(nap.client, nap.node)?;
        naps.push(NapConfig {
            client: ClientId(nap.client),
            node: NodeId(nap.node),
            prefixes: nap.prefixes.clone(),
        });
    }
    let border = match &doc.border {
        Some(b) => {
            attach(b.client, b.node)?;
            Some(BorderConfig { client: ClientId(b.client), node: NodeId(b.node) })
        }
        None => None,
    };

    let rv_node = match doc.rv_node {
        Some(n) if nodes.contains(&NodeId(n)) => NodeId(n),
        Some(n) => return Err(TopologyError::UnknownRvNode(n)),
        None => first,
    };

    let g = NetworkGraph { nodes, links, reverse, out, attachments, naps, border, rv_node };
    g.check_connected()?;
    Ok(g)
}

impl NetworkGraph {
    fn check_connected(&self) -> Result<(), TopologyError> {
        let start = *self.nodes.first().expect("non-empty");
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &l in self.out_links(n) {
                let to = self.links[l.0].to;
                if seen.insert(to) {
                    queue.push_back(to);
                }
            }
        }
        match self.nodes.iter().find(|n| !seen.contains(n)) {
            Some(missing) => Err(TopologyError::Disconnected(missing.0, start.0)),
            None => Ok(()),
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains_node(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_indices(&self) -> impl Iterator<Item = LinkIndex> {
        (0..self.links.len()).map(LinkIndex)
    }

    pub fn link(&self, l: LinkIndex) -> &Link {
        &self.links[l.0]
    }

    pub fn reverse(&self, l: LinkIndex) -> LinkIndex {
        self.reverse[l.0]
    }

    pub fn out_links(&self, n: NodeId) -> &[LinkIndex] {
        self.out.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn find_link(&self, from: NodeId, to: NodeId) -> Option<LinkIndex> {
        self.out_links(from).iter().copied().find(|&l| self.links[l.0].to == to)
    }

    pub fn attachment(&self, c: ClientId) -> Option<NodeId> {
        self.attachments.get(&c).copied()
    }

    pub fn attachments(&self) -> &BTreeMap<ClientId, NodeId> {
        &self.attachments
    }

    /// Clients attached at `node`, in id order.
    pub fn clients_at(&self, node: NodeId) -> impl Iterator<Item = ClientId> + '_ {
        self.attachments.iter().filter(move |(_, &n)| n == node).map(|(&c, _)| c)
    }

    pub fn naps(&self) -> &[NapConfig] {
        &self.naps
    }

    pub fn border(&self) -> Option<&BorderConfig> {
        self.border.as_ref()
    }

    pub fn rv_node(&self) -> NodeId {
        self.rv_node
    }

    /// Every prefix any NAP serves: the operator's address space.
    pub fn operator_prefixes(&self) -> Vec<Ipv4Prefix> {
        self.naps.iter().flat_map(|n| n.prefixes.iter().copied()).collect()
    }

    /// Least-delay distances from `root` plus, for every reached node, its
    /// tree parent link. Among equal-cost predecessors the lowest node id wins.
    pub fn shortest_paths(
        &self,
        root: NodeId,
    ) -> Result<ShortestPaths, TopologyError> {
        if !self.contains_node(root) {
            return Err(TopologyError::UnknownNode(root));
        }
        let mut dist = BTreeMap::from([(root, 0u64)]);
        let mut heap = BinaryHeap::from([Reverse((0u64, root))]);
        let mut done = BTreeSet::new();
        while let Some(Reverse((d, n))) = heap.pop() {
            if !done.insert(n) {
                continue;
            }
            for &l in self.out_links(n) {
                let link = &self.links[l.0];
                let nd = d + link.delay_us;
                if dist.get(&link.to).is_none_or(|&old| nd < old) {
                    dist.insert(link.to, nd);
                    heap.push(Reverse((nd, link.to)));
                }
            }
        }
        let mut parent = BTreeMap::new();
        for (&n, &d) in &dist {
            if n == root {
                continue;
            }
            let best = self
                .out_links(n)
                .iter()
                .map(|&l| self.reverse(l))
                .filter(|&l| {
                    let link = &self.links[l.0];
                    dist.get(&link.from).is_some_and(|&du| du + link.delay_us == d)
                })
                .min_by_key(|&l| (self.links[l.0].from, l));
            parent.insert(n, best.expect("a settled node has a tight predecessor"));
        }
        Ok((dist, parent))
    }

    /// Ordered least-delay link path from `src` to `dst` (empty when equal).
    pub fn unicast_path(&self, src: NodeId, dst: NodeId) -> Result<Vec<LinkIndex>, TopologyError> {
        let (_, parent) = self.shortest_paths(src)?;
        if !self.contains_node(dst) {
            return Err(TopologyError::UnknownNode(dst));
        }
        let mut path = Vec::new();
        let mut at = dst;
        while at != src {
            let l = *parent
                .get(&at)
                .ok_or(TopologyError::Unreachable { root: src, leaf: dst })?;
            path.push(l);
            at = self.links[l.0].from;
        }
        path.reverse();
        Ok(path)
    }
}

// ---------------------------------------------------------------------------
// Delivery trees
// ---------------------------------------------------------------------------

/// A publisher-rooted tree spanning subscriber attachment nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryTree {
    pub root: NodeId,
    pub leaves: BTreeSet<NodeId>,
    pub edges: BTreeSet<LinkIndex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeViolation {
    #[error("edge {0:?} is not a link of the graph")]
    ForeignEdge(LinkIndex),
    #[error("node {0} has more than one incoming tree edge")]
    MultipleParents(NodeId),
    #[error("tree edge enters the root {0}")]
    EdgeIntoRoot(NodeId),
    #[error("leaf {0} not reachable from the root")]
    LeafUnreached(NodeId),
    #[error("tree edge {0:?} not reachable from the root")]
    Detached(LinkIndex),
}

impl DeliveryTree {
    /// Every node the tree touches: root, edge endpoints.
    pub fn nodes(&self, g: &NetworkGraph) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::from([self.root]);
        for &e in &self.edges {
            out.insert(g.link(e).from);
            out.insert(g.link(e).to);
        }
        out
    }

    /// Checks that the edges form a tree directed away from the root that
    /// reaches every leaf.
    pub fn check(&self, g: &NetworkGraph) -> Result<(), TreeViolation> {
        let mut parent: BTreeMap<NodeId, LinkIndex> = BTreeMap::new();
        for &e in &self.edges {
            if e.0 >= g.links.len() {
                return Err(TreeViolation::ForeignEdge(e));
            }
            let to = g.link(e).to;
            if to == self.root {
                return Err(TreeViolation::EdgeIntoRoot(to));
            }
            if parent.insert(to, e).is_some() {
                return Err(TreeViolation::MultipleParents(to));
            }
        }
        // walk down from the root; a cycle would leave edges unvisited
        let mut reached = BTreeSet::from([self.root]);
        let mut visited_edges = 0;
        let mut queue = VecDeque::from([self.root]);
        while let Some(n) = queue.pop_front() {
            for &l in g.out_links(n) {
                if self.edges.contains(&l) && reached.insert(g.link(l).to) {
                    visited_edges += 1;
                    queue.push_back(g.link(l).to);
                }
            }
        }
        if visited_edges != self.edges.len() {
            let stray = self
                .edges
                .iter()
                .find(|&&e| !reached.contains(&g.link(e).from))
                .copied()
                .unwrap_or(LinkIndex(usize::MAX));
            return Err(TreeViolation::Detached(stray));
        }
        if let Some(&leaf) = self.leaves.iter().find(|l| !reached.contains(l)) {
            return Err(TreeViolation::LeafUnreached(leaf));
        }
        Ok(())
    }

    /// Sum of link delays from the root to `node` along tree edges.
    pub fn distance_to(&self, g: &NetworkGraph, node: NodeId) -> Option<u64> {
        let mut at = node;
        let mut total = 0;
        let mut steps = 0;
        while at != self.root {
            let e = self.edges.iter().find(|&&e| g.link(e).to == at)?;
            total += g.link(*e).delay_us;
            at = g.link(*e).from;
            steps += 1;
            if steps > self.edges.len() {
                return None;
            }
        }
        Some(total)
    }
}

/// Union of least-delay paths from `root` to each leaf.
pub fn shortest_path_tree(
    g: &NetworkGraph,
    root: NodeId,
    leaves: &BTreeSet<NodeId>,
) -> Result<DeliveryTree, TopologyError> {
    let (_, parent) = g.shortest_paths(root)?;
    let mut edges = BTreeSet::new();
    for &leaf in leaves {
        if !g.contains_node(leaf) {
            return Err(TopologyError::UnknownNode(leaf));
        }
        let mut at = leaf;
        while at != root {
            let l = *parent.get(&at).ok_or(TopologyError::Unreachable { root, leaf })?;
            if !edges.insert(l) {
                break; // rest of the path is already in the tree
            }
            at = g.link(l).from;
        }
    }
    Ok(DeliveryTree { root, leaves: leaves.clone(), edges })
}

/// OR of the link identifiers of the tree's edges.
pub fn fid_for_tree(g: &NetworkGraph, t: &DeliveryTree) -> ForwardingId {
    t.edges
        .iter()
        .fold(ForwardingId::ZERO, |fid, &e| fid.with_link(g.link(e).lid))
}

/// Topology manager's answer to a match: the forwarding id the publisher
/// must place in its packets for `name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FidDelivery {
    pub publisher: ClientId,
    pub name: IcnName,
    pub fid: ForwardingId,
    /// Some subscriber is attached at the publisher's own node.
    pub local_delivery: bool,
    /// The subscriber set is empty; the publisher should drop its cached fid.
    pub teardown: bool,
}

/// Tree and delivery computed for one match event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchPlan {
    pub tree: DeliveryTree,
    pub delivery: FidDelivery,
}

pub fn plan_match(g: &NetworkGraph, ev: &MatchEvent) -> Result<MatchPlan, TopologyError> {
    let root = g
        .attachment(ev.publisher)
        .ok_or(TopologyError::UnattachedClient(ev.publisher))?;
    let mut leaves = BTreeSet::new();
    let mut local_delivery = false;
    for &s in &ev.subscribers {
        let node = g.attachment(s).ok_or(TopologyError::UnattachedClient(s))?;
        if node == root {
            local_delivery = true;
        } else {
            leaves.insert(node);
        }
    }
    let tree = shortest_path_tree(g, root, &leaves)?;
    let fid = fid_for_tree(g, &tree);
    Ok(MatchPlan {
        tree,
        delivery: FidDelivery {
            publisher: ev.publisher,
            name: ev.name.clone(),
            fid,
            local_delivery,
            teardown: ev.subscribers.is_empty(),
        },
    })
}

pub fn handle_match(g: &NetworkGraph, ev: &MatchEvent) -> Result<FidDelivery, TopologyError> {
    plan_match(g, ev).map(|p| p.delivery)
}
