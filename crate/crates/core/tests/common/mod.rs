// SPDX-License-Identifier: Apache-2.0

//! Generators and independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use ipicn::topology::{BorderDoc, LinkDoc, NapDoc, NodeDoc, TopologyDoc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub const GBPS: u64 = 1_000_000_000;

pub fn link(a: u32, b: u32, delay_us: u64, capacity_bps: u64) -> LinkDoc {
    LinkDoc { a, b, delay_us, capacity_bps }
}

pub fn nap(client: u32, node: u32, prefix: &str) -> NapDoc {
    NapDoc { client, node, prefixes: vec![prefix.parse().unwrap()] }
}

pub fn doc(nodes: impl IntoIterator<Item = u32>, links: Vec<LinkDoc>) -> TopologyDoc {
    TopologyDoc {
        nodes: nodes.into_iter().map(|id| NodeDoc { id }).collect(),
        links,
        naps: vec![],
        border: None,
        rv_node: None,
    }
}

/// Connected random graph on nodes `1..=n` with `m` undirected links
/// (`m >= n - 1`): a random spanning tree plus distinct extra edges. Delays
/// are drawn from `delays`.
pub fn random_graph<R: Rng>(rng: &mut R, n: u32, m: usize, delays: &[u64]) -> TopologyDoc {
    assert!(m >= n as usize - 1);
    assert!(m <= (n as usize * (n as usize - 1)) / 2);
    let mut order: Vec<u32> = (1..=n).collect();
    order.shuffle(rng);
    let mut edges = BTreeSet::new();
    for i in 1..order.len() {
        let parent = order[rng.random_range(0..i)];
        edges.insert(key(parent, order[i]));
    }
    while edges.len() < m {
        let a = rng.random_range(1..=n);
        let b = rng.random_range(1..=n);
        if a != b {
            edges.insert(key(a, b));
        }
    }
    let mut edges: Vec<(u32, u32)> = edges.into_iter().collect();
    edges.shuffle(rng);
    let links = edges
        .into_iter()
        .map(|(a, b)| link(a, b, *delays.choose(rng).unwrap(), GBPS))
        .collect();
    doc(1..=n, links)
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// All-pairs least delays by Floyd-Warshall over the document itself.
pub fn floyd_warshall(d: &TopologyDoc) -> BTreeMap<(u32, u32), u64> {
    let ids: Vec<u32> = d.nodes.iter().map(|n| n.id).collect();
    let mut dist = BTreeMap::new();
    for &a in &ids {
        for &b in &ids {
            dist.insert((a, b), if a == b { 0 } else { u64::MAX });
        }
    }
    for l in &d.links {
        for (a, b) in [(l.a, l.b), (l.b, l.a)] {
            let e = dist.get_mut(&(a, b)).unwrap();
            *e = (*e).min(l.delay_us);
        }
    }
    for &k in &ids {
        for &i in &ids {
            let ik = dist[&(i, k)];
            if ik == u64::MAX {
                continue;
            }
            for &j in &ids {
                let kj = dist[&(k, j)];
                if kj != u64::MAX && ik + kj < dist[&(i, j)] {
                    dist.insert((i, j), ik + kj);
                }
            }
        }
    }
    dist
}

/// Star used for coalescing runs: server NAP on node 1, bottleneck `1-2`,
/// hub node 2, clients on nodes `3..3+n`. Server prefix 10.0.0.0/24,
/// client `i` gets 10.0.i.0/24.
pub fn http_star(clients: u32) -> TopologyDoc {
    let mut d = doc(1..=clients + 2, vec![link(1, 2, 2_000, 100_000_000)]);
    d.naps.push(nap(100, 1, "10.0.0.0/24"));
    for i in 0..clients {
        d.links.push(link(2, 3 + i, 500, GBPS));
        d.naps.push(nap(101 + i, 3 + i, &format!("10.0.{}.0/24", i + 1)));
    }
    d
}

/// Random topology with one NAP per node and a border gateway.
/// Node `k` hosts NAP client `k` with prefix 10.k.0.0/16; the border
/// gateway is client 1000 on node 1.
pub fn with_naps_and_border(mut d: TopologyDoc) -> TopologyDoc {
    let ids: Vec<u32> = d.nodes.iter().map(|n| n.id).collect();
    for id in ids {
        d.naps.push(nap(id, id, &format!("10.{id}.0.0/16")));
    }
    d.border = Some(BorderDoc { client: 1000, node: 1 });
    d
}

pub fn device_addr(nap_client: u32, host: u8) -> Ipv4Addr {
    Ipv4Addr::new(10, nap_client as u8, 0, host)
}
