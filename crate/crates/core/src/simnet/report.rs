// SPDX-License-Identifier: Apache-2.0

//! KPI reports and their canonical serialization.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkBytes {
    pub data_bytes: u64,
    pub control_bytes: u64,
}

/// Bytes of emitted messages, each message counted once at its wire size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Totals {
    pub data_bytes: u64,
    pub control_bytes: u64,
    /// `100 * control / (control + data)`, zero when nothing was sent.
    pub signalling_overhead_pct: f64,
}

impl Totals {
    pub fn new(data_bytes: u64, control_bytes: u64) -> Self {
        Totals { data_bytes, control_bytes, signalling_overhead_pct: overhead_pct(data_bytes, control_bytes) }
    }
}

pub fn overhead_pct(data_bytes: u64, control_bytes: u64) -> f64 {
    let total = data_bytes + control_bytes;
    if total == 0 {
        0.0
    } else {
        100.0 * control_bytes as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlowStats {
    pub delivered: u64,
    pub payload_bytes: u64,
    /// Mean one-way latency from device send (or HTTP request) to delivery.
    pub latency_us: u64,
    /// Population standard deviation of consecutive inter-arrival gaps.
    pub jitter_us: u64,
    /// Payload bits over the span from first send to last delivery.
    pub throughput_bps: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Pending-queue overflow, TTL expiry, and packets still queued at the end.
    pub drops: u64,
    /// Data handed to a gateway off the delivery tree.
    pub fp_deliveries: u64,
    pub duplicates: u64,
    pub off_tree_forwards: u64,
    pub corrupt: u64,
    /// Destinations with no owner, unknown HTTP services.
    pub unroutable: u64,
    pub protocol_violations: u64,
}

/// Emitted message counts by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounts {
    pub data: u64,
    pub pr: u64,
    pub rt: u64,
    pub sr: u64,
    pub tp: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KpiReport {
    pub per_link: BTreeMap<String, LinkBytes>,
    pub totals: Totals,
    pub flows: BTreeMap<String, FlowStats>,
    pub counters: Counters,
    pub messages: MessageCounts,
    /// Simulated time of the last processed event.
    pub end_time_us: u64,
}

impl KpiReport {
    /// Pretty JSON with lexicographically sorted keys.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    pub fn link(&self, label: &str) -> LinkBytes {
        self.per_link.get(label).copied().unwrap_or_default()
    }
}

pub(crate) fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json's Value map is ordered by key
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

/// Per-link data-byte ratio, ICN over baseline. `None` when only the ICN
/// run used the link.
pub fn ratio(icn: u64, ip: u64) -> Option<f64> {
    match (icn, ip) {
        (0, 0) => Some(1.0),
        (_, 0) => None,
        (a, b) => Some(a as f64 / b as f64),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Bottleneck {
    pub link: String,
    pub icn_data_bytes: u64,
    pub ip_data_bytes: u64,
    /// ICN over baseline.
    pub ratio: f64,
    /// Baseline over ICN.
    pub savings_factor: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub icn: KpiReport,
    pub ip: KpiReport,
    pub per_link_ratio: BTreeMap<String, Option<f64>>,
    /// The link carrying the most baseline data bytes.
    pub bottleneck: Bottleneck,
    pub data_bytes_ratio: f64,
    /// ICN minus baseline signalling overhead, in percentage points.
    pub overhead_delta_pct: f64,
}

impl ComparisonReport {
    pub fn new(icn: KpiReport, ip: KpiReport) -> Self {
        let labels: std::collections::BTreeSet<&String> = icn.per_link.keys().chain(ip.per_link.keys()).collect();
        let per_link_ratio = labels
            .iter()
            .map(|&l| ((*l).clone(), ratio(icn.link(l).data_bytes, ip.link(l).data_bytes)))
            .collect();
        // highest baseline load; ties go to the lexicographically first label
        let bottleneck = labels
            .iter()
            .max_by(|a, b| ip.link(a).data_bytes.cmp(&ip.link(b).data_bytes).then(b.cmp(a)))
            .map(|&l| {
                let (i, p) = (icn.link(l).data_bytes, ip.link(l).data_bytes);
                Bottleneck {
                    link: l.clone(),
                    icn_data_bytes: i,
                    ip_data_bytes: p,
                    ratio: ratio(i, p).unwrap_or(f64::MAX),
                    savings_factor: ratio(p, i).unwrap_or(f64::MAX),
                }
            })
            .unwrap_or(Bottleneck { ratio: 1.0, savings_factor: 1.0, ..Default::default() });
        let data_bytes_ratio = ratio(icn.totals.data_bytes, ip.totals.data_bytes).unwrap_or(f64::MAX);
        let overhead_delta_pct = icn.totals.signalling_overhead_pct - ip.totals.signalling_overhead_pct;
        ComparisonReport { icn, ip, per_link_ratio, bottleneck, data_bytes_ratio, overhead_delta_pct }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

/// Jitter as population standard deviation of consecutive gaps, rounded.
pub fn jitter_us(arrivals: &[u64]) -> u64 {
    if arrivals.len() < 3 {
        return 0;
    }
    let gaps: Vec<f64> = arrivals.windows(2).map(|w| w[1].abs_diff(w[0]) as f64).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64;
    var.sqrt().round() as u64
}
