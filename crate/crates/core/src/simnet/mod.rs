// SPDX-License-Identifier: Apache-2.0

//! Discrete-event network simulator with an ICN mode and an IP baseline.
//!
//! Events are ordered by `(time, sequence)`, so a run is a pure function of
//! the topology, workload, seed and [`SimConfig`].

mod engine;
mod report;
mod scenario;

pub use engine::{
    compare, device_payload, run, run_ip_baseline, simulate, HttpDelivery, IpDelivery, Recipient, SentPacket,
    SimConfig, SimError, SimOutcome, TraceRecord, DEFAULT_PEER_SRC, TRACE_HEADER,
};
pub use report::{
    jitter_us, overhead_pct, ratio, Bottleneck, ComparisonReport, Counters, FlowStats, KpiReport, LinkBytes,
    MessageCounts, Totals,
};
pub use scenario::{Mode, Scenario, ScenarioDoc, ScenarioParseError, WorkloadAction, WorkloadOp};
