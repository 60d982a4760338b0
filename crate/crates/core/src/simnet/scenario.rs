// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::topology::{TopologyDoc, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Icn,
    #[serde(rename = "ip")]
    IpBaseline,
}

fn default_proto() -> u8 {
    17
}

/// One timed workload action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadOp {
    pub t_us: u64,
    #[serde(flatten)]
    pub action: WorkloadAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum WorkloadAction {
    Attach {
        client: u32,
        addr: Ipv4Addr,
    },
    SendIp {
        client: u32,
        src: Ipv4Addr,
        dst: Ipv4Addr,
        bytes: usize,
        #[serde(default = "default_proto")]
        proto: u8,
    },
    HttpServe {
        client: u32,
        fqdn: String,
    },
    HttpGet {
        client: u32,
        fqdn: String,
        url: String,
        resp_bytes: u32,
    },
    /// A packet arriving at the border gateway from a peering network.
    ExtIn {
        dst: Ipv4Addr,
        bytes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        src: Option<Ipv4Addr>,
    },
}

impl WorkloadOp {
    pub fn attach(t_us: u64, client: u32, addr: Ipv4Addr) -> Self {
        WorkloadOp { t_us, action: WorkloadAction::Attach { client, addr } }
    }

    pub fn send_ip(t_us: u64, client: u32, src: Ipv4Addr, dst: Ipv4Addr, bytes: usize) -> Self {
        WorkloadOp {
            t_us,
            action: WorkloadAction::SendIp { client, src, dst, bytes, proto: default_proto() },
        }
    }

    pub fn http_serve(t_us: u64, client: u32, fqdn: &str) -> Self {
        WorkloadOp { t_us, action: WorkloadAction::HttpServe { client, fqdn: fqdn.into() } }
    }

    pub fn http_get(t_us: u64, client: u32, fqdn: &str, url: &str, resp_bytes: u32) -> Self {
        WorkloadOp {
            t_us,
            action: WorkloadAction::HttpGet { client, fqdn: fqdn.into(), url: url.into(), resp_bytes },
        }
    }

    pub fn ext_in(t_us: u64, dst: Ipv4Addr, bytes: usize) -> Self {
        WorkloadOp { t_us, action: WorkloadAction::ExtIn { dst, bytes, src: None } }
    }
}

/// The scenario document: run mode, seed and workload.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workload: Vec<WorkloadOp>,
}

impl ScenarioDoc {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// A fully specified simulation input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub topology: TopologyDoc,
    pub mode: Mode,
    pub seed: u64,
    pub workload: Vec<WorkloadOp>,
}

impl Scenario {
    pub fn new(topology: TopologyDoc, workload: Vec<WorkloadOp>) -> Self {
        Scenario { topology, mode: Mode::Icn, seed: 1, workload }
    }

    pub fn from_docs(topology: TopologyDoc, doc: ScenarioDoc) -> Self {
        Scenario {
            topology,
            mode: doc.mode.unwrap_or(Mode::Icn),
            seed: doc.seed.unwrap_or(1),
            workload: doc.workload,
        }
    }

    pub fn from_json(topology: &str, scenario: &str) -> Result<Self, ScenarioParseError> {
        let topology = TopologyDoc::from_json(topology)?;
        let doc = ScenarioDoc::from_json(scenario).map_err(|e| ScenarioParseError::Scenario(e.to_string()))?;
        Ok(Scenario::from_docs(topology, doc))
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioParseError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("scenario document: {0}")]
    Scenario(String),
}
