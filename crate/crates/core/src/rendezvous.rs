// SPDX-License-Identifier: Apache-2.0

//! Rendezvous: matches publications of availability with subscriptions.
//!
//! Subscriptions may target an item or a whole scope; publications always
//! target items. Every state change that alters the subscriber set of a
//! published item yields a [`MatchEvent`] so topology management can build,
//! rebuild or tear down the publisher's delivery tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::names::{is_ancestor, IcnName};

/// Identifier of a NAP or border gateway instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub u32);

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "client-{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subscription {
    pub client: ClientId,
    pub name: IcnName,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Publication {
    pub client: ClientId,
    pub name: IcnName,
}

/// Instruction to topology management: (re)build the delivery tree from
/// `publisher` to `subscribers` for `name`. An empty subscriber set means
/// tear-down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchEvent {
    pub name: IcnName,
    pub publisher: ClientId,
    pub subscribers: BTreeSet<ClientId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RendezvousError {
    #[error("publications must target an item name, got scope {0}")]
    ScopePublication(IcnName),
    #[error("match queries take an item name, got scope {0}")]
    ScopeQuery(IcnName),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Rendezvous {
    // name -> subscribed clients; scope names and item names share the map
    subscriptions: BTreeMap<IcnName, BTreeSet<ClientId>>,
    // item name -> publishing clients
    publications: BTreeMap<IcnName, BTreeSet<ClientId>>,
}

impl Rendezvous {
    pub fn new() -> Self {
        Self::default()
    }

    /// Clients whose subscription equals `name` or is an ancestor scope of it.
    pub fn match_set(&self, name: &IcnName) -> Result<BTreeSet<ClientId>, RendezvousError> {
        if name.is_scope() {
            return Err(RendezvousError::ScopeQuery(name.clone()));
        }
        Ok(self.matching_subscribers(name))
    }

    fn matching_subscribers(&self, item: &IcnName) -> BTreeSet<ClientId> {
        let scopes = item.scopes();
        let mut out = BTreeSet::new();
        if let Some(subs) = self.subscriptions.get(item) {
            out.extend(subs);
        }
        for len in 1..=scopes.len() {
            let scope = IcnName::scope(scopes[..len].to_vec()).expect("prefix of a valid name");
            if let Some(subs) = self.subscriptions.get(&scope) {
                out.extend(subs);
            }
        }
        out
    }

    /// Published items covered by `name` (itself, or everything under a scope).
    fn covered_publications<'a>(
        &'a self,
        name: &'a IcnName,
    ) -> Box<dyn Iterator<Item = (&'a IcnName, &'a BTreeSet<ClientId>)> + 'a> {
        if name.is_item() {
            return Box::new(self.publications.get_key_value(name).into_iter());
        }
        // Descendants of a scope are a contiguous range starting at the scope itself.
        Box::new(
            self.publications
                .range(name.clone()..)
                .take_while(move |(item, _)| is_ancestor(name, item).unwrap_or(false)),
        )
    }

    fn events_for(&self, name: &IcnName) -> Vec<MatchEvent> {
        self.covered_publications(name)
            .flat_map(|(item, publishers)| {
                let subscribers = self.matching_subscribers(item);
                publishers.iter().map(move |&publisher| MatchEvent {
                    name: item.clone(),
                    publisher,
                    subscribers: subscribers.clone(),
                })
            })
            .collect()
    }

    /// Records a subscription and returns one event per live publication it
    /// covers, each carrying the full current subscriber set.
    pub fn subscribe(&mut self, client: ClientId, name: IcnName) -> Vec<MatchEvent> {
        self.subscriptions.entry(name.clone()).or_default().insert(client);
        self.events_for(&name)
    }

    /// Removes a subscription. Each publication it covered gets an event with
    /// its updated (possibly empty) subscriber set.
    pub fn unsubscribe(&mut self, client: ClientId, name: &IcnName) -> Vec<MatchEvent> {
        let removed = match self.subscriptions.get_mut(name) {
            Some(set) => {
                let removed = set.remove(&client);
                if set.is_empty() {
                    self.subscriptions.remove(name);
                }
                removed
            }
            None => false,
        };
        if !removed {
            log::warn!("unsubscribe: {client} holds no subscription to {name}");
            return Vec::new();
        }
        self.events_for(name)
    }

    /// Records a publication. Returns an event if at least one subscriber matches.
    pub fn publish_availability(
        &mut self,
        client: ClientId,
        name: IcnName,
    ) -> Result<Option<MatchEvent>, RendezvousError> {
        if name.is_scope() {
            return Err(RendezvousError::ScopePublication(name));
        }
        let subscribers = self.matching_subscribers(&name);
        self.publications.entry(name.clone()).or_default().insert(client);
        Ok((!subscribers.is_empty()).then_some(MatchEvent { name, publisher: client, subscribers }))
    }

    /// Withdraws a publication. If the publisher had subscribers, the returned
    /// event carries an empty subscriber set so its tree is torn down.
    pub fn unpublish(&mut self, client: ClientId, name: &IcnName) -> Option<MatchEvent> {
        let removed = match self.publications.get_mut(name) {
            Some(set) => {
                let removed = set.remove(&client);
                if set.is_empty() {
                    self.publications.remove(name);
                }
                removed
            }
            None => false,
        };
        if !removed {
            log::warn!("unpublish: {client} holds no publication of {name}");
            return None;
        }
        if name.is_scope() || self.matching_subscribers(name).is_empty() {
            return None;
        }
        Some(MatchEvent { name: name.clone(), publisher: client, subscribers: BTreeSet::new() })
    }

    pub fn has_subscription(&self, client: ClientId, name: &IcnName) -> bool {
        self.subscriptions.get(name).is_some_and(|s| s.contains(&client))
    }

    pub fn has_publication(&self, client: ClientId, name: &IcnName) -> bool {
        self.publications.get(name).is_some_and(|s| s.contains(&client))
    }

    pub fn subscriptions(&self) -> impl Iterator<Item = Subscription> + '_ {
        self.subscriptions.iter().flat_map(|(name, clients)| {
            clients.iter().map(move |&client| Subscription { client, name: name.clone() })
        })
    }

    pub fn publications(&self) -> impl Iterator<Item = Publication> + '_ {
        self.publications.iter().flat_map(|(name, clients)| {
            clients.iter().map(move |&client| Publication { client, name: name.clone() })
        })
    }
}
