// SPDX-License-Identifier: Apache-2.0

//! The ICN namespace and the mappings from IPv4 addresses, subnets and URLs
//! into it.
//!
//! Names form a rooted hierarchy of scopes. A scope-level name addresses an
//! interior node (subscribing to it covers every descendant item); an item
//! name addresses a leaf to which data is published.
//!
//! The IP namespace is rooted at [`ROOT_IP`] and split into an internal
//! (`I`) and an external (`O`) branch. Below the branch each of the first
//! three address octets forms one scope level and the last octet is the
//! item, so `/8`, `/16` and `/24` subnets map onto scopes.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of path elements (scopes plus item) in a name.
pub const MAX_DEPTH: usize = 16;

/// Root scope of the IP namespace (the bytes `"ip"`).
pub const ROOT_IP: NsId = NsId(0x6970);
/// Root scope of the HTTP namespace (the bytes `"http"`).
pub const ROOT_HTTP: NsId = NsId(0x6874_7470);

const LOC_INTERNAL: NsId = NsId(1);
const LOC_EXTERNAL: NsId = NsId(2);
const ROLE_REQUEST: NsId = NsId(1);
const ROLE_RESPONSE: NsId = NsId(2);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("empty name path")]
    Empty,
    #[error("name has {0} path elements, at most {MAX_DEPTH} allowed")]
    TooDeep(usize),
    #[error("malformed path element {0:?}")]
    BadElement(String),
    #[error("item marker `~` is only allowed on the final path element")]
    MisplacedItem,
    #[error("name must contain at least one scope")]
    NoScope,
    #[error("expected a scope-level name, got item name {0}")]
    NotAScope(IcnName),
    #[error("expected an item name, got scope {0}")]
    NotAnItem(IcnName),
    #[error("unsupported prefix length /{0}; only /8, /16 and /24 map onto scopes")]
    UnsupportedPrefix(u8),
    #[error("prefix {0} has host bits set")]
    HostBitsSet(Ipv4Prefix),
    #[error("malformed IPv4 prefix {0:?}")]
    BadPrefix(String),
}

/// A 64-bit namespace identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NsId(pub u64);

impl fmt::Display for NsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for NsId {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s.len() > 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(NameError::BadElement(s.to_string()));
        }
        u64::from_str_radix(s, 16)
            .map(NsId)
            .map_err(|_| NameError::BadElement(s.to_string()))
    }
}

/// Whether an address belongs to the operator's network or lies outside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Locality {
    Internal,
    External,
}

impl Locality {
    fn scope(self) -> NsId {
        match self {
            Locality::Internal => LOC_INTERNAL,
            Locality::External => LOC_EXTERNAL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HttpRole {
    Request,
    Response,
}

/// A hierarchical information name.
///
/// Ordering is lexicographic on the scope path, then scope-level before
/// item. All names below a given scope therefore form one contiguous range.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IcnName {
    scopes: Vec<NsId>,
    item: Option<NsId>,
}

impl IcnName {
    pub fn scope(scopes: Vec<NsId>) -> Result<Self, NameError> {
        Self::new(scopes, None)
    }

    pub fn item(scopes: Vec<NsId>, item: NsId) -> Result<Self, NameError> {
        Self::new(scopes, Some(item))
    }

    pub fn new(scopes: Vec<NsId>, item: Option<NsId>) -> Result<Self, NameError> {
        if scopes.is_empty() {
            return Err(NameError::NoScope);
        }
        let depth = scopes.len() + usize::from(item.is_some());
        if depth > MAX_DEPTH {
            return Err(NameError::TooDeep(depth));
        }
        Ok(IcnName { scopes, item })
    }

    pub fn scopes(&self) -> &[NsId] {
        &self.scopes
    }

    pub fn item_id(&self) -> Option<NsId> {
        self.item
    }

    pub fn is_item(&self) -> bool {
        self.item.is_some()
    }

    pub fn is_scope(&self) -> bool {
        self.item.is_none()
    }

    /// Number of path elements, the item included.
    pub fn depth(&self) -> usize {
        self.scopes.len() + usize::from(self.item.is_some())
    }

    /// All path elements in order, the item (if any) last.
    pub fn elements(&self) -> impl Iterator<Item = NsId> + '_ {
        self.scopes.iter().copied().chain(self.item)
    }

    /// The scope-level name containing this item (or the parent scope of a
    /// scope-level name). `None` at the root.
    pub fn parent(&self) -> Option<IcnName> {
        match self.item {
            Some(_) => Some(IcnName { scopes: self.scopes.clone(), item: None }),
            None if self.scopes.len() > 1 => Some(IcnName {
                scopes: self.scopes[..self.scopes.len() - 1].to_vec(),
                item: None,
            }),
            None => None,
        }
    }
}

impl fmt::Display for IcnName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.scopes {
            write!(f, "/{s}")?;
        }
        if let Some(item) = self.item {
            write!(f, "/~{item}")?;
        }
        Ok(())
    }
}

impl FromStr for IcnName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name(s)
    }
}

impl Serialize for IcnName {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IcnName {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_name(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses the textual form `/<hex>/.../<hex>`, where a final element
/// prefixed with `~` is the item.
pub fn parse_name(text: &str) -> Result<IcnName, NameError> {
    let rest = text
        .strip_prefix('/')
        .ok_or_else(|| NameError::BadElement(text.to_string()))?;
    if rest.is_empty() {
        return Err(NameError::Empty);
    }
    let parts: Vec<&str> = rest.split('/').collect();
    if parts.len() > MAX_DEPTH {
        return Err(NameError::TooDeep(parts.len()));
    }
    let mut scopes = Vec::with_capacity(parts.len());
    let mut item = None;
    for (i, part) in parts.iter().enumerate() {
        if let Some(hex) = part.strip_prefix('~') {
            if i + 1 != parts.len() {
                return Err(NameError::MisplacedItem);
            }
            item = Some(hex.parse()?);
        } else {
            scopes.push(part.parse()?);
        }
    }
    IcnName::new(scopes, item)
}

pub fn render_name(name: &IcnName) -> String {
    name.to_string()
}

/// Item name for an IPv4 address: `[ROOT_IP, loc, o1, o2, o3]` with item `o4`.
pub fn name_for_ip(addr: Ipv4Addr, loc: Locality) -> IcnName {
    let [a, b, c, d] = addr.octets();
    IcnName {
        scopes: vec![
            ROOT_IP,
            loc.scope(),
            NsId(a.into()),
            NsId(b.into()),
            NsId(c.into()),
        ],
        item: Some(NsId(d.into())),
    }
}

/// Inverse of [`name_for_ip`]; `None` for names outside the IP namespace.
pub fn ip_for_name(name: &IcnName) -> Option<(Ipv4Addr, Locality)> {
    let item = name.item?;
    let [root, loc, a, b, c] = name.scopes.as_slice() else {
        return None;
    };
    if *root != ROOT_IP {
        return None;
    }
    let loc = match *loc {
        LOC_INTERNAL => Locality::Internal,
        LOC_EXTERNAL => Locality::External,
        _ => return None,
    };
    let octet = |id: NsId| u8::try_from(id.0).ok();
    Some((
        Ipv4Addr::new(octet(*a)?, octet(*b)?, octet(*c)?, octet(item)?),
        loc,
    ))
}

/// Scope-level name covering every address of a `/8`, `/16` or `/24`.
pub fn subnet_scope(prefix: Ipv4Prefix, loc: Locality) -> Result<IcnName, NameError> {
    let octets = match prefix.prefix_len() {
        8 => 1,
        16 => 2,
        24 => 3,
        other => return Err(NameError::UnsupportedPrefix(other)),
    };
    if prefix.network() != prefix.addr() {
        return Err(NameError::HostBitsSet(prefix));
    }
    let mut scopes = vec![ROOT_IP, loc.scope()];
    scopes.extend(prefix.addr().octets()[..octets].iter().map(|&o| NsId(o.into())));
    Ok(IcnName { scopes, item: None })
}

/// The `O` scope: every address outside the operator's network.
pub fn external_scope() -> IcnName {
    IcnName { scopes: vec![ROOT_IP, LOC_EXTERNAL], item: None }
}

/// The `I` scope: every address inside the operator's network.
pub fn internal_scope() -> IcnName {
    IcnName { scopes: vec![ROOT_IP, LOC_INTERNAL], item: None }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET_BASIS, |hash, &b| (hash ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Item name `[ROOT_HTTP, H(fqdn), role]` with item `H(url)`.
pub fn name_for_http(fqdn: &str, role: HttpRole, url: &str) -> IcnName {
    let role = match role {
        HttpRole::Request => ROLE_REQUEST,
        HttpRole::Response => ROLE_RESPONSE,
    };
    IcnName {
        scopes: vec![ROOT_HTTP, NsId(fnv1a64(fqdn.as_bytes())), role],
        item: Some(NsId(fnv1a64(url.as_bytes()))),
    }
}

/// Scope covering every request addressed to `fqdn`.
pub fn http_request_scope(fqdn: &str) -> IcnName {
    IcnName {
        scopes: vec![ROOT_HTTP, NsId(fnv1a64(fqdn.as_bytes())), ROLE_REQUEST],
        item: None,
    }
}

/// True iff `scope`'s path is a (non-strict) prefix of `name`'s scope path.
pub fn is_ancestor(scope: &IcnName, name: &IcnName) -> Result<bool, NameError> {
    if scope.is_item() {
        return Err(NameError::NotAScope(scope.clone()));
    }
    Ok(name.scopes.starts_with(&scope.scopes))
}

/// An IPv4 CIDR block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ipv4Prefix {
    addr: Ipv4Addr,
    len: u8,
}

impl Ipv4Prefix {
    pub fn new(addr: Ipv4Addr, len: u8) -> Result<Self, NameError> {
        if len > 32 {
            return Err(NameError::BadPrefix(format!("{addr}/{len}")));
        }
        Ok(Ipv4Prefix { addr, len })
    }

    pub fn addr(&self) -> Ipv4Addr {
        self.addr
    }

    pub fn prefix_len(&self) -> u8 {
        self.len
    }

    fn mask(&self) -> u32 {
        u32::MAX.checked_shl(32 - u32::from(self.len)).unwrap_or(0)
    }

    pub fn network(&self) -> Ipv4Addr {
        Ipv4Addr::from(u32::from(self.addr) & self.mask())
    }

    pub fn contains(&self, addr: Ipv4Addr) -> bool {
        u32::from(addr) & self.mask() == u32::from(self.network())
    }
}

impl fmt::Display for Ipv4Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl FromStr for Ipv4Prefix {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NameError::BadPrefix(s.to_string());
        let (addr, len) = s.split_once('/').ok_or_else(bad)?;
        let addr: Ipv4Addr = addr.parse().map_err(|_| bad())?;
        let len: u8 = len.parse().map_err(|_| bad())?;
        Ipv4Prefix::new(addr, len).map_err(|_| bad())
    }
}

impl Serialize for Ipv4Prefix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ipv4Prefix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
