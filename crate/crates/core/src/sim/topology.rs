// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::bloom::{BloomError, FilterParams, LinkId};
use crate::seed::{stream, Component};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Pub,
    Sub,
    Nap,
    Fw,
    Tm,
}

impl Role {
    /// Nodes that run the forwarding check and relay packets.
    pub fn forwards(self) -> bool {
        matches!(self, Role::Nap | Role::Fw)
    }

    pub fn is_user(self) -> bool {
        matches!(self, Role::Pub | Role::Sub)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Pub => "PUB",
            Role::Sub => "SUB",
            Role::Nap => "NAP",
            Role::Fw => "FW",
            Role::Tm => "TM",
        };
        f.write_str(s)
    }
}

/// One unidirectional link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub lid: LinkId,
}

/// A single problem found while validating a topology document.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyIssue {
    #[error("nodes[{index}]: duplicate node id {id}")]
    DuplicateNode { index: usize, id: NodeId },

    #[error("links[{index}]: unknown node id {id}")]
    UnknownNode { index: usize, id: NodeId },

    #[error("links[{index}]: self loop on node {id}")]
    SelfLoop { index: usize, id: NodeId },

    #[error("links[{index}]: duplicate link between {a} and {b}")]
    DuplicateLink { index: usize, a: NodeId, b: NodeId },

    #[error("links[{index}].{field}: {source}")]
    BadLinkId {
        index: usize,
        field: &'static str,
        source: BloomError,
    },

    #[error("links[{index}]: both directions carry the same link identifier")]
    SharedLinkId { index: usize },

    #[error("node {id} ({role}) must attach to exactly one NAP: {detail}")]
    BadAttachment {
        id: NodeId,
        role: Role,
        detail: String,
    },

    #[error("flows[{index}]: {detail}")]
    BadFlow { index: usize, detail: String },

    #[error("params: {0}")]
    BadParams(BloomError),
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("topology document could not be parsed: {0}")]
    Parse(String),

    #[error("topology failed validation:\n{}", format_issues(.0))]
    Invalid(Vec<TopologyIssue>),
}

fn format_issues(issues: &[TopologyIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    params: ParamsDoc,
    #[serde(default)]
    seed: u64,
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    links: Vec<LinkDoc>,
    #[serde(default)]
    flows: Vec<FlowDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    m: usize,
    k: usize,
    rho_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: NodeId,
    role: Role,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    a: NodeId,
    b: NodeId,
    lid_ab: Option<String>,
    lid_ba: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowDoc {
    #[serde(rename = "pub")]
    publisher: NodeId,
    sub: NodeId,
}

/// A validated single-domain network.
#[derive(Debug, Clone)]
pub struct Topology {
    params: FilterParams,
    seed: u64,
    roles: BTreeMap<NodeId, Role>,
    edges: Vec<Edge>,
    out_edges: BTreeMap<NodeId, Vec<EdgeId>>,
    in_edges: BTreeMap<NodeId, Vec<EdgeId>>,
    flows: Vec<(NodeId, NodeId)>,
}

/// Parses and validates a TOML topology document.
///
/// ```toml
/// seed = 7
/// [params]
/// m = 256
/// k = 5
/// rho_max = 0.5
/// [[nodes]]
/// id = 1
/// role = "PUB"
/// [[links]]
/// a = 1
/// b = 2
/// lid_ab = "..."   # optional hex, derived from `seed` when absent
/// [[flows]]        # optional
/// pub = 1
/// sub = 3
/// ```
pub fn load_topology(text: &str) -> Result<Topology, TopologyError> {
    let doc: TopologyDoc = toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
    let params = FilterParams::new(doc.params.m, doc.params.k, doc.params.rho_max)
        .map_err(|e| TopologyError::Invalid(vec![TopologyIssue::BadParams(e)]))?;
    let mut builder = TopologyBuilder::new(params, doc.seed);
    for n in &doc.nodes {
        builder.node(n.id, n.role);
    }
    for l in &doc.links {
        builder.link_spec(l.a, l.b, l.lid_ab.clone(), l.lid_ba.clone());
    }
    for f in &doc.flows {
        builder.flow(f.publisher, f.sub);
    }
    builder.build()
}

/// Incremental construction with the same validation as [`load_topology`].
#[derive(Debug, Clone)]
pub struct TopologyBuilder {
    params: FilterParams,
    seed: u64,
    nodes: Vec<(NodeId, Role)>,
    links: Vec<(NodeId, NodeId, Option<String>, Option<String>)>,
    flows: Vec<(NodeId, NodeId)>,
}

impl TopologyBuilder {
    pub fn new(params: FilterParams, seed: u64) -> Self {
        Self {
            params,
            seed,
            nodes: Vec::new(),
            links: Vec::new(),
            flows: Vec::new(),
        }
    }

    pub fn node(&mut self, id: NodeId, role: Role) -> &mut Self {
        self.nodes.push((id, role));
        self
    }

    /// Bidirectional link with both link identifiers derived from the seed.
    pub fn link(&mut self, a: NodeId, b: NodeId) -> &mut Self {
        self.link_spec(a, b, None, None)
    }

    /// Bidirectional link with explicit identifiers.
    pub fn link_with(&mut self, a: NodeId, b: NodeId, ab: &LinkId, ba: &LinkId) -> &mut Self {
        self.link_spec(a, b, Some(ab.to_hex()), Some(ba.to_hex()))
    }

    fn link_spec(
        &mut self,
        a: NodeId,
        b: NodeId,
        ab: Option<String>,
        ba: Option<String>,
    ) -> &mut Self {
        self.links.push((a, b, ab, ba));
        self
    }

    pub fn flow(&mut self, publisher: NodeId, sub: NodeId) -> &mut Self {
        self.flows.push((publisher, sub));
        self
    }

    pub fn build(&self) -> Result<Topology, TopologyError> {
        let params = self.params;
        let mut issues = Vec::new();
        let mut roles = BTreeMap::new();
        for (index, &(id, role)) in self.nodes.iter().enumerate() {
            if roles.insert(id, role).is_some() {
                issues.push(TopologyIssue::DuplicateNode { index, id });
            }
        }

        let mut edges = Vec::new();
        let mut seen_pairs = BTreeSet::new();
        for (index, (a, b, ab, ba)) in self.links.iter().enumerate() {
            let (a, b) = (*a, *b);
            let mut ok = true;
            for id in [a, b] {
                if !roles.contains_key(&id) {
                    issues.push(TopologyIssue::UnknownNode { index, id });
                    ok = false;
                }
            }
            if a == b {
                issues.push(TopologyIssue::SelfLoop { index, id: a });
                ok = false;
            }
            if !seen_pairs.insert((a.min(b), a.max(b))) {
                issues.push(TopologyIssue::DuplicateLink { index, a, b });
                ok = false;
            }
            let mut lid = |spec: &Option<String>, field: &'static str, dir: u64| match spec {
                Some(hex) => LinkId::from_hex(&params, hex)
                    .map_err(|source| {
                        issues.push(TopologyIssue::BadLinkId {
                            index,
                            field,
                            source,
                        })
                    })
                    .ok(),
                None => Some(LinkId::random(
                    &params,
                    &mut stream(self.seed, Component::LinkIds, 2 * index as u64 + dir),
                )),
            };
            let lid_ab = lid(ab, "lid_ab", 0);
            let lid_ba = lid(ba, "lid_ba", 1);
            let (Some(lid_ab), Some(lid_ba)) = (lid_ab, lid_ba) else {
                continue;
            };
            if lid_ab == lid_ba {
                issues.push(TopologyIssue::SharedLinkId { index });
                ok = false;
            }
            if ok {
                edges.push(Edge {
                    src: a,
                    dst: b,
                    lid: lid_ab,
                });
                edges.push(Edge {
                    src: b,
                    dst: a,
                    lid: lid_ba,
                });
            }
        }

        let mut out_edges: BTreeMap<NodeId, Vec<EdgeId>> =
            roles.keys().map(|&id| (id, Vec::new())).collect();
        let mut in_edges = out_edges.clone();
        for (i, e) in edges.iter().enumerate() {
            out_edges.get_mut(&e.src).unwrap().push(EdgeId(i));
            in_edges.get_mut(&e.dst).unwrap().push(EdgeId(i));
        }
        for list in out_edges.values_mut() {
            list.sort_by_key(|e| edges[e.0].dst);
        }
        for list in in_edges.values_mut() {
            list.sort_by_key(|e| edges[e.0].src);
        }

        for (&id, &role) in &roles {
            if !role.is_user() {
                continue;
            }
            let neighbours: Vec<NodeId> = out_edges[&id].iter().map(|e| edges[e.0].dst).collect();
            let detail = match neighbours.as_slice() {
                [n] if roles[n] == Role::Nap => continue,
                [n] => format!("attached to {n} which is {}", roles[n]),
                [] => "no links".to_string(),
                many => format!("{} links", many.len()),
            };
            issues.push(TopologyIssue::BadAttachment { id, role, detail });
        }

        for (index, &(p, s)) in self.flows.iter().enumerate() {
            if roles.get(&p) != Some(&Role::Pub) {
                issues.push(TopologyIssue::BadFlow {
                    index,
                    detail: format!("{p} is not a PUB node"),
                });
            }
            if roles.get(&s) != Some(&Role::Sub) {
                issues.push(TopologyIssue::BadFlow {
                    index,
                    detail: format!("{s} is not a SUB node"),
                });
            }
        }

        if !issues.is_empty() {
            return Err(TopologyError::Invalid(issues));
        }
        Ok(Topology {
            params,
            seed: self.seed,
            roles,
            edges,
            out_edges,
            in_edges,
            flows: self.flows.clone(),
        })
    }
}

impl Topology {
    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn role(&self, id: NodeId) -> Option<Role> {
        self.roles.get(&id).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, Role)> + '_ {
        self.roles.iter().map(|(&id, &r)| (id, r))
    }

    pub fn nodes_with_role(&self, role: Role) -> Vec<NodeId> {
        self.nodes()
            .filter(|&(_, r)| r == role)
            .map(|(id, _)| id)
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Outgoing edges sorted by destination id.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        self.out_edges.get(&node).map_or(&[], Vec::as_slice)
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        self.in_edges.get(&node).map_or(&[], Vec::as_slice)
    }

    /// The opposite direction of a link.
    pub fn reverse(&self, id: EdgeId) -> EdgeId {
        // links are pushed as (a->b, b->a) pairs
        EdgeId(id.0 ^ 1)
    }

    /// The NAP a user node attaches to.
    pub fn attachment(&self, user: NodeId) -> Option<NodeId> {
        match self.role(user) {
            Some(r) if r.is_user() => self.out_edges(user).first().map(|e| self.edge(*e).dst),
            _ => None,
        }
    }

    /// Flows listed in the document.
    pub fn flows(&self) -> &[(NodeId, NodeId)] {
        &self.flows
    }

    /// Hop distances from `src`, relaying only through forwarding nodes.
    pub fn distances_from(&self, src: NodeId) -> BTreeMap<NodeId, u32> {
        let mut dist = BTreeMap::new();
        dist.insert(src, 0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if u != src && !self.roles[&u].forwards() {
                continue;
            }
            for e in self.out_edges(u) {
                let v = self.edge(*e).dst;
                if !dist.contains_key(&v) {
                    dist.insert(v, dist[&u] + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Longest shortest-path hop count over all connected ordered pairs.
    pub fn diameter(&self) -> u32 {
        self.roles
            .keys()
            .map(|&s| self.distances_from(s).into_values().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Hop budget for any packet: twice the diameter.
    pub fn ttl(&self) -> u32 {
        (2 * self.diameter()).max(1)
    }

    /// `PUB(0) - NAP(1) - FW(2) - ... - NAP(hops) - SUB(hops + 1)`: a target
    /// exactly `hops` forwarding checks past the attacker's NAP.
    pub fn chain(params: FilterParams, seed: u64, hops: u32) -> Topology {
        assert!(hops >= 1, "chain needs at least one hop past the NAP");
        let mut b = TopologyBuilder::new(params, seed);
        b.node(NodeId(0), Role::Pub).node(NodeId(1), Role::Nap);
        for i in 2..=hops {
            let role = if i == hops { Role::Nap } else { Role::Fw };
            b.node(NodeId(i), role);
        }
        b.node(NodeId(hops + 1), Role::Sub);
        for i in 0..=hops {
            b.link(NodeId(i), NodeId(i + 1));
        }
        b.build().expect("chain topology is valid by construction")
    }
}

/// Shape of a generated topology.
#[derive(Debug, Clone, Copy)]
pub struct RandomTopology {
    /// Total node count, users included.
    pub nodes: usize,
    /// Probability of each extra core link beyond the spanning tree.
    pub extra_link_prob: f64,
}

/// Seeded random domain: a connected NAP/FW core (random spanning tree plus
/// independent extra links) with publishers and subscribers hanging off
/// random NAPs. Needs at least 4 nodes.
pub fn random_topology(params: FilterParams, shape: RandomTopology, seed: u64) -> Topology {
    assert!(shape.nodes >= 4, "random topology needs at least 4 nodes");
    let mut rng = stream(seed, Component::Topology, 0);
    let users = (shape.nodes / 4).max(2);
    let core = shape.nodes - users;
    let naps = core.div_ceil(3).max(1);

    let mut b = TopologyBuilder::new(params, seed);
    for i in 0..core {
        let role = if i < naps { Role::Nap } else { Role::Fw };
        b.node(NodeId(i as u32), role);
    }
    let mut linked = BTreeSet::new();
    for i in 1..core {
        let j = rng.gen_range(0..i);
        linked.insert((j, i));
    }
    for i in 0..core {
        for j in i + 1..core {
            if !linked.contains(&(i, j)) && rng.gen_bool(shape.extra_link_prob) {
                linked.insert((i, j));
            }
        }
    }
    for &(i, j) in &linked {
        b.link(NodeId(i as u32), NodeId(j as u32));
    }
    for u in 0..users {
        let id = NodeId((core + u) as u32);
        // alternate so both roles are present
        let role = if u % 2 == 0 { Role::Pub } else { Role::Sub };
        b.node(id, role);
        b.link(id, NodeId(rng.gen_range(0..naps) as u32));
    }
    b.build()
        .expect("generated topology is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODES: &str = r#"
seed = 3
[params]
m = 256
k = 5
rho_max = 0.5

[[nodes]]
id = 1
role = "NAP"
[[nodes]]
id = 2
role = "FW"

[[links]]
a = 1
b = 2
"#;

    #[test]
    fn loads_minimal_document() {
        let t = load_topology(TWO_NODES).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.edges().len(), 2);
        assert_ne!(t.edges()[0].lid, t.edges()[1].lid);
        assert_eq!(t.reverse(EdgeId(0)), EdgeId(1));
        assert_eq!(t.edge(EdgeId(1)).src, NodeId(2));
    }

    #[test]
    fn rejects_duplicate_node() {
        let doc = TWO_NODES.replace("id = 2", "id = 1");
        match load_topology(&doc) {
            Err(TopologyError::Invalid(issues)) => {
                assert!(issues.contains(&TopologyIssue::DuplicateNode {
                    index: 1,
                    id: NodeId(1)
                }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_every_issue() {
        let doc = r#"
[params]
m = 16
k = 2
rho_max = 1.0
[[nodes]]
id = 1
role = "PUB"
[[nodes]]
id = 2
role = "FW"
[[links]]
a = 1
b = 2
[[links]]
a = 2
b = 9
[[links]]
a = 2
b = 2
lid_ab = "0301"
"#;
        let Err(TopologyError::Invalid(issues)) = load_topology(doc) else {
            panic!("expected validation failure");
        };
        assert!(issues
            .iter()
            .any(|i| matches!(i, TopologyIssue::UnknownNode { index: 1, .. })));
        assert!(issues
            .iter()
            .any(|i| matches!(i, TopologyIssue::SelfLoop { index: 2, .. })));
        assert!(issues
            .iter()
            .any(|i| matches!(i, TopologyIssue::BadLinkId { index: 2, .. })));
        assert!(issues
            .iter()
            .any(|i| matches!(i, TopologyIssue::BadAttachment { .. })));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = load_topology("[params]\nm = \"wide\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_field_rejected() {
        let doc = TWO_NODES.replace("seed = 3", "seed = 3\ncolour = \"red\"");
        assert!(matches!(load_topology(&doc), Err(TopologyError::Parse(_))));
    }

    #[test]
    fn shared_lid_rejected() {
        let doc = TWO_NODES.replace(
            "b = 2\n",
            "b = 2\nlid_ab = \"1f000000000000000000000000000000000000000000000000000000000000ff\"\nlid_ba = \"1f000000000000000000000000000000000000000000000000000000000000ff\"\n",
        );
        let Err(TopologyError::Invalid(issues)) = load_topology(&doc) else {
            panic!();
        };
        // 13 bits set, not 5
        assert!(matches!(issues[0], TopologyIssue::BadLinkId { .. }));

        let lid = "1f00000000000000000000000000000000000000000000000000000000000000";
        let doc = TWO_NODES.replace(
            "b = 2\n",
            &format!("b = 2\nlid_ab = \"{lid}\"\nlid_ba = \"{lid}\"\n"),
        );
        let Err(TopologyError::Invalid(issues)) = load_topology(&doc) else {
            panic!();
        };
        assert_eq!(issues, vec![TopologyIssue::SharedLinkId { index: 0 }]);
    }

    #[test]
    fn chain_is_deterministic() {
        let p = FilterParams::new(256, 5, 0.5).unwrap();
        let a = Topology::chain(p, 11, 4);
        let b = Topology::chain(p, 11, 4);
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.diameter(), 5);
        assert_eq!(a.ttl(), 10);
        assert_eq!(a.attachment(NodeId(0)), Some(NodeId(1)));
        assert_eq!(a.attachment(NodeId(5)), Some(NodeId(4)));
        assert_ne!(Topology::chain(p, 12, 4).edges(), a.edges());
    }

    #[test]
    fn random_topologies_validate() {
        let p = FilterParams::new(256, 5, 0.5).unwrap();
        for seed in 0..50 {
            let n = 10 + (seed as usize % 41);
            let t = random_topology(
                p,
                RandomTopology {
                    nodes: n,
                    extra_link_prob: 0.1,
                },
                seed,
            );
            assert_eq!(t.node_count(), n);
            assert!(!t.nodes_with_role(Role::Pub).is_empty());
            assert!(!t.nodes_with_role(Role::Sub).is_empty());
            // every node reachable from every publisher
            for p in t.nodes_with_role(Role::Pub) {
                assert_eq!(t.distances_from(p).len(), n);
            }
        }
    }
}
