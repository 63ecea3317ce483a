// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io;

use thiserror::Error;

use crate::attachment::{
    issue_credential, security_check, AttachmentError, CheckOutcome, Credential, MasterKeys,
    RejectReason,
};
use crate::bloom::{build_fid, membership_check, BloomError, ForwardingId};
use crate::sim::topology::{EdgeId, NodeId, Role, Topology};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("node {0} is not a publisher")]
    NotPublisher(NodeId),

    #[error("node {0} is not a subscriber")]
    NotSubscriber(NodeId),

    #[error("no path from {from} to {to}")]
    Unreachable { from: NodeId, to: NodeId },

    #[error(transparent)]
    Bloom(#[from] BloomError),

    #[error(transparent)]
    Attachment(#[from] AttachmentError),
}

/// Ordered edges from a publisher, through its NAP, to a subscriber.
///
/// The first edge is the publisher's access link; `len()` counts every
/// link, so a `PUB - NAP - SUB` path has length 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.contains(&e)
    }
}

/// Shortest path by hop count; among equal-length routes the next hop with
/// the smallest node id wins at every step. Only NAP and FW nodes relay.
pub fn compute_path(topo: &Topology, publisher: NodeId, sub: NodeId) -> Result<Path, SimError> {
    match topo.role(publisher) {
        None => return Err(SimError::UnknownNode(publisher)),
        Some(Role::Pub) => {}
        Some(_) => return Err(SimError::NotPublisher(publisher)),
    }
    match topo.role(sub) {
        None => return Err(SimError::UnknownNode(sub)),
        Some(Role::Sub) => {}
        Some(_) => return Err(SimError::NotSubscriber(sub)),
    }
    shortest_path(topo, publisher, sub)
}

/// Same tie rule as [`compute_path`] between arbitrary nodes.
pub fn shortest_path(topo: &Topology, from: NodeId, to: NodeId) -> Result<Path, SimError> {
    let unreachable = SimError::Unreachable { from, to };
    if from == to {
        return Err(unreachable);
    }
    // reverse breadth-first search from the destination
    let mut dist: BTreeMap<NodeId, u32> = BTreeMap::from([(to, 0)]);
    let mut queue = VecDeque::from([to]);
    while let Some(v) = queue.pop_front() {
        for e in topo.in_edges(v) {
            let u = topo.edge(*e).src;
            if dist.contains_key(&u) {
                continue;
            }
            let relays = topo.role(u).is_some_and(Role::forwards);
            if relays || u == from {
                dist.insert(u, dist[&v] + 1);
                if relays {
                    queue.push_back(u);
                }
            }
        }
    }
    let Some(&total) = dist.get(&from) else {
        return Err(unreachable);
    };
    let mut edges = Vec::with_capacity(total as usize);
    let mut here = from;
    while here != to {
        let want = dist[&here] - 1;
        // out edges are sorted by destination id
        let next = topo
            .out_edges(here)
            .iter()
            .copied()
            .find(|e| dist.get(&topo.edge(*e).dst) == Some(&want))
            .expect("distance labels are consistent");
        edges.push(next);
        here = topo.edge(next).dst;
    }
    Ok(Path { edges })
}

/// TM step: OR of the link identifiers along the path.
pub fn build_path_fid(topo: &Topology, path: &Path) -> Result<ForwardingId, BloomError> {
    let lids: Vec<_> = path
        .edges
        .iter()
        .map(|e| topo.edge(*e).lid.clone())
        .collect();
    build_fid(&lids, topo.params())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Header {
    /// Publisher to NAP leg.
    Credential(Credential),
    /// Everything after ingress, and every packet in plain LIPSIN.
    Plain(ForwardingId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub header: Header,
    pub payload: Vec<u8>,
    /// Set when the packet arrives on a user-facing interface.
    pub ingress: bool,
}

impl Packet {
    pub fn with_credential(cred: Credential, payload: Vec<u8>) -> Self {
        Packet {
            header: Header::Credential(cred),
            payload,
            ingress: false,
        }
    }

    pub fn with_fid(fid: ForwardingId, payload: Vec<u8>) -> Self {
        Packet {
            header: Header::Plain(fid),
            payload,
            ingress: false,
        }
    }

    pub fn fid(&self) -> Option<&ForwardingId> {
        match &self.header {
            Header::Plain(f) => Some(f),
            Header::Credential(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForwardDecision {
    /// Header rewritten to the plaintext identifier; egress may be empty.
    Forward {
        packet: Packet,
        egress: Vec<EdgeId>,
    },
    Rejected(RejectReason),
}

/// Ingress pipeline of a NAP for a packet from a directly attached user:
/// one security check, header swap to the plaintext identifier, then the
/// forwarding check on every outgoing interface except the arrival one.
pub fn nap_ingress(
    pkt: Packet,
    keys: &MasterKeys,
    topo: &Topology,
    nap: NodeId,
    arrival: Option<EdgeId>,
) -> ForwardDecision {
    debug_assert!(pkt.ingress, "nap_ingress called for a non-ingress packet");
    debug_assert_eq!(topo.role(nap), Some(Role::Nap));
    let Header::Credential(cred) = &pkt.header else {
        return ForwardDecision::Rejected(RejectReason::MissingCredential);
    };
    match security_check(cred, keys, topo.params().m()) {
        CheckOutcome::Reject(reason) => ForwardDecision::Rejected(reason),
        CheckOutcome::Accept(fid) => {
            let packet = Packet {
                header: Header::Plain(fid),
                payload: pkt.payload,
                ingress: false,
            };
            let egress = fw_forward(&packet, topo, nap, arrival);
            ForwardDecision::Forward { packet, egress }
        }
    }
}

/// Forwarding check at any NAP or FW node: every outgoing edge whose link
/// identifier is contained in the packet's identifier, never the reverse
/// of the arrival edge. Packets still carrying a credential are dropped.
pub fn fw_forward(
    pkt: &Packet,
    topo: &Topology,
    node: NodeId,
    arrival: Option<EdgeId>,
) -> Vec<EdgeId> {
    let Some(fid) = pkt.fid() else {
        return Vec::new();
    };
    let back = arrival.map(|e| topo.reverse(e));
    topo.out_edges(node)
        .iter()
        .copied()
        .filter(|&e| Some(e) != back && membership_check(fid, &topo.edge(e).lid))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Publishers hold the plaintext identifier; no ingress check.
    LipsinPlain,
    /// Publishers hold `{eFId, h}`; the NAP verifies and decrypts.
    EfidSecured,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::LipsinPlain => "lipsin",
            Scheme::EfidSecured => "efid",
        }
    }
}

/// Ingress behaviour of every NAP in a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NapPolicy {
    pub scheme: Scheme,
    /// Drop ingress packets whose plaintext identifier is filled above
    /// this fraction. Off unless set.
    pub max_fill: Option<f64>,
}

impl NapPolicy {
    pub fn secured() -> Self {
        NapPolicy {
            scheme: Scheme::EfidSecured,
            max_fill: None,
        }
    }

    pub fn plain() -> Self {
        NapPolicy {
            scheme: Scheme::LipsinPlain,
            max_fill: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub security_checks: u64,
    pub rejected: u64,
    pub transmissions: u64,
    pub ttl_drops: u64,
}

/// Outcome of one injected packet and all of its copies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Propagation {
    /// Every node any copy arrived at.
    pub visited: BTreeSet<NodeId>,
    /// Edges in transmission order, repeats included.
    pub traversed: Vec<EdgeId>,
    pub rejected: Option<RejectReason>,
    pub ttl_drops: u64,
}

/// One simulated domain with a current key snapshot.
///
/// Single-threaded and deterministic: copies are processed breadth-first
/// and egress edges in ascending destination order.
#[derive(Debug, Clone)]
pub struct Simulator<'t> {
    topo: &'t Topology,
    keys: MasterKeys,
    policy: NapPolicy,
    ttl: u32,
    counters: Counters,
}

impl<'t> Simulator<'t> {
    pub fn new(topo: &'t Topology, keys: MasterKeys, policy: NapPolicy) -> Self {
        Self {
            topo,
            keys,
            policy,
            ttl: topo.ttl(),
            counters: Counters::default(),
        }
    }

    pub fn topology(&self) -> &'t Topology {
        self.topo
    }

    pub fn keys(&self) -> &MasterKeys {
        &self.keys
    }

    pub fn policy(&self) -> NapPolicy {
        self.policy
    }

    /// Installs a new key snapshot, e.g. after rotation.
    pub fn set_keys(&mut self, keys: MasterKeys) {
        self.keys = keys;
    }

    pub fn ttl(&self) -> u32 {
        self.ttl
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    /// Sends `pkt` from user node `from` over its access link and follows
    /// every copy until it is consumed, dropped, or runs out of TTL.
    pub fn inject(&mut self, from: NodeId, mut pkt: Packet) -> Result<Propagation, SimError> {
        let topo = self.topo;
        let access = *topo
            .out_edges(from)
            .first()
            .ok_or(SimError::UnknownNode(from))?;
        let nap = topo.edge(access).dst;
        let mut prop = Propagation::default();
        self.transmit(&mut prop, access);
        prop.visited.insert(nap);
        pkt.ingress = topo.role(from).is_some_and(Role::is_user);

        let (pkt, egress) = match self.ingress(pkt, nap, access) {
            Ok(v) => v,
            Err(reason) => {
                self.counters.rejected += 1;
                prop.rejected = Some(reason);
                return Ok(prop);
            }
        };

        let mut queue = VecDeque::new();
        self.fan_out(&mut prop, &mut queue, &egress, 1);
        while let Some((edge, hops)) = queue.pop_front() {
            let node = topo.edge(edge).dst;
            prop.visited.insert(node);
            if !topo.role(node).is_some_and(Role::forwards) {
                continue;
            }
            let egress = fw_forward(&pkt, topo, node, Some(edge));
            self.fan_out(&mut prop, &mut queue, &egress, hops);
        }
        Ok(prop)
    }

    fn ingress(
        &mut self,
        pkt: Packet,
        nap: NodeId,
        access: EdgeId,
    ) -> Result<(Packet, Vec<EdgeId>), RejectReason> {
        let topo = self.topo;
        let (pkt, egress) = if !pkt.ingress {
            let egress = fw_forward(&pkt, topo, nap, Some(access));
            (pkt, egress)
        } else {
            match self.policy.scheme {
                Scheme::EfidSecured => {
                    self.counters.security_checks += 1;
                    match nap_ingress(pkt, &self.keys, topo, nap, Some(access)) {
                        ForwardDecision::Forward { packet, egress } => (packet, egress),
                        ForwardDecision::Rejected(reason) => return Err(reason),
                    }
                }
                Scheme::LipsinPlain => {
                    if pkt.fid().is_none() {
                        return Err(RejectReason::Malformed);
                    }
                    let egress = fw_forward(&pkt, topo, nap, Some(access));
                    (pkt, egress)
                }
            }
        };
        if let (Some(cap), Some(fid)) = (self.policy.max_fill, pkt.fid()) {
            if fid.fill_factor() > cap {
                return Err(RejectReason::OverFilled);
            }
        }
        Ok((pkt, egress))
    }

    fn fan_out(
        &mut self,
        prop: &mut Propagation,
        queue: &mut VecDeque<(EdgeId, u32)>,
        egress: &[EdgeId],
        hops: u32,
    ) {
        for &e in egress {
            if hops + 1 > self.ttl {
                prop.ttl_drops += 1;
                self.counters.ttl_drops += 1;
                continue;
            }
            self.transmit(prop, e);
            queue.push_back((e, hops + 1));
        }
    }

    fn transmit(&mut self, prop: &mut Propagation, e: EdgeId) {
        prop.traversed.push(e);
        self.counters.transmissions += 1;
    }

    /// Full publish flow: TM path and identifier, NAP issuance, publisher
    /// send, ingress, hop-by-hop forwarding.
    pub fn run_flow(
        &mut self,
        publisher: NodeId,
        sub: NodeId,
        opts: FlowOptions,
    ) -> Result<DeliveryReport, SimError> {
        let path = compute_path(self.topo, publisher, sub)?;
        let fid = build_path_fid(self.topo, &path)?;
        let intended = BTreeSet::from([sub]);
        self.deliver(publisher, fid, &path.edges, intended, path.len(), opts)
    }

    /// Multicast to several subscribers over the union of shortest paths.
    pub fn run_multicast(
        &mut self,
        publisher: NodeId,
        subs: &[NodeId],
        opts: FlowOptions,
    ) -> Result<DeliveryReport, SimError> {
        let mut tree = BTreeSet::new();
        let mut longest = 0;
        for &s in subs {
            let p = compute_path(self.topo, publisher, s)?;
            longest = longest.max(p.len());
            tree.extend(p.edges);
        }
        let tree: Vec<EdgeId> = tree.into_iter().collect();
        let lids: Vec<_> = tree
            .iter()
            .map(|e| self.topo.edge(*e).lid.clone())
            .collect();
        let fid = build_fid(&lids, self.topo.params())?;
        let intended = subs.iter().copied().collect();
        self.deliver(publisher, fid, &tree, intended, longest, opts)
    }

    fn deliver(
        &mut self,
        publisher: NodeId,
        fid: ForwardingId,
        intended_edges: &[EdgeId],
        intended: BTreeSet<NodeId>,
        path_len: usize,
        opts: FlowOptions,
    ) -> Result<DeliveryReport, SimError> {
        let pkt = match self.policy.scheme {
            Scheme::EfidSecured => {
                // TM hands the identifier to the NAP, which issues the credential
                let mut cred = issue_credential(&fid, &self.keys)?;
                if opts.tamper {
                    cred.tag.0 ^= 1;
                }
                Packet::with_credential(cred, opts.payload.clone())
            }
            Scheme::LipsinPlain => {
                let mut fid = fid;
                if opts.tamper {
                    fid.flip(0);
                }
                Packet::with_fid(fid, opts.payload.clone())
            }
        };
        let prop = self.inject(publisher, pkt)?;
        let on_tree: BTreeSet<EdgeId> = intended_edges.iter().copied().collect();
        let false_positive_links: BTreeSet<EdgeId> = prop
            .traversed
            .iter()
            .copied()
            .filter(|e| !on_tree.contains(e))
            .collect();
        let actual = prop
            .visited
            .iter()
            .copied()
            .filter(|&n| n != publisher && self.topo.role(n).is_some_and(Role::is_user))
            .collect();
        Ok(DeliveryReport {
            publisher,
            intended,
            actual,
            path_len,
            false_positive_links: false_positive_links.into_iter().collect(),
            hops: prop.traversed.len() as u64,
            rejected: prop.rejected,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct FlowOptions {
    /// Flip one credential bit (one identifier bit in plain mode) before
    /// the publisher sends.
    pub tamper: bool,
    pub payload: Vec<u8>,
}

/// Result of one publish flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryReport {
    pub publisher: NodeId,
    pub intended: BTreeSet<NodeId>,
    /// User nodes other than the publisher that received a copy.
    pub actual: BTreeSet<NodeId>,
    /// Links of the longest intended path.
    pub path_len: usize,
    /// Distinct traversed links that are not on the intended path or tree.
    pub false_positive_links: Vec<EdgeId>,
    /// Total link transmissions by all copies, access link included.
    pub hops: u64,
    pub rejected: Option<RejectReason>,
}

impl DeliveryReport {
    pub fn delivered(&self) -> bool {
        self.intended.is_subset(&self.actual)
    }
}

/// Convenience wrapper: secured scheme, one flow, fresh counters.
pub fn run_flow(
    topo: &Topology,
    publisher: NodeId,
    sub: NodeId,
    keys: &MasterKeys,
) -> Result<DeliveryReport, SimError> {
    Simulator::new(topo, keys.clone(), NapPolicy::secured()).run_flow(
        publisher,
        sub,
        FlowOptions::default(),
    )
}

pub const DELIVERY_CSV_HEADER: [&str; 7] = [
    "flow_id",
    "pub",
    "sub",
    "path_len",
    "delivered",
    "false_positive_links",
    "hops",
];

/// One row per flow: `flow_id,pub,sub,path_len,delivered,false_positive_links,hops`.
/// Multicast subscribers are joined with `;`.
pub fn write_delivery_csv<W: io::Write>(
    reports: &[DeliveryReport],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DELIVERY_CSV_HEADER)?;
    for (i, r) in reports.iter().enumerate() {
        let subs = r
            .intended
            .iter()
            .map(NodeId::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            i.to_string(),
            r.publisher.to_string(),
            subs,
            r.path_len.to_string(),
            r.delivered().to_string(),
            r.false_positive_links.len().to_string(),
            r.hops.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attachment::{rotate_key, Tag};
    use crate::bloom::{FilterParams, LinkId};
    use crate::sim::topology::TopologyBuilder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> FilterParams {
        FilterParams::new(256, 5, 0.5).unwrap()
    }

    fn keys() -> MasterKeys {
        MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(77))
    }

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn pub_nap_sub_has_two_links() {
        let t = Topology::chain(params(), 1, 1);
        let p = compute_path(&t, n(0), n(2)).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(t.edge(p.edges[0]).dst, n(1));
    }

    #[test]
    fn ties_go_to_smaller_node_id() {
        // PUB 0 - NAP 1 - {FW 3, FW 2} - NAP 4 - SUB 5
        let mut b = TopologyBuilder::new(params(), 4);
        b.node(n(0), Role::Pub)
            .node(n(1), Role::Nap)
            .node(n(3), Role::Fw)
            .node(n(2), Role::Fw)
            .node(n(4), Role::Nap)
            .node(n(5), Role::Sub);
        b.link(n(0), n(1)).link(n(1), n(3)).link(n(1), n(2));
        b.link(n(3), n(4)).link(n(2), n(4)).link(n(4), n(5));
        let t = b.build().unwrap();
        let path = compute_path(&t, n(0), n(5)).unwrap();
        let nodes: Vec<_> = path.edges.iter().map(|e| t.edge(*e).dst).collect();
        assert_eq!(nodes, vec![n(1), n(2), n(4), n(5)]);
    }

    #[test]
    fn unreachable_and_role_errors() {
        let mut b = TopologyBuilder::new(params(), 4);
        b.node(n(0), Role::Pub)
            .node(n(1), Role::Nap)
            .node(n(2), Role::Nap)
            .node(n(3), Role::Sub);
        b.link(n(0), n(1)).link(n(3), n(2));
        let t = b.build().unwrap();
        assert!(matches!(
            compute_path(&t, n(0), n(3)),
            Err(SimError::Unreachable { .. })
        ));
        assert!(matches!(
            compute_path(&t, n(1), n(3)),
            Err(SimError::NotPublisher(_))
        ));
        assert!(matches!(
            compute_path(&t, n(0), n(2)),
            Err(SimError::NotSubscriber(_))
        ));
        assert!(matches!(
            compute_path(&t, n(9), n(3)),
            Err(SimError::UnknownNode(_))
        ));
    }

    #[test]
    fn users_do_not_relay() {
        // SUB 3 hangs off NAP 1 and NAP 2 is only reachable through nothing
        let mut b = TopologyBuilder::new(params(), 4);
        b.node(n(0), Role::Pub)
            .node(n(1), Role::Nap)
            .node(n(3), Role::Sub);
        b.link(n(0), n(1)).link(n(1), n(3));
        let t = b.build().unwrap();
        assert!(matches!(
            shortest_path(&t, n(3), n(0)),
            Ok(ref p) if p.len() == 2
        ));
    }

    #[test]
    fn path_fid_contains_every_hop() {
        let t = Topology::chain(params(), 2, 4);
        let path = compute_path(&t, n(0), n(5)).unwrap();
        assert_eq!(path.len(), 5);
        let fid = build_path_fid(&t, &path).unwrap();
        for e in &path.edges {
            assert!(membership_check(&fid, &t.edge(*e).lid));
        }
        let single = Path {
            edges: vec![path.edges[0]],
        };
        assert_eq!(
            build_path_fid(&t, &single).unwrap(),
            ForwardingId::from(&t.edge(path.edges[0]).lid)
        );
    }

    #[test]
    fn chain_flow_delivers_in_four_hops() {
        let t = Topology::chain(params(), 3, 3);
        let k = keys();
        let mut sim = Simulator::new(&t, k, NapPolicy::secured());
        let r = sim.run_flow(n(0), n(4), FlowOptions::default()).unwrap();
        assert!(r.delivered());
        assert_eq!(r.hops, 4);
        assert!(r.false_positive_links.is_empty());
        assert_eq!(sim.counters().security_checks, 1);
    }

    #[test]
    fn tampered_credential_goes_nowhere() {
        let t = Topology::chain(params(), 3, 3);
        let mut sim = Simulator::new(&t, keys(), NapPolicy::secured());
        let opts = FlowOptions {
            tamper: true,
            ..FlowOptions::default()
        };
        let r = sim.run_flow(n(0), n(4), opts).unwrap();
        assert!(r.actual.is_empty());
        assert_eq!(r.rejected, Some(RejectReason::BadTag));
        assert_eq!(r.hops, 1);
    }

    #[test]
    fn ingress_forwards_on_path_egress() {
        let t = Topology::chain(params(), 5, 2);
        let k = keys();
        let path = compute_path(&t, n(0), n(3)).unwrap();
        let fid = build_path_fid(&t, &path).unwrap();
        let mut pkt = Packet::with_credential(issue_credential(&fid, &k).unwrap(), vec![]);
        pkt.ingress = true;
        match nap_ingress(pkt.clone(), &k, &t, n(1), Some(path.edges[0])) {
            ForwardDecision::Forward { packet, egress } => {
                assert!(egress.contains(&path.edges[1]));
                assert_eq!(packet.fid(), Some(&fid));
                assert!(!packet.ingress);
            }
            other => panic!("unexpected {other:?}"),
        }
        let rotated = rotate_key(&k);
        assert_eq!(
            nap_ingress(pkt.clone(), &rotated, &t, n(1), Some(path.edges[0])),
            ForwardDecision::Rejected(RejectReason::StaleEpoch)
        );
        if let Header::Credential(c) = &mut pkt.header {
            c.tag = Tag(c.tag.0 ^ 0x8000_0000_0000_0000);
        }
        assert_eq!(
            nap_ingress(pkt, &k, &t, n(1), Some(path.edges[0])),
            ForwardDecision::Rejected(RejectReason::BadTag)
        );
    }

    #[test]
    fn saturated_fid_takes_every_egress_but_back() {
        // FW 1 with links to 0, 2, 3, 4
        let mut b = TopologyBuilder::new(params(), 6);
        b.node(n(1), Role::Fw);
        for i in [0, 2, 3, 4] {
            b.node(n(i), Role::Fw);
            b.link(n(1), n(i));
        }
        let t = b.build().unwrap();
        let pkt = Packet::with_fid(ForwardingId::ones(256), vec![]);
        assert_eq!(fw_forward(&pkt, &t, n(1), None).len(), 4);
        let arrival = t.in_edges(n(1))[0];
        let out = fw_forward(&pkt, &t, n(1), Some(arrival));
        assert_eq!(out.len(), 3);
        assert!(!out.contains(&t.reverse(arrival)));
        // a credential-bearing packet is never forwarded by the core
        let cred = issue_credential(&ForwardingId::ones(256), &keys()).unwrap();
        assert!(fw_forward(&Packet::with_credential(cred, vec![]), &t, n(1), None).is_empty());
    }

    #[test]
    fn ttl_bounds_saturated_wandering() {
        // a ring of forwarders lets saturated copies circulate
        let mut b = TopologyBuilder::new(params(), 8);
        b.node(n(0), Role::Pub).node(n(10), Role::Sub);
        for i in 1..=6 {
            b.node(n(i), if i == 1 { Role::Nap } else { Role::Fw });
        }
        b.node(n(7), Role::Nap);
        for i in 1..=6 {
            b.link(n(i), n(i % 6 + 1));
        }
        b.link(n(3), n(7)).link(n(0), n(1)).link(n(7), n(10));
        let t = b.build().unwrap();
        let mut sim = Simulator::new(&t, keys(), NapPolicy::plain());
        let prop = sim
            .inject(n(0), Packet::with_fid(ForwardingId::ones(256), vec![]))
            .unwrap();
        assert!(prop.ttl_drops > 0);
        // replay every copy's hop count: none exceeds the ttl
        let ttl = sim.ttl() as usize;
        assert!(prop.traversed.len() <= (1..=ttl).map(|h| 2usize.pow(h as u32)).sum::<usize>());
        assert!(prop.visited.contains(&n(10)));
    }

    #[test]
    fn plain_scheme_rejects_credentials_at_ingress() {
        let t = Topology::chain(params(), 3, 1);
        let k = keys();
        let cred = issue_credential(&ForwardingId::ones(256), &k).unwrap();
        let mut sim = Simulator::new(&t, k, NapPolicy::plain());
        let prop = sim
            .inject(n(0), Packet::with_credential(cred, vec![]))
            .unwrap();
        assert_eq!(prop.rejected, Some(RejectReason::Malformed));
    }

    #[test]
    fn fill_cap_policy_drops_saturated_packets() {
        let t = Topology::chain(params(), 3, 1);
        let policy = NapPolicy {
            scheme: Scheme::LipsinPlain,
            max_fill: Some(0.5),
        };
        let mut sim = Simulator::new(&t, keys(), policy);
        let prop = sim
            .inject(n(0), Packet::with_fid(ForwardingId::ones(256), vec![]))
            .unwrap();
        assert_eq!(prop.rejected, Some(RejectReason::OverFilled));
    }

    #[test]
    fn multicast_reaches_every_subscriber() {
        // PUB 0 - NAP 1 - FW 2 - {NAP 3 - SUB 5, NAP 4 - SUB 6}
        let mut b = TopologyBuilder::new(params(), 9);
        b.node(n(0), Role::Pub)
            .node(n(1), Role::Nap)
            .node(n(2), Role::Fw)
            .node(n(3), Role::Nap)
            .node(n(4), Role::Nap)
            .node(n(5), Role::Sub)
            .node(n(6), Role::Sub);
        b.link(n(0), n(1))
            .link(n(1), n(2))
            .link(n(2), n(3))
            .link(n(2), n(4));
        b.link(n(3), n(5)).link(n(4), n(6));
        let t = b.build().unwrap();
        let mut sim = Simulator::new(&t, keys(), NapPolicy::secured());
        let r = sim
            .run_multicast(n(0), &[n(5), n(6)], FlowOptions::default())
            .unwrap();
        assert!(r.delivered());
        assert_eq!(r.path_len, 4);
        assert_eq!(sim.counters().security_checks, 1);
    }

    #[test]
    fn explicit_lids_are_used_verbatim() {
        let p = FilterParams::new(16, 2, 1.0).unwrap();
        let mut b = TopologyBuilder::new(p, 0);
        b.node(n(0), Role::Pub)
            .node(n(1), Role::Nap)
            .node(n(2), Role::Sub);
        let l = |a, b| LinkId::from_positions(&p, &[a, b]).unwrap();
        b.link_with(n(0), n(1), &l(0, 1), &l(2, 3));
        b.link_with(n(1), n(2), &l(4, 5), &l(6, 7));
        let t = b.build().unwrap();
        let path = compute_path(&t, n(0), n(2)).unwrap();
        assert_eq!(build_path_fid(&t, &path).unwrap().to_hex(), "3300");
    }

    #[test]
    fn csv_rows() {
        let t = Topology::chain(params(), 3, 2);
        let r = run_flow(&t, n(0), n(3), &keys()).unwrap();
        let mut out = Vec::new();
        write_delivery_csv(&[r], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "flow_id,pub,sub,path_len,delivered,false_positive_links,hops\n0,0,3,3,true,0,3\n"
        );
    }
}
