//! Nodes, links and static shortest-path routing.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{BitRate, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Host number as used in scenario descriptions (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HostId(pub u32);

impl fmt::Display for HostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "host{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Host(HostId),
    Switch,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub rate: BitRate,
    pub propagation: SimTime,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("topology is not connected: {0} unreachable")]
    Disconnected(String),
    #[error("{0} must have exactly one uplink, found {1}")]
    HostDegree(String, usize),
    #[error("unknown host {0}")]
    UnknownHost(HostId),
}

/// Undirected graph of hosts and switches. Every link is full duplex and
/// becomes two output ports in the simulation.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// Per node, list of (neighbor, link index).
    adjacency: Vec<Vec<(NodeId, usize)>>,
    /// `next_hop[node][dst_node]`: index into that node's adjacency list.
    next_hop: Vec<Vec<Option<usize>>>,
}

impl Topology {
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self, TopologyError> {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, l) in links.iter().enumerate() {
            adjacency[l.a.0].push((l.b, i));
            adjacency[l.b.0].push((l.a, i));
        }
        for (i, n) in nodes.iter().enumerate() {
            if matches!(n.kind, NodeKind::Host(_)) && adjacency[i].len() != 1 {
                return Err(TopologyError::HostDegree(
                    n.name.clone(),
                    adjacency[i].len(),
                ));
            }
        }
        let mut topo = Topology {
            nodes,
            links,
            adjacency,
            next_hop: Vec::new(),
        };
        topo.build_routes()?;
        Ok(topo)
    }

    // BFS from each destination; ties resolve to the lowest neighbor index
    // so routes are reproducible.
    fn build_routes(&mut self) -> Result<(), TopologyError> {
        let n = self.nodes.len();
        let mut next_hop = vec![vec![None; n]; n];
        for dst in 0..n {
            let mut seen = vec![false; n];
            seen[dst] = true;
            let mut frontier = VecDeque::from([dst]);
            while let Some(v) = frontier.pop_front() {
                for &(u, _) in &self.adjacency[v] {
                    let u = u.0;
                    if seen[u] {
                        continue;
                    }
                    seen[u] = true;
                    let idx = self.adjacency[u]
                        .iter()
                        .position(|&(w, _)| w.0 == v)
                        .expect("adjacency is symmetric");
                    next_hop[u][dst] = Some(idx);
                    // hosts never forward traffic for others
                    if !matches!(self.nodes[u].kind, NodeKind::Host(_)) {
                        frontier.push_back(u);
                    }
                }
            }
            if let Some(missing) = (0..n).find(|&u| !seen[u]) {
                return Err(TopologyError::Disconnected(
                    self.nodes[missing].name.clone(),
                ));
            }
        }
        self.next_hop = next_hop;
        Ok(())
    }

    /// The testbed preset: `racks` racks of `hosts_per_rack` hosts, one ToR
    /// per rack and one root switch. Hosts are numbered 1.. rack by rack.
    pub fn two_tier(
        racks: usize,
        hosts_per_rack: usize,
        rate: BitRate,
        propagation: SimTime,
    ) -> Self {
        let mut nodes = Vec::new();
        let mut links = Vec::new();
        let host_count = racks * hosts_per_rack;
        for h in 0..host_count {
            nodes.push(Node {
                name: format!("host{}", h + 1),
                kind: NodeKind::Host(HostId(h as u32 + 1)),
            });
        }
        let root = NodeId(nodes.len());
        nodes.push(Node {
            name: "root".into(),
            kind: NodeKind::Switch,
        });
        for r in 0..racks {
            let tor = NodeId(nodes.len());
            nodes.push(Node {
                name: format!("tor{}", r + 1),
                kind: NodeKind::Switch,
            });
            links.push(Link {
                a: tor,
                b: root,
                rate,
                propagation,
            });
            for h in 0..hosts_per_rack {
                links.push(Link {
                    a: NodeId(r * hosts_per_rack + h),
                    b: tor,
                    rate,
                    propagation,
                });
            }
        }
        Topology::new(nodes, links).expect("two-tier preset is well formed")
    }

    /// 12 hosts, 4 racks of 3, all links 1 Gbps.
    pub fn testbed() -> Self {
        Self::two_tier(4, 3, BitRate::from_gbps(1), SimTime(100))
    }

    /// All hosts on a single switch.
    pub fn star(hosts: usize, rate: BitRate, propagation: SimTime) -> Self {
        let mut nodes: Vec<Node> = (0..hosts)
            .map(|h| Node {
                name: format!("host{}", h + 1),
                kind: NodeKind::Host(HostId(h as u32 + 1)),
            })
            .collect();
        let sw = NodeId(nodes.len());
        nodes.push(Node {
            name: "switch".into(),
            kind: NodeKind::Switch,
        });
        let links = (0..hosts)
            .map(|h| Link {
                a: NodeId(h),
                b: sw,
                rate,
                propagation,
            })
            .collect();
        Topology::new(nodes, links).expect("star preset is well formed")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[id.0]
    }

    pub fn hosts(&self) -> impl Iterator<Item = HostId> + '_ {
        self.nodes.iter().filter_map(|n| match n.kind {
            NodeKind::Host(h) => Some(h),
            NodeKind::Switch => None,
        })
    }

    pub fn host_count(&self) -> usize {
        self.hosts().count()
    }

    pub fn host_node(&self, host: HostId) -> Result<NodeId, TopologyError> {
        self.nodes
            .iter()
            .position(|n| n.kind == NodeKind::Host(host))
            .map(NodeId)
            .ok_or(TopologyError::UnknownHost(host))
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn is_host(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].kind, NodeKind::Host(_))
    }

    /// Adjacency index of the next hop from `at` toward `dst`.
    pub fn next_hop(&self, at: NodeId, dst: NodeId) -> Option<usize> {
        self.next_hop[at.0][dst.0]
    }

    /// Nodes visited from `src` to `dst`, inclusive.
    pub fn path(&self, src: NodeId, dst: NodeId) -> Vec<NodeId> {
        let mut path = vec![src];
        let mut at = src;
        while at != dst {
            let idx = self.next_hop(at, dst).expect("connected");
            at = self.adjacency[at.0][idx].0;
            path.push(at);
        }
        path
    }

    /// The neighbor reached first from `host`.
    pub fn uplink_of(&self, host: NodeId) -> NodeId {
        self.adjacency[host.0][0].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn testbed_shape() {
        let t = Topology::testbed();
        assert_eq!(t.host_count(), 12);
        assert_eq!(t.nodes().len(), 12 + 1 + 4);
        assert_eq!(t.links().len(), 12 + 4);
        assert!(t.links().iter().all(|l| l.rate == BitRate::from_gbps(1)));
        let h1 = t.host_node(HostId(1)).unwrap();
        let h10 = t.host_node(HostId(10)).unwrap();
        let names: Vec<_> = t
            .path(h1, h10)
            .iter()
            .map(|n| t.node(*n).name.clone())
            .collect();
        assert_eq!(names, ["host1", "tor1", "root", "tor4", "host10"]);
        let h11 = t.host_node(HostId(11)).unwrap();
        assert_eq!(t.path(h10, h11).len(), 3);
    }

    #[test]
    fn unknown_host_is_an_error() {
        let t = Topology::testbed();
        assert_eq!(
            t.host_node(HostId(13)),
            Err(TopologyError::UnknownHost(HostId(13)))
        );
    }

    #[test]
    fn disconnected_graph_rejected() {
        let nodes = vec![
            Node {
                name: "a".into(),
                kind: NodeKind::Switch,
            },
            Node {
                name: "b".into(),
                kind: NodeKind::Switch,
            },
        ];
        assert!(matches!(
            Topology::new(nodes, vec![]),
            Err(TopologyError::Disconnected(_))
        ));
    }

    #[test]
    fn multihomed_host_rejected() {
        let nodes = vec![
            Node {
                name: "h".into(),
                kind: NodeKind::Host(HostId(1)),
            },
            Node {
                name: "s1".into(),
                kind: NodeKind::Switch,
            },
            Node {
                name: "s2".into(),
                kind: NodeKind::Switch,
            },
        ];
        let l = |a, b| Link {
            a: NodeId(a),
            b: NodeId(b),
            rate: BitRate::from_gbps(1),
            propagation: SimTime(0),
        };
        let err = Topology::new(nodes, vec![l(0, 1), l(0, 2), l(1, 2)]).unwrap_err();
        assert_eq!(err, TopologyError::HostDegree("h".into(), 2));
    }
}
