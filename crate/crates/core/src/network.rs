//! Propagation network: threshold-based community assignment followed by
//! influence-weighted preferential attachment inside each community.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attributes::{AgentKind, AgentProfile};
use crate::config::SimulationParams;
use crate::powerlaw::{fit_truncated_power_law, PowerLawFit};
use crate::rng::{purpose, substream};

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("community {community} has {size} members, fewer than m0 = {m0}")]
    CommunityTooSmall {
        community: usize,
        size: usize,
        m0: usize,
    },
    #[error("invalid attachment parameters: m0 = {m0}, m = {m}")]
    InvalidParams { m0: usize, m: usize },
}

/// Community membership in both directions, indices into the profile list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityIndex {
    /// Members of each community, ascending.
    pub members: Vec<Vec<usize>>,
    /// Communities of each agent, ascending.
    pub of_agent: Vec<Vec<usize>>,
}

impl CommunityIndex {
    pub fn from_assignments(of_agent: Vec<Vec<usize>>, n_communities: usize) -> Self {
        let mut members = vec![Vec::new(); n_communities];
        for (agent, cs) in of_agent.iter().enumerate() {
            for &c in cs {
                members[c].push(agent);
            }
        }
        Self { members, of_agent }
    }

    pub fn n_communities(&self) -> usize {
        self.members.len()
    }

    pub fn is_member(&self, agent: usize, community: usize) -> bool {
        self.of_agent[agent].binary_search(&community).is_ok()
    }
}

/// Communities of a regular user: all with interest at least `tau`, or the
/// single highest-interest one (lowest index on ties) if none qualifies.
pub fn communities_for(interest: &[f64], tau: f64) -> Vec<usize> {
    let above: Vec<usize> = (0..interest.len())
        .filter(|&j| interest[j] >= tau)
        .collect();
    if !above.is_empty() || interest.is_empty() {
        return above;
    }
    let mut best = 0;
    for j in 1..interest.len() {
        if interest[j] > interest[best] {
            best = j;
        }
    }
    vec![best]
}

/// Assigns every agent to its communities. Bots belong to their home only.
pub fn assign_communities(
    profiles: &[AgentProfile],
    tau: f64,
    n_communities: usize,
) -> CommunityIndex {
    let of_agent = profiles
        .iter()
        .map(|p| match (p.kind, p.home_community) {
            (AgentKind::Regular, _) | (_, None) => communities_for(&p.interest, tau),
            (_, Some(home)) => vec![home],
        })
        .collect();
    CommunityIndex::from_assignments(of_agent, n_communities)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationNetwork {
    pub agent_ids: Vec<String>,
    pub kinds: Vec<AgentKind>,
    pub membership: CommunityIndex,
    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

impl PropagationNetwork {
    pub fn new(
        agent_ids: Vec<String>,
        kinds: Vec<AgentKind>,
        membership: CommunityIndex,
        edges: BTreeSet<(usize, usize)>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); agent_ids.len()];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            agent_ids,
            kinds,
            membership,
            edges: edges.into_iter().collect(),
            adjacency,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.agent_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `agent`, ascending.
    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.adjacency[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.adjacency[agent].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Two-column, tab-separated edge list of agent ids.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{}\t{}", self.agent_ids[a], self.agent_ids[b]);
        }
        out
    }

    /// Nodes with kinds and community names, plus edges by agent id.
    pub fn to_json(&self, community_names: &[String]) -> serde_json::Value {
        let nodes: Vec<_> = (0..self.n_nodes())
            .map(|i| {
                serde_json::json!({
                    "id": self.agent_ids[i],
                    "kind": self.kinds[i],
                    "communities": self.membership.of_agent[i]
                        .iter()
                        .map(|&c| community_names[c].as_str())
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(a, b)| [self.agent_ids[a].as_str(), self.agent_ids[b].as_str()])
            .collect();
        serde_json::json!({ "nodes": nodes, "edges": edges })
    }
}

/// Members of `community` in arrival order: descending influence, then id.
fn arrival_order(profiles: &[AgentProfile], members: &[usize], community: usize) -> Vec<usize> {
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| {
        profiles[b].influence[community]
            .total_cmp(&profiles[a].influence[community])
            .then_with(|| profiles[a].agent_id.cmp(&profiles[b].agent_id))
    });
    order
}

/// Draws `m` distinct entries of `pool` with probability proportional to
/// `weights`, renormalizing after each draw. Zero total weight falls back to
/// uniform.
fn weighted_without_replacement(
    pool: &[usize],
    weights: &[f64],
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut taken = vec![false; pool.len()];
    let mut picks = Vec::with_capacity(m);
    for _ in 0..m.min(pool.len()) {
        let total: f64 = (0..pool.len())
            .filter(|&i| !taken[i])
            .map(|i| weights[i])
            .sum();
        let chosen = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut last = None;
            let mut hit = None;
            for i in (0..pool.len()).filter(|&i| !taken[i]) {
                if weights[i] <= 0.0 {
                    continue;
                }
                last = Some(i);
                if r < weights[i] {
                    hit = Some(i);
                    break;
                }
                r -= weights[i];
            }
            hit.or(last).expect("positive total weight")
        } else {
            let free: Vec<usize> = (0..pool.len()).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[chosen] = true;
        picks.push(pool[chosen]);
    }
    picks
}

/// Builds the network. Each community grows from a complete core of its first
/// `m0` arrivals; each later arrival links to `m` current members drawn by
/// influence in that community. Shared members join communities together.
pub fn build_network(
    profiles: &[AgentProfile],
    membership: &CommunityIndex,
    params: &SimulationParams,
    seed: u64,
) -> Result<PropagationNetwork, NetworkError> {
    let (m0, m) = (params.m0, params.m);
    if m0 < 2 || m < 1 || m > m0 {
        return Err(NetworkError::InvalidParams { m0, m });
    }
    for (c, members) in membership.members.iter().enumerate() {
        if members.len() < m0 {
            return Err(NetworkError::CommunityTooSmall {
                community: c,
                size: members.len(),
                m0,
            });
        }
    }
    let mut edges = BTreeSet::new();
    let mut add = |a: usize, b: usize| {
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    };
    for (c, members) in membership.members.iter().enumerate() {
        let order = arrival_order(profiles, members, c);
        let mut rng = substream(seed, &[purpose::NETWORK, c as u64]);
        for i in 0..m0 {
            for j in (i + 1)..m0 {
                add(order[i], order[j]);
            }
        }
        let mut weights: Vec<f64> = order[..m0]
            .iter()
            .map(|&u| profiles[u].influence[c])
            .collect();
        for (pos, &u) in order.iter().enumerate().skip(m0) {
            for t in weighted_without_replacement(&order[..pos], &weights, m, &mut rng) {
                add(u, t);
            }
            weights.push(profiles[u].influence[c]);
        }
    }
    Ok(PropagationNetwork::new(
        profiles.iter().map(|p| p.agent_id.clone()).collect(),
        profiles.iter().map(|p| p.kind).collect(),
        membership.clone(),
        edges,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    /// Degree to node count.
    pub histogram: BTreeMap<usize, usize>,
    pub tail_fit: Option<PowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

/// Degree histogram and a truncated power-law fit to degrees of at least
/// `min_degree`.
pub fn degree_distribution(network: &PropagationNetwork, min_degree: usize) -> DegreeStats {
    let mut histogram = BTreeMap::new();
    let mut tail = Vec::new();
    for i in 0..network.n_nodes() {
        let d = network.degree(i);
        *histogram.entry(d).or_insert(0) += 1;
        if d >= min_degree && d > 0 {
            tail.push(d as u64);
        }
    }
    let (tail_fit, fit_error) = match fit_truncated_power_law(&tail) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    DegreeStats {
        histogram,
        tail_fit,
        fit_error,
    }
}

/// `|C_i ∩ C_j|` for every pair; the diagonal holds community sizes.
pub fn community_overlap_matrix(index: &CommunityIndex) -> Vec<Vec<usize>> {
    let k = index.n_communities();
    let mut out = vec![vec![0; k]; k];
    for cs in &index.of_agent {
        for &a in cs {
            for &b in cs {
                out[a][b] += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeDensities {
    /// Mean edge density inside a community.
    pub intra: f64,
    /// Mean edge density between members of two different communities.
    pub inter: f64,
    /// Full block matrix.
    pub blocks: Vec<Vec<f64>>,
}

/// Block edge densities. Block `(i, j)` counts edges with one endpoint in
/// `C_i` and the other in `C_j`, over the number of such distinct pairs.
pub fn edge_densities(network: &PropagationNetwork) -> EdgeDensities {
    let index = &network.membership;
    let k = index.n_communities();
    let overlap = community_overlap_matrix(index);
    let mut counts = vec![vec![0usize; k]; k];
    for &(a, b) in &network.edges {
        for (i, row) in counts.iter_mut().enumerate() {
            for (j, count) in row.iter_mut().enumerate().skip(i) {
                let hit = (index.is_member(a, i) && index.is_member(b, j))
                    || (index.is_member(a, j) && index.is_member(b, i));
                if hit {
                    *count += 1;
                }
            }
        }
    }
    let mut blocks = vec![vec![0.0; k]; k];
    let (mut intra, mut inter, mut n_inter) = (0.0, 0.0, 0usize);
    for i in 0..k {
        for j in i..k {
            let (ni, nj, s) = (overlap[i][i], overlap[j][j], overlap[i][j]);
            let pairs = if i == j {
                ni * ni.saturating_sub(1) / 2
            } else {
                ni * nj - s - s * s.saturating_sub(1) / 2
            };
            let d = if pairs == 0 {
                0.0
            } else {
                counts[i][j] as f64 / pairs as f64
            };
            blocks[i][j] = d;
            blocks[j][i] = d;
            if i == j {
                intra += d;
            } else {
                inter += d;
                n_inter += 1;
            }
        }
    }
    EdgeDensities {
        intra: if k > 0 { intra / k as f64 } else { 0.0 },
        inter: if n_inter > 0 {
            inter / n_inter as f64
        } else {
            0.0
        },
        blocks,
    }
}
