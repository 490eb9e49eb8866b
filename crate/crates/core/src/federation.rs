//! Fog federation topology and the ETC/ETT latency matrices.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{convolve, LatencyPmf, NormalSpec, DEFAULT_TRUNCATION};
use crate::error::{Error, Result};
use crate::model::WorkflowSpec;

pub const DEFAULT_NODE_COUNT: u32 = 8;
pub const MIPS_RANGE: (f64, f64) = (1500.0, 2500.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FogId(pub u32);

impl FogId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fog{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogSystem {
    pub id: FogId,
    pub grid_pos: (i32, i32),
    pub node_count: u32,
    pub node_mips: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationTopology {
    fogs: Vec<FogSystem>,
    adjacency: Vec<Vec<FogId>>,
}

impl FederationTopology {
    /// Builds a topology from explicit fogs; ids must be `0..n` in order and
    /// positions unique. Adjacency is grid 4-adjacency.
    pub fn from_fogs(fogs: Vec<FogSystem>) -> Result<Self> {
        if fogs.is_empty() {
            return Err(Error::InvalidArgument("federation needs at least one fog".into()));
        }
        let mut positions = BTreeMap::new();
        for (i, f) in fogs.iter().enumerate() {
            if f.id.index() != i {
                return Err(Error::InvalidArgument(format!("fog ids must be dense, got {} at {i}", f.id)));
            }
            if f.node_count == 0 {
                return Err(Error::InvalidArgument(format!("{} has no nodes", f.id)));
            }
            if !(f.node_mips > 0.0) {
                return Err(Error::InvalidArgument(format!("{} has non-positive MIPS", f.id)));
            }
            if positions.insert(f.grid_pos, f.id).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate grid position {:?}", f.grid_pos)));
            }
        }
        let adjacency = fogs
            .iter()
            .map(|f| {
                let (x, y) = f.grid_pos;
                let mut n: Vec<FogId> = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                    .iter()
                    .filter_map(|p| positions.get(p).copied())
                    .collect();
                n.sort_unstable();
                n
            })
            .collect();
        Ok(Self { fogs, adjacency })
    }

    pub fn fogs(&self) -> &[FogSystem] {
        &self.fogs
    }

    pub fn len(&self) -> usize {
        self.fogs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fogs.is_empty()
    }

    pub fn fog(&self, id: FogId) -> Result<&FogSystem> {
        self.fogs.get(id.index()).ok_or(Error::InvalidId(id.0))
    }

    pub fn neighbors(&self, id: FogId) -> Result<&[FogId]> {
        self.adjacency.get(id.index()).map(Vec::as_slice).ok_or(Error::InvalidId(id.0))
    }

    pub fn fog_at(&self, pos: (i32, i32)) -> Option<FogId> {
        self.fogs.iter().find(|f| f.grid_pos == pos).map(|f| f.id)
    }

    pub fn ids(&self) -> impl Iterator<Item = FogId> + '_ {
        self.fogs.iter().map(|f| f.id)
    }

    /// Longest Manhattan distance between any two fogs.
    pub fn diameter(&self) -> u32 {
        let mut best = 0;
        for a in &self.fogs {
            for b in &self.fogs {
                best = best.max(manhattan(a.grid_pos, b.grid_pos));
            }
        }
        best
    }
}

fn manhattan(a: (i32, i32), b: (i32, i32)) -> u32 {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// `width x height` grid with fog ids assigned row-major and MIPS drawn
/// uniformly from [`MIPS_RANGE`].
pub fn build_grid(width: u32, height: u32, seed: u64) -> Result<FederationTopology> {
    build_grid_with(width, height, seed, DEFAULT_NODE_COUNT)
}

pub fn build_grid_with(width: u32, height: u32, seed: u64, node_count: u32) -> Result<FederationTopology> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!("grid dimensions must be positive, got {width}x{height}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fogs = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            fogs.push(FogSystem {
                id: FogId(y * width + x),
                grid_pos: (x as i32, y as i32),
                node_count,
                node_mips: rng.random_range(MIPS_RANGE.0..=MIPS_RANGE.1),
            });
        }
    }
    FederationTopology::from_fogs(fogs)
}

pub fn hop_distance(topology: &FederationTopology, from: FogId, to: FogId) -> Result<u32> {
    let a = topology.fog(from)?;
    let b = topology.fog(to)?;
    Ok(manhattan(a.grid_pos, b.grid_pos))
}

/// Computational latency per (service type, fog).
#[derive(Debug, Clone)]
pub struct EtcMatrix {
    entries: HashMap<String, Vec<LatencyPmf>>,
    means: HashMap<String, Vec<f64>>,
    bin_width: f64,
}

impl EtcMatrix {
    pub fn get(&self, kind: &str, fog: FogId) -> Result<&LatencyPmf> {
        self.entries
            .get(kind)
            .ok_or_else(|| Error::MissingProfile(format!("no ETC row for '{kind}'")))?
            .get(fog.index())
            .ok_or(Error::InvalidId(fog.0))
    }

    /// Mean of the ETC entry for `kind` on `fog`.
    pub fn mean(&self, kind: &str, fog: FogId) -> Result<f64> {
        self.means
            .get(kind)
            .ok_or_else(|| Error::MissingProfile(format!("no ETC row for '{kind}'")))?
            .get(fog.index())
            .copied()
            .ok_or(Error::InvalidId(fog.0))
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }
}

pub fn build_etc(
    topology: &FederationTopology,
    profiles: &BTreeMap<String, NormalSpec>,
    bin_width: f64,
) -> Result<EtcMatrix> {
    if profiles.is_empty() {
        return Err(Error::InvalidArgument("no service profiles supplied".into()));
    }
    let mut entries = HashMap::new();
    let mut means = HashMap::new();
    for (kind, work) in profiles {
        let row: Vec<LatencyPmf> = topology
            .fogs()
            .iter()
            .map(|f| {
                let spec = NormalSpec::new(work.mean / f.node_mips * 1000.0, work.std_dev / f.node_mips * 1000.0);
                LatencyPmf::from_normal(spec, bin_width, DEFAULT_TRUNCATION)
            })
            .collect::<Result<_>>()?;
        means.insert(kind.clone(), row.iter().map(LatencyPmf::mean).collect());
        entries.insert(kind.clone(), row);
    }
    Ok(EtcMatrix { entries, means, bin_width })
}

pub fn mean_exec_profile(etc: &EtcMatrix, kind: &str) -> Result<f64> {
    let row = etc
        .means
        .get(kind)
        .ok_or_else(|| Error::MissingProfile(format!("no ETC row for '{kind}'")))?;
    Ok(row.iter().sum::<f64>() / row.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub bandwidth_mbps: f64,
    pub per_hop_latency: NormalSpec,
}

impl Default for LinkProfile {
    fn default() -> Self {
        Self { bandwidth_mbps: 1000.0, per_hop_latency: NormalSpec::new(20.0, 5.0) }
    }
}

/// Communication latency per (service type, destination fog, hop count).
///
/// Links are homogeneous, so entries depend on the destination only through
/// its existence; the table stores one row per type indexed by hop count.
#[derive(Debug, Clone)]
pub struct EttMatrix {
    entries: HashMap<String, Vec<LatencyPmf>>,
    fog_count: usize,
}

impl EttMatrix {
    pub fn get(&self, kind: &str, dest: FogId, hop: u32) -> Result<&LatencyPmf> {
        if dest.index() >= self.fog_count {
            return Err(Error::InvalidId(dest.0));
        }
        let row = self
            .entries
            .get(kind)
            .ok_or_else(|| Error::MissingProfile(format!("no ETT row for '{kind}'")))?;
        row.get(hop as usize)
            .ok_or_else(|| Error::MissingProfile(format!("no ETT entry for '{kind}' at {hop} hops")))
    }

    pub fn max_hop(&self) -> u32 {
        self.entries.values().next().map_or(0, |r| r.len() as u32 - 1)
    }
}

pub fn build_ett(
    topology: &FederationTopology,
    link: &LinkProfile,
    data_mb: &BTreeMap<String, f64>,
    bin_width: f64,
) -> Result<EttMatrix> {
    if !(link.bandwidth_mbps > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {}", link.bandwidth_mbps)));
    }
    let hop = LatencyPmf::from_normal(link.per_hop_latency, bin_width, DEFAULT_TRUNCATION)?;
    let max_hop = topology.diameter().max(1);
    // Latency-only h-fold convolutions, shared by every service type.
    let mut latency = vec![LatencyPmf::point(0.0, bin_width)?];
    for h in 1..=max_hop as usize {
        let next = convolve(&latency[h - 1], &hop)?;
        latency.push(next);
    }
    let mut entries = HashMap::new();
    for (kind, mb) in data_mb {
        if !(*mb >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative data size for '{kind}'")));
        }
        let per_hop_transfer = mb * 8.0 / link.bandwidth_mbps * 1000.0;
        let row = latency
            .iter()
            .enumerate()
            .map(|(h, l)| if h == 0 { l.clone() } else { l.shift(per_hop_transfer * h as f64) })
            .collect();
        entries.insert(kind.clone(), row);
    }
    Ok(EttMatrix { entries, fog_count: topology.len() })
}

/// Topology plus matrices, with memoized chain distributions. Built once per
/// scenario and shared read-only across runs.
#[derive(Debug)]
pub struct Federation {
    pub topology: FederationTopology,
    pub etc: EtcMatrix,
    pub ett: EttMatrix,
    pub bin_width: f64,
    chains: RwLock<HashMap<(String, u32), Arc<LatencyPmf>>>,
    end_to_end: RwLock<HashMap<(String, u32, u32), Arc<LatencyPmf>>>,
}

impl Federation {
    pub fn new(topology: FederationTopology, etc: EtcMatrix, ett: EttMatrix) -> Self {
        let bin_width = etc.bin_width();
        Self {
            topology,
            etc,
            ett,
            bin_width,
            chains: RwLock::new(HashMap::new()),
            end_to_end: RwLock::new(HashMap::new()),
        }
    }

    /// Builds ETC and ETT for every service type appearing in `workflows`.
    pub fn for_workflows<'a>(
        topology: FederationTopology,
        workflows: impl IntoIterator<Item = &'a WorkflowSpec>,
        link: &LinkProfile,
        bin_width: f64,
    ) -> Result<Self> {
        let mut profiles = BTreeMap::new();
        let mut data = BTreeMap::new();
        for w in workflows {
            for v in &w.vertices {
                let kind = v.kind();
                if let Some(prev) = profiles.insert(kind.clone(), v.work) {
                    if prev != v.work {
                        return Err(Error::Config(format!("service type '{kind}' has conflicting work profiles")));
                    }
                }
                data.insert(kind, v.input_data);
            }
        }
        let etc = build_etc(&topology, &profiles, bin_width)?;
        let ett = build_ett(&topology, link, &data, bin_width)?;
        Ok(Self::new(topology, etc, ett))
    }

    /// Computation-only latency of running `w`'s services back to back on `fog`.
    pub fn chain(&self, w: &WorkflowSpec, fog: FogId) -> Result<Arc<LatencyPmf>> {
        let key = chain_key(w)?;
        if let Some(hit) = self.chains.read().expect("cache lock").get(&(key.clone(), fog.0)) {
            return Ok(Arc::clone(hit));
        }
        let order = w.topological_order()?;
        let kinds: Vec<String> = order.iter().map(|id| w.vertex(*id).expect("vertex").kind()).collect();
        let rows = kinds.iter().map(|k| self.etc.get(k, fog)).collect::<Result<Vec<_>>>()?;
        let pmf = Arc::new(crate::dist::convolve_chain(rows)?);
        self.chains.write().expect("cache lock").insert((key, fog.0), Arc::clone(&pmf));
        Ok(pmf)
    }

    /// Chain latency on `fog` plus the transfer of the first service's input
    /// over `hop` hops. Hop 0 carries no communication term.
    pub fn end_to_end(&self, w: &WorkflowSpec, fog: FogId, hop: u32) -> Result<Arc<LatencyPmf>> {
        if hop == 0 {
            return self.chain(w, fog);
        }
        let key = chain_key(w)?;
        if let Some(hit) = self.end_to_end.read().expect("cache lock").get(&(key.clone(), fog.0, hop)) {
            return Ok(Arc::clone(hit));
        }
        let first = w.topological_order()?[0];
        let src = w.vertex(first).expect("vertex").kind();
        let comm = self.ett.get(&src, fog, hop)?;
        let chain = self.chain(w, fog)?;
        let pmf = Arc::new(convolve(&chain, comm)?);
        self.end_to_end.write().expect("cache lock").insert((key, fog.0, hop), Arc::clone(&pmf));
        Ok(pmf)
    }

    /// Sum of ETC means of `w`'s services on `fog`.
    pub fn chain_mean(&self, w: &WorkflowSpec, fog: FogId) -> Result<f64> {
        w.vertices.iter().map(|v| self.etc.mean(&v.kind(), fog)).sum()
    }

    pub fn hop(&self, from: FogId, to: FogId) -> Result<u32> {
        hop_distance(&self.topology, from, to)
    }
}

fn chain_key(w: &WorkflowSpec) -> Result<String> {
    let order = w.topological_order()?;
    let mut key = String::new();
    for id in order {
        let v = w.vertex(id).expect("vertex");
        key.push_str(&v.kind());
        key.push('|');
    }
    Ok(key)
}
