//! Finite metric-measure spaces: weighted graphs with shortest-path
//! distances, metric balls, and volume-weighted measure.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a space is interpreted: a pure combinatorial graph (unit edge lengths,
/// unit vertex weights) or a weighted mesh standing in for a continuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    CombinatorialGraph,
    ManifoldProxy,
}

/// Undirected edge between dense vertex indices, `a < b`.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub len: f64,
}

/// Maximum number of full single-source distance vectors kept in the cache.
const DISTANCE_CACHE_CAP: usize = 256;

/// A finite weighted graph together with its shortest-path metric and a
/// vertex measure. Immutable after construction; all queries are pure.
pub struct ProxySpace {
    ids: Vec<u64>,
    index: HashMap<u64, usize>,
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
    edges: Vec<Edge>,
    kind: SpaceKind,
    degree_bound: usize,
    max_edge_len: f64,
    min_edge_len: f64,
    cache: Mutex<DistanceCache>,
}

struct DistanceCache {
    map: HashMap<usize, Arc<Vec<f64>>>,
    order: Vec<usize>,
}

impl std::fmt::Debug for ProxySpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProxySpace")
            .field("vertices", &self.ids.len())
            .field("edges", &self.edges.len())
            .field("kind", &self.kind)
            .field("degree_bound", &self.degree_bound)
            .finish()
    }
}

struct VertexSpec {
    line: usize,
    id: u64,
    coords: Vec<f64>,
    weight: f64,
}

struct EdgeSpec {
    line: usize,
    a: u64,
    b: u64,
    len: f64,
}

impl ProxySpace {
    /// Parse the line-based space format:
    ///
    /// ```text
    /// # comment
    /// v <id> [x y ...] [w=<weight>]
    /// e <id> <id> [len=<length>]
    /// ```
    ///
    /// Defaults: `w=1`, `len=1`. The graph must be connected, free of
    /// self-loops and duplicates, with positive finite lengths and weights.
    pub fn parse(text: &str) -> Result<ProxySpace> {
        let mut verts = Vec::new();
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tok = trimmed.split_whitespace();
            match tok.next() {
                Some("v") => {
                    let id = parse_id(tok.next(), line, "vertex id")?;
                    let mut coords = Vec::new();
                    let mut weight = 1.0;
                    for t in tok {
                        if let Some(w) = t.strip_prefix("w=") {
                            weight = parse_float(w, line, "weight")?;
                        } else {
                            coords.push(parse_float(t, line, "coordinate")?);
                        }
                    }
                    verts.push(VertexSpec {
                        line,
                        id,
                        coords,
                        weight,
                    });
                }
                Some("e") => {
                    let a = parse_id(tok.next(), line, "edge endpoint")?;
                    let b = parse_id(tok.next(), line, "edge endpoint")?;
                    let mut len = 1.0;
                    for t in tok {
                        if let Some(l) = t.strip_prefix("len=") {
                            len = parse_float(l, line, "length")?;
                        } else {
                            return Err(Error::Parse {
                                line,
                                msg: format!("unexpected token {t:?} on edge line"),
                            });
                        }
                    }
                    edges.push(EdgeSpec { line, a, b, len });
                }
                Some(other) => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown record {other:?} (expected `v` or `e`)"),
                    })
                }
                None => unreachable!(),
            }
        }
        Self::build(verts, edges)
    }

    /// Construct from in-memory data: `(id, coords, weight)` per vertex and
    /// `(id, id, length)` per edge. Same validation as [`ProxySpace::parse`].
    pub fn from_parts(
        vertices: Vec<(u64, Vec<f64>, f64)>,
        edges: Vec<(u64, u64, f64)>,
    ) -> Result<ProxySpace> {
        let verts = vertices
            .into_iter()
            .map(|(id, coords, weight)| VertexSpec {
                line: 0,
                id,
                coords,
                weight,
            })
            .collect();
        let edges = edges
            .into_iter()
            .map(|(a, b, len)| EdgeSpec { line: 0, a, b, len })
            .collect();
        Self::build(verts, edges)
    }

    fn build(verts: Vec<VertexSpec>, edge_specs: Vec<EdgeSpec>) -> Result<ProxySpace> {
        if verts.is_empty() {
            return Err(Error::invalid("space has no vertices"));
        }
        // Dense indices follow ascending vertex id.
        let mut order: Vec<usize> = (0..verts.len()).collect();
        order.sort_by_key(|&i| verts[i].id);
        let mut ids = Vec::with_capacity(verts.len());
        let mut coords = Vec::with_capacity(verts.len());
        let mut weights = Vec::with_capacity(verts.len());
        let mut index = HashMap::with_capacity(verts.len());
        for &i in &order {
            let v = &verts[i];
            if !(v.weight > 0.0 && v.weight.is_finite()) {
                return Err(Error::BadWeight {
                    line: v.line,
                    value: v.weight,
                });
            }
            if index.insert(v.id, ids.len()).is_some() {
                return Err(Error::Parse {
                    line: v.line,
                    msg: format!("duplicate vertex id {}", v.id),
                });
            }
            ids.push(v.id);
            coords.push(v.coords.clone());
            weights.push(v.weight);
        }

        let n = ids.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(edge_specs.len());
        let mut seen = HashMap::new();
        for e in &edge_specs {
            if e.a == e.b {
                return Err(Error::SelfLoop {
                    line: e.line,
                    id: e.a,
                });
            }
            if !(e.len > 0.0 && e.len.is_finite()) {
                return Err(Error::BadLength {
                    line: e.line,
                    value: e.len,
                });
            }
            let &ia = index.get(&e.a).ok_or(Error::Parse {
                line: e.line,
                msg: format!("edge references unknown vertex {}", e.a),
            })?;
            let &ib = index.get(&e.b).ok_or(Error::Parse {
                line: e.line,
                msg: format!("edge references unknown vertex {}", e.b),
            })?;
            let key = (ia.min(ib), ia.max(ib));
            if seen.insert(key, e.line).is_some() {
                return Err(Error::Parse {
                    line: e.line,
                    msg: format!("duplicate edge {} {}", e.a, e.b),
                });
            }
            adj[ia].push((ib, e.len));
            adj[ib].push((ia, e.len));
            edges.push(Edge {
                a: key.0,
                b: key.1,
                len: e.len,
            });
        }
        for lists in adj.iter_mut() {
            lists.sort_by_key(|&(j, _)| j);
        }
        edges.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));

        let degree_bound = adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_edge_len = edges.iter().map(|e| e.len).fold(0.0, f64::max);
        let min_edge_len = edges.iter().map(|e| e.len).fold(f64::INFINITY, f64::min);
        let unit = edges.iter().all(|e| e.len == 1.0) && weights.iter().all(|&w| w == 1.0);
        let kind = if unit {
            SpaceKind::CombinatorialGraph
        } else {
            SpaceKind::ManifoldProxy
        };

        let space = ProxySpace {
            ids,
            index,
            coords,
            weights,
            adj,
            edges,
            kind,
            degree_bound,
            max_edge_len,
            min_edge_len,
            cache: Mutex::new(DistanceCache {
                map: HashMap::new(),
                order: Vec::new(),
            }),
        };

        // Connectivity check via one sweep from the first vertex.
        let dist = space.dijkstra(&[0], f64::INFINITY);
        let reachable = dist.iter().filter(|d| d.is_finite()).count();
        if reachable != space.ids.len() {
            return Err(Error::Disconnected {
                from: space.ids[0],
                reachable,
                total: space.ids.len(),
            });
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn id_of(&self, idx: usize) -> u64 {
        self.ids[idx]
    }

    pub fn index_of(&self, id: u64) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownVertex(id))
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    pub fn coords(&self, idx: usize) -> &[f64] {
        &self.coords[idx]
    }

    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adj[idx]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn max_edge_len(&self) -> f64 {
        self.max_edge_len
    }

    pub fn min_edge_len(&self) -> f64 {
        self.min_edge_len
    }

    pub fn total_volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Label-setting shortest-path sweep from `sources` (distance 0 at each),
    /// exploring nothing beyond `radius`. Unreached entries are `+inf`.
    fn dijkstra(&self, sources: &[usize], radius: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.ids.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(HeapEntry { dist: 0.0, idx: s });
        }
        while let Some(HeapEntry { dist: d, idx }) = heap.pop() {
            if d > dist[idx] {
                continue;
            }
            for &(j, len) in &self.adj[idx] {
                let nd = d + len;
                if nd < dist[j] && nd <= radius {
                    dist[j] = nd;
                    heap.push(HeapEntry { dist: nd, idx: j });
                }
            }
        }
        dist
    }

    /// Full distance vector from one source, served from the per-source cache.
    pub fn distances_from(&self, src: usize) -> Arc<Vec<f64>> {
        assert!(src < self.ids.len());
        {
            let cache = self.cache.lock().unwrap();
            if let Some(d) = cache.map.get(&src) {
                return Arc::clone(d);
            }
        }
        let d = Arc::new(self.dijkstra(&[src], f64::INFINITY));
        let mut cache = self.cache.lock().unwrap();
        if cache.map.len() >= DISTANCE_CACHE_CAP {
            // Evict the oldest half; simple and keeps amortized cost low.
            let drop_count = cache.order.len() / 2;
            let dropped: Vec<usize> = cache.order.drain(..drop_count).collect();
            for k in dropped {
                cache.map.remove(&k);
            }
        }
        if cache.map.insert(src, Arc::clone(&d)).is_none() {
            cache.order.push(src);
        }
        d
    }

    /// Vertices within `radius` of `src`, as `(index, distance)` pairs in
    /// ascending index order.
    pub fn reach_within(&self, src: usize, radius: f64) -> Vec<(usize, f64)> {
        let dist = self.dijkstra(&[src], radius);
        dist.into_iter()
            .enumerate()
            .filter(|(_, d)| d.is_finite())
            .collect()
    }

    /// Distance from every vertex to the nearest source, plus the index of
    /// that source (ties broken toward the earlier entry of `sources`).
    pub fn nearest_source(&self, sources: &[usize]) -> (Vec<f64>, Vec<usize>) {
        assert!(!sources.is_empty());
        let mut dist = vec![f64::INFINITY; self.ids.len()];
        let mut owner = vec![usize::MAX; self.ids.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if dist[s] > 0.0 || owner[s] == usize::MAX {
                dist[s] = 0.0;
                owner[s] = s;
                heap.push(HeapEntry { dist: 0.0, idx: s });
            }
        }
        while let Some(HeapEntry { dist: d, idx }) = heap.pop() {
            if d > dist[idx] {
                continue;
            }
            for &(j, len) in &self.adj[idx] {
                let nd = d + len;
                if nd < dist[j] {
                    dist[j] = nd;
                    owner[j] = owner[idx];
                    heap.push(HeapEntry { dist: nd, idx: j });
                }
            }
        }
        (dist, owner)
    }

    /// Shortest-path metric between two vertex ids.
    pub fn distance(&self, a: u64, b: u64) -> Result<f64> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        Ok(self.distances_from(ia)[ib])
    }

    /// Closed metric ball: ids of vertices within `r` of `center`, ascending.
    pub fn ball(&self, center: u64, r: f64) -> Result<Vec<u64>> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("ball radius must be >= 0 (got {r})")));
        }
        let c = self.index_of(center)?;
        Ok(self
            .reach_within(c, r)
            .into_iter()
            .map(|(i, _)| self.ids[i])
            .collect())
    }

    /// Total vertex measure of a set given by ids.
    pub fn volume(&self, set: &[u64]) -> Result<f64> {
        let mut total = 0.0;
        for &id in set {
            total += self.weights[self.index_of(id)?];
        }
        Ok(total)
    }

    /// Measure of the closed ball of radius `r` around a dense index.
    pub fn ball_volume_idx(&self, center: usize, r: f64) -> f64 {
        self.reach_within(center, r)
            .iter()
            .map(|&(i, _)| self.weights[i])
            .sum()
    }

    /// Min/max ball measure over the given centers at each radius.
    pub fn volume_profile(&self, radii: &[f64], centers: &[u64]) -> Result<BallVolumeProfile> {
        if centers.is_empty() {
            return Err(Error::invalid("volume profile requires at least one center"));
        }
        if radii.is_empty() {
            return Err(Error::invalid("volume profile requires at least one radius"));
        }
        for pair in radii.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(Error::invalid("profile radii must be strictly increasing"));
            }
        }
        if !(radii[0] >= 0.0) {
            return Err(Error::invalid("profile radii must be nonnegative"));
        }
        let rmax = *radii.last().unwrap();
        let mut vmin = vec![f64::INFINITY; radii.len()];
        let mut vmax = vec![0.0f64; radii.len()];
        for &c in centers {
            let ci = self.index_of(c)?;
            let mut reach = self.reach_within(ci, rmax);
            reach.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));
            let mut acc = 0.0;
            let mut k = 0;
            for (ri, &r) in radii.iter().enumerate() {
                while k < reach.len() && reach[k].1 <= r {
                    acc += self.weights[reach[k].0];
                    k += 1;
                }
                vmin[ri] = vmin[ri].min(acc);
                vmax[ri] = vmax[ri].max(acc);
            }
        }
        Ok(BallVolumeProfile {
            radii: radii.to_vec(),
            vmin,
            vmax,
            centers: centers.len(),
        })
    }

    /// Lower bound on the diameter via a double sweep: the farthest vertex
    /// from an arbitrary start, then the farthest distance from that vertex.
    pub fn diameter_estimate(&self) -> f64 {
        let d0 = self.distances_from(0);
        let far = (0..self.ids.len())
            .max_by(|&a, &b| d0[a].partial_cmp(&d0[b]).unwrap())
            .unwrap();
        let d1 = self.distances_from(far);
        d1.iter().cloned().fold(0.0, f64::max)
    }

    /// Vertex indices of a shortest path from `src` to the vertex farthest
    /// from it, in order of increasing distance. Used as a canonical
    /// escaping-ray construction in experiments.
    pub fn ray_to_farthest(&self, src: usize) -> Vec<usize> {
        let dist = self.dijkstra(&[src], f64::INFINITY);
        let far = (0..self.ids.len())
            .max_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap())
            .unwrap();
        // Walk back along tight edges, preferring the lowest-index parent.
        let mut path = vec![far];
        let mut cur = far;
        while cur != src {
            let mut parent = None;
            for &(j, len) in &self.adj[cur] {
                if (dist[j] + len - dist[cur]).abs() <= 1e-9 * (1.0 + dist[cur]) {
                    parent = Some(j);
                    break;
                }
            }
            match parent {
                Some(p) => {
                    path.push(p);
                    cur = p;
                }
                None => break,
            }
        }
        path.reverse();
        path
    }

    /// Writes the space back out in the line format accepted by `parse`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, &id) in self.ids.iter().enumerate() {
            out.push_str(&format!("v {id}"));
            for c in &self.coords[i] {
                out.push_str(&format!(" {c}"));
            }
            if self.weights[i] != 1.0 {
                out.push_str(&format!(" w={}", self.weights[i]));
            }
            out.push('\n');
        }
        for e in &self.edges {
            out.push_str(&format!("e {} {}", self.ids[e.a], self.ids[e.b]));
            if e.len != 1.0 {
                out.push_str(&format!(" len={}", e.len));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-radius min/max ball measure over a set of sampled centers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallVolumeProfile {
    pub radii: Vec<f64>,
    pub vmin: Vec<f64>,
    pub vmax: Vec<f64>,
    pub centers: usize,
}

/// Min-heap entry for the label-setting sweep.
struct HeapEntry {
    dist: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.idx == other.idx
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we need smallest distance first.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

fn parse_id(tok: Option<&str>, line: usize, what: &str) -> Result<u64> {
    let t = tok.ok_or(Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    t.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} {t:?}"),
    })
}

fn parse_float(t: &str, line: usize, what: &str) -> Result<f64> {
    t.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} {t:?}"),
    })
}
