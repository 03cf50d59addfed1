//! Maximal separated nets inside a proxy space, their derived adjacency
//! graph, bounded-geometry audits, and distortion-constant estimation for
//! the inclusion map back into the host space.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ProxySpace;

/// Number of net points up to which pair audits scan all pairs; above it,
/// evenly spaced source points are used instead.
const QI_FULL_LIMIT: usize = 600;

/// A maximal `kappa`-separated subset of a proxy space, equipped with the
/// neighbor rule `0 < d(g, h) <= threshold` (threshold defaults to
/// `3 * kappa`). Net points double as a graph in their own right via
/// [`KappaNet::as_graph`].
pub struct KappaNet {
    space: Arc<ProxySpace>,
    kappa: f64,
    threshold: f64,
    /// Net point ids in the order the greedy pass admitted them.
    extraction_order: Vec<u64>,
    /// Net point ids ascending; "position" always refers to this order.
    ids: Vec<u64>,
    /// Proxy vertex index per position.
    idx: Vec<usize>,
    pos_by_proxy: HashMap<usize, usize>,
    /// Neighbor positions per position, ascending.
    adjacency: Vec<Vec<usize>>,
    degree_bound: usize,
    maximal: bool,
    warnings: Vec<String>,
    graph: OnceLock<Arc<ProxySpace>>,
    ball_cache: Mutex<HashMap<u64, Arc<NetBalls>>>,
}

impl std::fmt::Debug for KappaNet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KappaNet")
            .field("kappa", &self.kappa)
            .field("points", &self.ids.len())
            .field("degree_bound", &self.degree_bound)
            .finish()
    }
}

/// Cached ball data around every net point at one fixed radius: member
/// vertices, their total measure, and the edges lying fully inside.
pub struct NetBalls {
    pub radius: f64,
    /// Proxy vertex indices inside each ball, ascending.
    pub verts: Vec<Vec<u32>>,
    /// Vertex measure of each ball.
    pub vols: Vec<f64>,
    /// Indices into `space.edges()` with both endpoints inside the ball.
    pub edge_idx: Vec<Vec<u32>>,
    /// Total edge measure `sum w_e` of each ball.
    pub edge_measure: Vec<f64>,
}

/// Distortion certificate for the inclusion of the net into its host:
/// `(1/a) d_net - b <= d_host <= a d_net + b` over the audited pairs, and
/// every host vertex lies within `c` of the net.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QiEstimate {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sampled_pairs: usize,
    pub grid_step_a: f64,
    pub grid_step_b: f64,
}

/// Result of re-checking every net invariant from scratch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetAudit {
    pub points: usize,
    pub separation_ok: bool,
    pub maximality_ok: bool,
    pub adjacency_ok: bool,
    pub connected: bool,
    pub degree_bound: usize,
    pub covering_radius: f64,
    pub violations: Vec<String>,
}

impl NetAudit {
    pub fn ok(&self) -> bool {
        self.separation_ok && self.maximality_ok && self.adjacency_ok && self.connected
    }
}

/// Greedy extraction: walk the vertices in `order` (ascending id when
/// omitted) and admit each vertex at distance >= `kappa` from everything
/// admitted before it. The result is maximal by construction: every vertex
/// rejected was already within `kappa` of an admitted point.
pub fn extract_net(
    space: &Arc<ProxySpace>,
    kappa: f64,
    order: Option<&[u64]>,
    threshold: Option<f64>,
) -> Result<KappaNet> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be positive (got {kappa})")));
    }
    let n = space.len();
    let order_idx: Vec<usize> = match order {
        None => (0..n).collect(),
        Some(ids) => {
            if ids.len() != n {
                return Err(Error::invalid(format!(
                    "order must be a permutation of all {n} vertices (got {} entries)",
                    ids.len()
                )));
            }
            let mut seen = vec![false; n];
            let mut out = Vec::with_capacity(n);
            for &id in ids {
                let i = space.index_of(id)?;
                if seen[i] {
                    return Err(Error::invalid(format!("order repeats vertex {id}")));
                }
                seen[i] = true;
                out.push(i);
            }
            out
        }
    };

    let mut mindist = vec![f64::INFINITY; n];
    let mut admitted = Vec::new();
    for &v in &order_idx {
        if mindist[v] >= kappa {
            admitted.push(v);
            for (u, d) in space.reach_within(v, kappa) {
                if d < mindist[u] {
                    mindist[u] = d;
                }
            }
        }
    }
    KappaNet::assemble(space, kappa, threshold, admitted)
}

impl KappaNet {
    /// Build a net from an explicit point set. Separation and connectivity
    /// are enforced; maximality is checked but only recorded as a warning,
    /// so deliberately sparse experimental nets are allowed. Downstream
    /// partition construction fails cleanly if coverage is actually broken.
    pub fn from_points(
        space: &Arc<ProxySpace>,
        kappa: f64,
        points: &[u64],
        threshold: Option<f64>,
    ) -> Result<KappaNet> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be positive (got {kappa})")));
        }
        if points.is_empty() {
            return Err(Error::invalid("net must contain at least one point"));
        }
        let mut idx = Vec::with_capacity(points.len());
        let mut seen = HashMap::new();
        for &id in points {
            let i = space.index_of(id)?;
            if seen.insert(i, id).is_some() {
                return Err(Error::invalid(format!("net repeats point {id}")));
            }
            idx.push(i);
        }
        KappaNet::assemble(space, kappa, threshold, idx)
    }

    fn assemble(
        space: &Arc<ProxySpace>,
        kappa: f64,
        threshold: Option<f64>,
        points_idx: Vec<usize>,
    ) -> Result<KappaNet> {
        let threshold = threshold.unwrap_or(3.0 * kappa);
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::invalid(format!(
                "adjacency threshold must be positive (got {threshold})"
            )));
        }
        let extraction_order: Vec<u64> = points_idx.iter().map(|&i| space.id_of(i)).collect();
        let mut idx = points_idx.clone();
        idx.sort_unstable();
        let ids: Vec<u64> = idx.iter().map(|&i| space.id_of(i)).collect();
        let pos_by_proxy: HashMap<usize, usize> =
            idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();

        // Separation plus adjacency in one sweep per net point.
        let reach_radius = threshold.max(kappa);
        let mut adjacency = vec![Vec::new(); idx.len()];
        for (pos, &vi) in idx.iter().enumerate() {
            for (u, d) in space.reach_within(vi, reach_radius) {
                if let Some(&q) = pos_by_proxy.get(&u) {
                    if q == pos {
                        continue;
                    }
                    if d < kappa {
                        return Err(Error::invalid(format!(
                            "separation violated: net points {} and {} are at distance {d} < kappa = {kappa}",
                            ids[pos], ids[q]
                        )));
                    }
                    if d <= threshold {
                        adjacency[pos].push(q);
                    }
                }
            }
        }
        let degree_bound = adjacency.iter().map(Vec::len).max().unwrap_or(0);

        // Net-graph connectivity.
        if idx.len() > 1 {
            let mut seen = vec![false; idx.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for &u in &adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        count += 1;
                        stack.push(u);
                    }
                }
            }
            if count != idx.len() {
                let mut comp = 0;
                let mut seen2 = vec![false; idx.len()];
                for s in 0..idx.len() {
                    if !seen2[s] {
                        comp += 1;
                        let mut st = vec![s];
                        seen2[s] = true;
                        while let Some(v) = st.pop() {
                            for &u in &adjacency[v] {
                                if !seen2[u] {
                                    seen2[u] = true;
                                    st.push(u);
                                }
                            }
                        }
                    }
                }
                return Err(Error::DisconnectedNet { components: comp });
            }
        }

        let mut warnings = Vec::new();
        if idx.len() == 1 {
            warnings.push("net has a single point; kappa exceeds the space diameter".into());
        }
        if kappa < 2.0 * space.max_edge_len() {
            warnings.push(format!(
                "kappa = {kappa} is below twice the maximum edge length {}; ball geometry degenerates near the mesh scale",
                space.max_edge_len()
            ));
        }
        let diam = space.diameter_estimate();
        if kappa > diam / 10.0 {
            warnings.push(format!(
                "kappa = {kappa} exceeds a tenth of the diameter estimate {diam}; the net is coarse relative to the space"
            ));
        }
        let (near, _) = space.nearest_source(&idx);
        let covering = near.iter().cloned().fold(0.0, f64::max);
        let maximal = covering <= kappa;
        if !maximal {
            warnings.push(format!(
                "net is not maximal: some vertex is at distance {covering} > kappa from every net point"
            ));
        }

        Ok(KappaNet {
            space: Arc::clone(space),
            kappa,
            threshold,
            extraction_order,
            ids,
            idx,
            pos_by_proxy,
            adjacency,
            degree_bound,
            maximal,
            warnings,
            graph: OnceLock::new(),
            ball_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn space(&self) -> &Arc<ProxySpace> {
        &self.space
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Net point ids in ascending order; `pos` arguments index this slice.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Ids in the order the extraction pass admitted them.
    pub fn extraction_order(&self) -> &[u64] {
        &self.extraction_order
    }

    pub fn id_at(&self, pos: usize) -> u64 {
        self.ids[pos]
    }

    pub fn proxy_idx(&self, pos: usize) -> usize {
        self.idx[pos]
    }

    pub fn proxy_indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn pos_of_id(&self, id: u64) -> Result<usize> {
        self.ids
            .binary_search(&id)
            .map_err(|_| Error::UnknownVertex(id))
    }

    pub fn pos_of_proxy(&self, idx: usize) -> Option<usize> {
        self.pos_by_proxy.get(&idx).copied()
    }

    pub fn neighbors(&self, pos: usize) -> &[usize] {
        &self.adjacency[pos]
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn is_maximal(&self) -> bool {
        self.maximal
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Adjacency keyed by vertex id, for serialization.
    pub fn adjacency_ids(&self) -> std::collections::BTreeMap<u64, Vec<u64>> {
        self.ids
            .iter()
            .enumerate()
            .map(|(pos, &id)| {
                (
                    id,
                    self.adjacency[pos].iter().map(|&q| self.ids[q]).collect(),
                )
            })
            .collect()
    }

    /// The net as a combinatorial graph: same vertex ids, unit weights, one
    /// unit edge per neighbor pair. Shared and cached, so hop metrics,
    /// energies, and Dirichlet problems on the net reuse the graph machinery.
    pub fn as_graph(&self) -> Arc<ProxySpace> {
        Arc::clone(self.graph.get_or_init(|| {
            let verts = self.ids.iter().map(|&id| (id, Vec::new(), 1.0)).collect();
            let mut edges = Vec::new();
            for (pos, nbrs) in self.adjacency.iter().enumerate() {
                for &q in nbrs {
                    if pos < q {
                        edges.push((self.ids[pos], self.ids[q], 1.0));
                    }
                }
            }
            Arc::new(
                ProxySpace::from_parts(verts, edges)
                    .expect("net graph is connected and validated at assembly"),
            )
        }))
    }

    /// Fact-style bounded-geometry constant: the largest number of net
    /// points found in any closed `r`-ball around any proxy vertex.
    pub fn bounded_geometry(&self, r: f64) -> Result<usize> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("radius must be positive (got {r})")));
        }
        let mut counts = vec![0u32; self.space.len()];
        for &vi in &self.idx {
            for (u, _) in self.space.reach_within(vi, r) {
                counts[u] += 1;
            }
        }
        Ok(counts.iter().copied().max().unwrap_or(0) as usize)
    }

    /// Ball tables at `radius` around every net point, cached per radius.
    pub fn balls(&self, radius: f64) -> Arc<NetBalls> {
        let key = radius.to_bits();
        {
            let cache = self.ball_cache.lock().unwrap();
            if let Some(b) = cache.get(&key) {
                return Arc::clone(b);
            }
        }
        let space = &self.space;
        let mut verts = Vec::with_capacity(self.idx.len());
        let mut vols = Vec::with_capacity(self.idx.len());
        let mut edge_idx = Vec::with_capacity(self.idx.len());
        let mut edge_measure = Vec::with_capacity(self.idx.len());
        let mut stamp = vec![u32::MAX; space.len()];
        for (round, &vi) in self.idx.iter().enumerate() {
            let reach = space.reach_within(vi, radius);
            let mut vol = 0.0;
            let mut members = Vec::with_capacity(reach.len());
            for &(u, _) in &reach {
                stamp[u] = round as u32;
                vol += space.weight(u);
                members.push(u as u32);
            }
            let mut eidx = Vec::new();
            let mut emeasure = 0.0;
            for (k, e) in space.edges().iter().enumerate() {
                if stamp[e.a] == round as u32 && stamp[e.b] == round as u32 {
                    eidx.push(k as u32);
                    emeasure += e.len * (space.weight(e.a) + space.weight(e.b)) / 2.0;
                }
            }
            verts.push(members);
            vols.push(vol);
            edge_idx.push(eidx);
            edge_measure.push(emeasure);
        }
        let balls = Arc::new(NetBalls {
            radius,
            verts,
            vols,
            edge_idx,
            edge_measure,
        });
        self.ball_cache
            .lock()
            .unwrap()
            .insert(key, Arc::clone(&balls));
        balls
    }

    /// Distance to the nearest net point and the position of that point for
    /// every proxy vertex.
    pub fn nearest_net(&self) -> (Vec<f64>, Vec<usize>) {
        let (dist, owner) = self.space.nearest_source(&self.idx);
        let pos = owner
            .iter()
            .map(|&o| *self.pos_by_proxy.get(&o).expect("owner is a net point"))
            .collect();
        (dist, pos)
    }

    /// Re-check every structural invariant from scratch.
    pub fn audit(&self) -> NetAudit {
        let mut violations = Vec::new();

        let mut separation_ok = true;
        for (pos, &vi) in self.idx.iter().enumerate() {
            for (u, d) in self.space.reach_within(vi, self.kappa) {
                if let Some(&q) = self.pos_by_proxy.get(&u) {
                    if q != pos && d < self.kappa {
                        separation_ok = false;
                        violations.push(format!(
                            "points {} and {} at distance {d} < kappa",
                            self.ids[pos], self.ids[q]
                        ));
                    }
                }
            }
        }

        let (near, _) = self.space.nearest_source(&self.idx);
        let covering_radius = near.iter().cloned().fold(0.0, f64::max);
        let maximality_ok = covering_radius <= self.kappa;
        if !maximality_ok {
            violations.push(format!(
                "covering radius {covering_radius} exceeds kappa = {}",
                self.kappa
            ));
        }

        // Recompute adjacency independently and compare, checking symmetry
        // and the threshold rule in one pass.
        let mut adjacency_ok = true;
        for (pos, &vi) in self.idx.iter().enumerate() {
            let mut expect = Vec::new();
            for (u, d) in self.space.reach_within(vi, self.threshold) {
                if let Some(&q) = self.pos_by_proxy.get(&u) {
                    if q != pos && d > 0.0 && d <= self.threshold {
                        expect.push(q);
                    }
                }
            }
            if expect != self.adjacency[pos] {
                adjacency_ok = false;
                violations.push(format!("adjacency mismatch at point {}", self.ids[pos]));
            }
            for &q in &self.adjacency[pos] {
                if !self.adjacency[q].contains(&pos) {
                    adjacency_ok = false;
                    violations.push(format!(
                        "asymmetric adjacency between {} and {}",
                        self.ids[pos], self.ids[q]
                    ));
                }
            }
        }

        let connected = self.len() == 1 || {
            let mut seen = vec![false; self.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for &u in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        count += 1;
                        stack.push(u);
                    }
                }
            }
            count == self.len()
        };

        NetAudit {
            points: self.len(),
            separation_ok,
            maximality_ok,
            adjacency_ok,
            connected,
            degree_bound: self.degree_bound,
            covering_radius,
            violations,
        }
    }

    /// Fit distortion constants for the inclusion of the net into its host
    /// space on a fixed grid, smallest `a` first, then smallest `b`.
    ///
    /// Host distances use the proxy metric; net distances are hop counts in
    /// the net graph. All pairs are scanned up to [`QI_FULL_LIMIT`] points,
    /// evenly spaced source points beyond that.
    pub fn estimate_qi(&self) -> Result<QiEstimate> {
        if self.len() < 2 {
            return Err(Error::invalid("distortion estimate requires at least 2 net points"));
        }
        let (near, _) = self.space.nearest_source(&self.idx);
        let c = near.iter().cloned().fold(0.0, f64::max);

        let graph = self.as_graph();
        let sources: Vec<usize> = if self.len() <= QI_FULL_LIMIT {
            (0..self.len()).collect()
        } else {
            let stride = self.len().div_ceil(QI_FULL_LIMIT);
            (0..self.len()).step_by(stride).collect()
        };

        // Collect (d_net, d_host) per pair once; grid search reuses them.
        let mut pairs = Vec::new();
        for &s in &sources {
            let d_host = self.space.distances_from(self.idx[s]);
            let d_net = graph.distances_from(s);
            for t in 0..self.len() {
                if t == s || (self.len() <= QI_FULL_LIMIT && t < s) {
                    continue;
                }
                pairs.push((s, t, d_net[t], d_host[self.idx[t]]));
            }
        }

        let grid_step_a = 0.25;
        let grid_step_b = 0.25 * self.kappa;
        let a_max = 16.0f64.max(4.0 * self.kappa).max(2.0 * self.threshold);
        let b_max = 16.0 * self.kappa;
        let mut a = 1.0;
        while a <= a_max + 1e-12 {
            // Smallest b satisfying both inequalities at this a.
            let mut b_needed = 0.0f64;
            let mut worst = None;
            for &(s, t, dn, dh) in &pairs {
                let need = (dh - a * dn).max(dn / a - dh);
                if need > b_needed {
                    b_needed = need;
                    worst = Some((s, t, dn, dh));
                }
            }
            if b_needed <= b_max + 1e-12 {
                let b = if b_needed <= 0.0 {
                    0.0
                } else {
                    (b_needed / grid_step_b).ceil() * grid_step_b
                };
                return Ok(QiEstimate {
                    a,
                    b,
                    c,
                    sampled_pairs: pairs.len(),
                    grid_step_a,
                    grid_step_b,
                });
            }
            if (a - a_max).abs() < 1e-12 {
                if let Some((s, t, dn, dh)) = worst {
                    return Err(Error::QiGridExhausted {
                        g: self.ids[s],
                        h: self.ids[t],
                        d_net: dn,
                        d_host: dh,
                    });
                }
            }
            a += grid_step_a;
        }
        unreachable!("grid loop always terminates via return or error");
    }

    /// Re-verify a distortion certificate with an independent full pairwise
    /// scan. Intended for small spaces.
    pub fn verify_qi(&self, est: &QiEstimate) -> Result<()> {
        let graph = self.as_graph();
        for s in 0..self.len() {
            let d_host = self.space.distances_from(self.idx[s]);
            let d_net = graph.distances_from(s);
            for t in s + 1..self.len() {
                let dn = d_net[t];
                let dh = d_host[self.idx[t]];
                if dh > est.a * dn + est.b + 1e-9 || dn / est.a - est.b > dh + 1e-9 {
                    return Err(Error::invalid(format!(
                        "certificate (a={}, b={}) fails on pair ({}, {}): d_net={dn}, d_host={dh}",
                        est.a, est.b, self.ids[s], self.ids[t]
                    )));
                }
            }
        }
        let (near, _) = self.space.nearest_source(&self.idx);
        let c = near.iter().cloned().fold(0.0, f64::max);
        if c > est.c + 1e-9 {
            return Err(Error::invalid(format!(
                "certificate covering radius {} is below the measured {c}",
                est.c
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    fn path7() -> Arc<ProxySpace> {
        Arc::new(generate::path(7).unwrap())
    }

    #[test]
    fn greedy_ascending_on_path7() {
        let s = path7();
        let net = extract_net(&s, 2.0, None, None).unwrap();
        assert_eq!(net.ids(), &[0, 2, 4, 6]);
        assert_eq!(net.extraction_order(), &[0, 2, 4, 6]);
        assert!(net.is_maximal());
    }

    #[test]
    fn greedy_descending_on_path7() {
        let s = path7();
        let order: Vec<u64> = (0..7).rev().collect();
        let net = extract_net(&s, 2.0, Some(&order), None).unwrap();
        assert_eq!(net.extraction_order(), &[6, 4, 2, 0]);
        assert_eq!(net.ids(), &[0, 2, 4, 6]);
    }

    #[test]
    fn kappa_one_admits_every_vertex() {
        let s = path7();
        let net = extract_net(&s, 1.0, None, None).unwrap();
        assert_eq!(net.len(), 7);
        // Mesh-scale warning: kappa below twice the max edge length.
        assert!(net.warnings().iter().any(|w| w.contains("mesh scale")));
    }

    #[test]
    fn adjacency_rule_on_path7() {
        let s = path7();
        let net = extract_net(&s, 2.0, None, None).unwrap();
        // 3 kappa = 6 reaches every other net point from 0.
        let pos0 = net.pos_of_id(0).unwrap();
        let nbr_ids: Vec<u64> = net.neighbors(pos0).iter().map(|&q| net.id_at(q)).collect();
        assert_eq!(nbr_ids, vec![2, 4, 6]);
        assert_eq!(net.degree_bound(), 3);
    }

    #[test]
    fn single_point_net_has_empty_adjacency() {
        let s = path7();
        let net = extract_net(&s, 10.0, None, None).unwrap();
        assert_eq!(net.len(), 1);
        assert!(net.neighbors(0).is_empty());
        assert!(net.warnings().iter().any(|w| w.contains("single point")));
    }

    #[test]
    fn interior_degree_on_segment() {
        // Even integers of a 0..=20 segment: interior degree 6 under the
        // |i - j| <= 6 rule.
        let s = Arc::new(generate::path(21).unwrap());
        let net = extract_net(&s, 2.0, None, None).unwrap();
        assert_eq!(net.ids(), &(0..=20).step_by(2).collect::<Vec<u64>>());
        let pos10 = net.pos_of_id(10).unwrap();
        assert_eq!(net.neighbors(pos10).len(), 6);
    }

    #[test]
    fn bounded_geometry_counts() {
        let s = Arc::new(generate::path(21).unwrap());
        // kappa = 1: the net is every vertex; a 3-ball holds 7 of them.
        let net = extract_net(&s, 1.0, None, None).unwrap();
        assert_eq!(net.bounded_geometry(3.0).unwrap(), 7);

        let s7 = path7();
        let net7 = extract_net(&s7, 2.0, None, None).unwrap();
        // The closed 2-ball around vertex 2 reaches net points 0, 2 and 4.
        assert_eq!(net7.bounded_geometry(2.0).unwrap(), 3);
        // r below kappa / 2: separation forbids two points in one ball.
        assert_eq!(net7.bounded_geometry(0.9).unwrap(), 1);
        // Monotone in r.
        assert!(net7.bounded_geometry(4.0).unwrap() >= net7.bounded_geometry(2.0).unwrap());
    }

    #[test]
    fn net_graph_hop_metric_spans_threshold() {
        let s = Arc::new(generate::path(64).unwrap());
        let net = extract_net(&s, 2.0, None, None).unwrap();
        let graph = net.as_graph();
        // Each net hop spans at most 3 kappa of host distance.
        for pos in 0..net.len() {
            let dg = graph.distances_from(pos);
            let dm = s.distances_from(net.proxy_idx(pos));
            for q in 0..net.len() {
                assert!(dm[net.proxy_idx(q)] <= 3.0 * net.kappa() * dg[q] + 1e-9);
            }
        }
    }

    #[test]
    fn qi_estimate_on_path7() {
        let s = path7();
        let net = extract_net(&s, 2.0, None, None).unwrap();
        let est = net.estimate_qi().unwrap();
        assert!(est.c <= net.kappa());
        assert_eq!(est.c, 1.0);
        // Pair (0,6): host distance 6, one hop. Any certificate obeys
        // 6 <= a + b.
        assert!(est.a + est.b >= 6.0 - 1e-12);
        // Lexicographic fit: a = 1 first, then the least b on the grid.
        assert_eq!(est.a, 1.0);
        assert_eq!(est.b, 5.0);
        net.verify_qi(&est).unwrap();
    }

    #[test]
    fn qi_single_edge_net_with_b_zero() {
        // Two vertices joined by an edge of length 6, kappa = 2: the single
        // pair has host distance 3 kappa at one hop. With b forced to zero
        // the least grid a is 6; the lexicographic fit instead keeps a = 1.
        let s = Arc::new(
            ProxySpace::from_parts(
                vec![(0, vec![], 1.0), (1, vec![], 1.0)],
                vec![(0, 1, 6.0)],
            )
            .unwrap(),
        );
        let net = extract_net(&s, 2.0, None, None).unwrap();
        assert_eq!(net.len(), 2);
        let est = net.estimate_qi().unwrap();
        assert_eq!((est.a, est.b), (1.0, 5.0));
        net.verify_qi(&est).unwrap();
        // Feasibility with b = 0 starts exactly at the first grid a >= 6.
        let feasible = |a: f64| 6.0 <= a + 0.0 && 1.0 / a - 0.0 <= 6.0;
        let mut a = 1.0;
        while !feasible(a) {
            a += 0.25;
        }
        assert_eq!(a, 6.0);
    }

    #[test]
    fn audit_passes_for_extracted_nets() {
        for kappa in [1.0, 2.0, 3.5] {
            let s = Arc::new(generate::path(30).unwrap());
            let net = extract_net(&s, kappa, None, None).unwrap();
            let audit = net.audit();
            assert!(audit.ok(), "kappa {kappa}: {:?}", audit.violations);
            assert!(audit.covering_radius <= kappa);
        }
    }

    #[test]
    fn from_points_rejects_separation_violations() {
        let s = path7();
        assert!(KappaNet::from_points(&s, 2.0, &[0, 1], None).is_err());
        // Sparse but separated: allowed, flagged as not maximal.
        let s13 = Arc::new(generate::path(13).unwrap());
        let net = KappaNet::from_points(&s13, 2.0, &[0, 12], None).unwrap_err();
        // Points 0 and 12 are 12 > 3 kappa apart: the net graph is
        // disconnected, which is an error.
        assert!(matches!(net, Error::DisconnectedNet { .. }));
        // Within threshold: fine.
        let net = KappaNet::from_points(&s13, 2.0, &[0, 4], None).unwrap();
        assert!(!net.is_maximal());
        assert!(net.warnings().iter().any(|w| w.contains("not maximal")));
    }

    #[test]
    fn kappa_three_and_a_half_on_path7() {
        let s = path7();
        let net = extract_net(&s, 3.5, None, None).unwrap();
        assert_eq!(net.ids(), &[0, 4]);
    }

    #[test]
    fn threshold_override_changes_adjacency() {
        let s = Arc::new(generate::path(21).unwrap());
        let net = extract_net(&s, 2.0, None, Some(2.0)).unwrap();
        let pos10 = net.pos_of_id(10).unwrap();
        assert_eq!(net.neighbors(pos10).len(), 2);
    }

    #[test]
    fn balls_cover_expected_vertices() {
        let s = path7();
        let net = extract_net(&s, 2.0, None, None).unwrap();
        let balls = net.balls(2.0);
        let pos2 = net.pos_of_id(2).unwrap();
        assert_eq!(balls.verts[pos2], vec![0, 1, 2, 3, 4]);
        assert_eq!(balls.vols[pos2], 5.0);
        // Edges fully inside [0, 4]: the first four path edges.
        assert_eq!(balls.edge_idx[pos2].len(), 4);
        assert_eq!(balls.edge_measure[pos2], 4.0);
    }

    #[test]
    fn nearest_net_tracks_positions() {
        let s = path7();
        let net = extract_net(&s, 2.0, None, None).unwrap();
        let (dist, pos) = net.nearest_net();
        assert_eq!(dist[1], 1.0);
        assert_eq!(net.id_at(pos[1]), 0);
        assert_eq!(dist[3], 1.0);
        assert_eq!(net.id_at(pos[3]), 2);
    }
}
