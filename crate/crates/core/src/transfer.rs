//! Function transfer between a space and a net extracted from it.
//!
//! The bridge is a Lipschitz partition of unity subordinate to net balls:
//! every net point `g` carries a bump that is 1 on the κ-ball around `g`,
//! tapers linearly to 0 at radius 3κ/2, and is normalized so the bumps sum
//! to 1 at every vertex. Smoothing pulls a net field back to the space as a
//! bump-weighted average; discretization pushes a space field down to the
//! net by volume-averaging over 4κ-balls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ProxySpace;
use crate::net::KappaNet;

/// Where a scalar field lives: on the vertices of the ambient space or on
/// the points of a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Proxy,
    Net,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Proxy => write!(f, "proxy"),
            Domain::Net => write!(f, "net"),
        }
    }
}

/// A scalar field with values in dense order of its domain: vertex index for
/// `Proxy` fields, net position for `Net` fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn on_proxy(values: Vec<f64>) -> Self {
        ScalarField { domain: Domain::Proxy, values }
    }

    pub fn on_net(values: Vec<f64>) -> Self {
        ScalarField { domain: Domain::Net, values }
    }

    fn expect(&self, domain: Domain, len: usize) -> Result<()> {
        if self.domain != domain {
            return Err(Error::DomainMismatch {
                expected: domain.to_string(),
                found: self.domain.to_string(),
            });
        }
        if self.values.len() != len {
            return Err(Error::invalid(format!(
                "field carries {} values but its domain has {} points",
                self.values.len(),
                len
            )));
        }
        Ok(())
    }
}

/// Normalized bump functions, one per net point.
///
/// Entries are stored sparsely from both sides: `support(pos)` lists the
/// vertices a bump touches, `at_vertex(idx)` lists the bumps touching a
/// vertex. Only strictly positive values are kept.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    kappa: f64,
    lipschitz: f64,
    space_len: usize,
    max_support_dist: f64,
    /// Per net position: `(vertex index, value)`, ascending index.
    per_point: Vec<Vec<(u32, f64)>>,
    /// Per vertex index: `(net position, value)`, ascending position.
    per_vertex: Vec<Vec<(u32, f64)>>,
}

impl PartitionOfUnity {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Lipschitz constant 2/κ of each unnormalized bump.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Number of bumps (net points).
    pub fn bumps(&self) -> usize {
        self.per_point.len()
    }

    pub fn space_len(&self) -> usize {
        self.space_len
    }

    /// Largest distance from a net point to a vertex its bump touches.
    pub fn max_support_dist(&self) -> f64 {
        self.max_support_dist
    }

    /// Vertices in the support of the bump at net position `pos`.
    pub fn support(&self, pos: usize) -> &[(u32, f64)] {
        &self.per_point[pos]
    }

    /// Bumps with positive value at vertex `idx`.
    pub fn at_vertex(&self, idx: usize) -> &[(u32, f64)] {
        &self.per_vertex[idx]
    }

    /// Value of the bump at net position `pos` on vertex `idx` (0 outside
    /// its support).
    pub fn xi(&self, pos: usize, idx: usize) -> f64 {
        let row = &self.per_point[pos];
        match row.binary_search_by_key(&(idx as u32), |&(i, _)| i) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }
}

/// Builds the partition of unity subordinate to the net's 3κ/2-balls.
///
/// Fails with [`Error::UncoveredVertex`] if some vertex lies outside every
/// bump's support, which happens exactly when the net leaves a vertex
/// further than 3κ/2 from all of its points.
pub fn build_partition(net: &KappaNet) -> Result<PartitionOfUnity> {
    let space = net.space();
    let kappa = net.kappa();
    let half = kappa / 2.0;
    let reach = 1.5 * kappa;
    let n = space.len();

    let mut per_point: Vec<Vec<(u32, f64)>> = Vec::with_capacity(net.len());
    let mut sums = vec![0.0f64; n];
    let mut max_dist = 0.0f64;
    for pos in 0..net.len() {
        let src = net.proxy_idx(pos);
        let mut bump = Vec::new();
        for (idx, d) in space.reach_within(src, reach) {
            let eta = ((reach - d) / half).clamp(0.0, 1.0);
            if eta > 0.0 {
                sums[idx] += eta;
                bump.push((idx as u32, eta));
                max_dist = max_dist.max(d);
            }
        }
        per_point.push(bump);
    }

    if let Some(idx) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::UncoveredVertex { vertex: space.id_of(idx) });
    }

    let mut per_vertex: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (pos, bump) in per_point.iter_mut().enumerate() {
        for (idx, v) in bump.iter_mut() {
            *v /= sums[*idx as usize];
            per_vertex[*idx as usize].push((pos as u32, *v));
        }
    }

    Ok(PartitionOfUnity {
        kappa,
        lipschitz: 2.0 / kappa,
        space_len: n,
        max_support_dist: max_dist,
        per_point,
        per_vertex,
    })
}

/// Pulls a net field back to the space: `f(x) = Σ_g f̄(g) ξ_g(x)`.
pub fn smooth(pou: &PartitionOfUnity, field: &ScalarField) -> Result<ScalarField> {
    field.expect(Domain::Net, pou.bumps())?;
    let mut out = Vec::with_capacity(pou.space_len);
    for row in &pou.per_vertex {
        let mut acc = 0.0;
        for &(pos, xi) in row {
            acc += field.values[pos as usize] * xi;
        }
        out.push(acc);
    }
    Ok(ScalarField::on_proxy(out))
}

/// Pushes a space field down to the net: the value at a net point is the
/// volume-weighted mean of the field over the 4κ-ball around it.
pub fn discretize(net: &KappaNet, field: &ScalarField) -> Result<ScalarField> {
    let space = net.space();
    field.expect(Domain::Proxy, space.len())?;
    let balls = net.balls(4.0 * net.kappa());
    let mut out = Vec::with_capacity(net.len());
    for pos in 0..net.len() {
        let mut acc = 0.0;
        for &idx in &balls.verts[pos] {
            acc += field.values[idx as usize] * space.weight(idx as usize);
        }
        out.push(acc / balls.vols[pos]);
    }
    Ok(ScalarField::on_net(out))
}

/// Largest deviation of `Σ_g ξ_g(x)` from 1 over all vertices.
pub fn normalization_error(pou: &PartitionOfUnity) -> f64 {
    let mut worst = 0.0f64;
    for row in &pou.per_vertex {
        let sum: f64 = row.iter().map(|&(_, v)| v).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    worst
}

/// Smallest bump value kept anywhere (sanity floor; all stored values are
/// strictly positive by construction).
pub fn min_value(pou: &PartitionOfUnity) -> f64 {
    let mut min = f64::INFINITY;
    for row in &pou.per_vertex {
        for &(_, v) in row {
            min = min.min(v);
        }
    }
    min
}

/// Largest bump mass that vertices within κ of a net point receive from net
/// points not adjacent to it. With the default adjacency threshold every
/// bump alive on such a vertex belongs to the point itself or one of its net
/// neighbors, so the return value is exactly 0.
pub fn star_violation(net: &KappaNet, pou: &PartitionOfUnity) -> f64 {
    let space = net.space();
    let mut worst = 0.0f64;
    for pos in 0..net.len() {
        let mut allowed: Vec<u32> = net.neighbors(pos).iter().map(|&q| q as u32).collect();
        allowed.push(pos as u32);
        allowed.sort_unstable();
        for (idx, _) in space.reach_within(net.proxy_idx(pos), net.kappa()) {
            let mut mass = 0.0;
            for &(q, xi) in pou.at_vertex(idx) {
                if allowed.binary_search(&q).is_err() {
                    mass += xi;
                }
            }
            worst = worst.max(mass);
        }
    }
    worst
}

/// Largest per-edge slope `|ξ_g(x) − ξ_g(y)| / length(x, y)` over all bumps
/// and edges.
pub fn measured_gradient(space: &ProxySpace, pou: &PartitionOfUnity) -> f64 {
    let mut worst = 0.0f64;
    for e in space.edges() {
        let ra = pou.at_vertex(e.a);
        let rb = pou.at_vertex(e.b);
        let (mut i, mut j) = (0usize, 0usize);
        while i < ra.len() || j < rb.len() {
            let diff = match (ra.get(i), rb.get(j)) {
                (Some(&(pa, va)), Some(&(pb, vb))) => {
                    if pa == pb {
                        i += 1;
                        j += 1;
                        va - vb
                    } else if pa < pb {
                        i += 1;
                        va
                    } else {
                        j += 1;
                        vb
                    }
                }
                (Some(&(_, va)), None) => {
                    i += 1;
                    va
                }
                (None, Some(&(_, vb))) => {
                    j += 1;
                    vb
                }
                (None, None) => break,
            };
            worst = worst.max(diff.abs() / e.len);
        }
    }
    worst
}

/// A priori ceiling `(k + 2) · 2/κ` on any bump's slope, where `k` is the
/// net's degree bound.
pub fn gradient_ceiling(net: &KappaNet) -> f64 {
    (net.degree_bound() as f64 + 2.0) * 2.0 / net.kappa()
}
