//! Deterministic fixture generators: path, 2-D lattice, regular tree, and a
//! triangulated hyperbolic-disk mesh with exponential ball-volume growth.

use crate::error::{Error, Result};
use crate::geometry::ProxySpace;

/// Unit-edge path on `n` vertices, ids `0..n`.
pub fn path(n: usize) -> Result<ProxySpace> {
    if n < 2 {
        return Err(Error::invalid("path requires n >= 2"));
    }
    let verts = (0..n as u64).map(|i| (i, vec![i as f64], 1.0)).collect();
    let edges = (0..n as u64 - 1).map(|i| (i, i + 1, 1.0)).collect();
    ProxySpace::from_parts(verts, edges)
}

/// Unit-edge `nx` by `ny` grid, ids row-major.
pub fn lattice2d(nx: usize, ny: usize) -> Result<ProxySpace> {
    if nx < 2 || ny < 2 {
        return Err(Error::invalid("lattice2d requires nx >= 2 and ny >= 2"));
    }
    let id = |x: usize, y: usize| (y * nx + x) as u64;
    let mut verts = Vec::with_capacity(nx * ny);
    let mut edges = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            verts.push((id(x, y), vec![x as f64, y as f64], 1.0));
            if x + 1 < nx {
                edges.push((id(x, y), id(x + 1, y), 1.0));
            }
            if y + 1 < ny {
                edges.push((id(x, y), id(x, y + 1), 1.0));
            }
        }
    }
    ProxySpace::from_parts(verts, edges)
}

/// Tree in which every vertex has `degree` neighbors (the root has `degree`
/// children, interior vertices `degree - 1`), truncated at `depth`. Ids are
/// assigned in breadth-first order, so id order is depth order.
pub fn regular_tree(degree: usize, depth: usize) -> Result<ProxySpace> {
    if degree < 2 {
        return Err(Error::invalid("regular-tree requires degree >= 2"));
    }
    if depth < 1 {
        return Err(Error::invalid("regular-tree requires depth >= 1"));
    }
    let mut verts = vec![(0u64, vec![], 1.0)];
    let mut edges = Vec::new();
    let mut frontier = vec![0u64];
    let mut next_id = 1u64;
    for level in 0..depth {
        let children_per = if level == 0 { degree } else { degree - 1 };
        let mut next_frontier = Vec::new();
        for &parent in &frontier {
            for _ in 0..children_per {
                verts.push((next_id, vec![], 1.0));
                edges.push((parent, next_id, 1.0));
                next_frontier.push(next_id);
                next_id += 1;
            }
        }
        frontier = next_frontier;
    }
    ProxySpace::from_parts(verts, edges)
}

/// Triangulated patch of the hyperbolic plane built from concentric rings.
///
/// Ring `j` sits at hyperbolic radius `j * delta` and carries
/// `max(8, ceil(2 pi sinh(r_j) / delta))` vertices, so ring population grows
/// exponentially while edge lengths stay near `delta`. Edge lengths are exact
/// hyperbolic distances; vertex weights are the area of the annular cell each
/// vertex represents. With `rings = 12, delta = 0.48` this yields ~5.4k
/// vertices and max edge length well under 1.
pub fn hyperbolic_disk_mesh(rings: usize, delta: f64) -> Result<ProxySpace> {
    if rings < 2 {
        return Err(Error::invalid("hyperbolic-disk-mesh requires rings >= 2"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("hyperbolic-disk-mesh requires delta > 0"));
    }
    let tau = std::f64::consts::TAU;
    // (radius, angle) per vertex; ring sizes first.
    let ring_count = |j: usize| -> usize {
        let r = j as f64 * delta;
        let ideal = (tau * r.sinh() / delta).ceil() as usize;
        ideal.max(8)
    };
    let annulus_area = |lo: f64, hi: f64| tau * (hi.cosh() - lo.cosh());

    let mut verts: Vec<(u64, Vec<f64>, f64)> = Vec::new();
    let mut edges: Vec<(u64, u64, f64)> = Vec::new();
    // Polar coordinates recorded as vertex coordinates for inspection.
    let center_weight = annulus_area(0.0, delta / 2.0);
    verts.push((0, vec![0.0, 0.0], center_weight));

    let hyp_dist = |r1: f64, t1: f64, r2: f64, t2: f64| -> f64 {
        if r1 == 0.0 {
            return r2;
        }
        if r2 == 0.0 {
            return r1;
        }
        let c = r1.cosh() * r2.cosh() - r1.sinh() * r2.sinh() * (t1 - t2).cos();
        c.max(1.0).acosh()
    };

    let mut ring_start = vec![0u64; rings + 1];
    let mut next_id = 1u64;
    for j in 1..=rings {
        ring_start[j] = next_id;
        let n_j = ring_count(j);
        let r = j as f64 * delta;
        let w = annulus_area(r - delta / 2.0, r + delta / 2.0) / n_j as f64;
        for i in 0..n_j {
            let theta = tau * i as f64 / n_j as f64;
            verts.push((next_id, vec![r, theta], w));
            next_id += 1;
        }
        // Ring edges between angular neighbors.
        for i in 0..n_j {
            let a = ring_start[j] + i as u64;
            let b = ring_start[j] + ((i + 1) % n_j) as u64;
            let ta = tau * i as f64 / n_j as f64;
            let tb = tau * ((i + 1) % n_j) as f64 / n_j as f64;
            if n_j > 2 {
                edges.push((a.min(b), a.max(b), hyp_dist(r, ta, r, tb)));
            }
        }
    }

    // Spokes: ring 1 fans out from the center.
    for i in 0..ring_count(1) {
        edges.push((0, ring_start[1] + i as u64, delta));
    }

    // Triangulate each annulus by merging the two rings in angle order.
    for j in 1..rings {
        let (n_in, n_out) = (ring_count(j), ring_count(j + 1));
        let (r_in, r_out) = (j as f64 * delta, (j + 1) as f64 * delta);
        let angle_in = |k: usize| tau * (k % n_in) as f64 / n_in as f64;
        let angle_out = |i: usize| tau * (i % n_out) as f64 / n_out as f64;
        let vid_in = |k: usize| ring_start[j] + (k % n_in) as u64;
        let vid_out = |i: usize| ring_start[j + 1] + (i % n_out) as u64;

        let mut push = |i: usize, k: usize| {
            let a = vid_out(i);
            let b = vid_in(k);
            let d = hyp_dist(r_out, angle_out(i), r_in, angle_in(k));
            edges.push((a.min(b), a.max(b), d));
        };
        let (mut i, mut k) = (0usize, 0usize);
        push(0, 0);
        while i < n_out || k < n_in {
            let next_out = tau * (i + 1) as f64 / n_out as f64;
            let next_in = tau * (k + 1) as f64 / n_in as f64;
            if i < n_out && (k == n_in || next_out <= next_in) {
                i += 1;
                push(i, k);
            } else {
                k += 1;
                push(i, k);
            }
        }
    }

    // The merge can emit the closing edge twice (both pointers wrap onto the
    // starting pair); dedupe before constructing.
    edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    edges.dedup_by_key(|e| (e.0, e.1));

    ProxySpace::from_parts(verts, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpaceKind;

    #[test]
    fn path_counts() {
        let s = path(5).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.edges().len(), 4);
        assert_eq!(s.kind(), SpaceKind::CombinatorialGraph);
    }

    #[test]
    fn lattice_counts() {
        let s = lattice2d(3, 3).unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s.edges().len(), 12);
        assert_eq!(s.degree_bound(), 4);
        let s = lattice2d(32, 32).unwrap();
        assert_eq!(s.len(), 1024);
        assert_eq!(s.distance(0, 1023).unwrap(), 62.0);
    }

    #[test]
    fn tree_counts() {
        // 1 + 3 + 6 + 12 + 24
        let s = regular_tree(3, 4).unwrap();
        assert_eq!(s.len(), 46);
        let s = regular_tree(3, 8).unwrap();
        assert_eq!(s.len(), 766);
        assert_eq!(s.degree_bound(), 3);
        assert_eq!(s.distance(0, 765).unwrap(), 8.0);
    }

    #[test]
    fn hyperbolic_mesh_shape() {
        let s = hyperbolic_disk_mesh(12, 0.48).unwrap();
        // Ring populations grow like sinh, so the total lands near 5.4k.
        assert!(s.len() > 4500 && s.len() < 6500, "got {}", s.len());
        assert_eq!(s.kind(), SpaceKind::ManifoldProxy);
        // Mesh scale: every edge is comfortably below 1 so kappa = 2
        // satisfies the mesh-scale validation rule.
        assert!(s.max_edge_len() <= 1.0, "max edge {}", s.max_edge_len());
        assert!(s.min_edge_len() > 0.0);
        // Exponential volume growth: doubling the radius should much more
        // than double ball volume around the center.
        let v2 = s.volume(&s.ball(0, 2.0).unwrap()).unwrap();
        let v4 = s.volume(&s.ball(0, 4.0).unwrap()).unwrap();
        assert!(v4 > 4.0 * v2, "v2={v2} v4={v4}");
        // Total measure approximates the area of the hyperbolic disk of
        // radius rings*delta + delta/2.
        let area = std::f64::consts::TAU * ((12.0 * 0.48 + 0.24f64).cosh() - 1.0);
        let total = s.total_volume();
        assert!((total - area).abs() / area < 0.01, "total={total} area={area}");
    }

    #[test]
    fn hyperbolic_mesh_radial_distance_is_near_exact() {
        let s = hyperbolic_disk_mesh(6, 0.5).unwrap();
        // Graph distance from the center to ring j along spokes should be
        // close to the hyperbolic radius j*delta (within a few percent of
        // mesh slack).
        let ring1_first = 1u64;
        assert!((s.distance(0, ring1_first).unwrap() - 0.5).abs() < 1e-12);
        let far: Vec<u64> = s
            .ids()
            .iter()
            .copied()
            .filter(|&id| s.coords(s.index_of(id).unwrap())[0] == 3.0)
            .collect();
        let d = s.distance(0, far[0]).unwrap();
        assert!(d >= 3.0 - 1e-9 && d < 3.4, "radial distance {d}");
    }

    #[test]
    fn generators_reject_bad_params() {
        assert!(path(1).is_err());
        assert!(lattice2d(1, 5).is_err());
        assert!(regular_tree(1, 3).is_err());
        assert!(hyperbolic_disk_mesh(1, 0.5).is_err());
        assert!(hyperbolic_disk_mesh(4, 0.0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = hyperbolic_disk_mesh(5, 0.48).unwrap().to_text();
        let b = hyperbolic_disk_mesh(5, 0.48).unwrap().to_text();
        assert_eq!(a, b);
    }
}
