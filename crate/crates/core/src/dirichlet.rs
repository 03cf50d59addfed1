//! Discrete p-Dirichlet energy, p-Laplace residuals, a deterministic
//! coordinate-descent solver, and an exhaustion-based splitting of a field
//! into a potential part and a p-harmonic part.
//!
//! For p > 1 the energy of a field f is `I_p(f) = Σ_x Σ_{y~x} c_xy |f(y) −
//! f(x)|^p`, so every undirected edge is counted once per endpoint. A field
//! is p-harmonic at x when `Σ_{y~x} c_xy |f(y) − f(x)|^{p−2} (f(y) − f(x))`
//! vanishes; terms with zero increment contribute zero, which for p < 2 is
//! the continuous extension of the integrand.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ProxySpace, SpaceKind};

/// |x|^p with fast paths for the exponents the solver meets in practice.
#[inline]
fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else if p == 3.0 {
        a * a * a
    } else if p == 0.5 {
        a.sqrt()
    } else if p == 1.5 {
        a * a.sqrt()
    } else {
        a.powf(p)
    }
}

/// How neighbor increments are weighted in energies and residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    /// Coefficient 1 for every directed neighbor pair.
    Combinatorial,
    /// Coefficient `w_e / ℓ_e^p` with `w_e = ℓ_e (w_x + w_y) / 2`, the
    /// finite-volume analogue of `∫ |∇f|^p` on a mesh with vertex weights.
    LengthWeighted,
}

impl std::fmt::Display for EnergyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnergyMode::Combinatorial => write!(f, "combinatorial"),
            EnergyMode::LengthWeighted => write!(f, "length-weighted"),
        }
    }
}

/// Exponent and weighting convention for a p-Dirichlet energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    pub p: f64,
    pub mode: EnergyMode,
}

impl EnergySpec {
    pub fn new(p: f64, mode: EnergyMode) -> Result<EnergySpec> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::invalid(format!("p must exceed 1 (got {p})")));
        }
        Ok(EnergySpec { p, mode })
    }

    pub fn combinatorial(p: f64) -> Result<EnergySpec> {
        EnergySpec::new(p, EnergyMode::Combinatorial)
    }

    pub fn length_weighted(p: f64) -> Result<EnergySpec> {
        EnergySpec::new(p, EnergyMode::LengthWeighted)
    }

    /// Picks the weighting that matches the space: plain counting on
    /// combinatorial graphs, length-weighted on mesh-like spaces.
    pub fn for_space(p: f64, space: &ProxySpace) -> Result<EnergySpec> {
        let mode = match space.kind() {
            SpaceKind::CombinatorialGraph => EnergyMode::Combinatorial,
            SpaceKind::ManifoldProxy => EnergyMode::LengthWeighted,
        };
        EnergySpec::new(p, mode)
    }

    /// Conjugate exponent, `1/p + 1/q = 1`.
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// Coefficient of the directed pair `(a, b)` joined by an edge of length
/// `len` under the given spec.
pub fn pair_coefficient(
    space: &ProxySpace,
    spec: &EnergySpec,
    a: usize,
    b: usize,
    len: f64,
) -> f64 {
    match spec.mode {
        EnergyMode::Combinatorial => 1.0,
        EnergyMode::LengthWeighted => {
            (space.weight(a) + space.weight(b)) / (2.0 * pow_abs(len, spec.p - 1.0))
        }
    }
}

/// Per-vertex gradient power `|Df(x)|^p = Σ_{y~x} c_xy |f(y) − f(x)|^p`.
pub fn gradient_p(space: &ProxySpace, spec: &EnergySpec, values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(space.len());
    for x in 0..space.len() {
        let mut acc = 0.0;
        for &(y, len) in space.neighbors(x) {
            let c = pair_coefficient(space, spec, x, y, len);
            acc += c * pow_abs(values[y] - values[x], spec.p);
        }
        out.push(acc);
    }
    out
}

/// Total energy `I_p(f) = Σ_x |Df(x)|^p` (each edge counted twice).
pub fn energy_p(space: &ProxySpace, spec: &EnergySpec, values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for e in space.edges() {
        let c = pair_coefficient(space, spec, e.a, e.b, e.len);
        acc += 2.0 * c * pow_abs(values[e.b] - values[e.a], spec.p);
    }
    acc
}

/// Energy restricted to the listed edges (indices into `space.edges()`),
/// with the same both-endpoints counting as [`energy_p`].
pub fn energy_p_edges(
    space: &ProxySpace,
    spec: &EnergySpec,
    values: &[f64],
    edges: &[u32],
) -> f64 {
    let all = space.edges();
    let mut acc = 0.0;
    for &ei in edges {
        let e = &all[ei as usize];
        let c = pair_coefficient(space, spec, e.a, e.b, e.len);
        acc += 2.0 * c * pow_abs(values[e.b] - values[e.a], spec.p);
    }
    acc
}

/// Mesh energy `Σ_e w_e |Δf/ℓ_e|^p`, one term per undirected edge. On a
/// combinatorial space this is exactly half of [`energy_p`].
pub fn continuum_energy_p(space: &ProxySpace, p: f64, values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for e in space.edges() {
        let we = e.len * (space.weight(e.a) + space.weight(e.b)) / 2.0;
        acc += we * pow_abs((values[e.b] - values[e.a]) / e.len, p);
    }
    acc
}

/// Signed p-Laplace residual at every vertex:
/// `Σ_{y~x} c_xy sgn(f(y) − f(x)) |f(y) − f(x)|^{p−1}`.
pub fn residual_field(space: &ProxySpace, spec: &EnergySpec, values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(space.len());
    for x in 0..space.len() {
        let mut acc = 0.0;
        for &(y, len) in space.neighbors(x) {
            let c = pair_coefficient(space, spec, x, y, len);
            let d = values[y] - values[x];
            acc += c * d.signum() * pow_abs(d, spec.p - 1.0);
        }
        out.push(acc);
    }
    out
}

/// How free vertices are swept during the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Updates take effect immediately (cyclic coordinate minimization).
    GaussSeidel,
    /// All updates are computed from the previous iterate, then applied.
    Jacobi,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Residual sup-norm target on the free set.
    pub tol: f64,
    pub max_sweeps: usize,
    pub mode: SweepMode,
    /// Full-length initial values; free entries are used, boundary entries
    /// ignored. Defaults to the mean of the boundary data.
    pub init: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_sweeps: 100_000,
            mode: SweepMode::GaussSeidel,
            init: None,
        }
    }
}

/// Result of a converged Dirichlet solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    pub sweeps: usize,
    pub final_residual: f64,
    pub energy: f64,
    pub min: f64,
    pub max: f64,
}

/// A p-Dirichlet problem: prescribed values on a nonempty boundary set,
/// energy minimized over the remaining (free) vertices.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    space: Arc<ProxySpace>,
    spec: EnergySpec,
    boundary: Vec<Option<f64>>,
    free: Vec<usize>,
    /// Coefficient per directed pair, aligned with the space's adjacency.
    conduct: Vec<Vec<f64>>,
}

impl DirichletProblem {
    pub fn new(
        space: Arc<ProxySpace>,
        spec: EnergySpec,
        boundary: &[(u64, f64)],
    ) -> Result<DirichletProblem> {
        if boundary.is_empty() {
            return Err(Error::IllPosed("boundary set is empty".into()));
        }
        let mut fixed: Vec<Option<f64>> = vec![None; space.len()];
        for &(id, v) in boundary {
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "boundary value for vertex {id} is not finite"
                )));
            }
            let idx = space.index_of(id)?;
            if fixed[idx].is_some() {
                return Err(Error::invalid(format!("duplicate boundary vertex {id}")));
            }
            fixed[idx] = Some(v);
        }
        let free: Vec<usize> = (0..space.len()).filter(|&i| fixed[i].is_none()).collect();
        let conduct = (0..space.len())
            .map(|x| {
                space
                    .neighbors(x)
                    .iter()
                    .map(|&(y, len)| pair_coefficient(&space, &spec, x, y, len))
                    .collect()
            })
            .collect();
        Ok(DirichletProblem {
            space,
            spec,
            boundary: fixed,
            free,
            conduct,
        })
    }

    pub fn space(&self) -> &Arc<ProxySpace> {
        &self.space
    }

    pub fn spec(&self) -> &EnergySpec {
        &self.spec
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn is_free(&self, idx: usize) -> bool {
        self.boundary[idx].is_none()
    }

    fn boundary_mean(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for v in self.boundary.iter().flatten() {
            sum += v;
            count += 1;
        }
        sum / count as f64
    }

    fn initial_values(&self, opts: &SolveOptions) -> Result<Vec<f64>> {
        let mut values = match &opts.init {
            Some(init) => {
                if init.len() != self.space.len() {
                    return Err(Error::invalid(format!(
                        "initial guess has {} values but the space has {} vertices",
                        init.len(),
                        self.space.len()
                    )));
                }
                init.clone()
            }
            None => vec![self.boundary_mean(); self.space.len()],
        };
        for (idx, b) in self.boundary.iter().enumerate() {
            if let Some(v) = b {
                values[idx] = *v;
            }
        }
        Ok(values)
    }

    /// Sup-norm of the p-Laplace residual over the free set.
    pub fn residual_sup(&self, values: &[f64]) -> f64 {
        let pm1 = self.spec.p - 1.0;
        let mut worst = 0.0f64;
        for &x in &self.free {
            let mut acc = 0.0;
            for (k, &(y, _)) in self.space.neighbors(x).iter().enumerate() {
                let d = values[y] - values[x];
                acc += self.conduct[x][k] * d.signum() * pow_abs(d, pm1);
            }
            worst = worst.max(acc.abs());
        }
        worst
    }

    /// Exact minimizer of `φ(t) = Σ_y c_y |v_y − t|^p` over t.
    ///
    /// For p = 2 this is the weighted neighbor mean. Otherwise the root of
    /// the strictly increasing derivative is bracketed by the neighbor range
    /// and located by Newton steps safeguarded with bisection, warm-started
    /// from the current value.
    fn minimize_vertex(&self, x: usize, values: &[f64], warm: f64) -> f64 {
        let nbrs = self.space.neighbors(x);
        let coeffs = &self.conduct[x];
        let p = self.spec.p;

        if p == 2.0 {
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, &(y, _)) in nbrs.iter().enumerate() {
                num += coeffs[k] * values[y];
                den += coeffs[k];
            }
            return num / den;
        }

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(y, _) in nbrs {
            lo = lo.min(values[y]);
            hi = hi.max(values[y]);
        }
        if lo >= hi {
            return lo;
        }

        let pm1 = p - 1.0;
        let pm2 = p - 2.0;
        let mut t = warm.clamp(lo, hi);
        for _ in 0..200 {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for (k, &(y, _)) in nbrs.iter().enumerate() {
                let d = t - values[y];
                d1 += coeffs[k] * d.signum() * pow_abs(d, pm1);
                d2 += coeffs[k] * pow_abs(d, pm2);
            }
            if d1 == 0.0 {
                return t;
            }
            if d1 < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let width = hi - lo;
            if width <= 1e-13 * lo.abs().max(hi.abs()).max(1.0) {
                break;
            }
            let newton = t - d1 / (pm1 * d2);
            t = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        0.5 * (lo + hi)
    }

    /// Runs the solver until the free-set residual drops below `opts.tol`.
    pub fn solve(&self, opts: &SolveOptions) -> Result<Solution> {
        if !(opts.tol > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        let mut values = self.initial_values(opts)?;

        let mut residual = self.residual_sup(&values);
        let mut sweeps = 0usize;
        while residual > opts.tol {
            if sweeps >= opts.max_sweeps {
                return Err(Error::NoConvergence {
                    sweeps: sweeps as u64,
                    residual,
                    tol: opts.tol,
                });
            }
            match opts.mode {
                SweepMode::GaussSeidel => {
                    for &x in &self.free {
                        values[x] = self.minimize_vertex(x, &values, values[x]);
                    }
                }
                SweepMode::Jacobi => {
                    let snapshot = values.clone();
                    for &x in &self.free {
                        values[x] = self.minimize_vertex(x, &snapshot, snapshot[x]);
                    }
                }
            }
            sweeps += 1;
            residual = self.residual_sup(&values);
        }

        let energy = energy_p(&self.space, &self.spec, &values);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &values {
            min = min.min(v);
            max = max.max(v);
        }
        Ok(Solution {
            values,
            sweeps,
            final_residual: residual,
            energy,
            min,
            max,
        })
    }

    /// Direct dense solution of the p = 2 problem (LU with partial
    /// pivoting), used as an independent oracle for the iterative solver.
    pub fn linear_reference(&self) -> Result<Vec<f64>> {
        if self.spec.p != 2.0 {
            return Err(Error::invalid(
                "the linear reference solution requires p = 2",
            ));
        }
        let n = self.free.len();
        let mut col_of = vec![usize::MAX; self.space.len()];
        for (col, &x) in self.free.iter().enumerate() {
            col_of[x] = col;
        }
        let mut a = vec![0.0f64; n * n];
        let mut b = vec![0.0f64; n];
        for (row, &x) in self.free.iter().enumerate() {
            let mut diag = 0.0;
            for (k, &(y, _)) in self.space.neighbors(x).iter().enumerate() {
                let c = self.conduct[x][k];
                diag += c;
                match self.boundary[y] {
                    Some(g) => b[row] += c * g,
                    None => a[row * n + col_of[y]] -= c,
                }
            }
            a[row * n + row] = diag;
        }
        let sol = lu_solve(&mut a, &mut b, n)?;
        let mut values: Vec<f64> = (0..self.space.len())
            .map(|i| self.boundary[i].unwrap_or(0.0))
            .collect();
        for (col, &x) in self.free.iter().enumerate() {
            values[x] = sol[col];
        }
        Ok(values)
    }
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn lu_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return Err(Error::invalid("singular linear system"));
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let m = a[r * n + col] / d;
            if m != 0.0 {
                for c in col..n {
                    a[r * n + c] -= m * a[col * n + c];
                }
                b[r] -= m * b[col];
            }
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row * n + c] * x[c];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// One stage of the exhaustion splitting: the p-harmonic replacement of `f`
/// inside the ball of the given radius, and the leftover potential part.
#[derive(Debug, Clone)]
pub struct SplitStage {
    pub radius: f64,
    /// Full-length p-harmonic part; equals `f` outside the open ball.
    pub h: Vec<f64>,
    /// Full-length potential part `f − h`; vanishes outside the open ball.
    pub u: Vec<f64>,
    pub interior: usize,
    pub energy_h: f64,
    pub energy_u: f64,
    /// Sup of `|h_R − h_{R_prev}|` over the smallest ball of the schedule;
    /// `None` on the first stage.
    pub sup_h_change: Option<f64>,
    pub sweeps: usize,
    pub final_residual: f64,
}

/// Splitting of a field into potential + p-harmonic parts along an
/// increasing exhaustion of balls around a base vertex.
#[derive(Debug, Clone)]
pub struct RoydenSplit {
    pub base: u64,
    pub radii: Vec<f64>,
    pub stages: Vec<SplitStage>,
}

/// For each radius R, solves the Dirichlet problem on the open ball
/// `{d(o, ·) < R}` with boundary data `f` on the rest of the space, and
/// records `h_R` (the solution, extended by `f` outside) together with
/// `u_R = f − h_R`.
pub fn royden_split(
    space: &Arc<ProxySpace>,
    f: &[f64],
    spec: EnergySpec,
    o: u64,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<RoydenSplit> {
    if f.len() != space.len() {
        return Err(Error::invalid(format!(
            "field carries {} values but the space has {} vertices",
            f.len(),
            space.len()
        )));
    }
    if radii.is_empty() {
        return Err(Error::invalid("the radius schedule is empty"));
    }
    for w in radii.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("radii must be strictly increasing"));
        }
    }
    if radii[0] < 1.0 {
        return Err(Error::invalid("every radius must be at least 1"));
    }
    let o_idx = space.index_of(o)?;
    let dist = space.distances_from(o_idx);

    let mut stages: Vec<SplitStage> = Vec::with_capacity(radii.len());
    let first_ball: Vec<usize> = (0..space.len()).filter(|&i| dist[i] <= radii[0]).collect();
    for &r in radii {
        let boundary: Vec<(u64, f64)> = (0..space.len())
            .filter(|&i| dist[i] >= r)
            .map(|i| (space.id_of(i), f[i]))
            .collect();
        if boundary.is_empty() {
            return Err(Error::IllPosed(format!(
                "radius {r} swallows the whole space; no boundary vertices remain"
            )));
        }
        let problem = DirichletProblem::new(space.clone(), spec, &boundary)?;
        let mut stage_opts = opts.clone();
        stage_opts.init = Some(f.to_vec());
        let sol = problem.solve(&stage_opts)?;
        let u: Vec<f64> = f.iter().zip(&sol.values).map(|(a, b)| a - b).collect();
        let sup_h_change = stages.last().map(|prev| {
            first_ball
                .iter()
                .map(|&i| (sol.values[i] - prev.h[i]).abs())
                .fold(0.0, f64::max)
        });
        stages.push(SplitStage {
            radius: r,
            energy_h: sol.energy,
            energy_u: energy_p(space, &spec, &u),
            interior: problem.free_count(),
            u,
            sup_h_change,
            sweeps: sol.sweeps,
            final_residual: sol.final_residual,
            h: sol.values,
        });
    }
    Ok(RoydenSplit {
        base: o,
        radii: radii.to_vec(),
        stages,
    })
}

/// Distance thresholds at the quarter points of the eccentricity of `o`,
/// the default schedule for [`escape_check`].
pub fn default_escape_thresholds(space: &ProxySpace, o: u64) -> Result<Vec<f64>> {
    let dist = space.distances_from(space.index_of(o)?);
    let ecc = dist.iter().cloned().fold(0.0, f64::max);
    Ok(vec![0.25 * ecc, 0.5 * ecc, 0.75 * ecc])
}

/// Whether a vertex sequence escapes to the far side of every threshold:
/// for each T, the sequence must start within distance T of `o`, cross
/// beyond T, and never come back.
pub fn escape_check(
    space: &ProxySpace,
    sequence: &[u64],
    o: u64,
    thresholds: &[f64],
) -> Result<bool> {
    if sequence.is_empty() {
        return Err(Error::invalid("the vertex sequence is empty"));
    }
    let dist = space.distances_from(space.index_of(o)?);
    let m: Vec<f64> = sequence
        .iter()
        .map(|&id| space.index_of(id).map(|i| dist[i]))
        .collect::<Result<_>>()?;
    for &t in thresholds {
        if m[0] > t {
            return Ok(false);
        }
        let cross = match m.iter().position(|&d| d > t) {
            Some(i) => i,
            None => return Ok(false),
        };
        if m[cross..].iter().any(|&d| d <= t) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use proptest::prelude::*;

    fn path(n: usize) -> Arc<ProxySpace> {
        Arc::new(generate::path(n).unwrap())
    }

    /// K_{1,3} with center id 0 and leaves 1, 2, 3.
    fn star() -> Arc<ProxySpace> {
        Arc::new(
            ProxySpace::from_parts(
                (0..4).map(|i| (i, vec![], 1.0)).collect(),
                vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
            )
            .unwrap(),
        )
    }

    #[test]
    fn gradient_and_energy_on_a_single_edge() {
        let space = path(2);
        let f = [0.0, 1.0];
        for p in [1.5, 2.0, 3.0, 4.0] {
            let spec = EnergySpec::combinatorial(p).unwrap();
            let g = gradient_p(&space, &spec, &f);
            assert_eq!(g, vec![1.0, 1.0]);
            assert_eq!(energy_p(&space, &spec, &f), 2.0);
            assert_eq!(continuum_energy_p(&space, p, &f), 1.0);
        }
    }

    #[test]
    fn constants_have_zero_gradient_and_residual() {
        let space = star();
        let f = [3.5; 4];
        for p in [1.5, 2.0, 4.0] {
            let spec = EnergySpec::combinatorial(p).unwrap();
            assert!(gradient_p(&space, &spec, &f).iter().all(|&g| g == 0.0));
            assert!(residual_field(&space, &spec, &f).iter().all(|&r| r == 0.0));
            assert_eq!(energy_p(&space, &spec, &f), 0.0);
        }
    }

    #[test]
    fn star_gradient_energy_and_center_residual() {
        let space = star();
        let spec = EnergySpec::combinatorial(2.0).unwrap();
        let f = [1.0, 0.0, 0.0, 0.0];
        let g = gradient_p(&space, &spec, &f);
        assert_eq!(g, vec![3.0, 1.0, 1.0, 1.0]);
        assert_eq!(energy_p(&space, &spec, &f), 6.0);
        // Center at the mean of the leaves is 2-harmonic there.
        let h = [1.0 / 3.0, 0.0, 0.0, 1.0];
        assert!(residual_field(&space, &spec, &h)[0].abs() < 1e-15);
    }

    #[test]
    fn energy_is_p_homogeneous() {
        let space = path(4);
        let spec = EnergySpec::combinatorial(3.0).unwrap();
        let f = [0.0, 0.3, 0.9, 1.0];
        let doubled: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let e1 = energy_p(&space, &spec, &f);
        let e2 = energy_p(&space, &spec, &doubled);
        assert!((e2 - 8.0 * e1).abs() < 1e-12 * e2);
    }

    #[test]
    fn symmetric_increments_are_p_harmonic() {
        let space = path(3);
        let spec = EnergySpec::combinatorial(4.0).unwrap();
        let f = [0.0, 0.5, 1.0];
        assert_eq!(residual_field(&space, &spec, &f)[1], 0.0);
    }

    #[test]
    fn length_weighted_coefficients_use_weights_and_lengths() {
        let space = Arc::new(
            ProxySpace::from_parts(
                vec![(0, vec![], 2.0), (1, vec![], 4.0)],
                vec![(0, 1, 0.5)],
            )
            .unwrap(),
        );
        let spec = EnergySpec::length_weighted(3.0).unwrap();
        // w_e = 0.5·(2+4)/2 = 1.5, coefficient = w_e/ℓ^p = 1.5/0.125 = 12.
        let f = [0.0, 1.0];
        assert!((energy_p(&space, &spec, &f) - 24.0).abs() < 1e-12);
        // Mesh energy counts the edge once: w_e |Δ/ℓ|^p = 1.5 · 8 = 12.
        assert!((continuum_energy_p(&space, 3.0, &f) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_solves_the_path_for_every_p() {
        let space = path(5);
        for p in [1.5, 2.0, 3.0, 4.0] {
            let spec = EnergySpec::combinatorial(p).unwrap();
            let problem =
                DirichletProblem::new(space.clone(), spec, &[(0, 0.0), (4, 1.0)]).unwrap();
            let opts = SolveOptions {
                tol: 1e-12,
                ..SolveOptions::default()
            };
            let sol = problem.solve(&opts).unwrap();
            for (i, want) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
                assert!(
                    (sol.values[i] - want).abs() < 1e-9,
                    "p={p}: value {} vs {want}",
                    sol.values[i]
                );
            }
            assert!(sol.final_residual <= 1e-12);
            assert!(sol.min >= -1e-12 && sol.max <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn star_center_lands_on_the_leaf_mean() {
        let problem = DirichletProblem::new(
            star(),
            EnergySpec::combinatorial(2.0).unwrap(),
            &[(1, 0.0), (2, 0.0), (3, 1.0)],
        )
        .unwrap();
        let sol = problem.solve(&SolveOptions::default()).unwrap();
        assert!((sol.values[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_boundary_data_solves_instantly() {
        let space = path(9);
        let problem = DirichletProblem::new(
            space,
            EnergySpec::combinatorial(2.5).unwrap(),
            &[(0, 0.7), (8, 0.7)],
        )
        .unwrap();
        let sol = problem.solve(&SolveOptions::default()).unwrap();
        assert_eq!(sol.sweeps, 0);
        assert!(sol.values.iter().all(|&v| v == 0.7));
        assert_eq!(sol.energy, 0.0);
    }

    #[test]
    fn jacobi_reaches_the_gauss_seidel_fixed_point() {
        let space = path(5);
        for p in [2.0, 3.0] {
            let spec = EnergySpec::combinatorial(p).unwrap();
            let problem =
                DirichletProblem::new(space.clone(), spec, &[(0, 0.0), (4, 1.0)]).unwrap();
            let tol = SolveOptions {
                tol: 1e-11,
                ..SolveOptions::default()
            };
            let gs = problem.solve(&tol).unwrap();
            let jac = problem
                .solve(&SolveOptions {
                    mode: SweepMode::Jacobi,
                    ..tol.clone()
                })
                .unwrap();
            for (a, b) in gs.values.iter().zip(&jac.values) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn iterative_solver_matches_the_dense_linear_oracle() {
        let space = Arc::new(
            ProxySpace::from_parts(
                vec![
                    (0, vec![], 1.0),
                    (1, vec![], 2.0),
                    (2, vec![], 1.5),
                    (3, vec![], 1.0),
                    (4, vec![], 0.5),
                    (5, vec![], 1.0),
                ],
                vec![
                    (0, 1, 0.5),
                    (1, 2, 1.5),
                    (2, 3, 0.75),
                    (3, 4, 1.0),
                    (4, 5, 0.25),
                    (1, 4, 2.0),
                ],
            )
            .unwrap(),
        );
        let spec = EnergySpec::length_weighted(2.0).unwrap();
        let problem = DirichletProblem::new(space, spec, &[(0, 0.0), (5, 1.0)]).unwrap();
        let oracle = problem.linear_reference().unwrap();
        let sol = problem
            .solve(&SolveOptions {
                tol: 1e-13,
                ..SolveOptions::default()
            })
            .unwrap();
        for (a, b) in sol.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_reference_rejects_other_exponents() {
        let problem = DirichletProblem::new(
            path(3),
            EnergySpec::combinatorial(3.0).unwrap(),
            &[(0, 0.0), (2, 1.0)],
        )
        .unwrap();
        assert!(matches!(
            problem.linear_reference(),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn solved_fields_stay_p_harmonic_under_affine_maps() {
        let space = path(7);
        let spec = EnergySpec::combinatorial(1.5).unwrap();
        let problem =
            DirichletProblem::new(space.clone(), spec, &[(0, 0.0), (6, 1.0)]).unwrap();
        let sol = problem
            .solve(&SolveOptions {
                tol: 1e-11,
                ..SolveOptions::default()
            })
            .unwrap();
        let mapped: Vec<f64> = sol.values.iter().map(|v| -2.0 * v + 3.0).collect();
        let res = residual_field(&space, &spec, &mapped);
        // Residuals scale by |α|^{p−1} and shifts cancel.
        let worst = (1..6).map(|i| res[i].abs()).fold(0.0, f64::max);
        assert!(worst < 2.0f64.sqrt() * 1e-11 + 1e-14);
    }

    #[test]
    fn bad_problems_are_rejected_up_front() {
        let space = path(3);
        let spec = EnergySpec::combinatorial(2.0).unwrap();
        assert!(matches!(
            DirichletProblem::new(space.clone(), spec, &[]),
            Err(Error::IllPosed(_))
        ));
        assert!(matches!(
            DirichletProblem::new(space.clone(), spec, &[(9, 0.0)]),
            Err(Error::UnknownVertex(9))
        ));
        assert!(matches!(
            DirichletProblem::new(space.clone(), spec, &[(0, f64::NAN)]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            DirichletProblem::new(space.clone(), spec, &[(0, 0.0), (0, 1.0)]),
            Err(Error::InvalidInput(_))
        ));
        let err = EnergySpec::combinatorial(1.0).unwrap_err();
        assert!(err.to_string().contains("p must exceed 1"));
    }

    #[test]
    fn nonconvergence_reports_the_residual() {
        let problem = DirichletProblem::new(
            path(10),
            EnergySpec::combinatorial(2.0).unwrap(),
            &[(0, 0.0), (9, 1.0)],
        )
        .unwrap();
        let err = problem
            .solve(&SolveOptions {
                tol: 1e-12,
                max_sweeps: 1,
                ..SolveOptions::default()
            })
            .unwrap_err();
        match err {
            Error::NoConvergence {
                sweeps, residual, ..
            } => {
                assert_eq!(sweeps, 1);
                assert!(residual > 1e-12);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn split_of_a_harmonic_field_has_no_potential_part() {
        // Balls grow from the center, so every free vertex is interior and
        // the ramp is exactly p-harmonic there: h = f, u = 0 at every stage.
        let space = path(9);
        let spec = EnergySpec::combinatorial(2.0).unwrap();
        let f: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let opts = SolveOptions {
            tol: 1e-12,
            ..SolveOptions::default()
        };
        let split = royden_split(&space, &f, spec, 4, &[2.0, 3.0], &opts).unwrap();
        for stage in &split.stages {
            assert!(stage.u.iter().all(|&u| u.abs() < 1e-12));
            for (h, want) in stage.h.iter().zip(&f) {
                assert!((h - want).abs() < 1e-12);
            }
        }
        assert!(split.stages[1].sup_h_change.unwrap() < 1e-12);
    }

    #[test]
    fn split_of_a_compact_bump_is_all_potential() {
        let space = path(13);
        // Supported strictly inside the ball of radius 3 around vertex 6, so
        // every stage sees zero boundary data and h collapses to zero.
        let mut f = vec![0.0; 13];
        f[5] = 0.5;
        f[6] = 1.0;
        f[7] = 0.5;
        for (p, h_tol) in [(2.0, 1e-10), (3.0, 2e-6)] {
            let spec = EnergySpec::combinatorial(p).unwrap();
            let opts = SolveOptions {
                tol: 1e-13,
                ..SolveOptions::default()
            };
            let split = royden_split(&space, &f, spec, 6, &[4.0, 6.0], &opts).unwrap();
            for stage in &split.stages {
                for (idx, h) in stage.h.iter().enumerate() {
                    assert!(h.abs() < h_tol, "p={p}: h[{idx}] = {h}");
                }
                for (u, want) in stage.u.iter().zip(&f) {
                    assert!((u - want).abs() < h_tol);
                }
                let want = energy_p(&space, &spec, &f);
                assert!((stage.energy_u - want).abs() < 1e-4 * want);
            }
        }
    }

    #[test]
    fn split_of_the_distance_field_matches_the_linear_oracle() {
        // Distance to the midpoint of a path; both sphere values at radius 4
        // equal 4, so the 2-harmonic replacement is constant inside.
        let space = path(11);
        let spec = EnergySpec::combinatorial(2.0).unwrap();
        let f: Vec<f64> = (0..11).map(|i| (i as f64 - 5.0).abs()).collect();
        let opts = SolveOptions {
            tol: 1e-12,
            ..SolveOptions::default()
        };
        let split = royden_split(&space, &f, spec, 5, &[4.0], &opts).unwrap();
        let stage = &split.stages[0];
        let problem = DirichletProblem::new(
            space.clone(),
            spec,
            &[(0, 5.0), (1, 4.0), (9, 4.0), (10, 5.0)],
        )
        .unwrap();
        let oracle = problem.linear_reference().unwrap();
        for (idx, (h, want)) in stage.h.iter().zip(&oracle).enumerate() {
            assert!((h - want).abs() < 1e-9, "h[{idx}] = {h} vs {want}");
        }
        for i in 2..=8 {
            assert!((stage.h[i] - 4.0).abs() < 1e-9);
        }
        // The potential part is the downward cone that the flattening left.
        assert!((stage.u[5] + 4.0).abs() < 1e-9);
        assert!(stage.u[0].abs() < 1e-12 && stage.u[10].abs() < 1e-12);
    }

    #[test]
    fn split_rejects_bad_radius_schedules() {
        let space = path(5);
        let spec = EnergySpec::combinatorial(2.0).unwrap();
        let f = vec![0.0; 5];
        let opts = SolveOptions::default();
        assert!(royden_split(&space, &f, spec, 0, &[], &opts).is_err());
        assert!(royden_split(&space, &f, spec, 0, &[2.0, 2.0], &opts).is_err());
        assert!(royden_split(&space, &f, spec, 0, &[0.5], &opts).is_err());
        assert!(matches!(
            royden_split(&space, &f, spec, 0, &[99.0], &opts),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn escape_semantics_on_a_path() {
        let space = path(10);
        let ray: Vec<u64> = (0..10).collect();
        let thresholds = default_escape_thresholds(&space, 0).unwrap();
        assert_eq!(thresholds, vec![2.25, 4.5, 6.75]);
        assert!(escape_check(&space, &ray, 0, &thresholds).unwrap());
        // A sequence parked at one vertex never crosses anything.
        assert!(!escape_check(&space, &[5, 5, 5], 0, &thresholds).unwrap());
        // Dipping back below a threshold disqualifies the sequence.
        assert!(!escape_check(&space, &[0, 5, 1, 5, 9], 0, &[3.0]).unwrap());
        // Thresholds past the deepest excursion are never crossed.
        assert!(!escape_check(&space, &[0, 1, 2, 3], 0, &[5.0]).unwrap());
        assert!(escape_check(&space, &[0, 1, 2, 3], 0, &[2.5]).unwrap());
        assert!(escape_check(&space, &ray, 0, &[]).unwrap());
        assert!(escape_check(&space, &[], 0, &[1.0]).is_err());
    }

    /// Random connected graph: a path spine plus a few chords, optional
    /// weights, plus a random boundary assignment on at least two vertices.
    fn random_instance(
        n: usize,
        chords: &[(usize, usize)],
        boundary: &[(usize, f64)],
    ) -> (Arc<ProxySpace>, Vec<(u64, f64)>) {
        let vertices = (0..n as u64).map(|i| (i, vec![], 1.0)).collect();
        let mut edges: Vec<(u64, u64, f64)> =
            (1..n).map(|i| (i as u64 - 1, i as u64, 1.0)).collect();
        for &(a, b) in chords {
            let (a, b) = (a % n, b % n);
            if a != b {
                let (lo, hi) = (a.min(b) as u64, a.max(b) as u64);
                if !edges.iter().any(|&(x, y, _)| x == lo && y == hi) {
                    edges.push((lo, hi, 1.0));
                }
            }
        }
        let space = Arc::new(ProxySpace::from_parts(vertices, edges).unwrap());
        // Both spine endpoints always carry data. Leaving a dead-end region
        // without an anchor makes the exact solution locally constant, and
        // for p < 2 the residual of a flat region cannot drop below about
        // sqrt(machine epsilon) — an fp floor, not a solver property.
        let mut bnd: Vec<(u64, f64)> = Vec::new();
        for &(v, val) in boundary {
            let id = (v % n) as u64;
            if !bnd.iter().any(|&(b, _)| b == id) {
                bnd.push((id, val));
            }
        }
        for anchor in [0, n as u64 - 1] {
            if !bnd.iter().any(|&(b, _)| b == anchor) {
                let val = 0.3 + 0.4 * (anchor % 2) as f64;
                bnd.push((anchor, val));
            }
        }
        (space, bnd)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn maximum_principle_and_comparison(
            n in 4usize..24,
            chords in proptest::collection::vec((0usize..24, 0usize..24), 0..4),
            bnd in proptest::collection::vec((0usize..24, 0.0f64..1.0), 2..5),
            p in prop_oneof![Just(1.5f64), Just(2.5), Just(4.0)],
        ) {
            let (space, boundary) = random_instance(n, &chords, &bnd);
            prop_assume!(boundary.len() >= 2);
            let spec = EnergySpec::combinatorial(p).unwrap();
            let problem = DirichletProblem::new(space.clone(), spec, &boundary).unwrap();
            let sol = problem.solve(&SolveOptions::default()).unwrap();

            let lo = boundary.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
            let hi = boundary.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(sol.min >= lo - 1e-9 && sol.max <= hi + 1e-9);

            // Raising the boundary data (by different amounts per vertex)
            // never lowers the solution anywhere.
            let raised: Vec<(u64, f64)> = boundary
                .iter()
                .map(|&(id, v)| (id, v + 0.1 + 0.2 * (id % 3) as f64))
                .collect();
            let sol2 = DirichletProblem::new(space, spec, &raised)
                .unwrap()
                .solve(&SolveOptions::default())
                .unwrap();
            for (a, b) in sol.values.iter().zip(&sol2.values) {
                prop_assert!(b + 1e-7 >= *a);
            }
        }
    }
}
