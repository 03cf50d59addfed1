//! Versioned JSON artifacts: space profiles, net files, scalar fields, and
//! solver/decomposition reports.
//!
//! Every artifact carries a top-level `"schema": "roydennet/1"` marker. Maps
//! are keyed by vertex id through ordered containers so that serializing the
//! same data always yields byte-identical output.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{EnergyMode, Solution, SplitStage};
use crate::error::{Error, Result};
use crate::geometry::{ProxySpace, SpaceKind};
use crate::net::KappaNet;
use crate::transfer::{Domain, ScalarField};

/// Schema tag written into every JSON artifact.
pub const SCHEMA: &str = "roydennet/1";

fn default_schema() -> String {
    SCHEMA.to_string()
}

/// Rejects artifacts from other schema versions with a clear message.
pub fn check_schema(found: &str) -> Result<()> {
    if found != SCHEMA {
        return Err(Error::invalid(format!(
            "unsupported schema \"{found}\"; this build reads \"{SCHEMA}\""
        )));
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Pretty-prints with a trailing newline; key order is fixed by the struct
/// definitions and ordered maps, so equal values give equal bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    write_text(path, &text)
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: "<memory>".into(),
        source,
    })?;
    text.push('\n');
    Ok(text)
}

/// Serialized net: the point set plus enough structure to validate that a
/// net file and a space file actually belong together.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetFile {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub kappa: f64,
    pub threshold: f64,
    pub points: Vec<u64>,
    pub adjacency: BTreeMap<u64, Vec<u64>>,
    pub degree_bound: usize,
    pub maximal: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl NetFile {
    pub fn from_net(net: &KappaNet) -> NetFile {
        NetFile {
            schema: SCHEMA.to_string(),
            kappa: net.kappa(),
            threshold: net.threshold(),
            points: net.ids().to_vec(),
            adjacency: net.adjacency_ids(),
            degree_bound: net.degree_bound(),
            maximal: net.is_maximal(),
            warnings: net.warnings().to_vec(),
        }
    }

    /// Rebuilds the net on the given space and cross-checks the stored
    /// adjacency, so a net file paired with the wrong space is rejected
    /// instead of silently producing a different structure.
    pub fn into_net(self, space: &Arc<ProxySpace>) -> Result<KappaNet> {
        check_schema(&self.schema)?;
        let net = KappaNet::from_points(space, self.kappa, &self.points, Some(self.threshold))?;
        if net.adjacency_ids() != self.adjacency {
            return Err(Error::invalid(
                "stored net adjacency does not match the adjacency recomputed on this space; \
                 was the net extracted from a different space?",
            ));
        }
        Ok(net)
    }
}

/// Serialized scalar field, keyed by vertex or net-point id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldFile {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub domain: Domain,
    pub values: BTreeMap<u64, f64>,
}

impl FieldFile {
    pub fn from_proxy(space: &ProxySpace, values: &[f64]) -> FieldFile {
        FieldFile {
            schema: SCHEMA.to_string(),
            domain: Domain::Proxy,
            values: space.ids().iter().copied().zip(values.iter().copied()).collect(),
        }
    }

    pub fn from_net(net: &KappaNet, values: &[f64]) -> FieldFile {
        FieldFile {
            schema: SCHEMA.to_string(),
            domain: Domain::Net,
            values: net.ids().iter().copied().zip(values.iter().copied()).collect(),
        }
    }

    pub fn from_scalar(
        field: &ScalarField,
        space: &ProxySpace,
        net: Option<&KappaNet>,
    ) -> Result<FieldFile> {
        match field.domain {
            Domain::Proxy => Ok(FieldFile::from_proxy(space, &field.values)),
            Domain::Net => match net {
                Some(net) => Ok(FieldFile::from_net(net, &field.values)),
                None => Err(Error::invalid(
                    "cannot serialize a net-domain field without a net",
                )),
            },
        }
    }

    /// Dense proxy field; every vertex of the space must be present.
    pub fn to_proxy_field(&self, space: &ProxySpace) -> Result<ScalarField> {
        check_schema(&self.schema)?;
        if self.domain != Domain::Proxy {
            return Err(Error::DomainMismatch {
                expected: Domain::Proxy.to_string(),
                found: self.domain.to_string(),
            });
        }
        self.dense(space.ids()).map(ScalarField::on_proxy)
    }

    /// Dense net field; every net point must be present.
    pub fn to_net_field(&self, net: &KappaNet) -> Result<ScalarField> {
        check_schema(&self.schema)?;
        if self.domain != Domain::Net {
            return Err(Error::DomainMismatch {
                expected: Domain::Net.to_string(),
                found: self.domain.to_string(),
            });
        }
        self.dense(net.ids()).map(ScalarField::on_net)
    }

    fn dense(&self, ids: &[u64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            match self.values.get(&id) {
                Some(&v) if v.is_finite() => out.push(v),
                Some(&v) => {
                    return Err(Error::invalid(format!(
                        "field value for id {id} is not finite (got {v})"
                    )))
                }
                None => {
                    return Err(Error::invalid(format!(
                        "field is missing a value for id {id}"
                    )))
                }
            }
        }
        if self.values.len() != ids.len() {
            let extra = self
                .values
                .keys()
                .find(|k| ids.binary_search(k).is_err())
                .copied()
                .unwrap_or_default();
            return Err(Error::UnknownVertex(extra));
        }
        Ok(out)
    }

    /// Sparse id/value pairs in ascending id order (boundary data).
    pub fn boundary_pairs(&self) -> Result<Vec<(u64, f64)>> {
        check_schema(&self.schema)?;
        Ok(self.values.iter().map(|(&id, &v)| (id, v)).collect())
    }
}

/// Report for `space validate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateReport {
    pub schema: String,
    pub ok: bool,
    pub vertices: usize,
    pub edges: usize,
    pub kind: SpaceKind,
    pub degree_bound: usize,
    pub min_edge_len: f64,
    pub max_edge_len: f64,
    pub total_volume: f64,
}

impl ValidateReport {
    pub fn new(space: &ProxySpace) -> ValidateReport {
        ValidateReport {
            schema: SCHEMA.to_string(),
            ok: true,
            vertices: space.len(),
            edges: space.edges().len(),
            kind: space.kind(),
            degree_bound: space.degree_bound(),
            min_edge_len: space.min_edge_len(),
            max_edge_len: space.max_edge_len(),
            total_volume: space.total_volume(),
        }
    }
}

/// Report for `space profile`: validation summary plus ball-volume growth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileReport {
    pub schema: String,
    pub vertices: usize,
    pub edges: usize,
    pub kind: SpaceKind,
    pub degree_bound: usize,
    pub total_volume: f64,
    pub diameter_estimate: f64,
    pub radii: Vec<f64>,
    pub volume_min: Vec<f64>,
    pub volume_max: Vec<f64>,
}

/// Report for `net audit`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema: String,
    pub kappa: f64,
    pub threshold: f64,
    pub points: usize,
    pub degree_bound: usize,
    pub covering_radius: f64,
    pub separation_ok: bool,
    pub maximality_ok: bool,
    pub adjacency_ok: bool,
    pub connected: bool,
    pub ok: bool,
    /// Largest number of net points in any ball of the given radius,
    /// keyed by the radius as written on the command line.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bounded_geometry: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quasi_isometry: Option<QiReport>,
}

impl AuditReport {
    pub fn new(net: &KappaNet) -> AuditReport {
        let audit = net.audit();
        AuditReport {
            schema: SCHEMA.to_string(),
            kappa: net.kappa(),
            threshold: net.threshold(),
            points: audit.points,
            degree_bound: audit.degree_bound,
            covering_radius: audit.covering_radius,
            separation_ok: audit.separation_ok,
            maximality_ok: audit.maximality_ok,
            adjacency_ok: audit.adjacency_ok,
            connected: audit.connected,
            ok: audit.ok(),
            bounded_geometry: BTreeMap::new(),
            violations: audit.violations,
            quasi_isometry: None,
        }
    }
}

/// Distortion certificate for the net inclusion, re-checked exhaustively
/// when the space is small enough.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QiReport {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sampled_pairs: usize,
    pub grid_step_a: f64,
    pub grid_step_b: f64,
    pub verified: bool,
}

impl QiReport {
    pub fn new(est: &crate::net::QiEstimate, verified: bool) -> QiReport {
        QiReport {
            a: est.a,
            b: est.b,
            c: est.c,
            sampled_pairs: est.sampled_pairs,
            grid_step_a: est.grid_step_a,
            grid_step_b: est.grid_step_b,
            verified,
        }
    }
}

/// Report for `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema: String,
    pub p: f64,
    pub mode: EnergyMode,
    pub tol: f64,
    pub iterations: u64,
    pub final_residual: f64,
    pub energy: f64,
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl SolveReport {
    pub fn new(p: f64, mode: EnergyMode, tol: f64, sol: &Solution) -> SolveReport {
        SolveReport {
            schema: SCHEMA.to_string(),
            p,
            mode,
            tol,
            iterations: sol.sweeps as u64,
            final_residual: sol.final_residual,
            energy: sol.energy,
            min: sol.min,
            max: sol.max,
            runtime_ms: None,
        }
    }
}

/// One stage of a `decompose` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitStageReport {
    pub radius: f64,
    pub interior: usize,
    pub energy_h: f64,
    pub energy_u: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_h_change: Option<f64>,
    pub iterations: u64,
    pub final_residual: f64,
}

impl SplitStageReport {
    pub fn new(stage: &SplitStage) -> SplitStageReport {
        SplitStageReport {
            radius: stage.radius,
            interior: stage.interior,
            energy_h: stage.energy_h,
            energy_u: stage.energy_u,
            sup_h_change: stage.sup_h_change,
            iterations: stage.sweeps as u64,
            final_residual: stage.final_residual,
        }
    }
}

/// Report for `decompose`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub schema: String,
    pub p: f64,
    pub mode: EnergyMode,
    pub base: u64,
    pub radii: Vec<f64>,
    pub stages: Vec<SplitStageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::net::extract_net;

    fn space7() -> Arc<ProxySpace> {
        Arc::new(generate::path(7).unwrap())
    }

    #[test]
    fn net_files_round_trip_through_json() {
        let space = space7();
        let net = extract_net(&space, 2.0, None, None).unwrap();
        let file = NetFile::from_net(&net);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        write_json(&path, &file).unwrap();
        let loaded: NetFile = read_json(&path).unwrap();
        assert_eq!(loaded.points, vec![0, 2, 4, 6]);
        assert_eq!(loaded.kappa, 2.0);
        let rebuilt = loaded.into_net(&space).unwrap();
        assert_eq!(rebuilt.ids(), net.ids());
        assert_eq!(rebuilt.adjacency_ids(), net.adjacency_ids());
    }

    #[test]
    fn net_files_reject_a_mismatched_space() {
        let space = space7();
        let net = extract_net(&space, 2.0, None, None).unwrap();
        let mut file = NetFile::from_net(&net);
        // Tamper with the adjacency as if the file came from another space.
        file.adjacency.get_mut(&0).unwrap().clear();
        assert!(matches!(
            file.into_net(&space),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn schema_marker_is_enforced() {
        let space = space7();
        let net = extract_net(&space, 2.0, None, None).unwrap();
        let mut file = NetFile::from_net(&net);
        file.schema = "roydennet/9".into();
        let err = file.into_net(&space).unwrap_err();
        assert!(err.to_string().contains("roydennet/9"));
    }

    #[test]
    fn field_files_round_trip_and_validate() {
        let space = space7();
        let values: Vec<f64> = (0..7).map(|i| i as f64 / 6.0).collect();
        let file = FieldFile::from_proxy(&space, &values);
        let field = file.to_proxy_field(&space).unwrap();
        assert_eq!(field.values, values);

        let mut missing = file.clone();
        missing.values.remove(&3);
        let err = missing.to_proxy_field(&space).unwrap_err();
        assert!(err.to_string().contains("missing a value for id 3"));

        let mut extra = file.clone();
        extra.values.insert(99, 0.0);
        assert!(matches!(
            extra.to_proxy_field(&space),
            Err(Error::UnknownVertex(99))
        ));

        let mut bad = file.clone();
        bad.values.insert(2, f64::INFINITY);
        assert!(bad.to_proxy_field(&space).is_err());

        let net = extract_net(&space, 2.0, None, None).unwrap();
        assert!(matches!(
            file.to_net_field(&net),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn io_errors_name_the_offending_path() {
        let err = read_json::<NetFile>(Path::new("/nonexistent/net.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/net.json"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        write_text(&path, "{ not json").unwrap();
        let err = read_json::<NetFile>(&path).unwrap_err();
        assert!(err.to_string().contains("broken.json"));
    }

    #[test]
    fn json_output_is_stable_across_serializations() {
        let space = space7();
        let net = extract_net(&space, 2.0, None, None).unwrap();
        let a = to_json_string(&NetFile::from_net(&net)).unwrap();
        let b = to_json_string(&NetFile::from_net(&net)).unwrap();
        assert_eq!(a, b);
        assert!(a.ends_with('\n'));
        assert!(a.contains("\"schema\": \"roydennet/1\""));
    }
}
