use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cross::{convergence_csv, make_far_shell, CrossError, Termination};
use crate::geometry::{build_block_partition, build_cluster_tree, ClusterTree, GeometryError, Point, PointCloud};
use crate::h2::{
    assemble_h, assemble_h2, BasisNode, ClusterBasisSet, H2Error, H2Options, LinearOperator, StorageReport,
};
use crate::kernel::{Kernel, KernelError, PairKernel, Transposed};

use super::bounds::{check_shell_bound, ShellBoundCheck};
use super::config::{ConfigError, ExperimentConfig, Method, SCHEMA_VERSION};
use super::oracle::{DenseOracle, MAX_ORACLE_N};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Build(#[from] H2Error),
    #[error(transparent)]
    Cross(#[from] CrossError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl RunError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub n_points: usize,
    pub bbox_lo: [f64; 3],
    pub bbox_hi: [f64; 3],
    pub kernel_alpha: f64,
    pub kernel_scale: f64,
    pub tree_clusters: usize,
    pub tree_leaves: usize,
    pub tree_depth: usize,
    pub admissible_blocks: usize,
    pub nonadmissible_blocks: usize,
    pub partition_depth: usize,
}

/// Whether the dense reference product was available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OracleStatus {
    Computed {
        probes: usize,
        /// `‖A 1‖₂ / √N` of the dense matrix.
        eh_probe: f64,
    },
    Refused {
        reason: String,
    },
}

/// Relative 2-norm errors against the dense product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatvecErrors {
    pub all_ones: f64,
    pub random: Vec<f64>,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCount {
    pub rank: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockCounts {
    pub coupling: usize,
    pub lowrank: usize,
    pub dense: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Col,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustedCluster {
    pub side: Side,
    pub cluster: usize,
    pub relative_residual: f64,
}

/// Residual history of one cluster's cross approximation, relative to the
/// initial maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub side: Side,
    pub cluster: usize,
    pub size: usize,
    pub rank: usize,
    pub termination: Termination,
    pub lebesgue: f64,
    pub relative_residual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub row_clusters: usize,
    pub col_clusters: usize,
    pub max_rank: usize,
    pub rank_exhausted: Vec<ExhaustedCluster>,
    pub shell_bound: Option<ShellBoundCheck>,
    pub convergence: Vec<ConvergenceCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub storage: StorageReport,
    pub compression_percent: f64,
    /// Matrix entries covered by the stored blocks, summed from block sizes.
    pub covered_entries: usize,
    pub blocks: BlockCounts,
    pub errors: Option<MatvecErrors>,
    /// `‖Ã 1‖₂ / √N` of this operator.
    pub eh_probe: f64,
    /// Cluster-basis ranks (h2) or low-rank block ranks (h).
    pub rank_histogram: Vec<RankCount>,
    pub bases: Option<BasisSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Guard {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn equal(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: expected,
            passed: value == expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub problem: ProblemSummary,
    pub oracle: OracleStatus,
    pub methods: Vec<MethodReport>,
    pub guards: Vec<Guard>,
    pub passed: bool,
    pub warnings: Vec<String>,
    /// Wall-clock times; the only part of the report that varies between
    /// identical runs.
    pub timings: Vec<Timing>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with the timing section emptied.
    pub fn to_json_without_timings(&self) -> String {
        let mut r = self.clone();
        r.timings.clear();
        r.to_json()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), RunError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| RunError::io(path, e))
    }

    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// All-ones vector followed by `count` seeded random unit vectors.
pub fn probe_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![1.0; n]];
    for _ in 0..count {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = norm2(&v);
        out.push(v.into_iter().map(|x| x / norm).collect());
    }
    out
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&diff) / nb
    } else {
        norm2(&diff)
    }
}

fn histogram(ranks: impl IntoIterator<Item = usize>) -> Vec<RankCount> {
    let mut counts = std::collections::BTreeMap::new();
    for r in ranks {
        *counts.entry(r).or_insert(0) += 1;
    }
    counts.into_iter().map(|(rank, count)| RankCount { rank, count }).collect()
}

struct Clock(Vec<Timing>);

impl Clock {
    fn time<R>(&mut self, label: impl Into<String>, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        self.0.push(Timing {
            label: label.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Builds the requested operators, compares them with the dense product and
/// evaluates the guards.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    cfg.validate()?;
    let mut clock = Clock(Vec::new());
    let mut warnings = Vec::new();
    let pc = cfg.geometry.generate(cfg.seed)?;
    let n = pc.len();
    let kernel = cfg.kernel.build::<f64>()?.with_diagonal(cfg.diagonal);
    let (tree, part) = clock.time("partition", || {
        let tree = build_cluster_tree(&pc, cfg.n_min_h)?;
        let part = build_block_partition(&tree, &tree, cfg.eta, cfg.n_min_h);
        Ok::<_, GeometryError>((tree, part))
    })?;
    let bbox = pc.bbox();
    let problem = ProblemSummary {
        n_points: n,
        bbox_lo: bbox.lo,
        bbox_hi: bbox.hi,
        kernel_alpha: kernel.alpha(),
        kernel_scale: kernel.scale(),
        tree_clusters: tree.len(),
        tree_leaves: tree.leaves().count(),
        tree_depth: tree.depth(),
        admissible_blocks: part.admissible.len(),
        nonadmissible_blocks: part.nonadmissible.len(),
        partition_depth: part.depth(),
    };

    let probes = probe_vectors(n, cfg.random_vectors, cfg.seed);
    let reference = if n <= MAX_ORACLE_N {
        let oracle = DenseOracle::new(&kernel, &pc, &pc);
        Some(clock.time("dense_oracle", || oracle.apply_many(&probes))?)
    } else {
        warnings.push(format!(
            "dense oracle refused: N = {n} exceeds {MAX_ORACLE_N}; matvec errors not computed"
        ));
        None
    };
    let sqrt_n = (n as f64).sqrt();
    let oracle = match &reference {
        Some(r) => OracleStatus::Computed {
            probes: probes.len(),
            eh_probe: norm2(&r[0]) / sqrt_n,
        },
        None => OracleStatus::Refused {
            reason: format!("N = {n} exceeds the dense oracle limit {MAX_ORACLE_N}"),
        },
    };

    let mut methods: Vec<Method> = Vec::new();
    for &m in &cfg.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let mut reports = Vec::new();
    let mut guards = Vec::new();
    for method in methods {
        let (outputs, mut report) = match method {
            Method::Dense => {
                let Some(r) = &reference else {
                    warnings.push("method dense skipped: dense oracle refused".into());
                    continue;
                };
                let report = MethodReport {
                    method,
                    storage: StorageReport::for_dense(n, n),
                    compression_percent: 100.0,
                    covered_entries: n * n,
                    blocks: BlockCounts {
                        dense: 1,
                        ..BlockCounts::default()
                    },
                    errors: None,
                    eh_probe: 0.0,
                    rank_histogram: Vec::new(),
                    bases: None,
                };
                (r.clone(), report)
            }
            Method::H => {
                let h = clock.time("h_build", || {
                    assemble_h(&kernel, &pc, &pc, &tree, &tree, &part, cfg.eps, cfg.k_max)
                })?;
                let outputs = clock.time("h_matvec", || apply_all(&h, &probes))?;
                let storage = h.storage();
                let report = MethodReport {
                    method,
                    storage,
                    compression_percent: 100.0 * storage.compression_h,
                    covered_entries: h.covered_entries(),
                    blocks: BlockCounts {
                        coupling: 0,
                        lowrank: h.lowrank_blocks().len(),
                        dense: h.dense_blocks().len(),
                    },
                    errors: None,
                    eh_probe: 0.0,
                    rank_histogram: histogram(h.lowrank_blocks().iter().map(|b| b.rank())),
                    bases: None,
                };
                (outputs, report)
            }
            Method::H2 => {
                let opts = H2Options {
                    eps: cfg.eps,
                    k_max: cfg.k_max,
                    n_min_h2: cfg.n_min_h2,
                    shell_samples: cfg.shell_samples,
                    row_pivot: cfg.row_pivot,
                    mode: cfg.basis_mode,
                };
                let h2 = clock.time("h2_build", || assemble_h2(&kernel, &pc, &pc, &tree, &tree, &part, &opts))?;
                let outputs = clock.time("h2_matvec", || apply_all(&h2, &probes))?;
                let storage = h2.storage();
                let sides = [(Side::Row, h2.row_basis()), (Side::Col, h2.col_basis())];
                let shell_bound = if cfg.check_shell_bound {
                    Some(clock.time("h2_shell_bound", || {
                        let row = shell_bound_side(h2.row_basis(), &tree, pc.points(), &kernel, cfg)?;
                        let col = shell_bound_side(h2.col_basis(), &tree, pc.points(), &Transposed(&kernel), cfg)?;
                        Ok::<_, CrossError>(row.merge(col))
                    })?)
                } else {
                    None
                };
                if let Some(dir) = &cfg.convergence_csv {
                    clock.time("h2_convergence_csv", || write_convergence_csv(dir, &sides, &tree, &pc, &kernel))?;
                }
                let mut exhausted = Vec::new();
                let mut convergence = Vec::new();
                for (side, set) in sides {
                    for (cluster, res) in set.rank_exhausted() {
                        exhausted.push(ExhaustedCluster {
                            side,
                            cluster,
                            relative_residual: res,
                        });
                    }
                    convergence.extend(set.nodes().filter_map(|node| curve(side, node, &tree)));
                }
                if !exhausted.is_empty() {
                    warnings.push(format!(
                        "{} cluster bases reached k_max = {} before meeting eps",
                        exhausted.len(),
                        cfg.k_max
                    ));
                }
                let report = MethodReport {
                    method,
                    storage,
                    compression_percent: 100.0 * storage.compression_h2,
                    covered_entries: h2.covered_entries(),
                    blocks: BlockCounts {
                        coupling: h2.couplings().len(),
                        lowrank: h2.aca_blocks().len(),
                        dense: h2.nearfield().len(),
                    },
                    errors: None,
                    eh_probe: 0.0,
                    rank_histogram: histogram(
                        h2.row_basis().nodes().chain(h2.col_basis().nodes()).map(BasisNode::rank),
                    ),
                    bases: Some(BasisSummary {
                        row_clusters: h2.row_basis().len(),
                        col_clusters: h2.col_basis().len(),
                        max_rank: h2.row_basis().max_rank().max(h2.col_basis().max_rank()),
                        rank_exhausted: exhausted,
                        shell_bound,
                        convergence,
                    }),
                };
                (outputs, report)
            }
        };
        report.eh_probe = norm2(&outputs[0]) / sqrt_n;
        if let Some(r) = &reference {
            let errs: Vec<f64> = outputs.iter().zip(r).map(|(a, b)| relative_error(a, b)).collect();
            let max = errs.iter().copied().fold(0.0, f64::max);
            report.errors = Some(MatvecErrors {
                all_ones: errs[0],
                random: errs[1..].to_vec(),
                max,
            });
            guards.push(Guard::at_most(format!("{method}_matvec_error"), max, cfg.error_limit()));
        }
        guards.push(Guard::equal(
            format!("{method}_block_coverage"),
            report.covered_entries as f64,
            (n * n) as f64,
        ));
        let finite = outputs.iter().flatten().all(|v| v.is_finite()) && report.eh_probe.is_finite();
        guards.push(Guard::equal(format!("{method}_finite"), f64::from(u8::from(finite)), 1.0));
        if let Some(sb) = report.bases.as_ref().and_then(|b| b.shell_bound) {
            guards.push(Guard::at_most(format!("{method}_shell_bound_violations"), sb.violations as f64, 0.0));
        }
        reports.push(report);
    }

    let passed = guards.iter().all(|g| g.passed);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        problem,
        oracle,
        methods: reports,
        guards,
        passed,
        warnings,
        timings: clock.0,
    })
}

fn apply_all(op: &impl LinearOperator<f64>, probes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, H2Error> {
    probes.iter().map(|x| op.matvec(x)).collect()
}

fn cluster_points(tree: &ClusterTree<f64>, points: &[Point<f64>], c: usize) -> Vec<Point<f64>> {
    tree.indices(c).iter().map(|&i| points[i]).collect()
}

fn shell_bound_side<K: PairKernel<f64>>(
    set: &ClusterBasisSet<f64>,
    tree: &ClusterTree<f64>,
    points: &[Point<f64>],
    kernel: &K,
    cfg: &ExperimentConfig,
) -> Result<ShellBoundCheck, CrossError> {
    let nodes: Vec<&BasisNode<f64>> = set.nodes().collect();
    nodes
        .par_iter()
        .filter_map(|node| node.cross.as_ref().map(|cb| (node.cluster, cb)))
        .map(|(c, cb)| {
            let shell = make_far_shell(&tree.cluster(c).bbox, cfg.eta, cfg.shell_samples)?;
            check_shell_bound(cb, kernel, &cluster_points(tree, points, c), &shell, cfg.eps)
        })
        .try_reduce(ShellBoundCheck::empty, |a, b| Ok(a.merge(b)))
}

fn curve(side: Side, node: &BasisNode<f64>, tree: &ClusterTree<f64>) -> Option<ConvergenceCurve> {
    let cb = node.cross.as_ref()?;
    let scale = cb.initial_max();
    Some(ConvergenceCurve {
        side,
        cluster: node.cluster,
        size: tree.cluster(node.cluster).size(),
        rank: cb.rank(),
        termination: cb.termination(),
        lebesgue: cb.lebesgue(),
        relative_residual: cb
            .residual_history()
            .iter()
            .map(|r| if scale > 0.0 { r / scale } else { 0.0 })
            .collect(),
    })
}

fn write_convergence_csv(
    dir: &Path,
    sides: &[(Side, &ClusterBasisSet<f64>)],
    tree: &ClusterTree<f64>,
    pc: &PointCloud<f64>,
    kernel: &Kernel<f64>,
) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    for &(side, set) in sides {
        let files: Vec<(String, String)> = set
            .nodes()
            .collect::<Vec<_>>()
            .par_iter()
            .filter_map(|node| {
                let cb = node.cross.as_ref()?;
                let pts = cluster_points(tree, pc.points(), node.cluster);
                let csv = match side {
                    Side::Row => convergence_csv(cb, kernel, &pts),
                    Side::Col => convergence_csv(cb, &Transposed(kernel), &pts),
                };
                let name = match side {
                    Side::Row => format!("row_{}.csv", node.cluster),
                    Side::Col => format!("col_{}.csv", node.cluster),
                };
                Some((name, csv))
            })
            .collect();
        for (name, csv) in files {
            let path = dir.join(name);
            std::fs::write(&path, csv).map_err(|e| RunError::io(&path, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::GeometrySpec;

    fn small(methods: Vec<Method>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(GeometrySpec::EllipsoidSurface { n: 600 });
        cfg.methods = methods;
        cfg.n_min_h2 = 40;
        cfg.shell_samples = 256;
        cfg
    }

    #[test]
    fn probes_are_unit_and_seeded() {
        let p = probe_vectors(50, 5, 3);
        assert_eq!(p.len(), 6);
        assert!(p[0].iter().all(|&v| v == 1.0));
        for v in &p[1..] {
            assert!((norm2(v) - 1.0).abs() < 1e-14);
        }
        assert_eq!(p, probe_vectors(50, 5, 3));
        assert_ne!(p[1], probe_vectors(50, 5, 4)[1]);
    }

    #[test]
    fn dense_only_run() {
        let r = run_experiment(&small(vec![Method::Dense])).unwrap();
        let d = r.method(Method::Dense).unwrap();
        assert_eq!(d.compression_percent, 100.0);
        assert_eq!(d.errors.as_ref().unwrap().max, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn compressed_run_meets_guards() {
        let r = run_experiment(&small(vec![Method::H, Method::H2])).unwrap();
        assert!(r.passed, "{:#?}", r.guards);
        let h2 = r.method(Method::H2).unwrap();
        assert!(h2.blocks.coupling > 0);
        let bases = h2.bases.as_ref().unwrap();
        assert!(bases.shell_bound.unwrap().steps > 0);
        assert_eq!(bases.convergence.len(), bases.row_clusters + bases.col_clusters);
        let hist: usize = h2.rank_histogram.iter().map(|c| c.count).sum();
        assert_eq!(hist, bases.row_clusters + bases.col_clusters);
        let OracleStatus::Computed { eh_probe, .. } = r.oracle else {
            panic!("oracle refused")
        };
        assert!((h2.eh_probe - eh_probe).abs() <= 1e-3 * eh_probe);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["schema_version"], 1);
    }
}
