//! Test-set construction and checkpoint evaluation: Pearson correlation
//! between predicted and ground-truth centrality, per graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeneratorFamily, GeneratorSampling};
use crate::auralize::auralize;
use crate::centrality::Measure;
use crate::error::{Error, Result};
use crate::graph::{bundled_manifest, Graph};
use crate::model::loss::pearson;
use crate::model::{m5_forward, ModelCheckpoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    /// fresh random graphs at training size
    Small,
    /// random graphs an order of magnitude larger
    Large,
    /// the bundled reference networks plus an optional user-supplied one
    Real,
}

impl Tier {
    pub fn name(&self) -> &'static str {
        match self {
            Tier::Small => "small",
            Tier::Large => "large",
            Tier::Real => "real",
        }
    }
}

impl std::str::FromStr for Tier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Tier> {
        match s {
            "small" => Ok(Tier::Small),
            "large" => Ok(Tier::Large),
            "real" => Ok(Tier::Real),
            _ => Err(Error::InvalidParameter(format!(
                "unknown tier {s:?}; valid: small, large, real"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestsetConfig {
    /// graphs per generator family in the random tiers
    pub per_generator: usize,
    pub n_small: usize,
    pub n_large: usize,
    pub generators: Vec<GeneratorFamily>,
    pub sampling: GeneratorSampling,
}

impl Default for TestsetConfig {
    fn default() -> Self {
        TestsetConfig {
            per_generator: 2,
            n_small: 150,
            n_large: 1500,
            generators: GeneratorFamily::ALL.to_vec(),
            sampling: GeneratorSampling::default(),
        }
    }
}

/// One evaluation graph with a human-readable provenance tag.
#[derive(Debug, Clone)]
pub struct TestGraph {
    pub provenance: String,
    pub graph: Graph,
}

/// Builds the evaluation graphs for a tier. The `real` tier takes the
/// bundled networks plus `extra` (e.g. an Internet topology edge list
/// supplied by the caller); absence of an extra graph is fine.
pub fn build_testset(
    tier: Tier,
    seed: u64,
    cfg: &TestsetConfig,
    extra: Option<TestGraph>,
) -> Result<Vec<TestGraph>> {
    match tier {
        Tier::Real => {
            let mut out = Vec::new();
            for info in bundled_manifest() {
                let lg = crate::graph::bundled_graph(&info.name)?;
                out.push(TestGraph { provenance: info.name, graph: lg.graph });
            }
            if let Some(extra) = extra {
                out.push(extra);
            }
            Ok(out)
        }
        Tier::Small | Tier::Large => {
            let n = if tier == Tier::Small { cfg.n_small } else { cfg.n_large };
            if n < 3 {
                return Err(Error::InvalidParameter(
                    "test graphs need at least 3 nominal nodes".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            for &family in &cfg.generators {
                for i in 0..cfg.per_generator {
                    // retry until the giant component is non-trivial
                    let mut attempts = 0;
                    let graph = loop {
                        let model = cfg.sampling.draw(family, n, &mut rng);
                        let graph_seed: u64 = rng.gen();
                        let g = model.generate(graph_seed)?.giant_component();
                        if g.node_count() >= 2 {
                            break g;
                        }
                        attempts += 1;
                        if attempts > 1000 {
                            return Err(Error::InvalidParameter(format!(
                                "no usable {} graph after {attempts} attempts",
                                family.name()
                            )));
                        }
                    };
                    out.push(TestGraph {
                        provenance: format!("{}[{}] n={}", family.name(), i, graph.node_count()),
                        graph,
                    });
                }
            }
            Ok(out)
        }
    }
}

/// What produces the predictions: the checkpoint, or (for harness
/// debugging) the ground-truth oracle itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    Model,
    GroundTruth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub provenance: String,
    pub nodes: usize,
    /// `None` marks a degenerate record (constant ground truth or
    /// prediction), excluded from aggregates.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub tier: String,
    pub measure: Measure,
    pub momentum: f64,
    pub samples: usize,
    pub records: Vec<EvalRecord>,
    pub mean_rho: Option<f64>,
    pub min_rho: Option<f64>,
    pub degenerate: usize,
}

impl EvalReport {
    /// Per-record CSV: `graph,nodes,rho` with empty rho for degenerates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("graph,nodes,rho\n");
        for r in &self.records {
            let rho = r.rho.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", r.provenance, r.nodes, rho));
        }
        out
    }
}

/// Auralizes every test graph at the checkpoint's input length, predicts,
/// and correlates with the ground truth. Evaluation never mutates the
/// checkpoint.
pub fn evaluate(
    ckpt: &ModelCheckpoint,
    testset: &[TestGraph],
    measure: Measure,
    tier_name: &str,
    predictor: Predictor,
) -> Result<EvalReport> {
    let momentum = ckpt.meta.momentum;
    let samples = ckpt.config.input_length;
    let mut records = Vec::with_capacity(testset.len());
    for tg in testset {
        let truth = match measure.compute(&tg.graph) {
            Ok(c) => c.values,
            Err(Error::NoConvergence { .. }) | Err(Error::InvalidParameter(_)) => {
                records.push(EvalRecord {
                    provenance: tg.provenance.clone(),
                    nodes: tg.graph.node_count(),
                    rho: None,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let predicted = match predictor {
            Predictor::Model => {
                let waves = auralize(&tg.graph, momentum, samples)?;
                m5_forward(ckpt, &waves)?.values
            }
            Predictor::GroundTruth => truth.clone(),
        };
        let rho = match pearson(&truth, &predicted) {
            Ok(r) => Some(r),
            Err(Error::DegenerateCorrelation(_)) | Err(Error::InvalidParameter(_)) => None,
            Err(e) => return Err(e),
        };
        records.push(EvalRecord {
            provenance: tg.provenance.clone(),
            nodes: tg.graph.node_count(),
            rho,
        });
    }
    let valid: Vec<f64> = records.iter().filter_map(|r| r.rho).collect();
    let mean_rho = (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64);
    let min_rho = valid.iter().copied().reduce(f64::min);
    Ok(EvalReport {
        tier: tier_name.to_string(),
        measure,
        momentum,
        samples,
        degenerate: records.len() - valid.len(),
        records,
        mean_rho,
        min_rho,
    })
}

/// Table-shaped CSV: one row per network, one column per measure.
pub fn correlation_matrix_csv(
    networks: &[String],
    measures: &[Measure],
    cells: &[Vec<Option<f64>>],
) -> String {
    let mut out = String::from("network");
    for m in measures {
        out.push_str(&format!(",{}", m.abbrev()));
    }
    out.push('\n');
    for (row, name) in networks.iter().enumerate() {
        out.push_str(name);
        for col in 0..measures.len() {
            match cells[row][col] {
                Some(x) => out.push_str(&format!(",{x:.4}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{m5_init, M5Config};

    #[test]
    fn real_testset_without_extra_has_four_graphs() {
        let set = build_testset(Tier::Real, 0, &TestsetConfig::default(), None).unwrap();
        assert_eq!(set.len(), 4);
        let names: Vec<&str> = set.iter().map(|t| t.provenance.as_str()).collect();
        assert!(names.contains(&"karate") && names.contains(&"lesmis"));
    }

    #[test]
    fn small_testset_covers_generators() {
        let cfg = TestsetConfig {
            per_generator: 2,
            n_small: 40,
            ..Default::default()
        };
        let set = build_testset(Tier::Small, 3, &cfg, None).unwrap();
        assert_eq!(set.len(), 10);
        assert!(set.iter().all(|t| t.graph.node_count() >= 2));
        // deterministic
        let again = build_testset(Tier::Small, 3, &cfg, None).unwrap();
        for (a, b) in set.iter().zip(&again) {
            assert_eq!(a.graph, b.graph);
        }
    }

    #[test]
    fn ground_truth_predictor_scores_one() {
        let ckpt = m5_init(M5Config::tiny(200), 0).unwrap();
        let cfg = TestsetConfig {
            per_generator: 1,
            n_small: 25,
            generators: vec![GeneratorFamily::Er, GeneratorFamily::Ba],
            ..Default::default()
        };
        let set = build_testset(Tier::Small, 1, &cfg, None).unwrap();
        let report =
            evaluate(&ckpt, &set, Measure::Degree, "small", Predictor::GroundTruth).unwrap();
        assert_eq!(report.degenerate, 0);
        for r in &report.records {
            assert!((r.rho.unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((report.mean_rho.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_does_not_mutate_checkpoint() {
        let ckpt = m5_init(M5Config::tiny(200), 2).unwrap();
        let before = ckpt.clone();
        let cfg = TestsetConfig {
            per_generator: 1,
            n_small: 20,
            generators: vec![GeneratorFamily::Er],
            ..Default::default()
        };
        let set = build_testset(Tier::Small, 5, &cfg, None).unwrap();
        evaluate(&ckpt, &set, Measure::Degree, "small", Predictor::Model).unwrap();
        assert_eq!(ckpt, before);
    }

    #[test]
    fn degenerate_targets_are_flagged_not_failed() {
        let ckpt = m5_init(M5Config::tiny(200), 2).unwrap();
        // a cycle has constant degree
        let set = vec![TestGraph {
            provenance: "cycle".into(),
            graph: crate::graph::gen_ws(12, 2, 0.0, 0).unwrap(),
        }];
        let report = evaluate(&ckpt, &set, Measure::Degree, "small", Predictor::Model).unwrap();
        assert_eq!(report.degenerate, 1);
        assert!(report.records[0].rho.is_none());
        assert!(report.mean_rho.is_none());
    }

    #[test]
    fn matrix_csv_layout() {
        let csv = correlation_matrix_csv(
            &["karate".into()],
            &[Measure::Degree, Measure::Closeness],
            &[vec![Some(0.9), None]],
        );
        assert_eq!(csv, "network,Deg,CC\nkarate,0.9000,\n");
    }
}
