//! Subsampled ensembles of conditional-inference trees, probability
//! aggregation, and permutation variable importance.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{self, Metric};
use crate::rng::{self, purpose};
use crate::schema::FeatureSchema;
use crate::tree::{self, TreeNode, TreeParams};

pub const DEFAULT_N_TREES: usize = 500;
pub const DEFAULT_SUBSAMPLE_FRACTION: f64 = 2.0 / 3.0;
pub const DEFAULT_IMPORTANCE_REPEATS: usize = 5;

/// Ensemble parameters. Each tree trains on its own without-replacement
/// subsample of `floor(subsample_fraction · n)` rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub subsample_fraction: f64,
    pub tree_params: TreeParams,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: DEFAULT_N_TREES,
            subsample_fraction: DEFAULT_SUBSAMPLE_FRACTION,
            tree_params: TreeParams::default(),
            seed: 1,
        }
    }
}

impl ForestParams {
    pub fn validate(&self, n_variables: usize) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidParams {
                reason: "n_trees must be at least 1".into(),
            });
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::InvalidParams {
                reason: format!(
                    "subsample_fraction must be in (0,1], got {}",
                    self.subsample_fraction
                ),
            });
        }
        self.tree_params.validate(n_variables)
    }
}

/// One tree plus the sorted training-row indices it saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedTree {
    pub tree: TreeNode,
    pub in_bag: Vec<usize>,
}

impl FittedTree {
    /// Complement of the in-bag set within `0..n_rows`.
    pub fn out_of_bag(&self, n_rows: usize) -> Vec<usize> {
        let mut member = vec![false; n_rows];
        for &i in &self.in_bag {
            member[i] = true;
        }
        (0..n_rows).filter(|&i| !member[i]).collect()
    }
}

/// A fitted forest: trees, the parameters that produced them, the feature
/// schema, and the training-set size the in-bag indices refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<FittedTree>,
    pub params: ForestParams,
    pub schema: FeatureSchema,
    pub n_rows: usize,
}

#[derive(Serialize, Deserialize)]
struct BundleHeader {
    params: ForestParams,
    n_rows: usize,
}

/// Fit `params.n_trees` trees, each on an independent without-replacement
/// subsample. Tree `t` draws from its own deterministic rng substream, so
/// the result is byte-identical across runs and worker counts.
pub fn fit_forest(data: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    params.validate(data.schema().count())?;
    let n = data.len();
    if n < params.tree_params.min_split {
        return Err(Error::TooFewRows {
            n,
            min: params.tree_params.min_split,
        });
    }
    let in_bag_size = (params.subsample_fraction * n as f64).floor() as usize;
    if in_bag_size < 1 {
        return Err(Error::InvalidParams {
            reason: format!(
                "subsample_fraction {} leaves no rows out of {n}",
                params.subsample_fraction
            ),
        });
    }
    let forest_seed = rng::derive_seed(params.seed, purpose::FOREST);
    let trees: Vec<FittedTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream_rng(forest_seed, t as u64);
            let mut in_bag = rand::seq::index::sample(&mut rng, n, in_bag_size).into_vec();
            in_bag.sort_unstable();
            let tree = tree::grow_tree_on_rows(data, in_bag.clone(), &params.tree_params, &mut rng);
            FittedTree { tree, in_bag }
        })
        .collect();
    Ok(ForestModel {
        trees,
        params: *params,
        schema: data.schema().clone(),
        n_rows: n,
    })
}

/// Mean of the per-tree leaf fractions.
pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.schema.count() {
        return Err(Error::LengthMismatch {
            expected: model.schema.count(),
            found: x.len(),
        });
    }
    let mut sum = 0.0;
    for fitted in &model.trees {
        sum += tree::predict_tree(&fitted.tree, x)?;
    }
    Ok(sum / model.trees.len() as f64)
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict_forest(self, x)
    }

    /// Write the model as a directory bundle: `params.json`, `schema.csv`,
    /// and `trees.jsonl` (one fitted tree per line). Deterministic bytes.
    pub fn save_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let header = BundleHeader {
            params: self.params,
            n_rows: self.n_rows,
        };
        std::fs::write(
            dir.join("params.json"),
            serde_json::to_string_pretty(&header)? + "\n",
        )?;
        std::fs::write(dir.join("schema.csv"), self.schema.to_csv())?;
        let mut lines = String::new();
        for fitted in &self.trees {
            lines.push_str(&serde_json::to_string(fitted)?);
            lines.push('\n');
        }
        std::fs::write(dir.join("trees.jsonl"), lines)?;
        Ok(())
    }

    pub fn load_bundle(dir: &Path) -> Result<ForestModel> {
        let header: BundleHeader =
            serde_json::from_str(&std::fs::read_to_string(dir.join("params.json"))?)?;
        let schema = FeatureSchema::load_csv(&dir.join("schema.csv"))?;
        let body = std::fs::read_to_string(dir.join("trees.jsonl"))?;
        let mut trees = Vec::new();
        for line in body.lines() {
            if line.is_empty() {
                continue;
            }
            trees.push(serde_json::from_str::<FittedTree>(line)?);
        }
        if trees.len() != header.params.n_trees {
            return Err(Error::SpecMismatch);
        }
        Ok(ForestModel {
            trees,
            params: header.params,
            schema,
            n_rows: header.n_rows,
        })
    }

    /// Schema indices used by at least one split in at least one tree.
    pub fn used_variables(&self) -> Vec<usize> {
        let mut used = vec![false; self.schema.count()];
        fn walk(node: &TreeNode, used: &mut [bool]) {
            if let TreeNode::Internal {
                split_variable,
                left,
                right,
                ..
            } = node
            {
                used[*split_variable] = true;
                walk(left, used);
                walk(right, used);
            }
        }
        for fitted in &self.trees {
            walk(&fitted.tree, &mut used);
        }
        (0..used.len()).filter(|&i| used[i]).collect()
    }
}

/// Several forests diagnosed jointly by averaging their probabilities.
#[derive(Clone, Debug)]
pub struct EnsembleModel {
    pub models: Vec<ForestModel>,
}

impl EnsembleModel {
    pub fn new(models: Vec<ForestModel>) -> Result<EnsembleModel> {
        if models.is_empty() {
            return Err(Error::InvalidParams {
                reason: "ensemble needs at least one model".into(),
            });
        }
        Ok(EnsembleModel { models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Median of the member forests' probabilities — the aggregation used
    /// for grid diagnosis and false-positive panels. For identical members
    /// this equals the single-model prediction.
    pub fn predict_median(&self, x: &[f64]) -> Result<f64> {
        let probs = self.member_probs(x)?;
        metrics::median(&probs)
    }

    /// Plain average of the member forests' probabilities.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        let probs = self.member_probs(x)?;
        Ok(probs.iter().sum::<f64>() / probs.len() as f64)
    }

    pub fn member_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.predict(x)).collect()
    }

    /// Write one bundle per member under `dir/model_NNNN/`.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, model) in self.models.iter().enumerate() {
            model.save_bundle(&dir.join(format!("model_{i:04}")))?;
        }
        Ok(())
    }

    /// Load every `model_*` bundle under `dir`, in index order.
    pub fn load_dir(dir: &Path) -> Result<EnsembleModel> {
        let mut indexed = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if let Some(idx) = name.strip_prefix("model_") {
                let idx: usize = idx.parse().map_err(|_| Error::BadValue {
                    row: 0,
                    column: "model directory".into(),
                    value: name.into(),
                })?;
                indexed.push((idx, path));
            }
        }
        indexed.sort_by_key(|(idx, _)| *idx);
        let models = indexed
            .into_iter()
            .map(|(_, path)| ForestModel::load_bundle(&path))
            .collect::<Result<Vec<_>>>()?;
        EnsembleModel::new(models)
    }
}

/// Per-variable permutation importance of one model on an evaluation set.
///
/// For each variable the metric is recomputed `n_repeats` times with that
/// column shuffled (fresh permutation each repeat); the importance is the
/// mean of (baseline − permuted metric). A variable no tree uses leaves
/// predictions bit-identical, so its importance is exactly zero.
pub fn permutation_importance(
    model: &ForestModel,
    eval: &Dataset,
    metric: Metric,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if eval.schema() != &model.schema {
        return Err(Error::SchemaMismatch {
            expected: model.schema.names().collect::<Vec<_>>().join(","),
            found: eval.schema().names().collect::<Vec<_>>().join(","),
        });
    }
    if eval.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 2 });
    }
    let n_pos = eval.count_positive();
    if n_pos == 0 || n_pos == eval.len() {
        return Err(Error::SingleClassEval);
    }
    if n_repeats < 1 {
        return Err(Error::InvalidParams {
            reason: "n_repeats must be at least 1".into(),
        });
    }
    let labels = eval.labels01();
    let base_probs: Vec<f64> = eval
        .rows()
        .iter()
        .map(|r| predict_forest(model, &r.features))
        .collect::<Result<_>>()?;
    let baseline = metrics::evaluate(metric, &base_probs, &labels)?;

    let importance_seed = rng::derive_seed(seed, purpose::IMPORTANCE);
    (0..model.schema.count())
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream_rng(importance_seed, j as u64);
            let column: Vec<f64> = eval.rows().iter().map(|r| r.features[j]).collect();
            let mut idx: Vec<usize> = (0..eval.len()).collect();
            let mut drop_sum = 0.0;
            for _ in 0..n_repeats {
                idx.shuffle(&mut rng);
                let probs: Vec<f64> = eval
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let mut x = r.features.clone();
                        x[j] = column[idx[i]];
                        predict_forest(model, &x)
                    })
                    .collect::<Result<_>>()?;
                drop_sum += baseline - metrics::evaluate(metric, &probs, &labels)?;
            }
            Ok(drop_sum / n_repeats as f64)
        })
        .collect()
}

/// One variable's importance across a model collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableImportance {
    pub name: String,
    pub median_importance: f64,
    pub per_model: Vec<f64>,
}

/// Per-variable permutation importances for a collection of models, with
/// the across-model median as the headline number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub variables: Vec<VariableImportance>,
}

impl ImportanceReport {
    /// Variables sorted by descending median importance (schema order
    /// breaks ties).
    pub fn ranked(&self) -> Vec<&VariableImportance> {
        let mut refs: Vec<&VariableImportance> = self.variables.iter().collect();
        refs.sort_by(|a, b| b.median_importance.total_cmp(&a.median_importance));
        refs
    }

    pub fn to_csv_string(&self) -> String {
        let n_models = self.variables.first().map_or(0, |v| v.per_model.len());
        let mut out = String::from("variable,median");
        for m in 0..n_models {
            out.push_str(&format!(",model_{m}"));
        }
        out.push('\n');
        for v in &self.variables {
            out.push_str(&v.name);
            out.push_str(&format!(",{}", v.median_importance));
            for value in &v.per_model {
                out.push_str(&format!(",{value}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Importance medians across models: model `m` is scored on `evals[m]`,
/// then each variable's importances are reduced to their median.
pub fn median_importance(
    models: &[ForestModel],
    evals: &[Dataset],
    metric: Metric,
    n_repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if models.is_empty() {
        return Err(Error::InvalidParams {
            reason: "need at least one model".into(),
        });
    }
    if models.len() != evals.len() {
        return Err(Error::LengthMismatch {
            expected: models.len(),
            found: evals.len(),
        });
    }
    let base = rng::derive_seed(seed, purpose::IMPORTANCE);
    let per_model: Vec<Vec<f64>> = models
        .par_iter()
        .zip(evals.par_iter())
        .enumerate()
        .map(|(m, (model, eval))| {
            permutation_importance(model, eval, metric, n_repeats, rng::derive_seed(base, m as u64))
        })
        .collect::<Result<_>>()?;

    let schema = &models[0].schema;
    let mut variables = Vec::with_capacity(schema.count());
    for j in 0..schema.count() {
        let across: Vec<f64> = per_model.iter().map(|v| v[j]).collect();
        variables.push(VariableImportance {
            name: schema.name(j).to_string(),
            median_importance: metrics::median(&across)?,
            per_model: across,
        });
    }
    Ok(ImportanceReport { variables })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, Sample, Source};
    use crate::schema::VariableDescriptor;
    use tempfile::TempDir;

    fn schema(k: usize) -> FeatureSchema {
        let vars = (0..k)
            .map(|i| VariableDescriptor {
                name: format!("v{i}"),
                unit: "1".into(),
                derived: false,
            })
            .collect();
        FeatureSchema::new(vars).unwrap()
    }

    fn dataset(k: usize, rows: Vec<(Vec<f64>, Label)>) -> Dataset {
        let ts = crate::dataset::parse_timestamp("2019-06-01T12:00Z").unwrap();
        let samples = rows
            .into_iter()
            .map(|(features, label)| Sample {
                features,
                timestamp: ts,
                lat: 47.0,
                lon: 13.0,
                label,
                source: Source::Synthetic,
                ul_subtype: None,
            })
            .collect();
        Dataset::from_rows(schema(k), samples).unwrap()
    }

    /// 180 rows over 5 variables; only variable 2 carries signal.
    fn separable_set() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..180 {
            let positive = i % 2 == 0;
            let mut features: Vec<f64> = (0..5)
                .map(|j| ((i * 37 + j * 23) % 101) as f64 / 10.1 - 5.0)
                .collect();
            features[2] = if positive {
                2.0 + (i % 9) as f64 * 0.2
            } else {
                -2.0 - (i % 9) as f64 * 0.2
            };
            rows.push((features, if positive { Label::Ul } else { Label::NoUl }));
        }
        dataset(5, rows)
    }

    fn small_params(n_trees: usize, seed: u64) -> ForestParams {
        ForestParams {
            n_trees,
            subsample_fraction: 2.0 / 3.0,
            tree_params: TreeParams {
                mtry: 3,
                ..TreeParams::default()
            },
            seed,
        }
    }

    fn leaf_model(fractions: &[f64]) -> ForestModel {
        let trees = fractions
            .iter()
            .map(|&f| FittedTree {
                tree: TreeNode::Leaf {
                    n: 10,
                    positive_fraction: f,
                },
                in_bag: vec![0, 1],
            })
            .collect();
        ForestModel {
            trees,
            params: small_params(fractions.len(), 0),
            schema: schema(5),
            n_rows: 3,
        }
    }

    #[test]
    fn prediction_is_mean_of_leaf_fractions() {
        let model = leaf_model(&[0.2, 0.4, 0.6]);
        let x = [0.0; 5];
        let p = model.predict(&x).unwrap();
        assert!((p - 0.4).abs() < 1e-15);
        // mean stays inside the span of leaf fractions
        assert!((0.2..=0.6).contains(&p));
        assert!(matches!(
            model.predict(&[0.0; 4]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn in_bag_sets_have_exact_size_and_partition_rows() {
        let data = separable_set();
        let model = fit_forest(&data, &small_params(20, 7)).unwrap();
        let expected = (2.0_f64 * 180.0 / 3.0).floor() as usize;
        for fitted in &model.trees {
            assert_eq!(fitted.in_bag.len(), expected);
            assert!(fitted.in_bag.windows(2).all(|w| w[0] < w[1]));
            assert!(*fitted.in_bag.last().unwrap() < 180);
            let oob = fitted.out_of_bag(180);
            assert_eq!(oob.len() + fitted.in_bag.len(), 180);
            assert!(oob.iter().all(|i| !fitted.in_bag.contains(i)));
        }
    }

    #[test]
    fn single_full_sample_tree_equals_forest() {
        let data = separable_set();
        let params = ForestParams {
            n_trees: 1,
            subsample_fraction: 1.0,
            ..small_params(1, 3)
        };
        let model = fit_forest(&data, &params).unwrap();
        assert_eq!(model.trees.len(), 1);
        for row in data.rows().iter().take(10) {
            let by_tree = tree::predict_tree(&model.trees[0].tree, &row.features).unwrap();
            assert_eq!(model.predict(&row.features).unwrap(), by_tree);
        }
    }

    #[test]
    fn separable_data_predicted_confidently() {
        let data = separable_set();
        // mtry = all predictors: every tree gets to see the signal variable
        let params = ForestParams {
            tree_params: TreeParams {
                mtry: 5,
                ..TreeParams::default()
            },
            ..small_params(30, 11)
        };
        let model = fit_forest(&data, &params).unwrap();
        let mut deep_positive = vec![0.0; 5];
        deep_positive[2] = 3.0;
        assert!(model.predict(&deep_positive).unwrap() >= 0.95);
        let mut deep_negative = vec![0.0; 5];
        deep_negative[2] = -3.0;
        assert!(model.predict(&deep_negative).unwrap() <= 0.05);
    }

    #[test]
    fn fit_rejects_too_small_data() {
        let rows: Vec<(Vec<f64>, Label)> = (0..10)
            .map(|i| {
                (
                    vec![i as f64; 5],
                    if i % 2 == 0 { Label::Ul } else { Label::NoUl },
                )
            })
            .collect();
        let data = dataset(5, rows);
        assert!(matches!(
            fit_forest(&data, &small_params(5, 1)),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn fit_is_deterministic_across_worker_counts() {
        let data = separable_set();
        let params = small_params(16, 99);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| fit_forest(&data, &params).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| fit_forest(&data, &params).unwrap());
        assert_eq!(serial, parallel);
        let again = fit_forest(&data, &params).unwrap();
        assert_eq!(serial, again);
    }

    #[test]
    fn bundle_round_trip_is_byte_stable() {
        let data = separable_set();
        let model = fit_forest(&data, &small_params(8, 5)).unwrap();
        let dir = TempDir::new().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        model.save_bundle(&a).unwrap();
        let loaded = ForestModel::load_bundle(&a).unwrap();
        assert_eq!(loaded, model);
        loaded.save_bundle(&b).unwrap();
        for name in ["params.json", "schema.csv", "trees.jsonl"] {
            let bytes_a = std::fs::read(a.join(name)).unwrap();
            let bytes_b = std::fs::read(b.join(name)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{name} differs after round trip");
        }
    }

    #[test]
    fn ensemble_directory_round_trip_preserves_member_order() {
        let data = separable_set();
        let models: Vec<ForestModel> = (0..3)
            .map(|s| fit_forest(&data, &small_params(4, s)).unwrap())
            .collect();
        let ensemble = EnsembleModel::new(models).unwrap();
        let dir = TempDir::new().unwrap();
        ensemble.save_dir(dir.path()).unwrap();
        let loaded = EnsembleModel::load_dir(dir.path()).unwrap();
        assert_eq!(loaded.models, ensemble.models);
    }

    #[test]
    fn unused_variables_have_exactly_zero_importance() {
        let data = separable_set();
        let model = fit_forest(&data, &small_params(25, 13)).unwrap();
        let used = model.used_variables();
        assert!(used.contains(&2));
        let imp =
            permutation_importance(&model, &data, Metric::AccuracyAtHalf, 3, 17).unwrap();
        assert_eq!(imp.len(), 5);
        for (j, &drop) in imp.iter().enumerate() {
            if !used.contains(&j) {
                assert_eq!(drop, 0.0, "variable {j} unused but importance {drop}");
            }
        }
        assert!(imp[2] > 0.2, "signal importance {}", imp[2]);
    }

    #[test]
    fn importance_requires_both_classes() {
        let data = separable_set();
        let model = fit_forest(&data, &small_params(5, 2)).unwrap();
        let positives = data.filter(|r| r.label.is_positive());
        assert!(matches!(
            permutation_importance(&model, &positives, Metric::Auc, 2, 0),
            Err(Error::SingleClassEval)
        ));
    }

    #[test]
    fn importance_deterministic_across_worker_counts() {
        let data = separable_set();
        let model = fit_forest(&data, &small_params(10, 4)).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| permutation_importance(&model, &data, Metric::Auc, 3, 21).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| permutation_importance(&model, &data, Metric::Auc, 3, 21).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn median_report_over_single_model_equals_its_importances() {
        let data = separable_set();
        let model = fit_forest(&data, &small_params(10, 6)).unwrap();
        let report = median_importance(
            std::slice::from_ref(&model),
            std::slice::from_ref(&data),
            Metric::AccuracyAtHalf,
            2,
            31,
        )
        .unwrap();
        assert_eq!(report.variables.len(), 5);
        let direct = permutation_importance(
            &model,
            &data,
            Metric::AccuracyAtHalf,
            2,
            rng::derive_seed(rng::derive_seed(31, purpose::IMPORTANCE), 0),
        )
        .unwrap();
        for (v, d) in report.variables.iter().zip(direct) {
            assert_eq!(v.median_importance, d);
            assert_eq!(v.per_model, vec![d]);
        }
    }

    #[test]
    fn ensemble_median_of_identical_models_is_the_single_prediction() {
        let data = separable_set();
        let model = fit_forest(&data, &small_params(6, 8)).unwrap();
        let single = model.predict(&data.rows()[0].features).unwrap();
        let ensemble = EnsembleModel::new(vec![model.clone(), model.clone(), model]).unwrap();
        assert_eq!(
            ensemble.predict_median(&data.rows()[0].features).unwrap(),
            single
        );
        assert_eq!(
            ensemble.predict_mean(&data.rows()[0].features).unwrap(),
            single
        );
        assert!(EnsembleModel::new(vec![]).is_err());
    }

    #[test]
    fn report_csv_lists_every_variable_and_ranks_by_median() {
        let report = ImportanceReport {
            variables: vec![
                VariableImportance {
                    name: "a".into(),
                    median_importance: 0.05,
                    per_model: vec![0.04, 0.05, 0.07],
                },
                VariableImportance {
                    name: "b".into(),
                    median_importance: 0.2,
                    per_model: vec![0.1, 0.2, 0.3],
                },
            ],
        };
        let csv = report.to_csv_string();
        assert!(csv.starts_with("variable,median,model_0,model_1,model_2\n"));
        assert!(csv.contains("a,0.05,0.04,0.05,0.07\n"));
        let ranked = report.ranked();
        assert_eq!(ranked[0].name, "b");
    }
}
