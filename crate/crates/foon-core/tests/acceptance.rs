//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (run with `cargo test -p foon-core --test acceptance --
//! --nocapture` to see them).

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;

use common::*;
use foon_core::analysis::{eigenvector_centrality, katz_centrality};
use foon_core::graph::{FoonGraph, ObjectNode};
use foon_core::ingest::{parse_subgraph, serialize_subgraph, subgraphs_identical, Subgraph};
use foon_core::merge::{merge_all, merge_unit, MergeStats};
use foon_core::motion::{
    batch_dtw_align, generate_trajectory, learn_motion_model, Constraint, ConstraintSet,
    HarmonicSelector, MotionModel, TrialSet, TransformDirection, SIGMA_RIDGE,
};
use foon_core::retrieval::{
    parse_scene, reachability_closure, retrieve_task_tree, validate_task_tree, MotionCostTable,
    RetrievalError, SceneInventory,
};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn report(criterion: &str, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    println!(
        "acceptance {criterion}: PASS in {:.2}s (budget {:.0}s)",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(
        elapsed < budget,
        "{criterion} exceeded its runtime budget: {elapsed:?} >= {budget:?}"
    );
}

fn assert_graph_invariants(graph: &FoonGraph) {
    // Bipartite: every edge joins an object node and a motion node.
    for (id, node) in graph.nodes() {
        for &succ in graph.out_neighbors(id) {
            assert_ne!(
                node.is_object(),
                graph.node(succ).is_object(),
                "edge joins two nodes of the same kind"
            );
        }
    }
    // Object uniqueness: no two stored object nodes are equal.
    let mut seen: BTreeSet<&ObjectNode> = BTreeSet::new();
    for (_, obj) in graph.object_nodes() {
        assert!(seen.insert(obj), "duplicate object node {obj}");
    }
    // Edge count identity.
    let from_units: usize = graph
        .units()
        .map(|(_, u)| u.inputs().len() + u.outputs().len())
        .sum();
    assert_eq!(graph.edge_count(), from_units);
    // Every motion node belongs to exactly one unit.
    let motions = graph.nodes().filter(|(_, n)| n.is_motion()).count();
    assert_eq!(motions, graph.unit_count());
}

#[test]
fn a01_graph_invariants_under_random_merges() {
    let start = Instant::now();
    let mut rng = rng(0xA01);
    for _ in 0..1_000 {
        let mut graph = FoonGraph::new();
        let unit_count = rng.gen_range(1..=50);
        for _ in 0..unit_count {
            merge_unit(&mut graph, &random_unit(&mut rng));
            assert_graph_invariants(&graph);
        }
    }
    report("01 (graph invariants, 1000 merge sequences)", start, Duration::from_secs(10));
}

#[test]
fn a02_merge_algebra() {
    let start = Instant::now();
    let mut rng = rng(0xA02);
    for _ in 0..100 {
        let subgraphs: Vec<Subgraph> = (0..rng.gen_range(2..=4))
            .map(|i| random_subgraph(&mut rng, 8, &format!("s{i}")))
            .collect();
        let refs: Vec<&Subgraph> = subgraphs.iter().collect();
        let (base, base_stats) = merge_all(refs.clone());
        assert_eq!(
            base_stats.units_examined,
            base_stats.units_added + base_stats.units_duplicated
        );

        // Idempotence: S ++ S merges to the same unit set.
        let doubled: Vec<&Subgraph> = refs.iter().chain(refs.iter()).copied().collect();
        let (twice, _) = merge_all(doubled);
        assert_eq!(unit_set(&base), unit_set(&twice));
        assert_eq!(canonical_unit_text(&base), canonical_unit_text(&twice));

        // Order independence of unit and object sets.
        for _ in 0..5 {
            let mut shuffled = refs.clone();
            shuffled.shuffle(&mut rng);
            let (merged, stats) = merge_all(shuffled);
            assert_eq!(unit_set(&base), unit_set(&merged));
            assert_eq!(object_set(&base), object_set(&merged));
            assert_eq!(canonical_unit_text(&base), canonical_unit_text(&merged));
            assert_eq!(
                stats.units_examined,
                stats.units_added + stats.units_duplicated
            );
        }
    }
    report("02 (merge algebra, 100 corpora x 5 permutations)", start, Duration::from_secs(30));
}

#[test]
fn a03_parser_round_trip() {
    let start = Instant::now();
    let mut rng = rng(0xA03);
    for i in 0..500 {
        let sub = random_subgraph(&mut rng, 10, &format!("random{i}"));
        let text = serialize_subgraph(&sub);
        let parsed = parse_subgraph(&text, sub.source()).expect("serialized subgraph parses");
        assert!(subgraphs_identical(&sub, &parsed), "round trip diff on case {i}");
        assert_eq!(text, serialize_subgraph(&parsed), "bytes differ on case {i}");
    }

    // The bundled corpus: every file survives parse -> serialize -> parse.
    let dir = corpus_dir().join("subgraphs");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("corpus directory exists")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map(|x| x == "foon").unwrap_or(false))
        .collect();
    files.sort();
    assert!(files.len() >= 10, "corpus must hold at least 10 recipes, found {}", files.len());
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"ribs_grilled".to_string()));
    assert!(names.contains(&"ribs_oven".to_string()));
    for path in &files {
        let text = std::fs::read_to_string(path).unwrap();
        let name = path.file_stem().unwrap().to_string_lossy();
        let first = parse_subgraph(&text, &name).unwrap_or_else(|e| panic!("{e}"));
        let re_serialized = serialize_subgraph(&first);
        let second = parse_subgraph(&re_serialized, &name).unwrap();
        assert!(subgraphs_identical(&first, &second), "corpus diff in {name}");
        assert!(!first.is_empty(), "corpus recipe {name} is empty");
    }
    report("03 (parser round-trip, 500 random + corpus)", start, Duration::from_secs(30));
}

#[test]
fn a04_centrality_oracles() {
    let start = Instant::now();
    let mut rng = rng(0xA04);
    for case in 0..200 {
        let graph = random_connected_object_graph(&mut rng, 8);
        let n = graph.node_count();
        let a = graph.multiplicity_matrix();

        // Katz vs dense inversion of (I - alpha A^T).
        let rho = a
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max);
        let alpha = if rho > 0.0 { 0.85 / rho } else { 0.3 };
        let beta = rng.gen_range(0.5..2.0);
        let system = DMatrix::identity(n, n) - a.transpose() * alpha;
        let expected = system.try_inverse().expect("admissible alpha keeps I - aA^T invertible")
            * DVector::from_element(n, beta);
        let report_katz = katz_centrality(&graph, alpha, beta).expect("katz converges");
        for (i, node) in graph.nodes().iter().enumerate() {
            let got = report_katz.score(node).unwrap();
            assert!(
                (got - expected[i]).abs() < 1e-8,
                "case {case}: katz mismatch at {i}: {got} vs {}",
                expected[i]
            );
        }

        // alpha = 0 collapses to beta exactly.
        let collapsed = katz_centrality(&graph, 0.0, beta).unwrap();
        for (_, score) in collapsed.entries() {
            assert_eq!(*score, beta);
        }

        // Eigenvector vs dense symmetric eigensolve of A + A^T.
        let sym = &a + a.transpose();
        let eigen = sym.symmetric_eigen();
        let (top, _) = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.partial_cmp(y).unwrap())
            .unwrap();
        let mut dominant: DVector<f64> = eigen.eigenvectors.column(top).into();
        if dominant.sum() < 0.0 {
            dominant = -dominant;
        }
        dominant /= dominant.norm();
        let report_eigen = eigenvector_centrality(&graph, 1e-13, 1_000_000).expect("converges");
        for (i, node) in graph.nodes().iter().enumerate() {
            let got = report_eigen.score(node).unwrap();
            assert!(
                (got - dominant[i]).abs() < 1e-8,
                "case {case}: eigenvector mismatch at {i}: {got} vs {}",
                dominant[i]
            );
        }
    }
    report("04 (centrality oracles, 200 graphs)", start, Duration::from_secs(60));
}

#[test]
fn a05_retrieval_soundness_completeness_optimality() {
    let start = Instant::now();
    let mut rng = rng(0xA05);
    let unit_costs = MotionCostTable::default();
    let mut optimality_checks = 0usize;
    for case in 0..500 {
        let graph = random_foon(&mut rng, 12);
        let goals: Vec<ObjectNode> = graph.object_nodes().map(|(_, o)| o.clone()).collect();
        for scene_case in 0..3 {
            let scene = random_scene(&mut rng, &graph, 0.3);
            let closure = reachability_closure(&graph, &scene);
            for goal in &goals {
                let result = retrieve_task_tree(&graph, goal, &scene, &unit_costs);
                match result {
                    Ok(tree) => {
                        assert!(
                            closure.contains(goal),
                            "case {case}/{scene_case}: retrieval found a tree for a goal outside the closure"
                        );
                        validate_task_tree(&graph, &tree, &scene, goal)
                            .unwrap_or_else(|v| panic!("case {case}: invalid tree: {v}"));
                        if graph.unit_count() <= 8 {
                            let minimum = exhaustive_min_tree_size(&graph, goal, &scene)
                                .expect("oracle agrees the goal is reachable");
                            assert_eq!(
                                tree.len(),
                                minimum,
                                "case {case}: tree size {} is not the exhaustive minimum {minimum}",
                                tree.len()
                            );
                            optimality_checks += 1;
                        }
                    }
                    Err(RetrievalError::Unreachable(_)) => {
                        assert!(
                            !closure.contains(goal),
                            "case {case}/{scene_case}: goal in closure but reported unreachable"
                        );
                        if graph.unit_count() <= 8 {
                            assert_eq!(exhaustive_min_tree_size(&graph, goal, &scene), None);
                        }
                    }
                    Err(e) => panic!("case {case}: unexpected error {e}"),
                }
            }
        }
    }
    assert!(optimality_checks > 1_000, "too few optimality comparisons ran: {optimality_checks}");
    report("05 (retrieval vs closure + exhaustive minimum)", start, Duration::from_secs(120));
}

#[test]
fn a06_ribs_fixture() {
    let start = Instant::now();
    let dir = corpus_dir();
    let load = |name: &str| {
        let text = std::fs::read_to_string(dir.join("subgraphs").join(name)).unwrap();
        parse_subgraph(&text, name).unwrap()
    };
    let grilled = load("ribs_grilled.foon");
    let oven = load("ribs_oven.foon");
    let (graph, stats) = merge_all([&grilled, &oven]);
    // The seasoning unit appears in both recipes and merges once.
    assert_eq!(stats.units_duplicated, 1);
    assert_eq!(graph.unit_count(), grilled.len() + oven.len() - 1);

    let scene_text = std::fs::read_to_string(dir.join("scenes").join("ribs.txt")).unwrap();
    let scene = parse_scene(&scene_text, "ribs.txt").unwrap();
    let goal = ObjectNode::new("ribs", ["cooked"], std::iter::empty::<&str>()).unwrap();

    // Reachability is recomputed by the closure oracle, then the retrieved
    // tree must validate.
    assert!(reachability_closure(&graph, &scene).contains(&goal));
    let tree = retrieve_task_tree(&graph, &goal, &scene, &MotionCostTable::default()).unwrap();
    assert!(!tree.is_empty());
    validate_task_tree(&graph, &tree, &scene, &goal).unwrap();

    // Removing the salt starves the shared seasoning unit: both recipes die.
    let salt = ObjectNode::new("salt", ["granulated"], std::iter::empty::<&str>()).unwrap();
    let mut without_salt = scene.clone();
    assert!(without_salt.remove(&salt));
    assert!(!reachability_closure(&graph, &without_salt).contains(&goal));
    assert!(matches!(
        retrieve_task_tree(&graph, &goal, &without_salt, &MotionCostTable::default()),
        Err(RetrievalError::Unreachable(_))
    ));

    // Removing the ribs themselves does the same.
    let ribs = ObjectNode::new("ribs", ["raw"], std::iter::empty::<&str>()).unwrap();
    let mut without_ribs = scene.clone();
    assert!(without_ribs.remove(&ribs));
    assert!(matches!(
        retrieve_task_tree(&graph, &goal, &without_ribs, &MotionCostTable::default()),
        Err(RetrievalError::Unreachable(_))
    ));
    report("06 (ribs fixture)", start, Duration::from_secs(10));
}

/// Random but well-conditioned motion model: orthonormal harmonics from a
/// QR factorization, positive definite weight covariance.
fn random_model(rng: &mut rand_chacha::ChaCha8Rng) -> MotionModel {
    let d = rng.gen_range(1..=3);
    let t = rng.gen_range(20..=40);
    let m = rng.gen_range(1..=3);
    let mut mean = Vec::new();
    let mut harmonics = Vec::new();
    let mut mu = Vec::new();
    let mut sigma = Vec::new();
    for _ in 0..d {
        mean.push((0..t).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>());
        let raw = DMatrix::from_fn(t, m, |_, _| rng.gen_range(-1.0..1.0));
        let q = raw.qr().q();
        harmonics.push(
            (0..m)
                .map(|j| q.column(j).iter().copied().collect::<Vec<f64>>())
                .collect::<Vec<_>>(),
        );
        mu.push((0..m).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<f64>>());
        let b = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-0.7..0.7));
        let mut cov = &b * b.transpose();
        for i in 0..m {
            cov[(i, i)] += rng.gen_range(0.2..1.0);
        }
        sigma.push(
            (0..m)
                .map(|a| (0..m).map(|b_| cov[(a, b_)]).collect::<Vec<f64>>())
                .collect::<Vec<_>>(),
        );
    }
    MotionModel {
        degree_names: (0..d).map(|i| format!("d{i}")).collect(),
        angular_degrees: BTreeSet::new(),
        samples: t,
        harmonic_count: m,
        mean,
        harmonics,
        mu,
        sigma,
    }
}

/// The quadratic loss generation minimizes for one constrained degree,
/// evaluated independently of the solver (dense inverse, plain loops).
fn constrained_loss(
    model: &MotionModel,
    degree: usize,
    entries: &[Constraint],
    lambda: f64,
    c: &DVector<f64>,
    c0: f64,
) -> f64 {
    let m = model.harmonic_count;
    let mut data = 0.0;
    for e in entries.iter().filter(|e| e.degree == degree) {
        let mut fit = model.mean[degree][e.timestamp - 1] + c0;
        for j in 0..m {
            fit += c[j] * model.harmonics[degree][j][e.timestamp - 1];
        }
        data += (e.value - fit) * (e.value - fit);
    }
    let mut cov = DMatrix::from_fn(m, m, |a, b| model.sigma[degree][a][b]);
    for i in 0..m {
        cov[(i, i)] += SIGMA_RIDGE;
    }
    let inv = cov.try_inverse().expect("regularized covariance invertible");
    let mu = DVector::from_iterator(m, model.mu[degree].iter().copied());
    let deviation = c - mu;
    0.5 * data + 0.5 * lambda * (deviation.transpose() * inv * deviation)[(0, 0)]
}

fn fd_gradient_max_norm(
    model: &MotionModel,
    degree: usize,
    entries: &[Constraint],
    lambda: f64,
    c: &DVector<f64>,
    c0: f64,
) -> f64 {
    let m = model.harmonic_count;
    let mut worst: f64 = 0.0;
    for i in 0..=m {
        let h = 1e-6
            * (1.0
                + if i < m { c[i].abs() } else { c0.abs() });
        let mut eval = |sign: f64| {
            let mut cp = c.clone();
            let mut c0p = c0;
            if i < m {
                cp[i] += sign * h;
            } else {
                c0p += sign * h;
            }
            constrained_loss(model, degree, entries, lambda, &cp, c0p)
        };
        let grad = (eval(1.0) - eval(-1.0)) / (2.0 * h);
        worst = worst.max(grad.abs());
    }
    worst
}

#[test]
fn a07_motion_closed_form_optimality() {
    let start = Instant::now();
    let mut rng = rng(0xA07);
    for case in 0..100 {
        let model = random_model(&mut rng);
        let lambda = *[1e-6, 1e-3, 1.0, 1e3].choose(&mut rng).unwrap();
        let mut entries = Vec::new();
        let constrained: Vec<usize> = (0..model.degree_count())
            .filter(|_| rng.gen_bool(0.7))
            .collect();
        for &degree in &constrained {
            for _ in 0..rng.gen_range(1..=4) {
                entries.push(Constraint {
                    degree,
                    timestamp: rng.gen_range(1..=model.samples),
                    value: rng.gen_range(-3.0..3.0),
                });
            }
        }
        let set = ConstraintSet::new(entries.clone(), lambda).unwrap();
        let out = generate_trajectory(&model, &set).unwrap();

        // Finite-difference stationarity at the returned weights.
        for &degree in &constrained {
            let (c, c0) = &out.weights[degree];
            let scale = {
                let mu = DVector::from_iterator(
                    model.harmonic_count,
                    model.mu[degree].iter().copied(),
                );
                fd_gradient_max_norm(&model, degree, &entries, lambda, &mu, 0.0)
            };
            let grad = fd_gradient_max_norm(&model, degree, &entries, lambda, c, *c0);
            assert!(
                grad <= 1e-5 * (1.0 + scale),
                "case {case} degree {degree}: gradient {grad} over scale {scale}"
            );
        }

        // lambda -> infinity pins the weights to mu.
        let huge = ConstraintSet::new(entries.clone(), 1e12).unwrap();
        let pinned = generate_trajectory(&model, &huge).unwrap();
        for &degree in &constrained {
            let mu = DVector::from_iterator(
                model.harmonic_count,
                model.mu[degree].iter().copied(),
            );
            assert!(
                (&pinned.weights[degree].0 - mu).abs().max() <= 1e-6,
                "case {case}: weights did not shrink to mu"
            );
        }

        // Data-fit residual grows monotonically with lambda.
        if !entries.is_empty() {
            let grid = [1e-6, 1e-3, 1.0, 1e3, 1e6, 1e9];
            let residuals: Vec<f64> = grid
                .iter()
                .map(|&l| {
                    let out = generate_trajectory(
                        &model,
                        &ConstraintSet::new(entries.clone(), l).unwrap(),
                    )
                    .unwrap();
                    entries
                        .iter()
                        .map(|e| {
                            let got = out.trajectory[(e.degree, e.timestamp - 1)];
                            (got - e.value) * (got - e.value)
                        })
                        .sum::<f64>()
                })
                .collect();
            for w in residuals.windows(2) {
                assert!(
                    w[0] <= w[1] * (1.0 + 1e-9) + 1e-12,
                    "case {case}: residuals not monotone: {residuals:?}"
                );
            }
        }
    }
    report("07 (closed-form optimality, 100 models)", start, Duration::from_secs(60));
}

/// Twenty pouring-like trials: x and y carry nearly all variance through
/// two variation curves with strong, distinct endpoint values (so endpoint
/// constraints are expressible); z and the angles stay quiet.
fn pouring_trials(rng: &mut rand_chacha::ChaCha8Rng) -> TrialSet {
    let t = 490;
    let grid: Vec<f64> = (0..t).map(|j| j as f64 / (t - 1) as f64).collect();
    let bell: Vec<f64> = grid
        .iter()
        .map(|u| (-((u - 0.5) / 0.18) * ((u - 0.5) / 0.18)).exp())
        .collect();
    // Variation curves: nonzero at t=1 and t=T so constraints there bind.
    let fade: Vec<f64> = grid.iter().map(|u| (std::f64::consts::PI * u / 2.0).cos()).collect();
    let ramp: Vec<f64> = grid.iter().map(|u| 0.3 + 0.7 * u).collect();

    let trials: Vec<DMatrix<f64>> = (0..20)
        .map(|_| {
            let a = rng.gen_range(-0.4..0.4);
            let b = rng.gen_range(-0.4..0.4);
            let c = rng.gen_range(-0.3..0.3);
            let d = rng.gen_range(-0.3..0.3);
            let mut m = DMatrix::zeros(6, t);
            for (j, u) in grid.iter().enumerate() {
                m[(0, j)] = 0.7 * bell[j] + 0.4 + a * fade[j] + b * ramp[j];
                m[(1, j)] = 0.45 * bell[j] + 0.25 + c * fade[j] + d * ramp[j];
                m[(2, j)] = 0.2 + 0.1 * u;
                m[(3, j)] = 0.5 * (2.0 * std::f64::consts::PI * u).sin();
                m[(4, j)] = 0.3 * (std::f64::consts::PI * u).cos();
                m[(5, j)] = 0.1 * (std::f64::consts::PI * u).sin();
            }
            m
        })
        .collect();
    TrialSet::with_default_degrees(trials).unwrap()
}

#[test]
fn a08_constrained_generation_scenario() {
    let start = Instant::now();
    let mut rng = rng(0xA08);
    let trials = pouring_trials(&mut rng);
    let transformed = foon_core::motion::angle_transform(&trials, TransformDirection::Forward)
        .unwrap();
    let aligned = batch_dtw_align(&transformed).unwrap();
    assert_eq!(aligned.common_len(), 490);
    let learned = learn_motion_model(&aligned, HarmonicSelector::Count(2)).unwrap();
    let model = learned.model;

    let (x, y) = (0usize, 1usize);
    let entries = vec![
        Constraint { degree: x, timestamp: 1, value: 1.0 },
        Constraint { degree: y, timestamp: 1, value: 0.5 },
        Constraint { degree: x, timestamp: 490, value: 0.3 },
        Constraint { degree: y, timestamp: 490, value: 0.3 },
    ];
    let set = ConstraintSet::new(entries.clone(), 1e-6).unwrap();
    let out = generate_trajectory(&model, &set).unwrap();

    for e in &entries {
        let got = out.trajectory[(e.degree, e.timestamp - 1)];
        assert!(
            (got - e.value).abs() <= 1e-2,
            "constraint on degree {} at t={} missed: {got} vs {}",
            e.degree,
            e.timestamp,
            e.value
        );
    }

    // Unconstrained degrees match the mean-weight reconstruction.
    let expected = model.mean_weight_trajectory();
    for degree in 2..6 {
        for j in 0..model.samples {
            assert!(
                (out.trajectory[(degree, j)] - expected[(degree, j)]).abs() <= 1e-9,
                "degree {degree} deviates at sample {j}"
            );
        }
    }
    report("08 (constrained generation scenario)", start, Duration::from_secs(5));
}

#[test]
fn a09_fpca_rank_recovery() {
    let start = Instant::now();
    let mut rng = rng(0xA09);
    for k in 1..=3usize {
        let n = 12;
        let t = 50;
        // Orthonormal basis of k variation curves.
        let raw = DMatrix::from_fn(t, k, |_, _| rng.gen_range(-1.0..1.0));
        let q = raw.qr().q();
        let mean: Vec<f64> = (0..t).map(|j| (j as f64 * 0.21).sin() * 2.0).collect();
        let trials: Vec<DMatrix<f64>> = (0..n)
            .map(|_| {
                let coefficients: Vec<f64> =
                    (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let mut m = DMatrix::zeros(1, t);
                for j in 0..t {
                    let mut v = mean[j];
                    for (idx, coefficient) in coefficients.iter().enumerate() {
                        v += coefficient * q[(j, idx)];
                    }
                    m[(0, j)] = v;
                }
                m
            })
            .collect();
        let set = TrialSet::new(trials.clone(), vec!["d0".into()], BTreeSet::new()).unwrap();
        let aligned = foon_core::motion::AlignedTrials::from_equal_length(&set).unwrap();
        let learned = learn_motion_model(&aligned, HarmonicSelector::Count(k)).unwrap();

        let captured: f64 = learned.explained_variance[0].iter().sum();
        assert!(captured >= 1.0 - 1e-8, "rank {k}: captured only {captured}");

        for (i, trial) in trials.iter().enumerate() {
            for j in 0..t {
                let mut rebuilt = learned.model.mean[0][j];
                for h in 0..k {
                    rebuilt += learned.weights[0][(i, h)] * learned.model.harmonics[0][h][j];
                }
                assert!(
                    (rebuilt - trial[(0, j)]).abs() <= 1e-8,
                    "rank {k}: trial {i} sample {j} off by {}",
                    (rebuilt - trial[(0, j)]).abs()
                );
            }
        }
    }
    report("09 (rank-k recovery, k in 1..=3)", start, Duration::from_secs(20));
}

#[test]
fn a10_dtw_sanity() {
    let start = Instant::now();
    let mut rng = rng(0xA10);

    // Identical trials: identity warps, zero cost.
    let t = 80;
    let base = DMatrix::from_fn(2, t, |d, j| {
        let u = j as f64 / (t - 1) as f64;
        if d == 0 {
            (-((u - 0.5) / 0.2) * ((u - 0.5) / 0.2)).exp()
        } else {
            u
        }
    });
    let set = TrialSet::new(
        vec![base.clone(), base.clone(), base.clone(), base],
        vec!["a".into(), "b".into()],
        BTreeSet::new(),
    )
    .unwrap();
    let aligned = batch_dtw_align(&set).unwrap();
    assert_eq!(aligned.total_cost(), 0.0);
    let identity: Vec<(usize, usize)> = (0..t).map(|i| (i, i)).collect();
    for path in aligned.paths() {
        assert_eq!(*path, identity);
    }

    // Shifted copies of a bell get strictly closer after alignment.
    for case in 0..20 {
        let len = 70;
        let shift = rng.gen_range(4.0..9.0);
        let bell = |offset: f64| {
            DMatrix::from_fn(1, len, |_, j| {
                let x = (j as f64 - len as f64 / 2.0 - offset) / 7.0;
                (-x * x).exp()
            })
        };
        let a = bell(-shift);
        let b = bell(shift);
        let msd = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            (x - y).iter().map(|v| v * v).sum::<f64>() / x.ncols() as f64
        };
        let before = msd(&a, &b);
        let set = TrialSet::new(vec![a, b], vec!["x".into()], BTreeSet::new()).unwrap();
        let aligned = batch_dtw_align(&set).unwrap();
        let after = msd(&aligned.trials()[0], &aligned.trials()[1]);
        assert!(
            after < before,
            "case {case}: alignment did not reduce distance ({before} -> {after})"
        );
        for path in aligned.paths() {
            assert_eq!(path.first().copied(), Some((0, 0)));
            assert_eq!(path.last().copied(), Some((len - 1, aligned.common_len() - 1)));
            for w in path.windows(2) {
                assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }
    }
    report("10 (DTW sanity)", start, Duration::from_secs(20));
}

/// Spot check that merge statistics stay additive across an entire corpus
/// merge (used by the CLI's reporting).
#[test]
fn merge_stats_are_additive() {
    let mut rng = rng(0xBEEF);
    let subs: Vec<Subgraph> = (0..4)
        .map(|i| random_subgraph(&mut rng, 6, &format!("s{i}")))
        .collect();
    let (_, stats) = merge_all(subs.iter());
    let total: usize = subs.iter().map(|s| s.len()).sum();
    assert_eq!(stats.units_examined, total);
    assert_eq!(stats, {
        let mut acc = MergeStats::default();
        let mut g = FoonGraph::new();
        for s in &subs {
            for u in s.units() {
                acc.absorb(merge_unit(&mut g, u));
            }
        }
        acc
    });
}
