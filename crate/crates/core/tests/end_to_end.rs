use tscausal::graphs::{structural_distance, varlingam_to_lpcmci_form, Collapse};
use tscausal::lingam::Knowledge;
use tscausal::lpcmci::{discover_dataset, LpcmciConfig, Mark, Node};
use tscausal::synthbench::{generate, market_knowledge, market_truth, nongaussian_suite, MARKET_VARIABLES};
use tscausal::varlingam::{fit_var_lingam, VarLingamConfig};
use tscausal::{Dataset32, LaggedDag};

#[test]
fn autoregressive_links_point_forward() {
    // Every variable in the market truth depends on its own past; the PAG must
    // never put an arrowhead at X(t-1) on X(t-1) -> X(t).
    let cfg = LpcmciConfig {
        tau_max: 2,
        ..Default::default()
    };
    for seed in 0..5 {
        let ds = generate(&market_truth(seed), 1000).unwrap();
        let pag = discover_dataset(&ds, &Knowledge::default(), &cfg).unwrap();
        for (v, name) in MARKET_VARIABLES.iter().enumerate() {
            let mark = pag.mark_at(Node::new(v, 1), Node::new(v, 0));
            assert_eq!(mark, Some(Mark::Arrow), "seed {seed} {name}");
            let past = pag.mark_at(Node::new(v, 0), Node::new(v, 1));
            assert_ne!(past, Some(Mark::Arrow), "seed {seed} {name}");
        }
    }
}

#[test]
fn varlingam_recovers_market_structure() {
    let truth = market_truth(3);
    let ds = generate(&truth, 2000).unwrap();
    let cfg = VarLingamConfig {
        order: Some(2),
        ..Default::default()
    };
    let model = fit_var_lingam(&ds, &market_knowledge(), &cfg).unwrap();
    let est = LaggedDag::from_var_lingam(&model).unwrap();
    let want = LaggedDag::new(truth.variable_names.clone(), truth.b.clone()).unwrap();
    let d = structural_distance(&est, &want, 0.1).unwrap();
    assert!(d.recall >= 0.9 && d.precision >= 0.8, "{d:?}");
}

#[test]
fn single_precision_matches_double() {
    let truth = &nongaussian_suite(1, 11).unwrap()[0];
    let ds = generate(truth, 1500).unwrap();
    let cfg = VarLingamConfig {
        order: Some(1),
        ..Default::default()
    };
    let k = Knowledge::default();
    let m64 = fit_var_lingam(&ds, &k, &cfg).unwrap();
    let ds32: Dataset32 = ds.cast();
    let m32 = fit_var_lingam(&ds32, &k, &cfg).unwrap();
    assert_eq!(m32.causal_order, m64.causal_order);
    for (a, b) in m32.b.iter().zip(&m64.b) {
        let diff = a.map(|v| v as f64) - b;
        assert!(diff.abs().max() < 1e-2, "{diff}");
    }
}

#[test]
fn unstandardized_model_refuses_lpcmci_form() {
    let truth = &nongaussian_suite(1, 5).unwrap()[0];
    let ds = generate(truth, 800).unwrap();
    let cfg = VarLingamConfig {
        order: Some(1),
        ..Default::default()
    };
    let model = fit_var_lingam(&ds, &Knowledge::default(), &cfg).unwrap();
    assert!(!model.standardized);
    assert!(varlingam_to_lpcmci_form(&model).is_err());

    let cfg = VarLingamConfig {
        standardize: true,
        ..cfg
    };
    let model = fit_var_lingam(&ds, &Knowledge::default(), &cfg).unwrap();
    let summary = varlingam_to_lpcmci_form(&model).unwrap();
    assert_eq!(summary, summary.collapse());
}
