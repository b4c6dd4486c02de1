mod common;

use fsnc_core::contrast::{AugmentSpec, LossKind, LossSpec, SelfKind};
use fsnc_core::episodes::EpisodeSpec;
use fsnc_core::graphdata::HIDDEN_LABEL;
use fsnc_core::nn::{EncoderDims, EncoderParams};
use fsnc_core::pretrain::{embed_all, pretrain_ce, pretrain_gcl, CeTrainer, EncoderTrainer, GclTrainer, NeverStop, PretrainConfig};
use fsnc_core::probe::ProbeConfig;
use fsnc_core::protocol::{evaluate_meta_tasks, Predictor, ProbePredictor};

fn config(kind: LossKind, epochs: usize, seed: u64) -> PretrainConfig {
    let mut cfg = PretrainConfig::new(LossSpec::new(kind));
    cfg.max_epochs = epochs;
    cfg.seed = seed;
    cfg
}

#[test]
fn ce_reaches_full_training_accuracy_on_clean_blocks() {
    let mut spec = common::sbm_spec(6, 20);
    spec.p_in = 1.0;
    spec.p_out = 0.0;
    spec.noise_std = 0.0;
    let (g, split) = common::six_class(&spec, 4);
    let mut cfg = config(LossKind::CrossEntropy, 200, 4);
    cfg.lr = 0.01;
    let mut trainer = CeTrainer::new(&g.with_hidden_labels(split.train()), &cfg).unwrap();
    let mut reached = None;
    for epoch in 1..=200 {
        trainer.step(epoch).unwrap();
        if trainer.training_accuracy().unwrap() == 1.0 {
            reached = Some(epoch);
            break;
        }
    }
    assert!(reached.is_some(), "training accuracy never reached 1.0 in 200 epochs");
}

#[test]
fn zero_epochs_is_a_config_error() {
    let (g, split) = common::easy_sbm(1);
    let cfg = config(LossKind::CrossEntropy, 0, 1);
    assert!(pretrain_ce(&g, &split, &cfg, &mut NeverStop).unwrap_err().is_validation());
}

#[test]
fn supervised_contrast_needs_a_split() {
    let (g, _) = common::easy_sbm(1);
    for kind in [LossKind::SupCon, LossKind::Joint] {
        assert!(pretrain_gcl(&g, None, &config(kind, 2, 1), &mut NeverStop).is_err());
    }
}

#[test]
fn self_supervised_training_never_sees_labels() {
    let (g, _) = common::easy_sbm(2);
    let blind = g.with_hidden_labels(&Default::default());
    assert!(blind.labels().iter().all(|&l| l == HIDDEN_LABEL));
    let cfg = config(LossKind::InfoNce, 3, 2);
    let a = pretrain_gcl(&g, None, &cfg, &mut NeverStop).unwrap();
    let mut trainer = GclTrainer::new(&blind, &cfg).unwrap();
    for epoch in 1..=3 {
        trainer.step(epoch).unwrap();
    }
    assert_eq!(a.params(), &trainer.encoder().without_projection());
}

#[test]
fn pretraining_is_byte_deterministic() {
    let (g, split) = common::easy_sbm(3);
    let dir = tempfile::tempdir().unwrap();
    for kind in [LossKind::CrossEntropy, LossKind::InfoNce, LossKind::Bootstrap, LossKind::Joint] {
        let cfg = config(kind, 5, 9);
        let mut bytes = Vec::new();
        for run in 0..2 {
            let enc = if kind == LossKind::CrossEntropy {
                pretrain_ce(&g, &split, &cfg, &mut NeverStop).unwrap()
            } else {
                pretrain_gcl(&g, Some(&split), &cfg, &mut NeverStop).unwrap()
            };
            let path = dir.path().join(format!("{kind:?}-{run}.fsnp"));
            enc.save(&path).unwrap();
            bytes.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(bytes[0], bytes[1], "{kind:?}");
    }
}

fn run_epochs(kind: LossKind, lambda: f64, epochs: usize) -> (Vec<f64>, EncoderParams) {
    run_epochs_with(kind, lambda, epochs, AugmentSpec::default())
}

fn run_epochs_with(kind: LossKind, lambda: f64, epochs: usize, augment: AugmentSpec) -> (Vec<f64>, EncoderParams) {
    let (g, split) = common::easy_sbm(5);
    let mut cfg = config(kind, epochs, 21);
    cfg.augment = augment;
    cfg.loss.lambda = lambda;
    cfg.loss.self_kind = SelfKind::InfoNce;
    let mut trainer = GclTrainer::new(&g.with_hidden_labels(split.train()), &cfg).unwrap();
    let losses = (1..=epochs).map(|e| trainer.step(e).unwrap()).collect();
    (losses, trainer.encoder().clone())
}

#[test]
fn joint_at_lambda_one_is_pure_self_supervision() {
    let (joint, joint_enc) = run_epochs(LossKind::Joint, 1.0, 5);
    let (pure, pure_enc) = run_epochs(LossKind::InfoNce, 0.5, 5);
    assert_eq!(joint, pure);
    assert_eq!(joint_enc, pure_enc);
}

#[test]
fn joint_at_lambda_zero_is_pure_supcon() {
    let (joint, joint_enc) = run_epochs(LossKind::Joint, 0.0, 5);
    let (pure, pure_enc) = run_epochs(LossKind::SupCon, 0.5, 5);
    assert_eq!(joint, pure);
    assert_eq!(joint_enc, pure_enc);
}

#[test]
fn info_nce_loss_falls_over_fifty_epochs() {
    // Dropout is the only noise source here, so single epochs are comparable.
    let (losses, _) = run_epochs_with(LossKind::InfoNce, 0.5, 50, AugmentSpec::IDENTITY);
    assert!(losses[49] < losses[0], "epoch 1 {} vs epoch 50 {}", losses[0], losses[49]);
    // Fresh augmented views make single epochs noisy; compare five-epoch windows.
    let (losses, _) = run_epochs(LossKind::InfoNce, 0.5, 50);
    let (head, tail) = (losses[..5].iter().sum::<f64>() / 5.0, losses[45..].iter().sum::<f64>() / 5.0);
    assert!(tail < head, "epochs 1-5 {head} vs epochs 46-50 {tail}");
}

#[test]
fn embeddings_are_deterministic_and_zero_for_zero_weights() {
    let (g, _) = common::easy_sbm(6);
    let dims = EncoderDims { input: 16, hidden: 16, output: 16 };
    let enc = EncoderParams::xavier(dims, true, 1);
    let a = embed_all(&enc, &g).unwrap();
    let b = embed_all(&enc, &g).unwrap();
    assert_eq!(a.dim(), (300, 16));
    assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    let zero = embed_all(&EncoderParams::zeros(dims, false), &g).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    let wrong = EncoderParams::xavier(EncoderDims { input: 5, ..dims }, false, 1);
    assert!(embed_all(&wrong, &g).is_err());
}

#[test]
fn pretrained_probe_beats_random_encoder_on_novel_classes() {
    // Block structure is clean but class means are close, so the untrained
    // encoder leaves room for improvement.
    let mut spec = common::sbm_spec(6, 60);
    spec.class_mean_separation = 0.4;
    for seed in 0..3 {
        let (g, split) = common::six_class(&spec, seed);
        let mut cfg = config(LossKind::InfoNce, 200, seed);
        cfg.lr = 0.01;
        let trained = pretrain_gcl(&g, None, &cfg, &mut NeverStop).unwrap();
        let random = EncoderParams::xavier(
            EncoderDims { input: 16, hidden: cfg.hidden, output: cfg.output },
            true,
            cfg.seed,
        );
        let episodes = EpisodeSpec::new(2, 5, 10).unwrap();
        let score = |enc: &EncoderParams| {
            let pred = ProbePredictor::new(enc, &g, ProbeConfig::default()).unwrap();
            evaluate_meta_tasks(|ep| pred.predict(ep), &g, split.test(), &episodes, 200, 17).unwrap()
        };
        let (t, r) = (score(trained.params()), score(&random));
        assert!(t > r, "seed {seed}: trained {t} vs random init {r}");
    }
}
