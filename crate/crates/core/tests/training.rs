mod common;

use common::desk::{small_plan, Desk};
use common::freeze::FreezeAudit;
use lmtc::corpus::{LanguageCode, ReadPurpose, Split};
use lmtc::pipeline::{run_transfer, train_and_evaluate};
use lmtc::training::{
    mlm_loss, run_classifier_training, run_lmft, CheckpointStore, NoopObserver, OptimizerSettings, Scheme,
    UnfreezeMode, UnfreezeSchedule,
};

#[test]
fn frozen_groups_never_change() {
    let desk = Desk::small();
    let schedules = [
        UnfreezeSchedule::top_layers(3, 2, false, UnfreezeMode::Gradual),
        UnfreezeSchedule::top_layers(3, 3, true, UnfreezeMode::Gradual),
        UnfreezeSchedule::top_layers(3, 1, false, UnfreezeMode::None),
    ];
    for schedule in schedules {
        let mut plan = small_plan(3);
        plan.unfreeze = schedule.clone();
        let model = desk.base(3, 1).with_new_classifier(desk.labels.len(), 1).unwrap();
        let mut audit = FreezeAudit::default();
        run_classifier_training(
            model,
            &plan,
            desk.corpora(),
            &desk.vocab,
            &desk.labels,
            &mut CheckpointStore::memory(),
            &mut audit,
        )
        .unwrap();
        assert!(audit.steps > 0);
        assert_eq!(audit.changed_frozen_bytes, 0, "{schedule:?}");
        assert_eq!(audit.trainable_changed_steps, audit.steps);
    }
}

#[test]
fn zsl_never_reads_target_supervision() {
    let desk = Desk::small();
    let mut plan = small_plan(5);
    plan.lmft_cycles = 1;
    run_transfer(&desk.base(3, 5), &plan, desk.res(), &mut CheckpointStore::memory(), &mut NoopObserver).unwrap();
    for corpus in desk.corpora() {
        let audit = corpus.audit();
        for &l in plan.target_languages.intersection(corpus.languages()) {
            for split in [Split::Train, Split::Dev] {
                assert_eq!(audit.reads(l, split, ReadPurpose::Supervised), 0, "{l} {split:?}");
            }
            assert_eq!(audit.total_reads(l, Split::Dev), 0);
            assert!(audit.reads(l, Split::Test, ReadPurpose::Evaluation) > 0);
        }
        if corpus.languages().contains(&LanguageCode::EN) {
            assert!(audit.reads(LanguageCode::EN, Split::Dev, ReadPurpose::Supervised) > 0);
        }
    }
}

#[test]
fn tl_selects_on_target_dev() {
    let desk = Desk::small();
    let mut plan = small_plan(2);
    plan.scheme = Scheme::Tl;
    let out = train_and_evaluate(&desk.base(3, 2), &plan, desk.res(), &mut CheckpointStore::memory(), &mut NoopObserver)
        .unwrap();
    for rec in &out.log.records {
        assert!(rec.dev.contains_key(&LanguageCode::FR) && rec.dev.contains_key(&LanguageCode::DE));
    }
    let fr = desk.corpora().iter().find(|c| c.languages().contains(&LanguageCode::FR)).unwrap();
    assert_eq!(fr.audit().reads(LanguageCode::FR, Split::Train, ReadPurpose::Supervised), 0);
}

#[test]
fn identical_runs_are_byte_identical() {
    let desk = Desk::small();
    let mut plan = small_plan(9);
    plan.lmft_cycles = 1;
    let run = || {
        let mut store = CheckpointStore::memory();
        let out = run_transfer(&desk.base(3, 9), &plan, desk.res(), &mut store, &mut NoopObserver).unwrap();
        let ckpts: Vec<Vec<u8>> = out.log.records.iter().map(|r| store.bytes(&r.checkpoint).unwrap()).collect();
        let reports = serde_json::to_string(&out.reports).unwrap();
        (ckpts, reports, out.log.to_json())
    };
    assert_eq!(run(), run());
}

#[test]
fn lmft_lowers_held_out_mlm_loss() {
    let desk = Desk::new(
        &lmtc::synth::SynthConfig {
            labeled_docs: 500,
            unlabeled_docs: 0,
            labels: 10,
            languages: vec![LanguageCode::EN],
            ..Default::default()
        },
        400,
    );
    let corpus = &desk.corpora()[0];
    let pool: Vec<_> = corpus.read(LanguageCode::EN, Split::Train, ReadPurpose::LanguageModel).into_iter().cloned().collect();
    let held_out: Vec<_> = corpus.read(LanguageCode::EN, Split::Test, ReadPurpose::Analysis).into_iter().cloned().collect();
    let settings = OptimizerSettings {
        learning_rate: 2e-3,
        ..OptimizerSettings::default()
    };
    let mut lower = 0;
    for seed in 1..=5 {
        let base = desk.base(2, seed);
        let before = mlm_loss(&base, &held_out, &desk.vocab, 99).unwrap();
        let tuned = run_lmft(base, &pool, 3, &desk.vocab, &settings, seed).unwrap();
        let after = mlm_loss(&tuned, &held_out, &desk.vocab, 99).unwrap();
        lower += usize::from(after < before);
    }
    assert!(lower >= 4, "held-out loss lower in {lower}/5 seeds");
}

#[test]
fn lmft_with_zero_cycles_is_identity() {
    let desk = Desk::small();
    let base = desk.base(2, 1);
    let same = run_lmft(base.clone(), &[], 0, &desk.vocab, &OptimizerSettings::default(), 1).unwrap();
    assert_eq!(same.to_checkpoint_bytes(), base.to_checkpoint_bytes());
    assert!(run_lmft(base, &[], 1, &desk.vocab, &OptimizerSettings::default(), 1).is_err());
}

#[test]
fn zsl_plan_with_target_in_source_is_rejected() {
    let desk = Desk::small();
    let mut plan = small_plan(1);
    plan.source_languages.insert(LanguageCode::FR);
    let err = run_transfer(&desk.base(3, 1), &plan, desk.res(), &mut CheckpointStore::memory(), &mut NoopObserver);
    assert!(err.is_err());
}
