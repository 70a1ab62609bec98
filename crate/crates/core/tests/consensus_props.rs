mod common;

use std::collections::BTreeSet;

use common::consensus::{random_run, Outcome, VALUES};
use proptest::prelude::*;
use qbchain::consensus::phase_king::run_pure;
use qbchain::consensus::{
    run_consensus, tolerance, ByzantineBehavior, ConsensusInstance, ExplicitDomain, FaultModel, Msg,
};
use qbchain::party::PartyId;
use qbchain::seed;
use qbchain::sim::Sim;
use qbchain::transport::NetworkConfig;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

#[test]
fn ten_thousand_networked_runs_agree_validly() {
    let outcomes: Vec<Outcome> = (0..10_000u64).into_par_iter().map(|run| random_run(0xc0, run)).collect();
    let mut sizes = BTreeSet::new();
    for (i, o) in outcomes.iter().enumerate() {
        sizes.insert(o.n);
        assert!(!o.report.guarantees_void);
        let agreed = o.report.agreed();
        assert!(agreed.is_some(), "run {i}: no agreement {:?}", o.report.decisions);
        if let Some(v) = o.report.unanimous_input() {
            assert_eq!(agreed, Some(v), "run {i}: validity");
        }
        assert!(o.report.decision_phase as usize <= o.byzantine + 1, "run {i}: phase {}", o.report.decision_phase);
        assert!(VALUES.contains(&agreed.unwrap()) || agreed == Some(&[][..]));
    }
    assert_eq!(sizes.len(), 3);
}

#[test]
fn pure_core_survives_arbitrary_byzantine_messages() {
    (0..10_000u64).into_par_iter().for_each(|run| {
        let mut rng = seed::rng(0xc1, "pure-suite", run);
        let n = [4usize, 7, 10][run as usize % 3];
        let ps: Vec<PartyId> = (0..n as u32).map(PartyId::miner).collect();
        let f = rng.random_range(0..=tolerance(n));
        let mut bad: Vec<usize> = (0..n).collect();
        bad.shuffle(&mut rng);
        bad.truncate(f);
        let unanimous = rng.random_bool(0.5);
        let inputs: Vec<Option<Vec<u8>>> = (0..n)
            .map(|i| {
                (!bad.contains(&i)).then(|| {
                    if unanimous {
                        VALUES[0].to_vec()
                    } else {
                        VALUES.choose(&mut rng).unwrap().to_vec()
                    }
                })
            })
            .collect();
        let mut adv_rng = seed::rng(0xc1, "pure-adversary", run);
        let mut adversary = |_, _, _, _| match adv_rng.random_range(0..5) {
            0 => Msg::NoProposal,
            1 => Msg::Value(Vec::new()),
            k => Msg::Value(VALUES[k - 2].to_vec()),
        };
        let out = run_pure(&ps, &inputs, &mut adversary);
        let decided: BTreeSet<&Vec<u8>> = out.decisions.values().collect();
        assert_eq!(decided.len(), 1, "run {run}: {:?}", out.decisions);
        if unanimous {
            assert_eq!(decided.into_iter().next().unwrap(), &VALUES[0].to_vec());
        }
        assert!(out.decision_phase() as usize <= f + 1);
    });
}

#[test]
fn one_third_byzantine_voids_guarantees() {
    let ps: Vec<PartyId> = (0..3).map(PartyId::miner).collect();
    let domain = ExplicitDomain::new([b"v".to_vec()]);
    let mut instance = ConsensusInstance::new(0, ps.clone(), &domain).unwrap();
    for &p in &ps {
        instance.propose(p, b"v".to_vec()).unwrap();
    }
    let faults = FaultModel { byzantine: [(ps[0], ByzantineBehavior::Equivocate)].into() };
    let mut sim = Sim::new(NetworkConfig::default(), &ps).unwrap();
    assert!(run_consensus(&mut sim, &instance, &faults, 1).unwrap().guarantees_void);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_same_transcript(run in 0u64..1_000_000) {
        let a = random_run(0xc0, run);
        let b = random_run(0xc0, run);
        prop_assert_eq!(a.report, b.report);
    }
}
