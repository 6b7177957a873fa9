//! Property checks across modules on generated instances.

use std::time::Duration;

use proptest::prelude::*;

use ontoq_core::chase::{certain_answers_oracle, entails};
use ontoq_core::harness::{gen_instance, gen_output_instance, verify, Instance, Profile};
use ontoq_core::normalizer::{to_normal_form, uniformize};
use ontoq_core::{parse_facts, parse_query, parse_tgds, serialize_database, serialize_query, serialize_tgds, RewriteParams, Variant};

fn instance(seed: u64, profile: u8, output: bool) -> Instance {
    let p = match profile {
        0 => Profile::linear(),
        1 => Profile::general(),
        _ => Profile::multi_head(),
    };
    if output {
        gen_output_instance(seed, &p)
    } else {
        gen_instance(seed, &p)
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn text_formats_round_trip(seed in 0u64..10_000, profile in 0u8..3, output: bool) {
        let i = instance(seed, profile, output);
        prop_assert_eq!(parse_tgds(&serialize_tgds(&i.sigma)).unwrap(), i.sigma.clone());
        prop_assert_eq!(parse_query(&serialize_query(&i.query)).unwrap(), i.query.clone());
        prop_assert_eq!(parse_facts(&serialize_database(&i.db)).unwrap(), i.db.clone());
    }

    #[test]
    fn witnesses_replay_and_fit_the_budget(seed in 0u64..10_000, profile in 0u8..3) {
        let i = instance(seed, profile, false);
        if let Some(w) = entails(&i.db, &i.sigma, &i.query, 6).witness() {
            prop_assert!(w.sequence.steps.len() <= 6);
            prop_assert_eq!(w.sequence.replay(&i.db, &i.sigma), Ok(()));
        }
    }

    #[test]
    fn normalization_never_adds_answers(seed in 0u64..10_000, output: bool) {
        let i = instance(seed, 2, output);
        let (normal, report) = to_normal_form(&i.sigma);
        prop_assert!(normal.iter().all(|t| t.is_normal()));
        prop_assert!(report.size_after >= report.size_before || i.sigma.iter().all(|t| t.is_normal()));
        let before = certain_answers_oracle(&i.db, &i.sigma, &i.query, 4);
        let after = certain_answers_oracle(&i.db, &normal, &i.query, 4);
        prop_assert!(after.is_subset(&before), "{:?} vs {:?}", after, before);
    }

    #[test]
    fn uniformized_problems_are_rectangular(seed in 0u64..10_000, profile in 0u8..3) {
        let i = instance(seed, profile, false);
        let (normal, _) = to_normal_form(&i.sigma);
        let u = uniformize(&normal, &i.query).unwrap();
        for t in &u.sigma_u {
            prop_assert_eq!(t.body().len(), u.k);
            prop_assert!(t.body().iter().chain(t.head()).all(|a| a.arity() == u.a));
        }
        // Relations the problem never mentions are left alone.
        let padded = u.pad_database(&i.db);
        prop_assert!(padded.facts().iter().filter(|f| u.relation(&f.predicate).is_some()).all(|f| f.arity() == u.a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    /// At any N, a positive program answer is backed by a chase witness.
    #[test]
    fn rewritings_are_sound_at_any_length(seed in 0u64..10_000, extra in 0u32..3) {
        let i = instance(seed, 0, false);
        let (normal, _) = to_normal_form(&i.sigma);
        let u = uniformize(&normal, &i.query).unwrap();
        let n = RewriteParams::min_steps(u.ell(), u.query_u.max_atoms()) + extra;
        let r = verify(&i, n, &Variant::ALL, Some(Duration::from_secs(20)));
        prop_assert_eq!(r.soundness_breaches(), 0, "{}", r.to_json_line());
    }
}
