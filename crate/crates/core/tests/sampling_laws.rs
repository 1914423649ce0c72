use std::sync::Arc;

use proptest::prelude::*;
use uscx_core::grid::hypo_hits;
use uscx_core::maxstable::{capacity_closed_form, capacity_empirical, ATOM_BUDGET};
use uscx_core::scenario::{gallery, is_usc_trajectory, Exception, Expr};
use uscx_core::{CompactProbe, Domain, MaxStableSampler, Rect, Scenario, SpectralModel};

fn storm_sampler() -> MaxStableSampler {
    MaxStableSampler::new(
        SpectralModel::Storm {
            radius: 0.2,
            height: 1.0,
        },
        Domain::interval(0.0, 1.0, 21).unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exception_at_base_value_keeps_usc(idx in 0usize..6, seed in 0u64..100_000, at in 0.0f64..1.0) {
        let entry = &gallery()[idx];
        let mut scenario: Scenario = (*entry.scenario).clone();
        let lo = scenario.domain.lo;
        let hi = scenario.domain.hi;
        let loc = lo + at * (hi - lo);
        let before = entry.realize(seed).unwrap();
        prop_assume!(!before.exception_locations().contains(&loc));
        let base_here = scenario.base.eval(loc, before.assignment());
        prop_assume!(before.raw_value(loc).to_f64() == base_here);
        scenario.exceptions.push(Exception {
            at: Expr::Const(loc),
            value: Expr::Const(base_here),
        });
        let after = uscx_core::scenario::realize(&Arc::new(scenario), seed).unwrap();
        prop_assert_eq!(is_usc_trajectory(&before).unwrap(), is_usc_trajectory(&after).unwrap());
        let pushed_before = before.with_transform(entry.transform.clone());
        let pushed_after = after.with_transform(entry.transform.clone());
        prop_assert_eq!(
            is_usc_trajectory(&pushed_before).unwrap(),
            is_usc_trajectory(&pushed_after).unwrap()
        );
    }

    #[test]
    fn raising_levels_never_adds_hits(seed in 0u64..1_000, level in 0.2f64..5.0, bump in 0.0f64..3.0) {
        let sampler = storm_sampler();
        let rect = Rect::interval(0.25, 0.5);
        let sim = sampler.simulate(seed).unwrap();
        prop_assert!(sim.atoms < ATOM_BUDGET);
        let low = hypo_hits(&sim.field, &CompactProbe::single(rect.clone(), level)).unwrap();
        let high = hypo_hits(&sim.field, &CompactProbe::single(rect, level + bump)).unwrap();
        prop_assert!(low || !high);
    }
}

#[test]
fn hit_rate_is_monotone_in_level_under_shared_seeds() {
    let sampler = storm_sampler();
    let mut last = 1.0;
    for level in [0.5, 1.0, 2.0, 4.0] {
        let probe = CompactProbe::single(Rect::interval(0.0, 0.5), level);
        let est = capacity_empirical(&sampler, &probe, 2_000, 11).unwrap();
        assert!(est.hit_rate <= last);
        last = est.hit_rate;
        let closed = 1.0 - capacity_closed_form(&sampler.model, &sampler.domain, &probe, 0, 0).unwrap();
        assert!((est.hit_rate - closed).abs() < 4.0 * (closed * (1.0 - closed) / 2_000.0).sqrt() + 1e-9);
    }
}
