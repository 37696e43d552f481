use percoplane_core::duality::{correspondence_check, exhaustive_check, DualityContext};
use percoplane_core::matching::{FacePartition, PartitionStrategy};
use percoplane_core::tilings::{generate, Family, TilingSpec};

fn context(spec: TilingSpec, strategy: PartitionStrategy) -> DualityContext {
    let m = generate(&spec).unwrap();
    let p = FacePartition::with_strategy(&m, &strategy).unwrap();
    DualityContext::new(&m, &p).unwrap()
}

#[test]
fn exhaustive_small_tori() {
    for (lx, ly) in [(3, 3), (3, 4)] {
        for strategy in [PartitionStrategy::AllF1, PartitionStrategy::AllF2, PartitionStrategy::Checkerboard] {
            let ctx = context(TilingSpec::torus(Family::Square, lx).with_size2(ly), strategy.clone());
            let r = exhaustive_check(&ctx, 12).unwrap();
            assert_eq!(r.configurations, 1 << (lx * ly));
            assert_eq!(r.total_violations(), 0, "{lx}x{ly} {strategy}: {:?} {:?}", r.violations_by_kind, r.examples);
        }
    }
}

#[test]
fn free_patch_single_configurations() {
    let ctx = context(TilingSpec::free(Family::Square, 5), PartitionStrategy::Checkerboard);
    for bits in [0u32, 0x1ff_ffff, 0x0aa_aaaa, 0x155_5555, 0x0f0_f0f0] {
        let omega: Vec<bool> = (0..25).map(|v| (bits >> v) & 1 == 1).collect();
        let r = correspondence_check(&ctx, &omega).unwrap();
        assert!(r.is_clean(), "{bits:x}: {:?}", r.violations);
    }
}
