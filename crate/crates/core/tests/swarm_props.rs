use cpsol::benchmarks::{ChangeClock, DomainPolicy, DynamicProblem, StaticFunctionId, StaticLandscape};
use cpsol::grid::Topology;
use cpsol::metrics::{Monitored, SamplingMode};
use cpsol::random::RandomSource;
use cpsol::swarm::{LocalSearchTarget, SwarmParams, SwarmState};
use proptest::prelude::*;

fn frozen(function: usize, dim: usize) -> DynamicProblem<StaticLandscape> {
    let land = StaticLandscape::new(StaticFunctionId::ALL[function], dim, DomainPolicy::Reject).unwrap();
    DynamicProblem::new(land, ChangeClock::Never, RandomSource::new(0)).unwrap()
}

fn params() -> impl Strategy<Value = SwarmParams> {
    (any::<bool>(), 1usize..6, 1usize..25, 1usize..6, 0.05f64..1.5, 0usize..3).prop_map(
        |(moore, partitions, population, group_size_max, vmax_fraction, ls)| SwarmParams {
            topology: if moore { Topology::Moore } else { Topology::VonNeumann },
            partitions,
            population,
            group_size_max,
            vmax_fraction,
            local_search: [LocalSearchTarget::Cell, LocalSearchTarget::Group, LocalSearchTarget::Off][ls],
            ..SwarmParams::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn iterations_preserve_structure(params in params(), function in 0usize..4, dim in 1usize..5, seed in any::<u64>()) {
        let mut base = frozen(function, dim);
        let mut p = Monitored::new(&mut base, SamplingMode::PerIteration, None);
        let mut rng = RandomSource::new(seed);
        let mut s = SwarmState::initialize(params, &mut p, &mut rng).unwrap();
        let mut best = s.best().unwrap().fitness;
        for _ in 0..8 {
            let before = s.evaluations();
            s.iterate(&mut p, &mut rng).unwrap();
            prop_assert!(s.check_invariants().is_ok(), "{:?}", s.check_invariants());
            prop_assert_eq!(s.evaluations(), p.count());
            prop_assert!(s.evaluations() >= before);
            for particle in s.particles() {
                for (v, m) in particle.velocity.iter().zip(s.vmax()) {
                    prop_assert!(v.abs() <= *m);
                }
            }
            let now = s.best().unwrap().fitness;
            prop_assert!(now <= best, "best worsened from {} to {}", best, now);
            best = now;
        }
    }

    #[test]
    fn same_seed_same_trajectory(params in params(), dim in 1usize..4, seed in any::<u64>()) {
        let run = |params: SwarmParams| {
            let mut base = frozen(2, dim);
            let mut rng = RandomSource::new(seed);
            let mut s = SwarmState::initialize(params, &mut base, &mut rng).unwrap();
            for _ in 0..5 {
                s.iterate(&mut base, &mut rng).unwrap();
            }
            s.particles().iter().map(|p| (p.position.clone(), p.pbest_fitness.to_bits())).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(params.clone()), run(params));
    }
}
