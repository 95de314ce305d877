use interlace::cli::parse_grid;
use interlace::cli::verify::random_radial_field;
use interlace::lattice::{LatticeBox, LatticePoint};
use interlace::sim::{read_soups, write_soups, LevelMap, SoupConfig, SoupSampler};
use interlace::solver::{distribution_mismatch, rearrange_radial, Domain};
use interlace::theta::{isotonic, BaseProfile, Hermite, SmoothedTheta};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isotonic_is_monotone_and_mean_preserving(
        pairs in prop::collection::vec((-5.0f64..5.0, 0.1f64..3.0), 1..40)
    ) {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let fit = isotonic(&v, &w);
        prop_assert!(fit.windows(2).all(|p| p[0] <= p[1] + 1e-12));
        let mean = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((mean(&fit) - mean(&v)).abs() < 1e-9);
    }

    #[test]
    fn monotone_hermite_stays_monotone(
        steps in prop::collection::vec((0.05f64..1.0, 0.0f64..2.0), 2..12),
        t in 0.0f64..1.0,
    ) {
        let mut x = vec![0.0];
        let mut y = vec![0.0];
        for (dx, dy) in steps {
            x.push(x.last().unwrap() + dx);
            y.push(y.last().unwrap() + dy);
        }
        let h = Hermite::monotone(x.clone(), y.clone()).unwrap();
        let a = h.start() + t * (h.end() - h.start());
        let b = (a + 0.01).min(h.end());
        prop_assert!(h.value(a) <= h.value(b) + 1e-12);
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!((h.value(*xi) - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothed_profile_invariants(slope in 0.2f64..1.0, u0 in 0.2f64..0.5, t in 0.1f64..0.9) {
        let u1 = u0 + t * (1.0 / slope - u0);
        let p = SmoothedTheta::build(BaseProfile::linear(slope).unwrap(), u0, u1, u1 + 1.5).unwrap();
        prop_assert!(p.checks.all_pass(), "{:?}", p.checks.failures());
        prop_assert!((p.theta(u1) - 1.0).abs() < 1e-12);
        let back = SmoothedTheta::from_json(&p.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.theta(0.7 * u1).to_bits(), p.theta(0.7 * u1).to_bits());
    }

    #[test]
    fn grids_are_inclusive_and_ascending(a in 0u32..50, n in 0u32..40, step in 1u32..20) {
        let (a, step) = (a as f64 / 10.0, step as f64 / 100.0);
        let b = a + n as f64 * step;
        let g = parse_grid(&format!("{a}:{b}:{step}")).unwrap();
        prop_assert_eq!(g.len(), n as usize + 1);
        prop_assert!((g[0] - a).abs() < 1e-12 && (g[n as usize] - b).abs() < 1e-9);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn box_index_round_trip(r in 0u32..6, coords in prop::collection::vec(-6i64..=6, 3)) {
        let bx = LatticeBox::centered(3, r).unwrap();
        let x = LatticePoint::new(coords).unwrap();
        match bx.index_of(&x) {
            Some(i) => {
                prop_assert!(bx.contains(&x));
                prop_assert_eq!(bx.point_at(i), x);
            }
            None => prop_assert!(!bx.contains(&x)),
        }
    }

    #[test]
    fn rearrangement_preserves_distribution(index in 0u64..1000) {
        let dom = Domain::unit_ball();
        let f = random_radial_field(&dom, 11, index);
        let g = rearrange_radial(&f, &dom).unwrap();
        prop_assert!(distribution_mismatch(&f, &g, &dom).unwrap() <= dom.spacing());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn occupancy_grows_with_level(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let sampler = SoupSampler::new(SoupConfig::new(3, 4, 1.0), seed).unwrap();
        let map = LevelMap::sample(&sampler, SoupSampler::stream(seed, 0)).unwrap();
        prop_assert!(map.occupancy(lo).is_subset_of(&map.occupancy(hi)));
        prop_assert!(map.walks_at(lo) <= map.walks_at(hi));
    }

    #[test]
    fn soup_dump_round_trips(seed in 0u64..1000) {
        let sampler = SoupSampler::new(SoupConfig::new(3, 3, 0.5), seed).unwrap();
        let soups: Vec<_> = (0..3).map(|i| sampler.sample(SoupSampler::stream(seed, i)).unwrap()).collect();
        let mut buf = Vec::new();
        write_soups(&mut buf, &soups).unwrap();
        let back = read_soups(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), soups.len());
        for (a, b) in back.iter().zip(&soups) {
            prop_assert_eq!(&a.trajectories, &b.trajectories);
            prop_assert_eq!(a.window.radius(), b.window.radius());
            prop_assert_eq!(a.u_max.to_bits(), b.u_max.to_bits());
        }
    }
}
