//! Property tests over the public API.

use proptest::prelude::*;
use she_core::bounds::{BoundPart, MomentBoundInputs};
use she_core::coefficient::{Coefficient, Evaluate, Role};
use she_core::lattice::{Lattice, LatticeField};
use she_core::montecarlo::{jackknife_mean, wilson_interval};
use she_core::rng::RandomStream;
use she_core::series::{h_series, SeriesParams};
use she_core::solver::{heat_semigroup_step, read_snapshot, write_snapshot};

fn inputs(constant: f64, t: f64, p: f64) -> MomentBoundInputs {
    MomentBoundInputs {
        l_b: 1.0,
        l_sigma: 0.5,
        b0_abs: 0.0,
        sigma0_abs: 0.0,
        tau: None,
        p,
        alpha: 0.4,
        upsilon_alpha: 1.2,
        u0_sup: 1.0,
        u0_lp: 1.0,
        j_plus: 1.0,
        t,
        dimension: 1,
        constant: Some(constant),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_then_unshift_is_identity(k0 in 1u32..7, k1 in 1u32..7, idx in 0usize..4096, l0 in -200isize..200, l1 in -200isize..200) {
        let lat = Lattice::new(&[8.0, 5.0], &[1 << k0, 1 << k1]).unwrap();
        let i = idx % lat.sites();
        let j = lat.shift(i, [l0, l1]);
        prop_assert!(j < lat.sites());
        prop_assert_eq!(lat.shift(j, [-l0, -l1]), i);
    }

    #[test]
    fn conjugate_is_an_involution(k0 in 1u32..8, k1 in 1u32..8, idx in 0usize..10_000) {
        let lat = Lattice::new(&[3.0, 7.0], &[1 << k0, 1 << k1]).unwrap();
        let i = idx % lat.sites();
        let c = lat.conjugate(i);
        prop_assert_eq!(lat.conjugate(c), i);
        let (a, b) = (lat.frequency(i), lat.frequency(c));
        // Nyquist modes are their own conjugate on even grids.
        for k in 0..2 {
            prop_assert!(a[k] == -b[k] || a[k] == b[k]);
        }
    }

    #[test]
    fn normals_have_prefix_property(seed: u64, path: u64, step in 0u64..1000, short in 1usize..64, extra in 0usize..64) {
        let s = RandomStream::new(seed, path);
        let mut a = vec![0.0; short];
        let mut b = vec![0.0; short + extra];
        s.normals(step, &mut a);
        s.normals(step, &mut b);
        prop_assert_eq!(&a[..], &b[..short]);
    }

    #[test]
    fn heat_step_conserves_mass_and_shrinks_sup(
        values in prop::collection::vec(-5.0f64..5.0, 64),
        dt in 1e-4f64..1.0,
    ) {
        let lat = Lattice::cube(1, 10.0, 64).unwrap();
        let u = LatticeField { lattice: lat, values };
        let v = heat_semigroup_step(&u, dt);
        let mass = |f: &LatticeField| f.values.iter().sum::<f64>();
        prop_assert!((mass(&u) - mass(&v)).abs() < 1e-9 * (1.0 + mass(&u).abs()) + 1e-10);
        prop_assert!(v.sup_norm() <= u.sup_norm() + 1e-9);
    }

    #[test]
    fn jackknife_is_shift_equivariant(values in prop::collection::vec(-100.0f64..100.0, 2..200), c in -1e3f64..1e3) {
        let (m, se) = jackknife_mean(&values);
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        let (m2, se2) = jackknife_mean(&shifted);
        prop_assert!((m2 - m - c).abs() < 1e-9 * (1.0 + c.abs() + m.abs()));
        prop_assert!((se2 - se).abs() < 1e-7 * (1.0 + se));
    }

    #[test]
    fn wilson_interval_brackets_the_fraction(n in 1usize..5000, frac in 0.0f64..=1.0) {
        let hits = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = wilson_interval(hits, n);
        let p = hits as f64 / n as f64;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }

    #[test]
    fn bound_is_monotone_in_constant_and_time(c in 0.01f64..10.0, t in 0.01f64..5.0) {
        for part in [BoundPart::B, BoundPart::C] {
            let p = if part == BoundPart::C { 8.0 } else { 2.0 };
            let base = inputs(c, t, p).evaluate(part).unwrap().ln_value;
            let bigger_c = inputs(c * 1.5, t, p).evaluate(part).unwrap().ln_value;
            let later = inputs(c, t * 1.5, p).evaluate(part).unwrap().ln_value;
            prop_assert!(bigger_c >= base);
            prop_assert!(later >= base);
        }
    }

    #[test]
    fn truncated_coefficient_is_bounded_by_level(level in 0.1f64..50.0, z in -1e6f64..1e6) {
        let g = Coefficient::parse("zsinz", Role::Drift).unwrap().truncate(level).unwrap();
        prop_assert!(g.eval(z).abs() <= level + 1e-12);
        if z.abs() <= level {
            prop_assert_eq!(g.eval(z), z * z.sin());
        }
    }

    #[test]
    fn series_is_increasing_in_time(a in 0.0f64..2.0, b in 0.0f64..2.0, t in 0.01f64..2.0) {
        let params = SeriesParams::new(a, b, 1.0, "white,dim=1".parse().unwrap()).unwrap();
        let h1 = h_series(&params, t, 1e-12).unwrap().value;
        let h2 = h_series(&params, 1.3 * t, 1e-12).unwrap().value;
        prop_assert!(h1 >= 1.0);
        prop_assert!(h2 >= h1);
    }

    #[test]
    fn snapshot_round_trips(values in prop::collection::vec(-1e6f64..1e6, 32), t in 0.0f64..10.0) {
        let lat = Lattice::new(&[4.0, 2.0], &[8, 4]).unwrap();
        let field = LatticeField { lattice: lat, values: values.clone() };
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &field, t).unwrap();
        let (d, n, t2, back) = read_snapshot(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(d, 2);
        prop_assert_eq!(n, [8, 4]);
        prop_assert_eq!(t2, t);
        prop_assert_eq!(back, values);
    }
}
