use num_complex::Complex64;
use proptest::prelude::*;

use nscb::diagnostics::constant_ladder;
use nscb::io::RawSnapshot;
use nscb::littlewood_paley::phi;
use nscb::norms::{besov_norm, lp_norm, ray_functional, weighted_log_functional, BesovParams};
use nscb::random::{random_field, random_solenoidal, rng};
use nscb::spectral::{apply_multiplier, curl, divergence, heat_semigroup, leray_project, riesz_potential, Multiplier};
use nscb::tower::Tower;
use nscb::{DyadicPartition, Field, Grid};

fn grid16() -> Grid {
    Grid::standard(16).unwrap()
}

fn rel(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE)
}

fn smooth(grid: &Grid, ncomp: usize, seed: u64) -> Field {
    random_field(grid, ncomp, |k| if k > 0.0 { (-0.1 * k * k).exp() } else { 0.0 }, &mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(seed in any::<u64>(), ncomp in 1usize..4) {
        let grid = grid16();
        let f = random_field(&grid, ncomp, |_| 1.0, &mut rng(seed));
        let back = Field::from_physical(&grid, &f.to_physical()).unwrap();
        prop_assert!(rel(&back, &f) <= 1e-13);
    }

    #[test]
    fn real_even_symbol_keeps_conjugate_symmetry(seed in any::<u64>(), a in -3.0f64..3.0, b in 0.0f64..2.0) {
        let grid = grid16();
        let f = random_field(&grid, 2, |_| 1.0, &mut rng(seed));
        let m = Multiplier::scalar(move |k: [f64; 3]| {
            Complex64::new(a * (k[0] * k[1]).cos() + b * k[2] * k[2], 0.0)
        });
        let g = apply_multiplier(&f, &m).unwrap();
        prop_assert!(g.hermitian_defect() <= 1e-13);
    }

    #[test]
    fn leray_idempotent_and_solenoidal(seed in any::<u64>()) {
        let f = random_field(&grid16(), 3, |_| 1.0, &mut rng(seed));
        let p = leray_project(&f).unwrap();
        let pp = leray_project(&p).unwrap();
        prop_assert!(pp.sub(&p).unwrap().l2_norm() <= 1e-13 * f.l2_norm());
        prop_assert!(divergence(&p).unwrap().l2_norm() <= 1e-13 * f.l2_norm());
    }

    #[test]
    fn heat_is_a_semigroup(seed in any::<u64>(), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let f = smooth(&grid16(), 3, seed);
        let two = heat_semigroup(&heat_semigroup(&f, s).unwrap(), t).unwrap();
        let one = heat_semigroup(&f, s + t).unwrap();
        prop_assert!(rel(&two, &one) <= 1e-13);
    }

    #[test]
    fn riesz_potentials_compose(seed in any::<u64>(), s1 in 0.05f64..1.45, s2 in 0.05f64..1.45) {
        let g = random_field(&grid16(), 1, |_| 1.0, &mut rng(seed));
        let two = riesz_potential(&riesz_potential(&g, s1).unwrap(), s2).unwrap();
        let one = riesz_potential(&g, s1 + s2).unwrap();
        prop_assert!(rel(&two, &one) <= 1e-13);
    }

    #[test]
    fn divergence_of_curl_vanishes(seed in any::<u64>()) {
        let f = random_field(&grid16(), 3, |_| 1.0, &mut rng(seed));
        let d = divergence(&curl(&f).unwrap()).unwrap();
        prop_assert!(d.l2_norm() <= 1e-13 * f.l2_norm() * 16.0);
    }

    #[test]
    fn blocks_reconstruct_and_contract(seed in any::<u64>()) {
        let grid = grid16();
        let part = DyadicPartition::new(&grid).unwrap();
        let f = random_field(&grid, 1, |_| 1.0, &mut rng(seed));
        let mut sum = Field::zeros(&grid, 1);
        for j in part.indices() {
            let b = part.block(&f, j).unwrap();
            prop_assert!(b.l2_norm() <= (1.0 + 1e-10) * f.l2_norm());
            sum.axpy(1.0, &b).unwrap();
        }
        prop_assert!(rel(&sum, &f) <= 1e-10);
    }

    #[test]
    fn blocks_commute_with_heat_and_leray(seed in any::<u64>(), t in 0.0f64..0.3) {
        let grid = grid16();
        let part = DyadicPartition::new(&grid).unwrap();
        let f = random_field(&grid, 3, |_| 1.0, &mut rng(seed));
        for j in part.indices() {
            let a = part.block(&heat_semigroup(&f, t).unwrap(), j).unwrap();
            let b = heat_semigroup(&part.block(&f, j).unwrap(), t).unwrap();
            prop_assert!(a.sub(&b).unwrap().l2_norm() <= 1e-13 * f.l2_norm());
            let a = part.block(&leray_project(&f).unwrap(), j).unwrap();
            let b = leray_project(&part.block(&f, j).unwrap()).unwrap();
            prop_assert!(a.sub(&b).unwrap().l2_norm() <= 1e-13 * f.l2_norm());
        }
    }

    #[test]
    fn profile_bounded(r in 0.0f64..4.0) {
        let v = phi(r);
        prop_assert!((0.0..=1.0).contains(&v));
        if !(1.0..=8.0 / 3.0).contains(&r) {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn besov_sup_below_sum(seed in any::<u64>(), p in 3.5f64..8.0) {
        let grid = grid16();
        let part = DyadicPartition::new(&grid).unwrap();
        let f = smooth(&grid, 3, seed);
        let sup = besov_norm(&f, BesovParams::critical(p, f64::INFINITY).unwrap(), &part).unwrap();
        let sum = besov_norm(&f, BesovParams::critical(p, 1.0).unwrap(), &part).unwrap();
        prop_assert!(sup <= sum * (1.0 + 1e-14));
    }

    #[test]
    fn weighted_log_decreasing_in_a(seed in any::<u64>(), a1 in 0.0f64..1.0, a2 in 0.0f64..1.0) {
        let u = random_solenoidal(&grid16(), |k| (-0.2 * k * k).exp(), &mut rng(seed)).unwrap();
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let v_lo = weighted_log_functional(&u, 4.0, lo).unwrap();
        let v_hi = weighted_log_functional(&u, 4.0, hi).unwrap();
        prop_assert!(v_hi <= v_lo * (1.0 + 1e-14));
    }

    #[test]
    fn ladder_invariants(m in 2.0f64..20.0, c_p in 1.0f64..3.0, d_p in 1.5f64..20.0) {
        let ladder = constant_ladder(m, c_p, d_p).unwrap();
        prop_assert!(ladder.check_invariants());
        for i in 1..7 {
            prop_assert!(ladder.level(i - 1).pow(c_p) <= ladder.level(i));
        }
    }

    #[test]
    fn snapshot_round_trip_is_bitwise(seed in any::<u64>(), time in -1e3f64..1e3) {
        let grid = grid16();
        let f = random_field(&grid, 3, |_| 1.0, &mut rng(seed));
        let raw = RawSnapshot::from_field(&f, time);
        let mut bytes = Vec::new();
        raw.write(&mut bytes).unwrap();
        let back = RawSnapshot::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.time.to_bits(), time.to_bits());
        prop_assert_eq!(back.samples.len(), raw.samples.len());
        for (a, b) in back.samples.iter().flatten().zip(raw.samples.iter().flatten()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn tower_orders_like_reals(a in 0.0f64..700.0, b in 0.0f64..700.0) {
        let (ta, tb) = (Tower::new(a), Tower::new(b));
        prop_assert_eq!(ta < tb, a < b);
        prop_assert_eq!(ta.exp() < tb.exp(), a < b);
    }
}

#[test]
fn homogeneity_at_lambda_three() {
    let grid = grid16();
    let u = random_solenoidal(&grid, |k| (-0.2 * k * k).exp(), &mut rng(3)).unwrap();
    let v = u.scaled(3.0);
    let p = 4.0;
    let a0 = weighted_log_functional(&u, p, 0.0).unwrap();
    let a1 = weighted_log_functional(&v, p, 0.0).unwrap();
    assert!((a1 / (3f64.powf(p) * a0) - 1.0).abs() <= 1e-10);
    let r0 = ray_functional(&u, p, 26).unwrap();
    let r1 = ray_functional(&v, p, 26).unwrap();
    assert!((r1 / (3f64.powf(p) * r0) - 1.0).abs() <= 1e-10);
    let l0 = lp_norm(&u, p).unwrap();
    let l1 = lp_norm(&v, p).unwrap();
    assert!((l1 / (3.0 * l0) - 1.0).abs() <= 1e-10);
}
