use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use phdae_core::analyze::{index, wong_sequences, Pencil};
use phdae_core::condense::{dirac_condense, lagrange_condense};
use phdae_core::convert::{
    adjoint_factors, dh_to_monotone, pullback, to_x_representation, with_multipliers, PairedSubspace,
};
use phdae_core::numkernel::{hstack, rank_tol, spectral_norm, vstack};
use phdae_core::oracle::{
    predicted_dirac, predicted_lagrange, random_dh, random_dirac, random_extended_regular, random_invertible,
    random_lagrange, random_monotone, random_structured, random_weierstrass, shuffle_index, RandomKind,
};
use phdae_core::structures::{DiracPair, ExtendedHDAE, Frame, LagrangePair};
use phdae_core::{Mat, TolerancePolicy};

fn tol() -> TolerancePolicy {
    TolerancePolicy::with_rank_tol(1e-9)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lagrange_blocks_match_prediction(seed in any::<u64>(), n in 0usize..12) {
        let lp = random_lagrange(&mut rng(seed), n);
        let c = lagrange_condense(&lp, &tol()).unwrap();
        prop_assert_eq!(c.blocks, predicted_lagrange(&lp, &tol()).unwrap());
        prop_assert_eq!(c.blocks.m1 + c.blocks.m2 + c.blocks.m3 + c.blocks.m4, n);
    }

    #[test]
    fn dirac_blocks_match_prediction(seed in any::<u64>(), n in 0usize..12) {
        let dp = random_dirac(&mut rng(seed), n);
        let c = dirac_condense(&dp, &tol()).unwrap();
        prop_assert_eq!(c.blocks, predicted_dirac(&dp, &tol()).unwrap());
    }

    #[test]
    fn generated_instances_validate(seed in any::<u64>(), n in 0usize..10, k in 0usize..6) {
        let kind = [
            RandomKind::Lagrange,
            RandomKind::Dirac,
            RandomKind::Monotone,
            RandomKind::MonotoneSystem,
            RandomKind::Dh,
            RandomKind::Extended,
        ][k];
        let inst = random_structured(kind, n, seed);
        prop_assert!(inst.validate(&tol()).unwrap().valid);
    }

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>(), n in 1usize..8) {
        let sys = random_extended_regular(&mut rng(seed), n);
        let twice = adjoint_factors(&adjoint_factors(&sys));
        prop_assert_eq!(twice, sys);
    }

    #[test]
    fn structured_index_law(seed in any::<u64>(), n in 1usize..10) {
        let sys = random_extended_regular(&mut rng(seed), n);
        let p = Pencil::try_from(&sys).unwrap();
        let nu = index(&p, &tol()).unwrap().index;
        prop_assert!(nu <= 2);
        if nu == 2 {
            prop_assert!(rank_tol(&sys.p, &tol()).unwrap() < n);
        }
    }

    #[test]
    fn index_is_equivalence_invariant(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let w = random_weierstrass(&mut r, n, 3);
        let (x, _) = random_invertible(&mut r, n);
        let (y, _) = random_invertible(&mut r, n);
        let moved = w.pencil.transform(&x, &y);
        let a = wong_sequences(&w.pencil, &tol()).unwrap();
        let b = wong_sequences(&moved, &tol()).unwrap();
        prop_assert_eq!(&a.v_dims, &b.v_dims);
        prop_assert_eq!(&a.w_dims, &b.w_dims);
        prop_assert_eq!(a.index(), shuffle_index(&moved, &tol()).unwrap());
    }

    #[test]
    fn dh_energy_never_grows(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let dh = random_dh(&mut r, n);
        let z = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
        let bound = 1e-12 * z.norm_squared() * spectral_norm(&dh.r) * spectral_norm(&dh.q).powi(2);
        prop_assert!(dh.energy_rate(&z) <= bound);
    }

    #[test]
    fn dh_bridge_is_monotone(seed in any::<u64>(), n in 1usize..8) {
        let dh = random_dh(&mut rng(seed), n);
        let m = dh_to_monotone(&dh, &tol()).unwrap();
        prop_assert!(m.validate(&tol()).unwrap().valid);
        let (e, a) = m.pencil();
        let (e0, a0) = dh.pencil();
        prop_assert!((e - e0).norm() <= 1e-12 * (1.0 + dh.e.norm()));
        prop_assert!((a - a0).norm() <= 1e-12 * (1.0 + dh.pencil().1.norm()));
    }

    #[test]
    fn pullback_dimension_formula(seed in any::<u64>(), nf in 0usize..7, ng in 0usize..7) {
        let mut r = rng(seed);
        let rank = r.random_range(0..=nf.min(ng));
        let a = gaussian(&mut r, ng, rank) * gaussian(&mut r, rank, nf);
        let m = PairedSubspace::from_monotone(&random_monotone(&mut r, ng)).unwrap();
        let pb = pullback(&a, &m, &tol()).unwrap();
        prop_assert_eq!(pb.dim(&tol()), nf);
        if nf > 0 {
            prop_assert!(pb.monotone_margin(&tol()).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn hamiltonian_frames_agree(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let (p, _) = random_invertible(&mut r, n);
        let g = gaussian(&mut r, n, n);
        // S = P^{-T} (G + G^T) keeps P^T S symmetric
        let s = p.transpose().try_inverse().unwrap() * (&g + g.transpose());
        let lp = LagrangePair::new(p.clone(), s.clone());
        let z = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
        let hz = lp.hamiltonian(&z, Frame::Z, &tol()).unwrap();
        let hx = lp.hamiltonian(&(&p * &z), Frame::X, &tol()).unwrap();
        let scale = 0.5 * (&p * &z).norm() * (&s * &z).norm();
        prop_assert!((hz - hx).abs() <= 1e-11 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn x_representation_rows_follow_from_pencil(seed in any::<u64>(), n in 1usize..8) {
        // with x = P z the rows [M K P | M L S] of the x-representation lie in
        // the row space of [K P | L S]
        let sys = random_extended_regular(&mut rng(seed), n);
        let x = to_x_representation(&sys, &tol()).unwrap();
        let (kp, ls) = sys.pencil();
        let base = hstack(&[&kp, &ls]);
        let rows = hstack(&[&(&x.ex * &sys.p), &(&x.ax * &sys.p)]);
        let r0 = rank_tol(&base, &tol()).unwrap();
        prop_assert_eq!(rank_tol(&vstack(&[&base, &rows]), &tol()).unwrap(), r0);
    }

    #[test]
    fn multipliers_keep_behaviour(seed in any::<u64>(), n in 1usize..7) {
        let sys = random_extended_regular(&mut rng(seed), n);
        let x = to_x_representation(&sys, &tol()).unwrap();
        prop_assume!(x.ex.nrows() == n);
        let Ok(ms) = with_multipliers(&sys, &tol()) else { return Ok(()) };
        let elim = ms.eliminate_multipliers(&tol()).unwrap();
        prop_assert!(elim.same_behaviour(&x, &tol()).unwrap());
    }

    #[test]
    fn structures_round_trip_json(seed in any::<u64>(), n in 0usize..6) {
        let mut r = rng(seed);
        let d = random_dirac(&mut r, n);
        let l = random_lagrange(&mut r, n);
        let sys = ExtendedHDAE::new(d.k.clone(), d.l.clone(), l.p.clone(), l.s.clone());
        let back: ExtendedHDAE = serde_json::from_str(&serde_json::to_string(&sys).unwrap()).unwrap();
        prop_assert_eq!(back, sys);
        let back: DiracPair = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }
}
