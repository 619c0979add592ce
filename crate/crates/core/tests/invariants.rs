use proptest::prelude::*;
use roompass_core::bracketing::{assemble_bounds, BoundaryCondition, Scope};
use roompass_core::fd::{conforming_grid, fd_eigenvalues};
use roompass_core::skeleton_operator::{zero_modes, SkeletonFunction, SkeletonSpace};
use roompass_core::{min_m_for_lambda, DomainParams, RpDomain, Skeleton, TailPolicy};

fn params() -> impl Strategy<Value = DomainParams> {
    (0.2f64..0.8, 1.2f64..2.9, 0.05f64..0.95).prop_map(|(c, alpha, kf)| {
        let p = DomainParams::new(c, alpha, 1e-3, 2).unwrap();
        DomainParams::new(c, alpha, kf * p.k_bound().min(1.0), 2).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn brackets_are_ordered_across_conditions(p in params(), m in 1usize..5, l in 10.0f64..5e4) {
        let n = assemble_bounds(&p, BoundaryCondition::Neumann, m, l, Scope::Omega2M).unwrap();
        let d = assemble_bounds(&p, BoundaryCondition::Dirichlet, m, l, Scope::Omega2M).unwrap();
        prop_assert!(n.lower_count <= n.upper_count);
        prop_assert!(d.lower_count <= d.upper_count);
        // N_D(Omega_2M) <= N_N(Omega_2M)
        prop_assert!(d.lower_count <= n.upper_count);
        prop_assert_eq!(n.weyl, d.weyl);
    }

    #[test]
    fn counts_grow_with_lambda(p in params(), m in 1usize..4, l in 10.0f64..1e4, f in 1.0f64..3.0) {
        for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
            let a = assemble_bounds(&p, bc, m, l, Scope::Omega2M).unwrap();
            let b = assemble_bounds(&p, bc, m, l * f, Scope::Omega2M).unwrap();
            prop_assert!(a.lower_count <= b.lower_count && a.upper_count <= b.upper_count);
        }
    }

    #[test]
    fn depth_is_monotone_and_controls_the_tail(p in params(), l in 1.0f64..1e8, f in 1.0f64..100.0) {
        let policy = TailPolicy::default();
        let a = min_m_for_lambda(&p, l, policy).unwrap();
        let b = min_m_for_lambda(&p, l * f, policy).unwrap();
        prop_assert!(a.m <= b.m);
        prop_assert!(b.tail_area <= a.tail_area);
    }

    #[test]
    fn domain_json_round_trips(c in 0.3f64..0.7, pieces in 1usize..6) {
        let d = RpDomain::build_geometric(c, 2.0, 0.5 / c.powi(-1).max(1.0), 2 * pieces).unwrap();
        let back = RpDomain::from_json(&d.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn skeleton_locates_every_interior_point(u in 0.001f64..0.999, v in -0.999f64..0.999) {
        let d = RpDomain::build_geometric(0.5, 2.0, 0.25, 6).unwrap();
        let sk = Skeleton::from_domain(&d).unwrap();
        let x = u * d.length();
        let piece = d.pieces.iter().find(|p| p.x_lo <= x && x < p.x_hi).unwrap();
        let y = v * piece.half_height;
        prop_assume!(d.contains(x, y));
        let loc = sk.locate(x, y).unwrap();
        let e = &sk.edges[loc.edge];
        prop_assert!(loc.sigma >= -1e-12 && loc.sigma <= e.length + 1e-12);
        prop_assert!(loc.s.abs() <= e.fiber_halflength(loc.sigma) + 1e-12);
        let back = e.map(loc.sigma, loc.s);
        prop_assert!((back[0] - x).abs() < 1e-10 && (back[1] - y).abs() < 1e-10);
    }
}

#[test]
fn pullback_of_a_constant_is_constant_on_the_domain() {
    let d = RpDomain::build_geometric(0.5, 2.0, 0.25, 4).unwrap();
    let sp = SkeletonSpace::from_domain(&d, 6).unwrap();
    let one = SkeletonFunction::constant(&sp.skeleton, sp.q, 1.0);
    for (x, y) in [(0.1, 0.2), (0.26, 0.0), (0.6, 0.0), (0.8, -0.01)] {
        assert_eq!(sp.apply_t0(&one, x, y).unwrap(), 1.0);
    }
    // the skeleton L2 norm of 1 is the area of Omega_4
    let area = d.area_upto(4).unwrap();
    assert!((sp.l2_inner(&one, &one).unwrap() - area).abs() < 1e-12);
}

#[test]
fn zero_modes_are_normalized_on_singular_edges() {
    let d = RpDomain::build_geometric(0.5, 2.0, 0.25, 8).unwrap();
    let sk = Skeleton::from_domain(&d).unwrap();
    let modes = zero_modes(&d, 6).unwrap();
    for m in &modes {
        assert!(sk.edges[m.edge].singular);
        assert!((m.amplitude.powi(2) * m.area - 1.0).abs() < 1e-15);
    }
}

#[test]
fn fd_neumann_kernel_is_one_dimensional() {
    let d = RpDomain::build_geometric(0.5, 2.0, 0.25, 4).unwrap();
    let g = conforming_grid(&d, 2, 32, 0).unwrap();
    assert_eq!(g.components(), 1);
    let s = fd_eigenvalues(&g, BoundaryCondition::Neumann, 3).unwrap();
    assert!(s.eigenvalues[0].abs() < 1e-10);
    assert!(s.eigenvalues[1] > 1e-3);
    let dd = fd_eigenvalues(&g, BoundaryCondition::Dirichlet, 3).unwrap();
    assert!(dd.eigenvalues[0] > s.eigenvalues[1]);
}
