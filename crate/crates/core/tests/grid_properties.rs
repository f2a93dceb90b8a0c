mod common;

use benard_cda::grid::{
    apply_boundary_conditions, divergence, gradient, laplacian, laplacian_neumann, to_cell_centers, Field, GridSpec,
    Location, State,
};
use common::{dense_laplacian_neumann, dense_laplacian_reflect, grid16x8, max_diff, noise_field, to_vec};
use proptest::prelude::*;

fn zero_walls(mut v: Field, grid: &GridSpec) -> Field {
    v.row_mut(0).fill(0.0);
    v.row_mut(grid.ny).fill(0.0);
    v
}

#[test]
fn gradient_is_minus_adjoint_of_divergence() {
    let g = grid16x8();
    for seed in 1..6 {
        let p = noise_field(&g, Location::Center, seed);
        let u = noise_field(&g, Location::UFace, seed + 10);
        let v = zero_walls(noise_field(&g, Location::VFace, seed + 20), &g);
        let (gx, gy) = gradient(&p, &g);
        let lhs = gx.dot(&u) + gy.dot(&v);
        let rhs = -p.dot(&divergence(&u, &v, &g));
        let scale = gx.norm2() * u.norm2() + gy.norm2() * v.norm2();
        assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
    }
}

#[test]
fn divergence_of_gradient_is_the_poisson_laplacian() {
    let g = GridSpec::new(20, 10, 2.0, 1.0).unwrap();
    let p = noise_field(&g, Location::Center, 7);
    let (gx, gy) = gradient(&p, &g);
    let composed = divergence(&gx, &gy, &g);
    let direct = laplacian_neumann(&p, &g);
    assert!(max_diff(&composed, &direct) <= 1e-12 * direct.max_abs());
}

#[test]
fn laplacians_match_dense_matrices() {
    let g = grid16x8();
    let p = noise_field(&g, Location::Center, 3);
    let dense = dense_laplacian_neumann(&g) * to_vec(&p);
    let fast = laplacian_neumann(&p, &g).interior_vec();
    let scale = dense.amax();
    assert!(dense.iter().zip(&fast).all(|(a, b)| (a - b).abs() <= 1e-13 * scale));

    let q = noise_field(&g, Location::UFace, 4);
    let dense = dense_laplacian_reflect(&g) * to_vec(&q);
    let fast = laplacian(&q, &g).interior_vec();
    let scale = dense.amax();
    assert!(dense.iter().zip(&fast).all(|(a, b)| (a - b).abs() <= 1e-13 * scale));
}

#[test]
fn linear_v_profile_centers_at_midpoints() {
    let g = grid16x8();
    let u = Field::zeros(&g, Location::UFace);
    let v = Field::sample(&g, Location::VFace, |_, y| 0.3 + 2.0 * y);
    let (_, vc) = to_cell_centers(&u, &v, &g);
    let exact = Field::sample(&g, Location::Center, |_, y| 0.3 + 2.0 * y);
    assert!(max_diff(&vc, &exact) <= 1e-14);
}

fn state_from(g: &GridSpec, seed: u64) -> State {
    let mut s = State::zeros(g);
    s.u = noise_field(g, Location::UFace, seed);
    s.v = noise_field(g, Location::VFace, seed + 1);
    s.theta = noise_field(g, Location::Center, seed + 2);
    s.p = noise_field(g, Location::Center, seed + 3);
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boundary_fill_is_idempotent(seed in 1u64..1_000_000) {
        let g = grid16x8();
        let mut s = state_from(&g, seed);
        apply_boundary_conditions(&mut s, &g).unwrap();
        let once = s.clone();
        apply_boundary_conditions(&mut s, &g).unwrap();
        prop_assert_eq!(s, once);
    }

    #[test]
    fn operators_are_linear(seed in 1u64..1_000_000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = grid16x8();
        let combine = |f: &Field, h: &Field| {
            let mut out = f.clone();
            out.scale(a);
            out.axpy(b, h);
            out
        };
        let (p1, p2) = (noise_field(&g, Location::Center, seed), noise_field(&g, Location::Center, seed + 7));
        let (u1, u2) = (noise_field(&g, Location::UFace, seed + 1), noise_field(&g, Location::UFace, seed + 8));
        let (v1, v2) = (noise_field(&g, Location::VFace, seed + 2), noise_field(&g, Location::VFace, seed + 9));
        let tol = 1e-12 * (1.0 + a.abs() + b.abs()) * 100.0;

        let d = divergence(&combine(&u1, &u2), &combine(&v1, &v2), &g);
        let d_expected = combine(&divergence(&u1, &v1, &g), &divergence(&u2, &v2, &g));
        prop_assert!(max_diff(&d, &d_expected) <= tol * 16.0);

        let (gx, gy) = gradient(&combine(&p1, &p2), &g);
        let (g1x, g1y) = gradient(&p1, &g);
        let (g2x, g2y) = gradient(&p2, &g);
        prop_assert!(max_diff(&gx, &combine(&g1x, &g2x)) <= tol * 16.0);
        prop_assert!(max_diff(&gy, &combine(&g1y, &g2y)) <= tol * 16.0);

        let l = laplacian(&combine(&u1, &u2), &g);
        prop_assert!(max_diff(&l, &combine(&laplacian(&u1, &g), &laplacian(&u2, &g))) <= tol * 1024.0);

        let (uc, vc) = to_cell_centers(&combine(&u1, &u2), &combine(&v1, &v2), &g);
        let (uc1, vc1) = to_cell_centers(&u1, &v1, &g);
        let (uc2, vc2) = to_cell_centers(&u2, &v2, &g);
        prop_assert!(max_diff(&uc, &combine(&uc1, &uc2)) <= tol);
        prop_assert!(max_diff(&vc, &combine(&vc1, &vc2)) <= tol);
    }
}
