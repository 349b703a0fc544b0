//! Geometric soundness checks on the built-in bodies.

mod common;

use num::Signed;

use illume_core::certify::{boundary_sample, enumerate_vertices, illuminate_auto, AutoOptions};
use illume_core::rational::{max_abs, q};
use illume_core::subdiff::{block_decompose, PlPoint};
use illume_core::{gen_direction_set, DirectionLabel};

use common::suite;

#[test]
fn vertex_certificates_cover_dense_boundary_samples() {
    for n in 2..=4 {
        for (name, body) in suite(n) {
            let out = illuminate_auto(&body, 5, &AutoOptions::default()).unwrap();
            assert!(out.is_certified(), "{name} n={n}");
            let pts = boundary_sample(&body, 10_200, 77 + n as u64).unwrap();
            assert!(pts.len() >= 10_000);
            for x in &pts {
                let pt = PlPoint::new(&body, x).unwrap();
                assert!(
                    out.directions.vectors().iter().any(|y| pt.derivative(&body, y).is_negative()),
                    "{name} n={n}: {x:?} not illuminated"
                );
            }
        }
    }
}

#[test]
fn wide_top_block_is_lit_from_t() {
    let mut checked = 0;
    for n in 2..=7 {
        let t = gen_direction_set(DirectionLabel::T, n).unwrap();
        for (name, body) in suite(n) {
            if body.distance_to_cube().exact().unwrap() < &q(2) {
                continue;
            }
            for x in enumerate_vertices(&body, 8).unwrap() {
                if block_decompose(&x).top().len() <= n.div_ceil(2) {
                    continue;
                }
                checked += 1;
                assert!(body.norm_exact(&x).unwrap() > max_abs(&x), "{name} n={n}");
                let pt = PlPoint::new(&body, &x).unwrap();
                assert!(t.vectors().iter().any(|y| pt.derivative(&body, y).is_negative()), "{name} n={n}: {x:?}");
            }
        }
    }
    assert!(checked > 0);
}
