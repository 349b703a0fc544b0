#![allow(dead_code)]

use illume_core::rational::{q, qr};
use illume_core::SymBody;

pub fn suite(n: usize) -> Vec<(&'static str, SymBody)> {
    vec![
        ("cube", SymBody::cube(n).unwrap()),
        ("ell1", SymBody::ell1(n).unwrap()),
        ("topk(2)", SymBody::topk(n, 2).unwrap()),
        ("topk(3)", SymBody::topk(n, 3.min(n)).unwrap()),
        ("cube_cap_l1(3/2)", SymBody::cube_cap_l1(n, qr(3, 2)).unwrap()),
        ("cube_cap_l1(2)", SymBody::cube_cap_l1(n, q(2)).unwrap()),
        ("cube_cap_l1(3)", SymBody::cube_cap_l1(n, q(3)).unwrap()),
    ]
}
