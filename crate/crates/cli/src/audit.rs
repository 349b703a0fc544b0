//! Batch lemma and norm-axiom audits over one body.

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use illume_core::certify::{enumerate_vertices, scale_to_boundary};
use illume_core::directions::{admissible_directions, norm_implication_check};
use illume_core::rational::to_f64;
use illume_core::subdiff::{audit_normal, audit_normal_f64, extreme_subgradients, lp_gradient, NormalAudit};
use illume_core::{Error, SymBody, Q};

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub check: &'static str,
    pub samples: u64,
    pub violations: u64,
}

fn random_ints(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    // small ranges make ties and zeros common
    let r = if rng.gen_bool(0.5) { 2 } else { 30 };
    loop {
        let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-r..=r)).collect();
        if v.iter().any(|&c| c != 0) {
            return v;
        }
    }
}

fn to_q(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&c| Q::from_integer(c.into())).collect()
}

pub fn run(body: &SymBody, samples: u64, seed: u64, vertex_cap: usize) -> anyhow::Result<Vec<AuditRow>> {
    let n = body.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normals = NormalAudit::default();
    let mut pairs = 0u64;
    while pairs < samples {
        let x = scale_to_boundary(body, &random_ints(&mut rng, n))?;
        if body.is_piecewise_linear() {
            for w in extreme_subgradients(body, &x, 256)?.witnesses {
                normals.add(audit_normal(&x, &w.v));
                pairs += 1;
            }
        } else {
            let xf: Vec<f64> = x.iter().map(to_f64).collect();
            normals.add(audit_normal_f64(&xf, &lp_gradient(body, &xf)?, 1e-9));
            pairs += 1;
        }
    }

    let mut implication = (0u64, 0u64);
    let points: Vec<Vec<Q>> = if body.is_piecewise_linear() && n <= vertex_cap {
        enumerate_vertices(body, vertex_cap)?
    } else {
        (0..samples.min(2000)).map(|_| scale_to_boundary(body, &random_ints(&mut rng, n))).collect::<Result<_, _>>()?
    };
    for x in &points {
        for y in admissible_directions(x) {
            implication.0 += 1;
            match norm_implication_check(body, x, &y) {
                Ok(_) => {}
                Err(Error::LemmaViolation(_)) => implication.1 += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }

    let mut axioms = (0u64, 0u64);
    for _ in 0..samples.div_ceil(10) {
        let x = to_q(&random_ints(&mut rng, n));
        let y = to_q(&random_ints(&mut rng, n));
        let t = Q::new(rng.gen_range(-7..=7).into(), rng.gen_range(1..=5).into());
        let mut flipped = x.clone();
        flipped.rotate_left(rng.gen_range(0..n));
        let i = rng.gen_range(0..n);
        flipped[i] = -flipped[i].clone();
        let tx: Vec<Q> = x.iter().map(|v| v * &t).collect();
        let sum: Vec<Q> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        axioms.0 += 1;
        let ok = if body.is_piecewise_linear() {
            let nx = body.norm_exact(&x)?;
            !nx.is_zero()
                && body.norm_exact(&tx)? == t.abs() * &nx
                && body.norm_exact(&sum)? <= &nx + body.norm_exact(&y)?
                && body.norm_exact(&flipped)? == nx
        } else {
            let f = |v: &[Q]| body.norm_f64(&v.iter().map(to_f64).collect::<Vec<_>>());
            let (nx, ny) = (f(&x)?, f(&y)?);
            let tol = 1e-9 * (nx + ny);
            nx > 0.0
                && (f(&tx)? - to_f64(&t).abs() * nx).abs() <= tol * (1.0 + to_f64(&t).abs())
                && f(&sum)? <= nx + ny + tol
                && (f(&flipped)? - nx).abs() <= tol
        };
        axioms.1 += !ok as u64;
    }

    Ok(vec![
        AuditRow { check: "sign", samples: pairs, violations: normals.sign_violations as u64 },
        AuditRow { check: "ordering", samples: pairs, violations: normals.order_violations as u64 },
        AuditRow { check: "norm_implication", samples: implication.0, violations: implication.1 },
        AuditRow { check: "norm_axioms", samples: axioms.0, violations: axioms.1 },
    ])
}
