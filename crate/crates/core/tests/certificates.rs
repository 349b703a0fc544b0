//! Certificate serialization, verification and reproducibility.

use illume_core::certify::{
    certify_directions, illuminate_auto, verify_certificate_json, AutoOptions, CertificateFile, Mode, Status,
};
use illume_core::randomized::{build_rk, RandomSetRealization};
use illume_core::rational::{q, qr};
use illume_core::{gen_direction_set, DirectionLabel, Error, SymBody};

#[test]
fn round_trip_and_verify() {
    let body = SymBody::cube_cap_l1(3, q(2)).unwrap();
    let t1 = gen_direction_set(DirectionLabel::T1, 3).unwrap();
    let cert = certify_directions(&body, &t1, None).unwrap();
    let text = cert.to_json();
    let again = verify_certificate_json(&text).unwrap();
    assert_eq!(again, cert);
    assert_eq!(again.to_json(), text);
}

#[test]
fn uncovered_status_survives_round_trip() {
    let body = SymBody::ell1(3).unwrap();
    let t2 = gen_direction_set(DirectionLabel::T2, 3).unwrap();
    let cert = certify_directions(&body, &t2, None).unwrap();
    let file = CertificateFile::from_json(&cert.to_json()).unwrap();
    assert_eq!(file.status, Status::Uncovered);
    assert_eq!(file.uncovered.len(), 4);
    assert!(file.verify().is_ok());
}

#[test]
fn tampering_is_detected() {
    let body = SymBody::topk(3, 2).unwrap();
    let out = illuminate_auto(&body, 1, &AutoOptions::default()).unwrap();
    let text = out.certificate.to_json();

    let mut file = CertificateFile::from_json(&text).unwrap();
    file.points[0].derivative = "-1000".into();
    assert!(matches!(file.verify(), Err(Error::Certificate(_))));

    let mut file = CertificateFile::from_json(&text).unwrap();
    file.directions.pop();
    assert!(file.verify().is_err());

    let mut file = CertificateFile::from_json(&text).unwrap();
    file.body.family = "ell1".into();
    file.body.weights = None;
    assert!(matches!(file.verify(), Err(Error::Certificate(_))));
}

#[test]
fn auto_is_deterministic_per_seed() {
    let body = SymBody::cube_cap_l1(5, qr(3, 2)).unwrap();
    for mode in [Mode::Faithful, Mode::Adaptive] {
        let opts = AutoOptions { mode, ..AutoOptions::default() };
        let a = illuminate_auto(&body, 99, &opts).unwrap();
        let b = illuminate_auto(&body, 99, &opts).unwrap();
        assert_eq!(a.certificate.to_json(), b.certificate.to_json());
        assert_eq!(a.directions.to_text(), b.directions.to_text());
    }
}

#[test]
fn realization_dump_round_trip() {
    let r = build_rk(9, 3, Some(40), 12345).unwrap();
    let back = RandomSetRealization::from_dump(&r.to_dump()).unwrap();
    assert_eq!(back.to_dump(), r.to_dump());
    assert_eq!(build_rk(9, 3, Some(40), 12345).unwrap().to_dump(), r.to_dump());
    assert_ne!(build_rk(9, 3, Some(40), 12346).unwrap().to_dump(), r.to_dump());
}

#[test]
fn smooth_bodies_get_sampled_certificates() {
    let body = SymBody::lp(4, q(3)).unwrap();
    let out = illuminate_auto(&body, 3, &AutoOptions { lp_samples: 300, ..AutoOptions::default() }).unwrap();
    assert!(out.is_certified());
    assert!(!out.certificate.exhaustive);
    assert!(out.direction_count() < 16);
    let again = verify_certificate_json(&out.certificate.to_json()).unwrap();
    assert_eq!(again.status(), Status::Certified);
}
