use std::ffi::{CStr, CString};
use std::ptr;

use linfty_ffi::*;

const SQUARE: &str = r#"{"kind": "rectangle", "ax": -1.0, "ay": -1.0, "bx": 1.0, "by": 1.0}"#;
const DISK: &str = r#"{"kind": "disk", "cx": 0.0, "cy": 0.0, "r": 1.0}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(linfty_last_error()) }.to_string_lossy().into_owned()
}

fn domain(json: &str, h: f64) -> *mut LinftyDomain {
    let json = CString::new(json).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { linfty_domain_new(json.as_ptr(), h, &mut d) }, LinftyStatus::Ok, "{}", last_error());
    assert!(!d.is_null());
    d
}

fn positions(d: *const LinftyDomain) -> Vec<[f64; 2]> {
    unsafe {
        let mut n = 0;
        assert_eq!(linfty_domain_positions(d, ptr::null_mut(), 0, &mut n), LinftyStatus::BufferTooSmall);
        let mut xy = vec![0.0; n];
        assert_eq!(linfty_domain_positions(d, xy.as_mut_ptr(), n, &mut n), LinftyStatus::Ok);
        xy.chunks(2).map(|c| [c[0], c[1]]).collect()
    }
}

fn node_near(d: *const LinftyDomain, x: [f64; 2]) -> usize {
    let pos = positions(d);
    (0..pos.len())
        .min_by(|&a, &b| {
            let da = (pos[a][0] - x[0]).hypot(pos[a][1] - x[1]);
            let db = (pos[b][0] - x[0]).hypot(pos[b][1] - x[1]);
            da.total_cmp(&db)
        })
        .unwrap()
}

fn dirac(d: *const LinftyDomain, node: usize) -> *mut LinftyMeasure {
    let mut len = 0;
    unsafe { linfty_domain_len(d, &mut len) };
    let mut w = vec![0.0; len];
    w[node] = 1.0;
    let mut mu = ptr::null_mut();
    assert_eq!(unsafe { linfty_measure_new(d, w.as_ptr(), len, &mut mu) }, LinftyStatus::Ok);
    mu
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(linfty_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn square_geometry() {
    let d = domain(SQUARE, 1.0 / 16.0);
    unsafe {
        let (mut len, mut h, mut r) = (0usize, 0.0, 0.0);
        assert_eq!(linfty_domain_len(d, &mut len), LinftyStatus::Ok);
        assert_eq!(linfty_domain_spacing(d, &mut h), LinftyStatus::Ok);
        assert_eq!(linfty_inradius(d, &mut r), LinftyStatus::Ok);
        assert_eq!(h, 1.0 / 16.0);
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(positions(d).len(), len);

        let mut mask = vec![0u8; len];
        let mut n = 0;
        assert_eq!(linfty_domain_interior_mask(d, mask.as_mut_ptr(), len, &mut n), LinftyStatus::Ok);
        let interior = mask.iter().filter(|&&m| m == 1).count();
        assert!(interior > 0 && interior < len);

        let mut dist = ptr::null_mut();
        assert_eq!(linfty_distance(d, &mut dist), LinftyStatus::Ok);
        let (mut lip, mut q) = (0.0, 0.0);
        assert_eq!(linfty_lip_constant(dist, &mut lip), LinftyStatus::Ok);
        assert_eq!(linfty_rayleigh(dist, &mut q), LinftyStatus::Ok);
        assert!((lip - 1.0).abs() < 1e-12 && (q - 1.0).abs() < 1e-12);

        let mut vals = vec![0.0; len];
        assert_eq!(linfty_field_values(dist, vals.as_mut_ptr(), len, &mut n), LinftyStatus::Ok);
        let centre = node_near(d, [0.0, 0.0]);
        assert!((vals[centre] - 1.0).abs() < 1e-12);

        let mut ridge = vec![0usize; len];
        assert_eq!(linfty_high_ridge(d, 0.0, ridge.as_mut_ptr(), len, &mut n), LinftyStatus::Ok);
        assert_eq!(&ridge[..n], &[centre]);

        linfty_field_free(dist);
        linfty_domain_free(d);
    }
}

#[test]
fn field_round_trip_and_size_mismatch() {
    let d = domain(SQUARE, 0.25);
    unsafe {
        let mut len = 0;
        linfty_domain_len(d, &mut len);
        let vals: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let mut f = ptr::null_mut();
        assert_eq!(linfty_field_new(d, vals.as_ptr(), len, &mut f), LinftyStatus::Ok);
        let mut back = vec![0.0; len];
        let mut n = 0;
        assert_eq!(linfty_field_values(f, back.as_mut_ptr(), len, &mut n), LinftyStatus::Ok);
        assert_eq!(back, vals);
        linfty_field_free(f);

        let mut g = ptr::null_mut();
        assert_eq!(linfty_field_new(d, vals.as_ptr(), len - 1, &mut g), LinftyStatus::SizeMismatch);
        assert!(g.is_null());
        assert!(last_error().contains("mismatch"), "{}", last_error());
        linfty_domain_free(d);
    }
}

#[test]
fn eigenpair_and_harmonic() {
    let d = domain(SQUARE, 1.0 / 16.0);
    unsafe {
        let mut lambda = 0.0;
        let mut u = ptr::null_mut();
        assert_eq!(linfty_p_eigenpair(d, 2.0, 1e-3, &mut lambda, &mut u), LinftyStatus::Ok, "{}", last_error());
        // the Dirichlet 2-eigenvalue of (-1,1)^2 is pi^2/2; the quotient is its root
        let exact = std::f64::consts::PI / 2f64.sqrt();
        assert!((lambda - exact).abs() / exact < 0.02, "lambda = {lambda}");
        let mut q = 0.0;
        assert_eq!(linfty_rayleigh(u, &mut q), LinftyStatus::Ok);
        assert!(q >= 1.0 - 1e-12);
        linfty_field_free(u);

        assert_eq!(linfty_p_eigenpair(d, 1.0, 1e-3, &mut lambda, ptr::null_mut()), LinftyStatus::InvalidArgument);

        // boundary 0, centre 1
        let mut len = 0;
        linfty_domain_len(d, &mut len);
        let mut mask = vec![0u8; len];
        let mut n = 0;
        linfty_domain_interior_mask(d, mask.as_mut_ptr(), len, &mut n);
        let centre = node_near(d, [0.0, 0.0]);
        let mut nodes: Vec<usize> = (0..len).filter(|&i| mask[i] == 0).collect();
        let mut values = vec![0.0; nodes.len()];
        nodes.push(centre);
        values.push(1.0);
        let mut ext = ptr::null_mut();
        assert_eq!(
            linfty_infinity_harmonic(d, nodes.as_ptr(), values.as_ptr(), nodes.len(), 1e-10, &mut ext),
            LinftyStatus::Ok,
            "{}",
            last_error()
        );
        let mut vals = vec![0.0; len];
        linfty_field_values(ext, vals.as_mut_ptr(), len, &mut n);
        assert_eq!(vals[centre], 1.0);
        assert!(vals.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        linfty_field_free(ext);
        linfty_domain_free(d);
    }
}

#[test]
fn sign_changing_rectangle_and_stadium_disk() {
    let rect = domain(r#"{"kind": "rectangle", "ax": -1.0, "ay": -0.5, "bx": 1.0, "by": 0.5}"#, 1.0 / 32.0);
    let disk = domain(DISK, 1.0 / 32.0);
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(linfty_sign_changing(rect, 1.0 / 32.0, &mut u), LinftyStatus::Ok, "{}", last_error());
        let mut len = 0;
        linfty_domain_len(rect, &mut len);
        let mut vals = vec![0.0; len];
        let mut n = 0;
        linfty_field_values(u, vals.as_mut_ptr(), len, &mut n);
        assert!(vals.iter().any(|&v| v < 0.0));
        linfty_field_free(u);

        let mut v = ptr::null_mut();
        assert_eq!(linfty_sign_changing(disk, 1.0 / 32.0, &mut v), LinftyStatus::StadiumDomain);
        assert!(v.is_null());
        linfty_domain_free(rect);
        linfty_domain_free(disk);
    }
}

#[test]
fn transport_values() {
    let d = domain(SQUARE, 1.0 / 8.0);
    unsafe {
        let centre = node_near(d, [0.0, 0.0]);
        let side = node_near(d, [0.5, 0.0]);
        let (mu, rho) = (dirac(d, centre), dirac(d, side));

        let (mut closed, mut flow, mut w, mut kr, mut krp, mut q) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(linfty_j_star(mu, &mut closed), LinftyStatus::Ok);
        assert_eq!(linfty_j_star_flow(mu, &mut flow), LinftyStatus::Ok);
        assert!((closed - 1.0).abs() < 1e-12);
        assert!((flow - closed).abs() < 1e-9);
        assert_eq!(linfty_w1(mu, rho, &mut w), LinftyStatus::Ok);
        assert!((w - 0.5).abs() < 1e-9);
        assert_eq!(linfty_kr_norm(mu, 0, &mut kr), LinftyStatus::Ok);
        assert!((kr - 1.0).abs() < 1e-9, "creating the unit mass costs 1");
        assert_eq!(linfty_kr_norm(mu, 1, &mut krp), LinftyStatus::Ok);
        assert!((krp - 1.0).abs() < 1e-9);
        assert_eq!(linfty_dual_rayleigh(mu, &mut q), LinftyStatus::Ok);
        assert!((q - 1.0).abs() < 1e-9);

        linfty_measure_free(mu);
        linfty_measure_free(rho);
        linfty_domain_free(d);
    }
}

#[test]
fn measure_errors() {
    let d = domain(SQUARE, 0.25);
    unsafe {
        let mut len = 0;
        linfty_domain_len(d, &mut len);
        let centre = node_near(d, [0.0, 0.0]);
        let mut w = vec![0.0; len];
        w[centre] = -1.0;
        let mut neg = ptr::null_mut();
        assert_eq!(linfty_measure_new(d, w.as_ptr(), len, &mut neg), LinftyStatus::Ok);
        let mut v = 0.0;
        assert_eq!(linfty_j_star(neg, &mut v), LinftyStatus::SignedMeasure);
        // the flow form accepts signed measures
        assert_eq!(linfty_j_star_flow(neg, &mut v), LinftyStatus::Ok);
        assert!((v - 1.0).abs() < 1e-9);

        w[centre] = 2.0;
        let mut heavy = ptr::null_mut();
        linfty_measure_new(d, w.as_ptr(), len, &mut heavy);
        let one = dirac(d, centre);
        assert_eq!(linfty_w1(heavy, one, &mut v), LinftyStatus::UnbalancedMass);

        let zero = vec![0.0; len];
        let mut z = ptr::null_mut();
        linfty_measure_new(d, zero.as_ptr(), len, &mut z);
        assert_eq!(linfty_dual_rayleigh(z, &mut v), LinftyStatus::ZeroFunction);

        for m in [neg, heavy, one, z] {
            linfty_measure_free(m);
        }
        linfty_domain_free(d);
    }
}

#[test]
fn errors_and_null_handling() {
    unsafe {
        let mut d = ptr::null_mut();
        let bad = CString::new(r#"{"kind": "hexagon"}"#).unwrap();
        assert_eq!(linfty_domain_new(bad.as_ptr(), 0.1, &mut d), LinftyStatus::BadShape);
        assert!(d.is_null());
        assert!(!last_error().is_empty());

        let disk = CString::new(DISK).unwrap();
        assert_eq!(linfty_domain_new(disk.as_ptr(), -1.0, &mut d), LinftyStatus::InvalidArgument);

        let missing = CString::new("/nonexistent/shape.json").unwrap();
        assert_eq!(linfty_domain_load(missing.as_ptr(), 0.1, &mut d), LinftyStatus::Io);

        assert_eq!(linfty_domain_new(ptr::null(), 0.1, &mut d), LinftyStatus::NullPointer);
        let ok = CString::new(SQUARE).unwrap();
        assert_eq!(linfty_domain_new(ok.as_ptr(), 0.5, ptr::null_mut()), LinftyStatus::NullPointer);
        let mut len = 0;
        assert_eq!(linfty_domain_len(ptr::null(), &mut len), LinftyStatus::NullPointer);

        // success clears the message
        assert_eq!(linfty_domain_new(ok.as_ptr(), 0.5, &mut d), LinftyStatus::Ok);
        assert_eq!(last_error(), "");
        linfty_domain_free(d);

        linfty_domain_free(ptr::null_mut());
        linfty_field_free(ptr::null_mut());
        linfty_measure_free(ptr::null_mut());
    }
}

#[test]
fn last_error_is_per_thread() {
    let bad = CString::new("not json").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { linfty_domain_new(bad.as_ptr(), 0.1, &mut d) }, LinftyStatus::BadShape);
    let here = last_error();
    let there = std::thread::spawn(last_error).join().unwrap();
    assert!(!here.is_empty());
    assert_eq!(there, "");
}
