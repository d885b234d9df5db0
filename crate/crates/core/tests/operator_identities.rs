//! Operator identities across flavors at reduced sample counts; the
//! acceptance target runs the full grid.

use std::sync::Arc;

use rug::Float;

use ruijsenaars_core::bracket::{BracketFunction, FlavorKind};
use ruijsenaars_core::diffop::ModelParams;
use ruijsenaars_core::kernels::{
    hd_identity_residual, kajihara_residual, trig_kernel_residuals, KajiharaPreset,
};
use ruijsenaars_core::ruijsenaars::{
    build_h, d_via_determinant, h_via_compositions, h_via_determinant, wronski_residual_op, ProductOrder,
};
use ruijsenaars_core::{Precision, Sampler};

fn prec() -> Precision {
    Precision::default()
}

/// `10^{-(digits - 25)}`, the default operator-equality tolerance.
fn tol() -> Float {
    prec().ten_pow_neg(i64::from(prec().decimal_digits()) - 25)
}

fn model(kind: FlavorKind, n: usize, s: &mut Sampler) -> ModelParams {
    ModelParams::sample(n, Arc::new(BracketFunction::standard(kind, prec())), s).unwrap()
}

#[test]
fn wronski_closure_for_every_flavor() {
    let mut s = Sampler::new(41, prec());
    for kind in FlavorKind::ALL {
        for n in 1..=4 {
            let p = model(kind, n, &mut s);
            for l in 1..=4 {
                let report = wronski_residual_op(l, &p).unwrap().vanishes_at(&mut s, 3, &tol()).unwrap();
                assert!(report.passed, "{kind} n={n} l={l}: {:?}", report.max_relative);
            }
        }
    }
}

#[test]
fn determinant_and_composition_expansions_agree() {
    let mut s = Sampler::new(42, prec());
    for kind in FlavorKind::ALL {
        for n in 1..=3 {
            let p = model(kind, n, &mut s);
            for l in 1..=3 {
                let rows = h_via_determinant(l, &p, ProductOrder::Rows).unwrap();
                let columns = h_via_determinant(l, &p, ProductOrder::Columns).unwrap();
                let comps = h_via_compositions(l, &p).unwrap();
                assert!(rows.equal_at(&columns, &mut s, 2, &tol()).unwrap().passed, "{kind} n={n} l={l}");
                assert!(rows.equal_at(&comps, &mut s, 2, &tol()).unwrap().passed, "{kind} n={n} l={l}");
            }
            let four = h_via_compositions(4, &p).unwrap();
            assert!(four.equal_at(&build_h(4, &p), &mut s, 2, &tol()).unwrap().passed, "{kind} n={n}");
        }
    }
}

#[test]
fn d_determinant_vanishes_beyond_n() {
    let mut s = Sampler::new(43, prec());
    for kind in FlavorKind::ALL {
        for n in 1..=2 {
            let p = model(kind, n, &mut s);
            for l in n + 1..=3 {
                let det = d_via_determinant(l, &p, ProductOrder::Rows).unwrap();
                // The entries do not know D_l = 0, so this is a genuine
                // cancellation among H-products.
                assert!(!det.is_structurally_zero());
                assert!(det.vanishes_at(&mut s, 3, &tol()).unwrap().passed, "{kind} n={n} l={l}");
            }
        }
    }
}

#[test]
fn dual_kernel_on_the_desk_grid() {
    let mut s = Sampler::new(44, prec());
    for kind in FlavorKind::ALL {
        let b = Arc::new(BracketFunction::standard(kind, prec()));
        for (m, n) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
            let delta = s.point();
            for r in 0..=4 {
                let w = s.retry(|s| hd_identity_residual(r, &s.points(m), &s.points(n), &delta, &b)).unwrap();
                assert!(w.relative() < tol(), "{kind} m={m} n={n} r={r}");
            }
        }
    }
}

#[test]
fn presets_agree_with_kernel_series() {
    let mut s = Sampler::new(45, prec());
    for (m, n) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
        let (q, t) = (s.annulus(0.2, 0.6), s.point());
        let (z, w) = (s.points(m), s.points(n));
        for preset in KajiharaPreset::ALL {
            let (a, b) = preset.parameters(m, n, &q, &t);
            let via_kajihara = kajihara_residual(3, &z, &w, &a, &b, &q).unwrap() < tol();
            let via_kernel = trig_kernel_residuals(preset.kernel(), &z, &w, &q, &t, 3, prec()).unwrap() < tol();
            assert!(via_kajihara && via_kernel, "{preset:?} m={m} n={n}");
        }
    }
}
