//! Acceptance checks. Each test prints one PASS/FAIL line per criterion to
//! stderr (bypassing the harness capture) and asserts what is attainable.
//!
//! Two literal checks cannot pass because the expressions being compared
//! contain misprints: the displayed third-order composition coefficient and
//! the displayed additive-to-multiplicative prefactors. They are evaluated
//! and reported as FAIL, and the corresponding assertions live in ignored
//! tests (`cargo test --test acceptance -- --ignored` shows them failing).

use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use rug::Float;

use ruijsenaars_cli::{run_suite, CheckRecord, IdentityReport, Suite, SuiteConfig};
use ruijsenaars_core::bracket::{BracketFunction, FlavorKind};
use ruijsenaars_core::diffop::ModelParams;
use ruijsenaars_core::macdonald::{normalization_bridge_residual, BridgeFamily, BridgePrefactor};
use ruijsenaars_core::residual::max_float;
use ruijsenaars_core::ruijsenaars::{build_h, h3_closed_form, H3_PRINTED_SHIFT};
use ruijsenaars_core::{Precision, Sampler};

/// Serializes the criteria so the reported runtimes are not inflated by
/// concurrently running suites.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn line(criterion: u32, passed: bool, text: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] criterion {criterion:>2}: {status}  {text}");
}

fn residual(c: &CheckRecord) -> f64 {
    c.residual.parse().unwrap_or(f64::INFINITY)
}

fn worst<'a>(checks: impl IntoIterator<Item = &'a CheckRecord>) -> f64 {
    checks.into_iter().map(residual).fold(0.0, f64::max)
}

fn describe_failures(checks: &[&CheckRecord]) -> String {
    checks
        .iter()
        .filter(|c| !c.passed)
        .take(5)
        .map(|c| format!("{} = {}{}", c.id, c.residual, c.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn timed(suite: Suite, cfg: &SuiteConfig) -> (IdentityReport, Duration) {
    let start = Instant::now();
    let report = run_suite(suite, cfg).expect("valid configuration");
    (report, start.elapsed())
}

/// The expansion suite is shared by criteria 5 and 6.
fn expansions() -> &'static (IdentityReport, Duration) {
    static REPORT: OnceLock<(IdentityReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        timed(
            Suite::Expansions,
            &SuiteConfig {
                n: 3,
                lmax: 4,
                samples: Some(20),
                ..SuiteConfig::default()
            },
        )
    })
}

/// The multiplicative suite is shared by criteria 8 and 9.
fn macdonald() -> &'static (IdentityReport, Duration) {
    static REPORT: OnceLock<(IdentityReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        timed(
            Suite::Macdonald,
            &SuiteConfig {
                n: 3,
                lmax: 4,
                rmax: 3,
                samples: Some(10),
                ..SuiteConfig::default()
            },
        )
    })
}

fn numeric_criterion(criterion: u32, what: &str, report: &IdentityReport, tol: f64, elapsed: Duration, limit: Duration) {
    let checks: Vec<&CheckRecord> = report.checks.iter().collect();
    let max = worst(checks.iter().copied());
    let ok = report.passed() && max < tol && elapsed < limit;
    line(
        criterion,
        ok,
        &format!(
            "{what}: {} checks, max relative residual {max:.2e} (tolerance {tol:.0e}), {:.1} s (limit {} s){}",
            checks.len(),
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if report.passed() { String::new() } else { format!("; failing: {}", describe_failures(&checks)) }
        ),
    );
    assert!(report.passed(), "{}", describe_failures(&checks));
    assert!(max < tol);
    assert!(elapsed < limit, "took {elapsed:?}");
}

#[test]
fn criterion_01_hirota_relation() {
    let _g = serial();
    let cfg = SuiteConfig {
        samples: Some(200),
        precision: Precision::digits(64),
        ..SuiteConfig::default()
    };
    let (report, elapsed) = timed(Suite::Hirota, &cfg);
    assert!(report.checks.iter().all(|c| c.samples == 200));
    numeric_criterion(1, "three-term relation, 3 flavors x 200 samples", &report, 1e-40, elapsed, Duration::from_secs(10));
}

#[test]
fn criterion_02_commutativity() {
    let _g = serial();
    let cfg = SuiteConfig {
        n: 3,
        rmax: 3,
        samples: Some(20),
        ..SuiteConfig::default()
    };
    let (report, elapsed) = timed(Suite::Commute, &cfg);
    numeric_criterion(2, "[D_r,D_s], [D_r,H_s], [H_r,H_s], n<=3, r,s<=3", &report, 1e-35, elapsed, Duration::from_secs(300));
}

#[test]
fn criterion_03_wronski_recurrence() {
    let _g = serial();
    let cfg = SuiteConfig {
        n: 4,
        lmax: 4,
        samples: Some(20),
        ..SuiteConfig::default()
    };
    let (report, elapsed) = timed(Suite::Wronski, &cfg);
    assert_eq!(report.checks.len(), 3 * 4 * 4);
    numeric_criterion(3, "Wronski residual operator, n<=4, l<=4", &report, 1e-35, elapsed, Duration::from_secs(300));
}

#[test]
fn criterion_04_coefficient_and_subset_identities() {
    let _g = serial();
    let cfg = SuiteConfig {
        n: 4,
        samples: Some(50),
        ..SuiteConfig::default()
    };
    let (report, elapsed) = timed(Suite::KeyIdentity, &cfg);
    numeric_criterion(4, "coefficient identity and alternating subset sum, n<=4", &report, 1e-35, elapsed, Duration::from_secs(120));
}

#[test]
fn criterion_05_determinant_formulas() {
    let _g = serial();
    let (report, _) = expansions();
    let checks: Vec<&CheckRecord> = report.checks.iter().filter(|c| c.id.contains("/det-")).collect();
    // Three flavors, n = 1..3, l = 1..3, two families, two product orders.
    assert_eq!(checks.len(), 3 * 3 * 3 * 2 * 2);
    let forced_zero = checks.iter().filter(|c| c.id.contains("/det-d/") && c.id.contains("n=1/") && c.id.ends_with("l=3")).count();
    assert_eq!(forced_zero, 3 * 2);
    let max = worst(checks.iter().copied());
    let ok = checks.iter().all(|c| c.passed) && max < 1e-35;
    line(
        5,
        ok,
        &format!("determinant formulas for H_l and D_l, l<=3 (incl. l>n), n<=3: {} checks, max {max:.2e}", checks.len()),
    );
    assert!(ok, "{}", describe_failures(&checks));
}

/// Largest relative gap between the displayed third-order expression, read
/// literally, and `H_3`, over the three flavors with two and three variables.
fn h3_display_as_printed() -> Float {
    let precision = Precision::default();
    let mut s = Sampler::new(606, precision);
    let tol = Float::with_val(precision.bits(), 1e-35);
    let mut max = Float::new(precision.bits());
    for kind in FlavorKind::ALL {
        for n in 2..=3 {
            let p = ModelParams::sample(n, Arc::new(BracketFunction::standard(kind, precision)), &mut s).unwrap();
            let display = h3_closed_form(&p, H3_PRINTED_SHIFT).unwrap();
            let report = display.equal_at(&build_h(3, &p), &mut s, 5, &tol).unwrap();
            max = max_float(max, &report.max_relative);
        }
    }
    max
}

#[test]
fn criterion_06_composition_expansion() {
    let _g = serial();
    let (report, _) = expansions();
    let checks: Vec<&CheckRecord> = report
        .checks
        .iter()
        .filter(|c| c.id.contains("/compositions/") || c.id.ends_with("-display"))
        .collect();
    assert_eq!(checks.len(), 3 * 3 * (4 + 2));
    let max = worst(checks.iter().copied());
    let attainable = checks.iter().all(|c| c.passed) && max < 1e-35;
    let printed = h3_display_as_printed();
    let literal_ok = printed < 1e-35;
    line(
        6,
        attainable && literal_ok,
        &format!(
            "composition expansion l<=4 and H_2 display: max {max:.2e}; H_3 display with the D_2 D_1 coefficient \
             as printed ([k+d]): relative gap {:.2e}; with the expansion's [k+2d]: within tolerance",
            printed.to_f64()
        ),
    );
    assert!(attainable, "{}", describe_failures(&checks));
    // The misprint is a genuine O(1) disagreement, not a rounding issue.
    assert!(printed > 1e-3);
}

#[test]
#[ignore = "the displayed third-order coefficient is misprinted; kept to show the literal comparison failing"]
fn criterion_06_h3_display_as_printed() {
    let printed = h3_display_as_printed();
    assert!(printed < 1e-35, "H_3 display as printed differs from H_3 by {}", printed.to_f64());
}

#[test]
fn criterion_07_kernel_identities() {
    let _g = serial();
    let cfg = SuiteConfig {
        lmax: 4,
        rmax: 3,
        samples: Some(20),
        ..SuiteConfig::default()
    };
    let (kernels, t1) = timed(Suite::Kernels, &cfg);
    let (kajihara, t2) = timed(
        Suite::Kajihara,
        &SuiteConfig {
            rmax: 3,
            samples: Some(5),
            ..SuiteConfig::default()
        },
    );
    let hd = kernels.checks.iter().filter(|c| c.anchor == "dual-kernel-hd").count();
    assert_eq!(hd, 3 * 4 * 4);
    assert_eq!(kajihara.checks.len(), 3 * 2 * 4);
    let all: Vec<&CheckRecord> = kernels.checks.iter().chain(&kajihara.checks).collect();
    let max = worst(all.iter().copied());
    let elapsed = t1 + t2;
    let ok = kernels.passed() && kajihara.passed() && max < 1e-35 && elapsed < Duration::from_secs(300);
    line(
        7,
        ok,
        &format!(
            "dual kernel (r<=4), duality sums (r<=3), multiplicative kernels and Kajihara (order 3, with presets): \
             {} checks, max {max:.2e}, {:.1} s (limit 300 s)",
            all.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok, "{}", describe_failures(&all));
}

#[test]
fn criterion_08_macdonald_exact() {
    let _g = serial();
    let (report, elapsed) = macdonald();
    let checks: Vec<&CheckRecord> = report.checks.iter().filter(|c| c.kind == "exact").collect();
    for needle in ["eigen-d", "eigen-h", "one-row", "scalar-wronski", "operator-wronski", "genfun", "separation"] {
        assert!(checks.iter().any(|c| c.id.contains(needle)), "{needle}");
    }
    let ok = checks.iter().all(|c| c.passed) && *elapsed < Duration::from_secs(600);
    line(
        8,
        ok,
        &format!(
            "exact eigenvalues, one-row polynomials, scalar/operator recurrences, generating functions at q=3/5, t=2/7, \
             n<=3, |lambda|<=4: {} exact checks, {:.1} s (limit 600 s)",
            checks.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok, "{}", describe_failures(&checks));
}

/// Largest relative gap of the bridge when the prefactors are read as printed.
fn bridge_as_printed() -> f64 {
    let precision = Precision::default();
    let mut s = Sampler::new(909, precision);
    let mut max = 0.0f64;
    for n in 1..=3 {
        for (family, orders) in [(BridgeFamily::D, 1..=n.min(3)), (BridgeFamily::H, 1..=3)] {
            for k in orders {
                let (x, d, kp) = (s.points(n), s.point(), s.point());
                let r = normalization_bridge_residual(family, k, &x, &d, &kp, BridgePrefactor::Printed, precision).unwrap();
                max = max.max(r.to_f64());
            }
        }
    }
    max
}

#[test]
fn criterion_09_normalization_bridge() {
    let _g = serial();
    let (report, _) = macdonald();
    let checks: Vec<&CheckRecord> = report.checks.iter().filter(|c| c.anchor == "normalization-bridge").collect();
    // D_r with r <= n and H_l with l <= 3, for n = 1..3.
    assert_eq!(checks.len(), (1 + 2 + 3) + 3 * 3);
    assert!(checks.iter().all(|c| c.samples == 10));
    let max = worst(checks.iter().copied());
    let ok = checks.iter().all(|c| c.passed) && max < 1e-30;
    let printed = bridge_as_printed();
    line(
        9,
        ok,
        &format!(
            "additive trig vs multiplicative coefficients with D = t^(-r(n-1)/2) calD, H = q^(l/2) t^(-nl/2) calH: \
             {} checks x 10 points, max {max:.2e}",
            checks.len()
        ),
    );
    line(
        9,
        printed < 1e-30,
        &format!("same comparison with the prefactors as printed (t^(-r(n-r)/2), q^(-l/2) t^(-nl/2)): relative gap {printed:.2e}"),
    );
    assert!(ok, "{}", describe_failures(&checks));
    assert!(printed > 1e-3);
}

#[test]
#[ignore = "the displayed prefactors are misprinted; kept to show the literal comparison failing"]
fn criterion_09_bridge_as_printed() {
    let printed = bridge_as_printed();
    assert!(printed < 1e-30, "printed prefactors miss by {printed:e}");
}

#[test]
fn criterion_10_negative_controls() {
    let _g = serial();
    let perturbed = |suite: Suite, n: usize, lmax: usize| {
        run_suite(
            suite,
            &SuiteConfig {
                n,
                lmax,
                samples: Some(5),
                perturb_kappa: Some(1e-3),
                ..SuiteConfig::default()
            },
        )
        .unwrap()
    };
    let wronski = perturbed(Suite::Wronski, 4, 4);
    let determinants = perturbed(Suite::Expansions, 3, 3);
    let det_checks: Vec<&CheckRecord> = determinants.checks.iter().filter(|c| c.id.contains("/det-")).collect();
    let w_max = worst(&wronski.checks);
    let d_max = worst(det_checks.iter().copied());
    let d_failed = det_checks.iter().any(|c| !c.passed);
    let ok = !wronski.passed() && w_max > 1e-6 && d_failed && d_max > 1e-6;
    line(
        10,
        ok,
        &format!(
            "kappa -> kappa + 1e-3 in one factor of H_l: Wronski suite {} (max {w_max:.2e}, {}/{} checks fail), \
             determinant checks {} (max {d_max:.2e})",
            if wronski.passed() { "passes" } else { "fails" },
            wronski.failures().count(),
            wronski.checks.len(),
            if d_failed { "fail" } else { "pass" },
        ),
    );
    assert!(ok);
}
