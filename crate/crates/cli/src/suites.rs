//! The identity suites. Each suite expands into a flat list of independent
//! checks, which run in parallel; the report is assembled once they finish.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use rug::{Complex, Float};

use ruijsenaars_core::bracket::{BracketFunction, FlavorKind};
use ruijsenaars_core::diffop::{DiffOperator, ModelParams, MultiIndex};
use ruijsenaars_core::kernels::{
    duality_sum_residual, hd_identity_residual, kajihara_residual, trig_kernel_residuals, DualityParams,
    KajiharaPreset, TrigKernel,
};
use ruijsenaars_core::macdonald::{
    d_eigen_holds, eigenvalues_separated, g_matches_one_row, genfun_check, h_eigen_holds, macdonald_poly,
    macdonald_poly_gram_schmidt, normalization_bridge_residual, operator_wronski_trig_check, scalar_wronski_check,
    BridgeFamily, BridgePrefactor, Partition,
};
use ruijsenaars_core::precision::format_float;
use ruijsenaars_core::residual::max_float;
use ruijsenaars_core::ruijsenaars::{
    build_d, build_h, coefficient_identity_residual, commutator_residual, d_via_determinant, h2_closed_form,
    h3_closed_form, h_via_compositions, h_via_determinant, key_identity_residual, wronski_residual_op,
    CommutatorKind, ProductOrder, H3_EXPANSION_SHIFT,
};
use ruijsenaars_core::{Result as CoreResult, Sampler};

use crate::config::{ConfigError, Suite, SuiteConfig};
use crate::report::{CheckRecord, IdentityReport};

/// Tolerance of the additive/multiplicative bridge, which compares two
/// independently rounded evaluations rather than a cancelling sum.
pub const BRIDGE_TOLERANCE: f64 = 1e-30;

/// Variable counts `(m, n)` used by the kernel checks.
pub const KERNEL_SHAPES: [(usize, usize); 4] = [(1, 1), (2, 1), (2, 2), (3, 2)];

/// Largest Macdonald problem considered desk-scale.
const MACDONALD_MAX_N: usize = 4;

enum Tolerance {
    Relative(f64),
    Exact,
}

enum Outcome {
    Numeric { residual: Float, samples: usize },
    Exact { holds: bool },
}

type Job = Box<dyn FnOnce(&mut Sampler) -> CoreResult<Outcome> + Send>;

struct Check {
    id: String,
    anchor: &'static str,
    tolerance: Tolerance,
    sampler: Sampler,
    job: Job,
}

/// Accumulates checks, handing each its own sampler forked in insertion
/// order so results do not depend on scheduling.
struct Plan<'a> {
    cfg: &'a SuiteConfig,
    root: Sampler,
    checks: Vec<Check>,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a SuiteConfig) -> Self {
        Plan {
            cfg,
            root: Sampler::new(cfg.seed, cfg.precision),
            checks: Vec::new(),
        }
    }

    fn numeric(&mut self, id: String, anchor: &'static str, tol: f64, job: Job) {
        let sampler = self.root.fork();
        self.checks.push(Check {
            id,
            anchor,
            tolerance: Tolerance::Relative(tol),
            sampler,
            job,
        });
    }

    fn exact(&mut self, id: String, anchor: &'static str, job: impl FnOnce() -> CoreResult<bool> + Send + 'static) {
        let sampler = self.root.fork();
        self.checks.push(Check {
            id,
            anchor,
            tolerance: Tolerance::Exact,
            sampler,
            job: Box::new(move |_| Ok(Outcome::Exact { holds: job()? })),
        });
    }

    fn bracket(&self, kind: FlavorKind) -> Arc<BracketFunction> {
        Arc::new(BracketFunction::standard(kind, self.cfg.precision))
    }

    fn tolerance_float(&self, tol: f64) -> Float {
        Float::with_val(self.cfg.precision.bits(), tol)
    }
}

/// Generic model parameters, with the negative-control perturbation applied
/// when configured.
fn model(n: usize, bracket: Arc<BracketFunction>, s: &mut Sampler, perturb: Option<f64>) -> CoreResult<ModelParams> {
    let bits = bracket.bits();
    let mut p = ModelParams::sample(n, bracket, s)?;
    p.h_kappa_perturbation = perturb.map(|e| Complex::with_val(bits, e));
    Ok(p)
}

/// Largest value of `f` over `samples` independent draws, each retried past
/// pole proximity.
fn max_over<F>(s: &mut Sampler, samples: usize, f: F) -> CoreResult<Outcome>
where
    F: Fn(&mut Sampler) -> CoreResult<Float> + Sync,
{
    let forks: Vec<Sampler> = (0..samples).map(|_| s.fork()).collect();
    let values: Vec<CoreResult<Float>> = forks.into_par_iter().map(|mut fs| fs.retry(&f)).collect();
    let mut worst = Float::new(s.precision().bits());
    for v in values {
        worst = max_float(worst, &v?);
    }
    Ok(Outcome::Numeric { residual: worst, samples })
}

/// Coefficient-wise vanishing of an operator at random points.
fn vanishing(op: DiffOperator, s: &mut Sampler, samples: usize, tol: &Float) -> CoreResult<Outcome> {
    if op.is_structurally_zero() {
        return Ok(Outcome::Numeric {
            residual: Float::new(tol.prec()),
            samples: 0,
        });
    }
    let report = op.vanishes_at(s, samples, tol)?;
    Ok(Outcome::Numeric {
        residual: report.max_relative,
        samples: report.samples,
    })
}

fn plan_hirota(plan: &mut Plan) {
    let suite = Suite::Hirota;
    let (tol, samples) = (plan.cfg.tolerance_for(suite), plan.cfg.samples_for(suite));
    for &kind in &plan.cfg.flavors {
        for gauss in [false, true] {
            let bracket = plan.bracket(kind);
            let id = format!("hirota/{kind}{}", if gauss { "/gauss" } else { "" });
            plan.numeric(
                id,
                "hirota-three-term",
                tol,
                Box::new(move |s| {
                    let bracket = if gauss {
                        Arc::new((*bracket).clone().with_gauss(s.point()))
                    } else {
                        bracket
                    };
                    max_over(s, samples, |s| {
                        let (z, a, b, c) = (s.point(), s.point(), s.point(), s.point());
                        Ok(bracket.hirota_residual(&z, &a, &b, &c)?.relative())
                    })
                }),
            );
        }
    }
}

fn plan_commute(plan: &mut Plan) {
    let suite = Suite::Commute;
    let (tol, samples) = (plan.cfg.tolerance_for(suite), plan.cfg.samples_for(suite));
    let tol_f = plan.tolerance_float(tol);
    let perturb = plan.cfg.perturb_kappa;
    let rmax = plan.cfg.rmax;
    for &kind in &plan.cfg.flavors {
        for n in 1..=plan.cfg.n {
            for (ck, name) in [(CommutatorKind::DD, "DD"), (CommutatorKind::DH, "DH"), (CommutatorKind::HH, "HH")] {
                for r in 1..=rmax {
                    let first = if ck == CommutatorKind::DH { 1 } else { r + 1 };
                    for s_ord in first..=rmax {
                        let bracket = plan.bracket(kind);
                        let tol_f = tol_f.clone();
                        plan.numeric(
                            format!("commute/{kind}/n={n}/{name}/r={r},s={s_ord}"),
                            "commuting-family",
                            tol,
                            Box::new(move |s| {
                                let p = model(n, bracket, s, perturb)?;
                                vanishing(commutator_residual(ck, r, s_ord, &p)?, s, samples, &tol_f)
                            }),
                        );
                    }
                }
            }
        }
    }
}

fn plan_wronski(plan: &mut Plan) {
    let suite = Suite::Wronski;
    let (tol, samples) = (plan.cfg.tolerance_for(suite), plan.cfg.samples_for(suite));
    let tol_f = plan.tolerance_float(tol);
    let perturb = plan.cfg.perturb_kappa;
    for &kind in &plan.cfg.flavors {
        for n in 1..=plan.cfg.n {
            for l in 1..=plan.cfg.lmax {
                let bracket = plan.bracket(kind);
                let tol_f = tol_f.clone();
                plan.numeric(
                    format!("wronski/{kind}/n={n}/l={l}"),
                    "wronski-recurrence",
                    tol,
                    Box::new(move |s| {
                        let p = model(n, bracket, s, perturb)?;
                        vanishing(wronski_residual_op(l, &p)?, s, samples, &tol_f)
                    }),
                );
            }
        }
    }
}

/// Largest order at which the determinant formulas are expanded.
const DETERMINANT_MAX: usize = 3;
/// Largest number of variables for the expansion checks.
const EXPANSION_MAX_N: usize = 3;

fn plan_expansions(plan: &mut Plan) {
    let suite = Suite::Expansions;
    let (tol, samples) = (plan.cfg.tolerance_for(suite), plan.cfg.samples_for(suite));
    let tol_f = plan.tolerance_float(tol);
    let perturb = plan.cfg.perturb_kappa;
    type Builder = fn(&ModelParams, usize) -> CoreResult<(DiffOperator, DiffOperator)>;
    let push = |plan: &mut Plan, kind: FlavorKind, n: usize, name: String, anchor: &'static str, order: usize, build: Builder| {
        let bracket = plan.bracket(kind);
        let tol_f = tol_f.clone();
        plan.numeric(
            format!("expansions/{kind}/n={n}/{name}"),
            anchor,
            tol,
            Box::new(move |s| {
                let p = model(n, bracket, s, perturb)?;
                let (lhs, rhs) = build(&p, order)?;
                vanishing(lhs.sub(&rhs)?, s, samples, &tol_f)
            }),
        );
    };
    for &kind in &plan.cfg.flavors {
        for n in 1..=plan.cfg.n.min(EXPANSION_MAX_N) {
            for l in 1..=plan.cfg.lmax.min(DETERMINANT_MAX) {
                push(plan, kind, n, format!("det-h/rows/l={l}"), "determinant-formula-h", l, |p, l| {
                    Ok((h_via_determinant(l, p, ProductOrder::Rows)?, build_h(l, p)))
                });
                push(plan, kind, n, format!("det-h/columns/l={l}"), "determinant-formula-h", l, |p, l| {
                    Ok((h_via_determinant(l, p, ProductOrder::Columns)?, build_h(l, p)))
                });
                push(plan, kind, n, format!("det-d/rows/l={l}"), "determinant-formula-d", l, |p, l| {
                    Ok((d_via_determinant(l, p, ProductOrder::Rows)?, build_d(l, p)))
                });
                push(plan, kind, n, format!("det-d/columns/l={l}"), "determinant-formula-d", l, |p, l| {
                    Ok((d_via_determinant(l, p, ProductOrder::Columns)?, build_d(l, p)))
                });
            }
            for l in 1..=plan.cfg.lmax {
                push(plan, kind, n, format!("compositions/l={l}"), "composition-expansion", l, |p, l| {
                    Ok((h_via_compositions(l, p)?, build_h(l, p)))
                });
            }
            push(plan, kind, n, "h2-display".into(), "composition-expansion-h2", 2, |p, _| {
                Ok((h2_closed_form(p)?, build_h(2, p)))
            });
            push(plan, kind, n, "h3-display".into(), "composition-expansion-h3", 3, |p, _| {
                Ok((h3_closed_form(p, H3_EXPANSION_SHIFT)?, build_h(3, p)))
            });
        }
    }
}

fn plan_key_identity(plan: &mut Plan) {
    let suite = Suite::KeyIdentity;
    let (tol, samples) = (plan.cfg.tolerance_for(suite), plan.cfg.samples_for(suite));
    let perturb = plan.cfg.perturb_kappa;
    for &kind in &plan.cfg.flavors {
        for n in 1..=plan.cfg.n {
            let bracket = plan.bracket(kind);
            plan.numeric(
                format!("keyidentity/{kind}/n={n}/coefficients"),
                "coefficient-identity",
                tol,
                Box::new(move |s| {
                    let p = model(n, bracket, s, perturb)?;
                    max_over(s, samples, |s| {
                        // Random λ with entries in 0..=2.
                        let lambda = MultiIndex::new((0..n).map(|_| ((s.unit() + 1.0) * 1.5).min(2.0) as u32).collect());
                        Ok(coefficient_identity_residual(&lambda, &s.points(n), &p)?.relative())
                    })
                }),
            );
            let bracket = plan.bracket(kind);
            plan.numeric(
                format!("keyidentity/{kind}/n={n}/subsets"),
                "alternating-subset-identity",
                tol,
                Box::new(move |s| {
                    max_over(s, samples, |s| {
                        let (z, w, a) = (s.points(n), s.points(n), s.point());
                        Ok(key_identity_residual(&z, &w, &a, &bracket)?.relative())
                    })
                }),
            );
        }
    }
}

fn plan_kernels(plan: &mut Plan) {
    let suite = Suite::Kernels;
    let (tol, samples) = (plan.cfg.tolerance_for(suite), plan.cfg.samples_for(suite));
    let (lmax, order, precision) = (plan.cfg.lmax, plan.cfg.rmax, plan.cfg.precision);
    for &kind in &plan.cfg.flavors {
        for (m, n) in KERNEL_SHAPES {
            for r in 1..=lmax {
                let bracket = plan.bracket(kind);
                plan.numeric(
                    format!("kernels/{kind}/hd/m={m},n={n}/r={r}"),
                    "dual-kernel-hd",
                    tol,
                    Box::new(move |s| {
                        let delta = s.point();
                        max_over(s, samples, |s| {
                            Ok(hd_identity_residual(r, &s.points(m), &s.points(n), &delta, &bracket)?.relative())
                        })
                    }),
                );
            }
            for r in 1..=order.min(3) {
                let bracket = plan.bracket(kind);
                plan.numeric(
                    format!("kernels/{kind}/duality/m={m},n={n}/r={r}"),
                    "duality-sum",
                    tol,
                    Box::new(move |s| {
                        let dp = s.retry(|s| DualityParams::random_balanced(m, n, bracket.clone(), s))?;
                        max_over(s, samples, |s| {
                            Ok(duality_sum_residual(r, &s.points(m), &s.points(n), &dp)?.relative())
                        })
                    }),
                );
            }
        }
    }
    for kernel in TrigKernel::ALL {
        for (m, n) in KERNEL_SHAPES {
            plan.numeric(
                format!("kernels/multiplicative/{}/m={m},n={n}", kernel.name()),
                "multiplicative-kernel",
                tol,
                Box::new(move |s| {
                    max_over(s, samples, |s| {
                        let (q, t) = (s.annulus(0.2, 0.6), s.point());
                        trig_kernel_residuals(kernel, &s.points(m), &s.points(n), &q, &t, order, precision)
                    })
                }),
            );
        }
    }
}

fn plan_kajihara(plan: &mut Plan) {
    let suite = Suite::Kajihara;
    let (tol, samples, order) = (plan.cfg.tolerance_for(suite), plan.cfg.samples_for(suite), plan.cfg.rmax);
    for m in 1..=3 {
        for n in 1..=2 {
            let variants: [(&str, Option<KajiharaPreset>); 4] = [
                ("general", None),
                ("dd", Some(KajiharaPreset::DD)),
                ("hh", Some(KajiharaPreset::HH)),
                ("hd", Some(KajiharaPreset::HD)),
            ];
            for (name, preset) in variants {
                plan.numeric(
                    format!("kajihara/{name}/m={m},n={n}"),
                    "kajihara-transformation",
                    tol,
                    Box::new(move |s| {
                        max_over(s, samples, |s| {
                            let (q, t) = (s.annulus(0.2, 0.6), s.point());
                            let (z, w) = (s.points(m), s.points(n));
                            let (a, b) = match preset {
                                Some(p) => p.parameters(m, n, &q, &t),
                                None => (s.points(m), s.points(n)),
                            };
                            kajihara_residual(order, &z, &w, &a, &b, &q)
                        })
                    }),
                );
            }
        }
    }
}

fn plan_macdonald(plan: &mut Plan) -> Result<(), ConfigError> {
    let cfg = plan.cfg;
    if cfg.n > MACDONALD_MAX_N {
        return Err(ConfigError(format!("macdonald suite supports n ≤ {MACDONALD_MAX_N}, got {}", cfg.n)));
    }
    let (lmax, order) = (cfg.lmax, cfg.rmax);
    for n in 1..=cfg.n {
        let parts = Partition::up_to(lmax as u32, n);
        let qt = cfg.qt.clone();
        let all = parts.clone();
        plan.exact(format!("macdonald/n={n}/separation"), "eigenvalue-separation", move || {
            Ok(eigenvalues_separated(&all, n, &qt))
        });
        for lambda in parts {
            let (qt, l1) = (cfg.qt.clone(), lambda.clone());
            plan.exact(format!("macdonald/n={n}/{lambda}/eigen-d"), "macdonald-eigen-d", move || {
                let p = macdonald_poly(&l1, n, &qt)?;
                for r in 0..=n {
                    if !d_eigen_holds(&p, &l1, r, &qt)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            });
            let (qt, l2) = (cfg.qt.clone(), lambda.clone());
            plan.exact(format!("macdonald/n={n}/{lambda}/eigen-h"), "macdonald-eigen-h", move || {
                let p = macdonald_poly(&l2, n, &qt)?;
                for l in 0..=lmax {
                    if !h_eigen_holds(&p, &l2, l, &qt)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            });
            let (qt, l3) = (cfg.qt.clone(), lambda.clone());
            plan.exact(format!("macdonald/n={n}/{lambda}/constructions"), "macdonald-two-constructions", move || {
                Ok(macdonald_poly(&l3, n, &qt)? == macdonald_poly_gram_schmidt(&l3, n, &qt)?)
            });
            let (qt, l4) = (cfg.qt.clone(), lambda.clone());
            plan.exact(format!("macdonald/n={n}/{lambda}/genfun"), "generating-function", move || {
                genfun_check(&l4, n, &qt, order)
            });
        }
        let qt = cfg.qt.clone();
        plan.exact(format!("macdonald/n={n}/one-row"), "one-row-generating-polynomial", move || {
            for l in 0..=lmax {
                if !g_matches_one_row(l, n, &qt)? {
                    return Ok(false);
                }
            }
            Ok(true)
        });
        let qt = cfg.qt.clone();
        plan.exact(format!("macdonald/n={n}/scalar-wronski"), "scalar-wronski-recurrence", move || {
            scalar_wronski_check(lmax, n, &qt)
        });
        let qt = cfg.qt.clone();
        plan.exact(format!("macdonald/n={n}/operator-wronski"), "multiplicative-wronski-recurrence", move || {
            operator_wronski_trig_check(lmax, n, &qt)
        });
    }
    let tol = cfg.tolerance.unwrap_or(BRIDGE_TOLERANCE);
    let samples = cfg.samples_for(Suite::Macdonald);
    let precision = cfg.precision;
    for n in 1..=cfg.n.min(3) {
        for (family, name) in [(BridgeFamily::D, "d"), (BridgeFamily::H, "h")] {
            for k in 1..=order {
                if family == BridgeFamily::D && k > n {
                    continue;
                }
                plan.numeric(
                    format!("macdonald/bridge/{name}/n={n}/order={k}"),
                    "normalization-bridge",
                    tol,
                    Box::new(move |s| {
                        max_over(s, samples, |s| {
                            let (x, delta, kappa) = (s.points(n), s.point(), s.point());
                            normalization_bridge_residual(family, k, &x, &delta, &kappa, BridgePrefactor::Derived, precision)
                        })
                    }),
                );
            }
        }
    }
    Ok(())
}

fn execute(check: Check) -> CheckRecord {
    let Check {
        id,
        anchor,
        tolerance,
        mut sampler,
        job,
    } = check;
    let start = Instant::now();
    let outcome = job(&mut sampler);
    let elapsed_seconds = format!("{:.3}", start.elapsed().as_secs_f64());
    let (kind, tol_text) = match tolerance {
        Tolerance::Relative(t) => ("numeric", format!("{t:e}")),
        Tolerance::Exact => ("exact", "exact".to_string()),
    };
    let mut record = CheckRecord {
        id,
        anchor: anchor.to_string(),
        kind: kind.to_string(),
        residual: "error".to_string(),
        tolerance: tol_text,
        samples: 0,
        elapsed_seconds,
        passed: false,
        error: None,
    };
    match (outcome, tolerance) {
        (Err(e), _) => record.error = Some(e.to_string()),
        (Ok(Outcome::Numeric { residual, samples }), Tolerance::Relative(t)) => {
            record.residual = format_float(&residual, 3);
            record.samples = samples;
            record.passed = residual < t;
        }
        (Ok(Outcome::Exact { holds }), _) => {
            record.residual = if holds { "exact" } else { "mismatch" }.to_string();
            record.passed = holds;
        }
        (Ok(Outcome::Numeric { .. }), Tolerance::Exact) => unreachable!("numeric outcome for an exact check"),
    }
    record
}

/// Run a suite and collect its report. The process-level exit status
/// should be nonzero iff the report did not pass.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<IdentityReport, ConfigError> {
    cfg.validate()?;
    let mut plan = Plan::new(cfg);
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::EACH.to_vec()
    } else {
        vec![suite]
    };
    for s in suites {
        match s {
            Suite::Hirota => plan_hirota(&mut plan),
            Suite::Commute => plan_commute(&mut plan),
            Suite::Wronski => plan_wronski(&mut plan),
            Suite::Expansions => plan_expansions(&mut plan),
            Suite::KeyIdentity => plan_key_identity(&mut plan),
            Suite::Kernels => plan_kernels(&mut plan),
            Suite::Kajihara => plan_kajihara(&mut plan),
            Suite::Macdonald => plan_macdonald(&mut plan)?,
            Suite::All => unreachable!(),
        }
    }
    let checks: Vec<CheckRecord> = plan.checks.into_par_iter().map(execute).collect();
    Ok(IdentityReport::new(suite.name(), cfg.record(), checks))
}
