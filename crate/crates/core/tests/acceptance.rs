//! Acceptance criteria, one test per criterion. Every test writes a single
//! `criterion NN ... PASS|FAIL` line straight to stderr (bypassing the
//! harness capture) before asserting.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use rand::Rng;

use common::*;
use schrokato::domination::{
    check_diamagnetic_bottom, check_domain_monotonicity, check_kato_simon, check_lq_bounds, check_positivity, kato_simon_violation,
    lattice_domain_monotonicity,
};
use schrokato::geometry::{ModelSpace, Point};
use schrokato::kato::{dynkin_functional, form_bound_check, resolvent_functional, Potential};
use schrokato::kernels::{check_control_pair, make_control_pair, make_kernel, ControlVariant, KernelHandle};
use schrokato::lattice::{BundleData, GaugeField, PotentialField, SchrodingerOperator, WeightedGraph};
use schrokato::semigroup::{fit_slope, resolvent_power, spectrum_bottom, sum_semigroup, trotter_convergence, weighted_operator_norm, Exponent};
use schrokato::stochastics::{fk_covariant, fk_scalar, JumpChain, Observable, PathSource, Start};

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:02} {name}: {status} ({detail})");
}

fn vertex(v: usize) -> Point {
    Point(vec![v as f64])
}

#[test]
fn criterion_01_euclidean_kernel_exactness() {
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    for m in 1..=3 {
        let k = make_kernel(&ModelSpace::euclidean(m).unwrap()).unwrap();
        for _ in 0..1000 {
            let t = 10f64.powf(rng.random_range(-2.0..1.0));
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            let exact = (2.0 * PI * t).powf(-(m as f64) / 2.0) * (-d2 / (2.0 * t)).exp();
            let got = k.eval(t, &Point(x), &Point(y)).unwrap();
            if exact > 0.0 {
                worst = worst.max((got - exact).abs() / exact);
            } else {
                worst = worst.max(got.abs());
            }
        }
    }
    let pass = worst <= 1e-14;
    report(1, "euclidean kernel exactness", pass, &format!("max relative error {worst:.3e} over 3000 samples"));
    assert!(pass);
}

#[test]
fn criterion_02_hyperbolic_kernel() {
    let space = ModelSpace::hyperbolic(3).unwrap();
    let k = make_kernel(&space).unwrap();
    let x = space.base_point();
    let mass_err = [0.1, 1.0, 10.0].iter().map(|&t| (k.mass(t, &x).unwrap() - 1.0).abs()).fold(0.0, f64::max);
    let t = 50.0;
    let p = k.eval(t, &x, &x).unwrap();
    let rate = -p.ln() / t;
    let rate_err = (rate - 0.5).abs() / 0.5;
    // −log p(t, x, x) = t/2 + (3/2) log(2πt) exactly; the second term is the
    // only obstruction to the literal 1% band at t = 50
    let identity = (-p.ln() - (t / 2.0 + 1.5 * (2.0 * PI * t).ln())).abs() / (-p.ln());
    let bottom = schrokato::kernels::spectral_bottom_of(&space);
    let literal = mass_err <= 1e-6 && rate_err <= 0.01;
    report(
        2,
        "hyperbolic kernel",
        literal,
        &format!(
            "mass error {mass_err:.2e}; -log p(50,x,x)/50 = {rate:.6} is {:.1}% from 1/2 (the (3/2)log(2πt)/t prefactor term is {:.4}); \
             rate identity residual {identity:.1e}; bottom {bottom}",
            100.0 * rate_err,
            1.5 * (2.0 * PI * t).ln() / t
        ),
    );
    // The literal rate band is unattainable at t = 50 (see decisions ledger);
    // the attainable parts are asserted.
    assert!(mass_err <= 1e-6);
    assert!(identity <= 1e-12);
    assert_eq!(bottom, 0.5);
}

#[test]
fn criterion_03_chapman_kolmogorov() {
    let grid = [0.25, 0.5, 1.0];
    let mut worst_cont = 0.0f64;
    for space in [ModelSpace::euclidean(1).unwrap(), ModelSpace::euclidean(2).unwrap(), ModelSpace::hyperbolic(3).unwrap()] {
        let k = make_kernel(&space).unwrap();
        let m = space.dim();
        let x = space.base_point();
        let mut yc = x.0.clone();
        yc[0] += 0.7;
        if m > 1 {
            yc[m - 1] *= 1.3;
        }
        let y = Point(yc);
        for &s in &grid {
            for &t in &grid {
                worst_cont = worst_cont.max(k.ck_residual(s, t, &x, &y).unwrap().abs());
                worst_cont = worst_cont.max(k.ck_residual(s, t, &x, &x).unwrap().abs());
            }
        }
    }
    let mut worst_lat = 0.0f64;
    for seed in 0..3 {
        let g = random_graph(10, 300 + seed);
        let w = random_w(10, 1.0, seed);
        let op = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
        let k = KernelHandle::lattice(op).unwrap();
        for &s in &grid {
            for &t in &grid {
                for (a, b) in [(0, 0), (0, 5), (3, 9)] {
                    worst_lat = worst_lat.max(k.ck_residual(s, t, &vertex(a), &vertex(b)).unwrap().abs());
                }
            }
        }
    }
    let pass = worst_cont <= 1e-6 && worst_lat <= 1e-12;
    report(3, "chapman-kolmogorov", pass, &format!("continuum {worst_cont:.2e}, lattice {worst_lat:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_04_domain_monotonicity() {
    let full = make_kernel(&ModelSpace::euclidean(1).unwrap()).unwrap();
    let dir = make_kernel(&ModelSpace::interval(PI).unwrap()).unwrap();
    let pts: Vec<f64> = (1..=30).map(|i| PI * i as f64 / 31.0).collect();
    let mut grid = Vec::new();
    for &t in &[0.01, 0.1, 0.5, 1.0, 2.0] {
        for &x in &pts {
            for &y in &pts {
                grid.push((t, Point(vec![x]), Point(vec![y])));
            }
        }
    }
    let cont = check_domain_monotonicity(&full, &dir, &grid).unwrap();
    let mut lat_worst = f64::NEG_INFINITY;
    let mut lat_pass = true;
    for seed in 0..5 {
        let g = random_graph(12, 400 + seed);
        let w = random_w(12, 1.0, seed);
        let op = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
        let mask: Vec<usize> = (0..12).filter(|v| v % 4 != 0).collect();
        let masked = SchrodingerOperator::scalar(&g, Some(&w), Some(&mask)).unwrap();
        for t in [0.1, 1.0, 5.0] {
            let v = lattice_domain_monotonicity(&op, &masked, t).unwrap();
            lat_worst = lat_worst.max(v.max_violation);
            lat_pass &= v.max_violation <= 1e-12;
        }
    }
    let pass = cont.max_violation <= 1e-8 && lat_pass;
    report(4, "domain monotonicity", pass, &format!("continuum violation {:.2e}, lattice {lat_worst:.2e}", cont.max_violation));
    assert!(pass);
}

/// `(1 − e^{−rt}) Ĉ_r ≤ D̂(t) ≤ e^{rt} Ĉ_r` at relative tolerance `1e-8`;
/// returns the worst relative excess.
fn sandwich(k: &KernelHandle, w: &Potential, probes: &[Point]) -> f64 {
    let rs = [0.5, 1.0, 2.0, 5.0, 10.0];
    let ts = [0.01, 0.05, 0.1, 0.5, 1.0];
    let cs: Vec<f64> = rs.iter().map(|&r| resolvent_functional(k, w, r, probes).unwrap().value).collect();
    let ds: Vec<f64> = ts.iter().map(|&t| dynkin_functional(k, w, t, probes).unwrap().value).collect();
    let mut worst = f64::NEG_INFINITY;
    for (r, cr) in rs.iter().zip(&cs) {
        for (t, d) in ts.iter().zip(&ds) {
            let lower = -(-r * t).exp_m1() * cr;
            let upper = (r * t).exp() * cr;
            worst = worst.max((lower - d) / d).max((d - upper) / upper);
        }
    }
    worst
}

#[test]
fn criterion_05_kato_functionals() {
    let space = ModelSpace::euclidean(3).unwrap();
    let k = make_kernel(&space).unwrap();
    let origin = [Point::origin(3)];
    let coulomb = Potential::coulomb(3);
    let mut worst_d = 0.0f64;
    for t in [0.01, 0.1, 1.0] {
        let d = dynkin_functional(&k, &coulomb, t, &origin).unwrap().value;
        let exact = 2.0 * (2.0 * t / PI).sqrt();
        worst_d = worst_d.max((d - exact).abs() / exact);
    }
    let s_const = sandwich(&k, &Potential::Constant { c: 1.5 }, &origin);
    let s_coul = sandwich(&k, &coulomb, &origin);
    let g = random_graph(12, 500);
    let lk = KernelHandle::lattice(SchrodingerOperator::scalar(&g, None, None).unwrap()).unwrap();
    let lw = Potential::Vertex { values: random_w(12, 3.0, 500) };
    let probes: Vec<Point> = (0..12).map(vertex).collect();
    let s_lat = sandwich(&lk, &lw, &probes);
    let worst_s = s_const.max(s_coul).max(s_lat);
    let pass = worst_d <= 1e-3 && worst_s <= 1e-8;
    report(
        5,
        "kato functionals",
        pass,
        &format!("coulomb D relative error {worst_d:.2e}; sandwich excess constant {s_const:.2e}, coulomb {s_coul:.2e}, lattice {s_lat:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_khasminskii() {
    let n = 12;
    let g = WeightedGraph::path(n).unwrap();
    let mask: Vec<usize> = (1..n - 1).collect();
    let raw = random_w(n, 1.0, 600);
    let op = SchrodingerOperator::scalar(&g, None, Some(&mask)).unwrap();
    let k = KernelHandle::lattice(op).unwrap();
    let probes: Vec<Point> = mask.iter().map(|&v| vertex(v)).collect();
    let d0 = dynkin_functional(&k, &Potential::Vertex { values: raw.clone() }, 0.25, &probes).unwrap().value;
    let w: Vec<f64> = raw.iter().map(|x| x * 0.5 / d0).collect();
    let d = dynkin_functional(&k, &Potential::Vertex { values: w.clone() }, 0.25, &probes).unwrap().value;
    let neg: Vec<f64> = w.iter().map(|x| -x).collect();
    let chain = JumpChain::new(&g, Some(&mask)).unwrap();
    let mut pass = (d - 0.5).abs() <= 1e-12;
    let mut detail = format!("D(w, 0.25) = {d:.12}");
    for t in [0.5, 1.0, 2.0] {
        let bound = 2.0 * (4.0 * 2f64.ln() * t).exp();
        let mut sup = (f64::NEG_INFINITY, 0.0);
        for &v in &mask {
            let e = fk_scalar(
                PathSource::Lattice(&chain),
                Observable::Vertex(&neg),
                Observable::Constant(1.0),
                t,
                &Start::Vertex(v),
                100_000,
                6000 + v as u64,
            )
            .unwrap();
            pass &= e.value <= bound * (1.0 + 3.0 * e.standard_error / e.value);
            if e.value > sup.0 {
                sup = (e.value, e.standard_error);
            }
        }
        detail += &format!("; t={t}: sup {:.4} ± {:.4} vs bound {bound:.4}", sup.0, sup.1);
    }
    report(6, "khasminskii", pass, &detail);
    assert!(pass);
}

#[test]
fn criterion_07_form_bound() {
    let mut worst = f64::NEG_INFINITY;
    let mut ratio_ok = true;
    for seed in 0..10 {
        let n = 6 + seed as usize;
        let g = random_graph(n, 700 + seed);
        let w: Vec<f64> = random_w(n, 4.0, 700 + seed).iter().enumerate().map(|(i, x)| if i % 3 == 0 { -x } else { *x }).collect();
        let mut r = rng(770 + seed);
        for rate in [0.5, 2.0] {
            let rep = form_bound_check(&g, &w, rate, 50, &mut r).unwrap();
            worst = worst.max(rep.max_violation);
            ratio_ok &= rep.worst_ratio <= rep.c_r * (1.0 + 1e-10);
        }
    }
    let pass = worst <= 1e-10 && ratio_ok;
    report(7, "form bound", pass, &format!("max violation {worst:.2e} over 1020 sections on 10 graphs"));
    assert!(pass);
}

#[test]
fn criterion_08_feynman_kac_oracle() {
    let t = 0.7;
    let n_paths = 100_000;
    let mut worst_sigma = 0.0f64;
    for inst in 0..10u64 {
        let n = 6 + (inst as usize % 3) * 5;
        let g = random_graph(n, 800 + inst);
        let chain = JumpChain::new(&g, None).unwrap();
        let w = random_w(n, 1.5, 800 + inst);
        let x0 = inst as usize % n;
        if inst < 5 {
            let f = random_w(n, 2.0, 810 + inst);
            let op = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
            let exact = (op.heat_matrix(t).unwrap() * real_section(&f))[x0].re;
            let e =
                fk_scalar(PathSource::Lattice(&chain), Observable::Vertex(&w), Observable::Vertex(&f), t, &Start::Vertex(x0), n_paths, 8000 + inst)
                    .unwrap();
            worst_sigma = worst_sigma.max((e.value - exact).abs() / e.standard_error);
        } else {
            let rank = 2;
            let b = random_bundle(&g, rank, 800 + inst);
            let v = dominating_field(&w, rank, 0.5, 800 + inst);
            let op = SchrodingerOperator::assemble(&g, &b, Some(&v), None).unwrap();
            let f = random_section(n * rank, 820 + inst);
            let exact = op.heat_matrix(t).unwrap() * &f;
            let e = fk_covariant(&chain, &b, &v, &f, t, x0, n_paths, 8000 + inst).unwrap();
            for a in 0..rank {
                worst_sigma = worst_sigma.max((e.value[a] - exact[x0 * rank + a]).norm() / e.standard_error[a]);
            }
        }
    }
    // standard error against path count on one instance
    let g = random_graph(8, 880);
    let chain = JumpChain::new(&g, None).unwrap();
    let w = random_w(8, 1.5, 880);
    let counts = [1_000usize, 10_000, 100_000];
    let ses: Vec<f64> = counts
        .iter()
        .map(|&m| {
            fk_scalar(PathSource::Lattice(&chain), Observable::Vertex(&w), Observable::Constant(1.0), t, &Start::Vertex(0), m, 888)
                .unwrap()
                .standard_error
        })
        .collect();
    let xs: Vec<f64> = counts.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = ses.iter().map(|s| s.ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let pass = worst_sigma <= 3.0 && (slope + 0.5).abs() <= 0.05;
    report(8, "feynman-kac oracle", pass, &format!("worst deviation {worst_sigma:.2} standard errors; stderr exponent {slope:.4}"));
    assert!(pass);
}

#[test]
fn criterion_09_kato_simon_diamagnetic() {
    let mut worst = f64::NEG_INFINITY;
    let mut bottoms_ok = true;
    for inst in 0..100u64 {
        let n = 4 + (inst as usize % 7);
        let rank = 1 + (inst as usize % 3);
        let (op_v, op_w) = domination_pair(n, rank, 900 + inst);
        let t = [0.1, 1.0, 3.0][inst as usize % 3];
        let v = check_kato_simon(&op_v, &op_w, t, 10, inst).unwrap();
        worst = worst.max(v.max_violation);
        bottoms_ok &= check_diamagnetic_bottom(&op_v, &op_w).unwrap().verdict.pass;
    }
    let g = WeightedGraph::cycle(4).unwrap();
    let b = BundleData::attach(&g, 1, GaugeField::U1Angles(vec![PI / 4.0; 4])).unwrap();
    let op = SchrodingerOperator::assemble(&g, &b, None, None).unwrap();
    let bottom = spectrum_bottom(&op).unwrap().value;
    let flux_err = (bottom - (1.0 - FRAC_1_SQRT_2)).abs();
    // negative controls: V = w − 1/2 breaks V ≥ w
    let mut detected = 0;
    for inst in 0..10u64 {
        let g = random_graph(6, 990 + inst);
        let w = random_w(6, 1.0, inst);
        let lowered: Vec<f64> = w.iter().map(|x| x - 0.5).collect();
        let op_v = SchrodingerOperator::assemble(&g, &random_bundle(&g, 2, inst), Some(&PotentialField::scalar(&lowered, 2).unwrap()), None).unwrap();
        let op_w = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
        let rejected = check_kato_simon(&op_v, &op_w, 1.0, 10, inst).is_err();
        let violated = kato_simon_violation(&op_v, &op_w, 1.0, 10, inst).unwrap() > 1e-6;
        if rejected && violated {
            detected += 1;
        }
    }
    let pass = worst <= 1e-10 && bottoms_ok && flux_err <= 1e-12 && detected == 10;
    report(
        9,
        "kato-simon and diamagnetic",
        pass,
        &format!("max violation {worst:.2e} over 100 instances; flux-pi bottom error {flux_err:.1e}; {detected}/10 negative controls detected"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_lq_suite() {
    let mut worst_norm = 0.0f64;
    let mut worst_slack = f64::INFINITY;
    for inst in 0..20u64 {
        let n = 5 + inst as usize % 8;
        let g = random_graph(n, 1000 + inst);
        let w = random_w(n, 2.0, 1000 + inst);
        let op = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
        let t = [0.2, 1.0, 4.0][inst as usize % 3];
        let heat = op.heat_matrix(t).unwrap();
        let mut r = rng(inst);
        for q in [Exponent::ONE, Exponent::TWO, Exponent::INF] {
            worst_norm = worst_norm.max(weighted_operator_norm(&heat, g.mu(), 1, None, q, q, 50, &mut r).value);
        }
        let u: Vec<usize> = (0..n).step_by(2).collect();
        for (q1, q2) in [(Exponent::ONE, Exponent::INF), (Exponent::ONE, Exponent::TWO), (Exponent::TWO, Exponent::INF)] {
            let chk = check_lq_bounds(&op, t, Some(&u), q1, q2, 50, inst).unwrap();
            worst_slack = worst_slack.min(chk.slack);
        }
    }
    let pass = worst_norm <= 1.0 + 1e-10 && worst_slack >= -1e-10;
    report(10, "lq suite", pass, &format!("max contraction norm {worst_norm:.12}; min localized slack {worst_slack:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_11_positivity() {
    let mut all = true;
    let mut min_entry = f64::INFINITY;
    for inst in 0..20u64 {
        let n = 4 + inst as usize % 9;
        let g = random_graph(n, 1100 + inst);
        let w = random_w(n, 2.0, 1100 + inst);
        let op = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
        let rep = check_positivity(&op, 0.5).unwrap();
        min_entry = min_entry.min(rep.min_entry);
        all &= rep.verdict.pass && rep.ground_sign_definite && rep.min_entry > 0.0;
    }
    report(11, "positivity", all, &format!("smallest kernel entry {min_entry:.3e} on 20 graphs"));
    assert!(all);
}

#[test]
fn criterion_12_trotter() {
    let steps: Vec<usize> = (3..=8).map(|k| 1usize << k).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut limit_ok = true;
    for inst in 0..5u64 {
        let (op, _) = domination_pair(6 + inst as usize, 1 + inst as usize % 2, 1200 + inst);
        let f = random_section(op.dim(), 1200 + inst);
        let (a, b) = (op.kinetic_only().unwrap(), op.potential_only().unwrap());
        let rep = trotter_convergence(&a, &b, 1.0, &f, &steps).unwrap();
        for r in &rep.ratios {
            lo = lo.min(*r);
            hi = hi.max(*r);
        }
        // the limit is the semigroup of the full operator
        let exact = op.heat_matrix(1.0).unwrap() * &f;
        let sum = sum_semigroup(&a, &b, 1.0, &f).unwrap();
        limit_ok &= op.norm(&(sum - &exact)) <= 1e-12 * op.norm(&exact);
        limit_ok &= rep.errors.windows(2).all(|e| e[1] < e[0]);
    }
    let pass = lo >= 1.7 && hi <= 2.3 && limit_ok;
    report(12, "trotter", pass, &format!("error ratios in [{lo:.4}, {hi:.4}] for n = 8..256 on 5 instances"));
    assert!(pass);
}

#[test]
fn criterion_13_resolvent() {
    let mut worst = 0.0f64;
    for inst in 0..10u64 {
        let (op, _) = domination_pair(5 + inst as usize % 6, 1 + inst as usize % 2, 1300 + inst);
        let f = random_section(op.dim(), 1300 + inst);
        let lambda = spectrum_bottom(&op).unwrap().value - 0.5 - inst as f64 * 0.2;
        for b in [0.5, 1.0, 2.0] {
            worst = worst.max(resolvent_power(&op, lambda, b, &f).unwrap().residual);
        }
    }
    let pass = worst <= 1e-8;
    report(13, "resolvent", pass, &format!("max relative residual {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_14_control_pairs() {
    let times: Vec<f64> = (0..25).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 24.0)).collect();
    let mut uc_worst = f64::NEG_INFINITY;
    let mut finite = true;
    for m in 1..=3 {
        let space = ModelSpace::euclidean(m).unwrap();
        let k = make_kernel(&space).unwrap();
        let mut pair = make_control_pair(&space, ControlVariant::Ultracontractive { c: (2.0 * PI).powf(-(m as f64) / 2.0), t_cap: None }).unwrap();
        for q in [2.0, 3.0, 5.0] {
            finite &= pair.declare_admissible(q, 1.0).unwrap().finite;
        }
        let pts = [Point::origin(m), Point(vec![1.5; m])];
        let chk = check_control_pair(&k, &pair, &pts, &times).unwrap();
        finite &= chk.integrability.len() == 3 && chk.integrability.iter().all(|r| r.finite);
        let scale = (2.0 * PI * times[0]).powf(-(m as f64) / 2.0);
        uc_worst = uc_worst.max(chk.max_violation / scale);
    }
    let space = ModelSpace::hyperbolic(3).unwrap();
    let k = make_kernel(&space).unwrap();
    let mut pair = make_control_pair(&space, ControlVariant::LiYau { k: 1.0, delta1: 1.0, delta2: 1.0, c: 1.0, lambda0: 0.5 }).unwrap();
    for q in [2.0, 3.0] {
        finite &= pair.declare_admissible(q, 1.0).unwrap().finite;
    }
    let cal_times: Vec<f64> = (0..41).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 40.0)).collect();
    let held_times: Vec<f64> = (0..40).map(|i| 10f64.powf(-2.0 + 4.0 * (i as f64 + 0.5) / 40.0)).collect();
    let x = [space.base_point()];
    let cal = check_control_pair(&k, &pair, &x, &cal_times).unwrap().calibrated_c;
    let calibrated = pair.with_constant(cal);
    let held_pts = [space.base_point(), Point(vec![0.3, -0.2, 2.5])];
    let held = check_control_pair(&k, &calibrated, &held_pts, &held_times).unwrap();
    // exact equality up to rounding in the ultracontractive case
    let pass = uc_worst <= 4.0 * f64::EPSILON && held.max_violation <= 0.0 && finite;
    report(
        14,
        "control pairs",
        pass,
        &format!(
            "ultracontractive relative violation {uc_worst:.1e}; calibrated Li-Yau constant {cal:.6}, held-out violation {:.3e}; integrability finite: {finite}",
            held.max_violation
        ),
    );
    assert!(pass);
}
