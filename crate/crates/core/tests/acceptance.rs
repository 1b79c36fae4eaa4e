//! Acceptance gate: one PASS/FAIL line per criterion, with runtime limits.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use numetric::factorization::{central_controller, ncf};
use numetric::freqdomain::GridPoint;
use numetric::index::{
    average_winding, cd_index, homotopy_index_check, index_of, winding_number, IndexValue, ScalarFunction,
};
use numetric::linalg::{c, C64, ONE, ZERO};
use numetric::numetric::{
    certify_between, certify_robust, margin_between, metric_axiom_suite, normalize, nu_between, nu_distance,
    pointwise_identity_defect, stability_margin, Branch,
};
use numetric::plants::{random_plant, PlantBody, PlantModel, RationalEntry};
use numetric::symbolic::{CdElement, Element, ExpPoly, Laurent1, MultiLaurent, RationalY, RationalZ};
use numetric::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: every check must hold within the time limit.
struct Gate {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Gate {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }
}

fn run(id: usize, name: &str, limit: Duration, body: impl FnOnce(&mut Gate)) -> bool {
    let start = Instant::now();
    let mut gate = Gate::new();
    body(&mut gate);
    let elapsed = start.elapsed();
    gate.check(elapsed <= limit, || format!("runtime {elapsed:.2?} exceeds {limit:?}"));
    let ok = gate.failures.is_empty();
    println!(
        "[{id}] {} {name} ({:.2} s){}{}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        if gate.notes.is_empty() { String::new() } else { format!(": {}", gate.notes.join(", ")) },
        gate.failures.iter().take(5).map(|f| format!("\n      {f}")).collect::<String>(),
    );
    ok
}

fn scalar(num: &[f64], den: &[f64]) -> PlantModel {
    let v = |x: &[f64]| x.iter().map(|&r| c(r, 0.0)).collect();
    PlantModel::rational(vec![vec![RationalEntry { num: v(num), den: v(den) }]]).unwrap()
}

fn inv_z(k: f64) -> PlantModel {
    scalar(&[k], &[0.0, 1.0])
}

fn cfg() -> Config {
    Config::default()
}

// ---------------------------------------------------------------------------

fn closed_form_distances(g: &mut Gate) {
    let zero = PlantModel::constant(0.0);
    let mut worst: f64 = 0.0;
    for k in [0.5, 1.0, 2.0, 5.0] {
        let d = nu_distance(&zero, &PlantModel::constant(k), &cfg()).unwrap();
        let err = (d.value - k / (1.0 + k * k).sqrt()).abs();
        worst = worst.max(err);
        g.check(err <= 1e-6 && d.grid_size_used == 4096, || format!("k = {k}: {d:?}"));
    }
    g.note(format!("max error {worst:.1e}"));
}

fn degenerate_branch(g: &mut Gate) {
    let d = nu_distance(&PlantModel::constant(0.0), &inv_z(1.0), &cfg()).unwrap();
    g.check(d.value == 1.0 && d.branch == Branch::DegenerateOne, || format!("{d:?}"));
    g.note(format!("d = {}, index {:?}", d.value, d.index));
}

fn axiom_plants() -> (Vec<PlantModel>, Vec<PlantModel>) {
    let siso = (0..20).map(|i| random_plant(1, 1, i % 5, 100 + i as u64)).collect();
    let mimo = (0..10).map(|i| random_plant(2, 2, i % 4, 200 + i as u64)).collect();
    (siso, mimo)
}

fn metric_axioms(g: &mut Gate) {
    let (siso, mimo) = axiom_plants();
    for (label, plants) in [("SISO", siso), ("2x2", mimo)] {
        let r = metric_axiom_suite(&plants, &cfg(), 1e-7).unwrap();
        g.check(r.symmetry_worst <= 1e-7, || format!("{label} symmetry {:e}", r.symmetry_worst));
        g.check(r.triangle_worst_slack >= -1e-7, || {
            format!("{label} triangle slack {:e}", r.triangle_worst_slack)
        });
        g.check(r.identity_worst <= 1e-9, || format!("{label} d(P,P) {:e}", r.identity_worst));
        g.check(r.positivity_ok && r.range_ok, || format!("{label} positivity/range"));
        g.note(format!(
            "{label} sym {:.1e} tri {:.1e} id {:.1e}",
            r.symmetry_worst, r.triangle_worst_slack, r.identity_worst
        ));
    }
}

fn shape(i: usize) -> (usize, usize) {
    [(1, 1), (2, 2), (2, 1), (1, 2), (3, 2)][i % 5]
}

fn pointwise_identity(g: &mut Gate) {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (p, m) = shape(i);
        let a = normalize(&random_plant(p, m, i % 5, 300 + i as u64), &cfg()).unwrap();
        let b = normalize(&random_plant(p, m, (i + 2) % 6, 400 + i as u64), &cfg()).unwrap();
        let d = pointwise_identity_defect(&a, &b, &cfg()).unwrap();
        worst = worst.max(d);
        g.check(d <= 1e-8, || format!("pair {i}: defect {d:e}"));
    }
    g.note(format!("max defect {worst:.1e}"));
}

// ---------------------------------------------------------------------------
// scalar spectral-factorization oracle (cepstral method)

fn fft(a: &mut [C64], inverse: bool) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let w = C64::from_polar(1.0, sign * 2.0 * PI / len as f64);
        for start in (0..n).step_by(len) {
            let mut wk = ONE;
            for k in 0..len / 2 {
                let u = a[start + k];
                let v = a[start + k + len / 2] * wk;
                a[start + k] = u + v;
                a[start + k + len / 2] = u - v;
                wk *= w;
            }
        }
        len <<= 1;
    }
    if inverse {
        for v in a.iter_mut() {
            *v /= n as f64;
        }
    }
}

fn horner(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(ZERO, |acc, &k| acc * z + k)
}

/// `n/g`, `d/g` on `m` circle points, with `g` outer and `|g|^2 = |n|^2 + |d|^2`.
fn cepstral_ncf(num: &[C64], den: &[C64], m: usize) -> (Vec<C64>, Vec<C64>) {
    let z: Vec<C64> = (0..m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect();
    let (n, d): (Vec<C64>, Vec<C64>) = z.iter().map(|&z| (horner(num, z), horner(den, z))).unzip();
    let mut cep: Vec<C64> = n.iter().zip(&d).map(|(a, b)| c((a.norm_sqr() + b.norm_sqr()).ln(), 0.0)).collect();
    fft(&mut cep, false);
    for v in cep.iter_mut() {
        *v /= m as f64;
    }
    cep[0] *= 0.5;
    cep[m / 2] *= 0.5;
    for v in cep[m / 2 + 1..].iter_mut() {
        *v = ZERO;
    }
    fft(&mut cep, true);
    let log_g: Vec<C64> = cep.iter().map(|v| v * m as f64).collect();
    let g: Vec<C64> = log_g.iter().map(|l| l.exp()).collect();
    (
        n.iter().zip(&g).map(|(a, g)| a / g).collect(),
        d.iter().zip(&g).map(|(a, g)| a / g).collect(),
    )
}

fn ncf_quality(g: &mut Gate) {
    let mut worst: f64 = 0.0;
    for i in 0..100usize {
        let (p, m) = shape(i);
        let plant = random_plant(p, m, i % 9, 500 + i as u64);
        match ncf(&plant, &cfg()) {
            Ok(f) => {
                let r = f.residuals.unwrap();
                let all = [r.right, r.left, r.double, r.bezout.unwrap_or(f64::INFINITY)];
                let w = all.iter().copied().fold(0.0, f64::max);
                worst = worst.max(w);
                g.check(w <= 1e-8, || format!("plant {i} ({p}x{m}, order {}): {r:?}", i % 9));
            }
            Err(e) => g.check(false, || format!("plant {i}: {e}")),
        }
    }
    g.note(format!("max residual {worst:.1e}"));

    let m = 4096;
    let mut worst_oracle: f64 = 0.0;
    for i in 0..30usize {
        let plant = random_plant(1, 1, 1 + i % 6, 600 + i as u64);
        let PlantBody::Rational(entries) = plant.to_rational().unwrap().body else {
            unreachable!()
        };
        let (on, od) = cepstral_ncf(&entries[0][0].num, &entries[0][0].den, m);
        let f = ncf(&plant, &cfg()).unwrap();
        let pts: Vec<GridPoint> = (0..m)
            .map(|k| GridPoint::Circle {
                theta: 2.0 * PI * k as f64 / m as f64,
            })
            .collect();
        let ln: Vec<C64> = pts.iter().map(|p| f.n.eval(p).unwrap()[(0, 0)]).collect();
        let ld: Vec<C64> = pts.iter().map(|p| f.d.eval(p).unwrap()[(0, 0)]).collect();
        // factors agree up to a unimodular constant
        let s: C64 = (0..m).map(|k| on[k].conj() * ln[k] + od[k].conj() * ld[k]).sum();
        let u = s / s.norm();
        let err = (0..m)
            .map(|k| (ln[k] - u * on[k]).norm().max((ld[k] - u * od[k]).norm()))
            .fold(0.0, f64::max);
        worst_oracle = worst_oracle.max(err);
        g.check(err <= 1e-8, || format!("oracle case {i}: deviation {err:e}"));
    }
    g.note(format!("oracle deviation {worst_oracle:.1e}"));
}

// ---------------------------------------------------------------------------

fn margin_formulas(g: &mut Gate) {
    let m1 = stability_margin(&PlantModel::constant(1.0), &PlantModel::constant(0.0), &cfg()).unwrap();
    g.check((m1.mu - 1.0 / SQRT_2).abs() <= 1e-6, || format!("mu(1, 0) = {}", m1.mu));
    let m2 = stability_margin(&inv_z(1.0), &PlantModel::constant(2.0), &cfg()).unwrap();
    g.check((m2.mu - 1.0 / 10f64.sqrt()).abs() <= 1e-6, || format!("mu(1/z, 2) = {}", m2.mu));
    let (mut worst_dual, mut worst_sym): (f64, f64) = (0.0, 0.0);
    for i in 0..30usize {
        let (p, m) = shape(i);
        let plant = random_plant(p, m, i % 6, 700 + i as u64);
        let ctrl = central_controller(&plant).unwrap();
        let (np, nc) = (normalize(&plant, &cfg()).unwrap(), normalize(&ctrl, &cfg()).unwrap());
        let r = margin_between(&np, &nc, &cfg()).unwrap();
        let back = margin_between(&nc, &np, &cfg()).unwrap();
        g.check(r.stabilizes, || format!("pair {i}: central controller does not stabilize"));
        let dual = (r.mu * r.h_norm.unwrap_or(f64::NAN) - 1.0).abs();
        let sym = (r.mu - back.mu).abs();
        worst_dual = worst_dual.max(dual);
        worst_sym = worst_sym.max(sym);
        g.check(dual <= 1e-6, || format!("pair {i}: mu ||H|| - 1 = {dual:e}"));
        g.check(sym <= 1e-8, || format!("pair {i}: |mu(P,C) - mu(C,P)| = {sym:e}"));
    }
    g.note(format!("mu(1,0) {:.6}, mu(1/z,2) {:.6}, duality {worst_dual:.1e}, symmetry {worst_sym:.1e}", m1.mu, m2.mu));
}

fn certified_triples(count: usize, cfg: &Config) -> Vec<numetric::numetric::RobustCertificate> {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut out = Vec::new();
    let mut i = 0u64;
    while out.len() < count && i < 10 * count as u64 {
        let (p, m) = shape(i as usize);
        let p0 = random_plant(p, m, (i % 5) as usize, 800 + i);
        i += 1;
        let ctrl = central_controller(&p0).unwrap();
        let (n0, nc) = (normalize(&p0, cfg).unwrap(), normalize(&ctrl, cfg).unwrap());
        let mut delta: f64 = rng.random_range(-0.3..0.3);
        for _ in 0..6 {
            let n1 = normalize(&p0.scaled(1.0 + delta).unwrap(), cfg).unwrap();
            let r = certify_between(&n0, &nc, &n1, cfg).unwrap();
            if r.certified {
                out.push(r);
                break;
            }
            delta *= 0.5;
        }
    }
    out
}

fn certificate(g: &mut Gate) {
    let r = certify_robust(&inv_z(1.0), &PlantModel::constant(2.0), &inv_z(1.1), &cfg()).unwrap();
    let mu0 = 1.0 / 10f64.sqrt();
    let dnu = 0.1 / (2.0 * 2.21f64).sqrt();
    let mu1 = 1.2 / (2.21f64 * 5.0).sqrt();
    let predicted = (mu0.asin() - dnu.asin()).sin();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-5;
    g.check(close(r.mu0, mu0) && close(r.dnu, dnu), || format!("{r:?}"));
    g.check(close(r.predicted_margin_lower_bound, predicted), || format!("{r:?}"));
    g.check(r.actual_mu1.is_some_and(|m| close(m, mu1) && m >= predicted), || format!("{r:?}"));
    g.check(r.certified, || "closed-form triple not certified".into());
    g.note(format!(
        "dnu {:.6} mu0 {:.6} mu1 {:.6} bound {:.6}",
        r.dnu,
        r.mu0,
        r.actual_mu1.unwrap_or(f64::NAN),
        r.predicted_margin_lower_bound
    ));
    let triples = certified_triples(50, &cfg());
    g.check(triples.len() == 50, || format!("only {} certified triples", triples.len()));
    let (mut arc, mut cor) = (f64::INFINITY, f64::INFINITY);
    for t in &triples {
        let mu1 = t.actual_mu1.unwrap_or(f64::NAN);
        arc = arc.min(mu1.asin() - (t.mu0.asin() - t.dnu.asin()));
        cor = cor.min(mu1 - (t.mu0 - t.dnu));
    }
    g.check(arc >= -1e-7, || format!("arcsin slack {arc:e}"));
    g.check(cor >= -1e-7, || format!("corollary slack {cor:e}"));
    g.note(format!("{} random triples, min slacks {arc:.1e} / {cor:.1e}", triples.len()));
}

// ---------------------------------------------------------------------------
// index laws

fn unit(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

fn off_circle(rng: &mut ChaCha8Rng) -> C64 {
    let r = if rng.random_bool(0.5) {
        rng.random_range(0.1..0.75)
    } else {
        rng.random_range(1.35..3.0)
    };
    unit(rng) * r
}

fn expand(roots: &[C64], lead: C64) -> Vec<C64> {
    let mut p = vec![lead];
    for r in roots {
        let mut q = vec![ZERO; p.len() + 1];
        for (k, a) in p.iter().enumerate() {
            q[k + 1] += a;
            q[k] -= a * r;
        }
        p = q;
    }
    p
}

/// Random invertible rational function with its winding number.
fn random_disk(rng: &mut ChaCha8Rng) -> (RationalZ, i64) {
    let zeros: Vec<C64> = (0..rng.random_range(0..4)).map(|_| off_circle(rng)).collect();
    let poles: Vec<C64> = (0..rng.random_range(0..4)).map(|_| off_circle(rng)).collect();
    let low = rng.random_range(-3..=3);
    let inside = |v: &[C64]| v.iter().filter(|r| r.norm() < 1.0).count() as i64;
    let lead = unit(rng) * rng.random_range(0.5..2.0);
    let f = RationalZ {
        num: Laurent1 {
            low,
            coeffs: expand(&zeros, lead),
        },
        den: Laurent1::poly(expand(&poles, ONE)),
    };
    (f, low as i64 + inside(&zeros) - inside(&poles))
}

/// Dominant lattice term plus smaller ones; returns the element, the index
/// and a lower bound of its modulus.
fn random_ap(rng: &mut ChaCha8Rng, h: f64) -> (ExpPoly, f64, f64) {
    let k0 = rng.random_range(-4..=4) as f64;
    let c0 = rng.random_range(1.0..2.0);
    let mut terms = vec![(k0 * h, unit(rng) * c0)];
    let mut rest = 0.0;
    for _ in 0..rng.random_range(0..4) {
        let a = rng.random_range(0.0..0.2) * c0;
        rest += a;
        terms.push((rng.random_range(-5..=5) as f64 * h, unit(rng) * a));
    }
    (ExpPoly::new(terms), k0 * h, c0 - rest)
}

fn random_poly(rng: &mut ChaCha8Rng, arity: usize) -> (MultiLaurent, i64, f64) {
    let alpha: Vec<i32> = (0..arity).map(|_| rng.random_range(-2..=2)).collect();
    let c0 = rng.random_range(1.0..2.0);
    let mut terms = vec![(alpha.clone(), unit(rng) * c0)];
    let mut rest = 0.0;
    for _ in 0..rng.random_range(0..4) {
        let a = rng.random_range(0.0..0.2) * c0;
        rest += a;
        terms.push(((0..arity).map(|_| rng.random_range(-2..=2)).collect(), unit(rng) * a));
    }
    let total = alpha.iter().map(|&a| a as i64).sum();
    (MultiLaurent::new(arity, terms).unwrap(), total, c0 - rest)
}

/// Additivity, involution-negation, local constancy and the oracle value
/// for one family of scalars.
fn index_family(g: &mut Gate, label: &str, items: Vec<(ScalarFunction, IndexValue, ScalarFunction)>) {
    let cfg = cfg();
    let tol = 1e-9;
    let idx = |f: &ScalarFunction| index_of(f, &cfg);
    for (i, (f, expected, nearby)) in items.iter().enumerate() {
        match idx(f) {
            Ok(v) => {
                g.check(v.approx_eq(expected, tol), || format!("{label} {i}: index {v}, expected {expected}"));
                let neg = idx(&f.conj().unwrap());
                g.check(neg.as_ref().is_ok_and(|n| n.approx_eq(&v.neg(), tol)), || {
                    format!("{label} {i}: involution gives {neg:?} for {v}")
                });
                let near = idx(nearby);
                g.check(near.as_ref().is_ok_and(|n| n.approx_eq(&v, tol)), || {
                    format!("{label} {i}: perturbation gives {near:?} for {v}")
                });
                let (h, _, _) = &items[(i + 1) % items.len()];
                let sum = idx(&f.mul(h).unwrap());
                let want = idx(h).and_then(|w| v.add(&w));
                g.check(
                    matches!((&sum, &want), (Ok(s), Ok(w)) if s.approx_eq(w, tol)),
                    || format!("{label} {i}: index of product {sum:?}, sum {want:?}"),
                );
            }
            Err(e) => g.check(false, || format!("{label} {i}: {e}")),
        }
    }
}

fn index_laws(g: &mut Gate) {
    let cfg = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(88);

    let disk = (0..50)
        .map(|_| {
            let (f, w) = random_disk(&mut rng);
            let sf = ScalarFunction::disk(f.clone());
            let eps = 0.25 * sf.invertibility(&cfg).unwrap().min_modulus;
            let near = ScalarFunction::disk(f.add(&RationalZ::constant(unit(&mut rng) * eps)));
            (sf, IndexValue::Int(w), near)
        })
        .collect();
    index_family(g, "disk", disk);

    let h = 0.5;
    let ap = (0..50)
        .map(|_| {
            let (f, lambda, floor) = random_ap(&mut rng, h);
            let near = f.add(&ExpPoly::constant(unit(&mut rng) * 0.25 * floor));
            (ScalarFunction::ap(f), IndexValue::Real(lambda), ScalarFunction::ap(near))
        })
        .collect();
    index_family(g, "ap", ap);

    let cd = (0..50)
        .map(|_| {
            let (f, lambda, floor) = random_ap(&mut rng, h);
            let alpha = unit(&mut rng) * 0.25 * floor;
            let r = RationalY::from_laplace(&[alpha], &[ONE, c(rng.random_range(0.5..2.0), 0.0)]);
            let e = CdElement::new(f, vec![(rng.random_range(0.0..1.0), r)]);
            let near = e.add(&CdElement::constant(unit(&mut rng) * 0.1 * floor));
            (ScalarFunction::cd(e), IndexValue::RealInt(lambda, 0), ScalarFunction::cd(near))
        })
        .collect();
    index_family(g, "cd", cd);

    let poly = (0..50)
        .map(|_| {
            let (f, total, floor) = random_poly(&mut rng, 2);
            let near = f.add(&MultiLaurent::constant(unit(&mut rng) * 0.25 * floor));
            (ScalarFunction::polydisk(f), IndexValue::Int(total), ScalarFunction::polydisk(near))
        })
        .collect();
    index_family(g, "polydisk", poly);

    // nonzero relative winding of the L1 correction
    let w = CdElement::new(ExpPoly::one(), vec![(0.0, RationalY::from_laplace(&[c(-3.0, 0.0)], &[ONE, ONE]))]);
    let wi = cd_index(&ScalarFunction::cd(w.clone()), &cfg).unwrap();
    g.check(wi.winding.abs() == 1, || format!("relative winding {}", wi.winding));
    let (f, lambda, _) = random_ap(&mut rng, h);
    let prod = ScalarFunction::cd(CdElement::new(f, vec![]).mul(&w));
    let pi = cd_index(&prod, &cfg).unwrap();
    g.check(pi.winding == wi.winding && (pi.average.value - lambda).abs() <= 1e-9, || {
        format!("product index ({}, {})", pi.average.value, pi.winding)
    });

    for n in -9i32..=9 {
        let zn = ScalarFunction::disk(RationalZ {
            num: Laurent1 { low: n, coeffs: vec![ONE] },
            den: Laurent1::poly(vec![ONE]),
        });
        for grid in [16, 4096] {
            let w = winding_number(&zn, &cfg.clone().with_grid(grid));
            g.check(w.as_ref().is_ok_and(|&w| w == n as i64), || format!("z^{n} on {grid} points: {w:?}"));
        }
    }

    let mut worst_lattice: f64 = 0.0;
    for _ in 0..20 {
        let (f, _) = random_disk(&mut rng);
        let (lp, wz) = (f.num.clone(), winding_number(&ScalarFunction::disk(RationalZ {
            num: f.num.clone(),
            den: Laurent1::poly(vec![ONE]),
        }), &cfg)
        .unwrap());
        let h = rng.random_range(0.2..2.0);
        let e = ExpPoly::new(lp.coeffs.iter().enumerate().map(|(k, &a)| (h * (lp.low + k as i32) as f64, a)));
        let avg = average_winding(&ScalarFunction::ap(e), &cfg).unwrap();
        let err = (avg.value - h * wz as f64).abs();
        worst_lattice = worst_lattice.max(err);
        g.check(err <= 1e-9, || format!("lattice h = {h}: {} vs {}", avg.value, h * wz as f64));
    }

    for _ in 0..20 {
        let lambda = rng.random_range(-5.0..5.0);
        let e = CdElement::new(ExpPoly::new([(lambda, unit(&mut rng) * 1.5)]), vec![]);
        let i = cd_index(&ScalarFunction::cd(e), &cfg).unwrap();
        g.check(i.average.value == lambda && i.winding == 0, || {
            format!("pure exponential {lambda}: ({}, {})", i.average.value, i.winding)
        });
    }

    for _ in 0..20 {
        let arity = rng.random_range(2..=4);
        let alpha: Vec<i32> = (0..arity).map(|_| rng.random_range(-4..=4)).collect();
        let total: i64 = alpha.iter().map(|&a| a as i64).sum();
        let m = MultiLaurent::new(arity, [(alpha.clone(), unit(&mut rng))]).unwrap();
        let i = index_of(&ScalarFunction::polydisk(m), &cfg);
        g.check(i.as_ref().is_ok_and(|v| *v == IndexValue::Int(total)), || {
            format!("monomial {alpha:?}: {i:?}")
        });
    }

    for k in 0..20 {
        let (r0, r1) = (rng.random_range(0.0..0.9), rng.random_range(0.0..0.9));
        let (p0, p1) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
        let low = rng.random_range(-3..=3);
        let ok = if k % 2 == 0 {
            homotopy_index_check(
                |t| {
                    let a = C64::from_polar(r0 + (r1 - r0) * t, p0 + (p1 - p0) * t);
                    Ok(ScalarFunction::disk(RationalZ {
                        num: Laurent1 { low, coeffs: vec![ONE, a] },
                        den: Laurent1::poly(vec![ONE]),
                    }))
                },
                10,
                &cfg,
            )
        } else {
            homotopy_index_check(
                |t| {
                    let a = C64::from_polar(r0 + (r1 - r0) * t, p0 + (p1 - p0) * t);
                    Ok(ScalarFunction::ap(ExpPoly::new([(low as f64 * 0.5, ONE), ((low + 1) as f64 * 0.5, a)])))
                },
                10,
                &cfg,
            )
        };
        g.check(ok.as_ref().is_ok_and(|&b| b), || format!("homotopy path {k}: {ok:?}"));
    }
    g.note(format!("lattice deviation {worst_lattice:.1e}"));
}

// ---------------------------------------------------------------------------

fn determinism(g: &mut Gate) {
    let (siso, mimo) = axiom_plants();
    let reports = |parallel: bool| -> String {
        let cfg = cfg().with_parallel(parallel);
        let mut out = String::new();
        for plants in [&siso, &mimo] {
            out += &serde_json::to_string(&metric_axiom_suite(plants, &cfg, 1e-7).unwrap()).unwrap();
        }
        let closed = certify_robust(&inv_z(1.0), &PlantModel::constant(2.0), &inv_z(1.1), &cfg).unwrap();
        out += &serde_json::to_string(&closed).unwrap();
        out += &serde_json::to_string(&certified_triples(10, &cfg)).unwrap();
        out
    };
    let first = reports(false);
    let again = reports(false);
    let parallel = reports(true);
    g.check(first == again, || "repeated sequential runs differ".into());
    g.check(first == parallel, || "parallel output differs from sequential".into());
    let d = nu_between(
        &normalize(&siso[3], &cfg()).unwrap(),
        &normalize(&siso[4], &cfg().with_parallel(true)).unwrap(),
        &cfg().with_parallel(true),
    )
    .unwrap();
    let s = nu_between(&normalize(&siso[3], &cfg()).unwrap(), &normalize(&siso[4], &cfg()).unwrap(), &cfg()).unwrap();
    g.check(d == s, || format!("{d:?} vs {s:?}"));
    g.note(format!("{} bytes compared", first.len()));
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run(1, "closed-form distances d(0, k)", secs(1), closed_form_distances),
        run(2, "degenerate branch d(0, 1/z) = 1", secs(1), degenerate_branch),
        run(3, "metric axioms on random plants", secs(120), metric_axioms),
        run(4, "pointwise identity smin^2 + smax^2 = 1", secs(60), pointwise_identity),
        run(5, "normalized coprime factor quality", secs(120), ncf_quality),
        run(6, "stability margin formulas", secs(60), margin_formulas),
        run(7, "robust stabilization certificate", secs(180), certificate),
        run(8, "index laws", secs(60), index_laws),
        run(9, "determinism with and without parallel", secs(600), determinism),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
