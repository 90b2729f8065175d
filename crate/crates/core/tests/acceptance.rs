//! Exit criteria, run sequentially with one `PASS`/`FAIL` line each. The
//! process exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fvs::assembly::{assemble_load_weak, assemble_stiffness, solve, CoefficientField, Form, LinearSystem};
use fvs::element::{constraint_count, continuity_constraints, dof_count, dof_functionals};
use fvs::mesh::{generate_fvs_grid, split_macro};
use fvs::poly::{dim, Triangle, TrianglePolynomial};
use fvs::space::{apply_clamped_bc, Discretization, Family};
use fvs::study::{run_study, ErrorReport, ManufacturedSolution, StudyConfig};
use fvs::verify::{split_triangle_check, unisolvency_sweep};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA: f64 = 0.625;

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);

fn study(k: usize, family: Family, mu0: f64, lo: usize, hi: usize) -> ErrorReport {
    run_study(&StudyConfig { k, family, mu0, grids: lo..=hi, alpha: ALPHA }).unwrap()
}

fn orders_line(r: &ErrorReport) -> String {
    r.rows
        .iter()
        .filter_map(|row| row.orders.map(|o| format!("g{}:{:.2}/{:.2}/{:.2}", row.level, o[0], o[1], o[2])))
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_1_counting_identities() -> Outcome {
    let cell = split_macro([[0.0, 0.0], [1.0, 0.1], [0.9, 1.1], [0.1, 0.8]]).unwrap();
    let expected = [16, 28, 44, 64];
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, &n) in (3..=6).zip(&expected) {
        let dofs = dof_functionals(k, &cell).unwrap().len();
        let cons = continuity_constraints(k, &cell).unwrap().len();
        pass &= dof_count(k) == n && dofs == n && cons == constraint_count(k) && cons == 8 * k && dofs + cons == 4 * dim(k);
        detail.push(format!("k={k}: N={dofs} Ne={cons} 4dimP={}", 4 * dim(k)));
    }
    (pass, detail.join(", "))
}

fn criterion_2_unisolvency_and_automatic_c1() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for k in 3..=5 {
        let s = unisolvency_sweep(k, 200, 42);
        pass &= s.failures.is_empty()
            && s.max_residual < 1e-10
            && s.max_duality_error < 1e-10
            && s.max_c1_jump < 1e-9
            && s.max_skipped_jump < 1e-9;
        detail.push(format!(
            "k={k}: {} failures, residual {:.1e}, duality {:.1e}, jump {:.1e} (skipped {:.1e}), cond <= {:.1e}",
            s.failures.len(),
            s.max_residual,
            s.max_duality_error,
            s.max_c1_jump,
            s.max_skipped_jump,
            s.max_condition
        ));
    }
    (pass, detail.join("; "))
}

fn criterion_3_split_triangle_vanishing() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k in 3..=6 {
        for m in 1..=k - 2 {
            let r = split_triangle_check(k, m, 50, 7).unwrap();
            pass &= r.min_nullity > 0 && r.passed(1e-9);
            worst = worst.max(r.max_violation);
            cases += 1;
        }
    }
    let detail = format!("{cases} (k, m) pairs x 50 configs, max scaled violation {worst:.1e} (< 1e-9)");
    (pass, detail)
}

fn criterion_4_polynomial_reproduction() -> Outcome {
    let mesh = generate_fvs_grid(2, ALPHA).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 3..=5 {
        for family in [Family::Full, Family::Condensed] {
            let d = Discretization::new(mesh.clone(), k, family).unwrap();
            for _ in 0..10 {
                let c = (0..dim(k)).map(|_| rng.random_range(-1.0..1.0)).collect();
                let q = TrianglePolynomial::new(Triangle::reference(), k, c);
                let u = d.interpolate(&q);
                for _ in 0..100 {
                    let p = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
                    worst = worst.max((d.evaluate(&u, p).unwrap() - q.evaluate(p)).abs());
                }
            }
        }
    }
    let detail = format!("k=3..5, both families, max pointwise error {worst:.1e} (< 1e-9)");
    (worst < 1e-9, detail)
}

/// Reference errors (k = 3, full family), grids 3..=6: L², H¹, energy.
const REFERENCE_ERRORS: [[f64; 3]; 4] =
    [[0.466e-6, 0.487e-5, 0.219e-3], [0.312e-7, 0.583e-6, 0.563e-4], [0.197e-8, 0.754e-7, 0.147e-4], [0.123e-9, 0.976e-8, 0.380e-5]];
/// Printed orders for grids 4..=6.
const REFERENCE_ORDERS: [[f64; 3]; 3] = [[3.9, 3.1, 2.0], [4.0, 2.9, 1.9], [4.0, 2.9, 2.0]];

fn criterion_5_p3_convergence_table() -> Outcome {
    let one = study(3, Family::Full, 1.0, 3, 6);
    let ten = study(3, Family::Full, 10.0, 3, 6);
    let mut pass = true;
    let mut worst_ratio: f64 = 1.0;
    for (row, want) in one.rows.iter().zip(&REFERENCE_ERRORS) {
        for (e, w) in row.errors.as_array().iter().zip(want) {
            let ratio = (e / w).max(w / e);
            worst_ratio = worst_ratio.max(ratio);
            pass &= ratio <= 3.0;
        }
    }
    let mut worst_order: f64 = 0.0;
    let mut worst_mu_gap: f64 = 0.0;
    for ((a, b), want) in one.rows[1..].iter().zip(&ten.rows[1..]).zip(&REFERENCE_ORDERS) {
        let (oa, ob) = (a.orders.unwrap(), b.orders.unwrap());
        for i in 0..3 {
            worst_order = worst_order.max((oa[i] - want[i]).abs()).max((ob[i] - want[i]).abs());
            worst_mu_gap = worst_mu_gap.max((oa[i] - ob[i]).abs());
        }
    }
    pass &= worst_order <= 0.4 && worst_mu_gap <= 0.1;
    let last = one.rows.last().unwrap().errors;
    let detail = format!(
        "mu0=1 orders {}; mu0=10 orders {}; max order deviation {worst_order:.2} (<= 0.4), mu0 order gap {worst_mu_gap:.3} (<= 0.1), \
         worst magnitude ratio {worst_ratio:.2} (<= 3), grid 6 L2 {:.3e}",
        orders_line(&one),
        orders_line(&ten),
        last.l2
    );
    (pass, detail)
}

fn criterion_6_p4_p5_convergence() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, hi, want) in [(4, 5, [5.0, 4.0, 3.0]), (5, 4, [5.9, 4.9, 3.9])] {
        for mu0 in [1.0, 10.0] {
            let r = study(k, Family::Full, mu0, 2, hi);
            let o = r.final_orders().unwrap();
            let dev = (0..3).map(|i| (o[i] - want[i]).abs()).fold(0.0, f64::max);
            pass &= dev <= 0.4;
            detail.push(format!("k={k} mu0={mu0}: final {:.2}/{:.2}/{:.2} (dev {dev:.2})", o[0], o[1], o[2]));
        }
    }
    (pass, detail.join("; "))
}

fn criterion_7_condensed_family_contrast() -> Outcome {
    let mut detail = Vec::new();
    // Smooth case: condensed errors below full errors at every common grid.
    let mut smaller = true;
    for (k, hi) in [(4, 4), (5, 3)] {
        let full = study(k, Family::Full, 1.0, 2, hi);
        let cond = study(k, Family::Condensed, 1.0, 2, hi);
        for (f, c) in full.rows.iter().zip(&cond.rows) {
            let ratios: Vec<f64> = c.errors.as_array().iter().zip(f.errors.as_array()).map(|(a, b)| a / b).collect();
            smaller &= ratios.iter().all(|&r| r < 1.0);
            detail.push(format!("k={k} g{} V2/V1 {:.3}/{:.3}/{:.3}", f.level, ratios[0], ratios[1], ratios[2]));
        }
    }
    // Interface case: condensed energy order collapses, full stays optimal.
    let mut collapse = true;
    let mut optimal = true;
    for (k, hi_full, want) in [(4, 5, [5.0, 4.0, 3.0]), (5, 4, [5.9, 4.9, 3.9])] {
        let cond = study(k, Family::Condensed, 10.0, 2, 5);
        let e = cond.final_orders().unwrap()[2];
        collapse &= e < 0.6;
        let full = study(k, Family::Full, 10.0, 2, hi_full);
        let o = full.final_orders().unwrap();
        optimal &= (0..3).all(|i| (o[i] - want[i]).abs() <= 0.4);
        detail.push(format!("k={k} mu0=10 V2 energy orders {} | V1 final {:.2}/{:.2}/{:.2}", orders_line(&cond), o[0], o[1], o[2]));
    }
    let summary = format!("V2 < V1 at mu0=1: {smaller}; V2 energy order < 0.6 at mu0=10: {collapse}; V1 optimal at mu0=10: {optimal}");
    let detail = format!("{summary}; {}", detail.join("; "));
    (smaller && collapse && optimal, detail)
}

fn energy_gap(sys: &LinearSystem, a: &[f64], b: &[f64]) -> f64 {
    let (fa, fb) = (sys.partition.restrict(a), sys.partition.restrict(b));
    let e: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x - y).collect();
    let energy = |v: &[f64]| v.iter().zip(sys.matrix.mul_vec(v)).map(|(x, y)| x * y).sum::<f64>().sqrt();
    energy(&e) / energy(&fa)
}

fn criterion_8_form_equivalence() -> Outcome {
    let mu = CoefficientField::uniform(1.0);
    let exact = ManufacturedSolution::new(1.0);
    let mut worst_matrix: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    for (k, family) in [(3, Family::Full), (4, Family::Full), (4, Family::Condensed), (5, Family::Full)] {
        let d = Discretization::new(generate_fvs_grid(3, ALPHA).unwrap(), k, family).unwrap();
        let p = apply_clamped_bc(&d.table);
        let rhs = assemble_load_weak(&d, &p, &exact, &mu).unwrap();
        let hess = assemble_stiffness(&d, &p, &mu, Form::Hessian).unwrap();
        let lap = assemble_stiffness(&d, &p, &mu, Form::Laplacian).unwrap();
        let scale = hess.max_abs();
        for i in 0..hess.dim() {
            for (j, v) in hess.row(i) {
                worst_matrix = worst_matrix.max((v - lap.get(i, j)).abs() / scale);
            }
            for (j, v) in lap.row(i) {
                worst_matrix = worst_matrix.max((v - hess.get(i, j)).abs() / scale);
            }
        }
        let sh = LinearSystem { matrix: hess, rhs: rhs.clone(), partition: p.clone() };
        let sl = LinearSystem { matrix: lap, rhs, partition: p };
        let (uh, _) = solve(&sh).unwrap();
        let (ul, _) = solve(&sl).unwrap();
        worst_energy = worst_energy.max(energy_gap(&sh, &uh, &ul));
    }
    let detail = format!("max relative matrix difference {worst_matrix:.1e}, relative energy gap {worst_energy:.1e} (both < 1e-10)");
    (worst_matrix < 1e-10 && worst_energy < 1e-10, detail)
}

type Criterion = (u32, &'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    (1, "counting identities", 1, criterion_1_counting_identities),
    (2, "unisolvency and automatic C1 on 200 random quads per k", 60, criterion_2_unisolvency_and_automatic_c1),
    (3, "tangential derivative vanishing on split triangles", 60, criterion_3_split_triangle_vanishing),
    (4, "P_k reproduction on grid 2", 30, criterion_4_polynomial_reproduction),
    (5, "C1-P3 full family, grids 3-6", 120, criterion_5_p3_convergence_table),
    (6, "C1-P4 and C1-P5 full family final orders", 300, criterion_6_p4_p5_convergence),
    (7, "condensed vs full family", 300, criterion_7_condensed_family_contrast),
    (8, "Hessian and Laplacian forms agree", 30, criterion_8_form_equivalence),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, limit, run) in CRITERIA {
        let tag = format!("criterion_{id}");
        if !filter.is_empty() && !filter.iter().any(|f| tag.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let (pass, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = started.elapsed();
        let ok = pass && elapsed <= Duration::from_secs(limit);
        failed += usize::from(!ok);
        println!(
            "criterion {id} {}: {name}: {detail} [{:.1}s, limit {limit}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
