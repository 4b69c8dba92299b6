//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dtq::harness::{time_method, DEFAULT_H_LADDER};
use dtq::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let out = Outcome {
        name,
        pass,
        detail: format!("{} [{:.1}s]", detail, start.elapsed().as_secs_f64()),
    };
    println!(
        "{} {}: {}",
        if out.pass { "PASS" } else { "FAIL" },
        out.name,
        out.detail
    );
    out
}

fn rel_l1(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    let scale: f64 = b.iter().map(|y| y.abs()).sum();
    diff / scale
}

fn main() -> ExitCode {
    let opts = SolveOptions::default();
    let mut recorded: Vec<ErrorReport> = Vec::new();
    let mut outcomes = Vec::new();

    outcomes.push(check("first-order DTQ convergence, ex1-ex6", || {
        let mut pass = true;
        let mut parts = Vec::new();
        for p in builtin_problems() {
            let table = run_convergence(&p, &DEFAULT_H_LADDER, Method::DtqSparse, &opts)?;
            let slope = table.slopes.map(|s| s.l1).unwrap_or(f64::NAN);
            let ok = (0.8..=1.2).contains(&slope);
            pass &= ok;
            parts.push(format!(
                "{}={slope:.3}{}",
                p.name(),
                if ok { "" } else { "(out)" }
            ));
            recorded.extend(table.rows);
        }
        Ok((
            pass,
            format!("L1 slopes in [0.8, 1.2]: {}", parts.join(" ")),
        ))
    }));

    outcomes.push(check("normalization, ex1 h=0.01", || {
        let p = problem_by_name("ex1")?;
        let d = solve(&p, Method::DtqSparse, 0.01, &opts)?;
        let defect = d.normalization_defect();
        Ok((defect <= 1e-3, format!("defect {defect:.3e} <= 1e-3")))
    }));

    outcomes.push(check("dense/banded equivalence", || {
        let mut worst = (0.0f64, String::new());
        let mut fails = Vec::new();
        for p in builtin_problems() {
            for h in [0.5, 0.1, 0.05] {
                let grid = opts.grid(&p, h)?;
                let dense = evolve_on_grid(&p, &grid, AssemblyMode::DenseSerial, DEFAULT_DROP_TOL)?;
                let banded = evolve_on_grid(&p, &grid, AssemblyMode::Banded, DEFAULT_DROP_TOL)?;
                let r = rel_l1(banded.values(), dense.values());
                let tag = format!("{} h={h}", p.name());
                if r.is_nan() || r > 1e-10 {
                    fails.push(format!("{tag}: {r:.2e}"));
                }
                if r.is_nan() || r > worst.0 {
                    worst = (r, tag);
                }
            }
        }
        let detail = if fails.is_empty() {
            format!("worst relative l1 {:.2e} ({}) <= 1e-10", worst.0, worst.1)
        } else {
            format!("relative l1 > 1e-10 for {}", fails.join(", "))
        };
        Ok((fails.is_empty(), detail))
    }));

    outcomes.push(check("parallel determinism, ex1 h=0.05", || {
        let p = problem_by_name("ex1")?;
        let grid = opts.grid(&p, 0.05)?;
        let serial = assemble_dense(&grid, &p, false)?;
        let parallel = assemble_dense(&grid, &p, true)?;
        let same_matrix = serial
            .to_dense()
            .iter()
            .zip(parallel.to_dense())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        let ds = evolve_on_grid(&p, &grid, AssemblyMode::DenseSerial, DEFAULT_DROP_TOL)?;
        let dp = evolve_on_grid(&p, &grid, AssemblyMode::DenseParallel, DEFAULT_DROP_TOL)?;
        let same_density = ds
            .values()
            .iter()
            .zip(dp.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        Ok((
            same_matrix && same_density,
            format!(
                "matrix bitwise equal: {same_matrix}, final density bitwise equal: {same_density}"
            ),
        ))
    }));

    outcomes.push(check("kernel integral, ex1 and ex4", || {
        let mut rng = StdRng::seed_from_u64(20_240_611);
        let h = 0.01;
        let mut worst = 0.0f64;
        for name in ["ex1", "ex4"] {
            let p = problem_by_name(name)?;
            for _ in 0..100 {
                let y: f64 = rng.gen_range(-3.0..=3.0);
                let mean = y + p.drift(y) * h;
                let sd = p.diffusion(y).abs() * h.sqrt();
                let n = 20_000;
                let (lo, hi) = (mean - 12.0 * sd, mean + 12.0 * sd);
                let dx = (hi - lo) / n as f64;
                let mut sum = 0.0;
                for i in 0..=n {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    sum += w * gaussian_kernel(lo + i as f64 * dx, y, h, &p)?;
                }
                worst = worst.max((sum * dx - 1.0).abs());
            }
        }
        Ok((
            worst <= 1e-8,
            format!("max |integral - 1| = {worst:.2e} <= 1e-8 over 200 samples"),
        ))
    }));

    outcomes.push(check("FP subtraction exactness", || {
        let heat = SdeProblem::new("heat", |_| 0.0, |_| 1.0);
        let mut worst = 0.0f64;
        for h in [0.1, 0.05] {
            let grid = select_grid(h, 1.0, 0.75, 1.0, DomainRule::PolynomialPi)?;
            for scheme in [FpScheme::PrecomputedPropagator, FpScheme::Factored] {
                let d = fp_solve_with(&heat, &grid, 1.0, scheme)?;
                for (x, v) in grid.nodes().zip(d.values()) {
                    worst = worst.max((v - heat_kernel_u(x, grid.horizon(), 1.0)).abs());
                }
            }
        }
        Ok((
            worst <= 1e-12,
            format!("max abs deviation {worst:.2e} <= 1e-12"),
        ))
    }));

    outcomes.push(check("FP first order, ex1", || {
        let p = problem_by_name("ex1")?;
        let table = run_convergence(&p, &[0.2, 0.1, 0.05, 0.02, 0.01], Method::Fp, &opts)?;
        let slope = table.slopes.map(|s| s.l1).unwrap_or(f64::NAN);
        recorded.extend(table.rows);
        Ok((
            (0.7..=1.3).contains(&slope),
            format!("L1 slope {slope:.3} in [0.7, 1.3]"),
        ))
    }));

    outcomes.push(check("benchmark ordering, ex1 poly", || {
        let p = problem_by_name("ex1")?;
        let fine = opts.grid(&p, 0.01)?;
        let naive = time_method(&p, Method::DtqNaive, &fine, &opts, 3)?;
        let sparse = time_method(&p, Method::DtqSparse, &fine, &opts, 3)?;
        let fp = time_method(&p, Method::Fp, &fine, &opts, 3)?;
        let factored_opts = SolveOptions { fp_scheme: FpScheme::Factored, ..opts };
        let factored = time_method(&p, Method::Fp, &fine, &factored_opts, 3)?;
        println!(
            "INFO fp with factored scheme at h=0.01: {:.3e}s (dtq-sparse {:.3e}s)",
            factored.wall_seconds, sparse.wall_seconds
        );
        let l1s = [naive.report.l1, sparse.report.l1, fp.report.l1];
        let spread = l1s.iter().cloned().fold(0.0, f64::max) / l1s.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("INFO L1 errors at h=0.01: naive {:.3e} sparse {:.3e} fp {:.3e} (ratio {spread:.2})", l1s[0], l1s[1], l1s[2]);

        // Microsecond solves: warm up, then alternate blocks so that clock
        // drift on a shared machine hits both methods alike.
        let coarse = opts.grid(&p, 0.5)?;
        let (blocks, per_block) = (40, 1_000);
        time_method(&p, Method::DtqNaive, &coarse, &opts, per_block)?;
        time_method(&p, Method::DtqSparse, &coarse, &opts, per_block)?;
        let mut naive_c = time_method(&p, Method::DtqNaive, &coarse, &opts, per_block)?;
        let mut sparse_c = time_method(&p, Method::DtqSparse, &coarse, &opts, per_block)?;
        for _ in 1..blocks {
            naive_c.wall_seconds += time_method(&p, Method::DtqNaive, &coarse, &opts, per_block)?.wall_seconds;
            sparse_c.wall_seconds += time_method(&p, Method::DtqSparse, &coarse, &opts, per_block)?.wall_seconds;
        }
        for r in [&mut naive_c, &mut sparse_c] {
            r.wall_seconds /= blocks as f64;
            r.repetitions = blocks * per_block;
        }

        let a = sparse.wall_seconds < naive.wall_seconds;
        let b = naive_c.wall_seconds <= sparse_c.wall_seconds;
        let c = sparse.wall_seconds < fp.wall_seconds;
        let detail = format!(
            "h=0.01 sparse {:.3e}s < naive {:.3e}s: {a}; h=0.5 naive {:.3e}s <= sparse {:.3e}s: {b}; h=0.01 sparse < fp {:.3e}s: {c}",
            sparse.wall_seconds, naive.wall_seconds, naive_c.wall_seconds, sparse_c.wall_seconds, fp.wall_seconds
        );
        recorded.extend([naive, sparse, fp, factored, naive_c, sparse_c].into_iter().map(|r| r.report));
        Ok((a && b && c, detail))
    }));

    outcomes.push(check("domain-doubling stability, ex1 h=0.05", || {
        let p = problem_by_name("ex1")?;
        let grid = opts.grid(&p, 0.05)?;
        let wide = grid.doubled();
        let base = evolve_on_grid(&p, &grid, AssemblyMode::DenseSerial, DEFAULT_DROP_TOL)?;
        let big = evolve_on_grid(&p, &wide, AssemblyMode::DenseSerial, DEFAULT_DROP_TOL)?;
        let offset = wide.half_width() - grid.half_width();
        let shared = &big.values()[offset..offset + grid.len()];
        let r = rel_l1(shared, base.values());
        Ok((
            r <= 1e-8,
            format!(
                "M {} -> {}, relative l1 on shared nodes {r:.2e} <= 1e-8",
                grid.half_width(),
                wide.half_width()
            ),
        ))
    }));

    // Runs after everything else so it covers every recorded report.
    outcomes.push(check("norm ordering on every recorded run", || {
        let mut bad = Vec::new();
        for r in &recorded {
            let slack = 1e-12 * r.l1;
            let ks_ok = r.ks <= r.l1 + slack;
            let linf_ok = r.linf <= r.l1 / r.grid.k() + slack / r.grid.k();
            if !(ks_ok && linf_ok) {
                bad.push(format!("{} h={}", r.problem, r.h()));
            }
        }
        let detail = if bad.is_empty() {
            format!("ks <= l1 and linf <= l1/k on {} runs", recorded.len())
        } else {
            format!("violated on {}", bad.join(", "))
        };
        Ok((bad.is_empty(), detail))
    }));

    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        outcomes.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
