//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::fs;
use std::time::{Duration, Instant};

use qdent::basis::{ho_eval, kinetic_matrix, BasisSpec};
use qdent::cli::{sweep_from_config, write_sweep_outputs};
use qdent::config::RunConfig;
use qdent::hamiltonian::interaction_tensor;
use qdent::oracle::{grid_solve, GridSpec, OracleOptions};
use qdent::potential::{quadrature_breaks, PotentialParams};
use qdent::quadrature::{integrate_piecewise, truncation_halfwidth, QuadSpec};
use qdent::sweep::{argmax_abs, evaluate_point, run_sweep, PointRecord, SweepRow};

mod common;
use common::kinetic_fd;

type Files = Vec<(String, Vec<u8>)>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Solve with default settings at one geometry, frequency from the default
/// rule at that geometry.
fn solve_default(params: PotentialParams, m: usize) -> PointRecord {
    let cfg = RunConfig {
        v0: params.v0,
        d: params.d,
        r: params.r,
        p: params.p,
        lambda: params.lambda,
        m,
        ..RunConfig::default()
    };
    evaluate_point(params, cfg.point_basis().unwrap(), &cfg.point_settings()).unwrap()
}

fn paper_geometry(r: f64, lambda: f64) -> PotentialParams {
    PotentialParams {
        v0: 10.0,
        d: 8.0,
        r,
        p: 200.0,
        lambda,
    }
}

/// Average ranks, ties sharing their mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spacing of the grid around index `i`.
fn local_step(xs: &[f64], i: usize) -> f64 {
    let left = if i > 0 { xs[i] - xs[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { f64::INFINITY };
    left.min(right)
}

fn row_at(rows: &[SweepRow], r: f64) -> &SweepRow {
    rows.iter().find(|row| (row.value - r).abs() < 1e-12).expect("grid point present")
}

fn non_interacting() -> Outcome {
    let mut worst_l = 0.0f64;
    let mut worst_top = 1.0f64;
    for r in [5.0, 10.0] {
        let rec = solve_default(paper_geometry(r, 0.0), 50);
        worst_l = worst_l.max(rec.linear_entropy);
        worst_top = worst_top.min(rec.occupations[0]);
    }
    outcome(
        worst_l < 1e-8 && worst_top > 1.0 - 1e-8,
        format!("max L = {worst_l:e}, min top occupation = {worst_top}"),
    )
}

fn bell_plateau() -> Outcome {
    let ls: Vec<f64> = [4.0, 5.0, 6.0, 7.0]
        .iter()
        .map(|&r| solve_default(paper_geometry(r, 1.0), 50).linear_entropy)
        .collect();
    let lo = ls.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        lo >= 0.45 && hi <= 0.5 && hi - lo < 0.02,
        format!("L over R = 4, 5, 6, 7: {ls:?}; spread {:e}", hi - lo),
    )
}

fn sharp_transition(rows: &[SweepRow]) -> Outcome {
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let dl: Vec<Option<f64>> = rows.iter().map(|r| r.dl).collect();
    let Some(i) = argmax_abs(&dl) else {
        return outcome(false, "no derivative samples".into());
    };
    if i == 0 || i + 1 >= rows.len() {
        return outcome(false, format!("max |dL/dR| at boundary R = {}", xs[i]));
    }
    let at = xs[i];
    let step = local_step(&xs, i);
    let near = (at - 8.0).abs() <= step + 1e-12;
    let (above, below) = (rows[i + 1].l(), rows[i - 1].l());
    outcome(
        near && above < 0.05 && below > 0.45,
        format!(
            "max |dL/dR| at R = {at} (step {step}); L({}) = {above}, L({}) = {below}",
            xs[i + 1],
            xs[i - 1]
        ),
    )
}

fn info_entropy_mimicry(rows: &[SweepRow]) -> Outcome {
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let dl: Vec<Option<f64>> = rows.iter().map(|r| r.dl).collect();
    let dsn: Vec<Option<f64>> = rows.iter().map(|r| r.dsn).collect();
    let (Some(il), Some(is)) = (argmax_abs(&dl), argmax_abs(&dsn)) else {
        return outcome(false, "no derivative samples".into());
    };
    let step = local_step(&xs, il);
    let coincide = (xs[il] - xs[is]).abs() <= step + 1e-12;

    // plateau: interior points whose whole stencil lies below R = 8
    let plateau: Vec<usize> = (1..rows.len() - 1).filter(|&k| xs[k + 1] < 8.0).collect();
    let max_dl = plateau.iter().map(|&k| dl[k].unwrap().abs()).fold(0.0, f64::max);
    let min_dsn = plateau.iter().map(|&k| dsn[k].unwrap().abs()).fold(f64::INFINITY, f64::min);
    outcome(
        coincide && !plateau.is_empty() && min_dsn > 10.0 * max_dl,
        format!(
            "max |dS_n/dR| at R = {}, max |dL/dR| at R = {}; for R < 8 min |dS_n/dR| = {min_dsn:e} vs max |dL/dR| = {max_dl:e}",
            xs[is], xs[il]
        ),
    )
}

fn inverse_correlation(rows: &[SweepRow]) -> Outcome {
    let l: Vec<f64> = rows.iter().map(SweepRow::l).collect();
    let u: Vec<f64> = rows.iter().map(SweepRow::u).collect();
    let rho = spearman(&l, &u);
    let umax = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u5 = row_at(rows, 5.0).u();
    outcome(
        rho <= -0.5 && u5 < 0.05 * umax,
        format!("Spearman(L, <U>) = {rho:.4}; <U>(5) = {u5:e}, max <U> = {umax:e}"),
    )
}

fn ratio_behavior(rows: &[SweepRow]) -> Outcome {
    let upper: Vec<&SweepRow> = rows.iter().filter(|r| r.value > 8.0 && r.ratio().is_finite()).collect();
    let l: Vec<f64> = upper.iter().map(|r| r.l()).collect();
    let q: Vec<f64> = upper.iter().map(|r| r.ratio()).collect();
    let rho = spearman(&l, &q);
    let (q5, q10) = (row_at(rows, 5.0).ratio(), row_at(rows, 10.0).ratio());
    outcome(
        rho > 0.0 && q5 <= q10,
        format!("Spearman(L, ratio | R > 8) = {rho:.4} over {} points; ratio(5) = {q5:e}, ratio(10) = {q10:e}", upper.len()),
    )
}

fn oracle_equivalence(solves: &mut Vec<PointRecord>) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [5.0, 7.5, 8.5, 10.0, 20.0] {
        let params = paper_geometry(r, 1.0);
        let main = solve_default(params, 50);
        let grid = GridSpec {
            n: 400,
            x: params.extent() + 4.0,
        };
        let reference = grid_solve(&params, &grid, &OracleOptions::default()).unwrap();
        let de = ((main.energy - reference.energy) / reference.energy).abs();
        let dl = (main.linear_entropy - reference.linear_entropy).abs();
        let du = ((main.u_exp - reference.coulomb) / reference.coulomb).abs();
        let ok = de < 1e-3 && dl < 2e-3 && du < 1e-3;
        pass &= ok;
        parts.push(format!(
            "R={r}: dE/E={de:.1e} dL={dl:.1e} dU/U={du:.1e} (U main {:.3e}, grid {:.3e}){}",
            main.u_exp,
            reference.coulomb,
            if ok { "" } else { " x" }
        ));
        solves.push(main);
    }
    outcome(pass, parts.join("; "))
}

fn analytic_checks(solves: &[PointRecord]) -> Outcome {
    let mut fails = Vec::new();

    let mut worst_i = 0.0f64;
    for omega in [0.05, 0.2, 1.0, 3.0] {
        let t = interaction_tensor(&BasisSpec::new(4, omega).unwrap());
        let want = (omega / (2.0 * std::f64::consts::PI)).sqrt();
        worst_i = worst_i.max((t.get(0, 0, 0, 0) - want).abs());
    }
    if worst_i >= 1e-13 {
        fails.push(format!("I_0000 off by {worst_i:e}"));
    }

    let mut worst_t = 0.0f64;
    for omega in [1.0, 0.3] {
        let t = kinetic_matrix(&BasisSpec::new(6, omega).unwrap());
        for m in 0..6 {
            for n in 0..6 {
                let ladder = if m == n {
                    0.5 * omega * (n as f64 + 0.5)
                } else if m + 2 == n || n + 2 == m {
                    let k = m.min(n) as f64;
                    -0.25 * omega * ((k + 1.0) * (k + 2.0)).sqrt()
                } else {
                    0.0
                };
                worst_t = worst_t.max((t[(m, n)] - ladder).abs());
                worst_t = worst_t.max((t[(m, n)] - kinetic_fd(m, n, omega)).abs());
            }
        }
    }
    if worst_t >= 1e-8 {
        fails.push(format!("kinetic entries off by {worst_t:e}"));
    }

    let worst_trace = solves
        .iter()
        .map(|s| (s.occupations.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    if worst_trace >= 1e-10 {
        fails.push(format!("occupation trace off by {worst_trace:e}"));
    }
    let worst_split = solves
        .iter()
        .map(|s| (s.energy - (s.t_exp + s.v_exp + s.u_exp)).abs())
        .fold(0.0, f64::max);
    if worst_split >= 1e-9 {
        fails.push(format!("E_0 - (T + V + U) = {worst_split:e}"));
    }

    let params = PotentialParams::default();
    let quad = QuadSpec::default();
    let basis = BasisSpec::new(30, 0.1).unwrap();
    let x = truncation_halfwidth(&basis, &params, &quad);
    let breaks = quadrature_breaks(&params);
    let mut worst_o = 0.0f64;
    for a in 0..30 {
        for b in a..30 {
            let s = integrate_piecewise(|t| ho_eval(a, 0.1, t) * ho_eval(b, 0.1, t), &breaks, x, &quad).unwrap();
            worst_o = worst_o.max((s - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    if worst_o >= 1e-10 {
        fails.push(format!("orthonormality off by {worst_o:e}"));
    }

    let detail = format!(
        "I_0000 {worst_i:.1e}, kinetic {worst_t:.1e}, trace {worst_trace:.1e} over {} solves, energy split {worst_split:.1e}, overlap {worst_o:.1e}",
        solves.len()
    );
    if fails.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", fails.join("; ")))
    }
}

fn main() {
    let start = Instant::now();
    let mut lines: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut timed = |n: usize, name: &'static str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let mut o = f();
        let dt = t0.elapsed();
        if dt > limit {
            o.pass = false;
            o.detail.push_str(&format!("; over the {} s budget", limit.as_secs()));
        }
        println!(
            "criterion {n} [{name}]: {} ({:.1} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            o.detail
        );
        lines.push((n, name, o, dt));
    };

    timed(1, "non-interacting limit", Duration::from_secs(10), &mut non_interacting);
    timed(2, "Bell plateau", Duration::from_secs(120), &mut bell_plateau);

    // one default sweep per worker count; the serial one feeds criteria 3 to 6
    let cfg = RunConfig::default();
    let sweep = sweep_from_config(&cfg).unwrap();
    let scratch = tempfile::tempdir().unwrap();
    let mut serial: Vec<SweepRow> = Vec::new();
    let mut outputs: Vec<(usize, Files)> = Vec::new();
    let mut sweep_time = Duration::ZERO;
    for workers in [1usize, 4, 8] {
        let t0 = Instant::now();
        let rows = run_sweep(&sweep, workers).unwrap();
        if workers == 1 {
            sweep_time = t0.elapsed();
        }
        let dir = scratch.path().join(format!("w{workers}"));
        write_sweep_outputs(&cfg, &sweep, &rows, &dir).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        outputs.push((workers, files));
        if workers == 1 {
            serial = rows;
        }
    }
    let failed_points = serial.iter().filter(|r| r.error.is_some()).count();

    timed(3, "sharp transition", Duration::from_secs(900).saturating_sub(sweep_time), &mut || {
        let mut o = sharp_transition(&serial);
        o.detail.push_str(&format!("; sweep {:.1} s, {failed_points} failed points", sweep_time.as_secs_f64()));
        o
    });
    timed(4, "S_n mimicry and divergence", Duration::from_secs(60), &mut || info_entropy_mimicry(&serial));
    timed(5, "inverse correlation", Duration::from_secs(60), &mut || inverse_correlation(&serial));
    timed(6, "ratio behavior", Duration::from_secs(60), &mut || ratio_behavior(&serial));

    let mut solves: Vec<PointRecord> = serial.iter().filter_map(|r| r.record.clone()).collect();
    timed(7, "oracle equivalence", Duration::from_secs(600), &mut || oracle_equivalence(&mut solves));
    for lambda in [0.0, 1.0] {
        for r in [4.0, 5.0, 6.0, 7.0, 10.0] {
            solves.push(solve_default(paper_geometry(r, lambda), 50));
        }
    }
    timed(8, "analytic micro-checks", Duration::from_secs(600), &mut || analytic_checks(&solves));
    timed(9, "determinism", Duration::from_secs(3600), &mut || {
        let reference = &outputs[0].1;
        let differing: Vec<String> = outputs[1..]
            .iter()
            .filter(|(_, files)| files != reference)
            .map(|(w, _)| w.to_string())
            .collect();
        let names: Vec<&str> = reference.iter().map(|(n, _)| n.as_str()).collect();
        outcome(
            differing.is_empty(),
            format!("files {names:?} compared for workers 1, 4, 8; differing worker counts: {differing:?}"),
        )
    });

    let passed = lines.iter().filter(|l| l.2.pass).count();
    println!("{passed}/{} criteria passed in {:.1} s", lines.len(), start.elapsed().as_secs_f64());
    if passed != lines.len() {
        std::process::exit(1);
    }
}
