//! Command implementations: verification suite, classical solves, operator
//! dumps, VQA runs, cascades and observable extraction.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crackq::ansatz::{build_ansatz, fidelity, optimize_coordinate, zero_base, CostContext, CostKind};
use crackq::decomp::{
    build_operator, dirichlet_projector_terms, expectation_grouped, measurement_groups, term_count,
};
use crackq::fem::{
    apply_dirichlet_dense, assemble_k, bc_projector_matrix, classical_observables, classical_solve,
    solve_problem,
};
use crackq::observables::{observable_report, CodIndex, ObservableReport};
use crackq::optimize::{perturb_reference, OptimizeResult, TracePoint};
use crackq::problem::{Model, ProblemSpec};
use crackq::qsim::{prepare_force_state, ShotConfig};
use crackq::remesh::{run_cascade, CascadeConfig, CascadeReport, StageReport};
use crackq::tensor::{expectation_direct, materialize_sum, OperatorSum, StateVector, TensorTerm};

use crate::config::RunConfig;

const DENSE_CHECK_CAP: usize = 13;

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    StateVector::from_amplitudes(n, amps).unwrap().normalized()
}

/// Manifest written beside every artifact set; replaying the same binary on
/// this file reproduces the outputs bit-for-bit.
#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
}

fn write_manifest(out: &Path, command: &str, config: &RunConfig) -> anyhow::Result<()> {
    write_json(
        &out.join("manifest.json"),
        &Manifest { version: env!("CARGO_PKG_VERSION"), command, seed: config.seed, config },
    )
}

// ---------------------------------------------------------------- verify

#[derive(Serialize)]
struct CheckOutcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: String, results: &mut Vec<CheckOutcome>) {
    println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    results.push(CheckOutcome { name, passed, detail });
}

fn max_abs_diff(op: &OperatorSum, dense: &nalgebra::DMatrix<f64>) -> anyhow::Result<f64> {
    let m = materialize_sum(op)?;
    let mut worst = 0.0f64;
    for i in 0..dense.nrows() {
        for j in 0..dense.ncols() {
            worst = worst.max((m[(i, j)] - C64::new(dense[(i, j)], 0.0)).norm());
        }
    }
    Ok(worst)
}

/// Runs the invariant suite on the configured problem; nonzero exit on any
/// failure. `corrupt` injects a coefficient error as a negative control.
pub fn cmd_verify(config: &RunConfig, corrupt: bool) -> anyhow::Result<i32> {
    let spec = config.problem.to_spec()?;
    if spec.n() > DENSE_CHECK_CAP {
        bail!("verify needs n ≤ {DENSE_CHECK_CAP} for dense checks, got {}", spec.n());
    }
    let mut results = Vec::new();

    // decomposition ≡ assembly at the configured ν and at the ν = 0 edge
    for nu in [spec.nu, 0.0] {
        let mut case = spec.clone();
        case.nu = nu;
        let mut op = build_operator(&case)?;
        if corrupt && nu == spec.nu {
            op.terms[0].coeff += C64::new(1e-3, 0.0);
        }
        let dev = max_abs_diff(&op, &assemble_k(&case)?)?;
        check(
            "decomposition-vs-assembly",
            dev <= 1e-12,
            format!("nu = {nu}, max deviation {dev:.3e}"),
            &mut results,
        );
    }

    // measurement-group count law (vector model)
    let op = build_operator(&spec)?;
    let groups = measurement_groups(&op)?;
    if spec.model.is_scalar() {
        check(
            "term-count-law",
            groups.len() <= term_count(spec.n_x, spec.n_y),
            format!("{} groups (scalar bound {})", groups.len(), term_count(spec.n_x, spec.n_y)),
            &mut results,
        );
    } else {
        let expected = term_count(spec.n_x, spec.n_y);
        check(
            "term-count-law",
            groups.len() == expected,
            format!("{} groups, expected {expected}", groups.len()),
            &mut results,
        );
    }

    // grouped vs direct expectations for 𝕂 and every projector
    let exact = ShotConfig::exact();
    let mut ops: Vec<(String, OperatorSum)> = vec![("stiffness".into(), op)];
    for (i, bc) in spec.boundary_conditions().iter().enumerate() {
        ops.push((
            format!("boundary-projector-{i}"),
            dirichlet_projector_terms(spec.n(), std::slice::from_ref(bc))?,
        ));
    }
    if spec.model == Model::HalfPlateCrack {
        let lip = TensorTerm::real(1.0, spec.full_lip_selector().factors());
        ops.push(("sif-full-lip".into(), OperatorSum::from_terms(spec.n(), vec![lip])?));
        if spec.n_x >= 3 {
            let inner = TensorTerm::real(1.0, spec.inner_quarter_selector()?.factors());
            ops.push(("sif-inner-quarter".into(), OperatorSum::from_terms(spec.n(), vec![inner])?));
        }
    }
    let mut worst = 0.0f64;
    for (name, o) in &ops {
        let g = measurement_groups(o)?;
        for seed in 0..20u64 {
            let psi = random_state(spec.n(), 0x5EED ^ seed);
            let (gv, _) = expectation_grouped(&psi, &g, &exact)?;
            let dv = expectation_direct(&psi, o)?.re;
            let dev = (gv - dv).abs();
            if dev > worst {
                worst = dev;
            }
            if dev > 1e-10 {
                check("grouped-vs-direct", false, format!("{name} deviates {dev:.3e}"), &mut results);
            }
        }
    }
    check(
        "grouped-vs-direct",
        worst <= 1e-10,
        format!("{} operators × 20 states, worst {worst:.3e}", ops.len()),
        &mut results,
    );

    // rigid-body kernel of the pure-Neumann plate
    if !spec.model.is_scalar() {
        let free = ProblemSpec::free_plate(spec.n_x, spec.n_y, spec.nu);
        let k = assemble_k(&free)?;
        let dim = 1 << free.n();
        let mut modes = Vec::new();
        for d in 0..2usize {
            let mut v = DVector::zeros(dim);
            for y in 0..free.nodes_y() {
                for x in 0..free.nodes_x() {
                    v[free.dof_index(x, y, d)] = 1.0;
                }
            }
            modes.push(v);
        }
        let mut rot = DVector::zeros(dim);
        for y in 0..free.nodes_y() {
            for x in 0..free.nodes_x() {
                rot[free.dof_index(x, y, 0)] = -(y as f64);
                rot[free.dof_index(x, y, 1)] = x as f64;
            }
        }
        modes.push(rot);
        let worst = modes.iter().map(|v| (&k * v).abs().max()).fold(0.0, f64::max);
        check(
            "rigid-body-kernel",
            worst <= 1e-10,
            format!("translations + rotation, worst residual {worst:.3e}"),
            &mut results,
        );
    }

    let failed = results.iter().filter(|r| !r.passed).count();
    write_json(&config.out.join("verify.json"), &results)?;
    println!("verify: {} checks, {failed} failed", results.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

// ------------------------------------------------------- solve-classical

fn solution_csv(u: &DVector<f64>, spec: &ProblemSpec) -> String {
    let mut csv = String::new();
    let hx = spec.width / (spec.nodes_x() - 1) as f64;
    let hy = spec.height / (spec.nodes_y() - 1) as f64;
    if spec.model.is_scalar() {
        csv.push_str("x,y,x_pos,y_pos,value\n");
    } else {
        csv.push_str("x,y,x_pos,y_pos,u_x,u_y\n");
    }
    for y in 0..spec.nodes_y() {
        for x in 0..spec.nodes_x() {
            let (xp, yp) = (x as f64 * hx, y as f64 * hy);
            if spec.model.is_scalar() {
                let _ = writeln!(csv, "{x},{y},{xp},{yp},{}", u[spec.dof_index(x, y, 0)]);
            } else {
                let _ = writeln!(
                    csv,
                    "{x},{y},{xp},{yp},{},{}",
                    u[spec.dof_index(x, y, 0)],
                    u[spec.dof_index(x, y, 1)]
                );
            }
        }
    }
    csv
}

#[derive(Serialize)]
struct ClassicalReport {
    n_x: usize,
    n_y: usize,
    nu: f64,
    norm: f64,
    cod: Option<f64>,
    sif_fit: Option<f64>,
    sif_integral: Option<f64>,
}

fn classical_report(u: &DVector<f64>, spec: &ProblemSpec) -> anyhow::Result<ClassicalReport> {
    let (cod, sif_fit, sif_integral) = if spec.model == Model::HalfPlateCrack {
        let obs = classical_observables(u, spec)?;
        (Some(obs.cod), Some(obs.sif_fit), Some(obs.sif_integral))
    } else {
        (None, None, None)
    };
    Ok(ClassicalReport {
        n_x: spec.n_x,
        n_y: spec.n_y,
        nu: spec.nu,
        norm: u.norm(),
        cod,
        sif_fit,
        sif_integral,
    })
}

/// Solves the configured problem classically; with `sweep > 0`, also solves
/// that many uniformly refined meshes and tabulates the observables.
pub fn cmd_solve_classical(config: &RunConfig, sweep: usize) -> anyhow::Result<i32> {
    let spec = config.problem.to_spec()?;
    let out = &config.out;
    let u = solve_problem(&spec).context("classical solve")?;
    write_text(&out.join("solution.csv"), &solution_csv(&u, &spec))?;
    write_json(&out.join("observables.json"), &classical_report(&u, &spec)?)?;

    if sweep > 0 {
        let mut csv = String::from("level,n_x,n_y,qubits,norm,cod,sif_fit,sif_integral\n");
        for level in 0..=sweep {
            let mut s = spec.clone();
            s.n_x += level;
            s.n_y += level;
            s.validate().map_err(anyhow::Error::from)?;
            let u = solve_problem(&s)?;
            let r = classical_report(&u, &s)?;
            let _ = writeln!(
                csv,
                "{level},{},{},{},{},{},{},{}",
                s.n_x,
                s.n_y,
                s.n(),
                r.norm,
                r.cod.unwrap_or(f64::NAN),
                r.sif_fit.unwrap_or(f64::NAN),
                r.sif_integral.unwrap_or(f64::NAN)
            );
        }
        write_text(&out.join("observables_sweep.csv"), &csv)?;
    }
    write_manifest(out, "solve-classical", config)?;
    println!("solve-classical: wrote {}", out.display());
    Ok(0)
}

// -------------------------------------------------------- decompose-dump

#[derive(Serialize)]
struct GroupSummary {
    index: usize,
    terms: usize,
    rotation_gates: usize,
}

#[derive(Serialize)]
struct DecompositionSummary {
    n: usize,
    term_components: usize,
    group_count: usize,
    expected_group_count: Option<usize>,
    groups: Vec<GroupSummary>,
}

/// Dumps the tensor decomposition of 𝕂: every term as CSV and the
/// measurement-group structure as JSON.
pub fn cmd_decompose_dump(config: &RunConfig) -> anyhow::Result<i32> {
    let spec = config.problem.to_spec()?;
    let op = build_operator(&spec)?;
    let groups = measurement_groups(&op)?;
    let out = &config.out;

    let mut csv = String::from("term,coeff_re,coeff_im,factors\n");
    for (i, term) in op.terms.iter().enumerate() {
        let factors: Vec<&str> = term.factors.iter().map(|f| f.label()).collect();
        let _ = writeln!(csv, "{i},{},{},{}", term.coeff.re, term.coeff.im, factors.join("*"));
    }
    write_text(&out.join("terms.csv"), &csv)?;

    write_json(
        &out.join("decomposition.json"),
        &DecompositionSummary {
            n: spec.n(),
            term_components: op.terms.len(),
            group_count: groups.len(),
            expected_group_count: (!spec.model.is_scalar())
                .then(|| term_count(spec.n_x, spec.n_y)),
            groups: groups
                .iter()
                .enumerate()
                .map(|(index, g)| GroupSummary {
                    index,
                    terms: g.terms.len(),
                    rotation_gates: g.rotation.len(),
                })
                .collect(),
        },
    )?;
    write_manifest(out, "decompose-dump", config)?;
    println!(
        "decompose-dump: {} components in {} groups → {}",
        op.terms.len(),
        groups.len(),
        out.display()
    );
    Ok(0)
}

// --------------------------------------------------------------- vqa-run

fn build_context(spec: &ProblemSpec, cost: CostKind, shots: ShotConfig) -> anyhow::Result<CostContext> {
    let op = build_operator(spec)?;
    Ok(CostContext {
        k_groups: measurement_groups(&op)?,
        projector: dirichlet_projector_terms(spec.n(), &spec.boundary_conditions())?,
        f_state: prepare_force_state(spec.n_x, spec.n_y),
        kind: cost,
        shots,
    })
}

/// −½ f̂ᵀ𝕂̃⁻¹f̂: the classical optimum of the quotient cost.
fn classical_optimum(spec: &ProblemSpec) -> anyhow::Result<(f64, StateVector)> {
    let k = assemble_k(spec)?;
    let p = bc_projector_matrix(spec.n(), &spec.boundary_conditions())?;
    let kt = apply_dirichlet_dense(&k, &p)?;
    let f_state = prepare_force_state(spec.n_x, spec.n_y);
    let fhat = DVector::from_iterator(1 << spec.n(), f_state.amps.iter().map(|a| a.re));
    let u = classical_solve(&kt, &fhat)?;
    let classical = StateVector::from_real(spec.n(), u.as_slice())?.normalized();
    Ok((-0.5 * fhat.dot(&u), classical))
}

fn trace_csv(trace: &[TracePoint]) -> String {
    let mut csv = String::from("iteration,evaluations,best_cost\n");
    for p in trace {
        let _ = writeln!(csv, "{},{},{}", p.iteration, p.evaluations, p.best_cost);
    }
    csv
}

#[derive(Serialize)]
struct VqaReport {
    qubits: usize,
    layers: usize,
    cost_kind: CostKind,
    restarts: usize,
    best_restart: usize,
    final_cost: f64,
    classical_optimum: f64,
    relative_gap: f64,
    fidelity: f64,
    evaluations: usize,
    converged: bool,
    observables: Option<ObservableReport>,
    gradient_check: f64,
}

/// Single-mesh VQA with seeded restarts; reports the best run.
pub fn cmd_vqa_run(config: &RunConfig) -> anyhow::Result<i32> {
    let spec = config.problem.to_spec()?;
    if spec.n() > DENSE_CHECK_CAP {
        bail!("vqa-run compares against a dense solve; needs n ≤ {DENSE_CHECK_CAP}");
    }
    let shots = config.shots.to_config(config.seed)?;
    let ctx = build_context(&spec, config.vqa.cost, shots)?;
    let n = spec.n();
    let base = zero_base(n);
    let restarts = config.vqa.restarts.max(1);

    let mut best: Option<(usize, OptimizeResult, crackq::ansatz::AnsatzCircuit)> = None;
    for r in 0..restarts {
        let seed = config.seed.wrapping_add(r as u64);
        let ansatz = build_ansatz(n, config.vqa.layers, (0..n).collect(), seed);
        let opt_cfg = config.optimizer.to_config(seed);
        let start = perturb_reference(&ansatz.theta0, &opt_cfg);
        let res = optimize_coordinate(&ctx, &ansatz, &base, &start, &opt_cfg)
            .map_err(anyhow::Error::from)?;
        if best.as_ref().is_none_or(|(_, b, _)| res.cost < b.cost) {
            best = Some((r, res, ansatz));
        }
    }
    let (best_restart, res, ansatz) = best.expect("at least one restart");

    let psi = ansatz.apply(&base, &res.theta).map_err(anyhow::Error::from)?;
    let solution = crackq::ansatz::project_out(&psi, &ctx.projector)
        .map_err(anyhow::Error::from)?
        .normalized();
    let (copt, classical) = classical_optimum(&spec)?;
    let observables = if spec.model == Model::HalfPlateCrack {
        Some(observable_report(
            &solution,
            &spec,
            &ctx.k_groups,
            &ctx.f_state,
            CodIndex::CrackMouthVertical,
            &ctx.shots,
        )?)
    } else {
        None
    };
    let gradient_check = ctx
        .gradient_check(&ansatz, &base, &res.theta)
        .map_err(anyhow::Error::from)?;

    let report = VqaReport {
        qubits: n,
        layers: config.vqa.layers,
        cost_kind: config.vqa.cost,
        restarts,
        best_restart,
        final_cost: res.cost,
        classical_optimum: copt,
        relative_gap: (res.cost - copt).abs() / copt.abs(),
        fidelity: fidelity(&classical, &solution).map_err(anyhow::Error::from)?,
        evaluations: res.evaluations,
        converged: res.converged,
        observables,
        gradient_check,
    };
    let out = &config.out;
    write_text(&out.join("trace.csv"), &trace_csv(&res.trace))?;
    write_json(&out.join("report.json"), &report)?;
    write_manifest(out, "vqa-run", config)?;
    println!(
        "vqa-run: cost {} vs classical optimum {} (gap {:.3}%)",
        report.final_cost,
        report.classical_optimum,
        100.0 * report.relative_gap
    );
    Ok(0)
}

// --------------------------------------------------------------- cascade

fn write_cascade_arm(out: &Path, report: &CascadeReport) -> anyhow::Result<()> {
    for (k, stage) in report.stages.iter().enumerate() {
        let dir = out.join(format!("stage_{k}"));
        write_text(&dir.join("trace.csv"), &trace_csv(&stage.trace))?;
        // the trace lives in the CSV; keep the JSON report compact
        let compact = StageReport { trace: Vec::new(), ..stage.clone() };
        write_json(&dir.join("report.json"), &compact)?;
    }
    Ok(())
}

/// Runs the remeshing cascade; with `cold_start_arm`, also the matched
/// cold-start arm under the same seeds for an A/B comparison.
pub fn cmd_cascade(config: &RunConfig, cold_start_arm: bool) -> anyhow::Result<i32> {
    let spec = config.problem.to_spec()?;
    let schedule = config.schedule.to_schedule(&spec, &config.vqa)?;
    let shots = config.shots.to_config(config.seed)?;
    let cascade_cfg = CascadeConfig {
        optimizer: config.optimizer.to_config(config.seed),
        shots,
        cold_start: false,
        warm_spread: config.schedule.warm_spread,
    };
    let out = &config.out;

    let warm = run_cascade(&spec, &schedule, &cascade_cfg).map_err(anyhow::Error::from)?;
    write_cascade_arm(&out.join("warm"), &warm)?;
    let warm_final = warm.stages.last().expect("nonempty").final_cost;
    println!("cascade: warm final cost {warm_final}");

    if cold_start_arm {
        let cold_cfg = CascadeConfig { cold_start: true, ..cascade_cfg };
        let cold = run_cascade(&spec, &schedule, &cold_cfg).map_err(anyhow::Error::from)?;
        write_cascade_arm(&out.join("cold"), &cold)?;
        let cold_final = cold.stages.last().expect("nonempty").final_cost;
        println!("cascade: cold final cost {cold_final}");
    }
    write_manifest(out, "cascade", config)?;
    Ok(0)
}

// ----------------------------------------------------------- observables

#[derive(Serialize)]
struct ObservablesReport {
    quantum: ObservableReport,
    quantum_cod_literal_zero: f64,
    classical_cod: f64,
    classical_sif_fit: f64,
    classical_sif_integral: f64,
}

/// Evaluates the quantum observable pipeline on the (normalized) classical
/// solution state and tabulates it against the classical estimators.
pub fn cmd_observables(config: &RunConfig) -> anyhow::Result<i32> {
    let spec = config.problem.to_spec()?;
    if spec.model != Model::HalfPlateCrack {
        bail!("observables requires model = \"half_plate_crack\"");
    }
    let shots = config.shots.to_config(config.seed)?;
    let op = build_operator(&spec)?;
    let groups = measurement_groups(&op)?;
    let f_state = prepare_force_state(spec.n_x, spec.n_y);
    let u = solve_problem(&spec)?;
    let psi = StateVector::from_real(spec.n(), u.as_slice())
        .map_err(anyhow::Error::from)?
        .normalized();

    let quantum = observable_report(
        &psi,
        &spec,
        &groups,
        &f_state,
        CodIndex::CrackMouthVertical,
        &shots,
    )?;
    let literal = observable_report(&psi, &spec, &groups, &f_state, CodIndex::LiteralZero, &shots)?;
    let classical = classical_observables(&u, &spec)?;

    let report = ObservablesReport {
        quantum_cod_literal_zero: literal.cod,
        quantum,
        classical_cod: classical.cod,
        classical_sif_fit: classical.sif_fit,
        classical_sif_integral: classical.sif_integral,
    };
    let out = &config.out;
    write_json(&out.join("observables.json"), &report)?;
    write_manifest(out, "observables", config)?;
    println!(
        "observables: quantum SIF {} vs classical integral {}",
        report.quantum.sif, report.classical_sif_integral
    );
    Ok(0)
}
