//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use falqon_mst::experiment::{run_variant, Instance, RunSettings};
use falqon_mst::graph::{generate_random_graph, GeneratorParams, WeightedGraph};
use falqon_mst::protocol::{feedback, run_protocol, ProtocolConfig, RunTrace, Variant};
use falqon_mst::qubo::{MstComponents, VariableRegistry};
use falqon_mst::sim::{DiagonalHamiltonian, DriverSet, DriverTerm, StateVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 0.02;
const LAYERS: usize = 500;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

/// Largest `|norm^2 - 1|` seen by any criterion.
#[derive(Default)]
struct NormLog {
    worst: f64,
    states: usize,
}

impl NormLog {
    fn record(&mut self, psi: &StateVector) {
        self.worst = self.worst.max((psi.norm_sqr() - 1.0).abs());
        self.states += 1;
    }

    fn trace(&mut self, t: &RunTrace) {
        self.record(&t.final_state);
    }
}

fn small_graphs() -> Vec<WeightedGraph> {
    (0..24u64)
        .map(|seed| {
            let n = 3 + (seed % 2) as usize;
            generate_random_graph(&GeneratorParams::new(n, 0.7, seed)).unwrap()
        })
        .collect()
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let graphs = small_graphs();
    let mut bad = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        let inst = Instance::new(g.clone()).unwrap();
        if !inst.encoding_sound() {
            bad.push(i);
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        bad.is_empty() && elapsed < Duration::from_secs(1),
        format!("{} graphs, mismatches {:?}, {:.3}s", graphs.len(), bad, elapsed.as_secs_f64()),
    )
}

fn penalty_gap() -> Outcome {
    let start = Instant::now();
    let mut violations = 0usize;
    let mut infeasible = 0usize;
    for g in small_graphs() {
        let reg = VariableRegistry::for_graph(&g);
        let parts = MstComponents::build(&g, &reg);
        let constraints = parts.acyclicity.clone().plus(&parts.edge_order).unwrap().plus(&parts.connectivity).unwrap();
        let inst = Instance::new(g.clone()).unwrap();
        let p = inst.penalty;
        for (z, &e) in inst.hamiltonian.energies().iter().enumerate() {
            if constraints.evaluate_index(z) != 0.0 {
                infeasible += 1;
                if e < p {
                    violations += 1;
                }
            }
        }
        for tree in common::all_spanning_trees(&g) {
            if common::tree_cost(&tree) >= p {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        violations == 0 && elapsed < Duration::from_secs(1),
        format!("{infeasible} infeasible assignments, {violations} violations, {:.3}s", elapsed.as_secs_f64()),
    )
}

fn acyclicity_truth_table() -> Outcome {
    // K5 rooted at 0: four non-root vertices, four triples, six order variables.
    let g = generate_random_graph(&GeneratorParams::new(5, 1.0, 3)).unwrap();
    let reg = VariableRegistry::for_graph(&g);
    let f1 = MstComponents::build(&g, &reg).acyclicity;
    let others = [1usize, 2, 3, 4];
    let mut mismatches = 0;
    let mut checked = 0;
    for mask in 0..64usize {
        let mut bits = vec![false; reg.len()];
        let mut k = 0;
        for (a, &u) in others.iter().enumerate() {
            for &v in &others[a + 1..] {
                bits[reg.order(u, v).unwrap()] = mask >> k & 1 == 1;
                k += 1;
            }
        }
        let x = |u: usize, v: usize| bits[reg.order(u, v).unwrap()];
        let mut cyclic = 0.0;
        for (a, &u) in others.iter().enumerate() {
            for (b, &v) in others.iter().enumerate().skip(a + 1) {
                for &w in &others[b + 1..] {
                    let (uv, vw, uw) = (x(u, v), x(v, w), x(u, w));
                    // a cycle means the three pairwise orders are not a total order
                    if (uv && vw && !uw) || (!uv && !vw && uw) {
                        cyclic += 1.0;
                    }
                }
            }
        }
        checked += 1;
        if f1.evaluate(&bits).unwrap() != cyclic {
            mismatches += 1;
        }
    }
    Outcome::new(mismatches == 0, format!("{checked} assignments over 4 triples, {mismatches} mismatches"))
}

fn one_drive(inst: &Instance) -> RunTrace {
    let cfg = ProtocolConfig::new(Variant::OneDrive, DT, LAYERS);
    run_protocol(&inst.hamiltonian, &DriverSet::Global.drivers(inst.n_qubits()), &cfg).unwrap()
}

fn descent(norms: &mut NormLog) -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (name, g) in [("triangle", common::triangle()), ("k4", common::k4(0))] {
        let inst = Instance::new(g).unwrap();
        let trace = one_drive(&inst);
        norms.trace(&trace);
        let j = trace.energies();
        let slack = 1e-6 * (j[0] - inst.e_min);
        let worst = j.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let ok = worst <= slack && j[LAYERS] < j[0];
        pass &= ok;
        details.push(format!("{name} ({}q) max step {worst:.3e} vs slack {slack:.3e}", inst.n_qubits()));
    }
    Outcome::new(pass, details.join("; "))
}

fn lyapunov_identity(norms: &mut NormLog) -> Outcome {
    const DELTA: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let instances = [Instance::new(common::triangle()).unwrap(), Instance::new(common::k4(1)).unwrap()];
    let mut worst = 0.0f64;
    for sample in 0..10 {
        let inst = &instances[sample % 2];
        let h = &inst.hamiltonian;
        let variant = if sample % 4 < 2 { Variant::OneDrive } else { Variant::MultiDrive };
        let drivers = variant.default_driver_set().drivers(inst.n_qubits());
        let layer = rng.gen_range(20..200);
        let cfg = ProtocolConfig::new(variant, DT, layer);
        let trace = run_protocol(h, &drivers, &cfg).unwrap();
        let psi = trace.final_state;
        let a: Vec<f64> = drivers.iter().map(|d| psi.commutator_expectation(d, h).unwrap()).collect();
        let beta = feedback(&cfg, &a, 1.0);
        let predicted: f64 = a.iter().zip(&beta).map(|(x, y)| x * y).sum();

        let mut evolved = psi.clone();
        evolved.apply_problem_phase(h, DELTA).unwrap();
        for (d, &b) in drivers.iter().zip(&beta) {
            evolved.apply_driver(d, b * DELTA).unwrap();
        }
        norms.record(&evolved);
        let measured = (evolved.expected_energy(h).unwrap() - psi.expected_energy(h).unwrap()) / DELTA;
        worst = worst.max((measured - predicted).abs() / predicted.abs());
    }
    Outcome::new(worst <= 1e-3, format!("10 states, worst relative error {worst:.3e}"))
}

fn tr_reduction(norms: &mut NormLog) -> Outcome {
    let mut worst = 0.0f64;
    for g in [common::triangle(), common::k4(2)] {
        let inst = Instance::new(g).unwrap();
        for (plain, tr) in [(Variant::OneDrive, Variant::TrOneDrive), (Variant::MultiDrive, Variant::TrMultiDrive)] {
            let drivers = plain.default_driver_set().drivers(inst.n_qubits());
            let base = run_protocol(&inst.hamiltonian, &drivers, &ProtocolConfig::new(plain, DT, LAYERS)).unwrap();
            let cfg = ProtocolConfig::new(tr, DT, LAYERS).with_rescaling(1.0, LAYERS as f64 * DT).unwrap();
            let rescaled = run_protocol(&inst.hamiltonian, &drivers, &cfg).unwrap();
            norms.trace(&base);
            norms.trace(&rescaled);
            for (r0, r1) in base.records.iter().zip(&rescaled.records) {
                for (b0, b1) in r0.beta.iter().zip(&r1.beta) {
                    worst = worst.max((b0 - b1).abs());
                }
            }
            worst = worst.max(common::max_abs_diff(base.final_state.amplitudes(), rescaled.final_state.amplitudes()));
        }
    }
    Outcome::new(worst <= 1e-10, format!("max elementwise difference {worst:.3e}"))
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps = (0..1usize << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    StateVector::from_amplitudes(amps).unwrap()
}

fn dense_oracle(norms: &mut NormLog) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut worst_imag = 0.0f64;
    let mut cases = 0;
    for n in 1..=3usize {
        for _ in 0..4 {
            let h = DiagonalHamiltonian::from_energies((0..1 << n).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
            let hp = common::dense_diag(&h);
            let psi = random_state(&mut rng, n);
            let col = common::column(&psi);

            let theta = rng.gen_range(-2.0..2.0);
            let mut phased = psi.clone();
            phased.apply_problem_phase(&h, theta).unwrap();
            let expect = common::propagator(&hp, theta) * &col;
            worst = worst.max(common::max_abs_diff(phased.amplitudes(), expect.as_slice()));
            norms.record(&phased);

            let mut drivers = vec![DriverTerm::global_x()];
            drivers.extend((0..n).flat_map(|q| [DriverTerm::x(q), DriverTerm::y(q)]));
            for d in drivers {
                let hd = common::dense_driver(&d, n);
                let angle = rng.gen_range(-2.0..2.0);
                let mut rotated = psi.clone();
                rotated.apply_driver(&d, angle).unwrap();
                let expect = common::propagator(&hd, angle) * &col;
                worst = worst.max(common::max_abs_diff(rotated.amplitudes(), expect.as_slice()));
                norms.record(&rotated);

                let dense = common::dense_commutator_expectation(&psi, &hd, &hp);
                worst_imag = worst_imag.max(dense.im.abs());
                worst = worst.max((psi.commutator_expectation(&d, &h).unwrap() - dense.re).abs());
                cases += 1;
            }
        }
    }
    Outcome::new(
        worst <= 1e-10 && worst_imag < 1e-12,
        format!("{cases} driver cases, max deviation {worst:.3e}, max dense |Im A| {worst_imag:.3e}"),
    )
}

fn settings(variant: Variant) -> RunSettings {
    let mut s = RunSettings::new(variant);
    if variant.is_rescaled() {
        // same number of layers as the plain variants
        s.tr_tf = Some(s.tr_a * LAYERS as f64 * DT);
    }
    s
}

fn variant_ordering(norms: &mut NormLog) -> Outcome {
    let mut satisfied = 0;
    let mut rows = Vec::new();
    for seed in 0..5u64 {
        let inst = Instance::new(common::k4(seed)).unwrap();
        let one = run_variant(&inst, &settings(Variant::OneDrive), "one").unwrap();
        let multi = run_variant(&inst, &settings(Variant::MultiDrive), "multi").unwrap();
        let tr = run_variant(&inst, &settings(Variant::TrMultiDrive), "tr").unwrap();
        for r in [&one, &multi, &tr] {
            norms.trace(&r.trace);
        }
        let (o, m, t) = (&one.report, &multi.report, &tr.report);
        let energy = t.final_energy <= m.final_energy && m.final_energy <= o.final_energy;
        let prob = t.ground_probability >= m.ground_probability && m.ground_probability >= o.ground_probability;
        let top = |r: Option<usize>| r.is_some_and(|k| k <= 20);
        let ranks = top(m.mst_rank) && !top(o.mst_rank);
        if energy && prob && ranks {
            satisfied += 1;
        }
        rows.push(format!(
            "seed {seed}: J {:.4}/{:.4}/{:.4} P {:.4}/{:.4}/{:.4} rank {}/{}",
            t.final_energy,
            m.final_energy,
            o.final_energy,
            t.ground_probability,
            m.ground_probability,
            o.ground_probability,
            m.mst_rank.map_or("-".into(), |r| r.to_string()),
            o.mst_rank.map_or("-".into(), |r| r.to_string()),
        ));
    }
    for r in &rows {
        println!("    {r}  (tr-multi/multi/one)");
    }
    Outcome::new(satisfied >= 4, format!("{satisfied}/5 instances satisfy all orderings"))
}

fn main() -> ExitCode {
    let mut norms = NormLog::default();
    let results = [
        ("1 encoding soundness", soundness()),
        ("2 penalty gap", penalty_gap()),
        ("3 acyclicity truth table", acyclicity_truth_table()),
        ("4 lyapunov descent", descent(&mut norms)),
        ("5 lyapunov identity", lyapunov_identity(&mut norms)),
        ("6 rescaling reduction", tr_reduction(&mut norms)),
        ("7 dense operator oracle", dense_oracle(&mut norms)),
        ("8 variant ordering", variant_ordering(&mut norms)),
    ];
    let norm = Outcome::new(norms.worst <= 1e-10, format!("{} states, max |norm - 1| {:.3e}", norms.states, norms.worst));
    let mut failed = 0;
    for (name, o) in results.iter().chain(std::iter::once(&("9 normalization", norm))) {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
