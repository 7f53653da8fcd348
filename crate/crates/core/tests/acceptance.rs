//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use sepqma_core::bellqma::{
    computational_povm, derive_params, estimate_acceptance, honest_message, outcome_deviations, preset_message,
    wilson_interval, BellProtocol, MerlinStrategy, ProtocolParams, RejectionStage, Stage2Acceptor,
};
use sepqma_core::encoding::{decode_error, decode_state, encode_state, encoding_bound, encoding_error, preparation_plan};
use sepqma_core::examples::two_qubit_example;
use sepqma_core::matrix::{vec_norm, CMatrix, C64};
use sepqma_core::operator::{hs_inner, hs_inner_matrix, tensor, trace_norm};
use sepqma_core::product::{brute_force_max, seesaw_max, BruteForceConfig, ProductState, DEFAULT_RESTARTS};
use sepqma_core::random::{haar_vector, par_map, random_density, random_psd, random_separable, stream};
use sepqma_core::repetition::{k_fold_values, verify_perfect_repetition, RepetitionConfig, DEFAULT_REPETITION_TOL};
use sepqma_core::separable::ppt_check;
use sepqma_core::{HermitianOperator, MultipartiteShape, PureState};

const Z99: f64 = 2.575_829_303_548_901;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn shape(dims: &[usize]) -> MultipartiteShape {
    MultipartiteShape::new(dims.to_vec()).unwrap()
}

fn basis_projector(dims: &[usize], idx: usize) -> HermitianOperator {
    PureState::basis(shape(dims), idx).unwrap().density()
}

fn criterion_1() -> Outcome {
    let c = two_qubit_example();
    let eig = c.eigh().unwrap().eigenvalues;
    let expected = [0.5, 0.5, 0.0, 0.0];
    let eig_err = eig.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let r = seesaw_max(&c, DEFAULT_RESTARTS, &mut stream(1, 0)).unwrap();
    let fid = r.state.to_pure_state().fidelity(&ProductState::first_basis(c.shape().clone()).to_pure_state());

    let mut kfold_err: f64 = 0.0;
    for k in [2, 3] {
        let (_, vk) = k_fold_values(&c, k, DEFAULT_RESTARTS, &mut stream(1, k as u64)).unwrap();
        kfold_err = kfold_err.max((vk - 0.5f64.powi(k as i32)).abs());
    }
    let pass = eig_err <= 1e-10 && (r.value - 0.5).abs() <= 1e-6 && fid >= 1.0 - 1e-8 && kfold_err <= 1e-6;
    outcome(
        pass,
        format!("eig err {eig_err:.1e}, opt {:.12}, fidelity(|00>) 1-{:.1e}, k-fold err {kfold_err:.1e}", r.value, 1.0 - fid),
    )
}

fn criterion_2() -> Outcome {
    let c = two_qubit_example();
    let at_11 = hs_inner(&c, &basis_projector(&[2, 2], 3)).unwrap();
    let mut flip = CMatrix::zeros(4, 4);
    flip[(1, 2)] = C64::new(1.0, 0.0);
    let at_01_10 = hs_inner_matrix(&c, &flip).unwrap();
    let ppt = ppt_check(&c).unwrap();
    let target = (1.0 - 2f64.sqrt()) / 4.0;
    let ppt_ok = ppt.min_eigenvalue_per_cut.iter().all(|&m| (m - target).abs() <= 1e-6) && !ppt.is_ppt;
    let pass = at_11.abs() <= 1e-15 && (at_01_10 - C64::new(0.25, 0.0)).norm() <= 1e-15 && ppt_ok;
    outcome(
        pass,
        format!("<C,|11><11|> = {at_11:.1e}, <C,|01><10|> = {:.6}, PPT minima {:?}", at_01_10.re, ppt.min_eigenvalue_per_cut),
    )
}

fn criterion_3() -> Outcome {
    let config = RepetitionConfig::default();
    let reports = par_map(200, |i| {
        let mut rng = stream(3, i as u64);
        let m = rng.random_range(1..=2);
        let dims = |rng: &mut _| (0..m).map(|_| Rng::random_range(rng, 2..=3)).collect::<Vec<usize>>();
        let (d1, d2) = (dims(&mut rng), dims(&mut rng));
        let t1 = rng.random_range(1..=3);
        let t2 = rng.random_range(1..=3);
        let c1 = random_separable(shape(&d1), t1, &mut rng);
        let c2 = random_separable(shape(&d2), t2, &mut rng);
        verify_perfect_repetition(&c1, &c2, DEFAULT_REPETITION_TOL, &config, &mut rng).unwrap()
    });
    let gap = reports.iter().map(|r| (r.v - r.v1 * r.v2).abs()).fold(0.0, f64::max);
    let lower_ok = reports.iter().all(|r| r.product_lower_bound_holds());
    let wmin = reports.iter().map(|r| r.witness.min).fold(f64::INFINITY, f64::min);
    let pass = gap <= 1e-3 && lower_ok && wmin >= -1e-9;
    outcome(pass, format!("200 instances: max |v - v1 v2| {gap:.1e}, product bound held {lower_ok}, min witness {wmin:.3e}"))
}

fn criterion_4() -> Outcome {
    let slacks = par_map(1000, |i| {
        let mut rng = stream(4, i as u64);
        let d = rng.random_range(2..=3);
        let k = rng.random_range(2..=3);
        let rhos: Vec<_> = (0..k).map(|_| random_density(shape(&[d]), &mut rng)).collect();
        let sigmas: Vec<_> = (0..k).map(|_| random_density(shape(&[d]), &mut rng)).collect();
        let prod = |xs: &[HermitianOperator]| xs[1..].iter().fold(xs[0].clone(), |acc, x| tensor(&acc, x).unwrap());
        let lhs = trace_norm(&prod(&rhos).sub(&prod(&sigmas)).unwrap()).unwrap();
        let rhs: f64 = rhos.iter().zip(&sigmas).map(|(r, s)| trace_norm(&r.sub(s).unwrap()).unwrap()).sum();
        rhs - lhs
    });
    let min = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(min >= -1e-9, format!("1000 draws, min slack {min:.3e}"))
}

fn two_prover_protocol(seed: u64) -> (BellProtocol, Vec<HermitianOperator>) {
    let povms = vec![computational_povm(3), computational_povm(3)];
    let proto = BellProtocol::new(1, povms, Stage2Acceptor::constant(2, 3, 1.0).unwrap()).unwrap();
    let mut rng = stream(seed, 0);
    let proofs = (0..2).map(|_| random_density(shape(&[3]), &mut rng)).collect();
    (proto, proofs)
}

fn criterion_5() -> Outcome {
    let (proto, proofs) = two_prover_protocol(5);
    let params = ProtocolParams::new(20, 40_000, 50, 120).unwrap();
    let msg = honest_message(&proto, &proofs, &params).unwrap();
    let est = estimate_acceptance(&proto, &msg, &params, 1_000, 5).unwrap();
    outcome(est.mean >= 0.99, format!("acceptance {:.4} ± {:.4} over 1000 trials", est.mean, est.ci95))
}

fn criterion_6() -> Outcome {
    let (proto, proofs) = two_prover_protocol(6);
    let (m, r) = (2usize, 3usize);
    let params = derive_params(1, m as u64, r as u64).unwrap();
    let msg = preset_message(&proto, &proofs, &params, MerlinStrategy::LyingX { shift: None }).unwrap();
    let lies: Vec<(usize, usize)> = outcome_deviations(&proto, &msg)
        .unwrap()
        .iter()
        .filter(|d| d.deviation() >= 1.0 / (10 * m * r) as f64)
        .map(|d| (d.j, d.i))
        .collect();
    let est = estimate_acceptance(&proto, &msg, &params, 10_000, 6).unwrap();
    let picked: Vec<_> = est.outcomes.iter().filter(|o| o.step4_pick.is_some_and(|p| lies.contains(&p))).collect();
    let caught = picked.iter().filter(|o| o.rejection_stage == Some(RejectionStage::Step4)).count() as u64;
    let (lower99, _) = wilson_interval(caught, picked.len() as u64, Z99);
    let bound = 1.0 - 1.0 / (40.0 * (m * m * r * r) as f64);
    let pass = !lies.is_empty() && lower99 >= 1.0 / (2.0 * params.p as f64) && est.mean <= bound + est.ci95;
    outcome(
        pass,
        format!(
            "p={} k={}: deviating picks {:?}, conditional rejection {caught}/{} (99% lower {lower99:.4} vs {:.4}), acceptance {:.4} ± {:.4} vs {bound:.6}",
            params.p,
            params.k,
            lies,
            picked.len(),
            1.0 / (2.0 * params.p as f64),
            est.mean,
            est.ci95
        ),
    )
}

fn criterion_7() -> Outcome {
    let results = par_map(1000, |i| {
        let mut rng = stream(7, i as u64);
        let n = rng.random_range(1..=64);
        let f = rng.random_range(1..=60);
        let psi = PureState::new(shape(&[n]), haar_vector(n, &mut rng)).unwrap();
        let desc = encode_state(&psi, f).unwrap();
        let bound = encoding_bound(n, f);
        // Descriptions that round to zero cannot be decoded; their error is ‖ψ‖ = 1.
        let decodable = decode_state(&desc).is_ok();
        let aligned = if decodable { decode_error(&psi, &desc).unwrap() } else { 1.0 } / bound;
        let raw = if n >= 2 { encoding_error(&psi, &desc).unwrap() / bound } else { 0.0 };
        let plan = preparation_plan(&psi);
        let prepared = plan.prepare();
        let fwd: Vec<C64> = prepared.iter().zip(psi.amplitudes()).map(|(a, b)| a - b).collect();
        let mut back = plan.apply_adjoint(psi.amplitudes()).unwrap();
        back[0] -= C64::new(1.0, 0.0);
        (aligned, raw, vec_norm(&fwd).max(vec_norm(&back)), decodable)
    });
    let worst_aligned = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_raw = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_plan = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let zero = results.iter().filter(|r| !r.3).count();
    outcome(
        worst_aligned <= 1.0 && worst_raw <= 1.0 && worst_plan <= 1e-10,
        format!(
            "1000 states: worst decoded error/bound {worst_aligned:.3} (phase-aligned), {worst_raw:.3} (fixed-point vector, N ≥ 2), worst plan round trip {worst_plan:.1e}, {zero} descriptions rounded to zero"
        ),
    )
}

fn criterion_8() -> Outcome {
    let config = |i: usize| BruteForceConfig { samples: 100_000, refine_best: 8, seed: 8_000 + i as u64 };
    let diffs: Vec<f64> = (0..200)
        .map(|i| {
            let dims: &[usize] = if i % 2 == 0 { &[2, 2] } else { &[2, 2, 2] };
            let mut rng = stream(8, i as u64);
            let c = random_psd(shape(dims), 1.0, &mut rng);
            let s = seesaw_max(&c, DEFAULT_RESTARTS, &mut rng).unwrap().value;
            let b = brute_force_max(&c, &config(i)).unwrap();
            (s - b).abs()
        })
        .collect();
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    outcome(worst <= 1e-4, format!("200 instances at 2x2 and 2x2x2: max |seesaw - brute| {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("product-state optimum of the two-qubit example and its k-fold repetition", criterion_1),
        ("non-separability of the two-qubit example", criterion_2),
        ("perfect parallel repetition on random separable instances", criterion_3),
        ("trace-norm subadditivity under tensor products", criterion_4),
        ("completeness of the Bell-measurement protocol", criterion_5),
        ("soundness mechanism against a lying classical register", criterion_6),
        ("fixed-precision encoding bound and preparation plans", criterion_7),
        ("seesaw agrees with the brute-force oracle", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{}] {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
