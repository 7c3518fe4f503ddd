use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use uncertainty::operator::{commutator, expectation, std_dev, tensor, Operator, StateVector};
use uncertainty::operator::{direct_matrix_element, polarization_matrix_element};
use uncertainty::periodic_box::{check36, evaluate, make_plane_wave, make_wrapped_gaussian, seeded_band_limited};
use uncertainty::random::{gaussian_matrix, gaussian_vector, random_hermitian, random_state, trial_rng};
use uncertainty::relations::{eval, joint_quantities, quantities, QuantitySet, RelationId};
use uncertainty::spin::{self, SpinScenario};
use uncertainty::witness::{random_joint_model, random_model, random_spectral_dilation, search, SearchConfig};

const SEED: u64 = 20_240_607;
const SLACK_TOL: f64 = 1e-9;

/// Outcome of one criterion: a summary line, or the list of failures.
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(message());
        }
    }

    fn note(&mut self, message: String) {
        self.notes.push(message);
    }
}

fn lhs14_closed(phi: f64) -> f64 {
    (2.0 * (phi / 2.0).sin() + 1.0) * (SQRT_2 * phi.cos() + 1.0)
}

fn lhs15_closed(phi: f64) -> f64 {
    let s = (phi / 2.0).sin();
    let c = phi.cos();
    ((4.0 * s * s + 1.0) * (2.0 * c * c + 1.0)).sqrt()
}

fn criterion_1() -> Check {
    let mut c = Check::new();
    let rows = spin::sweep(spin::DEFAULT_STEPS).expect("sweep");
    c.require(rows.len() == 65, || format!("{} rows", rows.len()));
    for r in &rows {
        c.require(r.lhs14 >= 2.0, || format!("lhs14 {} < 2 at phi {}", r.lhs14, r.phi));
        c.require(r.lhs15 < 2.0, || format!("lhs15 {} >= 2 at phi {}", r.lhs15, r.phi));
        let (e14, e15) = ((r.lhs14 - lhs14_closed(r.phi)).abs(), (r.lhs15 - lhs15_closed(r.phi)).abs());
        c.require(e14 <= 1e-9, || format!("lhs14 off closed form by {e14:e} at phi {}", r.phi));
        c.require(e15 <= 1e-9, || format!("lhs15 off closed form by {e15:e} at phi {}", r.phi));
    }
    let min = rows.iter().min_by(|a, b| a.lhs14.total_cmp(&b.lhs14)).unwrap();
    let max = rows.iter().max_by(|a, b| a.lhs15.total_cmp(&b.lhs15)).unwrap();
    c.require(min.lhs14 >= 2.23, || format!("min lhs14 {}", min.lhs14));
    c.require(max.lhs15 <= 1.79, || format!("max lhs15 {}", max.lhs15));
    c.note(format!("min lhs14 = {:.8} at phi = {:.6}", min.lhs14, min.phi));
    c.note(format!("max lhs15 = {:.8} at phi = {:.6}", max.lhs15, max.phi));
    c
}

fn criterion_2() -> Check {
    let mut c = Check::new();
    let rows = spin::sweep(spin::DEFAULT_STEPS).expect("sweep");
    let mid = rows
        .iter()
        .find(|r| (r.phi - FRAC_PI_4).abs() < 1e-12)
        .expect("65-point grid contains pi/4");
    c.require((mid.ratio14 - 1.7653669).abs() <= 1e-6, || format!("UVH1 ratio {}", mid.ratio14));
    c.require((mid.ratio16 - 2.5307337).abs() <= 1e-6, || format!("OZ16 ratio {}", mid.ratio16));
    c.note(format!("ratio14 = {:.7}, ratio16 = {:.7}", mid.ratio14, mid.ratio16));
    c
}

fn criterion_3() -> Check {
    let mut c = Check::new();
    for (phi, eps, eta) in [(0.0, 0.0, SQRT_2), (FRAC_PI_2, SQRT_2, 0.0)] {
        let model = SpinScenario::new(phi).unwrap().dilated_model();
        let psi = StateVector::basis(2, 0);
        let q = quantities(&model, &psi);
        let (e, n) = (q.eps.unwrap(), q.eta.unwrap());
        c.require((e - eps).abs() <= 1e-9, || format!("eps {e} at phi {phi}"));
        c.require((n - eta).abs() <= 1e-9, || format!("eta {n} at phi {phi}"));
        let hedr = eval(RelationId::HEDR13, &q).unwrap();
        c.require(hedr.lhs.abs() <= 1e-9, || format!("eps*eta {} at phi {phi}", hedr.lhs));
        c.require((hedr.rhs - 1.0).abs() <= 1e-9 && !hedr.satisfied, || {
            format!("HEDR13 rhs {} satisfied {} at phi {phi}", hedr.rhs, hedr.satisfied)
        });
    }
    let rows = spin::sweep(2).unwrap();
    for r in &rows {
        c.require(r.lhs13.abs() <= 1e-9, || format!("sweep lhs13 {} at phi {}", r.lhs13, r.phi));
    }
    c
}

fn criterion_4() -> Check {
    let mut c = Check::new();
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let mut rng = trial_rng(SEED ^ 4, trial);
        let phi = rng.random_range(0.0..=FRAC_PI_2);
        let psi = random_state(&mut rng, 2);
        let scenario = SpinScenario::new(phi).unwrap();
        let projective = scenario.projective_model();
        let model = scenario.dilated_model();
        let de = (projective.error(&psi) - model.error(&psi)).abs();
        let dn = (projective.disturbance(&psi) - model.disturbance(&psi)).abs();
        worst = worst.max(de).max(dn);
        c.require(de <= 1e-10 && dn <= 1e-10, || format!("trial {trial}: phi {phi} diffs {de:e}, {dn:e}"));
    }
    c.note(format!("worst difference {worst:.2e}"));
    c
}

const INDIRECT_UNIVERSAL: [RelationId; 9] = [
    RelationId::R8,
    RelationId::R20,
    RelationId::R21,
    RelationId::OZ16,
    RelationId::UVH1,
    RelationId::HT30,
    RelationId::CHAIN12,
    RelationId::TRI25,
    RelationId::TRI29,
];

/// Violations of the universal relations, including both lines of the
/// triangle decompositions, as `(relation, slack)` pairs.
fn violations(ids: &[RelationId], q: &QuantitySet) -> Vec<(RelationId, f64)> {
    let mut out = Vec::new();
    for &id in ids {
        let r = eval(id, q).expect("quantities available");
        if r.slack < -SLACK_TOL {
            out.push((id, r.slack));
        }
        if let Some(bottom) = r.bottom_line {
            let slack = r.lhs - bottom;
            if slack < -SLACK_TOL {
                out.push((id, slack));
            }
        }
    }
    out
}

fn dims(rng: &mut impl Rng) -> (usize, usize) {
    (rng.random_range(2..=4), rng.random_range(2..=4))
}

fn criterion_5() -> Check {
    let mut c = Check::new();
    let indirect: Vec<(u64, RelationId, f64)> = (0..10_000u64)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let mut rng = trial_rng(SEED ^ 5, trial);
            let (ds, da) = dims(&mut rng);
            let model = random_model(&mut rng, ds, da);
            let psi = random_state(&mut rng, ds);
            violations(&INDIRECT_UNIVERSAL, &quantities(&model, &psi))
                .into_iter()
                .map(move |(id, s)| (trial, id, s))
        })
        .collect();
    let joint: Vec<(u64, RelationId, f64)> = (0..10_000u64)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let mut rng = trial_rng(SEED ^ 55, trial);
            let (ds, da) = dims(&mut rng);
            let model = random_joint_model(&mut rng, ds, da);
            let psi = random_state(&mut rng, ds);
            let q = joint_quantities(&model, &psi).expect("commuting meters");
            violations(&[RelationId::UAK35], &q)
                .into_iter()
                .map(move |(id, s)| (trial, id, s))
        })
        .collect();
    let arbitrary: Vec<(u64, RelationId, f64)> = (0..1_000u64)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let mut rng = trial_rng(SEED ^ 555, trial);
            let (ds, da) = dims(&mut rng);
            violations(&[RelationId::HT30], &arbitrary_ht30(&mut rng, ds, da))
                .into_iter()
                .map(move |(id, s)| (trial, id, s))
        })
        .collect();
    for (label, list) in [("indirect", &indirect), ("joint", &joint), ("arbitrary HT30", &arbitrary)] {
        for (trial, id, slack) in list.iter().take(5) {
            c.failures.push(format!("{label} trial {trial}: {id} slack {slack:e}"));
        }
        c.require(list.len() <= 5, || format!("{label}: {} violations in total", list.len()));
    }
    c.note("10000 indirect, 10000 joint, 1000 arbitrary HT30 instances".into());
    c
}

/// HT30 inputs from arbitrary Hermitian `M′`, `B′` on the composite space.
fn arbitrary_ht30(rng: &mut impl Rng, ds: usize, da: usize) -> QuantitySet {
    let id = Operator::identity(da);
    let a = tensor(&random_hermitian(rng, ds), &id);
    let b = tensor(&random_hermitian(rng, ds), &id);
    let m = random_hermitian(rng, ds * da);
    let bp = random_hermitian(rng, ds * da);
    let state = random_state(rng, ds * da);
    let sd = |o: &Operator| std_dev(o, &state).unwrap();
    QuantitySet {
        sigma_mout_minus_a: Some(sd(&(&m - &a))),
        sigma_mout: Some(sd(&m)),
        sigma_bout_minus_b: Some(sd(&(&bp - &b))),
        sigma_bout: Some(sd(&bp)),
        comm_ab: Some(expectation(&commutator(&a, &b).unwrap(), &state).unwrap().norm()),
        ..QuantitySet::default()
    }
}

fn criterion_6() -> Check {
    let mut c = Check::new();
    let mut tested = 0usize;
    let mut random_passing = 0usize;
    for trial in 0..2_000u64 {
        let mut rng = trial_rng(SEED ^ 6, trial);
        let model = if trial < 1_000 {
            let d = rng.random_range(2..=4);
            random_spectral_dilation(&mut rng, d, true)
        } else {
            let (ds, da) = dims(&mut rng);
            random_model(&mut rng, ds, da)
        };
        if !(model.is_unbiased_measurement() && model.is_unbiased_disturbance()) {
            continue;
        }
        let outputs = commutator(&model.meter_out(), &model.conjugate_out()).unwrap();
        if outputs.max_abs() > 1e-10 {
            continue;
        }
        if trial >= 1_000 {
            random_passing += 1;
        }
        tested += 1;
        for _ in 0..5 {
            let psi = random_state(&mut rng, model.layout().dim_system());
            let q = quantities(&model, &psi);
            let (lhs, rhs) = (q.comm_error_disturbance.unwrap(), q.comm_ab.unwrap());
            c.require((lhs - rhs).abs() <= 1e-9, || format!("trial {trial}: {lhs} vs {rhs}"));
        }
    }
    c.require(tested >= 1_000, || format!("only {tested} models passed both checks"));
    c.note(format!("{tested} models passed both checks ({random_passing} from unconstrained draws)"));
    c
}

fn criterion_7() -> Check {
    let mut c = Check::new();
    let mut precise = 0usize;
    let mut check = |c: &mut Check, model: &uncertainty::measurement::IndirectModel, psi: &StateVector| {
        let q = quantities(model, psi);
        if q.eps.unwrap() <= 1e-10 {
            precise += 1;
            let d = (q.sigma_mout.unwrap() - q.sigma_a.unwrap()).abs();
            c.require(d <= 1e-8, || format!("sigma difference {d:e}"));
        }
    };
    for trial in 0..1_000u64 {
        let mut rng = trial_rng(SEED ^ 7, trial);
        let d = rng.random_range(2..=4);
        let model = random_spectral_dilation(&mut rng, d, trial % 2 == 0);
        let psi = random_state(&mut rng, d);
        check(&mut c, &model, &psi);
        let (ds, da) = dims(&mut rng);
        let model = random_model(&mut rng, ds, da);
        let psi = random_state(&mut rng, ds);
        check(&mut c, &model, &psi);
    }
    check(&mut c, &SpinScenario::new(0.0).unwrap().dilated_model(), &StateVector::basis(2, 0));
    c.require(precise >= 1_000, || format!("only {precise} precise instances"));
    c.note(format!("{precise} instances with eps <= 1e-10"));
    c
}

fn criterion_8() -> Check {
    let mut c = Check::new();
    let mut worst = 0.0f64;
    for trial in 0..1_000u64 {
        let mut rng = trial_rng(SEED ^ 8, trial);
        let (ds, da) = dims(&mut rng);
        let o = gaussian_matrix(&mut rng, ds * da);
        let psi = random_state(&mut rng, ds);
        let psi_prime = gaussian_vector(&mut rng, ds);
        let xi = random_state(&mut rng, da);
        let polar = polarization_matrix_element(&o, &psi, &psi_prime, &xi).unwrap();
        let direct = direct_matrix_element(&o, &psi, &psi_prime, &xi).unwrap();
        let d = (polar - direct).norm();
        worst = worst.max(d);
        c.require(d <= 1e-12, || format!("trial {trial}: difference {d:e}"));
    }
    c.note(format!("worst difference {worst:.2e}"));
    c
}

fn criterion_9() -> Check {
    let mut c = Check::new();
    for n in -5..=5 {
        let r = check36(&make_plane_wave(n, 1.0, 1024).unwrap());
        c.require(r.lhs.abs() <= 1e-9 && r.rhs.abs() <= 1e-9, || {
            format!("plane:{n} lhs {} rhs {}", r.lhs, r.rhs)
        });
    }
    let rows: Vec<_> = (0..200u64)
        .into_par_iter()
        .map(|trial| {
            let w = seeded_band_limited(SEED ^ 9, trial, 1.0, 1024).unwrap();
            (trial, evaluate(&format!("random:{trial}"), &w))
        })
        .collect();
    let mut worst_q = f64::INFINITY;
    for (trial, row) in &rows {
        worst_q = worst_q.min(row.min_quadratic);
        c.require(row.report.slack >= -1e-8, || format!("random {trial}: slack {}", row.report.slack));
        c.require(row.min_quadratic >= -1e-10, || format!("random {trial}: min Q {}", row.min_quadratic));
    }
    let gauss = evaluate("gaussian", &make_wrapped_gaussian(0.05, 0.0, 1.0, 1024).unwrap());
    c.require(gauss.satisfied(), || format!("gaussian:0.05 slack {}", gauss.report.slack));
    let mut worst_shift = 0.0f64;
    for trial in 0..20u64 {
        let coarse = check36(&seeded_band_limited(SEED ^ 9, trial, 1.0, 1024).unwrap());
        let fine = check36(&seeded_band_limited(SEED ^ 9, trial, 1.0, 2048).unwrap());
        let shift = (coarse.lhs - fine.lhs).abs().max((coarse.rhs - fine.rhs).abs());
        worst_shift = worst_shift.max(shift);
        c.require(shift < 1e-8, || format!("random {trial}: grid doubling shifts by {shift:e}"));
    }
    let coarse = check36(&make_wrapped_gaussian(0.05, 0.0, 1.0, 1024).unwrap());
    let fine = check36(&make_wrapped_gaussian(0.05, 0.0, 1.0, 2048).unwrap());
    let shift = (coarse.lhs - fine.lhs).abs().max((coarse.rhs - fine.rhs).abs());
    worst_shift = worst_shift.max(shift);
    c.require(shift < 1e-8, || format!("gaussian: grid doubling shifts by {shift:e}"));
    c.note(format!("min Q over sweeps {worst_q:.3e}, worst doubling shift {worst_shift:.2e}"));
    c
}

fn criterion_10() -> Check {
    let mut c = Check::new();
    let config = SearchConfig::new(RelationId::MAK9, 4_000, 42).with_spin_injection();
    let first = search(&config).unwrap();
    let second = search(&config).unwrap();
    c.require(first == second, || "repeat run differs".into());
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let other = pool.install(|| search(&config)).unwrap();
        c.require(first == other, || format!("{threads}-thread run differs"));
    }
    for (target, expected) in [(RelationId::MAK9, 2.0 - 3f64.sqrt()), (RelationId::HEDR13, 1.0)] {
        let config = SearchConfig::new(target, 200, 42).with_spin_injection();
        let outcome = search(&config).unwrap();
        match outcome.witnesses.iter().find(|w| w.trial == 0) {
            Some(w) => {
                c.require((w.margin - expected).abs() <= 1e-9, || format!("{target} margin {}", w.margin));
                c.note(format!("{target} spin margin {:.10}", w.margin));
            }
            None => c.failures.push(format!("{target}: spin model not reported as a witness")),
        }
    }
    c.note(format!("{} MAK9 witnesses in 4000 trials", first.witnesses.len()));
    c
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("sweep bounds", criterion_1),
        ("normalized ratios at pi/4", criterion_2),
        ("endpoint values", criterion_3),
        ("dilation faithfulness", criterion_4),
        ("universality", criterion_5),
        ("unbiasedness collapse", criterion_6),
        ("precise measurement", criterion_7),
        ("polarization identity", criterion_8),
        ("periodic box", criterion_9),
        ("witness search determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let check = run();
        let secs = start.elapsed().as_secs_f64();
        let status = if check.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} criterion {} ({name}) [{secs:.2}s] {}", k + 1, check.notes.join("; "));
        for f in &check.failures {
            println!("    {f}");
        }
        if !check.failures.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
