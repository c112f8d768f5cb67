//! Monte Carlo behavior of the detectors, with the channel module's
//! genericity and perfectness predicates deciding which trials each
//! guarantee applies to.

use ddchirp_core::ambiguity::{ambiguity_on_line, ambiguity_on_line_with, dft::DftPlan};
use ddchirp_core::channel::{
    apply_channel, is_generic, noiseless_channel, perfectness, random_scene, Perfectness, Snr,
};
use ddchirp_core::detect::{
    detect_cross, detect_incidence, hypothesis, noise_floor, peaks_on_line, Thresholds,
    ROUNDOFF_GUARD,
};
use ddchirp_core::modarith::random_distinct_lines;
use ddchirp_core::signal::{chirp, pseudorandom_sequence, Character, ChirpId};
use ddchirp_core::{Modulus, PlanePoint, Sequence};
use rand_core::SeedableRng;

fn m(n: u32) -> Modulus {
    Modulus::new(n).unwrap()
}

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn sorted(mut points: Vec<PlanePoint>) -> Vec<PlanePoint> {
    points.sort();
    points
}

fn contains_all(haystack: &[PlanePoint], needles: &[PlanePoint]) -> bool {
    needles.iter().all(|p| haystack.contains(p))
}

// ---------------------------------------------------------------------------
// Noiseless guarantees
// ---------------------------------------------------------------------------

#[test]
fn incidence_is_exact_on_applicable_noiseless_scenes() {
    let modulus = m(199);
    let mut trial_rng = rng(60);
    let trials = 60;
    let mut applicable = 0;
    for trial in 0..trials {
        let spec = random_scene(modulus, &[0.5, 0.4, 0.3], 0.0, &mut trial_rng).unwrap();
        let lines = random_distinct_lines(modulus, 3, &mut trial_rng).unwrap();
        if perfectness(modulus, &spec.support(), &lines) != Perfectness::Perfect {
            continue;
        }
        applicable += 1;
        let ids = [
            ChirpId { line: lines[0], b: 0 },
            ChirpId { line: lines[1], b: 0 },
            ChirpId { line: lines[2], b: 0 },
        ];
        let echoes: Vec<Sequence> = ids
            .iter()
            .map(|&id| noiseless_channel(&spec, &chirp(modulus, id)).unwrap())
            .collect();
        let report = detect_incidence(
            ids,
            [&echoes[0], &echoes[1], &echoes[2]],
            Thresholds::default(),
            spec.snr(),
        )
        .unwrap();
        assert_eq!(
            report.points(),
            sorted(spec.support()),
            "trial {trial}: lines {lines:?}"
        );
    }
    // The geometry bounds put the applicable fraction near 0.87; demand at
    // least three quarters so a regression in the predicates shows up.
    assert!(
        applicable >= 45,
        "only {applicable}/{trials} scenes were generic and perfect"
    );
}

#[test]
fn cross_keeps_every_true_target_on_generic_noiseless_scenes() {
    let modulus = m(199);
    let mut trial_rng = rng(61);
    let trials = 60;
    let mut generic_trials = 0;
    let mut ghost_trials = 0;
    for _ in 0..trials {
        let spec = random_scene(modulus, &[0.5, 0.4, 0.3], 0.0, &mut trial_rng).unwrap();
        let lines = random_distinct_lines(modulus, 2, &mut trial_rng).unwrap();
        let support = spec.support();
        if !is_generic(modulus, &support, lines[0]) || !is_generic(modulus, &support, lines[1]) {
            continue;
        }
        generic_trials += 1;
        let ids = [
            ChirpId { line: lines[0], b: 0 },
            ChirpId { line: lines[1], b: 0 },
        ];
        let echoes: Vec<Sequence> = ids
            .iter()
            .map(|&id| noiseless_channel(&spec, &chirp(modulus, id)).unwrap())
            .collect();
        let report = detect_cross(
            ids,
            [&echoes[0], &echoes[1]],
            Thresholds::default(),
            spec.snr(),
        )
        .unwrap();
        let points = report.points();
        assert!(
            contains_all(&points, &support),
            "a true target is missing: {points:?} vs {support:?}"
        );
        if points.len() > support.len() {
            ghost_trials += 1;
        }
    }
    assert!(generic_trials >= 45, "only {generic_trials} generic trials");
    // Ghost pairs need a near-exact phase coincidence in the noiseless
    // cancellation; with continuous random attenuation phases they should
    // be vanishingly rare.
    assert!(
        ghost_trials <= 2,
        "{ghost_trials}/{generic_trials} generic trials accepted a ghost pair"
    );
}

#[test]
fn false_pairs_sit_far_above_the_accept_tolerance() {
    let modulus = m(199);
    let mut trial_rng = rng(62);
    let trials = 30;
    let mut generic_trials = 0;
    let mut clean_trials = 0;
    for _ in 0..trials {
        let spec = random_scene(modulus, &[0.5, 0.4, 0.3], 0.0, &mut trial_rng).unwrap();
        let lines = random_distinct_lines(modulus, 2, &mut trial_rng).unwrap();
        let support = spec.support();
        if !is_generic(modulus, &support, lines[0]) || !is_generic(modulus, &support, lines[1]) {
            continue;
        }
        generic_trials += 1;
        let ids = [
            ChirpId { line: lines[0], b: 0 },
            ChirpId { line: lines[1], b: 0 },
        ];
        let c_l = chirp(modulus, ids[0]);
        let c_m = chirp(modulus, ids[1]);
        let r_l = noiseless_channel(&spec, &c_l).unwrap();
        let r_m = noiseless_channel(&spec, &c_m).unwrap();
        let plan = DftPlan::new(199);
        let on_l =
            ambiguity_on_line_with(&plan, &c_m, &r_m, lines[0].through_origin()).unwrap();
        let on_m =
            ambiguity_on_line_with(&plan, &c_l, &r_l, lines[1].through_origin()).unwrap();
        let ls = peaks_on_line(&on_l, ROUNDOFF_GUARD);
        let ms = peaks_on_line(&on_m, ROUNDOFF_GUARD);
        let psi_l = Character::of(ids[0]);
        let psi_m = Character::of(ids[1]);
        let mut all_clear = true;
        for l in &ls.peaks {
            for mm in &ms.peaks {
                let v = l.point.add(modulus, mm.point);
                if support.contains(&v) {
                    continue;
                }
                let h = hypothesis(modulus, mm.value, l.value, l.point, mm.point, &psi_l, &psi_m)
                    .unwrap();
                if h.norm() <= 10.0 * ROUNDOFF_GUARD {
                    all_clear = false;
                }
            }
        }
        if all_clear {
            clean_trials += 1;
        }
    }
    assert!(generic_trials >= 20, "only {generic_trials} generic trials");
    assert!(
        clean_trials * 10 >= generic_trials * 9,
        "{clean_trials}/{generic_trials} trials had all false pairs clear of the tolerance"
    );
}

// ---------------------------------------------------------------------------
// Noisy behavior
// ---------------------------------------------------------------------------

#[test]
fn noisy_recovery_holds_at_the_detectability_margin() {
    // Attenuations one threshold unit above the noise floor: recovery
    // (every true target appears) should dominate.
    let modulus = m(199);
    let sigma = 0.05;
    let snr = Snr::from_sigma(modulus, sigma);
    let floor = noise_floor(modulus, snr);
    assert!(
        0.4 > (Thresholds::default().peak + 1.0) * floor,
        "premise: magnitude 0.4 sits above the detectability margin"
    );

    let mut trial_rng = rng(63);
    let trials = 60;
    let mut incidence_applicable = 0;
    let mut incidence_recovered = 0;
    let mut cross_applicable = 0;
    let mut cross_recovered = 0;
    for _ in 0..trials {
        let spec = random_scene(modulus, &[0.4, 0.4, 0.4], sigma, &mut trial_rng).unwrap();
        let support = spec.support();
        let lines = random_distinct_lines(modulus, 3, &mut trial_rng).unwrap();
        let ids = [
            ChirpId { line: lines[0], b: 0 },
            ChirpId { line: lines[1], b: 0 },
            ChirpId { line: lines[2], b: 0 },
        ];
        let echoes: Vec<Sequence> = ids
            .iter()
            .map(|&id| apply_channel(&spec, &chirp(modulus, id), &mut trial_rng).unwrap())
            .collect();

        if perfectness(modulus, &support, &lines) == Perfectness::Perfect {
            incidence_applicable += 1;
            let report = detect_incidence(
                ids,
                [&echoes[0], &echoes[1], &echoes[2]],
                Thresholds::default(),
                snr,
            )
            .unwrap();
            if contains_all(&report.points(), &support) {
                incidence_recovered += 1;
            }
        }
        if is_generic(modulus, &support, lines[0]) && is_generic(modulus, &support, lines[1]) {
            cross_applicable += 1;
            let report = detect_cross(
                [ids[0], ids[1]],
                [&echoes[0], &echoes[1]],
                Thresholds::default(),
                snr,
            )
            .unwrap();
            if contains_all(&report.points(), &support) {
                cross_recovered += 1;
            }
        }
    }
    assert!(incidence_applicable >= 40, "incidence: {incidence_applicable} applicable");
    assert!(cross_applicable >= 45, "cross: {cross_applicable} applicable");
    assert!(
        incidence_recovered * 10 >= incidence_applicable * 8,
        "incidence recovery {incidence_recovered}/{incidence_applicable}"
    );
    assert!(
        cross_recovered * 10 >= cross_applicable * 8,
        "cross recovery {cross_recovered}/{cross_applicable}"
    );
}

// ---------------------------------------------------------------------------
// Scaling sanity
// ---------------------------------------------------------------------------

#[test]
#[ignore = "timing-sensitive; run explicitly via cargo test -- --ignored"]
fn fast_line_restriction_outruns_entrywise_evaluation() {
    use ddchirp_core::ambiguity::ambiguity_entry;
    use std::time::Instant;

    let modulus = m(4999);
    let f = pseudorandom_sequence(modulus, &mut rng(64));
    let g = pseudorandom_sequence(modulus, &mut rng(65));
    let line = ddchirp_core::PlaneLine::Finite(123).through_origin();

    let started = Instant::now();
    let profile = ambiguity_on_line(&f, &g, line).unwrap();
    let fast = started.elapsed();

    let started = Instant::now();
    let mut worst = 0.0f64;
    for (p, value) in profile.points() {
        let direct = ambiguity_entry(&f, &g, p).unwrap();
        worst = worst.max((value - direct).norm());
    }
    let brute = started.elapsed();

    assert!(worst < 1e-9, "agreement at N=4999: worst {worst}");
    let speedup = brute.as_secs_f64() / fast.as_secs_f64().max(1e-9);
    assert!(
        speedup >= 10.0,
        "expected at least 10x speedup, measured {speedup:.1}x"
    );
}
