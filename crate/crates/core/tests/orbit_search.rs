use r3bp_core::dynamics::{evaluate_h, to_original, FixComponent, Frame, Primary};
use r3bp_core::orbit::*;
use r3bp_core::regularization::{birkhoff_map, KParams};
use std::f64::consts::PI;

fn moon_search(d: f64) -> SearchReport<f64> {
    let params = KParams { mu: 0.0, d };
    search_orbits(&SearchSpec { primary: Primary::Moon, params, n_psi: 64, t_max: 8.0, shoot: ShootOptions::default() })
}

fn away_from_collisions(o: &SymmetricOrbit<f64>) -> impl Iterator<Item = r3bp_core::regularization::RegState<f64>> + '_ {
    o.full_samples()
        .into_iter()
        .map(|(_, s)| s)
        .filter(|s| (s.z1 + 0.5).hypot(s.z2) > 0.05 && (s.z1 - 0.5).hypot(s.z2) > 0.05)
}

#[test]
fn search_finds_consecutive_moon_orbit() {
    let rep = moon_search(-1.499);
    let first = rep.orbits.iter().find(|o| o.is_consecutive()).expect("consecutive orbit");
    assert_eq!(first.hit, FixComponent::LeftOfMoon);
    assert!(first.residual <= 1e-10 && first.symmetry_error <= 1e-8);
    // Rotating Kepler: the consecutive chord leaves at a quarter period.
    let a = 1.0f64 / (2.0 * 1.499);
    let quarter = 2.0 * PI * a.powf(1.5) / 4.0;
    let folded = first.psi.rem_euclid(PI).min(PI - first.psi.rem_euclid(PI));
    assert!((folded - quarter.min(PI - quarter)).abs() < 1e-6, "psi {} quarter {}", first.psi, quarter);
    for w in rep.orbits.windows(2) {
        assert!(w[0].tau <= w[1].tau);
    }
}

#[test]
fn energy_and_angular_momentum_along_orbits() {
    let rep = moon_search(-1.499);
    assert!(!rep.orbits.is_empty());
    for o in &rep.orbits {
        for s in away_from_collisions(o) {
            let x = birkhoff_map(s).unwrap();
            let h = evaluate_h(x, 0.0, Frame::Centered).unwrap();
            assert!((h - o.params.d).abs() < 1e-8, "H = {h}");
            // Collision orbits of the rotating Kepler problem lie on L = 0.
            let y = to_original(x, 0.0, Frame::Centered);
            let l = y.q1 * y.p2 - y.q2 * y.p1;
            assert!(l.abs() < 1e-8, "L = {l}");
        }
    }
}

#[test]
fn deck_images_share_a_class() {
    let rep = moon_search(-1.499);
    let o = rep.orbits.iter().find(|o| o.is_consecutive()).unwrap();
    let img = shoot(
        &ShootingSeed { primary: o.primary, psi: o.psi + PI, t: o.tau, params: o.params },
        &ShootOptions::default(),
    )
    .unwrap();
    assert!((img.tau - o.tau).abs() < 1e-9);
    let opts = ClassifyOptions { periodicity_horizon: 5.0, ..Default::default() };
    let cl = classify_orbits(&[o.clone(), img], &opts).unwrap();
    assert_eq!(cl.classes.len(), 1);
    assert_eq!(cl.classes[0].members, vec![0, 1]);
}

#[test]
fn distinct_orbits_are_distinct_classes() {
    let params = EnergySpec::OffsetAboveL1(1e-3).params(0.01).unwrap();
    let rep = search_orbits(&SearchSpec { primary: Primary::Earth, params, n_psi: 32, t_max: 20.0, shoot: ShootOptions::default() });
    assert!(rep.orbits.len() >= 2, "{} orbits", rep.orbits.len());
    let two = &rep.orbits[..2];
    assert!(two.iter().all(|o| o.hit == FixComponent::RightOfEarth));
    let opts = ClassifyOptions { periodicity_horizon: 5.0, ..Default::default() };
    let cl = classify_orbits(two, &opts).unwrap();
    assert_eq!(cl.classes.len(), 2);
}

fn kepler_orbit(n: i32) -> SymmetricOrbit<f64> {
    // Ellipse period 2 pi / n: the orbit closes after n collisions.
    let a = (1.0 / n as f64).powf(2.0 / 3.0);
    let rep = moon_search(-1.0 / (2.0 * a));
    rep.orbits.into_iter().find(|o| o.is_consecutive()).expect("consecutive orbit")
}

#[test]
fn odd_collision_period_is_flagged() {
    let o = kepler_orbit(5);
    let opts = ClassifyOptions { periodicity_horizon: 60.0, ..Default::default() };
    let (info, ps) = detect_periodicity(&o, &opts).unwrap().expect("periodic");
    assert_eq!(info.collisions, 5);
    assert_eq!(ps.len(), 5);
    assert!(ps.windows(2).all(|w| w[0].t < w[1].t) && ps[4].t < info.period);
    let cl = classify_orbits(&[o], &opts).unwrap();
    assert_eq!(cl.classes[0].odd_collision_period, Some(true));
    assert!(cl.note.starts_with("odd-collision periodic orbit found"));
}

#[test]
fn periodic_orbit_traversed_twice_is_one_class() {
    let o = kepler_orbit(6);
    let opts = ClassifyOptions { periodicity_horizon: 60.0, ..Default::default() };
    let (info, _) = detect_periodicity(&o, &opts).unwrap().expect("periodic");
    assert_eq!(info.collisions, 6);
    // Half a period on, the symmetric point sits on the far side of the Moon,
    // so the next turn on the same axis component is one full period on.
    let long = shoot(
        &ShootingSeed { primary: o.primary, psi: o.psi, t: o.tau + info.period, params: o.params },
        &ShootOptions::default(),
    )
    .unwrap();
    assert!((long.tau - o.tau - info.period).abs() < 1e-7);
    assert!(!long.is_consecutive());
    let cl = classify_orbits(&[o, long], &opts).unwrap();
    assert_eq!(cl.classes.len(), 1, "{:?}", cl.classes);
    assert_eq!(cl.classes[0].members, vec![0, 1]);
    assert_eq!(cl.classes[0].odd_collision_period, Some(false));
    assert!(cl.note.starts_with("no odd-collision"));
}

#[test]
fn continuation_from_kepler_is_continuous() {
    let rep = moon_search(-1.499);
    let o = rep.orbits.iter().find(|o| o.is_consecutive()).unwrap();
    let energy = EnergySpec::OffsetAboveL1(1e-3);
    let start = shoot(
        &ShootingSeed { primary: o.primary, psi: o.psi, t: o.tau, params: energy.params(0.0).unwrap() },
        &ShootOptions::default(),
    )
    .unwrap();
    let ob = continue_in_mu(&start, energy, 0.01, &ContinuationOptions::default(), &ShootOptions::default()).unwrap();
    assert_eq!(ob.branch.status, BranchStatus::Completed);
    let pts = &ob.branch.points;
    assert_eq!(pts.last().unwrap().mu, 0.01);
    for w in pts.windows(2) {
        let dmu = w[1].mu - w[0].mu;
        assert!(dmu > 0.0);
        let dtau = (w[1].solution.x[1] - w[0].solution.x[1]).abs();
        assert!(dtau <= ob.branch.max_slope * dmu + 1e-12);
        assert!(dtau < 0.05, "tau jump {dtau} at mu {}", w[1].mu);
        assert!(w[1].solution.residual <= 1e-10);
    }
    let end = ob.orbit.expect("rebuilt orbit");
    assert_eq!(end.hit, FixComponent::LeftOfMoon);
    assert!(end.symmetry_error < 1e-8);
}
