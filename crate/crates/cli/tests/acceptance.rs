//! One line per acceptance criterion; exits nonzero if any fails.

#[path = "../../core/tests/support/kepler_oracle.rs"]
#[allow(dead_code)]
mod kepler_oracle;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use r3bp_core::dynamics::{lagrange_points, primary_positions, FixComponent, Frame, Primary};
use r3bp_core::floer::{build_rfc, equivariant_quotient, forced_boundary, homology};
use r3bp_core::orbit::*;
use r3bp_core::reeb::{psi_path, robbin_salamon_index, ChordFamily, HalfInteger};
use r3bp_core::regularization::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// `H` of the restricted problem written in the original frame (origin at
/// the center of mass, Earth of mass `mu` at `1 - mu`), for a centered-frame
/// position `q`.
fn h_oracle(q: Complex64, p: Complex64, mu: f64) -> f64 {
    let qo = q + (0.5 - mu);
    0.5 * p.norm_sqr() + p.re * qo.im - p.im * qo.re - mu / (qo - (1.0 - mu)).norm() - (1.0 - mu) / (qo + mu).norm()
}

fn grad_h_oracle(q: Complex64, p: Complex64, mu: f64) -> [f64; 4] {
    let qo = q + (0.5 - mu);
    let (re, rm) = (qo - (1.0 - mu), qo + mu);
    let (de, dm) = (re.norm().powi(3), rm.norm().powi(3));
    [
        -p.im + mu * re.re / de + (1.0 - mu) * rm.re / dm,
        p.re + mu * re.im / de + (1.0 - mu) * rm.im / dm,
        p.re + qo.im,
        p.im - qo.re,
    ]
}

fn ac1() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (mu, d) = (rng.gen_range(0.01..0.99), rng.gen_range(-2.5..-1.3));
        for _ in 0..10_000 {
            let z = Complex64::from_polar(rng.gen_range(0.05..3.0), rng.gen_range(0.0..2.0 * PI));
            let w = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if (z - 0.5).norm() < 1e-3 || (z + 0.5).norm() < 1e-3 {
                continue;
            }
            // Cotangent lift of b(z): w = conj(b'(z)) p.
            let q = (z * z + 0.25) / (2.0 * z);
            let db = 0.5 - 1.0 / (8.0 * z * z);
            let p = w / db.conj();
            let oracle = (q - 0.5).norm() * (q + 0.5).norm() * (h_oracle(q, p, mu) - d);
            let k = evaluate_k(RegState::from_complex(z, w), KParams { mu, d }, KVariant::Pullback).unwrap();
            worst = worst.max((k - oracle).abs() / (1.0 + k.abs()));
        }
    }
    let el = t0.elapsed();
    verdict(worst <= 1e-10 && el < Duration::from_secs(5), format!("max rel defect {worst:.2e}, {el:.2?}"))
}

fn ac2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut exact = true;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let w = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let theta = rng.gen_range(0.0..2.0 * PI);
        for (which, sign) in [(Primary::Moon, 1.0), (Primary::Earth, -1.0)] {
            let expect = w * w * (sign / 8.0);
            let m = moser_birkhoff(RegState::from_complex(Complex64::new(0.0, 0.0), w), which).unwrap();
            exact &= m.x == [0.0, 0.0, 1.0] && m.fiber == expect;
            let vals: Vec<Complex64> = (3..=6)
                .map(|k| moser_birkhoff(RegState::from_complex(Complex64::from_polar(10f64.powi(-k), theta), w), which).unwrap().fiber)
                .collect();
            let r1: Vec<Complex64> = vals.windows(2).map(|p| (p[1] * 10.0 - p[0]) / 9.0).collect();
            let r2: Vec<Complex64> = r1.windows(2).map(|p| (p[1] * 100.0 - p[0]) / 99.0).collect();
            worst = worst.max((r2[1] - expect).norm());
        }
    }
    verdict(exact && worst <= 1e-6, format!("exact at z'=0: {exact}, extrapolation error {worst:.2e}"))
}

fn ac3() -> Verdict {
    let t0 = Instant::now();
    let mut ok = true;
    let mut got = Vec::new();
    for family in [ChordFamily::G1, ChordFamily::G2] {
        for k in 1..=5i64 {
            let ix = robbin_salamon_index(&psi_path(k as f64 * PI, family).unwrap()).unwrap();
            ok &= ix == HalfInteger(2 * k + 1);
            got.push(ix.to_string());
        }
    }
    let el = t0.elapsed();
    verdict(ok && el < Duration::from_secs(1), format!("indices {} in {el:.2?}", got.join(" ")))
}

fn ac4() -> Verdict {
    let t0 = Instant::now();
    let cx = forced_boundary(build_rfc((-8, 9)).unwrap()).unwrap();
    let plain: Vec<usize> = homology(&cx).iter().filter(|r| r.reliable).map(|r| r.rank).collect();
    let q = equivariant_quotient(&cx).unwrap();
    let eq: Vec<usize> = homology(&q).iter().filter(|r| r.reliable).map(|r| r.rank).collect();
    let el = t0.elapsed();
    let pass = !plain.is_empty()
        && plain.len() == eq.len()
        && plain.iter().all(|&r| r == 0)
        && eq.iter().all(|&r| r == 1)
        && el < Duration::from_secs(1);
    verdict(pass, format!("{} interior degrees, plain {:?}, equivariant {:?}, {el:.2?}", plain.len(), plain, eq))
}

fn level_state(rng: &mut ChaCha8Rng, params: KParams<f64>) -> RegState<f64> {
    loop {
        let z = Complex64::from_polar(rng.gen_range(0.3..1.2), rng.gen_range(0.0..2.0 * PI));
        let dir = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
        let kf = |s: f64| evaluate_k(RegState::from_complex(z, dir * s), params, KVariant::Pullback).unwrap();
        let (mut a, mut b) = (0.0, 20.0);
        if kf(a) >= 0.0 || kf(b) <= 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if kf(m) < 0.0 {
                a = m
            } else {
                b = m
            }
        }
        return RegState::from_complex(z, dir * a);
    }
}

fn dist(a: RegState<f64>, b: RegState<f64>) -> f64 {
    let (a, b) = (a.to_array(), b.to_array());
    (0..4).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn ac5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = IntegrationOptions::default();
    let (mut rev, mut dk) = (0.0f64, 0.0f64);
    let (mut done, mut skipped) = (0, 0);
    while done < 100 {
        let params = KParams { mu: rng.gen_range(0.01..0.99), d: rng.gen_range(-2.2..-1.5) };
        let x0 = level_state(&mut rng, params);
        let Ok(fwd) = integrate(x0, params, (0.0, 1.0), &opts) else {
            skipped += 1;
            continue;
        };
        let x1 = fwd.end();
        let back = integrate(rho1(x1), params, (0.0, 1.0), &opts).unwrap();
        rev = rev.max(dist(back.end(), rho1(x0)));
        let Ok(img) = integrate(deck(x0).unwrap(), params, (0.0, 1.0), &opts) else {
            skipped += 1;
            continue;
        };
        dk = dk.max(dist(img.end(), deck(x1).unwrap()));
        done += 1;
    }
    verdict(rev <= 1e-8 && dk <= 1e-8, format!("reversal {rev:.2e}, deck {dk:.2e} over {done} trajectories ({skipped} resampled)"))
}

fn ac6() -> Verdict {
    let mu = 0.5;
    let ld = lagrange_points(mu, Frame::Centered).unwrap();
    let d = ld.values[0] + 1e-3 * (ld.values[1] - ld.values[0]);
    let sampling = SamplingSpec { n_samples: 10_000, seed: 6, ..Default::default() };
    match contact_transversality_check(Surface::MoserConnected { d }, mu, &sampling) {
        Ok(r) => verdict(
            r.n_samples == 10_000 && r.sign_changes == 0,
            format!("{} pairings in [{:.3e}, {:.3e}], {} off-sign", r.n_samples, r.min_pairing, r.max_pairing, r.sign_changes),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn ac7() -> Verdict {
    use kepler_oracle::KeplerCollision;
    let t0 = Instant::now();
    let energy = EnergySpec::OffsetAboveL1(1e-3);
    let p0 = energy.params(0.0).unwrap();
    let shoot_opts = ShootOptions::default();
    let rep = search_orbits(&SearchSpec { primary: Primary::Moon, params: p0, n_psi: 64, t_max: 8.0, shoot: shoot_opts });
    let k = KeplerCollision::symmetric(p0.d);
    let tau = k.regularized_time(PI);
    let matches = |o: &SymmetricOrbit<f64>| {
        o.is_consecutive()
            && o.hit == FixComponent::LeftOfMoon
            && (o.tau - tau).abs() <= 1e-6
            && [0.3, PI / 2.0, 2.5, PI].iter().all(|&e| {
                let s = o.half.state_at(k.regularized_time(e));
                k.birkhoff(e).iter().any(|(z, w)| ((s.z() - z).norm_sqr() + (s.w() - w).norm_sqr()).sqrt() <= 1e-6)
            })
    };
    let Some(kepler) = rep.orbits.iter().find(|o| matches(o)) else {
        return verdict(false, format!("no orbit of {} matches the Kepler oracle", rep.orbits.len()));
    };
    let ob = continue_in_mu(kepler, energy, 0.01, &ContinuationOptions::default(), &shoot_opts).unwrap();
    let last_mu = ob.branch.points.last().unwrap().mu;
    let branch_res = ob.branch.points.iter().map(|p| p.solution.residual).fold(0.0, f64::max);
    let reached = ob.branch.status == BranchStatus::Completed && last_mu == 0.01 && branch_res <= 1e-10;
    let p1 = energy.params(0.01).unwrap();
    let earth = search_orbits(&SearchSpec { primary: Primary::Earth, params: p1, n_psi: 64, t_max: 40.0, shoot: shoot_opts });
    let good: Vec<&SymmetricOrbit<f64>> = earth
        .orbits
        .iter()
        .filter(|o| o.is_consecutive() && o.hit == FixComponent::RightOfEarth && o.residual <= 1e-10 && o.symmetry_error <= 1e-8)
        .collect();
    let el = t0.elapsed();
    verdict(
        reached && !good.is_empty() && el < Duration::from_secs(120),
        format!(
            "Kepler match tau {:.9}; branch to mu {last_mu} in {} points, max residual {branch_res:.1e}; {} Earth orbits at mu 0.01 (first tau {:.6}); {el:.2?}",
            kepler.tau,
            ob.branch.points.len(),
            good.len(),
            good.first().map_or(f64::NAN, |o| o.tau)
        ),
    )
}

fn ac8() -> Verdict {
    let d = (8.0 * PI).powf(-1.0 / 3.0);
    let k = kepler_periodicity(d, 1e-12, 1000).unwrap();
    let oracle = (PI / (2.0 * d * d * d)).sqrt() / (2.0 * PI);
    verdict(
        (k.ratio - 1.0).abs() <= 1e-12 && (oracle - 1.0).abs() <= 1e-12 && k.periodicity == Periodicity::Periodic { num: 1, den: 1 },
        format!("T/(2 pi) = {:.16}, {:?}", k.ratio, k.periodicity),
    )
}

fn ac9() -> Verdict {
    let mut worst_grad: f64 = 0.0;
    let mut worst_eq: f64 = 0.0;
    let mut ordered = true;
    for mu in [0.01, 0.1, 0.5] {
        let ld = lagrange_points(mu, Frame::Centered).unwrap();
        for p in ld.points {
            let g = grad_h_oracle(Complex64::new(p.q1, p.q2), Complex64::new(p.p1, p.p2), mu);
            worst_grad = worst_grad.max(g.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        ordered &= ld.values[0] < ld.values[1];
        let (xe, xm) = primary_positions(mu, Frame::Centered);
        for p in &ld.points[3..] {
            let de = (p.q1 - xe).hypot(p.q2);
            let dm = (p.q1 - xm).hypot(p.q2);
            worst_eq = worst_eq.max((de - 1.0).abs()).max((dm - 1.0).abs());
        }
    }
    verdict(
        worst_grad <= 1e-12 && ordered && worst_eq <= 1e-12,
        format!("max |grad H| {worst_grad:.1e}, H(L1) < H(L2): {ordered}, equilateral error {worst_eq:.1e}"),
    )
}

fn run_job(dir: &Path, args: &[&str]) -> Result<(), String> {
    let st = Command::new(env!("CARGO_BIN_EXE_r3bp"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .status()
        .map_err(|e| e.to_string())?;
    if st.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {st}"))
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn ac10() -> Verdict {
    let jobs: &[&[&str]] = &[
        &["lagrange", "--mu", "0.1"],
        &["regcheck", "--seed", "7", "--states", "500"],
        &["transversality", "--seed", "3", "--samples", "500"],
        &["chords", "--action-bound", "12", "--homotopy", "all"],
        &["index", "--family", "g2", "--k", "4"],
        &["homology", "--window", "-5", "6", "--equivariant"],
        &["shoot"],
        &["continue"],
        &["kepler"],
        &["classify", "--horizon", "10"],
    ];
    let root = tempdir();
    let mut files = 0;
    for (j, args) in jobs.iter().enumerate() {
        let runs: Vec<Vec<(String, Vec<u8>)>> = ["a", "b"]
            .iter()
            .map(|r| {
                let dir = root.join(format!("{j}{r}"));
                run_job(&dir, args).map(|_| dir_bytes(&dir))
            })
            .collect::<Result<_, _>>()
            .unwrap_or_else(|e| panic!("{e}"));
        if runs[0] != runs[1] || runs[0].is_empty() {
            return verdict(false, format!("{args:?} differs between runs"));
        }
        files += runs[0].len();
    }
    // Thread count must not change the bytes either.
    let (a, b) = (root.join("t1"), root.join("t4"));
    run_job(&a, &["shoot", "--threads", "1"]).unwrap();
    run_job(&b, &["shoot", "--threads", "4"]).unwrap();
    let same_threads = dir_bytes(&a) == dir_bytes(&b);
    let _ = std::fs::remove_dir_all(&root);
    verdict(same_threads, format!("{} jobs, {files} files byte-identical; 1 vs 4 threads identical: {same_threads}", jobs.len()))
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("r3bp-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn main() {
    let criteria: [(&str, &str, fn() -> Verdict); 10] = [
        ("AC1", "pullback identity", ac1),
        ("AC2", "collision-locus extension", ac2),
        ("AC3", "Robbin-Salamon indices", ac3),
        ("AC4", "homology ranks", ac4),
        ("AC5", "symmetry conjugations", ac5),
        ("AC6", "contact transversality", ac6),
        ("AC7", "orbit discovery", ac7),
        ("AC8", "Kepler periodicity", ac8),
        ("AC9", "Lagrange points", ac9),
        ("AC10", "determinism", ac10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let v = std::panic::catch_unwind(f).unwrap_or_else(|_| verdict(false, "panicked"));
        println!("{id:<5} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
