use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use r3bp_core::dynamics::{gradient_h, lagrange_points, primary_positions, Primary};
use r3bp_core::floer::{build_rfc, equivariant_quotient, forced_boundary, homology};
use r3bp_core::orbit::*;
use r3bp_core::reeb::{enumerate_chords, psi_path, robbin_salamon_index, Chord};
use r3bp_core::regularization::{
    contact_transversality_check, evaluate_k, k_composed, moser_birkhoff, KParams, KVariant, RegState, SamplingSpec,
    Surface,
};
use r3bp_core::Error;

use crate::config::*;
use crate::output::csv_rows;
use crate::CliError;

/// Result of one command: the `result` member of the document, extra files
/// to write next to it, and an optional failure reported after writing.
pub struct Outcome {
    pub result: Value,
    pub files: Vec<(String, String)>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, files: Vec::new(), failure: None }
    }
}

fn lower<T: std::fmt::Debug>(x: T) -> String {
    let s = format!("{x:?}");
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if ch.is_uppercase() && i > 0 {
            out.push('_');
        }
        out.extend(ch.to_lowercase());
    }
    out
}

pub fn lagrange(cfg: &LagrangeConfig) -> Result<Outcome, CliError> {
    let frame = cfg.frame.into();
    let ld = lagrange_points(cfg.mu, frame)?;
    let (xe, xm) = primary_positions(cfg.mu, frame);
    let mut pts = Vec::new();
    let mut max_grad: f64 = 0.0;
    for (i, (p, h)) in ld.points.iter().zip(ld.values.iter()).enumerate() {
        let g = gradient_h(*p, cfg.mu, frame)?;
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        max_grad = max_grad.max(gn);
        pts.push(json!({
            "name": format!("L{}", i + 1),
            "q": [p.q1, p.q2],
            "p": [p.p1, p.p2],
            "h": h,
            "grad_norm": gn,
        }));
    }
    let v = ld.values;
    let eq = |i: usize| {
        let p = ld.points[i];
        let de = (p.q1 - xe).hypot(p.q2);
        let dm = (p.q1 - xm).hypot(p.q2);
        (de - 1.0).abs().max((dm - 1.0).abs())
    };
    let equilateral_error = eq(3).max(eq(4));
    Ok(Outcome::ok(json!({
        "mu": cfg.mu,
        "earth": xe,
        "moon": xm,
        "points": pts,
        "ties": ld.ties,
        "checks": {
            "max_grad_norm": max_grad,
            "h1_below_h2": v[0] < v[1],
            "collinear_ordered": v[0] < v[1] && v[1] <= v[2],
            "triangular_highest": v[2] < v[3] && (v[3] - v[4]).abs() <= 1e-12,
            "equilateral_error": equilateral_error,
        },
    })))
}

pub fn energies(cfg: &EnergiesConfig) -> Result<Outcome, CliError> {
    let ld = lagrange_points(cfg.mu, r3bp_core::dynamics::Frame::Centered)?;
    let v = ld.values;
    let level = if cfg.d.is_some() || cfg.d_offset.is_some() {
        Some(energy_spec(cfg.d, cfg.d_offset)?.resolve(cfg.mu)?)
    } else {
        None
    };
    let regime = level.map(|d| {
        if d < v[0] {
            "below_l1"
        } else if d < v[1] {
            "between_l1_l2"
        } else if d < v[2] {
            "between_l2_l3"
        } else if d < v[3] {
            "between_l3_l4"
        } else {
            "above_l4"
        }
    });
    Ok(Outcome::ok(json!({
        "mu": cfg.mu,
        "critical_values": v,
        "h_l1": v[0],
        "h_l2": v[1],
        "d": level,
        "offset_above_l1": level.map(|d| d - v[0]),
        "regime": regime,
    })))
}

pub fn transversality(cfg: &TransversalityConfig) -> Result<Outcome, CliError> {
    let ld = lagrange_points(cfg.mu, r3bp_core::dynamics::Frame::Centered)?;
    let (h1, h2) = (ld.values[0], ld.values[1]);
    let connected = matches!(cfg.surface, SurfaceArg::MoserConnected | SurfaceArg::BirkhoffLifted);
    let level = cfg.level.unwrap_or(if connected {
        h1 + cfg.level_fraction * (h2 - h1)
    } else {
        h1 - cfg.level_fraction * (h2 - h1)
    });
    let surface = match cfg.surface {
        SurfaceArg::MoserEarth => Surface::MoserEarth { c: level },
        SurfaceArg::MoserMoon => Surface::MoserMoon { c: level },
        SurfaceArg::MoserConnected => Surface::MoserConnected { d: level },
        SurfaceArg::BirkhoffLifted => Surface::BirkhoffLifted { d: level },
    };
    let s = &cfg.sampling;
    let sampling = SamplingSpec {
        n_samples: s.n_samples,
        seed: s.seed,
        delta: s.delta,
        neck_radius: s.neck_radius,
        neck_fraction: s.neck_fraction,
        ray_max: s.ray_max,
        ray_steps: s.ray_steps,
    };
    let r = contact_transversality_check(surface, cfg.mu, &sampling)?;
    let one_sign = r.sign_changes == 0;
    let mut v = serde_json::to_value(&r).expect("report");
    v["one_strict_sign"] = json!(one_sign);
    v["h_l1"] = json!(h1);
    v["h_l2"] = json!(h2);
    Ok(Outcome::ok(v))
}

/// Relative defect `|K - K_composed| / (1 + |K|)` over random states, and the
/// collision-locus extension at `z' = 0` and by radial extrapolation.
pub fn regcheck(cfg: &RegcheckConfig) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut per_params = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.n_params {
        let p = KParams { mu: rng.gen_range(cfg.mu_range[0]..cfg.mu_range[1]), d: rng.gen_range(cfg.d_range[0]..cfg.d_range[1]) };
        let mut max_rel: f64 = 0.0;
        let mut count = 0;
        while count < cfg.n_states {
            let z = Complex64::from_polar(rng.gen_range(0.05..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
            let w = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if (z - 0.5).norm() < 1e-3 || (z + 0.5).norm() < 1e-3 {
                continue;
            }
            let s = RegState::from_complex(z, w);
            let k = evaluate_k(s, p, KVariant::Pullback)?;
            let kc = k_composed(s, p)?;
            max_rel = max_rel.max((k - kc).abs() / (1.0 + k.abs()));
            count += 1;
        }
        worst = worst.max(max_rel);
        per_params.push(json!({ "mu": p.mu, "d": p.d, "max_relative_defect": max_rel }));
    }

    let mut exact_ok = true;
    let mut max_extrap: f64 = 0.0;
    for _ in 0..cfg.n_fiber {
        let w = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        for which in [Primary::Moon, Primary::Earth] {
            let sign = if which == Primary::Moon { 1.0 } else { -1.0 };
            let expect = w * w * (sign / 8.0);
            let m = moser_birkhoff(RegState::from_complex(Complex64::new(0.0, 0.0), w), which)?;
            exact_ok &= m.x == [0.0, 0.0, 1.0] && m.fiber == expect;
            let vals: Vec<Complex64> = (3..=6)
                .map(|k| moser_birkhoff(RegState::from_complex(Complex64::from_polar(10f64.powi(-k), theta), w), which).map(|m| m.fiber))
                .collect::<Result<_, Error>>()?;
            let r1: Vec<Complex64> = vals.windows(2).map(|p| (p[1] * 10.0 - p[0]) / 9.0).collect();
            let r2: Vec<Complex64> = r1.windows(2).map(|p| (p[1] * 100.0 - p[0]) / 99.0).collect();
            max_extrap = max_extrap.max((r2[1] - expect).norm());
        }
    }
    Ok(Outcome::ok(json!({
        "pullback": {
            "n_states": cfg.n_states,
            "params": per_params,
            "max_relative_defect": worst,
            "pass": worst <= 1e-10,
        },
        "collision_extension": {
            "n_fiber": cfg.n_fiber,
            "exact_at_zero": exact_ok,
            "max_extrapolation_error": max_extrap,
            "pass": exact_ok && max_extrap <= 1e-6,
        },
    })))
}

fn chord_json(c: &Chord<f64>) -> Value {
    json!({
        "family": lower(c.family),
        "k": c.k,
        "duration": c.duration,
        "eta_winding": c.eta_winding,
        "start": c.start,
        "end": c.end,
        "index": c.index,
    })
}

pub fn chords(cfg: &ChordsConfig) -> Result<Outcome, CliError> {
    let cs = enumerate_chords(cfg.phi0, cfg.action_bound, cfg.homotopy.into())?;
    Ok(Outcome::ok(json!({
        "count": cs.len(),
        "chords": cs.iter().map(chord_json).collect::<Vec<_>>(),
    })))
}

pub fn index(cfg: &IndexConfig) -> Result<Outcome, CliError> {
    if cfg.k == 0 {
        return Err(CliError::Config { pointer: "/k".into(), message: "k must be at least 1".into() });
    }
    let t1 = cfg.k as f64 * std::f64::consts::PI;
    let ix = robbin_salamon_index(&psi_path(t1, cfg.family.into())?)?;
    Ok(Outcome::ok(json!({
        "family": cfg.family,
        "k": cfg.k,
        "interval": [0.0, t1],
        "index": ix,
    })))
}

pub fn homology_cmd(cfg: &HomologyConfig) -> Result<Outcome, CliError> {
    let window = (cfg.window[0], cfg.window[1]);
    let mut cx = forced_boundary(build_rfc(window)?)?;
    if cfg.equivariant {
        cx = equivariant_quotient(&cx)?;
    }
    let ranks = homology(&cx);
    let interior: Vec<usize> = ranks.iter().filter(|r| r.reliable).map(|r| r.rank).collect();
    Ok(Outcome::ok(json!({
        "window": cfg.window,
        "equivariant": cfg.equivariant,
        "ranks": ranks,
        "interior_ranks": interior,
        "complex": cx.dump(),
    })))
}

fn orbit_json(o: &SymmetricOrbit<f64>, csv: Option<&str>) -> Value {
    let mut v = serde_json::to_value(o.summary()).expect("summary");
    v["primary"] = json!(lower(o.primary));
    v["hit"] = json!(lower(o.hit));
    v["consecutive"] = json!(o.is_consecutive());
    v["start"] = json!([o.start.z1, o.start.z2, o.start.w1, o.start.w2]);
    v["csv"] = json!(csv);
    v
}

fn trajectory_csv(o: &SymmetricOrbit<f64>) -> String {
    let rows = o.full_samples().into_iter().map(|(t, s)| {
        let k = evaluate_k(s, o.params, KVariant::Pullback).unwrap_or(f64::NAN);
        vec![t, s.z1, s.z2, s.w1, s.w2, k]
    });
    csv_rows(&["t", "z1", "z2", "w1", "w2", "K"], rows)
}

fn orbits_json(prefix: &str, orbits: &[SymmetricOrbit<f64>], csv: bool, files: &mut Vec<(String, String)>) -> Vec<Value> {
    orbits
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let name = csv.then(|| format!("{prefix}_{i:03}.csv"));
            if let Some(n) = &name {
                files.push((n.clone(), trajectory_csv(o)));
            }
            orbit_json(o, name.as_deref())
        })
        .collect()
}

fn failure_json(failures: &[(usize, Error)]) -> Vec<Value> {
    failures
        .iter()
        .map(|(i, e)| json!({ "seed": i, "error": e.to_string(), "convergence": e.is_convergence() }))
        .collect()
}

fn search(primary: PrimaryArg, params: KParams<f64>, grid: &SeedGrid, tol: &Tolerances) -> SearchReport<f64> {
    search_orbits(&SearchSpec { primary: primary.into(), params, n_psi: grid.n_psi, t_max: grid.t_max, shoot: tol.shoot() })
}

pub fn shoot_cmd(cfg: &ShootConfig, csv: bool) -> Result<Outcome, CliError> {
    let params = energy_spec(cfg.d, cfg.d_offset)?.params(cfg.mu)?;
    let mut files = Vec::new();
    let shoot_opts = cfg.tolerances.shoot();
    let (orbits, seeds, failures) = match cfg.guess {
        Some(g) => {
            let seed = ShootingSeed { primary: cfg.primary.into(), psi: g.psi, t: g.t, params };
            (vec![shoot(&seed, &shoot_opts)?], 1, Vec::new())
        }
        None => {
            let rep = search(cfg.primary, params, &cfg.seed_grid, &cfg.tolerances);
            (rep.orbits, rep.seeds.len(), rep.failures)
        }
    };
    let recs = orbits_json("orbit", &orbits, csv && cfg.csv, &mut files);
    let failure = orbits.is_empty().then(|| CliError::Convergence("no symmetric orbit found".into()));
    Ok(Outcome {
        result: json!({
            "mu": params.mu,
            "d": params.d,
            "seeds": seeds,
            "orbits": recs,
            "consecutive": orbits.iter().filter(|o| o.is_consecutive()).count(),
            "failures": failure_json(&failures),
        }),
        files,
        failure,
    })
}

pub fn continue_cmd(cfg: &ContinueConfig, csv: bool) -> Result<Outcome, CliError> {
    let energy = energy_spec(cfg.d, cfg.d_offset)?;
    let params = energy.params(cfg.mu)?;
    let shoot_opts = cfg.tolerances.shoot();
    let start = match cfg.guess {
        Some(g) => shoot(&ShootingSeed { primary: cfg.primary.into(), psi: g.psi, t: g.t, params }, &shoot_opts)?,
        None => search(cfg.primary, params, &cfg.seed_grid, &cfg.tolerances)
            .orbits
            .into_iter()
            .find(|o| o.is_consecutive())
            .ok_or_else(|| CliError::Convergence("no consecutive orbit to start from".into()))?,
    };
    let ob = continue_in_mu(&start, energy, cfg.mu_target, &cfg.continuation.options(), &shoot_opts)?;
    let mut files = Vec::new();
    let final_orbit = ob.orbit.as_ref().map(|o| orbits_json("branch_end", std::slice::from_ref(o), csv && cfg.csv, &mut files).remove(0));
    let points: Vec<Value> = ob
        .branch
        .points
        .iter()
        .map(|p| {
            json!({
                "mu": p.mu,
                "psi": p.solution.x[0],
                "tau": p.solution.x[1],
                "residual": p.solution.residual,
                "condition": p.solution.condition,
                "iterations": p.solution.iterations,
            })
        })
        .collect();
    let failure = match &ob.branch.status {
        BranchStatus::Completed => None,
        BranchStatus::Fold { mu, condition } => Some(CliError::Convergence(format!("fold near mu = {mu} (condition {condition:e})"))),
        BranchStatus::Failed { error, .. } => Some(CliError::Convergence(error.clone())),
    };
    let max_residual = ob.branch.points.iter().map(|p| p.solution.residual).fold(0.0, f64::max);
    Ok(Outcome {
        result: json!({
            "start": orbit_json(&start, None),
            "branch": {
                "status": ob.branch.status,
                "max_slope": ob.branch.max_slope,
                "max_residual": max_residual,
                "points": points,
            },
            "final_orbit": final_orbit,
        }),
        files,
        failure,
    })
}

pub fn kepler(cfg: &KeplerConfig) -> Result<Outcome, CliError> {
    let k = kepler_periodicity(cfg.d, cfg.tol, cfg.max_den)?;
    let physical = if cfg.d < 0.0 { Some(kepler_collision_period(cfg.d)?) } else { None };
    Ok(Outcome::ok(json!({
        "d": cfg.d,
        "period": k.period,
        "ratio": k.ratio,
        "periodicity": k.periodicity,
        "collision_ellipse_period": physical,
    })))
}

pub fn classify(cfg: &ClassifyConfig) -> Result<Outcome, CliError> {
    let params = energy_spec(cfg.d, cfg.d_offset)?.params(cfg.mu)?;
    let rep = search(cfg.primary, params, &cfg.seed_grid, &cfg.tolerances);
    let c = &cfg.classify;
    let opts = ClassifyOptions {
        quantum: c.quantum,
        periodicity_horizon: c.periodicity_horizon,
        periodicity_tol: c.periodicity_tol,
        integration: cfg.tolerances.integration(),
    };
    let cl = classify_orbits(&rep.orbits, &opts)?;
    let mut files = Vec::new();
    let orbits = orbits_json("orbit", &rep.orbits, false, &mut files);
    let classes: Vec<Value> = cl
        .classes
        .iter()
        .map(|k| {
            json!({
                "members": k.members,
                "signature": k.signature.iter().map(|(p, a)| json!([lower(p), a])).collect::<Vec<_>>(),
                "collision_count": k.collision_count,
                "periodic": k.periodic,
                "odd_collision_period": k.odd_collision_period,
            })
        })
        .collect();
    Ok(Outcome::ok(json!({
        "mu": params.mu,
        "d": params.d,
        "orbits": orbits,
        "classes": classes,
        "note": cl.note,
        "failures": failure_json(&rep.failures),
    })))
}
