use std::f64::consts::{PI, TAU};

use magnifier_walk::graph::Window;
use magnifier_walk::limitlaw::{self, ks_distance, pseudo_velocity_empirical, Branch, LimitLaw};
use magnifier_walk::localization::{ensemble_profile, Parity};
use magnifier_walk::rw::{hermitian3_eigenvalues, RwParams};
use magnifier_walk::spectral::{spectral_map_check, Band, TwistedUnitary};
use magnifier_walk::szegedy::{light_cone_window, Distribution, InitialEnsemble, Walk};
use magnifier_walk::verify::{self, VerifyConfig};
use magnifier_walk::Result;
use serde_json::Value;

use crate::config::{LimitArgs, LocalizationArgs, RunConfig, SimulateArgs, SpectrumArgs, VerifyArgs};
use crate::output::Table;

/// A finished command: its table and whether any check it ran failed.
pub struct Report {
    pub table: Table,
    pub failed: bool,
}

impl Report {
    fn ok(table: Table) -> Self {
        Self { table, failed: false }
    }
}

/// Cells beyond this radius carry less than 1e-15 of the analytic profile.
const PROFILE_RADIUS: u64 = 400;

fn opt(v: Result<f64>) -> Value {
    v.ok().map_or(Value::Null, Value::from)
}

fn window_for(cfg: &RunConfig, steps: usize) -> Window {
    cfg.window.map_or_else(|| light_cone_window(steps), Window::symmetric)
}

/// Metadata every table carries.
fn base_table(command: &str, cfg: &RunConfig, columns: &[&'static str]) -> Table {
    let params = cfg.params();
    let sp = params.spectral();
    let mut t = Table::new(columns);
    t.meta("command", command);
    t.meta("p", params.p());
    t.meta("q", params.q());
    t.meta("r", params.r());
    t.meta("a", sp.a);
    t.meta("b", sp.b);
    t.meta("lambda0", sp.lambda0);
    t.meta("lambda1", sp.lambda1);
    t.meta("theta0", sp.theta0);
    t.meta("theta1", sp.theta1);
    t.meta("kappa", sp.kappa);
    t.meta("recurrent", params.is_recurrent());
    t.meta(
        "calibration",
        opt(LimitLaw::new(&params, cfg.quad as usize).map(|l| l.calibration())),
    );
    t.meta("steps", cfg.steps);
    t.meta("window", window_for(cfg, cfg.steps).jmax());
    t.meta("kgrid", cfg.kgrid);
    t.meta("quad", cfg.quad);
    t
}

pub fn spectrum(args: &SpectrumArgs) -> Result<Report> {
    let cfg = &args.config;
    let params = cfg.params();
    let sp = params.spectral();
    let mut t = base_table(
        "spectrum",
        cfg,
        &[
            "k",
            "j1",
            "j2",
            "j3",
            "arg1",
            "arg2",
            "arg3",
            "arg4",
            "arg5",
            "arg6",
            "nu",
            "deviation",
        ],
    );
    let mut worst: f64 = 0.0;
    for i in 0..cfg.kgrid {
        let k = TAU * i as f64 / cfg.kgrid as f64;
        let j = hermitian3_eigenvalues(&params.twisted_matrix(k));
        let mut args: Vec<f64> = TwistedUnitary::new(&params, k)
            .eigenvalues()?
            .iter()
            .map(|z| z.arg())
            .collect();
        args.sort_by(f64::total_cmp);
        let dev = spectral_map_check(&params, k, cfg.tol.spectral)?.max_deviation();
        worst = worst.max(dev);
        let mut row: Vec<Value> = vec![k.into()];
        row.extend(j.iter().map(|&x| Value::from(x)));
        row.extend(args.iter().map(|&x| Value::from(x)));
        row.push(sp.band_top(k).min(1.0).acos().into());
        row.push(dev.into());
        t.push(row);
    }
    t.meta("spectral_mapping_max_deviation", worst);
    t.meta("spectral_mapping_passed", worst <= cfg.tol.spectral);
    Ok(Report::ok(t))
}

fn emit_distribution(t: &mut Table, step: usize, dist: &Distribution) {
    let n = step as i64;
    let (lo, hi) = dist
        .iter()
        .filter(|&(_, m)| m > 0.0)
        .fold((-n, n), |(lo, hi), (j, _)| (lo.min(j), hi.max(j)));
    let mut cum = 0.0;
    for j in lo..=hi {
        let m = dist.mass(j);
        cum += m;
        let x = if step == 0 {
            Value::Null
        } else {
            Value::from(j as f64 / step as f64)
        };
        t.push(vec![step.into(), j.into(), m.into(), x, cum.into()]);
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Report> {
    let cfg = &args.config;
    let params = cfg.params();
    let walk = Walk::new(&params);
    let ens = InitialEnsemble::mixed();
    let window = window_for(cfg, cfg.steps);
    let mut t = base_table("simulate", cfg, &["t", "j", "mass", "x", "cdf"]);

    let mut steps: Vec<usize> = args.checkpoints.iter().copied().filter(|&s| s < cfg.steps).collect();
    steps.sort_unstable();
    steps.dedup();
    for &s in &steps {
        emit_distribution(&mut t, s, &walk.ensemble_distribution(&ens, s, window)?);
    }
    let dist = walk.ensemble_distribution(&ens, cfg.steps, window)?;
    emit_distribution(&mut t, cfg.steps, &dist);

    let (m1, m2) = (dist.moment(1), dist.moment(2));
    t.meta("checkpoints", Value::from(steps));
    t.meta("total_mass", dist.total());
    t.meta("mean", m1);
    t.meta("second_moment", m2);
    t.meta("variance", m2 - m1 * m1);
    t.meta("epsilon", args.epsilon);
    let velocity = if cfg.steps == 0 {
        Value::Null
    } else {
        pseudo_velocity_empirical(&dist, cfg.steps, args.epsilon)?.into()
    };
    t.meta("pseudo_velocity_empirical", velocity);
    Ok(Report::ok(t))
}

pub fn localization(args: &LocalizationArgs) -> Result<Report> {
    let cfg = &args.config;
    let params = cfg.params();
    let ens = InitialEnsemble::mixed();
    let radius = args.radius;
    let (t_lo, t_hi) = (cfg.steps / 2, cfg.steps);
    let window = window_for(cfg, t_hi);
    let simulated = Walk::new(&params)
        .ensemble_time_average(&ens, t_lo, t_hi + 1, window)?
        .restrict(radius);
    let even = ensemble_profile(&params, &ens, Some(Parity::Even), radius)?;
    let odd = ensemble_profile(&params, &ens, Some(Parity::Odd), radius)?;
    let averaged = ensemble_profile(&params, &ens, None, radius)?;
    let analytic_total = ensemble_profile(&params, &ens, None, PROFILE_RADIUS.max(radius))?.total();

    let mut t = base_table(
        "localization",
        cfg,
        &["j", "even", "odd", "averaged", "simulated", "difference"],
    );
    let mut worst: f64 = 0.0;
    for j in -(radius as i64)..=radius as i64 {
        let (a, s) = (averaged.mass(j), simulated.mass(j));
        worst = worst.max((a - s).abs());
        t.push(vec![
            j.into(),
            even.mass(j).into(),
            odd.mass(j).into(),
            a.into(),
            s.into(),
            (s - a).into(),
        ]);
    }
    t.meta("t_lo", t_lo);
    t.meta("t_hi", t_hi);
    t.meta("radius", radius);
    t.meta("analytic_localized_mass", analytic_total);
    t.meta("analytic_mass_in_radius", averaged.total());
    t.meta("simulated_mass_in_radius", simulated.total());
    t.meta("max_difference", worst);
    Ok(Report::ok(t))
}

pub fn limit(args: &LimitArgs) -> Result<Report> {
    let cfg = &args.config;
    let params = cfg.params();
    let law = LimitLaw::new(&params, cfg.quad as usize)?;
    let sp = *law.spectral();
    let (l1, l0) = (sp.lambda1, sp.lambda0);

    let empirical = if cfg.steps == 0 {
        None
    } else {
        let dist = Walk::new(&params).ensemble_distribution(
            &InitialEnsemble::mixed(),
            cfg.steps,
            window_for(cfg, cfg.steps),
        )?;
        let mut cdf: Vec<(f64, f64)> = Vec::with_capacity(dist.window().cells());
        let mut cum = 0.0;
        for (j, m) in dist.iter() {
            cum += m;
            cdf.push((j as f64 / cfg.steps as f64, cum));
        }
        Some((ks_distance(&dist, cfg.steps, &law)?, cdf))
    };

    let mut t = base_table(
        "limit",
        cfg,
        &[
            "x",
            "density",
            "gamma_plus",
            "gamma_minus",
            "weight_plus",
            "weight_minus",
            "rho_star",
            "cdf",
            "empirical_cdf",
        ],
    );
    let k = law.kappa();
    let points = args.points as usize;
    for i in 1..=points {
        let x = k * (2.0 * i as f64 / (points + 1) as f64 - 1.0);
        let emp = empirical.as_ref().map_or(Value::Null, |(_, cdf)| {
            let at = cdf.partition_point(|&(y, _)| y <= x);
            Value::from(if at == 0 { 0.0 } else { cdf[at - 1].1 })
        });
        t.push(vec![
            x.into(),
            law.density(x)?.into(),
            opt(limitlaw::gamma_weights(x, l1, l0, Branch::Plus)),
            opt(limitlaw::gamma_weights(x, l1, l0, Branch::Minus)),
            opt(limitlaw::branch_weights(x, l1, l0, Branch::Plus)),
            opt(limitlaw::branch_weights(x, l1, l0, Branch::Minus)),
            law.transient_wave(x)?.into(),
            law.cdf(x).into(),
            emp,
        ]);
    }
    t.meta("points", points);
    t.meta("atom_mass", law.atom_mass());
    t.meta("calibration_reference", 1.0 / (3.0 * PI));
    t.meta("continuous_mass", law.continuous_cdf(k));
    t.meta("sup_velocity", Band::new(&params).sup_velocity(1 << 16));
    match &empirical {
        Some((ks, _)) => {
            t.meta("ks", ks.ks);
            t.meta("ks_argmax", ks.argmax);
            t.meta("ks_mid", ks.ks_mid);
            t.meta("levy", ks.levy);
        }
        None => {
            for key in ["ks", "ks_argmax", "ks_mid", "levy"] {
                t.meta(key, Value::Null);
            }
        }
    }
    Ok(Report::ok(t))
}

pub fn verify_suites(args: &VerifyArgs) -> Result<Report> {
    let cfg = &args.config;
    let params: RwParams = cfg.params();
    let vcfg = VerifyConfig {
        params,
        steps: cfg.steps,
        kgrid: cfg.kgrid as usize,
        quad: cfg.quad as usize,
        tol: (&cfg.tol).into(),
        coin: args.corrupt_coin.then(|| verify::corrupted_coin(&params)),
    };
    let reports = verify::run_all(&vcfg);
    let mut t = base_table(
        "verify",
        cfg,
        &["suite", "passed", "max_deviation", "tolerance", "note"],
    );
    let failures = reports.iter().filter(|r| !r.passed).count();
    for r in &reports {
        t.push(vec![
            r.name.into(),
            r.passed.into(),
            r.max_deviation.into(),
            r.tolerance.into(),
            r.note.clone().into(),
        ]);
    }
    t.meta("corrupted_coin", args.corrupt_coin);
    t.meta("suites", reports.len());
    t.meta("failures", failures);
    Ok(Report {
        table: t,
        failed: failures > 0,
    })
}
