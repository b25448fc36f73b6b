//! Subcommand implementations; each returns the checks of its report.

use std::path::PathBuf;
use std::sync::Arc;

use serde_json::json;

use folia_core::algebroid::{classify_point, dimension_line, induced_foliation, kernel_module, splitting};
use folia_core::bisubm::{
    build_path_holonomy, check_psi_diagram, verify_algebraic_bisubmersion, verify_foliation_bisubmersion, BiSubmersion,
    PathHolonomyOptions, PhiCertificate, PhiVerdict, PsiModel,
};
use folia_core::charts::{involutivity_check, Involutivity, VfModule};
use folia_core::expr::{to_f64, Rational};
use folia_core::flows::{
    accel_velocity_check, flow_sum_compose, middle_term, trajectory, Combination, CompiledField, DEFAULT_STEP,
};
use folia_core::sampling;
use folia_core::weinstein::{
    build_weinstein_bisubmersion, diagram_check_weinstein, psi_representative, APath, ZBisubmersion, COMMUTE_TOL,
};

use crate::config::{ConfigError, JobConfig};
use crate::report::{csv, gnuplot_columns, Check, Outcome, Settings};

pub const ACCEL_TOL: f64 = 1e-4;
const PLOT_ROWS: usize = 65;

/// Everything a subcommand needs after flags and config are merged.
pub struct Job {
    pub cfg: JobConfig,
    pub settings: Settings,
    pub point: Option<Vec<Rational>>,
    pub plot_data: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug)]
pub enum JobError {
    Config(ConfigError),
    Io(std::io::Error),
}

impl From<ConfigError> for JobError {
    fn from(e: ConfigError) -> Self {
        JobError::Config(e)
    }
}

impl From<std::io::Error> for JobError {
    fn from(e: std::io::Error) -> Self {
        JobError::Io(e)
    }
}

type Checks = Result<Vec<Check>, JobError>;

fn failure(name: &str, e: impl std::fmt::Display) -> Check {
    Check::new(name, "Error", Outcome::Inconclusive, json!({ "error": e.to_string() }))
}

fn point_or(job: &Job, fallback: Option<Vec<Rational>>, n: usize, what: &str) -> Result<Vec<Rational>, ConfigError> {
    let p = job.point.clone().or(fallback).ok_or_else(|| ConfigError {
        pointer: String::new(),
        message: format!("{what} needs a point (`--point` or the config)"),
    })?;
    if p.len() != n {
        return Err(ConfigError {
            pointer: "--point".into(),
            message: format!("expected {n} coordinates, got {}", p.len()),
        });
    }
    Ok(p)
}

impl Job {
    fn write_table(&self, header: &[String], rows: &[Vec<f64>]) -> Result<(), JobError> {
        if let Some(p) = &self.plot_data {
            std::fs::write(p, gnuplot_columns(header, rows))?;
        }
        if let Some(p) = &self.csv {
            std::fs::write(p, csv(header, rows))?;
        }
        Ok(())
    }

    fn write_apath(&self, path: &APath) -> Result<(), JobError> {
        let n = path.gamma.first().map(Vec::len).unwrap_or(0);
        let r = path.fiber.first().map(Vec::len).unwrap_or(0);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("gamma{i}")));
        header.extend((1..=r).map(|i| format!("a{i}")));
        let rows: Vec<Vec<f64>> = (0..path.nodes())
            .map(|i| {
                let mut row = vec![path.times[i]];
                row.extend(&path.gamma[i]);
                row.extend(&path.fiber[i]);
                row
            })
            .collect();
        self.write_table(&header, &rows)
    }
}

fn involutivity(name: &str, m: &VfModule) -> Check {
    match involutivity_check(m) {
        Ok(Involutivity::Involutive) => Check::new(
            name,
            "Involutive",
            Outcome::Pass,
            json!({ "generators": m.generators().iter().map(|g| g.to_string()).collect::<Vec<_>>(), "degree_bound": m.degree_bound }),
        ),
        Ok(Involutivity::NotInvolutive { i, j, bracket, degree_bound }) => Check::new(
            name,
            "NotInvolutive",
            Outcome::Refuted,
            json!({ "pair": [i, j], "witness": bracket.to_string(), "degree_bound": degree_bound }),
        ),
        Err(e) => failure(name, e),
    }
}

fn foliation_check(b: &BiSubmersion) -> Check {
    match verify_foliation_bisubmersion(b) {
        Ok(r) => {
            let (verdict, outcome) = if r.passed {
                ("Involutive", Outcome::Pass)
            } else {
                ("NotInvolutive", Outcome::Refuted)
            };
            Check::new("foliation", verdict, outcome, r)
        }
        Err(e) => failure("foliation", e),
    }
}

fn phi_check(name: &str, cert: &PhiCertificate, tol: f64) -> Check {
    let outcome = match cert.verdict {
        PhiVerdict::Exists if cert.max_residual <= tol => Outcome::Pass,
        PhiVerdict::Exists | PhiVerdict::Inconclusive => Outcome::Inconclusive,
        PhiVerdict::InconsistentConstraints | PhiVerdict::NonSmoothCandidate => Outcome::Refuted,
    };
    let verdict = serde_json::to_value(cert.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    Check::new(
        name,
        verdict,
        outcome,
        json!({
            "radius": cert.radius,
            "samples": cert.samples.len(),
            "max_residual": cert.max_residual,
            "max_fibered_residual": cert.max_fibered_residual,
            "min_separation": cert.min_separation,
            "diagonal_residual": cert.diagonal_residual,
            "identity_residual": cert.identity_residual,
            "smoothness": cert.smoothness,
            "witness": cert.witness,
            "note": cert.note,
        }),
    )
}

pub fn check_involutivity(job: &Job) -> Checks {
    let d = job.settings.degree_bound;
    let mut checks = Vec::new();
    if job.cfg.module.is_some() {
        let (m, _) = job.cfg.module(d)?;
        checks.push(involutivity("module", &m));
    }
    if job.cfg.bisubmersion.is_some() {
        let (b, _) = job.cfg.bisubmersion(d, job.settings.seed, job.settings.samples)?;
        checks.push(foliation_check(&b));
    }
    if job.cfg.algebroid.is_some() {
        let a = job.cfg.algebroid(d)?;
        checks.push(involutivity("induced_foliation", &induced_foliation(&a)));
    }
    if checks.is_empty() {
        return Err(ConfigError {
            pointer: String::new(),
            message: "needs a `module`, `bisubmersion` or `algebroid` section".into(),
        }
        .into());
    }
    Ok(checks)
}

pub fn check_bisubmersion(job: &Job) -> Checks {
    let s = &job.settings;
    let (b, base) = job.cfg.bisubmersion(s.degree_bound, s.seed, s.samples)?;
    let base = match &job.point {
        Some(_) => point_or(job, None, b.dim(), "check-bisubmersion")?.iter().map(to_f64).collect(),
        None => base.unwrap_or_else(|| vec![0.0; b.dim()]),
    };
    let mut checks = vec![foliation_check(&b)];
    checks.push(match verify_algebraic_bisubmersion(&b, &base, s.samples) {
        Ok(cert) => phi_check("algebraic", &cert, s.tol),
        Err(e) => failure("algebraic", e),
    });
    Ok(checks)
}

pub fn path_holonomy(job: &Job) -> Checks {
    let s = &job.settings;
    let (m, point) = job.cfg.module(s.degree_bound)?;
    let x = point_or(job, point, m.chart().dim(), "path-holonomy")?;
    let opts = PathHolonomyOptions {
        samples: s.samples,
        seed: s.seed,
        ..Default::default()
    };
    let b = match build_path_holonomy(&m, &x, &opts) {
        Ok(b) => b,
        Err(e) => return Ok(vec![failure("construction", e)]),
    };
    let layout = b.layout().cloned();
    let (lo, hi) = b.chart.bounds_f64();
    let mut checks = vec![Check::new(
        "construction",
        "Built",
        Outcome::Pass,
        json!({
            "dim": b.dim(),
            "point": x.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "generators": m.generators().iter().map(|g| g.to_string()).collect::<Vec<_>>(),
            "symbolic_target": b.is_symbolic(),
            "chart": b.chart.vars(),
            "box": lo.iter().zip(&hi).map(|(a, c)| [*a, *c]).collect::<Vec<_>>(),
        }),
    )];
    checks.push(foliation_check(&b));
    let mut base: Vec<f64> = b.anchor().map(<[f64]>::to_vec).unwrap_or_default();
    base.resize(b.dim(), 0.0);
    checks.push(match verify_algebraic_bisubmersion(&b, &base, s.samples) {
        Ok(cert) => phi_check("algebraic", &cert, s.tol),
        Err(e) => failure("algebraic", e),
    });
    checks.push(match check_psi_diagram(&b, &base, PsiModel::PairTargetSource, s.samples, s.tol) {
        Ok(r) => Check::new("psi_pair_groupoid", "Commutes", Outcome::Pass, r),
        Err(e) => Check::new("psi_pair_groupoid", "CommutationFailure", Outcome::Refuted, json!({ "error": e.to_string() })),
    });
    if let Some(l) = layout.filter(|l| l.lambda > 0) {
        let k = l.base;
        let mut header = vec!["lambda1".to_string()];
        header.extend(m.chart().vars().iter().map(|v| format!("t_{v}")));
        let mut rows = Vec::new();
        for i in 0..PLOT_ROWS {
            let lam = lo[k] + (hi[k] - lo[k]) * i as f64 / (PLOT_ROWS - 1) as f64;
            let mut u = base.clone();
            u[k] = lam;
            if let Ok(t) = b.t_eval(&u) {
                let mut row = vec![lam];
                row.extend(t);
                rows.push(row);
            }
        }
        job.write_table(&header, &rows)?;
    }
    Ok(checks)
}

pub fn algebroid_report(job: &Job) -> Checks {
    let a = job.cfg.algebroid(job.settings.degree_bound)?;
    let n = a.chart().dim();
    let mut points = job.cfg.points(n)?;
    if job.point.is_some() {
        points.push(point_or(job, None, n, "algebroid-report")?);
    }
    let mut checks = Vec::new();
    checks.push(match a.check_invariants() {
        Ok(r) => {
            let (verdict, outcome) = if r.holds() {
                ("Holds", Outcome::Pass)
            } else {
                ("Violated", Outcome::Refuted)
            };
            Check::new("invariants", verdict, outcome, r)
        }
        Err(e) => failure("invariants", e),
    });
    let k = match kernel_module(&a, job.settings.degree_bound, &points) {
        Ok(k) => k,
        Err(e) => {
            checks.push(failure("kernel_module", e));
            return Ok(checks);
        }
    };
    let gens: Vec<Vec<String>> = k
        .generator_exprs(a.chart().vars())
        .iter()
        .map(|g| g.iter().map(|e| e.to_string()).collect())
        .collect();
    checks.push(Check::new(
        "kernel_module",
        format!("{} generators", gens.len()),
        Outcome::Pass,
        json!({ "generators": gens, "degree_bound": k.degree_bound, "minimal_up_to_degree": k.minimal_up_to_degree }),
    ));
    for (x, d) in points.iter().zip(&k.table) {
        let class = classify_point(&a, x).map(|c| c.0);
        let split = splitting(&a, x);
        let details = json!({
            "dims": d,
            "line": dimension_line(d),
            "class": class.ok(),
            "dim_f": split.as_ref().ok().map(|s| s.dim_f()),
            "dim_h": split.as_ref().ok().map(|s| s.dim_h()),
            "h_abelian": split.as_ref().ok().map(|s| s.h_bracket.iter().flatten().flatten().all(|v| v.abs() <= 1e-12)),
            "note": (d.seq_dim != d.module_fiber_dim)
                .then_some("module fiber dimension and seq_dim differ at this point; the sequence kernel is the pointwise object"),
        });
        checks.push(Check::new("point", format!("seq_dim {}", d.seq_dim), Outcome::Pass, details));
    }
    Ok(checks)
}

fn psi_samples(z: &ZBisubmersion, samples: usize, seed: u64) -> Check {
    let mut rng = sampling::rng(seed.wrapping_add(5));
    let radius = z.bisub.path_holonomy().map(|p| p.radius).unwrap_or(0.25);
    let nb = z.algebroid.chart().dim();
    let centre = z.base_point();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut p = centre.clone();
        let dy = sampling::uniform_cube(&mut rng, nb, radius / 4.0);
        let dl = sampling::uniform_cube(&mut rng, z.n, radius / 2.0);
        let dg = sampling::uniform_ball(&mut rng, z.k, z.group.radius / 2.0);
        for (i, v) in dy.iter().chain(&dl).chain(&dg).enumerate() {
            p[i] += v;
        }
        match psi_representative(z, &p) {
            Ok(rep) => worst = worst.max(rep.commutation_residual),
            Err(e) => return Check::new("psi", "ResidualFailure", Outcome::Refuted, json!({ "error": e.to_string(), "at": p })),
        }
    }
    Check::new("psi", "Commutes", Outcome::Pass, json!({ "samples": samples, "max_commutation_residual": worst, "tol": COMMUTE_TOL }))
}

pub fn weinstein(job: &Job) -> Checks {
    let s = &job.settings;
    let a = job.cfg.algebroid(s.degree_bound)?;
    let n = a.chart().dim();
    let fallback = job.cfg.points(n)?.into_iter().next();
    let x = point_or(job, fallback, n, "weinstein")?;
    let mut z = match build_weinstein_bisubmersion(&a, &x) {
        Ok(z) => z,
        Err(e) => return Ok(vec![failure("construction", e)]),
    };
    z.grid = s.grid;
    z.bisub.seed = s.seed;
    let mut checks = vec![Check::new("construction", "Built", Outcome::Pass, z.summary())];
    checks.push(match verify_algebraic_bisubmersion(&z.bisub, &z.base_point(), s.samples) {
        Ok(cert) => phi_check("phi_z", &cert, s.tol),
        Err(e) => failure("phi_z", e),
    });
    checks.push(psi_samples(&z, s.samples, s.seed));
    checks.push(match diagram_check_weinstein(&z, s.samples) {
        Ok(r) => Check::new("diagram", "InvariantsAgree", Outcome::Pass, r),
        Err(e) => Check::new("diagram", "InvariantMismatch", Outcome::Refuted, json!({ "error": e.to_string() })),
    });
    if job.plot_data.is_some() || job.csv.is_some() {
        let mut p = z.base_point();
        let radius = z.bisub.path_holonomy().map(|ph| ph.radius).unwrap_or(0.25);
        for v in p[n..n + z.n].iter_mut() {
            *v = radius / 2.0;
        }
        if let Ok(rep) = psi_representative(&z, &p) {
            job.write_apath(&rep.path)?;
        }
    }
    Ok(checks)
}

pub fn flows_verify(job: &Job) -> Checks {
    let tol = job.settings.tol;
    let f = job.cfg.flows()?;
    let residual_check = |name: &str, r: Result<folia_core::flows::ComposeResult, _>| match r {
        Ok(r) => {
            let ok = r.residual <= tol;
            Check::new(
                name,
                if ok { "WithinTolerance" } else { "ExceedsTolerance" },
                if ok { Outcome::Pass } else { Outcome::Refuted },
                r,
            )
        }
        Err(e) => failure(name, e),
    };
    let mut checks = vec![
        residual_check("flow_sum", flow_sum_compose(&f.x, &f.y, &f.point, f.t)),
        residual_check("middle_term", middle_term(&f.x, &f.y, &f.point, f.t)),
    ];
    if let Some((z, p)) = &f.accel {
        checks.push(match accel_velocity_check(z, p) {
            Ok(r) => {
                let ok = r.residual <= ACCEL_TOL;
                Check::new(
                    "accel_velocity",
                    if ok { "WithinTolerance" } else { "ExceedsTolerance" },
                    if ok { Outcome::Pass } else { Outcome::Refuted },
                    r,
                )
            }
            Err(e) => failure("accel_velocity", e),
        });
    }
    if job.plot_data.is_some() || job.csv.is_some() {
        let fx = CompiledField::new(&f.x).map_err(|e| ConfigError {
            pointer: "/flows/x".into(),
            message: e.to_string(),
        })?;
        let fy = CompiledField::new(&f.y).map_err(|e| ConfigError {
            pointer: "/flows/y".into(),
            message: e.to_string(),
        })?;
        let sum = Combination::constant(&[Arc::new(fx), Arc::new(fy)], &[1.0, 1.0]);
        if let Ok(tr) = trajectory(&sum, &f.point, 0.0, f.t, DEFAULT_STEP, None) {
            let mut header = vec!["t".to_string()];
            header.extend(f.x.chart().vars().iter().cloned());
            let rows: Vec<Vec<f64>> = tr
                .into_iter()
                .map(|(t, x)| {
                    let mut row = vec![t];
                    row.extend(x);
                    row
                })
                .collect();
            job.write_table(&header, &rows)?;
        }
    }
    Ok(checks)
}
