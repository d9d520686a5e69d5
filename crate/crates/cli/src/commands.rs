use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use spherosim::dynamics::{evolve, EvolveConfig, Scheme};
use spherosim::error::Error;
use spherosim::field::{
    constant_field, from_equivariant, hedgehog, perturbed_hedgehog, random_smooth_field, trial_profile,
    EquivariantProfile, Field,
};
use spherosim::functionals::{diagnostics, Diagnostics, EnergyParams};
use spherosim::geometry::{build_icosphere, TriMesh};
use spherosim::io::{load_field, save_field, write_off, write_trace_csv, write_vtk, TRACE_SCHEMA_VERSION};
use spherosim::minimizer::{
    best_trial_eps, eps_grid, minimize_constrained, minimize_free, seed_field, MinimizeOptions, MinimizeReport,
};
use spherosim::oracle::oracle_report;
use spherosim::vec3::E3;
use spherosim::verify::{free_minimizer, run_suite_with, SuiteConfig, TRIAL_EPS};

use crate::config::{self, merge_options, GlobalKeys};
use crate::{
    Cli, Command, DiagnoseArgs, EvolveArgs, MeshArgs, MinimizeArgs, OracleArgs, TrialArgs, VerifyArgs, EXIT_OK,
    EXIT_VERIFY,
};

pub const DEFAULT_LEVEL: usize = 5;
pub const DEFAULT_KAPPA: f64 = 50.0;
pub const DEFAULT_SEED: u64 = 7;
/// Amplitude of the random corpus fields.
const RANDOM_AMP: f64 = 0.3;

/// Resolved global settings.
struct Env {
    out_dir: Option<PathBuf>,
}

impl Env {
    fn output(&self, p: &Path) -> Result<PathBuf> {
        match &self.out_dir {
            Some(d) if p.is_relative() => {
                fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
                Ok(d.join(p))
            }
            _ => Ok(p.to_path_buf()),
        }
    }

    fn create(&self, p: &Path) -> Result<BufWriter<File>> {
        let path = self.output(p)?;
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }
}

fn setup(cli_threads: Option<usize>, cli_out: Option<PathBuf>, g: GlobalKeys) -> Result<Env> {
    let threads = cli_threads.or(g.threads).unwrap_or(1);
    if threads == 0 {
        return Err(Error::InvalidInput("threads must be at least 1".into()).into());
    }
    // a second call in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(Env { out_dir: cli_out.or(g.out_dir) })
}

pub fn run(cli: Cli) -> Result<u8> {
    let cfg = cli.config.as_deref();
    macro_rules! resolve {
        ($args:expr, $ty:ident { $($f:ident),* $(,)? }) => {{
            let (g, file): (GlobalKeys, $ty) = config::load(cfg)?;
            let env = setup(cli.threads, cli.out_dir.clone(), g)?;
            (env, merge_options!($args, file, $ty { $($f),* }))
        }};
    }
    match cli.command {
        Command::Mesh(a) => {
            let (env, a) = resolve!(a, MeshArgs { level, out });
            mesh(&env, a)
        }
        Command::Diagnose(a) => {
            let (_, a) = resolve!(a, DiagnoseArgs { level, kappa, seed, field, eps, load_field });
            diagnose(a)
        }
        Command::Trial(a) => {
            let (env, a) = resolve!(a, TrialArgs { level, kappa, eps, save_field, vtk });
            trial(&env, a)
        }
        Command::Oracle(a) => {
            let (_, a) = resolve!(a, OracleArgs { profile, eps, kappa });
            oracle(a)
        }
        Command::Evolve(a) => {
            let (env, a) = resolve!(
                a,
                EvolveArgs {
                    level,
                    kappa,
                    seed,
                    field,
                    eps,
                    load_field,
                    dt,
                    t_end,
                    scheme,
                    record_every,
                    save_trace,
                    save_field,
                    vtk
                }
            );
            evolve_cmd(&env, a)
        }
        Command::Minimize(a) => {
            let (env, a) = resolve!(
                a,
                MinimizeArgs { level, kappa, j_target, seed_eps, opts, load_field, save_field, report, vtk }
            );
            minimize(&env, a)
        }
        Command::Verify(a) => {
            let (env, a) = resolve!(
                a,
                VerifyArgs { level, kappa, seed, groups, json, evolve_t_end, j_target_factor, minimize }
            );
            verify(&env, a)
        }
        Command::Info => {
            let (g, config::NoKeys {}) = config::load(cfg)?;
            setup(cli.threads, cli.out_dir.clone(), g)?;
            info();
            Ok(EXIT_OK)
        }
    }
}

fn params(kappa: Option<f64>) -> Result<EnergyParams> {
    Ok(EnergyParams::new(kappa.unwrap_or(DEFAULT_KAPPA))?)
}

/// A named field on the mesh of the given level.
fn named_field(name: &str, mesh: Arc<TriMesh>, eps: Option<f64>, seed: u64) -> Result<Field> {
    Ok(match name {
        "hedgehog" => hedgehog(1, mesh),
        "antihedgehog" => hedgehog(-1, mesh),
        "constant" => constant_field(E3, mesh)?,
        "trial" => from_equivariant(&trial_profile(eps.unwrap_or(TRIAL_EPS))?, mesh)?,
        "random" => random_smooth_field(mesh, 0, RANDOM_AMP, seed),
        "random-q1" => random_smooth_field(mesh, 1, RANDOM_AMP, seed),
        "perturbed" => perturbed_hedgehog(mesh, RANDOM_AMP, seed),
        other => return Err(Error::InvalidInput(format!("unknown field {other:?}")).into()),
    })
}

/// `--load-field` if given (its header fixes the level), otherwise a named field.
fn input_field(
    load: Option<&Path>,
    name: Option<&str>,
    level: Option<usize>,
    eps: Option<f64>,
    seed: Option<u64>,
) -> Result<Field> {
    if let Some(path) = load {
        let m = load_field(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(l) = level {
            if l != m.mesh().level() {
                bail!(Error::InvalidInput(format!("--level {l} disagrees with the field file (level {})", m.mesh().level())));
            }
        }
        return Ok(m);
    }
    let mesh = build_icosphere(level.unwrap_or(DEFAULT_LEVEL))?;
    named_field(name.unwrap_or("hedgehog"), mesh, eps, seed.unwrap_or(DEFAULT_SEED))
}

fn print_csv(header: &str, rows: &[String]) {
    println!("# schema_version={TRACE_SCHEMA_VERSION}");
    println!("{header}");
    for r in rows {
        println!("{r}");
    }
}

fn save_outputs(env: &Env, m: &Field, save: Option<&Path>, vtk: Option<&Path>) -> Result<()> {
    if let Some(p) = save {
        save_field(m, &env.output(p)?)?;
    }
    if let Some(p) = vtk {
        write_vtk(m, env.create(p)?)?;
    }
    Ok(())
}

fn mesh(env: &Env, a: MeshArgs) -> Result<u8> {
    let mesh = build_icosphere(a.level.unwrap_or(DEFAULT_LEVEL))?;
    match a.out {
        Some(p) => write_off(&mesh, env.create(&p)?)?,
        None => write_off(&mesh, io::stdout().lock())?,
    }
    Ok(EXIT_OK)
}

fn diagnose(a: DiagnoseArgs) -> Result<u8> {
    let p = params(a.kappa)?;
    let m = input_field(a.load_field.as_deref(), a.field.as_deref(), a.level, a.eps, a.seed)?;
    let d = diagnostics(&m, p)?;
    print_csv(Diagnostics::CSV_HEADER, &[d.csv_row()]);
    Ok(EXIT_OK)
}

fn trial(env: &Env, a: TrialArgs) -> Result<u8> {
    let p = params(a.kappa)?;
    let eps = match a.eps {
        Some(e) => e,
        None => best_trial_eps(&eps_grid(), p)?.map_or(TRIAL_EPS, |(e, _)| e),
    };
    let profile = trial_profile(eps)?;
    let m = from_equivariant(&profile, build_icosphere(a.level.unwrap_or(DEFAULT_LEVEL))?)?;
    let d = diagnostics(&m, p)?;
    let o = oracle_report(&profile, p)?;
    print_csv(
        "source,eps,E,Q,S3,L3,J3",
        &[
            format!("mesh,{eps:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", d.total, d.q, d.s[2], d.l[2], d.j[2]),
            format!("oracle,{eps:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", o.energy, o.q, o.s3, o.l3, o.j3),
        ],
    );
    save_outputs(env, &m, a.save_field.as_deref(), a.vtk.as_deref())?;
    Ok(EXIT_OK)
}

fn oracle(a: OracleArgs) -> Result<u8> {
    let p = params(a.kappa)?;
    let profile = match a.profile.as_deref().unwrap_or("trial") {
        "trial" => trial_profile(a.eps.unwrap_or(TRIAL_EPS))?,
        "identity" => EquivariantProfile::identity(),
        other => bail!(Error::InvalidInput(format!("unknown profile {other:?}"))),
    };
    let o = oracle_report(&profile, p)?;
    print_csv("E,Q,S3,L3,J3", &[format!("{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", o.energy, o.q, o.s3, o.l3, o.j3)]);
    Ok(EXIT_OK)
}

fn evolve_cmd(env: &Env, a: EvolveArgs) -> Result<u8> {
    let p = params(a.kappa)?;
    let scheme: Scheme = a.scheme.as_deref().unwrap_or("rk4").parse()?;
    let cfg = EvolveConfig {
        dt: a.dt.unwrap_or(1e-3),
        t_end: a.t_end.unwrap_or(1.0),
        record_every: a.record_every.unwrap_or(10),
        scheme,
    };
    cfg.validate()?;
    let m0 = input_field(a.load_field.as_deref(), a.field.as_deref(), a.level, a.eps, a.seed)?;
    if let Some(w) = cfg.stability_warning(&m0) {
        eprintln!("warning: {w}");
    }
    let ev = evolve(&m0, &cfg, p)?;
    let (de, dj, dq) = ev.drifts();
    print_csv(
        "t_end,steps,records,drift_E,drift_J,drift_Q",
        &[format!("{:.12e},{},{},{de:.6e},{dj:.6e},{dq:.6e}", cfg.t_end, cfg.n_steps(), ev.trace.len())],
    );
    if let Some(path) = a.save_trace {
        write_trace_csv(&ev.trace, env.create(&path)?)?;
    }
    save_outputs(env, &ev.field, a.save_field.as_deref(), a.vtk.as_deref())?;
    Ok(EXIT_OK)
}

fn minimize(env: &Env, a: MinimizeArgs) -> Result<u8> {
    let p = params(a.kappa)?;
    let opts: MinimizeOptions = match &a.opts {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => MinimizeOptions::default(),
    };
    opts.validate()?;
    let level = a.level.unwrap_or(DEFAULT_LEVEL);
    let loaded = match &a.load_field {
        Some(path) => Some(input_field(Some(path), None, a.level, None, None)?),
        None => None,
    };
    let (m, report): (Field, MinimizeReport) = match a.j_target {
        Some(j) => {
            let seed = match loaded {
                Some(m) => m,
                None => {
                    let s = seed_field(j.0, p, level, a.seed_eps)?;
                    eprintln!("seed: eps {:.4e}, distortion {:.6}", s.eps, s.distortion);
                    s.field
                }
            };
            minimize_constrained(&seed, j.0, p, &opts)?
        }
        None => match (loaded, a.seed_eps) {
            (Some(m), _) => minimize_free(&m, p, &opts)?,
            (None, Some(eps)) => minimize_free(&from_equivariant(&trial_profile(eps)?, build_icosphere(level)?)?, p, &opts)?,
            (None, None) => free_minimizer(&build_icosphere(level)?, p, &opts)?,
        },
    };
    if !report.converged {
        eprintln!("warning: minimizer did not converge (stalled: {})", report.stalled);
    }
    println!("{}", summary(&report));
    if let Some(path) = &a.report {
        let mut w = env.create(path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
    }
    save_outputs(env, &m, a.save_field.as_deref(), a.vtk.as_deref())?;
    Ok(EXIT_OK)
}

fn summary(r: &MinimizeReport) -> String {
    let j = r.j_final;
    let l = r.multiplier;
    format!(
        "converged {}\nstalled {}\nE {:.12e}\nJ {:.12e},{:.12e},{:.12e}\nQ {:.3e}\nmultiplier {:.6e},{:.6e},{:.6e}\nkkt_residual {:.3e}\nequivariance_defect {:.3e}\nouter {}\ninner {}",
        r.converged,
        r.stalled,
        r.e_final,
        j[0],
        j[1],
        j[2],
        r.q_final,
        l[0],
        l[1],
        l[2],
        r.kkt_residual,
        r.equivariance_defect,
        r.iterations.outer,
        r.iterations.inner
    )
}

fn verify(env: &Env, a: VerifyArgs) -> Result<u8> {
    let d = SuiteConfig::default();
    let cfg = SuiteConfig {
        level: a.level.unwrap_or(d.level),
        kappa: a.kappa.unwrap_or(d.kappa),
        seed: a.seed.unwrap_or(d.seed),
        groups: a.groups.map_or(d.groups, |g| g.0),
        evolve_t_end: a.evolve_t_end.unwrap_or(d.evolve_t_end),
        j_target_factor: a.j_target_factor.unwrap_or(d.j_target_factor),
        minimize: a.minimize.unwrap_or(d.minimize),
    };
    let report = run_suite_with(&cfg)?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", report.checks.len());
    if let Some(path) = &a.json {
        let mut w = env.create(path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(if report.all_passed { EXIT_OK } else { EXIT_VERIFY })
}

fn info() {
    println!("spherosim {}", env!("CARGO_PKG_VERSION"));
    println!("field file: {} v{}", spherosim::io::FIELD_MAGIC, spherosim::io::FIELD_VERSION);
    println!("trace csv schema: {TRACE_SCHEMA_VERSION}");
    println!("minimize report schema: {}", spherosim::minimizer::SCHEMA_VERSION);
    println!("verify report schema: {}", spherosim::verify::SCHEMA_VERSION);
    println!("threads: {}", rayon::current_num_threads());
    println!("level,vertices,triangles");
    for level in 0..=spherosim::geometry::MAX_LEVEL {
        let k = 4usize.pow(level as u32);
        println!("{level},{},{}", 10 * k + 2, 20 * k);
    }
}
