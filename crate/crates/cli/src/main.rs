//! Command-line verification harness: runs the check suites against a
//! JSON configuration, writes deterministic manifests, tabulates the
//! two-packet scattering overlap through both pipelines, and demonstrates
//! the wedge-support behaviour of one-sided shifts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wedgeform::config::RunConfig;
use wedgeform::deform::tau_shift;
use wedgeform::element::TensorElement;
use wedgeform::error::Error;
use wedgeform::fock::{gaussian_rapidity_profile, FockSpace};
use wedgeform::grid::{SpacetimeGrid, Vfield, Wedge};
use wedgeform::integrable::scattering_integral;
use wedgeform::suites::run_verify;
use wedgeform::testfn::TestFunction;

/// Environment variable overriding the configured output directory
/// (itself overridden by `--out`).
const OUT_ENV: &str = "WEDGEFORM_OUT";

#[derive(Parser)]
#[command(name = "wedgeform", version, about = "Verification harness for multiplicative deformations of free quantum fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write a deterministic run manifest.
    Verify {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Restrict the run to the named suites (repeatable).
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Output directory; overrides WEDGEFORM_OUT and the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run suites concurrently, one thread per suite.
        #[arg(long)]
        parallel: bool,
    },
    /// Tabulate the two-packet scattering overlap through the operator
    /// pipeline and the quadrature pipeline.
    Smatrix {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated deformation strengths, e.g. "1,0.3,0".
        #[arg(long)]
        lambda: String,
        /// Rapidity separations as lo:hi:count, e.g. "1.0:3.0:5".
        /// Separations well below 1 mix the packets and show honest
        /// cross-term deviations between the pipelines.
        #[arg(long)]
        theta: String,
        /// Output directory; overrides WEDGEFORM_OUT and the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the outside-wedge mass of a one-particle test function
    /// before and after one-sided shifts, at the configured resolution and
    /// with a doubled domain.
    ShiftDemo {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Shift vectors as semicolon-separated comma pairs,
        /// e.g. "0,0;0,1;1,1;0,-1".
        #[arg(long)]
        x: String,
        /// Output directory; overrides WEDGEFORM_OUT and the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify {
            config,
            suites,
            out,
            parallel,
        } => cmd_verify(&config, &suites, out, parallel),
        Command::Smatrix {
            config,
            lambda,
            theta,
            out,
        } => cmd_smatrix(&config, &lambda, &theta, out),
        Command::ShiftDemo { config, x, out } => cmd_shift_demo(&config, &x, out),
    };
    match outcome {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Resolves the output directory: flag, then environment, then config.
fn resolve_out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Ok(dir) = std::env::var(OUT_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(&cfg.output_dir)
}

fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let cfg = RunConfig::from_path(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::ConfigInvalid(format!("cannot create output directory {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, text)
        .map_err(|e| Error::ConfigInvalid(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_verify(
    config: &Path,
    suites: &[String],
    out: Option<PathBuf>,
    parallel: bool,
) -> Result<bool, Error> {
    let cfg = load_config(config)?;
    let out_dir = resolve_out_dir(&cfg, out);
    let selected = if suites.is_empty() {
        None
    } else {
        Some(suites)
    };
    let (manifest, timings) = run_verify(&cfg, selected.map(|s| &s[..]), parallel)?;

    for c in &manifest.checks {
        println!(
            "{} {}/{}: residual {:.3e} vs tolerance {:.3e} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.residual,
            c.tolerance,
            c.note
        );
    }
    println!(
        "{} checks passed, {} failed (config {})",
        manifest.passed, manifest.failed, manifest.config_hash
    );

    let manifest_path = write_text(&out_dir, "manifest.json", &(manifest.to_json() + "\n"))?;
    println!("manifest written to {}", manifest_path.display());

    // Wall-clock durations are environment-dependent and deliberately kept
    // out of the manifest; they live in a sidecar.
    let timing_rows: Vec<serde_json::Value> = timings
        .iter()
        .map(|(suite, secs)| serde_json::json!({ "suite": suite, "seconds": secs }))
        .collect();
    let timings_text = serde_json::to_string_pretty(&serde_json::Value::Array(timing_rows))
        .expect("timings serialise")
        + "\n";
    write_text(&out_dir, "timings.json", &timings_text)?;

    Ok(manifest.all_passed())
}

fn parse_lambda_list(text: &str) -> Result<Vec<f64>, Error> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| Error::ConfigInvalid(format!("invalid strength '{part}'")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "strength must be finite and nonnegative, got {v}"
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::ConfigInvalid("empty strength list".into()));
    }
    Ok(out)
}

fn parse_theta_range(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::ConfigInvalid(format!(
            "theta range must be lo:hi:count, got '{text}'"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::ConfigInvalid(format!("invalid range start '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::ConfigInvalid(format!("invalid range end '{}'", parts[1])))?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::ConfigInvalid(format!("invalid range count '{}'", parts[2])))?;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo || count == 0 {
        return Err(Error::ConfigInvalid(format!(
            "theta range needs finite lo <= hi and count >= 1, got '{text}'"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect())
}

fn cmd_smatrix(
    config: &Path,
    lambda: &str,
    theta: &str,
    out: Option<PathBuf>,
) -> Result<bool, Error> {
    let cfg = load_config(config)?;
    let out_dir = resolve_out_dir(&cfg, out);
    let lambdas = parse_lambda_list(lambda)?;
    let thetas = parse_theta_range(theta)?;

    let fs = FockSpace::new(cfg.fock_rule()?, cfg.fock.particle_cap)?;
    let sigma = 0.15;
    let mut csv = String::from(
        "lambda,theta,operator_re,operator_im,operator_abs,quadrature_re,quadrature_im,rel_deviation\n",
    );
    for &lam in &lambdas {
        let def = cfg.base_deformation()?.scaled(lam);
        let s = cfg.scattering_function(lam)?;
        for &th in &thetas {
            let fast = gaussian_rapidity_profile(fs.rule(), th / 2.0, sigma);
            let slow = gaussian_rapidity_profile(fs.rule(), -th / 2.0, sigma);
            let operator = fs.scattering_overlap(&def, &fast, &slow)?;
            let quadrature = scattering_integral(fs.rule(), &s, &fast, &slow);
            let rel = (operator - quadrature).norm() / quadrature.norm().max(1e-300);
            csv.push_str(&format!(
                "{lam:.6e},{th:.6e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{rel:.16e}\n",
                operator.re,
                operator.im,
                operator.norm(),
                quadrature.re,
                quadrature.im
            ));
        }
    }
    print!("{csv}");
    let path = write_text(&out_dir, "smatrix.csv", &csv)?;
    eprintln!("table written to {}", path.display());
    Ok(true)
}

fn parse_shift_list(text: &str, d: usize) -> Result<Vec<Vfield>, Error> {
    let mut out = Vec::new();
    for group in text.split(';') {
        let comps: Vec<&str> = group.split(',').collect();
        if comps.len() != d {
            return Err(Error::ConfigInvalid(format!(
                "shift '{group}' must have {d} components"
            )));
        }
        let mut x = Vfield::zero(d);
        for (i, c) in comps.iter().enumerate() {
            let v: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::ConfigInvalid(format!("invalid shift component '{c}'")))?;
            if !v.is_finite() {
                return Err(Error::ConfigInvalid(format!("shift component {v} not finite")));
            }
            x.set(i, v);
        }
        out.push(x);
    }
    if out.is_empty() {
        return Err(Error::ConfigInvalid("empty shift list".into()));
    }
    Ok(out)
}

/// Whether the spatial part dominates the temporal one, i.e. the vector
/// lies in the closure of the right wedge.
fn in_right_wedge_closure(x: &Vfield) -> bool {
    x.get(x.dim() - 1) >= x.get(0).abs()
}

fn cmd_shift_demo(config: &Path, x_list: &str, out: Option<PathBuf>) -> Result<bool, Error> {
    let cfg = load_config(config)?;
    let out_dir = resolve_out_dir(&cfg, out);
    let shifts = parse_shift_list(x_list, cfg.grid.d)?;
    let def = cfg.base_deformation()?;
    let origin = Vfield::zero(cfg.grid.d);

    let base = cfg.spacetime_grid()?;
    let doubled = SpacetimeGrid::new(
        base.dim(),
        base.points_per_axis() * 2,
        base.extent() * 2.0,
        base.n_trunc(),
    )?;

    let measure = |grid: SpacetimeGrid, x: &Vfield| -> Result<(f64, f64), Error> {
        let f = TestFunction::bump(
            grid,
            &Vfield::new(&[0.0, 2.5]),
            &Vfield::new(&[1.0, 1.0]),
            &Vfield::new(&[0.0, 0.3]),
        )?;
        let e = TensorElement::from_single(f);
        let norm = e.norm_sq_position()?;
        let before = e.wedge_mass_outside(Wedge::Right, &origin)? / norm;
        let after = tau_shift(&def, x, &e)?.wedge_mass_outside(Wedge::Right, &origin)? / norm;
        Ok((before, after))
    };

    let mut rows = Vec::new();
    println!("shift           in-wedge  before      after       after(doubled domain)");
    for x in &shifts {
        let (before, after) = measure(base, x)?;
        let (_, after_doubled) = measure(doubled, x)?;
        let inside = in_right_wedge_closure(x);
        println!(
            "({:+.3},{:+.3})  {}   {:.3e}  {:.3e}  {:.3e}",
            x.get(0),
            x.get(1),
            if inside { "yes" } else { "no " },
            before,
            after,
            after_doubled
        );
        rows.push(serde_json::json!({
            "x": [x.get(0), x.get(1)],
            "in_right_wedge_closure": inside,
            "outside_mass_before": before,
            "outside_mass_after": after,
            "outside_mass_after_doubled_domain": after_doubled,
        }));
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Array(rows))
        .expect("rows serialise")
        + "\n";
    let path = write_text(&out_dir, "shift_demo.json", &text)?;
    eprintln!("report written to {}", path.display());
    Ok(true)
}
