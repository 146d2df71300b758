use std::io::Write;
use std::path::Path;
use std::time::Instant;

use chsw_core::chsw::{direction_rng, sample_directions_from};
use chsw_core::exact::measure_wasserstein;
use chsw_core::flows::{run_flow_with, FlowConfig, EXACT_W2_MAX_POINTS};
use chsw_core::geometry::SpdMetric;
use chsw_core::mds::{mds_fit, MdsProblem};
use chsw_core::sampling::{
    sample_gaussian, sample_mixture, sample_spd_log_gaussian, sample_wrapped_normal, WrappedNormalParams,
};
use chsw_core::{chsw, ChswConfig, Descriptor, DiscreteMeasure, Geometry, Manifold};
use nalgebra::DMatrix;
use rand::Rng;
use serde_json::json;

use crate::cloud;
use crate::config::{
    resolve, BenchConfig, ComponentSpec, DistanceConfig, FlowRunConfig, MdsConfig, SampleConfig, SamplerSpec,
};
use crate::error::{CliError, CliResult};

/// Stream indices of the sampler generators derived from `--seed`.
const INIT_STREAM: u64 = 1;
const TARGET_STREAM: u64 = 2;
const SAMPLE_STREAM: u64 = 3;

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn matrix(rows: &[Vec<f64>], what: &str) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::schema(format!("{what} must be a square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn wrapped_params(mean: &[f64], sigma: Option<f64>, cov: Option<&Vec<Vec<f64>>>) -> CliResult<WrappedNormalParams> {
    match (sigma, cov) {
        (Some(s), None) => Ok(WrappedNormalParams::isotropic(mean.to_vec(), s)),
        (None, Some(c)) => Ok(WrappedNormalParams::new(mean.to_vec(), matrix(c, "cov")?)),
        _ => Err(CliError::schema("give exactly one of sigma and cov")),
    }
}

pub fn build_measure(spec: &SamplerSpec, base: &Path, seed: u64, stream: u64) -> CliResult<DiscreteMeasure> {
    let mut rng = direction_rng(seed, stream);
    Ok(match spec {
        SamplerSpec::File { path } => cloud::read(&resolve(base, path))?,
        SamplerSpec::Gaussian { mean, sigma, n } => sample_gaussian(mean, *sigma, *n, &mut rng)?,
        SamplerSpec::WrappedNormal {
            manifold,
            mean,
            sigma,
            cov,
            n,
        } => {
            let m = Manifold::from_descriptor(manifold)?;
            sample_wrapped_normal(&m, &wrapped_params(mean, *sigma, cov.as_ref())?, *n, &mut rng)?
        }
        SamplerSpec::Mixture { manifold, components, n } => {
            let m = Manifold::from_descriptor(manifold)?;
            let comps = components
                .iter()
                .map(|ComponentSpec { weight, mean, sigma, cov }| Ok((*weight, wrapped_params(mean, *sigma, cov.as_ref())?)))
                .collect::<CliResult<Vec<_>>>()?;
            sample_mixture(&m, &comps, *n, &mut rng)?
        }
        SamplerSpec::SpdLogGaussian { manifold, base: b, scale, n } => {
            let Manifold::Spd(spd) = Manifold::from_descriptor(manifold)? else {
                return Err(CliError::schema("spd_log_gaussian needs an SPD manifold"));
            };
            sample_spd_log_gaussian(&spd, &matrix(b, "base")?, *scale, *n, &mut rng)?
        }
    })
}

pub fn distance(cfg: &DistanceConfig, base: &Path, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let mu = cloud::read(&resolve(base, &cfg.mu))?;
    let nu = cloud::read(&resolve(base, &cfg.nu))?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let c = ChswConfig {
        p: cfg.p,
        num_projections: cfg.num_projections,
        projection: cfg.projection,
        seed,
    };
    let t = Instant::now();
    let e = chsw(&mu, &nu, &c)?;
    let wall = elapsed_ms(t);
    let (mean, std) = e.per_direction_stats();
    let doc = json!({
        "chsw_p": e.value_p,
        "chsw": e.value,
        "L": e.directions_used,
        "p": cfg.p,
        "projection": cfg.projection,
        "seed": seed,
        "per_direction_stats": { "mean": mean, "std": std },
        "wall_time_ms": wall,
    });
    emit_line(out, &doc)
}

fn emit_line(out: &mut dyn Write, doc: &serde_json::Value) -> CliResult<()> {
    writeln!(out, "{doc}").map_err(|e| CliError::io("<output>", e))
}

pub fn flow(cfg: &FlowRunConfig, base: &Path, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let init = build_measure(&cfg.init, base, seed, INIT_STREAM)?;
    let target = build_measure(&cfg.target, base, seed, TARGET_STREAM)?;
    let fc = FlowConfig {
        step_size: cfg.step_size,
        num_steps: cfg.num_steps,
        num_projections: cfg.num_projections,
        projection: cfg.projection,
        seed,
        eval_every: cfg.eval_every,
        resample_directions: cfg.resample_directions,
        exact_w2: cfg.exact_w2,
    };
    let snapshots = cfg.snapshot_dir.as_ref().map(|d| resolve(base, d));
    if let Some(dir) = &snapshots {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let small = init.len() <= EXACT_W2_MAX_POINTS && target.len() <= EXACT_W2_MAX_POINTS;
    let initial_w2 = if small { Some(measure_wasserstein(&init, &target, 2.0)?) } else { None };

    let t = Instant::now();
    let mut io_err = None;
    let result = run_flow_with(init, &target, &fc, |state| {
        let rec = state.history.last().expect("checkpoint recorded");
        if let Err(e) = emit_line(out, &serde_json::to_value(rec).expect("record serializes")) {
            io_err = Some(e);
        }
        if let Some(dir) = &snapshots {
            let path = dir.join(format!("step_{:06}.txt", state.step));
            if let Err(e) = cloud::write(&path, &state.particles) {
                io_err.get_or_insert(e);
            }
        }
        Ok(())
    });
    if let Some(e) = io_err {
        return Err(e);
    }
    let state = result?;
    let final_w2 = if small {
        Some(measure_wasserstein(&state.particles, &target, 2.0)?)
    } else {
        None
    };
    let doc = json!({
        "summary": {
            "steps": state.step,
            "initial_w2": initial_w2,
            "final_w2": final_w2,
            "wall_time_ms": elapsed_ms(t),
        }
    });
    emit_line(out, &doc)
}

pub fn read_distance_csv(path: &Path) -> CliResult<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::schema(format!("{}: row {i}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| CliError::schema(format!("{}: row {i}: not a number: {f:?}", path.display())))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    matrix(&rows, &path.display().to_string())
}

pub fn mds(cfg: &MdsConfig, base: &Path, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let delta = read_distance_csv(&resolve(base, &cfg.distances))?;
    let problem = MdsProblem {
        delta,
        scale: cfg.scale,
        target_dim: cfg.target_dim,
        max_iters: cfg.max_iters,
        step_size: cfg.step_size,
        seed: seed.or(cfg.seed).unwrap_or(0),
        restarts: cfg.restarts,
    };
    let r = mds_fit(&problem)?;
    let m = Manifold::Lorentz(chsw_core::geometry::Lorentz::new(cfg.target_dim, -1.0)?);
    let cloud_out = DiscreteMeasure::uniform(m, r.embedding)?;
    out.write_all(cloud::render(&cloud_out).as_bytes())
        .map_err(|e| CliError::io("<output>", e))?;
    let summary = json!({
        "stress": r.loss,
        "relative_stress": r.loss / problem.total_sq().max(f64::MIN_POSITIVE),
        "iterations": r.iterations,
    });
    eprintln!("{summary}");
    Ok(())
}

pub fn sample(cfg: &SampleConfig, base: &Path, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let m = build_measure(&cfg.sampler, base, seed, SAMPLE_STREAM)?;
    out.write_all(cloud::render(&m).as_bytes())
        .map_err(|e| CliError::io("<output>", e))
}

/// Intrinsic manifold dimension, reported in the benchmark table.
fn intrinsic_dim(d: &Descriptor) -> usize {
    match d {
        Descriptor::Euclidean { dim } | Descriptor::Lorentz { dim, .. } | Descriptor::Poincare { dim, .. } => *dim,
        Descriptor::Mahalanobis { metric } => metric.len(),
        Descriptor::SpdLogEuclidean { n }
        | Descriptor::SpdOnq { n, .. }
        | Descriptor::SpdLogCholesky { n }
        | Descriptor::SpdAffineInvariant { n } => n * (n + 1) / 2,
        Descriptor::Product { components } => components.iter().map(intrinsic_dim).sum(),
    }
}

/// Points `γ_v(r)` along random geodesics through the origin.
fn bench_cloud(m: &Manifold, n: usize, seed: u64, stream: u64, shift: f64) -> CliResult<DiscreteMeasure> {
    let dirs = sample_directions_from(m, seed, stream << 32, n);
    let mut radii = direction_rng(seed, (stream << 32) | 0xffff_ffff);
    let pts = dirs
        .iter()
        .map(|v| {
            let r = 0.5 * (radii.random::<f64>() + shift);
            m.geodesic_point(v, r)
        })
        .collect::<chsw_core::Result<Vec<_>>>()?;
    Ok(DiscreteMeasure::uniform(m.clone(), pts)?)
}

pub fn bench(cfg: &BenchConfig, seed: Option<u64>, out: &mut dyn Write) -> CliResult<()> {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "projection", "n", "L", "d", "p", "wall_time_ms", "value"])
        .map_err(|e| CliError::schema(e.to_string()))?;
    for (mi, desc) in cfg.manifolds.iter().enumerate() {
        let m = Manifold::from_descriptor(desc)?;
        let affine = matches!(&m, Manifold::Spd(s) if s.metric() == SpdMetric::AffineInvariant);
        for &proj in &cfg.projections {
            for &n in &cfg.sizes {
                let mu = bench_cloud(&m, n, seed, 2 * mi as u64, 0.0)?;
                let nu = bench_cloud(&m, n, seed, 2 * mi as u64 + 1, 1.0)?;
                for &l in &cfg.num_projections {
                    let c = ChswConfig {
                        p: cfg.p,
                        num_projections: l,
                        projection: proj,
                        seed,
                    };
                    let (wall, value) = if affine && proj == chsw_core::Projection::Geodesic {
                        (String::new(), "unsupported".to_string())
                    } else {
                        let t = Instant::now();
                        let e = chsw(&mu, &nu, &c)?;
                        (format!("{:.3}", elapsed_ms(t)), format!("{:?}", e.value))
                    };
                    w.write_record([
                        m.kind().to_string(),
                        proj.name().to_string(),
                        n.to_string(),
                        l.to_string(),
                        intrinsic_dim(desc).to_string(),
                        format!("{:?}", cfg.p),
                        wall,
                        value,
                    ])
                    .map_err(|e| CliError::schema(e.to_string()))?;
                }
            }
        }
    }
    w.flush().map_err(|e| CliError::io("<output>", e))?;
    Ok(())
}
