use std::io::Write;

use orthokin::workspace::{
    default_bounds, write_ply, write_section_csv, Aabb, CellLabel, WorkspaceSummary,
};
use orthokin::{
    assemble, build_octree, classify_point, classify_singularity, cross_section,
    inverse_kinematics, isotropy_residual, manipulability, synthesize_joint_limits,
    t_connected_regions, CartesianPoint, DesignParameters, FeasibilitySpec, Infeasibility,
    IsotropyResidual, PerformancePoint, SingularityReport, WorkspaceError,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{sink, write_json};
use crate::{Cli, Command, Failure, Format, Metric, PsiArgs, Status};

/// Residual below which the isotropy conditions count as satisfied.
const ISOTROPY_EPS: f64 = 1e-10;

pub fn run(cli: &Cli) -> Result<Status, Failure> {
    let params = load_machine(cli)?;
    match &cli.command {
        Command::Analyze { point, format } => {
            expect_format(*format, &[Format::Json])?;
            analyze(cli, &params, *point)
        }
        Command::Map {
            region,
            resolution,
            metric,
            format,
        } => {
            expect_format(*format, &[Format::Csv, Format::Json])?;
            map(cli, &params, *region, *resolution, *metric, *format)
        }
        Command::Workspace {
            depth,
            region,
            format,
            axis,
            offset,
            resolution,
            synthesize_limits,
            psi,
        } => {
            let spec = feasibility_spec(psi)?;
            let params = if *synthesize_limits {
                let limits =
                    synthesize_joint_limits(&params, &spec, 11).map_err(workspace_failure)?;
                if !limits.is_usable() {
                    return Err(Failure::infeasible(
                        "synthesized joint limits collapsed to a point",
                    ));
                }
                limits.apply_to(&params)
            } else {
                params
            };
            let bounds = match region {
                Some(r) => region_box(r),
                None => default_bounds(&params).map_err(workspace_failure)?,
            };
            let model = build_octree(&params, &spec, bounds, *depth).map_err(workspace_failure)?;
            let model = t_connected_regions(model);
            match format {
                Format::Ply => {
                    let Some(path) = &cli.out else {
                        return Err(Failure::invalid("--format ply needs --out for the mesh"));
                    };
                    let mut out = sink(Some(path))?;
                    write_ply(&model, &mut out)?;
                    out.flush()?;
                    let mut stdout = sink(None)?;
                    write_json(&WorkspaceSummary::new(&model), &mut stdout)?;
                    stdout.flush()?;
                }
                Format::Json => {
                    let mut out = sink(cli.out.as_deref())?;
                    write_json(&WorkspaceSummary::new(&model), &mut out)?;
                    out.flush()?;
                }
                Format::Csv => {
                    let offset = match offset {
                        Some(o) => *o,
                        None => {
                            let (p, _) =
                                params.isotropic_configuration().map_err(Failure::invalid)?;
                            p.0[axis.index()]
                        }
                    };
                    let section = cross_section(&model, *axis, offset, *resolution)
                        .map_err(workspace_failure)?;
                    let mut out = sink(cli.out.as_deref())?;
                    write_section_csv(&section, &mut out)?;
                    out.flush()?;
                }
            }
            if model.count(CellLabel::Inside) == 0 {
                return Err(Failure::infeasible("the workspace contains no inside cell"));
            }
            Ok(Status::Success)
        }
        Command::Limits {
            resolution,
            format,
            psi,
        } => {
            expect_format(*format, &[Format::Json])?;
            let spec = feasibility_spec(psi)?;
            let limits =
                synthesize_joint_limits(&params, &spec, *resolution).map_err(workspace_failure)?;
            let mut out = sink(cli.out.as_deref())?;
            write_json(&limits, &mut out)?;
            out.flush()?;
            if limits.is_usable() {
                Ok(Status::Success)
            } else {
                Err(Failure::infeasible(
                    "the admissible cube collapsed to the isotropic point",
                ))
            }
        }
        Command::Isotropy { format } => {
            expect_format(*format, &[Format::Json])?;
            isotropy(cli, &params)
        }
    }
}

fn load_machine(cli: &Cli) -> Result<DesignParameters, Failure> {
    let mut params = match &cli.machine {
        Some(path) => DesignParameters::load(path).map_err(Failure::invalid)?,
        None => DesignParameters::canonical(1.0).map_err(Failure::invalid)?,
    };
    if let Some(l) = cli.leg_length {
        params.leg_length = l;
        let report = params.validate();
        if !report.is_empty() {
            return Err(Failure::invalid(report));
        }
    }
    Ok(params)
}

fn expect_format(format: Format, allowed: &[Format]) -> Result<(), Failure> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(Failure::invalid(format!(
            "format {format:?} is not available for this command"
        )))
    }
}

fn feasibility_spec(psi: &PsiArgs) -> Result<FeasibilitySpec, Failure> {
    let spec = FeasibilitySpec::default().with_psi(psi.psi_min, psi.psi_max);
    spec.validate().map_err(Failure::invalid)?;
    Ok(spec)
}

fn workspace_failure(e: WorkspaceError) -> Failure {
    match e {
        WorkspaceError::DegenerateSpec(_) => Failure::infeasible(e),
        _ => Failure::invalid(e),
    }
}

fn region_box(r: &[f64; 6]) -> Aabb {
    Aabb::new([r[0], r[1], r[2]].into(), [r[3], r[4], r[5]].into())
}

#[derive(Serialize)]
struct PointReport {
    point: CartesianPoint,
    rho: orthokin::JointVector,
    eta: [f64; 3],
    boundary_flags: [bool; 3],
    det_a: f64,
    det_b: f64,
    singularity: SingularityReport,
    /// `None` at a singular configuration.
    performance: Option<PerformancePoint>,
    isotropy: IsotropyResidual,
    /// First failed test under the default feasibility spec.
    infeasibility: Option<Infeasibility>,
}

fn analyze(cli: &Cli, params: &DesignParameters, point: [f64; 3]) -> Result<Status, Failure> {
    let p = CartesianPoint::from(point);
    let ik = inverse_kinematics(&p, params).map_err(Failure::infeasible)?;
    let m = assemble(&p, &ik, params).map_err(Failure::infeasible)?;
    let report = PointReport {
        point: p,
        rho: ik.rho,
        eta: m.eta.into(),
        boundary_flags: ik.boundary_flags,
        det_a: m.det_a,
        det_b: m.det_b,
        singularity: classify_singularity(&m, params),
        performance: manipulability(&m).ok(),
        isotropy: isotropy_residual(&ik, &m, params),
        infeasibility: classify_point(&p, params, &FeasibilitySpec::default()).err(),
    };
    let mut out = sink(cli.out.as_deref())?;
    write_json(&report, &mut out)?;
    out.flush()?;
    Ok(Status::Success)
}

/// `n` evenly spaced values from `lo` to `hi`; the midpoint when `n == 1`.
fn axis_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if n == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Serialize)]
struct MapSample {
    x: f64,
    y: f64,
    z: f64,
    value: f64,
}

#[derive(Serialize)]
struct MapReport<'a> {
    metric: &'a str,
    resolution: usize,
    samples: Vec<MapSample>,
}

fn map(
    cli: &Cli,
    params: &DesignParameters,
    region: Option<[f64; 6]>,
    resolution: usize,
    metric: Metric,
    format: Format,
) -> Result<Status, Failure> {
    if resolution == 0 {
        return Err(Failure::invalid("resolution must be at least 1"));
    }
    let limits = default_bounds(params).map_err(workspace_failure)?;
    let bounds = match &region {
        Some(r) => region_box(r),
        None => limits,
    };
    let empty = (0..3).any(|k| bounds.max[k] < bounds.min[k]);
    if !empty && !(limits.contains(&bounds.min) && limits.contains(&bounds.max)) {
        return Err(Failure::invalid(format!(
            "region must lie within the analysis bounds [{:?}, {:?}]",
            limits.min.as_slice(),
            limits.max.as_slice()
        )));
    }

    // Amplification bounds are the quantity mapped here, so they do not mask.
    let spec = FeasibilitySpec::default().without_psi_bounds();
    let points: Vec<[f64; 3]> = if empty {
        Vec::new()
    } else {
        let xs = axis_samples(bounds.min.x, bounds.max.x, resolution);
        let ys = axis_samples(bounds.min.y, bounds.max.y, resolution);
        let zs = axis_samples(bounds.min.z, bounds.max.z, resolution);
        let mut points = Vec::with_capacity(resolution.pow(3));
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    points.push([x, y, z]);
                }
            }
        }
        points
    };
    let samples: Vec<MapSample> = points
        .par_iter()
        .map(|&[x, y, z]| {
            let value = classify_point(&CartesianPoint::new(x, y, z), params, &spec)
                .map(|f| match metric {
                    Metric::Kappa => f.performance.kappa,
                    Metric::PsiMax => f.performance.psi_max(),
                    Metric::PsiMin => f.performance.psi_min(),
                })
                .unwrap_or(f64::NAN);
            MapSample { x, y, z, value }
        })
        .collect();

    let mut out = sink(cli.out.as_deref())?;
    match format {
        Format::Json => {
            let name = match metric {
                Metric::Kappa => "kappa",
                Metric::PsiMax => "psi-max",
                Metric::PsiMin => "psi-min",
            };
            write_json(
                &MapReport {
                    metric: name,
                    resolution,
                    samples,
                },
                &mut out,
            )?;
        }
        _ => {
            use orthokin::workspace::format_float as f;
            writeln!(out, "x,y,z,value")?;
            for s in &samples {
                writeln!(out, "{},{},{},{}", f(s.x), f(s.y), f(s.z), f(s.value))?;
            }
        }
    }
    out.flush()?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct IsotropyReport {
    point: CartesianPoint,
    rho: orthokin::JointVector,
    residuals: IsotropyResidual,
    max_residual: f64,
    isotropic: bool,
    kappa: Option<f64>,
    psi: Option<[f64; 3]>,
}

fn isotropy(cli: &Cli, params: &DesignParameters) -> Result<Status, Failure> {
    let (p, _) = params
        .isotropic_configuration()
        .map_err(Failure::infeasible)?;
    let ik = inverse_kinematics(&p, params).map_err(Failure::infeasible)?;
    let m = assemble(&p, &ik, params).map_err(Failure::infeasible)?;
    let residuals = isotropy_residual(&ik, &m, params);
    let performance = manipulability(&m).ok();
    let isotropic = residuals.is_isotropic(ISOTROPY_EPS);
    let report = IsotropyReport {
        point: p,
        rho: ik.rho,
        residuals,
        max_residual: residuals.max(),
        isotropic,
        kappa: performance.map(|perf| perf.kappa),
        psi: performance.map(|perf| perf.psi),
    };
    let mut out = sink(cli.out.as_deref())?;
    write_json(&report, &mut out)?;
    out.flush()?;
    if isotropic {
        Ok(Status::Success)
    } else {
        Err(Failure::infeasible(format!(
            "isotropy conditions violated, max residual {:e}",
            residuals.max()
        )))
    }
}
