//! One function per command. Each computes everything in memory and
//! returns the artifacts to write together with its check report.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use rayon::prelude::*;
use roompass_core::bracketing::{BracketCsvRow, Scope};
use roompass_core::fd::{conforming_grid, csv_rows, extrapolated_spectrum, generic_lambdas, sandwich_with_spectra};
use roompass_core::singular::log_linear_slope;
use roompass_core::skeleton::build_room_skeleton;
use roompass_core::skeleton_operator::{cubic_test_set, skeleton_spectrum};
use roompass_core::tail::poincare_bound;
use roompass_core::{
    assemble_bounds, min_m_for_lambda, rayleigh_report, second_term_constants, BoundaryCondition, Check, Comparison,
    EdgeGroup, Report, RpDomain, Skeleton, SkeletonSpace,
};
use serde::Serialize;

use crate::config::{CommandName, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{to_csv, Artifact};
use crate::plot::{polylines_svg, Plot, Series};

pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub report: Report,
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    match cfg.command {
        CommandName::Asymptotics => asymptotics(cfg),
        CommandName::Brackets => brackets(cfg),
        CommandName::Tail => tail(cfg),
        CommandName::Essential => essential(cfg),
        CommandName::Skeleton => skeleton(cfg),
        CommandName::SlSpectrum => sl_spectrum(cfg),
        CommandName::Oracle => oracle(cfg),
    }
}

fn json<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(roompass_core::Error::from)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn push_optional(out: &mut Vec<Artifact>, path: Option<&std::path::Path>, bytes: impl FnOnce() -> Vec<u8>) {
    if let Some(p) = path {
        out.push(Artifact::file(p, bytes()));
    }
}

#[derive(Serialize)]
struct AsymptoticsRow {
    lambda: f64,
    #[serde(rename = "M")]
    m: usize,
    bc: String,
    lower: u64,
    upper: u64,
    weyl: f64,
    norm_lower: f64,
    norm_upper: f64,
    ref_lower: f64,
    ref_upper: f64,
}

fn asymptotics(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let params = cfg.params(cfg.pieces.unwrap_or(2))?;
    let lambdas = cfg.sweep.values();
    let rows: Vec<(BracketCsvRow, f64, f64)> = lambdas
        .par_iter()
        .map(|&l| -> CliResult<_> {
            let m = match cfg.m {
                Some(m) => m,
                None => min_m_for_lambda(&params, l, cfg.tail).map_err(CliError::invalid)?.m,
            };
            let r = assemble_bounds(&params, cfg.bc, m, l, Scope::Omega2M).map_err(CliError::invalid)?;
            let s = second_term_constants(&params, Some(m));
            let (lo, hi) = match cfg.bc {
                BoundaryCondition::Neumann => (s.c1, s.c2),
                BoundaryCondition::Dirichlet => (0.0, s.cd_upper),
            };
            Ok((BracketCsvRow::from(&r), lo, hi))
        })
        .collect::<CliResult<_>>()?;

    let limit = second_term_constants(&params, None);
    let c2a = params.c.powf(2.0 * params.alpha);
    let mut report = Report::new("asymptotics");
    report.push(Check::holds("bracket_order", rows.iter().all(|(r, _, _)| r.lower <= r.upper)));
    report.push(Check::new(
        "c2_minus_c1_identity",
        (limit.c2 - limit.c1) - 2.0 * params.k * c2a / (1.0 - c2a),
        Comparison::AbsAtMost,
        1e-12,
    ));
    report.push(Check::holds("c1_positive", limit.c1_positive()));
    report.push(Check::holds(
        "weyl_nondecreasing",
        rows.windows(2).all(|w| w[0].0.m != w[1].0.m || w[0].0.weyl <= w[1].0.weyl),
    ));

    let csv_rows: Vec<AsymptoticsRow> = rows
        .iter()
        .map(|(r, lo, hi)| AsymptoticsRow {
            lambda: r.lambda,
            m: r.m,
            bc: r.bc.clone(),
            lower: r.lower,
            upper: r.upper,
            weyl: r.weyl,
            norm_lower: r.norm_lower,
            norm_upper: r.norm_upper,
            ref_lower: *lo,
            ref_upper: *hi,
        })
        .collect();
    let mut artifacts = vec![Artifact::main(cfg.out.as_deref(), to_csv(&csv_rows)?)];
    let (ll, lu) = match cfg.bc {
        BoundaryCondition::Neumann => (limit.c1, limit.c2),
        BoundaryCondition::Dirichlet => (0.0, limit.cd_upper),
    };
    push_optional(&mut artifacts, cfg.plot_data.as_deref(), || {
        let mut s = format!(
            "# {} normalized second terms (count - weyl) / (sqrt(lambda)/pi)\n# lambda M norm_lower norm_upper ref_lower_M ref_upper_M ref_lower ref_upper\n",
            cfg.bc.as_str()
        );
        for (r, lo, hi) in &rows {
            let _ = writeln!(
                s,
                "{:e} {} {:.12} {:.12} {:.12} {:.12} {:.12} {:.12}",
                r.lambda, r.m, r.norm_lower, r.norm_upper, lo, hi, ll, lu
            );
        }
        s.into_bytes()
    });
    push_optional(&mut artifacts, cfg.svg.as_deref(), || {
        let pick = |f: fn(&(BracketCsvRow, f64, f64)) -> f64| rows.iter().map(|x| (x.0.lambda, f(x))).collect::<Vec<_>>();
        let names = match cfg.bc {
            BoundaryCondition::Neumann => ("C1(M)", "C2(M)"),
            BoundaryCondition::Dirichlet => ("0", "CD(M)"),
        };
        Plot {
            title: format!("normalized second term, {}", cfg.bc.as_str()),
            x_label: "lambda".into(),
            y_label: "(N - weyl) / (sqrt(lambda)/pi)".into(),
            log_x: cfg.sweep.log,
            series: vec![
                Series::new("lower", pick(|x| x.0.norm_lower)),
                Series::new("upper", pick(|x| x.0.norm_upper)),
                Series::new(names.0, pick(|x| x.1)).dashed(),
                Series::new(names.1, pick(|x| x.2)).dashed(),
            ],
        }
        .to_svg()
        .into_bytes()
    });
    Ok(RunOutput { artifacts, report })
}

fn brackets(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let params = cfg.params(cfg.pieces.unwrap_or(2))?;
    let lambda = cfg.lambda.expect("validated");
    let m = match cfg.m {
        Some(m) => m,
        None => min_m_for_lambda(&params, lambda, cfg.tail).map_err(CliError::invalid)?.m,
    };
    let r = assemble_bounds(&params, cfg.bc, m, lambda, Scope::Omega2M).map_err(CliError::invalid)?;
    let mut report = Report::new("brackets");
    report.push(Check::holds("bracket_order", r.lower_count <= r.upper_count));
    report.push(Check::holds(
        "piece_sums",
        r.piece_lower.iter().sum::<u64>() == r.lower_count && r.piece_upper.iter().sum::<u64>() == r.upper_count,
    ));
    report.push(Check::holds(
        "piecewise_order",
        r.piece_lower.iter().zip(&r.piece_upper).all(|(a, b)| a <= b),
    ));
    Ok(RunOutput {
        artifacts: vec![Artifact::main(cfg.out.as_deref(), json(&r)?)],
        report,
    })
}

#[derive(Serialize)]
struct TailRow {
    lambda: f64,
    #[serde(rename = "M")]
    m: usize,
    threshold: f64,
    tail_area: f64,
    area_bound: f64,
    scaled_tail: f64,
    poincare_bound: f64,
}

fn tail(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let params = cfg.params(cfg.pieces.unwrap_or(2))?;
    let e = 2.0 / (3.0 - params.alpha);
    let rows = cfg
        .sweep
        .values()
        .into_iter()
        .map(|l| -> CliResult<TailRow> {
            let d = min_m_for_lambda(&params, l, cfg.tail).map_err(CliError::invalid)?;
            Ok(TailRow {
                lambda: l,
                m: d.m,
                threshold: d.threshold,
                tail_area: d.tail_area,
                area_bound: d.area_bound,
                scaled_tail: d.tail_area * l.powf(e),
                poincare_bound: poincare_bound(&params, d.m, cfg.tail).map_err(CliError::invalid)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut report = Report::new("tail");
    report.push(Check::holds(
        "tail_area_below_bound",
        rows.iter().all(|r| r.m == 1 || r.tail_area <= r.area_bound * (1.0 + 1e-12)),
    ));
    report.push(Check::holds("depth_monotone", rows.windows(2).all(|w| w[0].m <= w[1].m)));
    report.push(Check::holds(
        "tail_gap_exceeds_lambda",
        rows.iter().all(|r| r.m == 1 || r.poincare_bound.powi(-2) > r.lambda),
    ));
    let mut artifacts = vec![Artifact::main(cfg.out.as_deref(), to_csv(&rows)?)];
    push_optional(&mut artifacts, cfg.plot_data.as_deref(), || {
        let mut s = String::from("# lambda M tail_area area_bound scaled_tail\n");
        for r in &rows {
            let _ = writeln!(s, "{:e} {} {:e} {:e} {:e}", r.lambda, r.m, r.tail_area, r.area_bound, r.scaled_tail);
        }
        s.into_bytes()
    });
    push_optional(&mut artifacts, cfg.svg.as_deref(), || {
        Plot {
            title: "tail area scaled by lambda^(2/(3-alpha))".into(),
            x_label: "lambda".into(),
            y_label: "scaled tail area".into(),
            log_x: cfg.sweep.log,
            series: vec![Series::new("tail_area * lambda^e", rows.iter().map(|r| (r.lambda, r.scaled_tail)).collect())],
        }
        .to_svg()
        .into_bytes()
    });
    Ok(RunOutput { artifacts, report })
}

fn essential(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let pieces = cfg.pieces.unwrap_or(4 * cfg.jmax).max(4 * cfg.jmax);
    let domain = RpDomain::build_geometric(cfg.c, cfg.alpha, cfg.k, pieces).map_err(CliError::invalid)?;
    let rows = (cfg.jmin..=cfg.jmax)
        .map(|j| rayleigh_report(&domain, j).map_err(CliError::invalid))
        .collect::<CliResult<Vec<_>>>()?;
    let mut report = Report::new("essential");
    report.push(Check::holds(
        "rayleigh_decreasing",
        rows.windows(2).all(|w| w[1].rayleigh < w[0].rayleigh),
    ));
    if rows.len() >= 2 {
        let target = (cfg.alpha - 3.0) * cfg.c.ln();
        let slope = log_linear_slope(&rows);
        report.push(
            Check::new("decay_slope_rel_error", (slope - target) / target, Comparison::AbsAtMost, 0.05)
                .with_detail(format!("slope {slope:.6}, (alpha-3) log C = {target:.6}")),
        );
    }
    let mut artifacts = vec![Artifact::main(cfg.out.as_deref(), to_csv(&rows)?)];
    push_optional(&mut artifacts, cfg.plot_data.as_deref(), || {
        let mut s = String::from("# j rayleigh log_rayleigh\n");
        for r in &rows {
            let _ = writeln!(s, "{} {:e} {:.12}", r.j, r.rayleigh, r.rayleigh.ln());
        }
        s.into_bytes()
    });
    push_optional(&mut artifacts, cfg.svg.as_deref(), || {
        Plot {
            title: "singular sequence: log Rayleigh quotient".into(),
            x_label: "j".into(),
            y_label: "log ||grad f_j||".into(),
            log_x: false,
            series: vec![Series::new("log rayleigh", rows.iter().map(|r| (r.j as f64, r.rayleigh.ln())).collect())],
        }
        .to_svg()
        .into_bytes()
    });
    Ok(RunOutput { artifacts, report })
}

fn build_skeleton(cfg: &ExperimentConfig) -> CliResult<(Skeleton, Option<f64>)> {
    match (cfg.h, cfg.delta) {
        (Some(h), Some(d)) => Ok((
            Skeleton::from_edges(build_room_skeleton(h, d, d).map_err(CliError::invalid)?),
            Some(h * h),
        )),
        _ => {
            let pieces = cfg.pieces.unwrap_or(4);
            let d = RpDomain::build_geometric(cfg.c, cfg.alpha, cfg.k, pieces).map_err(CliError::invalid)?;
            let area = d.area_upto(pieces).map_err(CliError::invalid)?;
            Ok((Skeleton::from_domain(&d).map_err(CliError::invalid)?, Some(area)))
        }
    }
}

fn skeleton(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let (sk, area) = build_skeleton(cfg)?;
    let mut report = Report::new("skeleton");
    let mut worst = 0.0f64;
    for e in &sk.edges {
        worst = worst.max((e.alpha_mass()? - e.region_area()).abs());
    }
    report.push(Check::new("coarea_per_edge", worst, Comparison::AtMost, 1e-8));
    if let Some(a) = area {
        let total: f64 = sk.edges.iter().map(|e| e.region_area()).sum();
        report.push(Check::new("region_areas_tile_domain", total - a, Comparison::AbsAtMost, 1e-12));
    }
    if let (Some(h), Some(d)) = (cfg.h, cfg.delta) {
        let expect = (h - d) / SQRT_2;
        let dev = sk
            .edges
            .iter()
            .filter(|e| e.group == EdgeGroup::G2Diagonal)
            .map(|e| (e.length - expect).abs())
            .fold(0.0, f64::max);
        report.push(Check::new("g2_length_closed_form", dev, Comparison::AtMost, 1e-14));
    }
    let mut artifacts = vec![Artifact::main(cfg.out.as_deref(), {
        let mut s = sk.to_json(cfg.samples)?;
        s.push('\n');
        s.into_bytes()
    })];
    push_optional(&mut artifacts, cfg.plot_data.as_deref(), || sk.to_gnuplot(cfg.samples).into_bytes());
    push_optional(&mut artifacts, cfg.svg.as_deref(), || {
        let lines: Vec<_> = sk.edges.iter().map(|e| e.polyline(cfg.samples)).collect();
        let sing: Vec<_> = sk.edges.iter().map(|e| e.singular).collect();
        polylines_svg("skeleton (singular edges in red)", &lines, &sing).into_bytes()
    });
    Ok(RunOutput { artifacts, report })
}

fn sl_spectrum(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let (sk, _) = build_skeleton(cfg)?;
    let rows = skeleton_spectrum(&sk, cfg.n_grid, cfg.eigs)?;
    let mut report = Report::new("sl-spectrum");
    report.push(Check::holds("spectrum_nonnegative", rows.iter().all(|r| r.value >= 0.0)));
    let zero = rows
        .iter()
        .filter(|r| r.eigen_index == 0)
        .map(|r| r.value.abs())
        .fold(0.0, f64::max);
    report.push(Check::new("constant_in_kernel", zero, Comparison::AtMost, 1e-12));

    let space = SkeletonSpace::new(sk, 8)?;
    let defects = cubic_test_set(&space, 12, 1)
        .iter()
        .map(|f| space.check_isometry(f, 8))
        .collect::<roompass_core::Result<Vec<_>>>()?;
    // relative to max(1, norm^2): energies of cubics on short edges reach 1e5
    let l2 = defects.iter().map(|d| d.l2_defect / d.l2_skeleton.max(1.0)).fold(0.0, f64::max);
    let h1 = defects.iter().map(|d| d.h1_defect / d.h1_skeleton.max(1.0)).fold(0.0, f64::max);
    report.push(Check::new("isometry_l2_rel_defect", l2, Comparison::AtMost, 1e-6));
    report.push(Check::new("isometry_h1_rel_defect", h1, Comparison::AtMost, 1e-6));

    let mut artifacts = vec![Artifact::main(cfg.out.as_deref(), to_csv(&rows)?)];
    if let Some(p) = cfg.isometry.as_deref() {
        artifacts.push(Artifact::file(p, json(&defects)?));
    }
    Ok(RunOutput { artifacts, report })
}

fn oracle(cfg: &ExperimentConfig) -> CliResult<RunOutput> {
    let o = &cfg.oracle;
    let domain = RpDomain::build_geometric(cfg.c, cfg.alpha, cfg.k, 2 * o.m).map_err(CliError::invalid)?;
    let spectra = [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet]
        .par_iter()
        .map(|&bc| extrapolated_spectrum(&domain, o.m, bc, o.count, o.base, o.levels).map_err(CliError::invalid))
        .collect::<CliResult<Vec<_>>>()?;
    let [neumann, dirichlet]: [_; 2] = spectra.try_into().expect("two boundary conditions");
    let lambdas = generic_lambdas(&neumann, &dirichlet, o.lambdas);
    let h = conforming_grid(&domain, o.m, o.base, o.levels - 1).map_err(CliError::invalid)?.max_cell();
    let mut rows = csv_rows(&neumann);
    rows.extend(csv_rows(&dirichlet));
    let ground = neumann.per_level.iter().map(|v| v[0].abs()).fold(0.0, f64::max);
    let sw = sandwich_with_spectra(&domain, o.m, neumann, dirichlet, &lambdas, h)?;

    let mut report = Report::new("oracle");
    report.push(Check::new("neumann_ground_state", ground, Comparison::AtMost, 1e-10));
    report.push(
        Check::holds("sandwich", sw.rows.iter().all(|r| r.holds))
            .with_detail(format!("{} rows, {} lambdas skipped", sw.rows.len(), sw.skipped.len())),
    );
    report.push(Check::holds("dirichlet_below_neumann", sw.monotone));
    report.push(Check::holds("filonov", sw.filonov.iter().all(|f| f.holds)));
    report.push(Check::new("lambdas_tested", (sw.rows.len() / 2) as f64, Comparison::AtLeast, o.lambdas as f64));

    let mut artifacts = vec![Artifact::main(cfg.out.as_deref(), to_csv(&rows)?)];
    if let Some(p) = cfg.sandwich.as_deref() {
        artifacts.push(Artifact::file(p, json(&sw)?));
    }
    Ok(RunOutput { artifacts, report })
}
