//! CSV and JSON writers. Column orders are fixed; floats are written with 17
//! significant digits so values round-trip exactly.

use std::fmt::Write as _;

use crate::graph_oracle::GiantSnapshot;
use crate::harness::ExperimentReport;
use crate::limit_sampler::LimitPathSample;
use crate::theory::{LimitCovariance, SupercriticalCurves};
use crate::walk::GiantPath;

pub const THEORY_HEADER: &str = "lambda,theta,rho,beta,var_L,var_V,cov_LV";
pub const WALK_HEADER: &str = "replicate,lambda,g,d,volume,count,flucL,flucV";
pub const GRAPH_HEADER: &str = "replicate,lambda,L,V";
pub const LIMIT_HEADER: &str = "draw,lambda,x0,x1";
pub const REPORT_HEADER: &str = "lambda,stat,empirical,target,se,z,pass";

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn theory_csv(curves: &SupercriticalCurves, cov: &LimitCovariance) -> String {
    let mut s = format!("{THEORY_HEADER}\n");
    for (i, p) in curves.points().iter().enumerate() {
        let row = [
            p.lambda,
            p.theta,
            p.rho,
            p.beta,
            cov.var_l(i),
            cov.var_v(i),
            cov.cov_lv(i),
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    s
}

/// `volume` is the giant's total weight `V`; `count` is `L`.
pub fn walk_csv(paths: &[GiantPath]) -> String {
    let mut s = format!("{WALK_HEADER}\n");
    for (rep, p) in paths.iter().enumerate() {
        for (i, r) in p.results.iter().enumerate() {
            writeln!(
                s,
                "{rep},{},{},{},{},{},{},{}",
                fmt_f64(p.lambdas[i]),
                fmt_f64(r.g),
                fmt_f64(r.d),
                fmt_f64(r.total_volume),
                r.vertex_count,
                fmt_f64(p.fluc_l[i]),
                fmt_f64(p.fluc_v[i]),
            )
            .unwrap();
        }
    }
    s
}

pub fn graph_csv(replicates: &[Vec<GiantSnapshot>]) -> String {
    let mut s = format!("{GRAPH_HEADER}\n");
    for (rep, snaps) in replicates.iter().enumerate() {
        for g in snaps {
            writeln!(
                s,
                "{rep},{},{},{}",
                fmt_f64(g.lambda),
                g.count,
                fmt_f64(g.volume)
            )
            .unwrap();
        }
    }
    s
}

/// `x1` is left empty for samples without a volume coordinate.
pub fn limit_csv(samples: &[LimitPathSample]) -> String {
    let mut s = format!("{LIMIT_HEADER}\n");
    for d in samples {
        for (i, &l) in d.lambdas.iter().enumerate() {
            let x1 = d.x1.as_ref().map(|v| fmt_f64(v[i])).unwrap_or_default();
            writeln!(s, "{},{},{},{}", d.draw, fmt_f64(l), fmt_f64(d.x0[i]), x1).unwrap();
        }
    }
    s
}

pub fn report_csv(report: &ExperimentReport) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for r in &report.records {
        let pass = match r.pass {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.lambda),
            r.stat,
            fmt_f64(r.empirical),
            fmt_f64(r.target),
            fmt_f64(r.se),
            fmt_f64(r.z),
            pass
        )
        .unwrap();
    }
    s
}

pub fn report_json(report: &ExperimentReport) -> String {
    // Non-finite floats serialize as null.
    serde_json::to_string_pretty(report).expect("report is serializable") + "\n"
}
