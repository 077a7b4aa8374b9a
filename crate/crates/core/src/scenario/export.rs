//! CSV writers. Numbers are written like C's `%.12e`.

use std::io::{self, Write};

use crate::certification::CertificateReport;
use crate::controllers::ControlMode;
use crate::dynamics::Trajectory;
use crate::network::{Domain, ValidatedNetwork};
use crate::steady_state::ResistanceSweep;

use super::runner::SweepRow;

/// Formats `x` as `%.12e` does in C (two-digit signed exponent).
pub fn fmt_e(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn sources(net: &ValidatedNetwork) -> Vec<usize> {
    (0..net.bus_count()).filter(|&b| net.bus(b).inverse_cost > 0.0).collect()
}

/// Column names of the trajectory CSV.
pub fn trajectory_header(net: &ValidatedNetwork, mode: ControlMode) -> Vec<String> {
    let mut h = vec!["t".to_owned()];
    h.extend(net.ac_edges().iter().map(|&e| format!("eta:{}", net.edge_label(e))));
    h.extend(
        (0..net.bus_count())
            .filter(|&b| net.bus(b).kind.domain() == Domain::Ac)
            .map(|b| format!("omega:{}", net.bus_id(b))),
    );
    h.extend(net.dc_buses().iter().map(|&b| format!("v:{}", net.bus_id(b))));
    if mode == ControlMode::Secondary {
        h.extend(net.comm_nodes().iter().map(|&b| format!("xi:{}", net.bus_id(b))));
    }
    h.extend(sources(net).iter().map(|&b| format!("pg:{}", net.bus_id(b))));
    h.extend((0..net.converters().len()).map(|x| format!("px:{}", net.converter_id(x))));
    h.extend(net.dc_subsystems().iter().map(|&k| format!("vbar:{}", net.subsystems()[k].name)));
    h
}

/// Writes every `record_every`-th sample (the last sample is always written).
pub fn write_trajectory_csv<W: Write>(
    mut w: W,
    traj: &Trajectory,
    net: &ValidatedNetwork,
    record_every: usize,
) -> io::Result<()> {
    writeln!(w, "{}", trajectory_header(net, traj.mode).join(","))?;
    let ac_buses: Vec<usize> = (0..net.bus_count()).filter(|&b| net.bus(b).kind.domain() == Domain::Ac).collect();
    let src = sources(net);
    let n = traj.samples.len();
    let step = record_every.max(1);
    for (k, s) in traj.samples.iter().enumerate() {
        if k % step != 0 && k + 1 != n {
            continue;
        }
        let st = &s.state;
        let o = &s.outputs;
        let mut row = vec![fmt_e(st.t)];
        row.extend(st.eta.iter().map(|v| fmt_e(*v)));
        row.extend(ac_buses.iter().map(|&b| fmt_e(o.omega[b])));
        row.extend(st.v.iter().map(|v| fmt_e(*v)));
        row.extend(st.xi.iter().map(|v| fmt_e(*v)));
        row.extend(src.iter().map(|&b| fmt_e(o.p_g[b])));
        row.extend(o.p_x.iter().map(|v| fmt_e(*v)));
        row.extend(o.v_bar.iter().map(|v| fmt_e(*v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Per-sample certificate series.
pub fn write_certificate_csv<W: Write>(mut w: W, report: &CertificateReport) -> io::Result<()> {
    let has_w = !report.w_series.is_empty();
    let has_d = !report.dissipation.is_empty();
    let mut header = vec!["t"];
    if has_w {
        header.push("w");
    }
    if has_d {
        header.push("dissipation");
    }
    header.extend(["security_margin", "conservation_residual", "ilc_residual"]);
    writeln!(w, "{}", header.join(","))?;
    for k in 0..report.times.len() {
        let mut row = vec![fmt_e(report.times[k])];
        if has_w {
            row.push(fmt_e(report.w_series[k]));
        }
        if has_d {
            // the dissipation estimate belongs to the step ending at sample k
            row.push(if k == 0 { fmt_e(0.0) } else { fmt_e(report.dissipation[k - 1]) });
        }
        row.push(fmt_e(report.security_margin[k]));
        row.push(fmt_e(report.conservation_residuals[k]));
        row.push(fmt_e(report.ilc_residuals[k]));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `scale,error,omega_max,vbar_max,security_ok`; failed points get `nan` metrics.
pub fn write_resistance_sweep_csv<W: Write>(mut w: W, sweep: &ResistanceSweep) -> io::Result<()> {
    writeln!(w, "scale,error,omega_max,vbar_max,security_ok")?;
    for p in &sweep.points {
        match &p.outcome {
            Ok(m) => writeln!(
                w,
                "{},{},{},{},{}",
                fmt_e(p.scale),
                fmt_e(m.error),
                fmt_e(m.omega_max),
                fmt_e(m.vbar_max),
                m.security_ok
            )?,
            Err(_) => writeln!(w, "{},nan,nan,nan,false", fmt_e(p.scale))?,
        }
    }
    Ok(())
}

/// `value,omega_max,vbar_max,sharing_error,violations,status`.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "value,omega_max,vbar_max,sharing_error,violations,status")?;
    for r in rows {
        match &r.metrics {
            Some(m) => writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_e(r.value),
                fmt_e(m.omega_max),
                fmt_e(m.vbar_max),
                fmt_e(m.sharing_error),
                m.violations,
                r.status
            )?,
            None => writeln!(w, "{},nan,nan,nan,0,{}", fmt_e(r.value), r.status)?,
        }
    }
    Ok(())
}
