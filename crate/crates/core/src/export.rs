//! CSV emitters for curves and tables, and the count-record reader.
//! Frequencies are written as ν = ω/2π in MHz and lengths in µm.

use std::io::{Read, Write};

use crate::blockade::SweepPoint;
use crate::eit::SpectrumPoint;
use crate::gate::TruthTable;
use crate::optimizer::GammaSweepRow;
use crate::tomography::{Basis, CountRecord, MeasuredTruthTable, Setting};
use crate::units::{per_s_to_per_us, rad_to_mhz};
use crate::visibility::CurveEntry;
use crate::{Error, Result};

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::invalid("output", e.to_string())
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(io_err)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_spectrum<W: Write>(w: W, points: &[SpectrumPoint]) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["delta_s_mhz", "re_chi", "im_chi", "od", "beta_rad", "transmission"]).map_err(io_err)?;
    for p in points {
        w.write_record([
            rad_to_mhz(p.delta_s).to_string(),
            p.chi.re().to_string(),
            p.chi.im().to_string(),
            p.propagation.od.to_string(),
            p.propagation.beta.to_string(),
            p.propagation.transmission.to_string(),
        ])
        .map_err(io_err)?;
    }
    finish(w)
}

pub fn write_storage_sweep<W: Write>(w: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["z_s_um", "l_b_um", "delta_od", "delta_beta_rad"]).map_err(io_err)?;
    for p in points {
        w.write_record([(p.z_s * 1e6).to_string(), (p.l_b * 1e6).to_string(), p.delta_od.to_string(), p.delta_beta.to_string()])
            .map_err(io_err)?;
    }
    finish(w)
}

/// Infeasible rows keep their γrg and ζ and leave the optimum empty.
pub fn write_gamma_sweep<W: Write>(w: W, rows: &[GammaSweepRow]) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["gamma_rg_per_us", "zeta", "delta_s_mhz", "omega_c_mhz", "im_chi_b", "transmission"]).map_err(io_err)?;
    for r in rows {
        let p = r.point.as_ref();
        w.write_record([
            per_s_to_per_us(r.gamma_rg).to_string(),
            r.zeta.to_string(),
            opt(p.map(|p| rad_to_mhz(p.delta_s))),
            opt(p.map(|p| rad_to_mhz(p.omega_c))),
            opt(p.map(|p| p.im_chi_b)),
            opt(p.map(|p| p.predicted_transmission)),
        ])
        .map_err(io_err)?;
    }
    finish(w)
}

/// Ratios without a `β₄ = π` solution are written with empty values.
pub fn write_visibility_curve<W: Write>(w: W, entries: &[CurveEntry]) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["l_over_rb", "delta_beta_b_rad", "v_t"]).map_err(io_err)?;
    for e in entries {
        let row = match e {
            CurveEntry::Point(p) => [p.l_over_rb.to_string(), p.delta_beta_b.to_string(), p.v_t.to_string()],
            CurveEntry::Skipped { l_over_rb, .. } => [l_over_rb.to_string(), String::new(), String::new()],
        };
        w.write_record(row).map_err(io_err)?;
    }
    finish(w)
}

pub fn write_truth_table<W: Write>(w: W, table: &TruthTable) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["input", "output", "probability"]).map_err(io_err)?;
    for (i, input) in table.labels.iter().enumerate() {
        for (o, output) in table.labels.iter().enumerate() {
            w.write_record([input.as_str(), output.as_str(), &table.probability[i][o].to_string()]).map_err(io_err)?;
        }
    }
    finish(w)
}

/// As [`write_truth_table`] with a binomial standard-error column.
pub fn write_measured_truth_table<W: Write>(w: W, table: &MeasuredTruthTable) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["input", "output", "probability", "stderr"]).map_err(io_err)?;
    for (i, input) in table.labels.iter().enumerate() {
        for (o, output) in table.labels.iter().enumerate() {
            w.write_record([
                input.as_str(),
                output.as_str(),
                &table.probability[i][o].to_string(),
                &table.stderr[i][o].to_string(),
            ])
            .map_err(io_err)?;
        }
    }
    finish(w)
}

/// One row per setting and outcome pair; outcomes are analyser labels.
pub fn write_counts<W: Write>(w: W, records: &[CountRecord]) -> Result<()> {
    let mut w = writer(w);
    w.write_record(["setting_q1", "setting_q2", "outcome_q1", "outcome_q2", "count"]).map_err(io_err)?;
    for r in records {
        let (o1, o2) = (r.setting.q1.outcomes(), r.setting.q2.outcomes());
        for (k, count) in r.counts.iter().enumerate() {
            w.write_record([
                r.setting.q1.label().to_string(),
                r.setting.q2.label().to_string(),
                o1[k / 2].to_string(),
                o2[k % 2].to_string(),
                count.to_string(),
            ])
            .map_err(io_err)?;
        }
    }
    finish(w)
}

/// Inverse of [`write_counts`]. The number of shots is not part of the
/// format and is set to zero.
pub fn read_counts<R: Read>(r: R) -> Result<Vec<CountRecord>> {
    let bad = |msg: String| Error::invalid("counts", msg);
    let mut reader = csv::Reader::from_reader(r);
    let mut records: Vec<CountRecord> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", row.len())));
        }
        let basis = |s: &str| Basis::parse(s).ok_or_else(|| bad(format!("unknown basis {s}")));
        let setting = Setting { q1: basis(&row[0])?, q2: basis(&row[1])? };
        let index = |b: Basis, s: &str| {
            b.outcomes()
                .iter()
                .position(|o| s.len() == 1 && s.starts_with(*o))
                .ok_or_else(|| bad(format!("outcome {s} not in {}", b.label())))
        };
        let k = 2 * index(setting.q1, &row[2])? + index(setting.q2, &row[3])?;
        let count: f64 = row[4].parse().map_err(|_| bad(format!("bad count {}", &row[4])))?;
        if !(count >= 0.0) {
            return Err(bad(format!("negative count {count}")));
        }
        match records.iter_mut().find(|r| r.setting == setting) {
            Some(r) => r.counts[k] += count,
            None => {
                let mut counts = [0.0; 4];
                counts[k] = count;
                records.push(CountRecord { setting, counts, shots: 0 });
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{truth_table, GateChannel, TruthTableKind};
    use crate::tomography::all_settings;

    #[test]
    fn counts_round_trip() {
        let recs: Vec<CountRecord> = all_settings()
            .into_iter()
            .enumerate()
            .map(|(i, setting)| CountRecord { setting, counts: [i as f64, 2.0, 3.5, 0.0], shots: 0 })
            .collect();
        let mut buf = Vec::new();
        write_counts(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("setting_q1,setting_q2,outcome_q1,outcome_q2,count\nHV,HV,H,H,0\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_counts(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn truth_table_csv_labels() {
        let t = truth_table(&GateChannel::ideal(), TruthTableKind::CnotA).unwrap();
        let mut buf = Vec::new();
        write_truth_table(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 17);
        let row = text.lines().find(|l| l.starts_with("HL,VL,")).unwrap();
        let p: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_counts() {
        assert!(read_counts("setting_q1,setting_q2,outcome_q1,outcome_q2,count\nXY,HV,H,H,1\n".as_bytes()).is_err());
        assert!(read_counts("setting_q1,setting_q2,outcome_q1,outcome_q2,count\nHV,HV,R,H,1\n".as_bytes()).is_err());
        assert!(read_counts("setting_q1,setting_q2,outcome_q1,outcome_q2,count\nHV,HV,H,H,-1\n".as_bytes()).is_err());
    }
}
