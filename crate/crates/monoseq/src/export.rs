//! CSV and JSON writers for tables, traces, batches, and reports.
//!
//! Floats print through the standard shortest round-trip formatter, so a
//! parse of any emitted number recovers the stored bits exactly.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::properties::PropertyRecord;
use crate::simulate::EpisodeTrace;
use crate::stats::{BoundReport, Histogram};
use crate::value::ValueTable;
use crate::variance::VarianceTable;

fn wrap(err: std::io::Error) -> Error {
    Error::Write(err.to_string())
}

/// Value table as CSV: `k,s,v,h,dv`, one row per (stage, node).  The
/// stage-zero rows leave the threshold and derivative columns empty since
/// neither is defined there.
pub fn write_value_table_csv<W: Write + ?Sized>(vt: &ValueTable, out: &mut W) -> Result<()> {
    writeln!(out, "k,s,v,h,dv").map_err(wrap)?;
    for k in 0..=vt.horizon() {
        let values = vt.values_at_stage(k)?;
        for (j, v) in values.iter().enumerate() {
            let s = vt.grid().node(j);
            if k == 0 {
                writeln!(out, "{k},{s},{v},,").map_err(wrap)?;
            } else {
                let h = vt.thresholds_at_stage(k)?[j];
                let dv = vt.derivatives_at_stage(k)?[j];
                writeln!(out, "{k},{s},{v},{h},{dv}").map_err(wrap)?;
            }
        }
    }
    Ok(())
}

/// Variance table as CSV: `k,s,w`.
pub fn write_variance_table_csv<W: Write + ?Sized>(wt: &VarianceTable, out: &mut W) -> Result<()> {
    writeln!(out, "k,s,w").map_err(wrap)?;
    for k in 0..=wt.horizon() {
        let row = wt.values_at_stage(k)?;
        for (j, w) in row.iter().enumerate() {
            writeln!(out, "{k},{},{w}", wt.grid().node(j)).map_err(wrap)?;
        }
    }
    Ok(())
}

/// Merged table report: `k,s,v,h,dv,w` over the shared grid.
pub fn write_merged_table_csv<W: Write + ?Sized>(
    vt: &ValueTable,
    wt: &VarianceTable,
    out: &mut W,
) -> Result<()> {
    if vt.grid() != wt.grid() || vt.horizon() != wt.horizon() {
        return Err(Error::TableMismatch);
    }
    writeln!(out, "k,s,v,h,dv,w").map_err(wrap)?;
    let g = vt.grid().points();
    for k in 0..=vt.horizon() {
        let values = vt.values_at_stage(k)?;
        let w_row = wt.values_at_stage(k)?;
        for j in 0..g {
            let s = vt.grid().node(j);
            if k == 0 {
                writeln!(out, "{k},{s},{},,,{}", values[j], w_row[j]).map_err(wrap)?;
            } else {
                let h = vt.thresholds_at_stage(k)?[j];
                let dv = vt.derivatives_at_stage(k)?[j];
                writeln!(out, "{k},{s},{},{h},{dv},{}", values[j], w_row[j]).map_err(wrap)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ValueTableExport<'a> {
    grid: &'a GridSpec,
    spacing: f64,
    horizon: usize,
    nodes: Vec<f64>,
    critical: &'a [f64],
    /// Row k holds v_k; thresholds and derivatives start at stage 1.
    values: Vec<&'a [f64]>,
    thresholds: Vec<&'a [f64]>,
    derivatives: Vec<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variances: Option<Vec<&'a [f64]>>,
}

/// Value table as JSON with grid metadata and critical values alongside
/// the sampled rows.  A variance table built from the same value table may
/// ride along as a `variances` field.
pub fn write_value_table_json<W: Write + ?Sized>(
    vt: &ValueTable,
    wt: Option<&VarianceTable>,
    out: &mut W,
) -> Result<()> {
    let n = vt.horizon();
    let variances = match wt {
        Some(wt) => {
            if wt.grid() != vt.grid() || wt.horizon() != n {
                return Err(Error::TableMismatch);
            }
            Some(
                (0..=n)
                    .map(|k| wt.values_at_stage(k))
                    .collect::<Result<_>>()?,
            )
        }
        None => None,
    };
    let doc = ValueTableExport {
        grid: vt.grid(),
        spacing: vt.grid().spacing(),
        horizon: n,
        nodes: (0..vt.grid().points()).map(|j| vt.grid().node(j)).collect(),
        critical: vt.critical_values(),
        values: (0..=n)
            .map(|k| vt.values_at_stage(k))
            .collect::<Result<_>>()?,
        thresholds: (1..=n)
            .map(|k| vt.thresholds_at_stage(k))
            .collect::<Result<_>>()?,
        derivatives: (1..=n)
            .map(|k| vt.derivatives_at_stage(k))
            .collect::<Result<_>>()?,
        variances,
    };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| Error::Write(e.to_string()))?;
    writeln!(out).map_err(wrap)
}

/// Episode trace as CSV: `i,x,accepted,M,L,Y,d,A,B`.  Row zero carries the
/// initial state with the per-step columns left empty.
pub fn write_trace_csv<W: Write + ?Sized>(trace: &EpisodeTrace, out: &mut W) -> Result<()> {
    writeln!(out, "i,x,accepted,M,L,Y,d,A,B").map_err(wrap)?;
    writeln!(
        out,
        "0,,,{},{},{},,,",
        trace.running_max[0], trace.length[0], trace.martingale[0]
    )
    .map_err(wrap)?;
    for j in 1..=trace.n {
        writeln!(
            out,
            "{j},{},{},{},{},{},{},{},{}",
            trace.draws[j - 1],
            trace.accepted[j - 1],
            trace.running_max[j],
            trace.length[j],
            trace.martingale[j],
            trace.diffs[j - 1],
            trace.a_parts[j - 1],
            trace.b_parts[j - 1],
        )
        .map_err(wrap)?;
    }
    Ok(())
}

/// Batch output: one final count per line, with the per-episode summed
/// conditional variance as an optional second column.
pub fn write_batch<W: Write + ?Sized>(
    lengths: &[u64],
    series: Option<&[f64]>,
    out: &mut W,
) -> Result<()> {
    match series {
        None => {
            for l in lengths {
                writeln!(out, "{l}").map_err(wrap)?;
            }
        }
        Some(vs) => {
            if vs.len() != lengths.len() {
                return Err(Error::TableMismatch);
            }
            for (l, v) in lengths.iter().zip(vs) {
                writeln!(out, "{l},{v}").map_err(wrap)?;
            }
        }
    }
    Ok(())
}

/// Histogram as CSV: `z_lo,z_hi,count`; the overflow bins print their
/// infinite edges as `-inf` and `inf`.
pub fn write_histogram_csv<W: Write + ?Sized>(histogram: &Histogram, out: &mut W) -> Result<()> {
    writeln!(out, "z_lo,z_hi,count").map_err(wrap)?;
    for (i, count) in histogram.counts.iter().enumerate() {
        writeln!(
            out,
            "{},{},{count}",
            histogram.edges[i],
            histogram.edges[i + 1]
        )
        .map_err(wrap)?;
    }
    Ok(())
}

/// Bound report as CSV, one row per horizon; an absent gap ratio (n = 1)
/// leaves its column empty.
pub fn write_bound_report_csv<W: Write + ?Sized>(report: &BoundReport, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "n,mean,crisp_bound,gap_ratio,variance,variance_lower,variance_upper,mean_pass,variance_pass"
    )
    .map_err(wrap)?;
    for r in &report.rows {
        let gap = r.gap_ratio.map_or(String::new(), |g| g.to_string());
        writeln!(
            out,
            "{},{},{},{gap},{},{},{},{},{}",
            r.n,
            r.mean,
            r.crisp_bound,
            r.variance,
            r.variance_lower,
            r.variance_upper,
            r.mean_pass,
            r.variance_pass
        )
        .map_err(wrap)?;
    }
    Ok(())
}

/// Property report as CSV: `name,worst,tolerance,pass`.
pub fn write_property_report_csv<W: Write + ?Sized>(
    report: &[PropertyRecord],
    out: &mut W,
) -> Result<()> {
    writeln!(out, "name,worst,tolerance,pass").map_err(wrap)?;
    for r in report {
        writeln!(out, "{},{},{},{}", r.name, r.worst, r.tolerance, r.pass).map_err(wrap)?;
    }
    Ok(())
}

/// Top-level JSON report: every field beyond the horizon is optional and
/// appears only when the command that ran actually produced it.
#[derive(Debug, Default, Clone, Serialize)]
pub struct RunReport {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    /// v_n(0) from the table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_table: Option<f64>,
    /// w_n(0) from the table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_table: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    /// KS distance with the sample recentered at the table mean instead
    /// of the limit centering.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_alt_centering: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub properties: Option<Vec<PropertyRecord>>,
}

/// Serialize a run report as pretty JSON.
pub fn write_run_report_json<W: Write + ?Sized>(report: &RunReport, out: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, report).map_err(|e| Error::Write(e.to_string()))?;
    writeln!(out).map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::simulate::episode_from_draws;
    use crate::stats::summarize;
    use crate::value::build_value_table;
    use crate::variance::build_variance_table;
    use std::sync::OnceLock;

    fn tables() -> &'static (ValueTable, VarianceTable) {
        static T: OnceLock<(ValueTable, VarianceTable)> = OnceLock::new();
        T.get_or_init(|| {
            let vt = build_value_table(2, GridSpec::new(65).unwrap()).unwrap();
            let wt = build_variance_table(&vt);
            (vt, wt)
        })
    }

    fn to_string(buf: Vec<u8>) -> String {
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn value_csv_layout_and_round_trip() {
        let (vt, _) = tables();
        let mut buf = Vec::new();
        write_value_table_csv(vt, &mut buf).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,s,v,h,dv");
        assert_eq!(lines.len(), 1 + 3 * 65);

        // stage-zero rows leave h and dv empty
        let first = lines[1].split(',').collect::<Vec<_>>();
        assert_eq!(first, vec!["0", "0", "0", "", ""]);

        let k2_s0 = lines[1 + 2 * 65].split(',').collect::<Vec<_>>();
        assert_eq!(k2_s0[0], "2");
        assert_eq!(k2_s0[1], "0");
        let v: f64 = k2_s0[2].parse().unwrap();
        assert!((v - 1.5).abs() <= 1e-9);
        // shortest round-trip formatting recovers the stored bits
        assert_eq!(v, vt.values_at_stage(2).unwrap()[0]);
        let h: f64 = k2_s0[3].parse().unwrap();
        assert_eq!(h, 1.0);
    }

    #[test]
    fn variance_and_merged_csv() {
        let (vt, wt) = tables();
        let mut buf = Vec::new();
        write_variance_table_csv(wt, &mut buf).unwrap();
        let text = to_string(buf);
        assert_eq!(text.lines().count(), 1 + 3 * 65);
        assert!(text.starts_with("k,s,w\n"));

        let mut buf = Vec::new();
        write_merged_table_csv(vt, wt, &mut buf).unwrap();
        let text = to_string(buf);
        assert!(text.starts_with("k,s,v,h,dv,w\n"));

        let foreign =
            build_variance_table(&build_value_table(2, GridSpec::new(129).unwrap()).unwrap());
        let mut buf = Vec::new();
        assert_eq!(
            write_merged_table_csv(vt, &foreign, &mut buf),
            Err(Error::TableMismatch)
        );
    }

    #[test]
    fn value_json_contains_table() {
        let (vt, wt) = tables();
        let mut buf = Vec::new();
        write_value_table_json(vt, None, &mut buf).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&to_string(buf)).unwrap();
        assert_eq!(doc["horizon"], 2);
        assert_eq!(doc["values"].as_array().unwrap().len(), 3);
        assert_eq!(doc["thresholds"].as_array().unwrap().len(), 2);
        assert_eq!(doc["critical"].as_array().unwrap().len(), 2);
        let v20 = doc["values"][2][0].as_f64().unwrap();
        assert!((v20 - 1.5).abs() <= 1e-9);
        assert_eq!(doc["grid"]["points"], 65);
        assert!(doc.get("variances").is_none());

        let mut buf = Vec::new();
        write_value_table_json(vt, Some(wt), &mut buf).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&to_string(buf)).unwrap();
        assert_eq!(doc["variances"].as_array().unwrap().len(), 3);
        let w20 = doc["variances"][2][0].as_f64().unwrap();
        assert!((w20 - 0.25).abs() <= 1e-6);

        let foreign =
            build_variance_table(&build_value_table(2, GridSpec::new(129).unwrap()).unwrap());
        let mut buf = Vec::new();
        assert_eq!(
            write_value_table_json(vt, Some(&foreign), &mut buf),
            Err(Error::TableMismatch)
        );
    }

    #[test]
    fn trace_csv_layout() {
        let (vt, _) = tables();
        let trace = episode_from_draws(vt, &[0.9, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,x,accepted,M,L,Y,d,A,B");
        assert_eq!(lines.len(), 2 + trace.n);
        assert!(lines[1].starts_with("0,,,0,0,"));
        assert!(lines[2].starts_with("1,0.9,true,0.9,1,"));
        assert!(lines[3].starts_with("2,0.3,false,0.9,1,"));
    }

    #[test]
    fn batch_lines_with_and_without_series() {
        let mut buf = Vec::new();
        write_batch(&[1, 2, 2], None, &mut buf).unwrap();
        assert_eq!(to_string(buf), "1\n2\n2\n");

        let mut buf = Vec::new();
        write_batch(&[1, 2], Some(&[0.25, 0.5]), &mut buf).unwrap();
        assert_eq!(to_string(buf), "1,0.25\n2,0.5\n");

        let mut buf = Vec::new();
        assert!(write_batch(&[1, 2], Some(&[0.25]), &mut buf).is_err());
    }

    #[test]
    fn histogram_csv_marks_overflow_bins() {
        let summary = summarize(&[1, 2, 1, 2, 2], 2).unwrap();
        let mut buf = Vec::new();
        write_histogram_csv(&summary.histogram, &mut buf).unwrap();
        let text = to_string(buf);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "z_lo,z_hi,count");
        assert!(lines[1].starts_with("-inf,-4,"));
        assert!(lines.last().unwrap().starts_with("4,inf,"));
        let total: u64 = lines[1..]
            .iter()
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn run_report_json_skips_absent_fields() {
        let report = RunReport {
            n: 42,
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_run_report_json(&report, &mut buf).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&to_string(buf)).unwrap();
        assert_eq!(doc["n"], 42);
        assert!(doc.get("mean").is_none());
        assert!(doc.get("bounds").is_none());

        let full = RunReport {
            n: 2,
            reps: Some(10),
            mean: Some(1.5),
            ks: Some(0.1),
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_run_report_json(&full, &mut buf).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&to_string(buf)).unwrap();
        assert_eq!(doc["reps"], 10);
        assert_eq!(doc["mean"], 1.5);
    }
}
