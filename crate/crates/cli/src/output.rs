//! CSV writers. Every float is written as `{:.16e}` (17 significant digits),
//! which round-trips through `f64` parsing and makes output byte-stable.

use std::io::Write;

use floquet_ratchet::{FloquetSpectrum, StateClass, TimeSeries};

use crate::record::ScanRecord;

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn momentum_header(n: i64) -> String {
    format!("p_{{{n}}}")
}

/// `t, current, log_norm` plus one `p_{n}` column per momentum when
/// populations are present and requested.
pub fn write_timeseries<W: Write>(
    w: W,
    ts: &TimeSeries,
    with_populations: bool,
) -> csv::Result<()> {
    write_timeseries_with(w, ts, with_populations, &[])
}

/// As [`write_timeseries`], with extra per-sample columns after `log_norm`.
pub fn write_timeseries_with<W: Write>(
    w: W,
    ts: &TimeSeries,
    with_populations: bool,
    extra: &[(&str, &[f64])],
) -> csv::Result<()> {
    let pops = ts.populations.as_ref().filter(|_| with_populations);
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "current".into(), "log_norm".into()];
    header.extend(extra.iter().map(|(name, _)| name.to_string()));
    if pops.is_some() {
        header.extend(ts.momenta.iter().map(|&n| momentum_header(n)));
    }
    out.write_record(&header)?;
    for i in 0..ts.len() {
        let mut row = vec![
            fmt_float(ts.times[i]),
            fmt_float(ts.current[i]),
            fmt_float(ts.log_norm[i]),
        ];
        row.extend(extra.iter().map(|(_, col)| fmt_float(col[i])));
        if let Some(p) = pops {
            row.extend(p[i].iter().map(|&x| fmt_float(x)));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_spectrum<W: Write>(
    w: W,
    spec: &FloquetSpectrum,
    classes: &[StateClass],
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "re_eps", "im_eps", "mean_p", "class", "overlap0"])?;
    for (i, c) in classes.iter().enumerate() {
        let e = spec.quasienergies[i];
        out.write_record([
            i.to_string(),
            fmt_float(e.re),
            fmt_float(e.im),
            fmt_float(c.mean_momentum),
            c.tag.label().to_string(),
            fmt_float(c.overlap),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `<param>, value, converged`, one row per record, in record order.
pub fn write_scan<W: Write>(
    w: W,
    param: &str,
    axis: &[f64],
    records: &[ScanRecord],
) -> csv::Result<()> {
    let coords: Vec<Vec<f64>> = axis.iter().map(|&x| vec![x]).collect();
    write_grid(w, &[param], &coords, records)
}

/// Multi-axis form of [`write_scan`]: one coordinate column per axis name.
pub fn write_grid<W: Write>(
    w: W,
    names: &[&str],
    coords: &[Vec<f64>],
    records: &[ScanRecord],
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = names.to_vec();
    header.extend(["value", "converged"]);
    out.write_record(&header)?;
    for (c, r) in coords.iter().zip(records) {
        let mut row: Vec<String> = c.iter().map(|&x| fmt_float(x)).collect();
        row.push(fmt_float(r.value));
        row.push(r.converged.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Full record dump: parameters, key, diagnostics as `name=value` pairs
/// separated by `;`, and the error text of failed points.
pub fn write_records<W: Write>(w: W, records: &[ScanRecord]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "index",
        "key",
        "kind",
        "K",
        "lambda",
        "omega",
        "phi",
        "g",
        "value",
        "converged",
        "diagnostics",
        "error",
    ])?;
    for r in records {
        let diag: Vec<String> = r
            .diagnostics
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_float(*v)))
            .collect();
        let p = &r.params;
        out.write_record([
            r.index.to_string(),
            r.key.clone(),
            r.result_kind.label().to_string(),
            fmt_float(p.k),
            fmt_float(p.lambda),
            fmt_float(p.omega),
            fmt_float(p.phi),
            fmt_float(p.g),
            fmt_float(r.value),
            r.converged.to_string(),
            diag.join(";"),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Two-row table of named values, for single-run summaries.
pub fn write_summary<W: Write>(w: W, fields: &[(&str, String)]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(fields.iter().map(|(k, _)| *k))?;
    out.write_record(fields.iter().map(|(_, v)| v.as_str()))?;
    out.flush()?;
    Ok(())
}
