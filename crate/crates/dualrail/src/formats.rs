//! Text formats: chain files, trace and schedule CSVs, endpoint CSVs and transfer logs.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use dualrail_core::dynamics::ProjectedTrace;
use dualrail_core::scheduler::Objective;
use dualrail_core::tomography::{ChainEndpoints, TimeGrid};
use dualrail_core::{
    projected_trace, ChainSpec, Convention, EndpointFunctions, MeasurementSchedule, SchedulerConfig,
    SpectralPropagator, TransferRecord, C64,
};

use crate::error::{parse_error, Error, Result};

/// `# key=value` metadata lines at the top of a file.
pub type Header = BTreeMap<String, String>;

fn split_header(text: &str) -> Header {
    text.lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn write_header<W: Write>(out: &mut W, title: &str, header: &Header) -> Result<()> {
    writeln!(out, "# {title}")?;
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn number(field: &str, line: usize, what: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| parse_error(line, format!("{what}: not a number: {field:?}")))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn line_of(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// A chain read from a chain file with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFile {
    pub spec: ChainSpec,
    pub meta: Header,
}

/// Writes `N=…`, `convention=…`, any extra metadata, then one coupling per line.
pub fn write_chain<W: Write>(out: &mut W, spec: &ChainSpec, meta: &Header) -> Result<()> {
    writeln!(out, "# dualrail chain")?;
    writeln!(out, "N={}", spec.len())?;
    writeln!(out, "convention={}", spec.convention().name())?;
    for (k, v) in meta.iter().filter(|(k, _)| !matches!(k.as_str(), "N" | "convention")) {
        writeln!(out, "{k}={v}")?;
    }
    for j in spec.couplings() {
        writeln!(out, "{j}")?;
    }
    Ok(())
}

pub fn read_chain<R: Read>(mut input: R) -> Result<ChainFile> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut meta = Header::new();
    let mut couplings = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => couplings.push(number(line, i + 1, "coupling")?),
        }
    }
    if let Some(n) = meta.get("N") {
        let n: usize = n.parse().map_err(|_| parse_error(1, format!("bad N: {n:?}")))?;
        if n != couplings.len() + 1 {
            return Err(
                dualrail_core::Error::CouplingCount { expected: n.saturating_sub(1), got: couplings.len() }.into()
            );
        }
    }
    let convention = match meta.get("convention") {
        Some(name) => {
            Convention::from_name(name).ok_or_else(|| parse_error(1, format!("unknown convention {name:?}")))?
        }
        None => Convention::default(),
    };
    let spec = ChainSpec::new(couplings)?.with_convention(convention);
    Ok(ChainFile { spec, meta })
}

/// One line of a trace or schedule CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub l: usize,
    pub interval: f64,
    pub cumulative: f64,
    pub abs_f: f64,
    pub abs_g: f64,
    pub phase: f64,
    pub step_failure: f64,
    pub joint_failure: f64,
}

pub const TRACE_COLUMNS: [&str; 8] = ["l", "t_l", "tau_l", "abs_F", "abs_G", "phi_l", "p_l", "P_l"];

pub fn trace_rows(trace: &ProjectedTrace) -> Vec<TraceRow> {
    (0..trace.len())
        .map(|i| TraceRow {
            l: i + 1,
            interval: trace.intervals[i],
            cumulative: trace.cumulative[i],
            abs_f: trace.f[i].norm(),
            abs_g: trace.g[i].norm(),
            phase: trace.phases[i],
            step_failure: trace.step_failure[i],
            joint_failure: trace.joint_failure[i],
        })
        .collect()
}

fn write_rows<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.l.to_string(),
            r.interval.to_string(),
            r.cumulative.to_string(),
            r.abs_f.to_string(),
            r.abs_g.to_string(),
            r.phase.to_string(),
            r.step_failure.to_string(),
            r.joint_failure.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows(text: &str) -> Result<Vec<TraceRow>> {
    let mut reader = csv_reader(text);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != TRACE_COLUMNS.len() {
            return Err(parse_error(line, format!("expected {} columns", TRACE_COLUMNS.len())));
        }
        let f = |i: usize| number(&record[i], line, TRACE_COLUMNS[i]);
        rows.push(TraceRow {
            l: record[0].parse().map_err(|_| parse_error(line, "bad measurement index"))?,
            interval: f(1)?,
            cumulative: f(2)?,
            abs_f: f(3)?,
            abs_g: f(4)?,
            phase: f(5)?,
            step_failure: f(6)?,
            joint_failure: f(7)?,
        });
    }
    Ok(rows)
}

pub fn write_trace<W: Write>(out: W, trace: &ProjectedTrace) -> Result<()> {
    write_rows(out, &trace_rows(trace))
}

pub fn read_trace<R: Read>(mut input: R) -> Result<Vec<TraceRow>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    read_rows(&text)
}

/// Scheduler settings as header entries.
pub fn config_header(config: &SchedulerConfig) -> Header {
    let mut h = Header::new();
    h.insert("time_step".into(), config.time_step.to_string());
    h.insert("horizon".into(), config.horizon.to_string());
    h.insert("tolerance".into(), config.amplitude_tolerance.to_string());
    h.insert("amplitude_floor".into(), config.amplitude_floor.to_string());
    h.insert("slope_tolerance".into(), config.slope_tolerance.map_or("none".into(), |s| s.to_string()));
    h.insert("target_failure".into(), config.target_failure.to_string());
    h.insert("max_measurements".into(), config.max_measurements.to_string());
    h.insert("min_step_success".into(), config.min_step_success.to_string());
    let objective = match config.objective {
        Objective::StepSuccess => "step-success",
        Objective::SuccessRate => "success-rate",
    };
    h.insert("objective".into(), objective.into());
    h
}

fn config_from_header(h: &Header) -> Result<SchedulerConfig> {
    let mut config = SchedulerConfig::for_length(2);
    let get = |key: &str| -> Result<Option<f64>> { h.get(key).map(|v| number(v, 1, key)).transpose() };
    if let Some(v) = get("time_step")? {
        config.time_step = v;
    }
    if let Some(v) = get("horizon")? {
        config.horizon = v;
    }
    if let Some(v) = get("tolerance")? {
        config.amplitude_tolerance = v;
    }
    if let Some(v) = get("amplitude_floor")? {
        config.amplitude_floor = v;
    }
    if let Some(v) = get("target_failure")? {
        config.target_failure = v;
    }
    if let Some(v) = get("min_step_success")? {
        config.min_step_success = v;
    }
    if let Some(v) = get("max_measurements")? {
        config.max_measurements = v as usize;
    }
    config.slope_tolerance = match h.get("slope_tolerance").map(String::as_str) {
        None | Some("none") => None,
        Some(v) => Some(number(v, 1, "slope_tolerance")?),
    };
    config.objective = match h.get("objective").map(String::as_str) {
        None | Some("step-success") => Objective::StepSuccess,
        Some("success-rate") => Objective::SuccessRate,
        Some(other) => return Err(parse_error(1, format!("unknown objective {other:?}"))),
    };
    config.validate()?;
    Ok(config)
}

/// A schedule as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleFile {
    pub config: SchedulerConfig,
    pub achieved: bool,
    pub rows: Vec<TraceRow>,
}

impl ScheduleFile {
    pub fn intervals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.interval).collect()
    }

    /// Recomputes the trace of the stored intervals on a chain pair.
    pub fn replay(&self, prop1: &SpectralPropagator, prop2: &SpectralPropagator) -> Result<MeasurementSchedule> {
        let trace = projected_trace(prop1, prop2, &self.intervals())?;
        let achieved = trace.worst_survival() <= self.config.target_failure;
        Ok(MeasurementSchedule { trace, achieved, target_failure: self.config.target_failure })
    }
}

pub fn write_schedule<W: Write>(mut out: W, schedule: &MeasurementSchedule, config: &SchedulerConfig) -> Result<()> {
    let mut header = config_header(config);
    header.insert("achieved".into(), schedule.achieved.to_string());
    header.insert("measurements".into(), schedule.measurements().to_string());
    header.insert("total_time".into(), schedule.total_time().to_string());
    write_header(&mut out, "dualrail schedule", &header)?;
    write_rows(out, &trace_rows(&schedule.trace))
}

pub fn read_schedule<R: Read>(mut input: R) -> Result<ScheduleFile> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let header = split_header(&text);
    let config = config_from_header(&header)?;
    let achieved = header.get("achieved").is_some_and(|v| v == "true");
    Ok(ScheduleFile { config, achieved, rows: read_rows(&text)? })
}

pub const ENDPOINT_COLUMNS: [&str; 13] = [
    "t", "f_N1_re", "f_N1_im", "f_NN_re", "f_NN_im", "g_N1_re", "g_N1_im", "g_NN_re", "g_NN_im", "f_N1_err",
    "f_NN_err", "g_N1_err", "g_NN_err",
];

pub fn write_endpoints<W: Write>(mut out: W, endpoints: &EndpointFunctions, header: &Header) -> Result<()> {
    write_header(&mut out, "dualrail endpoints", header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENDPOINT_COLUMNS)?;
    let (c1, c2) = (&endpoints.chain1, &endpoints.chain2);
    for j in 0..endpoints.grid.points {
        let mut row = vec![endpoints.grid.time(j).to_string()];
        for z in [c1.arrive[j], c1.stay[j], c2.arrive[j], c2.stay[j]] {
            row.push(z.re.to_string());
            row.push(z.im.to_string());
        }
        for e in [c1.arrive_error[j], c1.stay_error[j], c2.arrive_error[j], c2.stay_error[j]] {
            row.push(e.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads endpoint functions on a uniform grid starting at `t = 0`; the error
/// columns are optional.
pub fn read_endpoints<R: Read>(mut input: R) -> Result<EndpointFunctions> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut reader = csv_reader(&text);
    let mut times = Vec::new();
    let empty = || ChainEndpoints { arrive: vec![], stay: vec![], arrive_error: vec![], stay_error: vec![] };
    let (mut c1, mut c2) = (empty(), empty());
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != 9 && record.len() != ENDPOINT_COLUMNS.len() {
            return Err(parse_error(line, "expected 9 or 13 columns"));
        }
        let v = |i: usize| number(&record[i], line, ENDPOINT_COLUMNS[i]);
        times.push(v(0)?);
        c1.arrive.push(C64::new(v(1)?, v(2)?));
        c1.stay.push(C64::new(v(3)?, v(4)?));
        c2.arrive.push(C64::new(v(5)?, v(6)?));
        c2.stay.push(C64::new(v(7)?, v(8)?));
        let err = |i: usize| if record.len() > i { v(i) } else { Ok(0.0) };
        c1.arrive_error.push(err(9)?);
        c1.stay_error.push(err(10)?);
        c2.arrive_error.push(err(11)?);
        c2.stay_error.push(err(12)?);
    }
    if times.len() < 4 {
        return Err(Error::Parse { line: 0, message: "need at least 4 grid points".into() });
    }
    let step = times[1] - times[0];
    if times[0].abs() > 1e-12 || step.is_nan() || step <= 0.0 {
        return Err(parse_error(0, "grid must start at t = 0 and increase"));
    }
    for (j, &t) in times.iter().enumerate() {
        if (t - j as f64 * step).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(parse_error(j + 2, format!("grid is not uniform at t = {t}")));
        }
    }
    let grid = TimeGrid { step, points: times.len() };
    Ok(EndpointFunctions::new(grid, c1, c2)?)
}

pub fn write_transfer_log<W: Write>(out: W, records: &[TransferRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "success_round", "fidelity"])?;
    for (trial, r) in records.iter().enumerate() {
        w.write_record([
            trial.to_string(),
            r.success_round.map_or(String::new(), |l| l.to_string()),
            r.fidelity.map_or(String::new(), |f| f.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use dualrail_core::{build_chain, build_schedule, DisorderConfig, Shots};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pair() -> (SpectralPropagator, SpectralPropagator) {
        let a = build_chain(6, &DisorderConfig::new(0.05, 0.5, 1)).unwrap();
        let b = build_chain(6, &DisorderConfig::new(0.05, 0.5, 2)).unwrap();
        (SpectralPropagator::from_chain(&a).unwrap(), SpectralPropagator::from_chain(&b).unwrap())
    }

    #[test]
    fn chain_round_trip() {
        let spec = build_chain(7, &DisorderConfig::new(0.1, 0.3, 9)).unwrap().with_convention(Convention::HalfPauli);
        let mut meta = Header::new();
        meta.insert("seed".into(), "9".into());
        let mut buf = Vec::new();
        write_chain(&mut buf, &spec, &meta).unwrap();
        let back = read_chain(buf.as_slice()).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back.meta["seed"], "9");
    }

    #[test]
    fn chain_length_mismatch_is_rejected() {
        assert!(read_chain("N=4\n1.0\n1.0\n".as_bytes()).is_err());
        assert!(read_chain("1.0\nabc\n".as_bytes()).is_err());
        assert!(read_chain("convention=weird\n1.0\n".as_bytes()).is_err());
    }

    #[test]
    fn schedule_round_trip_and_replay() {
        let (p1, p2) = pair();
        let config = SchedulerConfig { slope_tolerance: Some(0.5), ..SchedulerConfig::for_length(6) };
        let schedule = build_schedule(&p1, &p2, &config).unwrap();
        let mut buf = Vec::new();
        write_schedule(&mut buf, &schedule, &config).unwrap();
        let file = read_schedule(buf.as_slice()).unwrap();
        assert_eq!(file.config, config);
        assert_eq!(file.achieved, schedule.achieved);
        assert_eq!(file.rows, trace_rows(&schedule.trace));
        let replayed = file.replay(&p1, &p2).unwrap();
        assert_eq!(replayed.trace, schedule.trace);
    }

    #[test]
    fn trace_has_documented_columns() {
        let (p1, p2) = pair();
        let trace = projected_trace(&p1, &p2, &[1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "l,t_l,tau_l,abs_F,abs_G,phi_l,p_l,P_l");
        assert_eq!(read_trace(text.as_bytes()).unwrap().len(), 2);
    }

    #[test]
    fn endpoints_round_trip() {
        let (p1, p2) = pair();
        let grid = TimeGrid::covering(0.1, 3.0);
        let ep =
            EndpointFunctions::estimate(&p1, &p2, Shots::Finite(100), grid, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut buf = Vec::new();
        write_endpoints(&mut buf, &ep, &Header::new()).unwrap();
        let back = read_endpoints(buf.as_slice()).unwrap();
        assert_eq!(back.chain1, ep.chain1);
        assert_eq!(back.chain2, ep.chain2);
        assert_eq!(back.grid.points, grid.points);
        assert!((back.grid.step - grid.step).abs() < 1e-15);
    }

    #[test]
    fn endpoints_need_uniform_grid() {
        let text =
            "t,a,b,c,d,e,f,g,h\n0,0,0,1,0,0,0,1,0\n0.1,0,0,1,0,0,0,1,0\n0.3,0,0,1,0,0,0,1,0\n0.4,0,0,1,0,0,0,1,0\n";
        assert!(matches!(read_endpoints(text.as_bytes()), Err(Error::Parse { .. })));
    }
}
