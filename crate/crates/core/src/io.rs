//! File formats used by the command-line tool.
//!
//! Points come in as CSV, one point per row. A header row is optional; when
//! present and its last column is named `weight`, that column holds the point
//! weights (default 1). Every number written to CSV uses the shortest
//! representation that parses back to the same `f64`, so traces can be fed
//! back in without loss.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::CounterexampleTrace;
use crate::engine::{ClusterResult, IterationRecord, IterationTrace, PointSet, RunConfig, RunOutcome};
use crate::error::{Error, Result};
use crate::experiments::{ConsistencyReport, ConvergenceReport, TableReport};
use crate::gaussian_theory::StdRow;

/// Shortest round-trip text for `x`.
pub fn format_number(x: f64) -> String {
    format!("{x:?}")
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: {field:?} is not a number")))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Reads a points CSV. Fails with [`Error::EmptyInput`] when there are no
/// data rows.
pub fn read_points<R: Read>(input: R) -> Result<PointSet> {
    let rows = reader(input).into_records();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut dim = None;
    let mut weighted = false;
    let mut line = 0;

    let mut first = true;
    for record in rows {
        let record = record?;
        line = record.position().map_or(line + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|f| f.parse::<f64>().is_err()) {
                weighted = record.iter().next_back().is_some_and(|f| f.eq_ignore_ascii_case("weight"));
                let columns = record.len() - usize::from(weighted);
                if columns == 0 {
                    return Err(Error::Parse("header has no coordinate columns".into()));
                }
                dim = Some(columns);
                continue;
            }
        }
        let values = record.iter().map(|f| parse_number(f, line)).collect::<Result<Vec<_>>>()?;
        let p = values.len() - usize::from(weighted);
        let expected = *dim.get_or_insert(p);
        if p != expected || p == 0 {
            return Err(Error::DimensionMismatch { expected, found: p });
        }
        if weighted {
            weights.push(values[p]);
        } else {
            weights.push(1.0);
        }
        coords.extend_from_slice(&values[..p]);
    }
    match dim {
        Some(p) if !weights.is_empty() => PointSet::new(p, coords, weights),
        _ => Err(Error::EmptyInput),
    }
}

pub fn read_points_file(path: &Path) -> Result<PointSet> {
    read_points(open(path)?)
}

fn coordinate_header(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (1..=dim).map(move |k| format!("{prefix}_{k}"))
}

/// Writes points with an `x_1..x_p,weight` header.
pub fn write_points<W: Write>(points: &PointSet, output: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    let mut header: Vec<String> = coordinate_header("x", points.dim()).collect();
    header.push("weight".into());
    w.write_record(&header)?;
    for (row, &weight) in points.rows().zip(points.weights()) {
        w.write_record(row.iter().chain([&weight]).map(|&x| format_number(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Configuration echoed into a clustering result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRunSettings {
    #[serde(flatten)]
    pub run: RunConfig,
    pub merge_tolerance: f64,
    /// Points file the run started from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

/// Result JSON written by `cluster`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub final_positions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub iterations_used: usize,
    pub converged: bool,
    pub config: ClusterRunSettings,
}

impl ClusterOutput {
    pub fn new(outcome: &RunOutcome, clusters: ClusterResult, config: ClusterRunSettings) -> Self {
        Self {
            final_positions: outcome.points.rows().map(<[f64]>::to_vec).collect(),
            weights: outcome.points.weights().to_vec(),
            labels: clusters.labels,
            centers: clusters.centers,
            sizes: clusters.sizes,
            iterations_used: outcome.iterations_used,
            converged: outcome.converged,
            config,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut output: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut output, value)?;
    output.write_all(b"\n")?;
    Ok(())
}

pub fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_json(value, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// Trace CSV: `iteration,max_displacement,radius,std_1..std_p`. The initial
/// record has an empty `max_displacement`.
pub fn write_trace<W: Write>(trace: &IterationTrace, output: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    let dim = trace.dim().unwrap_or(0);
    let mut header = vec!["iteration".to_string(), "max_displacement".into(), "radius".into()];
    header.extend(coordinate_header("std", dim));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.iteration.to_string(), r.max_displacement.map(format_number).unwrap_or_default()];
        row.push(format_number(r.radius));
        row.extend(r.std.iter().map(|&s| format_number(s)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV back. Means are not part of the format and come back
/// empty; positions are attached separately with [`attach_positions`].
pub fn read_trace<R: Read>(input: R) -> Result<IterationTrace> {
    let mut rows = reader(input).into_records();
    let header = rows.next().ok_or(Error::EmptyInput)??;
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 3 || names[..3] != ["iteration", "max_displacement", "radius"] {
        return Err(Error::Parse("trace header must start with iteration,max_displacement,radius".into()));
    }
    let dim = names.len() - 3;
    let mut records = Vec::new();
    for record in rows {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != names.len() {
            return Err(Error::Parse(format!("line {line}: expected {} fields, found {}", names.len(), record.len())));
        }
        let iteration = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: bad iteration {:?}", &record[0])))?;
        let max_displacement = match &record[1] {
            "" => None,
            f => Some(parse_number(f, line)?),
        };
        let radius = parse_number(&record[2], line)?;
        let std = (0..dim).map(|k| parse_number(&record[3 + k], line)).collect::<Result<_>>()?;
        records.push(IterationRecord { iteration, max_displacement, radius, mean: Vec::new(), std, positions: None });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(IterationTrace { records })
}

pub fn read_trace_file(path: &Path) -> Result<IterationTrace> {
    read_trace(open(path)?)
}

/// Positions CSV of a full trace: `iteration,point,x_1..x_p,weight`.
pub fn write_positions<W: Write>(trace: &IterationTrace, output: W) -> Result<()> {
    let snapshots = trace
        .positions()
        .ok_or_else(|| Error::InvalidArgument("positions need a full-level trace".into()))?;
    let mut w = csv::Writer::from_writer(output);
    let dim = trace.dim().unwrap_or(0);
    let mut header = vec!["iteration".to_string(), "point".into()];
    header.extend(coordinate_header("x", dim));
    header.push("weight".into());
    w.write_record(&header)?;
    for (record, snapshot) in trace.records.iter().zip(snapshots) {
        for (i, (row, &weight)) in snapshot.rows().zip(snapshot.weights()).enumerate() {
            let mut fields = vec![record.iteration.to_string(), i.to_string()];
            fields.extend(row.iter().chain([&weight]).map(|&x| format_number(x)));
            w.write_record(&fields)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a positions CSV into `(iteration, snapshot)` pairs in file order.
pub fn read_positions<R: Read>(input: R) -> Result<Vec<(usize, PointSet)>> {
    let mut rows = reader(input).into_records();
    let header = rows.next().ok_or(Error::EmptyInput)??;
    if header.len() < 4 || &header[0] != "iteration" || &header[1] != "point" || &header[header.len() - 1] != "weight" {
        return Err(Error::Parse("positions header must be iteration,point,x_1..x_p,weight".into()));
    }
    let dim = header.len() - 3;
    let mut out: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
    for record in rows {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::Parse(format!("line {line}: expected {} fields, found {}", header.len(), record.len())));
        }
        let iteration: usize = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: bad iteration {:?}", &record[0])))?;
        let values = (2..record.len()).map(|k| parse_number(&record[k], line)).collect::<Result<Vec<_>>>()?;
        if out.last().is_none_or(|s| s.0 != iteration) {
            out.push((iteration, Vec::new(), Vec::new()));
        }
        let snapshot = out.last_mut().expect("pushed above");
        snapshot.1.extend_from_slice(&values[..dim]);
        snapshot.2.push(values[dim]);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    out.into_iter().map(|(it, coords, weights)| Ok((it, PointSet::new(dim, coords, weights)?))).collect()
}

pub fn read_positions_file(path: &Path) -> Result<Vec<(usize, PointSet)>> {
    read_positions(open(path)?)
}

/// Attaches snapshots to the trace records with matching iteration numbers.
/// Every record must receive exactly one snapshot.
pub fn attach_positions(trace: &mut IterationTrace, snapshots: Vec<(usize, PointSet)>) -> Result<()> {
    if snapshots.len() != trace.records.len() {
        return Err(Error::InvalidArgument(format!(
            "positions cover {} iterations but the trace has {}",
            snapshots.len(),
            trace.records.len()
        )));
    }
    for (record, (iteration, points)) in trace.records.iter_mut().zip(snapshots) {
        if record.iteration != iteration {
            return Err(Error::InvalidArgument(format!(
                "positions for iteration {iteration} do not match trace iteration {}",
                record.iteration
            )));
        }
        if points.dim() != record.std.len() {
            return Err(Error::DimensionMismatch { expected: record.std.len(), found: points.dim() });
        }
        record.mean = points.mean();
        record.positions = Some(points);
    }
    Ok(())
}

fn write_rows<W: Write>(output: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `step,blurring_std,nonblurring_std`.
pub fn write_theory<W: Write>(rows: &[StdRow], output: W) -> Result<()> {
    write_rows(
        output,
        &["step", "blurring_std", "nonblurring_std"],
        rows.iter()
            .map(|r| vec![r.step.to_string(), format_number(r.blurring_std), format_number(r.nonblurring_std)]),
    )
}

/// `t,x1,x2,x3,w1,w2,w3`.
pub fn write_counterexample<W: Write>(trace: &CounterexampleTrace, output: W) -> Result<()> {
    write_rows(
        output,
        &["t", "x1", "x2", "x3", "w1", "w2", "w3"],
        trace.rows.iter().map(|r| {
            std::iter::once(r.t.to_string())
                .chain([r.x1, r.x2, r.x3, r.w1, r.w2, r.w3].map(format_number))
                .collect()
        }),
    )
}

/// `statistic,replication,value` for every included replication.
pub fn write_table_long<W: Write>(report: &TableReport, output: W) -> Result<()> {
    write_rows(
        output,
        &["statistic", "replication", "value"],
        report
            .long_format()
            .into_iter()
            .map(|(s, r, v)| vec![s.to_string(), r.to_string(), format_number(v)]),
    )
}

/// `mode,iteration,mean,std,log10_std,replication`; `log10_std` is empty once
/// the spread is exactly zero.
pub fn write_series<W: Write>(report: &ConvergenceReport, output: W) -> Result<()> {
    write_rows(
        output,
        &["mode", "iteration", "mean", "std", "log10_std", "replication"],
        report.series.iter().flat_map(|s| {
            s.points.iter().map(move |p| {
                vec![
                    s.mode.to_string(),
                    p.iteration.to_string(),
                    format_number(p.mean),
                    format_number(p.std),
                    p.log10_std.map(format_number).unwrap_or_default(),
                    s.replication.to_string(),
                ]
            })
        }),
    )
}

/// `n_points,mean,std,count,excluded`.
pub fn write_consistency<W: Write>(report: &ConsistencyReport, output: W) -> Result<()> {
    write_rows(
        output,
        &["n_points", "mean", "std", "count", "excluded"],
        report.rows.iter().map(|r| {
            vec![
                r.n_points.to_string(),
                format_number(r.blurring.mean),
                format_number(r.blurring.std),
                r.blurring.count.to_string(),
                r.excluded.to_string(),
            ]
        }),
    )
}

/// Runs `write` against a buffered file at `path`.
pub fn with_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut out = create(path)?;
    write(&mut out)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, TraceLevel};
    use crate::kernel::KernelSpec;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1.94e-9, -0.0, 123456789.125, f64::MIN_POSITIVE, 5e-324] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_number(0.2), "0.2");
    }

    #[test]
    fn points_without_header() {
        let p = read_points("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.coords(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn weight_column_needs_its_header() {
        let p = read_points("x,y,weight\n1,2,0.5\n3,4,2\n".as_bytes()).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.weights(), &[0.5, 2.0]);
        let q = read_points("a,b\n1,2\n".as_bytes()).unwrap();
        assert_eq!((q.dim(), q.weights()), (2, &[1.0][..]));
    }

    #[test]
    fn empty_and_ragged_inputs() {
        assert!(matches!(read_points("".as_bytes()), Err(Error::EmptyInput)));
        assert!(matches!(read_points("x,y\n".as_bytes()), Err(Error::EmptyInput)));
        assert!(matches!(read_points("\n\n".as_bytes()), Err(Error::EmptyInput)));
        let err = read_points("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 1 }), "{err:?}");
        assert!(matches!(read_points("1,2\n3,zz\n".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn points_round_trip() {
        let p = PointSet::from_rows_weighted(&[vec![0.1, -2.5], vec![1.0 / 3.0, 7.0]], vec![1.0, 0.25]).unwrap();
        let mut buf = Vec::new();
        write_points(&p, &mut buf).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn trace_and_positions_round_trip() {
        let p = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.3], vec![0.2, 1.1]]).unwrap();
        let config = RunConfig::blurring(KernelSpec::gaussian(1.0).unwrap()).with_trace(TraceLevel::Full);
        let out = run(&p, &config).unwrap();

        let mut tbuf = Vec::new();
        write_trace(&out.trace, &mut tbuf).unwrap();
        let mut trace = read_trace(tbuf.as_slice()).unwrap();
        assert_eq!(trace.len(), out.trace.len());
        for (a, b) in trace.records.iter().zip(&out.trace.records) {
            assert_eq!((a.iteration, a.max_displacement, a.radius, &a.std), (b.iteration, b.max_displacement, b.radius, &b.std));
        }

        let mut pbuf = Vec::new();
        write_positions(&out.trace, &mut pbuf).unwrap();
        attach_positions(&mut trace, read_positions(pbuf.as_slice()).unwrap()).unwrap();
        assert_eq!(trace, out.trace);
    }

    #[test]
    fn mismatched_positions_are_rejected() {
        let p = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let out = run(&p, &RunConfig::blurring(KernelSpec::gaussian(1.0).unwrap())).unwrap();
        let mut trace = out.trace.clone();
        let err = attach_positions(&mut trace, vec![(0, p)]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
