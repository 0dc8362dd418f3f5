//! Sample CSV files: a header row, one column per input and the output as
//! a scalar, an integer level, a quoted `;`-separated list of draws, or a
//! set of columns `<name>_t<time>` forming a curve.

use std::path::Path;

use kgsa::{OutputValue, SampleSet};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    #[default]
    Scalar,
    Categorical,
    Dist,
    Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    /// Input columns in order; `None` takes every non-output column.
    pub inputs: Option<Vec<String>>,
    pub output: String,
    pub kind: OutputKind,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            inputs: None,
            output: "y".into(),
            kind: OutputKind::Scalar,
        }
    }
}

fn curve_time(header: &str, output: &str) -> Option<f64> {
    header.strip_prefix(output)?.strip_prefix("_t")?.parse().ok()
}

fn parse_f64(cell: &str, column: &str, line: u64) -> CliResult<f64> {
    cell.trim().parse().map_err(|_| CliError::Parse {
        line,
        msg: format!("column `{column}`: `{cell}` is not a number"),
    })
}

pub fn read_csv(text: &str, schema: &Schema) -> CliResult<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::MissingColumn(name.to_string()))
    };
    let mut output_cols: Vec<(usize, f64)> = Vec::new();
    if schema.kind == OutputKind::Curve {
        output_cols = headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| curve_time(h, &schema.output).map(|t| (i, t)))
            .collect();
        if output_cols.is_empty() {
            return Err(CliError::MissingColumn(format!("{}_t0", schema.output)));
        }
        output_cols.sort_by(|a, b| a.1.total_cmp(&b.1));
    } else {
        output_cols.push((find(&schema.output)?, 0.0));
    }
    let input_cols: Vec<usize> = match &schema.inputs {
        Some(names) => names.iter().map(|n| find(n)).collect::<CliResult<_>>()?,
        None => (0..headers.len())
            .filter(|i| output_cols.iter().all(|(o, _)| o != i))
            .collect(),
    };
    if input_cols.is_empty() {
        return Err(CliError::usage("the CSV file has no input columns"));
    }
    let times: Vec<f64> = output_cols.iter().map(|(_, t)| *t).collect();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = input_cols
            .iter()
            .map(|c| parse_f64(&record[*c], &headers[*c], line))
            .collect::<CliResult<Vec<f64>>>()?;
        let (oc, _) = output_cols[0];
        let cell = &record[oc];
        let y = match schema.kind {
            OutputKind::Scalar => OutputValue::scalar(parse_f64(cell, &headers[oc], line)?),
            OutputKind::Categorical => OutputValue::categorical(cell.trim().parse().map_err(|_| CliError::Parse {
                line,
                msg: format!("column `{}`: `{cell}` is not a level", headers[oc]),
            })?),
            OutputKind::Dist => OutputValue::dist(
                cell.split(';')
                    .map(|v| parse_f64(v, &headers[oc], line))
                    .collect::<CliResult<_>>()?,
            )?,
            OutputKind::Curve => OutputValue::curve(
                times.clone(),
                output_cols
                    .iter()
                    .map(|(c, _)| parse_f64(&record[*c], &headers[*c], line))
                    .collect::<CliResult<_>>()?,
            )?,
        };
        inputs.push(row);
        outputs.push(y);
    }
    let names = input_cols.iter().map(|c| headers[*c].clone()).collect();
    Ok(SampleSet::new(inputs, outputs)?.with_names(names)?)
}

/// Read a sample file; logs row count and per-column ranges to stderr.
pub fn ingest_csv(path: &Path, schema: &Schema) -> CliResult<SampleSet> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let sample = read_csv(&text, schema)?;
    eprintln!("{}: {} rows, {} inputs", path.display(), sample.len(), sample.dim());
    for l in 0..sample.dim() {
        let c = sample.column(l);
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = c.iter().sum::<f64>() / c.len().max(1) as f64;
        eprintln!("  {}: min {lo}, mean {mean}, max {hi}", sample.input_names[l]);
    }
    Ok(sample)
}

/// CSV text of a sample; floats use the shortest representation that reads
/// back to the same value.
pub fn write_csv(sample: &SampleSet, schema: &Schema) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = sample.input_names.clone();
    let times = match sample.outputs.first() {
        Some(OutputValue::Curve { times, .. }) => times.clone(),
        _ => Vec::new(),
    };
    if schema.kind == OutputKind::Curve {
        header.extend(times.iter().map(|t| format!("{}_t{t}", schema.output)));
    } else {
        header.push(schema.output.clone());
    }
    w.write_record(&header)?;
    for (x, y) in sample.inputs.iter().zip(&sample.outputs) {
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        match (schema.kind, y) {
            (OutputKind::Scalar, OutputValue::Scalar { value }) => row.push(value.to_string()),
            (OutputKind::Categorical, OutputValue::Categorical { level }) => row.push(level.to_string()),
            (OutputKind::Dist, OutputValue::DistSample { values }) => {
                row.push(values.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
            }
            (OutputKind::Curve, OutputValue::Curve { values, .. }) => row.extend(values.iter().map(f64::to_string)),
            (kind, y) => {
                return Err(CliError::usage(format!(
                    "cannot write a {} output as {kind:?}",
                    y.kind_name()
                )))
            }
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_sample() {
        let s = read_csv("x1,x2,y\n0.1,0.2,3.5", &Schema::default()).unwrap();
        assert_eq!((s.len(), s.dim()), (1, 2));
        assert_eq!(s.outputs[0], OutputValue::scalar(3.5));
        assert_eq!(s.input_names, vec!["x1", "x2"]);
    }

    #[test]
    fn dist_cell() {
        let schema = Schema {
            kind: OutputKind::Dist,
            ..Schema::default()
        };
        let s = read_csv("x,y\n0.5,\"1.2;3.4;2.2\"\n", &schema).unwrap();
        assert_eq!(s.outputs[0], OutputValue::dist(vec![1.2, 3.4, 2.2]).unwrap());
    }

    #[test]
    fn curve_columns_sorted_by_time() {
        let schema = Schema {
            output: "i".into(),
            kind: OutputKind::Curve,
            inputs: None,
        };
        let s = read_csv("a,i_t2,i_t0,b\n1,0.3,0.1,2\n", &schema).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.outputs[0], OutputValue::curve(vec![0.0, 2.0], vec![0.1, 0.3]).unwrap());
    }

    #[test]
    fn categorical_and_selected_inputs() {
        let schema = Schema {
            inputs: Some(vec!["b".into()]),
            output: "c".into(),
            kind: OutputKind::Categorical,
        };
        let s = read_csv("a,b,c\n1,2,0\n3,4,2\n", &schema).unwrap();
        assert_eq!(s.inputs, vec![vec![2.0], vec![4.0]]);
        assert_eq!(s.outputs[1], OutputValue::categorical(2));
    }

    #[test]
    fn errors_name_the_problem() {
        match read_csv("x1,x2\n0.1,0.2\n", &Schema::default()) {
            Err(CliError::MissingColumn(c)) => assert_eq!(c, "y"),
            other => panic!("{other:?}"),
        }
        match read_csv("x,y\n1,2\n3,abc\n", &Schema::default()) {
            Err(CliError::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_csv("x,y\n1,2\n3\n", &Schema::default()), Err(CliError::Parse { line: 3, .. })));
    }

    #[test]
    fn round_trip_keeps_every_bit() {
        let inputs = vec![vec![0.1 + 0.2, 1.0 / 3.0], vec![-1e-300, 6.02214076e23]];
        let outputs = vec![OutputValue::scalar(std::f64::consts::PI), OutputValue::scalar(-0.0)];
        let s = SampleSet::new(inputs, outputs).unwrap();
        let back = read_csv(&write_csv(&s, &Schema::default()).unwrap(), &Schema::default()).unwrap();
        assert_eq!(back.inputs, s.inputs);
        assert_eq!(back.outputs, s.outputs);
    }
}
