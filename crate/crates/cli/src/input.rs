//! Input loading. Two layouts are recognised by the column count of the first data
//! line: two columns are a `t,value` CSV with a header, six are a GPS solution file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use ssaid_core::TimeSeries;

use crate::error::{CliError, CliResult};
use crate::gps::{fields, is_skipped, parse_gps, Component, DayGap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Gps,
}

#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub format: InputFormat,
    pub series: TimeSeries,
    /// Time stamp of every sample as given in the file.
    pub times: Vec<f64>,
    /// Column the values came from.
    pub label: String,
    pub gaps: Vec<DayGap>,
}

pub fn detect_format(text: &str) -> CliResult<InputFormat> {
    let first = text
        .lines()
        .find(|l| !is_skipped(l))
        .ok_or_else(|| CliError::Input("file has no data".into()))?;
    match fields(first).len() {
        2 => Ok(InputFormat::Csv),
        6 => Ok(InputFormat::Gps),
        n => Err(CliError::Input(format!(
            "cannot infer format from {n} columns (expected 2 for t,value or 6 for GPS)"
        ))),
    }
}

pub fn load(path: &Path, component: Component) -> CliResult<LoadedSeries> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    parse(&bytes, component)
}

pub fn parse(bytes: &[u8], component: Component) -> CliResult<LoadedSeries> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::Input(format!("not UTF-8: {e}")))?;
    match detect_format(text)? {
        InputFormat::Csv => {
            let (times, values) = parse_csv(text)?;
            build(InputFormat::Csv, times, values, "value".into(), Vec::new())
        }
        InputFormat::Gps => {
            let file = parse_gps(bytes)?;
            let gaps = file.gaps();
            let times = file.rows.iter().map(|r| r.decimal_year).collect();
            let values = file.rows.iter().map(|r| r.component(component)).collect();
            build(InputFormat::Gps, times, values, component.as_str().into(), gaps)
        }
    }
}

fn parse_csv(text: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let num = |i: usize, name: &str| -> CliResult<f64> {
            record
                .get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Parse { line, msg: format!("bad {name} '{}'", record.get(i).unwrap_or("")) })
        };
        let t = num(0, "time")?;
        if times.last().is_some_and(|&p| t <= p) {
            return Err(CliError::Parse { line, msg: format!("time {t} does not increase") });
        }
        times.push(t);
        values.push(num(1, "value")?);
    }
    if values.is_empty() {
        return Err(CliError::Input("CSV has no data rows".into()));
    }
    Ok((times, values))
}

fn build(
    format: InputFormat,
    times: Vec<f64>,
    values: Vec<f64>,
    label: String,
    gaps: Vec<DayGap>,
) -> CliResult<LoadedSeries> {
    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let dt = if steps.is_empty() {
        1.0
    } else {
        let mid = steps.len() / 2;
        *steps.select_nth_unstable_by(mid, f64::total_cmp).1
    };
    let series = TimeSeries::with_timing(values, dt, times[0])?;
    Ok(LoadedSeries { format, series, times, label, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header() {
        let got = parse(b"t,value\n0,1.5\n1,2.5\n2,2.0\n", Component::East).unwrap();
        assert_eq!(got.format, InputFormat::Csv);
        assert_eq!(got.series.values(), &[1.5, 2.5, 2.0]);
        assert_eq!(got.series.dt(), 1.0);
        assert_eq!(got.label, "value");
    }

    #[test]
    fn gps_component_selection() {
        let text = b"2019.0014 2019 1 1 2 3\n2019.0041 2019 2 4 5 6\n";
        let got = parse(text, Component::Up).unwrap();
        assert_eq!(got.format, InputFormat::Gps);
        assert_eq!(got.series.values(), &[3.0, 6.0]);
        assert_eq!(got.times, vec![2019.0014, 2019.0041]);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(parse(b"1 2 3\n", Component::East), Err(CliError::Input(_))));
        assert!(matches!(parse(b"t,value\n0,1\n0,2\n", Component::East), Err(CliError::Parse { line: 3, .. })));
        assert!(matches!(parse(b"t,value\n0,abc\n", Component::East), Err(CliError::Parse { line: 2, .. })));
        assert!(parse(b"", Component::East).is_err());
    }
}
