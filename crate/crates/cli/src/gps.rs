//! Daily GPS position solutions: decimal year, year, day of year and the north, east
//! and up displacements in millimetres.

use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    North,
    #[default]
    East,
    Up,
}

impl Component {
    pub fn as_str(self) -> &'static str {
        match self {
            Component::North => "north",
            Component::East => "east",
            Component::Up => "up",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsRow {
    pub decimal_year: f64,
    pub year: i32,
    pub day_of_year: u32,
    pub north_mm: f64,
    pub east_mm: f64,
    pub up_mm: f64,
}

impl GpsRow {
    pub fn component(&self, c: Component) -> f64 {
        match c {
            Component::North => self.north_mm,
            Component::East => self.east_mm,
            Component::Up => self.up_mm,
        }
    }

    fn day_number(&self) -> Option<i32> {
        NaiveDate::from_yo_opt(self.year, self.day_of_year).map(|d| d.num_days_from_ce())
    }
}

/// A missing run of days between two consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayGap {
    /// Row index after which the gap occurs.
    pub after_row: usize,
    pub missing_days: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsRecordFile {
    pub station_id: String,
    pub rows: Vec<GpsRow>,
}

impl GpsRecordFile {
    pub fn gaps(&self) -> Vec<DayGap> {
        self.rows
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let step = w[1].day_number()? - w[0].day_number()?;
                (step > 1).then(|| DayGap {
                    after_row: i,
                    missing_days: (step - 1) as u32,
                })
            })
            .collect()
    }

    /// Whitespace-delimited text that [`parse_gps`] reads back to the same values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.station_id.is_empty() {
            let _ = writeln!(out, "# station {}", self.station_id);
        }
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                r.decimal_year, r.year, r.day_of_year, r.north_mm, r.east_mm, r.up_mm
            );
        }
        out
    }
}

/// Fields of a non-comment, non-blank line.
pub(crate) fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .collect()
}

pub(crate) fn is_skipped(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_field<T: FromStr>(raw: &str, name: &str, line: usize) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Parse { line, msg: format!("bad {name} '{raw}'") })
}

/// Parse a GPS daily-solution file. Lines starting with `#` and blank lines are
/// skipped; a comment of the form `# station NAME` sets the station id.
pub fn parse_gps(bytes: &[u8]) -> Result<GpsRecordFile, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::Input(format!("not UTF-8: {e}")))?;
    let mut station_id = String::new();
    let mut rows: Vec<GpsRow> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if is_skipped(line) {
            if let Some(rest) = line.trim().trim_start_matches('#').trim().strip_prefix("station") {
                station_id = rest.trim().to_string();
            }
            continue;
        }
        let f = fields(line);
        if f.len() != 6 {
            return Err(CliError::Parse {
                line: line_no,
                msg: format!("expected 6 columns, found {}", f.len()),
            });
        }
        let row = GpsRow {
            decimal_year: parse_field(f[0], "decimal year", line_no)?,
            year: parse_field(f[1], "year", line_no)?,
            day_of_year: parse_field(f[2], "day of year", line_no)?,
            north_mm: parse_field(f[3], "north", line_no)?,
            east_mm: parse_field(f[4], "east", line_no)?,
            up_mm: parse_field(f[5], "up", line_no)?,
        };
        if !(1..=366).contains(&row.day_of_year) {
            return Err(CliError::Parse {
                line: line_no,
                msg: format!("day of year {} outside 1..=366", row.day_of_year),
            });
        }
        if [row.decimal_year, row.north_mm, row.east_mm, row.up_mm].iter().any(|v| !v.is_finite()) {
            return Err(CliError::Parse { line: line_no, msg: "non-finite value".into() });
        }
        if let Some(prev) = rows.last() {
            if row.decimal_year <= prev.decimal_year {
                return Err(CliError::Parse {
                    line: line_no,
                    msg: format!(
                        "decimal year {} does not increase (previous {})",
                        row.decimal_year, prev.decimal_year
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input("GPS file has no data rows".into()));
    }
    Ok(GpsRecordFile { station_id, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
2019.0014 2019 1 1.5 -2.25 3.0
2019.0041 2019 2 1.7 -2.10 2.9
2019.0068 2019 3 1.6 -2.00 3.1
";

    #[test]
    fn parses_three_rows() {
        let f = parse_gps(SAMPLE.as_bytes()).unwrap();
        assert_eq!(f.rows.len(), 3);
        assert_eq!(f.rows[1].year, 2019);
        assert_eq!(f.rows[1].day_of_year, 2);
        assert_eq!(f.rows[2].east_mm, -2.0);
        assert_eq!(f.rows[0].component(Component::Up), 3.0);
        assert!(f.gaps().is_empty());
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let text = format!("# station ALBH\n\n{SAMPLE}\n# trailing\n");
        let f = parse_gps(text.as_bytes()).unwrap();
        assert_eq!(f.rows.len(), 3);
        assert_eq!(f.station_id, "ALBH");
    }

    #[test]
    fn commas_work_too() {
        let f = parse_gps(b"2019.5,2019,182,1,2,3\n").unwrap();
        assert_eq!(f.rows[0].north_mm, 1.0);
    }

    #[test]
    fn non_monotone_time_names_the_line() {
        let text = "# header\n2019.0041 2019 2 1 1 1\n2019.0014 2019 1 1 1 1\n";
        match parse_gps(text.as_bytes()) {
            Err(CliError::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("does not increase"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(parse_gps(b"2019.1 2019 5 1 2\n"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(parse_gps(b"2019.1 2019 x 1 2 3\n"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(parse_gps(b"2019.1 2019 367 1 2 3\n"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(parse_gps(b"# only\n\n"), Err(CliError::Input(_))));
    }

    #[test]
    fn gaps_are_reported() {
        let text = "2019.99 2019 364 0 0 0\n2019.995 2019 365 0 0 0\n2020.008 2020 3 0 0 0\n";
        let f = parse_gps(text.as_bytes()).unwrap();
        assert_eq!(f.gaps(), vec![DayGap { after_row: 1, missing_days: 2 }]);
    }

    #[test]
    fn round_trip_preserves_values() {
        let text = "# station KTBW\n2019.00137 2019 1 0.1 -3.333 12.75\n2019.00411 2019 2 1e-3 4 -0.5\n";
        let f = parse_gps(text.as_bytes()).unwrap();
        let again = parse_gps(f.to_text().as_bytes()).unwrap();
        assert_eq!(f, again);
    }
}
