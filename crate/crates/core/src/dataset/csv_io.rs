use std::fmt::Write as _;

use chrono::NaiveDateTime;

use super::{Channel, DatasetError, SensorFrame, TIMESTAMP_FORMAT};

/// Parsed value of one CSV cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    /// `normalized` is set when a decimal comma was rewritten to a dot.
    Value {
        value: f64,
        normalized: bool,
    },
    Null,
    Malformed,
}

/// Accepts `[+-]digits[sep digits]` with exactly one optional separator, `.`
/// or `,`. Anything else (thousands grouping, exponents, mixed separators) is
/// malformed. Blank cells are null.
pub fn parse_decimal(raw: &str) -> Cell {
    let s = raw.trim();
    if s.is_empty() {
        return Cell::Null;
    }
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let mut digits = 0usize;
    let mut separator = None;
    for ch in body.chars() {
        match ch {
            '0'..='9' => digits += 1,
            '.' | ',' if separator.is_none() => separator = Some(ch),
            _ => return Cell::Malformed,
        }
    }
    if digits == 0 {
        return Cell::Malformed;
    }
    let normalized = separator == Some(',');
    let text = if normalized {
        s.replacen(',', ".", 1)
    } else {
        s.to_string()
    };
    match text.parse::<f64>() {
        Ok(value) if value.is_finite() => Cell::Value { value, normalized },
        _ => Cell::Malformed,
    }
}

/// One data row before cleaning. `None` marks a null or malformed cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub row: usize,
    pub timestamp: Option<NaiveDateTime>,
    pub channels: [Option<f64>; 6],
    pub heights: Vec<Option<f64>>,
    pub growth: Option<f64>,
    pub normalized_cells: usize,
    /// Column names whose cell was present but unparseable.
    pub malformed: Vec<String>,
}

impl From<&SensorFrame> for RawRecord {
    fn from(f: &SensorFrame) -> Self {
        RawRecord {
            row: 0,
            timestamp: Some(f.timestamp),
            channels: f.channels.map(Some),
            heights: f.heights.iter().copied().map(Some).collect(),
            growth: Some(f.growth_avg),
            normalized_cells: 0,
            malformed: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCsv {
    pub height_names: Vec<String>,
    pub has_growth_column: bool,
    pub records: Vec<RawRecord>,
}

fn is_position_header(h: &str) -> bool {
    let Some(rest) = h.strip_prefix('P') else {
        return false;
    };
    match rest.split_once('.') {
        Some((a, b)) => {
            !a.is_empty()
                && !b.is_empty()
                && a.chars().all(|c| c.is_ascii_digit())
                && b.chars().all(|c| c.is_ascii_digit())
        }
        None => false,
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .ok()
}

/// Reads a `;`-delimited sensor file.
///
/// Required columns are `timestamp` and the six channels; `GrowthAvg` may be
/// omitted when position height columns (`P1.2`, …) are present.
pub fn parse_csv(bytes: &[u8]) -> Result<ParsedCsv, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));

    let ts_col = find("timestamp").ok_or_else(|| DatasetError::MissingColumn("timestamp".into()))?;
    let mut channel_cols = [0usize; 6];
    for c in Channel::ALL {
        channel_cols[c.index()] = find(c.header()).ok_or_else(|| DatasetError::MissingColumn(c.header().into()))?;
    }
    let height_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| is_position_header(&headers[i]))
        .collect();
    let growth_col = find("GrowthAvg");
    if growth_col.is_none() && height_cols.is_empty() {
        return Err(DatasetError::MissingColumn("GrowthAvg".into()));
    }

    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result?;
        let mut normalized_cells = 0;
        let mut malformed = Vec::new();
        let mut number = |col: usize| -> Option<f64> {
            match parse_decimal(rec.get(col).unwrap_or("")) {
                Cell::Value { value, normalized } => {
                    normalized_cells += usize::from(normalized);
                    Some(value)
                }
                Cell::Null => None,
                Cell::Malformed => {
                    malformed.push(headers[col].clone());
                    None
                }
            }
        };
        let channels = channel_cols.map(&mut number);
        let heights = height_cols.iter().map(|&c| number(c)).collect();
        let growth = growth_col.and_then(&mut number);
        let ts_cell = rec.get(ts_col).unwrap_or("");
        let timestamp = parse_timestamp(ts_cell);
        if timestamp.is_none() && !ts_cell.trim().is_empty() {
            malformed.push(headers[ts_col].clone());
        }
        records.push(RawRecord {
            row,
            timestamp,
            channels,
            heights,
            growth,
            normalized_cells,
            malformed,
        });
    }

    Ok(ParsedCsv {
        height_names: height_cols.iter().map(|&i| headers[i].clone()).collect(),
        has_growth_column: growth_col.is_some(),
        records,
    })
}

/// Position labels `P1.2 … P1.8, P2.2 …`, seven per rack row.
pub fn position_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("P{}.{}", i / 7 + 1, i % 7 + 2)).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CsvOptions {
    /// Write values with a decimal comma, as European loggers do.
    pub decimal_comma: bool,
}

/// Serializes frames in the format [`parse_csv`] reads.
pub fn write_csv(frames: &[SensorFrame], height_names: &[String], opts: CsvOptions) -> String {
    let mut out = String::new();
    out.push_str("timestamp");
    for c in Channel::ALL {
        out.push(';');
        out.push_str(c.header());
    }
    for h in height_names {
        out.push(';');
        out.push_str(h);
    }
    out.push_str(";GrowthAvg\n");

    let fmt = |v: f64| {
        let s = v.to_string();
        if opts.decimal_comma {
            s.replace('.', ",")
        } else {
            s
        }
    };
    for f in frames {
        out.push_str(&f.timestamp.format(TIMESTAMP_FORMAT).to_string());
        for v in f.channels {
            let _ = write!(out, ";{}", fmt(v));
        }
        for &h in &f.heights {
            let _ = write!(out, ";{}", fmt(h));
        }
        let _ = writeln!(out, ";{}", fmt(f.growth_avg));
    }
    out
}
