//! Number formatting and CSV assembly shared by all commands.

use serde::Serialize;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}

/// Builds a CSV document from a header and pre-formatted rows.
pub fn csv(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    writer.write_record(header).map_err(io)?;
    for row in rows {
        writer.write_record(&row).map_err(io)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 123456.789, std::f64::consts::PI] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(float(-0.0), float(0.0));
    }

    #[test]
    fn csv_layout() {
        let out = csv(&["a", "b"], vec![vec!["1".into(), "x".into()]]).unwrap();
        assert_eq!(out, "a,b\n1,x\n");
    }
}
