//! Shared formatting for the CSV and JSON artifacts.

/// 17 significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comment block placed before the column header of every CSV file.
pub fn csv_header(fields: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in fields {
        out.push_str("# ");
        out.push_str(k);
        out.push_str(": ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

/// Parses a CSV body, skipping `#` comments and the column header.
pub fn parse_csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_roundtrip() {
        for x in [0.1, -3.3e-200, 12345.678, std::f64::consts::PI] {
            let s = sci(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(sci(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn header_and_rows() {
        let h = csv_header(&[("version", "1".into())]);
        let text = format!("{h}a,b\n1,2\n3,4\n");
        let rows = parse_csv_rows(&text);
        assert_eq!(rows, vec![vec!["1", "2"], vec!["3", "4"]]);
    }
}
