//! Fixed, versioned output schema. CSV and JSON carry the same rows; the
//! JSON form is an array of objects with the CSV column names as keys.
//!
//! Floats are rendered with Rust's shortest-round-trip formatting, so a
//! given set of rows always serializes to the same bytes.

use std::io::Write;

pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: &[&str] = &[
    "schema_version",
    "experiment",
    "row_kind",
    "case",
    "sweep_param",
    "sweep_value",
    "sweep2_param",
    "sweep2_value",
    "nu",
    "n",
    "nw",
    "mode",
    "seed",
    "s_hat",
    "d_hat",
    "b_hat",
    "b_true",
    "cvm_hat",
    "c_true",
    "ci_low",
    "ci_high",
    "boot_reps",
    "boot_level",
    "boot_discarded",
    "dropped_tau",
    "degenerate_cvm",
    "elapsed_ms",
];

/// One output row; optional fields render as empty cells (CSV) or null (JSON).
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub experiment: &'static str,
    pub row_kind: &'static str,
    pub case: Option<&'static str>,
    pub sweep_param: Option<&'static str>,
    pub sweep_value: Option<f64>,
    pub sweep2_param: Option<&'static str>,
    pub sweep2_value: Option<f64>,
    /// 1-based frozen input indices, dash-separated for |nu| > 1.
    pub nu: Option<String>,
    pub n: usize,
    pub nw: usize,
    pub mode: String,
    pub seed: u64,
    pub s_hat: Option<f64>,
    pub d_hat: Option<f64>,
    pub b_hat: Option<f64>,
    pub b_true: Option<f64>,
    pub cvm_hat: Option<f64>,
    pub c_true: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub boot_reps: Option<usize>,
    pub boot_level: Option<f64>,
    pub boot_discarded: Option<usize>,
    pub dropped_tau: Option<usize>,
    /// 1 when the quadrant index had a degenerate denominator.
    pub degenerate_cvm: Option<u8>,
    pub elapsed_ms: u64,
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        // Non-finite values must never reach an output file.
        panic!("refusing to serialize non-finite value {v}")
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    fn cells(&self) -> Vec<String> {
        vec![
            SCHEMA_VERSION.to_string(),
            self.experiment.to_string(),
            self.row_kind.to_string(),
            self.case.unwrap_or_default().to_string(),
            self.sweep_param.unwrap_or_default().to_string(),
            opt_f64(self.sweep_value),
            self.sweep2_param.unwrap_or_default().to_string(),
            opt_f64(self.sweep2_value),
            self.nu.clone().unwrap_or_default(),
            self.n.to_string(),
            self.nw.to_string(),
            self.mode.clone(),
            self.seed.to_string(),
            opt_f64(self.s_hat),
            opt_f64(self.d_hat),
            opt_f64(self.b_hat),
            opt_f64(self.b_true),
            opt_f64(self.cvm_hat),
            opt_f64(self.c_true),
            opt_f64(self.ci_low),
            opt_f64(self.ci_high),
            opt_usize(self.boot_reps),
            opt_f64(self.boot_level),
            opt_usize(self.boot_discarded),
            opt_usize(self.dropped_tau),
            self.degenerate_cvm.map(|x| x.to_string()).unwrap_or_default(),
            self.elapsed_ms.to_string(),
        ]
    }
}

pub fn write_csv(rows: &[Row], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", COLUMNS.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.cells().join(","))?;
    }
    Ok(())
}

/// JSON mirror of the CSV rows: numbers stay numbers, empty cells become null.
pub fn write_json(rows: &[Row], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "[")?;
    for (i, row) in rows.iter().enumerate() {
        let cells = row.cells();
        let mut fields = Vec::with_capacity(COLUMNS.len());
        for (name, cell) in COLUMNS.iter().zip(&cells) {
            let value = if cell.is_empty() {
                "null".to_string()
            } else if is_numeric_column(name) {
                cell.clone()
            } else {
                format!("\"{cell}\"")
            };
            fields.push(format!("\"{name}\":{value}"));
        }
        let comma = if i + 1 < rows.len() { "," } else { "" };
        writeln!(out, "{{{}}}{comma}", fields.join(","))?;
    }
    writeln!(out, "]")
}

fn is_numeric_column(name: &str) -> bool {
    !matches!(
        name,
        "experiment" | "row_kind" | "case" | "sweep_param" | "sweep2_param" | "nu" | "mode"
    )
}

/// Render `nu` as 1-based dash-separated indices: [0] -> "1", [0,2] -> "1-3".
pub fn format_nu(nu: &[usize]) -> String {
    nu.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join("-")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape_and_determinism() {
        let row = Row {
            experiment: "example1",
            row_kind: "estimate",
            sweep_param: Some("p"),
            sweep_value: Some(0.5),
            nu: Some("1".into()),
            n: 100,
            nw: 100,
            mode: "exact".into(),
            seed: 42,
            b_hat: Some(0.109116),
            ..Row::default()
        };
        let mut a = Vec::new();
        write_csv(std::slice::from_ref(&row), &mut a).unwrap();
        let mut b = Vec::new();
        write_csv(&[row], &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), COLUMNS.len());
        assert_eq!(lines.next().unwrap().split(',').count(), COLUMNS.len());
    }

    #[test]
    fn json_mirrors_the_columns() {
        let row = Row {
            experiment: "custom",
            row_kind: "estimate",
            n: 10,
            nw: 10,
            mode: "exact".into(),
            seed: 7,
            ..Row::default()
        };
        let mut buf = Vec::new();
        write_json(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"experiment\":\"custom\""));
        assert!(text.contains("\"b_hat\":null"));
        assert!(text.contains("\"schema_version\":1"));
    }

    #[test]
    #[should_panic(expected = "non-finite")]
    fn non_finite_values_are_refused() {
        let row = Row { b_hat: Some(f64::NAN), mode: "exact".into(), ..Row::default() };
        let mut buf = Vec::new();
        let _ = write_csv(&[row], &mut buf);
    }
}
