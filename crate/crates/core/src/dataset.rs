//! Input-output datasets (the experimental design) and their tabular format.
//!
//! The on-disk format is delimited text with a header row `x1,...,xN,y` and
//! one realization per row, values in full-precision decimal so that a
//! write/read round trip is exact.

use crate::distributions::InputSpec;
use crate::{Error, Result};
use std::io::{BufRead, Write};

const MAX_REPORTED_ROWS: usize = 8;

/// L input realizations paired with L scalar outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_inputs: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    provenance: String,
}

impl Dataset {
    /// Build from row-major inputs and matching outputs; all values must be
    /// finite.
    pub fn from_parts(
        n_inputs: usize,
        inputs: Vec<f64>,
        outputs: Vec<f64>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if n_inputs == 0 || outputs.is_empty() || inputs.len() != outputs.len() * n_inputs {
            return Err(Error::DimensionMismatch {
                expected: outputs.len() * n_inputs,
                found: inputs.len(),
            });
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset inputs".into()));
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset outputs".into()));
        }
        Ok(Dataset {
            n_inputs,
            inputs,
            outputs,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn input_row(&self, l: usize) -> &[f64] {
        &self.inputs[l * self.n_inputs..(l + 1) * self.n_inputs]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Replace the outputs, keeping the same design points.
    pub fn with_outputs(&self, outputs: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        Dataset::from_parts(self.n_inputs, self.inputs.clone(), outputs, provenance)
    }

    /// Reject rows that fall outside the support box of `spec`.
    pub fn validate_support(&self, spec: &InputSpec) -> Result<()> {
        if spec.dims() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: spec.dims(),
                found: self.n_inputs,
            });
        }
        let mut offending = Vec::new();
        for l in 0..self.len() {
            if !spec.contains(self.input_row(l)) {
                offending.push(l + 1);
                if offending.len() > MAX_REPORTED_ROWS {
                    break;
                }
            }
        }
        if offending.is_empty() {
            Ok(())
        } else {
            let truncated = offending.len() > MAX_REPORTED_ROWS;
            offending.truncate(MAX_REPORTED_ROWS);
            Err(Error::OutOfSupport {
                rows: offending,
                truncated,
            })
        }
    }

    /// Parse the delimited format. `expected_inputs` pins N when the caller
    /// knows it; otherwise N is taken from the header.
    pub fn read_delimited<R: BufRead>(reader: R, expected_inputs: Option<usize>) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::DatasetParse {
                row: 0,
                message: "missing header".into(),
            })??;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        if columns.len() < 2 || columns[columns.len() - 1] != "y" {
            return Err(Error::DatasetParse {
                row: 0,
                message: format!("header must be x1,...,xN,y, got '{header}'"),
            });
        }
        let n = columns.len() - 1;
        for (k, column) in columns[..n].iter().enumerate() {
            let expected = format!("x{}", k + 1);
            if *column != expected {
                return Err(Error::DatasetParse {
                    row: 0,
                    message: format!("expected column '{expected}', got '{column}'"),
                });
            }
        }
        if let Some(expected) = expected_inputs {
            if expected != n {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: n,
                });
            }
        }
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut row = 0usize;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            row += 1;
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != n + 1 {
                return Err(Error::DatasetParse {
                    row,
                    message: format!("expected {} values, got {}", n + 1, cells.len()),
                });
            }
            for cell in &cells {
                let value: f64 = cell.parse().map_err(|_| Error::DatasetParse {
                    row,
                    message: format!("cannot parse '{cell}' as a number"),
                })?;
                if !value.is_finite() {
                    return Err(Error::DatasetParse {
                        row,
                        message: format!("non-finite value '{cell}'"),
                    });
                }
            }
            for cell in &cells[..n] {
                inputs.push(cell.parse().unwrap());
            }
            outputs.push(cells[n].parse().unwrap());
        }
        if outputs.is_empty() {
            return Err(Error::DatasetParse {
                row: 1,
                message: "no data rows".into(),
            });
        }
        Dataset::from_parts(n, inputs, outputs, "ingested")
    }

    /// Write the delimited format; `{}` float formatting round-trips exactly.
    pub fn write_delimited<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.n_inputs)
            .map(|k| format!("x{k}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for l in 0..self.len() {
            let mut cells: Vec<String> =
                self.input_row(l).iter().map(|v| v.to_string()).collect();
            cells.push(self.outputs[l].to_string());
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Marginal;

    fn sample_dataset() -> Dataset {
        Dataset::from_parts(
            2,
            vec![0.25, -1.5, 0.125, 2.0, -0.75, 0.5],
            vec![1.0, 2.5, -0.125],
            "test",
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = sample_dataset();
        let mut buffer = Vec::new();
        ds.write_delimited(&mut buffer).unwrap();
        let back = Dataset::read_delimited(buffer.as_slice(), Some(2)).unwrap();
        assert_eq!(back.inputs(), ds.inputs());
        assert_eq!(back.outputs(), ds.outputs());
    }

    #[test]
    fn parse_errors_name_the_offending_row() {
        let text = "x1,y\nfoo,1\n";
        let err = Dataset::read_delimited(text.as_bytes(), None).unwrap_err();
        match err {
            Error::DatasetParse { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn header_must_match_the_convention() {
        let text = "a,b,y\n1,2,3\n";
        assert!(matches!(
            Dataset::read_delimited(text.as_bytes(), None),
            Err(Error::DatasetParse { row: 0, .. })
        ));
        let text = "x1,x2,y\n1,2,3\n";
        assert!(matches!(
            Dataset::read_delimited(text.as_bytes(), Some(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn support_validation_reports_row_numbers() {
        let spec = InputSpec::new(vec![
            Marginal::uniform(-1.0, 1.0).unwrap(),
            Marginal::uniform(-1.0, 1.0).unwrap(),
        ])
        .unwrap();
        let ds = sample_dataset();
        match ds.validate_support(&spec).unwrap_err() {
            Error::OutOfSupport { rows, .. } => assert_eq!(rows, vec![1, 2]),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(Dataset::from_parts(1, vec![f64::NAN], vec![1.0], "t").is_err());
        let text = "x1,y\n1,inf\n";
        assert!(Dataset::read_delimited(text.as_bytes(), None).is_err());
    }
}
