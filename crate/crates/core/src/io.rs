//! Text formats: potential JSON and the tabular exports.
//!
//! Numbers are written with 17 significant digits in lowercase scientific
//! notation, which round-trips every `f64` exactly. Every CSV starts with
//! a `#` comment line supplied by the caller (the CLI puts the config hash
//! there) followed by the column names.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forward::SampledPotential;
use crate::glm::TransformationKernel;
use crate::numerics::{Grid, GridKind};
use crate::variational::DerivativeField;

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDocument {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl From<&SampledPotential> for PotentialDocument {
    fn from(p: &SampledPotential) -> Self {
        PotentialDocument { x: p.grid().points().to_vec(), v: p.values().to_vec() }
    }
}

impl TryFrom<PotentialDocument> for SampledPotential {
    type Error = crate::Error;

    fn try_from(doc: PotentialDocument) -> Result<Self> {
        let grid = Grid::from_points(doc.x, GridKind::Spatial)?;
        SampledPotential::new(grid, doc.v)
    }
}

impl SampledPotential {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PotentialDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<PotentialDocument>(text)?.try_into()
    }
}

/// Named columns of numbers, written as CSV or serialised as JSON.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// `k, re(r), im(r), re(t), im(t)`.
    pub fn scattering(k: &[f64], r: &[Complex64], t: &[Complex64]) -> Self {
        let rows = k.iter().zip(r).zip(t).map(|((&k, r), t)| vec![k, r.re, r.im, t.re, t.im]).collect();
        Table { columns: vec!["k", "re_r", "im_r", "re_t", "im_t"], rows }
    }

    pub fn potential(v: &SampledPotential) -> Self {
        let rows = v.grid().points().iter().zip(v.values()).map(|(&x, &v)| vec![x, v]).collect();
        Table { columns: vec!["x", "v"], rows }
    }

    /// `x, y, K` for `y ≥ x`, keeping every `stride`-th sample in both
    /// directions.
    pub fn kernel(kernel: &TransformationKernel, stride: usize) -> Self {
        let stride = stride.max(1);
        let y = kernel.y_grid().points();
        let rows = kernel
            .spatial_grid()
            .points()
            .iter()
            .zip(kernel.rows())
            .enumerate()
            .step_by(stride)
            .flat_map(|(i, (&x, row))| {
                row.iter().enumerate().step_by(stride).map(move |(j, &kv)| vec![x, y[i + j], kv])
            })
            .collect();
        Table { columns: vec!["x", "y", "K"], rows }
    }

    /// `x, k, re, im`, or `x, k, q, re, im` when the slices carry a second
    /// momentum.
    pub fn derivative(field: &DerivativeField) -> Self {
        let with_q = field.slices.iter().any(|s| s.q.is_some());
        let x = field.grid.points();
        let rows = field
            .slices
            .iter()
            .flat_map(|s| {
                x.iter().zip(&s.values).map(move |(&x, v)| match with_q {
                    true => vec![x, s.k, s.q.unwrap_or(f64::NAN), v.re, v.im],
                    false => vec![x, s.k, v.re, v.im],
                })
            })
            .collect();
        let columns = if with_q { vec!["x", "k", "q", "re", "im"] } else { vec!["x", "k", "re", "im"] };
        Table { columns, rows }
    }

    /// `x, k, re(ψ), im(ψ)`, one block per momentum.
    pub fn wavefunctions(grid: &Grid, momenta: &[f64], values: &[Vec<Complex64>]) -> Self {
        let x = grid.points();
        let rows = momenta
            .iter()
            .zip(values)
            .flat_map(|(&k, psi)| x.iter().zip(psi).map(move |(&x, p)| vec![x, k, p.re, p.im]))
            .collect();
        Table { columns: vec!["x", "k", "re", "im"], rows }
    }

    /// A `#` comment line, the column names, then the rows.
    pub fn write_csv<W: Write>(&self, out: &mut W, comment: &str) -> Result<()> {
        writeln!(out, "# {comment}")?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self, comment: &str) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, comment).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variational::{DerivativeKind, DerivativeSlice};

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.0, -0.0, 1.0, -2.5e-300, std::f64::consts::PI, 1.0 / 3.0, f64::MAX, 5e-324] {
            let s = format_number(v);
            assert_eq!(s, s.to_lowercase());
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn potential_json_round_trip() {
        let grid = Grid::uniform(-5.0, 5.0, 101, GridKind::Spatial).unwrap();
        let v = SampledPotential::from_fn(grid, |x| -2.0 / x.cosh().powi(2) * 1e-3f64.max((-x * x).exp())).unwrap();
        let back = SampledPotential::from_json(&v.to_json().unwrap()).unwrap();
        assert_eq!(back.values(), v.values());
        assert!(SampledPotential::from_json("{\"x\": [0, 1, 3], \"v\": [0, 0, 0]}").is_err());
        assert!(SampledPotential::from_json("{\"x\": [0, 1]").is_err());
    }

    #[test]
    fn csv_layouts() {
        let one = Complex64::new(1.0, 0.0);
        let text = Table::scattering(&[0.5], &[one * 0.25], &[one]).to_csv("h");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# h");
        assert_eq!(lines[1], "k,re_r,im_r,re_t,im_t");
        assert_eq!(lines[2].split(',').count(), 5);

        let grid = Grid::uniform(0.0, 1.0, 11, GridKind::Spatial).unwrap();
        let field = DerivativeField {
            kind: DerivativeKind::DpsiDrstar,
            grid: grid.clone(),
            slices: vec![DerivativeSlice { k: 1.0, q: Some(0.5), values: vec![one; 11], near_resonant: false }],
        };
        let text = Table::derivative(&field).to_csv("h");
        assert_eq!(text.lines().nth(1), Some("x,k,q,re,im"));
        assert_eq!(text.lines().count(), 13);

        let kernel = TransformationKernel::from_fn(grid, 2.0, |x, y| x - y).unwrap();
        let text = Table::kernel(&kernel, 1).to_csv("h");
        assert_eq!(text.lines().nth(1), Some("x,y,K"));
        assert_eq!(text.lines().count(), 2 + (11..=21).sum::<usize>());
        assert_eq!(Table::kernel(&kernel, 10).rows.len(), 3 + 2);
        for line in text.lines().skip(2) {
            let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert!(cells[1] >= cells[0]);
            assert_eq!(cells[2], cells[0] - cells[1]);
        }
    }
}
