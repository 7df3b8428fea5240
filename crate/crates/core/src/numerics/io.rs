//! JSON and CSV encodings of [`GridFunction`].
//!
//! JSON: `{"grid": {"s_min", "s_max", "n_points"}, "re": [...], "im": [...]}`.
//! CSV: a `# s_min=..,s_max=..,n_points=..` comment line, then an `re,im`
//! header and one row per node.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GridFunction, GridSpec};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct GridFunctionRepr {
    grid: GridSpec,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for GridFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GridFunctionRepr {
            grid: self.grid,
            re: self.values.iter().map(|v| v.re).collect(),
            im: self.values.iter().map(|v| v.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = GridFunctionRepr::deserialize(deserializer)?;
        if repr.re.len() != repr.im.len() {
            return Err(serde::de::Error::custom(format!(
                "re has {} entries but im has {}",
                repr.re.len(),
                repr.im.len()
            )));
        }
        let values = repr.re.into_iter().zip(repr.im).map(|(r, i)| Complex64::new(r, i)).collect();
        GridFunction::new(repr.grid, values).map_err(serde::de::Error::custom)
    }
}

impl GridFunction {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# s_min={},s_max={},n_points={}", self.grid.s_min, self.grid.s_max, self.grid.n_points)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im"])?;
        for v in &self.values {
            w.serialize((v.re, v.im))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = std::io::BufReader::new(input);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let grid = parse_grid_comment(first.trim())?;
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut values = Vec::with_capacity(grid.n_points);
        for row in r.deserialize() {
            let (re, im): (f64, f64) = row?;
            values.push(Complex64::new(re, im));
        }
        GridFunction::new(grid, values)
    }
}

fn parse_grid_comment(line: &str) -> Result<GridSpec> {
    let body =
        line.strip_prefix('#').ok_or_else(|| Error::Parse("CSV must start with a `# s_min=..` grid line".into()))?;
    let (mut s_min, mut s_max, mut n) = (None, None, None);
    for field in body.trim().split(',') {
        let (key, value) =
            field.split_once('=').ok_or_else(|| Error::Parse(format!("malformed grid field `{field}`")))?;
        let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("grid field `{key}`: {e}"));
        match key.trim() {
            "s_min" => s_min = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            "s_max" => s_max = Some(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            "n_points" => n = Some(value.trim().parse::<usize>().map_err(|e| bad(&e))?),
            other => return Err(Error::Parse(format!("unknown grid field `{other}`"))),
        }
    }
    match (s_min, s_max, n) {
        (Some(a), Some(b), Some(n)) => GridSpec::new(a, b, n),
        _ => Err(Error::Parse("grid line needs s_min, s_max and n_points".into())),
    }
}
