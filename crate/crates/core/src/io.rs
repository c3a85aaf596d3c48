//! CSV instances. Each record is `a_1, ..., a_d, b`, optionally preceded by
//! a row weight.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Mat, RegressionInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsvLayout {
    /// The first record is a header and is skipped on read, written on write.
    pub header: bool,
    /// A leading weight column is present.
    pub weighted: bool,
}

pub fn read_instance<R: Read>(reader: R, layout: CsvLayout) -> Result<RegressionInstance> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(layout.header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let lead = usize::from(layout.weighted);
    let (mut data, mut b, mut w) = (Vec::new(), Vec::new(), Vec::new());
    let mut d: Option<usize> = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("record {}: {s:?} is not a number", k + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() < lead + 1 {
            return Err(Error::Format(format!("record {} has too few fields", k + 1)));
        }
        let width = vals.len() - lead - 1;
        match d {
            None => d = Some(width),
            Some(d) if d != width => {
                return Err(Error::Format(format!("record {} has {} features, expected {d}", k + 1, width)))
            }
            _ => {}
        }
        if layout.weighted {
            w.push(vals[0]);
        }
        data.extend_from_slice(&vals[lead..lead + width]);
        b.push(vals[lead + width]);
    }
    let d = d.ok_or_else(|| Error::Format("no records".into()))?;
    if let Some(v) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("matrix entries must be finite, found {v}")));
    }
    let inst = RegressionInstance::new(Mat::dense(b.len(), d, data)?, b)?;
    if layout.weighted {
        inst.with_weights(w)
    } else {
        Ok(inst)
    }
}

pub fn read_instance_path(path: &Path, layout: CsvLayout) -> Result<RegressionInstance> {
    read_instance(std::fs::File::open(path)?, layout)
}

/// Writes the instance; a weight column is emitted when the instance has weights.
pub fn write_instance<W: Write>(writer: W, inst: &RegressionInstance, header: bool) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let d = inst.ncols();
    if header {
        let mut names: Vec<String> = Vec::with_capacity(d + 2);
        if inst.weights.is_some() {
            names.push("weight".into());
        }
        names.extend((1..=d).map(|j| format!("a{j}")));
        names.push("b".into());
        wtr.write_record(&names)?;
    }
    let mut rec: Vec<String> = Vec::with_capacity(d + 2);
    for i in 0..inst.nrows() {
        rec.clear();
        if let Some(w) = &inst.weights {
            rec.push(w[i].to_string());
        }
        let mut row = vec![0.0; d];
        inst.a.row(i).for_each(|j, v| row[j] = v);
        rec.extend(row.iter().map(f64::to_string));
        rec.push(inst.b[i].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_instance_path(path: &Path, inst: &RegressionInstance, header: bool) -> Result<()> {
    write_instance(std::fs::File::create(path)?, inst, header)
}

/// One value per line under a single header.
pub fn write_vector<W: Write>(writer: W, name: &str, v: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([name])?;
    for x in v {
        wtr.write_record([x.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
