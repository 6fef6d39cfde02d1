//! Delimited ground-truth tables: parameter columns, then one column per PPA variable.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::paramspace::{CompilerSpec, ParamValue, Parametrization};

use super::{variable_names, PpaRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub parametrization: Parametrization,
    pub ppa: PpaRecord,
}

pub fn write_table<W: Write>(out: W, spec: &CompilerSpec, rows: &[TableRow]) -> Result<()> {
    let inputs = spec.input_names();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(inputs.iter().cloned().chain(variable_names(spec)))?;
    for row in rows {
        let mut rec: Vec<String> = Vec::with_capacity(inputs.len() + row.ppa.values.len());
        for name in &inputs {
            let v = row
                .parametrization
                .get(name)
                .ok_or_else(|| Error::Structure(format!("row lacks {name}")))?;
            rec.push(v.to_string());
        }
        // shortest repr that round-trips
        rec.extend(row.ppa.values.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(input: R, spec: &CompilerSpec) -> Result<Vec<TableRow>> {
    let inputs = spec.input_names();
    let vars = variable_names(spec);
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<String> = inputs.iter().cloned().chain(vars.iter().cloned()).collect();
    if header != expected {
        return Err(Error::Malformed(format!(
            "table header does not match {}: got {}",
            spec.key(),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut values = BTreeMap::new();
        for (name, cell) in inputs.iter().zip(rec.iter()) {
            values.insert(name.clone(), ParamValue::parse(cell));
        }
        let ppa: Vec<f64> = rec
            .iter()
            .skip(inputs.len())
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Malformed(format!("row {}: {e}", line + 1)))?;
        rows.push(TableRow {
            parametrization: Parametrization {
                compiler_id: spec.compiler_id.clone(),
                version: spec.version.clone(),
                values,
            },
            ppa: PpaRecord::from_flat(spec.corners.len(), ppa)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::synthcompiler::{compile, CoefficientSet};

    #[test]
    fn round_trip() {
        let spec = fixtures::spec("sram_a");
        let k = CoefficientSet::draw(&spec, 9);
        let ps = crate::dataset::sample_parametrizations(&spec, 20, 4, &[]).unwrap();
        let rows: Vec<_> = ps
            .into_iter()
            .map(|p| TableRow {
                ppa: compile(&spec, &k, &p).unwrap(),
                parametrization: p,
            })
            .collect();
        let mut buf = Vec::new();
        write_table(&mut buf, &spec, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains("leakage@ss"));
        assert_eq!(read_table(&buf[..], &spec).unwrap(), rows);
    }
}
