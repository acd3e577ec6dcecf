//! JSON exchange format. Complex numbers are `[re, im]` pairs; a bare
//! number is read as a real entry. Matrices are nested row arrays or a flat
//! row-major array of `d²` entries.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::covariant::{build_system, CovariantSystem};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::minkowski::{BilinearForm, FormKind};

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(|| Error::Input(format!("bad real part {}", a[0])))?;
            let im = a[1].as_f64().ok_or_else(|| Error::Input(format!("bad imaginary part {}", a[1])))?;
            Ok(C64::new(re, im))
        }
        other => Err(Error::Input(format!("expected a number or [re, im], got {other}"))),
    }
}

pub fn matrix_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| complex_to_json(m[(r, c)])).collect()))
            .collect(),
    )
}

fn is_entry(v: &Value) -> bool {
    v.is_number() || matches!(v, Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_number))
}

/// Reads a square matrix, nested or flat. An array of entries whose length
/// is a perfect square is flat; anything else must be nested rows.
pub fn matrix_from_json(v: &Value) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| Error::Input("matrix must be an array".into()))?;
    if rows.is_empty() {
        return Err(Error::Input("matrix is empty".into()));
    }
    let side = (rows.len() as f64).sqrt().round() as usize;
    let flat = rows.iter().all(is_entry) && side * side == rows.len();
    if !flat {
        let d = rows.len();
        let mut m = CMat::zeros(d, d);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_array().ok_or_else(|| Error::Input(format!("row {r} is not an array")))?;
            if row.len() != d {
                return Err(Error::Input(format!("row {r} has {} entries, expected {d}", row.len())));
            }
            for (c, e) in row.iter().enumerate() {
                m[(r, c)] = complex_from_json(e)?;
            }
        }
        Ok(m)
    } else {
        let d = side;
        let entries: Vec<C64> = rows.iter().map(complex_from_json).collect::<Result<_>>()?;
        Ok(CMat::from_row_slice(d, d, &entries))
    }
}

pub fn vector_to_json(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| complex_to_json(*z)).collect())
}

pub fn vector_from_json(v: &Value) -> Result<CVec> {
    let arr = v.as_array().ok_or_else(|| Error::Input("vector must be an array".into()))?;
    let entries: Vec<C64> = arr.iter().map(complex_from_json).collect::<Result<_>>()?;
    Ok(CVec::from_vec(entries))
}

/// On-disk description of a covariant system with optional operands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemFile {
    pub form: FormKind,
    pub generators: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_b: Option<Value>,
}

#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub system: CovariantSystem,
    pub operator: Option<CMat>,
    pub operator_b: Option<CMat>,
}

pub fn parse_system(text: &str) -> Result<LoadedSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
    let form = BilinearForm::new(file.form, file.generators.len())?;
    let generators: Vec<CMat> = file.generators.iter().map(matrix_from_json).collect::<Result<_>>()?;
    let omega = file.omega.as_ref().map(vector_from_json).transpose()?;
    let system = build_system(generators, form, omega)?;
    let d = system.dim();
    let read_op = |v: &Option<Value>| -> Result<Option<CMat>> {
        match v {
            Some(v) => {
                let m = matrix_from_json(v)?;
                if m.nrows() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
                }
                Ok(Some(m))
            }
            None => Ok(None),
        }
    };
    Ok(LoadedSystem { operator: read_op(&file.operator)?, operator_b: read_op(&file.operator_b)?, system })
}

pub fn system_to_json(sys: &CovariantSystem, operator: Option<&CMat>, operator_b: Option<&CMat>) -> Value {
    let file = SystemFile {
        form: sys.form().kind,
        generators: sys.generators().iter().map(matrix_to_json).collect(),
        omega: sys.omega().map(vector_to_json),
        operator: operator.map(matrix_to_json),
        operator_b: operator_b.map(matrix_to_json),
    };
    serde_json::to_value(file).expect("plain data serialises")
}
