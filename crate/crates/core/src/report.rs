//! Number formatting shared by the JSON and CSV writers.
//!
//! All reals are written with 17 significant digits in scientific notation
//! with a `.` decimal separator, which round-trips every `f64`.

use serde_json::value::RawValue;

use crate::{Error, Result};

/// `v` with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // JSON has no literal for these
        "null".to_string()
    }
}

/// `v` as a raw JSON number with 17 significant digits.
pub fn sig17(v: f64) -> Result<Box<RawValue>> {
    RawValue::from_string(fmt17(v)).map_err(|e| Error::Serialization(e.to_string()))
}

/// Serde adapter writing an `f64` field via [`fmt17`].
pub mod f17 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        use serde::Serialize;
        super::sig17(*v).map_err(serde::ser::Error::custom)?.serialize(s)
    }
}

/// Serde adapter for `Vec<f64>` via [`fmt17`].
pub mod vec_f17 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&super::sig17(*x).map_err(serde::ser::Error::custom)?)?;
        }
        seq.end()
    }
}
