//! Fixed 17-significant-digit number formatting for data output.
//!
//! Seventeen digits round-trip every `f64` exactly. JSON output routes
//! floats through these helpers so text is identical across runs.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats `x` like C's `%.17g` without trailing-zero stripping.
/// Non-finite values render as `NaN`, `inf` or `-inf`.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(1) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn raw<S: Serializer>(x: f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    RawValue::from_string(sig17(x))
        .map_err(S::Error::custom)?
        .serialize(s)
}

pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*x, s)
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => raw(*v, s),
        None => s.serialize_none(),
    }
}

pub fn ser_vec_f64<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct One(f64);
    impl Serialize for One {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            raw(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&One(x))?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        assert_eq!(sig17(0.4), "0.40000000000000002");
        assert_eq!(sig17(0.5), "0.50000000000000000");
        assert_eq!(sig17(1.0), "1.0000000000000000");
        assert_eq!(sig17(0.0), "0.0");
        assert_eq!(sig17(1e-9), "1.0000000000000001e-9");
        for x in [0.1, 1.0 / 3.0, 123456.789, 2.5e-7, 9.999999999999999e16, 1e300] {
            assert_eq!(sig17(x).parse::<f64>().unwrap(), x, "{x}");
        }
    }

    #[test]
    fn json_numbers_are_valid() {
        #[derive(Serialize)]
        struct T {
            #[serde(serialize_with = "ser_f64")]
            a: f64,
            #[serde(serialize_with = "ser_vec_f64")]
            b: Vec<f64>,
            #[serde(serialize_with = "ser_opt_f64")]
            c: Option<f64>,
        }
        let s = serde_json::to_string(&T { a: 0.4, b: vec![1e-9, 0.25], c: None }).unwrap();
        assert_eq!(s, r#"{"a":0.40000000000000002,"b":[1.0000000000000001e-9,0.25000000000000000],"c":null}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.4));
    }
}
