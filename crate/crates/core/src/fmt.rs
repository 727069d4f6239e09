//! Real-number formatting shared by every machine-readable output.
//!
//! Reals are rounded to 12 significant digits and then printed with the
//! shortest representation that round-trips, so `0.25` stays `0.25` and
//! `1/3` becomes `0.333333333333`.

use serde::Serializer;

/// Rounds `x` to 12 significant digits. Non-finite values pass through.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Text form used in CSV cells.
pub fn real(x: f64) -> String {
    let r = round_sig12(x);
    if r == 0.0 {
        // avoid "-0"
        return "0".to_string();
    }
    if r.abs() < 1e-6 || r.abs() >= 1e16 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn sig12<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig12(*x))
}

pub fn sig12_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_sig12(*v)),
        None => s.serialize_none(),
    }
}
