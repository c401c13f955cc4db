//! Serialization helpers. Complex numbers are written as `[re, im]`.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::linalg::C64;

pub fn complex<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn complex_vec<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

pub fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Six decimals; parts below display precision print as `0`, never `-0`.
pub fn fmt_c64(z: C64) -> String {
    let snap = |x: f64| if x.abs() < 5e-7 { 0.0 } else { x };
    let (re, im) = (snap(z.re), snap(z.im));
    if im >= 0.0 {
        format!("{re:.6}+{im:.6}i")
    } else {
        format!("{re:.6}-{:.6}i", -im)
    }
}
