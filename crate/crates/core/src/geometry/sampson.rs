use super::{Mat3, Vec3};
use crate::{Error, Result};

/// First-order geometric error of the correspondence `x_i -> x_j` under `f`:
/// `(x_j' F x_i)^2 / ((F x_i)_1^2 + (F x_i)_2^2 + (F' x_j)_1^2 + (F' x_j)_2^2)`,
/// in squared pixels.
#[inline]
pub fn sampson_error(f: &Mat3, x_i: [f64; 2], x_j: [f64; 2]) -> Result<f64> {
    let a = Vec3::new(x_i[0], x_i[1], 1.0);
    let b = Vec3::new(x_j[0], x_j[1], 1.0);
    let fa = f * a;
    let ftb = f.tr_mul(&b);
    let num = b.dot(&fa);
    let denom = fa.x * fa.x + fa.y * fa.y + ftb.x * ftb.x + ftb.y * ftb.y;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::InvalidCorrespondence);
    }
    Ok(num * num / denom)
}
