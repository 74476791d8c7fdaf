//! ELU activation and its first three derivatives.
//!
//! ELU is `z` for `z > 0` and `e^z - 1` otherwise. It is not twice
//! differentiable at zero; every derivative there takes the value of the
//! negative branch (`e^0 = 1`), so `elu_d2(0.0) == 1.0`.

#[inline]
pub fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        z.exp_m1()
    }
}

/// Value and first three derivatives at `z`.
#[inline]
pub fn elu_derivs(z: f64) -> [f64; 4] {
    if z > 0.0 {
        [z, 1.0, 0.0, 0.0]
    } else {
        let e = z.exp();
        [e - 1.0, e, e, e]
    }
}

#[inline]
pub fn elu_d1(z: f64) -> f64 {
    elu_derivs(z)[1]
}

#[inline]
pub fn elu_d2(z: f64) -> f64 {
    elu_derivs(z)[2]
}
