//! Float helpers that `core` does not provide.

macro_rules! float_fn {
    ($vis:vis $name:ident, $libm:path, $method:ident) => {
        #[inline]
        $vis fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$method()
            }
            #[cfg(not(feature = "std"))]
            {
                $libm(x)
            }
        }
    };
}

float_fn!(pub(crate) exp, libm::exp, exp);
float_fn!(pub(crate) ln, libm::log, ln);
float_fn!(pub(crate) sqrt, libm::sqrt, sqrt);
float_fn!(pub(crate) tanh, libm::tanh, tanh);
float_fn!(log1p, libm::log1p, ln_1p);

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + log1p(exp(-x))
    } else {
        log1p(exp(x))
    }
}

