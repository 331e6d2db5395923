//! Transfer-function algebra, root finding, frequency response and
//! discretization.

pub mod discrete;
pub mod freq;
pub mod parse;
pub mod poly;
pub mod roots;
pub mod tf;

pub use discrete::{discretize, DiscreteLTI, DEFAULT_DT};
pub use freq::{freq_response, freq_response_at, FreqGrid, Response};
pub use parse::parse_tf;
pub use tf::{DcGain, RationalTF};

/// Roots of the denominator of `tf`.
pub fn poles(tf: &RationalTF) -> Vec<num_complex::Complex64> {
    tf.poles()
}

pub fn dc_gain(tf: &RationalTF) -> DcGain {
    tf.dc_gain()
}
