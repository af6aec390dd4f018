//! Bessel low-pass design: prototype poles, state-space conversion,
//! frequency scaling, response evaluation and active-circuit synthesis.

mod mfb;
mod poly;
mod ss;
mod zpk;

pub use mfb::{
    mfb_circuit, mfb_components, mfb_min_c1, synthesize_mfb_order2, synthesize_mfb_order2_with,
    MfbComponents,
};
pub use poly::{bessel_poly, bessel_poly_exact, poly_roots, Polynomial};
pub use ss::{lp2lp, ss_to_zpk, zpk_to_ss, StateSpace, DIRECT_REALIZATION_MAX};
pub use zpk::{besselap, evaluate, freq_response, group_delay_dc, ZpkFilter};

/// Highest supported prototype order.
pub const MAX_ORDER: usize = 25;
