//! Edgeworth expansions of a normalized sum.
//!
//! Moments are turned into cumulants `Gamma_k`, normalized as
//! `a_j = Gamma_j / (j! sigma^2)`. Expanding the exponential of
//! `sum_j (it)^j a_j sigma^{-(j-2)}` in powers of `1/sigma` gives
//! polynomials `A_j` in `it`, and replacing each monomial `(it)^k` by the
//! Hermite polynomial `He_k` gives `P_j`, whose Fourier transform against
//! the normal density is `exp(-t^2/2) A_j(t)`. The distribution-function
//! correction is the antiderivative of `phi P_j`, namely `-phi` times the
//! polynomial obtained from `(it)^k -> He_{k-1}`.

mod cumulants;
mod distance;
mod expansion;
mod poly;

pub use cumulants::{cumulants_from_moments, CumulantTable};
pub use distance::{esseen_bound, kolmogorov_distance, StepCdf};
pub use expansion::{aj_polynomials, cdf_translate, expansion_cdf, hermite_translate, EdgeworthExpansion};
pub use poly::{hermite, Poly};
