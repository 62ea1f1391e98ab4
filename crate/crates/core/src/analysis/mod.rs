//! Function tables and the analytic quantities built on them.

mod averages;
mod correlation;
mod fourier;
mod gowers;
mod table;

pub use averages::{boundary_function, flagged_average, linear_form_average, t_l, table_to_csv, Payload};
pub use correlation::{correlation_with_family, correlation_with_tables, random_polynomial_lower_bound, Correlation, PolyFamily};
pub use fourier::{fourier_transform, inverse_fourier, linear_correlation, Spectrum};
pub use gowers::{gowers_inner_product, gowers_norm, gowers_norm_direct, gowers_norm_power, multiplicative_derivative, NEGATIVITY_TOLERANCE};
pub use table::{inner_product, Codomain, FunctionTable, FunctionTableJson, JsonValue, DISK_TOLERANCE};

pub(crate) use averages::{FormWalker, MC_CHUNK};
pub(crate) use fourier::dft_in_place;
pub(crate) use table::derived;
