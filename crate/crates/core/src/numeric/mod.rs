//! Numerical building blocks: special functions, quadrature, root finding and
//! the small dense linear algebra needed by the least-squares fitter.

pub mod linalg;
pub mod quad;
pub mod roots;
pub mod special;
