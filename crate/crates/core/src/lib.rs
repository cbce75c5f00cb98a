//! Invariant densities of bounded polynomial iterations, computed from the
//! asymptotic distribution of the real zeros of Bell polynomials and checked
//! against direct orbit simulation. The same machinery covers ODEs treated as
//! Euler iterations, with the Lorenz system worked end to end.

pub mod bellgen;
pub mod empir;
pub mod lorenz;
pub mod odeiter;
pub mod polycore;
pub mod quadform;
pub mod saddle;

pub use polycore::{
    poly_derivative, poly_eval, poly_roots, poly_roots_rational, real_zeros, PolyError, Polynomial,
    RootConfig,
};
