pub mod compensated;
pub mod error;
pub mod exactzero;
pub mod explore;
pub mod families;
pub mod fractal;
pub mod perturb;
pub mod phase;
pub mod primes;
pub mod sumcore;
