pub mod arith;
pub mod cf;
pub mod comb;
pub mod error;
pub mod germs;
pub mod io;
pub mod linearize;
pub mod param;
pub mod renorm;
pub mod series;
