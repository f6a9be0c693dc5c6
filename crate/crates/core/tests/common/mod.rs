pub mod gen;
pub mod oracles;
