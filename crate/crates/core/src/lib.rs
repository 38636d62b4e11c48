pub mod cbs;
pub mod dpecbs;
pub mod ecbs;
pub mod grid;
pub mod harness;
pub mod lowlevel;
pub mod path;
pub mod pbecbs;
pub mod scenario;
