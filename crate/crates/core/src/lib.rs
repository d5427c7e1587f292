pub mod algebra;
pub mod audit;
pub mod composite;
pub mod diagnostic;
pub mod dsl;
pub mod expr;
pub mod io;
pub mod operation;
pub mod provenance;
pub mod samples;
pub mod table;
pub mod value;
pub mod workspace;

pub use operation::{OpError, Operation};
pub use table::Table;
pub use workspace::Workspace;
