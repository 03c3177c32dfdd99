//! One module per subcommand.

pub mod ablation;
pub mod ensemble;
pub mod hpo;
pub mod prep;
pub mod report;
pub mod run;
pub mod sensitivity;
pub mod sufficiency;
pub mod validate;
