pub mod bootstrap;
pub mod counting;
pub mod fit;
pub mod likelihood;
pub mod nonparametric;
pub mod optimize;
pub mod records;
