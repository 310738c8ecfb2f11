pub mod budget;
pub mod fit;
pub mod linearity;
pub mod normalize;
pub mod report;
pub mod simulate;
