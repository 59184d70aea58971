pub mod bench;
pub mod fit;
pub mod report;
pub mod simargs;
pub mod simulate;
