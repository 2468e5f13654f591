pub mod analyze;
pub mod eval;
pub mod gradcheck;
pub mod ingest;
pub mod train;
pub mod transfer;
