pub mod gen;
pub mod transcription;
