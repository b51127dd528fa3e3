use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One attack record: which example, at which radius, which restart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptRow {
    pub example: usize,
    pub eps: f64,
    pub restart: usize,
    pub loss: String,
    pub success: bool,
    pub final_loss: f64,
}

pub fn write_transcript<W: Write>(rows: &[TranscriptRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| crate::error::Error::io("<transcript>", e))?;
    Ok(())
}
