use std::io::Write;

use serde::{Deserialize, Serialize};

use super::reward::RewardComponents;
use super::state::WorldState;
use crate::error::Result;

/// One line of an episode transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub t: u64,
    pub state: WorldState<f64>,
    pub catcher_action: Vec<f64>,
    pub thrower_action: Vec<f64>,
    pub reward: RewardComponents<f64>,
}

pub fn write_transcript<W: Write>(out: &mut W, records: &[TranscriptRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_transcript(text: &str) -> Result<Vec<TranscriptRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
