use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ring width {width} outside 1..={max}")]
    InvalidWidth { width: u32, max: u32 },
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("party id {0} is not in 1..=3")]
    InvalidParty(u8),
    #[error("replicated sub-shares disagree between holders")]
    InconsistentShares,
    #[error("party {0} does not hold PRG key {1}")]
    PrgNotHeld(u8, u8),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("protocol desync: {0}")]
    Desync(String),
    #[error("malformed frame: {0}")]
    Frame(String),
    #[error("channel to party {0} closed")]
    ChannelClosed(u8),
    #[error("cost check failed: {0}")]
    CostMismatch(String),
    #[error("party thread panicked")]
    PartyPanicked,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
