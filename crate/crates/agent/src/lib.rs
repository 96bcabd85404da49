//! Runtime half of SINk: the local agent that fans operator inputs out to
//! remote screens, and the remote agent that replays them.

pub mod codec;
pub mod local;
pub mod remote;
