//! Self-clocked endpoints.

pub mod receiver;
pub mod rtt;
pub mod sender;

pub use receiver::{DataArrival, EchoMode, Receiver};
pub use rtt::RttEstimator;
pub use sender::{
    AckInfo, Algorithm, CcState, Segment, SendOutput, Sender, SenderConfig, TimerAction,
    INITIAL_WINDOW, MSS,
};
