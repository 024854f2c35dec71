pub mod certify;
pub mod cli;
pub mod lmikit;
pub mod lqrdemo;
pub mod sdpcore;
pub mod tos;
