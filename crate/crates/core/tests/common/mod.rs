#![allow(dead_code)]

pub mod desk;
pub mod freeze;
pub mod gradcheck;
pub mod oracle;
